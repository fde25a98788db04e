//! Long randomized run over denser instances than the acceptance suite.
//!
//! `STRESS_SEEDS=3000 STRESS_UNITS=40 cargo test --release --test stress -- --ignored --nocapture`

mod common;

use mapp::engine::{solve, RepositionStrategy, SolveOptions, SolveStatus};
use mapp::verify::validate;
use mapp::{classify_instance, Mode, OmegaCache};

fn env(name: &str, default: u64) -> u64 {
    std::env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

#[test]
#[ignore]
fn dense_random_instances() {
    let seeds = env("STRESS_SEEDS", 1000);
    let units = env("STRESS_UNITS", 40) as usize;
    let mut failures = Vec::new();
    let (mut counting_undo, mut reverse_undo, mut counting_worse) = (0, 0, 0);
    for seed in 0..seeds {
        let (map, specs) = common::random_instance(seed, units);
        let class = classify_instance(&map, &mut OmegaCache::new(), &specs, Mode::TiAc).unwrap();
        let mut undo = [0; 2];
        for (k, repositioning) in [RepositionStrategy::Counting, RepositionStrategy::Reverse].into_iter().enumerate() {
            for attempt_all in [false, true] {
                let opts = SolveOptions { repositioning, attempt_all, ..Default::default() };
                let sol = match solve(&map, &specs, &class, &opts) {
                    Ok(s) => s,
                    Err(e) => {
                        failures.push(format!("seed {seed} {repositioning}: {e}"));
                        continue;
                    }
                };
                let ids: Vec<u32> = specs.iter().zip(&sol.solved).filter(|(_, s)| **s).map(|(u, _)| u.id).collect();
                let d = &sol.diagnostics;
                let clean = sol.status != SolveStatus::Failed
                    && validate(&map, &specs, &sol.moves, &ids).is_ok()
                    && d.state_repeats + d.master_stalls + d.not_well_positioned + d.undo_overruns == 0
                    && (sol.total_moves() as u64) <= sol.move_bound(specs.len(), map.open_cells());
                if !clean {
                    failures
                        .push(format!("seed {seed} {repositioning} attempt_all={attempt_all}: {:?} {d:?}", sol.status));
                }
                if !attempt_all {
                    undo[k] = sol.undo_moves();
                }
            }
        }
        counting_undo += undo[0];
        reverse_undo += undo[1];
        counting_worse += usize::from(undo[0] > undo[1]);
    }
    println!(
        "undo moves: counting {counting_undo}, reverse {reverse_undo}; counting worse on {counting_worse}/{seeds}"
    );
    assert!(failures.is_empty(), "{failures:#?}");
}
