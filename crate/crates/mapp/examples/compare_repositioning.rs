//! Runs both repositioning strategies over a batch of random instances and
//! compares how many moves each spends undoing progression.
//!
//! cargo run --release --example compare_repositioning -- [instances]

use mapp::scenario::{gen_scenario, random_map};
use mapp::{classify_instance, solve, Mode, OmegaCache, RepositionStrategy, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: u64 = std::env::args().nth(1).map_or(Ok(200), |a| a.parse())?;
    let (mut reverse, mut counting, mut per_step_worse) = (0, 0, 0);
    for seed in 0..count {
        let map = random_map(16, 16, 0.15, seed);
        let scen = gen_scenario(&map, "random", 2 + (seed % 20) as usize, seed)?;
        let class = classify_instance(&map, &mut OmegaCache::new(), &scen.units, Mode::TiAc)?;

        let opts = SolveOptions { shadow_reverse: true, ..Default::default() };
        let c = solve(&map, &scen.units, &class, &opts)?;
        let r = solve(&map, &scen.units, &class, &SolveOptions { repositioning: RepositionStrategy::Reverse, ..opts })?;
        counting += c.undo_moves();
        reverse += r.undo_moves();

        // Same post-progression state, both strategies.
        let d = &c.diagnostics;
        per_step_worse += d.undo_moves_per_step.iter().zip(&d.reverse_undo_per_step).filter(|(c, r)| c > r).count();
    }
    println!("undo moves over {count} instances: reverse {reverse}, counting {counting}");
    if reverse > 0 {
        println!("counting saves {:.1}%", 100.0 * (reverse as f64 - counting as f64) / reverse as f64);
    }
    println!("steps where counting undid more than reverse would have: {per_step_worse}");
    Ok(())
}
