//! Cross-checks the solver against exhaustive joint-state search on tiny
//! instances. The solver's move count can never be below the optimum.
//!
//! cargo run --example oracle_check

use mapp::engine::plan_and_solve;
use mapp::scenario::{gen_scenario, random_map};
use mapp::verify::{joint_oracle, OracleResult};
use mapp::{OmegaCache, SolveOptions};

fn main() -> Result<(), mapp::Error> {
    let opts = SolveOptions { attempt_all: true, ..Default::default() };
    let (mut optimal, mut longer, mut unsolvable, mut missed) = (0, 0, 0, 0);
    for seed in 0..300 {
        let map = random_map(4, 4, 0.2, seed);
        let Ok(scen) = gen_scenario(&map, "tiny", 3, seed) else { continue };
        let (_, sol) = plan_and_solve(&map, &mut OmegaCache::new(), &scen.units, &opts)?;
        let all = sol.solved.iter().all(|s| *s);
        match joint_oracle(&map, &scen.units, 1_000_000) {
            OracleResult::Solvable(best) if all => {
                assert!(sol.total_moves() >= best);
                if sol.total_moves() == best {
                    optimal += 1;
                } else {
                    longer += 1;
                }
            }
            OracleResult::Solvable(_) => missed += 1,
            OracleResult::Unsolvable => {
                assert!(!all);
                unsolvable += 1;
            }
            OracleResult::Limit => {}
        }
    }
    println!("solved optimally {optimal}, solved with extra moves {longer}");
    println!("solvable but not solved {missed}, unsolvable {unsolvable}");
    Ok(())
}
