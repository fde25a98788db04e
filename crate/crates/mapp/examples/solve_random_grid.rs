//! Generates a random 24x24 instance, solves it and checks the trace with the
//! independent validator.
//!
//! cargo run --example solve_random_grid -- [units] [seed]

use mapp::engine::plan_and_solve;
use mapp::scenario::{gen_scenario, random_map};
use mapp::verify::{extract_metrics, validate};
use mapp::{OmegaCache, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(30), |a| a.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |a| a.parse())?;

    let map = random_map(24, 24, 0.2, seed);
    let scen = gen_scenario(&map, "random", n, seed)?;
    let opts = SolveOptions { attempt_all: true, ..Default::default() };
    let (class, sol) = plan_and_solve(&map, &mut OmegaCache::new(), &scen.units, &opts)?;

    for (label, count) in class.label_counts() {
        println!("{label:>15} {count}");
    }
    let solved: Vec<u32> = scen.units.iter().zip(&sol.solved).filter(|(_, s)| **s).map(|(u, _)| u.id).collect();
    let report = validate(&map, &scen.units, &sol.moves, &solved);
    println!("status {}, trace {}", sol.status.as_str(), if report.is_ok() { "valid" } else { "INVALID" });
    println!("{:#?}", extract_metrics(&class, &sol));
    Ok(())
}
