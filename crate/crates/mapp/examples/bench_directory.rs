//! Generates a small benchmark directory and runs the bench command over it
//! with a worker pool, printing the CSV it produces.
//!
//! cargo run --release --example bench_directory

use std::fs;

use mapp::scenario::{gen_scenario, random_map};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let map = random_map(24, 24, 0.15, 9);
    fs::write(dir.path().join("arena.map"), map.emit())?;
    for (i, n) in [10, 20, 40, 80].into_iter().enumerate() {
        let scen = gen_scenario(&map, "arena.map", n, i as u64)?;
        fs::write(dir.path().join(format!("arena-{n:03}.scen")), scen.emit())?;
    }

    let csv = dir.path().join("results.csv");
    let code = mapp::cli::run_args([
        "mapp",
        "bench",
        dir.path().to_str().unwrap(),
        "--jobs",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    print!("{}", fs::read_to_string(&csv)?);
    println!("exit code {code}");
    Ok(())
}
