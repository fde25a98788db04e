//! Writes a map and a reproducible scenario file in the text formats the
//! command-line tool reads.
//!
//! cargo run --example generate_scenario -- [out_dir]

use std::fs;
use std::path::PathBuf;

use mapp::scenario::{gen_scenario, random_map};
use mapp::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/generated".into()));
    fs::create_dir_all(&dir)?;

    let map = random_map(20, 12, 0.2, 42);
    fs::write(dir.join("room.map"), map.emit())?;
    let scen = gen_scenario(&map, "room.map", 8, 42)?;
    fs::write(dir.join("room.scen"), scen.emit())?;

    print!("{}", map.emit());
    print!("{}", scen.emit());
    assert_eq!(Scenario::parse(&scen.emit())?, scen);
    println!("wrote {}", dir.display());
    Ok(())
}
