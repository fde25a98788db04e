//! Alternate paths depend only on the map and the target set, so a cache
//! built for one scenario can be saved and reused by the next.
//!
//! cargo run --example omega_cache

use std::io::BufReader;

use mapp::scenario::{gen_scenario, random_map};
use mapp::{classify_instance, Mode, OmegaCache};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = random_map(32, 32, 0.2, 5);
    let scen = gen_scenario(&map, "random", 40, 5)?;

    let mut cold = OmegaCache::new();
    classify_instance(&map, &mut cold, &scen.units, Mode::TiAc)?;
    println!("cold: {} searches, {} expansions", cold.searches(), cold.expansions());

    let mut saved = Vec::new();
    cold.save(&mut saved)?;
    println!("saved {} triples in {} bytes", cold.searched_triples(), saved.len());

    let mut warm = OmegaCache::load(BufReader::new(&saved[..]), &map)?;
    let class = classify_instance(&map, &mut warm, &scen.units, Mode::TiAc)?;
    println!("warm: {} searches, {} provable", warm.searches(), class.provable_count());

    // Entries saved for a different layout are dropped on load.
    let other = random_map(32, 32, 0.2, 6);
    let foreign = OmegaCache::load(BufReader::new(&saved[..]), &other)?;
    println!("loaded against another map: {} triples", foreign.searched_triples());
    Ok(())
}
