//! Two units on either side of a one-cell-wide bridge. Without tunnels no
//! route exists for unit 0. The ac modes accept the bridge as a tunnel because
//! the room past it has enough free cells to buffer the crossing.
//!
//! cargo run --example classify_bridge

use mapp::{classify_instance, GridMap, Loc, Mode, OmegaCache, UnitSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = GridMap::from_rows(&["...@@@...", ".........", "...@@@..."])?;
    let units = [UnitSpec::new(0, Loc::new(0, 1), Loc::new(8, 2)), UnitSpec::new(1, Loc::new(8, 0), Loc::new(7, 2))];

    let mut cache = OmegaCache::new();
    for mode in [Mode::Basic, Mode::Ti, Mode::Ac, Mode::TiAc] {
        let class = classify_instance(&map, &mut cache, &units, mode)?;
        println!("{mode}: {}/{} provable", class.provable_count(), units.len());
        for (u, c) in units.iter().zip(&class.units) {
            let route = c.pi.as_ref().map_or(0, |p| p.len());
            print!("  unit {} {}: route {route}, tunnels {}", u.id, c.label, c.tunnels.len());
            if c.label.is_provable() {
                println!(", tau {}, kappa {}", c.tau(), c.kappa_init);
            } else {
                println!(", {:?}", c.reason);
            }
        }
    }
    Ok(())
}
