//! Writes a solver trace, reads it back and validates it, then tampers with
//! it to show how the validator reports bad moves.
//!
//! cargo run --example validate_trace

use mapp::engine::{plan_and_solve, MoveKind};
use mapp::trace::{read_trace, write_trace};
use mapp::verify::validate;
use mapp::{GridMap, Loc, OmegaCache, SolveOptions, UnitSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = GridMap::from_rows(&[".....", ".....", ".....", "@...@", "@@.@@"])?;
    let units = [UnitSpec::new(0, Loc::new(0, 0), Loc::new(2, 4)), UnitSpec::new(1, Loc::new(4, 0), Loc::new(2, 3))];
    let (_, sol) = plan_and_solve(&map, &mut OmegaCache::new(), &units, &SolveOptions::default())?;

    let mut buf = Vec::new();
    write_trace(&mut buf, &sol.moves)?;
    print!("{}", String::from_utf8_lossy(&buf));
    let mut moves = read_trace(&buf[..])?;
    println!("replay: {}", if validate(&map, &units, &moves, &[0, 1]).is_ok() { "OK" } else { "violations" });

    // Skip the first progress move: later moves now start from the wrong cell.
    let first = moves.iter().position(|m| m.kind == MoveKind::Progress).unwrap();
    moves.remove(first);
    for v in validate(&map, &units, &moves, &[0, 1]).violations {
        match v.index {
            Some(i) => println!("move {}: unit {}: {}", i + 1, v.unit, v.kind),
            None => println!("final state: unit {}: {}", v.unit, v.kind),
        }
    }
    Ok(())
}
