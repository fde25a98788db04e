#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::path::PathBuf;

use mapp::engine::{Move, MoveKind};
use mapp::scenario::{gen_scenario, random_map};
use mapp::{GridMap, Loc, Scenario, UnitSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load(scen: &str) -> (GridMap, Scenario) {
    mapp::cli::load_instance(&fixture(scen), None).expect("fixture loads")
}

/// 16x16 map with 10-25% walls and 2..=nmax units, all drawn from `seed`.
pub fn random_instance(seed: u64, nmax: usize) -> (GridMap, Vec<UnitSpec>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = rng.gen_range(0.10..=0.25);
    let n = rng.gen_range(2..=nmax);
    let map = random_map(16, 16, ratio, seed);
    let scen = gen_scenario(&map, "random", n, seed).expect("16x16 maps hold 12 units");
    (map, scen.units)
}

/// Up to 5x5 map with up to 3 units.
pub fn tiny_instance(seed: u64) -> Option<(GridMap, Vec<UnitSpec>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let w = rng.gen_range(1..=5);
    let h = rng.gen_range(1..=5);
    let ratio = rng.gen_range(0.0..=0.3);
    let n = rng.gen_range(1..=3);
    let map = random_map(w, h, ratio, seed);
    let scen = gen_scenario(&map, "tiny", n, seed).ok()?;
    Some((map, scen.units))
}

/// Plain BFS over passable cells, never entering `blocked`.
pub fn reachable(map: &GridMap, from: Loc, to: Loc, blocked: &[Loc]) -> bool {
    let mut seen = HashSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(l) = queue.pop_front() {
        if l == to {
            return true;
        }
        let (x, y) = (l.x as i64, l.y as i64);
        for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= map.width() as i64 || ny >= map.height() as i64 {
                continue;
            }
            let n = Loc::new(nx as u32, ny as u32);
            if map.is_passable(n) && !blocked.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    false
}

/// Replays `moves` and counts joint placements seen twice within one step,
/// ignoring repositioning.
pub fn repeated_states(units: &[UnitSpec], moves: &[Move]) -> usize {
    let index: std::collections::HashMap<u32, usize> = units.iter().enumerate().map(|(i, u)| (u.id, i)).collect();
    let mut pos: Vec<Loc> = units.iter().map(|u| u.start).collect();
    let mut step = 0;
    let mut seen: HashSet<Vec<Loc>> = HashSet::new();
    let mut repeats = 0;
    for m in moves {
        if m.step != step {
            step = m.step;
            seen.clear();
            seen.insert(pos.clone());
        }
        pos[index[&m.unit]] = m.to;
        if m.kind != MoveKind::Undo && !seen.insert(pos.clone()) {
            repeats += 1;
        }
    }
    repeats
}
