//! Scenario files, random instance generation and benchmark result rows.
//!
//! Scenario format:
//!
//! ```text
//! version 1
//! map maps/bridge.map
//! seed 7
//! 0 0 1 8 2
//! 1 8 0 0 0
//! ```
//!
//! Unit lines are `id sx sy tx ty`; the `seed` line is optional. Random
//! scenarios use ChaCha8 seeded from the 64-bit seed, so a seed reproduces the
//! same file on every platform.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::UnitSpec;
use crate::error::{ParseError, ScenarioError};
use crate::grid::{GridMap, Loc};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    pub map: String,
    pub seed: Option<u64>,
    pub units: Vec<UnitSpec>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut scen = Scenario::default();
        let mut starts = BTreeSet::new();
        let mut targets = BTreeSet::new();
        let mut ids = BTreeSet::new();
        let mut saw_version = false;
        let mut saw_map = false;
        for (i, line) in text.lines().enumerate() {
            let no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "version" => {
                    if fields.get(1) != Some(&"1") || fields.len() != 2 {
                        return Err(ParseError::new(no, "unsupported scenario version"));
                    }
                    saw_version = true;
                }
                _ if !saw_version => return Err(ParseError::new(no, "expected `version 1` first")),
                "map" => {
                    let path = line["map".len()..].trim();
                    if path.is_empty() {
                        return Err(ParseError::new(no, "missing map path"));
                    }
                    scen.map = path.to_string();
                    saw_map = true;
                }
                "seed" => {
                    let seed = fields.get(1).and_then(|s| s.parse().ok());
                    scen.seed = Some(seed.ok_or_else(|| ParseError::new(no, "bad seed"))?);
                }
                _ => {
                    if fields.len() != 5 {
                        return Err(ParseError::new(no, format!("expected `id sx sy tx ty`, found {line:?}")));
                    }
                    let nums = fields
                        .iter()
                        .map(|f| f.parse::<u32>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| ParseError::new(no, format!("non-numeric field in {line:?}")))?;
                    let u = UnitSpec::new(nums[0], Loc::new(nums[1], nums[2]), Loc::new(nums[3], nums[4]));
                    if !ids.insert(u.id) {
                        return Err(ParseError::new(no, format!("duplicate unit id {}", u.id)));
                    }
                    if !starts.insert(u.start) {
                        return Err(ParseError::new(no, format!("duplicate start {}", u.start)));
                    }
                    if !targets.insert(u.target) {
                        return Err(ParseError::new(no, format!("duplicate target {}", u.target)));
                    }
                    if u.start == u.target {
                        return Err(ParseError::new(no, format!("unit {} starts on its target", u.id)));
                    }
                    scen.units.push(u);
                }
            }
        }
        if !saw_version {
            return Err(ParseError::new(0, "missing `version 1` header"));
        }
        if !saw_map {
            return Err(ParseError::new(0, "missing `map` line"));
        }
        Ok(scen)
    }

    /// Checks that every start and target is a passable cell of `map`.
    /// The error line refers to the unit's line in the canonical layout.
    pub fn check_map(&self, map: &GridMap) -> Result<(), ParseError> {
        let header = 2 + usize::from(self.seed.is_some());
        for (i, u) in self.units.iter().enumerate() {
            for (what, l) in [("start", u.start), ("target", u.target)] {
                if !map.is_passable(l) {
                    return Err(ParseError::new(header + i + 1, format!("unit {} {what} {l} is not passable", u.id)));
                }
            }
        }
        Ok(())
    }

    pub fn emit(&self) -> String {
        let mut out = format!("version 1\nmap {}\n", self.map);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed {seed}");
        }
        for u in &self.units {
            let _ = writeln!(out, "{} {} {} {} {}", u.id, u.start.x, u.start.y, u.target.x, u.target.y);
        }
        out
    }
}

/// Draws `n` starts and `n` targets uniformly without replacement.
///
/// Requires `2n <= m`. A unit's start and target always differ; a cell may be
/// one unit's start and another's target.
pub fn gen_scenario(map: &GridMap, map_ref: &str, n: usize, seed: u64) -> Result<Scenario, ScenarioError> {
    let cells: Vec<Loc> = map.open_locs().collect();
    let m = cells.len();
    if 2 * n > m || (n > 0 && n >= m) {
        return Err(ScenarioError::TooManyUnits { units: n, cells: m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Loc> = cells.choose_multiple(&mut rng, n).copied().collect();
    let mut pool = cells.clone();
    pool.shuffle(&mut rng);
    let mut used = vec![false; m];
    let mut targets = Vec::with_capacity(n);
    for s in &starts {
        let j = (0..m).find(|&j| !used[j] && pool[j] != *s).expect("m > n");
        used[j] = true;
        targets.push(pool[j]);
    }
    let units = (0..n).map(|i| UnitSpec::new(i as u32, starts[i], targets[i])).collect();
    Ok(Scenario { map: map_ref.to_string(), seed: Some(seed), units })
}

/// A `width` x `height` map with each cell blocked with probability
/// `wall_ratio`, drawn from ChaCha8 seeded with `seed`.
pub fn random_map(width: u32, height: u32, wall_ratio: f64, seed: u64) -> GridMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let passable = (0..width * height).map(|_| !rng.gen_bool(wall_ratio)).collect();
    GridMap::from_passable(width, height, passable)
}

/// One benchmark instance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResultRow {
    pub map: String,
    pub scenario: String,
    pub n: usize,
    pub m: usize,
    pub mode: String,
    pub repositioning: String,
    pub slidable: usize,
    pub ti_slidable: usize,
    pub ac_slidable: usize,
    pub ti_ac_slidable: usize,
    pub unproven: usize,
    pub solved: usize,
    pub total_moves: usize,
    pub undo_moves: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<u64>,
}

/// Writes rows as CSV with a header line.
pub fn write_results<W: Write>(w: W, rows: &[ResultRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-unit detail, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct UnitDetail {
    pub scenario: String,
    pub unit: u32,
    pub label: String,
    pub pi_len: Option<usize>,
    pub solved: bool,
}

pub fn write_unit_details<W: Write>(mut w: W, details: &[UnitDetail]) -> std::io::Result<()> {
    for d in details {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
