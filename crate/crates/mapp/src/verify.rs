//! Independent checks on solver output.
//!
//! [`validate`] replays a move list from scratch and shares no code with the
//! solver. [`joint_oracle`] finds optimal plans on tiny instances by
//! breadth-first search over joint placements.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::classify::{Classification, UnitSpec};
use crate::engine::{Move, MoveKind, Solution};
use crate::grid::{GridMap, Loc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    NotAdjacent,
    DestOccupied,
    UnknownUnit,
    OffMap,
    /// The mover was not where the move says it started.
    WrongOrigin,
    FinalStateWrong,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::NotAdjacent => "NOT_ADJACENT",
            ViolationKind::DestOccupied => "DEST_OCCUPIED",
            ViolationKind::UnknownUnit => "UNKNOWN_UNIT",
            ViolationKind::OffMap => "OFF_MAP",
            ViolationKind::WrongOrigin => "WRONG_ORIGIN",
            ViolationKind::FinalStateWrong => "FINAL_STATE_WRONG",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    /// Index into the move list; `None` for final-state problems.
    pub index: Option<usize>,
    pub kind: ViolationKind,
    pub unit: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Replays `moves` from the units' starts. Units listed in `claimed_solved`
/// (by id) must end on their targets. Replay continues past a bad move by
/// skipping it, so one report lists every problem.
pub fn validate(map: &GridMap, units: &[UnitSpec], moves: &[Move], claimed_solved: &[u32]) -> ValidationReport {
    let mut at: HashMap<u32, Loc> = units.iter().map(|u| (u.id, u.start)).collect();
    let mut taken: HashSet<Loc> = units.iter().map(|u| u.start).collect();
    let mut report = ValidationReport::default();
    for (i, m) in moves.iter().enumerate() {
        let mut flag = |kind| report.violations.push(Violation { index: Some(i), kind, unit: m.unit });
        let Some(&cur) = at.get(&m.unit) else {
            flag(ViolationKind::UnknownUnit);
            continue;
        };
        if !map.is_passable(m.to) {
            flag(ViolationKind::OffMap);
            continue;
        }
        if cur != m.from {
            flag(ViolationKind::WrongOrigin);
            continue;
        }
        if m.from.manhattan(m.to) != 1 {
            flag(ViolationKind::NotAdjacent);
            continue;
        }
        if taken.contains(&m.to) {
            flag(ViolationKind::DestOccupied);
            continue;
        }
        taken.remove(&cur);
        taken.insert(m.to);
        at.insert(m.unit, m.to);
    }
    for u in units {
        if claimed_solved.contains(&u.id) && at[&u.id] != u.target {
            report.violations.push(Violation { index: None, kind: ViolationKind::FinalStateWrong, unit: u.id });
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleResult {
    /// Minimum number of single-unit moves.
    Solvable(usize),
    Unsolvable,
    /// Search gave up after the state budget.
    Limit,
}

pub const DEFAULT_ORACLE_STATES: usize = 5_000_000;

/// Breadth-first search over joint placements, one unit moving per step.
pub fn joint_oracle(map: &GridMap, units: &[UnitSpec], max_states: usize) -> OracleResult {
    let enc = |l: Loc| map.index(l) as u32;
    let start: Vec<u32> = units.iter().map(|u| enc(u.start)).collect();
    let goal: Vec<u32> = units.iter().map(|u| enc(u.target)).collect();
    if start == goal {
        return OracleResult::Solvable(0);
    }
    let mut dist: HashMap<Vec<u32>, usize> = HashMap::from([(start.clone(), 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(state) = queue.pop_front() {
        let d = dist[&state];
        for u in 0..state.len() {
            for n in map.adjacent(map.loc(state[u] as usize)) {
                let c = enc(n);
                if state.contains(&c) {
                    continue;
                }
                let mut next = state.clone();
                next[u] = c;
                if dist.contains_key(&next) {
                    continue;
                }
                if next == goal {
                    return OracleResult::Solvable(d + 1);
                }
                if dist.len() >= max_states {
                    return OracleResult::Limit;
                }
                dist.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    OracleResult::Unsolvable
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Metrics {
    pub total_moves: usize,
    pub progression_moves: usize,
    pub undo_moves: usize,
    pub solved_units: usize,
    pub provable_units: usize,
    pub success_ratio: f64,
    /// Summed route lengths of the provable units.
    pub pi_length_sum: usize,
    pub lambda_observed: usize,
    pub progression_steps: u32,
}

pub fn extract_metrics(class: &Classification, sol: &Solution) -> Metrics {
    let n = sol.solved.len();
    let solved_units = sol.solved.iter().filter(|s| **s).count();
    let provable = class.units.iter().filter(|u| u.label.is_provable());
    Metrics {
        total_moves: sol.moves.len(),
        progression_moves: sol.moves.iter().filter(|m| m.kind != MoveKind::Undo).count(),
        undo_moves: sol.undo_moves(),
        solved_units,
        provable_units: class.provable_count(),
        success_ratio: if n == 0 { 1.0 } else { solved_units as f64 / n as f64 },
        pi_length_sum: provable.filter_map(|u| u.pi.as_ref()).map(|p| p.len()).sum(),
        lambda_observed: class.lambda(),
        progression_steps: sol.diagnostics.steps,
    }
}
