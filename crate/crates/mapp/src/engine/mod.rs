//! The solver: alternate progression and repositioning steps until every
//! unit that can be solved is at its target.
//!
//! Each step lets the highest-priority unit (the master) walk all the way to
//! its target, bringing blanks along its detours when the next cell is taken.
//! Other units advance opportunistically. Repositioning then undoes moves
//! until each provable unit is back on its route with a blank ahead.

mod progression;
mod reposition;
mod state;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::altpaths::OmegaCache;
use crate::classify::{classify_instance, Classification, UnitSpec};
use crate::error::{EngineError, Error};
use crate::grid::{GridMap, Loc};
use crate::pipaths::Mode;

use progression::{order_units, progression_step, Step};
use reposition::CountingRules;
use state::{EngineState, Status, UnitPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Progress,
    #[serde(rename = "blank")]
    BlankShift,
    Undo,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Progress => "progress",
            MoveKind::BlankShift => "blank",
            MoveKind::Undo => "undo",
        }
    }
}

/// A single unit moving to an adjacent cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Move {
    pub unit: u32,
    pub from: Loc,
    pub to: Loc,
    pub kind: MoveKind,
    pub step: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepositionStrategy {
    Reverse,
    #[default]
    Counting,
}

impl RepositionStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            RepositionStrategy::Reverse => "reverse",
            RepositionStrategy::Counting => "counting",
        }
    }
}

impl fmt::Display for RepositionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepositionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reverse" => Ok(RepositionStrategy::Reverse),
            "counting" | "rc" => Ok(RepositionStrategy::Counting),
            _ => Err(format!("unknown repositioning {s:?} (expected reverse or counting)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub mode: Mode,
    pub repositioning: RepositionStrategy,
    /// Also drive units outside the provable classes, without guarantees.
    pub attempt_all: bool,
    /// Counting repositioning never parks a unit on a cell another unit
    /// needs blank at the start of the step.
    pub guard_next_cells: bool,
    pub timeout: Option<Duration>,
    /// Also record how many moves reverse repositioning would have undone
    /// from each step's post-progression state. Costs a state copy per step.
    pub shadow_reverse: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: Mode::TiAc,
            repositioning: RepositionStrategy::Counting,
            attempt_all: false,
            guard_next_cells: true,
            timeout: None,
            shadow_reverse: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    /// Every unit reached its target.
    Complete,
    /// Every provable unit is solved; some others are not.
    Partial,
    /// A provable unit was left unsolved.
    Failed,
    Timeout,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Complete => "complete",
            SolveStatus::Partial => "partial",
            SolveStatus::Failed => "failed",
            SolveStatus::Timeout => "timeout",
        }
    }
}

/// Invariant observations collected while solving. All counters are zero on
/// a run that behaves as the guarantees promise.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct Diagnostics {
    pub steps: u32,
    /// Joint states seen twice within one step.
    pub state_repeats: u64,
    /// Progression passes in which the master did not advance.
    pub master_stalls: u64,
    /// Steps that began with a provable unit not well-positioned.
    pub not_well_positioned: u64,
    /// Steps whose repositioning undid at least as many moves as progression made.
    pub undo_overruns: u64,
    pub progression_moves_per_step: Vec<u32>,
    pub undo_moves_per_step: Vec<u32>,
    /// Filled when [`SolveOptions::shadow_reverse`] is set.
    pub reverse_undo_per_step: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub moves: Vec<Move>,
    /// Indexed like the unit list passed to [`solve`].
    pub solved: Vec<bool>,
    pub final_positions: Vec<Loc>,
    pub status: SolveStatus,
    pub diagnostics: Diagnostics,
    /// Longest alternate path length used for the move bound.
    pub lambda: usize,
}

impl Solution {
    pub fn total_moves(&self) -> usize {
        self.moves.len()
    }

    pub fn undo_moves(&self) -> usize {
        self.moves.iter().filter(|m| m.kind == MoveKind::Undo).count()
    }

    /// Upper bound on the total move count: `4 n^2 m lambda`.
    pub fn move_bound(&self, n: usize, m: usize) -> u64 {
        4 * (n as u64).pow(2) * m as u64 * self.lambda.max(1) as u64
    }
}

/// Solves a classified instance.
pub fn solve(
    map: &GridMap,
    units: &[UnitSpec],
    class: &Classification,
    opts: &SolveOptions,
) -> Result<Solution, EngineError> {
    let deadline = opts.timeout.map(|t| Instant::now() + t);
    let plans = UnitPlan::build(units, class);
    let starts: Vec<Loc> = units.iter().map(|u| u.start).collect();
    let mut s = EngineState::new(map, &plans, &starts, opts.attempt_all);
    let mut diag = Diagnostics::default();
    let n = units.len();
    let rules = CountingRules { guard_next_cells: opts.guard_next_cells };
    let mut timed_out = false;

    loop {
        mark_solved(&mut s);
        if !(0..n).any(|u| s.status[u] == Status::Active) {
            break;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            timed_out = true;
            break;
        }
        if !s.all_well_positioned() {
            diag.not_well_positioned += 1;
        }
        let solved_before = s.status.iter().filter(|st| **st == Status::Solved).count();
        s.step += 1;
        diag.steps += 1;
        s.reset_counters();
        s.stack.clear();

        let order = order_units(&s)?;
        let mut step = Step::new(&s, order);
        let start_next: HashSet<(usize, Loc)> = step
            .order
            .iter()
            .filter(|&&u| s.plans[u].provable)
            .filter_map(|&u| s.route_index(u).and_then(|i| s.plans[u].pi.get(i + 1)).map(|l| (u, *l)))
            .collect();
        let before = s.moves.len();
        let report = progression_step(&mut s, &mut step)?;
        diag.master_stalls += u64::from(report.master_stalls);
        diag.state_repeats += count_repeats(&s, before);
        let progressed = (s.moves.len() - before) as u32;

        mark_solved(&mut s);
        if opts.shadow_reverse {
            let mut shadow = s.clone();
            diag.reverse_undo_per_step.push(reposition::reverse(&mut shadow)?);
        }
        let undone = match opts.repositioning {
            RepositionStrategy::Reverse => reposition::reverse(&mut s)?,
            RepositionStrategy::Counting => reposition::counting(&mut s, &start_next, rules)?,
        };
        diag.progression_moves_per_step.push(progressed);
        diag.undo_moves_per_step.push(undone);
        if undone >= progressed && progressed > 0 {
            diag.undo_overruns += 1;
        }

        mark_solved(&mut s);
        let solved_after = s.status.iter().filter(|st| **st == Status::Solved).count();
        if solved_after == solved_before {
            break;
        }
    }

    let solved: Vec<bool> = s.status.iter().map(|st| *st == Status::Solved).collect();
    let provable_done = (0..n).all(|u| !plans[u].provable || solved[u]);
    let status = if timed_out {
        SolveStatus::Timeout
    } else if !provable_done {
        SolveStatus::Failed
    } else if solved.iter().all(|s| *s) {
        SolveStatus::Complete
    } else {
        SolveStatus::Partial
    };
    let lambda = class.lambda().max(tau_max(&plans));
    Ok(Solution { final_positions: s.pos.clone(), moves: s.moves, solved, status, diagnostics: diag, lambda })
}

fn tau_max(plans: &[UnitPlan]) -> usize {
    plans.iter().filter(|p| p.provable).map(|p| p.tau).max().unwrap_or(0)
}

/// Classifies and solves in one call.
pub fn plan_and_solve(
    map: &GridMap,
    cache: &mut OmegaCache,
    units: &[UnitSpec],
    opts: &SolveOptions,
) -> Result<(Classification, Solution), Error> {
    let class = classify_instance(map, cache, units, opts.mode)?;
    let sol = solve(map, units, &class, opts)?;
    Ok((class, sol))
}

/// Marks units at their targets as solved once their predecessors are, and
/// no unsolved unit's move on the current stack passed through the target.
fn mark_solved(s: &mut EngineState<'_>) {
    let n = s.plans.len();
    loop {
        let mut changed = false;
        for u in 0..n {
            if s.status[u] != Status::Active || !s.at_target(u) {
                continue;
            }
            let p = &s.plans[u];
            if p.preds.iter().any(|&v| s.status[v] != Status::Solved) {
                continue;
            }
            let t = p.target;
            let touched =
                s.stack.iter().any(|e| e.unit != u && s.status[e.unit] != Status::Solved && (e.from == t || e.to == t));
            if touched {
                continue;
            }
            if !p.provable
                && (0..n)
                    .any(|w| s.plans[w].provable && s.status[w] != Status::Solved && s.plans[w].footprint.contains(&t))
            {
                continue;
            }
            s.status[u] = Status::Solved;
            changed = true;
        }
        if !changed {
            return;
        }
    }
}

/// Replays this step's moves and counts joint states visited twice.
fn count_repeats(s: &EngineState<'_>, from: usize) -> u64 {
    let mut seen = HashSet::new();
    let mut fp = s.fingerprint;
    // Walk backwards from the current state to recover each intermediate
    // digest; the order does not matter for counting duplicates.
    seen.insert(fp);
    let mut repeats = 0;
    let id_to_index: std::collections::HashMap<u32, usize> =
        s.plans.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
    for m in s.moves[from..].iter().rev() {
        let u = id_to_index[&m.unit];
        fp ^= state::digest(u, s.map.index(m.to)) ^ state::digest(u, s.map.index(m.from));
        if !seen.insert(fp) {
            repeats += 1;
        }
    }
    repeats
}
