//! Repositioning: undo enough of a step's moves that every provable unit is
//! back on its route with a blank ahead.

use std::collections::HashSet;

use crate::error::EngineError;
use crate::grid::Loc;

use super::state::{EngineState, Status};

/// Undo moves newest first, skipping solved units, until the state is
/// well-positioned again.
pub(crate) fn reverse(s: &mut EngineState<'_>) -> Result<u32, EngineError> {
    let mut undone = 0;
    while !s.all_well_positioned() {
        let Some(e) = s.stack.pop() else { break };
        if s.status[e.unit] == Status::Solved {
            continue;
        }
        s.undo(e)?;
        undone += 1;
    }
    s.stack.clear();
    Ok(undone)
}

/// Options for the counting strategy.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CountingRules {
    /// Refuse to stop a unit on a cell another unit needs blank.
    pub guard_next_cells: bool,
}

/// Walks the stack newest first; a unit whose position is safe from every
/// remaining undo stops there and keeps its moves, everyone else is undone.
pub(crate) fn counting(
    s: &mut EngineState<'_>,
    start_next: &HashSet<(usize, Loc)>,
    rules: CountingRules,
) -> Result<u32, EngineError> {
    let n = s.plans.len();
    let mut stopped = vec![false; n];
    let mut undone = 0;
    while !s.all_well_positioned() {
        let Some(e) = s.stack.pop() else { break };
        let u = e.unit;
        if s.status[u] == Status::Solved || stopped[u] {
            continue;
        }
        if s.status[u] == Status::Active && can_stop(s, u, start_next, rules) {
            stopped[u] = true;
            continue;
        }
        s.undo(e)?;
        undone += 1;
    }
    s.stack.clear();
    if s.all_well_positioned() {
        Ok(undone)
    } else {
        Err(EngineError::RepositionFailed)
    }
}

fn can_stop(s: &EngineState<'_>, u: usize, start_next: &HashSet<(usize, Loc)>, rules: CountingRules) -> bool {
    let here = s.pos[u];
    if s.counter(here) != 1 {
        return false;
    }
    if rules.guard_next_cells && start_next.iter().any(|&(w, l)| w != u && l == here) {
        return false;
    }
    // Parking on the cell right ahead of another unit would only force
    // that unit's moves to be undone instead.
    let blocks_next = (0..s.plans.len()).any(|w| {
        w != u
            && s.status[w] == Status::Active
            && s.plans[w].provable
            && s.route_index(w).and_then(|i| s.plans[w].pi.get(i + 1)) == Some(&here)
    });
    if blocks_next {
        return false;
    }
    if s.beta_owners(here).any(|w| w != u && s.kappa_live(w)) {
        return false;
    }
    if !s.plans[u].provable && s.is_open_target(here, u) {
        return false;
    }
    if s.at_target(u) {
        return true;
    }
    let Some(i) = s.route_index(u) else { return false };
    let p = &s.plans[u];
    let next = p.pi[i + 1];
    if !s.is_blank(next) || s.counter(next) != 0 {
        return false;
    }
    !s.kappa_live(u) || p.beta.iter().filter(|&&b| s.is_blank(b) && s.counter(b) == 0).count() >= p.tau
}
