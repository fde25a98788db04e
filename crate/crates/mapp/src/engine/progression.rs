//! Progression: advance units along their routes in priority order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::error::EngineError;
use crate::grid::Loc;

use super::state::{EngineState, Status};
use super::MoveKind;

/// Priority order of the active units: precedence first, then unsolved
/// provable units, unproven units, and finally units waiting at their target;
/// closer units first within a tier.
pub(crate) fn order_units(s: &EngineState<'_>) -> Result<Vec<usize>, EngineError> {
    let n = s.plans.len();
    let active: Vec<usize> = (0..n).filter(|&u| s.status[u] == Status::Active).collect();
    let key = |u: usize| {
        let p = &s.plans[u];
        let tier = if s.at_target(u) {
            2
        } else if p.provable {
            0
        } else {
            1
        };
        let dist = match s.route_index(u) {
            Some(i) => p.pi.len() - 1 - i,
            None => s.pos[u].manhattan(p.target) as usize,
        };
        (tier, dist, p.id)
    };
    let mut indegree = vec![0usize; n];
    for &u in &active {
        indegree[u] = s.plans[u].preds.iter().filter(|&&v| s.status[v] == Status::Active).count();
    }
    type Key = (u8, usize, u32);
    let mut ready: BinaryHeap<Reverse<(Key, usize)>> =
        active.iter().filter(|&&u| indegree[u] == 0).map(|&u| Reverse((key(u), u))).collect();
    let mut order = Vec::with_capacity(active.len());
    while let Some(Reverse((_, u))) = ready.pop() {
        order.push(u);
        for &w in &active {
            if s.plans[w].preds.contains(&u) {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(Reverse((key(w), w)));
                }
            }
        }
    }
    if order.len() != active.len() {
        let stuck = active.iter().find(|u| !order.contains(u)).copied().unwrap_or(0);
        return Err(EngineError::PrecedenceCycle(stuck));
    }
    Ok(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Moved,
    Waited,
    Skipped,
}

/// Per-step bookkeeping for progression.
pub(crate) struct Step {
    pub order: Vec<usize>,
    pub rank: Vec<usize>,
    /// Cells each unit has occupied during this step.
    pub visited: Vec<HashSet<Loc>>,
}

impl Step {
    pub fn new(s: &EngineState<'_>, order: Vec<usize>) -> Self {
        let n = s.plans.len();
        let mut rank = vec![usize::MAX; n];
        for (r, &u) in order.iter().enumerate() {
            rank[u] = r;
        }
        let visited = (0..n).map(|u| [s.pos[u]].into_iter().collect()).collect();
        Step { order, rank, visited }
    }

    fn higher(&self, u: usize) -> &[usize] {
        &self.order[..self.rank[u]]
    }
}

/// Private zone: the unit's cell and, on its route, the cells behind and
/// ahead of it. A lower unit entering the cell ahead would only be pushed
/// back out, repeating a joint state.
fn in_zone(s: &EngineState<'_>, v: usize, l: Loc) -> bool {
    if s.pos[v] == l {
        return true;
    }
    let p = &s.plans[v];
    let Some(i) = s.route_index(v) else { return false };
    (i > 0 && p.pi[i - 1] == l) || p.pi.get(i + 1) == Some(&l) || p.omegas[i].as_ref().is_some_and(|o| o.contains(&l))
}

fn blocked_for(s: &EngineState<'_>, step: &Step, u: usize, l: Loc) -> bool {
    if step.higher(u).iter().any(|&v| in_zone(s, v, l)) {
        return true;
    }
    let r = step.rank[u];
    if s.beta_owners(l).any(|v| step.rank[v] < r && s.kappa_live(v) && s.kappa[v] <= s.plans[v].tau) {
        return true;
    }
    !s.plans[u].provable && s.is_open_target(l, u)
}

/// Walks `cells` until the first blank; `None` if a cell cannot be used.
fn scan(s: &EngineState<'_>, u: usize, cells: impl Iterator<Item = Loc>, forbidden: Option<Loc>) -> Option<Vec<Loc>> {
    let mut corridor = Vec::new();
    for c in cells {
        if Some(c) == forbidden || c == s.pos[u] || corridor.contains(&c) {
            return None;
        }
        corridor.push(c);
        match s.occupant(c) {
            None => return Some(corridor),
            Some(w) if s.status[w] == Status::Solved => return None,
            Some(_) => {}
        }
    }
    None
}

/// Finds a corridor starting at `u`'s next cell and ending at a blank, such
/// that sliding every unit on it one cell toward the blank frees the next
/// cell. Alternate-path mode scans the detour of the current triple from its
/// far end; buffer mode, used inside tunnels, pushes forward along the route
/// and optionally turns into a later detour.
pub(crate) fn can_bring_blank(s: &EngineState<'_>, step: &Step, u: usize, i: usize) -> Option<Vec<Loc>> {
    let p = &s.plans[u];
    let pi = &p.pi;
    let k = pi.len() - 1;
    let candidates: Vec<Vec<Loc>> = match (&p.omegas[i], p.tunnel[i]) {
        (Some(omega), false) => scan(s, u, omega.iter().rev().copied(), None).into_iter().collect(),
        _ => {
            let target = Some(p.target);
            let mut out: Vec<Vec<Loc>> = scan(s, u, pi[i + 1..k].iter().copied(), target).into_iter().collect();
            for q in i + 1..k {
                let Some(omega) = &p.omegas[q] else { continue };
                // The detour right ahead starts at the unit's own cell, so it
                // can only be entered from its far end.
                if q > i + 1 {
                    let near = pi[i + 1..q].iter().chain(omega[1..].iter()).copied();
                    out.extend(scan(s, u, near, target));
                }
                let far = pi[i + 1..=q + 1].iter().chain(omega.iter().rev().skip(1)).copied();
                out.extend(scan(s, u, far, target));
            }
            out
        }
    };
    candidates.into_iter().filter(|c| c.iter().all(|&l| !blocked_for(s, step, u, l))).min_by_key(Vec::len)
}

/// Slides the units on `corridor` one cell toward its blank end.
pub(crate) fn execute_blank_travel(
    s: &mut EngineState<'_>,
    step: &mut Step,
    corridor: &[Loc],
) -> Result<(), EngineError> {
    for j in (0..corridor.len() - 1).rev() {
        let w = s.occupant(corridor[j]).ok_or(EngineError::StalePlan(corridor[j]))?;
        s.apply(w, corridor[j + 1], MoveKind::BlankShift)?;
        step.visited[w].insert(corridor[j + 1]);
    }
    Ok(())
}

/// One attempt to advance `u` by a single cell.
pub(crate) fn advance(s: &mut EngineState<'_>, step: &mut Step, u: usize) -> Result<Outcome, EngineError> {
    let Some(i) = s.route_index(u) else { return Ok(Outcome::Skipped) };
    let p = &s.plans[u];
    if i + 1 >= p.pi.len() {
        return Ok(Outcome::Skipped);
    }
    let next = p.pi[i + 1];
    if blocked_for(s, step, u, next) {
        return Ok(Outcome::Waited);
    }
    if step.visited[u].contains(&next) {
        return Ok(Outcome::Skipped);
    }
    if !s.is_blank(next) {
        let Some(corridor) = can_bring_blank(s, step, u, i) else { return Ok(Outcome::Waited) };
        execute_blank_travel(s, step, &corridor)?;
    }
    s.apply(u, next, MoveKind::Progress)?;
    step.visited[u].insert(next);
    Ok(Outcome::Moved)
}

/// Pass-level observations used by the invariant checks.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct PassReport {
    pub passes: u32,
    /// Passes in which the leading unit had not arrived yet failed to move.
    pub master_stalls: u32,
}

/// Repeats priority-order passes until a full pass moves nobody.
pub(crate) fn progression_step(s: &mut EngineState<'_>, step: &mut Step) -> Result<PassReport, EngineError> {
    let mut report = PassReport::default();
    let master = step.order.first().copied();
    let mut last_master_index = master.and_then(|m| s.route_index(m));
    loop {
        report.passes += 1;
        let mut moved = false;
        for r in 0..step.order.len() {
            let u = step.order[r];
            if s.status[u] != Status::Active {
                continue;
            }
            moved |= advance(s, step, u)? == Outcome::Moved;
        }
        if let Some(m) = master {
            let now = s.route_index(m);
            if s.plans[m].provable && !s.at_target(m) && (now.is_none() || now <= last_master_index) {
                report.master_stalls += 1;
            }
            last_master_index = now;
        }
        if !moved {
            break;
        }
    }
    Ok(report)
}
