//! Mutable world state shared by progression and repositioning.

use std::collections::{HashMap, HashSet};

use crate::classify::{Classification, UnitSpec};
use crate::error::EngineError;
use crate::grid::{GridMap, Loc};
use crate::hash::mix64;

use super::{Move, MoveKind};

const EMPTY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Active,
    Solved,
    /// Never moves on its own but can be pushed around.
    Inactive,
}

/// Static per-unit data derived from the classification.
#[derive(Debug, Clone)]
pub(crate) struct UnitPlan {
    pub id: u32,
    pub target: Loc,
    pub provable: bool,
    pub pi: Vec<Loc>,
    pub pi_index: HashMap<Loc, usize>,
    /// Alternate path for the triple centred on `pi[i]`, from `pi[i-1]` to
    /// `pi[i+1]`.
    pub omegas: Vec<Option<Vec<Loc>>>,
    pub tunnel: Vec<bool>,
    pub beta: Vec<Loc>,
    pub tau: usize,
    /// Route index of the first cell past the last tunnel; 0 without tunnels.
    pub exit: usize,
    pub footprint: HashSet<Loc>,
    pub preds: Vec<usize>,
}

impl UnitPlan {
    pub fn build(units: &[UnitSpec], class: &Classification) -> Vec<UnitPlan> {
        units
            .iter()
            .zip(&class.units)
            .enumerate()
            .map(|(u, (spec, c))| {
                let (pi, omegas, tunnel, footprint) = match &c.pi {
                    Some(p) => (
                        p.locs.clone(),
                        p.links.iter().map(|l| l.omega().map(|o| o.locs.clone())).collect(),
                        (0..p.locs.len()).map(|i| p.is_tunnel(i)).collect(),
                        p.footprint().into_iter().collect(),
                    ),
                    None => (vec![spec.start], vec![None], vec![false], [spec.start].into_iter().collect()),
                };
                let (beta, tau, exit) = match &c.buffer {
                    Some(b) => (b.beta.iter().copied().collect(), b.tau, b.exit_index),
                    None => (Vec::new(), 0, 0),
                };
                UnitPlan {
                    id: spec.id,
                    target: spec.target,
                    provable: c.label.is_provable(),
                    pi_index: pi.iter().enumerate().map(|(i, l)| (*l, i)).collect(),
                    pi,
                    omegas,
                    tunnel,
                    beta,
                    tau,
                    exit,
                    footprint,
                    preds: class.precedence.predecessors(u).collect(),
                }
            })
            .collect()
    }

    pub fn has_route(&self) -> bool {
        self.pi.len() > 1
    }
}

/// One move on the current step's stack.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StackEntry {
    pub unit: usize,
    pub from: Loc,
    pub to: Loc,
}

#[derive(Clone)]
pub(crate) struct EngineState<'a> {
    pub map: &'a GridMap,
    pub plans: &'a [UnitPlan],
    pub pos: Vec<Loc>,
    occ: Vec<u32>,
    pub status: Vec<Status>,
    /// Blank cells currently inside each unit's buffer zone.
    pub kappa: Vec<usize>,
    beta_owners: Vec<Vec<u32>>,
    target_owner: Vec<Option<usize>>,
    /// Visit counters for the current step.
    pub counters: Vec<u32>,
    pub moves: Vec<Move>,
    pub stack: Vec<StackEntry>,
    pub step: u32,
    pub fingerprint: u64,
}

pub(crate) fn digest(unit: usize, cell: usize) -> u64 {
    mix64(((unit as u64) << 32) | cell as u64)
}

impl<'a> EngineState<'a> {
    pub fn new(map: &'a GridMap, plans: &'a [UnitPlan], starts: &[Loc], attempt_all: bool) -> Self {
        let mut occ = vec![EMPTY; map.cell_count()];
        let mut fingerprint = 0;
        for (u, &s) in starts.iter().enumerate() {
            occ[map.index(s)] = u as u32;
            fingerprint ^= digest(u, map.index(s));
        }
        let mut beta_owners = vec![Vec::new(); map.cell_count()];
        for (u, p) in plans.iter().enumerate() {
            if p.provable {
                for &b in &p.beta {
                    beta_owners[map.index(b)].push(u as u32);
                }
            }
        }
        let mut target_owner = vec![None; map.cell_count()];
        for (u, p) in plans.iter().enumerate() {
            target_owner[map.index(p.target)] = Some(u);
        }
        let status = plans
            .iter()
            .map(|p| if p.provable || (attempt_all && p.has_route()) { Status::Active } else { Status::Inactive })
            .collect();
        let mut state = EngineState {
            map,
            plans,
            pos: starts.to_vec(),
            occ,
            status,
            kappa: vec![0; plans.len()],
            beta_owners,
            target_owner,
            counters: vec![0; map.cell_count()],
            moves: Vec::new(),
            stack: Vec::new(),
            step: 0,
            fingerprint,
        };
        for (u, p) in plans.iter().enumerate() {
            state.kappa[u] = p.beta.iter().filter(|b| state.is_blank(**b)).count();
        }
        state
    }

    pub fn occupant(&self, l: Loc) -> Option<usize> {
        match self.occ[self.map.index(l)] {
            EMPTY => None,
            u => Some(u as usize),
        }
    }

    pub fn is_blank(&self, l: Loc) -> bool {
        self.occ[self.map.index(l)] == EMPTY
    }

    pub fn counter(&self, l: Loc) -> u32 {
        self.counters[self.map.index(l)]
    }

    pub fn reset_counters(&mut self) {
        for (c, o) in self.counters.iter_mut().zip(&self.occ) {
            *c = u32::from(*o != EMPTY);
        }
    }

    /// Route index of the unit's position, if it is on its route.
    pub fn route_index(&self, u: usize) -> Option<usize> {
        self.plans[u].pi_index.get(&self.pos[u]).copied()
    }

    pub fn at_target(&self, u: usize) -> bool {
        self.pos[u] == self.plans[u].target
    }

    /// The buffer requirement applies until the unit leaves its last tunnel.
    pub fn kappa_live(&self, u: usize) -> bool {
        let p = &self.plans[u];
        p.provable && p.tau > 0 && self.status[u] == Status::Active && self.route_index(u).is_none_or(|i| i < p.exit)
    }

    pub fn beta_owners(&self, l: Loc) -> impl Iterator<Item = usize> + '_ {
        self.beta_owners[self.map.index(l)].iter().map(|u| *u as usize)
    }

    fn relocate(&mut self, u: usize, to: Loc) {
        let from = self.pos[u];
        let (fi, ti) = (self.map.index(from), self.map.index(to));
        self.occ[fi] = EMPTY;
        self.occ[ti] = u as u32;
        self.pos[u] = to;
        self.fingerprint ^= digest(u, fi) ^ digest(u, ti);
        for &w in &self.beta_owners[fi] {
            self.kappa[w as usize] += 1;
        }
        for &w in &self.beta_owners[ti] {
            self.kappa[w as usize] -= 1;
        }
    }

    /// Moves `u` one cell forward in time and pushes it on the step stack.
    pub fn apply(&mut self, u: usize, to: Loc, kind: MoveKind) -> Result<(), EngineError> {
        let from = self.pos[u];
        if !from.is_adjacent(to) || !self.is_blank(to) || !self.map.is_passable(to) {
            return Err(EngineError::StalePlan(to));
        }
        self.relocate(u, to);
        let ti = self.map.index(to);
        self.counters[ti] += 1;
        self.moves.push(Move { unit: self.plans[u].id, from, to, kind, step: self.step });
        self.stack.push(StackEntry { unit: u, from, to });
        Ok(())
    }

    /// Reverts a stack entry; the unit must still sit where the move left it.
    pub fn undo(&mut self, e: StackEntry) -> Result<(), EngineError> {
        if self.pos[e.unit] != e.to || !self.is_blank(e.from) {
            return Err(EngineError::UndoBlocked { unit: e.unit, to: e.from });
        }
        self.relocate(e.unit, e.from);
        let ti = self.map.index(e.to);
        self.counters[ti] -= 1;
        self.moves.push(Move {
            unit: self.plans[e.unit].id,
            from: e.to,
            to: e.from,
            kind: MoveKind::Undo,
            step: self.step,
        });
        Ok(())
    }

    /// On the route with a blank next cell and, while crossing, enough
    /// blanks in the buffer zone.
    pub fn well_positioned(&self, u: usize) -> bool {
        if self.at_target(u) {
            return true;
        }
        let Some(i) = self.route_index(u) else { return false };
        let p = &self.plans[u];
        self.is_blank(p.pi[i + 1]) && (!self.kappa_live(u) || self.kappa[u] >= p.tau) && self.target_reserved(u)
    }

    /// Nobody is parked on the target except a provable unit that will
    /// leave it along its own route.
    fn target_reserved(&self, u: usize) -> bool {
        match self.occupant(self.plans[u].target) {
            None => true,
            Some(w) => self.plans[w].provable && self.status[w] == Status::Active,
        }
    }

    /// Whether `l` is the target of a provable unit other than `u` that is
    /// not solved yet.
    pub fn is_open_target(&self, l: Loc, u: usize) -> bool {
        self.target_owner[self.map.index(l)]
            .is_some_and(|w| w != u && self.plans[w].provable && self.status[w] != Status::Solved)
    }

    pub fn all_well_positioned(&self) -> bool {
        (0..self.plans.len())
            .filter(|&u| self.plans[u].provable && self.status[u] == Status::Active)
            .all(|u| self.well_positioned(u))
    }
}
