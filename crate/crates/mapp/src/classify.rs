//! Per-unit membership in the provably solvable classes.
//!
//! A unit is provable when its route has a detour for every interior triple
//! (or crosses single-width tunnels with enough free buffer space behind
//! them), its second cell starts empty, and no other unit's route or detours
//! run over its target, unless a precedence relation orders the two units.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use crate::altpaths::{AvoidSet, OmegaCache};
use crate::error::Error;
use crate::grid::{GridMap, Loc};
use crate::pipaths::{compute_pi, Mode, PiPath, PlanContext, TripleLink};

/// A unit's identifier, start and target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct UnitSpec {
    pub id: u32,
    pub start: Loc,
    pub target: Loc,
}

impl UnitSpec {
    pub fn new(id: u32, start: Loc, target: Loc) -> Self {
        UnitSpec { id, start, target }
    }
}

/// A maximal stretch of a route whose triples have no alternate path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TunnelSegment {
    /// Single-width cells of the stretch, in route order.
    pub cells: Vec<Loc>,
    /// Route indices of the first and last detour-less triple, including
    /// the room cells at either mouth.
    pub span: (usize, usize),
}

impl TunnelSegment {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Moves the unit makes while crossing the stretch.
    pub fn crossing_moves(&self) -> usize {
        self.span.1 - self.span.0 + 1
    }
}

/// The region behind a unit's last tunnel that supplies blanks for crossing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferZone {
    pub beta: BTreeSet<Loc>,
    /// Minimum number of blanks in `beta` needed to cross.
    pub tau: usize,
    /// Route index of the first cell after the last tunnel.
    pub exit_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TunnelError {
    /// A triple lacks a detour but no single-width cell explains it.
    NotSingleWidth(usize),
    /// The route ends inside a tunnel, so nothing is left to buffer into.
    TargetInTunnel,
}

impl fmt::Display for TunnelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TunnelError::NotSingleWidth(i) => write!(f, "triple at route index {i} has no detour"),
            TunnelError::TargetInTunnel => f.write_str("target inside a tunnel"),
        }
    }
}

/// Ordering constraints between units: `(u, v)` means `u` must be solved
/// before `v` (u's route or detours touch v's target). Indices are positions
/// in the unit list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Precedence {
    pub edges: BTreeSet<(usize, usize)>,
    /// Units removed to keep the relation acyclic.
    pub dropped: BTreeSet<usize>,
}

impl Precedence {
    pub fn predecessors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == v).map(|e| e.0)
    }

    pub fn is_acyclic(&self) -> bool {
        let mut g = DiGraphMap::<usize, ()>::new();
        for &(a, b) in &self.edges {
            if a == b {
                return false;
            }
            g.add_edge(a, b, ());
        }
        tarjan_scc(&g).iter().all(|c| c.len() == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum ClassLabel {
    Slidable,
    TiSlidable,
    AcSlidable,
    TiAcSlidable,
    Unproven,
}

impl ClassLabel {
    pub fn is_provable(self) -> bool {
        self != ClassLabel::Unproven
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Slidable => "SLIDABLE",
            ClassLabel::TiSlidable => "TI_SLIDABLE",
            ClassLabel::AcSlidable => "AC_SLIDABLE",
            ClassLabel::TiAcSlidable => "TI_AC_SLIDABLE",
            ClassLabel::Unproven => "UNPROVEN",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a unit ended up unproven.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Unproven {
    NoPath,
    SecondCellOccupied,
    Tunnel(TunnelError),
    BufferTooSmall { kappa: usize, tau: usize },
    TargetNotIsolated,
    DroppedForCycle,
}

#[derive(Debug, Clone)]
pub struct UnitClass {
    pub label: ClassLabel,
    pub pi: Option<PiPath>,
    pub tunnels: Vec<TunnelSegment>,
    pub buffer: Option<BufferZone>,
    pub kappa_init: usize,
    pub reason: Option<Unproven>,
}

impl UnitClass {
    pub fn tau(&self) -> usize {
        self.buffer.as_ref().map_or(0, |b| b.tau)
    }
}

/// Result of classifying one instance.
#[derive(Debug, Clone)]
pub struct Classification {
    pub mode: Mode,
    pub units: Vec<UnitClass>,
    pub precedence: Precedence,
    pub all_targets: Arc<AvoidSet>,
    pub search_expansions: u64,
    pub max_expansions_per_cell: u8,
}

impl Classification {
    pub fn provable_count(&self) -> usize {
        self.units.iter().filter(|u| u.label.is_provable()).count()
    }

    pub fn label_counts(&self) -> BTreeMap<ClassLabel, usize> {
        let mut out = BTreeMap::new();
        for u in &self.units {
            *out.entry(u.label).or_insert(0) += 1;
        }
        out
    }

    /// Longest alternate path used by any provable route.
    pub fn lambda(&self) -> usize {
        self.units
            .iter()
            .filter(|u| u.label.is_provable())
            .filter_map(|u| u.pi.as_ref())
            .map(PiPath::max_omega_len)
            .max()
            .unwrap_or(0)
    }
}

/// Whether the second cell of the route is free in the initial placement.
pub fn check_initial_blank(u: &UnitSpec, pi: &PiPath, starts: &BTreeSet<Loc>) -> bool {
    pi.locs.len() >= 2 && {
        let second = pi.locs[1];
        second == u.start || !starts.contains(&second)
    }
}

/// Splits the detour-less triples of `pi` into tunnel segments.
pub fn detect_tunnels(map: &GridMap, pi: &PiPath) -> Result<Vec<TunnelSegment>, TunnelError> {
    let k = pi.len();
    let gap = |i: usize| pi.is_tunnel(i);
    let narrow = |i: usize| map.is_single_width(pi.locs[i]);
    let mut segments = Vec::new();
    let mut i = 1;
    while i < k {
        if !gap(i) {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < k && gap(i + 1) {
            i += 1;
        }
        let mut last = i;
        for j in first..=last {
            let explained = narrow(j) || (j > first && narrow(j - 1)) || (j < last && narrow(j + 1));
            if !explained {
                return Err(TunnelError::NotSingleWidth(j));
            }
        }
        // The final triple is exempt from needing a detour, but a passage
        // that runs right up to the target still swallows it.
        if last + 2 == k && narrow(last + 1) {
            last += 1;
        }
        let cells = (first..=last).filter(|&j| narrow(j)).map(|j| pi.locs[j]).collect();
        segments.push(TunnelSegment { cells, span: (first, last) });
        i = last + 1;
    }
    Ok(segments)
}

/// Buffer zone behind the last tunnel: route cells from the first cell
/// after it up to the cell before the target, plus their alternate paths.
pub fn compute_buffer(pi: &PiPath, tunnels: &[TunnelSegment]) -> Result<BufferZone, TunnelError> {
    let last = tunnels.last().expect("at least one tunnel");
    let k = pi.len();
    let exit_index = last.span.1 + 1;
    if exit_index >= k {
        return Err(TunnelError::TargetInTunnel);
    }
    let target = pi.target();
    let mut beta = BTreeSet::new();
    for i in exit_index..k {
        beta.insert(pi.locs[i]);
        if let Some(p) = pi.omega(i) {
            beta.extend(p.locs.iter().copied());
        }
    }
    beta.remove(&target);
    let longest = tunnels.iter().map(TunnelSegment::len).max().unwrap_or(0);
    let crossing: usize = tunnels.iter().map(TunnelSegment::crossing_moves).sum();
    Ok(BufferZone { beta, tau: (longest + 2).max(crossing), exit_index })
}

/// Builds the precedence relation and greedily drops units until it is
/// acyclic.
///
/// `footprints[v]` is the set of cells unit `v` may touch; `None` marks a
/// unit that failed its own checks and will only ever occupy its start.
/// Units whose target is touched by such a unit are dropped as well.
pub fn build_precedence(units: &[UnitSpec], footprints: &[Option<BTreeSet<Loc>>]) -> Precedence {
    let n = units.len();
    let mut kept: BTreeSet<usize> = (0..n).filter(|&i| footprints[i].is_some()).collect();
    let mut dropped = BTreeSet::new();
    let target_owner: BTreeMap<Loc, usize> = units.iter().enumerate().map(|(i, u)| (u.target, i)).collect();

    loop {
        let mut edges = BTreeSet::new();
        for v in 0..n {
            let touched: Box<dyn Iterator<Item = &Loc>> = match (&footprints[v], kept.contains(&v)) {
                (Some(fp), true) => Box::new(fp.iter()),
                _ => Box::new(std::iter::once(&units[v].start)),
            };
            for l in touched {
                if let Some(&u) = target_owner.get(l) {
                    if u != v {
                        edges.insert((v, u));
                    }
                }
            }
        }

        let orphaned: Vec<usize> =
            edges.iter().filter(|(v, u)| kept.contains(u) && !kept.contains(v)).map(|e| e.1).collect();
        if !orphaned.is_empty() {
            for u in orphaned {
                kept.remove(&u);
                dropped.insert(u);
            }
            continue;
        }

        let mut g = DiGraphMap::<usize, ()>::new();
        for &u in &kept {
            g.add_node(u);
        }
        for &(a, b) in &edges {
            if kept.contains(&a) && kept.contains(&b) {
                g.add_edge(a, b, ());
            }
        }
        let victim = tarjan_scc(&g)
            .into_iter()
            .filter(|scc| scc.len() > 1)
            .flat_map(|scc| {
                let members: BTreeSet<usize> = scc.iter().copied().collect();
                let g = &g;
                scc.into_iter().map(move |u| {
                    let deg =
                        g.neighbors_directed(u, petgraph::Direction::Outgoing).filter(|w| members.contains(w)).count()
                            + g.neighbors_directed(u, petgraph::Direction::Incoming)
                                .filter(|w| members.contains(w))
                                .count();
                    (deg, u)
                })
            })
            .max();
        match victim {
            Some((_, u)) => {
                kept.remove(&u);
                dropped.insert(u);
            }
            None => {
                let edges = edges.into_iter().filter(|(a, b)| kept.contains(a) && kept.contains(b)).collect();
                return Precedence { edges, dropped };
            }
        }
    }
}

fn validate_units(map: &GridMap, units: &[UnitSpec]) -> Result<(), Error> {
    let mut starts = BTreeSet::new();
    let mut targets = BTreeSet::new();
    for u in units {
        for (what, l) in [("start", u.start), ("target", u.target)] {
            if !map.is_passable(l) {
                return Err(Error::Invalid(format!("unit {}: {what} {l} is not a passable cell", u.id)));
            }
        }
        if u.start == u.target {
            return Err(Error::Invalid(format!("unit {}: start equals target", u.id)));
        }
        if !starts.insert(u.start) {
            return Err(Error::Invalid(format!("unit {}: duplicate start {}", u.id, u.start)));
        }
        if !targets.insert(u.target) {
            return Err(Error::Invalid(format!("unit {}: duplicate target {}", u.id, u.target)));
        }
    }
    Ok(())
}

/// Computes routes for all units and labels each one.
pub fn classify_instance(
    map: &GridMap,
    cache: &mut OmegaCache,
    units: &[UnitSpec],
    mode: Mode,
) -> Result<Classification, Error> {
    validate_units(map, units)?;
    let all_targets: Arc<AvoidSet> = Arc::new(units.iter().map(|u| u.target).collect());
    let starts: BTreeSet<Loc> = units.iter().map(|u| u.start).collect();
    let ctx = PlanContext { map, all_targets: &all_targets, mode };

    let mut search_expansions = 0;
    let mut max_per_cell = 0;
    let mut classes = Vec::with_capacity(units.len());
    // Tunnel modes try a tunnel-free route first: a tunnel that turns out
    // unusable must not cost a unit the route the stricter mode would find.
    let strict = match mode {
        Mode::Ac => Some(Mode::Basic),
        Mode::TiAc => Some(Mode::Ti),
        _ => None,
    };
    for u in units {
        let mut class = None;
        for m in strict.into_iter().chain([mode]) {
            let ctx = PlanContext { mode: m, ..ctx };
            let (pi, stats) = compute_pi(&ctx, cache, u.start, u.target);
            search_expansions += stats.expansions;
            max_per_cell = max_per_cell.max(stats.max_expansions_per_cell);
            let c = local_class(map, u, pi, &starts);
            let usable = c.reason.is_none();
            if usable || m == mode || class.is_none() {
                class = Some(c);
            }
            if usable {
                break;
            }
        }
        classes.push(class.expect("at least one search"));
    }

    let footprints: Vec<Option<BTreeSet<Loc>>> =
        classes.iter().map(|c| if c.reason.is_none() { c.pi.as_ref().map(PiPath::footprint) } else { None }).collect();

    let precedence = if mode.target_crossing() {
        let p = build_precedence(units, &footprints);
        for &u in &p.dropped {
            classes[u].reason.get_or_insert(Unproven::DroppedForCycle);
        }
        p
    } else {
        // Without the relaxation any touch of a foreign target disqualifies
        // the target's owner.
        let p = build_precedence(units, &vec![None; units.len()]);
        let mut touched = BTreeSet::new();
        for (v, fp) in footprints.iter().enumerate() {
            let cells: Vec<Loc> = match fp {
                Some(fp) => fp.iter().copied().collect(),
                None => vec![units[v].start],
            };
            for (u, spec) in units.iter().enumerate() {
                if u != v && cells.contains(&spec.target) {
                    touched.insert(u);
                }
            }
        }
        for u in touched {
            classes[u].reason.get_or_insert(Unproven::TargetNotIsolated);
        }
        Precedence { edges: BTreeSet::new(), dropped: p.dropped }
    };

    for (u, c) in classes.iter_mut().enumerate() {
        c.label = if c.reason.is_some() {
            ClassLabel::Unproven
        } else {
            let crosses = c.pi.as_ref().is_some_and(|p| !p.crossed_targets.is_empty())
                || precedence.edges.iter().any(|e| e.0 == u || e.1 == u);
            match (crosses, !c.tunnels.is_empty()) {
                (false, false) => ClassLabel::Slidable,
                (true, false) => ClassLabel::TiSlidable,
                (false, true) => ClassLabel::AcSlidable,
                (true, true) => ClassLabel::TiAcSlidable,
            }
        };
    }

    Ok(Classification {
        mode,
        units: classes,
        precedence,
        all_targets,
        search_expansions,
        max_expansions_per_cell: max_per_cell,
    })
}

fn local_class(map: &GridMap, u: &UnitSpec, pi: Option<PiPath>, starts: &BTreeSet<Loc>) -> UnitClass {
    let mut class = UnitClass {
        label: ClassLabel::Unproven,
        pi: None,
        tunnels: Vec::new(),
        buffer: None,
        kappa_init: 0,
        reason: None,
    };
    let Some(pi) = pi else {
        class.reason = Some(Unproven::NoPath);
        return class;
    };
    if !check_initial_blank(u, &pi, starts) {
        class.reason = Some(Unproven::SecondCellOccupied);
    }
    if pi.links.contains(&TripleLink::Tunnel) {
        match detect_tunnels(map, &pi).and_then(|t| compute_buffer(&pi, &t).map(|b| (t, b))) {
            Ok((tunnels, buffer)) => {
                let kappa = buffer.beta.iter().filter(|l| !starts.contains(l)).count();
                if kappa < buffer.tau {
                    class.reason.get_or_insert(Unproven::BufferTooSmall { kappa, tau: buffer.tau });
                }
                class.kappa_init = kappa;
                class.tunnels = tunnels;
                class.buffer = Some(buffer);
            }
            Err(e) => {
                class.reason.get_or_insert(Unproven::Tunnel(e));
            }
        }
    }
    class.pi = Some(pi);
    class
}
