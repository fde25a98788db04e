//! Per-unit path search with the alternate-connectivity constraint.
//!
//! The search runs A* over pairs `(cell, parent)`: whether a successor may be
//! appended depends on the triple it closes, so a cell can be worth expanding
//! once per incoming direction. Each cell is expanded at most three times.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::altpaths::{AvoidSet, OmegaCache, OmegaPath, Triple};
use crate::grid::{GridMap, Loc};

/// Which relaxations of the basic solvable class are enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Basic,
    Ti,
    Ac,
    TiAc,
}

impl Mode {
    /// Target isolation relaxed: paths may cross foreign targets at a cost.
    pub fn target_crossing(self) -> bool {
        matches!(self, Mode::Ti | Mode::TiAc)
    }

    /// Alternate connectivity relaxed: paths may cross single-width tunnels.
    pub fn tunnels(self) -> bool {
        matches!(self, Mode::Ac | Mode::TiAc)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Basic => "basic",
            Mode::Ti => "ti",
            Mode::Ac => "ac",
            Mode::TiAc => "ti-ac",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basic" => Ok(Mode::Basic),
            "ti" => Ok(Mode::Ti),
            "ac" => Ok(Mode::Ac),
            "ti-ac" | "tiac" => Ok(Mode::TiAc),
            _ => Err(format!("unknown mode {s:?} (expected basic, ti, ac or ti-ac)")),
        }
    }
}

pub fn manhattan(a: Loc, b: Loc) -> u32 {
    a.manhattan(b)
}

/// How the triple centred on a path cell is covered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TripleLink {
    /// Endpoints and the exempt final triple.
    Exempt,
    Omega(OmegaPath),
    /// No alternate path; the cell belongs to a single-width passage.
    Tunnel,
}

impl TripleLink {
    pub fn omega(&self) -> Option<&OmegaPath> {
        match self {
            TripleLink::Omega(p) => Some(p),
            _ => None,
        }
    }
}

/// A unit's fixed route from start to target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiPath {
    pub locs: Vec<Loc>,
    /// `links[i]` covers the triple `(locs[i-1], locs[i], locs[i+1])`.
    pub links: Vec<TripleLink>,
    /// Foreign targets entered after the start, on the path or on any of
    /// its alternate paths.
    pub crossed_targets: BTreeSet<Loc>,
    index: HashMap<Loc, usize>,
}

impl PiPath {
    pub fn new(locs: Vec<Loc>, links: Vec<TripleLink>, crossed_targets: BTreeSet<Loc>) -> Self {
        assert_eq!(locs.len(), links.len());
        let index = locs.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        PiPath { locs, links, crossed_targets, index }
    }

    /// Edge count `k`.
    pub fn len(&self) -> usize {
        self.locs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.locs.len() <= 1
    }

    pub fn start(&self) -> Loc {
        self.locs[0]
    }

    pub fn target(&self) -> Loc {
        *self.locs.last().expect("non-empty path")
    }

    pub fn index_of(&self, l: Loc) -> Option<usize> {
        self.index.get(&l).copied()
    }

    pub fn omega(&self, i: usize) -> Option<&OmegaPath> {
        self.links.get(i).and_then(TripleLink::omega)
    }

    pub fn is_tunnel(&self, i: usize) -> bool {
        matches!(self.links.get(i), Some(TripleLink::Tunnel))
    }

    /// Every cell the unit's own movement and blank travel can touch.
    pub fn footprint(&self) -> BTreeSet<Loc> {
        let mut cells: BTreeSet<Loc> = self.locs.iter().copied().collect();
        for link in &self.links {
            if let TripleLink::Omega(p) = link {
                cells.extend(p.locs.iter().copied());
            }
        }
        cells
    }

    /// Longest alternate path attached to this route.
    pub fn max_omega_len(&self) -> usize {
        self.links.iter().filter_map(TripleLink::omega).map(OmegaPath::len).max().unwrap_or(0)
    }
}

/// Search effort of one path computation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expansions: u64,
    /// Highest number of expansions of any single cell.
    pub max_expansions_per_cell: u8,
}

/// Environment a unit's path is planned in.
#[derive(Clone, Copy)]
pub struct PlanContext<'a> {
    pub map: &'a GridMap,
    /// Targets of every unit, including the planning unit's own.
    pub all_targets: &'a Arc<AvoidSet>,
    pub mode: Mode,
}

impl PlanContext<'_> {
    /// Cost added per foreign target entered or per alternate path that
    /// needs a foreign target. Larger than any target-free simple path.
    pub fn penalty(&self) -> u64 {
        self.map.open_cells() as u64 + 1
    }
}

const MAX_EXPANSIONS_PER_CELL: u8 = 3;

/// Outcome of admitting `next` after the pair `(prev, at)`.
enum Admit {
    No,
    Yes { extra: u64 },
}

/// Cheapest route from `start` to `target` under `ctx.mode`, or `None`.
pub fn compute_pi(
    ctx: &PlanContext<'_>,
    cache: &mut OmegaCache,
    start: Loc,
    target: Loc,
) -> (Option<PiPath>, SearchStats) {
    let mut stats = SearchStats::default();
    let map = ctx.map;
    if start == target || !map.is_passable(start) || !map.is_passable(target) {
        return (None, stats);
    }
    let penalty = ctx.penalty();

    struct Node {
        at: Loc,
        parent: Option<usize>,
    }
    let mut nodes: Vec<Node> = vec![Node { at: start, parent: None }];
    // Best g per (cell, parent cell) pair; `None` parent is the start state.
    let mut best: HashMap<(Loc, Option<Loc>), u64> = HashMap::from([((start, None), 0)]);
    let mut expanded: HashMap<Loc, u8> = HashMap::new();
    let mut closed: std::collections::HashSet<(Loc, Option<Loc>)> = Default::default();
    let mut open = BinaryHeap::new();
    let mut seq: u64 = 0;
    open.push((Reverse(manhattan(start, target) as u64), 0u64, Reverse(seq), 0usize));

    while let Some((_, g, _, id)) = open.pop() {
        let at = nodes[id].at;
        let prev = nodes[id].parent.map(|p| nodes[p].at);
        if !closed.insert((at, prev)) {
            continue;
        }
        let count = expanded.entry(at).or_insert(0);
        if *count >= MAX_EXPANSIONS_PER_CELL {
            continue;
        }
        *count += 1;
        stats.expansions += 1;
        stats.max_expansions_per_cell = stats.max_expansions_per_cell.max(*count);

        if at == target {
            let mut locs = vec![at];
            let mut cur = id;
            while let Some(p) = nodes[cur].parent {
                locs.push(nodes[p].at);
                cur = p;
            }
            locs.reverse();
            match finish_path(ctx, cache, locs) {
                Some(pi) => return (Some(pi), stats),
                None => continue,
            }
        }

        for next in map.adjacent(at) {
            if Some(next) == prev {
                continue;
            }
            let target_cost = if next != target && ctx.all_targets.contains(&next) { penalty } else { 0 };
            if target_cost > 0 && !ctx.mode.target_crossing() {
                continue;
            }
            let Admit::Yes { extra } = admit(ctx, cache, prev, at, next, target) else { continue };
            let ng = g + 1 + extra + target_cost;
            let key = (next, Some(at));
            if best.get(&key).is_some_and(|&b| b <= ng) {
                continue;
            }
            best.insert(key, ng);
            nodes.push(Node { at: next, parent: Some(id) });
            seq += 1;
            let f = ng + manhattan(next, target) as u64;
            open.push((Reverse(f), ng, Reverse(seq), nodes.len() - 1));
        }
    }
    (None, stats)
}

fn admit(ctx: &PlanContext<'_>, cache: &mut OmegaCache, prev: Option<Loc>, at: Loc, next: Loc, target: Loc) -> Admit {
    let Some(prev) = prev else { return Admit::Yes { extra: 0 } };
    if next == target {
        return Admit::Yes { extra: 0 };
    }
    match triple_link(ctx, cache, Triple::new(prev, at, next), target) {
        Some((TripleLink::Omega(_), crosses)) => Admit::Yes { extra: if crosses { ctx.penalty() } else { 0 } },
        Some((TripleLink::Tunnel, _)) => Admit::Yes { extra: 0 },
        _ => Admit::No,
    }
}

/// Cover for an interior triple. The flag is set when the alternate path
/// had to run through a foreign target.
fn triple_link(
    ctx: &PlanContext<'_>,
    cache: &mut OmegaCache,
    t: Triple,
    own_target: Loc,
) -> Option<(TripleLink, bool)> {
    if let Some(p) = cache.get_or_compute(ctx.map, t, ctx.all_targets) {
        return Some((TripleLink::Omega(p), false));
    }
    if ctx.mode.target_crossing() {
        let open = Arc::new(AvoidSet::new());
        if let Some(p) = cache.get_or_compute(ctx.map, t, &open) {
            if !p.contains(own_target) {
                return Some((TripleLink::Omega(p), true));
            }
        }
    }
    if ctx.mode.tunnels() && [t.a, t.mid, t.b].iter().any(|l| ctx.map.is_single_width(*l)) {
        return Some((TripleLink::Tunnel, false));
    }
    None
}

fn finish_path(ctx: &PlanContext<'_>, cache: &mut OmegaCache, locs: Vec<Loc>) -> Option<PiPath> {
    let unique: BTreeSet<Loc> = locs.iter().copied().collect();
    if unique.len() != locs.len() {
        // The pair-space search may loop back through a cell to change
        // direction; such routes cannot be followed by position lookup.
        return None;
    }
    let k = locs.len() - 1;
    let target = locs[k];
    let mut links = vec![TripleLink::Exempt; locs.len()];
    for i in 1..k.saturating_sub(1) {
        let t = Triple::new(locs[i - 1], locs[i], locs[i + 1]);
        links[i] = triple_link(ctx, cache, t, target).map(|(l, _)| l)?;
    }
    let mut crossed = BTreeSet::new();
    let foreign = |l: &Loc| *l != target && ctx.all_targets.contains(l);
    // Starting on a foreign target is leaving it, not crossing it.
    crossed.extend(locs[1..].iter().filter(|l| foreign(l)));
    for link in &links {
        if let TripleLink::Omega(p) = link {
            crossed.extend(p.locs.iter().filter(|l| foreign(l)));
        }
    }
    Some(PiPath::new(locs, links, crossed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixtures::*;

    fn l(x: u32, y: u32) -> Loc {
        Loc::new(x, y)
    }

    fn targets(ts: &[Loc]) -> Arc<AvoidSet> {
        Arc::new(ts.iter().copied().collect())
    }

    fn plan(map: &GridMap, start: Loc, target: Loc, all: &[Loc], mode: Mode) -> (Option<PiPath>, SearchStats) {
        let all = targets(all);
        let ctx = PlanContext { map, all_targets: &all, mode };
        compute_pi(&ctx, &mut OmegaCache::new(), start, target)
    }

    #[test]
    fn manhattan_examples() {
        assert_eq!(manhattan(l(0, 0), l(0, 0)), 0);
        assert_eq!(manhattan(l(0, 0), l(4, 4)), 8);
        assert_eq!(manhattan(l(1, 3), l(3, 0)), 5);
    }

    #[test]
    fn open_grid_diagonal_route() {
        let (p, stats) = plan(&open5(), l(0, 0), l(4, 4), &[l(4, 4)], Mode::Basic);
        let p = p.unwrap();
        assert_eq!(p.len(), 8);
        assert!((1..p.len() - 1).all(|i| p.omega(i).is_some()));
        assert!(p.crossed_targets.is_empty());
        assert!(stats.max_expansions_per_cell <= 3);
    }

    #[test]
    fn corridor_is_not_found_in_basic() {
        assert!(plan(&corr7(), l(0, 0), l(6, 0), &[l(6, 0)], Mode::Basic).0.is_none());
    }

    #[test]
    fn bridge_route_in_ac_mode_marks_tunnel_triples() {
        let map = bridge();
        let (p, _) = plan(&map, l(0, 1), l(8, 1), &[l(8, 1)], Mode::Ac);
        let p = p.unwrap();
        assert_eq!(p.len(), 8);
        let tunnel_cells: Vec<Loc> = (0..p.locs.len()).filter(|&i| p.is_tunnel(i)).map(|i| p.locs[i]).collect();
        // The three bridge cells plus the two room cells at its mouths have
        // no detour.
        assert_eq!(tunnel_cells, vec![l(2, 1), l(3, 1), l(4, 1), l(5, 1), l(6, 1)]);
        assert!(plan(&map, l(0, 1), l(8, 1), &[l(8, 1)], Mode::Basic).0.is_none());
    }

    #[test]
    fn adjacent_target_needs_no_triple() {
        let (p, _) = plan(&corr7(), l(2, 0), l(3, 0), &[l(3, 0)], Mode::Basic);
        assert_eq!(p.unwrap().locs, vec![l(2, 0), l(3, 0)]);
        let (p, _) = plan(&corr7(), l(2, 0), l(4, 0), &[l(4, 0)], Mode::Basic);
        assert_eq!(p.unwrap().len(), 2);
    }

    #[test]
    fn foreign_target_blocks_basic_but_not_ti() {
        // A 3-wide strip whose middle column is a wall of targets except one
        // cell; u must cross target (2,1) of another unit.
        let map = GridMap::from_rows(&[".....", "..@..", ".....", "..@..", "....."]).unwrap();
        let all = [l(4, 2), l(2, 0), l(2, 2), l(2, 4)];
        assert!(plan(&map, l(0, 2), l(4, 2), &all, Mode::Basic).0.is_none());
        let (p, _) = plan(&map, l(0, 2), l(4, 2), &all, Mode::Ti);
        let p = p.unwrap();
        assert!(!p.crossed_targets.is_empty());
    }

    #[test]
    fn ti_prefers_target_free_routes() {
        let map = open5();
        let all = [l(4, 0), l(2, 0)];
        let (p, _) = plan(&map, l(0, 0), l(4, 0), &all, Mode::Ti);
        let p = p.unwrap();
        assert!(p.crossed_targets.is_empty());
        assert!(!p.locs.contains(&l(2, 0)));
    }

    #[test]
    fn route_is_never_shorter_than_manhattan() {
        let map = bridge();
        for s in map.open_locs() {
            for t in map.open_locs() {
                if s == t {
                    continue;
                }
                if let (Some(p), _) = plan(&map, s, t, &[t], Mode::TiAc) {
                    assert!(p.len() as u32 >= manhattan(s, t));
                    assert!(p.locs.windows(2).all(|w| w[0].is_adjacent(w[1])));
                }
            }
        }
    }
}
