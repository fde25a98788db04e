//! Alternate paths around the middle cell of a location triple.
//!
//! An alternate path for `(a, mid, b)` connects `a` and `b` without
//! touching `mid`. Every path search and every blank move in the engine runs
//! along one of these, so they are cached per map and shared by all units
//! and, when the cache is persisted, by later instances on the same map.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::ParseError;
use crate::grid::{GridMap, Loc};

/// Cells an alternate path must not touch besides the middle cell.
pub type AvoidSet = BTreeSet<Loc>;

/// Three consecutive cells `a -> mid -> b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub a: Loc,
    pub mid: Loc,
    pub b: Loc,
}

impl Triple {
    pub fn new(a: Loc, mid: Loc, b: Loc) -> Self {
        Triple { a, mid, b }
    }

    /// Endpoint order normalised so `(a,mid,b)` and `(b,mid,a)` share a key.
    pub fn canonical(self) -> Triple {
        if self.b < self.a {
            Triple { a: self.b, mid: self.mid, b: self.a }
        } else {
            self
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.a.is_adjacent(self.mid) && self.mid.is_adjacent(self.b) && self.a != self.b
    }
}

/// A detour from `a` to `b` that avoids `mid`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaPath {
    pub locs: Vec<Loc>,
}

impl OmegaPath {
    /// Edge count.
    pub fn len(&self) -> usize {
        self.locs.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.locs.len() <= 1
    }

    pub fn first(&self) -> Loc {
        self.locs[0]
    }

    pub fn last(&self) -> Loc {
        *self.locs.last().expect("non-empty path")
    }

    pub fn reversed(&self) -> OmegaPath {
        OmegaPath { locs: self.locs.iter().rev().copied().collect() }
    }

    pub fn contains(&self, l: Loc) -> bool {
        self.locs.contains(&l)
    }
}

/// All triples starting at `l` that end two moves away: one per straight
/// destination, up to two per diagonal destination (one per intermediate
/// cell). At most 12 on an open grid.
pub fn enumerate_triples(map: &GridMap, l: Loc) -> Vec<Triple> {
    if !map.is_passable(l) {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(12);
    for mid in map.adjacent(l) {
        for b in map.adjacent(mid) {
            if b != l {
                out.push(Triple::new(l, mid, b));
            }
        }
    }
    out
}

/// Shortest path from `t.a` to `t.b` that avoids `t.mid`, blocked cells and
/// every cell in `avoided`. Returns `None` when no such path exists,
/// including when an endpoint is itself avoided.
pub fn compute_omega(map: &GridMap, t: Triple, avoided: &AvoidSet) -> Option<OmegaPath> {
    compute_omega_counted(map, t, avoided, &mut 0)
}

fn compute_omega_counted(map: &GridMap, t: Triple, avoided: &AvoidSet, expansions: &mut u64) -> Option<OmegaPath> {
    if avoided.contains(&t.a) || avoided.contains(&t.b) || !map.is_passable(t.a) || !map.is_passable(t.b) {
        return None;
    }
    let mut parent: HashMap<Loc, Loc> = HashMap::new();
    let mut queue = VecDeque::from([t.a]);
    parent.insert(t.a, t.a);
    while let Some(cur) = queue.pop_front() {
        *expansions += 1;
        if cur == t.b {
            let mut locs = vec![cur];
            let mut at = cur;
            while at != t.a {
                at = parent[&at];
                locs.push(at);
            }
            locs.reverse();
            return Some(OmegaPath { locs });
        }
        for n in map.adjacent(cur) {
            if n == t.mid || avoided.contains(&n) || parent.contains_key(&n) {
                continue;
            }
            parent.insert(n, cur);
            queue.push_back(n);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Slot {
    /// Computed with an empty avoid set; never goes stale.
    Open,
    /// Computed against the targets of some instance.
    Avoiding,
}

#[derive(Debug, Clone)]
struct Entry {
    path: Option<Arc<OmegaPath>>,
    avoided: Arc<AvoidSet>,
}

impl Entry {
    /// Whether the stored answer still holds for `avoided`.
    fn valid_for(&self, avoided: &AvoidSet) -> bool {
        match &self.path {
            Some(p) => p.locs.iter().all(|l| !avoided.contains(l)),
            None => self.avoided.is_subset(avoided),
        }
    }
}

/// Per-map store of alternate paths keyed by canonical triple.
#[derive(Debug, Clone, Default)]
pub struct OmegaCache {
    map_fingerprint: Option<u64>,
    entries: BTreeMap<(Triple, Slot), Entry>,
    searched: HashSet<Triple>,
    searches: u64,
    expansions: u64,
    lambda_observed: usize,
}

impl OmegaCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the alternate path for `t`, oriented from `t.a` to `t.b`.
    ///
    /// A cached path is reused when none of its cells is in `avoided`; a
    /// cached `None` is reused when it was computed against a subset of
    /// `avoided`. Anything else is recomputed and replaces the entry.
    pub fn get_or_compute(&mut self, map: &GridMap, t: Triple, avoided: &Arc<AvoidSet>) -> Option<OmegaPath> {
        self.bind(map);
        let key = t.canonical();
        let slot = if avoided.is_empty() { Slot::Open } else { Slot::Avoiding };
        let path = match self.entries.get(&(key, slot)) {
            Some(e) if e.valid_for(avoided) => e.path.clone(),
            _ => {
                self.searched.insert(key);
                self.searches += 1;
                let found = compute_omega_counted(map, key, avoided, &mut self.expansions).map(Arc::new);
                if let Some(p) = &found {
                    self.lambda_observed = self.lambda_observed.max(p.len());
                }
                self.entries.insert((key, slot), Entry { path: found.clone(), avoided: Arc::clone(avoided) });
                found
            }
        }?;
        Some(if key == t { (*path).clone() } else { path.reversed() })
    }

    fn bind(&mut self, map: &GridMap) {
        let fp = map.fingerprint();
        match self.map_fingerprint {
            Some(existing) if existing == fp => {}
            Some(_) => {
                // Different map: nothing stored is meaningful any more.
                *self = OmegaCache::default();
                self.map_fingerprint = Some(fp);
            }
            None => self.map_fingerprint = Some(fp),
        }
    }

    /// Distinct canonical triples that have ever been searched.
    pub fn searched_triples(&self) -> usize {
        self.searched.len()
    }

    /// Total breadth-first searches run (cache misses).
    pub fn searches(&self) -> u64 {
        self.searches
    }

    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    /// Longest stored alternate path.
    pub fn lambda_observed(&self) -> usize {
        self.lambda_observed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the cache in the versioned text format:
    ///
    /// ```text
    /// mapp-omega-cache 1
    /// map <fingerprint-hex>
    /// avoid <id> <x,y>...
    /// entry <ax,ay> <mx,my> <bx,by> open|avoid <avoid-id> NONE|<x,y>...
    /// ```
    pub fn save<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "mapp-omega-cache 1")?;
        writeln!(w, "map {:016x}", self.map_fingerprint.unwrap_or(0))?;
        let mut ids: BTreeMap<&AvoidSet, usize> = BTreeMap::new();
        for e in self.entries.values() {
            let next = ids.len();
            if let std::collections::btree_map::Entry::Vacant(v) = ids.entry(&*e.avoided) {
                v.insert(next);
                write!(w, "avoid {next}")?;
                for l in e.avoided.iter() {
                    write!(w, " {},{}", l.x, l.y)?;
                }
                writeln!(w)?;
            }
        }
        for ((t, slot), e) in &self.entries {
            let slot = match slot {
                Slot::Open => "open",
                Slot::Avoiding => "avoid",
            };
            write!(
                w,
                "entry {},{} {},{} {},{} {slot} {}",
                t.a.x, t.a.y, t.mid.x, t.mid.y, t.b.x, t.b.y, ids[&*e.avoided]
            )?;
            match &e.path {
                None => write!(w, " NONE")?,
                Some(p) => {
                    for l in &p.locs {
                        write!(w, " {},{}", l.x, l.y)?;
                    }
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads a cache written by [`OmegaCache::save`]. A cache saved for a
    /// different map layout loads as empty.
    pub fn load<R: BufRead>(r: R, map: &GridMap) -> Result<Self, ParseError> {
        let mut cache = OmegaCache::new();
        cache.map_fingerprint = Some(map.fingerprint());
        let mut avoid_sets: HashMap<usize, Arc<AvoidSet>> = HashMap::new();
        let mut matches_map = true;
        for (i, line) in r.lines().enumerate() {
            let no = i + 1;
            let line = line.map_err(|e| ParseError::new(no, e.to_string()))?;
            let mut parts = line.split_whitespace();
            let Some(tag) = parts.next() else { continue };
            match (no, tag) {
                (1, "mapp-omega-cache") => {
                    if parts.next() != Some("1") {
                        return Err(ParseError::new(no, "unsupported cache version"));
                    }
                }
                (1, _) => return Err(ParseError::new(no, "missing `mapp-omega-cache` header")),
                (_, "map") => {
                    let fp = parts.next().and_then(|s| u64::from_str_radix(s, 16).ok());
                    let fp = fp.ok_or_else(|| ParseError::new(no, "bad map fingerprint"))?;
                    matches_map = fp == map.fingerprint();
                }
                (_, "avoid") => {
                    let id = parse_usize(parts.next(), no)?;
                    let set = parts.map(|p| parse_loc(p, no)).collect::<Result<AvoidSet, _>>()?;
                    avoid_sets.insert(id, Arc::new(set));
                }
                (_, "entry") if !matches_map => {}
                (_, "entry") => {
                    let a = parse_loc(parts.next().unwrap_or(""), no)?;
                    let mid = parse_loc(parts.next().unwrap_or(""), no)?;
                    let b = parse_loc(parts.next().unwrap_or(""), no)?;
                    let slot = match parts.next() {
                        Some("open") => Slot::Open,
                        Some("avoid") => Slot::Avoiding,
                        other => return Err(ParseError::new(no, format!("bad slot {other:?}"))),
                    };
                    let id = parse_usize(parts.next(), no)?;
                    let avoided = avoid_sets
                        .get(&id)
                        .cloned()
                        .ok_or_else(|| ParseError::new(no, format!("unknown avoid set {id}")))?;
                    let rest: Vec<&str> = parts.collect();
                    let path = if rest == ["NONE"] {
                        None
                    } else {
                        let locs = rest.iter().map(|p| parse_loc(p, no)).collect::<Result<Vec<_>, _>>()?;
                        Some(Arc::new(OmegaPath { locs }))
                    };
                    let t = Triple::new(a, mid, b);
                    if let Some(p) = &path {
                        if !valid_omega(map, t, p) {
                            return Err(ParseError::new(no, "stored path is not a valid alternate path"));
                        }
                        cache.lambda_observed = cache.lambda_observed.max(p.len());
                    }
                    cache.entries.insert((t.canonical(), slot), Entry { path, avoided });
                }
                (_, other) => return Err(ParseError::new(no, format!("unknown record {other:?}"))),
            }
        }
        if !matches_map {
            let mut fresh = OmegaCache::new();
            fresh.map_fingerprint = Some(map.fingerprint());
            return Ok(fresh);
        }
        Ok(cache)
    }
}

/// Checks the structural contract of an alternate path for `t`.
pub fn valid_omega(map: &GridMap, t: Triple, p: &OmegaPath) -> bool {
    let ends_ok = (p.first() == t.a && p.last() == t.b) || (p.first() == t.b && p.last() == t.a);
    ends_ok
        && !p.contains(t.mid)
        && p.locs.iter().all(|l| map.is_passable(*l))
        && p.locs.windows(2).all(|w| w[0].is_adjacent(w[1]))
}

fn parse_usize(s: Option<&str>, line: usize) -> Result<usize, ParseError> {
    s.and_then(|s| s.parse().ok()).ok_or_else(|| ParseError::new(line, "expected an integer"))
}

fn parse_loc(s: &str, line: usize) -> Result<Loc, ParseError> {
    let (x, y) = s.split_once(',').ok_or_else(|| ParseError::new(line, format!("bad coordinate {s:?}")))?;
    match (x.parse(), y.parse()) {
        (Ok(x), Ok(y)) => Ok(Loc::new(x, y)),
        _ => Err(ParseError::new(line, format!("bad coordinate {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixtures::*;

    fn l(x: u32, y: u32) -> Loc {
        Loc::new(x, y)
    }

    fn none() -> Arc<AvoidSet> {
        Arc::new(AvoidSet::new())
    }

    #[test]
    fn interior_cell_has_twelve_triples() {
        let ts = enumerate_triples(&open5(), l(2, 2));
        assert_eq!(ts.len(), 12);
        assert!(ts.iter().all(|t| t.is_well_formed() && t.a == l(2, 2)));
        let distinct: BTreeSet<_> = ts.iter().map(|t| (t.mid, t.b)).collect();
        assert_eq!(distinct.len(), 12);
    }

    #[test]
    fn corner_cell_triples() {
        let ts: BTreeSet<_> = enumerate_triples(&open5(), l(0, 0)).into_iter().collect();
        let o = l(0, 0);
        let expected: BTreeSet<_> = [
            Triple::new(o, l(1, 0), l(2, 0)),
            Triple::new(o, l(0, 1), l(0, 2)),
            Triple::new(o, l(1, 0), l(1, 1)),
            Triple::new(o, l(0, 1), l(1, 1)),
        ]
        .into_iter()
        .collect();
        assert_eq!(ts, expected);
    }

    #[test]
    fn corridor_triples_are_straight() {
        let ts = enumerate_triples(&corr7(), l(3, 0));
        assert_eq!(ts, vec![Triple::new(l(3, 0), l(4, 0), l(5, 0)), Triple::new(l(3, 0), l(2, 0), l(1, 0))]);
    }

    #[test]
    fn detour_around_one_cell() {
        let p = compute_omega(&open5(), Triple::new(l(1, 2), l(2, 2), l(3, 2)), &AvoidSet::new()).unwrap();
        assert_eq!(p.locs, vec![l(1, 2), l(1, 1), l(2, 1), l(3, 1), l(3, 2)]);
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn diagonal_detour_uses_other_intermediate() {
        let p = compute_omega(&open5(), Triple::new(l(2, 2), l(2, 1), l(3, 1)), &AvoidSet::new()).unwrap();
        assert_eq!(p.locs, vec![l(2, 2), l(3, 2), l(3, 1)]);
    }

    #[test]
    fn corridor_has_no_detour() {
        assert!(compute_omega(&corr7(), Triple::new(l(1, 0), l(2, 0), l(3, 0)), &AvoidSet::new()).is_none());
    }

    #[test]
    fn avoided_endpoint_means_none() {
        let avoid: AvoidSet = [l(3, 2)].into_iter().collect();
        assert!(compute_omega(&open5(), Triple::new(l(1, 2), l(2, 2), l(3, 2)), &avoid).is_none());
    }

    #[test]
    fn cache_hit_does_not_search() {
        let map = open5();
        let mut cache = OmegaCache::new();
        let t = Triple::new(l(1, 2), l(2, 2), l(3, 2));
        let first = cache.get_or_compute(&map, t, &none());
        let searches = cache.searches();
        let second = cache.get_or_compute(&map, t, &none());
        assert_eq!(first, second);
        assert_eq!(cache.searches(), searches);
    }

    #[test]
    fn reverse_triple_shares_entry() {
        let map = open5();
        let mut cache = OmegaCache::new();
        let t = Triple::new(l(1, 2), l(2, 2), l(3, 2));
        let fwd = cache.get_or_compute(&map, t, &none()).unwrap();
        let rev = cache.get_or_compute(&map, Triple::new(t.b, t.mid, t.a), &none()).unwrap();
        assert_eq!(cache.searches(), 1);
        assert_eq!(rev, fwd.reversed());
        assert_eq!(cache.searched_triples(), 1);
    }

    #[test]
    fn stale_entry_is_recomputed_around_new_target() {
        let map = open5();
        let mut cache = OmegaCache::new();
        let t = Triple::new(l(1, 2), l(2, 2), l(3, 2));
        let first_targets = Arc::new([l(4, 4)].into_iter().collect::<AvoidSet>());
        let p = cache.get_or_compute(&map, t, &first_targets).unwrap();
        assert!(p.contains(l(2, 1)));
        // Same targets again: hit.
        cache.get_or_compute(&map, t, &first_targets).unwrap();
        assert_eq!(cache.searches(), 1);
        // A new instance whose target lies on the cached path.
        let second_targets = Arc::new([l(2, 1)].into_iter().collect::<AvoidSet>());
        let q = cache.get_or_compute(&map, t, &second_targets).unwrap();
        assert_eq!(cache.searches(), 2);
        assert!(!q.contains(l(2, 1)));
        assert_eq!(q.locs, vec![l(1, 2), l(1, 3), l(2, 3), l(3, 3), l(3, 2)]);
    }

    #[test]
    fn cached_none_is_reused_only_for_supersets() {
        let map = corr7();
        let mut cache = OmegaCache::new();
        let t = Triple::new(l(1, 0), l(2, 0), l(3, 0));
        let a = Arc::new([l(6, 0)].into_iter().collect::<AvoidSet>());
        assert!(cache.get_or_compute(&map, t, &a).is_none());
        let b = Arc::new([l(6, 0), l(0, 0)].into_iter().collect::<AvoidSet>());
        assert!(cache.get_or_compute(&map, t, &b).is_none());
        assert_eq!(cache.searches(), 1);
        let c = Arc::new([l(0, 0)].into_iter().collect::<AvoidSet>());
        assert!(cache.get_or_compute(&map, t, &c).is_none());
        assert_eq!(cache.searches(), 2);
    }

    #[test]
    fn save_and_load_preserve_entries() {
        let map = bridge();
        let mut cache = OmegaCache::new();
        let targets = Arc::new([l(8, 2)].into_iter().collect::<AvoidSet>());
        for start in map.open_locs().collect::<Vec<_>>() {
            for t in enumerate_triples(&map, start) {
                cache.get_or_compute(&map, t, &targets);
            }
        }
        let mut buf = Vec::new();
        cache.save(&mut buf).unwrap();
        let mut loaded = OmegaCache::load(&buf[..], &map).unwrap();
        assert_eq!(loaded.len(), cache.len());
        let before = loaded.searches();
        for start in map.open_locs().collect::<Vec<_>>() {
            for t in enumerate_triples(&map, start) {
                assert_eq!(loaded.get_or_compute(&map, t, &targets), cache.get_or_compute(&map, t, &targets));
            }
        }
        assert_eq!(loaded.searches(), before);
    }

    #[test]
    fn cache_for_other_map_loads_empty() {
        let mut cache = OmegaCache::new();
        cache.get_or_compute(&open5(), Triple::new(l(1, 2), l(2, 2), l(3, 2)), &none());
        let mut buf = Vec::new();
        cache.save(&mut buf).unwrap();
        assert!(OmegaCache::load(&buf[..], &corr7()).unwrap().is_empty());
    }
}
