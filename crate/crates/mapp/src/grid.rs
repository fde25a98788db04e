//! Grid maps, coordinates and 4-connected adjacency.
//!
//! Map files use the common grid-benchmark layout:
//!
//! ```text
//! type octile
//! height 3
//! width 4
//! map
//! ....
//! .@@.
//! ....
//! ```
//!
//! `.` and `G` are passable; `@`, `O`, `T` and `#` are blocked.

use std::fmt;

use crate::error::{GridError, ParseError};

/// A cell coordinate: `x` is the column, `y` the row, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Loc {
    pub x: u32,
    pub y: u32,
}

impl Loc {
    pub const fn new(x: u32, y: u32) -> Self {
        Loc { x, y }
    }

    /// Moves needed between two cells on an obstacle-free grid.
    pub fn manhattan(self, other: Loc) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn is_adjacent(self, other: Loc) -> bool {
        self.manhattan(other) == 1
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl From<(u32, u32)> for Loc {
    fn from((x, y): (u32, u32)) -> Self {
        Loc { x, y }
    }
}

/// Offsets in the fixed emission order N, E, S, W.
const DIRECTIONS: [(i64, i64); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

/// Immutable traversability grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: u32,
    height: u32,
    passable: Vec<bool>,
    open_cells: usize,
}

impl GridMap {
    /// Builds a map from row strings using the map-file cell alphabet.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, ParseError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().chars().count());
        let mut passable = Vec::with_capacity(width * height);
        for (row_no, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() != width {
                return Err(ParseError::new(
                    row_no + 1,
                    format!("row has {} cells, expected {width}", row.chars().count()),
                ));
            }
            for (col, ch) in row.chars().enumerate() {
                passable.push(cell_passable(ch).ok_or_else(|| {
                    ParseError::new(row_no + 1, format!("unknown cell character {ch:?} at column {}", col + 1))
                })?);
            }
        }
        Ok(Self::from_passable(width as u32, height as u32, passable))
    }

    /// A fully passable `width` x `height` map.
    pub fn open(width: u32, height: u32) -> Self {
        Self::from_passable(width, height, vec![true; (width * height) as usize])
    }

    pub fn from_passable(width: u32, height: u32, passable: Vec<bool>) -> Self {
        assert_eq!(passable.len(), (width as usize) * (height as usize));
        let open_cells = passable.iter().filter(|p| **p).count();
        GridMap { width, height, passable, open_cells }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of traversable cells (`m`).
    pub fn open_cells(&self) -> usize {
        self.open_cells
    }

    /// Total number of cells, passable or not.
    pub fn cell_count(&self) -> usize {
        self.passable.len()
    }

    pub fn in_bounds(&self, l: Loc) -> bool {
        l.x < self.width && l.y < self.height
    }

    pub fn is_passable(&self, l: Loc) -> bool {
        self.in_bounds(l) && self.passable[self.index(l)]
    }

    /// Row-major cell index. `l` must be in bounds.
    #[inline]
    pub fn index(&self, l: Loc) -> usize {
        l.y as usize * self.width as usize + l.x as usize
    }

    #[inline]
    pub fn loc(&self, index: usize) -> Loc {
        Loc::new((index % self.width as usize) as u32, (index / self.width as usize) as u32)
    }

    /// Passable cells in row-major order.
    pub fn open_locs(&self) -> impl Iterator<Item = Loc> + '_ {
        (0..self.passable.len()).filter(|&i| self.passable[i]).map(|i| self.loc(i))
    }

    /// Passable orthogonal neighbours of `l` in N, E, S, W order.
    pub fn neighbors(&self, l: Loc) -> Result<Vec<Loc>, GridError> {
        if !self.is_passable(l) {
            return Err(GridError::NotPassable(l));
        }
        Ok(self.adjacent(l).collect())
    }

    /// Unchecked variant of [`GridMap::neighbors`] for hot loops.
    pub fn adjacent(&self, l: Loc) -> impl Iterator<Item = Loc> + '_ {
        DIRECTIONS.iter().filter_map(move |&(dx, dy)| {
            let x = l.x as i64 + dx;
            let y = l.y as i64 + dy;
            if x < 0 || y < 0 {
                return None;
            }
            let n = Loc::new(x as u32, y as u32);
            self.is_passable(n).then_some(n)
        })
    }

    pub fn degree(&self, l: Loc) -> usize {
        self.adjacent(l).count()
    }

    /// A passable cell with at most two passable neighbours.
    pub fn is_single_width(&self, l: Loc) -> bool {
        self.is_passable(l) && self.degree(l) <= 2
    }

    /// Parses a map file.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let mut header = |key: &str| -> Result<(usize, String), ParseError> {
            let (no, line) = lines.next().ok_or_else(|| ParseError::new(0, format!("missing `{key}` header")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(ParseError::new(no, format!("expected `{key}` header, found {line:?}")));
            }
            Ok((no, parts.collect::<Vec<_>>().join(" ")))
        };
        header("type")?;
        let (hno, h) = header("height")?;
        let height: u32 = h.parse().map_err(|_| ParseError::new(hno, format!("bad height {h:?}")))?;
        let (wno, w) = header("width")?;
        let width: u32 = w.parse().map_err(|_| ParseError::new(wno, format!("bad width {w:?}")))?;
        header("map")?;

        let mut passable = Vec::with_capacity((width * height) as usize);
        for row in 0..height {
            let (no, line) = lines
                .next()
                .ok_or_else(|| ParseError::new(5 + row as usize, format!("expected {height} map rows, found {row}")))?;
            let count = line.chars().count();
            if count != width as usize {
                return Err(ParseError::new(no, format!("row has {count} cells, expected {width}")));
            }
            for (col, ch) in line.chars().enumerate() {
                let p = cell_passable(ch).ok_or_else(|| {
                    ParseError::new(no, format!("unknown cell character {ch:?} at column {}", col + 1))
                })?;
                passable.push(p);
            }
        }
        if let Some((no, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(ParseError::new(no, format!("unexpected trailing content {extra:?}")));
        }
        Ok(Self::from_passable(width, height, passable))
    }

    /// Canonical map-file text (`.` and `@` only).
    pub fn emit(&self) -> String {
        let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.is_passable(Loc::new(x, y)) { '.' } else { '@' });
            }
            out.push('\n');
        }
        out
    }

    /// Stable 64-bit digest of the layout, used to tie cache files to a map.
    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::hash::Fnv::new();
        h.write_u64(self.width as u64);
        h.write_u64(self.height as u64);
        for p in &self.passable {
            h.write_u64(*p as u64);
        }
        h.finish()
    }
}

fn cell_passable(ch: char) -> Option<bool> {
    match ch {
        '.' | 'G' => Some(true),
        '@' | 'O' | 'T' | '#' => Some(false),
        _ => None,
    }
}

/// Small maps used across tests and examples.
pub mod fixtures {
    use super::GridMap;

    /// 5x5, everything passable.
    pub fn open5() -> GridMap {
        GridMap::open(5, 5)
    }

    /// 1x7 corridor.
    pub fn corr7() -> GridMap {
        GridMap::open(7, 1)
    }

    /// Two 3x3 rooms joined by a single-width tunnel three cells long
    /// along the middle row (tunnel cells `(3,1)`, `(4,1)`, `(5,1)`).
    pub fn bridge() -> GridMap {
        GridMap::from_rows(&["...@@@...", ".........", "...@@@..."]).expect("valid fixture")
    }
}
