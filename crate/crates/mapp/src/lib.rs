//! Tractable multi-agent path planning on 4-connected grids.
//!
//! Units are classified into classes for which the solver is guaranteed to
//! deliver every unit to its target. Each unit gets a fixed route whose
//! consecutive cell triples all have a detour (an alternate path); the solver
//! then advances units in priority order and, when a unit is blocked, slides
//! a blank toward it along the detour, sliding-tile style. Moves that knock
//! lower-priority units off their routes are undone before the next round.
//!
//! Pipeline: [`grid`] → [`altpaths`] → [`pipaths`] → [`classify`] →
//! [`engine`], with [`verify`] as an independent checker and [`scenario`]
//! for instance files and benchmark output.

pub mod altpaths;
pub mod classify;
pub mod cli;
pub mod engine;
pub mod error;
pub mod grid;
mod hash;
pub mod pipaths;
pub mod scenario;
pub mod trace;
pub mod verify;

pub use altpaths::{OmegaCache, OmegaPath, Triple};
pub use classify::{classify_instance, ClassLabel, Classification, UnitSpec};
pub use engine::{solve, RepositionStrategy, Solution, SolveOptions};
pub use error::{EngineError, Error, ParseError};
pub use grid::{GridMap, Loc};
pub use pipaths::{Mode, PiPath};
pub use scenario::Scenario;
