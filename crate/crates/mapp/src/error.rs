use std::fmt;

use thiserror::Error;

use crate::grid::Loc;

/// A problem found while reading one of the text formats.
///
/// `line` is 1-based; 0 means the input ended early.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "unexpected end of input: {}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("cell {0} is not passable")]
    NotPassable(Loc),
}

/// Broken engine invariant. Seeing one of these means a bug, not bad input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("precedence relation has a cycle through unit {0}")]
    PrecedenceCycle(usize),
    #[error("blank travel plan became invalid at {0}")]
    StalePlan(Loc),
    #[error("repositioning could not restore a well-positioned state")]
    RepositionFailed,
    #[error("undo of unit {unit} into {to} is blocked")]
    UndoBlocked { unit: usize, to: Loc },
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("cannot place {units} units on a map with {cells} open cells")]
    TooManyUnits { units: usize, cells: usize },
}

/// Top-level error for the file-driven commands.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Invalid(String),
}
