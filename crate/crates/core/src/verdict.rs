//! Answers shared by every disclosure algorithm.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{Binding, EngineError, TraceStep};
use crate::instance::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum VerdictKind {
    #[serde(rename = "DISCLOSED")]
    Disclosed,
    #[serde(rename = "NOT_DISCLOSED")]
    NotDisclosed,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl VerdictKind {
    pub fn label(self) -> &'static str {
        match self {
            VerdictKind::Disclosed => "DISCLOSED",
            VerdictKind::NotDisclosed => "NOT_DISCLOSED",
            VerdictKind::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The policy matched; `witness` binds its variables.
    Disclosed { witness: Binding },
    /// Saturated without a match.
    NotDisclosed,
    Unknown(String),
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Disclosed { .. } => VerdictKind::Disclosed,
            Verdict::NotDisclosed => VerdictKind::NotDisclosed,
            Verdict::Unknown(_) => VerdictKind::Unknown,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub rounds: usize,
    pub facts: usize,
    /// Instance the verdict was read from, when the algorithm builds one.
    pub state: Option<Instance>,
    pub trace: Vec<TraceStep>,
}

impl Outcome {
    pub fn kind(&self) -> VerdictKind {
        self.verdict.kind()
    }

    pub fn bare(verdict: Verdict) -> Outcome {
        Outcome { verdict, rounds: 0, facts: 0, state: None, trace: Vec::new() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiscloseError {
    #[error("policy must be Boolean; boolify it first")]
    NonBoolean,
    #[error("policy mentions global predicate {0}")]
    NonSourcePolicy(String),
    #[error("{0}")]
    ClassMismatch(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
