//! Feed / bend / rotate instruction programs.
//!
//! Feeds are millimetres of wire pushed through the nozzle. Bends and
//! rotates are signed degrees: a bend sweeps the peg within the current bend
//! plane, a rotate turns the bending head about the wire axis.

mod compile;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compile::{compile_path, BEND_EPS_DEG, NORMAL_EPS, ROTATE_EPS_DEG};
pub use text::{emit_text, parse_text};

pub const MAX_BEND_DEG: f64 = 180.0;
pub const MAX_ROTATE_DEG: f64 = 360.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstructionError {
    #[error("path needs at least 2 vertices, got {0}")]
    PathTooShort(usize),
    #[error("consecutive path vertices {0} and {1} coincide")]
    ZeroLengthEdge(usize, usize),
    #[error("path step {0} -> {1} is not an edge of the graph")]
    NotAnEdge(usize, usize),
    #[error("path vertex {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("line {line}: unknown command '{command}'")]
    UnknownCommand { line: usize, command: String },
    #[error("line {line}: magnitude '{text}' is not a number")]
    BadMagnitude { line: usize, text: String },
    #[error("{kind} magnitude {value} is out of range")]
    OutOfRange { kind: Kind, value: f64 },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<InstructionError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "F")]
    Feed,
    #[serde(rename = "B")]
    Bend,
    #[serde(rename = "R")]
    Rotate,
}

impl Kind {
    pub fn letter(self) -> char {
        match self {
            Kind::Feed => 'F',
            Kind::Bend => 'B',
            Kind::Rotate => 'R',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "F" => Some(Kind::Feed),
            "B" => Some(Kind::Bend),
            "R" => Some(Kind::Rotate),
            _ => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Kind::Feed => "feed",
            Kind::Bend => "bend",
            Kind::Rotate => "rotate",
        };
        f.write_str(name)
    }
}

/// One machine-level command. Serialized as `{"kind": "F", "magnitude": 35.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "magnitude")]
pub enum Instruction {
    #[serde(rename = "F")]
    Feed(f64),
    #[serde(rename = "B")]
    Bend(f64),
    #[serde(rename = "R")]
    Rotate(f64),
}

impl Instruction {
    /// Builds an instruction, rejecting magnitudes outside the command's range.
    pub fn new(kind: Kind, magnitude: f64) -> Result<Self, InstructionError> {
        let ins = match kind {
            Kind::Feed => Instruction::Feed(magnitude),
            Kind::Bend => Instruction::Bend(magnitude),
            Kind::Rotate => Instruction::Rotate(magnitude),
        };
        ins.validate()?;
        Ok(ins)
    }

    pub fn kind(&self) -> Kind {
        match self {
            Instruction::Feed(_) => Kind::Feed,
            Instruction::Bend(_) => Kind::Bend,
            Instruction::Rotate(_) => Kind::Rotate,
        }
    }

    pub fn magnitude(&self) -> f64 {
        match *self {
            Instruction::Feed(m) | Instruction::Bend(m) | Instruction::Rotate(m) => m,
        }
    }

    pub fn validate(&self) -> Result<(), InstructionError> {
        let m = self.magnitude();
        let ok = m.is_finite()
            && match self {
                Instruction::Feed(_) => m > 0.0,
                Instruction::Bend(_) => m.abs() <= MAX_BEND_DEG,
                Instruction::Rotate(_) => m.abs() <= MAX_ROTATE_DEG,
            };
        if ok {
            Ok(())
        } else {
            Err(InstructionError::OutOfRange {
                kind: self.kind(),
                value: m,
            })
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:.4}", self.kind().letter(), self.magnitude())
    }
}

/// Ordered instruction list plus provenance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstructionProgram {
    pub instructions: Vec<Instruction>,
    /// Content hash of the graph this was compiled from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
    /// Set once feed and bend compensation have been applied.
    #[serde(default)]
    pub error_corrected: bool,
}

impl InstructionProgram {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        Self {
            instructions,
            source_hash: None,
            error_corrected: false,
        }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Instruction> {
        self.instructions.iter()
    }

    /// Sum of all feed lengths, i.e. the wire consumed.
    pub fn total_feed(&self) -> f64 {
        self.iter()
            .filter_map(|i| match i {
                Instruction::Feed(d) => Some(*d),
                _ => None,
            })
            .sum()
    }

    /// Whether the first instruction advances the wire, as fabrication requires.
    pub fn starts_with_feed(&self) -> bool {
        matches!(self.instructions.first(), None | Some(Instruction::Feed(_)))
    }
}

impl FromIterator<Instruction> for InstructionProgram {
    fn from_iter<T: IntoIterator<Item = Instruction>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}
