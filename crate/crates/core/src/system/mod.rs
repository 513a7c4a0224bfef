//! Control systems, regions, alphabets and weights.

mod control;
mod finite;
pub mod linalg;
mod quantized;
mod region;

pub use control::{birkhoff_sum, ControlAlphabet, ControlWord, WeightFunction, WeightKind};
pub use finite::{m3_fixture, FiniteStateControlSystem, Successor};
pub use quantized::{ContinuousMap, QuantizedSystem, StepMap};
pub use region::{Grid, IntervalBox};

/// Either kind of system the engine can enumerate.
#[derive(Debug, Clone)]
pub enum ControlSystem {
    Finite(FiniteStateControlSystem),
    Quantized(QuantizedSystem),
}

impl ControlSystem {
    pub fn alphabet_len(&self) -> usize {
        match self {
            ControlSystem::Finite(s) => s.control_count(),
            ControlSystem::Quantized(q) => q.alphabet().len(),
        }
    }

    /// Number of states (table systems) or cells (gridded systems).
    pub fn universe_size(&self) -> usize {
        match self {
            ControlSystem::Finite(s) => s.state_count(),
            ControlSystem::Quantized(q) => q.grid().cell_count(),
        }
    }

    pub fn time_step(&self) -> f64 {
        match self {
            ControlSystem::Finite(_) => 1.0,
            ControlSystem::Quantized(q) => q.time_step(),
        }
    }

    pub fn is_strongly_invariant(&self) -> bool {
        match self {
            ControlSystem::Finite(s) => s.is_strongly_invariant(),
            ControlSystem::Quantized(q) => q.is_strongly_invariant(),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        match self {
            ControlSystem::Finite(s) => Some(s.labels()),
            ControlSystem::Quantized(_) => None,
        }
    }
}

impl From<FiniteStateControlSystem> for ControlSystem {
    fn from(s: FiniteStateControlSystem) -> Self {
        ControlSystem::Finite(s)
    }
}

impl From<QuantizedSystem> for ControlSystem {
    fn from(q: QuantizedSystem) -> Self {
        ControlSystem::Quantized(q)
    }
}
