//! Exact transition-table control systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One step of a table system: a successor state or leaving the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Successor {
    State(usize),
    Exit,
}

/// Control system on states `0..S` given by a table `(state, control) -> state | EXIT`.
///
/// The whole state set plays the role of the compact region; interior flags mark its
/// interior. EXIT is the only exterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteStateControlSystem {
    states: usize,
    controls: usize,
    table: Vec<Option<u32>>,
    interior: Vec<bool>,
    labels: Vec<String>,
    strongly_invariant: bool,
}

impl FiniteStateControlSystem {
    /// `table[s][u]` is the successor of state `s` under control `u` (`None` = EXIT).
    pub fn new(
        table: Vec<Vec<Option<usize>>>,
        interior: Vec<bool>,
        labels: Vec<String>,
    ) -> Result<Self> {
        let states = table.len();
        if states == 0 {
            return Err(Error::MalformedTable("no states".into()));
        }
        let controls = labels.len();
        if controls == 0 {
            return Err(Error::MalformedTable("no controls".into()));
        }
        if interior.len() != states {
            return Err(Error::MalformedTable(format!(
                "{} interior flags for {states} states",
                interior.len()
            )));
        }
        let mut flat = Vec::with_capacity(states * controls);
        for (s, row) in table.iter().enumerate() {
            if row.len() != controls {
                return Err(Error::MalformedTable(format!(
                    "row {s} has {} entries, expected {controls}",
                    row.len()
                )));
            }
            for &entry in row {
                match entry {
                    Some(t) if t >= states => {
                        return Err(Error::MalformedTable(format!(
                            "row {s} points to state {t} of {states}"
                        )))
                    }
                    Some(t) => flat.push(Some(t as u32)),
                    None => flat.push(None),
                }
            }
        }
        if !interior.iter().any(|&b| b) {
            return Err(Error::EmptyInterior);
        }
        let mut sys = Self {
            states,
            controls,
            table: flat,
            interior,
            labels,
            strongly_invariant: false,
        };
        sys.strongly_invariant = (0..states).all(|s| sys.invariance_witness(s).is_some());
        Ok(sys)
    }

    /// Same as [`new`](Self::new) with labels `u0, u1, ..`.
    pub fn with_default_labels(
        table: Vec<Vec<Option<usize>>>,
        interior: Vec<bool>,
    ) -> Result<Self> {
        let controls = table.first().map_or(0, |r| r.len());
        let labels = (0..controls).map(|i| format!("u{i}")).collect();
        Self::new(table, interior, labels)
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn control_count(&self) -> usize {
        self.controls
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_interior(&self, state: usize) -> bool {
        self.interior[state]
    }

    pub fn interior_flags(&self) -> &[bool] {
        &self.interior
    }

    pub fn is_strongly_invariant(&self) -> bool {
        self.strongly_invariant
    }

    pub fn successor(&self, state: usize, control: usize) -> Successor {
        match self.table[state * self.controls + control] {
            Some(t) => Successor::State(t as usize),
            None => Successor::Exit,
        }
    }

    /// Successor as an index when it is an interior state.
    #[inline]
    pub(crate) fn interior_successor(&self, state: usize, control: usize) -> Option<usize> {
        match self.table[state * self.controls + control] {
            Some(t) if self.interior[t as usize] => Some(t as usize),
            _ => None,
        }
    }

    /// First control whose successor is interior.
    pub fn invariance_witness(&self, state: usize) -> Option<usize> {
        (0..self.controls).find(|&u| self.interior_successor(state, u).is_some())
    }

    /// Table in nested form, `None` meaning EXIT.
    pub fn table(&self) -> Vec<Vec<Option<usize>>> {
        (0..self.states)
            .map(|s| {
                (0..self.controls)
                    .map(|u| self.table[s * self.controls + u].map(|t| t as usize))
                    .collect()
            })
            .collect()
    }

    /// Subsystem on `subset`, renumbered in increasing order; transitions leaving the
    /// subset become EXIT.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self> {
        let mut index = vec![None; self.states];
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for (k, &s) in sorted.iter().enumerate() {
            if s >= self.states {
                return Err(Error::MalformedTable(format!("state {s} out of range")));
            }
            index[s] = Some(k);
        }
        let table = sorted
            .iter()
            .map(|&s| {
                (0..self.controls)
                    .map(|u| match self.successor(s, u) {
                        Successor::State(t) => index[t],
                        Successor::Exit => None,
                    })
                    .collect()
            })
            .collect();
        let interior = sorted.iter().map(|&s| self.interior[s]).collect();
        Self::new(table, interior, self.labels.clone())
    }
}

/// The two-state reference system: `T(0,a)=0, T(0,b)=1, T(1,a)=0, T(1,b)=EXIT`,
/// both states interior.
pub fn m3_fixture() -> FiniteStateControlSystem {
    FiniteStateControlSystem::new(
        vec![vec![Some(0), Some(1)], vec![Some(0), None]],
        vec![true, true],
        vec!["a".into(), "b".into()],
    )
    .expect("fixture is well formed")
}
