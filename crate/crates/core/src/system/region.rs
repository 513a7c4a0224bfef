//! Axis-aligned boxes and uniform grids on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Product of closed intervals `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidRegion(format!(
                "bounds have dimensions {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::InvalidRegion(format!(
                    "axis {i}: [{l}, {h}] is not a proper interval"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn from_intervals(intervals: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            intervals.iter().map(|p| p.0).collect(),
            intervals.iter().map(|p| p.1).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (h - l))
            .collect()
    }

    pub fn min_half_width(&self) -> f64 {
        self.half_widths().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Box shrunk by `delta * scale[i]` on both sides of axis `i`.
    pub fn shrink_scaled(&self, delta: f64, scale: &[f64]) -> Result<Self> {
        let limit = self
            .half_widths()
            .iter()
            .zip(scale)
            .map(|(h, s)| h / s)
            .fold(f64::INFINITY, f64::min);
        if !(delta > 0.0 && delta < limit) {
            return Err(Error::InadmissibleMargin {
                margin: delta,
                limit,
            });
        }
        Ok(Self {
            lo: self
                .lo
                .iter()
                .zip(scale)
                .map(|(l, s)| l + delta * s)
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(scale)
                .map(|(h, s)| h - delta * s)
                .collect(),
        })
    }

    pub fn shrink(&self, delta: f64) -> Result<Self> {
        self.shrink_scaled(delta, &vec![1.0; self.dim()])
    }

    /// Box enlarged by `eps * scale[i]` on both sides of axis `i`.
    pub fn expand_scaled(&self, eps: f64, scale: &[f64]) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InadmissibleMargin {
                margin: eps,
                limit: f64::INFINITY,
            });
        }
        Ok(Self {
            lo: self
                .lo
                .iter()
                .zip(scale)
                .map(|(l, s)| l - eps * s)
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(scale)
                .map(|(h, s)| h + eps * s)
                .collect(),
        })
    }

    pub fn expand(&self, eps: f64) -> Result<Self> {
        self.expand_scaled(eps, &vec![1.0; self.dim()])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l < *v && *v < *h)
    }

    /// `self ⊆ other`, compared on endpoints.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.lo.iter().zip(&other.lo).all(|(a, b)| a >= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a <= b)
    }

    pub fn translated(&self, offset: &[f64]) -> Self {
        Self {
            lo: self.lo.iter().zip(offset).map(|(l, o)| l + o).collect(),
            hi: self.hi.iter().zip(offset).map(|(h, o)| h + o).collect(),
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.iter().chain(&other.lo).copied().collect(),
            hi: self.hi.iter().chain(&other.hi).copied().collect(),
        }
    }
}

/// Uniform partition of a box into `counts[i]` cells along axis `i`.
///
/// Cells are numbered row-major with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    region: IntervalBox,
    counts: Vec<usize>,
}

impl Grid {
    pub fn new(region: IntervalBox, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != region.dim() {
            return Err(Error::InvalidGrid(format!(
                "{} cell counts for a {}-dimensional region",
                counts.len(),
                region.dim()
            )));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidGrid("cell count must be at least 1".into()));
        }
        let total = counts.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k));
        match total {
            Some(t) if t <= u32::MAX as usize => {}
            _ => return Err(Error::InvalidGrid("too many cells".into())),
        }
        Ok(Self { region, counts })
    }

    pub fn region(&self) -> &IntervalBox {
        &self.region
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn cell_widths(&self) -> Vec<f64> {
        self.region
            .lo()
            .iter()
            .zip(self.region.hi())
            .zip(&self.counts)
            .map(|((l, h), &k)| (h - l) / k as f64)
            .collect()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.counts[axis];
            flat /= self.counts[axis];
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &k)| acc * k + i)
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let multi = self.multi_index(flat);
        let widths = self.cell_widths();
        multi
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.region.lo()[axis] + (i as f64 + 0.5) * widths[axis])
            .collect()
    }

    /// Cell containing `x`, if `x` lies in the region.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if !self.region.contains(x) {
            return None;
        }
        let widths = self.cell_widths();
        let multi: Vec<usize> = x
            .iter()
            .enumerate()
            .map(|(axis, v)| {
                let i = ((v - self.region.lo()[axis]) / widths[axis]).floor();
                (i.max(0.0) as usize).min(self.counts[axis] - 1)
            })
            .collect();
        Some(self.flat_index(&multi))
    }

    pub fn product(&self, other: &Self) -> Self {
        Self {
            region: self.region.product(&other.region),
            counts: self.counts.iter().chain(&other.counts).copied().collect(),
        }
    }
}
