//! Continuous-state systems on a gridded box with a finite control alphabet.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::control::ControlAlphabet;
use super::linalg;
use super::region::{Grid, IntervalBox};
use crate::error::{Error, Result};

/// Host-supplied step map `(x, u) -> F(x, u)`.
pub type ContinuousMap = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum StepMap {
    /// `x ↦ A x + B u + c`.
    Affine {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DVector<f64>,
    },
    Custom(ContinuousMap),
}

impl fmt::Debug for StepMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepMap::Affine { a, b, c } => f
                .debug_struct("Affine")
                .field("a", a)
                .field("b", b)
                .field("c", c)
                .finish(),
            StepMap::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Discrete-time system `x_{k+1} = F(x_k, u_k)` on a box `Q` partitioned by a grid.
///
/// The interior of `Q` is realized as `Q` shrunk by `margin` (times the per-axis metric
/// scale). `time_step` is the sampling interval for systems obtained from a
/// continuous-time model and `1` otherwise; the per-step weight of a control is
/// `time_step * f(u)`.
#[derive(Debug, Clone)]
pub struct QuantizedSystem {
    dim: usize,
    map: StepMap,
    alphabet: ControlAlphabet,
    grid: Grid,
    margin: f64,
    metric_scale: Vec<f64>,
    time_step: f64,
    a_rows: Vec<f64>,
    control_offsets: Vec<Vec<f64>>,
    strongly_invariant: bool,
}

impl QuantizedSystem {
    /// Affine system `x ↦ A x + B u + c`.
    pub fn affine(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DVector<f64>,
        alphabet: ControlAlphabet,
        region: IntervalBox,
        cells: Vec<usize>,
        margin: f64,
    ) -> Result<Self> {
        let d = region.dim();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "A is {}x{} but the region has dimension {d}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != d || b.ncols() != alphabet.dim() {
            return Err(Error::ShapeMismatch(format!(
                "B is {}x{} but expected {d}x{}",
                b.nrows(),
                b.ncols(),
                alphabet.dim()
            )));
        }
        if c.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "offset has {} entries but expected {d}",
                c.len()
            )));
        }
        if a.iter()
            .chain(b.iter())
            .chain(c.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::ShapeMismatch(
                "system matrices must be finite".into(),
            ));
        }
        let map = StepMap::Affine { a, b, c };
        Self::assemble(map, alphabet, region, cells, margin, vec![1.0; d], 1.0)
    }

    /// System driven by a host-supplied continuous map.
    pub fn custom(
        map: ContinuousMap,
        alphabet: ControlAlphabet,
        region: IntervalBox,
        cells: Vec<usize>,
        margin: f64,
    ) -> Result<Self> {
        let d = region.dim();
        let probe = map(region.lo(), alphabet.value(0));
        if probe.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "map returns {} coordinates but the region has dimension {d}",
                probe.len()
            )));
        }
        Self::assemble(
            StepMap::Custom(map),
            alphabet,
            region,
            cells,
            margin,
            vec![1.0; d],
            1.0,
        )
    }

    /// Exact sampling of `ẋ = A x + B u` under controls held constant over `[kτ, (k+1)τ)`.
    pub fn sample_linear_zoh(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        tau: f64,
        alphabet: ControlAlphabet,
        region: IntervalBox,
        cells: Vec<usize>,
        margin: f64,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::NonPositiveTimeStep(tau));
        }
        if b.ncols() != alphabet.dim() {
            return Err(Error::ShapeMismatch(format!(
                "B has {} columns but controls have dimension {}",
                b.ncols(),
                alphabet.dim()
            )));
        }
        let (phi, gamma) = linalg::zoh_discretize(a, b, tau)?;
        let d = phi.nrows();
        let mut sys = Self::affine(
            phi,
            gamma,
            DVector::zeros(d),
            alphabet,
            region,
            cells,
            margin,
        )?;
        sys.time_step = tau;
        Ok(sys)
    }

    pub(crate) fn assemble(
        map: StepMap,
        alphabet: ControlAlphabet,
        region: IntervalBox,
        cells: Vec<usize>,
        margin: f64,
        metric_scale: Vec<f64>,
        time_step: f64,
    ) -> Result<Self> {
        let dim = region.dim();
        // validates the margin
        region.shrink_scaled(margin, &metric_scale)?;
        let grid = Grid::new(region, cells)?;
        let (a_rows, control_offsets) = match &map {
            StepMap::Affine { a, b, c } => {
                let mut rows = Vec::with_capacity(dim * dim);
                for i in 0..dim {
                    for j in 0..dim {
                        rows.push(a[(i, j)]);
                    }
                }
                let offsets = alphabet
                    .values()
                    .iter()
                    .map(|u| {
                        let bu = b * DVector::from_column_slice(u);
                        (0..dim).map(|i| bu[i] + c[i]).collect()
                    })
                    .collect();
                (rows, offsets)
            }
            StepMap::Custom(_) => (Vec::new(), Vec::new()),
        };
        let mut sys = Self {
            dim,
            map,
            alphabet,
            grid,
            margin,
            metric_scale,
            time_step,
            a_rows,
            control_offsets,
            strongly_invariant: false,
        };
        let interior = sys.interior_box(margin)?;
        sys.strongly_invariant = (0..sys.grid.cell_count()).all(|cell| {
            let x = sys.grid.center(cell);
            (0..sys.alphabet.len()).any(|u| interior.contains(&sys.step(&x, u)))
        });
        Ok(sys)
    }

    #[inline]
    pub fn step(&self, x: &[f64], control: usize) -> Vec<f64> {
        match &self.map {
            StepMap::Affine { .. } => {
                let off = &self.control_offsets[control];
                (0..self.dim)
                    .map(|i| {
                        let row = &self.a_rows[i * self.dim..(i + 1) * self.dim];
                        row.iter().zip(x).fold(0.0, |acc, (a, v)| acc + a * v) + off[i]
                    })
                    .collect()
            }
            StepMap::Custom(f) => f(x, self.alphabet.value(control)),
        }
    }

    /// Step under a raw control vector rather than an alphabet index.
    pub fn step_raw(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        match &self.map {
            StepMap::Affine { a, b, c } => {
                let y = a * DVector::from_column_slice(x) + b * DVector::from_column_slice(u) + c;
                y.as_slice().to_vec()
            }
            StepMap::Custom(f) => f(x, u),
        }
    }

    /// `A s + (B u + c)` for affine maps.
    pub(crate) fn affine_step(&self, s: &[f64], control: usize) -> Vec<f64> {
        let off = &self.control_offsets[control];
        (0..self.dim)
            .map(|i| {
                let row = &self.a_rows[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(s).fold(0.0, |acc, (a, v)| acc + a * v) + off[i]
            })
            .collect()
    }

    /// `A x` for affine maps.
    pub(crate) fn linear_part(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let row = &self.a_rows[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(x).fold(0.0, |acc, (a, v)| acc + a * v)
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn map(&self) -> &StepMap {
        &self.map
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.map, StepMap::Affine { .. })
    }

    pub fn affine_parts(&self) -> Option<(&DMatrix<f64>, &DMatrix<f64>, &DVector<f64>)> {
        match &self.map {
            StepMap::Affine { a, b, c } => Some((a, b, c)),
            StepMap::Custom(_) => None,
        }
    }

    pub fn alphabet(&self) -> &ControlAlphabet {
        &self.alphabet
    }

    pub fn region(&self) -> &IntervalBox {
        self.grid.region()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn metric_scale(&self) -> &[f64] {
        &self.metric_scale
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn is_strongly_invariant(&self) -> bool {
        self.strongly_invariant
    }

    /// `shrink(Q, δ)` in the system's metric.
    pub fn interior_box(&self, delta: f64) -> Result<IntervalBox> {
        self.region().shrink_scaled(delta, &self.metric_scale)
    }

    /// `N_ε(Q)` in the system's (sup-norm) metric.
    pub fn neighborhood_box(&self, eps: f64) -> Result<IntervalBox> {
        self.region().expand_scaled(eps, &self.metric_scale)
    }
}
