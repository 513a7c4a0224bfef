//! JSON experiment configuration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pressure::{Budgets, SolverMethod};
use crate::system::{
    m3_fixture, ControlAlphabet, ControlSystem, FiniteStateControlSystem, IntervalBox,
    QuantizedSystem, WeightFunction, WeightKind,
};
use crate::trajectory::{EnumerationOptions, VerificationMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default = "one")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub properties: Option<PropertiesSpec>,
    #[serde(default)]
    pub linear_formula: Option<LinearFormulaSpec>,
}

fn one() -> usize {
    1
}

fn default_n_max() -> usize {
    8
}

fn default_margin() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `x+ = A x + B u + c` on a gridded box.
    Affine {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        #[serde(default)]
        c: Option<Vec<f64>>,
        alphabet: AlphabetSpec,
        region: Vec<[f64; 2]>,
        cells: Vec<usize>,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// Zero-order-hold samples of `x' = A x + B u` at interval `tau`.
    LinearZoh {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        tau: f64,
        alphabet: AlphabetSpec,
        region: Vec<[f64; 2]>,
        cells: Vec<usize>,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// Explicit transition table; `null` entries leave the state space.
    Table {
        table: Vec<Vec<Option<usize>>>,
        interior: Vec<bool>,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
    /// The three-state two-control fixture.
    M3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphabetSpec {
    Explicit {
        values: Vec<Vec<f64>>,
    },
    /// Scalar alphabet of `count` equispaced points of `[lo, hi]`.
    Equispaced {
        count: usize,
        lo: f64,
        hi: f64,
    },
    /// Cartesian product of equispaced axes.
    Grid {
        axes: Vec<AxisSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
}

impl AlphabetSpec {
    pub fn build(&self) -> Result<ControlAlphabet> {
        match self {
            AlphabetSpec::Explicit { values } => ControlAlphabet::new(values.clone()),
            AlphabetSpec::Equispaced { count, lo, hi } => {
                ControlAlphabet::equispaced(*count, *lo, *hi)
            }
            AlphabetSpec::Grid { axes } => {
                let axes: Vec<_> = axes.iter().map(|a| (a.count, a.lo, a.hi)).collect();
                ControlAlphabet::product_grid(&axes)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// Euclidean norm of the control value.
    Abs,
    /// Squared Euclidean norm of the control value.
    Square,
    /// One value per alphabet index.
    Table {
        values: Vec<f64>,
    },
}

impl WeightSpec {
    pub fn build(&self, sys: &ControlSystem) -> Result<WeightFunction> {
        let k = sys.alphabet_len();
        let kind = match self {
            WeightSpec::Zero => return Ok(WeightFunction::zero(k)),
            WeightSpec::Table { values } => {
                let w = WeightFunction::tabulated(values.clone())?;
                w.check_len(k)?;
                return Ok(w);
            }
            WeightSpec::Constant { value } => WeightKind::Constant(*value),
            WeightSpec::Abs => WeightKind::AbsoluteValue,
            WeightSpec::Square => WeightKind::Quadratic,
        };
        match sys {
            ControlSystem::Quantized(q) => WeightFunction::on_alphabet(kind, q.alphabet()),
            ControlSystem::Finite(_) => match kind {
                WeightKind::Constant(c) => WeightFunction::constant(c, k),
                _ => Err(Error::Config(
                    "table systems have symbolic controls; use a constant or table weight".into(),
                )),
            },
        }
    }

    pub fn kind(&self) -> Option<WeightKind> {
        match self {
            WeightSpec::Zero => Some(WeightKind::Constant(0.0)),
            WeightSpec::Constant { value } => Some(WeightKind::Constant(*value)),
            WeightSpec::Abs => Some(WeightKind::AbsoluteValue),
            WeightSpec::Square => Some(WeightKind::Quadratic),
            WeightSpec::Table { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    Inner {
        #[serde(default = "default_verification")]
        verification: VerificationMode,
    },
    /// `epsilons` defaults to a ladder scaled by the region.
    Outer {
        #[serde(default)]
        epsilons: Option<Vec<f64>>,
    },
    Feedback {
        tau_max: usize,
        #[serde(default = "default_verification")]
        verification: VerificationMode,
    },
}

fn default_verification() -> VerificationMode {
    VerificationMode::Center { delta: 1e-3 }
}

impl Default for ModeSpec {
    fn default() -> Self {
        ModeSpec::Inner {
            verification: default_verification(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    #[default]
    Exact,
    Greedy,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub method: MethodSpec,
    pub node_budget: u64,
    pub word_budget: usize,
    pub prune: bool,
    pub dominance: bool,
    pub merge_tolerance: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let b = Budgets::default();
        Self {
            method: MethodSpec::Exact,
            node_budget: b.node_budget,
            word_budget: b.enumeration.word_budget,
            prune: b.enumeration.prune,
            dominance: b.enumeration.dominance,
            merge_tolerance: b.enumeration.merge_tolerance,
        }
    }
}

impl SolverSpec {
    pub fn budgets(&self) -> Result<Budgets> {
        if !(self.merge_tolerance >= 0.0 && self.merge_tolerance.is_finite()) {
            return Err(Error::Config(
                "merge_tolerance must be finite and non-negative".into(),
            ));
        }
        Ok(Budgets {
            method: match self.method {
                MethodSpec::Exact => SolverMethod::Exact,
                MethodSpec::Greedy => SolverMethod::Greedy,
                MethodSpec::Auto => SolverMethod::Auto,
            },
            node_budget: self.node_budget,
            enumeration: EnumerationOptions {
                prune: self.prune,
                word_budget: self.word_budget,
                dominance: self.dominance,
                merge_tolerance: self.merge_tolerance,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Count of an equispaced scalar alphabet.
    AlphabetCount,
    /// Cells per axis of the grid.
    Cells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<usize>,
    /// Use `f = 0` instead of the configured weight.
    #[serde(default)]
    pub entropy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropertiesSpec {
    pub random_fixtures: usize,
    pub seed: u64,
    pub n_max: usize,
}

impl Default for PropertiesSpec {
    fn default() -> Self {
        Self {
            random_fixtures: 20,
            seed: 2024,
            n_max: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearFormulaSpec {
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub weight: WeightSpec,
    pub u0: Vec<f64>,
}

pub(crate) fn matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!(
            "matrix `{name}` must be a non-empty rectangular list of rows"
        )));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!(
            "matrix `{name}` has non-finite entries"
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn region_box(region: &[[f64; 2]]) -> Result<IntervalBox> {
    let intervals: Vec<(f64, f64)> = region.iter().map(|r| (r[0], r[1])).collect();
    IntervalBox::from_intervals(&intervals)
}

impl SystemSpec {
    pub fn build(&self) -> Result<ControlSystem> {
        Ok(match self {
            SystemSpec::Affine {
                a,
                b,
                c,
                alphabet,
                region,
                cells,
                margin,
            } => {
                let a = matrix(a, "a")?;
                let b = matrix(b, "b")?;
                let c = DVector::from_vec(c.clone().unwrap_or_else(|| vec![0.0; a.nrows()]));
                QuantizedSystem::affine(
                    a,
                    b,
                    c,
                    alphabet.build()?,
                    region_box(region)?,
                    cells.clone(),
                    *margin,
                )?
                .into()
            }
            SystemSpec::LinearZoh {
                a,
                b,
                tau,
                alphabet,
                region,
                cells,
                margin,
            } => QuantizedSystem::sample_linear_zoh(
                &matrix(a, "a")?,
                &matrix(b, "b")?,
                *tau,
                alphabet.build()?,
                region_box(region)?,
                cells.clone(),
                *margin,
            )?
            .into(),
            SystemSpec::Table {
                table,
                interior,
                labels,
            } => match labels {
                Some(l) => {
                    FiniteStateControlSystem::new(table.clone(), interior.clone(), l.clone())?
                }
                None => {
                    FiniteStateControlSystem::with_default_labels(table.clone(), interior.clone())?
                }
            }
            .into(),
            SystemSpec::M3 => m3_fixture().into(),
        })
    }

    fn alphabet_mut(&mut self) -> Option<&mut AlphabetSpec> {
        match self {
            SystemSpec::Affine { alphabet, .. } | SystemSpec::LinearZoh { alphabet, .. } => {
                Some(alphabet)
            }
            _ => None,
        }
    }

    fn cells_mut(&mut self) -> Option<&mut Vec<usize>> {
        match self {
            SystemSpec::Affine { cells, .. } | SystemSpec::LinearZoh { cells, .. } => Some(cells),
            _ => None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn system_spec(&self) -> Result<&SystemSpec> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a `system` section".into()))
    }

    pub fn build_system(&self) -> Result<ControlSystem> {
        self.system_spec()?.build()
    }

    /// Checks everything that can be checked without running a computation.
    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_max < self.n_min {
            return Err(Error::Config(format!(
                "need 1 <= n_min <= n_max, got n_min = {}, n_max = {}",
                self.n_min, self.n_max
            )));
        }
        self.solver.budgets()?;
        if let Some(spec) = &self.system {
            let sys = spec.build()?;
            self.weight.build(&sys)?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep.values is empty".into()));
            }
        }
        Ok(())
    }

    /// Copy with the sweep parameter set to `value`.
    pub fn with_parameter(&self, parameter: SweepParameter, value: usize) -> Result<Self> {
        let mut out = self.clone();
        let spec = out
            .system
            .as_mut()
            .ok_or_else(|| Error::Config("sweep needs a `system` section".into()))?;
        match parameter {
            SweepParameter::AlphabetCount => match spec.alphabet_mut() {
                Some(AlphabetSpec::Equispaced { count, .. }) => *count = value,
                Some(AlphabetSpec::Grid { axes }) if axes.len() == 1 => axes[0].count = value,
                _ => {
                    return Err(Error::Config(
                        "alphabet_count sweeps need an equispaced scalar alphabet".into(),
                    ))
                }
            },
            SweepParameter::Cells => match spec.cells_mut() {
                Some(cells) => cells.iter_mut().for_each(|c| *c = value),
                None => return Err(Error::Config("cells sweeps need a gridded system".into())),
            },
        }
        // weight tables are tied to one alphabet size
        if parameter == SweepParameter::AlphabetCount
            && matches!(out.weight, WeightSpec::Table { .. })
        {
            return Err(Error::Config(
                "alphabet_count sweeps cannot use a table weight".into(),
            ));
        }
        Ok(out)
    }
}
