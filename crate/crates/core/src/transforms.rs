//! Derived systems: products, N-step powers, skew conjugates and equilibrium translations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{
    ContinuousMap, ControlAlphabet, ControlSystem, FiniteStateControlSystem, IntervalBox,
    QuantizedSystem, StepMap, Successor, WeightFunction,
};

/// Largest macro alphabet [`power_system`] will build.
pub const MACRO_ALPHABET_LIMIT: usize = 1 << 16;

/// `X₁ × X₂` with alphabet `U₁ × U₂` (first factor's index most significant) and weight
/// `f₁(u) + f₂(v)`.
pub fn product_system(
    sys1: &ControlSystem,
    f1: &WeightFunction,
    sys2: &ControlSystem,
    f2: &WeightFunction,
) -> Result<(ControlSystem, WeightFunction)> {
    f1.check_len(sys1.alphabet_len())?;
    f2.check_len(sys2.alphabet_len())?;
    let sys = match (sys1, sys2) {
        (ControlSystem::Finite(a), ControlSystem::Finite(b)) => {
            ControlSystem::Finite(finite_product(a, b)?)
        }
        (ControlSystem::Quantized(a), ControlSystem::Quantized(b)) => {
            ControlSystem::Quantized(quantized_product(a, b)?)
        }
        _ => {
            return Err(Error::KindMismatch(
                "products need two table systems or two gridded systems".into(),
            ))
        }
    };
    Ok((sys, f1.product(f2)))
}

fn finite_product(
    a: &FiniteStateControlSystem,
    b: &FiniteStateControlSystem,
) -> Result<FiniteStateControlSystem> {
    let (sa, sb) = (a.state_count(), b.state_count());
    let (ua, ub) = (a.control_count(), b.control_count());
    let mut table = Vec::with_capacity(sa * sb);
    let mut interior = Vec::with_capacity(sa * sb);
    for x in 0..sa {
        for y in 0..sb {
            let row = (0..ua)
                .flat_map(|u| (0..ub).map(move |v| (u, v)))
                .map(|(u, v)| match (a.successor(x, u), b.successor(y, v)) {
                    (Successor::State(p), Successor::State(q)) => Some(p * sb + q),
                    _ => None,
                })
                .collect();
            table.push(row);
            interior.push(a.is_interior(x) && b.is_interior(y));
        }
    }
    let labels = a
        .labels()
        .iter()
        .flat_map(|l| b.labels().iter().map(move |m| format!("({l},{m})")))
        .collect();
    FiniteStateControlSystem::new(table, interior, labels)
}

fn quantized_product(a: &QuantizedSystem, b: &QuantizedSystem) -> Result<QuantizedSystem> {
    let (da, db) = (a.dim(), b.dim());
    let alphabet = a.alphabet().product(b.alphabet());
    let region = a.region().product(b.region());
    let cells: Vec<usize> = a
        .grid()
        .counts()
        .iter()
        .chain(b.grid().counts())
        .copied()
        .collect();
    let metric: Vec<f64> = a
        .metric_scale()
        .iter()
        .chain(b.metric_scale())
        .copied()
        .collect();
    let margin = a.margin().min(b.margin());
    if a.time_step() != b.time_step() {
        return Err(Error::KindMismatch(
            "factors use different sampling intervals".into(),
        ));
    }
    let map = match (a.affine_parts(), b.affine_parts()) {
        (Some((a1, b1, c1)), Some((a2, b2, c2))) => {
            let (ma, mb) = (b1.ncols(), b2.ncols());
            let mut am = DMatrix::zeros(da + db, da + db);
            am.view_mut((0, 0), (da, da)).copy_from(a1);
            am.view_mut((da, da), (db, db)).copy_from(a2);
            let mut bm = DMatrix::zeros(da + db, ma + mb);
            bm.view_mut((0, 0), (da, ma)).copy_from(b1);
            bm.view_mut((da, ma), (db, mb)).copy_from(b2);
            let c = DVector::from_iterator(da + db, c1.iter().chain(c2.iter()).copied());
            StepMap::Affine { a: am, b: bm, c }
        }
        _ => {
            let (sa, sb) = (a.clone(), b.clone());
            let ma = a.alphabet().dim();
            let map: ContinuousMap = Arc::new(move |x: &[f64], u: &[f64]| {
                let mut out = sa.step_raw(&x[..da], &u[..ma]);
                out.extend(sb.step_raw(&x[da..], &u[ma..]));
                out
            });
            StepMap::Custom(map)
        }
    };
    QuantizedSystem::assemble(map, alphabet, region, cells, margin, metric, a.time_step())
}

/// Options for [`power_system`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    /// Intermediate states must be interior (`true`) or merely inside the region.
    pub intermediate_interior: bool,
    pub alphabet_limit: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            intermediate_interior: true,
            alphabet_limit: MACRO_ALPHABET_LIMIT,
        }
    }
}

/// `N`-step system over the macro alphabet `U^N` (lexicographic, first letter most
/// significant) with weight `g(ω₀..ω_{N-1}) = Σ f(ω_i)`.
///
/// For gridded systems the macro step keeps the sampling interval `N dt`, so the
/// returned weight is `g / N`: per-step weights are always multiplied by the system's
/// sampling interval.
pub fn power_system(
    sys: &ControlSystem,
    f: &WeightFunction,
    n: usize,
    opts: &PowerOptions,
) -> Result<(ControlSystem, WeightFunction)> {
    if n == 0 {
        return Err(Error::InvalidHorizon { min: 1, got: 0 });
    }
    f.check_len(sys.alphabet_len())?;
    let k = sys.alphabet_len();
    let size = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(k));
    let size = match size {
        Some(s) if s <= opts.alphabet_limit => s,
        _ => {
            return Err(Error::AlphabetBlowUp {
                size: size.unwrap_or(usize::MAX),
                limit: opts.alphabet_limit,
            })
        }
    };
    let letters = |v: usize| -> Vec<usize> {
        let mut out = vec![0; n];
        let mut r = v;
        for i in (0..n).rev() {
            out[i] = r % k;
            r /= k;
        }
        out
    };
    let g: Vec<f64> = (0..size)
        .map(|v| letters(v).iter().fold(0.0, |acc, &u| acc + f.value(u)))
        .collect();
    match sys {
        ControlSystem::Finite(s) => {
            let table = (0..s.state_count())
                .map(|x| {
                    (0..size)
                        .map(|v| {
                            let mut state = x;
                            let word = letters(v);
                            for (i, &u) in word.iter().enumerate() {
                                match s.successor(state, u) {
                                    Successor::State(t) => state = t,
                                    Successor::Exit => return None,
                                }
                                let last = i + 1 == n;
                                if !last && opts.intermediate_interior && !s.is_interior(state) {
                                    return None;
                                }
                            }
                            Some(state)
                        })
                        .collect()
                })
                .collect();
            let labels = (0..size)
                .map(|v| {
                    letters(v)
                        .iter()
                        .map(|&u| s.labels()[u].as_str())
                        .collect::<String>()
                })
                .collect();
            let p = FiniteStateControlSystem::new(table, s.interior_flags().to_vec(), labels)?;
            Ok((p.into(), WeightFunction::tabulated(g)?))
        }
        ControlSystem::Quantized(q) => {
            let mut alphabet = q.alphabet().clone();
            for _ in 1..n {
                alphabet = alphabet.product(q.alphabet());
            }
            let inner = q.clone();
            let check = if opts.intermediate_interior {
                inner.interior_box(inner.margin())?
            } else {
                inner.region().clone()
            };
            let m = q.alphabet().dim();
            let map: ContinuousMap = Arc::new(move |x: &[f64], u: &[f64]| {
                let mut state = x.to_vec();
                for i in 0..n {
                    state = inner.step_raw(&state, &u[i * m..(i + 1) * m]);
                    if i + 1 < n && !check.contains(&state) {
                        return vec![f64::NAN; state.len()];
                    }
                }
                state
            });
            let p = QuantizedSystem::assemble(
                StepMap::Custom(map),
                alphabet,
                q.region().clone(),
                q.grid().counts().to_vec(),
                q.margin(),
                q.metric_scale().to_vec(),
                q.time_step() * n as f64,
            )?;
            let scaled: Vec<f64> = g.iter().map(|x| x / n as f64).collect();
            Ok((p.into(), WeightFunction::tabulated(scaled)?))
        }
    }
}

/// Paired state and control bijections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SkewConjugacy {
    /// Table systems: state `s` becomes `states[s]`, control `u` becomes `controls[u]`.
    Relabel {
        states: Vec<usize>,
        controls: Vec<usize>,
    },
    /// Gridded systems: `y[axes[i]] = scale[i] * x[i] + shift[axes[i]]` and control `u`
    /// becomes `controls[u]`.
    Affine {
        axes: Vec<usize>,
        scale: Vec<f64>,
        shift: Vec<f64>,
        controls: Vec<usize>,
    },
}

fn check_permutation(p: &[usize], len: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; len];
    if p.len() != len {
        return Err(Error::InvalidConjugacy(format!(
            "{what} map has {} entries, expected {len}",
            p.len()
        )));
    }
    for &i in p {
        if i >= len || seen[i] {
            return Err(Error::InvalidConjugacy(format!(
                "{what} map is not a bijection"
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

impl SkewConjugacy {
    pub fn identity(sys: &ControlSystem) -> Self {
        match sys {
            ControlSystem::Finite(s) => SkewConjugacy::Relabel {
                states: (0..s.state_count()).collect(),
                controls: (0..s.control_count()).collect(),
            },
            ControlSystem::Quantized(q) => SkewConjugacy::Affine {
                axes: (0..q.dim()).collect(),
                scale: vec![1.0; q.dim()],
                shift: vec![0.0; q.dim()],
                controls: (0..q.alphabet().len()).collect(),
            },
        }
    }

    pub fn controls(&self) -> &[usize] {
        match self {
            SkewConjugacy::Relabel { controls, .. } | SkewConjugacy::Affine { controls, .. } => {
                controls
            }
        }
    }

    /// Image of a state (table systems) or grid cell (gridded systems).
    pub fn map_element(&self, sys: &ControlSystem, element: usize) -> usize {
        match (self, sys) {
            (SkewConjugacy::Relabel { states, .. }, _) => states[element],
            (SkewConjugacy::Affine { axes, scale, .. }, ControlSystem::Quantized(q)) => {
                let counts = q.grid().counts();
                let multi = q.grid().multi_index(element);
                let mut out = vec![0; multi.len()];
                for (i, &m) in multi.iter().enumerate() {
                    out[axes[i]] = if scale[i] > 0.0 { m } else { counts[i] - 1 - m };
                }
                let counts2: Vec<usize> = {
                    let mut c = vec![0; counts.len()];
                    for (i, &k) in counts.iter().enumerate() {
                        c[axes[i]] = k;
                    }
                    c
                };
                out.iter()
                    .zip(&counts2)
                    .fold(0, |acc, (&i, &k)| acc * k + i)
            }
            _ => element,
        }
    }
}

/// Conjugate system `F₂(ρ(x), H(u)) = ρ(F₁(x, u))`. Pair it with weight `f ∘ H⁻¹`
/// (see [`WeightFunction::permuted`]) to keep `a_n` unchanged.
pub fn conjugate_system(sys: &ControlSystem, conj: &SkewConjugacy) -> Result<ControlSystem> {
    match (sys, conj) {
        (ControlSystem::Finite(s), SkewConjugacy::Relabel { states, controls }) => {
            let (ns, nu) = (s.state_count(), s.control_count());
            check_permutation(states, ns, "state")?;
            check_permutation(controls, nu, "control")?;
            let mut table = vec![vec![None; nu]; ns];
            let mut interior = vec![false; ns];
            let mut labels = vec![String::new(); nu];
            for x in 0..ns {
                interior[states[x]] = s.is_interior(x);
                for u in 0..nu {
                    table[states[x]][controls[u]] = match s.successor(x, u) {
                        Successor::State(t) => Some(states[t]),
                        Successor::Exit => None,
                    };
                }
            }
            for u in 0..nu {
                labels[controls[u]] = s.labels()[u].clone();
            }
            Ok(FiniteStateControlSystem::new(table, interior, labels)?.into())
        }
        (
            ControlSystem::Quantized(q),
            SkewConjugacy::Affine {
                axes,
                scale,
                shift,
                controls,
            },
        ) => Ok(quantized_conjugate(q, axes, scale, shift, controls)?.into()),
        _ => Err(Error::InvalidConjugacy(
            "conjugacy kind does not match the system kind".into(),
        )),
    }
}

fn quantized_conjugate(
    q: &QuantizedSystem,
    axes: &[usize],
    scale: &[f64],
    shift: &[f64],
    controls: &[usize],
) -> Result<QuantizedSystem> {
    let d = q.dim();
    check_permutation(axes, d, "axis")?;
    check_permutation(controls, q.alphabet().len(), "control")?;
    if scale.len() != d || shift.len() != d {
        return Err(Error::InvalidConjugacy(
            "scale and shift need one entry per axis".into(),
        ));
    }
    if scale.iter().any(|s| !(s.is_finite() && *s != 0.0)) || shift.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidConjugacy(
            "scales must be finite and nonzero".into(),
        ));
    }
    let mut m = DMatrix::zeros(d, d);
    let mut m_inv = DMatrix::zeros(d, d);
    for i in 0..d {
        m[(axes[i], i)] = scale[i];
        m_inv[(i, axes[i])] = 1.0 / scale[i];
    }
    let t = DVector::from_column_slice(shift);
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    let mut counts = vec![0; d];
    let mut metric = vec![0.0; d];
    for i in 0..d {
        let j = axes[i];
        let (a, b) = (
            scale[i] * q.region().lo()[i] + shift[j],
            scale[i] * q.region().hi()[i] + shift[j],
        );
        lo[j] = a.min(b);
        hi[j] = a.max(b);
        counts[j] = q.grid().counts()[i];
        metric[j] = scale[i].abs() * q.metric_scale()[i];
    }
    let region = IntervalBox::new(lo, hi)?;
    let alphabet = q.alphabet().permuted(controls);
    let map = match q.affine_parts() {
        Some((a, b, c)) => {
            let a2 = &m * a * &m_inv;
            let b2 = &m * b;
            let c2 = &m * c + &t - &a2 * &t;
            StepMap::Affine {
                a: a2,
                b: b2,
                c: c2,
            }
        }
        None => {
            let inner = q.clone();
            let (m, m_inv, t) = (m.clone(), m_inv.clone(), t.clone());
            let map: ContinuousMap = Arc::new(move |y: &[f64], u: &[f64]| {
                let x = &m_inv * (DVector::from_column_slice(y) - &t);
                let next = DVector::from_vec(inner.step_raw(x.as_slice(), u));
                (&m * next + &t).as_slice().to_vec()
            });
            StepMap::Custom(map)
        }
    };
    QuantizedSystem::assemble(
        map,
        alphabet,
        region,
        counts,
        q.margin(),
        metric,
        q.time_step(),
    )
}

/// Problem shifted so that the equilibrium `(x0, u0)` moves to the origin.
#[derive(Debug, Clone)]
pub struct TranslatedProblem {
    pub system: QuantizedSystem,
    /// `g(v) = f(v + u0)` on the shifted alphabet (same index order).
    pub weight: WeightFunction,
}

/// Translates an affine gridded system with fixed point `F(x0, u0) = x0` (tolerance 1e-9)
/// to region `Q - x0`, alphabet `U - u0` and weight `g(v) = f(v + u0)`.
pub fn translate_linear_to_origin(
    sys: &QuantizedSystem,
    f: &WeightFunction,
    u0: &[f64],
    x0: &[f64],
) -> Result<TranslatedProblem> {
    let (a, b, c) = sys
        .affine_parts()
        .ok_or_else(|| Error::KindMismatch("translation needs an affine system".into()))?;
    if x0.len() != sys.dim() || u0.len() != sys.alphabet().dim() {
        return Err(Error::ShapeMismatch(
            "x0 or u0 has the wrong dimension".into(),
        ));
    }
    f.check_len(sys.alphabet().len())?;
    let x = DVector::from_column_slice(x0);
    let u = DVector::from_column_slice(u0);
    let residual_vec = a * &x + b * &u + c - &x;
    let residual = residual_vec.amax();
    if !(residual <= 1e-9) {
        return Err(Error::NotEquilibrium { residual });
    }
    let alphabet: ControlAlphabet = sys.alphabet().shifted(u0)?;
    let region = sys
        .region()
        .translated(&x0.iter().map(|v| -v).collect::<Vec<_>>());
    let system = QuantizedSystem::assemble(
        StepMap::Affine {
            a: a.clone(),
            b: b.clone(),
            c: residual_vec,
        },
        alphabet,
        region,
        sys.grid().counts().to_vec(),
        sys.margin(),
        sys.metric_scale().to_vec(),
        sys.time_step(),
    )?;
    Ok(TranslatedProblem {
        system,
        weight: f.clone(),
    })
}

/// Checks `A x0 + B u0 = 0` for a continuous-time linear system.
pub fn check_continuous_equilibrium(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    x0: &[f64],
    u0: &[f64],
) -> Result<()> {
    if a.nrows() != x0.len() || b.nrows() != x0.len() || b.ncols() != u0.len() {
        return Err(Error::ShapeMismatch(
            "x0 or u0 has the wrong dimension".into(),
        ));
    }
    let r = (a * DVector::from_column_slice(x0) + b * DVector::from_column_slice(u0)).amax();
    if r <= 1e-9 {
        Ok(())
    } else {
        Err(Error::NotEquilibrium { residual: r })
    }
}
