//! Control alphabets, weight functions on them, and finite control words.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, finite set of control values in `R^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlAlphabet {
    values: Vec<Vec<f64>>,
    dim: usize,
}

impl ControlAlphabet {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let first = values
            .first()
            .ok_or_else(|| Error::InvalidAlphabet("alphabet is empty".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidAlphabet("control dimension is zero".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidAlphabet(format!(
                    "value {i} has dimension {} but expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidAlphabet(format!("value {i} is not finite")));
            }
        }
        for i in 0..values.len() {
            for j in 0..i {
                if values[i] == values[j] {
                    return Err(Error::InvalidAlphabet(format!(
                        "values {j} and {i} are duplicates"
                    )));
                }
            }
        }
        Ok(Self { values, dim })
    }

    /// `count` equispaced scalar values covering `[lo, hi]` (both ends included).
    pub fn equispaced(count: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::product_grid(&[(count, lo, hi)])
    }

    /// Cartesian product of per-axis equispaced value lists, last axis fastest.
    pub fn product_grid(axes: &[(usize, f64, f64)]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidAlphabet("no axes given".into()));
        }
        let mut per_axis = Vec::with_capacity(axes.len());
        for &(count, lo, hi) in axes {
            if count == 0 {
                return Err(Error::InvalidAlphabet("axis with zero values".into()));
            }
            if count > 1 && !(lo < hi) {
                return Err(Error::InvalidAlphabet(format!(
                    "axis range [{lo}, {hi}] is empty"
                )));
            }
            let vals: Vec<f64> = if count == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..count)
                    .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                    .collect()
            };
            per_axis.push(vals);
        }
        let mut values: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &per_axis {
            let mut next = Vec::with_capacity(values.len() * axis.len());
            for prefix in &values {
                for &x in axis {
                    let mut v = prefix.clone();
                    v.push(x);
                    next.push(v);
                }
            }
            values = next;
        }
        Self::new(values)
    }

    /// Placeholder values `0, 1, .., count-1` for table systems whose controls are symbols.
    pub fn symbols(count: usize) -> Result<Self> {
        Self::new((0..count).map(|i| vec![i as f64]).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, index: usize) -> &[f64] {
        &self.values[index]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Index of the value closest to `v` in sup-norm, if within `tol`.
    pub fn index_of(&self, v: &[f64], tol: f64) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let d = w
                    .iter()
                    .zip(v)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                (i, d)
            })
            .filter(|&(_, d)| d <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    /// Pairs `(u, v)` with index `i * other.len() + j`, values concatenated.
    pub fn product(&self, other: &Self) -> Self {
        let mut values = Vec::with_capacity(self.len() * other.len());
        for u in &self.values {
            for v in &other.values {
                let mut w = u.clone();
                w.extend_from_slice(v);
                values.push(w);
            }
        }
        Self {
            values,
            dim: self.dim + other.dim,
        }
    }

    /// Every value translated by `-offset`.
    pub fn shifted(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "offset has dimension {} but alphabet has {}",
                offset.len(),
                self.dim
            )));
        }
        Self::new(
            self.values
                .iter()
                .map(|v| v.iter().zip(offset).map(|(a, b)| a - b).collect())
                .collect(),
        )
    }

    /// Relabels values: the value at index `i` moves to index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut values = vec![Vec::new(); self.len()];
        for (i, &j) in perm.iter().enumerate() {
            values[j] = self.values[i].clone();
        }
        Self {
            values,
            dim: self.dim,
        }
    }
}

/// How the weight table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "c")]
pub enum WeightKind {
    Tabulated,
    /// Euclidean norm of the control value.
    AbsoluteValue,
    /// Squared Euclidean norm of the control value.
    Quadratic,
    Constant(f64),
}

impl WeightKind {
    /// Value at a raw control vector; `None` for tabulated weights.
    pub fn evaluate(&self, u: &[f64]) -> Option<f64> {
        let norm2 = u.iter().map(|x| x * x).sum::<f64>();
        match *self {
            WeightKind::Tabulated => None,
            WeightKind::AbsoluteValue => Some(norm2.sqrt()),
            WeightKind::Quadratic => Some(norm2),
            WeightKind::Constant(c) => Some(c),
        }
    }
}

/// Weight `f` on the control alphabet, stored as a table over alphabet indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    kind: WeightKind,
    table: Vec<f64>,
}

impl WeightFunction {
    pub fn tabulated(table: Vec<f64>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidWeight("table is empty".into()));
        }
        if let Some(i) = table.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidWeight(format!("entry {i} is not finite")));
        }
        Ok(Self {
            kind: WeightKind::Tabulated,
            table,
        })
    }

    pub fn constant(c: f64, len: usize) -> Result<Self> {
        let mut w = Self::tabulated(vec![c; len])?;
        w.kind = WeightKind::Constant(c);
        Ok(w)
    }

    pub fn zero(len: usize) -> Self {
        Self {
            kind: WeightKind::Constant(0.0),
            table: vec![0.0; len],
        }
    }

    /// Evaluates `kind` on every value of `alphabet`.
    pub fn on_alphabet(kind: WeightKind, alphabet: &ControlAlphabet) -> Result<Self> {
        let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let table: Vec<f64> = match kind {
            WeightKind::Tabulated => {
                return Err(Error::InvalidWeight(
                    "tabulated weights need an explicit table".into(),
                ))
            }
            WeightKind::AbsoluteValue => {
                alphabet.values().iter().map(|v| norm2(v).sqrt()).collect()
            }
            WeightKind::Quadratic => alphabet.values().iter().map(|v| norm2(v)).collect(),
            WeightKind::Constant(c) => vec![c; alphabet.len()],
        };
        let mut w = Self::tabulated(table)?;
        w.kind = kind;
        Ok(w)
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn value(&self, index: usize) -> f64 {
        self.table[index]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn check_len(&self, alphabet_len: usize) -> Result<()> {
        if self.table.len() != alphabet_len {
            return Err(Error::InvalidWeight(format!(
                "weight table has {} entries but the alphabet has {alphabet_len}",
                self.table.len()
            )));
        }
        Ok(())
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let kind = match self.kind {
            WeightKind::Constant(k) => WeightKind::Constant(k + c),
            _ => WeightKind::Tabulated,
        };
        Self {
            kind,
            table: self.table.iter().map(|x| x + c).collect(),
        }
    }

    /// `s * f`.
    pub fn scaled(&self, s: f64) -> Self {
        let kind = match self.kind {
            WeightKind::Constant(k) => WeightKind::Constant(k * s),
            _ => WeightKind::Tabulated,
        };
        Self {
            kind,
            table: self.table.iter().map(|x| x * s).collect(),
        }
    }

    /// `max_u |f(u) - g(u)|` over the alphabet.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `f <= g` pointwise.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.table.len() == other.table.len()
            && self.table.iter().zip(&other.table).all(|(a, b)| a <= b)
    }

    /// `(f × g)(u, v) = f(u) + g(v)` on the product alphabet.
    pub fn product(&self, other: &Self) -> Self {
        let mut table = Vec::with_capacity(self.len() * other.len());
        for a in &self.table {
            for b in &other.table {
                table.push(a + b);
            }
        }
        Self {
            kind: WeightKind::Tabulated,
            table,
        }
    }

    /// `f ∘ H⁻¹` where `H` maps index `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut table = vec![0.0; self.len()];
        for (i, &j) in perm.iter().enumerate() {
            table[j] = self.table[i];
        }
        Self {
            kind: self.kind,
            table,
        }
    }

    /// `f ∘ H` where `H` maps index `i` to `perm[i]`.
    pub fn composed(&self, perm: &[usize]) -> Self {
        Self {
            kind: self.kind,
            table: perm.iter().map(|&j| self.table[j]).collect(),
        }
    }
}

/// Finite control sequence of alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlWord(Vec<usize>);

impl ControlWord {
    pub fn new(indices: Vec<usize>, alphabet_len: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidWord("word is empty".into()));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= alphabet_len) {
            return Err(Error::InvalidWord(format!(
                "index {i} out of range for an alphabet of {alphabet_len} values"
            )));
        }
        Ok(Self(indices))
    }

    pub(crate) fn from_raw(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    /// Constant word `(u, u, .., u)` of length `n`.
    pub fn constant(u: usize, n: usize) -> Self {
        Self(vec![u; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    /// `θ^n ω`: the word with its first `n` letters removed.
    pub fn shift(&self, n: usize) -> Self {
        Self(self.0[n.min(self.0.len())..].to_vec())
    }

    pub fn prefix(&self, n: usize) -> Self {
        Self(self.0[..n.min(self.0.len())].to_vec())
    }

    /// Renders the word with the given labels, or as indices when none are given.
    pub fn render(&self, labels: Option<&[String]>) -> String {
        match labels {
            Some(l) => self
                .0
                .iter()
                .map(|&i| l[i].as_str())
                .collect::<Vec<_>>()
                .join(""),
            None => self
                .0
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

impl fmt::Display for ControlWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.render(None))
    }
}

/// `(S_n f)(ω) = Σ f(u_i)`, summed left to right.
pub fn birkhoff_sum(f: &WeightFunction, word: &ControlWord) -> f64 {
    word.indices().iter().fold(0.0, |acc, &i| acc + f.value(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equispaced_nine_values() {
        let a = ControlAlphabet::equispaced(9, -1.0, 1.0).unwrap();
        assert_eq!(a.len(), 9);
        assert_eq!(a.value(0), &[-1.0]);
        assert_eq!(a.value(4), &[0.0]);
        assert_eq!(a.value(8), &[1.0]);
        assert_eq!(a.value(5), &[0.25]);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(ControlAlphabet::new(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(ControlAlphabet::new(vec![]).is_err());
        assert!(ControlAlphabet::new(vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn product_grid_orders_last_axis_fastest() {
        let a = ControlAlphabet::product_grid(&[(2, 0.0, 1.0), (3, -1.0, 1.0)]).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a.value(1), &[0.0, 0.0]);
        assert_eq!(a.value(3), &[1.0, -1.0]);
    }

    #[test]
    fn birkhoff_examples() {
        let alpha = ControlAlphabet::new(vec![vec![-1.0], vec![1.0]]).unwrap();
        let f = WeightFunction::on_alphabet(WeightKind::AbsoluteValue, &alpha).unwrap();
        let w = ControlWord::new(vec![0, 1], 2).unwrap();
        assert_eq!(birkhoff_sum(&f, &w), 2.0);

        let c = WeightFunction::constant(0.7, 2).unwrap();
        let w = ControlWord::new(vec![1; 5], 2).unwrap();
        assert!((birkhoff_sum(&c, &w) - 3.5).abs() < 1e-15);

        // M3: f(a) = 1, f(b) = 0, word (a, b, a)
        let f = WeightFunction::tabulated(vec![1.0, 0.0]).unwrap();
        let w = ControlWord::new(vec![0, 1, 0], 2).unwrap();
        assert_eq!(birkhoff_sum(&f, &w), 2.0);
    }

    #[test]
    fn words_validate_indices() {
        assert!(ControlWord::new(vec![], 2).is_err());
        assert!(ControlWord::new(vec![2], 2).is_err());
        let w = ControlWord::new(vec![0, 1, 1], 2).unwrap();
        assert_eq!(w.shift(1).indices(), &[1, 1]);
        assert_eq!(w.concat(&w).len(), 6);
    }

    #[test]
    fn weight_permutations_are_inverse() {
        let f = WeightFunction::tabulated(vec![1.0, 2.0, 3.0]).unwrap();
        let perm = [2, 0, 1];
        let g = f.permuted(&perm);
        assert_eq!(g.composed(&perm), f);
    }
}
