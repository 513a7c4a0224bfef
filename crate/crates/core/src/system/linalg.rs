//! Small dense linear algebra: matrix exponential and eigenvalues for `d <= 4`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const SERIES_ORDER: usize = 12;
const SERIES_TOL: f64 = 1e-12;
const MAX_SQUARINGS: u32 = 1024;

fn norm1(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^M` by scaling and squaring with a truncated Taylor series of order 12.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(
            "exponential of a non-square matrix".into(),
        ));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::ExponentialDiverged);
    }
    let n = m.nrows();
    let norm = norm1(m);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    if squarings > MAX_SQUARINGS {
        return Err(Error::ExponentialDiverged);
    }
    let scaled = m / 2f64.powi(squarings as i32);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut last = f64::INFINITY;
    for k in 1..=SERIES_ORDER {
        term = &term * &scaled / k as f64;
        sum += &term;
        last = norm1(&term);
    }
    if last > SERIES_TOL * norm1(&sum).max(1.0) {
        return Err(Error::ExponentialDiverged);
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if sum.iter().any(|x| !x.is_finite()) {
        return Err(Error::ExponentialDiverged);
    }
    Ok(sum)
}

/// Zero-order-hold discretization: `(e^{Aτ}, ∫_0^τ e^{As} ds B)` from one exponential of
/// the augmented matrix `[[A, B], [0, 0]] τ`.
pub fn zoh_discretize(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    tau: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = a.nrows();
    let m = b.ncols();
    if !a.is_square() || b.nrows() != d {
        return Err(Error::ShapeMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut aug = DMatrix::<f64>::zeros(d + m, d + m);
    aug.view_mut((0, 0), (d, d)).copy_from(&(a * tau));
    aug.view_mut((0, d), (d, m)).copy_from(&(b * tau));
    let e = expm(&aug)?;
    Ok((
        e.view((0, 0), (d, d)).into_owned(),
        e.view((0, d), (d, m)).into_owned(),
    ))
}

/// Characteristic polynomial coefficients `[c_0, .., c_d]` of `det(μI - A)` (monic,
/// `c_d = 1`) via the Faddeev–LeVerrier recursion.
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let ident = DMatrix::<f64>::identity(n, n);
    let mut mk = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        mk = a * &mk + &ident * coeffs[n + 1 - k];
        let am = a * &mk;
        coeffs[n - k] = -am.trace() / k as f64;
    }
    coeffs
}

fn horner(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64, Complex64) {
    // value, first and second derivative
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut ddp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        ddp = ddp * x + dp * 2.0;
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp, ddp)
}

fn laguerre(coeffs: &[Complex64], start: Complex64) -> Option<Complex64> {
    let deg = (coeffs.len() - 1) as f64;
    let mut x = start;
    for iter in 0..500 {
        let (p, dp, ddp) = horner(coeffs, x);
        if p.norm() == 0.0 {
            return Some(x);
        }
        let g = dp / p;
        let h = g * g - ddp / p;
        let sq = ((h * deg - g * g) * (deg - 1.0)).sqrt();
        let d1 = g + sq;
        let d2 = g - sq;
        let denom = if d1.norm() >= d2.norm() { d1 } else { d2 };
        let step = if denom.norm() == 0.0 {
            Complex64::from_polar(1.0 + x.norm(), iter as f64)
        } else {
            Complex64::new(deg, 0.0) / denom
        };
        x -= step;
        if step.norm() <= 1e-15 * x.norm().max(1.0) {
            return Some(x);
        }
        if !x.re.is_finite() || !x.im.is_finite() {
            return None;
        }
    }
    let (p, _, _) = horner(coeffs, x);
    if p.norm() < 1e-10 {
        Some(x)
    } else {
        None
    }
}

/// Roots of a real polynomial given as `[c_0, .., c_d]`.
fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let full: Vec<Complex64> = coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let mut work = full.clone();
    let mut roots = Vec::new();
    while work.len() > 2 {
        let r = laguerre(&work, Complex64::new(0.0, 0.0)).ok_or(Error::EigenvaluesDiverged)?;
        let r = laguerre(&full, r).unwrap_or(r);
        // synthetic division by (x - r)
        let deg = work.len() - 1;
        let mut quot = vec![Complex64::new(0.0, 0.0); deg];
        let mut carry = work[deg];
        for k in (0..deg).rev() {
            quot[k] = carry;
            carry = work[k] + carry * r;
        }
        roots.push(r);
        work = quot;
    }
    if work.len() == 2 {
        roots.push(-work[0] / work[1]);
    }
    Ok(roots)
}

/// Roots separated by less than this are treated as one perturbed multiple root.
const CLUSTER_RADIUS: f64 = 1e-4;

/// Replaces clusters of nearby roots by their mean, which is far more accurate than
/// the individual members when the cluster comes from a defective eigenvalue.
fn average_clusters(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    let n = roots.len();
    let mut group = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if group[i] != usize::MAX {
            continue;
        }
        group[i] = next;
        let mut changed = true;
        while changed {
            changed = false;
            for j in 0..n {
                if group[j] == usize::MAX
                    && (0..n).any(|k| {
                        group[k] == next
                            && (roots[k] - roots[j]).norm()
                                < CLUSTER_RADIUS * roots[k].norm().max(1.0)
                    })
                {
                    group[j] = next;
                    changed = true;
                }
            }
        }
        next += 1;
    }
    for g in 0..next {
        let members: Vec<usize> = (0..n).filter(|&i| group[i] == g).collect();
        if members.len() > 1 {
            let mean = members.iter().map(|&i| roots[i]).sum::<Complex64>() / members.len() as f64;
            for &i in &members {
                roots[i] = mean;
            }
        }
    }
    roots
}

/// Eigenvalues of a real square matrix with `d <= 4`.
///
/// Closed form for `d <= 2`; otherwise roots of the characteristic polynomial by
/// Laguerre iteration with deflation and polishing against the full polynomial.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(
            "eigenvalues of a non-square matrix".into(),
        ));
    }
    let d = a.nrows();
    if d == 0 || d > 4 {
        return Err(Error::ShapeMismatch(format!(
            "eigenvalues supported for 1 <= d <= 4, got {d}"
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenvaluesDiverged);
    }
    let roots = match d {
        1 => vec![Complex64::new(a[(0, 0)], 0.0)],
        2 => {
            let tr = a[(0, 0)] + a[(1, 1)];
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            let half = 0.5 * tr;
            let disc = half * half - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                vec![Complex64::new(half + s, 0.0), Complex64::new(half - s, 0.0)]
            } else {
                let s = (-disc).sqrt();
                vec![Complex64::new(half, s), Complex64::new(half, -s)]
            }
        }
        _ => average_clusters(polynomial_roots(&characteristic_polynomial(a))?),
    };
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_exponential() {
        let e = expm(&DMatrix::from_element(1, 1, 0.1)).unwrap();
        assert_relative_eq!(e[(0, 0)], 0.1f64.exp(), max_relative = 1e-14);
        let e = expm(&DMatrix::from_element(1, 1, -7.5)).unwrap();
        assert_relative_eq!(e[(0, 0)], (-7.5f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn nilpotent_exponential() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm(&a).unwrap();
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
    }

    #[test]
    fn rotation_exponential() {
        let t = 2.3;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a).unwrap();
        assert_relative_eq!(e[(0, 0)], t.cos(), epsilon = 1e-13);
        assert_relative_eq!(e[(1, 0)], t.sin(), epsilon = 1e-13);
    }

    #[test]
    fn non_finite_input_fails() {
        assert!(matches!(
            expm(&DMatrix::from_element(1, 1, f64::NAN)),
            Err(Error::ExponentialDiverged)
        ));
    }

    #[test]
    fn zoh_scalar_closed_form() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let b = DMatrix::from_element(1, 1, 1.0);
        let (phi, gamma) = zoh_discretize(&a, &b, 0.1).unwrap();
        assert_relative_eq!(phi[(0, 0)], 0.1f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(gamma[(0, 0)], 0.1f64.exp_m1(), max_relative = 1e-12);
    }

    #[test]
    fn zoh_zero_dynamics() {
        let a = DMatrix::zeros(2, 2);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, -2.0]);
        let (phi, gamma) = zoh_discretize(&a, &b, 0.25).unwrap();
        assert_eq!(phi, DMatrix::identity(2, 2));
        assert_relative_eq!(gamma[(0, 0)], 0.25, max_relative = 1e-15);
        assert_relative_eq!(gamma[(1, 0)], -0.5, max_relative = 1e-15);
    }

    #[test]
    fn characteristic_polynomial_of_companion() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 6.0, 1.0, 0.0, -11.0, 0.0, 1.0, 6.0]);
        let c = characteristic_polynomial(&a);
        assert_relative_eq!(c[0], -6.0, epsilon = 1e-12);
        assert_relative_eq!(c[1], 11.0, epsilon = 1e-12);
        assert_relative_eq!(c[2], -6.0, epsilon = 1e-12);
        assert_eq!(c[3], 1.0);
        let mut re: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (r, e) in re.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*r, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn jordan_block_eigenvalues() {
        let mut a = DMatrix::<f64>::zeros(4, 4);
        for i in 0..4 {
            a[(i, i)] = 0.0;
            if i + 1 < 4 {
                a[(i, i + 1)] = 1.0;
            }
        }
        for z in eigenvalues(&a).unwrap() {
            assert!(z.norm() < 1e-10, "{z}");
        }
    }
}
