//! Real polynomials in the monomial basis, stored as ascending coefficient
//! lists, with complex evaluation, simultaneous root finding and a
//! least-squares fit from complex samples.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Convergence tolerance of the root iteration (relative step size).
pub const ROOT_TOL: f64 = 1e-12;
/// Iteration cap of the root iteration.
pub const ROOT_MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial is identically zero")]
    Zero,
    #[error("root iteration did not converge after {iterations} iterations (backward error {backward_error:e})")]
    NoConvergence { iterations: usize, backward_error: f64 },
    #[error("least-squares fit failed: {0}")]
    Fit(String),
}

/// A real polynomial `c_0 + c_1 x + ... + c_n x^n`.
///
/// Trailing zero coefficients are dropped on construction, so the stored
/// list is either empty (the zero polynomial) or ends in a non-zero entry.
#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Poly {
    fn from(v: Vec<f64>) -> Self {
        Poly::new(v)
    }
}

impl From<Poly> for Vec<f64> {
    fn from(p: Poly) -> Self {
        p.coeffs
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly{:?}", self.coeffs)
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Poly::new(vec![0.0, 1.0])
    }

    /// `x - c`.
    pub fn linear_root(c: f64) -> Self {
        Poly::new(vec![-c, 1.0])
    }

    /// Monic polynomial with the given real roots.
    pub fn from_real_roots(roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Poly::constant(1.0), |acc, &r| &acc * &Poly::linear_root(r))
    }

    /// `(x - z)(x - conj z) = x^2 - 2 Re z x + |z|^2`.
    pub fn conjugate_pair(z: Complex64) -> Self {
        Poly::new(vec![z.norm_sqr(), -2.0 * z.re, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `sum |c_j| |x|^j`, the natural scale for backward-error tests.
    pub fn abs_eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Composition `self(alpha x + beta)`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Poly {
        let lin = Poly::new(vec![beta, alpha]);
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, &c| &(&acc * &lin) + &Poly::constant(c))
    }

    /// Quotient by `x - c`, discarding the remainder.
    pub fn deflate(&self, c: f64) -> Poly {
        let n = self.coeffs.len();
        if n < 2 {
            return Poly::zero();
        }
        let mut q = vec![0.0; n - 1];
        let mut carry = 0.0;
        for j in (1..n).rev() {
            carry = self.coeffs[j] + carry * c;
            q[j - 1] = carry;
        }
        Poly::new(q)
    }

    /// All complex roots, via Aberth–Ehrlich simultaneous iteration
    /// followed by a Newton polish against the original coefficients.
    pub fn roots(&self) -> Result<Vec<Complex64>, PolyError> {
        if self.is_zero() {
            return Err(PolyError::Zero);
        }
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.leading();
        let monic: Vec<f64> = self.coeffs.iter().map(|c| c / lead).collect();
        let p = Poly { coeffs: monic };
        let dp = p.derivative();

        // Fujiwara-type radius for the initial circle.
        let radius = (0..n)
            .map(|k| p.coeffs[k].abs().powf(1.0 / (n - k) as f64))
            .fold(0.0_f64, f64::max)
            .max(1e-3);
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                Complex64::from_polar(radius, theta)
            })
            .collect();

        let mut converged = false;
        for _ in 0..ROOT_MAX_ITER {
            let mut max_step = 0.0_f64;
            for i in 0..n {
                let pz = p.eval_complex(z[i]);
                if pz == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ratio = pz / dp.eval_complex(z[i]);
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (z[i] - z[j]).inv())
                    .sum();
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if step.is_finite() {
                    z[i] -= step;
                    max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
                }
            }
            if max_step <= ROOT_TOL {
                converged = true;
                break;
            }
        }

        for zi in z.iter_mut() {
            polish(&p, &dp, zi);
        }

        if !converged {
            // Multiple roots converge linearly and stall at the noise floor;
            // accept them when the backward error is small.
            let backward_error = z
                .iter()
                .map(|zi| p.eval_complex(*zi).norm() / p.abs_eval(zi.norm()).max(f64::MIN_POSITIVE))
                .fold(0.0_f64, f64::max);
            if !(backward_error < 1e-9) {
                return Err(PolyError::NoConvergence {
                    iterations: ROOT_MAX_ITER,
                    backward_error,
                });
            }
        }
        Ok(z)
    }

    /// Least-squares fit of a real polynomial of the given degree to complex
    /// samples `values[i] ≈ q(points[i])`. The fit is carried out in the
    /// scaled variable `t = (z - center) / radius`, which keeps the design
    /// matrix well conditioned for points spread over the circle
    /// `|z - center| = radius`.
    pub fn fit_complex(
        points: &[Complex64],
        values: &[Complex64],
        degree: usize,
        center: f64,
        radius: f64,
    ) -> Result<Poly, PolyError> {
        let scaled = fit_scaled(points, values, degree, center, radius)?;
        Ok(Poly::new(scaled).compose_affine(1.0 / radius, -center / radius))
    }
}

/// Coefficients of the least-squares fit in the scaled variable
/// `t = (z - center) / radius`.
pub(crate) fn fit_scaled(
    points: &[Complex64],
    values: &[Complex64],
    degree: usize,
    center: f64,
    radius: f64,
) -> Result<Vec<f64>, PolyError> {
    let m = points.len();
    let cols = degree + 1;
    if m < cols {
        return Err(PolyError::Fit(format!(
            "{m} samples cannot determine degree {degree}"
        )));
    }
    let mut design = DMatrix::<f64>::zeros(2 * m, cols);
    let mut rhs = DVector::<f64>::zeros(2 * m);
    for (i, (&z, &g)) in points.iter().zip(values).enumerate() {
        let t = (z - center) / radius;
        let mut tp = Complex64::new(1.0, 0.0);
        for j in 0..cols {
            design[(2 * i, j)] = tp.re;
            design[(2 * i + 1, j)] = tp.im;
            tp *= t;
        }
        rhs[2 * i] = g.re;
        rhs[2 * i + 1] = g.im;
    }
    // Householder QR; the scaled design matrix is well conditioned.
    let qr = design.qr();
    let qtb = qr.q().transpose() * rhs;
    let sol = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| PolyError::Fit("rank-deficient design matrix".into()))?;
    Ok(sol.iter().copied().collect())
}

fn polish(p: &Poly, dp: &Poly, z: &mut Complex64) {
    let mut best = p.eval_complex(*z).norm();
    for _ in 0..3 {
        let d = dp.eval_complex(*z);
        if d.norm() == 0.0 || best == 0.0 {
            return;
        }
        let candidate = *z - p.eval_complex(*z) / d;
        let val = p.eval_complex(candidate).norm();
        if val < best && candidate.is_finite() {
            *z = candidate;
            best = val;
        } else {
            return;
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new(
            (0..n)
                .map(|j| {
                    self.coeffs.get(j).copied().unwrap_or(0.0)
                        + rhs.coeffs.get(j).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Poly {
    /// Roots merged into clusters as by [`cluster_roots`], with the centre
    /// of every multiple cluster refined as a simple root of the
    /// `(multiplicity - 1)`-th derivative. The plain mean of a split multiple
    /// root is only accurate to about the square root of the noise level.
    pub fn root_clusters(&self, tol: f64, real_snap: f64) -> Result<Vec<RootCluster>, PolyError> {
        if self.degree() == 0 {
            return if self.is_zero() { Err(PolyError::Zero) } else { Ok(Vec::new()) };
        }
        let mut clusters = cluster_roots(&self.roots()?, tol, real_snap);
        for c in clusters.iter_mut().filter(|c| c.multiplicity > 1) {
            let mut q = self.clone();
            for _ in 1..c.multiplicity {
                q = q.derivative();
            }
            let dq = q.derivative();
            let mut z = c.center;
            let mut best = q.eval_complex(z).norm();
            for _ in 0..5 {
                let d = dq.eval_complex(z);
                if d.norm() == 0.0 || best == 0.0 {
                    break;
                }
                let cand = z - q.eval_complex(z) / d;
                let val = q.eval_complex(cand).norm();
                if !(val < best) || (cand - c.center).norm() > tol * c.center.norm().max(1.0) {
                    break;
                }
                z = cand;
                best = val;
            }
            if c.center.im == 0.0 {
                z.im = 0.0;
            }
            c.center = z;
        }
        Ok(clusters)
    }
}

/// Groups of (numerically) coincident roots.
#[derive(Debug, Clone, PartialEq)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: u32,
}

/// Merge roots closer than `tol` (relative to `max(1, |z|)`) into clusters
/// located at their mean, and snap clusters with `|Im| < real_snap`, or
/// whose members lie on both sides of the real axis, onto it.
pub fn cluster_roots(roots: &[Complex64], tol: f64, real_snap: f64) -> Vec<RootCluster> {
    let mut remaining: Vec<Complex64> = roots.to_vec();
    let mut clusters = Vec::new();
    while let Some(seed) = remaining.pop() {
        let mut members = vec![seed];
        let mut i = 0;
        while i < remaining.len() {
            let close = members
                .iter()
                .any(|m| (remaining[i] - m).norm() <= tol * m.norm().max(1.0));
            if close {
                members.push(remaining.swap_remove(i));
                i = 0;
            } else {
                i += 1;
            }
        }
        let mut center: Complex64 =
            members.iter().sum::<Complex64>() / members.len() as f64;
        // A multiple real root splits into points on both sides of the axis.
        let straddles = members.iter().any(|m| m.im > 0.0) && members.iter().any(|m| m.im < 0.0);
        if center.im.abs() < real_snap || straddles {
            center.im = 0.0;
        }
        clusters.push(RootCluster {
            center,
            multiplicity: members.len() as u32,
        });
    }
    clusters.sort_by(|a, b| {
        a.center
            .re
            .total_cmp(&b.center.re)
            .then(a.center.im.total_cmp(&b.center.im))
    });
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn arithmetic() {
        let p = Poly::new(vec![1.0, 2.0]);
        let q = Poly::new(vec![-1.0, 0.0, 3.0]);
        assert_eq!((&p * &q).coeffs(), &[-1.0, -2.0, 3.0, 6.0]);
        assert_eq!((&p + &q).coeffs(), &[0.0, 2.0, 3.0]);
        assert_eq!((&q - &q).coeffs(), &[] as &[f64]);
        assert_eq!(q.derivative().coeffs(), &[0.0, 6.0]);
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let p = Poly::new(vec![1.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 0);
        assert!(Poly::new(vec![0.0]).is_zero());
    }

    #[test]
    fn affine_composition_and_deflation() {
        let p = Poly::from_real_roots(&[1.0, -2.0, 0.5]);
        let q = p.compose_affine(2.0, 1.0);
        for x in [-1.3, 0.0, 0.7] {
            assert_abs_diff_eq!(q.eval(x), p.eval(2.0 * x + 1.0), epsilon = 1e-12);
        }
        let d = p.deflate(1.0);
        assert_eq!(d.degree(), 2);
        for x in [-1.0, 0.3, 2.0] {
            assert_abs_diff_eq!(d.eval(x) * (x - 1.0), p.eval(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn roots_of_cubic() {
        let p = Poly::from_real_roots(&[3.0, -1.0, 0.25]);
        let mut r: Vec<f64> = p.roots().unwrap().iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(r[0], -1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(r[1], 0.25, epsilon = 1e-13);
        assert_abs_diff_eq!(r[2], 3.0, epsilon = 1e-13);
    }

    #[test]
    fn complex_roots() {
        let z = Complex64::new(0.5, 1.5);
        let p = &Poly::conjugate_pair(z) * &Poly::linear_root(2.0);
        let roots = p.roots().unwrap();
        assert!(roots.iter().any(|r| (r - z).norm() < 1e-12));
        assert!(roots.iter().any(|r| (r - z.conj()).norm() < 1e-12));
    }

    #[test]
    fn double_root_is_clustered() {
        let p = Poly::from_real_roots(&[1.0, 1.0, -2.0]);
        let roots = p.roots().unwrap();
        let clusters = cluster_roots(&roots, 1e-6, 1e-9);
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[1].multiplicity, 2);
        assert_eq!(clusters[1].center.im, 0.0);
        let refined = p.root_clusters(1e-6, 1e-9).unwrap();
        assert_abs_diff_eq!(refined[1].center.re, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn zero_polynomial_has_no_roots() {
        assert_eq!(Poly::zero().roots(), Err(PolyError::Zero));
        assert!(Poly::constant(2.0).roots().unwrap().is_empty());
    }

    #[test]
    fn fit_recovers_polynomial() {
        let p = Poly::new(vec![0.5, -1.0, 2.0, 0.25]);
        let pts: Vec<Complex64> = (0..16)
            .map(|k| Complex64::new(1.0, 0.0) + Complex64::from_polar(3.0, 0.3 + k as f64 * 0.39))
            .collect();
        let vals: Vec<Complex64> = pts.iter().map(|&z| p.eval_complex(z)).collect();
        let q = Poly::fit_complex(&pts, &vals, 3, 1.0, 3.0).unwrap();
        for (a, b) in p.coeffs().iter().zip(q.coeffs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}
