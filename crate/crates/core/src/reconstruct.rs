//! From a spectral measure back to Jacobi coefficients.
//!
//! Two routes are provided. The Hankel route evaluates Heine's determinant
//! formulas on the moments in double-double arithmetic; it is exact in
//! principle but the Hankel matrices become ill-conditioned quickly, so it
//! is only trusted for a dozen or so coefficients. The Stieltjes route runs
//! the Lanczos recurrence on a Gauss discretization of the measure and is
//! the method of choice in practice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ddouble::{DDouble, DD_EPS};
use crate::measure::{DiscreteMeasure, SpectralMeasure};
use crate::operator::EventuallyPeriodicOperator;
use crate::periodic::PeriodicBlock;

/// Default number of Hankel coefficients.
pub const HANKEL_MAX: usize = 12;
/// Initial Stieltjes nodes per band.
pub const STIELTJES_NODES: usize = 512;
/// Cap on Stieltjes nodes per band.
pub const STIELTJES_MAX_NODES: usize = 4096;
/// Largest change allowed when the node count doubles.
pub const STIELTJES_TOL: f64 = 1e-9;
/// Default tolerance of tail detection.
pub const TAIL_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error("Hankel matrix of order {n} is not positive definite")]
    NotPositiveDefinite { n: usize },
    #[error("Hankel determinant of order {n} has relative error bound {bound:e}")]
    LostPrecision { n: usize, bound: f64 },
    #[error("need {needed} moments, got {got}")]
    TooFewMoments { needed: usize, got: usize },
    #[error("coefficients still change by {change:e} at {nodes} nodes per band")]
    QuadratureUnderresolved { nodes: usize, change: f64 },
    #[error("coefficient lists of length {len} are too short for period {p}")]
    InsufficientData { len: usize, p: usize },
    #[error("no periodic tail of period {p} within tolerance {tol:e}")]
    NoTailFound { p: usize, tol: f64 },
}

/// Moments `m_0, m_1, ...` held in double-double, with the relative
/// precision of the values they were made from.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    values: Vec<DDouble>,
    precision: f64,
}

impl MomentSequence {
    /// Moments known only to double precision.
    pub fn from_f64(values: &[f64]) -> Self {
        MomentSequence {
            values: values.iter().map(|&x| DDouble::from(x)).collect(),
            precision: f64::EPSILON / 2.0,
        }
    }

    pub fn from_ddouble(values: Vec<DDouble>, precision: f64) -> Self {
        MomentSequence { values, precision }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: usize) -> DDouble {
        self.values[n]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.to_f64()).collect()
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }
}

/// Moments `∫ x^n dμ` of a discrete measure, accumulated in double-double.
pub fn discrete_moments(measure: &DiscreteMeasure, n_max: usize) -> MomentSequence {
    let mut sums = vec![DDouble::ZERO; n_max + 1];
    for (&x, &w) in measure.nodes.iter().zip(&measure.weights) {
        let xd = DDouble::from(x);
        let mut term = DDouble::from(w);
        for s in sums.iter_mut() {
            *s = *s + term;
            term = term * xd;
        }
    }
    let m0 = sums[0];
    let values = sums.into_iter().map(|s| s / m0).collect();
    // exact moments of this discrete measure up to the accumulation error
    let precision = 4.0 * (n_max + 2) as f64 * DD_EPS;
    MomentSequence::from_ddouble(values, precision)
}

/// Moments `m_0..=m_{n_max}` of a spectral measure, normalized to `m_0 = 1`.
pub fn moments(measure: &SpectralMeasure, n_max: usize) -> MomentSequence {
    discrete_moments(&measure.discretize(STIELTJES_NODES), n_max)
}

/// Jacobi coefficients `a_1, a_2, ...` and `b_1, b_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Coefficients {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `max_n (|a_n - a'_n| + |b_n - b'_n|)` over the common range.
    pub fn max_deviation(&self, other: &Coefficients) -> f64 {
        self.deviations(other).into_iter().fold(0.0, f64::max)
    }

    /// `|a_n - a'_n| + |b_n - b'_n|` for each `n` in the common range.
    pub fn deviations(&self, other: &Coefficients) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .zip(other.a.iter().zip(&other.b))
            .map(|((a, b), (c, d))| (a - c).abs() + (b - d).abs())
            .collect()
    }

    pub fn truncated(&self, n: usize) -> Coefficients {
        Coefficients {
            a: self.a[..n.min(self.a.len())].to_vec(),
            b: self.b[..n.min(self.b.len())].to_vec(),
        }
    }
}

/// Determinant of a small double-double matrix by Gaussian elimination
/// with partial pivoting.
fn dd_det(mut m: Vec<Vec<DDouble>>) -> DDouble {
    let n = m.len();
    let mut det = DDouble::ONE;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col] == DDouble::ZERO {
            return DDouble::ZERO;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det = det * m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                let v = m[col][k];
                m[row][k] = m[row][k] - f * v;
            }
        }
    }
    det
}

/// Coefficients by Heine's formulas, up to [`HANKEL_MAX`] of them.
pub fn hankel_reconstruct(moments: &MomentSequence) -> Result<Coefficients, ReconstructError> {
    let n = HANKEL_MAX.min(moments.len().saturating_sub(1) / 2);
    hankel_reconstruct_n(moments, n)
}

/// `a_1..a_n` from `a_j^2 = h_{j+1} h_{j-1} / h_j^2` and `b_1..b_n` from
/// `b_1 + ... + b_j = g_j / h_j`, where `h_j` is the order-`j` Hankel
/// determinant and `g_j` the same determinant with its last column shifted
/// by one moment. Needs `m_0..=m_{2n}`.
///
/// Each `h_j` carries a first-order error bound from the input precision and
/// the double-double elimination, scaled by the componentwise condition of
/// the diagonally equilibrated Hankel matrix; the reconstruction stops with
/// `LostPrecision` once that bound exceeds `1e-3` relative.
pub fn hankel_reconstruct_n(moments: &MomentSequence, n: usize) -> Result<Coefficients, ReconstructError> {
    let needed = 2 * n + 1;
    if moments.len() < needed {
        return Err(ReconstructError::TooFewMoments {
            needed,
            got: moments.len(),
        });
    }
    let size = n + 1;
    let h = |i: usize, j: usize| moments.get(i + j);

    // Equilibrated LDL^T of the order-(n+1) Hankel matrix. Its leading
    // pivots give every leading determinant at once.
    let mut scale = Vec::with_capacity(size);
    for i in 0..size {
        if !(h(i, i) > DDouble::ZERO) {
            return Err(ReconstructError::NotPositiveDefinite { n: i + 1 });
        }
        scale.push(DDouble::ONE / h(i, i).sqrt());
    }
    let s = |i: usize, j: usize| h(i, j) * scale[i] * scale[j];
    let mut l = vec![vec![DDouble::ZERO; size]; size];
    let mut d = vec![DDouble::ZERO; size];
    for j in 0..size {
        let mut dj = s(j, j);
        for k in 0..j {
            dj = dj - l[j][k] * l[j][k] * d[k];
        }
        if !(dj > DDouble::ZERO) {
            return Err(ReconstructError::NotPositiveDefinite { n: j + 1 });
        }
        d[j] = dj;
        l[j][j] = DDouble::ONE;
        for i in j + 1..size {
            let mut v = s(i, j);
            for k in 0..j {
                v = v - l[i][k] * l[j][k] * d[k];
            }
            l[i][j] = v / dj;
        }
    }

    // Error bounds from |S_j^{-1}| |S_j| for every leading block.
    let lf: Vec<Vec<f64>> = l.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect();
    let df: Vec<f64> = d.iter().map(|x| x.to_f64()).collect();
    for order in 1..=size {
        let inv = ldl_inverse(&lf[..order], &df[..order]);
        let mut cond = 0.0;
        for i in 0..order {
            for j in 0..order {
                let mut row = 0.0;
                for k in 0..order {
                    row += inv[i][k].abs() * s(k, j).to_f64().abs();
                }
                cond += row;
            }
        }
        let bound = (moments.precision() + order as f64 * DD_EPS) * cond;
        if bound > 1e-3 {
            return Err(ReconstructError::LostPrecision { n: order, bound });
        }
    }

    // h_{j+1} / h_j = d_j h(j, j)
    let ratio: Vec<DDouble> = (0..size).map(|j| d[j] * h(j, j)).collect();
    let a = (1..size)
        .map(|j| (ratio[j] / ratio[j - 1]).sqrt().to_f64())
        .collect();

    let mut partial = Vec::with_capacity(n);
    let mut hj = DDouble::ONE;
    for j in 1..=n {
        hj = hj * ratio[j - 1];
        let g: Vec<Vec<DDouble>> = (0..j)
            .map(|r| {
                (0..j)
                    .map(|c| if c + 1 < j { h(r, c) } else { h(r, j) })
                    .collect()
            })
            .collect();
        partial.push(dd_det(g) / hj);
    }
    let b = (0..n)
        .map(|j| {
            if j == 0 {
                partial[0].to_f64()
            } else {
                (partial[j] - partial[j - 1]).to_f64()
            }
        })
        .collect();
    Ok(Coefficients { a, b })
}

/// `S^{-1} = L^{-T} D^{-1} L^{-1}` for a unit lower-triangular `L`.
fn ldl_inverse(l: &[Vec<f64>], d: &[f64]) -> Vec<Vec<f64>> {
    let n = d.len();
    // columns of L^{-1}
    let mut linv = vec![vec![0.0; n]; n];
    for c in 0..n {
        for r in 0..n {
            let mut v = if r == c { 1.0 } else { 0.0 };
            for k in 0..r {
                v -= l[r][k] * linv[k][c];
            }
            linv[r][c] = v;
        }
    }
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = (0..n).map(|k| linv[k][i] * linv[k][j] / d[k]).sum();
        }
    }
    out
}

/// Lanczos with full reorthogonalization on `diag(nodes)` started from
/// `sqrt(weights)`: the first `n` recurrence coefficients of the discrete
/// measure.
pub fn lanczos(measure: &DiscreteMeasure, n: usize) -> Coefficients {
    let total = measure.mass();
    let x = &measure.nodes;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    basis.push(measure.weights.iter().map(|w| (w / total).sqrt()).collect());
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    for j in 0..n {
        let q = &basis[j];
        let mut v: Vec<f64> = q.iter().zip(x).map(|(qi, xi)| qi * xi).collect();
        let bj = dot(q, &v);
        b.push(bj);
        for _ in 0..2 {
            for prev in &basis {
                let c = dot(prev, &v);
                v.iter_mut().zip(prev).for_each(|(vi, pi)| *vi -= c * pi);
            }
        }
        let aj = dot(&v, &v).sqrt();
        a.push(aj);
        if aj == 0.0 {
            break;
        }
        basis.push(v.iter().map(|vi| vi / aj).collect());
    }
    Coefficients { a, b }
}

/// Coefficients from the Lanczos recurrence on a Gauss discretization,
/// doubling the nodes per band until the output settles.
pub fn stieltjes_reconstruct(measure: &SpectralMeasure, n_max: usize) -> Result<Coefficients, ReconstructError> {
    stieltjes_reconstruct_with(measure, n_max, STIELTJES_NODES, STIELTJES_MAX_NODES)
}

pub fn stieltjes_reconstruct_with(
    measure: &SpectralMeasure,
    n_max: usize,
    start: usize,
    cap: usize,
) -> Result<Coefficients, ReconstructError> {
    let mut nodes = start;
    let mut current = lanczos(&measure.discretize(nodes), n_max);
    let mut change = f64::INFINITY;
    while 2 * nodes <= cap {
        let finer = lanczos(&measure.discretize(2 * nodes), n_max);
        change = current.max_deviation(&finer);
        nodes *= 2;
        current = finer;
        if change < STIELTJES_TOL {
            return Ok(current);
        }
    }
    Err(ReconstructError::QuadratureUnderresolved { nodes, change })
}

/// A detected periodic tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub s: usize,
    pub tail: PeriodicBlock,
    pub k: usize,
    /// Set when the `a_s` comparison that decides between `2s` and
    /// `2s - 1` is within a decade of the tolerance.
    pub ambiguous: bool,
}

/// Smallest `s` after which the coefficients repeat with period `p`
/// within `tol`, the tail block read from positions `s+1..=s+p`, and the
/// class index (`2s` if `a_s` breaks the pattern, `2s - 1` if only `b_s`
/// does).
pub fn detect_tail(a: &[f64], b: &[f64], p: usize, tol: f64) -> Result<TailFit, ReconstructError> {
    let len = a.len().min(b.len());
    if p == 0 || len < 2 * p + 2 {
        return Err(ReconstructError::InsufficientData { len, p });
    }
    let periodic_at = |n: usize| (a[n + p] - a[n]).abs() + (b[n + p] - b[n]).abs() < tol;
    // zero-based: position n compares n and n + p
    let mut s = len - p;
    while s > 0 && periodic_at(s - 1) {
        s -= 1;
    }
    if s + 2 * p > len {
        return Err(ReconstructError::NoTailFound { p, tol });
    }
    let tail = PeriodicBlock::new(a[s..s + p].to_vec(), b[s..s + p].to_vec())
        .map_err(|_| ReconstructError::NoTailFound { p, tol })?;
    let (k, ambiguous) = if s == 0 {
        (0, false)
    } else {
        let da = (a[s - 1] - a[s - 1 + p]).abs();
        let amb = da > 0.1 * tol && da < 10.0 * tol;
        (if da >= tol { 2 * s } else { 2 * s - 1 }, amb)
    };
    Ok(TailFit {
        s,
        tail,
        k,
        ambiguous,
    })
}

impl TailFit {
    /// The eventually periodic matrix with head `a_1..a_s`, `b_1..b_s`.
    pub fn operator(&self, coeffs: &Coefficients) -> EventuallyPeriodicOperator {
        EventuallyPeriodicOperator::new(
            coeffs.a[..self.s].to_vec(),
            coeffs.b[..self.s].to_vec(),
            self.tail.clone(),
        )
        .expect("reconstructed coefficients are positive")
    }
}

/// Output of a reconstruction together with its tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub s: usize,
    pub k: usize,
    pub tail: PeriodicBlock,
}

impl CoefficientReport {
    pub fn new(coeffs: &Coefficients, fit: &TailFit) -> Self {
        CoefficientReport {
            a: coeffs.a.clone(),
            b: coeffs.b.clone(),
            s: fit.s,
            k: fit.k,
            tail: fit.tail.clone(),
        }
    }

    pub fn operator(&self) -> EventuallyPeriodicOperator {
        EventuallyPeriodicOperator::new(
            self.a[..self.s].to_vec(),
            self.b[..self.s].to_vec(),
            self.tail.clone(),
        )
        .expect("reconstructed coefficients are positive")
    }

    /// `n,a_n,b_n` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,a_n,b_n\n");
        for (i, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", i + 1, a, b));
        }
        out
    }
}
