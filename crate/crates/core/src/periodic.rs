//! Periodic Jacobi machinery: blocks, discriminants, band sets, the
//! two-sheeted periodic m-function and the block form of `Δ(J)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::EventuallyPeriodicOperator;
use crate::poly::{Poly, PolyError};

/// Two edges closer than this are treated as a closed gap.
pub const CLOSED_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeriodicError {
    #[error("invalid periodic block: {0}")]
    InvalidBlock(String),
    #[error("invalid band set: {0}")]
    InvalidBands(String),
    #[error("discriminant has a closed gap near x = {near}")]
    ClosedGap { near: f64 },
    #[error("discriminant level set has a non-real root {re} + {im}i")]
    NonReal { re: f64, im: f64 },
    #[error("pole of the periodic m-function at z = {re} + {im}i")]
    PoleHit { re: f64, im: f64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// One period `(a_1..a_p, b_1..b_p)` of a periodic Jacobi matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockRepr", into = "BlockRepr")]
pub struct PeriodicBlock {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BlockRepr {
    p: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<BlockRepr> for PeriodicBlock {
    type Error = PeriodicError;
    fn try_from(r: BlockRepr) -> Result<Self, Self::Error> {
        if r.a.len() != r.p || r.b.len() != r.p {
            return Err(PeriodicError::InvalidBlock(format!(
                "p = {} but a has {} and b has {} entries",
                r.p,
                r.a.len(),
                r.b.len()
            )));
        }
        PeriodicBlock::new(r.a, r.b)
    }
}

impl From<PeriodicBlock> for BlockRepr {
    fn from(b: PeriodicBlock) -> Self {
        BlockRepr {
            p: b.a.len(),
            a: b.a,
            b: b.b,
        }
    }
}

impl PeriodicBlock {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, PeriodicError> {
        if a.is_empty() {
            return Err(PeriodicError::InvalidBlock("period must be at least 1".into()));
        }
        if a.len() != b.len() {
            return Err(PeriodicError::InvalidBlock(format!(
                "a has {} entries, b has {}",
                a.len(),
                b.len()
            )));
        }
        if let Some(x) = a.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(PeriodicError::InvalidBlock(format!(
                "off-diagonal entries must be positive, got {x}"
            )));
        }
        if let Some(x) = b.iter().find(|x| !x.is_finite()) {
            return Err(PeriodicError::InvalidBlock(format!("non-finite diagonal entry {x}")));
        }
        Ok(PeriodicBlock { a, b })
    }

    /// The free block `a = 1, b = 0` of period one.
    pub fn free() -> Self {
        PeriodicBlock {
            a: vec![1.0],
            b: vec![0.0],
        }
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Block of the shifted matrix: `(a_{k+1}, ..., a_p, a_1, ..., a_k)`.
    pub fn rotated(&self, k: usize) -> PeriodicBlock {
        let p = self.p();
        let k = k % p;
        let rot = |v: &[f64]| v[k..].iter().chain(&v[..k]).copied().collect::<Vec<_>>();
        PeriodicBlock {
            a: rot(&self.a),
            b: rot(&self.b),
        }
    }

    /// Whether every entry is free (`a = 1`, `b = 0`).
    pub fn is_free(&self) -> bool {
        self.a.iter().all(|&x| x == 1.0) && self.b.iter().all(|&x| x == 0.0)
    }

    /// Composite stripping map over one period, as the polynomial entries
    /// `[A, B, C, D]` of `M_1 M_2 ... M_p` with
    /// `M_j = [[0, 1], [-a_j^2, b_j - z]]`. The periodic m-function is a
    /// fixed point of `m ↦ (A m + B) / (C m + D)`.
    pub fn stripping_matrix(&self) -> [Poly; 4] {
        let mut acc = [
            Poly::constant(1.0),
            Poly::zero(),
            Poly::zero(),
            Poly::constant(1.0),
        ];
        for (&a, &b) in self.a.iter().zip(&self.b) {
            let m = [
                Poly::zero(),
                Poly::constant(1.0),
                Poly::constant(-a * a),
                Poly::new(vec![b, -1.0]),
            ];
            acc = mat_mul(&acc, &m);
        }
        acc
    }
}

fn mat_mul(x: &[Poly; 4], y: &[Poly; 4]) -> [Poly; 4] {
    [
        &(&x[0] * &y[0]) + &(&x[1] * &y[2]),
        &(&x[0] * &y[1]) + &(&x[1] * &y[3]),
        &(&x[2] * &y[0]) + &(&x[3] * &y[2]),
        &(&x[2] * &y[1]) + &(&x[3] * &y[3]),
    ]
}

/// Discriminant: trace of the one-period transfer matrix
/// `T(z) = A_p(z) ... A_1(z)` with `A_j = (1/a_j) [[z - b_j, -1], [a_j^2, 0]]`.
pub fn discriminant(block: &PeriodicBlock) -> Poly {
    let mut t = [
        Poly::constant(1.0),
        Poly::zero(),
        Poly::zero(),
        Poly::constant(1.0),
    ];
    for (&a, &b) in block.a.iter().zip(&block.b) {
        let step = [
            Poly::new(vec![-b / a, 1.0 / a]),
            Poly::constant(-1.0 / a),
            Poly::constant(a),
            Poly::zero(),
        ];
        t = mat_mul(&step, &t);
    }
    &t[0] + &t[3]
}

/// The finite gap set `e = ∪ [α_j, β_j]` with all gaps open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BandRepr", into = "BandRepr")]
pub struct BandSet {
    edges: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BandRepr {
    edges: Vec<f64>,
}

impl TryFrom<BandRepr> for BandSet {
    type Error = PeriodicError;
    fn try_from(r: BandRepr) -> Result<Self, Self::Error> {
        BandSet::new(r.edges)
    }
}

impl From<BandSet> for BandRepr {
    fn from(b: BandSet) -> Self {
        BandRepr { edges: b.edges }
    }
}

impl BandSet {
    pub fn new(edges: Vec<f64>) -> Result<Self, PeriodicError> {
        if edges.len() < 2 || edges.len() % 2 != 0 {
            return Err(PeriodicError::InvalidBands(format!(
                "need an even, positive number of edges, got {}",
                edges.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(PeriodicError::InvalidBands("non-finite edge".into()));
        }
        if let Some(w) = edges.windows(2).find(|w| w[0] >= w[1]) {
            return Err(PeriodicError::InvalidBands(format!(
                "edges must be strictly increasing ({} >= {})",
                w[0], w[1]
            )));
        }
        Ok(BandSet { edges })
    }

    /// The single band `[-2, 2]` of the free operator.
    pub fn free() -> Self {
        BandSet {
            edges: vec![-2.0, 2.0],
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Number of bands.
    pub fn p(&self) -> usize {
        self.edges.len() / 2
    }

    /// `(α_k, β_k)` for the zero-based band index `k`.
    pub fn band(&self, k: usize) -> (f64, f64) {
        (self.edges[2 * k], self.edges[2 * k + 1])
    }

    pub fn bands(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges.chunks(2).map(|c| (c[0], c[1]))
    }

    /// Open gaps `(β_k, α_{k+1})`.
    pub fn gaps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges[1..self.edges.len() - 1]
            .chunks(2)
            .map(|c| (c[0], c[1]))
    }

    pub fn lower(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower() + self.upper())
    }

    pub fn max_abs_edge(&self) -> f64 {
        self.lower().abs().max(self.upper().abs())
    }

    /// `r(x) = ∏ (x - α_j)(x - β_j)`.
    pub fn r_poly(&self) -> Poly {
        Poly::from_real_roots(&self.edges)
    }

    /// `sqrt(|r(x)|)` for real `x`.
    pub fn sqrt_abs_r(&self, x: f64) -> f64 {
        self.edges.iter().map(|e| (x - e).abs().sqrt()).product()
    }

    /// The branch of `sqrt(r(z))` analytic off `e` and positive on
    /// `(β_p, ∞)`. On the real axis the upper-edge limit `x + i0` is used.
    pub fn sqrt_r(&self, z: Complex64) -> Complex64 {
        self.edges
            .iter()
            .map(|&e| sqrt_upper(z - e))
            .product()
    }

    /// Zero-based index of the band containing `x` in its interior.
    pub fn interior_band(&self, x: f64) -> Option<usize> {
        self.bands().position(|(lo, hi)| x > lo && x < hi)
    }

    pub fn in_interior(&self, x: f64) -> bool {
        self.interior_band(x).is_some()
    }

    /// Closed membership `x ∈ e`.
    pub fn contains(&self, x: f64) -> bool {
        self.bands().any(|(lo, hi)| x >= lo && x <= hi)
    }

    /// `sg_e(x) = (-1)^{p-k}` on the interior of band `k` (one-based), 0 otherwise.
    pub fn sg(&self, x: f64) -> f64 {
        match self.interior_band(x) {
            Some(k) if (self.p() - 1 - k) % 2 == 0 => 1.0,
            Some(_) => -1.0,
            None => 0.0,
        }
    }

    /// Euclidean distance from `z` to the set `e`.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.bands()
            .map(|(lo, hi)| {
                let x = z.re.clamp(lo, hi);
                (z - x).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Nearest edge to real `x` as `(edge value, distance)`.
    pub fn nearest_edge(&self, x: f64) -> (f64, f64) {
        self.edges
            .iter()
            .map(|&e| (e, (x - e).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("band set has edges")
    }

    /// Zero-based gap index if `x` lies in the open gap `(β_k, α_{k+1})`.
    pub fn gap_index(&self, x: f64) -> Option<usize> {
        self.gaps().position(|(lo, hi)| x > lo && x < hi)
    }
}

/// `sqrt(w)` with the principal branch, taking `w + i0` on the negative axis.
fn sqrt_upper(w: Complex64) -> Complex64 {
    if w.im == 0.0 {
        if w.re >= 0.0 {
            Complex64::new(w.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-w.re).sqrt())
        }
    } else {
        w.sqrt()
    }
}

/// Band edges `Δ^{-1}({-2, 2})` of a discriminant.
pub fn band_set(delta: &Poly) -> Result<BandSet, PeriodicError> {
    let p = delta.degree();
    if p == 0 || delta.is_zero() {
        return Err(PeriodicError::InvalidBands(
            "discriminant must have degree at least 1".into(),
        ));
    }
    let scale = delta.leading().abs();

    // A closed gap is a critical point of Δ where |Δ| = 2.
    let dp = delta.derivative();
    for c in dp.roots()? {
        if c.im.abs() <= 1e-8 * c.norm().max(1.0) {
            let v = delta.eval(c.re);
            let tol = 1e-8 * delta.abs_eval(c.re).max(1.0);
            if (v.abs() - 2.0).abs() <= tol {
                return Err(PeriodicError::ClosedGap { near: c.re });
            }
        }
    }

    let mut edges = Vec::with_capacity(2 * p);
    for level in [2.0, -2.0] {
        let shifted = delta - &Poly::constant(level);
        for z in shifted.roots()? {
            if z.im.abs() > 1e-8 * z.norm().max(1.0) {
                return Err(PeriodicError::NonReal { re: z.re, im: z.im });
            }
            edges.push(polish_real(&shifted, z.re));
        }
    }
    edges.sort_by(f64::total_cmp);
    if let Some(w) = edges
        .windows(2)
        .find(|w| (w[1] - w[0]) <= CLOSED_GAP_TOL * w[0].abs().max(1.0))
    {
        return Err(PeriodicError::ClosedGap {
            near: 0.5 * (w[0] + w[1]),
        });
    }
    let _ = scale;
    BandSet::new(edges)
}

fn polish_real(p: &Poly, mut x: f64) -> f64 {
    let dp = p.derivative();
    for _ in 0..4 {
        let d = dp.eval(x);
        if d == 0.0 {
            break;
        }
        let next = x - p.eval(x) / d;
        if (p.eval(next)).abs() < p.eval(x).abs() {
            x = next;
        } else {
            break;
        }
    }
    x
}

/// Sheet of the two-sheeted surface `S_e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    Plus,
    Minus,
}

impl Sheet {
    pub fn other(self) -> Sheet {
        match self {
            Sheet::Plus => Sheet::Minus,
            Sheet::Minus => Sheet::Plus,
        }
    }

    pub(crate) fn sign(self) -> f64 {
        match self {
            Sheet::Plus => 1.0,
            Sheet::Minus => -1.0,
        }
    }
}

/// A point of `S_e`: a complex number tagged with its sheet. Real points on
/// a band are taken as limits from the upper half-plane of their sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub z: Complex64,
    pub sheet: Sheet,
}

impl SurfacePoint {
    pub fn new(z: Complex64, sheet: Sheet) -> Self {
        SurfacePoint { z, sheet }
    }

    pub fn plus(z: Complex64) -> Self {
        SurfacePoint::new(z, Sheet::Plus)
    }

    pub fn minus(z: Complex64) -> Self {
        SurfacePoint::new(z, Sheet::Minus)
    }

    pub fn real(x: f64, sheet: Sheet) -> Self {
        SurfacePoint::new(Complex64::new(x, 0.0), sheet)
    }

    /// The involution `(z, ±) ↦ (conj z, ∓)`.
    pub fn sharp(self) -> Self {
        SurfacePoint::new(self.z.conj(), self.sheet.other())
    }
}

/// The periodic m-function of a block, continued to both sheets.
///
/// With `[A, B, C, D]` the composite stripping map, the two sheet values
/// are the roots `(A - D ± sqrt(r)) / (2C)` of `C m^2 + (D - A) m - B = 0`.
/// The sign in front of `sqrt(r)` is pinned once by the asymptotics
/// `m ~ -1/z` at `∞_+` and never changes, because `sqrt(r)` is analytic
/// off the bands.
#[derive(Debug, Clone)]
pub struct PeriodicM {
    bands: BandSet,
    abcd: [Poly; 4],
    branch: f64,
}

impl PeriodicM {
    pub fn new(block: &PeriodicBlock) -> Result<Self, PeriodicError> {
        let bands = band_set(&discriminant(block))?;
        let abcd = block.stripping_matrix();
        let mut this = PeriodicM {
            bands,
            abcd,
            branch: 1.0,
        };
        let z0 = Complex64::new(4.0 * this.bands.max_abs_edge() + 10.0, 0.0);
        let anchor = |m: Complex64| (z0 * m + 1.0).norm();
        let (n_p, d_p) = this.root(z0, 1.0);
        let (n_m, d_m) = this.root(z0, -1.0);
        if anchor(n_m / d_m) < anchor(n_p / d_p) {
            this.branch = -1.0;
        }
        Ok(this)
    }

    pub fn bands(&self) -> &BandSet {
        &self.bands
    }

    /// Polynomial entries `[A, B, C, D]`.
    pub fn quadratic(&self) -> &[Poly; 4] {
        &self.abcd
    }

    /// Root with the given overall sign in front of `sqrt(r)`, as a
    /// numerator/denominator pair. Chooses between the two algebraically
    /// equivalent forms to avoid cancellation.
    fn root(&self, z: Complex64, sign: f64) -> (Complex64, Complex64) {
        let [a, b, c, d] = &self.abcd;
        let (av, bv, cv, dv) = (
            a.eval_complex(z),
            b.eval_complex(z),
            c.eval_complex(z),
            d.eval_complex(z),
        );
        let u = av - dv;
        let v = self.bands.sqrt_r(z) * sign;
        let (num, den) = if (u + v).norm() >= (u - v).norm() {
            (u + v, cv * 2.0)
        } else {
            (bv * -2.0, u - v)
        };
        normalize(num, den)
    }

    /// `m°(pt)` as a normalized numerator/denominator pair
    /// (`max(|num|, |den|) = 1`); a pole shows up as `den ≈ 0`.
    pub fn eval_projective(&self, pt: SurfacePoint) -> (Complex64, Complex64) {
        self.root(pt.z, self.branch * pt.sheet.sign())
    }

    pub fn eval(&self, pt: SurfacePoint) -> Result<Complex64, PeriodicError> {
        let (num, den) = self.eval_projective(pt);
        if den.norm() < 1e-13 {
            return Err(PeriodicError::PoleHit {
                re: pt.z.re,
                im: pt.z.im,
            });
        }
        Ok(num / den)
    }
}

pub(crate) fn normalize(num: Complex64, den: Complex64) -> (Complex64, Complex64) {
    let s = num.norm().max(den.norm());
    if s == 0.0 || !s.is_finite() {
        (num, den)
    } else {
        (num / s, den / s)
    }
}

/// `m°(pt)` for a periodic block.
pub fn periodic_m(block: &PeriodicBlock, pt: SurfacePoint) -> Result<Complex64, PeriodicError> {
    PeriodicM::new(block)?.eval(pt)
}

/// Block-Jacobi form of `Δ(J)`: returns `d_n = ‖A_n - I‖_F + ‖B_n‖_F`
/// for `n = 1..=n_max`, where `B_n` and `A_n` are the diagonal and
/// super-diagonal `p × p` blocks of `Δ(J)`.
///
/// `J` is extended to a two-sided matrix by continuing the tail's periodic
/// pattern to non-positive indices, so that an exactly periodic matrix has
/// no boundary contribution in `B_1` and every `d_n` vanishes.
pub fn magic_check(op: &EventuallyPeriodicOperator, n_max: usize) -> Vec<f64> {
    let p = op.p();
    let delta = discriminant(op.tail());
    let margin = 2 * p as i64;
    let lo = 1 - margin;
    let hi = (n_max as i64 + 1) * p as i64 + margin;
    let size = (hi - lo + 1) as usize;

    let mut j = DMatrix::<f64>::zeros(size, size);
    for site in lo..=hi {
        let i = (site - lo) as usize;
        let (a, b) = op.two_sided_coefficient(site);
        j[(i, i)] = b;
        if i + 1 < size {
            j[(i, i + 1)] = a;
            j[(i + 1, i)] = a;
        }
    }

    let coeffs = delta.coeffs();
    let identity = DMatrix::<f64>::identity(size, size);
    let mut dj = &identity * *coeffs.last().unwrap_or(&0.0);
    for &c in coeffs.iter().rev().skip(1) {
        dj = &dj * &j + &identity * c;
    }

    (1..=n_max)
        .map(|n| {
            let row0 = ((n as i64 - 1) * p as i64 + 1 - lo) as usize;
            let b_block = dj.view((row0, row0), (p, p));
            let a_block = dj.view((row0, row0 + p), (p, p));
            let a_dev = (a_block - DMatrix::<f64>::identity(p, p)).norm();
            a_dev + b_block.norm()
        })
        .collect()
}
