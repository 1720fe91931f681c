//! Gauss rules for the four Chebyshev-type weights
//! `(1 + t)^{±1/2} (1 - t)^{±1/2}` on `[-1, 1]`, and their affine images on
//! a band `[alpha, beta]`.
//!
//! All four rules have closed-form nodes and weights, so no eigenvalue
//! solve is needed. They absorb the square-root behaviour of band densities
//! at the edges exactly: `+1/2` for a regular edge and `-1/2` at an edge
//! where the density denominator vanishes.
//!
//! When the rest of the integrand has a pole close to the band, a composite
//! rule graded towards the pole takes over.

use std::f64::consts::PI;

/// Exponent of the edge factor in the weight function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeExponent {
    /// `|x - edge|^{1/2}`
    Half,
    /// `|x - edge|^{-1/2}`
    NegHalf,
}

impl EdgeExponent {
    pub fn value(self) -> f64 {
        match self {
            EdgeExponent::Half => 0.5,
            EdgeExponent::NegHalf => -0.5,
        }
    }
}

/// Nodes and weights of an `n`-point rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss rule on `[-1, 1]` for the weight `(1 + t)^{left} (1 - t)^{right}`.
pub fn chebyshev_rule(n: usize, left: EdgeExponent, right: EdgeExponent) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    let nf = n as f64;
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match (left, right) {
        (EdgeExponent::Half, EdgeExponent::Half) => (1..=n)
            .map(|k| {
                let th = k as f64 * PI / (nf + 1.0);
                (th.cos(), PI / (nf + 1.0) * th.sin().powi(2))
            })
            .unzip(),
        (EdgeExponent::NegHalf, EdgeExponent::NegHalf) => (1..=n)
            .map(|k| {
                let th = (2 * k - 1) as f64 * PI / (2.0 * nf);
                (th.cos(), PI / nf)
            })
            .unzip(),
        // sqrt((1 + t) / (1 - t))
        (EdgeExponent::Half, EdgeExponent::NegHalf) => (1..=n)
            .map(|k| {
                let th = (2 * k - 1) as f64 * PI / (2.0 * nf + 1.0);
                let t = th.cos();
                (t, 2.0 * PI / (2.0 * nf + 1.0) * (1.0 + t))
            })
            .unzip(),
        // sqrt((1 - t) / (1 + t))
        (EdgeExponent::NegHalf, EdgeExponent::Half) => (1..=n)
            .map(|k| {
                let th = (2 * k) as f64 * PI / (2.0 * nf + 1.0);
                let t = th.cos();
                (t, 2.0 * PI / (2.0 * nf + 1.0) * (1.0 - t))
            })
            .unzip(),
    };
    Rule { nodes, weights }
}

/// Rule on `[alpha, beta]` for `(x - alpha)^{left} (beta - x)^{right}`.
pub fn band_rule(
    n: usize,
    alpha: f64,
    beta: f64,
    left: EdgeExponent,
    right: EdgeExponent,
) -> Rule {
    let base = chebyshev_rule(n, left, right);
    let h = 0.5 * (beta - alpha);
    let mid = 0.5 * (alpha + beta);
    let jac = h.powf(left.value() + right.value() + 1.0);
    Rule {
        nodes: base.nodes.iter().map(|t| mid + h * t).collect(),
        weights: base.weights.iter().map(|w| w * jac).collect(),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Rule {
    assert!(m > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { t } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (t * pm - pm1) / (t * t - 1.0);
            let step = pm / dp;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        nodes[i] = t;
        weights[i] = w;
        nodes[m - 1 - i] = -t;
        weights[m - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// A point near which an integrand varies on the scale `width`, in the
/// angle `θ ∈ [0, π]` of `x = mid - h cos θ`.
#[derive(Debug, Clone, Copy)]
pub struct HotSpot {
    pub angle: f64,
    pub width: f64,
}

/// Composite rule on `[alpha, beta]` for `(x - alpha)^{left} (beta - x)^{right}`
/// with about `n` nodes in total.
///
/// After `x = mid - h cos θ` the weight becomes a smooth trigonometric factor,
/// and `θ ∈ [0, π]` is cut into Gauss–Legendre panels that shrink
/// geometrically towards each hot spot down to its width. This resolves
/// integrands with poles just off the band, where a single Chebyshev rule
/// would need a number of nodes inversely proportional to the distance.
pub fn graded_band_rule(
    n: usize,
    alpha: f64,
    beta: f64,
    left: EdgeExponent,
    right: EdgeExponent,
    spots: &[HotSpot],
) -> Rule {
    let mut cuts = vec![0.0, PI];
    for spot in spots {
        let c = spot.angle.clamp(0.0, PI);
        cuts.push(c);
        let mut d = spot.width.max(1e-14);
        while d < PI {
            cuts.push(c - d);
            cuts.push(c + d);
            d *= 2.0;
        }
    }
    cuts.retain(|t| (0.0..=PI).contains(t));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let panels = cuts.len() - 1;
    let per_panel = (n / panels).max(8);
    let base = gauss_legendre(per_panel);

    let h = 0.5 * (beta - alpha);
    let mid = 0.5 * (alpha + beta);
    let scale = (2.0 * h).powf(left.value() + right.value() + 1.0);
    let (ps, pc) = (2.0 * left.value() + 1.0, 2.0 * right.value() + 1.0);
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let half = 0.5 * (t1 - t0);
        for (&u, &g) in base.nodes.iter().zip(&base.weights) {
            let th = t0 + half * (u + 1.0);
            let (s, c) = (0.5 * th).sin_cos();
            nodes.push(mid - h * th.cos());
            weights.push(g * half * scale * s.powf(ps) * c.powf(pc));
        }
    }
    Rule { nodes, weights }
}
