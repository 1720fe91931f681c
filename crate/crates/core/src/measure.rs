//! Spectral measures `dμ = sqrt|r|/|a| 1_e dx + Σ w_j δ_{E_j}` with a
//! polynomial denominator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::periodic::BandSet;
use crate::poly::{Poly, PolyError};
use num_complex::Complex64;

use crate::quadrature::{band_rule, graded_band_rule, EdgeExponent, HotSpot, Rule};
use crate::singularities::{Resonance, SingularityConfiguration};

/// Default Gauss nodes per band.
pub const DEFAULT_NODES: usize = 256;

/// Relative size of `a(edge)` below which the edge counts as a zero of `a`.
pub const EDGE_ZERO_TOL: f64 = 1e-10;

/// Zeros of `a` closer than this to a band, in the angle variable of the
/// band, switch its rule to a graded composite one.
pub const NEAR_POLE_ANGLE: f64 = 0.1;

/// A point mass `w δ_E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    #[serde(rename = "E")]
    pub e: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub bands: BandSet,
    pub a_poly: Poly,
    pub masses: Vec<PointMass>,
}

/// Finitely supported measure `Σ weights[i] δ_{nodes[i]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `2π sqrt|r(E)| / |a'(E)|`, the weight forced at a simple zero `E` of `a`.
pub fn canonical_weight(bands: &BandSet, a: &Poly, e: f64) -> f64 {
    2.0 * PI * bands.sqrt_abs_r(e) / a.derivative().eval(e).abs()
}

/// Whether `a` vanishes at `x` relative to the size of its terms.
pub fn vanishes_at(a: &Poly, x: f64) -> bool {
    a.eval(x).abs() <= EDGE_ZERO_TOL * a.abs_eval(x)
}

/// Gauss rule on the band `[alpha, beta]` for the weight `sqrt|r| / |a|`.
///
/// The edge factors are absorbed by the rule's weight function: exponent
/// `+1/2` at a regular edge and `-1/2` where `a` has a zero, which is then
/// divided out of `a`. The remaining factor is smooth on the closed band.
pub fn band_density_rule(bands: &BandSet, a: &Poly, band: usize, n: usize) -> Rule {
    let (alpha, beta) = bands.band(band);
    let mut reduced = a.clone();
    let mut exponent = |edge: f64| {
        if vanishes_at(&reduced, edge) {
            reduced = reduced.deflate(edge);
            EdgeExponent::NegHalf
        } else {
            EdgeExponent::Half
        }
    };
    let left = exponent(alpha);
    let right = exponent(beta);
    let spots = near_poles(&reduced, alpha, beta);
    let rule = if spots.is_empty() {
        band_rule(n, alpha, beta, left, right)
    } else {
        graded_band_rule(n, alpha, beta, left, right, &spots)
    };
    let others: Vec<f64> = bands
        .edges()
        .iter()
        .copied()
        .filter(|&e| e != alpha && e != beta)
        .collect();
    let weights = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| {
            let root: f64 = others.iter().map(|e| (x - e).abs().sqrt()).product();
            w * root / reduced.eval(x).abs()
        })
        .collect();
    Rule {
        nodes: rule.nodes,
        weights,
    }
}

/// Zeros of `a` whose angle `θ` in `x = mid - h cos θ` lies within
/// [`NEAR_POLE_ANGLE`] of `[0, π]`.
fn near_poles(a: &Poly, alpha: f64, beta: f64) -> Vec<HotSpot> {
    if a.degree() == 0 {
        return Vec::new();
    }
    let Ok(roots) = a.roots() else { return Vec::new() };
    let h = 0.5 * (beta - alpha);
    let mid = 0.5 * (alpha + beta);
    roots
        .into_iter()
        .filter_map(|z| {
            let th = ((Complex64::new(mid, 0.0) - z) / h).acos();
            let width = th.im.abs();
            let outside = (-th.re).max(th.re - std::f64::consts::PI).max(0.0);
            (width.hypot(outside) < NEAR_POLE_ANGLE).then_some(HotSpot {
                angle: th.re,
                width: width.hypot(outside),
            })
        })
        .collect()
}

/// Mass of the absolutely continuous part `∫_e sqrt|r| / |a| dx`.
pub fn ac_mass(bands: &BandSet, a: &Poly, n: usize) -> f64 {
    (0..bands.p())
        .map(|k| band_density_rule(bands, a, k, n).weights.iter().sum::<f64>())
        .sum()
}

impl SpectralMeasure {
    pub fn new(bands: BandSet, a_poly: Poly, masses: Vec<PointMass>) -> Self {
        SpectralMeasure {
            bands,
            a_poly,
            masses,
        }
    }

    /// `sqrt|r(x)| / |a(x)|` on `Int(e)`, zero off `e`. At an edge where `a`
    /// vanishes the density blows up and `+∞` is returned.
    pub fn ac_density(&self, x: f64) -> f64 {
        if self.bands.in_interior(x) {
            self.bands.sqrt_abs_r(x) / self.a_poly.eval(x).abs()
        } else if self.bands.edges().contains(&x) && vanishes_at(&self.a_poly, x) {
            f64::INFINITY
        } else {
            0.0
        }
    }

    pub fn ac_mass(&self, n: usize) -> f64 {
        ac_mass(&self.bands, &self.a_poly, n)
    }

    pub fn total_mass(&self, n: usize) -> f64 {
        self.ac_mass(n) + self.masses.iter().map(|m| m.w).sum::<f64>()
    }

    pub fn canonical_weight(&self, e: f64) -> f64 {
        canonical_weight(&self.bands, &self.a_poly, e)
    }

    /// Index of the mass at `e`, matched to within `tol`.
    pub fn mass_index(&self, e: f64, tol: f64) -> Option<usize> {
        self.masses.iter().position(|m| (m.e - e).abs() <= tol)
    }

    /// `n` Gauss nodes per band followed by the point masses.
    pub fn discretize(&self, n: usize) -> DiscreteMeasure {
        let mut nodes = Vec::with_capacity(n * self.bands.p() + self.masses.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for k in 0..self.bands.p() {
            let rule = band_density_rule(&self.bands, &self.a_poly, k, n);
            nodes.extend(rule.nodes);
            weights.extend(rule.weights);
        }
        for m in &self.masses {
            nodes.push(m.e);
            weights.push(m.w);
        }
        DiscreteMeasure { nodes, weights }
    }

    /// Density on an evenly spaced grid covering the bands with a margin.
    pub fn density_samples(&self, points: usize) -> Vec<(f64, f64)> {
        let width = self.bands.upper() - self.bands.lower();
        let lo = self.bands.lower() - 0.1 * width;
        let hi = self.bands.upper() + 0.1 * width;
        let step = (hi - lo) / (points.max(2) - 1) as f64;
        (0..points.max(2))
            .map(|i| {
                let x = lo + step * i as f64;
                (x, self.ac_density(x))
            })
            .collect()
    }

    /// Singularities read off the zeros of `a`: real zeros carrying a mass
    /// are eigenvalues, all other zeros are resonances.
    pub fn configuration(&self) -> Result<SingularityConfiguration, PolyError> {
        let mut eigenvalues = Vec::new();
        let mut resonances = Vec::new();
        for c in self.a_poly.root_clusters(1e-5, 1e-9)? {
            if c.center.im == 0.0 {
                if let Some(i) = self.mass_index(c.center.re, 1e-6) {
                    eigenvalues.push(self.masses[i].e);
                    continue;
                }
            }
            resonances.push(Resonance::new(c.center, c.multiplicity));
        }
        Ok(SingularityConfiguration::new(eigenvalues, resonances).sorted())
    }

    /// Violated measure invariants, described in words; empty when valid.
    pub fn invariant_violations(&self, n: usize) -> Vec<String> {
        let mut out = Vec::new();
        for (k, (lo, hi)) in self.bands.bands().enumerate() {
            let mid = 0.5 * (lo + hi);
            if self.a_poly.eval(mid).signum() != self.bands.sg(mid) {
                out.push(format!("sign of a disagrees with sg on band {}", k + 1));
            }
        }
        if let Ok(roots) = self.a_poly.roots() {
            for z in roots {
                if z.im.abs() < 1e-9 && self.bands.in_interior(z.re) {
                    let (_, d) = self.bands.nearest_edge(z.re);
                    if d > 1e-9 {
                        out.push(format!("a vanishes inside a band at {}", z.re));
                    }
                }
            }
        }
        let mass = self.total_mass(n);
        if (mass - 1.0).abs() > 1e-10 {
            out.push(format!("total mass is {mass}, not 1"));
        }
        for m in &self.masses {
            if !(m.w > 0.0) {
                out.push(format!("weight at {} is not positive", m.e));
            }
            if !vanishes_at(&self.a_poly, m.e) || self.a_poly.derivative().eval(m.e) == 0.0 {
                out.push(format!("{} is not a simple zero of a", m.e));
            }
            let c = self.canonical_weight(m.e);
            if (m.w - c).abs() > 1e-10 * c.max(1.0) {
                out.push(format!("weight at {} is {} but the canonical value is {c}", m.e, m.w));
            }
        }
        out
    }
}
