//! The inverse problem: from eigenvalues and resonances to the spectral
//! measure of the unique finite-range perturbation that has them.
//!
//! A configuration is admissible when it satisfies four conditions:
//!
//! * `O1` – real singularities oddly interlace: counting outward from any
//!   band edge along the adjacent gap (or half-line), no eigenvalue sits at
//!   an even position, and no point is both an eigenvalue and a resonance;
//! * `O2` – every gap holds an odd number of singularities;
//! * `O3` – eigenvalues are real, simple and off the bands;
//! * `O4` – resonances avoid band interiors, come in conjugate pairs of
//!   equal multiplicity, and are simple at band edges.
//!
//! The measure then has denominator `a(z) = A ∏ (z - R_j) ∏ (z - E_j)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{ac_mass, canonical_weight, PointMass, SpectralMeasure, DEFAULT_NODES};
use crate::periodic::BandSet;
use crate::poly::Poly;
use crate::singularities::{Kind, SingularityConfiguration, COINCIDENCE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clause {
    O1,
    O2,
    O3,
    O4,
}

impl std::fmt::Display for Clause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub clause: Clause,
    pub message: String,
    pub witnesses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn violates(&self, clause: Clause) -> bool {
        self.violations.iter().any(|v| v.clause == clause)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.valid {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("({}) {}", v.clause, v.message))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InverseError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(ValidationReport),
    #[error("normalization failed: total mass {0}")]
    Normalization(f64),
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, clause: Clause, message: String, witnesses: Vec<f64>) {
        self.violations.push(Violation {
            clause,
            message,
            witnesses,
        });
    }
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= COINCIDENCE_TOL
}

/// Check a configuration against `O1`–`O4`.
pub fn validate_configuration(cfg: &SingularityConfiguration, bands: &BandSet) -> ValidationReport {
    let mut ck = Checker {
        violations: Vec::new(),
    };

    // O3
    for (i, &e) in cfg.eigenvalues.iter().enumerate() {
        if !e.is_finite() {
            ck.fail(Clause::O3, format!("eigenvalue {e} is not finite"), vec![e]);
        } else if bands.contains(e) || near(bands.nearest_edge(e).0, e) {
            ck.fail(Clause::O3, format!("eigenvalue {e} lies on the spectrum"), vec![e]);
        }
        if cfg.eigenvalues[..i].iter().any(|&f| near(e, f)) {
            ck.fail(Clause::O3, format!("eigenvalue {e} is not simple"), vec![e]);
        }
    }

    // O4
    for r in &cfg.resonances {
        if r.mult == 0 || !r.re.is_finite() || !r.im.is_finite() {
            ck.fail(
                Clause::O4,
                format!("resonance {}{:+}i has invalid data", r.re, r.im),
                vec![r.re, r.im],
            );
            continue;
        }
        if r.is_real() {
            let (edge, d) = bands.nearest_edge(r.re);
            if d > COINCIDENCE_TOL && bands.in_interior(r.re) {
                ck.fail(Clause::O4, format!("resonance {} lies inside a band", r.re), vec![r.re]);
            }
            if d <= COINCIDENCE_TOL {
                let total: u32 = cfg
                    .resonances
                    .iter()
                    .filter(|s| s.is_real() && near(s.re, edge))
                    .map(|s| s.mult)
                    .sum();
                if total > 1 {
                    ck.fail(
                        Clause::O4,
                        format!("edge resonance at {edge} has multiplicity {total}"),
                        vec![edge],
                    );
                }
            }
        } else {
            let mult_at = |re: f64, im: f64| -> u32 {
                cfg.resonances
                    .iter()
                    .filter(|s| near(s.re, re) && near(s.im, im))
                    .map(|s| s.mult)
                    .sum()
            };
            let here = mult_at(r.re, r.im);
            let there = mult_at(r.re, -r.im);
            if here != there && r.im > 0.0 {
                ck.fail(
                    Clause::O4,
                    format!(
                        "resonance {}{:+}i has multiplicity {here} but its conjugate has {there}",
                        r.re, r.im
                    ),
                    vec![r.re, r.im],
                );
            } else if here != there && there == 0 {
                ck.fail(
                    Clause::O4,
                    format!("resonance {}{:+}i has no conjugate partner", r.re, r.im),
                    vec![r.re, r.im],
                );
            }
        }
    }

    let points = cfg.real_points();

    // O1: disjointness
    for &e in &cfg.eigenvalues {
        if cfg
            .resonances
            .iter()
            .any(|r| r.is_real() && near(r.re, e))
        {
            ck.fail(Clause::O1, format!("{e} is both an eigenvalue and a resonance"), vec![e]);
        }
    }

    // O1: parity outward from each edge. Edge points belong to both
    // orderings that reach them.
    let p = bands.p();
    for k in 0..p {
        let (alpha, beta) = bands.band(k);
        let right_end = if k + 1 < p {
            bands.band(k + 1).0
        } else {
            f64::INFINITY
        };
        let left_end = if k > 0 {
            bands.band(k - 1).1
        } else {
            f64::NEG_INFINITY
        };
        let outward_right: Vec<&(f64, Kind)> = points
            .iter()
            .filter(|(x, _)| *x >= beta - COINCIDENCE_TOL && *x <= right_end + COINCIDENCE_TOL)
            .collect();
        let outward_left: Vec<&(f64, Kind)> = points
            .iter()
            .rev()
            .filter(|(x, _)| *x <= alpha + COINCIDENCE_TOL && *x >= left_end - COINCIDENCE_TOL)
            .collect();
        for (edge, seq) in [(beta, outward_right), (alpha, outward_left)] {
            for (i, (x, kind)) in seq.iter().enumerate() {
                if i % 2 == 1 && *kind == Kind::Eigenvalue {
                    ck.fail(
                        Clause::O1,
                        format!(
                            "eigenvalue {x} is at even position {} counted from the edge {edge}",
                            i + 1
                        ),
                        vec![*x, edge],
                    );
                }
            }
        }
    }

    // O2
    for (g, (lo, hi)) in bands.gaps().enumerate() {
        let count = points
            .iter()
            .filter(|(x, _)| *x >= lo - COINCIDENCE_TOL && *x <= hi + COINCIDENCE_TOL)
            .count();
        if count % 2 == 0 {
            ck.fail(
                Clause::O2,
                format!("gap {} ({lo}, {hi}) contains {count} singularities", g + 1),
                vec![lo, hi],
            );
        }
    }

    // a duplicated parity failure is reported once
    ck.violations
        .dedup_by(|a, b| a.clause == b.clause && a.message == b.message);
    ValidationReport {
        valid: ck.violations.is_empty(),
        violations: ck.violations,
    }
}

/// Snap coordinates that lie within tolerance of a band edge onto it.
fn snap_to_edges(cfg: &SingularityConfiguration, bands: &BandSet) -> SingularityConfiguration {
    let snap = |x: f64| {
        let (edge, d) = bands.nearest_edge(x);
        if d <= COINCIDENCE_TOL {
            edge
        } else {
            x
        }
    };
    let mut out = cfg.clone();
    for r in out.resonances.iter_mut() {
        if r.is_real() {
            r.re = snap(r.re);
            r.im = 0.0;
        }
    }
    out
}

/// Monic `∏ (z - R_j) ∏ (z - E_j)`, with conjugate pairs multiplied out
/// as real quadratics.
pub fn monic_denominator(cfg: &SingularityConfiguration) -> Poly {
    let mut a = Poly::constant(1.0);
    for &e in &cfg.eigenvalues {
        a = &a * &Poly::linear_root(e);
    }
    for r in &cfg.resonances {
        let factor = if r.is_real() {
            Poly::linear_root(r.re)
        } else if r.im > 0.0 {
            Poly::conjugate_pair(r.z())
        } else {
            continue;
        };
        for _ in 0..r.mult {
            a = &a * &factor;
        }
    }
    a
}

/// Normalize a denominator into a probability measure: fix the sign so
/// that `a > 0` on the last band, attach canonical masses at the given
/// eigenvalues, and scale `a` by the resulting total mass.
pub fn measure_from_a(
    bands: &BandSet,
    a: &Poly,
    eigenvalues: &[f64],
    nodes: usize,
) -> Result<SpectralMeasure, InverseError> {
    let (lo, hi) = bands.band(bands.p() - 1);
    let mut a = a.clone();
    if a.eval(0.5 * (lo + hi)) < 0.0 {
        a = a.scale(-1.0);
    }
    let weights: f64 = eigenvalues
        .iter()
        .map(|&e| canonical_weight(bands, &a, e))
        .sum();
    let mass = ac_mass(bands, &a, nodes) + weights;
    if !(mass.is_finite() && mass > 0.0) {
        return Err(InverseError::Normalization(mass));
    }
    let a = a.scale(mass);
    let mut masses: Vec<PointMass> = eigenvalues
        .iter()
        .map(|&e| PointMass {
            e,
            w: canonical_weight(bands, &a, e),
        })
        .collect();
    masses.sort_by(|x, y| x.e.total_cmp(&y.e));
    Ok(SpectralMeasure::new(bands.clone(), a, masses))
}

/// Smallest node count, doubling from the default, at which the
/// absolutely continuous mass has settled to near machine precision.
/// Singularities close to an edge slow the Gauss rule down.
pub fn settled_nodes(bands: &BandSet, a: &Poly) -> usize {
    let mut n = DEFAULT_NODES;
    let mut prev = ac_mass(bands, a, n);
    while n < 16 * DEFAULT_NODES {
        let next = ac_mass(bands, a, 2 * n);
        n *= 2;
        if (next - prev).abs() <= 1e-14 * next.abs() {
            break;
        }
        prev = next;
    }
    n
}

/// The spectral measure with the given singularities.
pub fn build_measure(
    cfg: &SingularityConfiguration,
    bands: &BandSet,
) -> Result<SpectralMeasure, InverseError> {
    build_measure_with(cfg, bands, None)
}

/// As [`build_measure`], with an explicit quadrature node count per band.
pub fn build_measure_with(
    cfg: &SingularityConfiguration,
    bands: &BandSet,
    nodes: Option<usize>,
) -> Result<SpectralMeasure, InverseError> {
    let report = validate_configuration(cfg, bands);
    if !report.valid {
        return Err(InverseError::InvalidConfiguration(report));
    }
    let cfg = snap_to_edges(cfg, bands);
    let a = monic_denominator(&cfg);
    let nodes = nodes.unwrap_or_else(|| settled_nodes(bands, &a));
    measure_from_a(bands, &a, &cfg.eigenvalues, nodes)
}
