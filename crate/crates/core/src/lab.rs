//! Experiments on spectral measures: adding and removing point masses,
//! Christoffel transforms, stability of the coefficients under moving
//! singularities, and perturbation determinants of eventually free
//! matrices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::direct::{find_singularities, DirectError};
use crate::inverse::{
    build_measure, measure_from_a, settled_nodes, validate_configuration, InverseError,
    ValidationReport,
};
use crate::measure::{canonical_weight, PointMass, SpectralMeasure};
use crate::operator::EventuallyPeriodicOperator;
use crate::periodic::BandSet;
use crate::poly::{Poly, PolyError};
use crate::reconstruct::{stieltjes_reconstruct, Coefficients, ReconstructError};
use crate::singularities::{Resonance, SingularityConfiguration, COINCIDENCE_TOL};

/// Resampling attempts before the shift is halved.
pub const RESAMPLE_ATTEMPTS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("the measure has no point mass at {0}")]
    NoSuchMass(f64),
    #[error("the measure already has a point mass at {0}")]
    ExistingMass(f64),
    #[error("{0} lies on the essential spectrum")]
    OnSpectrum(f64),
    #[error("weight {0} is outside (0, 1)")]
    InvalidWeight(f64),
    #[error("shift must be nonzero")]
    ZeroShift,
    #[error("interlacing violated: {0}")]
    InterlacingViolation(ValidationReport),
    #[error("epsilon {epsilon} is not below the separation guard {guard}")]
    GuardViolated { epsilon: f64, guard: f64 },
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("the tail is not free")]
    NotFreeTail,
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Direct(#[from] DirectError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `(μ - w_0 δ_{E_0}) / (1 - w_0)` with `w_0 = μ({E_0})`. The zero of `a`
/// at `E_0` stays and becomes a resonance.
pub fn remove_point_mass(measure: &SpectralMeasure, e0: f64) -> Result<SpectralMeasure, LabError> {
    let idx = measure
        .mass_index(e0, COINCIDENCE_TOL)
        .ok_or(LabError::NoSuchMass(e0))?;
    let w0 = measure.masses[idx].w;
    let keep = 1.0 - w0;
    let masses = measure
        .masses
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != idx)
        .map(|(_, m)| PointMass { e: m.e, w: m.w / keep })
        .collect();
    Ok(SpectralMeasure::new(
        measure.bands.clone(),
        measure.a_poly.scale(keep),
        masses,
    ))
}

/// Why an addition was refused: the three requirements for the result to
/// stay eventually periodic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub has_resonance: bool,
    pub canonical: bool,
    pub interlacing: bool,
    pub canonical_weight: Option<f64>,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum AddOutcome {
    Accepted { measure: SpectralMeasure },
    Rejected { rejection: Rejection },
}

/// `(1 - w_0) μ + w_0 δ_{E_0}`, so that `w_0` is the mass of `E_0` in the
/// result. Accepted only when `E_0` is a resonance of `μ`, `w_0` equals the
/// weight the resulting denominator forces there, and turning the
/// resonance into an eigenvalue keeps the configuration oddly interlacing.
pub fn add_point_mass(measure: &SpectralMeasure, e0: f64, w0: f64) -> Result<AddOutcome, LabError> {
    if measure.bands.contains(e0) {
        return Err(LabError::OnSpectrum(e0));
    }
    if measure.mass_index(e0, COINCIDENCE_TOL).is_some() {
        return Err(LabError::ExistingMass(e0));
    }
    if !(w0 > 0.0 && w0 < 1.0) {
        return Err(LabError::InvalidWeight(w0));
    }
    let a = &measure.a_poly;
    let has_resonance = a.eval(e0).abs() <= 1e-8 * a.abs_eval(e0);
    let mut reasons = Vec::new();

    let (canonical, target) = if has_resonance {
        let c = canonical_weight(&measure.bands, a, e0);
        let target = c / (1.0 + c);
        let ok = (w0 - target).abs() <= 1e-8 * target.max(1.0);
        if !ok {
            reasons.push(format!(
                "(2) w_0 is canonical: expected {target}, got {w0}"
            ));
        }
        (ok, Some(target))
    } else {
        reasons.push(format!("(1) no resonance at {e0}"));
        reasons.push("(2) w_0 is canonical: no canonical weight without a resonance".into());
        (false, None)
    };

    let interlacing = if has_resonance {
        let cfg = measure.configuration()?;
        let flipped = flip_to_eigenvalue(&cfg, e0);
        let report = validate_configuration(&flipped, &measure.bands);
        if !report.valid {
            reasons.push(format!("(3) interlacing after the flip: {report}"));
        }
        report.valid
    } else {
        reasons.push("(3) interlacing: nothing to flip".into());
        false
    };

    if !(has_resonance && canonical && interlacing) {
        return Ok(AddOutcome::Rejected {
            rejection: Rejection {
                has_resonance,
                canonical,
                interlacing,
                canonical_weight: target,
                reasons,
            },
        });
    }
    let keep = 1.0 - w0;
    let mut masses: Vec<PointMass> = measure
        .masses
        .iter()
        .map(|m| PointMass { e: m.e, w: m.w * keep })
        .chain(std::iter::once(PointMass { e: e0, w: w0 }))
        .collect();
    masses.sort_by(|x, y| x.e.total_cmp(&y.e));
    Ok(AddOutcome::Accepted {
        measure: SpectralMeasure::new(measure.bands.clone(), a.scale(1.0 / keep), masses),
    })
}

fn flip_to_eigenvalue(cfg: &SingularityConfiguration, e0: f64) -> SingularityConfiguration {
    let mut out = cfg.clone();
    if let Some(i) = out
        .resonances
        .iter()
        .position(|r| r.is_real() && (r.re - e0).abs() <= 1e-6)
    {
        out.resonances[i].mult -= 1;
        if out.resonances[i].mult == 0 {
            out.resonances.remove(i);
        }
    }
    out.eigenvalues.push(e0);
    out
}

/// Multiply `a` by `(x - E_0)(x - E_0 - eps)`, which adds an eigenvalue at
/// `E_0` and a resonance at `E_0 + eps`, attach canonical weights and
/// renormalize. Only the requested sign of `eps` is tried.
pub fn christoffel_add(measure: &SpectralMeasure, e0: f64, eps: f64) -> Result<SpectralMeasure, LabError> {
    if eps == 0.0 {
        return Err(LabError::ZeroShift);
    }
    for x in [e0, e0 + eps] {
        if measure.bands.contains(x) {
            return Err(LabError::OnSpectrum(x));
        }
    }
    let mut cfg = measure.configuration()?;
    cfg.eigenvalues.push(e0);
    cfg.resonances.push(Resonance::real(e0 + eps));
    let report = validate_configuration(&cfg, &measure.bands);
    if !report.valid {
        return Err(LabError::InterlacingViolation(report));
    }
    let a = &measure.a_poly * &Poly::from_real_roots(&[e0, e0 + eps]);
    let mut eigenvalues: Vec<f64> = measure.masses.iter().map(|m| m.e).collect();
    eigenvalues.push(e0);
    let nodes = settled_nodes(&measure.bands, &a);
    Ok(measure_from_a(&measure.bands, &a, &eigenvalues, nodes)?)
}

/// Setup of a stability experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityExperimentConfig {
    pub base_cfg: SingularityConfiguration,
    pub bands: BandSet,
    pub epsilons: Vec<f64>,
    /// Singularities outside the disk of this radius are dropped; `null`
    /// keeps everything.
    pub truncation_radii: Vec<Option<f64>>,
    pub trials: usize,
    pub n_report: usize,
    /// Minimum distance from the bands for every real singularity, before
    /// and after perturbation.
    #[serde(default)]
    pub edge_exclusion: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

/// Result for one `(epsilon, radius)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub epsilon: f64,
    /// `null` for no truncation.
    pub radius: Option<f64>,
    /// Median over trials of `|a_n - ã_n| + |b_n - b̃_n|`, per `n`.
    pub median_err: Vec<f64>,
    /// Median over trials of the largest error over `n`.
    pub median_max_err: f64,
    /// Log-log slope of `median_max_err` against `epsilon` for this radius.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Long form: one error per trial and `n`.
    #[serde(skip)]
    pub samples: Vec<StabilitySample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySample {
    pub epsilon: f64,
    pub radius: Option<f64>,
    pub trial: usize,
    pub n: usize,
    pub error: f64,
}

impl StabilityReport {
    /// `epsilon,radius,trial,n,error` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,radius,trial,n,error\n");
        for s in &self.samples {
            let radius = s.radius.map_or("inf".to_string(), |r| format!("{r:.16e}"));
            out.push_str(&format!(
                "{:.16e},{},{},{},{:.16e}\n",
                s.epsilon, radius, s.trial, s.n, s.error
            ));
        }
        out
    }

    /// Rows for a given radius, ordered as configured.
    pub fn rows_for(&self, radius: Option<f64>) -> impl Iterator<Item = &StabilityRow> {
        self.rows.iter().filter(move |r| r.radius == radius)
    }
}

/// Half the smallest distance between distinct singularities.
pub fn separation_guard(cfg: &SingularityConfiguration) -> f64 {
    let mut pts = cfg.all_points();
    pts.dedup_by(|a, b| (*a - *b).norm() <= COINCIDENCE_TOL);
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i] - pts[j]).norm();
            if d > COINCIDENCE_TOL {
                best = best.min(d);
            }
        }
    }
    0.5 * best
}

/// Least-squares slope of `log y` against `log x` over positive pairs;
/// `None` with fewer than four usable points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn truncate(cfg: &SingularityConfiguration, radius: Option<f64>) -> SingularityConfiguration {
    match radius {
        None => cfg.clone(),
        Some(r) => SingularityConfiguration::new(
            cfg.eigenvalues.iter().copied().filter(|e| e.abs() <= r).collect(),
            cfg.resonances
                .iter()
                .copied()
                .filter(|z| z.z().norm() <= r)
                .collect(),
        ),
    }
}

fn respects_exclusion(cfg: &SingularityConfiguration, bands: &BandSet, exclusion: Option<f64>) -> bool {
    let Some(d) = exclusion else { return true };
    cfg.real_points()
        .iter()
        .all(|(x, _)| bands.distance(Complex64::new(*x, 0.0)) >= d)
}

/// One random admissible perturbation of `cfg`: real singularities move by
/// `U(-shift, shift)`, conjugate pairs by a uniform point of the disk of
/// radius `shift`. Invalid draws are redrawn, and the shift halves after
/// every [`RESAMPLE_ATTEMPTS`] failures.
fn perturb(
    cfg: &SingularityConfiguration,
    bands: &BandSet,
    shift: f64,
    exclusion: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> SingularityConfiguration {
    if shift == 0.0 {
        return cfg.clone();
    }
    let mut s = shift;
    loop {
        for _ in 0..RESAMPLE_ATTEMPTS {
            let eigenvalues = cfg
                .eigenvalues
                .iter()
                .map(|e| e + rng.gen_range(-s..s))
                .collect();
            let mut resonances = Vec::new();
            for r in &cfg.resonances {
                if r.is_real() {
                    for _ in 0..r.mult {
                        resonances.push(Resonance::real(r.re + rng.gen_range(-s..s)));
                    }
                } else if r.im > 0.0 {
                    for _ in 0..r.mult {
                        let rad = s * rng.gen::<f64>().sqrt();
                        let th = rng.gen_range(0.0..std::f64::consts::TAU);
                        let z = r.z() + Complex64::from_polar(rad, th);
                        resonances.push(Resonance::new(z, 1));
                        resonances.push(Resonance::new(z.conj(), 1));
                    }
                }
            }
            let out = SingularityConfiguration::new(eigenvalues, resonances);
            let pairs_intact = out
                .resonances
                .iter()
                .all(|r| r.im == 0.0 || r.im.abs() > COINCIDENCE_TOL);
            if pairs_intact
                && respects_exclusion(&out, bands, exclusion)
                && validate_configuration(&out, bands).valid
            {
                return out;
            }
        }
        s *= 0.5;
    }
}

fn check_experiment(config: &StabilityExperimentConfig) -> Result<f64, LabError> {
    let report = validate_configuration(&config.base_cfg, &config.bands);
    if !report.valid {
        return Err(LabError::Inverse(InverseError::InvalidConfiguration(report)));
    }
    if config.trials == 0 || config.n_report == 0 {
        return Err(LabError::InvalidExperiment(
            "trials and n_report must be positive".into(),
        ));
    }
    if !respects_exclusion(&config.base_cfg, &config.bands, config.edge_exclusion) {
        return Err(LabError::InvalidExperiment(
            "the base configuration violates the edge exclusion".into(),
        ));
    }
    let guard = separation_guard(&config.base_cfg);
    for &eps in &config.epsilons {
        if !(eps >= 0.0) || eps >= guard {
            return Err(LabError::GuardViolated {
                epsilon: eps,
                guard,
            });
        }
    }
    for &radius in &config.truncation_radii {
        let truncated = truncate(&config.base_cfg, radius);
        let report = validate_configuration(&truncated, &config.bands);
        if !report.valid {
            return Err(LabError::InvalidExperiment(format!(
                "truncating at radius {radius:?} breaks the configuration: {report}"
            )));
        }
    }
    Ok(guard)
}

fn reconstruct(cfg: &SingularityConfiguration, bands: &BandSet, n: usize) -> Result<Coefficients, LabError> {
    let measure = build_measure(cfg, bands)?;
    Ok(stieltjes_reconstruct(&measure, n)?)
}

/// Coefficient error of randomly perturbed and truncated configurations,
/// as a function of the perturbation size.
pub fn stability_experiment(config: &StabilityExperimentConfig) -> Result<StabilityReport, LabError> {
    check_experiment(config)?;
    let base = reconstruct(&config.base_cfg, &config.bands, config.n_report)?;
    let radii: Vec<Option<f64>> = if config.truncation_radii.is_empty() {
        vec![None]
    } else {
        config.truncation_radii.clone()
    };

    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for (ri, &radius) in radii.iter().enumerate() {
        let mut radius_rows = Vec::new();
        for (ei, &eps) in config.epsilons.iter().enumerate() {
            let errors: Vec<Result<Vec<f64>, LabError>> = (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(((ri as u64) << 48) | ((ei as u64) << 24) | t as u64);
                    let moved = perturb(&config.base_cfg, &config.bands, eps, config.edge_exclusion, &mut rng);
                    let kept = truncate(&moved, radius);
                    let coeffs = reconstruct(&kept, &config.bands, config.n_report)?;
                    Ok(base.deviations(&coeffs))
                })
                .collect();
            let errors = errors.into_iter().collect::<Result<Vec<_>, _>>()?;
            for (t, errs) in errors.iter().enumerate() {
                for (n, &e) in errs.iter().enumerate() {
                    samples.push(StabilitySample {
                        epsilon: eps,
                        radius,
                        trial: t,
                        n: n + 1,
                        error: e,
                    });
                }
            }
            let median_err = (0..config.n_report)
                .map(|n| median(errors.iter().map(|e| e[n]).collect()))
                .collect();
            let median_max_err = median(
                errors
                    .iter()
                    .map(|e| e.iter().copied().fold(0.0, f64::max))
                    .collect(),
            );
            radius_rows.push(StabilityRow {
                epsilon: eps,
                radius,
                median_err,
                median_max_err,
                slope: None,
            });
        }
        let xs: Vec<f64> = radius_rows.iter().map(|r| r.epsilon).collect();
        let ys: Vec<f64> = radius_rows.iter().map(|r| r.median_max_err).collect();
        let slope = loglog_slope(&xs, &ys);
        for r in radius_rows.iter_mut() {
            r.slope = slope;
        }
        rows.extend(radius_rows);
    }
    Ok(StabilityReport { rows, samples })
}

/// One step of an eigenvalue migrating through a band edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationPoint {
    /// Signed distance from the edge: negative while an eigenvalue,
    /// zero at the edge, positive once a resonance.
    pub t: f64,
    pub position: f64,
    pub is_eigenvalue: bool,
    /// Coefficient change relative to the configuration with the
    /// singularity sitting on the edge.
    pub change: f64,
}

/// Move a singularity from an eigenvalue at `edge + side·d` to the edge
/// and then back out to a resonance at `edge + side·d`, with `side`
/// pointing away from the band. `others` holds the remaining singularities.
pub fn migration_experiment(
    others: &SingularityConfiguration,
    bands: &BandSet,
    edge: f64,
    distances: &[f64],
    n_report: usize,
) -> Result<Vec<MigrationPoint>, LabError> {
    let side = if bands.contains(edge + 1e-6) { -1.0 } else { 1.0 };
    let with = |x: f64, eigen: bool| {
        let mut cfg = others.clone();
        if eigen {
            cfg.eigenvalues.push(x);
        } else {
            cfg.resonances.push(Resonance::real(x));
        }
        cfg
    };
    let at_edge = reconstruct(&with(edge, false), bands, n_report)?;
    let mut out = Vec::new();
    for &d in distances.iter().rev() {
        let x = edge + side * d;
        let c = reconstruct(&with(x, true), bands, n_report)?;
        out.push(MigrationPoint {
            t: -d,
            position: x,
            is_eigenvalue: true,
            change: at_edge.max_deviation(&c),
        });
    }
    out.push(MigrationPoint {
        t: 0.0,
        position: edge,
        is_eigenvalue: false,
        change: 0.0,
    });
    for &d in distances {
        let x = edge + side * d;
        let c = reconstruct(&with(x, false), bands, n_report)?;
        out.push(MigrationPoint {
            t: d,
            position: x,
            is_eigenvalue: false,
            change: at_edge.max_deviation(&c),
        });
    }
    Ok(out)
}

/// `L(z)`, a real polynomial with `L(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationDeterminant {
    pub coeffs: Poly,
}

impl PerturbationDeterminant {
    pub fn new(coeffs: Poly) -> Self {
        PerturbationDeterminant { coeffs }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.eval_complex(z)
    }
}

/// Root of `z + 1/z = x` inside (`inside = true`) or outside the unit disk.
pub fn joukowski_preimage(x: Complex64, inside: bool) -> Complex64 {
    let disc = (x * x - 4.0).sqrt();
    let z1 = (x + disc) * 0.5;
    let z2 = (x - disc) * 0.5;
    let (small, large) = if z1.norm() <= z2.norm() { (z1, z2) } else { (z2, z1) };
    if inside {
        small
    } else {
        large
    }
}

/// `L(z) = ∏ (1 - z / z_j)` over the preimages of the singularities under
/// `z ↦ z + 1/z`: eigenvalues inside the disk, resonances outside.
pub fn build_perturbation_determinant(
    op: &EventuallyPeriodicOperator,
) -> Result<PerturbationDeterminant, LabError> {
    if !op.tail().is_free() {
        return Err(LabError::NotFreeTail);
    }
    let cfg = find_singularities(op)?;
    let mut l = Poly::constant(1.0);
    for &e in &cfg.eigenvalues {
        let z = joukowski_preimage(Complex64::new(e, 0.0), true).re;
        l = &l * &Poly::new(vec![1.0, -1.0 / z]);
    }
    for r in &cfg.resonances {
        let z = joukowski_preimage(r.z(), false);
        let factor = if r.is_real() {
            Poly::new(vec![1.0, -1.0 / z.re])
        } else if r.im > 0.0 {
            let w = z.inv();
            Poly::new(vec![1.0, -2.0 * w.re, w.norm_sqr()])
        } else {
            continue;
        };
        for _ in 0..r.mult {
            l = &l * &factor;
        }
    }
    Ok(PerturbationDeterminant::new(l))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseOutcome {
    pub clause: String,
    pub passed: bool,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamSimReport {
    pub radius: f64,
    pub clauses: Vec<ClauseOutcome>,
}

impl DamSimReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn passed(&self, clause: &str) -> Option<bool> {
        self.clauses.iter().find(|c| c.clause == clause).map(|c| c.passed)
    }
}

const DAMSIM_TOL: f64 = 1e-9;

/// Evaluate the characterization of perturbation determinants of
/// exponentially decaying perturbations with rate `radius`, clause by
/// clause, on the roots of `L`.
pub fn check_damsim(l: &PerturbationDeterminant, radius: f64) -> Result<DamSimReport, LabError> {
    if !(radius > 1.0) {
        return Err(LabError::InvalidExperiment(format!("radius {radius} must exceed 1")));
    }
    let p = &l.coeffs;
    let mut clauses = Vec::new();
    let mut push = |name: &str, witnesses: Vec<String>| {
        clauses.push(ClauseOutcome {
            clause: name.into(),
            passed: witnesses.is_empty(),
            witnesses,
        })
    };

    // (i) real coefficients, polynomial hence entire
    let bad: Vec<String> = p
        .coeffs()
        .iter()
        .filter(|c| !c.is_finite())
        .map(|c| format!("coefficient {c}"))
        .collect();
    push("i", bad);

    let clusters = if p.degree() == 0 {
        Vec::new()
    } else {
        p.root_clusters(1e-6, DAMSIM_TOL)?
    };
    let real: Vec<(f64, u32)> = clusters
        .iter()
        .filter(|c| c.center.im == 0.0)
        .map(|c| (c.center.re, c.multiplicity))
        .collect();

    push(
        "ii",
        clusters
            .iter()
            .filter(|c| c.center.im != 0.0 && c.center.norm() <= 1.0 + DAMSIM_TOL)
            .map(|c| format!("zero {}{:+}i in the closed disk", c.center.re, c.center.im))
            .collect(),
    );
    push(
        "iii",
        real.iter()
            .filter(|(x, m)| x.abs() <= 1.0 + DAMSIM_TOL && *m > 1)
            .map(|(x, m)| format!("zero {x} has multiplicity {m}"))
            .collect(),
    );
    let l0 = p.eval(0.0);
    push(
        "iv",
        if (l0 - 1.0).abs() <= 1e-10 {
            vec![]
        } else {
            vec![format!("L(0) = {l0}")]
        },
    );

    // Zeros counted with multiplicity on an interval with given closedness.
    let count = |lo: f64, lo_closed: bool, hi: f64, hi_closed: bool| -> u32 {
        real.iter()
            .filter(|(x, _)| {
                let above = if lo_closed { *x >= lo - DAMSIM_TOL } else { *x > lo + DAMSIM_TOL };
                let below = if hi_closed { *x <= hi + DAMSIM_TOL } else { *x < hi - DAMSIM_TOL };
                above && below
            })
            .map(|(_, m)| *m)
            .sum()
    };
    let is_zero = |x: f64| real.iter().any(|(y, _)| (x - y).abs() <= DAMSIM_TOL);

    // (v): positive zeros in the disk, x_1 > x_2 > ...
    let mut xs: Vec<f64> = real
        .iter()
        .filter(|(x, _)| *x > 0.0 && *x < 1.0 - DAMSIM_TOL)
        .map(|(x, _)| *x)
        .collect();
    xs.sort_by(|a, b| b.total_cmp(a));
    let k = xs.iter().filter(|&&x| x > 1.0 / radius).count();
    let (mut va, mut vb, mut vc) = (vec![], vec![], vec![]);
    if k >= 1 {
        let n = count(1.0, true, 1.0 / xs[0], false);
        if n % 2 == 1 {
            va.push(format!("{n} zeros on [1, {})", 1.0 / xs[0]));
        }
    }
    for j in 0..k.saturating_sub(1) {
        let (lo, hi) = (1.0 / xs[j], 1.0 / xs[j + 1]);
        let n = count(lo, false, hi, false);
        if n % 2 == 0 {
            vb.push(format!("{n} zeros on ({lo}, {hi})"));
        }
    }
    for &x in &xs[..k] {
        if is_zero(1.0 / x) {
            vc.push(format!("{} is a zero", 1.0 / x));
        }
    }
    push("v.a", va);
    push("v.b", vb);
    push("v.c", vc);

    // (vi): negative zeros in the disk, y_1 < y_2 < ...
    let mut ys: Vec<f64> = real
        .iter()
        .filter(|(x, _)| *x < 0.0 && *x > -1.0 + DAMSIM_TOL)
        .map(|(x, _)| *x)
        .collect();
    ys.sort_by(f64::total_cmp);
    let k = ys.iter().filter(|&&y| y < -1.0 / radius).count();
    let (mut wa, mut wb, mut wc) = (vec![], vec![], vec![]);
    if k >= 1 {
        let n = count(1.0 / ys[0], false, -1.0, true);
        if n % 2 == 1 {
            wa.push(format!("{n} zeros on ({}, -1]", 1.0 / ys[0]));
        }
    }
    for j in 0..k.saturating_sub(1) {
        let (lo, hi) = (1.0 / ys[j + 1], 1.0 / ys[j]);
        let n = count(lo, false, hi, false);
        if n % 2 == 0 {
            wb.push(format!("{n} zeros on ({lo}, {hi})"));
        }
    }
    for &y in &ys[..k] {
        if is_zero(1.0 / y) {
            wc.push(format!("{} is a zero", 1.0 / y));
        }
    }
    push("vi.a", wa);
    push("vi.b", wb);
    push("vi.c", wc);

    Ok(DamSimReport { radius, clauses })
}
