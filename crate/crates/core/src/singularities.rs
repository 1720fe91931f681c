//! Eigenvalues and resonances of a finite-range perturbation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Points closer than this are treated as the same singularity.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// A resonance with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    #[serde(default = "single")]
    pub mult: u32,
}

fn single() -> u32 {
    1
}

impl Resonance {
    pub fn real(x: f64) -> Self {
        Resonance {
            re: x,
            im: 0.0,
            mult: 1,
        }
    }

    pub fn new(z: Complex64, mult: u32) -> Self {
        Resonance {
            re: z.re,
            im: z.im,
            mult,
        }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_real(&self) -> bool {
        self.im.abs() <= COINCIDENCE_TOL
    }
}

/// Kind of a real singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Eigenvalue,
    Resonance,
}

/// Multisets `{E_j}` and `{R_j}`. Complex resonances are listed
/// individually, so a conjugate pair appears as two entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SingularityConfiguration {
    pub eigenvalues: Vec<f64>,
    pub resonances: Vec<Resonance>,
}

impl SingularityConfiguration {
    pub fn new(eigenvalues: Vec<f64>, resonances: Vec<Resonance>) -> Self {
        SingularityConfiguration {
            eigenvalues,
            resonances,
        }
    }

    /// Configuration with real singularities only.
    pub fn real(eigenvalues: &[f64], resonances: &[f64]) -> Self {
        SingularityConfiguration::new(
            eigenvalues.to_vec(),
            resonances.iter().map(|&x| Resonance::real(x)).collect(),
        )
    }

    /// `N`, the number of eigenvalues.
    pub fn eigenvalue_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `K`, the number of resonances counted with multiplicity.
    pub fn resonance_count(&self) -> usize {
        self.resonances.iter().map(|r| r.mult as usize).sum()
    }

    /// `N + K`, which equals the degree of `a`.
    pub fn total(&self) -> usize {
        self.eigenvalue_count() + self.resonance_count()
    }

    /// Class index `N + K - p + 1` of the matrix the configuration determines.
    pub fn predicted_class_index(&self, p: usize) -> i64 {
        self.total() as i64 - p as i64 + 1
    }

    /// Real singularities with multiplicity, sorted ascending.
    pub fn real_points(&self) -> Vec<(f64, Kind)> {
        let mut pts: Vec<(f64, Kind)> = self
            .eigenvalues
            .iter()
            .map(|&e| (e, Kind::Eigenvalue))
            .chain(
                self.resonances
                    .iter()
                    .filter(|r| r.is_real())
                    .flat_map(|r| std::iter::repeat((r.re, Kind::Resonance)).take(r.mult as usize)),
            )
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }

    /// All singularities with multiplicity as complex numbers.
    pub fn all_points(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&e| Complex64::new(e, 0.0))
            .chain(
                self.resonances
                    .iter()
                    .flat_map(|r| std::iter::repeat(r.z()).take(r.mult as usize)),
            )
            .collect()
    }

    /// Sorted by `(Re, Im)`, with coincident resonance entries merged into
    /// one entry of summed multiplicity.
    pub fn sorted(&self) -> Self {
        let mut eigenvalues = self.eigenvalues.clone();
        eigenvalues.sort_by(f64::total_cmp);
        let mut res = self.resonances.clone();
        res.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let mut merged: Vec<Resonance> = Vec::with_capacity(res.len());
        for r in res {
            match merged.iter_mut().find(|m| (m.z() - r.z()).norm() <= COINCIDENCE_TOL) {
                Some(m) => m.mult += r.mult,
                None => merged.push(r),
            }
        }
        SingularityConfiguration {
            eigenvalues,
            resonances: merged,
        }
    }

    /// Sorted, with every coordinate rounded to a multiple of `grid`.
    /// Rounding to a fixed grid makes textual round-trips comparable.
    pub fn canonical(&self, grid: f64) -> Self {
        let round = |x: f64| {
            let y = (x / grid).round() * grid;
            if y == 0.0 {
                0.0
            } else {
                y
            }
        };
        let mut out = SingularityConfiguration {
            eigenvalues: self.eigenvalues.iter().map(|&e| round(e)).collect(),
            resonances: self
                .resonances
                .iter()
                .map(|r| Resonance {
                    re: round(r.re),
                    im: round(r.im),
                    mult: r.mult,
                })
                .collect(),
        };
        out = out.sorted();
        out
    }

    /// Largest distance between matched singularities of two
    /// configurations with the same structure, or `None` when the counts
    /// or kinds differ.
    pub fn distance(&self, other: &Self) -> Option<f64> {
        let a = self.sorted();
        let b = other.sorted();
        if a.eigenvalues.len() != b.eigenvalues.len() || a.resonance_count() != b.resonance_count() {
            return None;
        }
        let mut worst = a
            .eigenvalues
            .iter()
            .zip(&b.eigenvalues)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        // greedy matching of resonances with multiplicity
        let mut pool = b.all_points_resonances();
        for z in a.all_points_resonances() {
            let (idx, d) = pool
                .iter()
                .enumerate()
                .map(|(i, w)| (i, (z - w).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))?;
            worst = worst.max(d);
            pool.swap_remove(idx);
        }
        Some(worst)
    }

    fn all_points_resonances(&self) -> Vec<Complex64> {
        self.resonances
            .iter()
            .flat_map(|r| std::iter::repeat(r.z()).take(r.mult as usize))
            .collect()
    }
}
