#![allow(dead_code)]

use jacobi_resonance::direct::find_singularities;
use jacobi_resonance::inverse::validate_configuration;
use jacobi_resonance::reconstruct::{detect_tail, stieltjes_reconstruct, TAIL_TOL};
use jacobi_resonance::{
    band_set, discriminant, BandSet, EventuallyPeriodicOperator, PeriodicBlock, Resonance,
    SingularityConfiguration, SpectralMeasure,
};
use num_complex::Complex64;
use rand::Rng;

/// Periodic block whose gaps are all at least `min_gap` wide.
pub fn random_block(rng: &mut impl Rng, p: usize, min_gap: f64) -> (PeriodicBlock, BandSet) {
    loop {
        let a: Vec<f64> = (0..p).map(|_| rng.gen_range(0.6..1.6)).collect();
        let b: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.2..1.2)).collect();
        let block = PeriodicBlock::new(a, b).unwrap();
        let Ok(bands) = band_set(&discriminant(&block)) else { continue };
        if bands.gaps().all(|(lo, hi)| hi - lo >= min_gap) {
            return (block, bands);
        }
    }
}

fn far_enough(pts: &[Complex64], z: Complex64, sep: f64) -> bool {
    pts.iter().all(|w| (w - z).norm() >= sep)
}

/// A valid configuration with between `p - 1` and `max_points` singularities
/// (counted with conjugates), every point at least `guard` from the bands
/// and from every other point.
pub fn random_configuration(
    rng: &mut impl Rng,
    bands: &BandSet,
    max_points: usize,
    guard: f64,
) -> SingularityConfiguration {
    let p = bands.p();
    let lo = bands.lower() - 3.0;
    let hi = bands.upper() + 3.0;
    loop {
        let target = rng.gen_range((p - 1).max(1)..=max_points);
        let mut pts: Vec<Complex64> = Vec::new();
        let mut eigenvalues = Vec::new();
        let mut resonances = Vec::new();
        let mut tries = 0;
        while pts.len() < target && tries < 200 {
            tries += 1;
            if pts.len() + 2 <= target && rng.gen_bool(0.2) {
                let z = Complex64::new(rng.gen_range(lo + 1.0..hi - 1.0), rng.gen_range(0.1..1.5));
                if bands.distance(z) >= guard && far_enough(&pts, z, guard) && far_enough(&pts, z.conj(), guard) {
                    pts.push(z);
                    pts.push(z.conj());
                    resonances.push(Resonance::new(z, 1));
                    resonances.push(Resonance::new(z.conj(), 1));
                }
                continue;
            }
            // bias towards the gaps, where the structure is richest
            let x = match bands.gaps().nth(rng.gen_range(0..p)) {
                Some((g0, g1)) if rng.gen_bool(0.5) => rng.gen_range(g0..g1),
                _ => rng.gen_range(lo..hi),
            };
            let z = Complex64::new(x, 0.0);
            if bands.contains(x) || bands.distance(z) < guard || !far_enough(&pts, z, guard) {
                continue;
            }
            pts.push(z);
            if rng.gen_bool(0.5) {
                eigenvalues.push(x);
            } else {
                resonances.push(Resonance::real(x));
            }
        }
        let cfg = SingularityConfiguration::new(eigenvalues, resonances).sorted();
        if cfg.total() >= p - 1 && validate_configuration(&cfg, bands).valid {
            return cfg;
        }
    }
}

/// Eventually periodic operator with a random head of length up to
/// `max_head`.
pub fn random_operator(rng: &mut impl Rng, p: usize, max_head: usize) -> EventuallyPeriodicOperator {
    let (block, _) = random_block(rng, p, 0.0);
    let s = rng.gen_range(0..=max_head);
    let head_a: Vec<f64> = (0..s).map(|_| rng.gen_range(0.5..2.0)).collect();
    let mut head_b: Vec<f64> = (0..s).map(|_| rng.gen_range(-1.5..1.5)).collect();
    // exercise odd class indices: the last head entry sometimes keeps the
    // periodic a-value and perturbs only b
    if s > 0 && rng.gen_bool(0.3) {
        let mut head_a = head_a;
        head_a[s - 1] = block.a()[p - 1];
        head_b[s - 1] += 0.5;
        return EventuallyPeriodicOperator::new(head_a, head_b, block).unwrap();
    }
    EventuallyPeriodicOperator::new(head_a, head_b, block).unwrap()
}

/// Random head of length up to `max_head` over the free tail.
pub fn random_free_operator(rng: &mut impl Rng, max_head: usize) -> EventuallyPeriodicOperator {
    let s = rng.gen_range(1..=max_head);
    let head_a = (0..s).map(|_| rng.gen_range(0.5..2.0)).collect();
    let head_b = (0..s).map(|_| rng.gen_range(-1.5..1.5)).collect();
    EventuallyPeriodicOperator::new(head_a, head_b, PeriodicBlock::free()).unwrap()
}

/// Reconstruct enough coefficients of `measure` to recover a tail of
/// period `p` behind a head that produces `total` singularities.
pub fn reconstruct_operator(
    measure: &SpectralMeasure,
    p: usize,
    total: usize,
) -> Option<(EventuallyPeriodicOperator, usize)> {
    let k = (total + 1).checked_sub(p)?;
    let n = k.div_ceil(2) + 2 * p + 4;
    let coeffs = stieltjes_reconstruct(measure, n).ok()?;
    let fit = detect_tail(&coeffs.a, &coeffs.b, p, TAIL_TOL).ok()?;
    Some((fit.operator(&coeffs), fit.k))
}

/// Whether every singularity of `op` stays at least `guard` away from the
/// bands.
pub fn singularities_clear_of_bands(op: &EventuallyPeriodicOperator, guard: f64) -> bool {
    let Ok(bands) = op.bands() else { return false };
    let Ok(cfg) = find_singularities(op) else { return false };
    cfg.all_points().iter().all(|z| bands.distance(*z) >= guard)
}
