mod common;

use jacobi_resonance::canonical::to_canonical_json;
use jacobi_resonance::direct::{find_singularities, m_function, recover_a_polynomial, solve_direct};
use jacobi_resonance::inverse::{build_measure, validate_configuration};
use jacobi_resonance::lab::{
    add_point_mass, build_perturbation_determinant, check_damsim, christoffel_add,
    joukowski_preimage, remove_point_mass, AddOutcome,
};
use jacobi_resonance::periodic::{magic_check, PeriodicM};
use jacobi_resonance::{
    band_set, discriminant, periodic_m, BandSet, EventuallyPeriodicOperator, PeriodicBlock, Sheet,
    SingularityConfiguration, SurfacePoint,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn block_strategy(max_p: usize) -> impl Strategy<Value = PeriodicBlock> {
    (1..=max_p)
        .prop_flat_map(|p| (prop::collection::vec(0.4..2.0, p), prop::collection::vec(-1.5..1.5, p)))
        .prop_map(|(a, b)| PeriodicBlock::new(a, b).unwrap())
}

/// Points well away from the real axis, where nothing is singular.
fn point_strategy() -> impl Strategy<Value = Complex64> {
    (-4.0..4.0, 0.2..3.0, any::<bool>()).prop_map(|(x, y, up)| Complex64::new(x, if up { y } else { -y }))
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn band_count_matches_period(block in block_strategy(4)) {
        if let Ok(bands) = band_set(&discriminant(&block)) {
            prop_assert_eq!(bands.p(), block.p());
        }
    }

    #[test]
    fn periodic_m_strips_consistently(block in block_strategy(3), z in point_strategy(), plus in any::<bool>()) {
        prop_assume!(band_set(&discriminant(&block)).is_ok());
        let sheet = if plus { Sheet::Plus } else { Sheet::Minus };
        let pt = SurfacePoint::new(z, sheet);
        let m = periodic_m(&block, pt).unwrap();
        let shifted = periodic_m(&block.rotated(1), pt).unwrap();
        let (a1, b1) = (block.a()[0], block.b()[0]);
        let stripped = 1.0 / (b1 - z - a1 * a1 * shifted);
        prop_assert!(close(m, stripped, 1e-12), "{m} vs {stripped}");
    }

    #[test]
    fn periodic_m_is_herglotz(block in block_strategy(3), x in -4.0..4.0, y in 1e-3..3.0) {
        prop_assume!(band_set(&discriminant(&block)).is_ok());
        let m = periodic_m(&block, SurfacePoint::plus(Complex64::new(x, y))).unwrap();
        prop_assert!(m.im > 0.0);
    }

    #[test]
    fn sheet_values_solve_one_quadratic(block in block_strategy(3), z in point_strategy()) {
        let Ok(pm) = PeriodicM::new(&block) else { return Ok(()) };
        let plus = pm.eval(SurfacePoint::plus(z)).unwrap();
        let minus = pm.eval(SurfacePoint::minus(z)).unwrap();
        let [a, b, c, d] = pm.quadratic();
        let (a, b, c, d) = (a.eval_complex(z), b.eval_complex(z), c.eval_complex(z), d.eval_complex(z));
        prop_assert!(close(plus + minus, (a - d) / c, 1e-12));
        prop_assert!(close(plus * minus, -b / c, 1e-12));
    }

    #[test]
    fn magic_formula_holds_on_the_torus(block in block_strategy(3)) {
        prop_assume!(band_set(&discriminant(&block)).is_ok());
        let op = EventuallyPeriodicOperator::periodic(block);
        let worst = magic_check(&op, 10).into_iter().fold(0.0, f64::max);
        prop_assert!(worst < 1e-12, "{}", worst);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn degree_law(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = r.gen_range(1..=3);
        let op = common::random_operator(&mut r, p, 3);
        prop_assume!(common::singularities_clear_of_bands(&op, 0.02));
        let k = op.class_index().k;
        let a = recover_a_polynomial(&op).unwrap();
        prop_assert_eq!(a.degree(), k + p - 1);
        let cfg = find_singularities(&op).unwrap();
        prop_assert_eq!(cfg.total(), k + p - 1);
        prop_assert!(validate_configuration(&cfg, &op.bands().unwrap()).valid);
    }

    #[test]
    fn m_is_real_on_each_sheet(seed in any::<u64>(), z in point_strategy(), plus in any::<bool>()) {
        let mut r = rng(seed);
        let p = r.gen_range(1..=3);
        let op = common::random_operator(&mut r, p, 3);
        let sheet = if plus { Sheet::Plus } else { Sheet::Minus };
        let pt = SurfacePoint::new(z, sheet);
        let (Ok(sharp), Ok(m)) = (
            m_function(&op, pt.sharp()),
            m_function(&op, SurfacePoint::new(z, sheet.other())),
        ) else { return Ok(()) };
        prop_assert!(close(sharp, m.conj(), 1e-12), "{sharp} vs {}", m.conj());
    }

    #[test]
    fn band_density_matches_m(seed in any::<u64>(), t in 0.05..0.95) {
        let mut r = rng(seed);
        let p = r.gen_range(1..=2);
        let op = common::random_operator(&mut r, p, 3);
        prop_assume!(common::singularities_clear_of_bands(&op, 0.02));
        let sol = solve_direct(&op).unwrap();
        let (lo, hi) = sol.bands.band(r.gen_range(0..p));
        let x = lo + t * (hi - lo);
        let m = m_function(&op, SurfacePoint::real(x, Sheet::Plus)).unwrap();
        let density = std::f64::consts::PI * sol.bands.sqrt_abs_r(x) / sol.a_poly.eval(x).abs();
        prop_assert!(m.im > 0.0);
        prop_assert!((m.im - density).abs() <= 1e-8 * density.max(1.0), "{} vs {}", m.im, density);
    }

    #[test]
    fn inverse_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = r.gen_range(1..=2);
        let bands = if p == 1 { BandSet::free() } else { common::random_block(&mut r, p, 0.4).1 };
        let cfg = common::random_configuration(&mut r, &bands, 6, 0.05);
        let measure = build_measure(&cfg, &bands).unwrap();
        prop_assert!((measure.total_mass(1024) - 1.0).abs() < 1e-10);
        prop_assert!(measure.masses.iter().all(|m| m.w > 0.0));
        let (op, k) = common::reconstruct_operator(&measure, p, cfg.total()).unwrap();
        prop_assert_eq!(k + p, cfg.total() + 1);
        let sol = solve_direct(&op).unwrap();
        let d = cfg.distance(&sol.singularities);
        prop_assert!(d.is_some_and(|d| d < 1e-6), "{:?} vs {:?}", cfg, sol.singularities);
        for (m, n) in measure.masses.iter().zip(&sol.masses) {
            prop_assert!((m.w - n.w).abs() < 1e-8);
        }
    }

    #[test]
    fn remove_then_add_is_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let bands = if r.gen_bool(0.5) { BandSet::free() } else { common::random_block(&mut r, 2, 0.4).1 };
        let cfg = common::random_configuration(&mut r, &bands, 6, 0.05);
        prop_assume!(!cfg.eigenvalues.is_empty());
        let measure = build_measure(&cfg, &bands).unwrap();
        let mass = measure.masses[r.gen_range(0..measure.masses.len())];
        let removed = remove_point_mass(&measure, mass.e).unwrap();
        let AddOutcome::Accepted { measure: back } = add_point_mass(&removed, mass.e, mass.w).unwrap() else {
            return Err(TestCaseError::fail("canonical addition rejected"));
        };
        let scale = measure.a_poly.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        for (x, y) in back.a_poly.coeffs().iter().zip(measure.a_poly.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
        for (x, y) in back.masses.iter().zip(&measure.masses) {
            prop_assert!((x.w - y.w).abs() <= 1e-10 && x.e == y.e);
        }
    }

    #[test]
    fn christoffel_output_is_valid(seed in any::<u64>(), e0 in 2.2..4.0_f64, eps in 0.02..0.2_f64, flip in any::<bool>()) {
        let mut r = rng(seed);
        let cfg = common::random_configuration(&mut r, &BandSet::free(), 4, 0.05);
        let measure = build_measure(&cfg, &BandSet::free()).unwrap();
        let e0 = if flip { -e0 } else { e0 };
        let eps = if r.gen_bool(0.5) { eps } else { -eps };
        prop_assume!(cfg.all_points().iter().all(|z: &Complex64| (z - e0).norm() > 0.05 && (z - (e0 + eps)).norm() > 0.05));
        if let Ok(out) = christoffel_add(&measure, e0, eps) {
            let got = out.configuration().unwrap();
            prop_assert!(validate_configuration(&got, &out.bands).valid);
            prop_assert!(out.invariant_violations(1024).is_empty(), "{:?}", out.invariant_violations(1024));
            prop_assert_eq!(got.total(), cfg.total() + 2);
        }
    }

    #[test]
    fn damsim_accepts_determinants_of_free_tails(seed in any::<u64>()) {
        let mut r = rng(seed);
        let op = common::random_free_operator(&mut r, 3);
        prop_assume!(common::singularities_clear_of_bands(&op, 0.02));
        let l = build_perturbation_determinant(&op).unwrap();
        let report = check_damsim(&l, 1e6).unwrap();
        prop_assert!(report.all_passed(), "{:?}", report);
        // interior zeros sit over the eigenvalues
        let cfg = find_singularities(&op).unwrap();
        let mut inside: Vec<f64> = cfg
            .eigenvalues
            .iter()
            .map(|&e| joukowski_preimage(Complex64::new(e, 0.0), true).re)
            .collect();
        inside.sort_by(f64::total_cmp);
        let mut zeros: Vec<f64> = l
            .coeffs
            .roots()
            .unwrap()
            .into_iter()
            .filter(|z: &Complex64| z.norm() < 1.0)
            .map(|z| z.re)
            .collect();
        zeros.sort_by(f64::total_cmp);
        prop_assert_eq!(inside.len(), zeros.len());
        for (a, b) in inside.iter().zip(&zeros) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn canonical_json_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cfg = common::random_configuration(&mut r, &BandSet::free(), 6, 0.05);
        let text = to_canonical_json(&cfg).unwrap();
        let back: SingularityConfiguration = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(to_canonical_json(&back).unwrap(), text);
    }
}
