use proptest::prelude::*;
use sobolev_homeo::homeo1d::{blend_constant, Homeo1D, RampKind, StaircaseParams};
use sobolev_homeo::kernel::{
    check_quasinorm_inequalities, fd_jacobian, lp_norm_1d, AxisBox, BoxDomain, Exponent, Interval, PiecewisePoly,
};
use sobolev_homeo::map::det_row_major;
use sobolev_homeo::packing::{pairwise_disjoint, vitali_pack_best_effort, PackOptions};
use sobolev_homeo::rng::seeded;
use sobolev_homeo::twist::{
    localized_rotation, random_sod, sod_block_decompose, twist_map, PlaneProfile, TwistProfile,
};
use sobolev_homeo::verify::{convergence_table_1d, volume_census, Family1D};
use sobolev_homeo::{VectorMap, VolumePreservingDiffeo};

fn ramp() -> impl Strategy<Value = RampKind> {
    prop_oneof![
        Just(RampKind::Linear),
        Just(RampKind::Polynomial),
        Just(RampKind::SmoothJump)
    ]
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quasinorm_inequalities_hold(seed in any::<u64>(), p in 0.05f64..0.95, dq in 0.05f64..2.0) {
        let mut rng = seeded(seed);
        let iv = Interval::unit();
        let f = PiecewisePoly::random(iv, 4, 3, &mut rng);
        let g = PiecewisePoly::random(iv, 4, 3, &mut rng);
        let mut bps = f.breakpoints().to_vec();
        bps.extend_from_slice(g.breakpoints());
        bps.sort_by(f64::total_cmp);
        let r = check_quasinorm_inequalities(
            &|x| f.eval(x), &|x| g.eval(x), iv, &bps,
            Exponent::new(p).unwrap(), Exponent::new(p + dq).unwrap(),
        ).unwrap();
        prop_assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn lp_norm_is_monotone(seed in any::<u64>(), p in 0.1f64..2.0, scale in 0.0f64..1.0) {
        let mut rng = seeded(seed);
        let g = PiecewisePoly::random(Interval::unit(), 3, 2, &mut rng);
        let e = Exponent::new(p).unwrap();
        let big = lp_norm_1d(&|x| g.eval(x), Interval::unit(), e, g.breakpoints()).unwrap();
        let small = lp_norm_1d(&|x| scale * (x * 7.0).sin().abs() * g.eval(x), Interval::unit(), e, g.breakpoints()).unwrap();
        prop_assert!(small.value <= big.value + 2.0 * (small.quad_error_estimate + big.quad_error_estimate) + 1e-14);
    }

    #[test]
    fn staircase_is_a_homeomorphism_near_identity(n in 1usize..40, kind in ramp(), x in 0.0f64..1.0) {
        let f = Homeo1D::staircase(StaircaseParams::with_ramp(n, kind)).unwrap();
        prop_assert_eq!(f.eval(0.0), 0.0);
        prop_assert!((f.eval(1.0) - 1.0).abs() < 1e-15);
        prop_assert!((f.eval(x) - x).abs() <= 1.0 / n as f64 + 1e-12);
        prop_assert!(f.deriv(x) >= 0.0);
        // the smooth ramp is flat to all orders at its ends, so compare in y
        let y = f.eval(x);
        prop_assert!((f.eval(f.inverse(y)) - y).abs() < 1e-12);
        prop_assert!(f.check_strictly_increasing(512).is_ok());
    }

    #[test]
    fn blend_derivative_is_nonnegative(n in 1usize..30, c in 0.0f64..=1.0, x in 0.0f64..1.0) {
        let f = Homeo1D::staircase(StaircaseParams::new(n)).unwrap();
        let h = blend_constant(c, &f).unwrap();
        prop_assert!(h.deriv(x) >= 0.0);
        prop_assert!((h.eval(x) - (c * x + (1.0 - c) * f.eval(x))).abs() < 1e-12);
    }

    #[test]
    fn table_pass_flags_match_bounds(n0 in 1usize..8, c in 0.0f64..1.0) {
        let fam = Family1D::Blend { c, ramp: RampKind::SmoothJump };
        let t = convergence_table_1d(&fam, Exponent::half(), &[n0, 2 * n0 + 1]).unwrap();
        for r in &t.rows {
            let ok = r.sup_dist <= r.sup_bound + 1e-9 && r.lp_err.value_p_power <= r.lp_pow_bound + r.tolerance;
            prop_assert_eq!(r.pass, ok);
            prop_assert!(r.pass);
        }
    }

    #[test]
    fn twist_preserves_norm_and_volume(
        seed in any::<u64>(),
        d in 2usize..7,
        coeffs in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let m = d / 2;
        let planes = (0..m)
            .map(|j| PlaneProfile::Polynomial(coeffs.iter().map(|c| if j % 2 == 0 { *c } else { -c }).collect()))
            .collect();
        let f = twist_map(TwistProfile::new(planes), d).unwrap();
        let mut rng = seeded(seed);
        let side = 1.0 / (d as f64).sqrt();
        let x: Vec<f64> = (0..d).map(|_| rand::Rng::random_range(&mut rng, -side..side)).collect();
        let y = f.eval(&x);
        prop_assert!((norm(&y) - norm(&x)).abs() <= 1e-12);
        let j = f.jacobian(&x);
        let flat: Vec<f64> = j.transpose().as_slice().to_vec();
        prop_assert!((det_row_major(d, &flat) - 1.0).abs() <= 1e-9);
        let fd = fd_jacobian(&f, &x, 1e-5, &[]);
        prop_assert!(fd.max_abs_diff(&flat) <= 1e-5);
        let back = f.inverse(&y);
        prop_assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-10));
    }

    #[test]
    fn sod_decomposition_reconstructs(seed in any::<u64>(), d in 2usize..8) {
        let h = random_sod(d, &mut seeded(seed));
        let dec = sod_block_decompose(&h);
        prop_assert!(dec.residual <= 1e-8, "residual {}", dec.residual);
        prop_assert!(dec.angles.iter().all(|&a| (0.0..2.0 * std::f64::consts::PI).contains(&a)));
    }

    #[test]
    fn localized_rotation_has_unit_jacobian(seed in any::<u64>(), d in 2usize..5, t in 0.05f64..0.95) {
        let mut rng = seeded(seed);
        let h = random_sod(d, &mut rng);
        let g = localized_rotation(&h, vec![0.5; d], 0.5, 0.5 * t).unwrap();
        let census = volume_census(&g, &AxisBox::unit_cube(d), 200, seed);
        prop_assert!(census.max_det_dev <= 1e-9);
        let m = census.measure.unwrap();
        prop_assert!((m.before - m.after).abs() <= 6.0 * m.std_err + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn packing_is_disjoint_and_inside(
        w in 0.3f64..1.0,
        h in 0.3f64..1.0,
        eps in 0.1f64..0.4,
    ) {
        let dom = BoxDomain::single(AxisBox::from_bounds(&[0.0, 0.0], &[w, h]).unwrap());
        let opts = PackOptions::default().with_resolution(256);
        let (pack, _) = vitali_pack_best_effort(&dom, eps, 0.2 * w * h, &opts).unwrap();
        prop_assert!(pairwise_disjoint(&pack.balls));
        for b in &pack.balls {
            prop_assert!(2.0 * b.radius <= eps);
            prop_assert!(b.center[0] - b.radius >= 0.0 && b.center[0] + b.radius <= w);
            prop_assert!(b.center[1] - b.radius >= 0.0 && b.center[1] + b.radius <= h);
        }
    }
}
