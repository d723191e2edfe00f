use super::radial::RadialPotential;
use super::*;
use proptest::prelude::*;

fn z2(a: f64, b: f64, c_: f64, d: f64) -> Vec<C64> {
    vec![C64::new(a, b), C64::new(c_, d)]
}

fn max_diff(a: &CMat, b: &CMat) -> f64 {
    crate::linalg::max_abs(&(a - b))
}

#[test]
fn r_epsilon_examples() {
    assert!((r_epsilon(0.01, 2).unwrap() - 0.1).abs() < 1e-15);
    let r = r_epsilon(1e-4, 3).unwrap();
    assert!((r - 2.154_434_690_031_884e-3).abs() < 1e-15);
    assert!(1e-4 < r && r < 1.0);
    assert!(r_epsilon(1.0, 2).is_err());
    assert!(r_epsilon(0.5, 1).is_err());
}

#[test]
fn cutoff_examples() {
    let params = GluingParams::single(1e-2, 2).unwrap();
    let r = params.r_eps;
    let at = |x: f64| ChartPoint::from_z(&z2(x * r, 0.0, 0.0, 0.0), &params);
    assert_eq!(cutoffs(&at(0.5), &params), (0.0, 1.0));
    assert_eq!(cutoffs(&at(3.0), &params), (1.0, 0.0));
    let (g1, g2) = cutoffs(&at(1.5), &params);
    assert!(g1 > 0.0 && g1 < 1.0);
    assert_eq!(g1 + g2, 1.0);
    assert!((g1 - params.profile.value(1.5)).abs() < 1e-15);
}

#[test]
fn cutoff_scaled_norm_is_epsilon_independent() {
    let values: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| cutoff_scaled_c4_norm(&GluingParams::single(e, 2).unwrap(), 3000))
        .collect();
    let reference = CutoffProfile::smoothstep7().sampled_c4_norm(3000);
    for v in values {
        assert!(
            (v - reference).abs() <= 1e-9 * reference,
            "{v} vs {reference}"
        );
    }
}

#[test]
fn profile_derivatives_match_finite_differences() {
    for profile in [CutoffProfile::smoothstep7(), CutoffProfile::smoothstep9()] {
        for k in 0..4 {
            for &x in &[1.1, 1.5, 1.77] {
                let h = 1e-5;
                let fd = (profile.derivative(k, x + h) - profile.derivative(k, x - h)) / (2.0 * h);
                assert!(
                    (fd - profile.derivative(k + 1, x)).abs() < 1e-4,
                    "{} k={k} x={x}",
                    profile.name()
                );
            }
        }
        assert_eq!(profile.value(1.0), 0.0);
        assert_eq!(profile.value(2.0), 1.0);
    }
}

#[test]
fn chart_regions_follow_thresholds() {
    let params = GluingParams::single(1e-2, 2).unwrap();
    let r = params.r_eps;
    for (x, region) in [
        (0.99, Region::Inner),
        (1.0, Region::Neck),
        (2.0, Region::Neck),
        (2.01, Region::Outer),
    ] {
        let p = ChartPoint::from_z(&z2(0.0, 0.0, x * r, 0.0), &params);
        assert_eq!(p.region, region, "x = {x}");
    }
    let p = ChartPoint::from_z(&z2(0.3 * r, 0.1 * r, 0.0, -0.2 * r), &params);
    assert_eq!(p.chart, Chart::InnerZeta);
    let back = p.to_z(&params).unwrap();
    assert!((back[0] - C64::new(0.3 * r, 0.1 * r)).norm() < 1e-15);
    assert!((p.coords[0] - C64::new(0.3 * r, 0.1 * r) / params.epsilon).norm() < 1e-12);
}

#[test]
fn overlapping_necks_are_rejected() {
    let p = |x: f64| BlowupPoint {
        center: vec![C64::new(x, 0.0), C64::new(0.0, 0.0)],
        weight: 1.0,
    };
    assert!(
        GluingParams::new(1e-2, 2, vec![p(0.0), p(0.3)], CutoffProfile::smoothstep7()).is_err()
    );
    let ok =
        GluingParams::new(1e-2, 2, vec![p(0.0), p(0.5)], CutoffProfile::smoothstep7()).unwrap();
    let q = ChartPoint::from_z(&z2(0.5 + 0.5 * ok.neck_radius(1), 0.0, 0.0, 0.0), &ok);
    assert_eq!((q.point, q.region), (1, Region::Inner));
}

#[test]
fn burns_simanca_potential_examples() {
    let p = ChartPoint {
        coords: z2(1.0, 0.0, 0.0, 0.0),
        chart: Chart::InnerZeta,
        region: Region::Inner,
        point: 0,
    };
    assert!((burns_simanca_potential(&p, 2).unwrap() - 1.0).abs() < 1e-15);
    assert!(matches!(
        burns_simanca_potential(&p, 3),
        Err(Error::UnsupportedDimension(3))
    ));
    let u = C64::new(0.4, -0.2);
    let v = C64::new(1.3, 0.7);
    let q = ChartPoint::interior(u, v, 0);
    let ext = ChartPoint {
        coords: vec![u, u * v],
        chart: Chart::InnerZeta,
        region: Region::Inner,
        point: 0,
    };
    let a = burns_simanca_potential(&q, 2).unwrap();
    let b = burns_simanca_potential(&ext, 2).unwrap();
    assert!((a - b).abs() < 1e-13);
}

#[test]
fn burns_simanca_decay_slope_is_minus_two() {
    let radii: Vec<f64> = (2..10).map(|k| 2f64.powi(k)).collect();
    let dev: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let g = burns_simanca_exterior_metric(&z2(r / 2f64.sqrt(), 0.0, 0.0, r / 2f64.sqrt()));
            crate::linalg::spectral_norm(&(g - CMat::identity(2, 2)))
        })
        .collect();
    let slope = crate::stats::loglog_slope(&radii, &dev);
    assert!((slope + 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn interior_chart_restricts_to_half_fubini_study() {
    for v in [C64::new(0.0, 0.0), C64::new(0.7, -1.1), C64::new(3.0, 2.0)] {
        let g = burns_simanca_interior_metric(C64::new(0.0, 0.0), v);
        let fs = 1.0 / (1.0 + v.norm_sqr()).powi(2);
        assert!((g[(1, 1)].re - 0.5 * fs).abs() < 1e-15);
        assert!(g[(0, 1)].norm() == 0.0);
    }
}

#[test]
fn interior_metric_matches_exterior_by_pullback() {
    // ζ = (u, uv) has Jacobian J = [[1, 0], [v, u]]; g_int = Jᵀ g_ext J̄.
    let (u, v) = (C64::new(0.3, 0.4), C64::new(-0.6, 0.2));
    let zeta = [u, u * v];
    let g_ext = burns_simanca_exterior_metric(&zeta);
    let jac = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), v, u]);
    let pulled = jac.transpose() * g_ext * jac.map(|x| x.conj());
    assert!(max_diff(&pulled, &burns_simanca_interior_metric(u, v)) < 1e-12);
}

#[test]
fn metric_from_potential_examples() {
    let flat = BaseKahler {
        n: 2,
        base: BasePotential::Flat,
    };
    let g = metric_from_potential(&flat, &z2(0.3, 0.1, -0.2, 0.5), 1e-3).unwrap();
    assert!(max_diff(&g, &CMat::identity(2, 2)) < 1e-8);
    let prod = BaseKahler {
        n: 2,
        base: BasePotential::Product { c: 1.0 },
    };
    let g0 = metric_from_potential(&prod, &z2(0.0, 0.0, 0.0, 0.0), 1e-3).unwrap();
    assert!(max_diff(&g0, &CMat::identity(2, 2)) < 1e-8);
    let z = z2(1.2, -0.6, 0.8, 1.1);
    let fd = metric_from_potential(&BurnsSimanca, &z, 1e-3).unwrap();
    let exact = burns_simanca_exterior_metric(&z);
    assert!(max_diff(&fd, &exact) < 1e-6 * crate::linalg::spectral_norm(&exact));
    let at2 = z2(2.0, 0.0, 0.0, 0.0);
    let rel = max_diff(
        &metric_from_potential(&BurnsSimanca, &at2, 1e-3).unwrap(),
        &burns_simanca_exterior_metric(&at2),
    );
    assert!(rel < 1e-6);
}

#[test]
fn analytic_base_metrics_match_finite_differences() {
    let z = z2(0.4, -0.3, 0.2, 0.6);
    for base in [
        BasePotential::Quartic { b: 0.3 },
        BasePotential::Product { c: 0.7 },
    ] {
        let pot = BaseKahler { n: 2, base };
        let fd = metric_from_potential(&pot, &z, 1e-3).unwrap();
        assert!(
            max_diff(&fd, &pot.metric(&z).unwrap()) < 1e-8,
            "{}",
            base.id()
        );
    }
}

#[test]
fn glued_potential_matches_outer_and_inner_branches() {
    let base = BasePotential::Quartic { b: 0.2 };
    for eps in [1e-2, 1e-3] {
        let params = GluingParams::single(eps, 2).unwrap();
        let r = params.r_eps;
        let dir = [0.6, 0.0, 0.0, 0.8];
        let outer = z2(2.0 * r * dir[0], 0.0, 0.0, 2.0 * r * dir[3]);
        let p = ChartPoint::from_z(&outer, &params);
        let v = glued_potential(&p, &params, base).unwrap();
        let expect = norm(&outer).powi(2) + base.phi(&outer);
        assert!((v - expect).abs() < 1e-10 * expect);
        let inner = z2(r * dir[0], 0.0, 0.0, r * dir[3]);
        let q = ChartPoint::from_z(&inner, &params);
        let v = glued_potential(&q, &params, base).unwrap();
        let zeta: Vec<C64> = inner.iter().map(|w| w / eps).collect();
        let expect = eps * eps * BurnsSimanca.value(&zeta);
        assert!((v - expect).abs() < 1e-10 * expect.abs().max(1e-300));
        let far = ChartPoint::from_z(&z2(0.9, 0.0, 0.0, 0.0), &params);
        assert!(matches!(
            glued_potential(&far, &params, base),
            Err(Error::Region { .. })
        ));
    }
}

#[test]
fn neck_flatness_ratio_is_bounded_across_epsilon() {
    // sup over the neck of |glued − |z|²| / |z|⁴, sampled radially.
    let sups: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let pot = RadialPotential::glued(2, 0.2, eps, CutoffProfile::smoothstep7()).unwrap();
            let r = r_epsilon(eps, 2).unwrap();
            (0..=400)
                .map(|i| {
                    let rad = r * (1.0 + i as f64 / 400.0);
                    let t = (rad * rad).ln();
                    (pot.p(t) - t.exp()).abs() / rad.powi(4)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in sups.windows(2) {
        let ratio = w[1].max(w[0]) / w[1].min(w[0]);
        assert!(ratio < 2.0, "{sups:?}");
    }
}

#[test]
fn glued_metric_examples() {
    let eps = 1e-2;
    let params = GluingParams::single(eps, 2).unwrap();
    let r = params.r_eps;
    let outer = ChartPoint::from_z(&z2(0.7, 0.1, 0.0, 0.3), &params);
    let g = glued_metric(&outer, &params, BasePotential::Flat).unwrap();
    assert!(max_diff(&g, &CMat::identity(2, 2)) < 1e-15);
    let zeta = z2(0.6, 0.0, 0.0, 0.8);
    let inner = ChartPoint {
        coords: zeta.clone(),
        chart: Chart::InnerZeta,
        region: Region::Inner,
        point: 0,
    };
    let g = glued_metric(&inner, &params, BasePotential::Flat).unwrap();
    assert!(max_diff(&g, &(burns_simanca_exterior_metric(&zeta) * c(eps * eps))) < 1e-18);
    let base = BasePotential::Quartic { b: 0.2 };
    for x in [1.0, 2.0] {
        let z = z2(x * r * 0.6, 0.0, 0.0, x * r * 0.8);
        let neck = ChartPoint {
            coords: z.clone(),
            chart: Chart::AnnulusZ,
            region: Region::Neck,
            point: 0,
        };
        let g_neck = glued_metric(&neck, &params, base).unwrap();
        let other = if x == 2.0 {
            BaseKahler { n: 2, base }.metric(&z).unwrap()
        } else {
            burns_simanca_exterior_metric(&z.iter().map(|w| w / eps).collect::<Vec<_>>())
        };
        assert!(max_diff(&g_neck, &other) < 1e-10, "x = {x}");
    }
}

#[test]
fn neck_metric_finite_differences_agree_with_radial_formula() {
    let params = GluingParams::single(1e-2, 2).unwrap();
    let r = params.r_eps;
    let base = BasePotential::Quartic { b: 0.2 };
    let z = z2(1.4 * r * 0.6, 0.1 * r, 0.0, 1.4 * r * 0.78);
    let p = ChartPoint::from_z(&z, &params);
    let exact = glued_metric(&p, &params, base).unwrap();
    let glue = NeckPotential {
        params: &params,
        base,
        point: 0,
    };
    let fd = metric_from_potential(&glue, &z, 1e-3 * r).unwrap();
    assert!(max_diff(&exact, &fd) < 1e-6, "{}", max_diff(&exact, &fd));
}

#[test]
fn glued_metric_is_closed_and_positive() {
    // dω = 0: ∂_l g_{jk̄} = ∂_j g_{lk̄}, checked by fourth-order differences.
    let base = BasePotential::Quartic { b: 0.2 };
    for eps in [1e-2, 1e-3] {
        let params = GluingParams::single(eps, 2).unwrap();
        let r = params.r_eps;
        let mut worst = 0.0f64;
        for x in [0.5, 1.2, 1.5, 1.9, 2.5] {
            let z = z2(x * r * 0.5, 0.2 * x * r, -0.3 * x * r, x * r * 0.7);
            let g_at =
                |w: &[C64]| glued_metric(&ChartPoint::from_z(w, &params), &params, base).unwrap();
            let h = 1e-3 * x * r;
            let d = |l: usize, w: &[C64]| -> CMat {
                let shift = |dx: f64, dy: f64| {
                    let mut v = w.to_vec();
                    v[l] += C64::new(dx, dy);
                    g_at(&v)
                };
                let dx = (shift(-2.0 * h, 0.0) - shift(-h, 0.0) * c(8.0) + shift(h, 0.0) * c(8.0)
                    - shift(2.0 * h, 0.0))
                    * c(1.0 / (12.0 * h));
                let dy = (shift(0.0, -2.0 * h) - shift(0.0, -h) * c(8.0) + shift(0.0, h) * c(8.0)
                    - shift(0.0, 2.0 * h))
                    * c(1.0 / (12.0 * h));
                (dx - dy * C64::new(0.0, 1.0)) * c(0.5)
            };
            if ChartPoint::from_z(&z, &params).region == Region::Inner {
                continue;
            }
            let (d0, d1) = (d(0, &z), d(1, &z));
            for k in 0..2 {
                let lhs = d0[(1, k)];
                let rhs = d1[(0, k)];
                worst = worst.max((lhs - rhs).norm() * x * r);
            }
            assert!(min_eig(&g_at(&z)) > POSITIVITY_TOL);
        }
        assert!(worst < 1e-8, "eps {eps}: closure residual {worst}");
    }
}

#[test]
fn lambda_contract_examples() {
    let g = BaseKahler {
        n: 2,
        base: BasePotential::Quartic { b: 0.3 },
    }
    .metric(&z2(0.2, 0.1, 0.4, -0.3))
    .unwrap();
    let beta: Vec<CMat> = (0..4)
        .map(|i| CMat::from_element(1, 1, g[(i / 2, i % 2)]))
        .collect();
    let v = lambda_contract(&g, &beta).unwrap();
    assert!((v[(0, 0)] - c(2.0)).norm() < 1e-13);
    let mut e = vec![CMat::zeros(1, 1); 4];
    e[0][(0, 0)] = c(1.0);
    assert_eq!(
        lambda_contract(&CMat::identity(2, 2), &e).unwrap()[(0, 0)],
        c(1.0)
    );
    assert!(lambda_contract(&CMat::zeros(2, 2), &e).is_err());
}

#[test]
fn positivity_failure_is_reported() {
    struct Saddle;
    impl Potential for Saddle {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, z: &[C64]) -> f64 {
            z[0].norm_sqr() - z[1].norm_sqr()
        }
    }
    assert!(matches!(
        metric_from_potential(&Saddle, &z2(0.1, 0.0, 0.0, 0.0), 1e-3),
        Err(Error::Positivity { .. })
    ));
}

proptest! {
    #[test]
    fn r_epsilon_lies_between_epsilon_and_one(eps in 1e-6f64..0.99, n in 2usize..6) {
        let r = r_epsilon(eps, n).unwrap();
        prop_assert!(eps < r && r < 1.0);
        prop_assert!((r - eps.powf((n as f64 - 1.0) / n as f64)).abs() <= 1e-15 * r);
    }

    #[test]
    fn cutoff_is_monotone_and_partitions_unity(x in 0.0f64..3.0, dx in 0.0f64..0.5) {
        let p = CutoffProfile::smoothstep7();
        prop_assert!(p.value(x) <= p.value(x + dx) + 1e-15);
        prop_assert!((0.0..=1.0).contains(&p.value(x)));
        let params = GluingParams::single(1e-2, 2).unwrap();
        let pt = ChartPoint::from_z(&[C64::new(x * params.r_eps, 0.0), C64::new(0.0, 0.0)], &params);
        let (g1, g2) = cutoffs(&pt, &params);
        prop_assert_eq!(g1 + g2, 1.0);
    }

    #[test]
    fn glued_metric_is_hermitian_positive(
        eps_exp in 1.5f64..4.0,
        x in 0.2f64..4.0,
        a in -1.0f64..1.0, b in -1.0f64..1.0, cc in -1.0f64..1.0, d in -1.0f64..1.0,
    ) {
        let eps = 10f64.powf(-eps_exp);
        let params = GluingParams::single(eps, 2).unwrap();
        let dir = z2(a, b, cc, d);
        let nn = norm(&dir);
        prop_assume!(nn > 1e-3);
        let z: Vec<C64> = dir.iter().map(|w| w * (x * params.r_eps / nn)).collect();
        let p = ChartPoint::from_z(&z, &params);
        let g = glued_metric(&p, &params, BasePotential::Quartic { b: 0.2 }).unwrap();
        prop_assert!(max_diff(&g, &g.adjoint()) == 0.0 || max_diff(&g, &g.adjoint()) < 1e-15);
        prop_assert!(min_eig(&g) > POSITIVITY_TOL);
    }
}
