use super::radial::{radial_curvature, GluedMetric, HymLine};
use super::*;
use crate::geometry::radial::RadialPotential;
use crate::geometry::{glued_metric, BasePotential, CutoffProfile};
use crate::linalg::max_abs;

fn z2(a: f64, b: f64, c_: f64, d: f64) -> Vec<C64> {
    vec![C64::new(a, b), C64::new(c_, d)]
}

fn gaussian() -> FnField<impl Fn(&[C64]) -> CMat> {
    FnField {
        n: 2,
        m: 1,
        f: |z: &[C64]| CMat::from_element(1, 1, c((-crate::geometry::norm(z).powi(2)).exp())),
    }
}

fn rank2_metric() -> FnField<impl Fn(&[C64]) -> CMat> {
    FnField {
        n: 2,
        m: 2,
        f: |z: &[C64]| {
            let r2 = crate::geometry::norm(z).powi(2);
            let off = z[0] * z[1].conj() * 0.3;
            CMat::from_row_slice(2, 2, &[c(1.0 + r2), off, off.conj(), c((-0.5 * r2).exp())])
        },
    }
}

#[test]
fn flat_metric_has_no_connection() {
    let h = FnField {
        n: 2,
        m: 2,
        f: |_: &[C64]| CMat::identity(2, 2),
    };
    for a in chern_connection(&h, &z2(0.3, -0.1, 0.2, 0.4), 1e-3).unwrap() {
        assert!(max_abs(&a) < 1e-12);
    }
    let g = CMat::from_row_slice(2, 2, &[c(2.0), C64::new(0.5, 1.0), c(0.0), c(0.7)]);
    let gg = g.adjoint() * &g;
    let h = FnField {
        n: 2,
        m: 2,
        f: move |_: &[C64]| gg.clone(),
    };
    for a in chern_connection(&h, &z2(0.3, -0.1, 0.2, 0.4), 1e-3).unwrap() {
        assert!(max_abs(&a) < 1e-12);
    }
}

#[test]
fn gaussian_line_connection_and_curvature() {
    let h = gaussian();
    let z = z2(0.3, -0.2, 0.5, 0.1);
    let a = chern_connection(&h, &z, 1e-3).unwrap();
    for j in 0..2 {
        assert!((a[j][(0, 0)] + z[j].conj()).norm() < 1e-10);
    }
    let f = chern_curvature(&h, &z, 1e-3).unwrap();
    let v = lambda_contract(&CMat::identity(2, 2), &f).unwrap();
    assert!((v[(0, 0)] - c(2.0)).norm() < 1e-7, "{}", v[(0, 0)]);
}

#[test]
fn constant_unitary_conjugates_curvature() {
    let h = rank2_metric();
    let u = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.8),
            C64::new(0.6, 0.0),
        ],
    );
    let uu = u.clone();
    let rotated = FnField {
        n: 2,
        m: 2,
        f: move |z: &[C64]| uu.adjoint() * h.value(z) * &uu,
    };
    let h = rank2_metric();
    let z = z2(0.2, 0.1, -0.3, 0.25);
    let f = chern_curvature(&h, &z, 1e-3).unwrap();
    let fr = chern_curvature(&rotated, &z, 1e-3).unwrap();
    for (a, b) in f.iter().zip(&fr) {
        let back = &u * b * u.adjoint();
        assert!(max_abs(&(a - back)) < 1e-10);
    }
}

#[test]
fn trivial_gauges_leave_connection_unchanged() {
    let h = rank2_metric();
    let z = z2(0.2, 0.1, -0.3, 0.25);
    let a = chern_connection(&h, &z, 1e-3).unwrap();
    for s in [1.0, 3.5] {
        let f = FnField {
            n: 2,
            m: 2,
            f: move |_: &[C64]| scalar(2, s),
        };
        let conn = gauge_act(&f, &h, &z, 1e-3).unwrap();
        for j in 0..2 {
            assert!(max_abs(&(&conn.c10[j] - &a[j])) < 1e-12);
            assert!(max_abs(&conn.c01[j]) < 1e-12);
        }
    }
}

#[test]
fn singular_gauge_is_rejected() {
    let h = rank2_metric();
    let f = FnField {
        n: 2,
        m: 2,
        f: |_: &[C64]| CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]),
    };
    assert!(matches!(
        gauge_act(&f, &h, &z2(0.1, 0.0, 0.0, 0.0), 1e-3),
        Err(Error::Singular(_))
    ));
}

fn chi(z: &[C64]) -> f64 {
    (-crate::geometry::norm(z).powi(2)).exp() * (1.0 + z[0].re)
}

#[test]
fn gauge_action_matches_transformed_metric() {
    let t = 0.4;
    let f = FnField {
        n: 2,
        m: 2,
        f: move |z: &[C64]| {
            let s = t * chi(z);
            CMat::from_row_slice(2, 2, &[c(s.exp()), c(0.0), c(0.0), c((-s).exp())])
        },
    };
    let flat = FnField {
        n: 2,
        m: 2,
        f: |_: &[C64]| CMat::identity(2, 2),
    };
    // h(f⁻¹·, f⁻¹·) has Gram matrix f⁻¹ K f⁻¹ = f⁻² here
    let transformed = FnField {
        n: 2,
        m: 2,
        f: move |z: &[C64]| {
            let s = t * chi(z);
            CMat::from_row_slice(
                2,
                2,
                &[c((-2.0 * s).exp()), c(0.0), c(0.0), c((2.0 * s).exp())],
            )
        },
    };
    let step = 1e-3;
    for z in [z2(0.1, 0.2, -0.3, 0.0), z2(-0.5, 0.1, 0.2, 0.3)] {
        let conn = |w: &[C64]| gauge_act(&f, &flat, w, step).unwrap();
        let curv = connection_curvature(&conn, &z, step);
        let expected = chern_curvature(&transformed, &z, step).unwrap();
        let fz = f.value(&z);
        let fi = inverse(&fz).unwrap();
        for (a, b) in curv.f11.iter().zip(&expected) {
            assert!(max_abs(&(a - &fi * b * &fz)) < 1e-6);
        }
        assert!(curv.f02.iter().all(|x| max_abs(x) < 1e-8));
    }
}

#[test]
fn coupled_gauge_has_integrable_curvature() {
    let f = FnField {
        n: 2,
        m: 2,
        f: |z: &[C64]| {
            let off = z[0] * z[1].conj() * 0.2;
            CMat::from_row_slice(
                2,
                2,
                &[c(1.0 + 0.1 * z[0].norm_sqr()), off, off.conj(), c(1.2)],
            )
        },
    };
    let h = FnField {
        n: 2,
        m: 2,
        f: |_: &[C64]| CMat::identity(2, 2),
    };
    let z = z2(0.3, 0.2, -0.1, 0.4);
    let curv = connection_curvature(&|w| gauge_act(&f, &h, w, 1e-3).unwrap(), &z, 1e-3);
    assert!(curv.f02.iter().all(|x| max_abs(x) < 1e-8));
}

#[test]
fn residuals_decouple_and_stay_hermitian() {
    let line_a = |z: &[C64]| (-0.5 * crate::geometry::norm(z).powi(2)).exp();
    let line_b = |z: &[C64]| (1.0 + z[0].norm_sqr()).recip();
    let sum = FnField {
        n: 2,
        m: 2,
        f: move |z: &[C64]| {
            CMat::from_row_slice(2, 2, &[c(line_a(z)), c(0.0), c(0.0), c(line_b(z))])
        },
    };
    let a = FnField {
        n: 2,
        m: 1,
        f: move |z: &[C64]| CMat::from_element(1, 1, c(line_a(z))),
    };
    let b = FnField {
        n: 2,
        m: 1,
        f: move |z: &[C64]| CMat::from_element(1, 1, c(line_b(z))),
    };
    let z = z2(0.2, -0.1, 0.3, 0.2);
    let g = CMat::identity(2, 2);
    let full = hym_residual(&g, &chern_curvature(&sum, &z, 1e-3).unwrap(), 0.7).unwrap();
    let ra = hym_residual(&g, &chern_curvature(&a, &z, 1e-3).unwrap(), 0.7).unwrap();
    let rb = hym_residual(&g, &chern_curvature(&b, &z, 1e-3).unwrap(), 0.7).unwrap();
    assert!(full[(0, 1)].norm() < 1e-12 && full[(1, 0)].norm() < 1e-12);
    assert!((full[(0, 0)] - ra[(0, 0)]).norm() < 1e-12);
    assert!((full[(1, 1)] - rb[(0, 0)]).norm() < 1e-12);

    let flat = FnField {
        n: 2,
        m: 1,
        f: |_: &[C64]| CMat::identity(1, 1),
    };
    let r = hym_residual(&g, &chern_curvature(&flat, &z, 1e-3).unwrap(), 0.0).unwrap();
    assert!(max_abs(&r) < 1e-14);

    let h = rank2_metric();
    let r = hym_residual(&g, &chern_curvature(&h, &z, 1e-3).unwrap(), 0.0).unwrap();
    let k = h.value(&z);
    let kr = &k * &r;
    assert!(max_abs(&(&kr - kr.adjoint())) < 1e-10);
}

#[test]
fn topological_constants() {
    let trivial = TopologicalData {
        n: 2,
        rank: 2,
        degree: 0.0,
        volume: 8.0,
        weights: vec![1.0],
    };
    for eps in [0.0, 0.1, 0.01] {
        assert_eq!(topological_constant(&trivial, eps).unwrap(), 0.0);
    }
    let td = TopologicalData {
        n: 2,
        rank: 2,
        degree: 2.0,
        volume: 8.0,
        weights: vec![1.0],
    };
    assert!((topological_constant(&td, 0.0).unwrap() - 0.25).abs() < 1e-15);
    let ce = topological_constant(&td, 0.1).unwrap();
    assert!((ce - 4.0 / (2.0 * 7.99)).abs() < 1e-15);
    assert!((ce - 0.25031).abs() < 1e-5);
    let empty = TopologicalData { volume: 0.0, ..td };
    assert!(topological_constant(&empty, 0.0).is_err());
}

#[test]
fn normal_frame_flattens_to_first_order() {
    let h = rank2_metric();
    let p = z2(0.2, 0.1, -0.1, 0.3);
    let nf = NormalFrame::new(&h, &p, 1e-3).unwrap();
    assert!(max_abs(&(nf.value(&p) - CMat::identity(2, 2))) < 1e-12);
    let (d, db) = complex_partials(&|w| nf.value(w), &p, 1e-3);
    for m in d.iter().chain(&db) {
        assert!(max_abs(m) < 1e-9, "{}", max_abs(m));
    }
}

fn hym_field(c0: f64, b: f64) -> FnField<impl Fn(&[C64]) -> CMat> {
    FnField {
        n: 2,
        m: 1,
        f: move |z: &[C64]| {
            let r2 = crate::geometry::norm(z).powi(2);
            CMat::from_element(1, 1, c((-(c0 / 2.0) * (r2 + b * r2 * r2)).exp()))
        },
    }
}

#[test]
fn glued_bundle_metric_branches() {
    let params = GluingParams::single(1e-2, 2).unwrap();
    let h = hym_field(1.0, 0.1);
    let outer = ChartPoint::from_z(&z2(0.5, 0.0, 0.1, 0.0), &params);
    let z = outer.to_z(&params).unwrap();
    assert_eq!(
        glued_bundle_metric(&outer, &params, &h).unwrap(),
        h.value(&z)
    );
    let inner = ChartPoint::from_z(&z2(0.02, 0.0, 0.01, 0.0), &params);
    assert_eq!(
        glued_bundle_metric(&inner, &params, &h).unwrap(),
        CMat::identity(1, 1)
    );
}

#[test]
fn neck_deviation_scales_like_r_eps_squared() {
    let h = hym_field(1.0, 0.1);
    let ratios: Vec<f64> = [1e-2, 10f64.powf(-2.5), 1e-3]
        .iter()
        .map(|&eps| {
            let params = GluingParams::single(eps, 2).unwrap();
            let r = params.r_eps;
            let sup = (0..=40)
                .map(|i| {
                    let rad = r * (1.0 + i as f64 / 40.0);
                    let p = ChartPoint::from_z(&z2(rad * 0.6, 0.0, 0.0, rad * 0.8), &params);
                    max_abs(&(glued_bundle_metric(&p, &params, &h).unwrap() - CMat::identity(1, 1)))
                })
                .fold(0.0, f64::max);
            sup / (r * r)
        })
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 2.0, "{ratios:?}");
}

#[test]
fn pointwise_curvature_matches_radial_reduction() {
    let eps = 1e-2;
    let params = GluingParams::single(eps, 2).unwrap();
    let h = hym_field(1.0, 0.1);
    let field = FnField {
        n: 2,
        m: 1,
        f: |z: &[C64]| glued_bundle_metric(&ChartPoint::from_z(z, &params), &params, &h).unwrap(),
    };
    let pot = RadialPotential::glued(2, 0.1, eps, CutoffProfile::smoothstep7()).unwrap();
    let radial = GluedMetric {
        inner: HymLine {
            n: 2,
            c0: 1.0,
            b: 0.1,
        },
        potential: pot.clone(),
    };
    for x in [1.2, 1.5, 1.8] {
        let rad = params.r_eps * x;
        let z = z2(rad * 0.6, 0.0, 0.0, rad * 0.8);
        let p = ChartPoint::from_z(&z, &params);
        let g = glued_metric(&p, &params, BasePotential::Quartic { b: 0.1 }).unwrap();
        let f = chern_curvature(&field, &z, 1e-4 * params.r_eps).unwrap();
        let pointwise = lambda_contract(&g, &f).unwrap()[(0, 0)];
        let reduced = radial_curvature(&pot, &radial, (rad * rad).ln())[(0, 0)];
        assert!(
            (pointwise - reduced).norm() < 1e-6,
            "{x}: {pointwise} vs {reduced}"
        );
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn chern_curvature_residual_is_selfadjoint(a in -0.5f64..0.5, b in -0.5f64..0.5, x in -0.5f64..0.5, y in -0.5f64..0.5) {
            let h = rank2_metric();
            let z = z2(a, b, x, y);
            let r = hym_residual(&CMat::identity(2, 2), &chern_curvature(&h, &z, 1e-3).unwrap(), 0.3).unwrap();
            let kr = h.value(&z) * r;
            prop_assert!(max_abs(&(&kr - kr.adjoint())) < 1e-9);
        }
    }
}
