use super::*;
use proptest::prelude::*;

fn scenario(id: ScenarioId, per_octave: usize) -> Scenario {
    let mut s = Scenario::new(id);
    s.per_octave = per_octave;
    s
}

#[test]
fn harmonic_degrees_for_the_surface_case() {
    let expected: BTreeSet<i64> = [-4, -3, -2, 0, 1, 2].into_iter().collect();
    assert_eq!(harmonic_degree_oracle(2, 2), expected);
}

#[test]
fn harmonic_degrees_agree_with_indicial_roots() {
    for n in 2..=4usize {
        let lo = -(2 * n as i64 + 2);
        let k_max = 6;
        let oracle: Vec<i64> = harmonic_degree_oracle(n, k_max)
            .into_iter()
            .filter(|k| *k >= lo)
            .collect();
        assert_eq!(
            oracle,
            crate::weighted::indicial_roots(n, lo, k_max as i64),
            "n = {n}"
        );
    }
}

proptest! {
    #[test]
    fn harmonic_degrees_avoid_the_gap(n in 2usize..8, k_max in 0usize..20) {
        let bottom = 2 - 2 * n as i64;
        prop_assert!(harmonic_degree_oracle(n, k_max).iter().all(|k| *k <= bottom || *k >= 0));
    }

    #[test]
    fn reports_are_self_checking(main in -1e3f64..1e3, oracle in -1e3f64..1e3, tol in 1e-12f64..1.0) {
        let r = OracleReport::new("x", "y", main, oracle, tol);
        prop_assert!(r.is_consistent());
        prop_assert_eq!(r.pass, (main - oracle).abs() < tol);
    }
}

#[test]
fn tampered_reports_are_detected() {
    let mut r = OracleReport::new("x", "y", 1.0, 1.5, 1e-3);
    r.pass = true;
    assert!(!r.is_consistent());
}

#[test]
fn pinned_diagonal_inverts_the_pinned_part() {
    assert_eq!(pinned_diagonal(&[0.3]), vec![0.3]);
    let x = pinned_diagonal(&[0.2, 0.2]);
    assert!((x[0] - 0.1).abs() < 1e-15 && (x[1] - 0.1).abs() < 1e-15);
    // a_q + (1 − 1/m)tr(a_q) recovers κ.
    let kappa = [0.4, -0.1, 0.7];
    let x = pinned_diagonal(&kappa);
    let tr: f64 = x.iter().sum();
    for (xi, k) in x.iter().zip(kappa) {
        assert!((xi + (1.0 - 1.0 / 3.0) * tr - k).abs() < 1e-14);
    }
}

#[test]
fn flat_line_has_zero_potential() {
    let mut s = scenario(ScenarioId::RadialBallLine, 16);
    s.c0 = 0.0;
    let sol = poisson_oracle(&s, 1e-2).unwrap().remove(0);
    assert!(sol.w.iter().all(|w| w.abs() < 1e-12));
}

#[test]
fn oracle_volumes_match_the_closed_form() {
    let s = scenario(ScenarioId::RadialBallLine, 32);
    let p = s.radial_problem(1e-2).unwrap();
    let sol = poisson_oracle(&s, 1e-2).unwrap().remove(0);
    for (i, (a, b)) in sol.volume.iter().zip(&p.volume).enumerate() {
        assert!((a - b).abs() <= 1e-9 * b, "cell {i}: {a} vs {b}");
    }
}

#[test]
fn rank_one_solve_matches_the_poisson_oracle() {
    let cmp = direct_sum_oracle(
        &scenario(ScenarioId::RadialBallLine, 32),
        1e-2,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(cmp.pass(), "{:?}", cmp.reports);
    assert!(cmp.reports.iter().all(OracleReport::is_consistent));
}

#[test]
fn distinct_blocks_stay_decoupled() {
    let cmp = direct_sum_oracle(
        &scenario(ScenarioId::Rank2Diag, 32),
        1e-2,
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(cmp.reports.len(), 3);
    assert!(cmp.pass(), "{:?}", cmp.reports);
}

#[test]
fn equal_blocks_give_a_multiple_of_identity() {
    let mut s = scenario(ScenarioId::Rank2Diag, 16);
    s.beta = 0.0;
    let cmp = direct_sum_oracle(&s, 1e-2, &SolveOptions::default()).unwrap();
    for a in &cmp.state.a.0 {
        assert!((a[(0, 0)] - a[(1, 1)]).norm() < 1e-12 && a[(0, 1)].norm() < 1e-12);
    }
}

#[test]
fn gauge_flat_solution_is_flat() {
    let check = gauge_flat_check(
        &scenario(ScenarioId::Rank2GaugeFlat, 32),
        1e-2,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(check.curvature.pass, "{:?}", check.curvature);
    assert!(check.increment_gap < 1e-3, "{}", check.increment_gap);
}

#[test]
fn torus_matches_the_closed_form() {
    let p = Scenario::new(ScenarioId::FlatTorusLine)
        .torus_problem()
        .unwrap();
    let (_, report) = torus_oracle(&p, &SolveOptions::default()).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn refinement_is_second_order() {
    let study = refinement_study(
        &Scenario::new(ScenarioId::RadialBallLine),
        1e-2,
        &[16, 32, 64],
    )
    .unwrap();
    assert!(study.ratios.iter().all(|r| *r >= 3.5), "{study:?}");
}

#[test]
fn scalar_oracle_needs_a_line_bundle() {
    let s = Scenario::new(ScenarioId::Rank2GaugeFlat);
    assert!(matches!(poisson_oracle(&s, 1e-2), Err(Error::Domain(_))));
    let p = s.radial_problem(1e-2).unwrap();
    let metric = s.glued_metric(1e-2).unwrap();
    assert!(matches!(
        scalar_poisson(&p.potential, &metric, &p.grid, 0.0, &|k| k),
        Err(Error::Precondition(_))
    ));
}
