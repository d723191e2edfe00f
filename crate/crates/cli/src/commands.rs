//! One function per subcommand. Each fills a [`RunOutput`] with CSV tables,
//! named checks and headline values; `main` writes the manifest.

use anyhow::{Context, Result};
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hymglue::acceptance::{self, AcceptanceConfig};
use hymglue::geometry::radial::RadialPotential;
use hymglue::geometry::{
    burns_simanca_exterior_metric, cutoff_scaled_c4_norm, r_epsilon, radial_metric, GluingParams,
};
use hymglue::linalg::{min_eig, spectral_norm, CMat};
use hymglue::linear::{inverse_norm_sweep, RadialProblem};
use hymglue::oracle::{
    direct_sum_oracle, gauge_flat_check, harmonic_degree_oracle, refinement_study, torus_oracle,
    OracleReport,
};
use hymglue::scenario::ScenarioId;
use hymglue::solver::{
    contraction_pairs, iterate, linearization_fd_check, normalized_directions, residual_sweep,
    Discretization, TorusDiscretization,
};
use hymglue::stats::{loglog_slope, median, spearman, spread};
use hymglue::weighted::{
    indicial_roots, weight_comparison_check, weighted_holder_norm, Space, WeightedNormSpec,
};
use hymglue::{Error, C64};

use crate::config::RunConfig;
use crate::output::{num, RunOutput, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    GeometryCheck,
    Indicial,
    Norms,
    ResidualSweep,
    LinearizeCheck,
    Contraction,
    Solve,
    OracleCompare,
    Accept,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }
}

/// Tags library errors with the module that raised them.
trait Provenance<T> {
    fn in_module(self, module: &'static str) -> Result<T>;
}

impl<T> Provenance<T> for hymglue::Result<T> {
    fn in_module(self, module: &'static str) -> Result<T> {
        self.map_err(anyhow::Error::new).context(module)
    }
}

const FD_STEPS: [f64; 3] = [1e-1, 1e-2, 1e-3];
const NORM_FIELDS: usize = 5;

pub fn run(command: Command, cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    match command {
        Command::GeometryCheck => geometry_check(cfg, out),
        Command::Indicial => indicial(cfg, out),
        Command::Norms => norms(cfg, out),
        Command::ResidualSweep => residual(cfg, out),
        Command::LinearizeCheck => linearize(cfg, out),
        Command::Contraction => contraction(cfg, out),
        Command::Solve => solve(cfg, out),
        Command::OracleCompare => oracle_compare(cfg, out),
        Command::Accept => accept(cfg, out),
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", items.join(", "))
}

fn require_radial(cfg: &RunConfig, what: &str) -> Result<()> {
    if cfg.scenario.id == ScenarioId::FlatTorusLine {
        return Err(Error::Domain(format!(
            "{what} needs a radial scenario, not {}",
            cfg.scenario.id
        )))
        .in_module("scenario");
    }
    Ok(())
}

/// A problem the solver can iterate on, with the `ε` it was built for.
enum Problem {
    Radial(f64, Box<RadialProblem>),
    Torus(TorusDiscretization),
}

impl Problem {
    fn all(cfg: &RunConfig) -> Result<Vec<Problem>> {
        if cfg.scenario.id == ScenarioId::FlatTorusLine {
            let p = cfg.scenario.torus_problem().in_module("linear")?;
            return Ok(vec![Problem::Torus(TorusDiscretization::new(p))]);
        }
        cfg.epsilons
            .iter()
            .map(|&eps| {
                Ok(Problem::Radial(
                    eps,
                    Box::new(cfg.scenario.radial_problem(eps).in_module("linear")?),
                ))
            })
            .collect()
    }

    fn disc(&self) -> &dyn Discretization {
        match self {
            Problem::Radial(_, p) => p.as_ref(),
            Problem::Torus(t) => t,
        }
    }

    /// `ε` as a CSV cell; empty for the torus.
    fn eps_cell(&self) -> String {
        match self {
            Problem::Radial(eps, _) => num(*eps),
            Problem::Torus(_) => String::new(),
        }
    }

    fn label(&self) -> String {
        match self {
            Problem::Radial(eps, _) => format!("ε = {eps:.3e}"),
            Problem::Torus(_) => "torus".into(),
        }
    }
}

fn geometry_check(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let s = &cfg.scenario;
    let radii: Vec<f64> = (2..10).map(|k| 2f64.powi(k)).collect();
    let mut decay = Table::new(&["radius", "deviation"]);
    let dev: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let z = [
                C64::new(r / 2f64.sqrt(), 0.0),
                C64::new(0.0, r / 2f64.sqrt()),
            ];
            spectral_norm(&(burns_simanca_exterior_metric(&z) - CMat::identity(2, 2)))
        })
        .collect();
    for (r, d) in radii.iter().zip(&dev) {
        decay.push(vec![num(*r), num(*d)]);
    }
    let slope = loglog_slope(&radii, &dev);
    out.check(
        "exterior decay",
        (slope + 2.0).abs() <= 0.1,
        format!("fitted slope {slope:.4}, expected −2 ± 0.1"),
    );
    out.value("decay_slope", slope);
    out.write_csv(
        "exterior_decay.csv",
        "Burns-Simanca metric minus identity against |ζ|",
        decay,
    )?;

    let mut neck = Table::new(&[
        "epsilon",
        "r_epsilon",
        "branch_mismatch",
        "flatness_sup",
        "cutoff_c4",
        "min_eig",
    ]);
    let mut nodes = Table::new(&[
        "epsilon",
        "node",
        "t",
        "radius",
        "region",
        "potential",
        "min_eig",
    ]);
    let (mut flatness, mut c4, mut branch_max, mut eig_min) =
        (vec![], vec![], 0.0f64, f64::INFINITY);
    for &eps in &cfg.epsilons {
        let glued = s.glued_potential(eps).in_module("geometry")?;
        let base = RadialPotential::base(s.n, s.b);
        let model = RadialPotential::model(s.n, eps).in_module("geometry")?;
        let r = r_epsilon(eps, s.n).in_module("geometry")?;
        let (t_in, t_out) = (2.0 * r.ln(), 2.0 * (2.0 * r).ln());
        let mut branch = 0.0f64;
        for (t, other) in [(t_in, &model), (t_out, &base)] {
            for (a, b) in [
                (glued.p(t), other.p(t)),
                (glued.p1(t), other.p1(t)),
                (glued.p2(t), other.p2(t)),
            ] {
                branch = branch.max((a - b).abs());
            }
        }
        let sup = (0..=400)
            .map(|i| {
                let rad = r * (1.0 + i as f64 / 400.0);
                let t = (rad * rad).ln();
                (glued.p(t) - t.exp()).abs() / rad.powi(4)
            })
            .fold(0.0, f64::max);
        let norm =
            cutoff_scaled_c4_norm(&GluingParams::single(eps, s.n).in_module("geometry")?, 3000);
        let grid = s.grid(eps).in_module("geometry")?;
        let mut lowest = f64::INFINITY;
        for i in 0..=grid.last() {
            let (t, rad) = (grid.t(i), grid.radius(i));
            let g = radial_metric(
                &[C64::new(rad, 0.0), C64::new(0.0, 0.0)],
                glued.p1(t),
                glued.p2(t),
            );
            let e = min_eig(&g);
            lowest = lowest.min(e);
            let region = if rad < r {
                "model"
            } else if rad <= 2.0 * r {
                "neck"
            } else {
                "base"
            };
            nodes.push(vec![
                num(eps),
                i.to_string(),
                num(t),
                num(rad),
                region.into(),
                num(glued.p(t)),
                num(e),
            ]);
        }
        neck.push(vec![
            num(eps),
            num(r),
            num(branch),
            num(sup),
            num(norm),
            num(lowest),
        ]);
        branch_max = branch_max.max(branch);
        eig_min = eig_min.min(lowest);
        flatness.push(sup);
        c4.push(norm);
    }
    out.check(
        "branch agreement",
        branch_max < 1e-10,
        format!("largest mismatch {branch_max:.2e} at r_ε and 2r_ε"),
    );
    out.check(
        "positivity",
        eig_min > 0.0,
        format!("smallest metric eigenvalue {eig_min:.3e}"),
    );
    let flat_spread = spread(&flatness);
    out.check(
        "neck flatness",
        flat_spread < 2.0,
        format!("sups {} with max/min {flat_spread:.9}", list(&flatness)),
    );
    let c4_spread = spread(&c4) - 1.0;
    out.check(
        "cutoff C⁴ bound",
        c4_spread <= 1e-12,
        format!("norm {:.6} with relative spread {c4_spread:.1e}", c4[0]),
    );
    out.value("branch_mismatch", branch_max);
    out.value("flatness_spread", flat_spread);
    out.value("c4_spread", c4_spread);
    out.write_csv("neck.csv", "gluing region measurements per ε", neck)?;
    out.write_csv(
        "nodes.csv",
        "per-node glued potential and smallest metric eigenvalue",
        nodes,
    )?;
    Ok(())
}

fn indicial(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let n = cfg.n();
    if n < 2 {
        return Err(Error::UnsupportedDimension(n)).in_module("weighted");
    }
    let (lo, hi) = cfg.window;
    let roots = indicial_roots(n, lo, hi);
    let dual = 2 - 2 * n as i64;
    let closed: Vec<i64> = (lo..=hi).filter(|k| !(dual < *k && *k < 0)).collect();
    let k_max = hi.max(dual - lo).max(0) as usize;
    let harmonic: Vec<i64> = harmonic_degree_oracle(n, k_max)
        .into_iter()
        .filter(|k| (lo..=hi).contains(k))
        .collect();
    let mut table = Table::new(&["degree"]);
    for k in &roots {
        table.push(vec![k.to_string()]);
    }
    out.check(
        "closed form",
        roots == closed,
        format!("{} roots in [{lo}, {hi}], gap ({dual}, 0)", roots.len()),
    );
    out.check(
        "harmonic degrees",
        roots == harmonic,
        format!("oracle lists {} degrees in the window", harmonic.len()),
    );
    out.write_csv("indicial.csv", "indicial roots in the window", table)?;
    Ok(())
}

fn norms(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    require_radial(cfg, "norms")?;
    let mut breakdown = Table::new(&["epsilon", "field", "outer", "inner", "ladder_sup", "total"]);
    let mut ladder = Table::new(&["epsilon", "field", "r", "value"]);
    let mut comparison = Table::new(&["epsilon", "field", "lhs", "mid", "rhs", "pass"]);
    let mut failures = 0;
    for &eps in &cfg.epsilons {
        let p = cfg.scenario.radial_problem(eps).in_module("linear")?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let spec = WeightedNormSpec {
            k: cfg.k,
            alpha: cfg.alpha,
            delta: cfg.delta,
            space: Space::BlpX { epsilon: eps },
        };
        for j in 0..NORM_FIELDS {
            let field = p.random_field(&mut rng);
            let report = weighted_holder_norm(&p.grid, &field.0, &spec).in_module("weighted")?;
            breakdown.push(vec![
                num(eps),
                j.to_string(),
                num(report.outer),
                num(report.inner),
                num(report.ladder_sup()),
                num(report.total),
            ]);
            if j == 0 {
                for (r, v) in &report.ladder {
                    ladder.push(vec![num(eps), j.to_string(), num(*r), num(*v)]);
                }
            }
            let w = weight_comparison_check(
                &p.grid,
                &field.0,
                cfg.k,
                cfg.alpha,
                cfg.delta,
                cfg.delta_prime,
                eps,
            )
            .in_module("weighted")?;
            failures += usize::from(!w.pass);
            comparison.push(vec![
                num(eps),
                j.to_string(),
                num(w.lhs),
                num(w.mid),
                num(w.rhs),
                w.pass.to_string(),
            ]);
        }
    }
    let total = cfg.epsilons.len() * NORM_FIELDS;
    out.check(
        "weight comparison",
        failures == 0,
        format!(
            "‖s‖_δ ≤ ‖s‖_δ' ≤ ε^(δ−δ')‖s‖_δ held in {}/{total} cases",
            total - failures
        ),
    );
    out.write_csv(
        "norms.csv",
        "weighted Hölder norm breakdown of random fields",
        breakdown,
    )?;
    out.write_csv(
        "ladder.csv",
        "annulus terms of the first field's norm",
        ladder,
    )?;
    out.write_csv(
        "weight_comparison.csv",
        "weight comparison per field",
        comparison,
    )?;

    let rows = inverse_norm_sweep(
        &cfg.scenario,
        &cfg.epsilons,
        cfg.delta,
        cfg.probes,
        cfg.seed,
    )
    .in_module("linear")?;
    let mut inverse = Table::new(&[
        "epsilon",
        "delta",
        "inverse_norm",
        "smallest_singular_value",
        "probes",
    ]);
    for r in &rows {
        inverse.push(vec![
            num(r.epsilon),
            num(r.delta),
            num(r.inverse_norm),
            num(r.smallest_singular_value),
            r.probes.to_string(),
        ]);
    }
    let estimates: Vec<f64> = rows.iter().map(|r| r.inverse_norm).collect();
    let ratio = spread(&estimates);
    out.check(
        "inverse bound spread",
        ratio < 3.0,
        format!("estimates {} with max/min {ratio:.3}", list(&estimates)),
    );
    out.value("inverse_norm_spread", ratio);
    if estimates.len() >= 3 {
        let minus_log: Vec<f64> = cfg.epsilons.iter().map(|e| -e.ln()).collect();
        let rho = spearman(&minus_log, &estimates);
        out.check(
            "inverse bound trend",
            rho < 0.8,
            format!("Spearman correlation with −log ε {rho:.3}"),
        );
        out.value("inverse_norm_spearman", rho);
    }
    out.write_csv(
        "inverse_norm.csv",
        "probe estimate of the weighted inverse norm per ε",
        inverse,
    )?;
    Ok(())
}

fn residual(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    require_radial(cfg, "residual-sweep")?;
    let sweep = residual_sweep(&cfg.scenario, &cfg.epsilons, cfg.delta).in_module("solver")?;
    let mut rows = Table::new(&[
        "epsilon",
        "r_epsilon",
        "residual",
        "neck_term",
        "inner_term",
        "n_map_norm",
    ]);
    for r in &sweep.rows {
        rows.push(vec![
            num(r.epsilon),
            num(r.r_epsilon),
            num(r.residual),
            num(r.neck_term),
            num(r.inner_term),
            num(r.n_map_norm),
        ]);
    }
    let expected = 2.0 - cfg.delta;
    let mut fits = Table::new(&["quantity", "exponent", "expected"]);
    fits.push(vec![
        "n_map_norm".into(),
        num(sweep.n_map_exponent),
        num(expected),
    ]);
    fits.push(vec![
        "neck_term".into(),
        num(sweep.residual_exponent),
        num(expected),
    ]);
    let e = sweep.n_map_exponent;
    out.check(
        "scaling exponent",
        (e - expected).abs() <= 0.15 * expected,
        format!("‖N(0)‖ ~ r_ε^{e:.4}, expected {expected} ± 15%"),
    );
    let dominated = sweep.rows.iter().all(|r| r.inner_term < r.neck_term);
    out.check(
        "inner term dominated",
        dominated,
        format!("inner below neck at {} scales", sweep.rows.len()),
    );
    out.value("n_map_exponent", e);
    out.value("residual_exponent", sweep.residual_exponent);
    out.write_csv(
        "residual_sweep.csv",
        "approximate-solution residual per ε",
        rows,
    )?;
    out.write_csv(
        "exponents.csv",
        "fitted log-log exponents against r_ε",
        fits,
    )?;
    Ok(())
}

fn linearize(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let mut errors = Table::new(&["epsilon", "direction", "step", "error"]);
    let mut slopes = Table::new(&["epsilon", "direction", "slope"]);
    let mut worst = 0.0f64;
    for problem in Problem::all(cfg)? {
        let d = problem.disc();
        for (j, dir) in normalized_directions(d, cfg.directions, cfg.seed)
            .iter()
            .enumerate()
        {
            let check = linearization_fd_check(d, dir, &FD_STEPS).in_module("solver")?;
            for (t, e) in check.steps.iter().zip(&check.errors) {
                errors.push(vec![problem.eps_cell(), j.to_string(), num(*t), num(*e)]);
            }
            slopes.push(vec![problem.eps_cell(), j.to_string(), num(check.slope)]);
            worst = worst.max((check.slope - 2.0).abs());
        }
    }
    out.check(
        "second-order remainder",
        worst <= 0.1,
        format!("largest |slope − 2| = {worst:.4}"),
    );
    out.value("max_slope_deviation", worst);
    out.write_csv(
        "linearization.csv",
        "‖Φ(ta) − Φ(0) − tΔa‖ per direction and step",
        errors,
    )?;
    out.write_csv("slopes.csv", "fitted log-log slope per direction", slopes)?;
    Ok(())
}

fn contraction(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let mut ratios = Table::new(&["epsilon", "pair", "ratio"]);
    let mut summary = Table::new(&["epsilon", "median", "max"]);
    let mut medians = vec![];
    let mut worst = 0.0f64;
    for problem in Problem::all(cfg)? {
        let r = contraction_pairs(problem.disc(), cfg.pairs, cfg.seed, cfg.scale)
            .in_module("solver")?;
        for (j, x) in r.iter().enumerate() {
            ratios.push(vec![problem.eps_cell(), j.to_string(), num(*x)]);
        }
        let (m, top) = (median(&r), r.iter().copied().fold(0.0, f64::max));
        summary.push(vec![problem.eps_cell(), num(m), num(top)]);
        medians.push(m);
        worst = worst.max(top);
    }
    out.check(
        "all pairs contract",
        worst < 1.0,
        format!("largest ratio {worst:.3e}"),
    );
    let nonincreasing = medians.windows(2).all(|w| w[1] <= w[0]);
    out.check(
        "medians nonincreasing",
        nonincreasing,
        format!("medians {}", list(&medians)),
    );
    out.value("max_ratio", worst);
    out.write_csv(
        "contraction.csv",
        "‖N(a) − N(a')‖/‖a − a'‖ per random pair",
        ratios,
    )?;
    out.write_csv(
        "contraction_summary.csv",
        "median and largest ratio per ε",
        summary,
    )?;
    Ok(())
}

fn solve(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let m = cfg.scenario.rank();
    let mut entry_columns = vec![];
    for i in 0..m {
        for j in 0..m {
            entry_columns.push(format!("a{i}{j}_re"));
            entry_columns.push(format!("a{i}{j}_im"));
        }
    }
    let mut columns: Vec<String> = ["epsilon", "node", "t", "radius"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    columns.extend(entry_columns);
    let mut solution = Table::with_columns(columns);
    let mut history = Table::new(&["epsilon", "iteration", "residual", "step"]);
    let mut summary = Table::new(&[
        "epsilon",
        "iterations",
        "converged",
        "residual_sup",
        "pin_trace",
        "kappa",
        "ball_radius",
        "ball_norm_max",
        "left_ball_at",
    ]);
    let mut operators = vec![];
    for (idx, problem) in Problem::all(cfg)?.iter().enumerate() {
        let d = problem.disc();
        let state = iterate(d, &cfg.solve).in_module("solver")?;
        for (it, r) in state.residual_history.iter().enumerate() {
            let step = state
                .step_history
                .get(it)
                .map_or(String::new(), |s| num(*s));
            history.push(vec![problem.eps_cell(), it.to_string(), num(*r), step]);
        }
        let kappa = match problem {
            Problem::Radial(eps, _) => {
                cfg.scenario.c_epsilon(*eps).in_module("bundle")? - cfg.scenario.c0
            }
            Problem::Torus(_) => 0.0,
        };
        for (i, a) in state.a.0.iter().enumerate() {
            let (t, radius) = match problem {
                Problem::Radial(_, p) => (num(p.grid.t(i)), num(p.grid.radius(i))),
                Problem::Torus(_) => (String::new(), String::new()),
            };
            let mut row = vec![problem.eps_cell(), i.to_string(), t, radius];
            for r in 0..m {
                for c in 0..m {
                    row.push(num(a[(r, c)].re));
                    row.push(num(a[(r, c)].im));
                }
            }
            solution.push(row);
        }
        summary.push(vec![
            problem.eps_cell(),
            state.iterations.to_string(),
            state.converged.to_string(),
            num(state.residual_sup),
            num(state.pin_trace),
            num(kappa),
            num(state.ball_radius),
            num(state.ball_norm_max),
            state.left_ball_at.map_or(String::new(), |k| k.to_string()),
        ]);
        out.check(
            format!("converged ({})", problem.label()),
            state.converged && state.residual_sup < 1e-9,
            format!(
                "{} iterations, residual {:.3e}",
                state.iterations, state.residual_sup
            ),
        );
        out.value(format!("residual[{idx}]"), state.residual_sup);
        if let Problem::Radial(_, p) = problem {
            let mut triplets = Table::new(&["row", "col", "re", "im"]);
            for (r, c, re, im) in p.triplets() {
                triplets.push(vec![r.to_string(), c.to_string(), num(re), num(im)]);
            }
            operators.push((format!("operator_{idx}.csv"), triplets));
        }
    }
    out.write_csv("solution.csv", "converged increment a* per node", solution)?;
    out.write_csv(
        "iterations.csv",
        "residual and step norms per iterate",
        history,
    )?;
    out.write_csv("solve_summary.csv", "one row per solve", summary)?;
    for (file, table) in operators {
        out.write_csv(
            &file,
            "modified operator as (row, col, re, im) triplets",
            table,
        )?;
    }
    Ok(())
}

fn oracle_compare(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let mut reports: Vec<(String, OracleReport)> = vec![];
    let s = &cfg.scenario;
    match s.id {
        ScenarioId::FlatTorusLine => {
            let p = s.torus_problem().in_module("linear")?;
            let (_, r) = torus_oracle(&p, &cfg.solve).in_module("oracle")?;
            reports.push((String::new(), r));
        }
        ScenarioId::Rank2GaugeFlat => {
            for &eps in &cfg.epsilons {
                let check = gauge_flat_check(s, eps, &cfg.solve).in_module("oracle")?;
                out.value(format!("increment_gap[{eps:e}]"), check.increment_gap);
                reports.push((num(eps), check.curvature));
            }
        }
        ScenarioId::RadialBallLine | ScenarioId::Rank2Diag => {
            for &eps in &cfg.epsilons {
                let cmp = direct_sum_oracle(s, eps, &cfg.solve).in_module("oracle")?;
                reports.extend(cmp.reports.into_iter().map(|r| (num(eps), r)));
            }
        }
    }
    let mut table = Table::new(&[
        "epsilon",
        "oracle",
        "quantity",
        "main",
        "oracle_value",
        "abs_dev",
        "rel_dev",
        "tol",
        "pass",
    ]);
    for (eps, r) in &reports {
        out.check(
            format!("{} {}", r.id, r.quantity),
            r.pass,
            format!(
                "deviation {:.3e} against tolerance {:.0e}",
                r.abs_dev, r.tol
            ),
        );
        table.push(vec![
            eps.clone(),
            r.id.clone(),
            r.quantity.clone(),
            num(r.main),
            num(r.oracle),
            num(r.abs_dev),
            num(r.rel_dev),
            num(r.tol),
            r.pass.to_string(),
        ]);
    }
    out.write_csv(
        "oracle_reports.csv",
        "main path against independent oracle",
        table,
    )?;
    if s.id == ScenarioId::RadialBallLine {
        let eps = cfg.epsilons[0];
        let study = refinement_study(s, eps, &[16, 32, 64]).in_module("oracle")?;
        let mut table = Table::new(&["per_octave", "deviation", "ratio"]);
        for (j, k) in study.per_octave.iter().enumerate().skip(1) {
            let ratio = if j >= 2 {
                num(study.ratios[j - 2])
            } else {
                String::new()
            };
            table.push(vec![k.to_string(), num(study.deviations[j - 1]), ratio]);
        }
        let ok = study.ratios.iter().all(|r| *r >= 3.5);
        out.check(
            "oracle refinement",
            ok,
            format!(
                "deviation ratios {} under grid halving",
                list(&study.ratios)
            ),
        );
        out.write_csv(
            "refinement.csv",
            "Poisson oracle self-deviation under refinement",
            table,
        )?;
    }
    Ok(())
}

fn accept(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let acfg = AcceptanceConfig {
        epsilons: cfg.epsilons.clone(),
        delta: cfg.delta,
        per_octave: cfg.scenario.per_octave,
        seed: cfg.seed,
        probes: cfg.probes,
        pairs: cfg.pairs,
        solve: cfg.solve,
    };
    let mut verdicts = Table::new(&["criterion", "name", "pass", "detail"]);
    let mut values = Table::new(&["criterion", "key", "value"]);
    for id in 1..=9u8 {
        let r = acceptance::run(id, &acfg);
        verdicts.push(vec![
            id.to_string(),
            r.name.into(),
            r.pass.to_string(),
            r.detail.clone(),
        ]);
        for (k, v) in &r.values {
            values.push(vec![id.to_string(), k.clone(), num(*v)]);
        }
        out.check(format!("criterion {id}: {}", r.name), r.pass, r.detail);
    }
    out.write_csv(
        "acceptance.csv",
        "one verdict per acceptance criterion",
        verdicts,
    )?;
    out.write_csv(
        "acceptance_values.csv",
        "measurements behind each verdict",
        values,
    )?;
    Ok(())
}
