//! The HYM operator `Φ(a) = iΛF_{A^{Id+a}}`, the fixed-point map
//! `N(a) = L̃⁻¹(target·Id − Φ(0) − Q(a))` with `Q(a) = Φ(a) − Φ(0) − Δa`, and
//! the studies built on them.
//!
//! Fixed points solve the modified equation `Φ(a) = target·Id + P(a)`, where
//! `P(a) = tr(a_q)·Id + Σ_k ⟨E_k, a_q⟩E_k` is the pinned part of the modified
//! operator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{c, eye, selfadjoint_eigs, CMat};
use crate::linear::torus::TorusProblem;
use crate::linear::{EndoField, RadialProblem};
use crate::scenario::Scenario;
use crate::{Error, Result};

/// Iterates must keep `Id + a` above this.
pub const MIN_EIG: f64 = 1e-6;

/// A discretized problem the fixed-point machinery can run on.
pub trait Discretization: Sync {
    fn rank(&self) -> usize;
    fn len(&self) -> usize;
    fn target(&self) -> f64;
    fn phi(&self, a: &EndoField) -> Result<EndoField>;
    fn phi0(&self) -> &EndoField;
    fn laplacian(&self, a: &EndoField) -> EndoField;
    fn pinned_part(&self, a: &EndoField) -> CMat;
    /// `L̃⁻¹r`, self-adjoint.
    fn solve_modified(&self, r: &EndoField) -> Result<EndoField>;
    fn symmetrize(&self, a: &EndoField) -> EndoField;
    /// Smallest eigenvalue of `Id + a` over all nodes.
    fn min_eig_shifted(&self, a: &EndoField) -> f64;
    fn domain_norm(&self, a: &EndoField) -> f64;
    fn range_norm(&self, r: &EndoField) -> f64;
    /// Radius of `V_ε` for the ball constant `c`.
    fn ball_radius(&self, c: f64) -> f64;
    fn random_direction(&self, rng: &mut ChaCha8Rng) -> EndoField;
    /// Node `q` where the trace is pinned.
    fn pin_node(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn zero(&self) -> EndoField {
        EndoField::zeros(self.len(), self.rank())
    }
}

impl Discretization for RadialProblem {
    fn rank(&self) -> usize {
        self.rank
    }

    fn len(&self) -> usize {
        self.grid.len
    }

    fn target(&self) -> f64 {
        self.target
    }

    /// `f⁻¹ X_f f` with `X_f` the discrete curvature of `K f⁻²`.
    fn phi(&self, a: &EndoField) -> Result<EndoField> {
        let m = self.rank;
        let f = a.map(|_, x| x + eye(m));
        let x = self.flux_divergence(&f, a)?;
        f.0.iter()
            .zip(&x.0)
            .enumerate()
            .map(|(i, (fi, xi))| {
                let inv = crate::linalg::inverse(fi)
                    .ok_or_else(|| Error::Singular(format!("Id + a at node {i}")))?;
                Ok(inv * xi * fi)
            })
            .collect::<Result<Vec<_>>>()
            .map(EndoField)
    }

    fn phi0(&self) -> &EndoField {
        &self.x0
    }

    fn laplacian(&self, a: &EndoField) -> EndoField {
        RadialProblem::laplacian(self, a)
    }

    fn pinned_part(&self, a: &EndoField) -> CMat {
        RadialProblem::pinned_part(self, a)
    }

    fn solve_modified(&self, r: &EndoField) -> Result<EndoField> {
        RadialProblem::solve_modified(self, r)
    }

    fn symmetrize(&self, a: &EndoField) -> EndoField {
        RadialProblem::symmetrize(self, a)
    }

    fn min_eig_shifted(&self, a: &EndoField) -> f64 {
        let m = self.rank;
        a.0.iter()
            .zip(&self.k)
            .map(|(x, k)| selfadjoint_eigs(&(x + eye(m)), k)[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn domain_norm(&self, a: &EndoField) -> f64 {
        RadialProblem::domain_norm(self, a)
    }

    fn range_norm(&self, r: &EndoField) -> f64 {
        RadialProblem::range_norm(self, r)
    }

    fn ball_radius(&self, c: f64) -> f64 {
        match self.potential.epsilon() {
            Some(eps) => c * eps.powf(-self.weights.delta),
            None => c,
        }
    }

    fn random_direction(&self, rng: &mut ChaCha8Rng) -> EndoField {
        self.random_field(rng)
    }

    fn pin_node(&self) -> usize {
        RadialProblem::pin_node(self)
    }
}

/// The torus seen through `1×1` fields.
pub struct TorusDiscretization {
    pub problem: TorusProblem,
    phi0: EndoField,
}

impl TorusDiscretization {
    pub fn new(problem: TorusProblem) -> Self {
        let phi0 = to_field(&problem.curvature());
        Self { problem, phi0 }
    }
}

fn to_field(v: &[f64]) -> EndoField {
    EndoField(v.iter().map(|x| CMat::from_element(1, 1, c(*x))).collect())
}

fn to_scalars(a: &EndoField) -> Vec<f64> {
    a.0.iter().map(|x| x[(0, 0)].re).collect()
}

impl Discretization for TorusDiscretization {
    fn rank(&self) -> usize {
        1
    }

    fn len(&self) -> usize {
        self.problem.len()
    }

    fn target(&self) -> f64 {
        0.0
    }

    fn phi(&self, a: &EndoField) -> Result<EndoField> {
        Ok(to_field(&self.problem.phi(&to_scalars(a))?))
    }

    fn phi0(&self) -> &EndoField {
        &self.phi0
    }

    fn laplacian(&self, a: &EndoField) -> EndoField {
        to_field(&self.problem.laplacian(&to_scalars(a)))
    }

    fn pinned_part(&self, a: &EndoField) -> CMat {
        CMat::from_element(1, 1, c(a.0[self.problem.q][(0, 0)].re))
    }

    fn solve_modified(&self, r: &EndoField) -> Result<EndoField> {
        Ok(to_field(&self.problem.solve_modified(&to_scalars(r))?))
    }

    fn symmetrize(&self, a: &EndoField) -> EndoField {
        to_field(&to_scalars(a))
    }

    fn min_eig_shifted(&self, a: &EndoField) -> f64 {
        to_scalars(a)
            .iter()
            .map(|x| 1.0 + x)
            .fold(f64::INFINITY, f64::min)
    }

    fn domain_norm(&self, a: &EndoField) -> f64 {
        self.problem.c2_norm(&to_scalars(a))
    }

    fn range_norm(&self, r: &EndoField) -> f64 {
        self.problem.sup_norm(&to_scalars(r))
    }

    fn ball_radius(&self, c: f64) -> f64 {
        c
    }

    fn random_direction(&self, rng: &mut ChaCha8Rng) -> EndoField {
        use rand::Rng;
        let n = self.problem.size;
        let h = self.problem.h;
        let modes: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0..3) as f64,
                    rng.gen_range(0..3) as f64,
                    rng.gen_range(0.0..6.3),
                )
            })
            .collect();
        to_field(
            &(0..n * n)
                .map(|idx| {
                    let (x1, x2) = ((idx / n) as f64 * h, (idx % n) as f64 * h);
                    modes
                        .iter()
                        .map(|(a, k1, k2, p)| a * (k1 * x1 + k2 * x2 + p).cos())
                        .sum()
                })
                .collect::<Vec<f64>>(),
        )
    }

    fn pin_node(&self) -> usize {
        self.problem.q
    }
}

/// `Q(a) = Φ(a) − Φ(0) − Δa`.
pub fn quadratic_remainder<D: Discretization + ?Sized>(d: &D, a: &EndoField) -> Result<EndoField> {
    let phi = d.phi(a)?;
    Ok(&(&phi - d.phi0()) - &d.laplacian(a))
}

/// `N(a) = L̃⁻¹(target·Id − Φ(a) + Δa)`, which equals
/// `L̃⁻¹(target·Id − Φ(0) − Q(a))`.
pub fn n_map<D: Discretization + ?Sized>(d: &D, a: &EndoField) -> Result<EndoField> {
    let m = d.rank();
    let target = eye(m) * c(d.target());
    let phi = d.phi(a)?;
    let lap = d.laplacian(a);
    let rhs = EndoField(
        phi.0
            .iter()
            .zip(&lap.0)
            .map(|(p, l)| &target - p + l)
            .collect(),
    );
    d.solve_modified(&rhs)
}

/// `Φ(a) − target·Id − P(a)`, zero exactly at fixed points of `N`.
pub fn hym_residual<D: Discretization + ?Sized>(d: &D, a: &EndoField) -> Result<EndoField> {
    let m = d.rank();
    let shift = eye(m) * c(d.target()) + d.pinned_part(a);
    Ok(d.phi(a)?.map(|_, p| p - &shift))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// The constant `c` of the ball `V_ε`.
    pub ball_constant: f64,
    /// Abort with [`Error::BallExit`] instead of recording the exit.
    pub strict_ball: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 100,
            ball_constant: 1.0,
            strict_ball: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub a: EndoField,
    pub iterations: usize,
    pub converged: bool,
    /// Weighted `C^{0,α}_{δ−2}` norm of the modified-equation residual per iterate.
    pub residual_history: Vec<f64>,
    /// Weighted `C^{2,α}_δ` norm of successive differences.
    pub step_history: Vec<f64>,
    pub ball_radius: f64,
    /// Largest `‖a‖_{C^{2,α}_δ}` seen.
    pub ball_norm_max: f64,
    /// First iterate whose norm exceeded the ball radius.
    pub left_ball_at: Option<usize>,
    pub target: f64,
    pub min_eig: f64,
    pub damping_events: usize,
    /// `tr(a_q)`.
    pub pin_trace: f64,
    pub residual_sup: f64,
}

impl SolverState {
    pub fn final_residual(&self) -> f64 {
        self.residual_history
            .last()
            .copied()
            .unwrap_or(f64::INFINITY)
    }

    /// Nonincreasing after the first iterate.
    pub fn monotone_residual(&self) -> bool {
        self.residual_history
            .iter()
            .skip(1)
            .zip(self.residual_history.iter().skip(2))
            .all(|(a, b)| b <= &(a * (1.0 + 1e-9)))
    }
}

/// Picard iteration `a ← N(a)` from `a = 0`, halving steps that would push
/// `Id + a` below [`MIN_EIG`].
pub fn iterate<D: Discretization + ?Sized>(d: &D, opts: &SolveOptions) -> Result<SolverState> {
    let radius = d.ball_radius(opts.ball_constant);
    let mut a = d.zero();
    let mut state = SolverState {
        a: a.clone(),
        iterations: 0,
        converged: false,
        residual_history: Vec::new(),
        step_history: Vec::new(),
        ball_radius: radius,
        ball_norm_max: 0.0,
        left_ball_at: None,
        target: d.target(),
        min_eig: 1.0,
        damping_events: 0,
        pin_trace: 0.0,
        residual_sup: f64::INFINITY,
    };
    for it in 1..=opts.max_iter {
        let next = n_map(d, &a)?;
        let step = &next - &a;
        let mut lambda = 1.0;
        let mut candidate = next;
        while d.min_eig_shifted(&candidate) < MIN_EIG {
            lambda *= 0.5;
            state.damping_events += 1;
            if lambda < 1e-6 {
                return Err(Error::Positivity {
                    min_eig: d.min_eig_shifted(&candidate),
                    location: format!("iterate {it} after {} halvings", state.damping_events),
                });
            }
            candidate = &a + &(&step * lambda);
        }
        let diff = d.domain_norm(&(&candidate - &a));
        a = candidate;
        let norm = d.domain_norm(&a);
        state.ball_norm_max = state.ball_norm_max.max(norm);
        if norm > radius {
            if opts.strict_ball {
                return Err(Error::BallExit { norm, radius });
            }
            state.left_ball_at.get_or_insert(it);
        }
        let residual = hym_residual(d, &a)?;
        state.residual_history.push(d.range_norm(&residual));
        state.residual_sup = residual.sup();
        state.step_history.push(diff);
        state.iterations = it;
        if diff < opts.tol {
            state.converged = true;
            break;
        }
    }
    state.min_eig = d.min_eig_shifted(&a);
    state.pin_trace = a.0[d.pin_node()].trace().re;
    state.a = a;
    if !state.converged {
        return Err(Error::NonConvergence {
            iterations: state.iterations,
            last: state.step_history.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(state)
}

/// `‖N(a₁) − N(a₂)‖ / ‖a₁ − a₂‖` in `C^{2,α}_δ`.
pub fn contraction_ratio<D: Discretization + ?Sized>(
    d: &D,
    a1: &EndoField,
    a2: &EndoField,
) -> Result<f64> {
    let denom = d.domain_norm(&(a1 - a2));
    if !(denom > 0.0) {
        return Err(Error::Precondition(
            "contraction ratio of identical increments".into(),
        ));
    }
    Ok(d.domain_norm(&(&n_map(d, a1)? - &n_map(d, a2)?)) / denom)
}

/// Ratios for `count` fixed-seed pairs, each increment scaled to
/// `scale · c·ε^{−δ}` in `C^{2,α}_δ`.
pub fn contraction_pairs<D: Discretization + ?Sized>(
    d: &D,
    count: usize,
    seed: u64,
    scale: f64,
) -> Result<Vec<f64>> {
    let radius = scale * d.ball_radius(1.0);
    (0..count)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(j as u64));
            let mut pick = || {
                let x = d.random_direction(&mut rng);
                let n = d.domain_norm(&x);
                &x * (radius / n)
            };
            let (a1, a2) = (pick(), pick());
            contraction_ratio(d, &a1, &a2)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearizationCheck {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

/// `‖Φ(t·a) − Φ(0) − tΔa‖_∞` for each `t`, and the log-log slope.
pub fn linearization_fd_check<D: Discretization + ?Sized>(
    d: &D,
    direction: &EndoField,
    steps: &[f64],
) -> Result<LinearizationCheck> {
    if let Some(t) = steps.iter().find(|&&t| !(t > 1e-12)) {
        return Err(Error::Precondition(format!(
            "finite-difference step {t} underflows"
        )));
    }
    let lap = d.laplacian(direction);
    let errors = steps
        .iter()
        .map(|&t| {
            let phi = d.phi(&(direction * t))?;
            Ok((&(&phi - d.phi0()) - &(&lap * t)).sup())
        })
        .collect::<Result<Vec<f64>>>()?;
    let slope = crate::stats::loglog_slope(steps, &errors);
    Ok(LinearizationCheck {
        steps: steps.to_vec(),
        errors,
        slope,
    })
}

/// Directions with unit sup norm.
pub fn normalized_directions<D: Discretization + ?Sized>(
    d: &D,
    count: usize,
    seed: u64,
) -> Vec<EndoField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = d.random_direction(&mut rng);
            let s = x.sup();
            &x * (1.0 / s)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualRow {
    pub epsilon: f64,
    pub r_epsilon: f64,
    /// `‖target·Id − Φ(0)‖_{C^{0,α}_{δ−2}}`.
    pub residual: f64,
    /// Largest annulus term of that norm.
    pub neck_term: f64,
    /// The inner term, coming from `Φ(0) = 0` on the model region.
    pub inner_term: f64,
    /// `‖N(0)‖_{C^{2,α}_δ}`.
    pub n_map_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualSweep {
    pub rows: Vec<ResidualRow>,
    pub residual_exponent: f64,
    pub n_map_exponent: f64,
}

pub fn residual_sweep(scenario: &Scenario, epsilons: &[f64], delta: f64) -> Result<ResidualSweep> {
    crate::linear::check_admissible_weight(delta, scenario.n)?;
    if epsilons.len() < 3 {
        return Err(Error::Precondition(format!(
            "residual sweep needs at least 3 scales, got {}",
            epsilons.len()
        )));
    }
    let rows = epsilons
        .par_iter()
        .map(|&eps| {
            let mut p = scenario.radial_problem(eps)?;
            p.weights.delta = delta;
            let m = p.rank;
            let residual = p.x0.map(|_, x| eye(m) * c(p.target) - x);
            let spec = crate::weighted::WeightedNormSpec {
                k: 0,
                alpha: p.weights.alpha,
                delta: delta - 2.0,
                space: crate::weighted::Space::BlpX { epsilon: eps },
            };
            let report = crate::weighted::weighted_holder_norm(&p.grid, &residual.0, &spec)?;
            let n0 = n_map(&p, &p.zero())?;
            Ok(ResidualRow {
                epsilon: eps,
                r_epsilon: crate::geometry::r_epsilon(eps, scenario.n)?,
                residual: report.total,
                neck_term: report.ladder_sup(),
                inner_term: report.inner,
                n_map_norm: p.domain_norm(&n0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let r: Vec<f64> = rows.iter().map(|row| row.r_epsilon).collect();
    let residual_exponent = crate::stats::loglog_slope(
        &r,
        &rows.iter().map(|row| row.neck_term).collect::<Vec<_>>(),
    );
    let n_map_exponent = crate::stats::loglog_slope(
        &r,
        &rows.iter().map(|row| row.n_map_norm).collect::<Vec<_>>(),
    );
    Ok(ResidualSweep {
        rows,
        residual_exponent,
        n_map_exponent,
    })
}
