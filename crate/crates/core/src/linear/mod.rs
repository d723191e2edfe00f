//! The Laplacian on `End E` for U(n)-invariant data, its trace-modified
//! inverse, and the studies built on it.
//!
//! Unknowns live on the nodes of a [`RadialGrid`]; node `i` owns the cell
//! between the neighbouring half nodes, node 0's cell reaches the divisor (or
//! the puncture) and node `N` is a half cell at `|z| = 2`. Fluxes use the exact
//! `P'(t)^{n−1}` and cell volumes are exact differences of `P'^n/n`, so a metric
//! with constant `iΛF` is reproduced to roundoff.
//!
//! The operator is the exact derivative of the discrete `Φ` at `a = 0`:
//! `(Δa)_i = (S_{i+½} − S_{i−½})/V_i + [X_i, a_i]` with the flux
//! `S = 2P'^{n−1}(Da + [M, ā])` and `X = Φ(0)`; the flux through `|z| = 2`
//! is `2P'^{n−1}[M, a]`.

pub mod blocks;
pub mod torus;

use std::ops::{Add, Mul, Sub};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::radial::RadialMetric;
use crate::geometry::radial::{RadialGrid, RadialPotential};
use crate::linalg::{
    c, commutator, eye, herm_fn, left_right, selfadjoint_part, unvectorize, vectorize, CMat, C64,
};
use crate::weighted::{self, Space, WeightedNormSpec};
use crate::{Error, Result};
use blocks::{BlockTridiag, BlockVec, LowRankSolver};

/// A section of `End E` sampled on grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct EndoField(pub Vec<CMat>);

impl EndoField {
    pub fn zeros(len: usize, m: usize) -> Self {
        Self(vec![CMat::zeros(m, m); len])
    }

    pub fn constant(len: usize, value: &CMat) -> Self {
        Self(vec![value.clone(); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.0.first().map_or(0, |a| a.nrows())
    }

    pub fn sup(&self) -> f64 {
        self.0
            .iter()
            .map(crate::linalg::spectral_norm)
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(usize, &CMat) -> CMat) -> Self {
        Self(self.0.iter().enumerate().map(|(i, a)| f(i, a)).collect())
    }

    pub fn to_blocks(&self) -> BlockVec {
        self.0
            .iter()
            .map(|a| DVector::from_vec(vectorize(a)))
            .collect()
    }

    pub fn from_blocks(m: usize, v: &[DVector<C64>]) -> Self {
        Self(v.iter().map(|x| unvectorize(m, x.as_slice())).collect())
    }
}

impl Add for &EndoField {
    type Output = EndoField;
    fn add(self, rhs: &EndoField) -> EndoField {
        EndoField(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &EndoField {
    type Output = EndoField;
    fn sub(self, rhs: &EndoField) -> EndoField {
        EndoField(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &EndoField {
    type Output = EndoField;
    fn mul(self, s: f64) -> EndoField {
        EndoField(self.0.iter().map(|a| a * c(s)).collect())
    }
}

/// Weight and Hölder exponent used to measure increments (`C^{2,α}_δ`) and
/// residuals (`C^{0,α}_{δ−2}`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormWeights {
    pub delta: f64,
    pub alpha: f64,
}

impl Default for NormWeights {
    fn default() -> Self {
        Self {
            delta: -0.5,
            alpha: 0.5,
        }
    }
}

/// `ad_A` on column-major vectorised matrices.
fn ad(a: &CMat) -> CMat {
    let m = a.nrows();
    left_right(a, &eye(m)) - left_right(&eye(m), a)
}

/// The assembled radial problem: background data, `Δ`, and the factored
/// modified operator `L̃a = Δa − tr(a_q)·Id − Σ_k ⟨E_k, a_q⟩E_k` with `q` the
/// outer boundary node and `E_k` an orthonormal basis of the traceless
/// parallel endomorphisms (empty for simple data).
pub struct RadialProblem {
    pub potential: RadialPotential,
    pub grid: RadialGrid,
    pub rank: usize,
    pub target: f64,
    pub weights: NormWeights,
    pub k: Vec<CMat>,
    pub k_inv: Vec<CMat>,
    /// `M = K⁻¹K'` at the nodes.
    pub m_node: Vec<CMat>,
    /// `M` at the half nodes `i + ½`, `i < N`.
    pub m_half: Vec<CMat>,
    pub coef_half: Vec<f64>,
    pub coef_last: f64,
    pub volume: Vec<f64>,
    /// `Φ(0)`, the discrete `iΛF` of the background.
    pub x0: EndoField,
    pub kernel: Vec<CMat>,
    pub delta: BlockTridiag,
    pinned: BlockTridiag,
    u_cols: Vec<BlockVec>,
    v_cols: Vec<BlockVec>,
    solver: LowRankSolver,
}

impl RadialProblem {
    pub fn new(
        potential: RadialPotential,
        metric: &dyn RadialMetric,
        grid: RadialGrid,
        target: f64,
    ) -> Result<Self> {
        let len = grid.len;
        if len < 8 {
            return Err(Error::InsufficientGrid(format!("{len} radial nodes")));
        }
        let n = potential.n as i32;
        let rank = metric.rank();
        let mut k = Vec::with_capacity(len);
        let mut k_inv = Vec::with_capacity(len);
        let mut m_node = Vec::with_capacity(len);
        for i in 0..len {
            let t = grid.t(i);
            let ki = metric.k(t);
            let e = crate::linalg::min_eig(&ki);
            if e <= crate::bundle::METRIC_TOL {
                return Err(Error::Positivity {
                    min_eig: e,
                    location: format!("bundle metric at t = {t:.4}"),
                });
            }
            let inv = crate::linalg::inverse(&ki)
                .ok_or_else(|| Error::Singular(format!("bundle metric at t = {t:.4}")))?;
            m_node.push(&inv * metric.k_t(t));
            k.push(ki);
            k_inv.push(inv);
        }
        let m_half: Vec<CMat> = (0..len - 1)
            .map(|i| metric.connection(grid.t_half(i)))
            .collect();
        let coef_half: Vec<f64> = (0..len - 1)
            .map(|i| potential.p1(grid.t_half(i)).powi(n - 1))
            .collect();
        let last = len - 1;
        let coef_last = potential.p1(grid.t(last)).powi(n - 1);
        let below: Vec<f64> = (0..len - 1)
            .map(|i| potential.volume_below(grid.t_half(i)))
            .collect();
        let volume: Vec<f64> = (0..len)
            .map(|i| {
                let hi = if i == last {
                    potential.volume_below(grid.t(last))
                } else {
                    below[i]
                };
                let lo = if i == 0 { 0.0 } else { below[i - 1] };
                hi - lo
            })
            .collect();
        if let Some(i) = volume.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::InsufficientGrid(format!(
                "cell {i} has volume {:.3e}",
                volume[i]
            )));
        }

        let mut problem = Self {
            potential,
            grid,
            rank,
            target,
            weights: NormWeights::default(),
            k,
            k_inv,
            m_node,
            m_half,
            coef_half,
            coef_last,
            volume,
            x0: EndoField::zeros(len, rank),
            kernel: Vec::new(),
            delta: BlockTridiag {
                lower: vec![],
                diag: vec![],
                upper: vec![],
            },
            pinned: BlockTridiag {
                lower: vec![],
                diag: vec![],
                upper: vec![],
            },
            u_cols: vec![],
            v_cols: vec![],
            solver: LowRankSolver::new(
                &BlockTridiag {
                    lower: vec![CMat::zeros(1, 1)],
                    diag: vec![eye(1)],
                    upper: vec![CMat::zeros(1, 1)],
                },
                vec![],
                vec![],
            )?,
        };
        problem.x0 = problem.flux_divergence(
            &EndoField::constant(len, &eye(rank)),
            &EndoField::zeros(len, rank),
        )?;
        problem.kernel = problem.parallel_traceless();
        problem.delta = problem.assemble();
        problem.build_modified()?;
        Ok(problem)
    }

    pub fn len(&self) -> usize {
        self.grid.len
    }

    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }

    pub fn pin_node(&self) -> usize {
        self.grid.last()
    }

    /// `X_i = −(G_{i+½} − G_{i−½})/V_i` for the transformed metric `K f⁻²`,
    /// with `f = Id + a` given separately so that `Da` is differenced exactly.
    pub(crate) fn flux_divergence(&self, f: &EndoField, a: &EndoField) -> Result<EndoField> {
        let len = self.len();
        let h = self.grid.h;
        let mut g = Vec::with_capacity(len);
        for i in 0..len - 1 {
            let fbar = (&f.0[i] + &f.0[i + 1]) * c(0.5);
            let fbi = crate::linalg::inverse(&fbar)
                .ok_or_else(|| Error::Singular(format!("gauge transformation at half node {i}")))?;
            let fbi2 = &fbi * &fbi;
            let da = (&a.0[i + 1] - &a.0[i]) * c(1.0 / h);
            let mt = &fbar * &fbar * &self.m_half[i] * &fbi2 - (&da * &fbar + &fbar * &da) * &fbi2;
            g.push(mt * c(self.coef_half[i]));
        }
        let last = len - 1;
        let fl = &f.0[last];
        let fli = crate::linalg::inverse(fl)
            .ok_or_else(|| Error::Singular("gauge transformation at |z| = 2".into()))?;
        g.push(fl * fl * &self.m_node[last] * &fli * &fli * c(self.coef_last));
        Ok(EndoField(
            (0..len)
                .map(|i| {
                    let below = if i == 0 {
                        CMat::zeros(self.rank, self.rank)
                    } else {
                        g[i - 1].clone()
                    };
                    (&g[i] - below) * c(-1.0 / self.volume[i])
                })
                .collect(),
        ))
    }

    /// Traceless constants commuting with every `M` and `X`: an orthonormal
    /// basis of the parallel traceless endomorphisms.
    fn parallel_traceless(&self) -> Vec<CMat> {
        let m = self.rank;
        if m == 1 {
            return vec![];
        }
        let dim = m * m;
        let mut gram = CMat::zeros(dim, dim);
        for a in self.m_half.iter().chain(&self.m_node).chain(&self.x0.0) {
            let op = ad(a);
            gram += op.adjoint() * op;
        }
        let scale = gram.trace().re;
        let eig = gram.symmetric_eigen();
        let mut basis: Vec<CMat> = vec![];
        let id = eye(m) * c(1.0 / (m as f64).sqrt());
        for j in 0..dim {
            if eig.eigenvalues[j] > 1e-10 * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
                continue;
            }
            let mut v = unvectorize(m, eig.eigenvectors.column(j).as_slice());
            v -= &id * id.dotc(&v);
            for b in &basis {
                v -= b * b.dotc(&v);
            }
            let norm = v.norm();
            if norm > 1e-8 {
                basis.push(v * c(1.0 / norm));
            }
        }
        basis
    }

    fn assemble(&self) -> BlockTridiag {
        let len = self.len();
        let m = self.rank;
        let b = m * m;
        let h = self.grid.h;
        let ident = CMat::identity(b, b);
        let p_q: Vec<(CMat, CMat)> = (0..len - 1)
            .map(|i| {
                let half_ad = ad(&self.m_half[i]) * c(0.5);
                let s = 2.0 * self.coef_half[i];
                (
                    (&ident * c(1.0 / h) + &half_ad) * c(s),
                    (&ident * c(-1.0 / h) + &half_ad) * c(s),
                )
            })
            .collect();
        let last = len - 1;
        let mut lower = Vec::with_capacity(len);
        let mut diag = Vec::with_capacity(len);
        let mut upper = Vec::with_capacity(len);
        for i in 0..len {
            let inv_v = c(1.0 / self.volume[i]);
            let mut d = ad(&self.x0.0[i]);
            if i < last {
                d += &p_q[i].1 * inv_v;
                upper.push(&p_q[i].0 * inv_v);
            } else {
                d += ad(&self.m_node[last]) * c(2.0 * self.coef_last) * inv_v;
                upper.push(CMat::zeros(b, b));
            }
            if i > 0 {
                d -= &p_q[i - 1].0 * inv_v;
                lower.push(&p_q[i - 1].1 * c(-1.0) * inv_v);
            } else {
                lower.push(CMat::zeros(b, b));
            }
            diag.push(d);
        }
        BlockTridiag { lower, diag, upper }
    }

    /// Vectorised pin directions `vec(Id), vec(E_1), …`.
    fn pin_vectors(&self) -> Vec<DVector<C64>> {
        std::iter::once(eye(self.rank))
            .chain(self.kernel.iter().cloned())
            .map(|e| DVector::from_vec(vectorize(&e)))
            .collect()
    }

    fn build_modified(&mut self) -> Result<()> {
        let len = self.len();
        let b = self.rank * self.rank;
        let q = self.pin_node();
        let pins = self.pin_vectors();
        let scale = self.delta.diag[q]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        let mut pinned = self.delta.clone();
        for e in &pins {
            pinned.diag[q] += e * e.adjoint() * c(scale);
        }
        let zero = DVector::<C64>::zeros(b);
        let mut u_cols = Vec::new();
        let mut v_cols = Vec::new();
        for e in &pins {
            let mut u: BlockVec = vec![e.clone(); len];
            u[q] = e * c(1.0 + scale);
            let mut v: BlockVec = vec![zero.clone(); len];
            v[q] = e.clone();
            u_cols.push(u);
            v_cols.push(v);
        }
        self.solver = LowRankSolver::new(&pinned, u_cols.clone(), v_cols.clone())?;
        self.pinned = pinned;
        self.u_cols = u_cols;
        self.v_cols = v_cols;
        Ok(())
    }

    pub fn laplacian(&self, a: &EndoField) -> EndoField {
        EndoField::from_blocks(self.rank, &self.delta.apply(&a.to_blocks()))
    }

    /// `tr(a_q)·Id + Σ_k ⟨E_k, a_q⟩ E_k`.
    pub fn pinned_part(&self, a: &EndoField) -> CMat {
        let aq = &a.0[self.pin_node()];
        let mut p = eye(self.rank) * aq.trace();
        for e in &self.kernel {
            p += e * e.dotc(aq);
        }
        p
    }

    pub fn apply_modified(&self, a: &EndoField) -> EndoField {
        let p = self.pinned_part(a);
        self.laplacian(a).map(|_, x| x - &p)
    }

    /// `L̃⁻¹ rhs`, projected onto self-adjoint endomorphisms.
    pub fn solve_modified(&self, rhs: &EndoField) -> Result<EndoField> {
        let x = EndoField::from_blocks(self.rank, &self.solver.solve(&rhs.to_blocks()));
        if x.0
            .iter()
            .any(|a| a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
        {
            return Err(Error::NonConvergence {
                iterations: 1,
                last: f64::NAN,
            });
        }
        Ok(self.symmetrize(&x))
    }

    /// `L̃⁻¹ rhs` without the self-adjoint projection.
    pub fn solve_modified_raw(&self, rhs: &EndoField) -> EndoField {
        EndoField::from_blocks(self.rank, &self.solver.solve(&rhs.to_blocks()))
    }

    pub fn symmetrize(&self, a: &EndoField) -> EndoField {
        a.map(|i, x| selfadjoint_part(x, &self.k[i], &self.k_inv[i]))
    }

    /// `‖·‖_{C^{k,α}_w}` on the blowup with the problem's gluing scale.
    pub fn norm(&self, a: &EndoField, k: usize, weight: f64) -> f64 {
        let space = match self.potential.epsilon() {
            Some(eps) => Space::BlpX { epsilon: eps },
            None => Space::Xp,
        };
        let spec = WeightedNormSpec {
            k,
            alpha: self.weights.alpha,
            delta: weight,
            space,
        };
        weighted::weighted_holder_norm(&self.grid, &a.0, &spec)
            .map(|r| r.total)
            .unwrap_or(f64::INFINITY)
    }

    /// `‖a‖_{C^{2,α}_δ}`.
    pub fn domain_norm(&self, a: &EndoField) -> f64 {
        self.norm(a, 2, self.weights.delta)
    }

    /// `‖r‖_{C^{0,α}_{δ−2}}`.
    pub fn range_norm(&self, r: &EndoField) -> f64 {
        self.norm(r, 0, self.weights.delta - 2.0)
    }

    /// A random smooth self-adjoint field, mixing global modes in `|z|²` with
    /// bumps at random scales.
    pub fn random_field(&self, rng: &mut ChaCha8Rng) -> EndoField {
        let m = self.rank;
        let mut coeffs = Vec::new();
        for _ in 0..4 {
            let mat = CMat::from_fn(m, m, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            coeffs.push((
                mat,
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.2..1.5),
            ));
        }
        let t0 = self.grid.t(0);
        let t1 = self.grid.t(self.grid.last());
        let centre = rng.gen_range(t0 + 1.0..t1 - 0.5);
        let width = rng.gen_range(0.5..3.0);
        let bump = CMat::from_fn(m, m, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let field = EndoField(
            (0..self.len())
                .map(|i| {
                    let t = self.grid.t(i);
                    let rho = t.exp();
                    let mut v = CMat::zeros(m, m);
                    for (mat, phase, freq) in &coeffs {
                        v += mat * c((freq * rho + phase).cos());
                    }
                    let s = (t - centre) / width;
                    if s.abs() < 1.0 {
                        v += &bump * c((1.0 - s * s).powi(4));
                    }
                    v
                })
                .collect(),
        );
        self.symmetrize(&field)
    }

    /// Sparse triplets `(row, col, re, im)` of the modified operator on the
    /// column-major vectorised unknowns, node-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64, f64)> {
        let b = self.rank * self.rank;
        let len = self.len();
        let q = self.pin_node();
        let mut modification = CMat::zeros(b, b);
        for e in &self.pin_vectors() {
            modification += e * e.adjoint();
        }
        let mut blocks_by_pos: std::collections::BTreeMap<(usize, usize), CMat> =
            Default::default();
        for i in 0..len {
            if i > 0 {
                blocks_by_pos.insert((i, i - 1), self.delta.lower[i].clone());
            }
            blocks_by_pos.insert((i, i), self.delta.diag[i].clone());
            if i + 1 < len {
                blocks_by_pos.insert((i, i + 1), self.delta.upper[i].clone());
            }
            *blocks_by_pos
                .entry((i, q))
                .or_insert_with(|| CMat::zeros(b, b)) -= &modification;
        }
        let mut out = Vec::new();
        for ((i, j), block) in blocks_by_pos {
            for r in 0..b {
                for cc in 0..b {
                    let v = block[(r, cc)];
                    if v.norm() != 0.0 {
                        out.push((i * b + r, j * b + cc, v.re, v.im));
                    }
                }
            }
        }
        out
    }

    /// Smallest singular value of `L̃` in the volume-weighted `L²` pairing,
    /// by power iteration on `(Ã⁻¹)(Ã⁻¹)ᴴ` with `Ã = W^{½}L̃W^{−½}`.
    pub fn smallest_singular_value(&self, iterations: usize, seed: u64) -> Result<f64> {
        let adjoint = LowRankSolver::new(
            &self.pinned.adjoint(),
            self.v_cols.clone(),
            self.u_cols.clone(),
        )?;
        let b = self.rank * self.rank;
        let sq: Vec<f64> = self.volume.iter().map(|v| v.sqrt()).collect();
        let scale = |x: &BlockVec, p: f64| -> BlockVec {
            x.iter().zip(&sq).map(|(v, s)| v * c(s.powf(p))).collect()
        };
        let norm = |x: &BlockVec| blocks::dot(x, x).re.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: BlockVec = (0..self.len())
            .map(|_| DVector::from_fn(b, |_, _| c(rng.gen_range(-1.0..1.0))))
            .collect();
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= c(nx));
            let y = scale(&adjoint.solve(&scale(&x, 1.0)), -1.0);
            let z = scale(&self.solver.solve(&scale(&y, -1.0)), 1.0);
            lambda = norm(&z);
            x = z;
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Singular(
                "modified operator in the singular value estimate".into(),
            ));
        }
        Ok(1.0 / lambda.sqrt())
    }
}

/// The right side of the local form `Λ(2∂∂̄s + [s, ∂̄𝒜])`, which in our sign
/// convention is `2Λ∂∂̄s + [s, iΛF]`. With `with_first_order` the term
/// `2Λ[𝒜, ∂̄s] = 2[M, s']/P''` is added; together they form the full
/// linearization.
pub fn laplacian_local_form(
    problem: &RadialProblem,
    s: &EndoField,
    with_first_order: bool,
) -> EndoField {
    let d = weighted::t_derivatives(&problem.grid, &s.0, 2);
    let n = problem.potential.n as f64;
    EndoField(
        (0..problem.len())
            .map(|i| {
                let t = problem.grid.t(i);
                let (p1, p2) = (problem.potential.p1(t), problem.potential.p2(t));
                let mut v = (&d[1][i] * c(2.0 * (n - 1.0) / p1)) + (&d[2][i] * c(2.0 / p2));
                v += commutator(&s.0[i], &problem.x0.0[i]);
                if with_first_order {
                    v += commutator(&problem.m_node[i], &d[1][i]) * c(2.0 / p2);
                }
                v
            })
            .collect(),
    )
}

/// Norms of `Δs − Δ_Euc(γs)` near the puncture, with `γ` equal to 1 on `B₁`
/// and 0 outside `B₂`, and `Δ_Euc` assembled the same way on flat data.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanComparison {
    /// `‖Δs − Δ_Euc(γs)‖_{C^{0,α}_δ}`.
    pub difference_at_delta: f64,
    /// `‖Δs‖_{C^{0,α}_{δ−2}}`.
    pub laplacian_at_delta_minus_2: f64,
    pub ratio: f64,
}

pub fn euclidean_comparison(
    problem: &RadialProblem,
    s: &EndoField,
    profile: &crate::geometry::CutoffProfile,
    delta: f64,
    alpha: f64,
) -> Result<EuclideanComparison> {
    let m = problem.rank;
    let flat_metric = crate::bundle::radial::BumpedLine {
        line: crate::bundle::radial::HymLine {
            n: problem.potential.n,
            c0: 0.0,
            b: 0.0,
        },
        beta: 0.0,
        lo: 0.0,
        hi: 1.0,
    };
    let euclid = RadialProblem::new(
        RadialPotential::base(problem.potential.n, 0.0),
        &flat_metric,
        problem.grid.clone(),
        0.0,
    )?;
    let gs = s.map(|i, a| a * c(1.0 - profile.value(problem.grid.radius(i))));
    let lap_euc = if m == 1 {
        euclid.laplacian(&gs)
    } else {
        // Δ_Euc acts on each matrix entry separately.
        let mut out = EndoField::zeros(s.len(), m);
        for r in 0..m {
            for cc in 0..m {
                let entry = EndoField(
                    gs.0.iter()
                        .map(|a| CMat::from_element(1, 1, a[(r, cc)]))
                        .collect(),
                );
                let l = euclid.laplacian(&entry);
                for (o, v) in out.0.iter_mut().zip(&l.0) {
                    o[(r, cc)] = v[(0, 0)];
                }
            }
        }
        out
    };
    let lap = problem.laplacian(s);
    let diff = &lap - &lap_euc;
    let spec = |k: usize, w: f64| WeightedNormSpec {
        k,
        alpha,
        delta: w,
        space: Space::Xp,
    };
    let difference_at_delta =
        weighted::weighted_holder_norm(&problem.grid, &diff.0, &spec(0, delta))?.total;
    let laplacian_at_delta_minus_2 =
        weighted::weighted_holder_norm(&problem.grid, &lap.0, &spec(0, delta - 2.0))?.total;
    Ok(EuclideanComparison {
        difference_at_delta,
        laplacian_at_delta_minus_2,
        ratio: difference_at_delta / laplacian_at_delta_minus_2,
    })
}

/// `‖[s, iΛF]‖_{C^{0,α}_δ}`, the zeroth-order part of the local form.
pub fn commutator_term_norm(
    problem: &RadialProblem,
    s: &EndoField,
    delta: f64,
    alpha: f64,
) -> Result<f64> {
    let term = s.map(|i, a| commutator(a, &problem.x0.0[i]));
    let spec = WeightedNormSpec {
        k: 0,
        alpha,
        delta,
        space: Space::Xp,
    };
    Ok(weighted::weighted_holder_norm(&problem.grid, &term.0, &spec)?.total)
}

/// Fixed-seed probes for the weighted norm of `L̃⁻¹`: smooth bumps at random
/// positions and widths in `t`, scaled by `r^{δ−2}` at their centre.
pub fn inverse_probes(problem: &RadialProblem, count: usize, seed: u64) -> Vec<EndoField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = problem.rank;
    let t0 = problem.grid.t(0) + 1.0;
    let t1 = problem.grid.t(problem.grid.last()) - 0.25;
    let delta = problem.weights.delta;
    (0..count)
        .map(|_| {
            let u: f64 = rng.gen_range(0.0..1.0);
            let centre = t0 + u * (t1 - t0);
            let width = (rng.gen_range(0.5f64.ln()..4f64.ln())).exp();
            let amp = (0.5 * centre * (delta - 2.0)).exp();
            let mat = CMat::from_fn(m, m, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let field = EndoField(
                (0..problem.len())
                    .map(|i| {
                        let s = (problem.grid.t(i) - centre) / width;
                        if s.abs() < 1.0 {
                            &mat * c(amp * (1.0 - s * s).powi(4))
                        } else {
                            CMat::zeros(m, m)
                        }
                    })
                    .collect(),
            );
            problem.symmetrize(&field)
        })
        .collect()
}

/// `max_j ‖L̃⁻¹p_j‖_{C^{2,α}_δ} / ‖p_j‖_{C^{0,α}_{δ−2}}` over the probes.
pub fn inverse_norm_estimate(problem: &RadialProblem, probes: &[EndoField]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for p in probes {
        let x = problem.solve_modified(p)?;
        best = best.max(problem.domain_norm(&x) / problem.range_norm(p));
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub delta: f64,
    pub inverse_norm: f64,
    pub smallest_singular_value: f64,
    pub probes: usize,
}

/// Requires `δ ∈ (2 − 2n, 0)`.
pub fn check_admissible_weight(delta: f64, n: usize) -> Result<()> {
    let lo = 2.0 - 2.0 * n as f64;
    if !(delta > lo && delta < 0.0) {
        return Err(Error::Precondition(format!(
            "weight δ = {delta} must lie in ({lo}, 0)"
        )));
    }
    Ok(())
}

pub fn inverse_norm_sweep(
    scenario: &crate::scenario::Scenario,
    epsilons: &[f64],
    delta: f64,
    probes: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    check_admissible_weight(delta, scenario.n)?;
    use rayon::prelude::*;
    epsilons
        .par_iter()
        .map(|&eps| {
            let mut problem = scenario.radial_problem(eps)?;
            problem.weights.delta = delta;
            let set = inverse_probes(&problem, probes, seed);
            Ok(SweepRow {
                epsilon: eps,
                delta,
                inverse_norm: inverse_norm_estimate(&problem, &set)?,
                smallest_singular_value: problem.smallest_singular_value(60, seed)?,
                probes,
            })
        })
        .collect()
}

/// `herm_fn` re-export for callers building gauge transformations.
pub fn matrix_sqrt(a: &CMat) -> CMat {
    herm_fn(a, f64::sqrt)
}
