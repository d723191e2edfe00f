//! Weighted Hölder and Sobolev norms for radial sections.
//!
//! A radial section is a matrix profile `u(t)` on a [`RadialGrid`]. On a
//! reference annulus `1 ≤ ϱ ≤ 2` the rescaled section `s_r^δ(ϱ) = r^{−δ}u(2 log(rϱ))`
//! has `ϱ`-derivatives `σ_j = r^{−δ}ϱ^{−j} Σ_l a_{j,l} u^{(l)}` with
//! `a_{j+1,l} = −j a_{j,l} + 2a_{j,l−1}`, which is what the norms measure.
//! Inside `|ζ| ≤ 2`, `ζ = z/ε`, derivatives are taken in `x = |ζ|²` instead,
//! which stays smooth across the exceptional divisor.

use crate::geometry::radial::{RadialGrid, RadialPotential};
use crate::geometry::CutoffProfile;
use crate::linalg::{c, spectral_norm, CMat};
use crate::{Error, Result};

pub const MAX_DERIVATIVES: usize = 4;

/// Ladder levels per factor 2 in `r`. The level radii `2^{−j/8}` start on grid
/// nodes whenever the grid has a multiple of 8 nodes per octave.
pub const LADDER_LEVELS_PER_OCTAVE: i32 = 8;

/// Derivatives in `x` near the divisor are only sampled where `x ≥ X_FLOOR`.
const X_FLOOR: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Space {
    /// The punctured base `X_p`: outer term plus the ladder down to the
    /// bottom of the grid.
    Xp,
    /// The model `Bl₀Cⁿ` in `ζ = z/ε`: inner term plus the ladder `R ≥ 1`.
    Bl0Cn { epsilon: f64 },
    /// The blowup: outer term, ladder over `r ∈ (ε, 1)`, inner term.
    BlpX { epsilon: f64 },
    /// Only the ladder terms with `r ∈ [lo, hi]`.
    Annulus { lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNormSpec {
    pub k: usize,
    pub alpha: f64,
    pub delta: f64,
    pub space: Space,
}

impl WeightedNormSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Precondition(format!(
                "Hölder exponent {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.k > MAX_DERIVATIVES {
            return Err(Error::Precondition(format!(
                "{} derivatives requested, at most {MAX_DERIVATIVES}",
                self.k
            )));
        }
        match self.space {
            Space::Bl0Cn { epsilon } | Space::BlpX { epsilon }
                if !(epsilon > 0.0 && epsilon < 1.0) =>
            {
                Err(Error::Precondition(format!(
                    "gluing scale ε = {epsilon} outside (0, 1)"
                )))
            }
            Space::Annulus { lo, hi } if !(lo > 0.0 && hi >= lo) => Err(Error::Precondition(
                format!("empty annulus range [{lo}, {hi}]"),
            )),
            _ => Ok(()),
        }
    }
}

/// Breakdown of a weighted Hölder norm.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub outer: f64,
    /// `(r, ‖s_r^δ‖)` per ladder level.
    pub ladder: Vec<(f64, f64)>,
    pub inner: f64,
    pub total: f64,
}

impl NormReport {
    pub fn ladder_sup(&self) -> f64 {
        self.ladder.iter().map(|&(_, v)| v).fold(0.0, f64::max)
    }
}

/// `u, u', …, u^{(k)}` in `t`: first derivatives by central differences,
/// second by the three-point stencil, higher ones by repeating these on `u''`.
/// End values are copied from the nearest interior node.
pub fn t_derivatives(grid: &RadialGrid, u: &[CMat], k: usize) -> Vec<Vec<CMat>> {
    let h = grid.h;
    let n = u.len();
    let first = |v: &[CMat]| -> Vec<CMat> {
        let mut d: Vec<CMat> = (0..n)
            .map(|i| {
                if i == 0 || i + 1 == n {
                    v[i].clone()
                } else {
                    (&v[i + 1] - &v[i - 1]) * c(0.5 / h)
                }
            })
            .collect();
        clamp_ends(&mut d);
        d
    };
    let second = |v: &[CMat]| -> Vec<CMat> {
        let mut d: Vec<CMat> = (0..n)
            .map(|i| {
                if i == 0 || i + 1 == n {
                    v[i].clone()
                } else {
                    (&v[i + 1] - &v[i] * c(2.0) + &v[i - 1]) * c(1.0 / (h * h))
                }
            })
            .collect();
        clamp_ends(&mut d);
        d
    };
    let mut out = vec![u.to_vec()];
    if k >= 1 {
        out.push(first(u));
    }
    if k >= 2 {
        out.push(second(u));
    }
    if k >= 3 {
        let d2 = out[2].clone();
        out.push(first(&d2));
    }
    if k >= 4 {
        let d2 = out[2].clone();
        out.push(second(&d2));
    }
    out
}

fn clamp_ends(d: &mut [CMat]) {
    let n = d.len();
    if n >= 3 {
        d[0] = d[1].clone();
        d[n - 1] = d[n - 2].clone();
    }
}

/// Coefficients `a_{j,l}` (`scale = 2`, derivatives in `ϱ`) or `b_{j,l}`
/// (`scale = 1`, derivatives in `x = e^t/ε²`) expressing the `j`-th derivative
/// through `t`-derivatives.
fn chain_coefficients(k: usize, scale: f64) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    a[0][0] = 1.0;
    for j in 0..k {
        for l in 0..=j + 1 {
            let keep = if l <= j { -(j as f64) * a[j][l] } else { 0.0 };
            let raise = if l >= 1 { scale * a[j][l - 1] } else { 0.0 };
            a[j + 1][l] = keep + raise;
        }
    }
    a
}

/// Samples `(coordinate, σ_0, …, σ_k)` on some reference set, already weighted.
struct Profile {
    coord: Vec<f64>,
    sigma: Vec<Vec<CMat>>,
    /// For each order, whether node `i` takes part.
    active: Vec<Vec<bool>>,
}

impl Profile {
    fn holder_norm(&self, k: usize, alpha: f64, max_gap: f64) -> f64 {
        let mut total = 0.0;
        for j in 0..=k {
            let sup = self.sigma[j]
                .iter()
                .zip(&self.active[j])
                .filter(|(_, &on)| on)
                .map(|(s, _)| spectral_norm(s))
                .fold(0.0, f64::max);
            total += sup;
        }
        let idx: Vec<usize> = (0..self.coord.len())
            .filter(|&i| self.active[k][i])
            .collect();
        let mut semi: f64 = 0.0;
        for (p, &a) in idx.iter().enumerate() {
            for &b in &idx[p + 1..] {
                let gap = (self.coord[b] - self.coord[a]).abs();
                if gap > max_gap {
                    continue;
                }
                if gap > 0.0 {
                    semi = semi.max(
                        spectral_norm(&(&self.sigma[k][b] - &self.sigma[k][a])) / gap.powf(alpha),
                    );
                }
            }
        }
        total + semi
    }
}

/// `‖s_r^δ‖_{C^{k,α}}` on the reference annulus `1 ≤ ϱ ≤ 2`.
fn annulus_term(
    grid: &RadialGrid,
    d: &[Vec<CMat>],
    r: f64,
    k: usize,
    alpha: f64,
    delta: f64,
) -> Result<f64> {
    let range = grid.span(2.0 * r.ln(), 2.0 * (2.0 * r).ln());
    let nodes: Vec<usize> = range.collect();
    if nodes.len() < 2 {
        return Err(Error::InsufficientGrid(format!(
            "annulus at r = {r:.3e} has {} nodes",
            nodes.len()
        )));
    }
    let a = chain_coefficients(k, 2.0);
    let w = r.powf(-delta);
    let m = d[0][0].nrows();
    let coord: Vec<f64> = nodes.iter().map(|&i| grid.radius(i) / r).collect();
    let sigma: Vec<Vec<CMat>> = (0..=k)
        .map(|j| {
            nodes
                .iter()
                .zip(&coord)
                .map(|(&i, &rho)| {
                    let mut s = CMat::zeros(m, m);
                    for (l, coef) in a[j].iter().enumerate().take(j + 1) {
                        if *coef != 0.0 {
                            s += &d[l][i] * c(*coef);
                        }
                    }
                    s * c(w * rho.powi(-(j as i32)))
                })
                .collect()
        })
        .collect();
    let active = vec![vec![true; nodes.len()]; k + 1];
    Ok(Profile {
        coord,
        sigma,
        active,
    }
    .holder_norm(k, alpha, 0.5))
}

/// `‖s(εζ)‖_{C^{k,α}(|ζ| ≤ 2)}` measured in `x = |ζ|²`, unweighted.
fn inner_term(
    grid: &RadialGrid,
    d: &[Vec<CMat>],
    epsilon: f64,
    k: usize,
    alpha: f64,
) -> Result<f64> {
    let top = 2.0 * epsilon.ln() + 4f64.ln();
    let nodes: Vec<usize> = grid.span(grid.t(0), top).collect();
    if nodes.len() < 2 {
        return Err(Error::InsufficientGrid(format!(
            "inner region at ε = {epsilon:.3e} has {} nodes",
            nodes.len()
        )));
    }
    let b = chain_coefficients(k, 1.0);
    let m = d[0][0].nrows();
    let coord: Vec<f64> = nodes
        .iter()
        .map(|&i| grid.t(i).exp() / (epsilon * epsilon))
        .collect();
    let sigma: Vec<Vec<CMat>> = (0..=k)
        .map(|j| {
            nodes
                .iter()
                .zip(&coord)
                .map(|(&i, &x)| {
                    let mut s = CMat::zeros(m, m);
                    for (l, coef) in b[j].iter().enumerate().take(j + 1) {
                        if *coef != 0.0 {
                            s += &d[l][i] * c(*coef);
                        }
                    }
                    s * c(x.powi(-(j as i32)))
                })
                .collect()
        })
        .collect();
    let active: Vec<Vec<bool>> = (0..=k)
        .map(|j| coord.iter().map(|&x| j == 0 || x >= X_FLOOR).collect())
        .collect();
    if k > 0 && active[k].iter().filter(|&&on| on).count() < 2 {
        return Err(Error::InsufficientGrid(format!(
            "no inner samples with x ≥ {X_FLOOR}"
        )));
    }
    Ok(Profile {
        coord,
        sigma,
        active,
    }
    .holder_norm(k, alpha, 0.5))
}

/// Ladder radii `2^{−j/L}` with `r ≤ ½`, inside `[lo, hi]`.
fn dyadic_ladder(lo: f64, hi: f64) -> Vec<f64> {
    let l = LADDER_LEVELS_PER_OCTAVE;
    (l..200 * l)
        .map(|j| 2f64.powf(-(j as f64) / l as f64))
        .take_while(|&r| r >= lo * (1.0 - 1e-12))
        .filter(|&r| r <= hi * (1.0 + 1e-12))
        .collect()
}

pub fn weighted_holder_norm(
    grid: &RadialGrid,
    s: &[CMat],
    spec: &WeightedNormSpec,
) -> Result<NormReport> {
    spec.validate()?;
    if s.len() != grid.len {
        return Err(Error::Domain(format!(
            "field has {} samples, grid has {}",
            s.len(),
            grid.len
        )));
    }
    let d = t_derivatives(grid, s, spec.k);
    let (k, alpha, delta) = (spec.k, spec.alpha, spec.delta);
    let bottom = grid.radius(0);
    let ladder_terms = |radii: &[f64], scale: f64| -> Result<Vec<(f64, f64)>> {
        radii
            .iter()
            .map(|&r| Ok((r, scale * annulus_term(grid, &d, r, k, alpha, delta)?)))
            .collect()
    };
    let report = match spec.space {
        Space::Xp => {
            let outer = annulus_term(grid, &d, 1.0, k, alpha, 0.0)?;
            let ladder = ladder_terms(&dyadic_ladder(2.0 * bottom, 0.5), 1.0)?;
            if ladder.is_empty() {
                return Err(Error::InsufficientGrid(
                    "no dyadic level fits above the grid bottom".into(),
                ));
            }
            NormReport {
                outer,
                inner: 0.0,
                total: 0.0,
                ladder,
            }
        }
        Space::BlpX { epsilon } => {
            let outer = annulus_term(grid, &d, 1.0, k, alpha, 0.0)?;
            let radii: Vec<f64> = dyadic_ladder(epsilon, 0.5)
                .into_iter()
                .filter(|&r| r > epsilon)
                .collect();
            let ladder = ladder_terms(&radii, 1.0)?;
            let inner = epsilon.powf(-delta) * inner_term(grid, &d, epsilon, k, alpha)?;
            NormReport {
                outer,
                ladder,
                inner,
                total: 0.0,
            }
        }
        Space::Bl0Cn { epsilon } => {
            // s_R^δ(ϱ) = R^{−δ}s(εRϱ) = ε^{δ}·(εR)^{−δ}s(εRϱ).
            let l = LADDER_LEVELS_PER_OCTAVE;
            let radii: Vec<f64> = (0..200 * l)
                .map(|j| epsilon * 2f64.powf(j as f64 / l as f64))
                .take_while(|&r| r <= 1.0 * (1.0 + 1e-12))
                .collect();
            let ladder = ladder_terms(&radii, epsilon.powf(delta))?;
            let inner = inner_term(grid, &d, epsilon, k, alpha)?;
            NormReport {
                outer: 0.0,
                ladder,
                inner,
                total: 0.0,
            }
        }
        Space::Annulus { lo, hi } => {
            let ladder = ladder_terms(&dyadic_ladder(lo.max(2.0 * bottom), hi), 1.0)?;
            NormReport {
                outer: 0.0,
                ladder,
                inner: 0.0,
                total: 0.0,
            }
        }
    };
    let total = report.outer + report.ladder_sup() + report.inner;
    Ok(NormReport { total, ..report })
}

/// `s_r^δ` sampled at the grid nodes of `[r, 2r]`, as `(ϱ, value)` pairs.
pub fn scaled_section(
    grid: &RadialGrid,
    s: &[CMat],
    r: f64,
    delta: f64,
) -> Result<Vec<(f64, CMat)>> {
    if !(r > 0.0)
        || 2.0 * r > grid.radius(grid.last()) * (1.0 + 1e-12)
        || r < grid.radius(0) * (1.0 - 1e-12)
    {
        return Err(Error::Domain(format!(
            "scale r = {r:.3e} outside the sampled range"
        )));
    }
    let w = r.powf(-delta);
    Ok(grid
        .span(2.0 * r.ln(), 2.0 * (2.0 * r).ln())
        .map(|i| (grid.radius(i) / r, &s[i] * c(w)))
        .collect())
}

/// Both descriptions of the norm on the blowup: the three-region sum and
/// `ε^{−δ}‖γ₂s‖_{Bl₀Cⁿ} + ‖γ₁s‖_{X_p}` with the gluing cutoffs of `potential`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitNorms {
    pub three_region: f64,
    pub split: f64,
    pub ratio: f64,
}

pub fn split_norm_equivalence(
    grid: &RadialGrid,
    potential: &RadialPotential,
    s: &[CMat],
    spec: &WeightedNormSpec,
) -> Result<SplitNorms> {
    let Space::BlpX { epsilon } = spec.space else {
        return Err(Error::Precondition("split norm needs a blowup norm".into()));
    };
    let three_region = weighted_holder_norm(grid, s, spec)?.total;
    let g1: Vec<f64> = (0..grid.len)
        .map(|i| potential.cutoff(grid.t(i)).0)
        .collect();
    let outer_part: Vec<CMat> = s.iter().zip(&g1).map(|(a, g)| a * c(*g)).collect();
    let inner_part: Vec<CMat> = s.iter().zip(&g1).map(|(a, g)| a * c(1.0 - g)).collect();
    let xp = weighted_holder_norm(
        grid,
        &outer_part,
        &WeightedNormSpec {
            space: Space::Xp,
            ..*spec
        },
    )?
    .total;
    let model = if inner_part.iter().all(|a| a.iter().all(|z| z.norm() == 0.0)) {
        0.0
    } else {
        weighted_holder_norm(
            grid,
            &inner_part,
            &WeightedNormSpec {
                space: Space::Bl0Cn { epsilon },
                ..*spec
            },
        )?
        .total
    };
    let split = epsilon.powf(-spec.delta) * model + xp;
    Ok(SplitNorms {
        three_region,
        split,
        ratio: three_region / split,
    })
}

/// `(‖s‖_δ, ‖s‖_{δ'}, ε^{δ−δ'}‖s‖_δ)` on the blowup and whether
/// `‖s‖_δ ≤ ‖s‖_{δ'} ≤ ε^{δ−δ'}‖s‖_δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightComparison {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn weight_comparison_check(
    grid: &RadialGrid,
    s: &[CMat],
    k: usize,
    alpha: f64,
    delta: f64,
    delta_prime: f64,
    epsilon: f64,
) -> Result<WeightComparison> {
    if delta > delta_prime {
        return Err(Error::Precondition(format!(
            "need δ ≤ δ', got {delta} > {delta_prime}"
        )));
    }
    let norm = |w: f64| {
        weighted_holder_norm(
            grid,
            s,
            &WeightedNormSpec {
                k,
                alpha,
                delta: w,
                space: Space::BlpX { epsilon },
            },
        )
        .map(|r| r.total)
    };
    let lhs = norm(delta)?;
    let mid = norm(delta_prime)?;
    let rhs = epsilon.powf(delta - delta_prime) * lhs;
    let slack = 1e-12 * rhs.max(1.0);
    Ok(WeightComparison {
        lhs,
        mid,
        rhs,
        pass: lhs <= mid + slack && mid <= rhs + slack,
    })
}

/// `ρ`: equal to `r` on `B₁`, to 2 outside `B₂`, interpolated by the profile.
pub fn rho(r: f64, profile: &CutoffProfile) -> f64 {
    r + (2.0 - r) * profile.value(r)
}

/// `ϱ_ε`: 1 outside `B₁`, `|z|` on the neck `ε ≤ |z| ≤ 1`, `ε` inside.
pub fn varrho(r: f64, epsilon: f64) -> f64 {
    r.clamp(epsilon, 1.0)
}

/// `Σ_j ‖∂_r^j s‖_{L²_{δ−j}}` with `‖u‖²_{L²_w} = ∫|u|²ρ^{−w}ωⁿ`, by the
/// cell-volume quadrature of `potential` on `grid`.
pub fn weighted_sobolev_norm(
    grid: &RadialGrid,
    potential: &RadialPotential,
    profile: &CutoffProfile,
    s: &[CMat],
    k: usize,
    delta: f64,
) -> Result<f64> {
    if k > MAX_DERIVATIVES {
        return Err(Error::Precondition(format!(
            "{k} derivatives requested, at most {MAX_DERIVATIVES}"
        )));
    }
    let volume = cell_volumes(grid, potential);
    if volume.iter().all(|&v| v <= 0.0) {
        return Err(Error::InsufficientGrid(
            "quadrature has no positive cells".into(),
        ));
    }
    let d = t_derivatives(grid, s, k);
    let a = chain_coefficients(k, 2.0);
    let mut total = 0.0;
    for j in 0..=k {
        let mut sum = 0.0;
        for i in 0..grid.len {
            let r = grid.radius(i);
            let mut v = CMat::zeros(s[0].nrows(), s[0].ncols());
            for l in 0..=j {
                if a[j][l] != 0.0 {
                    v += &d[l][i] * c(a[j][l]);
                }
            }
            let norm2 = v.norm_squared() * r.powi(-2 * j as i32);
            sum += volume[i] * norm2 * rho(r, profile).powf(-(delta - j as f64));
        }
        total += sum.sqrt();
    }
    Ok(total)
}

/// Exact volumes `∫ωⁿ` (in units of the radial reduction) of the cells around
/// each node: node 0 reaches down to the divisor or puncture, the last node is
/// a half cell.
pub fn cell_volumes(grid: &RadialGrid, potential: &RadialPotential) -> Vec<f64> {
    let last = grid.last();
    (0..grid.len)
        .map(|i| {
            let hi = if i == last {
                grid.t(last)
            } else {
                grid.t_half(i)
            };
            let lo = if i == 0 {
                0.0
            } else {
                potential.volume_below(grid.t_half(i - 1))
            };
            potential.volume_below(hi) - lo
        })
        .collect()
}

/// `δ' < 2δ + 2n`: fields in `C^{k,α}_δ` lie in `L²_{δ'}`.
pub fn inclusion_predicate(delta: f64, delta_prime: f64, n: usize) -> bool {
    delta_prime < 2.0 * delta + 2.0 * n as f64
}

/// Whether `∫_{B₁}|z|^{2γ}ρ^{−δ'}ωⁿ` is finite, judged from dyadic shells of
/// the flat quadrature: the integral converges iff successive shell
/// contributions shrink geometrically.
pub fn quadrature_finite(gamma: f64, delta_prime: f64, n: usize) -> Result<bool> {
    let per_octave = 32;
    let octaves = 24;
    let grid = RadialGrid::new(-2.0 * octaves as f64 * 2f64.ln(), 0.0, per_octave)?;
    let potential = RadialPotential::base(n, 0.0);
    let volume = cell_volumes(&grid, &potential);
    let mut shells = vec![0.0; octaves + 1];
    for i in 1..grid.len {
        let r = grid.radius(i);
        // Shell j holds 2^{−j−1} < r ≤ 2^{−j}.
        let j = ((-r.log2()).max(0.0) - 1e-9).floor() as usize;
        if j < shells.len() {
            shells[j] += volume[i] * r.powf(2.0 * gamma - delta_prime);
        }
    }
    let tail: Vec<f64> = shells[octaves - 8..octaves - 1].to_vec();
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(ratios.iter().all(|&q| q < 0.95))
}

/// `Z ∖ (2 − 2n, 0)` inside `[lo, hi]`.
pub fn indicial_roots(n: usize, lo: i64, hi: i64) -> Vec<i64> {
    let bottom = 2 - 2 * n as i64;
    (lo..=hi).filter(|&k| k <= bottom || k >= 0).collect()
}

/// The constant `C` in `‖s⊗t‖_{δ+δ'} ≤ C‖s‖_δ‖t‖_{δ'}` for one pair, with
/// `s⊗t` the pointwise Kronecker product.
pub fn tensor_ratio(
    grid: &RadialGrid,
    s: &[CMat],
    t: &[CMat],
    spec_s: &WeightedNormSpec,
    delta_t: f64,
) -> Result<f64> {
    let st: Vec<CMat> = s.iter().zip(t).map(|(a, b)| a.kronecker(b)).collect();
    let ns = weighted_holder_norm(grid, s, spec_s)?.total;
    let nt = weighted_holder_norm(
        grid,
        t,
        &WeightedNormSpec {
            delta: delta_t,
            ..*spec_s
        },
    )?
    .total;
    let nst = weighted_holder_norm(
        grid,
        &st,
        &WeightedNormSpec {
            delta: spec_s.delta + delta_t,
            ..*spec_s
        },
    )?
    .total;
    Ok(nst / (ns * nt))
}
