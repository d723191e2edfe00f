//! Charts, cutoffs, the Burns-Simanca model and the glued Kähler metric.
//!
//! Metrics are returned as Hermitian matrices `g[(j, k)] = g_{jk̄} = ∂_j∂_k̄ Φ`
//! for a potential `Φ`, so that `ω = i g_{jk̄} dz_j ∧ dz̄_k`.

pub mod radial;

use crate::linalg::{c, inverse, min_eig, CMat, C64};
use crate::{Error, Result};

/// Smallest eigenvalue a constructed metric may have.
pub const POSITIVITY_TOL: f64 = 1e-10;

pub fn r_epsilon(epsilon: f64, n: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!(
            "epsilon = {epsilon} must lie in (0, 1)"
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!(
            "complex dimension n = {n} must be at least 2"
        )));
    }
    Ok(epsilon.powf((n as f64 - 1.0) / n as f64))
}

/// Polynomial smoothstep `S` on `[0, 1]` with `S(0) = 0`, `S(1) = 1` and flat
/// derivatives at both ends. The cutoff is `γ(x) = S(x − 1)`, so `γ = 0` for
/// `x ≤ 1` and `γ = 1` for `x ≥ 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffProfile {
    name: &'static str,
    coeffs: Vec<f64>,
}

impl CutoffProfile {
    /// Order-7 smoothstep, continuous through the third derivative.
    pub fn smoothstep7() -> Self {
        Self {
            name: "smoothstep7",
            coeffs: vec![0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0],
        }
    }

    /// Order-9 smoothstep, continuous through the fourth derivative.
    pub fn smoothstep9() -> Self {
        Self {
            name: "smoothstep9",
            coeffs: vec![0.0, 0.0, 0.0, 0.0, 0.0, 126.0, -420.0, 540.0, -315.0, 70.0],
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "smoothstep7" => Some(Self::smoothstep7()),
            "smoothstep9" => Some(Self::smoothstep9()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// `d^k γ / dx^k` at `x`.
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        if x <= 1.0 || x >= 2.0 {
            return if k == 0 && x >= 2.0 { 1.0 } else { 0.0 };
        }
        let s = x - 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .skip(k)
            .map(|(p, &a)| {
                let falling: f64 = (0..k).map(|q| (p - q) as f64).product();
                a * falling * s.powi((p - k) as i32)
            })
            .sum()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `Σ_{k≤4} sup |γ^(k)|` over `samples` equispaced points of `[0, 3]`.
    pub fn sampled_c4_norm(&self, samples: usize) -> f64 {
        (0..=4)
            .map(|k| {
                (0..=samples)
                    .map(|i| self.derivative(k, 3.0 * i as f64 / samples as f64).abs())
                    .fold(0.0, f64::max)
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupPoint {
    pub center: Vec<C64>,
    /// Relative scale `a_i`; the point is glued at scale `a_i ε`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GluingParams {
    pub epsilon: f64,
    pub n: usize,
    pub r_eps: f64,
    pub points: Vec<BlowupPoint>,
    pub profile: CutoffProfile,
}

impl GluingParams {
    pub fn single(epsilon: f64, n: usize) -> Result<Self> {
        let origin = BlowupPoint {
            center: vec![C64::new(0.0, 0.0); n],
            weight: 1.0,
        };
        Self::new(epsilon, n, vec![origin], CutoffProfile::smoothstep7())
    }

    pub fn new(
        epsilon: f64,
        n: usize,
        points: Vec<BlowupPoint>,
        profile: CutoffProfile,
    ) -> Result<Self> {
        let r_eps = r_epsilon(epsilon, n)?;
        if points.is_empty() {
            return Err(Error::Domain(
                "at least one blowup point is required".into(),
            ));
        }
        for p in &points {
            if p.center.len() != n {
                return Err(Error::Domain(format!(
                    "blowup centre has {} coordinates, expected {n}",
                    p.center.len()
                )));
            }
            if !(p.weight > 0.0) || p.weight * epsilon >= 1.0 {
                return Err(Error::Domain(format!(
                    "blowup weight {} must be positive with a·ε < 1",
                    p.weight
                )));
            }
        }
        let params = Self {
            epsilon,
            n,
            r_eps,
            points,
            profile,
        };
        for i in 0..params.points.len() {
            for j in i + 1..params.points.len() {
                let d = distance(&params.points[i].center, &params.points[j].center);
                let reach = 2.0 * params.neck_radius(i) + 2.0 * params.neck_radius(j);
                if d <= reach {
                    return Err(Error::Domain(format!(
                        "necks around points {i} and {j} overlap (distance {d:.3e} ≤ {reach:.3e})"
                    )));
                }
            }
        }
        Ok(params)
    }

    /// Gluing scale `a_i ε` of point `i`.
    pub fn scale(&self, i: usize) -> f64 {
        self.points[i].weight * self.epsilon
    }

    /// Neck radius `(a_i ε)^((n−1)/n)` of point `i`.
    pub fn neck_radius(&self, i: usize) -> f64 {
        self.scale(i).powf((self.n as f64 - 1.0) / self.n as f64)
    }

    fn nearest(&self, z: &[C64]) -> (usize, f64) {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, distance(z, &p.center)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one point")
    }
}

pub fn norm(z: &[C64]) -> f64 {
    z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    OuterZ,
    AnnulusZ,
    InnerZeta,
    /// Chart `(u, v)` on the blowup with `ζ = (u, u v)`; `u = 0` is the divisor.
    BlowupInterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Outer,
    Neck,
    Inner,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    pub coords: Vec<C64>,
    pub chart: Chart,
    pub region: Region,
    /// Index of the blowup point whose charts are in use.
    pub point: usize,
}

impl ChartPoint {
    /// Classify a point given in base coordinates. Points with
    /// `r_ε ≤ |z − p| ≤ 2r_ε` are in the neck.
    pub fn from_z(z: &[C64], params: &GluingParams) -> Self {
        let (i, d) = params.nearest(z);
        let r = params.neck_radius(i);
        if d < r {
            let s = params.scale(i);
            let zeta = z
                .iter()
                .zip(&params.points[i].center)
                .map(|(a, b)| (a - b) / s)
                .collect();
            Self {
                coords: zeta,
                chart: Chart::InnerZeta,
                region: Region::Inner,
                point: i,
            }
        } else if d <= 2.0 * r {
            Self {
                coords: z.to_vec(),
                chart: Chart::AnnulusZ,
                region: Region::Neck,
                point: i,
            }
        } else {
            Self {
                coords: z.to_vec(),
                chart: Chart::OuterZ,
                region: Region::Outer,
                point: i,
            }
        }
    }

    pub fn interior(u: C64, v: C64, point: usize) -> Self {
        Self {
            coords: vec![u, v],
            chart: Chart::BlowupInterior,
            region: Region::Inner,
            point,
        }
    }

    /// Base coordinates `z`, when the chart reaches them (not on the divisor).
    pub fn to_z(&self, params: &GluingParams) -> Option<Vec<C64>> {
        let p = &params.points[self.point].center;
        let s = params.scale(self.point);
        match self.chart {
            Chart::OuterZ | Chart::AnnulusZ => Some(self.coords.clone()),
            Chart::InnerZeta => Some(
                self.coords
                    .iter()
                    .zip(p)
                    .map(|(w, c0)| c0 + w * s)
                    .collect(),
            ),
            Chart::BlowupInterior => {
                let (u, v) = (self.coords[0], self.coords[1]);
                if u.norm() == 0.0 {
                    None
                } else {
                    Some(vec![p[0] + u * s, p[1] + u * v * s])
                }
            }
        }
    }

    /// Distance to the blowup centre in base coordinates.
    pub fn radius(&self, params: &GluingParams) -> f64 {
        match self.chart {
            Chart::OuterZ | Chart::AnnulusZ => {
                distance(&self.coords, &params.points[self.point].center)
            }
            Chart::InnerZeta => params.scale(self.point) * norm(&self.coords),
            Chart::BlowupInterior => {
                let (u, v) = (self.coords[0], self.coords[1]);
                params.scale(self.point) * u.norm() * (1.0 + v.norm_sqr()).sqrt()
            }
        }
    }
}

/// `(γ₁, γ₂)` with `γ₁(z) = γ(|z|/r_ε)` and `γ₂ = 1 − γ₁`.
pub fn cutoffs(p: &ChartPoint, params: &GluingParams) -> (f64, f64) {
    let x = p.radius(params) / params.neck_radius(p.point);
    let g1 = params.profile.value(x);
    (g1, 1.0 - g1)
}

/// `Σ_{k≤4} sup r_ε^k |∂_r^k γ₁|` over radii `r_ε·x` for `samples` equispaced
/// `x ∈ [0, 3]`. The `r_ε^k` factors cancel the chain rule exactly.
pub fn cutoff_scaled_c4_norm(params: &GluingParams, samples: usize) -> f64 {
    let r = params.r_eps;
    (0..=4)
        .map(|k| {
            (0..=samples)
                .map(|i| {
                    let x = 3.0 * i as f64 / samples as f64;
                    let radius = r * x;
                    let deriv = params.profile.derivative(k, radius / r) * r.powi(-(k as i32));
                    (r.powi(k as i32) * deriv).abs()
                })
                .fold(0.0, f64::max)
        })
        .sum()
}

/// A real Kähler potential on a chart of `Cⁿ`.
pub trait Potential {
    fn dim(&self) -> usize;
    fn value(&self, z: &[C64]) -> f64;
    /// Closed-form `∂_j∂_k̄` of the potential, when known.
    fn metric(&self, _z: &[C64]) -> Option<CMat> {
        None
    }
}

/// Base Kähler potential `|z|² + φ(z)` with `φ = O(|z|⁴)` in normal form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasePotential {
    Flat,
    /// `φ = b|z|⁴`, the radial surrogate for a curved base.
    Quartic {
        b: f64,
    },
    /// `φ = c|z₁|²|z₂|²`.
    Product {
        c: f64,
    },
}

impl BasePotential {
    pub fn phi(&self, z: &[C64]) -> f64 {
        match *self {
            BasePotential::Flat => 0.0,
            BasePotential::Quartic { b } => b * norm(z).powi(4),
            BasePotential::Product { c } => c * z[0].norm_sqr() * z[1].norm_sqr(),
        }
    }

    /// Coefficient of `|z|⁴` when the correction is radial.
    pub fn radial_coefficient(&self) -> Option<f64> {
        match *self {
            BasePotential::Flat => Some(0.0),
            BasePotential::Quartic { b } => Some(b),
            BasePotential::Product { .. } => None,
        }
    }

    pub fn id(&self) -> String {
        match *self {
            BasePotential::Flat => "flat".into(),
            BasePotential::Quartic { b } => format!("quartic(b={b})"),
            BasePotential::Product { c } => format!("product(c={c})"),
        }
    }
}

/// `|z|² + φ(z)` as a potential on `Cⁿ`.
#[derive(Clone, Copy, Debug)]
pub struct BaseKahler {
    pub n: usize,
    pub base: BasePotential,
}

impl Potential for BaseKahler {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[C64]) -> f64 {
        norm(z).powi(2) + self.base.phi(z)
    }

    fn metric(&self, z: &[C64]) -> Option<CMat> {
        let n = self.n;
        let mut g = CMat::identity(n, n);
        match self.base {
            BasePotential::Flat => {}
            BasePotential::Quartic { b } => {
                let r2 = norm(z).powi(2);
                for j in 0..n {
                    for k in 0..n {
                        let delta = if j == k { r2 } else { 0.0 };
                        g[(j, k)] += (z[j].conj() * z[k] + delta) * (2.0 * b);
                    }
                }
            }
            BasePotential::Product { c: cc } => {
                g[(0, 0)] += c(cc * z[1].norm_sqr());
                g[(1, 1)] += c(cc * z[0].norm_sqr());
                g[(0, 1)] += z[0].conj() * z[1] * cc;
                g[(1, 0)] += z[1].conj() * z[0] * cc;
            }
        }
        Some(g)
    }
}

/// Burns-Simanca potential `|ζ|² + log|ζ|` on `Bl₀C²` away from the divisor.
#[derive(Clone, Copy, Debug, Default)]
pub struct BurnsSimanca;

impl Potential for BurnsSimanca {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, z: &[C64]) -> f64 {
        let r = norm(z);
        r * r + r.ln()
    }

    fn metric(&self, z: &[C64]) -> Option<CMat> {
        Some(burns_simanca_exterior_metric(z))
    }
}

/// `δ + ½(δ_{jk}/|ζ|² − ζ̄_j ζ_k/|ζ|⁴)`.
pub fn burns_simanca_exterior_metric(zeta: &[C64]) -> CMat {
    let r2 = norm(zeta).powi(2);
    let mut g = CMat::identity(2, 2);
    for j in 0..2 {
        for k in 0..2 {
            let delta = if j == k { 1.0 / r2 } else { 0.0 };
            g[(j, k)] += (c(delta) - zeta[j].conj() * zeta[k] / (r2 * r2)) * 0.5;
        }
    }
    g
}

/// Metric in the chart `ζ = (u, uv)`, from `|u|²(1+|v|²) + ½log(1+|v|²)`. The
/// pluriharmonic `log|u|` is dropped, so this extends across `u = 0`.
pub fn burns_simanca_interior_metric(u: C64, v: C64) -> CMat {
    let s = 1.0 + v.norm_sqr();
    CMat::from_row_slice(
        2,
        2,
        &[
            c(s),
            u.conj() * v,
            u * v.conj(),
            c(u.norm_sqr() + 0.5 / (s * s)),
        ],
    )
}

pub fn burns_simanca_potential(p: &ChartPoint, n: usize) -> Result<f64> {
    if n != 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    match p.chart {
        Chart::BlowupInterior => {
            let (u, v) = (p.coords[0], p.coords[1]);
            let s = 1.0 + v.norm_sqr();
            Ok(u.norm_sqr() * s + u.norm().ln() + 0.5 * s.ln())
        }
        _ => {
            let r = norm(&p.coords);
            if r == 0.0 {
                return Err(Error::Domain("the exterior ζ-chart excludes ζ = 0".into()));
            }
            Ok(BurnsSimanca.value(&p.coords))
        }
    }
}

/// Neck potential `|z|² + γ₁φ + ε²γ₂ψ(z/ε)` (base coordinates, `n = 2`).
pub fn glued_potential(p: &ChartPoint, params: &GluingParams, base: BasePotential) -> Result<f64> {
    if params.n != 2 {
        return Err(Error::UnsupportedDimension(params.n));
    }
    let r = p.radius(params);
    let rn = params.neck_radius(p.point);
    if p.region != Region::Neck && !(r >= rn * (1.0 - 1e-12) && r <= 2.0 * rn * (1.0 + 1e-12)) {
        return Err(Error::Region {
            radius: r,
            expected: "neck",
        });
    }
    let z = p.to_z(params).expect("neck points have base coordinates");
    let w: Vec<C64> = z
        .iter()
        .zip(&params.points[p.point].center)
        .map(|(a, b)| a - b)
        .collect();
    let s = params.scale(p.point);
    let (g1, g2) = cutoffs(p, params);
    let zeta: Vec<C64> = w.iter().map(|x| x / s).collect();
    Ok(norm(&w).powi(2) + g1 * base.phi(&w) + s * s * g2 * norm(&zeta).ln())
}

/// Finite-difference `∂_j∂_k̄` of a potential with fourth-order stencils.
pub fn metric_from_potential(pot: &dyn Potential, z: &[C64], step: f64) -> Result<CMat> {
    let n = pot.dim();
    let real_dim = 2 * n;
    let eval = |shift: &[(usize, f64)]| {
        let mut w = z.to_vec();
        for &(axis, d) in shift {
            let j = axis / 2;
            if axis % 2 == 0 {
                w[j].re += d;
            } else {
                w[j].im += d;
            }
        }
        pot.value(&w)
    };
    let h = step;
    let weights = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
    let mut hess = vec![vec![0.0; real_dim]; real_dim];
    for a in 0..real_dim {
        for b in a..real_dim {
            let v = if a == b {
                let f = |k: f64| eval(&[(a, k * h)]);
                (-f(2.0) + 16.0 * f(1.0) - 30.0 * f(0.0) + 16.0 * f(-1.0) - f(-2.0))
                    / (12.0 * h * h)
            } else {
                let mut acc = 0.0;
                for &(sa, wa) in &weights {
                    for &(sb, wb) in &weights {
                        acc += wa * wb * eval(&[(a, sa * h), (b, sb * h)]);
                    }
                }
                acc / (144.0 * h * h)
            };
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    let mut g = CMat::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            g[(j, k)] = C64::new(
                0.25 * (hess[xj][xk] + hess[yj][yk]),
                0.25 * (hess[xj][yk] - hess[yj][xk]),
            );
        }
    }
    check_positive(&g, z)?;
    Ok(g)
}

fn check_positive(g: &CMat, z: &[C64]) -> Result<()> {
    let e = min_eig(g);
    if e <= POSITIVITY_TOL {
        return Err(Error::Positivity {
            min_eig: e,
            location: format!("|z| = {:.3e}", norm(z)),
        });
    }
    Ok(())
}

/// U(n)-invariant metric from a radial potential `P(log|z|²)` with first and
/// second `t`-derivatives `p1`, `p2`.
pub fn radial_metric(z: &[C64], p1: f64, p2: f64) -> CMat {
    let n = z.len();
    let rho = norm(z).powi(2);
    let mut g = CMat::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let delta = if j == k { p1 / rho } else { 0.0 };
            g[(j, k)] = c(delta) + z[j].conj() * z[k] * ((p2 - p1) / (rho * rho));
        }
    }
    g
}

/// The glued metric `ω_ε`, written in the chart of `p`.
pub fn glued_metric(p: &ChartPoint, params: &GluingParams, base: BasePotential) -> Result<CMat> {
    if params.n != 2 {
        return Err(Error::UnsupportedDimension(params.n));
    }
    let s = params.scale(p.point);
    let g = match (p.region, p.chart) {
        (_, Chart::BlowupInterior) => {
            burns_simanca_interior_metric(p.coords[0], p.coords[1]) * c(s * s)
        }
        (Region::Inner, _) => burns_simanca_exterior_metric(&p.coords) * c(s * s),
        (Region::Outer, _) => {
            let w = local(p, params);
            BaseKahler { n: params.n, base }
                .metric(&w)
                .expect("closed form")
        }
        (Region::Neck, _) => {
            let w = local(p, params);
            match base.radial_coefficient() {
                Some(b) => {
                    let pot =
                        radial::RadialPotential::glued(params.n, b, s, params.profile.clone())?;
                    let t = norm(&w).powi(2).ln();
                    radial_metric(&w, pot.p1(t), pot.p2(t))
                }
                None => {
                    let glue = NeckPotential {
                        params,
                        base,
                        point: p.point,
                    };
                    metric_from_potential(&glue, &p.coords, 1e-4 * params.neck_radius(p.point))?
                }
            }
        }
    };
    check_positive(&g, &p.coords)?;
    Ok(g)
}

fn local(p: &ChartPoint, params: &GluingParams) -> Vec<C64> {
    let z = p
        .to_z(params)
        .expect("outer and neck points have base coordinates");
    z.iter()
        .zip(&params.points[p.point].center)
        .map(|(a, b)| a - b)
        .collect()
}

struct NeckPotential<'a> {
    params: &'a GluingParams,
    base: BasePotential,
    point: usize,
}

impl Potential for NeckPotential<'_> {
    fn dim(&self) -> usize {
        self.params.n
    }

    fn value(&self, z: &[C64]) -> f64 {
        let p = ChartPoint {
            coords: z.to_vec(),
            chart: Chart::AnnulusZ,
            region: Region::Neck,
            point: self.point,
        };
        glued_potential(&p, self.params, self.base).unwrap_or(f64::NAN)
    }
}

/// `Λ_ω β = g^{kj̄} β_{jk̄}` for `β = i β_{jk̄} dz_j ∧ dz̄_k`, with `beta[j*n + k]`
/// holding the endomorphism-valued component `β_{jk̄}`. `Λ_ω ω = n`.
pub fn lambda_contract(g: &CMat, beta: &[CMat]) -> Result<CMat> {
    let n = g.nrows();
    if beta.len() != n * n {
        return Err(Error::Domain(format!(
            "expected {} form components, got {}",
            n * n,
            beta.len()
        )));
    }
    let gi = inverse(g).ok_or_else(|| Error::Singular("metric in lambda_contract".into()))?;
    let m = beta[0].nrows();
    let mut out = CMat::zeros(m, m);
    for j in 0..n {
        for k in 0..n {
            out += &beta[j * n + k] * gi[(k, j)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
