//! Hermitian bundle metrics, Chern connections, curvature and the gauge action.
//!
//! Conventions: a metric is stored as the Gram matrix `K` with
//! `⟨s, s'⟩ = s'† K s`, so the Chern connection is `𝒜_j = K⁻¹ ∂_j K` and the
//! adjoint of an endomorphism is `a* = K⁻¹ a† K`. A curvature form is stored by
//! its `dz_j ∧ dz̄_k` coefficients `F_{jk̄}`; for the Chern connection
//! `F_{jk̄} = −∂_k̄ 𝒜_j` and `iΛF = g^{kj̄} F_{jk̄}`, which is `+n` for `K = e^{−|z|²}`.
//!
//! With `f* = f`, the gauge action `∂_{A^f} = f∂_A f⁻¹`, `∂̄_{A^f} = f⁻¹∂̄f` gives
//! `F_{A^f} = f⁻¹ F_{K f⁻²} f`: the transformed connection is conjugate to the
//! Chern connection of the metric `h(f⁻¹·, f⁻¹·)`.

pub mod radial;

use crate::geometry::{lambda_contract, ChartPoint, GluingParams, Region};
use crate::linalg::{c, inverse, min_eig, scalar, CMat, C64};
use crate::{Error, Result};

/// Smallest eigenvalue accepted when ingesting a bundle metric.
pub const METRIC_TOL: f64 = 1e-10;

/// A matrix-valued field on a chart of `Cⁿ`.
pub trait MatrixField {
    fn dim(&self) -> usize;
    fn rank(&self) -> usize;
    fn value(&self, z: &[C64]) -> CMat;
}

/// Wraps a closure as a [`MatrixField`].
pub struct FnField<F> {
    pub n: usize,
    pub m: usize,
    pub f: F,
}

impl<F: Fn(&[C64]) -> CMat> MatrixField for FnField<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn rank(&self) -> usize {
        self.m
    }

    fn value(&self, z: &[C64]) -> CMat {
        (self.f)(z)
    }
}

/// Fourth-order `(∂_j F, ∂_j̄ F)` of a matrix field at `z`.
pub fn complex_partials(
    f: &dyn Fn(&[C64]) -> CMat,
    z: &[C64],
    step: f64,
) -> (Vec<CMat>, Vec<CMat>) {
    let n = z.len();
    let mut dz = Vec::with_capacity(n);
    let mut dzb = Vec::with_capacity(n);
    for j in 0..n {
        let along = |d: C64| {
            let stencil = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
            let mut acc: Option<CMat> = None;
            for (s, w) in stencil {
                let mut w_z = z.to_vec();
                w_z[j] += d * (s * step);
                let v = f(&w_z) * c(w / (12.0 * step));
                acc = Some(match acc {
                    None => v,
                    Some(a) => a + v,
                });
            }
            acc.expect("non-empty stencil")
        };
        let dx = along(C64::new(1.0, 0.0));
        let dy = along(C64::new(0.0, 1.0));
        let i = C64::new(0.0, 1.0);
        dz.push((&dx - &dy * i) * c(0.5));
        dzb.push((dx + dy * i) * c(0.5));
    }
    (dz, dzb)
}

fn checked(h: &dyn MatrixField, z: &[C64]) -> Result<CMat> {
    let k = h.value(z);
    let e = min_eig(&k);
    if e <= METRIC_TOL {
        return Err(Error::Positivity {
            min_eig: e,
            location: format!("bundle metric at {z:?}"),
        });
    }
    Ok(k)
}

/// `𝒜_j = K⁻¹∂_jK` at `z`.
pub fn chern_connection(h: &dyn MatrixField, z: &[C64], step: f64) -> Result<Vec<CMat>> {
    let k = checked(h, z)?;
    let ki = inverse(&k).ok_or_else(|| Error::Singular("bundle metric".into()))?;
    let (dk, _) = complex_partials(&|w| h.value(w), z, step);
    Ok(dk.iter().map(|d| &ki * d).collect())
}

/// A connection in a holomorphic frame, split by type.
#[derive(Clone, Debug)]
pub struct Connection {
    /// `(1,0)` components `C_j`.
    pub c10: Vec<CMat>,
    /// `(0,1)` components `B_k`.
    pub c01: Vec<CMat>,
}

/// Curvature split by type.
#[derive(Clone, Debug)]
pub struct Curvature {
    /// `F_{jk̄}` at `j*n + k`.
    pub f11: Vec<CMat>,
    /// `F_{j̄k̄}` for `j < k`, row-major over pairs.
    pub f02: Vec<CMat>,
}

/// Curvature of a connection field via finite differences of its components:
/// `F_{jk̄} = −∂_k̄C_j + ∂_jB_k + C_jB_k − B_kC_j`.
pub fn connection_curvature(
    conn: &dyn Fn(&[C64]) -> Connection,
    z: &[C64],
    step: f64,
) -> Curvature {
    let n = z.len();
    let here = conn(z);
    let mut f11 = Vec::with_capacity(n * n);
    let mut f02 = Vec::new();
    let dc: Vec<(Vec<CMat>, Vec<CMat>)> = (0..n)
        .map(|j| complex_partials(&|w| conn(w).c10[j].clone(), z, step))
        .collect();
    let db: Vec<(Vec<CMat>, Vec<CMat>)> = (0..n)
        .map(|k| complex_partials(&|w| conn(w).c01[k].clone(), z, step))
        .collect();
    for j in 0..n {
        for k in 0..n {
            let (cj, bk) = (&here.c10[j], &here.c01[k]);
            f11.push(-&dc[j].1[k] + &db[k].0[j] + cj * bk - bk * cj);
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            let (bj, bk) = (&here.c01[j], &here.c01[k]);
            f02.push(&db[k].1[j] - &db[j].1[k] + bj * bk - bk * bj);
        }
    }
    Curvature { f11, f02 }
}

/// Chern curvature `F_{jk̄} = −∂_k̄(K⁻¹∂_jK)`; the `(0,2)` part is zero.
pub fn chern_curvature(h: &dyn MatrixField, z: &[C64], step: f64) -> Result<Vec<CMat>> {
    checked(h, z)?;
    let conn = |w: &[C64]| Connection {
        c10: chern_connection(h, w, step)
            .unwrap_or_else(|_| vec![CMat::from_element(h.rank(), h.rank(), c(f64::NAN)); w.len()]),
        c01: vec![CMat::zeros(h.rank(), h.rank()); w.len()],
    };
    Ok(connection_curvature(&conn, z, step).f11)
}

/// The action of a self-adjoint gauge transformation on the Chern connection
/// of `h`: `C_j = f𝒜_jf⁻¹ − (∂_jf)f⁻¹`, `B_k = f⁻¹∂_k̄f`.
pub fn gauge_act(
    f: &dyn MatrixField,
    h: &dyn MatrixField,
    z: &[C64],
    step: f64,
) -> Result<Connection> {
    let fz = f.value(z);
    let fi = inverse(&fz).ok_or_else(|| Error::Singular("gauge transformation".into()))?;
    let smallest = fz.clone().svd(false, false).singular_values.min();
    if smallest <= METRIC_TOL {
        return Err(Error::Singular(format!(
            "gauge transformation with singular value {smallest:.3e}"
        )));
    }
    let a = chern_connection(h, z, step)?;
    let (df, dfb) = complex_partials(&|w| f.value(w), z, step);
    let c10 = a
        .iter()
        .zip(&df)
        .map(|(aj, dj)| &fz * aj * &fi - dj * &fi)
        .collect();
    let c01 = dfb.iter().map(|d| &fi * d).collect();
    Ok(Connection { c10, c01 })
}

/// `iΛ_ω F − c·Id`.
pub fn hym_residual(g: &CMat, f11: &[CMat], c0: f64) -> Result<CMat> {
    let v = lambda_contract(g, f11)?;
    let m = v.nrows();
    Ok(v - scalar(m, c0))
}

/// The three-branch glued metric: `h` outside `B_{2r_ε}`, `γ₁h + γ₂·Id` on the
/// neck and the flat metric inside `B_{r_ε}`.
pub fn glued_bundle_metric(
    p: &ChartPoint,
    params: &GluingParams,
    h: &dyn MatrixField,
) -> Result<CMat> {
    let m = h.rank();
    let k = match p.region {
        Region::Inner => CMat::identity(m, m),
        Region::Outer => h.value(&p.to_z(params).expect("outer points have base coordinates")),
        Region::Neck => {
            let (g1, g2) = crate::geometry::cutoffs(p, params);
            h.value(&p.to_z(params).expect("neck points have base coordinates")) * c(g1)
                + scalar(m, g2)
        }
    };
    let e = min_eig(&k);
    if e <= METRIC_TOL {
        return Err(Error::Positivity {
            min_eig: e,
            location: "glued bundle metric".into(),
        });
    }
    Ok(k)
}

/// A metric rewritten in the holomorphic frame `G(z) = K(p)^{−1/2} exp(−L·(z − p))`
/// chosen so that `K'(p) = Id` and `dK'(p) = 0`.
pub struct NormalFrame<'a> {
    inner: &'a dyn MatrixField,
    g0: CMat,
    linear: Vec<CMat>,
    center: Vec<C64>,
}

impl<'a> NormalFrame<'a> {
    pub fn new(h: &'a dyn MatrixField, center: &[C64], step: f64) -> Result<Self> {
        let k = checked(h, center)?;
        let g0 = crate::linalg::herm_fn(&k, |x| 1.0 / x.sqrt());
        let g0_adj = g0.adjoint();
        let (dk, _) = complex_partials(&|w| &g0_adj * h.value(w) * &g0, center, step);
        Ok(Self {
            inner: h,
            g0,
            linear: dk,
            center: center.to_vec(),
        })
    }

    fn frame(&self, z: &[C64]) -> CMat {
        let m = self.g0.nrows();
        let mut l = CMat::zeros(m, m);
        for (lj, (zj, pj)) in self.linear.iter().zip(z.iter().zip(&self.center)) {
            l += lj * (zj - pj);
        }
        &self.g0 * (-l).exp()
    }
}

impl MatrixField for NormalFrame<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn value(&self, z: &[C64]) -> CMat {
        let g = self.frame(z);
        g.adjoint() * self.inner.value(z) * g
    }
}

/// Intersection data for `c = n·deg / (m·vol)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologicalData {
    pub n: usize,
    pub rank: usize,
    /// `∫ c₁(E) · [ω]^{n−1}`, unchanged by pullback.
    pub degree: f64,
    /// `∫ [ω]ⁿ` on the base.
    pub volume: f64,
    /// Weights `a_i` of the blown-up points.
    pub weights: Vec<f64>,
}

/// `n·deg/(m·vol_ε)` with `vol_ε = vol − Σ (a_i ε)ⁿ` (the exceptional divisor
/// satisfies `Fⁿ = (−1)^{n−1}`); `epsilon = 0` gives the base constant.
pub fn topological_constant(td: &TopologicalData, epsilon: f64) -> Result<f64> {
    let correction: f64 = if epsilon > 0.0 {
        td.weights
            .iter()
            .map(|a| (a * epsilon).powi(td.n as i32))
            .sum()
    } else {
        0.0
    };
    let vol = td.volume - correction;
    if !(vol > 0.0) || td.rank == 0 {
        return Err(Error::Domain(format!(
            "non-positive volume {vol} or zero rank"
        )));
    }
    Ok(td.n as f64 * td.degree / (td.rank as f64 * vol))
}

#[cfg(test)]
mod tests;
