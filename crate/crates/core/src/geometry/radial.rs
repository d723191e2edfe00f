//! U(n)-invariant geometry in the variable `t = log|z|²`.
//!
//! A radial potential `P(t)` gives `g_{jk̄} = P' δ_{jk}/ρ + (P'' − P') z̄_j z_k/ρ²`
//! with `ρ = |z|²`, so on radial functions
//! `Λ i∂∂̄ u = (P'^{n−1} u')' / μ` with `μ = P'^{n−1} P''`, and the volume form is
//! `μ dt` up to the angular constant. On the blowup, `P' → ε²/2` as `t → −∞`
//! (the divisor has area `ε²/2` in these units); on the punctured base `P' → 0`.

use super::CutoffProfile;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum RadialKind {
    /// `e^t + b e^{2t}`: the base `|z|² + b|z|⁴` around the (punctured) point.
    Base,
    /// `e^t + ε²(t/2 − log ε)`: the scaled Burns-Simanca model `ε²η`.
    Model { eps: f64 },
    /// `e^t + γ₁ b e^{2t} + ε²γ₂(t/2 − log ε)`.
    Glued {
        eps: f64,
        r_eps: f64,
        profile: CutoffProfile,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialPotential {
    pub n: usize,
    pub b: f64,
    pub kind: RadialKind,
}

impl RadialPotential {
    pub fn base(n: usize, b: f64) -> Self {
        Self {
            n,
            b,
            kind: RadialKind::Base,
        }
    }

    pub fn glued(n: usize, b: f64, eps: f64, profile: CutoffProfile) -> Result<Self> {
        if n != 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        let r_eps = super::r_epsilon(eps, n)?;
        Ok(Self {
            n,
            b,
            kind: RadialKind::Glued {
                eps,
                r_eps,
                profile,
            },
        })
    }

    pub fn model(n: usize, eps: f64) -> Result<Self> {
        if n != 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        Ok(Self {
            n,
            b: 0.0,
            kind: RadialKind::Model { eps },
        })
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self.kind {
            RadialKind::Base => None,
            RadialKind::Model { eps } | RadialKind::Glued { eps, .. } => Some(eps),
        }
    }

    /// `(γ₁, γ₁', γ₁'')` in `t`, with `γ₁ = γ(e^{t/2}/r_ε)`.
    pub fn cutoff(&self, t: f64) -> (f64, f64, f64) {
        match &self.kind {
            RadialKind::Base => (1.0, 0.0, 0.0),
            RadialKind::Model { .. } => (0.0, 0.0, 0.0),
            RadialKind::Glued { r_eps, profile, .. } => {
                let x = (0.5 * t).exp() / r_eps;
                let d1 = profile.derivative(1, x);
                let d2 = profile.derivative(2, x);
                (
                    profile.value(x),
                    0.5 * x * d1,
                    0.25 * x * x * d2 + 0.25 * x * d1,
                )
            }
        }
    }

    fn parts(&self, t: f64) -> [f64; 3] {
        let e = t.exp();
        let phi = [self.b * e * e, 2.0 * self.b * e * e, 4.0 * self.b * e * e];
        let (eps, (g1, g1p, g1pp)) = match self.kind {
            RadialKind::Base => return [e + phi[0], e + phi[1], e + phi[2]],
            RadialKind::Model { eps } => (eps, (0.0, 0.0, 0.0)),
            RadialKind::Glued { eps, .. } => (eps, self.cutoff(t)),
        };
        let psi = [0.5 * t - eps.ln(), 0.5, 0.0];
        let (g2, g2p, g2pp) = (1.0 - g1, -g1p, -g1pp);
        let e2 = eps * eps;
        [
            e + g1 * phi[0] + e2 * g2 * psi[0],
            e + g1p * phi[0] + g1 * phi[1] + e2 * (g2p * psi[0] + g2 * psi[1]),
            e + g1pp * phi[0]
                + 2.0 * g1p * phi[1]
                + g1 * phi[2]
                + e2 * (g2pp * psi[0] + 2.0 * g2p * psi[1] + g2 * psi[2]),
        ]
    }

    pub fn p(&self, t: f64) -> f64 {
        self.parts(t)[0]
    }

    pub fn p1(&self, t: f64) -> f64 {
        self.parts(t)[1]
    }

    pub fn p2(&self, t: f64) -> f64 {
        self.parts(t)[2]
    }

    /// `lim_{t→−∞} P'`.
    pub fn p1_floor(&self) -> f64 {
        match self.epsilon() {
            None => 0.0,
            Some(eps) => 0.5 * eps * eps,
        }
    }

    /// Volume density `μ = P'^{n−1} P''`.
    pub fn mu(&self, t: f64) -> f64 {
        let [_, p1, p2] = self.parts(t);
        p1.powi(self.n as i32 - 1) * p2
    }

    /// `∫_{−∞}^{t} μ = (P'(t)^n − P'(−∞)^n)/n`.
    pub fn volume_below(&self, t: f64) -> f64 {
        let n = self.n as i32;
        (self.p1(t).powi(n) - self.p1_floor().powi(n)) / self.n as f64
    }

    /// `Λ i∂∂̄ u` for radial `u` given its `t`-derivatives.
    pub fn laplacian(&self, t: f64, u1: f64, u2: f64) -> f64 {
        let [_, p1, p2] = self.parts(t);
        (self.n as f64 - 1.0) * u1 / p1 + u2 / p2
    }
}

/// Uniform grid in `t`, anchored so that `t = 0` (|z| = 1) is a node and every
/// dyadic annulus `r ≤ |z| ≤ 2r` with `r = 2^{−j}` starts and ends on nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    /// Nodes per dyadic step in `|z|` (a step of `log 4` in `t`).
    pub per_octave: usize,
    pub h: f64,
    pub first: i64,
    pub len: usize,
}

impl RadialGrid {
    /// Smallest anchored grid covering `[t_lo, t_hi]`.
    pub fn new(t_lo: f64, t_hi: f64, per_octave: usize) -> Result<Self> {
        if per_octave < 4 {
            return Err(Error::InsufficientGrid(format!(
                "{per_octave} nodes per octave"
            )));
        }
        if !(t_hi > t_lo) {
            return Err(Error::Domain(format!("empty grid range [{t_lo}, {t_hi}]")));
        }
        let h = 4f64.ln() / per_octave as f64;
        let first = (t_lo / h + 1e-9).floor() as i64;
        let last = (t_hi / h - 1e-9).ceil() as i64;
        Ok(Self {
            per_octave,
            h,
            first,
            len: (last - first + 1) as usize,
        })
    }

    pub fn t(&self, i: usize) -> f64 {
        (self.first + i as i64) as f64 * self.h
    }

    /// Midpoint between nodes `i` and `i + 1`.
    pub fn t_half(&self, i: usize) -> f64 {
        self.t(i) + 0.5 * self.h
    }

    pub fn radius(&self, i: usize) -> f64 {
        (0.5 * self.t(i)).exp()
    }

    pub fn last(&self) -> usize {
        self.len - 1
    }

    /// Node with `t` exactly `2 log r` for a dyadic `r`, if on the grid.
    pub fn node_at_t(&self, t: f64) -> Option<usize> {
        let k = (t / self.h).round() as i64;
        if ((k as f64) * self.h - t).abs() > 1e-9 * self.h.max(t.abs()) {
            return None;
        }
        let i = k - self.first;
        (i >= 0 && (i as usize) < self.len).then_some(i as usize)
    }

    /// Node index range covering `t ∈ [lo, hi]` (clipped to the grid).
    pub fn span(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
        let a = ((lo / self.h - 1e-9).ceil() as i64 - self.first).max(0) as usize;
        let b = ((hi / self.h + 1e-9).floor() as i64 - self.first).min(self.len as i64 - 1);
        if b < a as i64 {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        a..=b as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glued_branches_match_outer_and_inner() {
        let eps = 1e-2;
        let pot = RadialPotential::glued(2, 0.1, eps, CutoffProfile::smoothstep7()).unwrap();
        let base = RadialPotential::base(2, 0.1);
        let model = RadialPotential::model(2, eps).unwrap();
        let r = 0.1;
        let t_out = (2.0 * r * 2.0f64).powi(2).ln();
        let t_in = (r * r).ln();
        for d in [0.0, 0.3, 1.0] {
            assert!((pot.p1(t_out + d) - base.p1(t_out + d)).abs() < 1e-14);
            assert!((pot.p2(t_in - d) - model.p2(t_in - d)).abs() < 1e-14);
        }
    }

    #[test]
    fn laplacian_of_potential_is_n() {
        let pot = RadialPotential::glued(2, 0.1, 1e-2, CutoffProfile::smoothstep7()).unwrap();
        for t in [-12.0, -5.0, -4.2, -3.0, 0.5] {
            let v = pot.laplacian(t, pot.p1(t), pot.p2(t));
            assert!((v - 2.0).abs() < 1e-12, "{t}: {v}");
        }
    }

    #[test]
    fn grid_is_anchored_on_dyadic_radii() {
        let g = RadialGrid::new(-10.3, 4f64.ln(), 16).unwrap();
        assert!(g.t(0) <= -10.3);
        assert!((g.t(g.last()) - 4f64.ln()).abs() < 1e-12);
        for j in 0..3 {
            let t = 2.0 * (0.5f64.powi(j)).ln();
            assert!(g.node_at_t(t).is_some());
        }
        let s = g.span(-4f64.ln(), 0.0);
        assert_eq!(s.end() - s.start(), 16);
    }
}
