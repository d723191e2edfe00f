//! Radial bundle metrics `K(t)`, `t = log|z|²`, on the trivial bundle.
//!
//! For radial `K` the Chern connection is `𝒜_j = M z̄_j/ρ` with `M = K⁻¹K'`, and
//! `iΛF = −(P'^{n−1} M)'/μ` for a radial Kähler potential `P`.

use crate::geometry::radial::RadialPotential;
use crate::linalg::{c, scalar, CMat, C64};

pub trait RadialMetric: Send + Sync {
    fn rank(&self) -> usize;
    /// `K(t)`.
    fn k(&self, t: f64) -> CMat;
    /// `dK/dt`.
    fn k_t(&self, t: f64) -> CMat;

    /// `M = K⁻¹ K'`.
    fn connection(&self, t: f64) -> CMat {
        self.k(t).try_inverse().expect("positive metric") * self.k_t(t)
    }
}

/// `K = exp(−(c₀/n)(e^t + b e^{2t}))`, the metric with `iΛF = c₀` for the base
/// potential `|z|² + b|z|⁴`. It equals `1 − (c₀/n)|z|² + …`, so it is already in
/// normal form at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HymLine {
    pub n: usize,
    pub c0: f64,
    pub b: f64,
}

impl HymLine {
    fn exponent(&self, t: f64) -> (f64, f64) {
        let e = t.exp();
        let s = self.c0 / self.n as f64;
        (-s * (e + self.b * e * e), -s * (e + 2.0 * self.b * e * e))
    }
}

impl RadialMetric for HymLine {
    fn rank(&self) -> usize {
        1
    }

    fn k(&self, t: f64) -> CMat {
        CMat::from_element(1, 1, c(self.exponent(t).0.exp()))
    }

    fn k_t(&self, t: f64) -> CMat {
        let (w, w1) = self.exponent(t);
        CMat::from_element(1, 1, c(w1 * w.exp()))
    }
}

/// Smooth compactly supported bump `(1 − s²)⁴` with `s` mapping `[lo, hi]` to
/// `[−1, 1]`; returns value and `t`-derivative.
pub fn bump(t: f64, lo: f64, hi: f64) -> (f64, f64) {
    let s = (2.0 * t - lo - hi) / (hi - lo);
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    (q.powi(4), 4.0 * q.powi(3) * (-2.0 * s) * 2.0 / (hi - lo))
}

/// A line metric multiplied by `exp(−β·bump)`. The bump has compact support,
/// so the degree is unchanged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpedLine {
    pub line: HymLine,
    pub beta: f64,
    pub lo: f64,
    pub hi: f64,
}

impl RadialMetric for BumpedLine {
    fn rank(&self) -> usize {
        1
    }

    fn k(&self, t: f64) -> CMat {
        let (b, _) = bump(t, self.lo, self.hi);
        self.line.k(t) * c((-self.beta * b).exp())
    }

    fn k_t(&self, t: f64) -> CMat {
        let (b, b1) = bump(t, self.lo, self.hi);
        let w = (-self.beta * b).exp();
        self.line.k_t(t) * c(w) + self.line.k(t) * c(-self.beta * b1 * w)
    }
}

/// Block-diagonal sum of radial metrics.
pub struct DirectSum {
    pub blocks: Vec<Box<dyn RadialMetric>>,
}

impl DirectSum {
    fn assemble(&self, f: impl Fn(&dyn RadialMetric) -> CMat) -> CMat {
        let m = self.rank();
        let mut out = CMat::zeros(m, m);
        let mut at = 0;
        for b in &self.blocks {
            let v = f(b.as_ref());
            let r = v.nrows();
            out.view_mut((at, at), (r, r)).copy_from(&v);
            at += r;
        }
        out
    }
}

impl RadialMetric for DirectSum {
    fn rank(&self) -> usize {
        self.blocks.iter().map(|b| b.rank()).sum()
    }

    fn k(&self, t: f64) -> CMat {
        self.assemble(|b| b.k(t))
    }

    fn k_t(&self, t: f64) -> CMat {
        self.assemble(|b| b.k_t(t))
    }
}

/// `K = U diag(e^{2σ}, e^{−2σ}) U†` with `σ = β·bump` and a fixed unitary `U`:
/// a rank-2 metric whose entries are coupled but which is gauge-equivalent to
/// the flat metric via `f = K^{1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeFlat {
    pub unitary: CMat,
    pub beta: f64,
    pub lo: f64,
    pub hi: f64,
}

impl GaugeFlat {
    pub fn new(beta: f64, lo: f64, hi: f64, angle: f64, phase: f64) -> Self {
        let e = C64::from_polar(1.0, phase);
        let (s, co) = angle.sin_cos();
        let unitary = CMat::from_row_slice(2, 2, &[c(co), -e * s, e.conj() * s, c(co)]);
        Self {
            unitary,
            beta,
            lo,
            hi,
        }
    }

    pub fn sigma(&self, t: f64) -> (f64, f64) {
        let (b, b1) = bump(t, self.lo, self.hi);
        (self.beta * b, self.beta * b1)
    }

    fn rotate(&self, d: [C64; 2]) -> CMat {
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_column_slice(&d));
        &self.unitary * diag * self.unitary.adjoint()
    }

    /// `K^{1/2} − Id`, the increment that flattens this metric.
    pub fn flattening_increment(&self, t: f64) -> CMat {
        let (s, _) = self.sigma(t);
        self.rotate([c(s.exp() - 1.0), c((-s).exp() - 1.0)])
    }
}

impl RadialMetric for GaugeFlat {
    fn rank(&self) -> usize {
        2
    }

    fn k(&self, t: f64) -> CMat {
        let (s, _) = self.sigma(t);
        self.rotate([c((2.0 * s).exp()), c((-2.0 * s).exp())])
    }

    fn k_t(&self, t: f64) -> CMat {
        let (s, s1) = self.sigma(t);
        self.rotate([
            c(2.0 * s1 * (2.0 * s).exp()),
            c(-2.0 * s1 * (-2.0 * s).exp()),
        ])
    }
}

/// `γ₁K + γ₂·Id` with the cutoff of a glued potential.
pub struct GluedMetric<M> {
    pub inner: M,
    pub potential: RadialPotential,
}

impl<M: RadialMetric> RadialMetric for GluedMetric<M> {
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn k(&self, t: f64) -> CMat {
        let (g1, _, _) = self.potential.cutoff(t);
        self.inner.k(t) * c(g1) + scalar(self.rank(), 1.0 - g1)
    }

    fn k_t(&self, t: f64) -> CMat {
        let (g1, g1p, _) = self.potential.cutoff(t);
        let m = self.rank();
        (self.inner.k(t) - scalar(m, 1.0)) * c(g1p) + self.inner.k_t(t) * c(g1)
    }
}

impl RadialMetric for Box<dyn RadialMetric> {
    fn rank(&self) -> usize {
        self.as_ref().rank()
    }

    fn k(&self, t: f64) -> CMat {
        self.as_ref().k(t)
    }

    fn k_t(&self, t: f64) -> CMat {
        self.as_ref().k_t(t)
    }
}

/// Continuum `iΛF` of a radial metric, with `M'` by central differences.
pub fn radial_curvature(pot: &RadialPotential, h: &dyn RadialMetric, t: f64) -> CMat {
    let n = pot.n as i32;
    let step = 1e-4;
    let flux = |s: f64| h.connection(s) * c(pot.p1(s).powi(n - 1));
    let d = (flux(t + step) - flux(t - step)) * c(1.0 / (2.0 * step));
    d * c(-1.0 / pot.mu(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn derivatives_match_finite_differences() {
        let line = HymLine {
            n: 2,
            c0: 1.0,
            b: 0.1,
        };
        let metrics: Vec<Box<dyn RadialMetric>> = vec![
            Box::new(line),
            Box::new(BumpedLine {
                line,
                beta: 0.4,
                lo: -1.0,
                hi: 1.0,
            }),
            Box::new(GaugeFlat::new(0.3, -1.0, 1.0, 0.6, 0.4)),
            Box::new(GluedMetric {
                inner: line,
                potential: RadialPotential::glued(
                    2,
                    0.1,
                    1e-2,
                    crate::geometry::CutoffProfile::smoothstep7(),
                )
                .unwrap(),
            }),
        ];
        for h in &metrics {
            for t in [-4.3, -3.9, -0.5, 0.2] {
                let e = 1e-6;
                let fd = (h.k(t + e) - h.k(t - e)) * c(0.5 / e);
                assert!(max_abs(&(fd - h.k_t(t))) < 1e-8);
            }
        }
    }

    #[test]
    fn hym_line_has_constant_curvature() {
        let line = HymLine {
            n: 2,
            c0: 1.3,
            b: 0.2,
        };
        let pot = RadialPotential::base(2, 0.2);
        for t in [-6.0, -2.0, 0.0, 1.0] {
            let v = radial_curvature(&pot, &line, t);
            assert!((v[(0, 0)].re - 1.3).abs() < 1e-6, "{t}: {}", v[(0, 0)]);
        }
    }

    #[test]
    fn gauge_flat_increment_flattens() {
        let g = GaugeFlat::new(0.3, -1.0, 1.0, 0.6, 0.4);
        let t = 0.1;
        let f = g.flattening_increment(t) + CMat::identity(2, 2);
        let fi = f.clone().try_inverse().unwrap();
        let flat = g.k(t) * &fi * &fi;
        assert!(max_abs(&(flat - CMat::identity(2, 2))) < 1e-12);
    }
}
