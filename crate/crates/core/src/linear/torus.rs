//! The flat torus `T⁴ = C²/(2πZ)⁴` with a line bundle metric `K = e^{−w}`,
//! where `w(x₁, x₂)` depends on the real parts of the two coordinates.
//!
//! For such data `∂∂̄ = ¼(∂²_{x₁} + ∂²_{x₂})`, so with the five-point Laplacian
//! `Δ_h` the discrete operator is
//! `Φ(a) = ¼Δ_h w + ½Δ_h log(1 + a)` and its derivative at 0 is `½Δ_h`.

use crate::scenario::FourierMode;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TorusProblem {
    pub size: usize,
    pub h: f64,
    pub w: Vec<f64>,
    /// Pinning node, the one farthest from the origin.
    pub q: usize,
}

const CG_TOL: f64 = 1e-14;

impl TorusProblem {
    pub fn new(size: usize, modes: &[FourierMode]) -> Result<Self> {
        if size < 8 {
            return Err(Error::InsufficientGrid(format!("torus size {size}")));
        }
        let h = std::f64::consts::TAU / size as f64;
        let mut w = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..size {
                let (x1, x2) = (i as f64 * h, j as f64 * h);
                w[i * size + j] = modes
                    .iter()
                    .map(|m| m.amp * (m.k1 as f64 * x1 + m.k2 as f64 * x2 + m.phase).cos())
                    .sum();
            }
        }
        let half = size / 2;
        Ok(Self {
            size,
            h,
            w,
            q: half * size + half,
        })
    }

    pub fn len(&self) -> usize {
        self.size * self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Five-point `Δ_h` with periodic wrap.
    pub fn stencil(&self, u: &[f64]) -> Vec<f64> {
        let n = self.size;
        let inv = 1.0 / (self.h * self.h);
        (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let up = ((i + 1) % n) * n + j;
                let down = ((i + n - 1) % n) * n + j;
                let right = i * n + (j + 1) % n;
                let left = i * n + (j + n - 1) % n;
                (u[up] + u[down] + u[left] + u[right] - 4.0 * u[idx]) * inv
            })
            .collect()
    }

    /// `iΛF` of `K = e^{−w}`.
    pub fn curvature(&self) -> Vec<f64> {
        self.stencil(&self.w)
            .into_iter()
            .map(|v| 0.25 * v)
            .collect()
    }

    pub fn phi(&self, a: &[f64]) -> Result<Vec<f64>> {
        if let Some(i) = a.iter().position(|&x| !(1.0 + x > 0.0)) {
            return Err(Error::Positivity {
                min_eig: 1.0 + a[i],
                location: format!("torus node {i}"),
            });
        }
        let log: Vec<f64> = a.iter().map(|x| x.ln_1p()).collect();
        Ok(self
            .curvature()
            .iter()
            .zip(self.stencil(&log))
            .map(|(f, l)| f + 0.5 * l)
            .collect())
    }

    pub fn laplacian(&self, a: &[f64]) -> Vec<f64> {
        self.stencil(a).into_iter().map(|v| 0.5 * v).collect()
    }

    /// `½Δ_h x − x_q`.
    pub fn apply_modified(&self, x: &[f64]) -> Vec<f64> {
        let xq = x[self.q];
        self.laplacian(x).into_iter().map(|v| v - xq).collect()
    }

    /// Inverts `½Δ_h x − x_q = r`. Averaging gives `x_q = −mean(r)`; the
    /// mean-free part is found by conjugate gradients.
    pub fn solve_modified(&self, r: &[f64]) -> Result<Vec<f64>> {
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        let rhs: Vec<f64> = r.iter().map(|v| v - mean).collect();
        let y = self.cg_mean_free(&rhs)?;
        let shift = -mean - y[self.q];
        Ok(y.into_iter().map(|v| v + shift).collect())
    }

    /// Solves `−½Δ_h y = −rhs` (positive semidefinite) on mean-free fields.
    fn cg_mean_free(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let op = |v: &[f64]| -> Vec<f64> { self.laplacian(v).into_iter().map(|x| -x).collect() };
        let b: Vec<f64> = rhs.iter().map(|v| -v).collect();
        let norm_b = dot(&b, &b).sqrt();
        let mut x = vec![0.0; b.len()];
        if norm_b == 0.0 {
            return Ok(x);
        }
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let max_iter = 20 * b.len();
        for _ in 0..max_iter {
            let ap = op(&p);
            let alpha = rr / dot(&p, &ap);
            for ((xi, pi), (ri, api)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ap)) {
                *xi += alpha * pi;
                *ri -= alpha * api;
            }
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= CG_TOL * norm_b {
                let mean = x.iter().sum::<f64>() / x.len() as f64;
                return Ok(x.into_iter().map(|v| v - mean).collect());
            }
            let beta = rr_new / rr;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
            rr = rr_new;
        }
        Err(Error::NonConvergence {
            iterations: max_iter,
            last: rr.sqrt() / norm_b,
        })
    }

    /// `a = e^{(w_q − w)/2} − 1`, the exact solution of `Φ(a) = a_q` (with
    /// `a_q = 0`).
    pub fn exact_fixed_point(&self) -> Vec<f64> {
        let wq = self.w[self.q];
        self.w.iter().map(|w| (0.5 * (wq - w)).exp_m1()).collect()
    }

    /// Sup of the value plus the sups of first and second differences.
    pub fn c2_norm(&self, a: &[f64]) -> f64 {
        let n = self.size;
        let mut sup = [0.0f64; 3];
        for idx in 0..n * n {
            let (i, j) = (idx / n, idx % n);
            let up = ((i + 1) % n) * n + j;
            let down = ((i + n - 1) % n) * n + j;
            let right = i * n + (j + 1) % n;
            let left = i * n + (j + n - 1) % n;
            sup[0] = sup[0].max(a[idx].abs());
            sup[1] = sup[1]
                .max(((a[up] - a[down]).abs().max((a[right] - a[left]).abs())) / (2.0 * self.h));
            let d2 = (a[up] - 2.0 * a[idx] + a[down])
                .abs()
                .max((a[right] - 2.0 * a[idx] + a[left]).abs());
            sup[2] = sup[2].max(d2 / (self.h * self.h));
        }
        sup.iter().sum()
    }

    pub fn sup_norm(&self, a: &[f64]) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Scenario, ScenarioId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem() -> TorusProblem {
        Scenario::new(ScenarioId::FlatTorusLine)
            .torus_problem()
            .unwrap()
    }

    #[test]
    fn stencil_is_exact_on_discrete_modes() {
        let p = problem();
        let n = p.size;
        let u: Vec<f64> = (0..n * n)
            .map(|idx| ((idx / n) as f64 * p.h).cos())
            .collect();
        let lam = (2.0 * (p.h).cos() - 2.0) / (p.h * p.h);
        let lu = p.stencil(&u);
        assert!(lu.iter().zip(&u).all(|(a, b)| (a - lam * b).abs() < 1e-10));
    }

    #[test]
    fn laplacian_is_self_adjoint_and_kills_constants() {
        let p = problem();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let s: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = dot(&p.laplacian(&s), &t);
            let rhs = dot(&s, &p.laplacian(&t));
            assert!((lhs - rhs).abs() <= 1e-8 * dot(&s, &s).sqrt() * dot(&t, &t).sqrt());
        }
        assert!(p.sup_norm(&p.laplacian(&vec![1.0; p.len()])) < 1e-12);
        assert!(p
            .apply_modified(&vec![1.0; p.len()])
            .iter()
            .all(|v| (v + 1.0).abs() < 1e-12));
    }

    #[test]
    fn modified_solve_round_trips() {
        let p = problem();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = p.solve_modified(&p.apply_modified(&x)).unwrap();
        assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9));
        let id = p.solve_modified(&vec![-1.0; p.len()]).unwrap();
        assert!(id.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn exact_fixed_point_flattens() {
        let p = problem();
        let a = p.exact_fixed_point();
        assert_eq!(a[p.q], 0.0);
        assert!(p.sup_norm(&p.phi(&a).unwrap()) < 1e-12);
    }

    #[test]
    fn phi_rejects_degenerate_gauge() {
        let p = problem();
        assert!(matches!(
            p.phi(&vec![-1.0; p.len()]),
            Err(Error::Positivity { .. })
        ));
    }
}
