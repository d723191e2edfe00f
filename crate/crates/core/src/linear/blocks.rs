//! Block tridiagonal systems with a low-rank correction, solved by block
//! Thomas elimination plus Woodbury.

use nalgebra::DVector;

use crate::linalg::{CMat, C64};
use crate::{Error, Result};

pub type BlockVec = Vec<DVector<C64>>;

/// Row `i` reads `lower[i] x_{i−1} + diag[i] x_i + upper[i] x_{i+1}`; `lower[0]`
/// and the last `upper` are ignored.
#[derive(Clone, Debug)]
pub struct BlockTridiag {
    pub lower: Vec<CMat>,
    pub diag: Vec<CMat>,
    pub upper: Vec<CMat>,
}

impl BlockTridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn block(&self) -> usize {
        self.diag[0].nrows()
    }

    pub fn apply(&self, x: &[DVector<C64>]) -> BlockVec {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = &self.diag[i] * &x[i];
                if i > 0 {
                    y += &self.lower[i] * &x[i - 1];
                }
                if i + 1 < n {
                    y += &self.upper[i] * &x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.len();
        let b = self.block();
        let zero = CMat::zeros(b, b);
        let lower = (0..n)
            .map(|i| {
                if i == 0 {
                    zero.clone()
                } else {
                    self.upper[i - 1].adjoint()
                }
            })
            .collect();
        let upper = (0..n)
            .map(|i| {
                if i + 1 < n {
                    self.lower[i + 1].adjoint()
                } else {
                    zero.clone()
                }
            })
            .collect();
        let diag = self.diag.iter().map(|d| d.adjoint()).collect();
        Self { lower, diag, upper }
    }

    pub fn factor(&self) -> Result<ThomasFactor> {
        let n = self.len();
        let mut pivots_inv = Vec::with_capacity(n);
        let mut sweep: Vec<CMat> = Vec::with_capacity(n);
        for i in 0..n {
            let mut d = self.diag[i].clone();
            if i > 0 {
                d -= &self.lower[i] * &sweep[i - 1];
            }
            let inv = d.try_inverse().ok_or_else(|| {
                Error::Singular(format!("block pivot {i} of {n} in the tridiagonal sweep"))
            })?;
            sweep.push(&inv * &self.upper[i]);
            pivots_inv.push(inv);
        }
        Ok(ThomasFactor {
            pivots_inv,
            sweep,
            lower: self.lower.clone(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct ThomasFactor {
    pivots_inv: Vec<CMat>,
    sweep: Vec<CMat>,
    lower: Vec<CMat>,
}

impl ThomasFactor {
    pub fn solve(&self, r: &[DVector<C64>]) -> BlockVec {
        let n = self.pivots_inv.len();
        let mut d: BlockVec = Vec::with_capacity(n);
        for i in 0..n {
            let mut rhs = r[i].clone();
            if i > 0 {
                rhs -= &self.lower[i] * &d[i - 1];
            }
            d.push(&self.pivots_inv[i] * rhs);
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = d[i + 1].clone();
            d[i] -= &self.sweep[i] * next;
        }
        d
    }
}

pub fn dot(u: &[DVector<C64>], v: &[DVector<C64>]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.dotc(b)).sum()
}

/// Solver for `(T − Σ_k u_k v_kᴴ) x = r`.
#[derive(Clone, Debug)]
pub struct LowRankSolver {
    factor: ThomasFactor,
    solved_u: Vec<BlockVec>,
    v: Vec<BlockVec>,
    capacitance_inv: CMat,
}

impl LowRankSolver {
    pub fn new(t: &BlockTridiag, u: Vec<BlockVec>, v: Vec<BlockVec>) -> Result<Self> {
        let factor = t.factor()?;
        let solved_u: Vec<BlockVec> = u.iter().map(|x| factor.solve(x)).collect();
        let k = u.len();
        let mut cap = CMat::identity(k, k);
        for a in 0..k {
            for b in 0..k {
                cap[(a, b)] -= dot(&v[a], &solved_u[b]);
            }
        }
        let capacitance_inv = cap
            .try_inverse()
            .ok_or_else(|| Error::Singular("Woodbury capacitance matrix".into()))?;
        Ok(Self {
            factor,
            solved_u,
            v,
            capacitance_inv,
        })
    }

    pub fn solve(&self, r: &[DVector<C64>]) -> BlockVec {
        let mut x = self.factor.solve(r);
        if self.v.is_empty() {
            return x;
        }
        let w = DVector::from_iterator(self.v.len(), self.v.iter().map(|v| dot(v, &x)));
        let y = &self.capacitance_inv * w;
        for (k, yk) in y.iter().enumerate() {
            for (xi, ui) in x.iter_mut().zip(&self.solved_u[k]) {
                *xi += ui * *yk;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, b: usize, seed: u64) -> BlockTridiag {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mat = |scale: f64| {
            CMat::from_fn(b, b, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
            })
        };
        let lower = (0..n).map(|_| mat(1.0)).collect();
        let upper = (0..n).map(|_| mat(1.0)).collect();
        let diag = (0..n)
            .map(|_| mat(0.5) + CMat::identity(b, b) * C64::new(6.0, 0.0))
            .collect();
        BlockTridiag { lower, diag, upper }
    }

    fn random_vec(n: usize, b: usize, seed: u64) -> BlockVec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                DVector::from_fn(b, |_, _| {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
            })
            .collect()
    }

    fn err(a: &[DVector<C64>], b: &[DVector<C64>]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    #[test]
    fn thomas_round_trip() {
        let t = random_system(30, 4, 1);
        let x = random_vec(30, 4, 2);
        let r = t.apply(&x);
        assert!(err(&t.factor().unwrap().solve(&r), &x) < 1e-12);
    }

    #[test]
    fn adjoint_matches_inner_products() {
        let t = random_system(12, 2, 3);
        let x = random_vec(12, 2, 4);
        let y = random_vec(12, 2, 5);
        let lhs = dot(&y, &t.apply(&x));
        let rhs = dot(&t.adjoint().apply(&y), &x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn woodbury_round_trip() {
        let t = random_system(25, 4, 6);
        let u = vec![random_vec(25, 4, 7), random_vec(25, 4, 8)];
        let v = vec![random_vec(25, 4, 9), random_vec(25, 4, 10)];
        let x = random_vec(25, 4, 11);
        let mut r = t.apply(&x);
        for (uk, vk) in u.iter().zip(&v) {
            let s = dot(vk, &x);
            for (ri, ui) in r.iter_mut().zip(uk) {
                *ri -= ui * s;
            }
        }
        let solver = LowRankSolver::new(&t, u, v).unwrap();
        assert!(err(&solver.solve(&r), &x) < 1e-11);
    }
}
