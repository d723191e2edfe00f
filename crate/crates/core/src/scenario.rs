//! The bundled test geometries. All radial scenarios live on the ball of
//! radius 2 in C² around the blown-up point, with base potential `|z|² + b|z|⁴`.

use std::fmt;
use std::str::FromStr;

use crate::bundle::radial::{BumpedLine, DirectSum, GaugeFlat, GluedMetric, HymLine, RadialMetric};
use crate::geometry::radial::{RadialGrid, RadialPotential};
use crate::geometry::{r_epsilon, CutoffProfile};
use crate::linear::torus::TorusProblem;
use crate::linear::RadialProblem;
use crate::{Error, Result};

/// `t = log|z|²` at the outer boundary `|z| = 2`.
pub fn outer_t() -> f64 {
    4f64.ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    FlatTorusLine,
    RadialBallLine,
    Rank2Diag,
    Rank2GaugeFlat,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [
        ScenarioId::FlatTorusLine,
        ScenarioId::RadialBallLine,
        ScenarioId::Rank2Diag,
        ScenarioId::Rank2GaugeFlat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::FlatTorusLine => "flat-torus-line",
            ScenarioId::RadialBallLine => "radial-ball-line",
            ScenarioId::Rank2Diag => "rank2-diag",
            ScenarioId::Rank2GaugeFlat => "rank2-gauge-flat",
        }
    }

    pub fn rank(self) -> usize {
        match self {
            ScenarioId::FlatTorusLine | ScenarioId::RadialBallLine => 1,
            ScenarioId::Rank2Diag | ScenarioId::Rank2GaugeFlat => 2,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown scenario `{s}`")))
    }
}

/// One Fourier mode `amp·cos(k₁x₁ + k₂x₂ + phase)` of the torus weight `w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierMode {
    pub k1: i32,
    pub k2: i32,
    pub amp: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: ScenarioId,
    pub n: usize,
    /// Quartic coefficient of the base potential.
    pub b: f64,
    pub c0: f64,
    /// Strength of the compactly supported bump (rank-2 scenarios).
    pub beta: f64,
    /// Support of the bump in `t`.
    pub bump: (f64, f64),
    pub per_octave: usize,
    /// How far below `|ζ| = 1` the radial grid reaches, in `t`.
    pub depth: f64,
    pub profile: CutoffProfile,
    pub torus_size: usize,
    pub modes: Vec<FourierMode>,
}

impl Scenario {
    pub fn new(id: ScenarioId) -> Self {
        let mut s = Self {
            id,
            n: 2,
            b: 0.1,
            c0: 1.0,
            beta: 0.0,
            bump: (2.0 * 0.5f64.ln(), 2.0 * 1.5f64.ln()),
            per_octave: 64,
            depth: 6.0,
            profile: CutoffProfile::smoothstep7(),
            torus_size: 32,
            modes: vec![
                FourierMode {
                    k1: 1,
                    k2: 0,
                    amp: 0.3,
                    phase: 0.2,
                },
                FourierMode {
                    k1: 1,
                    k2: 2,
                    amp: 0.1,
                    phase: -0.7,
                },
                FourierMode {
                    k1: 0,
                    k2: 1,
                    amp: 0.2,
                    phase: 1.1,
                },
            ],
        };
        match id {
            ScenarioId::FlatTorusLine => s.c0 = 0.0,
            ScenarioId::RadialBallLine => {}
            ScenarioId::Rank2Diag => s.beta = 0.3,
            ScenarioId::Rank2GaugeFlat => {
                s.c0 = 0.0;
                s.beta = 0.25;
            }
        }
        s
    }

    pub fn rank(&self) -> usize {
        self.id.rank()
    }

    fn line(&self) -> HymLine {
        HymLine {
            n: self.n,
            c0: self.c0,
            b: self.b,
        }
    }

    /// The bundle metric on the base ball, in normal form at the origin.
    pub fn base_metric(&self) -> Result<Box<dyn RadialMetric>> {
        let (lo, hi) = self.bump;
        Ok(match self.id {
            ScenarioId::FlatTorusLine => {
                return Err(Error::Domain(
                    "the torus scenario has no radial bundle metric".into(),
                ))
            }
            ScenarioId::RadialBallLine => Box::new(self.line()),
            ScenarioId::Rank2Diag => {
                let bumped = BumpedLine {
                    line: self.line(),
                    beta: self.beta,
                    lo,
                    hi,
                };
                Box::new(DirectSum {
                    blocks: vec![Box::new(self.line()), Box::new(bumped)],
                })
            }
            ScenarioId::Rank2GaugeFlat => Box::new(self.gauge_flat()?),
        })
    }

    /// The line bundles a block-diagonal scenario splits into.
    pub fn block_metrics(&self) -> Result<Vec<Box<dyn RadialMetric>>> {
        let (lo, hi) = self.bump;
        match self.id {
            ScenarioId::RadialBallLine => Ok(vec![Box::new(self.line())]),
            ScenarioId::Rank2Diag => Ok(vec![
                Box::new(self.line()),
                Box::new(BumpedLine {
                    line: self.line(),
                    beta: self.beta,
                    lo,
                    hi,
                }),
            ]),
            id => Err(Error::Domain(format!("{id} is not block-diagonal"))),
        }
    }

    pub fn gauge_flat(&self) -> Result<GaugeFlat> {
        match self.id {
            ScenarioId::Rank2GaugeFlat => Ok(GaugeFlat::new(
                self.beta,
                self.bump.0,
                self.bump.1,
                0.6,
                0.4,
            )),
            id => Err(Error::Domain(format!("{id} is not gauge-flat"))),
        }
    }

    pub fn glued_potential(&self, epsilon: f64) -> Result<RadialPotential> {
        RadialPotential::glued(self.n, self.b, epsilon, self.profile.clone())
    }

    pub fn glued_metric(&self, epsilon: f64) -> Result<GluedMetric<Box<dyn RadialMetric>>> {
        Ok(GluedMetric {
            inner: self.base_metric()?,
            potential: self.glued_potential(epsilon)?,
        })
    }

    /// The grid reaches `depth` below `|ζ| = 1` and ends at `|z| = 2`.
    pub fn grid(&self, epsilon: f64) -> Result<RadialGrid> {
        RadialGrid::new(2.0 * epsilon.ln() - self.depth, outer_t(), self.per_octave)
    }

    /// Rejects gluing scales whose neck would reach the bump.
    pub fn check_epsilon(&self, epsilon: f64) -> Result<()> {
        let r = r_epsilon(epsilon, self.n)?;
        let lowest = if self.beta != 0.0 {
            (0.5 * self.bump.0).exp()
        } else {
            1.0
        };
        if 2.0 * r >= lowest {
            return Err(Error::Domain(format!(
                "neck radius 2r_ε = {:.3e} reaches the non-flat data at |z| = {lowest:.3e}",
                2.0 * r
            )));
        }
        Ok(())
    }

    /// `c_ε = c₀ · vol(B₂) / vol(π⁻¹B₂)`, the constant forced by the flux of the
    /// unchanged boundary data.
    pub fn c_epsilon(&self, epsilon: f64) -> Result<f64> {
        let glued = self.glued_potential(epsilon)?;
        let base = RadialPotential::base(self.n, self.b);
        let t = outer_t();
        Ok(self.c0 * base.volume_below(t) / glued.volume_below(t))
    }

    pub fn radial_problem(&self, epsilon: f64) -> Result<RadialProblem> {
        self.check_epsilon(epsilon)?;
        let metric = self.glued_metric(epsilon)?;
        RadialProblem::new(
            self.glued_potential(epsilon)?,
            &metric,
            self.grid(epsilon)?,
            self.c0,
        )
    }

    /// The unglued problem on the punctured ball, reaching down to `|z| = r_min`.
    pub fn base_problem(&self, r_min: f64) -> Result<RadialProblem> {
        let grid = RadialGrid::new(2.0 * r_min.ln(), outer_t(), self.per_octave)?;
        RadialProblem::new(
            RadialPotential::base(self.n, self.b),
            &self.base_metric()?,
            grid,
            self.c0,
        )
    }

    pub fn torus_problem(&self) -> Result<TorusProblem> {
        if self.id != ScenarioId::FlatTorusLine {
            return Err(Error::Domain(format!(
                "{} is not a torus scenario",
                self.id
            )));
        }
        TorusProblem::new(self.torus_size, &self.modes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for id in ScenarioId::ALL {
            assert_eq!(id.name().parse::<ScenarioId>().unwrap(), id);
        }
        assert!("rank3".parse::<ScenarioId>().is_err());
    }

    #[test]
    fn c_epsilon_is_the_volume_ratio() {
        let s = Scenario::new(ScenarioId::RadialBallLine);
        let eps: f64 = 1e-2;
        let base = RadialPotential::base(2, 0.1).volume_below(outer_t());
        let expected = base / (base - 0.25 * eps.powi(4) / 2.0);
        assert!((s.c_epsilon(eps).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn wide_necks_are_rejected() {
        let s = Scenario::new(ScenarioId::Rank2Diag);
        assert!(s.check_epsilon(1e-2).is_ok());
        assert!(s.check_epsilon(0.2).is_err());
    }
}
