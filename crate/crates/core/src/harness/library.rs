//! Named example systems and the constants known for them in closed form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rds::{DrivingMeasure, MapDescriptor, Matrix, ParamFamily, ParamSampler};
use crate::spaces::StateSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LibrarySystem {
    /// `x/2` and `x/2 + 1/2` with equal weights on `[0, 1]`.
    Halving,
    /// `x / (1 + alpha x)` with `alpha ~ U[1, 2]`.
    MoebiusUniform,
    /// `alpha in {1, 2}` with equal weights.
    MoebiusPair,
    /// `x - x^alpha` with `alpha ~ U[5/4, 3/2]`.
    PolynomialDecay,
    /// The identity on `[0, 1]`; never contracts.
    Identity,
    /// `diag(4, 1/4)` acting on the circle.
    HyperbolicCircle,
}

impl LibrarySystem {
    pub const ALL: [LibrarySystem; 6] = [
        LibrarySystem::Halving,
        LibrarySystem::MoebiusUniform,
        LibrarySystem::MoebiusPair,
        LibrarySystem::PolynomialDecay,
        LibrarySystem::Identity,
        LibrarySystem::HyperbolicCircle,
    ];

    pub fn build(&self) -> Result<DrivingMeasure> {
        let unit = StateSpace::unit_interval();
        match self {
            LibrarySystem::Halving => DrivingMeasure::uniform(
                unit,
                vec![MapDescriptor::affine(0.5, 0.0)?, MapDescriptor::affine(0.5, 0.5)?],
            ),
            LibrarySystem::MoebiusUniform => {
                DrivingMeasure::parametric(unit, ParamFamily::MoebiusDecay, ParamSampler::uniform(1.0, 2.0)?)
            }
            LibrarySystem::MoebiusPair => {
                DrivingMeasure::uniform(unit, vec![MapDescriptor::moebius(1.0)?, MapDescriptor::moebius(2.0)?])
            }
            LibrarySystem::PolynomialDecay => {
                DrivingMeasure::parametric(unit, ParamFamily::PolynomialDecay, ParamSampler::uniform(1.25, 1.5)?)
            }
            LibrarySystem::Identity => DrivingMeasure::dirac(unit, MapDescriptor::affine(1.0, 0.0)?),
            LibrarySystem::HyperbolicCircle => {
                DrivingMeasure::dirac(StateSpace::Circle, MapDescriptor::projective(Matrix::diag2(4.0)?))
            }
        }
    }

    /// `|G|_inf`, the sup-distance diameter of the support.
    pub fn gee_inf(&self) -> Option<f64> {
        match self {
            LibrarySystem::Halving => Some(0.5),
            // sup_x |x/(1+x) - x/(1+2x)| <= 1/2 for any alpha range in [1, inf)
            LibrarySystem::MoebiusUniform | LibrarySystem::MoebiusPair => Some(0.5),
            // max_x x^{5/4} - x^{3/2}, attained at x = (5/6)^4
            LibrarySystem::PolynomialDecay => Some((5.0f64 / 6.0).powi(5) / 6.0),
            LibrarySystem::Identity => Some(0.0),
            LibrarySystem::HyperbolicCircle => None,
        }
    }

    /// `lambda_nu`, when finite and known.
    pub fn lambda_nu(&self) -> Option<f64> {
        match self {
            LibrarySystem::Halving => Some(2.0),
            // X_n <= 4 / (n + 3)^2 from 1/sqrt(h(x)) >= 1/sqrt(x) + 1/2
            LibrarySystem::PolynomialDecay => Some(1.0 + 4.0 * (PI * PI / 6.0 - 49.0 / 36.0)),
            _ => None,
        }
    }

    /// An upper bound on `lambda_n`.
    pub fn lambda_n_cap(&self, n: usize) -> Option<f64> {
        match self {
            LibrarySystem::Halving => Some(2.0 - 0.5f64.powi(n.min(1100) as i32)),
            LibrarySystem::MoebiusUniform | LibrarySystem::MoebiusPair => Some(1.0 + ((n + 1) as f64).ln()),
            LibrarySystem::PolynomialDecay => self.lambda_nu(),
            LibrarySystem::Identity => Some((n + 1) as f64),
            LibrarySystem::HyperbolicCircle => None,
        }
    }

    /// An upper bound on `u_k = sup E d(X_k^x, X_k^y)`.
    pub fn u_cap(&self, k: usize) -> Option<f64> {
        match self {
            LibrarySystem::Halving => Some(0.5f64.powi(k.min(1100) as i32)),
            LibrarySystem::MoebiusUniform | LibrarySystem::MoebiusPair => Some(1.0 / (k + 1) as f64),
            LibrarySystem::Identity => Some(1.0),
            _ => None,
        }
    }

    /// The stationary law is the uniform law on the state interval.
    pub fn stationary_is_uniform(&self) -> bool {
        matches!(self, LibrarySystem::Halving)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{lambda_n, PairSource};
    use crate::rds::gee_diameter_sup;

    #[test]
    fn every_system_builds() {
        for s in LibrarySystem::ALL {
            s.build().unwrap();
        }
    }

    #[test]
    fn diameters_dominate_grid_estimates() {
        for s in LibrarySystem::ALL {
            let nu = s.build().unwrap();
            if let Some(g) = s.gee_inf() {
                let est = gee_diameter_sup(&nu, nu.space(), 257).unwrap();
                assert!(est <= g + 1e-12, "{s:?}: {est} > {g}");
            }
        }
        // The extreme parameters 5/4 and 3/2 give the widest gap.
        let gap = (0..=100_000)
            .map(|i| {
                let x = i as f64 / 100_000.0;
                x.powf(1.25) - x.powf(1.5)
            })
            .fold(0.0, f64::max);
        assert!((gap - LibrarySystem::PolynomialDecay.gee_inf().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn polynomial_orbit_bound() {
        // The worst start 4/9 under the slowest map stays below 4/(n+3)^2.
        let mut x: f64 = 4.0 / 9.0;
        for n in 1..10_000 {
            x -= x.powf(1.5);
            assert!(x <= 4.0 / ((n + 3) as f64).powi(2));
        }
    }

    #[test]
    fn lambda_caps_hold_on_grid() {
        for s in [LibrarySystem::Halving, LibrarySystem::MoebiusPair, LibrarySystem::PolynomialDecay] {
            let nu = s.build().unwrap();
            let est = lambda_n(&nu, PairSource::WholeSpace { resolution: 9 }, 20, 400, 1).unwrap();
            let cap = s.lambda_n_cap(20).unwrap();
            assert!(est.value <= cap + 4.0 * est.stderr, "{s:?}: {} > {cap}", est.value);
        }
    }
}
