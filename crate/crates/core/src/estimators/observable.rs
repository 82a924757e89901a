use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::spaces::{Point, StateSpace};

/// Built-in observables `h: M -> R` with analytic Lipschitz constants and
/// sup norms, as consumed by the bound formulas.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// `h(x) = x` on an interval.
    Coordinate,
    /// `h(x) = x - c` on an interval.
    Shifted(f64),
    Zero,
    Constant(f64),
    /// `h(x) = cos(2 pi k x)` on an interval or the circle.
    Cosine(u32),
    /// `h(x) = d(x, p)`.
    DistanceTo(Point),
}

impl Observable {
    #[inline]
    pub fn eval(&self, space: &StateSpace, x: &Point) -> f64 {
        match self {
            Observable::Coordinate => x.first(),
            Observable::Shifted(c) => x.first() - c,
            Observable::Zero => 0.0,
            Observable::Constant(c) => *c,
            Observable::Cosine(k) => (TAU * *k as f64 * x.first()).cos(),
            Observable::DistanceTo(p) => space.dist_unchecked(x, p),
        }
    }

    /// Evaluation on a scalar coordinate (interval or circle).
    #[inline]
    pub fn eval_scalar(&self, space: &StateSpace, x: f64) -> f64 {
        match self {
            Observable::Coordinate => x,
            Observable::Shifted(c) => x - c,
            Observable::Zero => 0.0,
            Observable::Constant(c) => *c,
            Observable::Cosine(k) => (TAU * *k as f64 * x).cos(),
            Observable::DistanceTo(p) => match (space, p) {
                (StateSpace::Circle, Point::Circle(c)) => crate::spaces::circle_distance(x, *c),
                _ => (x - p.first()).abs(),
            },
        }
    }

    /// Checks the observable is Lipschitz on `space`.
    pub fn check(&self, space: &StateSpace) -> Result<()> {
        match (self, space) {
            (Observable::Coordinate | Observable::Shifted(_), StateSpace::Interval { .. }) => {
                Ok(())
            }
            (Observable::Coordinate | Observable::Shifted(_), _) => Err(Error::Unsupported(
                "coordinate observables are only continuous on an interval".into(),
            )),
            (Observable::Cosine(_), StateSpace::Projective { .. }) => Err(Error::Unsupported(
                "cosine observables need a one-dimensional space".into(),
            )),
            (Observable::DistanceTo(p), s) => s.check(p),
            _ => Ok(()),
        }
    }

    /// Lipschitz constant `L(h)` with respect to the metric of `space`.
    pub fn lipschitz(&self, space: &StateSpace) -> Result<f64> {
        self.check(space)?;
        Ok(match self {
            Observable::Coordinate | Observable::Shifted(_) | Observable::DistanceTo(_) => 1.0,
            Observable::Zero | Observable::Constant(_) => 0.0,
            Observable::Cosine(k) => TAU * *k as f64,
        })
    }

    /// `sup |h|` over `space`.
    pub fn sup_norm(&self, space: &StateSpace) -> Result<f64> {
        self.check(space)?;
        Ok(match (self, space) {
            (Observable::Coordinate, StateSpace::Interval { a, b }) => a.abs().max(b.abs()),
            (Observable::Shifted(c), StateSpace::Interval { a, b }) => {
                (a - c).abs().max((b - c).abs())
            }
            (Observable::Zero, _) => 0.0,
            (Observable::Constant(c), _) => c.abs(),
            (Observable::Cosine(_), _) => 1.0,
            (Observable::DistanceTo(_), s) => s.diameter(),
            _ => unreachable!("rejected by check"),
        })
    }
}
