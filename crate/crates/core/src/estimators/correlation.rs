use serde::Serialize;

use crate::error::{usage, Error, Result};
use crate::spaces::{circle_distance, Point, StateSpace};
use crate::stats::CompensatedSum;

/// Kernel applied to `1 - d(x_i, x_j) / eps`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `theta(s) = 1` iff `s >= 0`; pairs at distance exactly `eps` count.
    Heaviside,
    /// The piecewise-linear `phi_0`: 0 below -1/2, `1/2 + y` on [-1/2, 1/2], 1 above.
    Phi0,
}

impl Kernel {
    pub fn lipschitz(&self) -> f64 {
        match self {
            Kernel::Heaviside => f64::INFINITY,
            Kernel::Phi0 => 1.0,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }
}

pub fn phi0(y: f64) -> f64 {
    (0.5 + y).clamp(0.0, 1.0)
}

pub fn heaviside(s: f64) -> f64 {
    if s >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `phi_0(1 - d / eps)` decided by comparing `d` itself against the
/// breakpoints, so the kernel sandwich holds exactly in floating point.
#[inline]
fn phi0_at(d: f64, eps: f64) -> f64 {
    if d <= 0.5 * eps {
        1.0
    } else if d >= 1.5 * eps {
        0.0
    } else {
        (1.5 - d / eps).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationSum {
    pub n: usize,
    pub epsilon: f64,
    pub kernel: Kernel,
    pub value: f64,
}

/// Pairwise distances `d(x_i, x_j)`, `i < j`, that can matter for a ladder
/// whose largest radius is `reach`; farther pairs contribute zero to every
/// kernel.
fn visit_close_pairs(space: &StateSpace, points: &[Point], reach: f64, mut visit: impl FnMut(f64)) {
    match space {
        StateSpace::Interval { .. } => {
            let mut xs: Vec<f64> = points.iter().map(Point::first).collect();
            xs.sort_by(f64::total_cmp);
            for i in 0..xs.len() {
                for xj in &xs[i + 1..] {
                    let d = xj - xs[i];
                    if d > reach {
                        break;
                    }
                    visit(d);
                }
            }
        }
        StateSpace::Circle => {
            let xs: Vec<f64> = points.iter().map(Point::first).collect();
            for i in 0..xs.len() {
                for xj in &xs[i + 1..] {
                    visit(circle_distance(xs[i], *xj));
                }
            }
        }
        StateSpace::Projective { .. } => {
            for i in 0..points.len() {
                for q in &points[i + 1..] {
                    visit(space.dist_unchecked(&points[i], q));
                }
            }
        }
    }
}

/// Correlation sums `(1/n^2) sum_{i != j} k(1 - d(x_i, x_j) / eps)` for
/// every radius in `epsilons`, in one pass over the pairs.
pub fn correlation_sums(
    space: &StateSpace,
    points: &[Point],
    epsilons: &[f64],
    kernel: Kernel,
) -> Result<Vec<CorrelationSum>> {
    let n = points.len();
    if n < 2 {
        return usage("correlation sums need at least two points");
    }
    if epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return usage("radii must be positive");
    }
    for p in points {
        space.check(p)?;
    }
    let reach = epsilons.iter().fold(0.0f64, |a, e| a.max(*e)) * 2.0;
    let values: Vec<f64> = match kernel {
        Kernel::Heaviside => {
            let mut counts = vec![0u64; epsilons.len()];
            visit_close_pairs(space, points, reach, |d| {
                for (c, e) in counts.iter_mut().zip(epsilons) {
                    if d <= *e {
                        *c += 1;
                    }
                }
            });
            counts
                .iter()
                .map(|c| 2.0 * *c as f64 / (n as f64 * n as f64))
                .collect()
        }
        Kernel::Phi0 => {
            let mut sums = vec![CompensatedSum::default(); epsilons.len()];
            visit_close_pairs(space, points, reach, |d| {
                for (s, e) in sums.iter_mut().zip(epsilons) {
                    let v = phi0_at(d, *e);
                    if v > 0.0 {
                        s.add(v);
                    }
                }
            });
            sums.iter()
                .map(|s| 2.0 * s.value() / (n as f64 * n as f64))
                .collect()
        }
    };
    Ok(epsilons
        .iter()
        .zip(values)
        .map(|(e, value)| CorrelationSum {
            n,
            epsilon: *e,
            kernel,
            value,
        })
        .collect())
}

pub fn correlation_sum(
    space: &StateSpace,
    points: &[Point],
    epsilon: f64,
    kernel: Kernel,
) -> Result<CorrelationSum> {
    Ok(correlation_sums(space, points, &[epsilon], kernel)?.remove(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LadderRung {
    pub epsilon: f64,
    pub value: f64,
    /// False when the sum was zero and the rung left out of the fit.
    pub used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationDimension {
    pub slope: f64,
    pub intercept: f64,
    pub table: Vec<LadderRung>,
}

/// Least-squares slope of `log K^{phi_0}_{n, eps}` against `log eps`.
pub fn correlation_dimension(
    space: &StateSpace,
    points: &[Point],
    ladder: &[f64],
) -> Result<CorrelationDimension> {
    if ladder.len() < 3 {
        return usage("the radius ladder needs at least three rungs");
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return usage("the radius ladder must be strictly decreasing");
    }
    let sums = correlation_sums(space, points, ladder, Kernel::Phi0)?;
    let table: Vec<LadderRung> = sums
        .iter()
        .map(|s| LadderRung {
            epsilon: s.epsilon,
            value: s.value,
            used: s.value > 0.0,
        })
        .collect();
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|r| r.used)
        .map(|r| (r.epsilon.ln(), r.value.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Estimation(format!(
            "only {} of {} rungs have a nonzero correlation sum",
            pts.len(),
            ladder.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(CorrelationDimension {
        slope,
        intercept: my - slope * mx,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds::SeededStream;
    use proptest::prelude::*;

    fn reals(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|x| Point::real(*x)).collect()
    }

    #[test]
    fn small_examples() {
        let s = StateSpace::unit_interval();
        let p = reals(&[0.0, 0.1, 0.5]);
        assert!(
            (correlation_sum(&s, &p, 0.2, Kernel::Heaviside)
                .unwrap()
                .value
                - 2.0 / 9.0)
                .abs()
                < 1e-15
        );
        assert!(
            (correlation_sum(&s, &p, 0.2, Kernel::Phi0).unwrap().value - 2.0 / 9.0).abs() < 1e-15
        );
        let all = correlation_sum(&s, &p, 2.0, Kernel::Heaviside)
            .unwrap()
            .value;
        assert!((all - (1.0 - 1.0 / 3.0)).abs() < 1e-15);
        assert!(correlation_sum(&s, &p[..1], 0.2, Kernel::Heaviside).is_err());
    }

    #[test]
    fn ties_count() {
        let s = StateSpace::unit_interval();
        let p = reals(&[0.0, 0.5]);
        assert_eq!(
            correlation_sum(&s, &p, 0.5, Kernel::Heaviside)
                .unwrap()
                .value,
            0.5
        );
    }

    #[test]
    fn phi0_bounds_on_grid() {
        for i in 0..=8000 {
            let y = -4.0 + i as f64 * 1e-3;
            assert!(heaviside(1.0 - 2.0 * y) <= phi0(1.0 - y));
            assert!(phi0(1.0 - y) <= heaviside(1.0 - y / 2.0));
        }
    }

    #[test]
    fn point_mass_has_dimension_zero() {
        let s = StateSpace::unit_interval();
        let p = reals(&[0.3; 50]);
        let fit = correlation_dimension(&s, &p, &[0.1, 0.05, 0.025]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!(fit
            .table
            .iter()
            .all(|r| (r.value - (1.0 - 1.0 / 50.0)).abs() < 1e-12));
    }

    #[test]
    fn uniform_circle_dimension_one() {
        let mut s = SeededStream::new(3, 0);
        let p: Vec<Point> = (0..10_000).map(|_| Point::circle(s.unit())).collect();
        let ladder: Vec<f64> = (0..5).map(|j| 0.1 * 0.5f64.powi(j)).collect();
        let fit = correlation_dimension(&StateSpace::Circle, &p, &ladder).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.1, "{}", fit.slope);
    }

    #[test]
    fn empty_rungs_are_dropped() {
        let s = StateSpace::unit_interval();
        let p = reals(&[0.0, 0.3, 0.6, 0.9]);
        let err = correlation_dimension(&s, &p, &[0.5, 0.1, 0.05, 0.01]).unwrap_err();
        assert!(matches!(err, Error::Estimation(_)));
        let fit = correlation_dimension(
            &s,
            &reals(&[0.0, 0.02, 0.3, 0.6, 0.9]),
            &[0.8, 0.4, 0.2, 0.01],
        )
        .unwrap();
        assert!(!fit.table[3].used && fit.table[..3].iter().all(|r| r.used));
    }

    proptest! {
        #[test]
        fn kernel_sandwich(xs in proptest::collection::vec(0.0f64..1.0, 2..60), eps in 1e-3f64..0.5) {
            let s = StateSpace::unit_interval();
            let p = reals(&xs);
            let lo = correlation_sum(&s, &p, eps / 2.0, Kernel::Heaviside).unwrap().value;
            let mid = correlation_sum(&s, &p, eps, Kernel::Phi0).unwrap().value;
            let hi = correlation_sum(&s, &p, 2.0 * eps, Kernel::Heaviside).unwrap().value;
            prop_assert!(lo <= mid && mid <= hi);
            prop_assert!((0.0..=1.0).contains(&mid));
        }
    }
}
