use serde::Serialize;

use crate::chains::{step_point, ComposedMap, CompositionOrder, Trajectory};
use crate::error::{usage, Error, Result};
use crate::rds::{DrivingMeasure, MapDescriptor, SeededStream};
use crate::spaces::{wrap_unit, Point, StateSpace};
use crate::stats::CompensatedSum;

/// `(1/n) min_{y in B} sum_{i<n} d(X_i^x, X_i^y)` under one noise realization.
pub fn synchronization(
    nu: &DrivingMeasure,
    x: &Point,
    candidates: &[Point],
    n: usize,
    stream: &mut SeededStream,
) -> Result<f64> {
    if candidates.is_empty() {
        return usage("candidate set B is empty");
    }
    if n == 0 {
        return usage("synchronization needs n >= 1");
    }
    let space = *nu.space();
    space.check(x)?;
    for y in candidates {
        space.check(y)?;
    }
    let mut xs = x.clone();
    let mut ys: Vec<Point> = candidates.to_vec();
    let mut sums = vec![CompensatedSum::default(); ys.len()];
    let mut scratch = Vec::new();
    for i in 0..n {
        for (s, y) in sums.iter_mut().zip(&ys) {
            s.add(space.dist_unchecked(&xs, y));
        }
        if i + 1 < n {
            let f = nu.resolve(nu.draw(stream));
            step_point(&f, &mut xs, &mut scratch, false)?;
            for y in &mut ys {
                step_point(&f, y, &mut scratch, false)?;
            }
        }
    }
    let best = sums
        .iter()
        .map(CompensatedSum::value)
        .fold(f64::INFINITY, f64::min);
    Ok(best / n as f64)
}

/// `(1/n) sum ln|f_k'(X_{k-1})|` from a trajectory's derivative record.
pub fn lyapunov_1d(traj: &Trajectory) -> Result<f64> {
    let record = traj
        .log_derivative_sum
        .as_ref()
        .ok_or_else(|| Error::Usage("trajectory has no log-derivative record".into()))?;
    match record.last() {
        Some(v) => Ok(v / record.len() as f64),
        None => usage("Lyapunov exponent needs at least one step"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectiveRates {
    /// `(1/n) ln |A_n ... A_1 x|`.
    pub vector_rate: f64,
    /// `(1/n) ln ||A_n ... A_1||`.
    pub norm_rate: f64,
}

const RESCALE_EVERY: usize = 32;

/// Finite-time growth rates of a random matrix product along one draw.
pub fn lyapunov_projective(
    nu: &DrivingMeasure,
    x: &Point,
    n: usize,
    stream: &mut SeededStream,
) -> Result<ProjectiveRates> {
    let dim = nu.matrix_dim()?;
    let Point::Direction(v0) = x else {
        return usage("projective Lyapunov rates need a unit vector start");
    };
    if v0.len() != dim {
        return usage(format!(
            "start has dimension {}, matrices have {dim}",
            v0.len()
        ));
    }
    if n == 0 {
        return usage("Lyapunov rates need n >= 1");
    }
    let mut v = v0.clone();
    let mut w = vec![0.0; dim];
    let mut vec_log = CompensatedSum::default();
    let mut prod = crate::rds::Matrix::identity(dim);
    let mut prod_log = 0.0;
    for k in 1..=n {
        let f = nu.resolve(nu.draw(stream));
        let MapDescriptor::ProjectiveAction(a) = f.as_ref() else {
            return usage("law is not a matrix law");
        };
        a.mul_vec_into(&v, &mut w);
        let norm = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        vec_log.add(norm.ln());
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        prod = a.mul(&prod);
        if k % RESCALE_EVERY == 0 {
            // Frobenius rescaling keeps the product representable; the
            // scale is tracked in log space.
            let fro = prod.as_slice().iter().map(|c| c * c).sum::<f64>().sqrt();
            prod_log += fro.ln();
            prod = crate::rds::Matrix::raw(dim, prod.as_slice().iter().map(|c| c / fro).collect());
        }
    }
    let norm_rate = (prod_log + prod.operator_norm().ln()) / n as f64;
    Ok(ProjectiveRates {
        vector_rate: vec_log.value() / n as f64,
        norm_rate,
    })
}

/// A fixed point of a composed map with `|G'| <= 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub point: Vec<f64>,
    pub multiplier: f64,
}

pub const DEFAULT_FIXED_POINT_GRID: usize = 4096;

/// Non-expansive fixed points of one drawn composition of `n` maps.
pub fn nonexpansive_fixed_points(
    nu: &DrivingMeasure,
    n: usize,
    stream: &mut SeededStream,
    resolution: usize,
    order: CompositionOrder,
) -> Result<Vec<FixedPoint>> {
    let g = ComposedMap::draw(nu, n, stream, order);
    fixed_points_of(&g, nu.space(), resolution)
}

/// Non-expansive fixed points of a given composition on a one-dimensional space.
pub fn fixed_points_of(
    g: &ComposedMap,
    space: &StateSpace,
    resolution: usize,
) -> Result<Vec<FixedPoint>> {
    let circle = match space {
        StateSpace::Circle => true,
        StateSpace::Interval { .. } => false,
        StateSpace::Projective { .. } => {
            return Err(Error::Unsupported(
                "fixed points need a one-dimensional space".into(),
            ))
        }
    };
    let grid = space.grid(resolution)?;
    let make = |t: f64| {
        if circle {
            Point::Circle(wrap_unit(t))
        } else {
            Point::Real(t)
        }
    };
    // Signed displacement, wrapped into (-1/2, 1/2] on the circle.
    let disp = |t: f64| -> Result<f64> {
        let y = g.apply(&make(t))?.first();
        Ok(if circle {
            let d = (y - wrap_unit(t)).rem_euclid(1.0);
            if d > 0.5 {
                d - 1.0
            } else {
                d
            }
        } else {
            y - t
        })
    };
    let ts: Vec<f64> = grid.iter().map(Point::first).collect();
    let ds: Vec<f64> = ts.iter().map(|t| disp(*t)).collect::<Result<_>>()?;
    let mut roots: Vec<f64> = Vec::new();
    let cells = if circle { ts.len() } else { ts.len() - 1 };
    for k in 0..ts.len() {
        if ds[k] == 0.0 {
            roots.push(ts[k]);
        }
        if k >= cells {
            continue;
        }
        let k1 = (k + 1) % ts.len();
        let (d0, d1) = (ds[k], ds[k1]);
        // A jump of the wrapped displacement is not a root.
        if d0 * d1 < 0.0 && d0.abs() < 0.25 && d1.abs() < 0.25 {
            let mut lo = ts[k];
            let mut hi = if k1 == 0 { 1.0 } else { ts[k1] };
            let mut dlo = d0;
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let dm = disp(mid)?;
                if dm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (dm < 0.0) == (dlo < 0.0) {
                    lo = mid;
                    dlo = dm;
                } else {
                    hi = mid;
                }
            }
            roots.push(if circle {
                wrap_unit(0.5 * (lo + hi))
            } else {
                0.5 * (lo + hi)
            });
        }
    }
    let mut out: Vec<FixedPoint> = Vec::new();
    for t in roots {
        let (_, d) = g.apply_with_derivative(&make(t))?;
        if d.abs() <= 1.0 + 1e-9 && !out.iter().any(|f| (f.point[0] - t).abs() < 1e-9) {
            out.push(FixedPoint {
                point: vec![t],
                multiplier: d.abs(),
            });
        }
    }
    Ok(out)
}
