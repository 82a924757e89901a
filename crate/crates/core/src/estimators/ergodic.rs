use serde::Serialize;

use super::measure::{
    kantorovich_circle, kantorovich_interval, log_averaged_from_sums, EmpiricalMeasure, LineMeasure,
};
use super::observable::Observable;
use crate::chains::{step_point, Trajectory};
use crate::error::{usage, Error, Result};
use crate::rds::{DrivingMeasure, SeededStream};
use crate::spaces::{Point, StateSpace};
use crate::stats::{chunked_fold, CompensatedSum, Moments};

/// `S_n / n = (1/n) sum_{k<n} h(X_k)` over a stored trajectory.
pub fn birkhoff_average(traj: &Trajectory, h: &Observable) -> Result<f64> {
    let n = traj.steps();
    if n == 0 {
        return usage("Birkhoff average needs at least one step");
    }
    let s: CompensatedSum = traj.points[..n]
        .iter()
        .map(|p| h.eval(&traj.space, p))
        .collect();
    Ok(s.value() / n as f64)
}

/// Running Birkhoff sums `S_1, ..., S_n` along one trajectory from `x0`,
/// without storing the points.
pub fn birkhoff_sums(
    nu: &DrivingMeasure,
    x0: &Point,
    n: usize,
    h: &Observable,
    stream: &mut SeededStream,
) -> Result<Vec<f64>> {
    let space = *nu.space();
    space.check(x0)?;
    let mut x = x0.clone();
    let mut scratch = Vec::new();
    let mut s = CompensatedSum::default();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        s.add(h.eval(&space, &x));
        out.push(s.value());
        if k + 1 < n {
            let f = nu.resolve(nu.draw(stream));
            step_point(&f, &mut x, &mut scratch, false)?;
        }
    }
    Ok(out)
}

/// `S_n(h)` for one trajectory, stepping scalar coordinates directly.
pub(crate) fn birkhoff_sum_fast(
    nu: &DrivingMeasure,
    x0: &Point,
    n: usize,
    h: &Observable,
    stream: &mut SeededStream,
) -> Result<f64> {
    let space = *nu.space();
    if space.is_scalar() {
        let circle = matches!(space, StateSpace::Circle);
        let mut x = x0.first();
        let mut s = 0.0;
        for k in 0..n {
            s += h.eval_scalar(&space, x);
            if k + 1 < n {
                let f = nu.resolve(nu.draw(stream));
                x = if circle {
                    f.apply_circle(x)
                } else {
                    f.apply_real(x)
                };
            }
        }
        Ok(s)
    } else {
        Ok(birkhoff_sums(nu, x0, n, h, stream)?
            .last()
            .copied()
            .unwrap_or(0.0))
    }
}

/// The logarithmically averaged measure of `S_k(h) / sqrt k`, `k = 1..=n`,
/// along one trajectory.
pub fn log_averaged_measure(
    nu: &DrivingMeasure,
    x0: &Point,
    n: usize,
    h: &Observable,
    stream: &mut SeededStream,
) -> Result<LineMeasure> {
    log_averaged_from_sums(&birkhoff_sums(nu, x0, n, h, stream)?)
}

/// Empirical approximation of the stationary measure from one long run.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryApprox {
    pub measure: EmpiricalMeasure,
    /// Kantorovich distance between the first and second half of the sample,
    /// when the space supports it.
    pub self_check: Option<f64>,
}

/// Kantorovich distance on interval or circle spaces.
pub fn kantorovich(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure) -> Result<f64> {
    match mu1.space() {
        StateSpace::Interval { .. } => kantorovich_interval(mu1, mu2),
        StateSpace::Circle => kantorovich_circle(mu1, mu2),
        StateSpace::Projective { .. } => Err(Error::Unsupported(
            "Kantorovich distance on projective space".into(),
        )),
    }
}

/// Records `X_{burn_in + j stride}`, `j < samples`, from a run started at
/// the space's reference point.
pub fn stationary_approx(
    nu: &DrivingMeasure,
    burn_in: usize,
    samples: usize,
    stride: usize,
    seed: u64,
) -> Result<StationaryApprox> {
    if samples == 0 || stride == 0 {
        return usage("stationary approximation needs samples >= 1 and stride >= 1");
    }
    let space = *nu.space();
    let mut stream = SeededStream::new(seed, 0);
    let mut x = space.origin();
    let mut scratch = Vec::new();
    let mut step = |x: &mut Point, stream: &mut SeededStream| -> Result<()> {
        let f = nu.resolve(nu.draw(stream));
        step_point(&f, x, &mut scratch, false).map(|_| ())
    };
    for _ in 0..burn_in {
        step(&mut x, &mut stream)?;
    }
    let mut points = Vec::with_capacity(samples);
    for j in 0..samples {
        if j > 0 {
            for _ in 0..stride {
                step(&mut x, &mut stream)?;
            }
        }
        points.push(x.clone());
    }
    let self_check = if samples >= 2 && space.is_scalar() {
        let half = samples / 2;
        let a = EmpiricalMeasure::uniform(space, points[..half].to_vec())?;
        let b = EmpiricalMeasure::uniform(space, points[half..].to_vec())?;
        Some(kantorovich(&a, &b)?)
    } else {
        None
    };
    Ok(StationaryApprox {
        measure: EmpiricalMeasure::uniform(space, points)?,
        self_check,
    })
}

/// Pushes every atom forward by an independent random map.
pub fn push_forward(
    nu: &DrivingMeasure,
    mu: &EmpiricalMeasure,
    stream: &mut SeededStream,
) -> Result<EmpiricalMeasure> {
    let mut scratch = Vec::new();
    let atoms = mu
        .atoms()
        .iter()
        .map(|(p, w)| {
            let mut q = p.clone();
            let f = nu.resolve(nu.draw(stream));
            step_point(&f, &mut q, &mut scratch, false)?;
            Ok((q, *w))
        })
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::new(*mu.space(), atoms)
}

fn pick_atom<'a>(
    mu: &'a EmpiricalMeasure,
    cumulative: &[f64],
    stream: &mut SeededStream,
) -> &'a Point {
    let u = stream.unit();
    let i = cumulative
        .partition_point(|c| *c <= u)
        .min(cumulative.len() - 1);
    &mu.atoms()[i].0
}

fn cumulative(mu: &EmpiricalMeasure) -> Vec<f64> {
    let mut acc = 0.0;
    mu.atoms()
        .iter()
        .map(|(_, w)| {
            acc += w;
            acc
        })
        .collect()
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl From<Moments> for Estimate {
    fn from(m: Moments) -> Self {
        Estimate {
            value: m.mean(),
            stderr: m.stderr(),
        }
    }
}

/// Asymptotic variance estimate of a centered observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sigma2Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Mean of `h` under the sample of `eta`, subtracted before summing.
    pub centering: f64,
    /// Time average of the centered observable over all simulated steps;
    /// zero when the sample represents `eta` exactly.
    pub residual: f64,
}

/// `(1/n) E[S_n(h - eta(h))^2]` with starts drawn from `eta_sample`.
pub fn sigma2_estimate(
    nu: &DrivingMeasure,
    n: usize,
    trials: usize,
    eta_sample: &EmpiricalMeasure,
    h: &Observable,
    seed: u64,
) -> Result<Sigma2Estimate> {
    if n == 0 || trials == 0 {
        return usage("sigma^2 estimate needs n >= 1 and trials >= 1");
    }
    let space = *nu.space();
    h.check(&space)?;
    let centering = eta_sample.integrate(|p| h.eval(&space, p));
    let cum = cumulative(eta_sample);
    let (sq, lin) = chunked_fold(
        trials,
        Ok((Moments::default(), Moments::default())),
        |range| -> Result<(Moments, Moments)> {
            let mut sq = Moments::default();
            let mut lin = Moments::default();
            for trial in range {
                let mut stream = SeededStream::new(seed, trial as u64);
                let x0 = pick_atom(eta_sample, &cum, &mut stream).clone();
                let s = birkhoff_sum_fast(nu, &x0, n, h, &mut stream)? - centering * n as f64;
                sq.push(s * s / n as f64);
                lin.push(s / n as f64);
            }
            Ok((sq, lin))
        },
        |acc: &mut Result<(Moments, Moments)>, part| match (acc.as_mut(), part) {
            (Ok(a), Ok(p)) => {
                a.0.merge(&p.0);
                a.1.merge(&p.1);
            }
            (Ok(_), Err(e)) => *acc = Err(e),
            (Err(_), _) => {}
        },
    )?;
    Ok(Sigma2Estimate {
        value: sq.mean(),
        stderr: sq.stderr(),
        centering,
        residual: lin.mean(),
    })
}

/// `p_j = int int E[d(X_j^x, X_j^y)] d eta(x) d eta(y)`.
pub fn correlation_coefficient_pj(
    nu: &DrivingMeasure,
    eta_sample: &EmpiricalMeasure,
    j: usize,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return usage("at least one trial is required");
    }
    let space = *nu.space();
    let cum = cumulative(eta_sample);
    let m = chunked_fold(
        trials,
        Ok(Moments::default()),
        |range| -> Result<Moments> {
            let mut m = Moments::default();
            let mut scratch = Vec::new();
            for trial in range {
                let mut stream = SeededStream::new(seed, trial as u64);
                let mut x = pick_atom(eta_sample, &cum, &mut stream).clone();
                let mut y = pick_atom(eta_sample, &cum, &mut stream).clone();
                for _ in 0..j {
                    let f = nu.resolve(nu.draw(&mut stream));
                    step_point(&f, &mut x, &mut scratch, false)?;
                    step_point(&f, &mut y, &mut scratch, false)?;
                }
                m.push(space.dist_unchecked(&x, &y));
            }
            Ok(m)
        },
        |acc: &mut Result<Moments>, part| match (acc.as_mut(), part) {
            (Ok(a), Ok(p)) => a.merge(&p),
            (Ok(_), Err(e)) => *acc = Err(e),
            (Err(_), _) => {}
        },
    )?;
    Ok(m.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{simulate, RecordFlags};
    use crate::rds::MapDescriptor;

    fn unit() -> StateSpace {
        StateSpace::unit_interval()
    }

    fn halving() -> DrivingMeasure {
        DrivingMeasure::uniform(
            unit(),
            vec![
                MapDescriptor::affine(0.5, 0.0).unwrap(),
                MapDescriptor::affine(0.5, 0.5).unwrap(),
            ],
        )
        .unwrap()
    }

    fn traj(xs: &[f64]) -> Trajectory {
        Trajectory {
            space: unit(),
            points: xs.iter().map(|x| Point::real(*x)).collect(),
            log_derivative_sum: None,
            draws: None,
        }
    }

    #[test]
    fn birkhoff_examples() {
        assert!(
            (birkhoff_average(&traj(&[0.3; 6]), &Observable::Coordinate).unwrap() - 0.3).abs()
                < 1e-15
        );
        let t = traj(&[1.0, 0.5, 1.0 / 3.0, 0.25]);
        assert!(
            (birkhoff_average(&t, &Observable::Coordinate).unwrap() - 11.0 / 18.0).abs() < 1e-15
        );
        assert_eq!(birkhoff_average(&t, &Observable::Zero).unwrap(), 0.0);
        assert!(birkhoff_average(&traj(&[0.5]), &Observable::Coordinate).is_err());
    }

    #[test]
    fn birkhoff_sums_match_stored_trajectory() {
        let nu = halving();
        let t = simulate(
            &nu,
            &Point::real(0.3),
            50,
            &mut SeededStream::new(2, 0),
            RecordFlags::NONE,
        )
        .unwrap();
        let s = birkhoff_sums(
            &nu,
            &Point::real(0.3),
            50,
            &Observable::Coordinate,
            &mut SeededStream::new(2, 0),
        )
        .unwrap();
        assert!(
            (s[49] / 50.0 - birkhoff_average(&t, &Observable::Coordinate).unwrap()).abs() < 1e-14
        );
        let fast = birkhoff_sum_fast(
            &nu,
            &Point::real(0.3),
            50,
            &Observable::Coordinate,
            &mut SeededStream::new(2, 0),
        )
        .unwrap();
        assert!((fast - s[49]).abs() < 1e-13);
    }

    #[test]
    fn log_averaged_zero_observable() {
        let m = log_averaged_measure(
            &halving(),
            &Point::real(0.3),
            20,
            &Observable::Zero,
            &mut SeededStream::new(0, 0),
        )
        .unwrap();
        assert!(m.atoms().iter().all(|a| a.0 == 0.0));
    }

    #[test]
    fn stationary_examples() {
        let s = stationary_approx(&halving(), 100, 100_000, 1, 3).unwrap();
        assert!((s.measure.mean() - 0.5).abs() < 0.01);
        assert!(s.self_check.unwrap() < 0.02);

        let m = DrivingMeasure::dirac(unit(), MapDescriptor::moebius(1.0).unwrap()).unwrap();
        let s = stationary_approx(&m, 1000, 100, 1, 0).unwrap();
        assert!(s.measure.mean() <= 0.01);

        let c = DrivingMeasure::dirac(unit(), MapDescriptor::affine(0.5, 0.25).unwrap()).unwrap();
        let s = stationary_approx(&c, 60, 10, 3, 0).unwrap();
        assert!(s
            .measure
            .atoms()
            .iter()
            .all(|(p, _)| (p.first() - 0.5).abs() < 1e-6));
    }

    #[test]
    fn push_forward_keeps_stationary_sample_close() {
        let nu = halving();
        let s = stationary_approx(&nu, 100, 20_000, 1, 8).unwrap();
        let pushed = push_forward(&nu, &s.measure, &mut SeededStream::new(8, 1)).unwrap();
        let moved = kantorovich_interval(&s.measure, &pushed).unwrap();
        assert!(moved <= 2.0 * s.self_check.unwrap().max(1e-3), "{moved}");
    }

    #[test]
    fn sigma2_trivial_cases() {
        let nu = halving();
        let eta = stationary_approx(&nu, 50, 2000, 1, 1).unwrap().measure;
        let z = sigma2_estimate(&nu, 64, 200, &eta, &Observable::Zero, 0).unwrap();
        assert_eq!(z.value, 0.0);
        let c = sigma2_estimate(&nu, 64, 200, &eta, &Observable::Constant(3.0), 0).unwrap();
        assert!(c.value < 1e-20);
        assert!((c.centering - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sigma2_halving_is_stable_in_n() {
        let nu = halving();
        let eta = stationary_approx(&nu, 100, 50_000, 1, 2).unwrap().measure;
        let est: Vec<Sigma2Estimate> = [256, 512, 1024]
            .iter()
            .map(|&n| sigma2_estimate(&nu, n, 2000, &eta, &Observable::Coordinate, 11).unwrap())
            .collect();
        for e in &est {
            assert!(e.value > 0.0 && e.value.is_finite());
            assert!(e.residual.abs() < 0.01);
        }
        for a in &est {
            for b in &est {
                let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
                assert!(
                    (a.value - b.value).abs() <= 3.0 * se,
                    "{} vs {}",
                    a.value,
                    b.value
                );
            }
        }
    }

    #[test]
    fn pj_examples() {
        let nu = halving();
        let eta = stationary_approx(&nu, 100, 20_000, 1, 4).unwrap().measure;
        let p3 = correlation_coefficient_pj(&nu, &eta, 3, 20_000, 1).unwrap();
        assert!(
            (p3.value - 1.0 / 24.0).abs() < 4.0 * p3.stderr + 2e-3,
            "{p3:?}"
        );
        let id = DrivingMeasure::dirac(unit(), MapDescriptor::affine(1.0, 0.0).unwrap()).unwrap();
        let a = correlation_coefficient_pj(&id, &eta, 0, 500, 9).unwrap();
        let b = correlation_coefficient_pj(&id, &eta, 7, 500, 9).unwrap();
        assert_eq!(a, b);
    }
}
