use std::io::Write;

use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::chains::Trajectory;
use crate::error::{usage, Result};
use crate::spaces::{Point, StateSpace};
use crate::stats::CompensatedSum;

const WEIGHT_TOL: f64 = 1e-12;

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = CompensatedSum::default();
    let mut count = 0usize;
    for w in weights {
        if !(w.is_finite() && w > 0.0) {
            return usage("measure weights must be positive");
        }
        total.add(w);
        count += 1;
    }
    if count == 0 {
        return usage("a measure needs at least one atom");
    }
    if (total.value() - 1.0).abs() > WEIGHT_TOL {
        return usage(format!("measure weights sum to {}, not 1", total.value()));
    }
    Ok(())
}

/// Finitely supported probability measure on a [`StateSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    space: StateSpace,
    atoms: Vec<(Point, f64)>,
}

impl EmpiricalMeasure {
    pub fn new(space: StateSpace, atoms: Vec<(Point, f64)>) -> Result<Self> {
        check_weights(atoms.iter().map(|a| a.1))?;
        for (p, _) in &atoms {
            space.check(p)?;
        }
        Ok(EmpiricalMeasure { space, atoms })
    }

    /// Equal weights on `points`.
    pub fn uniform(space: StateSpace, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return usage("a measure needs at least one atom");
        }
        let w = 1.0 / points.len() as f64;
        for p in &points {
            space.check(p)?;
        }
        Ok(EmpiricalMeasure {
            space,
            atoms: points.into_iter().map(|p| (p, w)).collect(),
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Weighted mean of the first coordinate.
    pub fn mean(&self) -> f64 {
        self.atoms
            .iter()
            .map(|(p, w)| w * p.first())
            .collect::<CompensatedSum>()
            .value()
    }

    /// Weighted mean of `f`.
    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.atoms
            .iter()
            .map(|(p, w)| w * f(p))
            .collect::<CompensatedSum>()
            .value()
    }

    fn scalar_atoms(&self) -> Vec<(f64, f64)> {
        self.atoms.iter().map(|(p, w)| (p.first(), *w)).collect()
    }

    /// Two-column text: coordinates then weight, one atom per line.
    pub fn write_delimited<W: Write>(&self, mut out: W, delimiter: char) -> Result<()> {
        for (p, w) in &self.atoms {
            let coords: Vec<String> = p.coords().iter().map(|c| format!("{c:.16e}")).collect();
            writeln!(
                out,
                "{}{delimiter}{w:.16e}",
                coords.join(&delimiter.to_string())
            )?;
        }
        Ok(())
    }
}

/// Finitely supported probability measure on the real line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineMeasure {
    atoms: Vec<(f64, f64)>,
}

impl LineMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        check_weights(atoms.iter().map(|a| a.1))?;
        if atoms.iter().any(|a| !a.0.is_finite()) {
            return usage("atoms must be finite");
        }
        Ok(LineMeasure { atoms })
    }

    pub fn uniform(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return usage("a measure needs at least one atom");
        }
        let w = 1.0 / values.len() as f64;
        LineMeasure::new(values.iter().map(|v| (*v, w)).collect())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn write_delimited<W: Write>(&self, mut out: W, delimiter: char) -> Result<()> {
        for (x, w) in &self.atoms {
            writeln!(out, "{x:.16e}{delimiter}{w:.16e}")?;
        }
        Ok(())
    }
}

/// `(1/n) sum_{j<n} delta_{X_j}` for a trajectory with `n >= 1` steps.
pub fn empirical_measure(traj: &Trajectory) -> Result<EmpiricalMeasure> {
    let n = traj.steps();
    if n == 0 {
        return usage("empirical measure needs at least one step");
    }
    EmpiricalMeasure::uniform(traj.space, traj.points[..n].to_vec())
}

/// Sorted atoms with weights merged.
fn sorted(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms
}

/// Breakpoints and the CDF difference `F1 - F2` on each segment between them.
fn cdf_difference(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let a = sorted(a.to_vec());
    let b = sorted(b.to_vec());
    let (mut i, mut j) = (0, 0);
    let mut diff = 0.0;
    // (position, F1 - F2 just right of position)
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i].0 == x {
            diff += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == x {
            diff -= b[j].1;
            j += 1;
        }
        out.push((x, diff));
    }
    out
}

/// `int |F1 - F2|` for two measures on the line.
pub fn kantorovich_line(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let steps = cdf_difference(a, b);
    steps
        .windows(2)
        .map(|w| w[0].1.abs() * (w[1].0 - w[0].0))
        .collect::<CompensatedSum>()
        .value()
}

/// Kantorovich distance on an interval, as the L1 distance of the CDFs.
pub fn kantorovich_interval(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure) -> Result<f64> {
    match (mu1.space(), mu2.space()) {
        (StateSpace::Interval { .. }, s) if s == mu1.space() => {
            Ok(kantorovich_line(&mu1.scalar_atoms(), &mu2.scalar_atoms()))
        }
        _ => usage("kantorovich_interval needs two measures on the same interval"),
    }
}

/// Kantorovich distance between equal-weight atoms `xs` in `[a, b]` and the
/// uniform law on `[a, b]`, in closed form.
pub fn kantorovich_uniform(xs: &[f64], a: f64, b: f64) -> Result<f64> {
    if !(b > a) || xs.is_empty() {
        return usage("need a < b and at least one atom");
    }
    if xs.iter().any(|x| !(a..=b).contains(x)) {
        return usage("atoms must lie in [a, b]");
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = b - a;
    let n = sorted.len() as f64;
    // int_p^q |c - (s - a)/len| ds for a constant CDF level c.
    let piece = |c: f64, p: f64, q: f64| -> f64 {
        let (u, v) = ((p - a) / len, (q - a) / len);
        // Antiderivative of |c - w| from 0.
        let anti = |w: f64| {
            if w <= c {
                c * w - 0.5 * w * w
            } else {
                c * c - c * w + 0.5 * w * w
            }
        };
        len * (anti(v) - anti(u))
    };
    let mut total = CompensatedSum::default();
    let mut prev = a;
    for (i, x) in sorted.iter().enumerate() {
        total.add(piece(i as f64 / n, prev, *x));
        prev = *x;
    }
    total.add(piece(1.0, prev, b));
    Ok(total.value())
}

/// Kantorovich distance on the circle: `min_c int_0^1 |F1 - F2 - c|`,
/// attained at a weighted median of the CDF difference.
pub fn kantorovich_circle(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure) -> Result<f64> {
    if *mu1.space() != StateSpace::Circle || *mu2.space() != StateSpace::Circle {
        return usage("kantorovich_circle needs two measures on the circle");
    }
    let mut steps = cdf_difference(&mu1.scalar_atoms(), &mu2.scalar_atoms());
    // Segment [0, first atom) carries difference 0.
    steps.insert(0, (0.0, 0.0));
    steps.push((1.0, 0.0));
    let segments: Vec<(f64, f64)> = steps
        .windows(2)
        .map(|w| (w[0].1, w[1].0 - w[0].0))
        .filter(|s| s.1 > 0.0)
        .collect();
    let mut by_value = segments.clone();
    by_value.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    let mut median = by_value.last().map_or(0.0, |s| s.0);
    for (v, len) in &by_value {
        acc += len;
        if acc >= 0.5 {
            median = *v;
            break;
        }
    }
    Ok(segments
        .iter()
        .map(|(v, len)| (v - median).abs() * len)
        .collect::<CompensatedSum>()
        .value())
}

/// Kantorovich distance between `mu` and the centered normal law with
/// standard deviation `sigma`; `sigma = 0` gives the distance to `delta_0`.
pub fn kantorovich_gaussian(mu: &LineMeasure, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return usage("sigma must be finite and nonnegative");
    }
    if sigma == 0.0 {
        return Ok(mu
            .atoms
            .iter()
            .map(|(x, w)| w * x.abs())
            .collect::<CompensatedSum>()
            .value());
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    let std = Normal::standard();
    // G(t) = int_{-inf}^t Phi(s / sigma) ds, evaluated for t <= 0 where it is small.
    let g_neg = |t: f64| t * normal.cdf(t) + sigma * sigma * normal.pdf(t);
    // int_a^b Phi(s / sigma) ds without cancellation between large terms.
    let int_phi = |a: f64, b: f64| -> f64 {
        if b <= a {
            0.0
        } else if b <= 0.0 {
            g_neg(b)
                - if a == f64::NEG_INFINITY {
                    0.0
                } else {
                    g_neg(a)
                }
        } else if a >= 0.0 {
            (b - a) - (g_neg(-a) - g_neg(-b))
        } else {
            b - if a == f64::NEG_INFINITY {
                0.0
            } else {
                g_neg(a)
            } + g_neg(-b)
        }
    };
    let atoms = sorted(mu.atoms.clone());
    let mut total = CompensatedSum::default();
    // Left tail: H = 0.
    total.add(int_phi(f64::NEG_INFINITY, atoms[0].0));
    let mut level = 0.0;
    let mut i = 0;
    while i < atoms.len() {
        let x = atoms[i].0;
        while i < atoms.len() && atoms[i].0 == x {
            level += atoms[i].1;
            i += 1;
        }
        if i == atoms.len() {
            // Right tail: int_x^inf (1 - Phi) = G(-x).
            total.add(if x >= 0.0 { g_neg(-x) } else { -x + g_neg(x) });
            break;
        }
        let (a, b) = (x, atoms[i].0);
        let level_c = level.clamp(0.0, 1.0);
        let cross = sigma * std.inverse_cdf(level_c);
        let split = cross.clamp(a, b);
        // Phi < c on [a, split), Phi > c on (split, b].
        total.add(level_c * (split - a) - int_phi(a, split));
        total.add(int_phi(split, b) - level_c * (b - split));
    }
    Ok(total.value())
}

/// Logarithmically averaged measure
/// `(1/a_n) sum_{k=1}^n (1/k) delta_{S_k / sqrt k}` from the Birkhoff sums
/// `S_1, ..., S_n`.
pub fn log_averaged_from_sums(sums: &[f64]) -> Result<LineMeasure> {
    if sums.is_empty() {
        return usage("log-averaged measure needs n >= 1");
    }
    let a_n: f64 = (1..=sums.len())
        .map(|k| 1.0 / k as f64)
        .collect::<CompensatedSum>()
        .value();
    LineMeasure::new(
        sums.iter()
            .enumerate()
            .map(|(i, s)| {
                let k = (i + 1) as f64;
                (s / k.sqrt(), 1.0 / (k * a_n))
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(xs: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(
            StateSpace::Interval { a: -10.0, b: 10.0 },
            xs.iter().map(|x| Point::real(*x)).collect(),
        )
        .unwrap()
    }

    fn circle(xs: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(
            StateSpace::Circle,
            xs.iter().map(|x| Point::circle(*x)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn interval_examples() {
        assert!(
            (kantorovich_interval(&interval(&[0.2]), &interval(&[0.9])).unwrap() - 0.7).abs()
                < 1e-15
        );
        assert!(
            (kantorovich_interval(&interval(&[0.0, 1.0]), &interval(&[0.5, 1.5])).unwrap() - 0.5)
                .abs()
                < 1e-15
        );
        let m = interval(&[0.1, 0.4, 0.4]);
        assert_eq!(kantorovich_interval(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn uniform_closed_form_matches_quadrature() {
        let xs = [0.9, 0.05, 0.5, 0.5, 0.31];
        let (a, b) = (-1.0, 2.0);
        let exact = kantorovich_uniform(&xs, a, b).unwrap();
        let m = 200_000;
        let h = (b - a) / m as f64;
        let quad: f64 = (0..m)
            .map(|i| {
                let s = a + (i as f64 + 0.5) * h;
                let f = xs.iter().filter(|x| **x <= s).count() as f64 / xs.len() as f64;
                (f - (s - a) / (b - a)).abs() * h
            })
            .sum();
        assert!((exact - quad).abs() < 1e-5, "{exact} {quad}");
        assert!((kantorovich_uniform(&[0.5], 0.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(kantorovich_uniform(&[1.5], 0.0, 1.0).is_err());
    }

    #[test]
    fn interval_rejects_other_spaces() {
        assert!(kantorovich_interval(&circle(&[0.1]), &circle(&[0.2])).is_err());
    }

    #[test]
    fn circle_examples() {
        let m = circle(&[0.1, 0.7]);
        assert!(kantorovich_circle(&m, &m).unwrap().abs() < 1e-15);
        assert!(
            (kantorovich_circle(&circle(&[0.0]), &circle(&[0.9])).unwrap() - 0.1).abs() < 1e-12
        );
        assert!(
            (kantorovich_circle(&circle(&[0.0, 0.5]), &circle(&[0.25, 0.75])).unwrap() - 0.25)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn gaussian_examples() {
        let d0 = LineMeasure::new(vec![(0.0, 1.0)]).unwrap();
        assert_eq!(kantorovich_gaussian(&d0, 0.0).unwrap(), 0.0);
        let v = kantorovich_gaussian(&d0, 1.0).unwrap();
        assert!(
            (v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12,
            "{v}"
        );
        // Shifting a point mass far right: distance is |x| for sigma -> 0.
        let far = LineMeasure::new(vec![(30.0, 1.0)]).unwrap();
        assert!((kantorovich_gaussian(&far, 1e-3).unwrap() - 30.0).abs() < 1e-6);
        assert!((kantorovich_gaussian(&far, 0.0).unwrap() - 30.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_matches_quadrature() {
        let mu = LineMeasure::new(vec![(-0.7, 0.2), (0.1, 0.5), (1.3, 0.3)]).unwrap();
        let sigma = 0.8;
        let normal = Normal::new(0.0, sigma).unwrap();
        let h = |t: f64| {
            mu.atoms()
                .iter()
                .filter(|a| a.0 <= t)
                .map(|a| a.1)
                .sum::<f64>()
        };
        // Midpoint rule on a wide window.
        let (lo, hi, n) = (-12.0, 12.0, 2_400_000);
        let dt = (hi - lo) / n as f64;
        let quad: f64 = (0..n)
            .map(|i| {
                let t = lo + (i as f64 + 0.5) * dt;
                (h(t) - normal.cdf(t)).abs() * dt
            })
            .sum();
        assert!((kantorovich_gaussian(&mu, sigma).unwrap() - quad).abs() < 1e-6);
    }

    #[test]
    fn log_average_examples() {
        let m = log_averaged_from_sums(&[0.3]).unwrap();
        assert_eq!(m.atoms(), &[(0.3, 1.0)]);
        let (x0, x1) = (0.2, 0.6);
        let m = log_averaged_from_sums(&[x0, x0 + x1]).unwrap();
        assert!((m.atoms()[0].0 - x0).abs() < 1e-15 && (m.atoms()[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.atoms()[1].0 - (x0 + x1) / 2f64.sqrt()).abs() < 1e-15);
        assert!((m.atoms()[1].1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn delimited_output() {
        let mut buf = Vec::new();
        interval(&[0.5, 0.25])
            .write_delimited(&mut buf, ',')
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("5.0000000000000000e-1,5.0000000000000000e-1"));
    }
}
