//! Metric state spaces: a compact interval, the circle of circumference one,
//! and real projective space represented by canonical-sign unit vectors.
//!
//! Suprema over a space are approximated by maxima over the deterministic
//! grids produced by [`StateSpace::grid`]; such maxima are lower bounds.

use crate::error::{usage, Error, Result};

/// Default number of grid points used to approximate suprema over a space.
pub const DEFAULT_GRID: usize = 256;

const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateSpace {
    /// The closed interval `[a, b]` with the absolute-value metric.
    Interval { a: f64, b: f64 },
    /// Coordinates in `[0, 1)` with `d(x, y) = min(|x - y|, 1 - |x - y|)`.
    Circle,
    /// Lines through the origin of `R^dim` with `d(x, y) = |sin angle(x, y)|`.
    Projective { dim: usize },
}

/// A point of a [`StateSpace`].
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Real(f64),
    Circle(f64),
    /// Unit vector whose first nonzero coordinate is positive.
    Direction(Vec<f64>),
}

impl Point {
    pub fn real(x: f64) -> Self {
        Point::Real(x)
    }

    /// Circle coordinate reduced mod 1 into `[0, 1)`.
    pub fn circle(x: f64) -> Self {
        Point::Circle(wrap_unit(x))
    }

    /// Normalizes `v` and applies the canonical sign convention.
    pub fn direction(v: Vec<f64>) -> Result<Self> {
        let mut v = v;
        canonicalize(&mut v)?;
        Ok(Point::Direction(v))
    }

    /// The scalar coordinate of interval and circle points.
    pub fn scalar(&self) -> Option<f64> {
        match *self {
            Point::Real(x) | Point::Circle(x) => Some(x),
            Point::Direction(_) => None,
        }
    }

    /// Coordinates as a slice-like list (one entry for scalar points).
    pub fn coords(&self) -> Vec<f64> {
        match self {
            Point::Real(x) | Point::Circle(x) => vec![*x],
            Point::Direction(v) => v.clone(),
        }
    }

    /// First coordinate; used by coordinate observables.
    pub fn first(&self) -> f64 {
        match self {
            Point::Real(x) | Point::Circle(x) => *x,
            Point::Direction(v) => v[0],
        }
    }
}

/// Reduce into `[0, 1)`, mapping values that round up to 1 back to 0.
pub(crate) fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

pub(crate) fn canonicalize(v: &mut [f64]) -> Result<()> {
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return usage("projective point must be a finite nonzero vector");
    }
    let sign = match v.iter().find(|c| **c != 0.0) {
        Some(c) if *c < 0.0 => -1.0,
        _ => 1.0,
    };
    for c in v.iter_mut() {
        *c *= sign / norm;
    }
    Ok(())
}

/// `|sin angle(x, y)| = |x ^ y|` for unit vectors, from the 2x2 minors so
/// nearby directions keep full relative precision.
fn wedge_norm(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let m = x[i] * y[j] - x[j] * y[i];
            s += m * m;
        }
    }
    s.sqrt().min(1.0)
}

impl StateSpace {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return usage(format!("interval requires a < b, got [{a}, {b}]"));
        }
        Ok(StateSpace::Interval { a, b })
    }

    pub fn unit_interval() -> Self {
        StateSpace::Interval { a: 0.0, b: 1.0 }
    }

    pub fn projective(dim: usize) -> Result<Self> {
        if dim < 2 {
            return usage("projective space needs dimension >= 2");
        }
        Ok(StateSpace::Projective { dim })
    }

    /// Whether `x` is a valid point of this space.
    pub fn contains(&self, x: &Point) -> bool {
        match (self, x) {
            (StateSpace::Interval { a, b }, Point::Real(v)) => *a <= *v && *v <= *b,
            (StateSpace::Circle, Point::Circle(v)) => (0.0..1.0).contains(v),
            (StateSpace::Projective { dim }, Point::Direction(v)) => {
                v.len() == *dim
                    && (v.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs() <= UNIT_TOL
            }
            _ => false,
        }
    }

    pub fn check(&self, x: &Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            usage(format!("point {x:?} is not in {self:?}"))
        }
    }

    /// Builds a point of this space from raw coordinates.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        let p = match (self, coords) {
            (StateSpace::Interval { .. }, [x]) => Point::Real(*x),
            (StateSpace::Circle, [x]) => Point::circle(*x),
            (StateSpace::Projective { dim }, v) if v.len() == *dim => Point::direction(v.to_vec())?,
            _ => {
                return usage(format!(
                    "{} coordinate(s) do not describe a point of {self:?}",
                    coords.len()
                ))
            }
        };
        self.check(&p)?;
        Ok(p)
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        match (self, x, y) {
            (StateSpace::Interval { .. }, Point::Real(u), Point::Real(v)) => Ok((u - v).abs()),
            (StateSpace::Circle, Point::Circle(u), Point::Circle(v)) => Ok(circle_distance(*u, *v)),
            (StateSpace::Projective { dim }, Point::Direction(u), Point::Direction(v))
                if u.len() == *dim && v.len() == *dim =>
            {
                Ok(wedge_norm(u, v))
            }
            _ => Err(Error::Usage(format!(
                "points {x:?} and {y:?} do not both belong to {self:?}"
            ))),
        }
    }

    /// Distance for points already known to belong to this space.
    #[inline]
    pub(crate) fn dist_unchecked(&self, x: &Point, y: &Point) -> f64 {
        match (x, y) {
            (Point::Real(u), Point::Real(v)) => (u - v).abs(),
            (Point::Circle(u), Point::Circle(v)) => circle_distance(*u, *v),
            (Point::Direction(u), Point::Direction(v)) => wedge_norm(u, v),
            _ => f64::NAN,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            StateSpace::Interval { a, b } => b - a,
            StateSpace::Circle => 0.5,
            StateSpace::Projective { .. } => 1.0,
        }
    }

    /// Whether distances reduce to a function of one scalar coordinate.
    pub fn is_scalar(&self) -> bool {
        !matches!(self, StateSpace::Projective { .. })
    }

    /// A reference point: the interval midpoint, circle origin or `e1`.
    pub fn origin(&self) -> Point {
        match *self {
            StateSpace::Interval { a, b } => Point::Real(0.5 * (a + b)),
            StateSpace::Circle => Point::Circle(0.0),
            StateSpace::Projective { dim } => {
                let mut v = vec![0.0; dim];
                v[0] = 1.0;
                Point::Direction(v)
            }
        }
    }

    /// Deterministic evenly spread points covering the space.
    ///
    /// Interval: `resolution` points including both endpoints. Circle:
    /// `k / resolution`. Projective line: angles `k pi / resolution`.
    /// Higher projective spaces: Halton points on the sphere.
    pub fn grid(&self, resolution: usize) -> Result<Vec<Point>> {
        if resolution < 2 {
            return usage("grid resolution must be at least 2");
        }
        let r = resolution as f64;
        Ok(match *self {
            StateSpace::Interval { a, b } => (0..resolution)
                .map(|k| {
                    if k + 1 == resolution {
                        Point::Real(b)
                    } else {
                        Point::Real(a + (b - a) * k as f64 / (r - 1.0))
                    }
                })
                .collect(),
            StateSpace::Circle => (0..resolution)
                .map(|k| Point::Circle(k as f64 / r))
                .collect(),
            StateSpace::Projective { dim: 2 } => (0..resolution)
                .map(|k| {
                    let phi = std::f64::consts::PI * k as f64 / r;
                    let (s, c) = phi.sin_cos();
                    // Exact axes at multiples of pi/2.
                    let (c, s) = if 2 * k == resolution {
                        (0.0, 1.0)
                    } else {
                        (c, s)
                    };
                    Point::direction(vec![c, s]).expect("unit vector")
                })
                .collect(),
            StateSpace::Projective { dim } => halton_directions(dim, resolution),
        })
    }
}

#[inline]
pub(crate) fn circle_distance(u: f64, v: f64) -> f64 {
    let d = (u - v).abs();
    d.min(1.0 - d)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn halton_directions(dim: usize, count: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let v: Vec<f64> = (0..dim)
            .map(|j| 2.0 * radical_inverse(i, PRIMES[j % PRIMES.len()] + 0) - 1.0)
            .collect();
        i += 1;
        let n2: f64 = v.iter().map(|c| c * c).sum();
        if n2 <= 1.0 && n2 > 1e-6 {
            out.push(Point::direction(v).expect("nonzero"));
        }
    }
    out
}

/// One closed piece of a [`RegionSet`]: an interval `[lo, hi]` on the line or
/// the counter-clockwise arc from `lo` to `hi` on the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionPiece {
    pub lo: f64,
    pub hi: f64,
    pub grid: Vec<Point>,
}

impl RegionPiece {
    fn arc_len(&self) -> f64 {
        if self.hi >= self.lo {
            self.hi - self.lo
        } else {
            1.0 - self.lo + self.hi
        }
    }

    pub fn contains(&self, space: &StateSpace, x: &Point) -> bool {
        match (space, x) {
            (StateSpace::Interval { .. }, Point::Real(v)) => self.lo <= *v && *v <= self.hi,
            (StateSpace::Circle, Point::Circle(v)) => {
                let off = wrap_unit(v - self.lo);
                off <= self.arc_len() + 1e-15
            }
            _ => false,
        }
    }
}

/// Pairwise disjoint closed pieces, each with a grid of representatives.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSet {
    space: StateSpace,
    pieces: Vec<RegionPiece>,
}

impl RegionSet {
    /// `bounds` lists `(lo, hi)` per piece; each piece gets `resolution`
    /// evenly spaced points including both ends.
    pub fn new(space: StateSpace, bounds: &[(f64, f64)], resolution: usize) -> Result<Self> {
        if bounds.is_empty() {
            return usage("region set needs at least one piece");
        }
        if resolution < 2 {
            return usage("region grid resolution must be at least 2");
        }
        let mut pieces = Vec::with_capacity(bounds.len());
        for &(lo, hi) in bounds {
            let piece = match space {
                StateSpace::Interval { a, b } => {
                    if !(a <= lo && lo <= hi && hi <= b) {
                        return usage(format!("piece [{lo}, {hi}] is not inside [{a}, {b}]"));
                    }
                    let grid = (0..resolution)
                        .map(|k| {
                            let s = k as f64 / (resolution - 1) as f64;
                            Point::Real(if k + 1 == resolution {
                                hi
                            } else {
                                lo + (hi - lo) * s
                            })
                        })
                        .collect();
                    RegionPiece { lo, hi, grid }
                }
                StateSpace::Circle => {
                    let (lo, hi) = (wrap_unit(lo), wrap_unit(hi));
                    let mut piece = RegionPiece {
                        lo,
                        hi,
                        grid: Vec::new(),
                    };
                    let len = piece.arc_len();
                    piece.grid = (0..resolution)
                        .map(|k| Point::circle(lo + len * k as f64 / (resolution - 1) as f64))
                        .collect();
                    piece
                }
                StateSpace::Projective { .. } => {
                    return Err(Error::Unsupported("region sets on projective space".into()))
                }
            };
            pieces.push(piece);
        }
        for i in 0..pieces.len() {
            for j in (i + 1)..pieces.len() {
                let (p, q) = (&pieces[i], &pieces[j]);
                let touches = |r: &RegionPiece, s: &RegionPiece| {
                    let ends = match space {
                        StateSpace::Circle => [Point::Circle(s.lo), Point::Circle(s.hi)],
                        _ => [Point::Real(s.lo), Point::Real(s.hi)],
                    };
                    ends.iter().any(|e| r.contains(&space, e))
                };
                if touches(p, q) || touches(q, p) {
                    return usage(format!("region pieces {i} and {j} intersect"));
                }
            }
        }
        Ok(RegionSet { space, pieces })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn pieces(&self) -> &[RegionPiece] {
        &self.pieces
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(i: usize, m: usize) -> Point {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        Point::direction(v).unwrap()
    }

    #[test]
    fn distance_examples() {
        let c = StateSpace::Circle;
        assert!(
            (c.distance(&Point::circle(0.1), &Point::circle(0.9))
                .unwrap()
                - 0.2)
                .abs()
                < 1e-15
        );
        let p = StateSpace::projective(2).unwrap();
        assert_eq!(p.distance(&e(0, 2), &e(1, 2)).unwrap(), 1.0);
        let i = StateSpace::unit_interval();
        assert_eq!(
            i.distance(&Point::real(0.25), &Point::real(0.75)).unwrap(),
            0.5
        );
    }

    #[test]
    fn mismatched_kinds_are_usage_errors() {
        let i = StateSpace::unit_interval();
        assert!(matches!(
            i.distance(&Point::real(0.1), &Point::circle(0.2)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn diameters() {
        assert_eq!(StateSpace::unit_interval().diameter(), 1.0);
        assert_eq!(StateSpace::Circle.diameter(), 0.5);
        assert_eq!(StateSpace::projective(3).unwrap().diameter(), 1.0);
    }

    #[test]
    fn grid_examples() {
        let g = StateSpace::unit_interval().grid(5).unwrap();
        assert_eq!(
            g.iter().map(|p| p.first()).collect::<Vec<_>>(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        let g = StateSpace::Circle.grid(4).unwrap();
        assert_eq!(
            g.iter().map(|p| p.first()).collect::<Vec<_>>(),
            vec![0.0, 0.25, 0.5, 0.75]
        );
        let g = StateSpace::projective(2).unwrap().grid(2).unwrap();
        assert_eq!(g, vec![e(0, 2), e(1, 2)]);
        assert!(StateSpace::Circle.grid(1).is_err());
    }

    #[test]
    fn grid_is_deterministic_and_in_space() {
        for s in [
            StateSpace::unit_interval(),
            StateSpace::Circle,
            StateSpace::projective(2).unwrap(),
            StateSpace::projective(4).unwrap(),
        ] {
            let a = s.grid(37).unwrap();
            assert_eq!(a, s.grid(37).unwrap());
            assert_eq!(a.len(), 37);
            assert!(a.iter().all(|p| s.contains(p)));
        }
    }

    #[test]
    fn grid_spacing_bound() {
        for (s, res) in [(StateSpace::unit_interval(), 11), (StateSpace::Circle, 16)] {
            let g = s.grid(res).unwrap();
            for (i, p) in g.iter().enumerate() {
                let nearest = g
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| s.distance(p, q).unwrap())
                    .fold(f64::INFINITY, f64::min);
                // The circle grid k/res has spacing 1/res = 2 diam/res.
                let bound = match s {
                    StateSpace::Circle => 1.0 / res as f64,
                    _ => s.diameter() / (res - 1) as f64,
                };
                assert!(nearest <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn antipodes_are_identified() {
        let p = StateSpace::projective(3).unwrap();
        let x = Point::direction(vec![0.3, -0.4, 0.5]).unwrap();
        let y = Point::direction(vec![-0.3, 0.4, -0.5]).unwrap();
        assert_eq!(x, y);
        assert_eq!(p.distance(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn region_pieces_must_be_disjoint() {
        let s = StateSpace::unit_interval();
        assert!(RegionSet::new(s, &[(0.0, 0.3), (0.5, 1.0)], 4).is_ok());
        assert!(RegionSet::new(s, &[(0.0, 0.6), (0.5, 1.0)], 4).is_err());
        let c = StateSpace::Circle;
        assert!(RegionSet::new(c, &[(0.9, 0.1), (0.4, 0.6)], 4).is_ok());
        assert!(RegionSet::new(c, &[(0.9, 0.1), (0.05, 0.3)], 4).is_err());
        let r = RegionSet::new(c, &[(0.9, 0.1)], 5).unwrap();
        assert!(r.pieces()[0]
            .grid
            .iter()
            .all(|p| r.pieces()[0].contains(&c, p)));
    }

    fn arb_dir(m: usize) -> impl Strategy<Value = Point> {
        proptest::collection::vec(-1.0f64..1.0, m)
            .prop_filter("nonzero", |v| v.iter().map(|c| c * c).sum::<f64>() > 1e-6)
            .prop_map(|v| Point::direction(v).unwrap())
    }

    proptest! {
        #[test]
        fn interval_metric_axioms(x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
            let s = StateSpace::unit_interval();
            let (x, y, z) = (Point::real(x), Point::real(y), Point::real(z));
            let d = |a: &Point, b: &Point| s.distance(a, b).unwrap();
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
            prop_assert_eq!(d(&x, &y), d(&y, &x));
            prop_assert_eq!(d(&x, &x), 0.0);
            prop_assert!(d(&x, &y) <= s.diameter());
        }

        #[test]
        fn circle_metric_axioms(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
            let s = StateSpace::Circle;
            let (x, y, z) = (Point::circle(x), Point::circle(y), Point::circle(z));
            let d = |a: &Point, b: &Point| s.distance(a, b).unwrap();
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
            prop_assert_eq!(d(&x, &y), d(&y, &x));
            prop_assert_eq!(d(&x, &x), 0.0);
            prop_assert!(d(&x, &y) <= 0.5);
        }

        #[test]
        fn projective_metric_axioms(x in arb_dir(3), y in arb_dir(3), z in arb_dir(3)) {
            let s = StateSpace::projective(3).unwrap();
            prop_assert!(s.contains(&x));
            let d = |a: &Point, b: &Point| s.distance(a, b).unwrap();
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
            prop_assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-15);
            prop_assert!(d(&x, &x) <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&d(&x, &y)));
        }
    }
}
