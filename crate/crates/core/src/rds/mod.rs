//! Map families, the driving law of an i.i.d. random composition, and the
//! constants `|G|_inf` and `|G|_rho` measuring the spread of its support.

mod stream;

pub use stream::SeededStream;

use std::borrow::Cow;

use crate::error::{usage, Error, Result};
use crate::spaces::{canonicalize, wrap_unit, Point, StateSpace};

const DET_TOL: f64 = 1e-9;
const WEIGHT_TOL: f64 = 1e-12;
const SINGULAR: f64 = 1e-300;

/// Square real matrix stored row-major, with determinant one.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim < 2 || data.len() != dim * dim {
            return usage(format!(
                "matrix needs dim >= 2 and dim^2 entries, got dim {dim} with {} entries",
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return usage("matrix entries must be finite");
        }
        let m = Matrix { dim, data };
        let det = m.determinant();
        if (det - 1.0).abs() > DET_TOL {
            return usage(format!("matrix determinant must be 1, got {det}"));
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return usage("matrix rows must form a square");
        }
        Matrix::new(dim, rows.concat())
    }

    pub fn diag2(s: f64) -> Result<Self> {
        Matrix::new(2, vec![s, 0.0, 0.0, 1.0 / s])
    }

    pub fn rotation(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Matrix {
            dim: 2,
            data: vec![c, -s, s, c],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Matrix { dim, data }
    }

    /// Product without the determinant check, for accumulating long products.
    pub(crate) fn raw(dim: usize, data: Vec<f64>) -> Self {
        Matrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn determinant(&self) -> f64 {
        if self.dim == 2 {
            self.data[0] * self.data[3] - self.data[1] * self.data[2]
        } else {
            self.to_nalgebra().determinant()
        }
    }

    /// `self * rhs`.
    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                for j in 0..d {
                    out[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        Matrix { dim: d, data: out }
    }

    #[inline]
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate().take(d) {
            *o = self.data[i * d..(i + 1) * d]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn operator_norm(&self) -> f64 {
        self.to_nalgebra().singular_values().max()
    }

    /// `max(||A||, ||A^-1||)`.
    pub fn norm_cap(&self) -> Result<f64> {
        let sv = self.to_nalgebra().singular_values();
        let min = sv.min();
        if min <= 0.0 {
            return Err(Error::Usage("singular matrix".into()));
        }
        Ok(sv.max().max(1.0 / min))
    }
}

/// One map of the random composition.
#[derive(Clone, Debug, PartialEq)]
pub enum MapDescriptor {
    /// `x / (1 + alpha x)` on `[0, 1]`, `alpha >= 1`.
    MoebiusDecay { alpha: f64 },
    /// `x - x^alpha` on `[0, 1]`, `alpha` in `[5/4, 3/2]`.
    PolynomialDecay { alpha: f64 },
    /// `slope * x + offset`; on the circle only rotations (`slope = 1`).
    Affine { slope: f64, offset: f64 },
    /// `Ax / |Ax|` on projective space, or for 2x2 matrices the induced map
    /// of the circle through the chart `theta -> (cos pi theta, sin pi theta)`.
    ProjectiveAction(Matrix),
}

impl MapDescriptor {
    pub fn moebius(alpha: f64) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return usage(format!("Moebius decay needs alpha >= 1, got {alpha}"));
        }
        Ok(MapDescriptor::MoebiusDecay { alpha })
    }

    pub fn polynomial(alpha: f64) -> Result<Self> {
        if !(1.25..=1.5).contains(&alpha) {
            return usage(format!(
                "polynomial decay needs alpha in [1.25, 1.5], got {alpha}"
            ));
        }
        Ok(MapDescriptor::PolynomialDecay { alpha })
    }

    pub fn affine(slope: f64, offset: f64) -> Result<Self> {
        if !(slope.is_finite() && offset.is_finite()) {
            return usage("affine coefficients must be finite");
        }
        Ok(MapDescriptor::Affine { slope, offset })
    }

    pub fn projective(a: Matrix) -> Self {
        MapDescriptor::ProjectiveAction(a)
    }

    /// Checks that this map sends `space` into itself.
    pub fn check_space(&self, space: &StateSpace) -> Result<()> {
        let unit = StateSpace::Interval { a: 0.0, b: 1.0 };
        match (self, space) {
            (MapDescriptor::MoebiusDecay { .. } | MapDescriptor::PolynomialDecay { .. }, s)
                if *s == unit =>
            {
                Ok(())
            }
            (MapDescriptor::MoebiusDecay { .. } | MapDescriptor::PolynomialDecay { .. }, _) => {
                usage("decay families act on the interval [0, 1]")
            }
            (MapDescriptor::Affine { slope, offset }, StateSpace::Interval { a, b }) => {
                let lo = (slope * a + offset).min(slope * b + offset);
                let hi = (slope * a + offset).max(slope * b + offset);
                if lo < a - 1e-12 || hi > b + 1e-12 {
                    return usage(format!(
                        "affine map ({slope}, {offset}) does not preserve [{a}, {b}]"
                    ));
                }
                Ok(())
            }
            (MapDescriptor::Affine { slope, .. }, StateSpace::Circle) => {
                if *slope != 1.0 {
                    return usage("affine maps on the circle must be rotations (slope 1)");
                }
                Ok(())
            }
            (MapDescriptor::ProjectiveAction(m), StateSpace::Projective { dim })
                if m.dim() == *dim =>
            {
                Ok(())
            }
            (MapDescriptor::ProjectiveAction(m), StateSpace::Circle) if m.dim() == 2 => Ok(()),
            (MapDescriptor::ProjectiveAction(m), _) => usage(format!(
                "{}x{} matrix does not act on {space:?}",
                m.dim(),
                m.dim()
            )),
            (MapDescriptor::Affine { .. }, StateSpace::Projective { .. }) => {
                usage("affine maps do not act on projective space")
            }
        }
    }

    /// Image of an interval coordinate.
    #[inline]
    pub fn apply_real(&self, x: f64) -> f64 {
        match self {
            MapDescriptor::MoebiusDecay { alpha } => x / (1.0 + alpha * x),
            MapDescriptor::PolynomialDecay { alpha } => x - x.powf(*alpha),
            MapDescriptor::Affine { slope, offset } => slope * x + offset,
            MapDescriptor::ProjectiveAction(_) => f64::NAN,
        }
    }

    /// Image of a circle coordinate.
    #[inline]
    pub fn apply_circle(&self, theta: f64) -> f64 {
        match self {
            MapDescriptor::Affine { offset, .. } => wrap_unit(theta + offset),
            MapDescriptor::ProjectiveAction(a) => {
                let (s, c) = (std::f64::consts::PI * theta).sin_cos();
                let w0 = a.data[0] * c + a.data[1] * s;
                let w1 = a.data[2] * c + a.data[3] * s;
                wrap_unit(w1.atan2(w0) * std::f64::consts::FRAC_1_PI)
            }
            _ => f64::NAN,
        }
    }

    /// In-place image of a unit vector, renormalized with canonical sign.
    /// Returns `ln |Av|`.
    pub fn apply_direction_in_place(&self, v: &mut [f64], scratch: &mut [f64]) -> Result<f64> {
        let MapDescriptor::ProjectiveAction(a) = self else {
            return Err(Error::Unsupported(
                "only matrices act on projective space".into(),
            ));
        };
        a.mul_vec_into(v, scratch);
        let norm = scratch.iter().map(|c| c * c).sum::<f64>().sqrt();
        v.copy_from_slice(scratch);
        canonicalize(v)?;
        Ok(norm.ln())
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        match (self, x) {
            (MapDescriptor::ProjectiveAction(_), Point::Real(_)) => Err(Error::Unsupported(
                "matrices do not act on the interval".into(),
            )),
            (_, Point::Real(v)) => Ok(Point::Real(self.apply_real(*v))),
            (
                MapDescriptor::Affine { .. } | MapDescriptor::ProjectiveAction(_),
                Point::Circle(t),
            ) => Ok(Point::Circle(self.apply_circle(*t))),
            (_, Point::Circle(_)) => Err(Error::Unsupported(
                "decay families do not act on the circle".into(),
            )),
            (_, Point::Direction(v)) => {
                let mut v = v.clone();
                let mut scratch = vec![0.0; v.len()];
                self.apply_direction_in_place(&mut v, &mut scratch)?;
                Ok(Point::Direction(v))
            }
        }
    }

    /// Signed derivative of a one-dimensional map (interval or circle chart).
    pub fn derivative(&self, x: &Point) -> Result<f64> {
        match (self, x) {
            (MapDescriptor::MoebiusDecay { alpha }, Point::Real(v)) => {
                Ok((1.0 + alpha * v).powi(-2))
            }
            (MapDescriptor::PolynomialDecay { alpha }, Point::Real(v)) => Ok(if *v == 0.0 {
                1.0
            } else {
                1.0 - alpha * v.powf(alpha - 1.0)
            }),
            (MapDescriptor::Affine { slope, .. }, Point::Real(_) | Point::Circle(_)) => Ok(*slope),
            (MapDescriptor::ProjectiveAction(a), Point::Circle(t)) if a.dim() == 2 => {
                let (s, c) = (std::f64::consts::PI * t).sin_cos();
                let w0 = a.data[0] * c + a.data[1] * s;
                let w1 = a.data[2] * c + a.data[3] * s;
                Ok(a.determinant() / (w0 * w0 + w1 * w1))
            }
            _ => Err(Error::Unsupported(format!(
                "no one-dimensional derivative of {self:?} at {x:?}"
            ))),
        }
    }

    /// `ln |f'(x)|` for one-dimensional maps, `ln |Ax|` for a unit vector.
    pub fn log_derivative(&self, x: &Point) -> Result<f64> {
        let value = match (self, x) {
            (MapDescriptor::MoebiusDecay { alpha }, Point::Real(v)) => {
                return Ok(-2.0 * (alpha * v).ln_1p())
            }
            (MapDescriptor::ProjectiveAction(a), Point::Direction(v)) => {
                let w = a.mul_vec(v);
                w.iter().map(|c| c * c).sum::<f64>().sqrt()
            }
            (MapDescriptor::ProjectiveAction(a), Point::Circle(t)) => {
                let (s, c) = (std::f64::consts::PI * t).sin_cos();
                let w0 = a.data[0] * c + a.data[1] * s;
                let w1 = a.data[2] * c + a.data[3] * s;
                return Ok(-(w0 * w0 + w1 * w1).ln());
            }
            _ => self.derivative(x)?.abs(),
        };
        if value < SINGULAR {
            return Err(Error::SingularDerivative {
                at: format!("{x:?}"),
                value,
            });
        }
        Ok(value.ln())
    }

    fn is_differentiable_1d(&self) -> bool {
        match self {
            MapDescriptor::ProjectiveAction(a) => a.dim() == 2,
            _ => true,
        }
    }
}

/// Parametric map families with a scalar parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamFamily {
    MoebiusDecay,
    PolynomialDecay,
    /// `theta -> theta + p` on the circle.
    Rotation,
}

impl ParamFamily {
    pub fn build(&self, p: f64) -> Result<MapDescriptor> {
        match self {
            ParamFamily::MoebiusDecay => MapDescriptor::moebius(p),
            ParamFamily::PolynomialDecay => MapDescriptor::polynomial(p),
            ParamFamily::Rotation => MapDescriptor::affine(1.0, p),
        }
    }

    #[inline]
    fn build_unchecked(&self, p: f64) -> MapDescriptor {
        match self {
            ParamFamily::MoebiusDecay => MapDescriptor::MoebiusDecay { alpha: p },
            ParamFamily::PolynomialDecay => MapDescriptor::PolynomialDecay { alpha: p },
            ParamFamily::Rotation => MapDescriptor::Affine {
                slope: 1.0,
                offset: p,
            },
        }
    }
}

/// Law of the scalar parameter of a [`ParamFamily`].
#[derive(Clone, Debug, PartialEq)]
pub enum ParamSampler {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Discrete {
        values: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

impl ParamSampler {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return usage(format!("uniform sampler needs lo <= hi, got [{lo}, {hi}]"));
        }
        Ok(ParamSampler::Uniform { lo, hi })
    }

    pub fn discrete(values: Vec<f64>, weights: &[f64]) -> Result<Self> {
        if values.len() != weights.len() {
            return usage("discrete sampler needs one weight per value");
        }
        Ok(ParamSampler::Discrete {
            values,
            cumulative: cumulative_weights(weights)?,
        })
    }

    fn support(&self, resolution: usize) -> Vec<f64> {
        match self {
            ParamSampler::Uniform { lo, hi } if lo == hi => vec![*lo],
            ParamSampler::Uniform { lo, hi } => {
                let r = resolution.max(2);
                (0..r)
                    .map(|k| lo + (hi - lo) * k as f64 / (r - 1) as f64)
                    .collect()
            }
            ParamSampler::Discrete { values, .. } => values.clone(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ParamSampler::Uniform { lo, hi } => 0.5 * (lo + hi),
            ParamSampler::Discrete { values, cumulative } => {
                let mut prev = 0.0;
                values
                    .iter()
                    .zip(cumulative)
                    .map(|(v, c)| {
                        let w = c - prev;
                        prev = *c;
                        v * w
                    })
                    .sum()
            }
        }
    }
}

fn cumulative_weights(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return usage("a driving law needs at least one atom");
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return usage("atom weights must be positive");
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return usage(format!("atom weights sum to {total}, not 1"));
    }
    let mut acc = 0.0;
    let mut cum: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    *cum.last_mut().expect("nonempty") = 1.0;
    Ok(cum)
}

#[inline]
fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .partition_point(|c| *c <= u)
        .min(cumulative.len() - 1)
}

/// Record of one draw from a [`DrivingMeasure`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MapDraw {
    Atom(usize),
    Param(f64),
}

#[derive(Clone, Debug, PartialEq)]
enum Law {
    Finite {
        atoms: Vec<MapDescriptor>,
        weights: Vec<f64>,
        cumulative: Vec<f64>,
    },
    Parametric {
        family: ParamFamily,
        sampler: ParamSampler,
    },
}

/// The law `nu` of the i.i.d. maps, bound to the space they act on.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivingMeasure {
    space: StateSpace,
    law: Law,
}

impl DrivingMeasure {
    pub fn finite(space: StateSpace, atoms: Vec<(MapDescriptor, f64)>) -> Result<Self> {
        let (atoms, weights): (Vec<_>, Vec<_>) = atoms.into_iter().unzip();
        let cumulative = cumulative_weights(&weights)?;
        for f in &atoms {
            f.check_space(&space)?;
        }
        Ok(DrivingMeasure {
            space,
            law: Law::Finite {
                atoms,
                weights,
                cumulative,
            },
        })
    }

    /// Equal weights on the given maps.
    pub fn uniform(space: StateSpace, atoms: Vec<MapDescriptor>) -> Result<Self> {
        let w = 1.0 / atoms.len().max(1) as f64;
        let n = atoms.len();
        let mut weighted: Vec<(MapDescriptor, f64)> = atoms.into_iter().map(|f| (f, w)).collect();
        // Make the weights sum to one exactly.
        if let Some(last) = weighted.last_mut() {
            last.1 = 1.0 - w * (n - 1) as f64;
        }
        DrivingMeasure::finite(space, weighted)
    }

    pub fn dirac(space: StateSpace, f: MapDescriptor) -> Result<Self> {
        DrivingMeasure::finite(space, vec![(f, 1.0)])
    }

    pub fn parametric(
        space: StateSpace,
        family: ParamFamily,
        sampler: ParamSampler,
    ) -> Result<Self> {
        for p in sampler.support(2) {
            family.build(p)?.check_space(&space)?;
        }
        Ok(DrivingMeasure {
            space,
            law: Law::Parametric { family, sampler },
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.law, Law::Finite { .. })
    }

    /// Atoms and weights of a finite law.
    pub fn atoms(&self) -> Option<(&[MapDescriptor], &[f64])> {
        match &self.law {
            Law::Finite { atoms, weights, .. } => Some((atoms, weights)),
            Law::Parametric { .. } => None,
        }
    }

    pub fn parametric_parts(&self) -> Option<(ParamFamily, &ParamSampler)> {
        match &self.law {
            Law::Parametric { family, sampler } => Some((*family, sampler)),
            Law::Finite { .. } => None,
        }
    }

    /// Draws the next map index or parameter.
    #[inline]
    pub fn draw(&self, stream: &mut SeededStream) -> MapDraw {
        match &self.law {
            Law::Finite { cumulative, .. } => {
                if cumulative.len() == 1 {
                    MapDraw::Atom(0)
                } else {
                    MapDraw::Atom(pick(cumulative, stream.unit()))
                }
            }
            Law::Parametric { sampler, .. } => match sampler {
                ParamSampler::Uniform { lo, hi } => MapDraw::Param(lo + (hi - lo) * stream.unit()),
                ParamSampler::Discrete { values, cumulative } => {
                    MapDraw::Param(values[pick(cumulative, stream.unit())])
                }
            },
        }
    }

    /// The map selected by a draw.
    #[inline]
    pub fn resolve(&self, draw: MapDraw) -> Cow<'_, MapDescriptor> {
        match (&self.law, draw) {
            (Law::Finite { atoms, .. }, MapDraw::Atom(i)) => Cow::Borrowed(&atoms[i]),
            (Law::Parametric { family, .. }, MapDraw::Param(p)) => {
                Cow::Owned(family.build_unchecked(p))
            }
            _ => panic!("draw {draw:?} does not belong to this law"),
        }
    }

    /// One draw resolved to a map.
    pub fn sample_map(&self, stream: &mut SeededStream) -> MapDescriptor {
        self.resolve(self.draw(stream)).into_owned()
    }

    /// Finite support used for the diameter constants. Uniform parameter
    /// ranges are replaced by `param_resolution` evenly spaced values.
    pub fn support_atoms(&self, param_resolution: usize) -> Vec<MapDescriptor> {
        match &self.law {
            Law::Finite { atoms, .. } => atoms.clone(),
            Law::Parametric { family, sampler } => sampler
                .support(param_resolution)
                .into_iter()
                .map(|p| family.build_unchecked(p))
                .collect(),
        }
    }

    /// Common dimension of a matrix law.
    pub fn matrix_dim(&self) -> Result<usize> {
        let atoms = self.support_atoms(2);
        let mut dim = None;
        for f in &atoms {
            match f {
                MapDescriptor::ProjectiveAction(a) => {
                    if dim.is_some_and(|d| d != a.dim()) {
                        return usage("matrix atoms have different dimensions");
                    }
                    dim = Some(a.dim());
                }
                _ => return usage("law is not a matrix law"),
            }
        }
        dim.ok_or_else(|| Error::Usage("empty law".into()))
    }

    /// Extremes over the support of `min_x |f'(x)|` and `max_x |f'(x)|` on
    /// the grid: returns `(min over maps of min, max over maps of max)`.
    pub fn derivative_extremes(&self, resolution: usize) -> Result<(f64, f64)> {
        let grid = self.space.grid(resolution)?;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for f in self.support_atoms(resolution) {
            for x in &grid {
                let d = f.derivative(x)?.abs();
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        Ok((lo, hi))
    }
}

/// Grid lower bound for `|G|_inf = sup_{f,g} sup_x d(f(x), g(x))`.
///
/// Parametric laws are discretized with `resolution` parameter values.
pub fn gee_diameter_sup(nu: &DrivingMeasure, space: &StateSpace, resolution: usize) -> Result<f64> {
    let maps = nu.support_atoms(resolution);
    let grid = space.grid(resolution)?;
    let images: Vec<Vec<Point>> = maps
        .iter()
        .map(|f| grid.iter().map(|x| f.apply(x)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut best: f64 = 0.0;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            for (p, q) in images[i].iter().zip(&images[j]) {
                best = best.max(space.distance(p, q)?);
            }
        }
    }
    Ok(best)
}

/// Grid lower bound for `|G|_rho` with `rho(f, g) = sup_x d(f(x), g(x)) + |f'(x) - g'(x)|`.
pub fn gee_diameter_c1(nu: &DrivingMeasure, space: &StateSpace, resolution: usize) -> Result<f64> {
    if !space.is_scalar() {
        return Err(Error::Unsupported(
            "C1 diameter needs a one-dimensional space".into(),
        ));
    }
    let maps = nu.support_atoms(resolution);
    if let Some(f) = maps.iter().find(|f| !f.is_differentiable_1d()) {
        return Err(Error::Unsupported(format!(
            "{f:?} has no one-dimensional derivative"
        )));
    }
    let grid = space.grid(resolution)?;
    let images: Vec<Vec<(Point, f64)>> = maps
        .iter()
        .map(|f| {
            grid.iter()
                .map(|x| Ok((f.apply(x)?, f.derivative(x)?)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let mut best: f64 = 0.0;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            for ((p, dp), (q, dq)) in images[i].iter().zip(&images[j]) {
                best = best.max(space.distance(p, q)? + (dp - dq).abs());
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

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

    #[test]
    fn apply_examples() {
        let m = MapDescriptor::moebius(1.0).unwrap();
        assert_eq!(m.apply(&Point::real(1.0)).unwrap(), Point::real(0.5));
        let p = MapDescriptor::polynomial(1.5).unwrap();
        assert_eq!(p.apply(&Point::real(0.0)).unwrap(), Point::real(0.0));
        let a = MapDescriptor::projective(Matrix::diag2(2.0).unwrap());
        let e1 = Point::direction(vec![1.0, 0.0]).unwrap();
        assert_eq!(a.apply(&e1).unwrap(), e1);
    }

    #[test]
    fn log_derivative_examples() {
        let a = MapDescriptor::affine(0.5, 0.0).unwrap();
        assert_eq!(a.log_derivative(&Point::real(0.3)).unwrap(), 0.5f64.ln());
        let p = MapDescriptor::projective(Matrix::diag2(2.0).unwrap());
        let e1 = Point::direction(vec![1.0, 0.0]).unwrap();
        assert!((p.log_derivative(&e1).unwrap() - 2f64.ln()).abs() < 1e-15);
        let m = MapDescriptor::moebius(1.0).unwrap();
        assert_eq!(m.log_derivative(&Point::real(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn singular_derivative_is_reported() {
        let z = MapDescriptor::affine(0.0, 0.5).unwrap();
        assert!(matches!(
            z.log_derivative(&Point::real(0.2)),
            Err(Error::SingularDerivative { .. })
        ));
    }

    #[test]
    fn polynomial_derivative_at_zero_is_one() {
        let p = MapDescriptor::polynomial(1.25).unwrap();
        assert_eq!(p.derivative(&Point::real(0.0)).unwrap(), 1.0);
    }

    #[test]
    fn circle_chart_of_hyperbolic_matrix() {
        let a = MapDescriptor::projective(Matrix::diag2(4.0).unwrap());
        let x = Point::circle(0.0);
        assert_eq!(a.apply(&x).unwrap(), x);
        assert!((a.derivative(&x).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        let y = Point::circle(0.5);
        assert!((a.apply(&y).unwrap().first() - 0.5).abs() < 1e-15);
        assert!((a.derivative(&y).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn parameter_validation() {
        assert!(MapDescriptor::moebius(0.5).is_err());
        assert!(MapDescriptor::polynomial(1.6).is_err());
        assert!(Matrix::new(2, vec![2.0, 0.0, 0.0, 1.0]).is_err());
        assert!(DrivingMeasure::finite(
            unit(),
            vec![(MapDescriptor::affine(0.5, 0.0).unwrap(), 0.7)]
        )
        .is_err());
        assert!(DrivingMeasure::dirac(unit(), MapDescriptor::affine(1.0, 0.5).unwrap()).is_err());
        assert!(
            DrivingMeasure::dirac(StateSpace::Circle, MapDescriptor::moebius(1.0).unwrap())
                .is_err()
        );
    }

    #[test]
    fn single_atom_always_drawn() {
        let nu = DrivingMeasure::dirac(unit(), MapDescriptor::moebius(1.0).unwrap()).unwrap();
        let mut s = SeededStream::new(0, 0);
        for _ in 0..100 {
            assert_eq!(
                nu.sample_map(&mut s),
                MapDescriptor::MoebiusDecay { alpha: 1.0 }
            );
        }
    }

    #[test]
    fn two_atom_frequency() {
        let nu = halving();
        let mut s = SeededStream::new(5, 0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| nu.draw(&mut s) == MapDraw::Atom(0))
            .count();
        // 3 sigma = 3 * sqrt(0.25 / n) ~ 0.0047
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn uniform_parameter_mean() {
        let nu = DrivingMeasure::parametric(
            unit(),
            ParamFamily::MoebiusDecay,
            ParamSampler::uniform(1.0, 2.0).unwrap(),
        )
        .unwrap();
        let mut s = SeededStream::new(9, 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            match nu.sample_map(&mut s) {
                MapDescriptor::MoebiusDecay { alpha } => {
                    assert!((1.0..=2.0).contains(&alpha));
                    sum += alpha;
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!((sum / n as f64 - 1.5).abs() < 0.01);
    }

    #[test]
    fn gee_sup_examples() {
        let moeb = DrivingMeasure::uniform(
            unit(),
            vec![
                MapDescriptor::moebius(1.0).unwrap(),
                MapDescriptor::moebius(2.0).unwrap(),
            ],
        )
        .unwrap();
        for res in [2, 17, 256] {
            let g = gee_diameter_sup(&moeb, &unit(), res).unwrap();
            assert!(g > 0.0 && g <= 0.5, "{g}");
        }
        let dirac = DrivingMeasure::dirac(unit(), MapDescriptor::moebius(1.0).unwrap()).unwrap();
        assert_eq!(gee_diameter_sup(&dirac, &unit(), 64).unwrap(), 0.0);
        assert_eq!(gee_diameter_sup(&halving(), &unit(), 64).unwrap(), 0.5);
    }

    #[test]
    fn gee_c1_examples() {
        let dirac = DrivingMeasure::dirac(unit(), MapDescriptor::moebius(1.0).unwrap()).unwrap();
        assert_eq!(gee_diameter_c1(&dirac, &unit(), 64).unwrap(), 0.0);
        assert_eq!(gee_diameter_c1(&halving(), &unit(), 64).unwrap(), 0.5);
        let two_slopes = DrivingMeasure::uniform(
            unit(),
            vec![
                MapDescriptor::affine(0.5, 0.0).unwrap(),
                MapDescriptor::affine(1.0 / 3.0, 0.0).unwrap(),
            ],
        )
        .unwrap();
        let g = gee_diameter_c1(&two_slopes, &unit(), 64).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-15, "{g}");
        let proj = DrivingMeasure::dirac(
            StateSpace::projective(3).unwrap(),
            MapDescriptor::projective(Matrix::identity(3)),
        )
        .unwrap();
        assert!(matches!(
            gee_diameter_c1(&proj, &StateSpace::projective(3).unwrap(), 8),
            Err(Error::Unsupported(_))
        ));
    }

    proptest! {
        #[test]
        fn moebius_composition_law(x in 0.0f64..=1.0, alphas in proptest::collection::vec(1.0f64..5.0, 0..60)) {
            let mut y = x;
            for a in &alphas {
                y = MapDescriptor::MoebiusDecay { alpha: *a }.apply_real(y);
            }
            let s: f64 = alphas.iter().sum();
            prop_assert!((y - x / (1.0 + s * x)).abs() <= 1e-12);
        }

        #[test]
        fn polynomial_orbit_decreases(x in 1e-6f64..=1.0, alpha in 1.25f64..=1.5) {
            let f = MapDescriptor::polynomial(alpha).unwrap();
            let mut y = x;
            for _ in 0..200 {
                let z = f.apply_real(y);
                prop_assert!(z < y && z > 0.0);
                y = z;
            }
        }

        #[test]
        fn projective_images_are_unit(v in proptest::collection::vec(-1.0f64..1.0, 3), phi in 0.0f64..6.3, s in 0.2f64..5.0) {
            prop_assume!(v.iter().map(|c| c * c).sum::<f64>() > 1e-6);
            let (sn, cs) = phi.sin_cos();
            // det = s * (1/s) * 1 for a scaled rotation block plus a fixed axis.
            let a = Matrix::new(3, vec![s * cs, -s * sn, 0.0, sn / s, cs / s, 0.0, 0.0, 0.0, 1.0]).unwrap();
            let x = Point::direction(v).unwrap();
            let y = MapDescriptor::projective(a).apply(&x).unwrap();
            let norm = y.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() <= 1e-12);
        }
    }
}
