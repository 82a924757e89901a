//! Trajectories of the fiber chain `X_n = f_n o ... o f_1 (X_0)`, coupled
//! multi-start runs under one noise realization, random matrix products,
//! and exact expectations over all words of a finite law.

use std::io::Write;

use crate::error::{usage, Error, Result};
use crate::rds::{DrivingMeasure, MapDescriptor, MapDraw, Matrix, SeededStream};
use crate::spaces::{Point, StateSpace};

/// Which optional per-step records to keep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RecordFlags {
    pub log_derivative: bool,
    pub draws: bool,
}

impl RecordFlags {
    pub const NONE: RecordFlags = RecordFlags {
        log_derivative: false,
        draws: false,
    };
    pub const ALL: RecordFlags = RecordFlags {
        log_derivative: true,
        draws: true,
    };
}

/// One realization `X_0, ..., X_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub space: StateSpace,
    pub points: Vec<Point>,
    /// Running sums `sum_{k<=j} ln|f_k'(X_{k-1})|`, one per step.
    pub log_derivative_sum: Option<Vec<f64>>,
    /// The drawn atoms or parameters, one per step.
    pub draws: Option<Vec<MapDraw>>,
}

impl Trajectory {
    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn last(&self) -> &Point {
        self.points.last().expect("trajectory has a start point")
    }

    /// Writes one row per step: `step`, the point coordinates and the
    /// cumulative log-derivative (`0` at step 0, empty when not recorded).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let width = self.points[0].coords().len();
        let cols: Vec<String> = if width == 1 {
            vec!["x".into()]
        } else {
            (0..width).map(|i| format!("x{i}")).collect()
        };
        writeln!(out, "step,{},log_derivative_sum", cols.join(","))?;
        for (k, p) in self.points.iter().enumerate() {
            let coords: Vec<String> = p.coords().iter().map(|c| format!("{c:.16e}")).collect();
            let ld = match &self.log_derivative_sum {
                Some(_) if k == 0 => format!("{:.16e}", 0.0),
                Some(l) => format!("{:.16e}", l[k - 1]),
                None => String::new(),
            };
            writeln!(out, "{k},{},{ld}", coords.join(","))?;
        }
        Ok(())
    }
}

/// Applies `f` to `x` in place and returns `ln|f'(x)|` (or `ln|Ax|` on
/// projective space) when `want_log` is set.
pub(crate) fn step_point(
    f: &MapDescriptor,
    x: &mut Point,
    scratch: &mut Vec<f64>,
    want_log: bool,
) -> Result<Option<f64>> {
    match x {
        Point::Real(v) => {
            let ld = if want_log {
                Some(f.log_derivative(&Point::Real(*v))?)
            } else {
                None
            };
            *v = f.apply_real(*v);
            Ok(ld)
        }
        Point::Circle(t) => {
            let ld = if want_log {
                Some(f.log_derivative(&Point::Circle(*t))?)
            } else {
                None
            };
            *t = f.apply_circle(*t);
            Ok(ld)
        }
        Point::Direction(v) => {
            scratch.resize(v.len(), 0.0);
            let ld = f.apply_direction_in_place(v, scratch)?;
            if want_log && ld.exp() < 1e-300 {
                return Err(Error::SingularDerivative {
                    at: format!("{v:?}"),
                    value: ld.exp(),
                });
            }
            Ok(want_log.then_some(ld))
        }
    }
}

/// Simulates `n` steps from `x0`, consuming one draw per step from `stream`.
pub fn simulate(
    nu: &DrivingMeasure,
    x0: &Point,
    n: usize,
    stream: &mut SeededStream,
    record: RecordFlags,
) -> Result<Trajectory> {
    nu.space().check(x0)?;
    let mut points = Vec::with_capacity(n + 1);
    points.push(x0.clone());
    let mut logs = record.log_derivative.then(|| Vec::with_capacity(n));
    let mut draws = record.draws.then(|| Vec::with_capacity(n));
    let mut x = x0.clone();
    let mut scratch = Vec::new();
    let mut acc = 0.0;
    for _ in 0..n {
        let d = nu.draw(stream);
        let f = nu.resolve(d);
        let ld = step_point(&f, &mut x, &mut scratch, record.log_derivative)?;
        if let (Some(l), Some(v)) = (logs.as_mut(), ld) {
            acc += v;
            l.push(acc);
        }
        if let Some(ds) = draws.as_mut() {
            ds.push(d);
        }
        points.push(x.clone());
    }
    Ok(Trajectory {
        space: *nu.space(),
        points,
        log_derivative_sum: logs,
        draws,
    })
}

/// Simulates every start under the same map sequence.
pub fn simulate_coupled(
    nu: &DrivingMeasure,
    starts: &[Point],
    n: usize,
    stream: &mut SeededStream,
) -> Result<Vec<Trajectory>> {
    simulate_coupled_with(nu, starts, n, stream, RecordFlags::NONE)
}

pub fn simulate_coupled_with(
    nu: &DrivingMeasure,
    starts: &[Point],
    n: usize,
    stream: &mut SeededStream,
    record: RecordFlags,
) -> Result<Vec<Trajectory>> {
    for x in starts {
        nu.space().check(x)?;
    }
    let mut trajs: Vec<Trajectory> = starts
        .iter()
        .map(|x| Trajectory {
            space: *nu.space(),
            points: {
                let mut v = Vec::with_capacity(n + 1);
                v.push(x.clone());
                v
            },
            log_derivative_sum: record.log_derivative.then(|| Vec::with_capacity(n)),
            draws: record.draws.then(|| Vec::with_capacity(n)),
        })
        .collect();
    let mut current: Vec<Point> = starts.to_vec();
    let mut acc = vec![0.0; starts.len()];
    let mut scratch = Vec::new();
    for _ in 0..n {
        let d = nu.draw(stream);
        let f = nu.resolve(d);
        for ((x, t), a) in current.iter_mut().zip(trajs.iter_mut()).zip(acc.iter_mut()) {
            let ld = step_point(&f, x, &mut scratch, record.log_derivative)?;
            if let (Some(l), Some(v)) = (t.log_derivative_sum.as_mut(), ld) {
                *a += v;
                l.push(*a);
            }
            if let Some(ds) = t.draws.as_mut() {
                ds.push(d);
            }
            t.points.push(x.clone());
        }
    }
    Ok(trajs)
}

/// Accumulated product `A_n ... A_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixProduct {
    pub matrix: Matrix,
    pub steps: usize,
}

/// Draws `n` matrices and multiplies them, newest on the left.
pub fn matrix_product(
    nu: &DrivingMeasure,
    n: usize,
    stream: &mut SeededStream,
) -> Result<MatrixProduct> {
    let dim = nu.matrix_dim()?;
    let mut acc = Matrix::identity(dim);
    for _ in 0..n {
        let f = nu.resolve(nu.draw(stream));
        let MapDescriptor::ProjectiveAction(a) = f.as_ref() else {
            return usage("law is not a matrix law");
        };
        acc = a.mul(&acc);
    }
    Ok(MatrixProduct {
        matrix: Matrix::raw(dim, acc.as_slice().to_vec()),
        steps: n,
    })
}

/// Order in which a drawn sequence `f_1, ..., f_n` is composed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CompositionOrder {
    /// `f_n o ... o f_1`.
    Forward,
    /// `f_1 o ... o f_n`.
    #[default]
    Reversed,
}

/// A fixed composition of drawn maps, evaluable with its derivative.
#[derive(Clone, Debug)]
pub struct ComposedMap {
    /// Maps in application order.
    maps: Vec<MapDescriptor>,
}

impl ComposedMap {
    /// `maps` holds `f_1, ..., f_n` as drawn.
    pub fn new(mut maps: Vec<MapDescriptor>, order: CompositionOrder) -> Self {
        if order == CompositionOrder::Reversed {
            maps.reverse();
        }
        ComposedMap { maps }
    }

    pub fn draw(
        nu: &DrivingMeasure,
        n: usize,
        stream: &mut SeededStream,
        order: CompositionOrder,
    ) -> Self {
        let maps = (0..n).map(|_| nu.sample_map(stream)).collect();
        ComposedMap::new(maps, order)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        let mut x = x.clone();
        let mut scratch = Vec::new();
        for f in &self.maps {
            step_point(f, &mut x, &mut scratch, false)?;
        }
        Ok(x)
    }

    /// Image and chain-rule derivative of a one-dimensional composition.
    pub fn apply_with_derivative(&self, x: &Point) -> Result<(Point, f64)> {
        let mut x = x.clone();
        let mut scratch = Vec::new();
        let mut d = 1.0;
        for f in &self.maps {
            d *= f.derivative(&x)?;
            step_point(f, &mut x, &mut scratch, false)?;
        }
        Ok((x, d))
    }

    /// Image and `ln|G'(x)|` summed along the orbit.
    pub fn apply_with_log_derivative(&self, x: &Point) -> Result<(Point, f64)> {
        let mut x = x.clone();
        let mut scratch = Vec::new();
        let mut s = 0.0;
        for f in &self.maps {
            s += step_point(f, &mut x, &mut scratch, true)?.expect("requested");
        }
        Ok((x, s))
    }
}

/// One word of a finite law with the orbits of both starting points.
#[derive(Debug)]
pub struct WordPath<'a> {
    pub word: &'a [usize],
    pub probability: f64,
    /// `x, X_1^x, ..., X_n^x`.
    pub xs: &'a [Point],
    pub ys: &'a [Point],
}

/// Every word of length `n` with its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct WordTable {
    pub entries: Vec<(Vec<usize>, f64)>,
}

pub const WORD_LIMIT: f64 = 1e7;

fn check_word_count(k: usize, n: usize) -> Result<()> {
    let count = (k as f64).powi(n as i32);
    if count > WORD_LIMIT {
        return Err(Error::Resource(format!(
            "{k}^{n} words exceed the enumeration limit {WORD_LIMIT:e}"
        )));
    }
    Ok(())
}

pub fn word_table(nu: &DrivingMeasure, n: usize) -> Result<WordTable> {
    let (atoms, weights) = nu
        .atoms()
        .ok_or_else(|| Error::Usage("word enumeration needs a finite law".into()))?;
    check_word_count(atoms.len(), n)?;
    let mut entries = vec![(Vec::new(), 1.0)];
    for _ in 0..n {
        entries = entries
            .into_iter()
            .flat_map(|(w, p)| {
                weights.iter().enumerate().map(move |(i, wi)| {
                    let mut w = w.clone();
                    w.push(i);
                    (w, p * wi)
                })
            })
            .collect();
    }
    Ok(WordTable { entries })
}

/// Exact `E[functional]` over all length-`n` words of a finite law.
pub fn enumerate_expectation<F>(
    nu: &DrivingMeasure,
    starts: (&Point, &Point),
    n: usize,
    functional: F,
) -> Result<f64>
where
    F: Fn(&WordPath<'_>) -> f64,
{
    let (atoms, weights) = nu
        .atoms()
        .ok_or_else(|| Error::Usage("word enumeration needs a finite law".into()))?;
    check_word_count(atoms.len(), n)?;
    nu.space().check(starts.0)?;
    nu.space().check(starts.1)?;

    struct Walk<'a, F> {
        atoms: &'a [MapDescriptor],
        weights: &'a [f64],
        n: usize,
        functional: F,
        word: Vec<usize>,
        xs: Vec<Point>,
        ys: Vec<Point>,
        total: f64,
    }

    impl<F: Fn(&WordPath<'_>) -> f64> Walk<'_, F> {
        fn go(&mut self, prob: f64) -> Result<()> {
            if self.word.len() == self.n {
                let path = WordPath {
                    word: &self.word,
                    probability: prob,
                    xs: &self.xs,
                    ys: &self.ys,
                };
                self.total += prob * (self.functional)(&path);
                return Ok(());
            }
            for i in 0..self.atoms.len() {
                let f = &self.atoms[i];
                let x = f.apply(self.xs.last().expect("start"))?;
                let y = f.apply(self.ys.last().expect("start"))?;
                self.word.push(i);
                self.xs.push(x);
                self.ys.push(y);
                self.go(prob * self.weights[i])?;
                self.word.pop();
                self.xs.pop();
                self.ys.pop();
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        atoms,
        weights,
        n,
        functional,
        word: Vec::with_capacity(n),
        xs: vec![starts.0.clone()],
        ys: vec![starts.1.clone()],
        total: 0.0,
    };
    walk.go(1.0)?;
    Ok(walk.total)
}
