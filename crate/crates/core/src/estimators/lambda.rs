use serde::Serialize;

use crate::chains::step_point;
use crate::error::{usage, Result};
use crate::rds::{DrivingMeasure, SeededStream};
use crate::spaces::{circle_distance, Point, RegionSet, StateSpace};
use crate::stats::{chunked_fold, Moments};

/// Where the starting pairs of a supremum over `(x, y)` come from.
#[derive(Clone, Copy, Debug)]
pub enum PairSource<'a> {
    /// All pairs of a grid on the whole space.
    WholeSpace { resolution: usize },
    /// Pairs within each piece of a region set.
    Regions(&'a RegionSet),
}

/// Start points laid out in contiguous blocks; pairs are `(i, j)` with
/// `i < j` inside one block, enumerated block by block.
#[derive(Clone, Debug)]
pub(crate) struct PairLayout {
    pub points: Vec<Point>,
    blocks: Vec<(usize, usize)>,
    pub resolution: usize,
}

impl PairLayout {
    pub fn new(space: &StateSpace, source: PairSource<'_>) -> Result<Self> {
        match source {
            PairSource::WholeSpace { resolution } => {
                let points = space.grid(resolution)?;
                let n = points.len();
                Ok(PairLayout {
                    points,
                    blocks: vec![(0, n)],
                    resolution,
                })
            }
            PairSource::Regions(r) => {
                if r.space() != space {
                    return usage("region set lives on a different space");
                }
                let mut points = Vec::new();
                let mut blocks = Vec::new();
                for piece in r.pieces() {
                    blocks.push((points.len(), piece.grid.len()));
                    points.extend(piece.grid.iter().cloned());
                }
                let resolution = r.pieces().iter().map(|p| p.grid.len()).max().unwrap_or(0);
                Ok(PairLayout {
                    points,
                    blocks,
                    resolution,
                })
            }
        }
    }

    pub fn single(x: &Point, y: &Point) -> Self {
        PairLayout {
            points: vec![x.clone(), y.clone()],
            blocks: vec![(0, 2)],
            resolution: 2,
        }
    }

    pub fn pair_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|(_, l)| l * l.saturating_sub(1) / 2)
            .sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.blocks
            .iter()
            .flat_map(|&(s, l)| (s..s + l).flat_map(move |i| (i + 1..s + l).map(move |j| (i, j))))
    }
}

/// Advances all start points under one noise realization and writes the
/// pairwise distances after each step.
struct CoupledPairs<'a> {
    nu: &'a DrivingMeasure,
    layout: &'a PairLayout,
    scalar: Option<Vec<f64>>,
    points: Vec<Point>,
    scratch: Vec<f64>,
}

impl<'a> CoupledPairs<'a> {
    fn new(nu: &'a DrivingMeasure, layout: &'a PairLayout) -> Self {
        let scalar = nu
            .space()
            .is_scalar()
            .then(|| layout.points.iter().map(Point::first).collect());
        CoupledPairs {
            nu,
            layout,
            scalar,
            points: layout.points.clone(),
            scratch: Vec::new(),
        }
    }

    fn reset(&mut self) {
        match &mut self.scalar {
            Some(xs) => {
                for (x, p) in xs.iter_mut().zip(&self.layout.points) {
                    *x = p.first();
                }
            }
            None => self.points.clone_from(&self.layout.points),
        }
    }

    fn step(&mut self, stream: &mut SeededStream) -> Result<()> {
        let f = self.nu.resolve(self.nu.draw(stream));
        match &mut self.scalar {
            Some(xs) => {
                if matches!(self.nu.space(), StateSpace::Circle) {
                    xs.iter_mut().for_each(|x| *x = f.apply_circle(*x));
                } else {
                    xs.iter_mut().for_each(|x| *x = f.apply_real(*x));
                }
            }
            None => {
                for p in &mut self.points {
                    step_point(&f, p, &mut self.scratch, false)?;
                }
            }
        }
        Ok(())
    }

    fn distances(&self, out: &mut [f64]) {
        let space = self.nu.space();
        let mut p = 0;
        for &(s, l) in &self.layout.blocks {
            for i in s..s + l {
                let cnt = s + l - i - 1;
                let row = &mut out[p..p + cnt];
                match (&self.scalar, space) {
                    (Some(xs), StateSpace::Circle) => {
                        let xi = xs[i];
                        for (o, xj) in row.iter_mut().zip(&xs[i + 1..s + l]) {
                            *o = circle_distance(xi, *xj);
                        }
                    }
                    (Some(xs), _) => {
                        let xi = xs[i];
                        for (o, xj) in row.iter_mut().zip(&xs[i + 1..s + l]) {
                            *o = (xi - xj).abs();
                        }
                    }
                    (None, _) => {
                        for (o, q) in row.iter_mut().zip(&self.points[i + 1..s + l]) {
                            *o = space.dist_unchecked(&self.points[i], q);
                        }
                    }
                }
                p += cnt;
            }
        }
    }
}

/// Mean and standard error of `d(X_k^x, X_k^y)` for one `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepStat {
    pub mean: f64,
    pub stderr: f64,
}

/// Per-pair, per-step moments of the coupled distances, `k = 0..=n`.
fn step_moments(
    nu: &DrivingMeasure,
    layout: &PairLayout,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<Moments>>> {
    if trials == 0 {
        return usage("at least one trial is required");
    }
    let pairs = layout.pair_count();
    if pairs == 0 {
        return usage("no starting pairs to compare");
    }
    let empty = || vec![vec![Moments::default(); pairs]; n + 1];
    chunked_fold(
        trials,
        Ok(empty()),
        |range| -> Result<Vec<Vec<Moments>>> {
            let mut acc = empty();
            let mut run = CoupledPairs::new(nu, layout);
            let mut d = vec![0.0; pairs];
            for trial in range {
                let mut stream = SeededStream::new(seed, trial as u64);
                run.reset();
                for (k, row) in acc.iter_mut().enumerate() {
                    if k > 0 {
                        run.step(&mut stream)?;
                    }
                    run.distances(&mut d);
                    for (m, v) in row.iter_mut().zip(&d) {
                        m.push(*v);
                    }
                }
            }
            Ok(acc)
        },
        merge_moments,
    )
}

fn merge_moments(acc: &mut Result<Vec<Vec<Moments>>>, part: Result<Vec<Vec<Moments>>>) {
    match (acc.as_mut(), part) {
        (Ok(a), Ok(p)) => {
            for (ra, rp) in a.iter_mut().zip(&p) {
                for (ma, mp) in ra.iter_mut().zip(rp) {
                    ma.merge(mp);
                }
            }
        }
        (Ok(_), Err(e)) => *acc = Err(e),
        (Err(_), _) => {}
    }
}

/// `E[d(X_k^x, X_k^y)]` for `k = 0..=n` under coupled noise.
pub fn pair_distance_profile(
    nu: &DrivingMeasure,
    x: &Point,
    y: &Point,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<StepStat>> {
    nu.space().check(x)?;
    nu.space().check(y)?;
    let layout = PairLayout::single(x, y);
    let m = step_moments(nu, &layout, n, trials, seed)?;
    Ok(m.iter()
        .map(|row| StepStat {
            mean: row[0].mean(),
            stderr: row[0].stderr(),
        })
        .collect())
}

/// `u_k = max over pairs of E[d(X_k^x, X_k^y)]` for `k = 0..=n`.
pub fn u_profile(
    nu: &DrivingMeasure,
    source: PairSource<'_>,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<StepStat>> {
    let layout = PairLayout::new(nu.space(), source)?;
    let m = step_moments(nu, &layout, n, trials, seed)?;
    Ok(m.iter()
        .map(|row| {
            let best = row
                .iter()
                .max_by(|a, b| a.mean().total_cmp(&b.mean()))
                .expect("at least one pair");
            StepStat {
                mean: best.mean(),
                stderr: best.stderr(),
            }
        })
        .collect())
}

/// One starting pair and the Monte Carlo estimate of `sum_{k<=n} E d(X_k^x, X_k^y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairEntry {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
}

/// Grid-maximum estimate of `lambda_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaEstimate {
    pub n: usize,
    pub value: f64,
    /// Standard error at the maximizing pair.
    pub stderr: f64,
    /// Index of the maximizing pair in `table`.
    pub argmax: usize,
    pub table: Vec<PairEntry>,
    pub resolution: usize,
    pub trials: usize,
    pub ceiling: f64,
    /// The estimate exceeded `ceiling`.
    pub diverged: bool,
}

impl LambdaEstimate {
    pub fn argmax_pair(&self) -> &PairEntry {
        &self.table[self.argmax]
    }
}

/// Default divergence ceiling: 90% of the largest possible value
/// `(n + 1) diam`, which only non-contracting families approach.
pub fn default_ceiling(space: &StateSpace, n: usize) -> f64 {
    0.9 * (n + 1) as f64 * space.diameter()
}

/// Estimates `lambda_n` for each `n` in `ns` (ascending) from one set of runs.
pub fn lambda_ladder(
    nu: &DrivingMeasure,
    source: PairSource<'_>,
    ns: &[usize],
    trials: usize,
    seed: u64,
    ceiling: Option<&dyn Fn(usize) -> f64>,
) -> Result<Vec<LambdaEstimate>> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return usage("n ladder must be nonempty and strictly increasing");
    }
    if trials == 0 {
        return usage("at least one trial is required");
    }
    let layout = PairLayout::new(nu.space(), source)?;
    let pairs = layout.pair_count();
    if pairs == 0 {
        return usage("no starting pairs to compare");
    }
    let nmax = *ns.last().expect("nonempty");
    let empty = || vec![vec![Moments::default(); pairs]; ns.len()];
    let merged = chunked_fold(
        trials,
        Ok(empty()),
        |range| -> Result<Vec<Vec<Moments>>> {
            let mut acc = empty();
            let mut run = CoupledPairs::new(nu, &layout);
            let mut d = vec![0.0; pairs];
            let mut running = vec![0.0; pairs];
            for trial in range {
                let mut stream = SeededStream::new(seed, trial as u64);
                run.reset();
                running.iter_mut().for_each(|r| *r = 0.0);
                let mut rung = 0;
                for k in 0..=nmax {
                    if k > 0 {
                        run.step(&mut stream)?;
                    }
                    run.distances(&mut d);
                    for (r, v) in running.iter_mut().zip(&d) {
                        *r += v;
                    }
                    if k == ns[rung] {
                        for (m, r) in acc[rung].iter_mut().zip(&running) {
                            m.push(*r);
                        }
                        rung += 1;
                    }
                }
            }
            Ok(acc)
        },
        merge_moments,
    )?;

    let pair_list: Vec<(usize, usize)> = layout.pairs().collect();
    Ok(ns
        .iter()
        .zip(merged)
        .map(|(&n, row)| {
            let table: Vec<PairEntry> = pair_list
                .iter()
                .zip(&row)
                .map(|(&(i, j), m)| PairEntry {
                    x: layout.points[i].coords(),
                    y: layout.points[j].coords(),
                    mean: m.mean(),
                    stderr: m.stderr(),
                })
                .collect();
            let argmax = table
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
                .map(|(i, _)| i)
                .expect("at least one pair");
            let ceiling = ceiling.map_or_else(|| default_ceiling(nu.space(), n), |c| c(n));
            let value = table[argmax].mean;
            LambdaEstimate {
                n,
                value,
                stderr: table[argmax].stderr,
                argmax,
                table,
                resolution: layout.resolution,
                trials,
                ceiling,
                diverged: n > 0 && value > ceiling,
            }
        })
        .collect())
}

pub fn lambda_n(
    nu: &DrivingMeasure,
    source: PairSource<'_>,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LambdaEstimate> {
    Ok(lambda_ladder(nu, source, &[n], trials, seed, None)?.remove(0))
}
