//! The non-tail experiments: trajectories, lambda surveys, correlation
//! dimension, Lyapunov rates, the logarithmic CLT, and the bound table.

use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, ReferenceConfig};
use super::report::{Cell, Report, Table};
use crate::bounds::{
    beta_n, circle_lyap_bound, corrdim_bound, devroye_rhs, empirical_kappa_bound, interval_kappa_bound,
    lln_bound, main_tail_bound, matrix_norm_bound, projective_lyap_bound, refined_alpha, refined_tail_bound,
    sync_bound, GatedBound,
};
use crate::chains::{simulate, simulate_coupled, CompositionOrder, RecordFlags};
use crate::error::{usage, Error, Result};
use crate::estimators::{
    birkhoff_sums, correlation_dimension, kantorovich_gaussian, lambda_ladder, log_averaged_from_sums,
    lyapunov_1d, lyapunov_projective, nonexpansive_fixed_points, sigma2_estimate, stationary_approx, EmpiricalMeasure,
    Kernel, PairSource, DEFAULT_FIXED_POINT_GRID,
};
use crate::rds::SeededStream;
use crate::spaces::{Point, StateSpace};
use crate::stats::{chunked, Moments, Z95};

const SIGMA_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
/// Atoms of the midpoint grid standing in for a uniform stationary law.
const UNIFORM_REFERENCE_ATOMS: usize = 20_000;

fn coordinate_names(prefix: &str, width: usize) -> Vec<String> {
    if width == 1 {
        vec![prefix.to_string()]
    } else {
        (0..width).map(|i| format!("{prefix}{i}")).collect()
    }
}

fn point_cells(p: &Point) -> impl Iterator<Item = Cell> {
    p.coords().into_iter().map(Cell::from)
}

/// One trajectory, or two coupled ones with their distance.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let sim = ExperimentConfig::section(&cfg.simulate, "simulate")?;
    let nu = cfg.system.build()?;
    let space = *nu.space();
    let x0 = ExperimentConfig::start_point(&space, sim.start.as_deref())?;
    let width = x0.coords().len();
    let mut stream = SeededStream::new(cfg.seed, 0);

    let table = match &sim.coupled_with {
        None => {
            let flags = RecordFlags { log_derivative: space.is_scalar(), draws: false };
            let traj = simulate(&nu, &x0, sim.n, &mut stream, flags)?;
            let mut cols = vec!["step".to_string()];
            cols.extend(coordinate_names("x", width));
            cols.push("log_derivative_sum".into());
            let mut table = Table::new(&cols);
            for (k, p) in traj.points.iter().enumerate() {
                let mut row = vec![Cell::from(k)];
                row.extend(point_cells(p));
                let ld = match (&traj.log_derivative_sum, k) {
                    (Some(_), 0) => Cell::Num(0.0),
                    (Some(l), k) => Cell::Num(l[k - 1]),
                    (None, _) => Cell::Missing,
                };
                row.push(ld);
                table.push(row);
            }
            table
        }
        Some(y) => {
            let y0 = space.point(y)?;
            let runs = simulate_coupled(&nu, &[x0.clone(), y0], sim.n, &mut stream)?;
            let mut cols = vec!["step".to_string()];
            cols.extend(coordinate_names("x", width));
            cols.extend(coordinate_names("y", width));
            cols.push("distance".into());
            let mut table = Table::new(&cols);
            for (k, (p, q)) in runs[0].points.iter().zip(&runs[1].points).enumerate() {
                let mut row = vec![Cell::from(k)];
                row.extend(point_cells(p));
                row.extend(point_cells(q));
                row.push(space.distance(p, q)?.into());
                table.push(row);
            }
            table
        }
    };
    Ok(Report {
        experiment: "simulate",
        table,
        meta: json!({ "seed": cfg.seed, "n": sim.n, "start": x0.coords() }),
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurveyRow {
    pub n: usize,
    pub lambda_hat: f64,
    pub stderr: f64,
    /// Closed-form upper bound for library systems.
    pub cap: Option<f64>,
    pub diverged: bool,
}

/// `lambda_n` estimates along an `n` ladder, with the known cap when there is one.
pub fn run_lambda_survey(cfg: &ExperimentConfig) -> Result<Vec<SurveyRow>> {
    let lam = ExperimentConfig::section(&cfg.lambda, "lambda")?;
    if lam.trials == 0 {
        return usage("zero trials");
    }
    let nu = cfg.system.build()?;
    let regions = cfg.region_set(nu.space())?;
    let source = match &regions {
        Some(r) => PairSource::Regions(r),
        None => PairSource::WholeSpace { resolution: lam.grid.unwrap_or(cfg.grid()) },
    };
    let fixed = lam.ceiling.map(|c| move |_n: usize| c);
    let ceiling: Option<&dyn Fn(usize) -> f64> = fixed.as_ref().map(|f| f as &dyn Fn(usize) -> f64);
    let est = lambda_ladder(&nu, source, &lam.n_ladder, lam.trials, cfg.seed, ceiling)?;
    let library = cfg.system.library();
    Ok(est
        .into_iter()
        .map(|e| SurveyRow {
            n: e.n,
            lambda_hat: e.value,
            stderr: e.stderr,
            cap: library.and_then(|l| l.lambda_n_cap(e.n)),
            diverged: e.diverged,
        })
        .collect())
}

pub fn survey_report(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let rows = run_lambda_survey(cfg)?;
    let mut table = Table::new(&["n", "lambda_hat", "stderr", "cap", "diverged"]);
    for r in &rows {
        table.push(vec![r.n.into(), r.lambda_hat.into(), r.stderr.into(), r.cap.into(), r.diverged.into()]);
    }
    let lam = ExperimentConfig::section(&cfg.lambda, "lambda")?;
    Ok(Report {
        experiment: "lambda",
        table,
        meta: json!({ "seed": cfg.seed, "trials": lam.trials, "grid": lam.grid.unwrap_or(cfg.grid()) }),
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Correlation sums along a decreasing radius ladder and the fitted slope.
pub fn run_corr_dim(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let cd = ExperimentConfig::section(&cfg.corr_dim, "corr_dim")?;
    if cd.n < 2 {
        return Err(Error::Config("correlation sums need n >= 2".into()));
    }
    let nu = cfg.system.build()?;
    let space = *nu.space();
    let x0 = ExperimentConfig::start_point(&space, cd.start.as_deref())?;
    let mut stream = SeededStream::new(cfg.seed, 0);
    let traj = simulate(&nu, &x0, cd.burn_in + cd.n - 1, &mut stream, RecordFlags::NONE)?;
    let points = &traj.points[cd.burn_in..];
    let fit = correlation_dimension(&space, points, &cd.ladder)?;
    let mut table = Table::new(&["epsilon", "corr_sum", "used"]);
    for r in &fit.table {
        table.push(vec![r.epsilon.into(), r.value.into(), r.used.into()]);
    }
    Ok(Report {
        experiment: "corr-dim",
        table,
        meta: json!({ "seed": cfg.seed, "n": cd.n, "burn_in": cd.burn_in, "slope": fit.slope, "intercept": fit.intercept }),
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Finite-time Lyapunov rates over independent trials.
pub fn run_lyap(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let ly = ExperimentConfig::section(&cfg.lyap, "lyap")?;
    if ly.trials == 0 {
        return usage("zero trials");
    }
    if ly.n == 0 {
        return Err(Error::Config("Lyapunov rates need n >= 1".into()));
    }
    let nu = cfg.system.build()?;
    let space = *nu.space();
    let x0 = ExperimentConfig::start_point(&space, ly.start.as_deref())?;
    let scalar = space.is_scalar();
    let parts = chunked(ly.trials, |range| -> Result<Vec<(f64, f64)>> {
        range
            .map(|i| {
                let mut stream = SeededStream::new(cfg.seed, i as u64);
                if scalar {
                    let flags = RecordFlags { log_derivative: true, draws: false };
                    let r = lyapunov_1d(&simulate(&nu, &x0, ly.n, &mut stream, flags)?)?;
                    Ok((r, f64::NAN))
                } else {
                    let r = lyapunov_projective(&nu, &x0, ly.n, &mut stream)?;
                    Ok((r.vector_rate, r.norm_rate))
                }
            })
            .collect()
    });
    let (mut first, mut second) = (Moments::default(), Moments::default());
    for p in parts {
        for (a, b) in p? {
            first.push(a);
            second.push(b);
        }
    }
    let mut table = Table::new(&["quantity", "mean", "stderr", "ci_lo", "ci_hi"]);
    let mut row = |name: &str, m: &Moments| {
        let (mean, se) = (m.mean(), m.stderr());
        table.push(vec![name.into(), mean.into(), se.into(), (mean - Z95 * se).into(), (mean + Z95 * se).into()]);
    };
    if scalar {
        row("derivative_rate", &first);
    } else {
        row("vector_rate", &first);
        row("norm_rate", &second);
    }

    let mut meta = json!({ "seed": cfg.seed, "n": ly.n, "trials": ly.trials, "start": x0.coords() });
    if ly.fixed_points {
        if !scalar {
            return Err(Error::Config("fixed points need a one-dimensional space".into()));
        }
        let mut stream = SeededStream::new(cfg.seed, ly.trials as u64);
        let fps = nonexpansive_fixed_points(&nu, ly.n, &mut stream, DEFAULT_FIXED_POINT_GRID, CompositionOrder::default())?;
        meta["fixed_points"] = serde_json::to_value(fps).expect("fixed points serialize");
    }
    Ok(Report { experiment: "lyap", table, meta, runtime_seconds: started.elapsed().as_secs_f64() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AscltRow {
    pub n: usize,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AscltReport {
    pub rows: Vec<AscltRow>,
    pub sigma2: f64,
    pub sigma2_stderr: f64,
    /// The variance estimate was not distinguishable from zero, so the
    /// distances are to `delta_0`.
    pub degenerate: bool,
    /// Mean of `h` under the reference sample.
    pub eta_h: f64,
}

fn uniform_reference(space: &StateSpace) -> Result<EmpiricalMeasure> {
    let StateSpace::Interval { a, b } = *space else {
        return Err(Error::Config("uniform reference needs an interval".into()));
    };
    let m = UNIFORM_REFERENCE_ATOMS;
    let pts = (0..m).map(|i| Point::real(a + (b - a) * (i as f64 + 0.5) / m as f64)).collect();
    EmpiricalMeasure::uniform(*space, pts)
}

/// Kantorovich distance from the log-averaged measure of `S_k / sqrt k` to
/// the fitted normal law, at `n = 2^j` along one extended trajectory.
pub fn run_asclt(cfg: &ExperimentConfig) -> Result<AscltReport> {
    let ac = ExperimentConfig::section(&cfg.asclt, "asclt")?;
    if ac.min_exp > ac.max_exp || ac.max_exp > 30 {
        return Err(Error::Config("need min_exp <= max_exp <= 30".into()));
    }
    let nu = cfg.system.build()?;
    let space = *nu.space();
    let h = ac.h.build(&space)?;
    let x0 = ExperimentConfig::start_point(&space, ac.start.as_deref())?;
    let eta = match &ac.reference {
        ReferenceConfig::Uniform => uniform_reference(&space)?,
        ReferenceConfig::Sample { burn_in, samples, stride } => {
            stationary_approx(&nu, *burn_in, *samples, *stride, cfg.seed ^ SIGMA_SEED_SALT)?.measure
        }
    };
    let s2 = sigma2_estimate(&nu, ac.sigma_n, ac.sigma_trials, &eta, &h, cfg.seed ^ SIGMA_SEED_SALT)?;
    let degenerate = !(s2.value > Z95 * s2.stderr) || s2.value <= 0.0;
    let sigma = if degenerate { 0.0 } else { s2.value.sqrt() };

    let n_max = 1usize << ac.max_exp;
    let sums = birkhoff_sums(&nu, &x0, n_max, &h, &mut SeededStream::new(cfg.seed, 0))?;
    let rows = (ac.min_exp..=ac.max_exp)
        .map(|j| {
            let n = 1usize << j;
            let kappa = kantorovich_gaussian(&log_averaged_from_sums(&sums[..n])?, sigma)?;
            Ok(AscltRow { n, kappa })
        })
        .collect::<Result<_>>()?;
    Ok(AscltReport { rows, sigma2: s2.value, sigma2_stderr: s2.stderr, degenerate, eta_h: s2.centering })
}

pub fn asclt_report(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let r = run_asclt(cfg)?;
    let mut table = Table::new(&["n", "kappa"]);
    for row in &r.rows {
        table.push(vec![row.n.into(), row.kappa.into()]);
    }
    Ok(Report {
        experiment: "asclt",
        table,
        meta: json!({
            "seed": cfg.seed,
            "sigma2": r.sigma2,
            "sigma2_stderr": r.sigma2_stderr,
            "degenerate": r.degenerate,
            "eta_h": r.eta_h,
        }),
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Every bound computable from the given inputs, on the `t` ladder.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let bc = ExperimentConfig::section(&cfg.bounds, "bounds")?;
    let inp = &bc.inputs;
    inp.validate()?;
    if bc.t_ladder.is_empty() || bc.t_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("t ladder must be nonempty and strictly increasing".into()));
    }
    let (n, g, lam) = (inp.n, inp.gee_diameter, inp.lambda);
    let beta = beta_n(inp)?;
    let alpha = inp.u.as_ref().map(|_| refined_alpha(inp)).transpose()?;
    let t_n = bc.t_n.unwrap_or(0.0);
    let gate = |threshold: f64, t: f64, v: f64| GatedBound { threshold, bound: (t > threshold).then_some(v) };

    type Row<'a> = (&'static str, Box<dyn Fn(f64) -> Result<GatedBound> + 'a>);
    let mut selectors: Vec<Row> = vec![
        ("main", Box::new(|t| Ok(GatedBound { threshold: 0.0, bound: Some(main_tail_bound(n, t, beta)?) }))),
        ("empirical-kappa", Box::new(|t| empirical_kappa_bound(n, t, g, lam))),
        ("sync", Box::new(|t| sync_bound(n, t, g, lam, bc.mu_b))),
    ];
    if let Some(a) = &alpha {
        let a2 = a.alpha_sq;
        selectors.push(("refined", Box::new(move |t| Ok(GatedBound { threshold: 0.0, bound: Some(refined_tail_bound(t, a2)?) }))));
    }
    if let Some(l) = inp.lipschitz {
        selectors.push(("lln", Box::new(move |t| lln_bound(n, t, l, g, lam))));
    }
    if let Some((a, b)) = bc.interval {
        selectors.push(("interval-kappa", Box::new(move |t| interval_kappa_bound(n, t, a, b, g, lam))));
    }
    if let Some(eps) = bc.epsilon {
        let (lp, sp) = (Kernel::Phi0.lipschitz(), Kernel::Phi0.sup_norm());
        selectors.push(("corr-dim", Box::new(move |t| corrdim_bound(n, t, eps, lp, sp, g, lam))));
    }
    if let (Some(m), Some(big_m)) = (inp.m_nu, inp.big_m_nu) {
        selectors.push(("circle-lyap", Box::new(move |t| Ok(gate(t_n, t, circle_lyap_bound(n, t, m, big_m, g, lam)?)))));
    }
    if let Some(c) = inp.c_cap {
        selectors.push(("projective-lyap", Box::new(move |t| Ok(gate(2.0 * t_n, t, projective_lyap_bound(t, c, lam)?)))));
        if let Some(m) = inp.m_dim {
            selectors.push(("matrix-norm", Box::new(move |t| matrix_norm_bound(n, t, m, c, lam, 2.0 * t_n))));
        }
    }

    let mut table = Table::new(&["bound", "t", "threshold", "value", "vacuous"]);
    for (name, f) in &selectors {
        for &t in &bc.t_ladder {
            let gb = f(t)?;
            table.push(vec![(*name).into(), t.into(), gb.threshold.into(), gb.bound.into(), gb.is_vacuous().into()]);
        }
    }
    let mut meta = json!({ "beta": beta });
    if let Some(a) = &alpha {
        meta["alpha_sq"] = json!(a.alpha_sq);
    }
    if let Some(d) = inp.diam_m {
        meta["devroye_rhs"] = json!(devroye_rhs(&inp.gamma.weights(n), lam, d)?);
    }
    Ok(Report { experiment: "bounds", table, meta, runtime_seconds: started.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn identity_survey_diverges() {
        let c = config(
            r#"{"system": {"kind": "library", "name": "identity"},
                "lambda": {"n_ladder": [5, 20], "trials": 10, "grid": 5}}"#,
        );
        let rows = run_lambda_survey(&c).unwrap();
        assert!(rows.iter().all(|r| r.diverged));
    }

    #[test]
    fn zero_observable_gives_zero_kappa() {
        let c = config(
            r#"{"system": {"kind": "library", "name": "halving"}, "seed": 3,
                "asclt": {"h": {"kind": "zero"}, "min_exp": 0, "max_exp": 6, "sigma_n": 50, "sigma_trials": 50}}"#,
        );
        let r = run_asclt(&c).unwrap();
        assert!(r.degenerate && r.sigma2 == 0.0);
        assert!(r.rows.iter().all(|row| row.kappa == 0.0));
    }

    #[test]
    fn single_step_is_one_atom() {
        let c = config(
            r#"{"system": {"kind": "library", "name": "halving"}, "seed": 4,
                "asclt": {"h": {"kind": "shifted", "c": 0.5}, "min_exp": 0, "max_exp": 0,
                          "sigma_n": 200, "sigma_trials": 400, "start": [0.9]}}"#,
        );
        let r = run_asclt(&c).unwrap();
        let atom = crate::estimators::LineMeasure::new(vec![(0.4, 1.0)]).unwrap();
        let expect = kantorovich_gaussian(&atom, r.sigma2.sqrt()).unwrap();
        assert!((r.rows[0].kappa - expect).abs() < 1e-15);
    }

    #[test]
    fn bounds_table_lists_thresholds() {
        let c = config(
            r#"{"system": {"kind": "library", "name": "halving"},
                "bounds": {"inputs": {"n": 100, "gamma": {"uniform": {"c": 1}}, "gee_diameter": 0.5, "lambda": 2,
                                      "lipschitz": 1},
                           "t_ladder": [0.01, 0.2]}}"#,
        );
        let r = run_bounds(&c).unwrap();
        let lln: Vec<&Vec<Cell>> = r.table.rows.iter().filter(|row| row[0] == Cell::from("lln")).collect();
        assert_eq!(lln.len(), 2);
        assert_eq!(lln[0][3], Cell::Missing);
        let Cell::Num(v) = lln[1][3] else { panic!("in-regime row has a value") };
        assert!((v - 2.0 * (-100.0 * 0.04 / 300.0f64).exp()).abs() < 1e-15);
    }
}
