//! Monte Carlo tail probabilities checked against the closed-form bounds.

use std::time::Instant;

use serde::Serialize;

use super::config::{BoundSelector, ExperimentConfig, ReferenceConfig, TailConfig, TailObservable};
use super::library::LibrarySystem;
use super::report::{Report, Table};
use crate::bounds::{
    beta_n, circle_lyap_bound, corrdim_bound, empirical_kappa_bound, interval_kappa_bound, lln_bound,
    main_tail_bound, matrix_norm_bound, projective_lyap_bound, refined_alpha, refined_tail_bound, sync_bound,
    BoundInputs, Gamma, GatedBound,
};
use crate::chains::{simulate, RecordFlags};
use crate::error::{usage, Error, Result};
use crate::estimators::{
    birkhoff_sum_fast, correlation_sum, kantorovich, kantorovich_uniform, lambda_n, lyapunov_1d,
    lyapunov_projective, stationary_approx, synchronization, u_profile, EmpiricalMeasure, Kernel, Observable,
    PairSource,
};
use crate::rds::{gee_diameter_c1, gee_diameter_sup, DrivingMeasure, SeededStream};
use crate::spaces::{Point, RegionSet, StateSpace};
use crate::stats::{chunked, wilson, Moments, Z95};

/// Stream ids for the centering pilot start here; main trials use `0..trials`.
pub const PILOT_STREAM: u64 = 1 << 63;
/// Stream ids for the long-run Lyapunov limit.
pub const LONG_RUN_STREAM: u64 = 1 << 62;
const ESTIMATE_SEED_SALT: u64 = 0x6c62_272e_07bb_0142;
pub const MIN_TAIL_TRIALS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "n/a",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: Option<f64>,
    pub threshold: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenteringKind {
    /// Mean of an independent pilot run of the same observable.
    Pilot,
    /// Mean of the observable over a run `long_run_factor` times longer.
    LongRun,
    /// The bound concerns the raw observable.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Centering {
    pub kind: CenteringKind,
    pub value: f64,
    pub stderr: f64,
    /// Half-width of the 95% interval of `value`, added to the dominance margin.
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    Estimated,
    Override,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputValue {
    pub name: &'static str,
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailMeta {
    pub observable: &'static str,
    pub bound: BoundSelector,
    pub sidedness: Sidedness,
    pub n: usize,
    pub trials: usize,
    pub pilot_trials: usize,
    pub seed: u64,
    pub start: Vec<f64>,
    pub centering: Centering,
    pub inputs: Vec<InputValue>,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
    pub meta: TailMeta,
    /// Wall-clock seconds; not part of the determinism contract.
    pub runtime_seconds: f64,
}

impl TailReport {
    pub fn dominance_holds(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn to_report(&self) -> Report {
        let mut table = Table::new(&TAIL_COLUMNS);
        for r in &self.rows {
            table.push(vec![
                r.t.into(),
                r.p_hat.into(),
                r.ci_lo.into(),
                r.ci_hi.into(),
                r.bound.into(),
                r.threshold.into(),
                r.verdict.as_str().into(),
            ]);
        }
        Report {
            experiment: "tail",
            table,
            meta: serde_json::to_value(&self.meta).expect("meta serializes"),
            runtime_seconds: self.runtime_seconds,
        }
    }
}

pub const TAIL_COLUMNS: [&str; 7] = ["t", "p_hat", "ci_lo", "ci_hi", "bound", "threshold", "verdict"];

pub fn default_selector(obs: &TailObservable) -> Result<BoundSelector> {
    Ok(match obs {
        TailObservable::Birkhoff { .. } => BoundSelector::Lln,
        TailObservable::KappaToStationary { .. } => BoundSelector::EmpiricalKappa,
        TailObservable::KappaInterval { .. } => BoundSelector::IntervalKappa,
        TailObservable::Sync { .. } => BoundSelector::Sync,
        TailObservable::CorrSum { .. } => BoundSelector::CorrDim,
        TailObservable::Lyap1d => BoundSelector::CircleLyap,
        TailObservable::LyapProjective => BoundSelector::ProjectiveLyap,
        TailObservable::LyapMatrixNorm => BoundSelector::MatrixNorm,
        TailObservable::AscltKappa { .. } => {
            return Err(Error::Config("asclt-kappa is run by the `asclt` subcommand".into()))
        }
    })
}

fn compatible(obs: &TailObservable, sel: BoundSelector) -> bool {
    use BoundSelector as B;
    match obs {
        TailObservable::Birkhoff { .. } => matches!(sel, B::Main | B::Refined | B::Lln),
        _ => default_selector(obs).is_ok_and(|d| d == sel),
    }
}

fn shape(sel: BoundSelector) -> (Sidedness, CenteringKind) {
    use BoundSelector as B;
    match sel {
        B::Main | B::Refined => (Sidedness::OneSided, CenteringKind::Pilot),
        B::Lln | B::EmpiricalKappa | B::CorrDim => (Sidedness::TwoSided, CenteringKind::Pilot),
        B::IntervalKappa | B::Sync => (Sidedness::OneSided, CenteringKind::None),
        B::CircleLyap | B::ProjectiveLyap | B::MatrixNorm => (Sidedness::TwoSided, CenteringKind::LongRun),
    }
}

enum Reference {
    Uniform { a: f64, b: f64 },
    Sample(EmpiricalMeasure),
}

enum Prepared {
    Birkhoff(Observable),
    Kappa(Reference),
    Sync(Vec<Point>),
    CorrSum(f64),
    Lyap1d,
    LyapVector,
    LyapNorm,
}

struct Experiment<'a> {
    nu: &'a DrivingMeasure,
    space: StateSpace,
    x0: Point,
    prepared: Prepared,
}

impl Experiment<'_> {
    fn orbit(&self, n: usize, stream: &mut SeededStream) -> Result<Vec<Point>> {
        let mut t = simulate(self.nu, &self.x0, n.saturating_sub(1), stream, RecordFlags::NONE)?;
        t.points.truncate(n);
        Ok(t.points)
    }

    /// The observable for one horizon-`n` draw.
    fn sample(&self, n: usize, stream: &mut SeededStream) -> Result<f64> {
        match &self.prepared {
            Prepared::Birkhoff(h) => Ok(birkhoff_sum_fast(self.nu, &self.x0, n, h, stream)? / n as f64),
            Prepared::Kappa(Reference::Uniform { a, b }) => {
                let xs: Vec<f64> = self.orbit(n, stream)?.iter().map(Point::first).collect();
                kantorovich_uniform(&xs, *a, *b)
            }
            Prepared::Kappa(Reference::Sample(eta)) => {
                kantorovich(&EmpiricalMeasure::uniform(self.space, self.orbit(n, stream)?)?, eta)
            }
            Prepared::Sync(b) => synchronization(self.nu, &self.x0, b, n, stream),
            Prepared::CorrSum(eps) => {
                Ok(correlation_sum(&self.space, &self.orbit(n, stream)?, *eps, Kernel::Phi0)?.value)
            }
            Prepared::Lyap1d => {
                let flags = RecordFlags { log_derivative: true, draws: false };
                lyapunov_1d(&simulate(self.nu, &self.x0, n, stream, flags)?)
            }
            Prepared::LyapVector => Ok(lyapunov_projective(self.nu, &self.x0, n, stream)?.vector_rate),
            Prepared::LyapNorm => Ok(lyapunov_projective(self.nu, &self.x0, n, stream)?.norm_rate),
        }
    }

    /// Observable values for trials `0..trials` on streams `base + i`.
    fn run(&self, n: usize, trials: usize, seed: u64, base: u64) -> Result<Vec<f64>> {
        let parts = chunked(trials, |range| -> Result<Vec<f64>> {
            range
                .map(|i| self.sample(n, &mut SeededStream::new(seed, base + i as u64)))
                .collect()
        });
        let mut out = Vec::with_capacity(trials);
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }
}

fn moments(values: &[f64]) -> Moments {
    values.iter().copied().collect()
}

/// Constants fed to the bound, each tagged with where it came from.
struct Inputs<'a> {
    cfg: &'a ExperimentConfig,
    tail: &'a TailConfig,
    nu: &'a DrivingMeasure,
    library: Option<LibrarySystem>,
    regions: Option<RegionSet>,
    list: Vec<InputValue>,
}

impl Inputs<'_> {
    fn record(&mut self, name: &'static str, value: f64, provenance: Provenance) -> f64 {
        self.list.push(InputValue { name, value, provenance });
        value
    }

    fn pick(
        &mut self,
        name: &'static str,
        over: Option<f64>,
        analytic: Option<f64>,
        estimate: impl FnOnce(&Self) -> Result<f64>,
    ) -> Result<f64> {
        if let Some(v) = over {
            return Ok(self.record(name, v, Provenance::Override));
        }
        if let Some(v) = analytic {
            return Ok(self.record(name, v, Provenance::Analytic));
        }
        let v = estimate(self)?;
        Ok(self.record(name, v, Provenance::Estimated))
    }

    fn pair_source(&self) -> PairSource<'_> {
        match &self.regions {
            Some(r) => PairSource::Regions(r),
            None => PairSource::WholeSpace { resolution: self.cfg.grid() },
        }
    }

    fn estimate_seed(&self) -> u64 {
        self.cfg.seed ^ ESTIMATE_SEED_SALT
    }

    fn gee_inf(&mut self) -> Result<f64> {
        let analytic = self.library.and_then(|l| l.gee_inf());
        self.pick("gee_inf", self.tail.overrides.gee, analytic, |s| {
            gee_diameter_sup(s.nu, s.nu.space(), s.cfg.grid())
        })
    }

    fn lambda_at(&self, n: usize) -> Result<f64> {
        Ok(lambda_n(self.nu, self.pair_source(), n, self.tail.lambda_trials, self.estimate_seed())?.value)
    }

    fn lambda_nu(&mut self) -> Result<f64> {
        let analytic = self.library.and_then(|l| l.lambda_nu());
        let n = self.tail.n;
        self.pick("lambda_nu", self.tail.overrides.lambda, analytic, |s| s.lambda_at(n))
    }

    fn lambda_n(&mut self) -> Result<f64> {
        let n = self.tail.n;
        let analytic = self.library.and_then(|l| l.lambda_n_cap(n));
        self.pick("lambda_n", self.tail.overrides.lambda, analytic, |s| s.lambda_at(n))
    }

    /// `u_0..u_{n-1}`.
    fn u(&mut self) -> Result<Vec<f64>> {
        let n = self.tail.n;
        if let Some(u) = &self.tail.overrides.u {
            if u.len() != n {
                return Err(Error::Config(format!("override u needs {n} entries")));
            }
            self.list.push(InputValue { name: "u", value: u.iter().copied().fold(0.0, f64::max), provenance: Provenance::Override });
            return Ok(u.clone());
        }
        if let Some(lib) = self.library {
            if let Some(u) = (0..n).map(|k| lib.u_cap(k)).collect::<Option<Vec<f64>>>() {
                self.record("u_0", u[0], Provenance::Analytic);
                return Ok(u);
            }
        }
        let prof = u_profile(self.nu, self.pair_source(), n - 1, self.tail.lambda_trials, self.estimate_seed())?;
        let u: Vec<f64> = prof.iter().map(|s| s.mean).collect();
        self.record("u_0", u[0], Provenance::Estimated);
        Ok(u)
    }

    fn estimated(&self) -> bool {
        self.list.iter().any(|i| i.provenance == Provenance::Estimated)
    }
}

/// Per-`t` bound evaluator.
type BoundFn<'a> = Box<dyn Fn(f64) -> Result<GatedBound> + 'a>;

fn ungated(value: f64) -> GatedBound {
    GatedBound { threshold: 0.0, bound: Some(value) }
}

pub fn run_tail(cfg: &ExperimentConfig) -> Result<TailReport> {
    let started = Instant::now();
    let tail = ExperimentConfig::section(&cfg.tail, "tail")?;
    if tail.trials == 0 {
        return usage("zero trials");
    }
    if tail.trials < MIN_TAIL_TRIALS {
        return Err(Error::Config(format!("tail experiments need at least {MIN_TAIL_TRIALS} trials")));
    }
    if tail.n == 0 {
        return Err(Error::Config("tail experiments need n >= 1".into()));
    }
    if tail.t_ladder.is_empty() || tail.t_ladder.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::Config("t ladder must be nonempty with positive entries".into()));
    }
    if tail.t_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("t ladder must be strictly increasing".into()));
    }
    let selector = match tail.bound {
        Some(s) => s,
        None => default_selector(&tail.observable)?,
    };
    if !compatible(&tail.observable, selector) {
        return Err(Error::Config(format!("bound {selector:?} does not apply to {}", tail.observable.name())));
    }
    let (sidedness, centering_kind) = shape(selector);

    let nu = cfg.system.build()?;
    let space = *nu.space();
    let library = cfg.system.library();
    let x0 = ExperimentConfig::start_point(&space, tail.start.as_deref())?;
    let mut flags: Vec<String> = Vec::new();

    let prepared = match &tail.observable {
        TailObservable::Birkhoff { h } => Prepared::Birkhoff(h.build(&space)?),
        TailObservable::KappaToStationary { reference } | TailObservable::KappaInterval { reference } => {
            Prepared::Kappa(match (reference, space) {
                (ReferenceConfig::Uniform, StateSpace::Interval { a, b }) => {
                    if !library.is_some_and(|l| l.stationary_is_uniform()) {
                        flags.push("reference-uniform-assumed".into());
                    }
                    Reference::Uniform { a, b }
                }
                (ReferenceConfig::Uniform, _) => {
                    return Err(Error::Config("uniform reference needs an interval".into()))
                }
                (ReferenceConfig::Sample { burn_in, samples, stride }, _) => {
                    let eta = stationary_approx(&nu, *burn_in, *samples, *stride, cfg.seed ^ ESTIMATE_SEED_SALT)?;
                    flags.push("reference-sampled".into());
                    Reference::Sample(eta.measure)
                }
            })
        }
        TailObservable::Sync { candidates, mu_b } => {
            if !(*mu_b > 0.0 && *mu_b <= 1.0) {
                return Err(Error::Config("mu_b must lie in (0, 1]".into()));
            }
            Prepared::Sync(candidates.iter().map(|c| space.point(c)).collect::<Result<_>>()?)
        }
        TailObservable::CorrSum { epsilon } => Prepared::CorrSum(*epsilon),
        TailObservable::Lyap1d => Prepared::Lyap1d,
        TailObservable::LyapProjective => Prepared::LyapVector,
        TailObservable::LyapMatrixNorm => Prepared::LyapNorm,
        TailObservable::AscltKappa { .. } => unreachable!("rejected by default_selector"),
    };
    if matches!(tail.observable, TailObservable::KappaInterval { .. }) && !matches!(space, StateSpace::Interval { .. }) {
        return Err(Error::Config("kappa-interval needs an interval state space".into()));
    }
    let exp = Experiment { nu: &nu, space, x0: x0.clone(), prepared };
    let pilot_trials = tail.pilot_trials.unwrap_or(tail.trials);
    let n = tail.n;

    // Centering and, for the Lyapunov gates, the estimated t_n.
    let mut t_n_hat = None;
    let centering = match centering_kind {
        CenteringKind::None => Centering { kind: centering_kind, value: 0.0, stderr: 0.0, margin: 0.0 },
        CenteringKind::Pilot => {
            let m = moments(&exp.run(n, pilot_trials, cfg.seed, PILOT_STREAM)?);
            Centering { kind: centering_kind, value: m.mean(), stderr: m.stderr(), margin: Z95 * m.stderr() }
        }
        CenteringKind::LongRun => {
            let long_n = n * tail.long_run_factor.max(1);
            let limit = moments(&exp.run(long_n, pilot_trials, cfg.seed, LONG_RUN_STREAM)?);
            let at_n = moments(&exp.run(n, pilot_trials, cfg.seed, PILOT_STREAM)?);
            let se = (limit.stderr().powi(2) + at_n.stderr().powi(2)).sqrt();
            t_n_hat = Some(match tail.overrides.t_n {
                Some(v) => v,
                None => (at_n.mean() - limit.mean()).abs() + Z95 * se,
            });
            Centering { kind: centering_kind, value: limit.mean(), stderr: limit.stderr(), margin: Z95 * limit.stderr() }
        }
    };

    let mut inputs = Inputs {
        cfg,
        tail,
        nu: &nu,
        library,
        regions: cfg.region_set(&space)?,
        list: Vec::new(),
    };
    if let Some(t) = t_n_hat {
        let p = if tail.overrides.t_n.is_some() { Provenance::Override } else { Provenance::Estimated };
        inputs.record("t_n", t, p);
    }
    let lipschitz = |h: &Observable| h.lipschitz(&space);
    let bound_at: BoundFn = match (selector, &exp.prepared) {
        (BoundSelector::Main, Prepared::Birkhoff(h)) => {
            let l = inputs.record("lipschitz", lipschitz(h)?, Provenance::Exact);
            let g = inputs.gee_inf()?;
            let lam = inputs.lambda_n()?;
            let mut gamma = vec![l / n as f64; n + 1];
            gamma[n] = 0.0;
            let beta = beta_n(&BoundInputs::new(n, Gamma::Explicit(gamma), g, lam)?)?;
            inputs.record("beta", beta, Provenance::Exact);
            Box::new(move |t| Ok(ungated(main_tail_bound(n, t, beta)?)))
        }
        (BoundSelector::Refined, Prepared::Birkhoff(h)) => {
            let l = inputs.record("lipschitz", lipschitz(h)?, Provenance::Exact);
            let g = inputs.gee_inf()?;
            let u = inputs.u()?;
            let mut gamma = vec![l / n as f64; n + 1];
            gamma[n] = 0.0;
            let alpha = refined_alpha(&BoundInputs::new(n, Gamma::Explicit(gamma), g, 0.0)?.with_u(u)?)?;
            inputs.record("alpha_sq", alpha.alpha_sq, Provenance::Exact);
            Box::new(move |t| Ok(ungated(refined_tail_bound(t, alpha.alpha_sq)?)))
        }
        (BoundSelector::Lln, Prepared::Birkhoff(h)) => {
            let l = inputs.record("lipschitz", lipschitz(h)?, Provenance::Exact);
            let g = inputs.gee_inf()?;
            let lam = inputs.lambda_nu()?;
            Box::new(move |t| lln_bound(n, t, l, g, lam))
        }
        (BoundSelector::EmpiricalKappa, _) => {
            flags.push("empirical-kappa-threshold-uses-unit-lipschitz".into());
            let g = inputs.gee_inf()?;
            let lam = inputs.lambda_nu()?;
            Box::new(move |t| empirical_kappa_bound(n, t, g, lam))
        }
        (BoundSelector::IntervalKappa, _) => {
            let StateSpace::Interval { a, b } = space else { unreachable!("checked above") };
            let g = inputs.gee_inf()?;
            let lam = inputs.lambda_nu()?;
            Box::new(move |t| interval_kappa_bound(n, t, a, b, g, lam))
        }
        (BoundSelector::Sync, _) => {
            let TailObservable::Sync { mu_b, .. } = tail.observable else { unreachable!("compatible") };
            let g = inputs.gee_inf()?;
            let lam = inputs.lambda_nu()?;
            inputs.record("mu_b", mu_b, Provenance::Exact);
            Box::new(move |t| sync_bound(n, t, g, lam, mu_b))
        }
        (BoundSelector::CorrDim, Prepared::CorrSum(eps)) => {
            let eps = *eps;
            let (lphi, sup) = (Kernel::Phi0.lipschitz(), Kernel::Phi0.sup_norm());
            let g = inputs.gee_inf()?;
            let lam = inputs.lambda_nu()?;
            Box::new(move |t| corrdim_bound(n, t, eps, lphi, sup, g, lam))
        }
        (BoundSelector::CircleLyap, _) => {
            let (lo, hi) = nu.derivative_extremes(cfg.grid())?;
            let m = inputs.pick("m_nu", tail.overrides.m_nu, None, |_| Ok(lo))?;
            let big_m = inputs.pick("M_nu", tail.overrides.big_m_nu, None, |_| Ok(hi))?;
            let g = inputs.pick("gee_c1", tail.overrides.gee, None, |s| gee_diameter_c1(s.nu, &space, s.cfg.grid()))?;
            let lam = inputs.lambda_nu()?;
            let gate = t_n_hat.expect("long-run centering");
            Box::new(move |t| {
                let v = circle_lyap_bound(n, t, m, big_m, g, lam)?;
                Ok(GatedBound { threshold: gate, bound: (t > gate).then_some(v) })
            })
        }
        (BoundSelector::ProjectiveLyap | BoundSelector::MatrixNorm, _) => {
            flags.push("no-n-in-exponent".into());
            let cap = nu
                .support_atoms(cfg.grid())
                .iter()
                .map(|f| match f {
                    crate::rds::MapDescriptor::ProjectiveAction(a) => a.norm_cap(),
                    _ => usage("projective bounds need a matrix law"),
                })
                .try_fold(1.0f64, |acc, c| c.map(|c| acc.max(c)))?;
            let c = inputs.pick("C", tail.overrides.c_cap, None, |_| Ok(cap))?;
            let lam = inputs.lambda_nu()?;
            let two_t_n = 2.0 * t_n_hat.expect("long-run centering");
            if selector == BoundSelector::ProjectiveLyap {
                Box::new(move |t| {
                    let v = projective_lyap_bound(t, c, lam)?;
                    Ok(GatedBound { threshold: two_t_n, bound: (t > two_t_n).then_some(v) })
                })
            } else {
                let m = nu.matrix_dim()?;
                Box::new(move |t| matrix_norm_bound(n, t, m, c, lam, two_t_n))
            }
        }
        _ => unreachable!("selector compatibility checked above"),
    };
    if inputs.estimated() {
        flags.push("estimated-inputs".into());
    }
    let input_list = std::mem::take(&mut inputs.list);

    let values = exp.run(n, tail.trials, cfg.seed, 0)?;
    let deviations: Vec<f64> = values
        .iter()
        .map(|v| match sidedness {
            Sidedness::OneSided => v - centering.value,
            Sidedness::TwoSided => (v - centering.value).abs(),
        })
        .collect();
    let count = |level: f64| deviations.iter().filter(|d| **d > level).count() as u64;
    let trials = tail.trials as u64;
    let mut rows = Vec::with_capacity(tail.t_ladder.len());
    for &t in &tail.t_ladder {
        let gated = bound_at(t)?;
        let k = count(t);
        let p_hat = k as f64 / trials as f64;
        let ci_lo = wilson(count(t + centering.margin), trials, Z95).lo;
        let ci_hi = wilson(count(t - centering.margin), trials, Z95).hi;
        let verdict = match gated.bound {
            None => Verdict::NotApplicable,
            Some(b) if ci_hi <= b => Verdict::Pass,
            Some(_) => Verdict::Fail,
        };
        rows.push(TailRow { t, p_hat, ci_lo, ci_hi, bound: gated.bound, threshold: gated.threshold, verdict });
    }
    if rows.iter().any(|r| r.bound.is_some_and(|b| b >= 1.0)) {
        flags.push("vacuous-rows".into());
    }

    Ok(TailReport {
        rows,
        meta: TailMeta {
            observable: tail.observable.name(),
            bound: selector,
            sidedness,
            n,
            trials: tail.trials,
            pilot_trials,
            seed: cfg.seed,
            start: x0.coords(),
            centering,
            inputs: input_list,
            flags,
        },
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}
