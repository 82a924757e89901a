//! A quick deterministic run of the property checks and tail dominance
//! experiments on library systems with closed-form constants.

use std::time::Instant;

use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::experiments::run_lambda_survey;
use super::report::{Cell, Report, Table};
use super::tail::{run_tail, Verdict};
use crate::bounds::appendix_checks;
use crate::error::{Error, Result};
use crate::stats::{wilson, Z95};

pub const DEFAULT_SELFTEST_SEED: u64 = 20_240_917;
pub const DEFAULT_SELFTEST_TRIALS: usize = 10_000;

pub const SELFTEST_COLUMNS: [&str; 9] =
    ["experiment", "quantity", "t", "value", "ci_lo", "ci_hi", "bound", "threshold", "verdict"];

#[derive(Clone, Debug, PartialEq)]
pub struct SelftestOutcome {
    pub report: Report,
    pub passed: bool,
}

fn check_row(experiment: &str, quantity: &str, value: f64, bound: Option<f64>, ok: bool) -> Vec<Cell> {
    let verdict = if ok { "pass" } else { "fail" };
    vec![
        experiment.into(),
        quantity.into(),
        Cell::Missing,
        value.into(),
        Cell::Missing,
        Cell::Missing,
        bound.into(),
        Cell::Missing,
        verdict.into(),
    ]
}

fn tail_cases(trials: usize) -> Vec<(&'static str, Value)> {
    let halving = json!({"kind": "library", "name": "halving"});
    vec![
        (
            "halving-lln",
            json!({"system": halving, "tail": {
                "observable": {"kind": "birkhoff", "h": {"kind": "coordinate"}},
                "bound": "lln", "n": 200, "t_ladder": [0.01, 0.15, 0.2, 0.3], "trials": trials}}),
        ),
        (
            "halving-main",
            json!({"system": halving, "tail": {
                "observable": {"kind": "birkhoff", "h": {"kind": "coordinate"}},
                "bound": "main", "n": 100, "t_ladder": [0.05, 0.1, 0.2], "trials": trials}}),
        ),
        (
            "halving-refined",
            json!({"system": halving, "tail": {
                "observable": {"kind": "birkhoff", "h": {"kind": "coordinate"}},
                "bound": "refined", "n": 100, "t_ladder": [0.05, 0.1, 0.2], "trials": trials}}),
        ),
        (
            "halving-empirical-kappa",
            json!({"system": halving, "tail": {
                "observable": {"kind": "kappa-to-stationary", "reference": {"kind": "uniform"}},
                "n": 200, "t_ladder": [0.05, 0.1, 0.2], "trials": trials}}),
        ),
        (
            "halving-interval-kappa",
            json!({"system": halving, "tail": {
                "observable": {"kind": "kappa-interval", "reference": {"kind": "uniform"}},
                "n": 200, "t_ladder": [0.5, 0.6, 0.8], "trials": trials}}),
        ),
        (
            "polynomial-lln",
            json!({"system": {"kind": "library", "name": "polynomial-decay"}, "tail": {
                "observable": {"kind": "birkhoff", "h": {"kind": "coordinate"}},
                "bound": "lln", "n": 200, "t_ladder": [0.01, 0.05, 0.1], "trials": trials, "start": [0.4]}}),
        ),
        (
            "moebius-main",
            json!({"system": {"kind": "library", "name": "moebius-uniform"}, "tail": {
                "observable": {"kind": "birkhoff", "h": {"kind": "coordinate"}},
                "bound": "main", "n": 100, "t_ladder": [0.05, 0.1, 0.2], "trials": trials}}),
        ),
    ]
}

pub fn run_selftest(seed: u64, trials: Option<usize>) -> Result<SelftestOutcome> {
    let started = Instant::now();
    let trials = trials.unwrap_or(DEFAULT_SELFTEST_TRIALS);
    let mut table = Table::new(&SELFTEST_COLUMNS);
    let mut passed = true;

    let app = appendix_checks();
    passed &= app.passed();
    table.push(check_row("appendix", "exp_min_margin", app.exp_min_margin, None, app.exp_violations == 0));
    table.push(check_row("appendix", "moment_min_margin", app.moment_min_margin, None, app.moment_violations == 0));

    let w = wilson(0, 100, Z95).hi;
    let closed = Z95 * Z95 / (100.0 + Z95 * Z95);
    let ok = (w - closed).abs() < 1e-4;
    passed &= ok;
    table.push(check_row("wilson", "upper_0_of_100", w, Some(closed), ok));

    for (name, cfg) in tail_cases(trials) {
        let mut cfg: ExperimentConfig =
            serde_json::from_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
        cfg.seed = seed;
        let r = run_tail(&cfg)?;
        passed &= r.dominance_holds();
        for row in &r.rows {
            table.push(vec![
                name.into(),
                "p_hat".into(),
                row.t.into(),
                row.p_hat.into(),
                row.ci_lo.into(),
                row.ci_hi.into(),
                row.bound.into(),
                row.threshold.into(),
                row.verdict.as_str().into(),
            ]);
        }
    }

    let survey: ExperimentConfig = serde_json::from_value(json!({
        "system": {"kind": "library", "name": "moebius-uniform"}, "seed": seed,
        "lambda": {"n_ladder": [10, 100], "trials": 400, "grid": 16}}))
    .map_err(|e| Error::Config(e.to_string()))?;
    for r in run_lambda_survey(&survey)? {
        let cap = r.cap.expect("library cap");
        let ok = r.lambda_hat <= cap + 3.0 * r.stderr;
        passed &= ok;
        table.push(check_row("moebius-lambda", &format!("lambda_{}", r.n), r.lambda_hat, Some(cap), ok));
    }

    let failures = table
        .rows
        .iter()
        .filter(|row| row[8] == Cell::from(Verdict::Fail.as_str()))
        .count();
    Ok(SelftestOutcome {
        report: Report {
            experiment: "selftest",
            table,
            meta: json!({ "seed": seed, "trials": trials, "failures": failures }),
            runtime_seconds: started.elapsed().as_secs_f64(),
        },
        passed,
    })
}
