//! One line per acceptance criterion. Every check runs, then the test fails
//! if any criterion did.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rdsconc::bounds::appendix_checks;
use rdsconc::chains::enumerate_expectation;
use rdsconc::estimators::{
    correlation_dimension, correlation_sum, kantorovich_interval, lyapunov_1d, lyapunov_projective,
    nonexpansive_fixed_points, u_profile, Kernel, PairSource, DEFAULT_FIXED_POINT_GRID,
};
use rdsconc::harness::{run_asclt, run_lambda_survey, run_tail, ExperimentConfig, Verdict};
use rdsconc::stats::{wilson, Z95};
use rdsconc::{
    simulate, CompositionOrder, DrivingMeasure, EmpiricalMeasure, MapDescriptor, MapDraw, Matrix, ParamFamily,
    ParamSampler, Point, RecordFlags, SeededStream, StateSpace,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).expect("valid config")
}

fn closed_form_iterates() -> Outcome {
    let nu = DrivingMeasure::parametric(
        StateSpace::unit_interval(),
        ParamFamily::MoebiusDecay,
        ParamSampler::uniform(1.0, 2.0).unwrap(),
    )
    .unwrap();
    let mut rng = StdRng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.random();
        let n = rng.random_range(1..=100);
        let mut stream = SeededStream::new(rng.random(), rng.random());
        let traj = simulate(&nu, &Point::real(x), n, &mut stream, RecordFlags::ALL).unwrap();
        let alpha_sum: f64 = traj
            .draws
            .as_ref()
            .unwrap()
            .iter()
            .map(|d| match d {
                MapDraw::Param(a) => *a,
                MapDraw::Atom(_) => unreachable!("parametric law"),
            })
            .sum();
        let expect = x / (1.0 + alpha_sum * x);
        worst = worst.max((traj.last().first() - expect).abs());
    }
    outcome(worst <= 1e-12, format!("max |X_n - x/(1 + sum alpha x)| = {worst:.3e}"))
}

fn lambda_growth() -> Outcome {
    let c = config(
        r#"{"system": {"kind": "library", "name": "moebius-uniform"}, "seed": 11,
            "lambda": {"n_ladder": [10, 100, 1000], "trials": 2000, "grid": 64}}"#,
    );
    let rows = run_lambda_survey(&c).unwrap();
    let mut pass = rows.len() == 3;
    let mut detail = Vec::new();
    for r in &rows {
        let cap = 1.0 + ((r.n + 1) as f64).ln();
        pass &= r.lambda_hat <= cap + 3.0 * r.stderr && !r.diverged;
        detail.push(format!("n={}: {:.4} <= {:.4}", r.n, r.lambda_hat, cap + 3.0 * r.stderr));
    }
    outcome(pass, detail.join("; "))
}

fn exact_u_profile() -> Outcome {
    let nu = DrivingMeasure::uniform(
        StateSpace::unit_interval(),
        vec![MapDescriptor::moebius(1.0).unwrap(), MapDescriptor::moebius(2.0).unwrap()],
    )
    .unwrap();
    let (x, y) = (Point::real(0.0), Point::real(1.0));
    let mc = u_profile(&nu, PairSource::WholeSpace { resolution: 2 }, 6, 100_000, 3).unwrap();
    let mut pass = true;
    let mut worst_z: f64 = 0.0;
    let mut exact = Vec::new();
    for (k, s) in mc.iter().enumerate() {
        let e = enumerate_expectation(&nu, (&x, &y), k, |p| (p.xs[k].first() - p.ys[k].first()).abs()).unwrap();
        exact.push(e);
        if s.stderr == 0.0 {
            pass &= (s.mean - e).abs() <= 1e-12;
        } else {
            let z = (s.mean - e).abs() / s.stderr;
            worst_z = worst_z.max(z);
            pass &= z <= 4.0;
        }
    }
    pass &= (exact[1] - 5.0 / 12.0).abs() < 1e-15 && (exact[2] - 31.0 / 120.0).abs() < 1e-15;
    outcome(pass, format!("u_1 = {:.15}, u_2 = {:.15}, max |z| = {worst_z:.2}", exact[1], exact[2]))
}

/// Minimum-cost perfect matching of a square cost matrix (Hungarian method).
fn assignment_cost(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let inf = f64::INFINITY;
    let (mut u, mut v) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    let (mut p, mut way) = (vec![0usize; n + 1], vec![0usize; n + 1]);
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let (mut delta, mut j1) = (inf, 0);
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| cost[p[j] - 1][j - 1]).sum()
}

fn dall_aglio() -> Outcome {
    let space = StateSpace::interval(-1.0, 2.0).unwrap();
    let mut rng = StdRng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let m = rng.random_range(1..=20);
        let xs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..2.0)).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..2.0)).collect();
        let mu = EmpiricalMeasure::uniform(space, xs.iter().map(|&x| Point::real(x)).collect()).unwrap();
        let nu = EmpiricalMeasure::uniform(space, ys.iter().map(|&y| Point::real(y)).collect()).unwrap();
        let cost: Vec<Vec<f64>> = xs.iter().map(|x| ys.iter().map(|y| (x - y).abs()).collect()).collect();
        let oracle = assignment_cost(&cost) / m as f64;
        worst = worst.max((kantorovich_interval(&mu, &nu).unwrap() - oracle).abs());
    }
    outcome(worst <= 1e-9, format!("max deviation from assignment oracle = {worst:.3e}"))
}

fn kernel_sandwich() -> Outcome {
    let mut rng = StdRng::seed_from_u64(505);
    let mut violations = 0;
    let mut checks = 0;
    for set in 0..1000 {
        let (space, points): (StateSpace, Vec<Point>) = if set % 2 == 0 {
            let n = rng.random_range(2..=200);
            (StateSpace::unit_interval(), (0..n).map(|_| Point::real(rng.random())).collect())
        } else {
            let n = rng.random_range(2..=200);
            (StateSpace::Circle, (0..n).map(|_| Point::circle(rng.random())).collect())
        };
        for _ in 0..3 {
            let eps: f64 = 10f64.powf(rng.random_range(-3.0..-0.3));
            let lo = correlation_sum(&space, &points, eps / 2.0, Kernel::Heaviside).unwrap().value;
            let mid = correlation_sum(&space, &points, eps, Kernel::Phi0).unwrap().value;
            let hi = correlation_sum(&space, &points, 2.0 * eps, Kernel::Heaviside).unwrap().value;
            checks += 1;
            if !(lo <= mid && mid <= hi) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations in {checks} checks"))
}

fn lebesgue_dimension() -> Outcome {
    let mut rng = StdRng::seed_from_u64(606);
    let points: Vec<Point> = (0..10_000).map(|_| Point::real(rng.random())).collect();
    let ladder: Vec<f64> = (0..5).map(|j| 0.1 * 0.5f64.powi(j)).collect();
    let fit = correlation_dimension(&StateSpace::unit_interval(), &points, &ladder).unwrap();
    outcome((fit.slope - 1.0).abs() <= 0.1, format!("slope = {:.4}", fit.slope))
}

fn lln_dominance() -> Outcome {
    let c = config(
        r#"{"system": {"kind": "library", "name": "halving"}, "seed": 7,
            "tail": {"observable": {"kind": "birkhoff", "h": {"kind": "coordinate"}}, "bound": "lln",
                     "n": 200, "t_ladder": [0.15, 0.2, 0.3], "trials": 10000}}"#,
    );
    let r = run_tail(&c).unwrap();
    let mut pass = r.rows.len() == 3;
    let mut detail = Vec::new();
    for row in &r.rows {
        let formula = 2.0 * (-200.0 * row.t * row.t / 300.0).exp();
        let bound_ok = row.bound.is_some_and(|b| (b - formula).abs() <= 1e-12 * formula);
        pass &= bound_ok && row.verdict == Verdict::Pass && row.ci_hi <= formula;
        detail.push(format!("t={}: {:.2e} <= {:.4}", row.t, row.ci_hi, formula));
    }
    let mean = r.meta.centering.value;
    pass &= (mean - 0.5).abs() <= 0.01;
    for inp in &r.meta.inputs {
        if inp.name == "lambda_nu" || inp.name == "gee_inf" {
            pass &= inp.provenance == rdsconc::harness::tail::Provenance::Analytic;
        }
    }
    detail.push(format!("Birkhoff mean {mean:.5}"));
    outcome(pass, detail.join("; "))
}

fn lyapunov_exactness() -> Outcome {
    let space = StateSpace::projective(2).unwrap();
    let e1 = Point::direction(vec![1.0, 0.0]).unwrap();
    let rates = |a: Matrix, x: &Point| {
        let nu = DrivingMeasure::dirac(space, MapDescriptor::projective(a)).unwrap();
        lyapunov_projective(&nu, x, 100, &mut SeededStream::new(1, 0)).unwrap()
    };
    let hyp = rates(Matrix::diag2(2.0).unwrap(), &e1);
    let ln2 = 2f64.ln();
    let mut pass = (hyp.vector_rate - ln2).abs() <= 1e-12 && (hyp.norm_rate - ln2).abs() <= 1e-9;
    let mut worst_rot: f64 = 0.0;
    let x = Point::direction(vec![0.6, 0.8]).unwrap();
    for phi in [0.1, 1.0, 2.5, std::f64::consts::FRAC_PI_2] {
        let r = rates(Matrix::rotation(phi), &x);
        worst_rot = worst_rot.max(r.vector_rate.abs()).max(r.norm_rate.abs());
    }
    pass &= worst_rot <= 1e-9;
    outcome(
        pass,
        format!(
            "vector {:.3e}, norm {:.3e} off ln 2; rotations max |rate| {worst_rot:.3e}",
            (hyp.vector_rate - ln2).abs(),
            (hyp.norm_rate - ln2).abs()
        ),
    )
}

type M2 = [f64; 4];

fn mat_mul(a: &M2, b: &M2) -> M2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn rot(t: f64) -> M2 {
    let (s, c) = t.sin_cos();
    [c, -s, s, c]
}

/// Circle coordinate `theta` is the line through `(cos pi theta, sin pi theta)`.
fn act(a: &M2, theta: f64) -> f64 {
    let (s, c) = (std::f64::consts::PI * theta).sin_cos();
    let (w0, w1) = (a[0] * c + a[1] * s, a[2] * c + a[3] * s);
    (w1.atan2(w0) / std::f64::consts::PI).rem_euclid(1.0)
}

fn largest_singular_value(a: &M2) -> f64 {
    let f2 = a.iter().map(|x| x * x).sum::<f64>();
    let det = a[0] * a[3] - a[1] * a[2];
    ((f2 + (f2 * f2 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
}

fn chain_rule_vs_finite_differences() -> Outcome {
    let mut rng = StdRng::seed_from_u64(909);
    let mut worst: f64 = 0.0;
    for sys in 0..100 {
        let k = rng.random_range(2..=3);
        let mats: Vec<M2> = (0..k)
            .map(|_| {
                let s = rng.random_range(1.05..1.6);
                let d = [s, 0.0, 0.0, 1.0 / s];
                mat_mul(&rot(rng.random_range(0.0..3.2)), &mat_mul(&d, &rot(rng.random_range(0.0..3.2))))
            })
            .collect();
        let atoms = mats
            .iter()
            .map(|m| MapDescriptor::projective(Matrix::new(2, m.to_vec()).unwrap()))
            .collect();
        let nu = DrivingMeasure::uniform(StateSpace::Circle, atoms).unwrap();
        let n = rng.random_range(1..=20);
        let theta: f64 = rng.random();
        let traj = simulate(&nu, &Point::circle(theta), n, &mut SeededStream::new(sys, 0), RecordFlags::ALL).unwrap();
        let chain = lyapunov_1d(&traj).unwrap() * n as f64;

        let word: Vec<usize> = traj
            .draws
            .as_ref()
            .unwrap()
            .iter()
            .map(|d| match d {
                MapDraw::Atom(i) => *i,
                MapDraw::Param(_) => unreachable!("finite law"),
            })
            .collect();
        let product = word.iter().fold([1.0, 0.0, 0.0, 1.0], |acc, &i| mat_mul(&mats[i], &acc));
        let compose = |t: f64| word.iter().fold(t, |x, &i| act(&mats[i], x));
        // G' changes by O(1) over an angle of about |Av| / ||A||; the step
        // is a fixed fraction of that.
        let (s, c) = (std::f64::consts::PI * theta).sin_cos();
        let av = (product[0] * c + product[1] * s).hypot(product[2] * c + product[3] * s);
        let h = 1e-2 * av / largest_singular_value(&product);
        let central = |h: f64| {
            let (tp, tm) = (theta + h, theta - h);
            let mut diff = compose(tp) - compose(tm);
            diff -= diff.round();
            diff / (tp - tm)
        };
        let fd = ((4.0 * central(h / 2.0) - central(h)) / 3.0).abs().ln();
        let e = (chain - fd).abs() / fd.abs().max(1.0);
        worst = worst.max(e);
    }
    outcome(worst <= 1e-5, format!("max relative deviation {worst:.3e}"))
}

fn fixed_point_detection() -> Outcome {
    let nu = DrivingMeasure::dirac(StateSpace::Circle, MapDescriptor::projective(Matrix::diag2(4.0).unwrap())).unwrap();
    let fps = nonexpansive_fixed_points(
        &nu,
        1,
        &mut SeededStream::new(1, 0),
        DEFAULT_FIXED_POINT_GRID,
        CompositionOrder::default(),
    )
    .unwrap();
    let attracting = fps.iter().any(|f| (f.multiplier - 1.0 / 16.0).abs() <= 1e-6);
    let repelling = fps.iter().any(|f| (f.multiplier - 16.0).abs() <= 1e-3);
    let found: Vec<String> = fps.iter().map(|f| format!("{:?} x{:.8}", f.point, f.multiplier)).collect();
    outcome(attracting && !repelling, format!("found [{}]", found.join(", ")))
}

fn asclt_trend() -> Outcome {
    let c = config(
        r#"{"system": {"kind": "library", "name": "halving"}, "seed": 5,
            "asclt": {"h": {"kind": "shifted", "c": 0.5}, "min_exp": 6, "max_exp": 14}}"#,
    );
    let r = run_asclt(&c).unwrap();
    let first = r.rows.first().unwrap();
    let last = r.rows.last().unwrap();
    let pass = first.n == 64 && last.n == 16384 && last.kappa < first.kappa && last.kappa < 0.2 && !r.degenerate;
    outcome(pass, format!("kappa(2^6) = {:.4}, kappa(2^14) = {:.4}, sigma^2 = {:.4}", first.kappa, last.kappa, r.sigma2))
}

fn appendix_suite() -> Outcome {
    let app = appendix_checks();
    let w = wilson(0, 100, Z95).hi;
    let closed = Z95 * Z95 / (100.0 + Z95 * Z95);
    let pass = app.passed() && app.exp_points == 10_001 && app.moment_trials == 1000 && (w - closed).abs() < 1e-4;
    outcome(pass, format!("exp min margin {:.3e}, moment min margin {:.3e}, Wilson upper {w:.6}", app.exp_min_margin, app.moment_min_margin))
}

fn selftest_determinism() -> Outcome {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_rdsconc"))
            .args(["selftest", "--seed", "314159", "--threads", threads])
            .output()
            .expect("binary runs");
        (out.status.code(), out.stdout)
    };
    let a = run("1");
    let b = run("1");
    let c = run("8");
    let pass = a.0 == Some(0) && a == b && a == c && !a.1.is_empty();
    outcome(pass, format!("exit codes {:?} {:?} {:?}, {} bytes", a.0, b.0, c.0, a.1.len()))
}

#[test]
fn acceptance() {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Check, u64); 13] = [
        (1, "closed-form iterate law", closed_form_iterates, 5),
        (2, "lambda growth", lambda_growth, 60),
        (3, "oracle equivalence", exact_u_profile, 30),
        (4, "Dall'Aglio correctness", dall_aglio, 10),
        (5, "kernel sandwich", kernel_sandwich, 20),
        (6, "correlation dimension of Lebesgue", lebesgue_dimension, 20),
        (7, "LLN dominance", lln_dominance, 60),
        (8, "Lyapunov exactness", lyapunov_exactness, 1),
        (9, "circle chain rule vs finite differences", chain_rule_vs_finite_differences, 30),
        (10, "NF detection", fixed_point_detection, 1),
        (11, "ASCLT trend", asclt_trend, 120),
        (12, "appendix property suite", appendix_suite, 5),
        (13, "determinism and thread invariance", selftest_determinism, 120),
    ];
    let mut failed = Vec::new();
    for (id, name, check, limit) in criteria {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(limit);
        let pass = o.pass && in_time;
        println!(
            "criterion {id:>2} {}: {name}: {} ({:.2}s of {limit}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
