//! Closed-form concentration bounds, their validity thresholds, and two
//! elementary inequalities used in the proofs as checkable utilities.
//!
//! Bounds above 1 are returned unclipped; see [`GatedBound::is_vacuous`].

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::rds::SeededStream;

/// Per-coordinate Lipschitz weights `gamma_0..gamma_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gamma {
    Explicit(Vec<f64>),
    /// `gamma_i = c / n` for every `i`.
    Uniform {
        c: f64,
    },
}

impl Gamma {
    /// The `n + 1` weights.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        match self {
            Gamma::Explicit(g) => g.clone(),
            Gamma::Uniform { c } => vec![c / n as f64; n + 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub n: usize,
    pub gamma: Gamma,
    /// `|G|` in whichever metric the bound calls for.
    pub gee_diameter: f64,
    /// `lambda_n` or `lambda_nu`.
    pub lambda: f64,
    #[serde(default)]
    pub u: Option<Vec<f64>>,
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub sup_norm: Option<f64>,
    #[serde(default)]
    pub m_nu: Option<f64>,
    #[serde(default, rename = "M_nu")]
    pub big_m_nu: Option<f64>,
    #[serde(default)]
    pub c_cap: Option<f64>,
    #[serde(default)]
    pub m_dim: Option<usize>,
    #[serde(default)]
    pub diam_m: Option<f64>,
}

fn nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        usage(format!("{name} must be finite and nonnegative, got {x}"))
    }
}

impl BoundInputs {
    pub fn new(n: usize, gamma: Gamma, gee_diameter: f64, lambda: f64) -> Result<Self> {
        let b = BoundInputs {
            n,
            gamma,
            gee_diameter,
            lambda,
            u: None,
            lipschitz: None,
            sup_norm: None,
            m_nu: None,
            big_m_nu: None,
            c_cap: None,
            m_dim: None,
            diam_m: None,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn with_u(mut self, u: Vec<f64>) -> Result<Self> {
        self.u = Some(u);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return usage("n must be at least 1");
        }
        let g = self.gamma.weights(self.n);
        if g.len() != self.n + 1 {
            return usage(format!(
                "expected {} gamma weights, got {}",
                self.n + 1,
                g.len()
            ));
        }
        for x in &g {
            nonneg("gamma", *x)?;
        }
        if !g.iter().any(|x| *x > 0.0) {
            return usage("at least one gamma must be strictly positive");
        }
        nonneg("gee_diameter", self.gee_diameter)?;
        nonneg("lambda", self.lambda)?;
        for x in self.u.iter().flatten() {
            nonneg("u", *x)?;
        }
        let optional = [
            ("lipschitz", self.lipschitz),
            ("sup_norm", self.sup_norm),
            ("m_nu", self.m_nu),
            ("M_nu", self.big_m_nu),
            ("c_cap", self.c_cap),
            ("diam_m", self.diam_m),
        ];
        for (name, v) in optional {
            if let Some(v) = v {
                nonneg(name, v)?;
            }
        }
        Ok(())
    }
}

/// A bound together with the deviation size from which it applies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GatedBound {
    pub threshold: f64,
    /// `None` when `t` is outside the regime of the theorem.
    pub bound: Option<f64>,
}

impl GatedBound {
    pub fn applies(&self) -> bool {
        self.bound.is_some()
    }

    pub fn is_vacuous(&self) -> bool {
        self.bound.is_some_and(|b| b >= 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Gate {
    /// In regime iff `t > threshold`.
    Strict,
    /// In regime iff `t >= threshold`.
    Inclusive,
}

fn gated(t: f64, threshold: f64, gate: Gate, value: impl FnOnce() -> f64) -> GatedBound {
    let inside = match gate {
        Gate::Strict => t > threshold,
        Gate::Inclusive => t >= threshold,
    };
    GatedBound {
        threshold,
        bound: inside.then(value),
    }
}

fn positive_t(t: f64) -> Result<()> {
    if t > 0.0 && !t.is_nan() {
        Ok(())
    } else {
        usage(format!("deviation t must be positive, got {t}"))
    }
}

/// `exp(-a / b)` with `a / 0 = +inf` for `a > 0`.
fn exp_neg_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        (-num / den).exp()
    }
}

/// `beta_n = n (|G| + lambda_n) max_i gamma_i`.
pub fn beta_n(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let max_g = inputs
        .gamma
        .weights(inputs.n)
        .into_iter()
        .fold(0.0, f64::max);
    Ok(inputs.n as f64 * (inputs.gee_diameter + inputs.lambda) * max_g)
}

/// One-sided bound `exp(-n t^2 / (12 beta^2))`.
pub fn main_tail_bound(n: usize, t: f64, beta: f64) -> Result<f64> {
    positive_t(t)?;
    nonneg("beta", beta)?;
    Ok(exp_neg_ratio(n as f64 * t * t, 12.0 * beta * beta))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinedAlpha {
    pub alpha: Vec<f64>,
    pub alpha_sq: f64,
}

/// `alpha_k = gamma_k |G| + sum_{j=1}^{n-k} gamma_{k+j} u_{j-1}` for `k = 0..=n`.
pub fn refined_alpha(inputs: &BoundInputs) -> Result<RefinedAlpha> {
    inputs.validate()?;
    let n = inputs.n;
    let Some(u) = inputs.u.as_deref() else {
        return usage("the refined bound needs the u profile");
    };
    if u.len() != n {
        return usage(format!("expected {n} u values, got {}", u.len()));
    }
    let g = inputs.gamma.weights(n);
    let alpha: Vec<f64> = (0..=n)
        .map(|k| g[k] * inputs.gee_diameter + (1..=n - k).map(|j| g[k + j] * u[j - 1]).sum::<f64>())
        .collect();
    let alpha_sq = alpha.iter().map(|a| a * a).sum();
    Ok(RefinedAlpha { alpha, alpha_sq })
}

/// `exp(-t^2 / (12 alpha^2))`.
pub fn refined_tail_bound(t: f64, alpha_sq: f64) -> Result<f64> {
    positive_t(t)?;
    nonneg("alpha_sq", alpha_sq)?;
    Ok(exp_neg_ratio(t * t, 12.0 * alpha_sq))
}

/// Synchronization: threshold `8 (g + lambda) sqrt(log(1/mu_B)) / sqrt(n) + lambda / n`,
/// bound `exp(-n t^2 / (48 (g + lambda)^2))`.
pub fn sync_bound(n: usize, t: f64, gee_inf: f64, lambda_nu: f64, mu_b: f64) -> Result<GatedBound> {
    positive_t(t)?;
    if !(mu_b > 0.0 && mu_b <= 1.0) {
        return usage(format!("mu(B) must lie in (0, 1], got {mu_b}"));
    }
    let nf = n as f64;
    let s = gee_inf + lambda_nu;
    let threshold = 8.0 * s * (-mu_b.ln()).max(0.0).sqrt() / nf.sqrt() + lambda_nu / nf;
    Ok(gated(t, threshold, Gate::Inclusive, || {
        exp_neg_ratio(nf * t * t, 48.0 * s * s)
    }))
}

/// Law of large numbers: threshold `2 lambda L / n` (strict),
/// bound `2 exp(-n t^2 / (48 L^2 (lambda + g)^2))`.
pub fn lln_bound(
    n: usize,
    t: f64,
    lipschitz: f64,
    gee_inf: f64,
    lambda_nu: f64,
) -> Result<GatedBound> {
    positive_t(t)?;
    if !(lipschitz > 0.0) {
        return usage("the observable's Lipschitz constant must be positive");
    }
    let nf = n as f64;
    let s = lipschitz * (gee_inf + lambda_nu);
    let threshold = 2.0 * lambda_nu * lipschitz / nf;
    Ok(gated(t, threshold, Gate::Strict, || {
        2.0 * exp_neg_ratio(nf * t * t, 48.0 * s * s)
    }))
}

/// Kantorovich distance of the empirical measure to its mean: threshold
/// `2 lambda / n` (strict), bound `2 exp(-n t^2 / (12 (g + lambda)^2))`.
pub fn empirical_kappa_bound(n: usize, t: f64, gee_inf: f64, lambda_nu: f64) -> Result<GatedBound> {
    positive_t(t)?;
    let nf = n as f64;
    let s = gee_inf + lambda_nu;
    Ok(gated(t, 2.0 * lambda_nu / nf, Gate::Strict, || {
        2.0 * exp_neg_ratio(nf * t * t, 12.0 * s * s)
    }))
}

/// Kantorovich distance to the stationary law on `[a, b]`: threshold
/// `(b - a)(1 + 8 lambda)^{1/4} / n^{1/4}`, bound `exp(-n t^2 / (48 (g + lambda)^2))`.
pub fn interval_kappa_bound(
    n: usize,
    t: f64,
    a: f64,
    b: f64,
    gee_inf: f64,
    lambda_nu: f64,
) -> Result<GatedBound> {
    positive_t(t)?;
    if !(b > a) {
        return usage("interval needs a < b");
    }
    let nf = n as f64;
    let s = gee_inf + lambda_nu;
    let threshold = (b - a) * (1.0 + 8.0 * lambda_nu).powf(0.25) / nf.powf(0.25);
    Ok(gated(t, threshold, Gate::Inclusive, || {
        exp_neg_ratio(nf * t * t, 48.0 * s * s)
    }))
}

/// The constant `c = 1 / (192 L^2 (g + lambda)^2)` of the correlation-sum bound.
pub fn corrdim_constant(lipschitz_phi: f64, gee_inf: f64, lambda_nu: f64) -> f64 {
    let s = lipschitz_phi * (gee_inf + lambda_nu);
    1.0 / (192.0 * s * s)
}

/// Correlation sums: threshold `8 L lambda / (eps n) + |phi| / n` (strict),
/// bound `2 exp(-c n t^2 eps^2)`.
pub fn corrdim_bound(
    n: usize,
    t: f64,
    eps: f64,
    lipschitz_phi: f64,
    sup_phi: f64,
    gee_inf: f64,
    lambda_nu: f64,
) -> Result<GatedBound> {
    positive_t(t)?;
    if !(eps > 0.0) {
        return usage("radius must be positive");
    }
    if !(lipschitz_phi > 0.0) {
        return usage("kernel Lipschitz constant must be positive");
    }
    nonneg("sup_phi", sup_phi)?;
    let nf = n as f64;
    let threshold = 8.0 * lipschitz_phi * lambda_nu / (eps * nf) + sup_phi / nf;
    let s = lipschitz_phi * (gee_inf + lambda_nu);
    Ok(gated(t, threshold, Gate::Strict, || {
        2.0 * exp_neg_ratio(nf * t * t * eps * eps, 192.0 * s * s)
    }))
}

/// Circle Lyapunov exponent: `2 exp(-n t^2 m^2 / (48 M^2 (g + lambda)^2))`.
pub fn circle_lyap_bound(
    n: usize,
    t: f64,
    m_nu: f64,
    big_m_nu: f64,
    gee_c1: f64,
    lambda: f64,
) -> Result<f64> {
    positive_t(t)?;
    if !(m_nu > 0.0) || !(big_m_nu >= m_nu) {
        return usage(format!(
            "need 0 < m_nu <= M_nu, got m_nu = {m_nu}, M_nu = {big_m_nu}"
        ));
    }
    let s = big_m_nu * (gee_c1 + lambda);
    Ok(2.0 * exp_neg_ratio(n as f64 * t * t * m_nu * m_nu, 48.0 * s * s))
}

fn check_cap(c: f64) -> Result<()> {
    if c >= 1.0 && c.is_finite() {
        Ok(())
    } else {
        usage(format!("matrix norm cap must be at least 1, got {c}"))
    }
}

/// Projective Lyapunov exponent: `exp(-t^2 / (192 C^4 (lambda + C)^2))`.
/// There is no factor `n` in the exponent.
pub fn projective_lyap_bound(t: f64, c: f64, lambda_nu: f64) -> Result<f64> {
    positive_t(t)?;
    check_cap(c)?;
    Ok(exp_neg_ratio(
        t * t,
        192.0 * c.powi(4) * (lambda_nu + c).powi(2),
    ))
}

/// `(2/n) log m`, the explicit part of the matrix-norm threshold.
pub fn matrix_norm_log_term(n: usize, m_dim: usize) -> f64 {
    2.0 * (m_dim as f64).ln() / n as f64
}

/// Matrix norm growth: threshold `two_t_n + (2/n) log m` (strict), bound
/// `2 m exp(-t^2 / (768 C^4 (lambda + C)^2))`. `two_t_n` is the estimated
/// `2 t_n` supplied by the caller.
pub fn matrix_norm_bound(
    n: usize,
    t: f64,
    m_dim: usize,
    c: f64,
    lambda_nu: f64,
    two_t_n: f64,
) -> Result<GatedBound> {
    positive_t(t)?;
    check_cap(c)?;
    if m_dim < 2 {
        return usage("projective dimension must be at least 2");
    }
    nonneg("2 t_n", two_t_n)?;
    let threshold = two_t_n + matrix_norm_log_term(n, m_dim);
    Ok(gated(t, threshold, Gate::Strict, || {
        2.0 * m_dim as f64 * exp_neg_ratio(t * t, 768.0 * c.powi(4) * (lambda_nu + c).powi(2))
    }))
}

/// Variance bound `lambda |M| sum gamma_k^2` for nonincreasing weights.
pub fn devroye_rhs(gamma: &[f64], lambda_nu: f64, diam_m: f64) -> Result<f64> {
    if gamma.is_empty() || gamma.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return usage("weights must be positive");
    }
    if gamma.windows(2).any(|w| w[1] > w[0]) {
        return usage("weights must be nonincreasing");
    }
    nonneg("lambda", lambda_nu)?;
    nonneg("diam_m", diam_m)?;
    Ok(lambda_nu * diam_m * gamma.iter().map(|g| g * g).sum::<f64>())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppendixReport {
    /// Grid points checked for `1 + u^2 e^u / 2 <= e^{3u^2}` on `[0, 10]`.
    pub exp_points: usize,
    pub exp_min_margin: f64,
    pub exp_violations: usize,
    /// Random discrete laws checked for `E[1{Z > K} Z] <= E[Z^2] / K`.
    pub moment_trials: usize,
    pub moment_min_margin: f64,
    pub moment_violations: usize,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.exp_violations == 0 && self.moment_violations == 0
    }
}

pub const APPENDIX_SEED: u64 = 0x5eed_a99e;

/// `e^{3u^2} - 1 - u^2 e^u / 2`, written to avoid cancellation near 0.
pub fn exp_margin(u: f64) -> f64 {
    (3.0 * u * u).exp_m1() - 0.5 * u * u * u.exp()
}

/// `(E[Z^2] / K - E[1{Z > K} Z], E[Z^2] / K)` for a discrete law.
pub fn truncated_moment_margin(atoms: &[(f64, f64)], k: f64) -> (f64, f64) {
    let rhs: f64 = atoms.iter().map(|(z, w)| w * z * z).sum::<f64>() / k;
    let lhs: f64 = atoms
        .iter()
        .filter(|(z, _)| *z > k)
        .map(|(z, w)| w * z)
        .sum();
    (rhs - lhs, rhs)
}

pub fn appendix_checks() -> AppendixReport {
    let exp_points = 10_001;
    let (exp_min_margin, exp_violations) = (0..exp_points)
        .map(|i| exp_margin(i as f64 * 1e-3))
        .fold((f64::INFINITY, 0), |(m, v), x| {
            (m.min(x), v + usize::from(x < 0.0))
        });

    let moment_trials = 1000;
    let mut stream = SeededStream::new(APPENDIX_SEED, 0);
    let mut moment_min_margin = f64::INFINITY;
    let mut moment_violations = 0;
    for _ in 0..moment_trials {
        let atoms_n = 1 + (stream.unit() * 10.0) as usize;
        let raw: Vec<(f64, f64)> = (0..atoms_n)
            .map(|_| (-5.0 + 15.0 * stream.unit(), stream.unit() + 1e-3))
            .collect();
        let total: f64 = raw.iter().map(|a| a.1).sum();
        let atoms: Vec<(f64, f64)> = raw.into_iter().map(|(z, w)| (z, w / total)).collect();
        let k = 1e-3 + 10.0 * stream.unit();
        let (margin, rhs) = truncated_moment_margin(&atoms, k);
        // Rounding can cost a few ulps when an atom sits just above K.
        if margin < -1e-13 * rhs {
            moment_violations += 1;
        }
        moment_min_margin = moment_min_margin.min(margin);
    }
    AppendixReport {
        exp_points,
        exp_min_margin,
        exp_violations,
        moment_trials,
        moment_min_margin,
        moment_violations,
    }
}
