//! Maximum-likelihood and method-of-moments estimation of the nuisance
//! parameters, following the estimator rows of the family tables.
//!
//! Closed-form estimators are evaluated directly. Implicit ones are solved by
//! nested one-dimensional root finding on the profiled score equations: inner
//! closed forms (or inner roots) for the scale/location given the shape, and
//! an outer bracketed Brent search for the shape. Known components (the
//! [`KnownMask`]) are substituted into the equations and returned verbatim.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{EstimatorKind, FamilyId, FamilyId::*};
use crate::roots::{brent, expand_positive_bracket, newton_increasing};
use crate::specfun::{digamma_unchecked, ln_gamma_unchecked, trigamma_unchecked};

/// Relative tolerance on parameter steps of the root finders.
pub const PARAM_TOL: f64 = 1e-12;
/// Tolerance on the largest mean score component declared as converged.
pub const SCORE_TOL: f64 = 1e-8;
/// Maximum iterations of any single root search.
pub const MAX_ITER: usize = 200;
/// Geometric search range for shape-type parameters.
pub const SHAPE_RANGE: (f64, f64) = (1e-3, 1e3);

/// Per-component known/unknown flags with the fixed values of the known ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownMask {
    values: Vec<Option<f64>>,
}

impl KnownMask {
    /// Every component unknown.
    pub fn none(p: usize) -> Self {
        KnownMask { values: vec![None; p] }
    }

    /// Every component known, fixed at θ.
    pub fn all(theta: &[f64]) -> Self {
        KnownMask { values: theta.iter().map(|&v| Some(v)).collect() }
    }

    /// Mask from an explicit per-component list.
    pub fn from_options(values: Vec<Option<f64>>) -> Self {
        KnownMask { values }
    }

    /// Mask for `fam` from (name, value) bindings such as `("lambda", 1.5)`.
    pub fn from_bindings(fam: FamilyId, bindings: &[(String, f64)]) -> Result<Self> {
        let names = fam.param_names();
        let mut values = vec![None; names.len()];
        for (name, value) in bindings {
            let i = names.iter().position(|n| n == name).ok_or_else(|| {
                Error::config(format!("{} has no parameter '{name}' (parameters: {})", fam.name(), names.join(", ")))
            })?;
            values[i] = Some(*value);
        }
        Ok(KnownMask { values })
    }

    /// Number of components.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the mask has no components.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fixed value of component i, if known.
    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    /// Whether component i is known.
    pub fn is_known(&self, i: usize) -> bool {
        self.get(i).is_some()
    }

    /// Indices of the estimated components.
    pub fn unknown_indices(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| !self.is_known(i)).collect()
    }

    /// Number of estimated components.
    pub fn n_unknown(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Per-component flags.
    pub fn known_flags(&self) -> Vec<bool> {
        self.values.iter().map(|v| v.is_some()).collect()
    }

    /// The raw per-component values.
    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Estimated parameter vector (known components copied from the mask).
    pub theta: Vec<f64>,
    /// Total number of root-finder iterations.
    pub iterations: usize,
    /// Whether the estimating equations are satisfied to tolerance.
    pub converged: bool,
    /// Largest absolute residual of the estimating equations (mean score for
    /// ML, moment mismatch for MM).
    pub residual: f64,
}

/// Score vector s(x, θ) = ∂_θ ln f(x | θ).
pub fn score(fam: FamilyId, theta: &[f64], x: f64) -> Result<Vec<f64>> {
    fam.score(theta, x)
}

/// Mean score (1/n) Σ s(x_i, θ).
pub fn mean_score(fam: FamilyId, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    fam.validate(theta)?;
    let mut acc = vec![0.0; fam.arity()];
    for &xi in x {
        if !fam.in_support(theta, xi) {
            return Err(Error::domain(format!("{}: observation {xi} outside the support", fam.name())));
        }
        for (a, s) in acc.iter_mut().zip(fam.score_raw(theta, xi)) {
            *a += s;
        }
    }
    let n = x.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Fits θ for family `fam` with estimator `kind`; components marked known in
/// `mask` are held fixed.
pub fn fit(fam: FamilyId, kind: EstimatorKind, mask: &KnownMask, x: &[f64]) -> Result<FitResult> {
    let p = fam.arity();
    if mask.len() != p {
        return Err(Error::config(format!("{}: mask has {} entries, family has {p} parameters", fam.name(), mask.len())));
    }
    if !fam.supports(kind) {
        return Err(Error::config(format!("{} has no {} estimator", fam.name(), kind.name())));
    }
    if kind == EstimatorKind::Mm && matches!(fam, Epd | LogEpd | HalfEpd | StudentT) {
        require_known(mask.values(), 0, fam)?;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("sample contains non-finite values"));
    }
    // Known values must lie in the parameter space on their own.
    let probe: Vec<f64> = (0..p).map(|i| mask.get(i).unwrap_or_else(|| default_param(fam, i))).collect();
    if let Err(e) = fam.validate(&probe) {
        if fam != Uniform {
            return Err(e);
        }
    }
    let need = mask.n_unknown() + 1;
    if x.len() < need.max(1) {
        return Err(Error::DegenerateSample(format!(
            "{} observations cannot identify {} unknown parameters",
            x.len(),
            mask.n_unknown()
        )));
    }
    check_support(fam, mask, x)?;
    if mask.n_unknown() > 0 && fam != Uniform {
        let first = x[0];
        if x.iter().all(|&v| v == first) {
            return Err(Error::DegenerateSample("all observations are equal".into()));
        }
    }

    let mut ctx = Ctx { iterations: 0 };
    let k: Vec<Option<f64>> = mask.values().to_vec();
    let theta = match kind {
        EstimatorKind::Ml => fit_ml(fam, &k, x, &mut ctx)?,
        EstimatorKind::Mm => fit_mm(fam, &k, x)?,
    };
    // Masked components are returned bit-identical.
    let theta: Vec<f64> = theta.iter().enumerate().map(|(i, &v)| mask.get(i).unwrap_or(v)).collect();
    fam.validate(&theta).map_err(|e| Error::Estimation { message: format!("estimate left the parameter space: {e}"), residual: f64::NAN })?;
    let residual = match kind {
        EstimatorKind::Ml => ml_residual(fam, &theta, mask, x)?,
        EstimatorKind::Mm => mm_residual(fam, &theta, mask, x)?,
    };
    let converged = residual <= SCORE_TOL;
    Ok(FitResult { theta, iterations: ctx.iterations, converged, residual })
}

fn default_param(fam: FamilyId, i: usize) -> f64 {
    match (fam, i) {
        (Uniform, 0) => 0.0,
        (Uniform, 1) => 1.0,
        _ if fam.location_scale().map(|(m, _)| m == i).unwrap_or(false) => 0.0,
        _ => 1.0,
    }
}

fn check_support(fam: FamilyId, mask: &KnownMask, x: &[f64]) -> Result<()> {
    let (lo, hi) = match fam {
        Uniform => (mask.get(0).unwrap_or(f64::NEG_INFINITY), mask.get(1).unwrap_or(f64::INFINITY)),
        _ => fam.support(&[0.0, 1.0]),
    };
    let inside = |v: f64| if fam == Uniform { v >= lo && v <= hi } else { v > lo && v < hi };
    if let Some(bad) = x.iter().find(|&&v| !inside(v)) {
        return Err(Error::domain(format!("{}: observation {bad} outside the support", fam.name())));
    }
    Ok(())
}

struct Ctx {
    iterations: usize,
}

impl Ctx {
    /// Root of `f` over a positive parameter, searched geometrically from x0.
    fn positive_root<F: FnMut(f64) -> f64>(&mut self, mut f: F, x0: f64, lo: f64, hi: f64, what: &str) -> Result<f64> {
        let (a, b, fa, fb) = expand_positive_bracket(&mut f, x0, 2.0, lo, hi).map_err(|e| match e {
            Error::Estimation { residual, .. } => Error::Estimation {
                message: format!("{what}: no root in [{lo:e}, {hi:e}] (estimate diverges)"),
                residual,
            },
            other => other,
        })?;
        let r = brent(&mut f, a, b, fa, fb, PARAM_TOL, MAX_ITER)?;
        self.iterations += r.iterations;
        Ok(r.x)
    }

    /// Root of a function with a sign change on [a, b].
    fn real_root<F: FnMut(f64) -> f64>(&mut self, mut f: F, a: f64, b: f64) -> Result<f64> {
        let fa = f(a);
        let fb = f(b);
        let r = brent(&mut f, a, b, fa, fb, PARAM_TOL * 1e-2, MAX_ITER)?;
        self.iterations += r.iterations;
        Ok(r.x)
    }

    fn shape_root<F: FnMut(f64) -> f64>(&mut self, f: F, x0: f64, what: &str) -> Result<f64> {
        self.positive_root(f, x0, SHAPE_RANGE.0, SHAPE_RANGE.1, what)
    }
}

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn mean_by<F: Fn(f64) -> f64>(x: &[f64], f: F) -> f64 {
    x.iter().map(|&v| f(v)).sum::<f64>() / x.len() as f64
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

fn sd_about(x: &[f64], c: f64) -> f64 {
    mean_by(x, |v| (v - c) * (v - c)).sqrt()
}

/// ln{(1/n) Σ exp(t_i)} without overflow.
fn ln_mean_exp(t: &[f64]) -> f64 {
    let m = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + (t.iter().map(|&v| (v - m).exp()).sum::<f64>() / t.len() as f64).ln()
}

/// Solves ψ(λ) = c for λ > 0.
pub(crate) fn inverse_digamma(c: f64) -> Result<f64> {
    let x0 = if c >= -2.22 { c.exp() + 0.5 } else { -1.0 / (c + 0.577_215_664_901_532_9) };
    let r = newton_increasing(|l| (digamma_unchecked(l) - c, trigamma_unchecked(l)), 0.0, f64::INFINITY, x0, 1e-15, 500)
        .map_err(|_| Error::Estimation { message: format!("cannot invert digamma at {c}"), residual: f64::NAN })?;
    Ok(r.x)
}

/// Solves ln λ − ψ(λ) = s for λ > 0 (s > 0), the gamma-shape ML equation.
pub(crate) fn gamma_shape_from_log_gap(s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Estimation {
            message: format!("gamma-type shape equation needs ln(mean) − mean(ln) > 0, got {s}"),
            residual: s.abs(),
        });
    }
    let x0 = (3.0 - s + ((s - 3.0) * (s - 3.0) + 24.0 * s).sqrt()) / (12.0 * s);
    // g(λ) = ψ(λ) − ln λ + s is increasing in λ.
    let r = newton_increasing(
        |l| (digamma_unchecked(l) - l.ln() + s, trigamma_unchecked(l) - 1.0 / l),
        0.0,
        f64::INFINITY,
        x0,
        1e-15,
        500,
    )
    .map_err(|_| Error::Estimation { message: format!("gamma shape equation failed at {s}"), residual: f64::NAN })?;
    Ok(r.x)
}

/// EPD constant C₁,λ = ψ(1/λ + 1) + ln λ.
pub fn epd_c1(l: f64) -> f64 {
    digamma_unchecked(1.0 / l + 1.0) + l.ln()
}

/// EPD MM constant C₂,λ = Γ(1/λ)/{λ^{2/λ} Γ(3/λ)}.
pub fn epd_c2(l: f64) -> f64 {
    (ln_gamma_unchecked(1.0 / l) - 2.0 / l * l.ln() - ln_gamma_unchecked(3.0 / l)).exp()
}

/// Half-EPD MM constant C₂,λ = Γ(1/λ)/{λ^{1/λ} Γ(2/λ)}.
pub fn half_epd_c2(l: f64) -> f64 {
    (ln_gamma_unchecked(1.0 / l) - l.ln() / l - ln_gamma_unchecked(2.0 / l)).exp()
}

/// Student-t MM constant C₂,λ = √λ Γ((λ−1)/2)/{Γ(λ/2)√π} = E|Y|.
pub fn student_c2(l: f64) -> f64 {
    (0.5 * l.ln() + ln_gamma_unchecked(0.5 * (l - 1.0))
        - ln_gamma_unchecked(0.5 * l)
        - 0.5 * std::f64::consts::PI.ln())
    .exp()
}

// ---------------------------------------------------------------------------
// Maximum likelihood
// ---------------------------------------------------------------------------

fn fit_ml(fam: FamilyId, k: &[Option<f64>], x: &[f64], ctx: &mut Ctx) -> Result<Vec<f64>> {
    match fam {
        Epd => ml_epd(x, k, ctx),
        Laplace => {
            let mu = k[0].unwrap_or_else(|| median(x));
            let sigma = k[1].unwrap_or_else(|| mean_by(x, |v| (v - mu).abs()));
            Ok(vec![mu, sigma])
        }
        Normal => {
            let mu = k[0].unwrap_or_else(|| mean(x));
            let sigma = k[1].unwrap_or_else(|| sd_about(x, mu));
            Ok(vec![mu, sigma])
        }
        ExpGamma => ml_exp_gamma(x, k, ctx),
        ExpWeibull => {
            let t = ml_exp_gamma(x, &[Some(1.0), k[0], k[1]], ctx)?;
            Ok(vec![t[1], t[2]])
        }
        Gumbel => {
            // −X is exp-Weibull with location −μ.
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let t = ml_exp_gamma(&neg, &[Some(1.0), k[0].map(|m| -m), k[1]], ctx)?;
            Ok(vec![-t[1], t[2]])
        }
        Logistic => ml_logistic(x, k, ctx),
        StudentT => ml_student(x, k, ctx),
        LogEpd | LogLaplace | LogNormal => {
            let z: Vec<f64> = x.iter().map(|v| v.ln()).collect();
            let base = match fam {
                LogEpd => Epd,
                LogLaplace => Laplace,
                _ => Normal,
            };
            fit_ml(base, k, &z, ctx)
        }
        HalfEpd => ml_half_epd(x, k, ctx),
        GeneralizedGamma => ml_gg(x, k, ctx),
        Weibull => {
            let t = ml_gg(x, &[Some(1.0), k[0], k[1]], ctx)?;
            Ok(vec![t[1], t[2]])
        }
        Frechet => {
            // 1/X is Weibull(1/β, ρ).
            let inv: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
            let t = ml_gg(&inv, &[Some(1.0), k[0].map(|b| 1.0 / b), k[1]], ctx)?;
            Ok(vec![1.0 / t[1], t[2]])
        }
        Gompertz => ml_gompertz(x, k, ctx),
        LogLogistic => {
            // ln X is logistic(ln β, 1/ρ).
            let z: Vec<f64> = x.iter().map(|v| v.ln()).collect();
            let t = ml_logistic(&z, &[k[0].map(f64::ln), k[1].map(|r| 1.0 / r)], ctx)?;
            Ok(vec![t[0].exp(), 1.0 / t[1]])
        }
        Gamma => ml_gamma(x, k, ctx),
        InverseGamma => {
            // 1/X is gamma(λ, 1/β).
            let inv: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
            let t = ml_gamma(&inv, &[k[0], k[1].map(|b| 1.0 / b)], ctx)?;
            Ok(vec![t[0], 1.0 / t[1]])
        }
        BetaPrime => {
            // X/(1+X) is beta(α, β).
            let a = mean_by(x, |v| v.ln() - v.ln_1p());
            let b = mean_by(x, |v| -v.ln_1p());
            ml_beta_logs(a, b, k, ctx)
        }
        Lomax => ml_lomax(x, k, ctx),
        Nakagami => ml_nakagami(x, k, ctx),
        InverseGaussian => {
            let mu = k[0].unwrap_or_else(|| mean(x));
            let lambda = match k[1] {
                Some(l) => l,
                None => {
                    let d = mean_by(x, |v| 1.0 / v) - (2.0 - mean(x) / mu) / mu;
                    if !(d > 0.0) {
                        return Err(Error::Estimation {
                            message: "inverse-Gaussian λ̂ is not positive".into(),
                            residual: d.abs(),
                        });
                    }
                    1.0 / d
                }
            };
            Ok(vec![mu, lambda])
        }
        Exponential => Ok(vec![k[0].unwrap_or_else(|| mean(x))]),
        HalfNormal => Ok(vec![k[0].unwrap_or_else(|| mean_by(x, |v| v * v).sqrt())]),
        Rayleigh => Ok(vec![k[0].unwrap_or_else(|| (0.5 * mean_by(x, |v| v * v)).sqrt())]),
        Maxwell => Ok(vec![k[0].unwrap_or_else(|| (mean_by(x, |v| v * v) / 3.0).sqrt())]),
        ChiSquared => {
            let kk = match k[0] {
                Some(v) => v,
                None => 2.0 * inverse_digamma(mean_by(x, |v| (0.5 * v).ln()))?,
            };
            Ok(vec![kk])
        }
        Pareto => {
            let alpha = match k[0] {
                Some(v) => v,
                None => 1.0 / mean_by(x, f64::ln),
            };
            Ok(vec![alpha])
        }
        Beta => {
            let a = mean_by(x, f64::ln);
            let b = mean_by(x, |v| (-v).ln_1p());
            ml_beta_logs(a, b, k, ctx)
        }
        Kumaraswamy => ml_kumaraswamy(x, k, ctx),
        Uniform => {
            let (lo, hi) = min_max(x);
            Ok(vec![k[0].unwrap_or(lo), k[1].unwrap_or(hi)])
        }
    }
}

/// ML location of the EPD for fixed λ: the minimizer of Σ|x_i − μ|^λ.
fn epd_mu_hat(x: &[f64], l: f64, ctx: &mut Ctx) -> Result<f64> {
    if l == 1.0 {
        return Ok(median(x));
    }
    if l < 1.0 {
        // The objective is concave between order statistics, so the minimum
        // sits at a data point.
        let mut best = (f64::INFINITY, x[0]);
        for &c in x {
            let v: f64 = x.iter().map(|&xi| (xi - c).abs().powf(l)).sum();
            if v < best.0 {
                best = (v, c);
            }
        }
        return Ok(best.1);
    }
    let (lo, hi) = min_max(x);
    ctx.real_root(
        |m| x.iter().map(|&xi| {
            let d = xi - m;
            d.abs().powf(l - 1.0).copysign(d) * if d == 0.0 { 0.0 } else { 1.0 }
        }).sum::<f64>(),
        lo,
        hi,
    )
}

/// The EPD λ-equation C₁,λ − mean{z ln z} + mean z − 1 with z = |y|^λ.
fn epd_lambda_eq(l: f64, y: impl Iterator<Item = f64>) -> f64 {
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0.0);
    for yi in y {
        let z = yi.abs().powf(l);
        if z > 0.0 {
            s1 += z * z.ln();
        }
        s2 += z;
        n += 1.0;
    }
    epd_c1(l) - s1 / n + s2 / n - 1.0
}

fn ml_epd(x: &[f64], k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    let inner = |l: f64, ctx: &mut Ctx| -> Result<(f64, f64)> {
        let mu = match k[1] {
            Some(m) => m,
            None => epd_mu_hat(x, l, ctx)?,
        };
        let sigma = match k[2] {
            Some(s) => s,
            None => mean_by(x, |v| (v - mu).abs().powf(l)).powf(1.0 / l),
        };
        Ok((mu, sigma))
    };
    let l = match k[0] {
        Some(l) => l,
        None => {
            let mut err = None;
            let l = ctx.shape_root(
                |l| {
                    let mut c = Ctx { iterations: 0 };
                    match inner(l, &mut c) {
                        Ok((mu, sigma)) => epd_lambda_eq(l, x.iter().map(|v| (v - mu) / sigma)),
                        Err(e) => {
                            err = Some(e);
                            f64::NAN
                        }
                    }
                },
                2.0,
                "EPD shape",
            );
            if let Some(e) = err {
                return Err(e);
            }
            l?
        }
    };
    if !(l > 0.0) {
        return Err(Error::domain("EPD shape must be > 0"));
    }
    let (mu, sigma) = inner(l, ctx)?;
    Ok(vec![l, mu, sigma])
}

fn ml_half_epd(x: &[f64], k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    let sigma_of = |l: f64| k[1].unwrap_or_else(|| mean_by(x, |v| v.powf(l)).powf(1.0 / l));
    let l = match k[0] {
        Some(l) => l,
        None => ctx.shape_root(
            |l| {
                let s = sigma_of(l);
                epd_lambda_eq(l, x.iter().map(|v| v / s))
            },
            2.0,
            "half-EPD shape",
        )?,
    };
    Ok(vec![l, sigma_of(l)])
}

/// exp-gamma ML for (λ, μ, σ) with any mask.
fn ml_exp_gamma(x: &[f64], k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    let inner = |s: f64| -> Result<(f64, f64)> {
        let t: Vec<f64> = x.iter().map(|v| v / s).collect();
        match (k[0], k[1]) {
            (Some(l), Some(m)) => Ok((l, m)),
            (Some(l), None) => Ok((l, s * (ln_mean_exp(&t) - l.ln()))),
            (None, Some(m)) => Ok((inverse_digamma(mean(&t) - m / s)?, m)),
            (None, None) => {
                let l = gamma_shape_from_log_gap(ln_mean_exp(&t) - mean(&t))?;
                Ok((l, s * (ln_mean_exp(&t) - l.ln())))
            }
        }
    };
    let sigma = match k[2] {
        Some(s) => s,
        None => {
            let l0 = k[0].unwrap_or(1.0);
            let s0 = sd_about(x, mean(x)) / trigamma_unchecked(l0).sqrt();
            let scale = sd_about(x, mean(x));
            ctx.positive_root(
                |s| match inner(s) {
                    Ok((l, m)) => {
                        let (mut a, mut b) = (0.0, 0.0);
                        for &v in x {
                            let y = (v - m) / s;
                            a += y * y.exp();
                            b += y;
                        }
                        let n = x.len() as f64;
                        a / n - l * b / n - 1.0
                    }
                    Err(_) => f64::NAN,
                },
                s0,
                scale * 1e-6,
                scale * 1e6,
                "exp-gamma scale",
            )?
        }
    };
    let (l, m) = inner(sigma)?;
    Ok(vec![l, m, sigma])
}

fn ml_logistic(x: &[f64], k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    let (lo, hi) = min_max(x);
    let mu_of = |s: f64, ctx: &mut Ctx| -> Result<f64> {
        match k[0] {
            Some(m) => Ok(m),
            None => ctx.real_root(|m| x.iter().map(|&v| (0.5 * (v - m) / s).tanh()).sum::<f64>(), lo, hi),
        }
    };
    let sigma = match k[1] {
        Some(s) => s,
        None => {
            let scale = sd_about(x, mean(x));
            let s0 = scale * 3f64.sqrt() / std::f64::consts::PI;
            let mut err = None;
            let s = ctx.positive_root(
                |s| {
                    let mut c = Ctx { iterations: 0 };
                    match mu_of(s, &mut c) {
                        Ok(m) => mean_by(x, |v| {
                            let y = (v - m) / s;
                            y * (0.5 * y).tanh()
                        }) - 1.0,
                        Err(e) => {
                            err = Some(e);
                            f64::NAN
                        }
                    }
                },
                s0,
                scale * 1e-6,
                scale * 1e6,
                "logistic scale",
            );
            if let Some(e) = err {
                return Err(e);
            }
            s?
        }
    };
    let mu = mu_of(sigma, ctx)?;
    Ok(vec![mu, sigma])
}

/// Student-t location/scale for fixed λ by the EM fixed point, which is the
/// monotone-likelihood iteration for the weighted score equations
/// Σ w_i y_i = 0 and mean(w_i y_i²) = 1 with w_i = (λ+1)/(λ + y_i²).
fn student_loc_scale(x: &[f64], l: f64, k: &[Option<f64>], ctx: &mut Ctx) -> Result<(f64, f64)> {
    // Iterate on data standardized by median and MAD so the stopping rule is
    // attainable in floating point whatever the location and scale.
    let m = median(x);
    let mad = median(&x.iter().map(|v| (v - m).abs()).collect::<Vec<_>>());
    let c = if mad > 0.0 { mad / 0.6745 } else { sd_about(x, m) };
    let z: Vec<f64> = x.iter().map(|v| (v - m) / c).collect();
    let mut mu = k[1].map_or(0.0, |v| (v - m) / c);
    let mut sigma = k[2].map_or(1.0, |v| v / c);
    for it in 0..100_000 {
        let (mut sw, mut swx, mut swd) = (0.0, 0.0, 0.0);
        for &v in &z {
            let y = (v - mu) / sigma;
            let w = (l + 1.0) / (l + y * y);
            sw += w;
            swx += w * v;
            swd += w * (v - mu) * (v - mu);
        }
        let new_mu = if k[1].is_none() { swx / sw } else { mu };
        let new_sigma = if k[2].is_none() { (swd / z.len() as f64).sqrt() } else { sigma };
        let step = ((new_mu - mu).abs() / sigma).max((new_sigma / sigma - 1.0).abs());
        mu = new_mu;
        sigma = new_sigma;
        if step < 1e-14 {
            ctx.iterations += it + 1;
            let mu = k[1].unwrap_or(m + c * mu);
            let sigma = k[2].unwrap_or(c * sigma);
            return Ok((mu, sigma));
        }
    }
    Err(Error::Estimation { message: "Student-t location/scale iteration did not converge".into(), residual: f64::NAN })
}

fn ml_student(x: &[f64], k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    let l = match k[0] {
        Some(l) => l,
        None => {
            let mut err = None;
            let l = ctx.shape_root(
                |l| {
                    let mut c = Ctx { iterations: 0 };
                    match student_loc_scale(x, l, k, &mut c) {
                        Ok((m, s)) => {
                            let (mut a, mut b) = (0.0, 0.0);
                            for &v in x {
                                let y2 = ((v - m) / s).powi(2);
                                a += (y2 / l).ln_1p();
                                b += y2 / (1.0 + y2 / l);
                            }
                            let n = x.len() as f64;
                            digamma_unchecked(0.5 * (l + 1.0)) - digamma_unchecked(0.5 * l) - a / n
                                + ((l + 1.0) / l * b / n - 1.0) / l
                        }
                        Err(e) => {
                            err = Some(e);
                            f64::NAN
                        }
                    }
                },
                5.0,
                "Student-t degrees of freedom",
            );
            if let Some(e) = err {
                return Err(e);
            }
            l?
        }
    };
    let (mu, sigma) = student_loc_scale(x, l, k, ctx)?;
    Ok(vec![l, mu, sigma])
}

/// Gamma ML with any mask.
fn ml_gamma(x: &[f64], k: &[Option<f64>], _ctx: &mut Ctx) -> Result<Vec<f64>> {
    let (l, b) = match (k[0], k[1]) {
        (Some(l), Some(b)) => (l, b),
        (Some(l), None) => (l, mean(x) / l),
        (None, Some(b)) => (inverse_digamma(mean_by(x, |v| (v / b).ln()))?, b),
        (None, None) => {
            let m = mean(x);
            let l = gamma_shape_from_log_gap(m.ln() - mean_by(x, f64::ln))?;
            (l, m / l)
        }
    };
    Ok(vec![l, b])
}

/// Generalized gamma ML: for fixed ρ, X^ρ is gamma(λ, β^ρ); the outer search
/// solves the ρ-equation 1 + mean{(λ − w) ln w} = 0 with w = (x/β)^ρ.
fn ml_gg(x: &[f64], k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    // Work with data scaled by their geometric mean to keep x^ρ finite.
    let g = mean_by(x, f64::ln).exp();
    let xs: Vec<f64> = x.iter().map(|v| v / g).collect();
    let kb = k[1].map(|b| b / g);
    let inner = |r: f64| -> Result<(f64, f64)> {
        let v: Vec<f64> = xs.iter().map(|t| t.powf(r)).collect();
        let mut c = Ctx { iterations: 0 };
        let t = ml_gamma(&v, &[k[0], kb.map(|b| b.powf(r))], &mut c)?;
        Ok((t[0], t[1].powf(1.0 / r)))
    };
    let r = match k[2] {
        Some(r) => r,
        None => {
            let lx = xs.iter().map(|v| v.ln()).collect::<Vec<_>>();
            let sd = sd_about(&lx, mean(&lx));
            let r0 = if sd > 0.0 { 1.2825 / sd } else { 1.0 };
            ctx.shape_root(
                |r| match inner(r) {
                    Ok((l, b)) => {
                        1.0 + mean_by(&xs, |v| {
                            let lw = r * (v / b).ln();
                            (l - lw.exp()) * lw
                        })
                    }
                    Err(_) => f64::NAN,
                },
                r0,
                "GG/Weibull power",
            )?
        }
    };
    let (l, b) = inner(r)?;
    Ok(vec![l, b * g, r])
}

fn ml_gompertz(x: &[f64], k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    let rho_of = |b: f64| -> f64 {
        k[1].unwrap_or_else(|| {
            let m = mean_by(x, |v| (b * v).exp_m1());
            1.0 / m
        })
    };
    let b = match k[0] {
        Some(b) => b,
        None => {
            let m = mean(x);
            ctx.positive_root(
                |b| {
                    let r = rho_of(b);
                    1.0 / b + m - r * mean_by(x, |v| v * (b * v).exp())
                },
                1.0 / m,
                1e-8 / m,
                1e4 / m,
                "Gompertz β",
            )?
        }
    };
    Ok(vec![b, rho_of(b)])
}

fn ml_lomax(x: &[f64], k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    let alpha_of = |s: f64| k[0].unwrap_or_else(|| 1.0 / mean_by(x, |v| (v / s).ln_1p()));
    let s = match k[1] {
        Some(s) => s,
        None => {
            let m = mean(x);
            let v = sd_about(x, m).powi(2);
            let s0 = if v > m * m {
                let a = 2.0 * v / (v - m * m);
                m * (a - 1.0)
            } else {
                m
            };
            ctx.positive_root(
                |s| {
                    let a = alpha_of(s);
                    mean_by(x, |v| (a * v - s) / (s + v))
                },
                s0,
                m * 1e-8,
                m * 1e8,
                "Lomax scale",
            )?
        }
    };
    Ok(vec![alpha_of(s), s])
}

fn ml_nakagami(x: &[f64], k: &[Option<f64>], _ctx: &mut Ctx) -> Result<Vec<f64>> {
    let w = k[1].unwrap_or_else(|| mean_by(x, |v| v * v));
    let l = match k[0] {
        Some(l) => l,
        None => {
            let gap = mean_by(x, |v| v * v) / w - 1.0 - mean_by(x, |v| (v * v / w).ln());
            gamma_shape_from_log_gap(gap)?
        }
    };
    Ok(vec![l, w])
}

/// Beta ML from the sufficient statistics a = mean ln X and b = mean ln(1−X):
/// ψ(α+β) − ψ(α) + a = 0 and ψ(α+β) − ψ(β) + b = 0.
fn ml_beta_logs(a: f64, b: f64, k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    // Given one shape, the other solves a monotone equation.
    let other = |fixed: f64, s: f64| -> Result<f64> {
        // ψ(fixed + t) − ψ(t) = −s, decreasing in t.
        let r = newton_increasing(
            |t| {
                (
                    digamma_unchecked(t) - digamma_unchecked(fixed + t) - s,
                    trigamma_unchecked(t) - trigamma_unchecked(fixed + t),
                )
            },
            0.0,
            f64::INFINITY,
            1.0,
            1e-15,
            500,
        )?;
        Ok(r.x)
    };
    let (alpha, beta) = match (k[0], k[1]) {
        (Some(al), Some(be)) => (al, be),
        (Some(al), None) => (al, other(al, b)?),
        (None, Some(be)) => (other(be, a)?, be),
        (None, None) => {
            // Moment-based start.
            let ea = a.exp();
            let eb = b.exp();
            let a0 = 0.5 * ea / (1.0 - ea - eb).max(1e-3);
            let al = ctx.shape_root(
                |al| match other(al, b) {
                    Ok(be) => digamma_unchecked(al + be) - digamma_unchecked(al) + a,
                    Err(_) => f64::NAN,
                },
                a0.max(1e-2),
                "beta shape α",
            )?;
            (al, other(al, b)?)
        }
    };
    Ok(vec![alpha, beta])
}

fn ml_kumaraswamy(x: &[f64], k: &[Option<f64>], ctx: &mut Ctx) -> Result<Vec<f64>> {
    let beta_of = |a: f64| k[1].unwrap_or_else(|| -1.0 / mean_by(x, |v| (-(a * v.ln()).exp()).ln_1p()));
    let a = match k[0] {
        Some(a) => a,
        None => ctx.shape_root(
            |a| {
                let b = beta_of(a);
                mean_by(x, |v| {
                    let lx = v.ln();
                    let xa = (a * lx).exp();
                    1.0 / a + lx - (b - 1.0) * xa * lx / (-(a * lx).exp_m1())
                })
            },
            1.0,
            "Kumaraswamy α",
        )?,
    };
    Ok(vec![a, beta_of(a)])
}

// ---------------------------------------------------------------------------
// Method of moments
// ---------------------------------------------------------------------------

fn require_known(k: &[Option<f64>], i: usize, fam: FamilyId) -> Result<f64> {
    k[i].ok_or_else(|| {
        Error::config(format!(
            "{} MM requires {} to be known",
            fam.name(),
            fam.param_names()[i]
        ))
    })
}

fn fit_mm(fam: FamilyId, k: &[Option<f64>], x: &[f64]) -> Result<Vec<f64>> {
    let loc_scale = |x: &[f64], mu_k: Option<f64>, sigma_k: Option<f64>, c: f64| -> (f64, f64) {
        let mu = mu_k.unwrap_or_else(|| mean(x));
        let sigma = sigma_k.unwrap_or_else(|| (c * mean_by(x, |v| (v - mu) * (v - mu))).sqrt());
        (mu, sigma)
    };
    Ok(match fam {
        Epd | LogEpd => {
            let l = require_known(k, 0, fam)?;
            let z = log_if(fam == LogEpd, x);
            let (mu, sigma) = loc_scale(&z, k[1], k[2], epd_c2(l));
            vec![l, mu, sigma]
        }
        Laplace | LogLaplace => {
            let z = log_if(fam == LogLaplace, x);
            let (mu, sigma) = loc_scale(&z, k[0], k[1], 0.5);
            vec![mu, sigma]
        }
        Normal | LogNormal => {
            let z = log_if(fam == LogNormal, x);
            let (mu, sigma) = loc_scale(&z, k[0], k[1], 1.0);
            vec![mu, sigma]
        }
        Logistic => {
            let (mu, sigma) = loc_scale(x, k[0], k[1], 3.0 / (std::f64::consts::PI * std::f64::consts::PI));
            vec![mu, sigma]
        }
        LogLogistic => {
            let z = log_if(true, x);
            let (mu, sigma) =
                loc_scale(&z, k[0].map(f64::ln), k[1].map(|r| 1.0 / r), 3.0 / (std::f64::consts::PI.powi(2)));
            vec![mu.exp(), 1.0 / sigma]
        }
        StudentT => {
            let l = require_known(k, 0, fam)?;
            if l <= 2.0 {
                return Err(Error::config(format!("Student-t MM needs λ > 2, got {l}")));
            }
            let mu = k[1].unwrap_or_else(|| mean(x));
            let sigma = k[2].unwrap_or_else(|| mean_by(x, |v| (v - mu).abs()) / student_c2(l));
            vec![l, mu, sigma]
        }
        HalfEpd => {
            let l = require_known(k, 0, fam)?;
            vec![l, k[1].unwrap_or_else(|| half_epd_c2(l) * mean(x))]
        }
        Exponential => vec![k[0].unwrap_or_else(|| mean(x))],
        HalfNormal => vec![k[0].unwrap_or_else(|| (std::f64::consts::PI / 2.0).sqrt() * mean(x))],
        Rayleigh => vec![k[0].unwrap_or_else(|| (2.0 / std::f64::consts::PI).sqrt() * mean(x))],
        Maxwell => vec![k[0].unwrap_or_else(|| (std::f64::consts::PI / 8.0).sqrt() * mean(x))],
        ChiSquared => vec![k[0].unwrap_or_else(|| mean(x))],
        other => return Err(Error::config(format!("{} has no MM estimator", other.name()))),
    })
}

fn log_if(take_log: bool, x: &[f64]) -> Vec<f64> {
    if take_log {
        x.iter().map(|v| v.ln()).collect()
    } else {
        x.to_vec()
    }
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

/// Largest |mean score| over the estimated components at which the score
/// equation is smooth (the EPD location for λ ≤ 1 and uniform end points are
/// order-statistic solutions without a score equation).
fn ml_residual(fam: FamilyId, theta: &[f64], mask: &KnownMask, x: &[f64]) -> Result<f64> {
    if fam == Uniform {
        return Ok(0.0);
    }
    let ms = mean_score(fam, theta, x)?;
    let skip_location = matches!(fam, Epd | LogEpd) && theta[0] <= 1.0;
    let skip_laplace = matches!(fam, Laplace | LogLaplace);
    Ok(mask
        .unknown_indices()
        .into_iter()
        .filter(|&i| !(skip_location && i == 1) && !(skip_laplace && i == 0))
        .map(|i| ms[i].abs() * scale_of(fam, theta, i))
        .fold(0.0, f64::max))
}

/// Natural unit of component i, so residuals are scale free: for scale-type
/// parameters the score is ∝ 1/scale.
fn scale_of(fam: FamilyId, theta: &[f64], i: usize) -> f64 {
    match fam.location_scale() {
        Some((m, s)) if i == m || i == s => theta[s],
        _ => match (fam, i) {
            (Lomax, 1) | (Nakagami, 1) | (InverseGaussian, _) => theta[i],
            _ if fam.positive_scale() == Some(i) => theta[i],
            (Gompertz, 0) => theta[0],
            _ => 1.0,
        },
    }
}

/// Moment mismatch of an MM fit: the defining sample moments minus the model
/// moments at θ̂, relative to the moment's scale.
fn mm_residual(fam: FamilyId, theta: &[f64], mask: &KnownMask, x: &[f64]) -> Result<f64> {
    let z = log_if(matches!(fam, LogEpd | LogLaplace | LogNormal | LogLogistic), x);
    let pi2 = std::f64::consts::PI.powi(2);
    let (mu_i, first, second): (Option<usize>, f64, f64) = match fam {
        Epd | LogEpd => {
            let (l, m, s) = (theta[0], theta[1], theta[2]);
            // E Y = μ, E(Y − μ)² = σ²/C₂,λ.
            (Some(1), mean(&z) - m, mean_by(&z, |v| (v - m).powi(2)) / (s * s / epd_c2(l)) - 1.0)
        }
        Laplace | LogLaplace => {
            let (m, s) = (theta[0], theta[1]);
            (Some(0), mean(&z) - m, mean_by(&z, |v| (v - m).powi(2)) / (2.0 * s * s) - 1.0)
        }
        Normal | LogNormal => {
            let (m, s) = (theta[0], theta[1]);
            (Some(0), mean(&z) - m, mean_by(&z, |v| (v - m).powi(2)) / (s * s) - 1.0)
        }
        Logistic => {
            let (m, s) = (theta[0], theta[1]);
            (Some(0), mean(&z) - m, mean_by(&z, |v| (v - m).powi(2)) / (s * s * pi2 / 3.0) - 1.0)
        }
        LogLogistic => {
            let (m, s) = (theta[0].ln(), 1.0 / theta[1]);
            (Some(0), mean(&z) - m, mean_by(&z, |v| (v - m).powi(2)) / (s * s * pi2 / 3.0) - 1.0)
        }
        StudentT => {
            let (l, m, s) = (theta[0], theta[1], theta[2]);
            (Some(1), mean(&z) - m, mean_by(&z, |v| (v - m).abs()) / (s * student_c2(l)) - 1.0)
        }
        HalfEpd => (None, 0.0, mean(&z) / (theta[1] / half_epd_c2(theta[0])) - 1.0),
        Exponential => (None, 0.0, mean(&z) / theta[0] - 1.0),
        HalfNormal => (None, 0.0, mean(&z) / (theta[0] * (2.0 / std::f64::consts::PI).sqrt()) - 1.0),
        Rayleigh => (None, 0.0, mean(&z) / (theta[0] * (std::f64::consts::PI / 2.0).sqrt()) - 1.0),
        Maxwell => (None, 0.0, mean(&z) / (theta[0] * (8.0 / std::f64::consts::PI).sqrt()) - 1.0),
        ChiSquared => (None, 0.0, mean(&z) / theta[0] - 1.0),
        _ => return Ok(0.0),
    };
    let p = fam.arity();
    let scale_idx = p - 1;
    let mut r: f64 = 0.0;
    if let Some(mi) = mu_i {
        if !mask.is_known(mi) {
            r = r.max(first.abs() / theta[scale_idx].max(f64::MIN_POSITIVE));
        }
    }
    if !mask.is_known(scale_idx) {
        r = r.max(second.abs());
    }
    Ok(r)
}
