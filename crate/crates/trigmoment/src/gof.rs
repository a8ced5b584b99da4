//! The goodness-of-fit test: trigonometric moments of the probability
//! integral transform, the quadratic-form statistic Tₙ, its χ²₂ and
//! Monte-Carlo p-values, component Z-scores and confidence-ellipse geometry.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{fit, FitResult, KnownMask};
use crate::families::{EstimatorKind, FamilyId};
use crate::rng::substream;
use crate::scaling::{eigen_sym2, sigma_for, sigma_inverse, Sigma};
use crate::specfun::std_normal_quantile;

/// Number of boundary points emitted by [`ellipse`].
pub const ELLIPSE_POINTS: usize = 256;

/// Largest tolerated fraction of failed refits in a Monte-Carlo p-value.
pub const MAX_FAILED_FRACTION: f64 = 0.01;

/// Sample means of cos 2πF(xᵢ|θ) and sin 2πF(xᵢ|θ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigMoments {
    /// Cosine moment Cₙ.
    pub cn: f64,
    /// Sine moment Sₙ.
    pub sn: f64,
    /// Sample size.
    pub n: usize,
}

/// Settings of the parametric-bootstrap p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Number of replications.
    pub reps: usize,
    /// Master seed; replication r uses substream (seed, 0, r).
    pub seed: u64,
}

/// Outcome of a Monte-Carlo p-value computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPValue {
    /// Smoothed p-value (r + 1)/(R + 1) over the successful replications.
    pub p_value: f64,
    /// Successful replications R.
    pub reps: usize,
    /// Replications with a statistic at least as large as the observed one.
    pub exceed: usize,
    /// Replications skipped because the refit or Σ failed.
    pub failed: usize,
}

/// Fit, moments, Σ and Tₙ for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Parameter fit with the masked components fixed.
    pub fit: FitResult,
    /// Trigonometric moments at the fitted parameter.
    pub moments: TrigMoments,
    /// Asymptotic covariance of √n·(Cₙ, Sₙ).
    pub sigma: Sigma,
    /// Test statistic.
    pub tn: f64,
}

/// Full test report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Null family.
    pub family: FamilyId,
    /// Estimator used for the unknown components.
    pub estimator: EstimatorKind,
    /// Number of estimated (unmasked) parameters.
    pub n_estimated: usize,
    /// Parameter fit.
    pub fit: FitResult,
    /// Trigonometric moments at the fit.
    pub moments: TrigMoments,
    /// Σ at the fit.
    pub sigma: Sigma,
    /// Test statistic Tₙ.
    pub tn: f64,
    /// Asymptotic p-value P(χ²₂ > Tₙ) = exp(−Tₙ/2).
    pub p_chi2: f64,
    /// Z-score of the cosine moment, √n·Cₙ/√Σ₁₁.
    pub zc: f64,
    /// Z-score of the sine moment, √n·Sₙ/√Σ₂₂.
    pub zs: f64,
    /// Smoothed Monte-Carlo p-value, when requested.
    pub p_mc: Option<f64>,
    /// Successful Monte-Carlo replications.
    pub mc_reps: Option<usize>,
    /// Replications whose statistic reached the observed one.
    pub mc_exceed: Option<usize>,
    /// Replications skipped after a failed refit.
    pub mc_failed: Option<usize>,
}

/// Confidence ellipse {v : vᵀΣ⁻¹v = q} for √n·(Cₙ, Sₙ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    /// Coverage level.
    pub level: f64,
    /// χ²₂ quantile q = −2 ln(1 − level).
    pub q: f64,
    /// Centre (always the origin).
    pub center: [f64; 2],
    /// Semi-axes, major first.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis with the cosine axis, in radians.
    pub rotation: f64,
    /// Boundary points in counter-clockwise order.
    pub points: Vec<[f64; 2]>,
    /// Univariate thresholds z_{(1+level)/2}·√Σₖₖ for the two components.
    pub thresholds: [f64; 2],
}

/// Cₙ and Sₙ of `x` under F(·|θ).
pub fn trig_moments(fam: FamilyId, theta: &[f64], x: &[f64]) -> Result<TrigMoments> {
    fam.validate(theta)?;
    if x.is_empty() {
        return Err(Error::DegenerateSample("empty sample".into()));
    }
    let (mut c, mut s) = (0.0, 0.0);
    // The uniform ML estimates are the extreme order statistics, so its
    // support is taken closed: the endpoints map to F = 0 and F = 1.
    let inside = |v: f64| {
        if fam == FamilyId::Uniform {
            v >= theta[0] && v <= theta[1]
        } else {
            fam.in_support(theta, v)
        }
    };
    for (i, &xi) in x.iter().enumerate() {
        if !inside(xi) {
            return Err(Error::domain(format!(
                "observation {} ({xi}) lies outside the support of {}",
                i + 1,
                fam.name()
            )));
        }
        let (sin, cos) = (2.0 * PI * fam.cdf(theta, xi)?).sin_cos();
        c += cos;
        s += sin;
    }
    let n = x.len();
    Ok(TrigMoments { cn: c / n as f64, sn: s / n as f64, n })
}

/// Tₙ = n·(Cₙ, Sₙ) Σ⁻¹ (Cₙ, Sₙ)ᵀ.
pub fn statistic(m: &TrigMoments, sigma: &Sigma) -> Result<f64> {
    let inv = sigma_inverse(sigma)?;
    let v = [m.cn, m.sn];
    let q = v[0] * (inv[0][0] * v[0] + inv[0][1] * v[1]) + v[1] * (inv[1][0] * v[0] + inv[1][1] * v[1]);
    Ok((m.n as f64 * q).max(0.0))
}

/// P(χ²₂ > t) = exp(−t/2).
pub fn chi2_pvalue(t: f64) -> f64 {
    (-0.5 * t).exp()
}

/// Fits the null family and computes the moments, Σ and Tₙ at the fit.
pub fn evaluate(fam: FamilyId, kind: EstimatorKind, mask: &KnownMask, x: &[f64]) -> Result<Evaluation> {
    let fit = fit(fam, kind, mask, x)?;
    let moments = trig_moments(fam, &fit.theta, x)?;
    let sigma = sigma_for(fam, kind, &fit.theta, mask)?;
    let tn = statistic(&moments, &sigma)?;
    Ok(Evaluation { fit, moments, sigma, tn })
}

/// Runs the test, optionally with a parametric-bootstrap p-value.
pub fn run_test(
    fam: FamilyId,
    kind: EstimatorKind,
    mask: &KnownMask,
    x: &[f64],
    mc: Option<McConfig>,
) -> Result<TestResult> {
    let ev = evaluate(fam, kind, mask, x)?;
    let sqrt_n = (x.len() as f64).sqrt();
    let zc = sqrt_n * ev.moments.cn / ev.sigma[0][0].sqrt();
    let zs = sqrt_n * ev.moments.sn / ev.sigma[1][1].sqrt();
    let mc = match mc {
        Some(cfg) => Some(mc_pvalue(fam, kind, mask, &ev.fit.theta, x.len(), ev.tn, cfg)?),
        None => None,
    };
    Ok(TestResult {
        family: fam,
        estimator: kind,
        n_estimated: mask.n_unknown(),
        p_chi2: chi2_pvalue(ev.tn),
        zc,
        zs,
        p_mc: mc.map(|m| m.p_value),
        mc_reps: mc.map(|m| m.reps),
        mc_exceed: mc.map(|m| m.exceed),
        mc_failed: mc.map(|m| m.failed),
        fit: ev.fit,
        moments: ev.moments,
        sigma: ev.sigma,
        tn: ev.tn,
    })
}

/// Parametric-bootstrap p-value: samples of size `n` are drawn from the
/// fitted family, refitted with the same mask, and their statistics compared
/// with `observed`. Failed refits are skipped and counted; more than
/// [`MAX_FAILED_FRACTION`] failures abort the computation.
pub fn mc_pvalue(
    fam: FamilyId,
    kind: EstimatorKind,
    mask: &KnownMask,
    theta: &[f64],
    n: usize,
    observed: f64,
    cfg: McConfig,
) -> Result<McPValue> {
    if cfg.reps == 0 {
        return Err(Error::config("Monte-Carlo p-value needs at least one replication"));
    }
    let (exceed, failed) = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(cfg.seed, 0, r as u64);
            let stat = fam
                .sample_with(theta, n, &mut rng)
                .and_then(|y| evaluate(fam, kind, mask, &y))
                .map(|ev| ev.tn);
            match stat {
                Ok(t) => (usize::from(t >= observed), 0),
                Err(_) => (0, 1),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if failed as f64 > MAX_FAILED_FRACTION * cfg.reps as f64 {
        return Err(Error::Estimation {
            message: format!("{failed} of {} Monte-Carlo refits failed", cfg.reps),
            residual: failed as f64 / cfg.reps as f64,
        });
    }
    let reps = cfg.reps - failed;
    Ok(McPValue { p_value: (exceed + 1) as f64 / (reps + 1) as f64, reps, exceed, failed })
}

/// Confidence ellipse of √n·(Cₙ, Sₙ) at the given coverage level.
pub fn ellipse(sigma: &Sigma, level: f64) -> Result<Ellipse> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("ellipse level must lie in (0, 1), got {level}")));
    }
    let (ev, vecs) = eigen_sym2(sigma);
    if !(ev[0] > 0.0 && ev[0].is_finite() && ev[1].is_finite()) {
        return Err(Error::Singular(format!("Σ is not positive definite (eigenvalues {ev:?})")));
    }
    let q = -2.0 * (-level).ln_1p();
    // Major axis along the eigenvector of the larger eigenvalue.
    let major = [vecs[0][1], vecs[1][1]];
    let minor = [vecs[0][0], vecs[1][0]];
    let (a, b) = ((q * ev[1]).sqrt(), (q * ev[0]).sqrt());
    let points = (0..ELLIPSE_POINTS)
        .map(|k| {
            let (s, c) = (2.0 * PI * k as f64 / ELLIPSE_POINTS as f64).sin_cos();
            [a * c * major[0] + b * s * minor[0], a * c * major[1] + b * s * minor[1]]
        })
        .collect();
    let z = std_normal_quantile(0.5 * (1.0 + level))?;
    Ok(Ellipse {
        level,
        q,
        center: [0.0, 0.0],
        semi_axes: [a, b],
        rotation: major[1].atan2(major[0]),
        points,
        thresholds: [z * sigma[0][0].sqrt(), z * sigma[1][1].sqrt()],
    })
}
