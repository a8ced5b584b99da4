//! Asymptotic power under local alternatives for three embeddings of a null
//! family in a larger one: gamma inside the generalized gamma (power ρ → 1),
//! Weibull inside the generalized gamma (shape λ → 1), and the EPD inside the
//! asymmetric power distribution (asymmetry α → 1/2, tail decay ρ → λ₀).
//!
//! Under the drift θ_K = θ_K,0 + δ/√n the statistic converges to
//! χ²₂(δᵀMᵀΣ⁻¹Mδ) with M = G_K − G R⁻¹ Sᵀ, where G_K = E{τ s_Kᵀ} and
//! S = E{s_K rᵀ}.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{epd_c1, epd_c2, KnownMask};
use crate::families::{Apd, EstimatorKind, FamilyId};
use crate::gof::evaluate;
use crate::quadconst::h;
use crate::rng::substream;
use crate::scaling::{epd_c3, invert_small, matrices, sigma_inverse, Sigma, EULER_GAMMA};
use crate::specfun::{digamma, ln_gamma, noncentral_chi2_sf, trigamma};

/// The three worked embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerCase {
    /// Gamma(λ₀, β₀) null, GG(λ₀, β₀, 1 + δ/√n) alternative, ML estimation.
    GammaVsGg,
    /// Weibull(β₀, ρ₀) null, GG(1 + δ/√n, β₀, ρ₀) alternative, ML estimation.
    WeibullVsGg,
    /// EPD(λ₀, μ₀, σ₀) null with λ₀ known,
    /// APD(λ₀, 1/2 + δ₁/√n, λ₀ + δ₂/√n, μ₀, σ₀) alternative.
    EpdVsApd(EstimatorKind),
}

impl PowerCase {
    /// Null family of the case.
    pub fn null_family(self) -> FamilyId {
        match self {
            PowerCase::GammaVsGg => FamilyId::Gamma,
            PowerCase::WeibullVsGg => FamilyId::Weibull,
            PowerCase::EpdVsApd(_) => FamilyId::Epd,
        }
    }

    /// Estimator of the unknown null parameters.
    pub fn estimator(self) -> EstimatorKind {
        match self {
            PowerCase::EpdVsApd(kind) => kind,
            _ => EstimatorKind::Ml,
        }
    }

    /// Number of drifting parameters (length of δ).
    pub fn n_delta(self) -> usize {
        match self {
            PowerCase::EpdVsApd(_) => 2,
            _ => 1,
        }
    }

    /// Known-parameter mask of the null fit: λ₀ is fixed in the EPD case.
    pub fn mask(self, theta0: &[f64]) -> KnownMask {
        match self {
            PowerCase::EpdVsApd(_) => KnownMask::from_options(vec![Some(theta0[0]), None, None]),
            _ => KnownMask::none(2),
        }
    }
}

/// A local alternative: the case, the null parameter and the drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalAlternative {
    /// Embedding.
    pub case: PowerCase,
    /// Null parameter: (λ₀, β₀) for gamma, (β₀, ρ₀) for Weibull,
    /// (λ₀, μ₀, σ₀) for the EPD.
    pub theta0: Vec<f64>,
    /// Drift δ, one entry per drifting parameter.
    pub delta: Vec<f64>,
    /// Significance level.
    pub alpha_level: f64,
}

/// Σ and M of the limiting noncentral χ²₂ law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModel {
    /// Asymptotic covariance of √n·(Cₙ, Sₙ) under the null.
    pub sigma: Sigma,
    /// Columns of M, one per drifting parameter.
    pub m: Vec<[f64; 2]>,
}

/// One point of a power curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    /// Drift.
    pub delta: Vec<f64>,
    /// Noncentrality parameter.
    pub ncp: f64,
    /// Asymptotic power.
    pub power: f64,
}

/// Finite-sample rejection rate under a local alternative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPower {
    /// Rejection rate over the successful replications.
    pub rate: f64,
    /// Successful replications.
    pub reps: usize,
    /// Replications whose fit failed.
    pub failed: usize,
    /// Binomial standard error √(p̂(1−p̂)/reps).
    pub std_error: f64,
}

fn check_theta0(case: PowerCase, theta0: &[f64]) -> Result<()> {
    case.null_family().validate(theta0)
}

/// Σ and M from the closed forms of the three propositions.
pub fn local_model(case: PowerCase, theta0: &[f64]) -> Result<LocalModel> {
    check_theta0(case, theta0)?;
    match case {
        PowerCase::GammaVsGg => gamma_model(theta0[0]),
        PowerCase::WeibullVsGg => weibull_model(),
        PowerCase::EpdVsApd(kind) => epd_model(theta0[0], kind),
    }
}

fn symmetric(s11: f64, s12: f64, s22: f64) -> Sigma {
    [[s11, s12], [s12, s22]]
}

fn gamma_model(l: f64) -> Result<LocalModel> {
    let h6 = h(6, &[l, l + 1.0, 1.0])?;
    let h7 = h(7, &[l, l + 1.0, 1.0])?;
    let (h8, h9, h10, h11) = (h(8, &[l])?, h(9, &[l])?, h(10, &[l])?, h(11, &[l])?);
    let lp1 = l * trigamma(l)?;
    let lp = l * digamma(l)?;
    let d = lp1 - 1.0;
    let c = l / d;
    let sigma = symmetric(
        0.5 - c * (lp1 * h6 * h6 + h10 * h10 - 2.0 * h6 * h10),
        c * (h6 * (h11 - lp1 * h7) + h10 * (h7 - h11)),
        0.5 - c * (lp1 * h7 * h7 + h11 * h11 - 2.0 * h7 * h11),
    );
    let k = lp - lp1 * (lp + 1.0);
    let m = [-h8 - (h10 + h6 * k) / d, -h9 - (h11 + h7 * k) / d];
    Ok(LocalModel { sigma, m: vec![m] })
}

fn weibull_model() -> Result<LocalModel> {
    let h6 = h(6, &[1.0, 2.0, 1.0])?;
    let h7 = h(7, &[1.0, 2.0, 1.0])?;
    let (h8, h9, h10, h11) = (h(8, &[1.0])?, h(9, &[1.0])?, h(10, &[1.0])?, h(11, &[1.0])?);
    let c = 6.0 / (PI * PI);
    let g = EULER_GAMMA;
    let a = (g - 1.0) * h6 + h8;
    let b = (g - 1.0) * h7 + h9;
    let sigma = symmetric(0.5 - h6 * h6 - c * a * a, -h6 * h7 - c * a * b, 0.5 - h7 * h7 - c * b * b);
    let k = 1.0 - g + PI * PI / 6.0;
    let m = [h10 - c * (k * h6 - h8), h11 - c * (k * h7 - h9)];
    Ok(LocalModel { sigma, m: vec![m] })
}

fn epd_model(l: f64, kind: EstimatorKind) -> Result<LocalModel> {
    let (h1, h2, h3, h37) = (h(1, &[l])?, h(2, &[l])?, h(3, &[l])?, h(37, &[l])?);
    let lg = |z: f64| ln_gamma(z);
    let l2 = l * l;
    match kind {
        EstimatorKind::Ml => {
            let gg = (lg(1.0 / l)? + lg(2.0 - 1.0 / l)?).exp();
            let sigma = symmetric(0.5 - h1 * h1 / l, 0.0, 0.5 - h2 * h2 / gg);
            // Columns: α (drives the sine moment), ρ (drives the cosine moment).
            let m_rho = -h3 / l2 + h1 * (epd_c1(l) + 1.0) / l2;
            let m_alpha = -2.0 * h37 + 2.0 * l * h2 / gg;
            Ok(LocalModel { sigma, m: vec![[0.0, m_alpha], [m_rho, 0.0]] })
        }
        EstimatorKind::Mm => {
            let h4 = h(4, &[l])?;
            let h5 = h(5, &[l])?;
            let (c2, c3) = (epd_c2(l), epd_c3(l));
            let d = h2 / ((1.0 / l - 1.0) * l.ln() + lg(1.0 / l)?).exp();
            let e = 2.0 * h5 * (lg(2.0 / l)? - l.ln() / l - lg(3.0 / l)?).exp();
            let sigma = symmetric(0.5 - h1 * h4 + h1 * h1 / (4.0 * c3), 0.0, 0.5 - d / c2 * (e - d));
            let m_rho = -h3 / l2 + h1 * (2.0 * l.ln() + 3.0 * digamma(3.0 / l)? - digamma(1.0 / l)?) / (2.0 * l2);
            let m_alpha = -2.0 * h37 + 4.0 * l * h2 * (lg(2.0 / l)? - 2.0 * lg(1.0 / l)?).exp();
            Ok(LocalModel { sigma, m: vec![[0.0, m_alpha], [m_rho, 0.0]] })
        }
    }
}

/// Σ and M assembled directly from the generalized-gamma matrices: the known
/// parameter's column of G gives G_K, the cross block of the Fisher
/// information gives S, and the remaining blocks give G and R. Available for
/// the two generalized-gamma embeddings.
pub fn local_model_direct(case: PowerCase, theta0: &[f64]) -> Result<LocalModel> {
    check_theta0(case, theta0)?;
    let (gg_theta, known, free) = match case {
        PowerCase::GammaVsGg => (vec![theta0[0], theta0[1], 1.0], 2usize, [0usize, 1]),
        PowerCase::WeibullVsGg => (vec![1.0, theta0[0], theta0[1]], 0, [1, 2]),
        PowerCase::EpdVsApd(_) => {
            return Err(Error::config("direct assembly needs the embedding family's matrices (GG cases only)"))
        }
    };
    let ms = matrices(FamilyId::GeneralizedGamma, EstimatorKind::Ml, &gg_theta)?;
    let r: Vec<Vec<f64>> = free.iter().map(|&a| free.iter().map(|&b| ms.r[a][b]).collect()).collect();
    let rinv = invert_small(&r)?;
    let g = |row: usize, k: usize| ms.g[row][free[k]];
    let s = [ms.r[known][free[0]], ms.r[known][free[1]]];
    let mut sigma = [[0.0; 2]; 2];
    let mut m = [0.0; 2];
    for i in 0..2 {
        let gri: Vec<f64> = (0..2).map(|b| (0..2).map(|a| g(i, a) * rinv[a][b]).sum()).collect();
        m[i] = ms.g[i][known] - (gri[0] * s[0] + gri[1] * s[1]);
        for j in 0..2 {
            let q: f64 = (0..2).map(|b| gri[b] * g(j, b)).sum();
            sigma[i][j] = if i == j { 0.5 } else { 0.0 } - q;
        }
    }
    let off = 0.5 * (sigma[0][1] + sigma[1][0]);
    sigma[0][1] = off;
    sigma[1][0] = off;
    Ok(LocalModel { sigma, m: vec![m] })
}

/// δᵀMᵀΣ⁻¹Mδ.
pub fn ncp_of(model: &LocalModel, delta: &[f64]) -> Result<f64> {
    if delta.len() != model.m.len() {
        return Err(Error::config(format!("expected {} drift components, got {}", model.m.len(), delta.len())));
    }
    let mut v = [0.0; 2];
    for (col, d) in model.m.iter().zip(delta) {
        v[0] += col[0] * d;
        v[1] += col[1] * d;
    }
    let inv = sigma_inverse(&model.sigma)?;
    let q = v[0] * (inv[0][0] * v[0] + inv[0][1] * v[1]) + v[1] * (inv[1][0] * v[0] + inv[1][1] * v[1]);
    Ok(q.max(0.0))
}

/// Noncentrality parameter of the limiting χ²₂ law under `alt`.
pub fn noncentrality(alt: &LocalAlternative) -> Result<f64> {
    ncp_of(&local_model(alt.case, &alt.theta0)?, &alt.delta)
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("significance level must lie in (0, 1), got {alpha}")))
    }
}

/// P(χ²₂(ncp) > −2 ln α). The central case returns α exactly.
pub fn power_from_ncp(ncp: f64, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    if ncp == 0.0 {
        return Ok(alpha);
    }
    Ok(noncentral_chi2_sf(2, ncp, -2.0 * alpha.ln())?.max(alpha))
}

/// Asymptotic power at each drift of `grid`.
pub fn power_curve(case: PowerCase, theta0: &[f64], grid: &[Vec<f64>], alpha: f64) -> Result<Vec<PowerPoint>> {
    check_level(alpha)?;
    let model = local_model(case, theta0)?;
    grid.iter()
        .map(|d| {
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("drift {d:?} is not finite")));
            }
            let ncp = ncp_of(&model, d)?;
            Ok(PowerPoint { delta: d.clone(), ncp, power: power_from_ncp(ncp, alpha)? })
        })
        .collect()
}

/// Parameter of the alternative distribution at sample size `n`.
pub fn alternative_parameter(alt: &LocalAlternative, n: usize) -> Vec<f64> {
    let s = (n as f64).sqrt();
    let t = &alt.theta0;
    match alt.case {
        PowerCase::GammaVsGg => vec![t[0], t[1], 1.0 + alt.delta[0] / s],
        PowerCase::WeibullVsGg => vec![1.0 + alt.delta[0] / s, t[0], t[1]],
        PowerCase::EpdVsApd(_) => vec![t[0], 0.5 + alt.delta[0] / s, t[0] + alt.delta[1] / s, t[1], t[2]],
    }
}

/// Proportion of `reps` samples of size `n` from the local alternative whose
/// χ² test rejects at `alt.alpha_level`. Replication r draws from substream
/// (seed, 0, r); failed fits are skipped and counted.
pub fn empirical_power(alt: &LocalAlternative, n: usize, reps: usize, seed: u64) -> Result<EmpiricalPower> {
    check_level(alt.alpha_level)?;
    check_theta0(alt.case, &alt.theta0)?;
    if alt.delta.len() != alt.case.n_delta() {
        return Err(Error::config(format!("expected {} drift components", alt.case.n_delta())));
    }
    if reps == 0 || n < 2 {
        return Err(Error::config("empirical power needs reps ≥ 1 and n ≥ 2"));
    }
    let theta = alternative_parameter(alt, n);
    if let PowerCase::EpdVsApd(_) = alt.case {
        Apd::new(theta[0], theta[1], theta[2], theta[3], theta[4])?;
    } else {
        FamilyId::GeneralizedGamma.validate(&theta)?;
    }
    let fam = alt.case.null_family();
    let kind = alt.case.estimator();
    let mask = alt.case.mask(&alt.theta0);
    let q = -2.0 * alt.alpha_level.ln();
    let (rejected, failed) = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, 0, r as u64);
            let x = match alt.case {
                PowerCase::EpdVsApd(_) => {
                    Apd::new(theta[0], theta[1], theta[2], theta[3], theta[4]).and_then(|a| a.sample_with(n, &mut rng))
                }
                _ => FamilyId::GeneralizedGamma.sample_with(&theta, n, &mut rng),
            };
            match x.and_then(|x| evaluate(fam, kind, &mask, &x)) {
                Ok(ev) => (usize::from(ev.tn > q), 0),
                Err(_) => (0, 1),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let ok = reps - failed;
    if ok == 0 {
        return Err(Error::Estimation { message: "every replication failed".into(), residual: 1.0 });
    }
    let rate = rejected as f64 / ok as f64;
    Ok(EmpiricalPower { rate, reps: ok, failed, std_error: (rate * (1.0 - rate) / ok as f64).sqrt() })
}

/// CSV with columns `delta,ncp,power` (or `delta1,delta2,ncp,power`).
pub fn curve_csv(points: &[PowerPoint]) -> String {
    let two = points.first().is_some_and(|p| p.delta.len() == 2);
    let mut out = String::from(if two { "delta1,delta2,ncp,power\n" } else { "delta,ncp,power\n" });
    for p in points {
        for d in &p.delta {
            let _ = write!(out, "{d},");
        }
        let _ = writeln!(out, "{},{}", p.ncp, p.power);
    }
    out
}
