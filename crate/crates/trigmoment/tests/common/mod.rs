//! Shared helpers for the integration tests: reference parameter grids,
//! quadrature domains and independent statistical oracles.

#![allow(dead_code)]

use std::f64::consts::PI;
use trigmoment::families::FamilyId::{self, *};
use trigmoment::quad::Domain;

pub fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got:.17e}, want {want:.17e}, diff {:.3e} > {tol:.1e}",
        (got - want).abs()
    );
}

/// Representative interior parameter points for every family.
pub fn reference_params(fam: FamilyId) -> Vec<Vec<f64>> {
    let v: &[&[f64]] = match fam {
        Epd => &[&[1.5, 0.3, 2.0], &[0.8, 0.0, 1.0], &[3.0, -1.0, 0.5]],
        Laplace => &[&[0.5, 2.0], &[-1.0, 0.3]],
        Normal => &[&[1.0, 2.0], &[0.0, 0.5]],
        ExpGamma => &[&[2.5, 0.5, 1.5], &[0.7, 0.0, 1.0]],
        ExpWeibull => &[&[0.3, 1.2]],
        Gumbel => &[&[-0.5, 2.0]],
        Logistic => &[&[1.0, 0.7]],
        StudentT => &[&[5.0, 0.5, 2.0], &[2.5, 0.0, 1.0]],
        LogEpd => &[&[1.5, 0.2, 0.6]],
        LogLaplace => &[&[0.3, 0.5]],
        LogNormal => &[&[0.2, 0.6]],
        HalfEpd => &[&[1.5, 2.0], &[0.7, 1.0]],
        GeneralizedGamma => &[&[2.0, 1.5, 0.8], &[0.6, 1.0, 2.0]],
        Weibull => &[&[2.0, 1.5], &[0.5, 0.7]],
        Frechet => &[&[1.5, 2.5]],
        Gompertz => &[&[0.8, 1.3]],
        LogLogistic => &[&[2.0, 3.0]],
        Gamma => &[&[2.5, 1.5], &[0.6, 2.0]],
        InverseGamma => &[&[3.0, 2.0]],
        BetaPrime => &[&[2.0, 3.0]],
        Lomax => &[&[3.0, 2.0]],
        Nakagami => &[&[1.5, 2.0], &[0.7, 1.0]],
        InverseGaussian => &[&[1.0, 2.0], &[2.0, 0.5]],
        Exponential => &[&[1.7]],
        HalfNormal => &[&[1.3]],
        Rayleigh => &[&[0.8]],
        Maxwell => &[&[1.2]],
        ChiSquared => &[&[3.0], &[0.8]],
        Pareto => &[&[2.5]],
        Beta => &[&[2.0, 3.0], &[0.6, 0.8]],
        Kumaraswamy => &[&[2.0, 3.0], &[0.7, 1.5]],
        Uniform => &[&[-1.0, 2.0]],
    };
    v.iter().map(|p| p.to_vec()).collect()
}

/// Integration domain covering the support.
pub fn support_domain(fam: FamilyId, theta: &[f64]) -> Domain {
    let (lo, hi) = fam.support(theta);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => Domain::Finite(lo, hi),
        (true, false) if lo == 0.0 => Domain::ZeroInf,
        (true, false) if lo == 1.0 => Domain::OneInf,
        (true, false) => Domain::HalfLine(lo),
        _ => Domain::Real(fam.quantile(theta, 0.5).unwrap()),
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `u` and U(0,1).
pub fn ks_uniform(u: &[f64]) -> f64 {
    let mut s = u.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let i = i as f64;
            ((i + 1.0) / n - v).max(v - i / n)
        })
        .fold(0.0, f64::max)
}

/// Stirling series after shifting the argument above 20.
pub fn ln_gamma_oracle(z: f64) -> f64 {
    let mut shift = 0.0;
    let mut x = z;
    while x < 20.0 {
        shift += x.ln();
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = (1.0 / x)
        * (1.0 / 12.0
            - r * (1.0 / 360.0
                - r * (1.0 / 1260.0 - r * (1.0 / 1680.0 - r * (1.0 / 1188.0 - r * 691.0 / 360_360.0)))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series - shift
}

/// Interior evaluation points: quantiles at levels k/(m+1).
pub fn interior_points(fam: FamilyId, theta: &[f64], m: usize) -> Vec<f64> {
    (1..=m).map(|k| fam.quantile(theta, k as f64 / (m as f64 + 1.0)).unwrap()).collect()
}

/// Interior evaluation points at levels (k − 0.37)/m, which avoid the median
/// (a kink of the Laplace-type densities).
pub fn offset_points(fam: FamilyId, theta: &[f64], m: usize) -> Vec<f64> {
    (1..=m).map(|k| fam.quantile(theta, (k as f64 - 0.37) / m as f64).unwrap()).collect()
}
