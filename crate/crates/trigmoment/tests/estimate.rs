mod common;

use common::{assert_close, reference_params};
use proptest::prelude::*;
use trigmoment::estimate::{fit, mean_score, KnownMask};
use trigmoment::families::{EstimatorKind, FamilyId, FamilyId::*};
use trigmoment::Error;

const ML: EstimatorKind = EstimatorKind::Ml;
const MM: EstimatorKind = EstimatorKind::Mm;

fn loglik(fam: FamilyId, theta: &[f64], x: &[f64]) -> f64 {
    x.iter().map(|&v| fam.ln_pdf(theta, v).unwrap()).sum()
}

/// Families whose ML equations have no smooth solution in every component.
fn nonsmooth(fam: FamilyId) -> bool {
    matches!(fam, Laplace | LogLaplace | Uniform)
}

#[test]
fn ml_fits_converge_and_recover_parameters() {
    for fam in FamilyId::ALL {
        for (j, theta) in reference_params(fam).into_iter().enumerate() {
            // Exp-gamma and GG shapes are weakly identified and need
            // larger samples for the same relative accuracy.
            let n = if matches!(fam, ExpGamma | GeneralizedGamma) { 40_000 } else { 4000 };
            let x = fam.sample(&theta, n, 100 + j as u64).unwrap();
            let r = fit(fam, ML, &KnownMask::none(fam.arity()), &x)
                .unwrap_or_else(|e| panic!("{} {theta:?}: {e}", fam.name()));
            assert!(r.converged, "{} {theta:?}: residual {}", fam.name(), r.residual);
            for (i, (&got, &want)) in r.theta.iter().zip(&theta).enumerate() {
                let scale = want.abs().max(fam.location_scale().map(|(_, s)| theta[s]).unwrap_or(1.0));
                assert!(
                    (got - want).abs() <= 0.2 * scale,
                    "{} component {i}: θ̂ = {got}, θ = {want}",
                    fam.name()
                );
            }
        }
    }
}

#[test]
fn ml_estimates_maximize_the_likelihood() {
    // Independent check: no coordinate or diagonal perturbation increases
    // the log-likelihood.
    for fam in FamilyId::ALL {
        if fam == Uniform {
            continue;
        }
        let theta = reference_params(fam).remove(0);
        let x = fam.sample(&theta, 800, 7).unwrap();
        let r = fit(fam, ML, &KnownMask::none(fam.arity()), &x).unwrap();
        let best = loglik(fam, &r.theta, &x);
        let p = fam.arity();
        for i in 0..p {
            for &sgn in &[-1.0, 1.0] {
                let mut t = r.theta.clone();
                t[i] += sgn * 1e-3 * t[i].abs().max(1e-2);
                if fam.validate(&t).is_ok() {
                    let l = loglik(fam, &t, &x);
                    assert!(l <= best + 1e-9 * best.abs().max(1.0), "{} moved {i}: {l} > {best}", fam.name());
                }
            }
        }
    }
}

#[test]
fn ml_score_equations_hold_at_the_estimate() {
    for fam in FamilyId::ALL {
        if nonsmooth(fam) {
            continue;
        }
        for (j, theta) in reference_params(fam).into_iter().enumerate() {
            let x = fam.sample(&theta, 1500, 40 + j as u64).unwrap();
            let r = fit(fam, ML, &KnownMask::none(fam.arity()), &x).unwrap();
            let skip_loc = matches!(fam, Epd | LogEpd) && r.theta[0] <= 1.0;
            let ms = mean_score(fam, &r.theta, &x).unwrap();
            // Sum of scores relative to n, in natural units of each component.
            for (i, s) in ms.iter().enumerate() {
                if skip_loc && i == 1 {
                    continue;
                }
                let unit = r.theta[i].abs().max(1.0);
                assert!(s.abs() * unit <= 1e-7, "{} component {i}: mean score {s:e}", fam.name());
            }
        }
    }
}

#[test]
fn closed_form_estimators() {
    let x = [0.5, 1.5, 2.0, 4.0];
    let m = 2.0;
    let m2: f64 = (0.25 + 2.25 + 4.0 + 16.0) / 4.0;
    let fit1 = |fam: FamilyId, kind| fit(fam, kind, &KnownMask::none(fam.arity()), &x).unwrap().theta;
    assert_close(fit1(Exponential, ML)[0], m, 1e-15, "exponential");
    assert_close(fit1(HalfNormal, ML)[0], m2.sqrt(), 1e-15, "half-normal ML");
    assert_close(fit1(HalfNormal, MM)[0], (std::f64::consts::PI / 2.0).sqrt() * m, 1e-15, "half-normal MM");
    assert_close(fit1(Rayleigh, ML)[0], (m2 / 2.0).sqrt(), 1e-15, "Rayleigh ML");
    assert_close(fit1(Rayleigh, MM)[0], (2.0 / std::f64::consts::PI).sqrt() * m, 1e-15, "Rayleigh MM");
    assert_close(fit1(Maxwell, ML)[0], (m2 / 3.0).sqrt(), 1e-15, "Maxwell ML");
    assert_close(fit1(Maxwell, MM)[0], (std::f64::consts::PI / 8.0).sqrt() * m, 1e-15, "Maxwell MM");
    assert_close(fit1(ChiSquared, MM)[0], m, 1e-15, "chi-squared MM");
    let inv = x.iter().map(|v| 1.0 / v).sum::<f64>() / 4.0;
    let ig = fit1(InverseGaussian, ML);
    assert_close(ig[0], m, 1e-15, "IG μ");
    assert_close(ig[1], 1.0 / (inv - 1.0 / m), 1e-13, "IG λ");
    let n = fit1(Normal, ML);
    assert_close(n[0], m, 1e-15, "normal μ");
    assert_close(n[1], (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 4.0).sqrt(), 1e-15, "normal σ");
    let lap = fit1(Laplace, ML);
    assert_close(lap[0], 1.75, 1e-15, "Laplace median");
    assert_close(lap[1], (1.25 + 0.25 + 0.25 + 2.25) / 4.0, 1e-15, "Laplace σ");
    let u = fit1(Uniform, ML);
    assert_eq!(u, vec![0.5, 4.0]);
    let y = [1.5, 2.0, 4.0, 9.0];
    let p = fit(Pareto, ML, &KnownMask::none(1), &y).unwrap().theta[0];
    assert_close(p, 4.0 / y.iter().map(|v: &f64| v.ln()).sum::<f64>(), 1e-15, "Pareto");
}

#[test]
fn gamma_shape_solves_log_gap_equation() {
    // ln λ − ψ(λ) = ln x̄ − mean ln x, checked with a finite-difference
    // digamma built from ln Γ.
    let x = Gamma.sample(&[2.5, 1.5], 3000, 3).unwrap();
    let t = fit(Gamma, ML, &KnownMask::none(2), &x).unwrap().theta;
    let lg = |z: f64| common::ln_gamma_oracle(z);
    let h = 1e-5;
    let psi = (lg(t[0] + h) - lg(t[0] - h)) / (2.0 * h);
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let ml = x.iter().map(|v| v.ln()).sum::<f64>() / x.len() as f64;
    assert_close(t[0].ln() - psi, m.ln() - ml, 1e-8, "gamma shape equation");
    assert_close(t[1], m / t[0], 1e-14, "gamma scale");
}

#[test]
fn mm_estimators_match_moments() {
    type Case<'a> = (FamilyId, &'a [f64], Vec<Option<f64>>);
    let cases: &[Case] = &[
        (Epd, &[1.5, 0.3, 2.0], vec![Some(1.5), None, None]),
        (Laplace, &[0.5, 2.0], vec![None, None]),
        (Normal, &[1.0, 2.0], vec![None, None]),
        (Logistic, &[1.0, 0.7], vec![None, None]),
        (StudentT, &[5.0, 0.5, 2.0], vec![Some(5.0), None, None]),
        (LogEpd, &[1.5, 0.2, 0.6], vec![Some(1.5), None, None]),
        (LogLaplace, &[0.3, 0.5], vec![None, None]),
        (LogNormal, &[0.2, 0.6], vec![None, None]),
        (HalfEpd, &[1.5, 2.0], vec![Some(1.5), None]),
        (LogLogistic, &[2.0, 3.0], vec![None, None]),
        (Exponential, &[1.5], vec![None]),
        (HalfNormal, &[1.2], vec![None]),
        (Rayleigh, &[1.2], vec![None]),
        (Maxwell, &[1.2], vec![None]),
        (ChiSquared, &[3.0], vec![None]),
    ];
    for (fam, theta, mask) in cases {
        assert!(fam.has_mm());
        let x = fam.sample(theta, 2000, 9).unwrap();
        let r = fit(*fam, MM, &KnownMask::from_options(mask.clone()), &x).unwrap();
        assert!(r.converged && r.residual <= 1e-10, "{}: residual {}", fam.name(), r.residual);
        // Model moments at θ̂ computed by quadrature of the fitted density.
        let t = &r.theta;
        let logged = matches!(fam, LogEpd | LogLaplace | LogNormal | LogLogistic);
        let z: Vec<f64> = x.iter().map(|&v| if logged { v.ln() } else { v }).collect();
        let n = z.len() as f64;
        let zbar = z.iter().sum::<f64>() / n;
        let model_mean = trigmoment::quad::integrate(
            |v| {
                let w = if logged { v.ln() } else { v };
                w * fam.pdf(t, v).unwrap()
            },
            common::support_domain(*fam, t),
            trigmoment::quad::Tolerance { abs: 1e-13, rel: 1e-12 },
        )
        .unwrap()
        .value;
        assert_close(model_mean, zbar, 1e-8 * zbar.abs().max(1.0), &format!("{} mean", fam.name()));
    }
}

#[test]
fn masked_components_are_bit_identical() {
    let x = Epd.sample(&[1.5, 0.3, 2.0], 500, 11).unwrap();
    let known = 0.312_345_678_901_234_5;
    for mask in [
        vec![Some(1.5), Some(known), None],
        vec![Some(1.5), None, Some(known + 1.0)],
        vec![None, Some(known), None],
    ] {
        let m = KnownMask::from_options(mask.clone());
        let r = fit(Epd, ML, &m, &x).unwrap();
        for (i, v) in mask.iter().enumerate() {
            if let Some(v) = v {
                assert_eq!(r.theta[i].to_bits(), v.to_bits());
            }
        }
        assert!(r.converged);
    }
    let r = fit(Epd, ML, &KnownMask::all(&[1.5, 0.3, 2.0]), &x).unwrap();
    assert_eq!(r.theta, vec![1.5, 0.3, 2.0]);
    assert_eq!(r.residual, 0.0);
}

#[test]
fn location_scale_equivariance() {
    let (a, b) = (3.25, 1.7);
    for fam in [Epd, Laplace, Normal, ExpGamma, ExpWeibull, Gumbel, Logistic, StudentT] {
        let theta = reference_params(fam).remove(0);
        let (mi, si) = fam.location_scale().unwrap();
        let x = fam.sample(&theta, 600, 21).unwrap();
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        let p = fam.arity();
        let r1 = fit(fam, ML, &KnownMask::none(p), &x).unwrap().theta;
        let r2 = fit(fam, ML, &KnownMask::none(p), &y).unwrap().theta;
        assert_close(r2[mi], a + b * r1[mi], 1e-9 * (a + b * r1[mi]).abs().max(1.0), fam.name());
        assert_close(r2[si], b * r1[si], 1e-9 * b * r1[si], fam.name());
        for i in 0..p {
            if i != mi && i != si {
                assert_close(r2[i], r1[i], 1e-9 * r1[i].abs(), fam.name());
            }
        }
    }
}

#[test]
fn errors_are_reported() {
    let flat = [2.0; 10];
    assert!(matches!(fit(Normal, ML, &KnownMask::none(2), &flat), Err(Error::DegenerateSample(_))));
    assert!(fit(Normal, ML, &KnownMask::none(2), &[1.0, 2.0, 4.0]).is_ok());
    assert!(matches!(fit(Normal, ML, &KnownMask::none(2), &[1.0, 2.0]), Err(Error::DegenerateSample(_))));
    assert!(matches!(fit(Normal, ML, &KnownMask::none(2), &[1.0]), Err(Error::DegenerateSample(_))));
    // Shape must be known for MM.
    assert!(matches!(fit(Epd, MM, &KnownMask::none(3), &[1.0, 2.0, 3.0]), Err(Error::Config(_))));
    assert!(matches!(
        fit(StudentT, MM, &KnownMask::from_options(vec![Some(2.0), None, None]), &[1.0, 2.0, 3.0]),
        Err(Error::Config(_))
    ));
    assert!(matches!(fit(Gamma, MM, &KnownMask::none(2), &[1.0, 2.0, 3.0]), Err(Error::Config(_))));
    assert!(matches!(fit(Gamma, ML, &KnownMask::none(2), &[1.0, -2.0, 3.0]), Err(Error::Domain(_))));
    assert!(matches!(fit(Normal, ML, &KnownMask::none(3), &[1.0, 2.0, 3.0]), Err(Error::Config(_))));
}

#[test]
fn mask_bindings_by_name() {
    let m = KnownMask::from_bindings(Epd, &[("lambda".to_string(), 1.5)]).unwrap();
    assert!(m.is_known(0) && !m.is_known(1) && !m.is_known(2));
    assert!(KnownMask::from_bindings(Epd, &[("nu".to_string(), 1.0)]).is_err());
}

#[test]
fn partial_masks_for_shape_families() {
    let cases: &[(FamilyId, &[f64])] = &[
        (Gamma, &[2.5, 1.5]),
        (Weibull, &[2.0, 1.5]),
        (Nakagami, &[1.5, 2.0]),
        (Beta, &[2.0, 3.0]),
        (Kumaraswamy, &[2.0, 3.0]),
        (Lomax, &[3.0, 2.0]),
        (Gompertz, &[0.8, 1.3]),
        (ExpGamma, &[2.5, 0.5, 1.5]),
        (StudentT, &[5.0, 0.5, 2.0]),
        (GeneralizedGamma, &[2.0, 1.5, 0.8]),
    ];
    for (fam, theta) in cases {
        let x = fam.sample(theta, 3000, 5).unwrap();
        for i in 0..theta.len() {
            let mut opts = vec![None; theta.len()];
            opts[i] = Some(theta[i]);
            let r = fit(*fam, ML, &KnownMask::from_options(opts), &x)
                .unwrap_or_else(|e| panic!("{} known {i}: {e}", fam.name()));
            assert!(r.converged, "{} known {i}: residual {}", fam.name(), r.residual);
            assert_eq!(r.theta[i], theta[i]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn prop_normal_fit_equivariant(a in -50.0f64..50.0, b in 0.01f64..100.0, seed in 0u64..1000) {
        let x = Normal.sample(&[0.0, 1.0], 50, seed).unwrap();
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        let r1 = fit(Normal, ML, &KnownMask::none(2), &x).unwrap().theta;
        let r2 = fit(Normal, ML, &KnownMask::none(2), &y).unwrap().theta;
        prop_assert!((r2[0] - (a + b * r1[0])).abs() <= 1e-9 * (a.abs() + b));
        prop_assert!((r2[1] - b * r1[1]).abs() <= 1e-9 * b);
    }

    #[test]
    fn prop_logistic_fit_equivariant(a in -20.0f64..20.0, b in 0.05f64..20.0, seed in 0u64..1000) {
        let x = Logistic.sample(&[0.0, 1.0], 80, seed).unwrap();
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        let r1 = fit(Logistic, ML, &KnownMask::none(2), &x).unwrap().theta;
        let r2 = fit(Logistic, ML, &KnownMask::none(2), &y).unwrap().theta;
        prop_assert!((r2[0] - (a + b * r1[0])).abs() <= 1e-9 * (a.abs() + b));
        prop_assert!((r2[1] - b * r1[1]).abs() <= 1e-9 * b);
    }

    #[test]
    fn prop_masked_value_returned_verbatim(mu in -5.0f64..5.0, seed in 0u64..1000) {
        let x = StudentT.sample(&[5.0, 0.0, 1.0], 100, seed).unwrap();
        let mask = KnownMask::from_options(vec![Some(5.0), Some(mu), None]);
        let r = fit(StudentT, ML, &mask, &x).unwrap();
        prop_assert_eq!(r.theta[1].to_bits(), mu.to_bits());
        prop_assert_eq!(r.theta[0].to_bits(), 5.0f64.to_bits());
    }

    #[test]
    fn prop_converged_implies_small_residual(seed in 0u64..1000) {
        let x = Weibull.sample(&[2.0, 1.5], 120, seed).unwrap();
        let r = fit(Weibull, ML, &KnownMask::none(2), &x).unwrap();
        if r.converged {
            prop_assert!(r.residual <= trigmoment::estimate::SCORE_TOL);
        }
    }
}
