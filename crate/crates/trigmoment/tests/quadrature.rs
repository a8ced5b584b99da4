//! Adaptive quadrature and the h constants.

use std::f64::consts::PI;
use trigmoment::quad::{integrate, Domain, Tolerance};
use trigmoment::quadconst::{h, h_uncached, logistic_constants};
use trigmoment::specfun::{gamma_pdf, gamma_q};

fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got:.15e}, want {want:.15e}, diff {:.3e}",
        (got - want).abs()
    );
}

fn tight() -> Tolerance {
    Tolerance { abs: 1e-13, rel: 1e-12 }
}

#[test]
fn integrate_basic_cases() {
    let t = Tolerance::default();
    assert_close(integrate(|v| (-v).exp(), Domain::ZeroInf, t).unwrap().value, 1.0, 1e-10, "e^{-v}");
    assert_close(integrate(|v: f64| v.powf(-0.5), Domain::Finite(0.0, 1.0), t).unwrap().value, 2.0, 1e-9, "v^{-1/2}");
    let osc = integrate(|v: f64| (2.0 * PI * (-(-v).exp_m1())).cos() * (-v).exp(), Domain::ZeroInf, t).unwrap();
    assert_close(osc.value, 0.0, 1e-11, "cos(2π(1−e^{−v}))e^{−v}");
    let one = integrate(|v: f64| 1.0 / (v * v), Domain::OneInf, t).unwrap();
    assert_close(one.value, 1.0, 1e-10, "∫₁^∞ v⁻²");
    let gauss = integrate(|v: f64| (-0.5 * v * v).exp(), Domain::Real(0.3), t).unwrap();
    assert_close(gauss.value, (2.0 * PI).sqrt(), 1e-10, "Gaussian integral");
}

#[test]
fn integrate_polynomials_and_strong_singularities() {
    let r = integrate(|x: f64| 23.0 * x.powi(22), Domain::Finite(0.0, 1.0), tight()).unwrap();
    assert_close(r.value, 1.0, 1e-12, "x^22");
    let r = integrate(|x: f64| x.powf(-0.9), Domain::Finite(0.0, 1.0), tight()).unwrap();
    assert_close(r.value, 10.0, 1e-10, "x^-0.9");
    // ∫₀^∞ ln v · v^{a−1} e^{−v} dv = Γ(a)ψ(a).
    let a = 0.2;
    let r = integrate(|v: f64| v.ln() * v.powf(a - 1.0) * (-v).exp(), Domain::ZeroInf, tight()).unwrap();
    let want = trigmoment::specfun::gamma(a).unwrap() * trigmoment::specfun::digamma(a).unwrap();
    assert_close(r.value, want, 1e-9 * want.abs(), "Γ(a)ψ(a)");
}

#[test]
fn integrate_reports_failures() {
    assert!(integrate(|v| v, Domain::Finite(1.0, 0.0), Tolerance::default()).is_err());
    assert!(integrate(|v| v, Domain::ZeroInf, Tolerance { abs: 0.0, rel: 0.0 }).is_err());
    // Divergent integral: cannot converge.
    let e = integrate(|v: f64| 1.0 / v, Domain::Finite(0.0, 1.0), Tolerance::default());
    assert!(e.is_err());
}

#[test]
fn integrate_is_deterministic() {
    let f = |v: f64| v.ln() * (-v).exp() * v.sqrt();
    let a = integrate(f, Domain::ZeroInf, Tolerance::default()).unwrap();
    let b = integrate(f, Domain::ZeroInf, Tolerance::default()).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}

#[test]
fn h1_h2_uniform_limit() {
    assert!((h(1, &[1e6]).unwrap() - 1.0).abs() < 1e-3);
    assert!(h(2, &[1e6]).unwrap().abs() < 1e-3);
}

#[test]
fn h6_matches_u_form() {
    let want = integrate(|u: f64| (2.0 * PI * u).cos() * -(-u).ln_1p(), Domain::Finite(0.0, 1.0), tight()).unwrap().value;
    assert_close(h(6, &[1.0, 2.0, 1.0]).unwrap(), want, 1e-9, "h6(1,2,1)");
    let want7 = integrate(|u: f64| (2.0 * PI * u).sin() * -(-u).ln_1p(), Domain::Finite(0.0, 1.0), tight()).unwrap().value;
    assert_close(h(7, &[1.0, 2.0, 1.0]).unwrap(), want7, 1e-9, "h7(1,2,1)");
}

#[test]
fn h10_h11_match_u_form() {
    let g = |u: f64| (-(-u).ln_1p()).ln();
    let c = integrate(|u: f64| g(u) * (2.0 * PI * u).cos(), Domain::Finite(0.0, 1.0), tight()).unwrap().value;
    let s = integrate(|u: f64| g(u) * (2.0 * PI * u).sin(), Domain::Finite(0.0, 1.0), tight()).unwrap().value;
    assert_close(h(10, &[1.0]).unwrap(), c, 1e-9, "h10(1)");
    assert_close(h(11, &[1.0]).unwrap(), s, 1e-9, "h11(1)");
}

/// Gamma quantile by bisection on the upper tail — test-only oracle.
fn gamma_quantile(a: f64, u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while 1.0 - gamma_q(a, hi).unwrap() < u {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - gamma_q(a, mid).unwrap() < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn h6_h7_general_shape_matches_u_form() {
    // h6(a, a, 1): substitute u = Γ_{a,1}(v) to get ∫ cos(2πu) du = 0; with
    // b = a + 1 the weight becomes v/a.
    let a: f64 = 2.5;
    assert_close(h(6, &[a, a, 1.0]).unwrap(), 0.0, 1e-9, "h6(a,a,1)");
    assert_close(h(7, &[a, a, 1.0]).unwrap(), 0.0, 1e-9, "h7(a,a,1)");
    let tol = Tolerance { abs: 1e-11, rel: 1e-10 };
    let c = integrate(|u: f64| (2.0 * PI * u).cos() * gamma_quantile(a, u) / a, Domain::Finite(0.0, 1.0), tol).unwrap().value;
    assert_close(h(6, &[a, a + 1.0, 1.0]).unwrap(), c, 1e-9, "h6(a,a+1,1)");
}

#[test]
fn memoized_values_are_bit_identical() {
    let a = h(8, &[1.7]).unwrap();
    let b = h(8, &[1.7]).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let c = h(8, &[1.7 + 1e-17]).unwrap();
    assert_eq!(a.to_bits(), c.to_bits());
    let d = h_uncached(8, &[1.7]).unwrap();
    assert!((a - d).abs() < 1e-14);
}

#[test]
fn memo_is_consistent_across_threads() {
    let vals: Vec<u64> = std::thread::scope(|s| {
        let hs: Vec<_> = (0..4).map(|_| s.spawn(|| h(9, &[2.3]).unwrap().to_bits())).collect();
        hs.into_iter().map(|j| j.join().unwrap()).collect()
    });
    assert!(vals.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn h_rejects_bad_index_and_arity() {
    assert!(h(0, &[1.0]).is_err());
    assert!(h(38, &[1.0]).is_err());
    assert!(h(6, &[1.0]).is_err());
    assert!(h(1, &[-1.0]).is_err());
    assert!(h(12, &[0.1]).is_err());
    assert!(h(15, &[0.9]).is_err());
}

#[test]
fn every_h_is_finite_on_typical_arguments() {
    let cases: Vec<(u8, Vec<f64>)> = vec![
        (1, vec![1.5]), (2, vec![1.5]), (3, vec![1.5]), (4, vec![1.5]), (5, vec![1.5]),
        (6, vec![0.5, 1.5, 1.0]), (7, vec![0.5, 1.5, 1.0]), (8, vec![2.0]), (9, vec![2.0]),
        (10, vec![0.7]), (11, vec![0.7]), (12, vec![5.0]), (13, vec![5.0]), (14, vec![5.0]),
        (15, vec![5.0]), (16, vec![5.0]), (17, vec![1.5]), (18, vec![1.5]), (19, vec![0.8]),
        (20, vec![0.8]), (21, vec![0.8]), (22, vec![0.8]), (23, vec![0.8]), (24, vec![0.8]),
        (25, vec![2.0, 3.0]), (26, vec![2.0, 3.0]), (27, vec![2.0, 3.0]), (28, vec![2.0, 3.0]),
        (29, vec![1.0, 2.0]), (30, vec![1.0, 2.0]), (31, vec![1.0, 2.0]), (32, vec![1.0, 2.0]),
        (33, vec![2.5]), (34, vec![2.5]), (35, vec![2.5]), (36, vec![2.5]), (37, vec![1.5]),
    ];
    for (i, args) in cases {
        let v = h(i, &args).unwrap_or_else(|e| panic!("h{i}: {e}"));
        assert!(v.is_finite(), "h{i}");
    }
}

#[test]
fn laplace_special_values() {
    // λ = 1: Γ_{1,1}(v) = 1 − e^{−v}, so h1(1) = ∫ cos(π(2 − e^{−v})) v e^{−v} dv,
    // which in u = 1 − e^{−v} is ∫ cos(π(1+u)) (−ln(1−u)) du.
    let want = integrate(|u: f64| (PI * (1.0 + u)).cos() * -(-u).ln_1p(), Domain::Finite(0.0, 1.0), tight()).unwrap().value;
    assert_close(h(1, &[1.0]).unwrap(), want, 1e-9, "h1(1)");
    let want2 = integrate(|u: f64| (PI * (1.0 + u)).sin(), Domain::Finite(0.0, 1.0), tight()).unwrap().value;
    assert_close(h(2, &[1.0]).unwrap(), want2, 1e-9, "h2(1) = −2/π");
    assert_close(want2, -2.0 / PI, 1e-12, "closed form");
    let _ = gamma_pdf(1.0, 1.0, 1.0);
}

#[test]
fn logistic_constants_reproduce_table_values() {
    let c = logistic_constants().unwrap();
    assert_close(c.c_cos, 0.698397593884459, 1e-12, "c_cos");
    assert_close(c.c_sin, -1.0 / PI, 1e-12, "c_sin");
    assert_close(c.m_cos, 0.4909114316, 1e-9, "m_cos");
    assert_close(c.m_sin, -0.235854187, 1e-9, "m_sin");
}

#[test]
fn gamma_type_constants_handle_concentrated_weights() {
    // With b = a and c = 1 the substitution u = Γ_{a,1}(v) gives ∫ cos/sin(2πu) du = 0.
    for a in [0.05, 0.3, 50.0, 400.0] {
        assert_close(h(6, &[a, a, 1.0]).unwrap(), 0.0, 1e-9, "h6(a,a,1)");
        assert_close(h(7, &[a, a, 1.0]).unwrap(), 0.0, 1e-9, "h7(a,a,1)");
    }
    // h8 + λ·h10 = ∫ v ln v cos(…) f_ga dv = λ·h10-type integral at shape λ+1 — check
    // finiteness and smooth dependence on λ at large shapes instead.
    let a = h(10, &[300.0]).unwrap();
    let b = h(10, &[300.0 * (1.0 + 1e-6)]).unwrap();
    assert!((a - b).abs() < 1e-6);
}

#[test]
fn inverse_gaussian_constants_match_u_form_identity() {
    // ∫ cos(2πF_IG) f_IG dv = 0; so h29 − h31 = −μ² ∫ cos(…)/v f_IG dv, while the
    // plain identity for a constant weight must vanish for every (μ, λ).
    for (mu, lam) in [(1.0, 2.0), (3.0, 0.5), (0.5, 40.0)] {
        let zero = integrate(
            |v: f64| (2.0 * PI * trigmoment::specfun::inverse_gaussian_cdf(mu, lam, v)).cos()
                * trigmoment::specfun::inverse_gaussian_pdf(mu, lam, v),
            Domain::ZeroInf,
            Tolerance::default(),
        )
        .unwrap()
        .value;
        assert_close(zero, 0.0, 1e-9, "∫cos(2πF)f");
        assert!(h(29, &[mu, lam]).unwrap().is_finite());
    }
}
