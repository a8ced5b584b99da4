//! Special functions against independent oracles and identities.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use trigmoment::quad::{integrate, Domain, Tolerance};
use trigmoment::specfun::*;

fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got:.17e}, want {want:.17e}, diff {:.3e} > {tol:.1e}",
        (got - want).abs()
    );
}

/// Stirling series after shifting the argument above 20 — an oracle that
/// shares nothing with the Lanczos sum used in production.
fn ln_gamma_oracle(z: f64) -> f64 {
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

#[test]
fn ln_gamma_known_values() {
    assert_close(ln_gamma(1.0).unwrap(), 0.0, 1e-15, "lnΓ(1)");
    assert_close(ln_gamma(2.0).unwrap(), 0.0, 1e-15, "lnΓ(2)");
    assert_close(ln_gamma(0.5).unwrap(), PI.sqrt().ln(), 1e-14, "lnΓ(1/2)");
    let want = ln_gamma_oracle(7.3);
    let got = ln_gamma(7.3).unwrap();
    assert!(((got - want) / want).abs() < 1e-13, "lnΓ(7.3) {got} vs {want}");
}

#[test]
fn ln_gamma_matches_quadrature_of_euler_integral() {
    let z = 7.3;
    let g = integrate(|v| v.powf(z - 1.0) * (-v).exp(), Domain::ZeroInf, Tolerance { abs: 1e-12, rel: 1e-13 })
        .unwrap()
        .value;
    assert!(((ln_gamma(z).unwrap() - g.ln()) / g.ln()).abs() < 1e-12);
}

#[test]
fn ln_gamma_matches_stirling_oracle_on_grid() {
    for k in 0..=120 {
        let z = 10f64.powf(-3.0 + 6.0 * k as f64 / 120.0);
        let got = ln_gamma(z).unwrap();
        let want = ln_gamma_oracle(z);
        let scale = want.abs().max(1.0);
        assert!((got - want).abs() / scale < 1e-13, "z={z}: {got} vs {want}");
    }
}

#[test]
fn ln_gamma_rejects_bad_arguments() {
    assert!(ln_gamma(0.0).is_err());
    assert!(ln_gamma(-1.5).is_err());
    assert!(ln_gamma(f64::NAN).is_err());
    assert!(ln_gamma(f64::INFINITY).is_err());
    assert!(digamma(0.0).is_err());
    assert!(trigamma(-2.0).is_err());
}

#[test]
fn digamma_trigamma_known_values() {
    assert_close(digamma(1.0).unwrap(), -0.57721566490153, 1e-12, "ψ(1)");
    assert_close(trigamma(1.0).unwrap(), PI * PI / 6.0, 1e-12, "ψ₁(1)");
    for z in [0.5, 2.0, 10.0] {
        assert_close(digamma(z + 1.0).unwrap() - digamma(z).unwrap(), 1.0 / z, 1e-12, "ψ recurrence");
    }
    assert_close(digamma(0.5).unwrap(), -EULER_GAMMA - 2.0 * 2f64.ln(), 1e-12, "ψ(1/2)");
    assert_close(trigamma(0.5).unwrap(), PI * PI / 2.0, 1e-11, "ψ₁(1/2)");
}

#[test]
fn recurrences_hold_on_log_grid() {
    for k in 0..=200 {
        let z = 10f64.powf(-3.0 + 6.0 * k as f64 / 200.0);
        let lg = ln_gamma(z + 1.0).unwrap() - ln_gamma(z).unwrap();
        assert!((lg - z.ln()).abs() <= 1e-11 * z.ln().abs().max(1.0), "Γ recurrence z={z}");
        let d = digamma(z + 1.0).unwrap() - digamma(z).unwrap() - 1.0 / z;
        assert!(d.abs() <= 1e-11 * (1.0 / z).max(1.0), "ψ recurrence z={z}: {d}");
        let t = trigamma(z + 1.0).unwrap() - trigamma(z).unwrap() + 1.0 / (z * z);
        assert!(t.abs() <= 1e-11 * (1.0 / (z * z)).max(1.0), "ψ₁ recurrence z={z}: {t}");
    }
}

#[test]
fn digamma_is_derivative_of_ln_gamma() {
    for z in [0.3, 1.7, 4.2, 25.0, 300.0] {
        let h = 1e-5 * z;
        let fd = (ln_gamma(z + h).unwrap() - ln_gamma(z - h).unwrap()) / (2.0 * h);
        assert!((fd - digamma(z).unwrap()).abs() < 1e-7 * digamma(z).unwrap().abs().max(1.0));
        let fd2 = (digamma(z + h).unwrap() - digamma(z - h).unwrap()) / (2.0 * h);
        assert!((fd2 - trigamma(z).unwrap()).abs() < 1e-6 * trigamma(z).unwrap());
    }
}

#[test]
fn incomplete_gamma_exponential_case() {
    for t in [0.0, 1e-8, 0.1, 1.0, 2.0, 5.0, 30.0] {
        assert_close(reg_gamma_cdf(1.0, 1.0, t).unwrap(), -(-t).exp_m1(), 1e-15, "Γ_{1,1}");
    }
    assert_eq!(reg_gamma_cdf(2.5, 1.0, 0.0).unwrap(), 0.0);
    assert!(reg_gamma_cdf(-1.0, 1.0, 1.0).is_err());
    assert!(reg_gamma_cdf(1.0, 0.0, 1.0).is_err());
    assert!(reg_gamma_cdf(1.0, 1.0, -1.0).is_err());
}

#[test]
fn incomplete_gamma_matches_quadrature_oracle() {
    let cases = [(2.5, 1.0, 3.0), (0.3, 1.0, 0.2), (7.0, 2.0, 9.0), (40.0, 1.0, 35.0), (0.5, 3.0, 12.0)];
    for (a, b, x) in cases {
        let want = integrate(
            |v: f64| gamma_pdf(a, b, v),
            Domain::Finite(0.0, x),
            Tolerance { abs: 1e-15, rel: 1e-13 },
        )
        .unwrap()
        .value;
        assert_close(reg_gamma_cdf(a, b, x).unwrap(), want, 1e-12, "Γ_{a,b} vs quadrature");
    }
}

#[test]
fn incomplete_gamma_upper_tail_is_accurate() {
    // Q(1, x) = e^{-x}: far tail in relative terms.
    for x in [50.0, 200.0, 700.0] {
        let q = gamma_q(1.0, x).unwrap();
        assert!(((q - (-x).exp()) / (-x).exp()).abs() < 1e-12);
        assert!((ln_gamma_q(1.0, x).unwrap() + x).abs() < 1e-10 * x);
    }
    assert!(gamma_q(3.0, 800.0).unwrap() >= 0.0);
}

#[test]
fn incomplete_gamma_derivative_is_density() {
    for (a, b) in [(0.7, 1.0), (2.5, 2.0), (10.0, 0.5)] {
        for k in 1..20 {
            let x = a * b * k as f64 / 8.0;
            let h = 1e-5 * x;
            let fd = (reg_gamma_cdf(a, b, x + h).unwrap() - reg_gamma_cdf(a, b, x - h).unwrap()) / (2.0 * h);
            let pdf = gamma_pdf(a, b, x);
            assert!(((fd - pdf) / pdf).abs() < 1e-6, "a={a} b={b} x={x}: {fd} vs {pdf}");
        }
    }
}

#[test]
fn incomplete_beta_identities_and_oracle() {
    for x in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
        assert_close(reg_beta_cdf(1.0, 1.0, x).unwrap(), x, 1e-15, "uniform beta");
    }
    assert_eq!(reg_beta_cdf(3.0, 0.5, 1.0).unwrap(), 1.0);
    let (a, b, x) = (3.0, 0.5, 0.7);
    let lb = ln_beta(a, b).unwrap();
    let want = integrate(
        |v: f64| ((a - 1.0) * v.ln() + (b - 1.0) * (1.0 - v).ln() - lb).exp(),
        Domain::Finite(0.0, x),
        Tolerance { abs: 1e-15, rel: 1e-13 },
    )
    .unwrap()
    .value;
    assert_close(reg_beta_cdf(a, b, x).unwrap(), want, 1e-12, "I_0.7(3, 0.5)");
    assert!(reg_beta_cdf(1.0, 1.0, 1.5).is_err());
    assert!(reg_beta_cdf(0.0, 1.0, 0.5).is_err());
}

#[test]
fn normal_cdf_values() {
    assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
    assert_close(std_normal_cdf(1.959963985).unwrap(), 0.975, 1e-9, "Φ(1.96)");
    // erf Taylor series oracle.
    let z: f64 = 3.0 / 2f64.sqrt();
    let mut term = z;
    let mut erf = 0.0;
    for n in 0..200 {
        erf += term / (2 * n + 1) as f64;
        term *= -z * z / (n + 1) as f64;
    }
    erf *= 2.0 / PI.sqrt();
    assert_close(std_normal_cdf(-3.0).unwrap(), 0.5 * (1.0 - erf), 1e-14, "Φ(−3)");
    assert!(std_normal_cdf(f64::NAN).is_err());
    for x in [0.3, 1.0, 2.5, 6.0] {
        assert_close(std_normal_cdf(-x).unwrap(), 1.0 - std_normal_cdf(x).unwrap(), 1e-15, "symmetry");
    }
}

#[test]
fn normal_quantile_inverts_cdf() {
    for p in [1e-12, 1e-6, 0.01, 0.2, 0.5, 0.8, 0.975, 0.999_999] {
        let x = std_normal_quantile(p).unwrap();
        let back = std_normal_cdf(x).unwrap();
        assert!(((back - p) / p.min(1.0 - p)).abs() < 1e-11, "p={p}: {back}");
    }
}

#[test]
fn noncentral_chi2_central_case_and_edges() {
    for t in [0.1, 1.0, 5.991, 20.0] {
        assert_close(noncentral_chi2_sf(2, 0.0, t).unwrap(), (-t / 2.0f64).exp(), 1e-12, "central χ²₂");
    }
    assert_eq!(noncentral_chi2_sf(2, 5.0, 0.0).unwrap(), 1.0);
    assert!(noncentral_chi2_sf(2, -1.0, 1.0).is_err());
    assert!(noncentral_chi2_sf(2, 1.0, -1.0).is_err());
}

#[test]
fn noncentral_chi2_matches_monte_carlo_oracle() {
    let (ncp, t) = (5.0f64, 5.991);
    let want = noncentral_chi2_sf(2, ncp, t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let n = 10_000_000u64;
    let shift = ncp.sqrt();
    let mut hits = 0u64;
    for _ in 0..n / 2 {
        // Box–Muller gives two independent normals per draw pair; use them for
        // (Z₁ + √ncp)² + Z₂².
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let (z1, z2) = (r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin());
        let u3: f64 = 1.0 - rng.gen::<f64>();
        let u4: f64 = rng.gen();
        let r2 = (-2.0 * u3.ln()).sqrt();
        let (z3, z4) = (r2 * (2.0 * PI * u4).cos(), r2 * (2.0 * PI * u4).sin());
        if (z1 + shift).powi(2) + z2 * z2 > t {
            hits += 1;
        }
        if (z3 + shift).powi(2) + z4 * z4 > t {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((p - want).abs() < 3.0 * se, "MC {p} vs series {want} (se {se})");
}

#[test]
fn noncentral_chi2_large_ncp_is_finite_and_monotone() {
    let mut prev = 0.0;
    for ncp in [1.0, 10.0, 100.0, 1000.0, 5000.0] {
        let p = noncentral_chi2_sf(2, ncp, 5.991).unwrap();
        assert!(p.is_finite() && p >= prev && p <= 1.0);
        prev = p;
    }
}

/// I₀(z) by its power series Σ (z²/4)ᵏ/(k!)².
fn bessel_i0(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let (mut term, mut sum, mut k) = (1.0, 1.0, 0.0);
    while term > 1e-18 * sum {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
    }
    sum
}

#[test]
fn noncentral_chi2_upper_tail_near_one() {
    // The lower tail P(χ²₂(λ) ≤ t) = ∫₀ᵗ ½e^{−(x+λ)/2} I₀(√(λx)) dx is tiny for
    // large λ; the survival function must resolve it.
    let t = 5.991464547107979;
    let mut prev = 0.0;
    for ncp in [20.0, 40.0, 60.0, 80.0, 100.0, 101.0, 116.0] {
        let cdf = integrate(
            |x| 0.5 * (-(x + ncp) / 2.0).exp() * bessel_i0((ncp * x).sqrt()),
            Domain::Finite(0.0, t),
            Tolerance { abs: 1e-300, rel: 1e-12 },
        )
        .unwrap()
        .value;
        let sf = noncentral_chi2_sf(2, ncp, t).unwrap();
        let got = 1.0 - sf;
        if cdf > 1e-13 {
            assert!(((got - cdf) / cdf).abs() < 1e-3, "ncp {ncp}: 1 − sf = {got:e}, oracle {cdf:e}");
        } else {
            assert!(got.abs() < 2e-16 + 2.0 * cdf, "ncp {ncp}: 1 − sf = {got:e}, oracle {cdf:e}");
        }
        assert!(sf >= prev, "monotone in ncp at {ncp}");
        prev = sf;
    }
}

#[test]
fn zeta3_value_and_series() {
    assert_close(zeta3(), 1.20205690315959, 1e-14, "ζ(3)");
    let n = 1_000_000u64;
    let partial: f64 = (1..=n).rev().map(|k| 1.0 / (k as f64).powi(3)).sum();
    assert!(partial < zeta3());
    // Euler–Maclaurin tail: ∫_N^∞ x⁻³ dx − N⁻³/2 + …
    let nf = n as f64;
    let tail = 1.0 / (2.0 * nf * nf) - 1.0 / (2.0 * nf.powi(3)) + 1.0 / (4.0 * nf.powi(4));
    // The upper bound is tight to 1/(2N³); compare at double resolution.
    assert!(zeta3() <= partial + 1.0 / (2.0 * nf * nf) + 4.0 * f64::EPSILON);
    assert_close(zeta3(), partial + tail, 1e-12, "ζ(3) series");
}

proptest! {
    #[test]
    fn prop_reg_gamma_monotone(a in 0.05f64..50.0, x in 0.0f64..100.0, dx in 0.0f64..10.0) {
        let f1 = reg_gamma_cdf(a, 1.0, x).unwrap();
        let f2 = reg_gamma_cdf(a, 1.0, x + dx).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!(f2 >= f1 - 1e-15);
    }

    #[test]
    fn prop_reg_beta_symmetry(a in 0.1f64..20.0, b in 0.1f64..20.0, x in 0.0f64..=1.0) {
        let l = reg_beta_cdf(a, b, x).unwrap();
        let r = 1.0 - reg_beta_cdf(b, a, 1.0 - x).unwrap();
        prop_assert!((l - r).abs() < 1e-12, "{} vs {}", l, r);
    }

    #[test]
    fn prop_reg_beta_monotone(a in 0.1f64..20.0, b in 0.1f64..20.0, x in 0.0f64..0.9, dx in 0.0f64..0.1) {
        let f1 = reg_beta_cdf(a, b, x).unwrap();
        let f2 = reg_beta_cdf(a, b, x + dx).unwrap();
        prop_assert!(f2 >= f1 - 1e-14);
    }

    #[test]
    fn prop_gamma_p_plus_q_is_one(a in 0.01f64..100.0, x in 0.0f64..200.0) {
        let s = gamma_p(a, x).unwrap() + gamma_q(a, x).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-13);
    }
}
