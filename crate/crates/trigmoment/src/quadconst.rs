//! The numerically evaluated constants h₁–h₃₇ that enter the G and J
//! matrices, plus the four logistic-family integrals.
//!
//! Results are memoized per (index, arguments rounded to 15 significant
//! digits) in a process-wide, lock-protected cache, so repeated requests are
//! bit-identical and cheap.

use crate::error::{Error, Result};
use crate::quad::{integrate, Domain, Tolerance};
use crate::specfun::{
    beta_pdf, gamma_p_unchecked, gamma_pdf, inverse_gaussian_cdf, inverse_gaussian_pdf,
    reg_beta_xy,
};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{LazyLock, OnceLock, RwLock};

/// Tolerance used for every h constant.
pub const H_TOLERANCE: Tolerance = Tolerance { abs: 1e-10, rel: 1e-10 };

/// Smallest Student-t degrees of freedom accepted by h₁₂–h₁₆.
pub const STUDENT_MIN_LAMBDA: f64 = 0.2;

type Key = (u8, [u64; 3]);

static CACHE: LazyLock<RwLock<HashMap<Key, f64>>> = LazyLock::new(|| RwLock::new(HashMap::new()));

/// Number of arguments taken by h_index, or `None` for an invalid index.
pub fn arity(index: u8) -> Option<usize> {
    match index {
        1..=5 | 8..=24 | 33..=37 => Some(1),
        6 | 7 => Some(3),
        25..=32 => Some(2),
        _ => None,
    }
}

fn round15(x: f64) -> u64 {
    // Round to 15 significant digits so keys are stable under 1-ulp noise.
    let r: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    r.to_bits()
}

fn key(index: u8, args: &[f64]) -> Key {
    let mut k = [0u64; 3];
    for (slot, a) in k.iter_mut().zip(args) {
        *slot = round15(*a);
    }
    (index, k)
}

/// Evaluates h_index at `args`, memoized.
pub fn h(index: u8, args: &[f64]) -> Result<f64> {
    let n = arity(index).ok_or_else(|| Error::domain(format!("no constant h{index}")))?;
    if args.len() != n {
        return Err(Error::domain(format!(
            "h{index} takes {n} argument(s), got {}",
            args.len()
        )));
    }
    if let Some(bad) = args.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::domain(format!("h{index} arguments must be finite and > 0, got {bad}")));
    }
    let k = key(index, args);
    if let Some(v) = CACHE.read().expect("h cache poisoned").get(&k) {
        return Ok(*v);
    }
    let v = compute(index, args)?;
    // First writer wins, so concurrent callers observe a single value.
    let mut w = CACHE.write().expect("h cache poisoned");
    Ok(*w.entry(k).or_insert(v))
}

/// Evaluates h_index at `args` without consulting the cache.
pub fn h_uncached(index: u8, args: &[f64]) -> Result<f64> {
    arity(index)
        .filter(|n| *n == args.len())
        .ok_or_else(|| Error::domain(format!("invalid index or arity for h{index}")))?;
    compute(index, args)
}

fn q(f: impl Fn(f64) -> f64, d: Domain) -> Result<f64> {
    integrate(f, d, H_TOLERANCE).map(|r| r.value)
}

/// ∫₀^∞ f(v) dv computed as m·∫₀^∞ f(m w) dw, so that a density weight with
/// mean m has its mass near w = 1 whatever its location and scale.
fn q_scaled(f: impl Fn(f64) -> f64, m: f64) -> Result<f64> {
    integrate(|w| f(m * w), Domain::ZeroInf, H_TOLERANCE).map(|r| m * r.value)
}

fn student_check(index: u8, lambda: f64) -> Result<()> {
    if lambda < STUDENT_MIN_LAMBDA {
        return Err(Error::domain(format!(
            "h{index}({lambda}): Student-t constants are only supported for λ >= {STUDENT_MIN_LAMBDA}"
        )));
    }
    if (index == 15 || index == 16) && lambda <= 1.0 {
        return Err(Error::domain(format!("h{index}({lambda}) requires λ > 1")));
    }
    Ok(())
}

fn compute(index: u8, args: &[f64]) -> Result<f64> {
    let a0 = args[0];
    match index {
        1..=5 | 37 => {
            let lam = a0;
            let a = 1.0 / lam;
            let phase = move |v: f64| PI * (1.0 + gamma_p_unchecked(a, v));
            match index {
                1 => q_scaled(|v| phase(v).cos() * gamma_pdf(a + 1.0, 1.0, v), a + 1.0),
                2 => q_scaled(|v| phase(v).sin() * (-v).exp(), 1.0),
                3 => q_scaled(
                    |v| phase(v).cos() * (lam * v).ln() * gamma_pdf(a + 1.0, 1.0, v),
                    a + 1.0,
                ),
                4 => q_scaled(|v| phase(v).cos() * gamma_pdf(3.0 * a, 1.0, v), 3.0 * a),
                5 => q_scaled(|v| phase(v).sin() * gamma_pdf(2.0 * a, 1.0, v), 2.0 * a),
                _ => q_scaled(|v| phase(v).sin() * gamma_pdf(a + 1.0, 1.0, v), a + 1.0),
            }
        }
        6 | 7 => {
            let (a, b, c) = (args[0], args[1], args[2]);
            let trig = if index == 6 { f64::cos } else { f64::sin };
            q_scaled(|v| trig(2.0 * PI * gamma_p_unchecked(a, v)) * gamma_pdf(b, c, v), b * c)
        }
        8 | 9 => {
            let lam = a0;
            let trig = if index == 8 { f64::cos } else { f64::sin };
            q_scaled(
                |v| {
                    (v - lam) * v.ln() * trig(2.0 * PI * gamma_p_unchecked(lam, v))
                        * gamma_pdf(lam, 1.0, v)
                },
                lam,
            )
        }
        10 | 11 => {
            let al = a0;
            let trig = if index == 10 { f64::cos } else { f64::sin };
            q_scaled(
                |v| v.ln() * trig(2.0 * PI * gamma_p_unchecked(al, v)) * gamma_pdf(al, 1.0, v),
                al,
            )
        }
        12..=16 => {
            let lam = a0;
            student_check(index, lam)?;
            let phase = move |v: f64| PI * (2.0 - reg_beta_xy(0.5 * lam, 0.5, v, 1.0 - v));
            let d = Domain::Finite(0.0, 1.0);
            match index {
                12 => q(|v| phase(v).cos() * beta_pdf(0.5 * lam, 1.5, v), d),
                13 => q(|v| phase(v).sin() * beta_pdf(0.5 * (lam + 1.0), 1.0, v), d),
                14 => q(
                    |v| {
                        phase(v).cos()
                            * (v.ln() + (lam + 1.0) / lam * (1.0 - v))
                            // v = 1/(1 + y²/λ) is Beta(λ/2, 1/2) distributed.
                            * beta_pdf(0.5 * lam, 0.5, v)
                    },
                    d,
                ),
                15 => q(|v| phase(v).cos() * beta_pdf(0.5 * (lam - 1.0), 1.0, v), d),
                _ => q(|v| phase(v).sin() * beta_pdf(0.5 * (lam - 1.0), 1.0, v), d),
            }
        }
        17 | 18 => {
            let lam = a0;
            let a = 1.0 / lam;
            let trig = if index == 17 { f64::cos } else { f64::sin };
            q_scaled(
                |v| {
                    trig(2.0 * PI * gamma_p_unchecked(a, v)) * (lam * v).ln()
                        * gamma_pdf(a + 1.0, 1.0, v)
                },
                a + 1.0,
            )
        }
        19 => q(|v| v.ln().powi(2) * v * (-a0 * v).exp(), Domain::OneInf),
        20 => q(|v| v.ln() * v * (-a0 * v).exp(), Domain::OneInf),
        21..=24 => {
            let rho = a0;
            let trig = if index % 2 == 1 { f64::cos } else { f64::sin };
            let phase = move |v: f64| 2.0 * PI * (-(-rho * (v - 1.0)).exp_m1());
            if index <= 22 {
                q(
                    |v| trig(phase(v)) * v.ln() * (1.0 - rho * v) * (-rho * v).exp(),
                    Domain::OneInf,
                )
            } else {
                q(|v| trig(phase(v)) * v * (-rho * v).exp(), Domain::OneInf)
            }
        }
        25..=28 => {
            let (al, be) = (args[0], args[1]);
            let trig = if index % 2 == 1 { f64::cos } else { f64::sin };
            let weight = move |v: f64| if index <= 26 { v.ln() } else { (-v).ln_1p() };
            q(
                |v| weight(v) * trig(2.0 * PI * reg_beta_xy(al, be, v, 1.0 - v)) * beta_pdf(al, be, v),
                Domain::Finite(0.0, 1.0),
            )
        }
        29..=32 => {
            let (mu, lam) = (args[0], args[1]);
            let trig = if index % 2 == 1 { f64::cos } else { f64::sin };
            let weight = move |v: f64| if index <= 30 { v } else { (v * v + mu * mu) / v };
            q_scaled(
                |v| {
                    let p = inverse_gaussian_pdf(mu, lam, v);
                    if p == 0.0 {
                        0.0
                    } else {
                        weight(v) * trig(2.0 * PI * inverse_gaussian_cdf(mu, lam, v)) * p
                    }
                },
                mu,
            )
        }
        33..=36 => {
            let be = a0;
            let trig = if index % 2 == 1 { f64::cos } else { f64::sin };
            // 1 − (1 − v)^β, computed without cancellation near v = 0.
            let phase = move |v: f64| 2.0 * PI * -(be * (-v).ln_1p()).exp_m1();
            if index <= 34 {
                q(
                    |v| {
                        let w = 1.0 - v;
                        trig(phase(v)) * v.ln() * w.powf(be - 2.0) * (1.0 - be * v)
                    },
                    Domain::Finite(0.0, 1.0),
                )
            } else {
                q(
                    |v| {
                        let w = 1.0 - v;
                        trig(phase(v)) * w.ln() * w.powf(be - 1.0)
                    },
                    Domain::Finite(0.0, 1.0),
                )
            }
        }
        _ => Err(Error::domain(format!("no constant h{index}"))),
    }
}

/// The four logistic-family integrals, recomputed by quadrature in the
/// probability scale u ∈ (0, 1) with y = ln{u/(1−u)}:
///
/// * `c_cos` = ∫ cos(2πu)(2u − 1) y du (ML, cosine row, σ column),
/// * `c_sin` = ∫ sin(2πu)(2u − 1) du (ML, sine row, μ column; equals −1/π),
/// * `m_cos` = 15/(8π²) ∫ cos(2πu) y² du (MM, cosine row, σ column),
/// * `m_sin` = 3/π² ∫ sin(2πu) y du (MM, sine row, μ column).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConstants {
    /// ML cosine/scale entry.
    pub c_cos: f64,
    /// ML sine/location entry.
    pub c_sin: f64,
    /// MM cosine/scale entry.
    pub m_cos: f64,
    /// MM sine/location entry.
    pub m_sin: f64,
}

fn logistic_uncached() -> Result<LogisticConstants> {
    let tol = Tolerance { abs: 1e-14, rel: 1e-13 };
    let d = Domain::Finite(0.0, 1.0);
    let y = |u: f64| (u / (1.0 - u)).ln();
    let tp = 2.0 * PI;
    let c_cos = integrate(|u| (tp * u).cos() * (2.0 * u - 1.0) * y(u), d, tol)?.value;
    let c_sin = integrate(|u| (tp * u).sin() * (2.0 * u - 1.0), d, tol)?.value;
    let m_cos = 15.0 / (8.0 * PI * PI) * integrate(|u| (tp * u).cos() * y(u).powi(2), d, tol)?.value;
    let m_sin = 3.0 / (PI * PI) * integrate(|u| (tp * u).sin() * y(u), d, tol)?.value;
    Ok(LogisticConstants { c_cos, c_sin, m_cos, m_sin })
}

/// Returns the logistic integrals, computed once per process.
pub fn logistic_constants() -> Result<LogisticConstants> {
    static ONCE: OnceLock<Result<LogisticConstants>> = OnceLock::new();
    ONCE.get_or_init(logistic_uncached).clone()
}
