//! Adaptive Gauss–Kronrod (7/15) quadrature with interval bisection.
//!
//! Semi-infinite tails are mapped onto (0, 1) with v = a + t/(1−t); finite
//! endpoints are approached through an exponential substitution so that
//! integrable endpoint singularities (v^{a−1}, ln v) converge quickly; the real
//! line is folded onto a half line around a centre point. The local error
//! estimate follows the classical QUADPACK recipe.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Integration range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Finite interval (a, b) with a < b.
    Finite(f64, f64),
    /// (0, ∞), mapped by v = t/(1−t).
    ZeroInf,
    /// (1, ∞), mapped by v = 1 + t/(1−t).
    OneInf,
    /// (a, ∞), mapped by v = a + t/(1−t).
    HalfLine(f64),
    /// (−∞, ∞), folded as ∫₀^∞ {f(c+v) + f(c−v)} dv around the centre c.
    Real(f64),
}

/// Requested accuracy: the run stops once the global error bound is below
/// max(abs, rel·|estimate|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Absolute tolerance.
    pub abs: f64,
    /// Relative tolerance.
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-12, rel: 1e-10 }
    }
}

impl Tolerance {
    /// Tolerance with the given absolute bound and the default relative bound.
    pub fn abs(abs: f64) -> Self {
        Tolerance { abs, rel: 1e-10 }
    }
}

/// Outcome of a successful integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Integral estimate.
    pub value: f64,
    /// Estimated absolute error bound.
    pub error: f64,
    /// Number of integrand evaluations.
    pub evaluations: usize,
}

/// Maximum bisection depth of any subinterval.
pub const MAX_DEPTH: u32 = 60;
/// Maximum number of subintervals kept alive.
pub const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod rule on (a, b): returns (estimate, error estimate).
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = hlgth.abs();
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::domain(format!("integrand is not finite at {x}: {y}")))
        }
    };
    let fc = eval(centr)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = eval(centr - absc)?;
        let f2 = eval(centr + absc)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let f1 = eval(centr - absc)?;
        let f2 = eval(centr + absc)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut abserr = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && abserr != 0.0 {
        abserr = resasc * (200.0 * abserr / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        abserr = abserr.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((result, abserr))
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, panels: &[(f64, f64)], tol: Tolerance) -> Result<Quadrature> {
    let mut evaluations = 0;
    let mut heap = BinaryHeap::new();
    for &(a, b) in panels {
        let (value, error) = qk15(f, a, b)?;
        evaluations += 15;
        heap.push(Segment { a, b, value, error, depth: 0 });
    }
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    loop {
        let live_value: f64 = heap.iter().map(|s| s.value).sum();
        let live_error: f64 = heap.iter().map(|s| s.error).sum();
        let value = live_value + frozen_value;
        let error = live_error + frozen_error;
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Quadrature { value, error, evaluations });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => return Err(Error::Quadrature { estimate: value, bound: error }),
        };
        let mid = 0.5 * (worst.a + worst.b);
        if worst.depth >= MAX_DEPTH || mid <= worst.a || mid >= worst.b {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        if heap.len() + 2 > MAX_INTERVALS {
            heap.push(worst);
            return Err(Error::Quadrature { estimate: value, bound: error });
        }
        let (v1, e1) = qk15(f, worst.a, mid)?;
        let (v2, e2) = qk15(f, mid, worst.b)?;
        evaluations += 30;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1, depth: worst.depth + 1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2, depth: worst.depth + 1 });
    }
}

/// ∫_lo^∞ f(v) dv as an integral over t ∈ (0, 1) with v = lo + t/(1−t).
fn tail_piece<F: Fn(f64) -> f64>(f: &F, lo: f64, t: f64) -> f64 {
    let s = 1.0 - t;
    let v = lo + t / s;
    if !v.is_finite() {
        return 0.0;
    }
    let y = f(v);
    if y == 0.0 {
        0.0
    } else {
        y / (s * s)
    }
}

/// ∫ f over the interval of width `h` starting at the endpoint `e` and
/// extending in direction `dir` (±1), as an integral over t ∈ (0, 1): the
/// exponential substitution x = e + dir·h·exp(−s) turns algebraic and
/// logarithmic endpoint singularities into exponentially decaying tails in
/// s, which is then mapped to (0, 1) by s = t/(1−t).
fn endpoint_piece<F: Fn(f64) -> f64>(f: &F, e: f64, dir: f64, h: f64, t: f64) -> f64 {
    let r = 1.0 - t;
    let s = t / r;
    let w = h * (-s).exp();
    let x = e + dir * w;
    if w == 0.0 || x == e {
        return 0.0;
    }
    let y = f(x);
    if y == 0.0 {
        0.0
    } else {
        y * w / (r * r)
    }
}

/// Runs the adaptive scheme on a two-piece integrand defined on (0, 2), the
/// pieces meeting at t = 1, which is never used as a node.
fn two_pieces<G: Fn(f64) -> f64>(g: G, tol: Tolerance) -> Result<Quadrature> {
    adaptive(&g, &[(0.0, 1.0), (1.0, 2.0)], tol)
}

/// Integrates `f` over `domain` to the requested tolerance.
///
/// Finite intervals are split at the midpoint and each half is mapped from its
/// endpoint by an exponential substitution. The half line (lo, ∞) is split
/// at lo + 1: the bounded part is treated like a finite endpoint and the
/// unbounded part is mapped by v = lo + 1 + t/(1−t). (1, ∞) uses
/// v = 1 + t/(1−t) directly. An integrand value that is not finite at a
/// quadrature node is reported as a domain error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, domain: Domain, tol: Tolerance) -> Result<Quadrature> {
    if !(tol.abs > 0.0 && tol.rel >= 0.0) {
        return Err(Error::domain("quadrature tolerances must be positive"));
    }
    let half_line = |lo: f64, f: &dyn Fn(f64) -> f64| {
        two_pieces(
            |t| {
                if t < 1.0 {
                    endpoint_piece(&f, lo, 1.0, 1.0, t)
                } else {
                    tail_piece(&f, lo + 1.0, t - 1.0)
                }
            },
            tol,
        )
    };
    match domain {
        Domain::Finite(a, b) => {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::domain(format!("invalid interval ({a}, {b})")));
            }
            let h = 0.5 * (b - a);
            two_pieces(
                |t| {
                    if t < 1.0 {
                        endpoint_piece(&f, a, 1.0, h, t)
                    } else {
                        endpoint_piece(&f, b, -1.0, h, t - 1.0)
                    }
                },
                tol,
            )
        }
        Domain::ZeroInf => half_line(0.0, &f),
        Domain::OneInf => adaptive(&|t| tail_piece(&f, 1.0, t), &[(0.0, 1.0)], tol),
        Domain::HalfLine(lo) => {
            if !lo.is_finite() {
                return Err(Error::domain("half-line origin must be finite"));
            }
            half_line(lo, &f)
        }
        Domain::Real(c) => {
            if !c.is_finite() {
                return Err(Error::domain("real-line centre must be finite"));
            }
            let folded = |v: f64| f(c + v) + f(c - v);
            half_line(0.0, &folded)
        }
    }
}

/// Integrates with the default tolerance (abs 1e-12, rel 1e-10) and returns
/// only the value.
pub fn integrate_default<F: Fn(f64) -> f64>(f: F, domain: Domain) -> Result<f64> {
    integrate(f, domain, Tolerance::default()).map(|q| q.value)
}
