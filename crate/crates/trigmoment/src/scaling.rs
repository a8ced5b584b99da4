//! The matrices G_θ = E{τ sᵀ}, R_θ and J_θ = E{τ rᵀ} of every family and
//! estimator, the known-parameter reduction, and the assembly of
//!
//! Σ_θ = ½I₂ − G R⁻¹ Jᵀ − J R⁻¹ Gᵀ + G R⁻¹ Gᵀ,
//!
//! which reduces to ½I₂ − G R⁻¹ Gᵀ for maximum likelihood (J = G).
//!
//! G does not depend on the estimator, so for MM configurations it carries
//! every parameter column; shape parameters the MM estimator cannot estimate
//! are flagged in [`MatrixSet::required_known`] and must be masked.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{epd_c1, epd_c2, student_c2, KnownMask};
use crate::families::{EstimatorKind, FamilyId, FamilyId::*};
use crate::quadconst::{h, logistic_constants};
use crate::specfun::{digamma_unchecked, ln_gamma_unchecked, trigamma_unchecked};

/// Euler–Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// ζ(3), Apéry's constant.
pub const ZETA3: f64 = 1.202_056_903_159_594_3;
/// Largest tolerated (equilibrated) condition number of the reduced R.
pub const MAX_CONDITION: f64 = 1e12;

/// A 2×2 symmetric covariance matrix of √n·(Cₙ, Sₙ).
pub type Sigma = [[f64; 2]; 2];

/// G, R and J of one (family, estimator, θ) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSet {
    /// Family.
    pub family: FamilyId,
    /// Estimator.
    pub kind: EstimatorKind,
    /// Parameter vector at which the matrices are evaluated.
    pub theta: Vec<f64>,
    /// Parameter names (column labels).
    pub params: Vec<String>,
    /// G (rows cos, sin; columns parameters).
    pub g: [Vec<f64>; 2],
    /// R (p×p, symmetric).
    pub r: Vec<Vec<f64>>,
    /// J (rows cos, sin; columns parameters).
    pub j: [Vec<f64>; 2],
    /// Components that the estimator cannot estimate and must be known.
    pub required_known: Vec<bool>,
}

fn lg(x: f64) -> f64 {
    ln_gamma_unchecked(x)
}

fn psi(x: f64) -> f64 {
    digamma_unchecked(x)
}

fn psi1(x: f64) -> f64 {
    trigamma_unchecked(x)
}

fn cols2(a: [f64; 2], b: [f64; 2]) -> [Vec<f64>; 2] {
    [vec![a[0], b[0]], vec![a[1], b[1]]]
}

fn cols3(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [Vec<f64>; 2] {
    [vec![a[0], b[0], c[0]], vec![a[1], b[1], c[1]]]
}

fn col1(a: [f64; 2]) -> [Vec<f64>; 2] {
    [vec![a[0]], vec![a[1]]]
}

fn scale2(m: [Vec<f64>; 2], s: f64) -> [Vec<f64>; 2] {
    let [a, b] = m;
    [a.into_iter().map(|v| v * s).collect(), b.into_iter().map(|v| v * s).collect()]
}

fn diag(d: &[f64]) -> Vec<Vec<f64>> {
    (0..d.len()).map(|i| (0..d.len()).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect()
}

/// (h₆, h₇)(a, b, c) as a column.
fn h67(a: f64, b: f64, c: f64) -> Result<[f64; 2]> {
    Ok([h(6, &[a, b, c])?, h(7, &[a, b, c])?])
}

/// Evaluates the matrices of `fam` under estimator `kind` at θ.
pub fn matrices(fam: FamilyId, kind: EstimatorKind, theta: &[f64]) -> Result<MatrixSet> {
    fam.validate(theta)?;
    if !fam.supports(kind) {
        return Err(Error::config(format!("{} has no {} estimator", fam.name(), kind.name())));
    }
    let p = fam.arity();
    let (g, r_ml) = ml_matrices(fam, theta)?;
    let (j, r, required_known) = match kind {
        EstimatorKind::Ml => (g.clone(), r_ml, vec![false; p]),
        EstimatorKind::Mm => mm_matrices(fam, theta, &g, r_ml)?,
    };
    Ok(MatrixSet {
        family: fam,
        kind,
        theta: theta.to_vec(),
        params: fam.param_names().iter().map(|s| s.to_string()).collect(),
        g,
        r,
        j,
        required_known,
    })
}

/// Two rows (cosine, sine) with one column per parameter.
type Cols = [Vec<f64>; 2];
/// Dense square matrix.
type Mat = Vec<Vec<f64>>;

/// G and the Fisher information R of the ML configuration.
fn ml_matrices(fam: FamilyId, t: &[f64]) -> Result<(Cols, Mat)> {
    Ok(match fam {
        Epd | LogEpd => epd_ml(t[0], t[2])?,
        Laplace | LogLaplace => {
            let s = t[1];
            (scale2(cols2([0.0, h(2, &[1.0])?], [h(1, &[1.0])?, 0.0]), 1.0 / s), diag(&[1.0 / (s * s), 1.0 / (s * s)]))
        }
        Normal | LogNormal => {
            let s = t[1];
            let g = cols2([0.0, h(2, &[2.0])? * (2.0 / PI).sqrt()], [h(1, &[2.0])?, 0.0]);
            (scale2(g, 1.0 / s), diag(&[1.0 / (s * s), 2.0 / (s * s)]))
        }
        ExpGamma => {
            let (l, s) = (t[0], t[2]);
            let h67l = h67(l, l + 1.0, 1.0)?;
            let g = cols3(
                [h(10, &[l])?, h(11, &[l])?],
                [l * h67l[0] / s, l * h67l[1] / s],
                [h(8, &[l])? / s, h(9, &[l])? / s],
            );
            let (ps, p1) = (psi(l), psi1(l));
            let r = vec![
                vec![p1, 1.0 / s, ps / s],
                vec![1.0 / s, l / (s * s), (l * ps + 1.0) / (s * s)],
                vec![ps / s, (l * ps + 1.0) / (s * s), (l * ps * ps + 2.0 * ps + l * p1 + 1.0) / (s * s)],
            ];
            (g, r)
        }
        ExpWeibull | Gumbel => {
            let s = t[1];
            let a = h67(1.0, 2.0, 1.0)?;
            let (h8, h9) = (h(8, &[1.0])?, h(9, &[1.0])?);
            let em = 1.0 - EULER_GAMMA;
            let rss = (EULER_GAMMA - 1.0).powi(2) + PI * PI / 6.0;
            if fam == ExpWeibull {
                (scale2(cols2(a, [h8, h9]), 1.0 / s), scale_mat(vec![vec![1.0, em], vec![em, rss]], 1.0 / (s * s)))
            } else {
                (
                    scale2(cols2([-a[0], a[1]], [h8, -h9]), 1.0 / s),
                    scale_mat(vec![vec![1.0, -em], vec![-em, rss]], 1.0 / (s * s)),
                )
            }
        }
        Logistic => {
            let s = t[1];
            let c = logistic_constants()?;
            (
                scale2(cols2([0.0, c.c_sin], [c.c_cos, 0.0]), 1.0 / s),
                diag(&[1.0 / (3.0 * s * s), (3.0 + PI * PI) / (9.0 * s * s)]),
            )
        }
        StudentT => {
            let (l, s) = (t[0], t[2]);
            let c1 = (lg(0.5 * (l + 1.0)) - lg(0.5 * l) - 0.5 * (l * PI).ln()).exp();
            let g = cols3(
                [0.5 * h(14, &[l])?, 0.0],
                [0.0, 2.0 * c1 * h(13, &[l])? / s],
                [h(12, &[l])? / s, 0.0],
            );
            let rll = 0.25 * (psi1(0.5 * l) - psi1(0.5 * (l + 1.0)) - 2.0 * (l + 5.0) / (l * (l + 1.0) * (l + 3.0)));
            let rls = -2.0 / (s * (l + 1.0) * (l + 3.0));
            let r = vec![
                vec![rll, 0.0, rls],
                vec![0.0, (l + 1.0) / (s * s * (l + 3.0)), 0.0],
                vec![rls, 0.0, 2.0 * l / (s * s * (l + 3.0))],
            ];
            (g, r)
        }
        HalfEpd => {
            let (l, s) = (t[0], t[1]);
            let a = h67(1.0 / l, 1.0 / l + 1.0, 1.0)?;
            let g = cols2(
                [(a[0] - h(17, &[l])?) / (l * l), (a[1] - h(18, &[l])?) / (l * l)],
                [a[0] / s, a[1] / s],
            );
            let c1 = epd_c1(l);
            let r = vec![
                vec![epd_r_lambda(l), -c1 / (s * l)],
                vec![-c1 / (s * l), l / (s * s)],
            ];
            (g, r)
        }
        GeneralizedGamma => {
            let (l, b, rho) = (t[0], t[1], t[2]);
            let a = h67(l, l + 1.0, 1.0)?;
            let g = cols3(
                [h(10, &[l])?, h(11, &[l])?],
                [rho * l / b * a[0], rho * l / b * a[1]],
                [-h(8, &[l])? / rho, -h(9, &[l])? / rho],
            );
            let (ps, p1) = (psi(l), psi1(l));
            let r = vec![
                vec![p1, rho / b, -ps / rho],
                vec![rho / b, rho * rho * l / (b * b), -(l * ps + 1.0) / b],
                vec![-ps / rho, -(l * ps + 1.0) / b, (l * ps * ps + 2.0 * ps + l * p1 + 1.0) / (rho * rho)],
            ];
            (g, r)
        }
        Weibull | Frechet => {
            let (b, rho) = (t[0], t[1]);
            let a = h67(1.0, 2.0, 1.0)?;
            let (h8, h9) = (h(8, &[1.0])?, h(9, &[1.0])?);
            let rss = ((EULER_GAMMA - 1.0).powi(2) + PI * PI / 6.0) / (rho * rho);
            if fam == Weibull {
                let off = (EULER_GAMMA - 1.0) / b;
                (
                    cols2([rho / b * a[0], rho / b * a[1]], [-h8 / rho, -h9 / rho]),
                    vec![vec![rho * rho / (b * b), off], vec![off, rss]],
                )
            } else {
                let off = (1.0 - EULER_GAMMA) / b;
                (
                    cols2([-rho / b * a[0], rho / b * a[1]], [-h8 / rho, h9 / rho]),
                    vec![vec![rho * rho / (b * b), off], vec![off, rss]],
                )
            }
        }
        Gompertz => {
            let (b, rho) = (t[0], t[1]);
            let k = rho * rho.exp();
            let g = cols2(
                [k * h(21, &[rho])? / b, k * h(22, &[rho])? / b],
                [-k * h(23, &[rho])?, -k * h(24, &[rho])?],
            );
            let off = k * h(20, &[rho])? / b;
            let r = vec![
                vec![(1.0 + rho * k * h(19, &[rho])?) / (b * b), off],
                vec![off, 1.0 / (rho * rho)],
            ];
            (g, r)
        }
        LogLogistic => {
            let (b, rho) = (t[0], t[1]);
            let c = logistic_constants()?;
            (
                cols2([0.0, rho / b * c.c_sin], [-c.c_cos / rho, 0.0]),
                diag(&[rho * rho / (3.0 * b * b), (3.0 + PI * PI) / (9.0 * rho * rho)]),
            )
        }
        Gamma | InverseGamma => {
            let (l, b) = (t[0], t[1]);
            let a = h67(l, l + 1.0, 1.0)?;
            let (h10, h11) = (h(10, &[l])?, h(11, &[l])?);
            if fam == Gamma {
                (
                    cols2([h10, h11], [l / b * a[0], l / b * a[1]]),
                    vec![vec![psi1(l), 1.0 / b], vec![1.0 / b, l / (b * b)]],
                )
            } else {
                (
                    cols2([h10, -h11], [-l / b * a[0], l / b * a[1]]),
                    vec![vec![psi1(l), -1.0 / b], vec![-1.0 / b, l / (b * b)]],
                )
            }
        }
        BetaPrime | Beta => {
            let (a, b) = (t[0], t[1]);
            let ab = [a, b];
            let p = psi1(a + b);
            (
                cols2([h(25, &ab)?, h(26, &ab)?], [h(27, &ab)?, h(28, &ab)?]),
                vec![vec![psi1(a) - p, -p], vec![-p, psi1(b) - p]],
            )
        }
        Lomax => {
            let (al, s) = (t[0], t[1]);
            let a = h67(1.0, 2.0, 1.0)?;
            let c = h67(1.0, 1.0, al / (al + 1.0))?;
            (
                cols2([-a[0] / al, -a[1] / al], [-al * c[0] / s, -al * c[1] / s]),
                vec![
                    vec![1.0 / (al * al), -1.0 / ((al + 1.0) * s)],
                    vec![-1.0 / ((al + 1.0) * s), al / ((al + 2.0) * s * s)],
                ],
            )
        }
        Nakagami => {
            let (l, w) = (t[0], t[1]);
            let a = h67(l, l + 1.0, 1.0)?;
            (
                cols2([h(10, &[l])? - a[0], h(11, &[l])? - a[1]], [l / w * a[0], l / w * a[1]]),
                diag(&[psi1(l) - 1.0 / l, l / (w * w)]),
            )
        }
        InverseGaussian => {
            let (m, l) = (t[0], t[1]);
            let ml = [m, l];
            let c = l / (m * m * m);
            let d = -1.0 / (2.0 * m * m);
            (
                cols2([c * h(29, &ml)?, c * h(30, &ml)?], [d * h(31, &ml)?, d * h(32, &ml)?]),
                diag(&[l / (m * m * m), 1.0 / (2.0 * l * l)]),
            )
        }
        Exponential => {
            let b = t[0];
            let a = h67(1.0, 2.0, 1.0)?;
            (col1([a[0] / b, a[1] / b]), diag(&[1.0 / (b * b)]))
        }
        HalfNormal => {
            let d = t[0];
            let a = h67(0.5, 1.5, 1.0)?;
            (col1([a[0] / d, a[1] / d]), diag(&[2.0 / (d * d)]))
        }
        Rayleigh => {
            let d = t[0];
            let a = h67(1.0, 2.0, 1.0)?;
            (col1([2.0 * a[0] / d, 2.0 * a[1] / d]), diag(&[4.0 / (d * d)]))
        }
        Maxwell => {
            let d = t[0];
            let a = h67(1.5, 2.5, 1.0)?;
            (col1([3.0 * a[0] / d, 3.0 * a[1] / d]), diag(&[6.0 / (d * d)]))
        }
        ChiSquared => {
            let k = 0.5 * t[0];
            (col1([0.5 * h(10, &[k])?, 0.5 * h(11, &[k])?]), diag(&[0.25 * psi1(k)]))
        }
        Pareto => {
            let al = t[0];
            let a = h67(1.0, 2.0, 1.0)?;
            (col1([-a[0] / al, -a[1] / al]), diag(&[1.0 / (al * al)]))
        }
        Kumaraswamy => {
            let (al, b) = (t[0], t[1]);
            let g = cols2(
                [b * h(33, &[b])? / al, b * h(34, &[b])? / al],
                [b * h(35, &[b])?, b * h(36, &[b])?],
            );
            let u = psi(b) + EULER_GAMMA - 1.0;
            let r11 = if b == 2.0 {
                (4.0 * ZETA3 - 3.0) / (al * al)
            } else {
                1.0 / (al * al) + b / (al * al * (b - 2.0)) * (u * u - psi1(b) + PI * PI / 6.0 - 1.0)
            };
            let r12 = if b == 1.0 { (1.0 - PI * PI / 6.0) / al } else { (u + 1.0 / b) / (al * (1.0 - b)) };
            (g, vec![vec![r11, r12], vec![r12, 1.0 / (b * b)]])
        }
        Uniform => {
            // The end-point estimators converge at rate n, so they do not
            // perturb the √n limit: Σ = ½I₂. G = 0 encodes this.
            (cols2([0.0, 0.0], [0.0, 0.0]), diag(&[1.0, 1.0]))
        }
    })
}

fn scale_mat(m: Vec<Vec<f64>>, s: f64) -> Vec<Vec<f64>> {
    m.into_iter().map(|row| row.into_iter().map(|v| v * s).collect()).collect()
}

/// The (λ, λ) Fisher information entry shared by the EPD and half-EPD.
fn epd_r_lambda(l: f64) -> f64 {
    let c1 = epd_c1(l);
    ((1.0 / l + 1.0) * psi1(1.0 / l + 1.0) + c1 * c1 - 1.0) / (l * l * l)
}

fn epd_ml(l: f64, s: f64) -> Result<(Cols, Mat)> {
    let (h1, h2, h3) = (h(1, &[l])?, h(2, &[l])?, h(3, &[l])?);
    let k = (lg(1.0 / l) + (1.0 / l - 1.0) * l.ln()).exp();
    let g = cols3([(h1 - h3) / (l * l), 0.0], [0.0, h2 / (s * k)], [h1 / s, 0.0]);
    let c1 = epd_c1(l);
    let rmm = ((2.0 - 2.0 / l) * l.ln() + lg(2.0 - 1.0 / l) - lg(1.0 / l)).exp() / (s * s);
    let r = vec![
        vec![epd_r_lambda(l), 0.0, -c1 / (s * l)],
        vec![0.0, rmm, 0.0],
        vec![-c1 / (s * l), 0.0, l / (s * s)],
    ];
    Ok((g, r))
}

/// J, R and the required-known flags of the MM configurations.
fn mm_matrices(
    fam: FamilyId,
    t: &[f64],
    g: &[Vec<f64>; 2],
    r_ml: Vec<Vec<f64>>,
) -> Result<(Cols, Mat, Vec<bool>)> {
    let p = fam.arity();
    // Shape-known families: put a neutral placeholder in the shape slot.
    let with_shape = |j: [Vec<f64>; 2], r: Vec<Vec<f64>>| -> ([Vec<f64>; 2], Vec<Vec<f64>>, Vec<bool>) {
        let mut jj = [vec![0.0], vec![0.0]];
        jj[0].extend(j[0].iter());
        jj[1].extend(j[1].iter());
        let q = r.len() + 1;
        let mut rr = vec![vec![0.0; q]; q];
        rr[0][0] = 1.0;
        for a in 0..r.len() {
            for b in 0..r.len() {
                rr[a + 1][b + 1] = r[a][b];
            }
        }
        let mut req = vec![false; q];
        req[0] = true;
        (jj, rr, req)
    };
    Ok(match fam {
        Normal | LogNormal | Exponential => (g.clone(), r_ml, vec![false; p]),
        Epd | LogEpd => {
            let (l, s) = (t[0], t[2]);
            let c2 = epd_c2(l);
            let c3 = epd_c3(l);
            let sin_mu = h(5, &[l])? * (lg(2.0 / l) - l.ln() / l - lg(3.0 / l)).exp();
            let j = scale2(cols2([0.0, sin_mu], [2.0 * c3 * h(4, &[l])?, 0.0]), 1.0 / s);
            let r = diag(&[c2 / (s * s), 4.0 * c3 / (s * s)]);
            with_shape(j, r)
        }
        Laplace | LogLaplace => {
            let s = t[1];
            let j = scale2(cols2([0.0, h(5, &[1.0])? / 2.0], [2.0 * h(4, &[1.0])? / 5.0, 0.0]), 1.0 / s);
            (j, diag(&[0.5 / (s * s), 0.8 / (s * s)]), vec![false; 2])
        }
        Logistic => {
            let s = t[1];
            let c = logistic_constants()?;
            (
                scale2(cols2([0.0, c.m_sin], [c.m_cos, 0.0]), 1.0 / s),
                diag(&[3.0 / (PI * PI * s * s), 1.25 / (s * s)]),
                vec![false; 2],
            )
        }
        LogLogistic => {
            let (b, rho) = (t[0], t[1]);
            let c = logistic_constants()?;
            (
                cols2([0.0, rho / b * c.m_sin], [-c.m_cos / rho, 0.0]),
                diag(&[3.0 * rho * rho / (b * b * PI * PI), 1.25 / (rho * rho)]),
                vec![false; 2],
            )
        }
        StudentT => {
            let (l, s) = (t[0], t[2]);
            if l <= 2.0 {
                return Err(Error::config(format!("Student-t MM needs λ > 2, got {l}")));
            }
            let c2 = student_c2(l);
            let c3 = c2 / (l / (l - 2.0) - c2 * c2);
            let j = scale2(cols2([0.0, (l - 2.0) / l * h(16, &[l])?], [c3 * h(15, &[l])?, 0.0]), c2 / s);
            let r = diag(&[(l - 2.0) / (l * s * s), c2 * c3 / (s * s)]);
            with_shape(j, r)
        }
        HalfEpd => {
            let (l, s) = (t[0], t[1]);
            let c3 = half_epd_c3(l);
            let a = h67(1.0 / l, 2.0 / l, 1.0)?;
            let j = col1([c3 * a[0] / s, c3 * a[1] / s]);
            // The asymptotic variance of σ̂ = C₂·x̄ is σ²/C₃.
            with_shape(j, diag(&[c3 / (s * s)]))
        }
        HalfNormal => {
            let d = t[0];
            let k = PI / 2.0 - 1.0;
            let a = h67(0.5, 1.0, 1.0)?;
            (col1([a[0] / (k * d), a[1] / (k * d)]), diag(&[1.0 / (k * d * d)]), vec![false])
        }
        Rayleigh => {
            let d = t[0];
            let k = 4.0 / PI - 1.0;
            let a = h67(1.0, 1.5, 1.0)?;
            (col1([a[0] / (k * d), a[1] / (k * d)]), diag(&[1.0 / (k * d * d)]), vec![false])
        }
        Maxwell => {
            let d = t[0];
            let k = 3.0 * PI / 8.0 - 1.0;
            let a = h67(1.5, 2.0, 1.0)?;
            (col1([a[0] / (k * d), a[1] / (k * d)]), diag(&[1.0 / (k * d * d)]), vec![false])
        }
        ChiSquared => {
            let k = t[0];
            let a = h67(0.5 * k, 0.5 * k + 1.0, 1.0)?;
            (col1([0.5 * a[0], 0.5 * a[1]]), diag(&[1.0 / (2.0 * k)]), vec![false])
        }
        other => return Err(Error::config(format!("{} has no MM estimator", other.name()))),
    })
}

/// C₃,λ = Γ²(3/λ)/{Γ(1/λ)Γ(5/λ) − Γ²(3/λ)} for the EPD.
pub fn epd_c3(l: f64) -> f64 {
    // Γ(1/λ)Γ(5/λ)/Γ²(3/λ) = 1 + 1/C₃.
    let lr = lg(1.0 / l) + lg(5.0 / l) - 2.0 * lg(3.0 / l);
    1.0 / lr.exp_m1()
}

/// C₃,λ = Γ²(2/λ)/{Γ(1/λ)Γ(3/λ) − Γ²(2/λ)} for the half-EPD.
pub fn half_epd_c3(l: f64) -> f64 {
    let lr = lg(1.0 / l) + lg(3.0 / l) - 2.0 * lg(2.0 / l);
    1.0 / lr.exp_m1()
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Inverse of a symmetric positive-definite matrix of order ≤ 3 in closed
/// form. The condition number is estimated after diagonal equilibration so
/// that parameter units do not matter.
pub fn invert_small(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = a.len();
    if k == 0 {
        return Ok(vec![]);
    }
    if k > 3 || a.iter().any(|row| row.len() != k) {
        return Err(Error::config("invert_small handles square matrices of order ≤ 3"));
    }
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Singular("matrix has non-finite entries".into()));
    }
    let d: Vec<f64> = (0..k).map(|i| a[i][i]).collect();
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Singular("non-positive diagonal entry".into()));
    }
    let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let e: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| a[i][j] * s[i] * s[j]).collect()).collect();
    let (inv, det) = match k {
        1 => (vec![vec![1.0 / e[0][0]]], e[0][0]),
        2 => {
            let det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
            (vec![vec![e[1][1] / det, -e[0][1] / det], vec![-e[1][0] / det, e[0][0] / det]], det)
        }
        _ => {
            let c = |i: usize, j: usize| {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                e[r0][c0] * e[r1][c1] - e[r0][c1] * e[r1][c0]
            };
            let det = e[0][0] * c(0, 0) + e[0][1] * c(0, 1) + e[0][2] * c(0, 2);
            let inv = (0..3).map(|i| (0..3).map(|j| c(j, i) / det).collect()).collect();
            (inv, det)
        }
    };
    let norm1 = |m: &Vec<Vec<f64>>| (0..k).map(|j| (0..k).map(|i| m[i][j].abs()).sum::<f64>()).fold(0.0, f64::max);
    let cond = norm1(&e) * norm1(&inv);
    if !(det > 0.0) || !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::Singular(format!("reduced R is singular or ill-conditioned (condition ≈ {cond:.3e})")));
    }
    Ok((0..k).map(|i| (0..k).map(|j| inv[i][j] * s[i] * s[j]).collect()).collect())
}

/// Equilibrated condition number estimate of a small SPD matrix (∞ when not PD).
pub fn condition_number(a: &[Vec<f64>]) -> f64 {
    let k = a.len();
    if k == 0 {
        return 1.0;
    }
    let s: Vec<f64> = (0..k).map(|i| 1.0 / a[i][i].sqrt()).collect();
    let e: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| a[i][j] * s[i] * s[j]).collect()).collect();
    match invert_small_raw(&e) {
        Some(inv) => {
            let norm1 =
                |m: &Vec<Vec<f64>>| (0..k).map(|j| (0..k).map(|i| m[i][j].abs()).sum::<f64>()).fold(0.0, f64::max);
            norm1(&e) * norm1(&inv)
        }
        None => f64::INFINITY,
    }
}

fn invert_small_raw(e: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let k = e.len();
    match k {
        1 => Some(vec![vec![1.0 / e[0][0]]]),
        2 => {
            let det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
            (det > 0.0).then(|| vec![vec![e[1][1] / det, -e[0][1] / det], vec![-e[1][0] / det, e[0][0] / det]])
        }
        3 => {
            let c = |i: usize, j: usize| {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                e[r0][c0] * e[r1][c1] - e[r0][c1] * e[r1][c0]
            };
            let det = e[0][0] * c(0, 0) + e[0][1] * c(0, 1) + e[0][2] * c(0, 2);
            (det > 0.0).then(|| (0..3).map(|i| (0..3).map(|j| c(j, i) / det).collect()).collect())
        }
        _ => None,
    }
}

/// Assembles Σ after removing the known components (mask first, then invert,
/// then assemble). An all-known mask returns ½I₂ exactly.
pub fn sigma(ms: &MatrixSet, mask: &KnownMask, kind: EstimatorKind) -> Result<Sigma> {
    let p = ms.params.len();
    if mask.len() != p {
        return Err(Error::config(format!("mask has {} entries, {} has {p} parameters", mask.len(), ms.family.name())));
    }
    if kind != ms.kind {
        return Err(Error::config(format!(
            "matrices were built for {} but Σ was requested for {}",
            ms.kind.name(),
            kind.name()
        )));
    }
    for (i, &req) in ms.required_known.iter().enumerate() {
        if req && !mask.is_known(i) {
            return Err(Error::config(format!(
                "{} {} requires {} to be known",
                ms.family.name(),
                kind.name(),
                ms.params[i]
            )));
        }
    }
    let u = mask.unknown_indices();
    if u.is_empty() {
        return Ok([[0.5, 0.0], [0.0, 0.5]]);
    }
    let ru: Vec<Vec<f64>> = u.iter().map(|&a| u.iter().map(|&b| ms.r[a][b]).collect()).collect();
    let rinv = invert_small(&ru)?;
    let gu: Vec<Vec<f64>> = (0..2).map(|row| u.iter().map(|&c| ms.g[row][c]).collect()).collect();
    let ju: Vec<Vec<f64>> = (0..2).map(|row| u.iter().map(|&c| ms.j[row][c]).collect()).collect();
    // A R⁻¹ Bᵀ for 2×k A, B.
    let arb = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for jx in 0..2 {
                let mut acc = 0.0;
                for k in 0..u.len() {
                    for l in 0..u.len() {
                        acc += a[i][k] * rinv[k][l] * b[jx][l];
                    }
                }
                out[i][jx] = acc;
            }
        }
        out
    };
    let ggt = arb(&gu, &gu);
    let mut s = [[0.5, 0.0], [0.0, 0.5]];
    match kind {
        EstimatorKind::Ml => {
            for i in 0..2 {
                for jx in 0..2 {
                    s[i][jx] -= ggt[i][jx];
                }
            }
        }
        EstimatorKind::Mm => {
            let gj = arb(&gu, &ju);
            for i in 0..2 {
                for jx in 0..2 {
                    s[i][jx] += ggt[i][jx] - gj[i][jx] - gj[jx][i];
                }
            }
        }
    }
    let off = 0.5 * (s[0][1] + s[1][0]);
    s[0][1] = off;
    s[1][0] = off;
    if s.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Singular("Σ has non-finite entries".into()));
    }
    Ok(s)
}

/// Convenience: matrices and Σ in one call.
pub fn sigma_for(fam: FamilyId, kind: EstimatorKind, theta: &[f64], mask: &KnownMask) -> Result<Sigma> {
    let ms = matrices(fam, kind, theta)?;
    sigma(&ms, mask, kind)
}

/// Eigenvalues (ascending) and unit eigenvectors (columns) of a symmetric 2×2 matrix.
pub fn eigen_sym2(s: &Sigma) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, d) = (s[0][0], s[0][1], s[1][1]);
    let half_tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (l1, l2) = (half_tr - disc, half_tr + disc);
    if b == 0.0 {
        return if a <= d { ([a, d], [[1.0, 0.0], [0.0, 1.0]]) } else { ([d, a], [[0.0, 1.0], [1.0, 0.0]]) };
    }
    // Eigenvector for l: (b, l − a) or (l − d, b), whichever is larger.
    let vec_for = |l: f64| {
        let v1 = [b, l - a];
        let v2 = [l - d, b];
        let n1 = v1[0].hypot(v1[1]);
        let n2 = v2[0].hypot(v2[1]);
        if n1 >= n2 {
            [v1[0] / n1, v1[1] / n1]
        } else {
            [v2[0] / n2, v2[1] / n2]
        }
    };
    let e1 = vec_for(l1);
    let e2 = vec_for(l2);
    ([l1, l2], [[e1[0], e2[0]], [e1[1], e2[1]]])
}

/// Symmetric inverse square root Σ^{−1/2} via the eigendecomposition.
pub fn sigma_inverse_sqrt(s: &Sigma) -> Result<[[f64; 2]; 2]> {
    let (ev, v) = eigen_sym2(s);
    if !(ev[0] > 0.0) || !ev[1].is_finite() {
        return Err(Error::Singular(format!("Σ is not positive definite (eigenvalues {:e}, {:e})", ev[0], ev[1])));
    }
    let w = [1.0 / ev[0].sqrt(), 1.0 / ev[1].sqrt()];
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = v[i][0] * w[0] * v[j][0] + v[i][1] * w[1] * v[j][1];
        }
    }
    let off = 0.5 * (m[0][1] + m[1][0]);
    m[0][1] = off;
    m[1][0] = off;
    Ok(m)
}

/// Inverse of a 2×2 SPD Σ.
pub fn sigma_inverse(s: &Sigma) -> Result<[[f64; 2]; 2]> {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    if !(det > 0.0) || !(s[0][0] > 0.0) {
        return Err(Error::Singular(format!("Σ is not positive definite (det {det:e})")));
    }
    Ok([[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]])
}
