//! Omnibus goodness-of-fit tests built on the first two trigonometric moments
//! of probability-integral-transformed data.
//!
//! For a sample x₁,…,xₙ and a null family F(·|θ), the kernel
//! τ(x, θ) = (cos 2πF(x|θ), sin 2πF(x|θ)) is averaged into (Cₙ, Sₙ) at the
//! estimated parameter θ̂ₙ. The statistic
//! Tₙ = n·(Cₙ, Sₙ) Σ⁻¹ (Cₙ, Sₙ)ᵀ uses a covariance Σ that accounts for the
//! estimation of nuisance parameters, and is asymptotically χ²₂ under the
//! null hypothesis.
//!
//! Modules, bottom-up:
//!
//! * [`specfun`] – gamma-family special functions, incomplete gamma/beta,
//!   normal CDF and the noncentral χ² survival function;
//! * [`quad`] and [`quadconst`] – adaptive Gauss–Kronrod quadrature and the
//!   numerically evaluated constants h₁–h₃₇;
//! * [`families`] – the 32 null families (density, CDF, quantile, sampler);
//! * [`estimate`] – ML and MM estimators honoring known-parameter masks;
//! * [`scaling`] – the G, R, J matrices and the assembly of Σ;
//! * [`gof`] – trigonometric moments, Tₙ, p-values, Z-scores and ellipses;
//! * [`power`] – asymptotic power under local alternatives;
//! * [`simharness`] – seeded, parallel Monte-Carlo studies.

pub mod error;
pub mod estimate;
pub mod families;
pub mod gof;
pub mod power;
pub mod quad;
pub mod quadconst;
pub mod scaling;
pub mod simharness;
pub mod rng;
pub mod roots;
pub mod specfun;

pub use error::{Error, Result};
