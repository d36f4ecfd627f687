//! Probabilistic models of evaluation-based voting profiles.
//!
//! A *profile* is an `n × m` matrix of grades given by `n` voters to `m`
//! candidates, either on the continuous scale `[0, 1]` or on the discrete
//! scale `{0, …, K}`. This crate generates profiles from parametric and
//! latent-space models, fits those models back to observed profiles, embeds
//! profiles in a latent space by stress majorization, and runs the usual
//! evaluation-based voting rules on them.
//!
//! The crate is `no_std` with `alloc`. All floating-point math goes through
//! `libm`, so a given seed yields the same numbers on every platform. File
//! formats and the command-line front end live in the `evalsim` crate.
//!
//! - [`profile`]: scales, profiles, validation, discretization
//! - [`rng`]: seeded, splittable random streams
//! - [`special`]: normal CDF/quantile, incomplete beta and gamma functions
//! - [`univariate`]: the six marginal families
//! - [`copula`]: Gaussian and checkerboard copulas
//! - [`generators`]: joint models over candidates and profile generation
//! - [`fitting`]: estimators, goodness-of-fit statistics and the fitting pipeline
//! - [`embedding`]: SMACOF unfolding and latent-space regeneration
//! - [`rules`]: range voting, majority judgment, approval voting, rankings

#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod copula;
pub mod embedding;
pub mod fitting;
pub mod generators;
pub mod linalg;
pub mod profile;
pub mod rng;
pub mod rules;
pub mod special;
pub mod stats;
pub mod univariate;

pub use copula::{CheckerboardCopula, CorrelationMatrix};
pub use generators::{generate, GeneratorModel, LinkFunction, VoterDistribution};
pub use profile::{discretize, validate_profile, Profile, Scale};
pub use rng::{derive_stream, RandomSource};
pub use univariate::Marginal;
