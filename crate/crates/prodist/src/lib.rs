//! Distributions of products `Z = XY` of two continuous random variables.
//!
//! The crate covers four marginal families (Gaussian, log-normal, Student's t
//! and Pareto), both for correlated pairs and for independent pairs drawn from
//! the same or from different families. For every combination it provides the
//! product density, distribution function, moments, seeded sampling and
//! numerical maximum-likelihood estimation, backed by adaptive Gauss-Kronrod
//! quadrature where no closed form exists.
//!
//! The crate is `no_std`-compatible (with `alloc`); enable the default `std`
//! feature for faster float intrinsics and the `parallel` feature to run
//! Monte Carlo replications on multiple threads.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bivariate;
pub mod error;
pub mod fit;
pub mod marginals;
pub mod product;
pub mod quadrature;
pub mod special;
pub mod validate;

pub use bivariate::{BivariateSpec, Dependence};
pub use error::{Error, Result};
pub use fit::{FitProblem, FitResult, FreeParam};
pub use marginals::MarginalSpec;
pub use product::{Moments, ProductSpec, Strategy};
pub use quadrature::{IntegrationDomain, QuadResult, QuadratureConfig};
pub use validate::{ExperimentPlan, ExperimentReport, Outputs};
