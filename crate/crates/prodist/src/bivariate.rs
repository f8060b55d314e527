//! Joint laws of the factor pair `(X, Y)`: four correlated families plus
//! independent pairs of arbitrary marginals, with joint densities, dependence
//! measures and seeded sampling constructions.
//!
//! Sampling follows the classical reductions: Cholesky for the Gaussian pair,
//! exponentiation of a Gaussian pair for the log-normal one, a Gaussian pair
//! over one shared chi-square draw for the bivariate t, and the
//! conditional-distribution (inverse CDF) method for the bivariate Pareto.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::marginals::MarginalSpec;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Joint law of the factor pair.
#[derive(Debug, Clone, PartialEq)]
pub enum BivariateSpec {
    /// Correlated Gaussian pair.
    GaussGauss {
        mu_x: f64,
        mu_y: f64,
        sigma_x: f64,
        sigma_y: f64,
        rho: f64,
    },
    /// Correlated log-normal pair, `(X, Y) = exp{(N1, N2)}` with `(N1, N2)`
    /// Gaussian with the same parameters.
    LogNLogN {
        mu_x: f64,
        mu_y: f64,
        sigma_x: f64,
        sigma_y: f64,
        rho: f64,
    },
    /// Bivariate Student's t with one shared degrees-of-freedom parameter.
    /// `rho = 0` does not make the coordinates independent.
    TT { dof: f64, rho: f64 },
    /// Bivariate Pareto of the first kind; one shared shape, per-coordinate
    /// scales, correlation `1/a` whenever it exists.
    ParetoPareto {
        shape: f64,
        theta_x: f64,
        theta_y: f64,
    },
    /// Independent coordinates with arbitrary marginals.
    Independent { x: MarginalSpec, y: MarginalSpec },
}

/// Second-order dependence summary; `None` marks non-existence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dependence {
    pub covariance: Option<f64>,
    pub correlation: Option<f64>,
}

fn check_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho <= -1.0 || rho >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "rho must lie strictly inside (-1, 1), got {rho}"
        )));
    }
    Ok(())
}

impl BivariateSpec {
    pub fn gauss_gauss(mu_x: f64, mu_y: f64, sigma_x: f64, sigma_y: f64, rho: f64) -> Result<Self> {
        let s = BivariateSpec::GaussGauss {
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
            rho,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn logn_logn(mu_x: f64, mu_y: f64, sigma_x: f64, sigma_y: f64, rho: f64) -> Result<Self> {
        let s = BivariateSpec::LogNLogN {
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
            rho,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn tt(dof: f64, rho: f64) -> Result<Self> {
        let s = BivariateSpec::TT { dof, rho };
        s.validate()?;
        Ok(s)
    }

    pub fn pareto_pareto(shape: f64, theta_x: f64, theta_y: f64) -> Result<Self> {
        let s = BivariateSpec::ParetoPareto {
            shape,
            theta_x,
            theta_y,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn independent(x: MarginalSpec, y: MarginalSpec) -> Result<Self> {
        let s = BivariateSpec::Independent { x, y };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BivariateSpec::GaussGauss {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            }
            | BivariateSpec::LogNLogN {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => {
                check_rho(*rho)?;
                for (name, v) in [("mu_x", *mu_x), ("mu_y", *mu_y)] {
                    if !v.is_finite() {
                        return Err(Error::InvalidParameter(format!("{name} must be finite")));
                    }
                }
                for (name, v) in [("sigma_x", *sigma_x), ("sigma_y", *sigma_y)] {
                    if !v.is_finite() || v <= 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "{name} must be positive, got {v}"
                        )));
                    }
                }
                Ok(())
            }
            BivariateSpec::TT { dof, rho } => {
                check_rho(*rho)?;
                if !dof.is_finite() || *dof <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "degrees of freedom must be positive, got {dof}"
                    )));
                }
                Ok(())
            }
            BivariateSpec::ParetoPareto {
                shape,
                theta_x,
                theta_y,
            } => {
                for (name, v) in [("shape", *shape), ("theta_x", *theta_x), ("theta_y", *theta_y)]
                {
                    if !v.is_finite() || v <= 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "{name} must be positive, got {v}"
                        )));
                    }
                }
                Ok(())
            }
            BivariateSpec::Independent { x, y } => {
                x.validate()?;
                y.validate()
            }
        }
    }

    /// Marginal law of the first coordinate.
    pub fn marginal_x(&self) -> MarginalSpec {
        match *self {
            BivariateSpec::GaussGauss { mu_x, sigma_x, .. } => MarginalSpec::Gaussian {
                mu: mu_x,
                sigma: sigma_x,
            },
            BivariateSpec::LogNLogN { mu_x, sigma_x, .. } => MarginalSpec::LogNormal {
                mu: mu_x,
                sigma: sigma_x,
            },
            BivariateSpec::TT { dof, .. } => MarginalSpec::StudentT {
                dof,
                loc: 0.0,
                scale: 1.0,
            },
            BivariateSpec::ParetoPareto { shape, theta_x, .. } => MarginalSpec::Pareto {
                shape,
                scale: theta_x,
            },
            BivariateSpec::Independent { x, .. } => x,
        }
    }

    /// Marginal law of the second coordinate.
    pub fn marginal_y(&self) -> MarginalSpec {
        match *self {
            BivariateSpec::GaussGauss { mu_y, sigma_y, .. } => MarginalSpec::Gaussian {
                mu: mu_y,
                sigma: sigma_y,
            },
            BivariateSpec::LogNLogN { mu_y, sigma_y, .. } => MarginalSpec::LogNormal {
                mu: mu_y,
                sigma: sigma_y,
            },
            BivariateSpec::TT { dof, .. } => MarginalSpec::StudentT {
                dof,
                loc: 0.0,
                scale: 1.0,
            },
            BivariateSpec::ParetoPareto { shape, theta_y, .. } => MarginalSpec::Pareto {
                shape,
                scale: theta_y,
            },
            BivariateSpec::Independent { y, .. } => y,
        }
    }

    /// Joint density; zero outside the support.
    pub fn joint_pdf(&self, x: f64, y: f64) -> f64 {
        match *self {
            BivariateSpec::GaussGauss {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => {
                let u = (x - mu_x) / sigma_x;
                let v = (y - mu_y) / sigma_y;
                let omr2 = 1.0 - rho * rho;
                let q = (u * u - 2.0 * rho * u * v + v * v) / (2.0 * omr2);
                (-q).exp() / (2.0 * PI * sigma_x * sigma_y * omr2.sqrt())
            }
            BivariateSpec::LogNLogN {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => {
                if x <= 0.0 || y <= 0.0 {
                    return 0.0;
                }
                let u = (x.ln() - mu_x) / sigma_x;
                let v = (y.ln() - mu_y) / sigma_y;
                let omr2 = 1.0 - rho * rho;
                let q = (u * u - 2.0 * rho * u * v + v * v) / (2.0 * omr2);
                (-q).exp() / (2.0 * PI * x * y * sigma_x * sigma_y * omr2.sqrt())
            }
            BivariateSpec::TT { dof, rho } => {
                let omr2 = 1.0 - rho * rho;
                let q = 1.0 + (x * x - 2.0 * rho * x * y + y * y) / (dof * omr2);
                q.powf(-0.5 * (dof + 2.0)) / (2.0 * PI * omr2.sqrt())
            }
            BivariateSpec::ParetoPareto {
                shape,
                theta_x,
                theta_y,
            } => {
                if x <= theta_x || y <= theta_y {
                    return 0.0;
                }
                let a = shape;
                let tt = theta_x * theta_y;
                let denom = x * theta_y + y * theta_x - tt;
                a * (a + 1.0) * tt.powf(a + 1.0) * denom.powf(-(a + 2.0))
            }
            BivariateSpec::Independent { x: ref mx, y: ref my } => mx.pdf(x) * my.pdf(y),
        }
    }

    /// Covariance and correlation of `(X, Y)` with existence conditions
    /// honored (t needs `n > 2`, Pareto needs `a > 2`).
    pub fn dependence(&self) -> Dependence {
        match *self {
            BivariateSpec::GaussGauss {
                sigma_x, sigma_y, rho, ..
            } => Dependence {
                covariance: Some(rho * sigma_x * sigma_y),
                correlation: Some(rho),
            },
            BivariateSpec::LogNLogN {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => {
                let cov = (mu_x + mu_y + 0.5 * (sigma_x * sigma_x + sigma_y * sigma_y)).exp()
                    * ((rho * sigma_x * sigma_y).exp() - 1.0);
                let var_x = ((sigma_x * sigma_x).exp() - 1.0)
                    * (2.0 * mu_x + sigma_x * sigma_x).exp();
                let var_y = ((sigma_y * sigma_y).exp() - 1.0)
                    * (2.0 * mu_y + sigma_y * sigma_y).exp();
                Dependence {
                    covariance: Some(cov),
                    correlation: Some(cov / (var_x * var_y).sqrt()),
                }
            }
            BivariateSpec::TT { dof, rho } => {
                if dof > 2.0 {
                    Dependence {
                        covariance: Some(rho * dof / (dof - 2.0)),
                        correlation: Some(rho),
                    }
                } else {
                    Dependence {
                        covariance: None,
                        correlation: None,
                    }
                }
            }
            BivariateSpec::ParetoPareto {
                shape,
                theta_x,
                theta_y,
            } => {
                if shape > 2.0 {
                    // corr(X, Y) = 1/a; the covariance follows from the
                    // marginal variances a theta^2 / ((a-1)^2 (a-2)).
                    let a = shape;
                    let cov = theta_x * theta_y / ((a - 1.0) * (a - 1.0) * (a - 2.0));
                    Dependence {
                        covariance: Some(cov),
                        correlation: Some(1.0 / a),
                    }
                } else {
                    Dependence {
                        covariance: None,
                        correlation: None,
                    }
                }
            }
            BivariateSpec::Independent { ref x, ref y } => {
                if x.variance().is_some() && y.variance().is_some() {
                    Dependence {
                        covariance: Some(0.0),
                        correlation: Some(0.0),
                    }
                } else {
                    Dependence {
                        covariance: None,
                        correlation: None,
                    }
                }
            }
        }
    }

    /// Draw one `(x, y)` pair.
    pub fn sample_pair_one<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match *self {
            BivariateSpec::GaussGauss {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => {
                let (n1, n2) = correlated_std_normal_pair(rng, rho);
                (mu_x + sigma_x * n1, mu_y + sigma_y * n2)
            }
            BivariateSpec::LogNLogN {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => {
                let (n1, n2) = correlated_std_normal_pair(rng, rho);
                ((mu_x + sigma_x * n1).exp(), (mu_y + sigma_y * n2).exp())
            }
            BivariateSpec::TT { dof, rho } => {
                // One shared chi-square divisor per pair: the construction
                // divides the Gaussian vector, not each coordinate.
                let (n1, n2) = correlated_std_normal_pair(rng, rho);
                let chi2 = Gamma::new(0.5 * dof, 2.0).expect("valid dof").sample(rng);
                let scale = (chi2 / dof).sqrt();
                (n1 / scale, n2 / scale)
            }
            BivariateSpec::ParetoPareto {
                shape,
                theta_x,
                theta_y,
            } => {
                // F_{X,Y} = F_X F_{Y|X}: draw X by the marginal inverse CDF,
                // then Y by inverting the conditional CDF given X.
                let u1: f64 = rng.gen();
                let x = theta_x * (1.0 - u1).powf(-1.0 / shape);
                let u2: f64 = rng.gen();
                let y = pareto_conditional_quantile(x, u2, shape, theta_x, theta_y)
                    .unwrap_or(theta_y);
                (x, y)
            }
            BivariateSpec::Independent { ref x, ref y } => {
                (x.sample_one(rng), y.sample_one(rng))
            }
        }
    }

    /// Draw `count` i.i.d. pairs; deterministic for a fixed RNG stream.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<(f64, f64)> {
        (0..count).map(|_| self.sample_pair_one(rng)).collect()
    }
}

fn correlated_std_normal_pair<R: Rng + ?Sized>(rng: &mut R, rho: f64) -> (f64, f64) {
    // Cholesky factor of [[1, rho], [rho, 1]].
    let n1: f64 = StandardNormal.sample(rng);
    let n2: f64 = StandardNormal.sample(rng);
    (n1, rho * n1 + (1.0 - rho * rho).sqrt() * n2)
}

/// Conditional CDF `F_{Y|X}(y | x)` of the bivariate Pareto law.
pub(crate) fn pareto_conditional_cdf(y: f64, x: f64, shape: f64, theta_x: f64, theta_y: f64) -> f64 {
    if y <= theta_y {
        return 0.0;
    }
    let base = x * theta_y / (x * theta_y + theta_x * (y - theta_y));
    1.0 - base.powf(shape + 1.0)
}

/// Inverse of the conditional CDF `F_{Y|X}(y | x)` of the bivariate Pareto
/// law: `y(u) = theta_y + (x theta_y / theta_x) ((1-u)^{-1/(a+1)} - 1)`.
///
/// `u = 0` returns exactly `theta_y`, the lower support boundary.
pub fn pareto_conditional_quantile(
    x: f64,
    u: f64,
    shape: f64,
    theta_x: f64,
    theta_y: f64,
) -> Result<f64> {
    if !(shape > 0.0 && theta_x > 0.0 && theta_y > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "pareto parameters must be positive, got (a = {shape}, theta_x = {theta_x}, theta_y = {theta_y})"
        )));
    }
    if !(x > theta_x) {
        return Err(Error::Domain(format!(
            "conditioning value x = {x} must exceed theta_x = {theta_x}"
        )));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("u must lie in [0, 1), got {u}")));
    }
    Ok(theta_y + x * theta_y / theta_x * ((1.0 - u).powf(-1.0 / (shape + 1.0)) - 1.0))
}
