//! The distribution of the product `Z = XY`: density, CDF, moments, tail
//! asymptotics and sampling for every supported joint law of `(X, Y)`.
//!
//! Closed forms are used where they exist: the Bessel-K0 density for the
//! centered Gaussian pair, the log-normal density for the log-normal pair,
//! and the three independent cross-family forms (Pareto x Pareto,
//! centered-Gaussian x Pareto, log-normal x Pareto). Everything else is
//! evaluated by adaptive quadrature of the product-density integral
//! `f_Z(z) = ∫ |x|^{-1} f_{X,Y}(x, z/x) dx`, with the integration window and
//! interior split points derived from the factor supports so the adaptive
//! rule never misses localized mass.

#[allow(unused_imports)]
use num_traits::Float;

use crate::bivariate::{pareto_conditional_cdf, BivariateSpec};
use crate::error::{Error, Result};
use crate::marginals::MarginalSpec;
use crate::quadrature::{integrate, IntegrationDomain, QuadratureConfig};
use crate::special;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;

/// How product densities are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Closed form when one exists for the family, quadrature otherwise.
    Auto,
    /// Closed form only; construction fails if the family has none.
    ClosedForm,
    /// Always evaluate the generic product integral numerically.
    Quadrature,
}

/// Mean and variance of the product; `None` marks non-existence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
}

/// The distribution of `Z = XY` for a given joint law of the factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpec {
    pub joint: BivariateSpec,
    pub quad: QuadratureConfig,
    pub strategy: Strategy,
}

/// Which closed-form density applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClosedKind {
    /// Centered correlated Gaussian pair: Bessel-K0 density.
    GaussProduct,
    /// Log-normal pair: the product is log-normal again.
    LogNormalProduct,
    /// Independent Pareto factors.
    ParetoProduct,
    /// Independent centered Gaussian and Pareto factors.
    GaussPareto,
    /// Independent log-normal and Pareto factors.
    LogNormalPareto,
}

impl ProductSpec {
    /// Product spec with default quadrature settings and automatic strategy.
    pub fn new(joint: BivariateSpec) -> Result<Self> {
        Self::with_config(joint, QuadratureConfig::default(), Strategy::Auto)
    }

    pub fn with_config(
        joint: BivariateSpec,
        quad: QuadratureConfig,
        strategy: Strategy,
    ) -> Result<Self> {
        joint.validate()?;
        quad.validate()?;
        let spec = ProductSpec {
            joint,
            quad,
            strategy,
        };
        if strategy == Strategy::ClosedForm && spec.closed_kind().is_none() {
            return Err(Error::Unsupported(
                "no closed-form product density exists for this family",
            ));
        }
        Ok(spec)
    }

    /// Support of `Z` as an open interval.
    pub fn support(&self) -> (f64, f64) {
        let (xlo, _) = self.joint.marginal_x().support();
        let (ylo, _) = self.joint.marginal_y().support();
        if xlo >= 0.0 && ylo >= 0.0 {
            (xlo * ylo, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_kind().is_some()
    }

    fn closed_kind(&self) -> Option<ClosedKind> {
        match &self.joint {
            BivariateSpec::GaussGauss { mu_x, mu_y, .. } if *mu_x == 0.0 && *mu_y == 0.0 => {
                Some(ClosedKind::GaussProduct)
            }
            BivariateSpec::LogNLogN { .. } => Some(ClosedKind::LogNormalProduct),
            BivariateSpec::Independent { x, y } => match (x, y) {
                (MarginalSpec::Pareto { .. }, MarginalSpec::Pareto { .. }) => {
                    Some(ClosedKind::ParetoProduct)
                }
                (MarginalSpec::Gaussian { mu, .. }, MarginalSpec::Pareto { .. })
                | (MarginalSpec::Pareto { .. }, MarginalSpec::Gaussian { mu, .. })
                    if *mu == 0.0 =>
                {
                    Some(ClosedKind::GaussPareto)
                }
                (MarginalSpec::LogNormal { .. }, MarginalSpec::Pareto { .. })
                | (MarginalSpec::Pareto { .. }, MarginalSpec::LogNormal { .. }) => {
                    Some(ClosedKind::LogNormalPareto)
                }
                _ => None,
            },
            _ => None,
        }
    }

    fn use_closed_form(&self) -> Option<ClosedKind> {
        match self.strategy {
            Strategy::Quadrature => None,
            Strategy::Auto | Strategy::ClosedForm => self.closed_kind(),
        }
    }

    /// Whether the density diverges (logarithmically) at `z = 0`.
    fn singular_at_zero(&self) -> bool {
        match &self.joint {
            BivariateSpec::GaussGauss { .. } | BivariateSpec::TT { .. } => true,
            BivariateSpec::Independent { x, y } => {
                x.density_positive_at_zero() && y.density_positive_at_zero()
            }
            _ => false,
        }
    }

    /// Density of `Z` at `z`.
    pub fn pdf(&self, z: f64) -> Result<f64> {
        self.pdf_with_cfg(z, &self.quad)
    }

    /// Log-density of `Z` at `z` (`-inf` where the density vanishes).
    pub fn ln_pdf(&self, z: f64) -> Result<f64> {
        self.ln_pdf_with_cfg(z, &self.quad)
    }

    pub(crate) fn pdf_with_cfg(&self, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
        match self.use_closed_form() {
            Some(kind) => self.closed_pdf(kind, z),
            None => self.quad_pdf(z, cfg),
        }
    }

    pub(crate) fn ln_pdf_with_cfg(&self, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
        match self.use_closed_form() {
            Some(kind) => self.closed_ln_pdf(kind, z),
            None => Ok(self.quad_pdf(z, cfg)?.ln()),
        }
    }

    // --- closed-form densities ------------------------------------------------

    fn closed_pdf(&self, kind: ClosedKind, z: f64) -> Result<f64> {
        match kind {
            ClosedKind::GaussProduct | ClosedKind::LogNormalPareto => {
                Ok(self.closed_ln_pdf(kind, z)?.exp())
            }
            ClosedKind::LogNormalProduct => Ok(self.logn_product_marginal().pdf(z)),
            ClosedKind::ParetoProduct => {
                let (ax, ay, tt) = self.pareto_pair_params();
                Ok(pareto_product_pdf(ax, ay, tt, z))
            }
            ClosedKind::GaussPareto => {
                let (a, theta, sigma) = self.gauss_pareto_params();
                // Scaled form: f(z) = a gstar(s, z^2/(2 s^2 t^2)) / (2 sqrt(2 pi) s t)
                // with gstar(s, x) = gamma(s, x) x^{-s}; finite down to z = 0.
                let s = 0.5 * (a + 1.0);
                let xarg = z * z / (2.0 * sigma * sigma * theta * theta);
                let gstar = special::lower_incomplete_gamma_scaled(s, xarg)?;
                Ok(a * gstar / (2.0 * (2.0 * PI).sqrt() * sigma * theta))
            }
        }
    }

    fn closed_ln_pdf(&self, kind: ClosedKind, z: f64) -> Result<f64> {
        match kind {
            ClosedKind::GaussProduct => {
                if z == 0.0 {
                    return Err(Error::SingularPoint { at: 0.0 });
                }
                let (sigma_x, sigma_y, rho) = match self.joint {
                    BivariateSpec::GaussGauss {
                        sigma_x,
                        sigma_y,
                        rho,
                        ..
                    } => (sigma_x, sigma_y, rho),
                    _ => unreachable!(),
                };
                let ss = sigma_x * sigma_y;
                let omr2 = 1.0 - rho * rho;
                let arg = z.abs() / (ss * omr2);
                let k0_scaled = special::bessel_k0_scaled(arg)?;
                Ok(rho * z / (ss * omr2) - arg + k0_scaled.ln() - (PI * ss * omr2.sqrt()).ln())
            }
            ClosedKind::LogNormalProduct => Ok(self.logn_product_marginal().ln_pdf(z)),
            ClosedKind::ParetoProduct => Ok(self.closed_pdf(kind, z)?.ln()),
            ClosedKind::GaussPareto => Ok(self.closed_pdf(kind, z)?.ln()),
            ClosedKind::LogNormalPareto => {
                if z <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                let (a, theta_eff, sigma) = self.logn_pareto_params();
                // f(z) = a theta^a e^{a^2 s^2/2} z^{-(a+1)} Phi((ln(z/theta) - a s^2)/s),
                // assembled in log space so large shapes cannot overflow.
                let w = ((z / theta_eff).ln() - a * sigma * sigma) / sigma;
                Ok(a.ln() + a * theta_eff.ln() + 0.5 * a * a * sigma * sigma
                    - (a + 1.0) * z.ln()
                    + special::ln_std_normal_cdf(w))
            }
        }
    }

    /// The product of a log-normal pair is log-normal again, with
    /// `mu_Z = mu_X + mu_Y` and `sigma_Z^2 = sigma_X^2 + sigma_Y^2 + 2 rho sigma_X sigma_Y`.
    fn logn_product_marginal(&self) -> MarginalSpec {
        match self.joint {
            BivariateSpec::LogNLogN {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => MarginalSpec::LogNormal {
                mu: mu_x + mu_y,
                sigma: (sigma_x * sigma_x + sigma_y * sigma_y + 2.0 * rho * sigma_x * sigma_y)
                    .sqrt(),
            },
            _ => unreachable!(),
        }
    }

    fn pareto_pair_params(&self) -> (f64, f64, f64) {
        match &self.joint {
            BivariateSpec::Independent {
                x: MarginalSpec::Pareto { shape: ax, scale: tx },
                y: MarginalSpec::Pareto { shape: ay, scale: ty },
            } => (*ax, *ay, tx * ty),
            _ => unreachable!(),
        }
    }

    fn gauss_pareto_params(&self) -> (f64, f64, f64) {
        match &self.joint {
            BivariateSpec::Independent {
                x: MarginalSpec::Gaussian { sigma, .. },
                y: MarginalSpec::Pareto { shape, scale },
            }
            | BivariateSpec::Independent {
                x: MarginalSpec::Pareto { shape, scale },
                y: MarginalSpec::Gaussian { sigma, .. },
            } => (*shape, *scale, *sigma),
            _ => unreachable!(),
        }
    }

    /// Pareto shape, effective Pareto scale and log-normal sigma for the
    /// log-normal x Pareto product. A non-zero log-normal location folds into
    /// the Pareto scale: `X Y = (e^{-mu} X) (e^{mu} Y)`.
    fn logn_pareto_params(&self) -> (f64, f64, f64) {
        match &self.joint {
            BivariateSpec::Independent {
                x: MarginalSpec::LogNormal { mu, sigma },
                y: MarginalSpec::Pareto { shape, scale },
            }
            | BivariateSpec::Independent {
                x: MarginalSpec::Pareto { shape, scale },
                y: MarginalSpec::LogNormal { mu, sigma },
            } => (*shape, scale * mu.exp(), *sigma),
            _ => unreachable!(),
        }
    }

    // --- quadrature densities ---------------------------------------------------

    fn quad_pdf(&self, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
        let (lo, _) = self.support();
        if z <= lo {
            return Ok(0.0);
        }
        if z == 0.0 && self.singular_at_zero() {
            return Err(Error::SingularPoint { at: 0.0 });
        }
        // Density values deep in heavy tails can be far below any fixed
        // absolute tolerance yet still carry probability mass, so the
        // density integral is always driven by the relative tolerance.
        let cfg = QuadratureConfig {
            abs_tol: f64::MIN_POSITIVE,
            ..*cfg
        };
        let joint = &self.joint;
        let eval = JointEval::new(joint);
        let mut pieces = integrand_pieces(joint, z);
        // The integrand of a sign-symmetric pair is even in x: integrate the
        // positive half only and double it.
        let mut factor = 1.0;
        if pieces.len() == 2 && even_under_joint_reflection(joint) {
            pieces = alloc::vec![(0.0, f64::INFINITY)];
            factor = 2.0;
        }
        let mut total = 0.0;
        for (plo, phi) in pieces {
            let anchors = interior_anchors(joint, z, plo, phi);
            let domain = IntegrationDomain::with_singular_points(plo, phi, anchors);
            let r = integrate(|x| product_integrand(&eval, x, z), &domain, &cfg)?;
            total += r.value;
        }
        Ok((factor * total).max(0.0))
    }

    // --- CDF ---------------------------------------------------------------------

    /// Distribution function of `Z`.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        let (lo, _) = self.support();
        if z <= lo {
            return Ok(0.0);
        }
        match self.use_closed_form() {
            Some(ClosedKind::LogNormalProduct) => Ok(self.logn_product_marginal().cdf(z)),
            Some(ClosedKind::ParetoProduct) => {
                let (ax, ay, tt) = self.pareto_pair_params();
                Ok(pareto_product_cdf(ax, ay, tt, z))
            }
            Some(ClosedKind::GaussPareto) => {
                let (a, theta, sigma) = self.gauss_pareto_params();
                gauss_pareto_cdf(a, theta, sigma, z)
            }
            Some(ClosedKind::LogNormalPareto) => {
                let (a, theta_eff, sigma) = self.logn_pareto_params();
                Ok(logn_pareto_cdf(a, theta_eff, sigma, z))
            }
            _ => {
                if let BivariateSpec::ParetoPareto {
                    shape,
                    theta_x,
                    theta_y,
                } = self.joint
                {
                    // Single integral over the conditional CDF:
                    // F_Z(z) = ∫ f_X(x) F_{Y|X}(z/x | x) dx on (theta_x, z/theta_y).
                    return pareto_dependent_cdf(shape, theta_x, theta_y, z, &self.quad);
                }
                self.cdf_by_pdf_integration(z)
            }
        }
    }

    fn cdf_by_pdf_integration(&self, z: f64) -> Result<f64> {
        let cfg = self.quad;
        let (lo, _) = self.support();
        let dens = |x: f64| self.pdf_with_cfg(x, &cfg).unwrap_or(f64::NAN);
        if lo.is_finite() {
            // Split at crude product-scale anchors so the bulk is never
            // missed when z sits far in the upper tail.
            let scale = self.product_scale_proxy();
            let anchors: Vec<f64> = [0.01 * scale, scale, 100.0 * scale]
                .into_iter()
                .filter(|&a| a > lo * (1.0 + 1e-12) && a < z * (1.0 - 1e-12))
                .collect();
            let domain = IntegrationDomain::with_singular_points(lo, z, anchors);
            let r = integrate(dens, &domain, &cfg)?;
            return Ok(r.value.clamp(0.0, 1.0));
        }
        if z <= 0.0 {
            let domain = IntegrationDomain::new(f64::NEG_INFINITY, z);
            let r = integrate(dens, &domain, &cfg)?;
            Ok(r.value.clamp(0.0, 1.0))
        } else {
            let domain = IntegrationDomain::new(z, f64::INFINITY);
            let r = integrate(dens, &domain, &cfg)?;
            Ok((1.0 - r.value).clamp(0.0, 1.0))
        }
    }

    /// CDF at many ascending points, sharing work between neighbors.
    ///
    /// For quadrature-backed families the CDF is accumulated incrementally
    /// (one short integral per gap), which is what makes goodness-of-fit
    /// statistics over 10^4-point samples practical.
    pub fn cdf_many(&self, sorted_z: &[f64]) -> Result<Vec<f64>> {
        if sorted_z.is_empty() {
            return Ok(Vec::new());
        }
        if sorted_z.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(
                "cdf_many requires ascending input".into(),
            ));
        }
        let pointwise = match self.use_closed_form() {
            Some(_) => true,
            None => matches!(self.joint, BivariateSpec::ParetoPareto { .. }),
        };
        if pointwise {
            return sorted_z.iter().map(|&z| self.cdf(z)).collect();
        }

        let cfg = self.quad;
        let (lo, _) = self.support();
        let dens = |x: f64| self.pdf_with_cfg(x, &cfg).unwrap_or(f64::NAN);
        let singular = self.singular_at_zero();
        let mut out = Vec::with_capacity(sorted_z.len());
        let mut acc = self.cdf(sorted_z[0])?;
        out.push(acc);
        for w in sorted_z.windows(2) {
            let (za, zb) = (w[0], w[1]);
            if zb > za && zb > lo {
                let za = za.max(lo);
                let splits = if singular && za < 0.0 && zb > 0.0 {
                    alloc::vec![0.0]
                } else {
                    Vec::new()
                };
                let domain = IntegrationDomain::with_singular_points(za, zb, splits);
                acc += integrate(dens, &domain, &cfg)?.value;
                acc = acc.clamp(0.0, 1.0);
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Numeric quantile by bisection on the CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(alloc::format!(
                "quantile requires p in (0, 1), got {p}"
            )));
        }
        let (supp_lo, _) = self.support();
        let scale = self.product_scale_proxy();
        let (mut lo, mut hi);
        if supp_lo.is_finite() {
            lo = supp_lo;
            hi = (supp_lo + scale).max(supp_lo * 2.0).max(supp_lo + 1.0);
            let mut guard = 0;
            while self.cdf(hi)? < p {
                hi = supp_lo + (hi - supp_lo) * 4.0;
                guard += 1;
                if guard > 300 || hi > 1e300 {
                    return Err(Error::NonConvergence {
                        what: "quantile bracket expansion",
                    });
                }
            }
        } else {
            lo = -scale.max(1.0);
            hi = scale.max(1.0);
            let mut guard = 0;
            while self.cdf(lo)? > p {
                lo *= 4.0;
                guard += 1;
                if guard > 300 {
                    return Err(Error::NonConvergence {
                        what: "quantile bracket expansion",
                    });
                }
            }
            guard = 0;
            while self.cdf(hi)? < p {
                hi *= 4.0;
                guard += 1;
                if guard > 300 {
                    return Err(Error::NonConvergence {
                        what: "quantile bracket expansion",
                    });
                }
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo).abs() < 1e-10 * (1.0 + mid.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// A crude magnitude for `|Z|`, used to seed brackets and split points.
    fn product_scale_proxy(&self) -> f64 {
        fn marginal_scale(m: &MarginalSpec) -> f64 {
            match *m {
                MarginalSpec::Gaussian { mu, sigma } => sigma.max(mu.abs()),
                MarginalSpec::LogNormal { mu, .. } => mu.exp(),
                MarginalSpec::StudentT { loc, scale, .. } => scale.max(loc.abs()),
                MarginalSpec::Pareto { scale, .. } => scale,
            }
        }
        marginal_scale(&self.joint.marginal_x()) * marginal_scale(&self.joint.marginal_y())
    }

    // --- moments -------------------------------------------------------------------

    /// Mean and variance of `Z`.
    ///
    /// Closed forms for the Gaussian and log-normal pairs and for independent
    /// factors (via `E Z^k = E X^k E Y^k`); the dependent t and Pareto
    /// families are integrated numerically once the existence thresholds
    /// (t: n > 1 mean, n > 2 variance; Pareto: a > 1, a > 2) are met.
    pub fn moments(&self) -> Result<Moments> {
        match &self.joint {
            BivariateSpec::GaussGauss {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => {
                let mean = mu_x * mu_y + rho * sigma_x * sigma_y;
                let var = sigma_x * sigma_x * mu_y * mu_y
                    + sigma_y * sigma_y * mu_x * mu_x
                    + sigma_x * sigma_x * sigma_y * sigma_y
                    + 2.0 * rho * mu_x * mu_y * sigma_x * sigma_y
                    + rho * rho * sigma_x * sigma_x * sigma_y * sigma_y;
                Ok(Moments {
                    mean: Some(mean),
                    variance: Some(var),
                })
            }
            BivariateSpec::LogNLogN { .. } => {
                let m = self.logn_product_marginal();
                Ok(Moments {
                    mean: m.mean(),
                    variance: m.variance(),
                })
            }
            BivariateSpec::Independent { x, y } => {
                let mean = match (x.raw_moment(1), y.raw_moment(1)) {
                    (Some(a), Some(b)) => Some(a * b),
                    _ => None,
                };
                let variance = match (x.raw_moment(2), y.raw_moment(2), mean) {
                    (Some(a), Some(b), Some(m)) => Some(a * b - m * m),
                    _ => None,
                };
                Ok(Moments { mean, variance })
            }
            BivariateSpec::TT { dof, .. } => {
                self.numeric_moments(*dof > 1.0, *dof > 2.0)
            }
            BivariateSpec::ParetoPareto { shape, .. } => {
                self.numeric_moments(*shape > 1.0, *shape > 2.0)
            }
        }
    }

    fn numeric_moments(&self, mean_exists: bool, var_exists: bool) -> Result<Moments> {
        let mean = if mean_exists {
            Some(self.numeric_raw_moment(1)?)
        } else {
            None
        };
        let variance = if var_exists {
            let m2 = self.numeric_raw_moment(2)?;
            let m1 = mean.expect("variance existence implies mean existence");
            Some(m2 - m1 * m1)
        } else {
            None
        };
        Ok(Moments { mean, variance })
    }

    fn numeric_raw_moment(&self, k: u32) -> Result<f64> {
        let cfg = QuadratureConfig {
            abs_tol: 1e-9,
            rel_tol: 1e-6,
            max_subdivisions: 2000,
        };
        let inner = self.quad;
        let dens = |z: f64| self.pdf_with_cfg(z, &inner).unwrap_or(f64::NAN);
        let (lo, hi) = self.support();
        let splits = if lo < 0.0 { alloc::vec![0.0] } else { Vec::new() };
        let domain = IntegrationDomain::with_singular_points(lo, hi, splits);
        // z^k * pdf(z) is assembled in log space: far in a heavy tail z^k
        // alone overflows while the product stays tiny.
        let r = integrate(
            |z| {
                let p = dens(z);
                if p.is_nan() {
                    f64::NAN
                } else if p <= 0.0 || z == 0.0 {
                    0.0
                } else {
                    let mag = (k as f64 * z.abs().ln() + p.ln()).exp();
                    if k % 2 == 1 && z < 0.0 {
                        -mag
                    } else {
                        mag
                    }
                }
            },
            &domain,
            &cfg,
        )?;
        Ok(r.value)
    }

    // --- tails and sampling -----------------------------------------------------------

    /// Power-law tail asymptote of the centered-Gaussian x Pareto product:
    /// `a t^a s^a 2^{(a-1)/2} Gamma((a+1)/2) / (sqrt(2 pi) |z|^{a+1})`.
    ///
    /// Only defined for that family; the caller is responsible for evaluating
    /// it at large `|z|` where the asymptote is meaningful.
    pub fn tail_asymptote(&self, z: f64) -> Result<f64> {
        let kind = self.closed_kind();
        if kind != Some(ClosedKind::GaussPareto) {
            return Err(Error::Unsupported(
                "tail asymptote is defined for the independent centered-Gaussian x Pareto product",
            ));
        }
        if z == 0.0 {
            return Err(Error::Domain("tail asymptote is undefined at z = 0".into()));
        }
        let (a, theta, sigma) = self.gauss_pareto_params();
        let ln_val = a.ln() + a * theta.ln() + a * sigma.ln() + 0.5 * (a - 1.0) * (2.0f64).ln()
            + special::ln_gamma(0.5 * (a + 1.0))?
            - 0.5 * (2.0 * PI).ln()
            - (a + 1.0) * z.abs().ln();
        Ok(ln_val.exp())
    }

    /// Draw `count` products `Z_i = X_i Y_i`; deterministic per RNG stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count)
            .map(|_| {
                let (x, y) = self.joint.sample_pair_one(rng);
                x * y
            })
            .collect()
    }
}

/// Precompiled univariate density with hoisted normalization constants;
/// quadrature integrands call these millions of times inside likelihood
/// loops.
#[derive(Debug, Clone, Copy)]
enum DensityFn {
    Gaussian {
        mu: f64,
        inv_sigma: f64,
        norm: f64,
    },
    LogNormal {
        mu: f64,
        inv_sigma: f64,
        norm: f64,
    },
    StudentT {
        loc: f64,
        inv_scale: f64,
        inv_dof: f64,
        expo: f64,
        norm: f64,
    },
    Pareto {
        lo: f64,
        neg_shape_p1: f64,
        coef: f64,
    },
}

impl DensityFn {
    fn new(m: &MarginalSpec) -> Self {
        match *m {
            MarginalSpec::Gaussian { mu, sigma } => DensityFn::Gaussian {
                mu,
                inv_sigma: 1.0 / sigma,
                norm: 1.0 / (sigma * (2.0 * PI).sqrt()),
            },
            MarginalSpec::LogNormal { mu, sigma } => DensityFn::LogNormal {
                mu,
                inv_sigma: 1.0 / sigma,
                norm: 1.0 / (sigma * (2.0 * PI).sqrt()),
            },
            MarginalSpec::StudentT { dof, loc, scale } => {
                let ln_c = special::ln_gamma(0.5 * (dof + 1.0)).unwrap_or(f64::NAN)
                    - special::ln_gamma(0.5 * dof).unwrap_or(f64::NAN)
                    - 0.5 * (dof * PI).ln();
                DensityFn::StudentT {
                    loc,
                    inv_scale: 1.0 / scale,
                    inv_dof: 1.0 / dof,
                    expo: -0.5 * (dof + 1.0),
                    norm: ln_c.exp() / scale,
                }
            }
            MarginalSpec::Pareto { shape, scale } => DensityFn::Pareto {
                lo: scale,
                neg_shape_p1: -(shape + 1.0),
                coef: shape * scale.powf(shape),
            },
        }
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        match *self {
            DensityFn::Gaussian { mu, inv_sigma, norm } => {
                let u = (x - mu) * inv_sigma;
                norm * (-0.5 * u * u).exp()
            }
            DensityFn::LogNormal { mu, inv_sigma, norm } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let u = (x.ln() - mu) * inv_sigma;
                norm / x * (-0.5 * u * u).exp()
            }
            DensityFn::StudentT {
                loc,
                inv_scale,
                inv_dof,
                expo,
                norm,
            } => {
                let u = (x - loc) * inv_scale;
                norm * (1.0 + u * u * inv_dof).powf(expo)
            }
            DensityFn::Pareto {
                lo,
                neg_shape_p1,
                coef,
            } => {
                if x <= lo {
                    0.0
                } else {
                    coef * x.powf(neg_shape_p1)
                }
            }
        }
    }
}

/// Precompiled joint density.
#[derive(Debug, Clone, Copy)]
enum JointEval {
    Elliptic {
        // Gaussian or log-normal pair (the latter evaluated on logs).
        log_scale: bool,
        mu_x: f64,
        mu_y: f64,
        inv_sx: f64,
        inv_sy: f64,
        rho: f64,
        inv_two_omr2: f64,
        norm: f64,
    },
    TT {
        inv_scale: f64, // 1 / (n (1 - rho^2))
        two_rho: f64,
        expo: f64,
        norm: f64,
    },
    ParetoPareto {
        tx: f64,
        ty: f64,
        tt: f64,
        expo: f64,
        coef: f64,
    },
    Independent(DensityFn, DensityFn),
}

impl JointEval {
    fn new(joint: &BivariateSpec) -> Self {
        match *joint {
            BivariateSpec::GaussGauss {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => {
                let omr2 = 1.0 - rho * rho;
                JointEval::Elliptic {
                    log_scale: false,
                    mu_x,
                    mu_y,
                    inv_sx: 1.0 / sigma_x,
                    inv_sy: 1.0 / sigma_y,
                    rho,
                    inv_two_omr2: 1.0 / (2.0 * omr2),
                    norm: 1.0 / (2.0 * PI * sigma_x * sigma_y * omr2.sqrt()),
                }
            }
            BivariateSpec::LogNLogN {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => {
                let omr2 = 1.0 - rho * rho;
                JointEval::Elliptic {
                    log_scale: true,
                    mu_x,
                    mu_y,
                    inv_sx: 1.0 / sigma_x,
                    inv_sy: 1.0 / sigma_y,
                    rho,
                    inv_two_omr2: 1.0 / (2.0 * omr2),
                    norm: 1.0 / (2.0 * PI * sigma_x * sigma_y * omr2.sqrt()),
                }
            }
            BivariateSpec::TT { dof, rho } => {
                let omr2 = 1.0 - rho * rho;
                JointEval::TT {
                    inv_scale: 1.0 / (dof * omr2),
                    two_rho: 2.0 * rho,
                    expo: -0.5 * (dof + 2.0),
                    norm: 1.0 / (2.0 * PI * omr2.sqrt()),
                }
            }
            BivariateSpec::ParetoPareto {
                shape,
                theta_x,
                theta_y,
            } => JointEval::ParetoPareto {
                tx: theta_x,
                ty: theta_y,
                tt: theta_x * theta_y,
                expo: -(shape + 2.0),
                coef: shape * (shape + 1.0) * (theta_x * theta_y).powf(shape + 1.0),
            },
            BivariateSpec::Independent { ref x, ref y } => {
                JointEval::Independent(DensityFn::new(x), DensityFn::new(y))
            }
        }
    }

    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            JointEval::Elliptic {
                log_scale,
                mu_x,
                mu_y,
                inv_sx,
                inv_sy,
                rho,
                inv_two_omr2,
                norm,
            } => {
                let (xx, yy, jac) = if log_scale {
                    if x <= 0.0 || y <= 0.0 {
                        return 0.0;
                    }
                    (x.ln(), y.ln(), 1.0 / (x * y))
                } else {
                    (x, y, 1.0)
                };
                let u = (xx - mu_x) * inv_sx;
                let v = (yy - mu_y) * inv_sy;
                let q = (u * u - 2.0 * rho * u * v + v * v) * inv_two_omr2;
                norm * jac * (-q).exp()
            }
            JointEval::TT {
                inv_scale,
                two_rho,
                expo,
                norm,
            } => {
                let q = 1.0 + (x * x - two_rho * x * y + y * y) * inv_scale;
                norm * q.powf(expo)
            }
            JointEval::ParetoPareto {
                tx,
                ty,
                tt,
                expo,
                coef,
            } => {
                if x <= tx || y <= ty {
                    return 0.0;
                }
                coef * (x * ty + y * tx - tt).powf(expo)
            }
            JointEval::Independent(ref fx, ref fy) => fx.eval(x) * fy.eval(y),
        }
    }
}

/// `|x|^{-1} f_{X,Y}(x, z/x)`, the generic product-density integrand.
#[inline]
fn product_integrand(joint: &JointEval, x: f64, z: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    joint.eval(x, z / x) / x.abs()
}

/// Integration windows in `x` for the product-density integral, derived from
/// the factor supports. Outside these windows the integrand is identically
/// zero, and `x = 0` is always a window boundary.
fn integrand_pieces(joint: &BivariateSpec, z: f64) -> Vec<(f64, f64)> {
    match joint {
        BivariateSpec::GaussGauss { .. } | BivariateSpec::TT { .. } => {
            alloc::vec![(f64::NEG_INFINITY, 0.0), (0.0, f64::INFINITY)]
        }
        BivariateSpec::LogNLogN { .. } => {
            if z > 0.0 {
                alloc::vec![(0.0, f64::INFINITY)]
            } else {
                Vec::new()
            }
        }
        BivariateSpec::ParetoPareto {
            theta_x, theta_y, ..
        } => {
            if z > theta_x * theta_y {
                alloc::vec![(*theta_x, z / theta_y)]
            } else {
                Vec::new()
            }
        }
        BivariateSpec::Independent { x, y } => {
            let (xlo, _) = x.support();
            let (ylo, _) = y.support();
            let mut out = Vec::new();
            // Positive x branch.
            {
                let lo = xlo.max(0.0);
                let mut hi = f64::INFINITY;
                let mut ok = true;
                if ylo > 0.0 {
                    if z > 0.0 {
                        hi = z / ylo;
                    } else {
                        ok = false;
                    }
                } else if ylo == 0.0 {
                    ok = z > 0.0;
                }
                if ok && lo < hi {
                    out.push((lo, hi));
                }
            }
            // Negative x branch, present only when X extends below zero.
            if xlo == f64::NEG_INFINITY {
                let mut lo = f64::NEG_INFINITY;
                let hi = 0.0;
                let mut ok = true;
                if ylo > 0.0 {
                    if z < 0.0 {
                        lo = z / ylo;
                    } else {
                        ok = false;
                    }
                } else if ylo == 0.0 {
                    ok = z < 0.0;
                }
                if ok && lo < hi {
                    out.push((lo, hi));
                }
            }
            out
        }
    }
}

/// Rough points covering the bulk of a marginal, used to pre-split the
/// integration window so the adaptive rule starts with panels at every scale
/// the integrand can concentrate on.
fn mass_anchors(m: &MarginalSpec) -> [f64; 4] {
    match *m {
        MarginalSpec::Gaussian { mu, sigma } => {
            [mu - 6.0 * sigma, mu - sigma, mu + sigma, mu + 6.0 * sigma]
        }
        MarginalSpec::LogNormal { mu, sigma } => [
            (mu - 6.0 * sigma).exp(),
            (mu - sigma).exp(),
            (mu + sigma).exp(),
            (mu + 6.0 * sigma).exp(),
        ],
        MarginalSpec::StudentT { loc, scale, .. } => [
            loc - 50.0 * scale,
            loc - scale,
            loc + scale,
            loc + 50.0 * scale,
        ],
        MarginalSpec::Pareto { scale, .. } => {
            [1.5 * scale, 8.0 * scale, 1e3 * scale, 1e6 * scale]
        }
    }
}

/// Whether the joint density is invariant under `(x, y) -> (-x, -y)`, which
/// makes the product integrand even in `x`.
fn even_under_joint_reflection(joint: &BivariateSpec) -> bool {
    fn symmetric_about_zero(m: &MarginalSpec) -> bool {
        matches!(
            *m,
            MarginalSpec::Gaussian { mu: 0.0, .. } | MarginalSpec::StudentT { loc: 0.0, .. }
        )
    }
    match joint {
        BivariateSpec::TT { .. } => true,
        BivariateSpec::GaussGauss { mu_x, mu_y, .. } => *mu_x == 0.0 && *mu_y == 0.0,
        BivariateSpec::Independent { x, y } => {
            symmetric_about_zero(x) && symmetric_about_zero(y)
        }
        _ => false,
    }
}

/// Interior split points for one integration window: the X mass anchors, the
/// pre-images `z / y` of the Y mass anchors, and the geometric balance point
/// `sqrt(|z|)` where the dependent-t ridge concentrates. Anchors within a
/// factor of two of each other are merged.
fn interior_anchors(joint: &BivariateSpec, z: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut anchors = Vec::with_capacity(16);
    anchors.extend_from_slice(&mass_anchors(&joint.marginal_x()));
    if matches!(joint, BivariateSpec::TT { .. }) {
        // The shared chi-square divisor concentrates the integrand on a
        // log-symmetric ridge at |x| = sqrt(|z|); bracket it with geometric
        // shells instead of the (useless here) y-anchor pre-images.
        if z != 0.0 {
            let root = z.abs().sqrt();
            for factor in [1.0 / 64.0, 1.0, 64.0] {
                anchors.push(root * factor);
                anchors.push(-root * factor);
            }
        }
    } else {
        for ya in mass_anchors(&joint.marginal_y()) {
            if ya != 0.0 && z != 0.0 {
                anchors.push(z / ya);
            }
        }
    }
    let span_lo = if lo.is_finite() { lo } else { f64::MIN };
    let span_hi = if hi.is_finite() { hi } else { f64::MAX };
    let margin = 1e-9;
    let mut inside: Vec<f64> = anchors
        .into_iter()
        .filter(|&a| {
            a.is_finite()
                && a > span_lo + margin * (1.0 + span_lo.abs())
                && a < span_hi - margin * (1.0 + span_hi.abs())
        })
        .collect();
    inside.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    inside.dedup_by(|a, b| {
        // Merge anchors closer than a factor of two (same sign) or nearly
        // identical; panels between merged anchors would be redundant.
        let (x, y) = (*a, *b);
        (x - y).abs() <= 1e-12 * (1.0 + y.abs())
            || (x * y > 0.0 && (x / y).abs() < 2.0 && (y / x).abs() < 2.0)
    });
    inside
}

/// Closed density of the product of independent Pareto factors. Only the
/// product of the scales enters. Shapes within relative 1e-9 of each other
/// take the equal-shape branch to avoid catastrophic cancellation.
fn pareto_product_pdf(ax: f64, ay: f64, tt: f64, z: f64) -> f64 {
    if z <= tt {
        return 0.0;
    }
    if (ax - ay).abs() < 1e-9 * (1.0 + ax) {
        let a = 0.5 * (ax + ay);
        let w = z / tt;
        return a * a * tt.powf(a) * z.powf(-a - 1.0) * w.ln();
    }
    let term = |shape: f64| (shape * tt.ln() - (shape + 1.0) * z.ln()).exp();
    ax * ay * (term(ax) / (ay - ax) + term(ay) / (ax - ay))
}

fn pareto_product_cdf(ax: f64, ay: f64, tt: f64, z: f64) -> f64 {
    if z <= tt {
        return 0.0;
    }
    let w = z / tt;
    if (ax - ay).abs() < 1e-9 * (1.0 + ax) {
        let a = 0.5 * (ax + ay);
        return (1.0 - w.powf(-a) * (1.0 + a * w.ln())).clamp(0.0, 1.0);
    }
    let f = ay * (1.0 - w.powf(-ax)) / (ay - ax) + ax * (1.0 - w.powf(-ay)) / (ax - ay);
    f.clamp(0.0, 1.0)
}

/// Piecewise CDF of the centered-Gaussian x Pareto product; `F(0) = 1/2` and
/// the tail terms are evaluated through the scaled incomplete gamma so they
/// stay finite near zero.
fn gauss_pareto_cdf(a: f64, theta: f64, sigma: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.5);
    }
    let s = 0.5 * (a + 1.0);
    let xarg = z * z / (2.0 * sigma * sigma * theta * theta);
    let gstar = special::lower_incomplete_gamma_scaled(s, xarg)?;
    let term = z.abs() * gstar / (2.0 * (2.0 * PI).sqrt() * sigma * theta);
    let phi = special::std_normal_cdf(z / (sigma * theta));
    let v = if z > 0.0 { phi - term } else { phi + term };
    Ok(v.clamp(0.0, 1.0))
}

/// CDF of the log-normal x Pareto product, assembled in log space.
fn logn_pareto_cdf(a: f64, theta_eff: f64, sigma: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let u = (z / theta_eff).ln() / sigma;
    let w = u - a * sigma;
    let ln_tail = a * theta_eff.ln() + 0.5 * a * a * sigma * sigma - a * z.ln()
        + special::ln_std_normal_cdf(w);
    (special::std_normal_cdf(u) - ln_tail.exp()).clamp(0.0, 1.0)
}

/// CDF of the dependent Pareto product via the conditional decomposition
/// `F_Z(z) = ∫ f_X(x) F_{Y|X}(z/x | x) dx` over `(theta_x, z/theta_y)`.
fn pareto_dependent_cdf(
    shape: f64,
    theta_x: f64,
    theta_y: f64,
    z: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if z <= theta_x * theta_y {
        return Ok(0.0);
    }
    let fx = MarginalSpec::Pareto {
        shape,
        scale: theta_x,
    };
    let hi = z / theta_y;
    let domain = IntegrationDomain::new(theta_x, hi);
    let r = integrate(
        |x| fx.pdf(x) * pareto_conditional_cdf(z / x, x, shape, theta_x, theta_y),
        &domain,
        cfg,
    )?;
    // Mass from X beyond the window contributes zero (Y cannot reach z/x).
    Ok(r.value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(joint: BivariateSpec) -> ProductSpec {
        ProductSpec::new(joint).unwrap()
    }

    fn quad_spec(joint: BivariateSpec) -> ProductSpec {
        ProductSpec::with_config(joint, QuadratureConfig::default(), Strategy::Quadrature).unwrap()
    }

    fn gauss_product(rho: f64) -> ProductSpec {
        spec(BivariateSpec::gauss_gauss(0.0, 0.0, 1.0, 1.0, rho).unwrap())
    }

    fn indep(x: MarginalSpec, y: MarginalSpec) -> BivariateSpec {
        BivariateSpec::independent(x, y).unwrap()
    }

    #[test]
    fn gauss_product_pdf_is_scaled_bessel() {
        // rho = 0: f(z) = K0(|z|)/pi
        let p = gauss_product(0.0);
        let want = special::bessel_k0(1.0).unwrap() / PI;
        assert!((p.pdf(1.0).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.134_016_241_016_994).abs() < 1e-12);
        // Even in z for rho = 0.
        assert!((p.pdf(-2.3).unwrap() - p.pdf(2.3).unwrap()).abs() < 1e-15);
        // Singular at the origin.
        assert!(matches!(p.pdf(0.0), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn gauss_product_reflection_in_rho() {
        // pdf with rho at z equals pdf with -rho at -z.
        let plus = gauss_product(0.4);
        let minus = gauss_product(-0.4);
        for &z in &[0.3, 1.0, 4.2] {
            let l = plus.pdf(z).unwrap();
            let r = minus.pdf(-z).unwrap();
            assert!(((l - r) / l).abs() < 1e-12);
        }
    }

    #[test]
    fn logn_product_pdf_value() {
        let p = spec(BivariateSpec::logn_logn(0.0, 0.0, 1.0, 1.0, 0.0).unwrap());
        let want = 1.0 / (4.0 * PI).sqrt();
        assert!((p.pdf(1.0).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.282_094_8).abs() < 1e-7);
        assert_eq!(p.pdf(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn pareto_product_pdf_both_branches() {
        // Distinct shapes.
        let p = spec(indep(
            MarginalSpec::pareto(1.0, 1.0).unwrap(),
            MarginalSpec::pareto(2.0, 1.0).unwrap(),
        ));
        assert!((p.pdf(2.0).unwrap() - 0.25).abs() < 1e-12);
        // Equal shapes: a^2 (tt)^a z^{-a-1} ln(z/tt).
        let p = spec(indep(
            MarginalSpec::pareto(1.0, 1.0).unwrap(),
            MarginalSpec::pareto(1.0, 1.0).unwrap(),
        ));
        let e = core::f64::consts::E;
        assert!((p.pdf(e).unwrap() - (-2.0f64).exp()).abs() < 1e-12);
        assert_eq!(p.pdf(1.0).unwrap(), 0.0);
        assert_eq!(p.pdf(0.5).unwrap(), 0.0);
        // Near-equal shapes evaluate through the log branch without blowing up.
        let p = spec(indep(
            MarginalSpec::pareto(1.0, 1.0).unwrap(),
            MarginalSpec::pareto(1.0 + 1e-12, 1.0).unwrap(),
        ));
        assert!((p.pdf(e).unwrap() - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn equal_shape_branch_is_limit_of_distinct_branch() {
        // The closed form must be continuous in a_Y -> a_X; checks the
        // equal-shape branch carries (theta_x theta_y)^a.
        for &tt in &[1.0, 5.0] {
            let base = spec(indep(
                MarginalSpec::pareto(2.0, tt).unwrap(),
                MarginalSpec::pareto(2.0, 1.0).unwrap(),
            ));
            let nearby = spec(indep(
                MarginalSpec::pareto(2.0, tt).unwrap(),
                MarginalSpec::pareto(2.0 + 1e-7, 1.0).unwrap(),
            ));
            let z = 3.0 * tt;
            let a = base.pdf(z).unwrap();
            let b = nearby.pdf(z).unwrap();
            assert!(((a - b) / a).abs() < 1e-5, "tt = {tt}: {a} vs {b}");
        }
    }

    #[test]
    fn closed_forms_agree_with_generic_quadrature() {
        // Every closed form against the generic product integral.
        let cases: Vec<(BivariateSpec, Vec<f64>)> = alloc::vec![
            (
                BivariateSpec::gauss_gauss(0.0, 0.0, 1.3, 0.8, 0.5).unwrap(),
                alloc::vec![-2.0, -0.3, 0.4, 1.5, 6.0],
            ),
            (
                BivariateSpec::logn_logn(0.2, -0.1, 0.9, 0.6, -0.4).unwrap(),
                alloc::vec![0.2, 0.8, 1.7, 5.0],
            ),
            (
                indep(
                    MarginalSpec::pareto(1.0, 1.0).unwrap(),
                    MarginalSpec::pareto(2.5, 1.2).unwrap(),
                ),
                alloc::vec![1.5, 3.0, 20.0],
            ),
            (
                indep(
                    MarginalSpec::pareto(1.5, 2.0).unwrap(),
                    MarginalSpec::pareto(1.5, 1.0).unwrap(),
                ),
                alloc::vec![2.5, 6.0, 40.0],
            ),
            (
                indep(
                    MarginalSpec::gaussian(0.0, 1.5).unwrap(),
                    MarginalSpec::pareto(3.0, 0.8).unwrap(),
                ),
                alloc::vec![-9.0, -1.0, 0.4, 2.0, 11.0],
            ),
            (
                indep(
                    MarginalSpec::log_normal(0.3, 0.7).unwrap(),
                    MarginalSpec::pareto(2.0, 1.0).unwrap(),
                ),
                alloc::vec![0.8, 2.0, 7.0, 30.0],
            ),
        ];
        for (joint, zs) in cases {
            let closed = spec(joint.clone());
            let quad = quad_spec(joint.clone());
            assert!(closed.has_closed_form());
            for z in zs {
                let a = closed.pdf(z).unwrap();
                let b = quad.pdf(z).unwrap();
                assert!(
                    ((a - b) / a.max(1e-300)).abs() < 1e-6,
                    "{joint:?} at z = {z}: closed {a} vs quadrature {b}"
                );
            }
        }
    }

    #[test]
    fn symmetric_quadrature_families_are_even() {
        let tt = spec(BivariateSpec::tt(5.0, 0.0).unwrap());
        let gt = spec(indep(
            MarginalSpec::gaussian(0.0, 1.0).unwrap(),
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
        ));
        let tt_ind = spec(indep(
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
            MarginalSpec::student_t(3.0, 0.0, 1.0).unwrap(),
        ));
        for p in [&tt, &gt, &tt_ind] {
            for &z in &[0.4, 1.7, 8.0] {
                let l = p.pdf(-z).unwrap();
                let r = p.pdf(z).unwrap();
                assert!(((l - r) / r).abs() < 1e-6);
            }
            assert!(matches!(p.pdf(0.0), Err(Error::SingularPoint { .. })));
        }
    }

    #[test]
    fn dependent_t_skewness_direction() {
        let plus = spec(BivariateSpec::tt(5.0, 0.5).unwrap());
        assert!(plus.pdf(2.0).unwrap() > plus.pdf(-2.0).unwrap());
        let minus = spec(BivariateSpec::tt(5.0, -0.5).unwrap());
        assert!(minus.pdf(-2.0).unwrap() > minus.pdf(2.0).unwrap());
    }

    #[test]
    fn dependent_t_reflection_in_rho() {
        let plus = spec(BivariateSpec::tt(5.0, 0.5).unwrap());
        let minus = spec(BivariateSpec::tt(5.0, -0.5).unwrap());
        for &z in &[0.5, 2.0, 7.0] {
            let l = plus.pdf(z).unwrap();
            let r = minus.pdf(-z).unwrap();
            assert!(((l - r) / l).abs() < 1e-8);
        }
    }

    #[test]
    fn dependent_t_tail_heavier_than_independent() {
        // Survival at z = 10 with n = 5: the dependent product with rho = 0
        // dominates the independent one.
        let dep = spec(BivariateSpec::tt(5.0, 0.0).unwrap());
        let ind = spec(indep(
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
        ));
        let s_dep = 1.0 - dep.cdf(10.0).unwrap();
        let s_ind = 1.0 - ind.cdf(10.0).unwrap();
        assert!(
            s_dep > s_ind,
            "dependent survival {s_dep} should exceed independent {s_ind}"
        );
    }

    #[test]
    fn normalization_spot_checks() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-7,
            max_subdivisions: 4000,
        };
        let cases = alloc::vec![
            BivariateSpec::tt(0.5, 0.3).unwrap(),
            BivariateSpec::pareto_pareto(1.5, 1.0, 2.0).unwrap(),
            indep(
                MarginalSpec::gaussian(0.0, 1.0).unwrap(),
                MarginalSpec::student_t(0.5, 0.0, 1.0).unwrap(),
            ),
            indep(
                MarginalSpec::log_normal(0.0, 1.0).unwrap(),
                MarginalSpec::student_t(4.0, 40.0, 10.0).unwrap(),
            ),
        ];
        for joint in cases {
            let p = spec(joint.clone());
            let (lo, hi) = p.support();
            let splits = if lo < 0.0 { alloc::vec![0.0] } else { Vec::new() };
            let dom = IntegrationDomain::with_singular_points(lo, hi, splits);
            let mass = integrate(|z| p.pdf(z).unwrap_or(f64::NAN), &dom, &cfg)
                .unwrap()
                .value;
            assert!((mass - 1.0).abs() < 1e-5, "{joint:?} integrates to {mass}");
        }
    }

    #[test]
    fn pareto_product_pdf_matches_monte_carlo_histogram() {
        let joint = indep(
            MarginalSpec::pareto(1.0, 1.0).unwrap(),
            MarginalSpec::pareto(2.0, 1.0).unwrap(),
        );
        let p = spec(joint);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let zs = p.sample(&mut rng, n);
        let (lo, hi) = (1.9, 2.1);
        let count = zs.iter().filter(|&&z| z >= lo && z < hi).count();
        let frac = count as f64 / n as f64;
        let expected = 0.25 * (hi - lo); // pdf(2) ~ flat over the window
        // Bin mass vs density times width, allowing for curvature + 3 MC SE.
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (frac - expected).abs() < 3.0 * se + 0.002 * expected,
            "bin fraction {frac} vs {expected}"
        );
    }

    #[test]
    fn cdf_closed_pieces() {
        // Centered Gaussian x Pareto: F(0) = 1/2.
        let gp = spec(indep(
            MarginalSpec::gaussian(0.0, 1.0).unwrap(),
            MarginalSpec::pareto(3.0, 1.0).unwrap(),
        ));
        assert_eq!(gp.cdf(0.0).unwrap(), 0.5);
        assert!(gp.cdf(-30.0).unwrap() < 0.02);
        assert!(gp.cdf(30.0).unwrap() > 0.98);
        // Pareto pair: F at the support boundary is zero.
        let pp = spec(BivariateSpec::pareto_pareto(2.0, 1.0, 1.5).unwrap());
        assert_eq!(pp.cdf(1.5).unwrap(), 0.0);
        let ppi = spec(indep(
            MarginalSpec::pareto(2.0, 1.0).unwrap(),
            MarginalSpec::pareto(3.0, 1.0).unwrap(),
        ));
        assert_eq!(ppi.cdf(1.0).unwrap(), 0.0);
        assert!(ppi.cdf(1e9).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn logn_pareto_cdf_matches_pdf_quadrature() {
        let p = spec(indep(
            MarginalSpec::log_normal(0.0, 1.0).unwrap(),
            MarginalSpec::pareto(2.0, 1.0).unwrap(),
        ));
        let cfg = QuadratureConfig::default();
        for &z in &[1.5, 3.0, 10.0] {
            let dom = IntegrationDomain::new(0.0, z);
            let mass = integrate(|t| p.pdf(t).unwrap_or(f64::NAN), &dom, &cfg)
                .unwrap()
                .value;
            let closed = p.cdf(z).unwrap();
            assert!(
                (mass - closed).abs() < 1e-6,
                "z = {z}: quadrature {mass} vs closed {closed}"
            );
        }
    }

    #[test]
    fn gauss_pareto_cdf_consistent_with_pdf() {
        let p = spec(indep(
            MarginalSpec::gaussian(0.0, 1.0).unwrap(),
            MarginalSpec::pareto(3.0, 1.0).unwrap(),
        ));
        let cfg = QuadratureConfig::default();
        for &(za, zb) in &[(-5.0, -1.0), (-1.0, 2.0), (2.0, 9.0)] {
            let dom = IntegrationDomain::new(za, zb);
            let mass = integrate(|t| p.pdf(t).unwrap_or(f64::NAN), &dom, &cfg)
                .unwrap()
                .value;
            let diff = p.cdf(zb).unwrap() - p.cdf(za).unwrap();
            assert!((mass - diff).abs() < 1e-7, "({za}, {zb}): {mass} vs {diff}");
        }
    }

    #[test]
    fn dependent_pareto_cdf_consistent_with_pdf() {
        let p = spec(BivariateSpec::pareto_pareto(1.5, 1.0, 1.0).unwrap());
        let cfg = QuadratureConfig::default();
        for &(za, zb) in &[(1.0, 2.0), (2.0, 8.0), (8.0, 100.0)] {
            let dom = IntegrationDomain::new(za.max(1.0 + 1e-12), zb);
            let mass = integrate(|t| p.pdf(t).unwrap_or(f64::NAN), &dom, &cfg)
                .unwrap()
                .value;
            let diff = p.cdf(zb).unwrap() - p.cdf(za).unwrap();
            assert!((mass - diff).abs() < 1e-6, "({za}, {zb}): {mass} vs {diff}");
        }
    }

    #[test]
    fn quadrature_cdf_families() {
        // Real-line quadrature CDF: dependent t.
        let p = spec(BivariateSpec::tt(5.0, 0.3).unwrap());
        let lo = p.cdf(-50.0).unwrap();
        let mid = p.cdf(0.0).unwrap();
        let hi = p.cdf(50.0).unwrap();
        assert!(lo < 0.01 && hi > 0.99 && mid > 0.1 && mid < 0.9);
        // Positive-support quadrature CDF: forced-quadrature log-normal pair.
        let q = quad_spec(BivariateSpec::logn_logn(0.0, 0.0, 1.0, 1.0, 0.0).unwrap());
        let c = spec(BivariateSpec::logn_logn(0.0, 0.0, 1.0, 1.0, 0.0).unwrap());
        for &z in &[0.3, 1.0, 4.0] {
            assert!((q.cdf(z).unwrap() - c.cdf(z).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn cdf_many_matches_pointwise() {
        let p = spec(BivariateSpec::tt(5.0, 0.4).unwrap());
        let zs = alloc::vec![-8.0, -2.0, -0.5, -0.5, 0.0, 0.7, 3.0, 12.0];
        let batch = p.cdf_many(&zs).unwrap();
        for (&z, &f) in zs.iter().zip(&batch) {
            let single = p.cdf(z).unwrap();
            assert!((f - single).abs() < 1e-6, "z = {z}: batch {f} vs {single}");
        }
        assert!(batch.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        assert!(p.cdf_many(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn moment_formulas() {
        // Correlated Gaussian pair.
        let m = gauss_product(0.5).moments().unwrap();
        assert!((m.mean.unwrap() - 0.5).abs() < 1e-14);
        assert!((m.variance.unwrap() - 1.25).abs() < 1e-14);
        // Independent t x t.
        let m = spec(indep(
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
        ))
        .moments()
        .unwrap();
        assert_eq!(m.mean.unwrap(), 0.0);
        assert!((m.variance.unwrap() - 25.0 / 9.0).abs() < 1e-12);
        // Independent Pareto x Pareto.
        let m = spec(indep(
            MarginalSpec::pareto(3.0, 1.0).unwrap(),
            MarginalSpec::pareto(3.0, 1.0).unwrap(),
        ))
        .moments()
        .unwrap();
        assert!((m.mean.unwrap() - 2.25).abs() < 1e-12);
        assert!((m.variance.unwrap() - 3.9375).abs() < 1e-12);
        // Centered Gaussian x Pareto.
        let m = spec(indep(
            MarginalSpec::gaussian(0.0, 1.0).unwrap(),
            MarginalSpec::pareto(8.0, 1.0).unwrap(),
        ))
        .moments()
        .unwrap();
        assert_eq!(m.mean.unwrap(), 0.0);
        assert!((m.variance.unwrap() - 8.0 / 6.0).abs() < 1e-12);
        // Log-normal x Pareto mean: 2 sqrt(e).
        let m = spec(indep(
            MarginalSpec::log_normal(0.0, 1.0).unwrap(),
            MarginalSpec::pareto(2.0, 1.0).unwrap(),
        ))
        .moments()
        .unwrap();
        assert!((m.mean.unwrap() - 2.0 * 0.5f64.exp()).abs() < 1e-12);
        assert_eq!(m.variance, None);
        // Gaussian x t with non-zero Gaussian mean: general identity
        // Var = (mu^2 + sigma^2) n/(n-2); the centered case matches n/(n-2) sigma^2.
        let m = spec(indep(
            MarginalSpec::gaussian(1.5, 2.0).unwrap(),
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
        ))
        .moments()
        .unwrap();
        assert_eq!(m.mean.unwrap(), 0.0);
        assert!((m.variance.unwrap() - (2.25 + 4.0) * 5.0 / 3.0).abs() < 1e-12);
        let m = spec(indep(
            MarginalSpec::gaussian(0.0, 1.0).unwrap(),
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
        ))
        .moments()
        .unwrap();
        assert!((m.variance.unwrap() - 5.0 / 3.0).abs() < 1e-12);
        // Existence thresholds: n = 2 still has a mean but no variance,
        // n = 1 has neither.
        let m = spec(indep(
            MarginalSpec::student_t(2.0, 0.0, 1.0).unwrap(),
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
        ))
        .moments()
        .unwrap();
        assert_eq!(m.mean, Some(0.0));
        assert_eq!(m.variance, None);
        let m = spec(indep(
            MarginalSpec::student_t(1.0, 0.0, 1.0).unwrap(),
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
        ))
        .moments()
        .unwrap();
        assert_eq!(m.mean, None);
        assert_eq!(m.variance, None);
    }

    #[test]
    fn dependent_numeric_moments() {
        // Dependent t mean equals cov(X, Y) = rho n / (n - 2).
        let m = spec(BivariateSpec::tt(5.0, 0.4).unwrap()).moments().unwrap();
        assert!(
            (m.mean.unwrap() - 0.4 * 5.0 / 3.0).abs() < 1e-4,
            "dependent t mean {:?}",
            m.mean
        );
        // Dependent Pareto mean equals cov + E(X) E(Y).
        let m = spec(BivariateSpec::pareto_pareto(3.0, 1.0, 1.0).unwrap())
            .moments()
            .unwrap();
        let want = 1.0 / (4.0 * 1.0) + 9.0 / 4.0;
        assert!(
            (m.mean.unwrap() - want).abs() < 1e-4,
            "dependent pareto mean {:?}",
            m.mean
        );
        assert!(m.variance.unwrap() > 0.0);
        // Below the thresholds the moments are reported as non-existent.
        let m = spec(BivariateSpec::pareto_pareto(0.5, 1.0, 1.0).unwrap())
            .moments()
            .unwrap();
        assert_eq!(m.mean, None);
        assert_eq!(m.variance, None);
    }

    #[test]
    fn tail_asymptote_behavior() {
        let p = spec(indep(
            MarginalSpec::gaussian(0.0, 1.0).unwrap(),
            MarginalSpec::pareto(3.0, 1.0).unwrap(),
        ));
        // Ratio pdf/asymptote tends to one.
        let ratio = p.pdf(50.0).unwrap() / p.tail_asymptote(50.0).unwrap();
        assert!((0.99..=1.01).contains(&ratio), "ratio {ratio}");
        // Even in z.
        assert_eq!(
            p.tail_asymptote(-7.0).unwrap(),
            p.tail_asymptote(7.0).unwrap()
        );
        // Log-log slope is -(a + 1).
        let z1 = 10.0;
        let z2 = 100.0;
        let slope = (p.tail_asymptote(z2).unwrap().ln() - p.tail_asymptote(z1).unwrap().ln())
            / (z2.ln() - z1.ln());
        assert!((slope + 4.0).abs() < 0.01);
        assert!(p.tail_asymptote(0.0).is_err());
        assert!(gauss_product(0.0).tail_asymptote(5.0).is_err());
    }

    #[test]
    fn sampling_support_and_determinism() {
        let pp = spec(BivariateSpec::pareto_pareto(2.0, 1.0, 1.5).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zs = pp.sample(&mut rng, 100_000);
        assert!(zs.iter().all(|&z| z >= 1.5));
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(pp.sample(&mut a, 64), pp.sample(&mut b, 64));
    }

    #[test]
    fn independent_t_sample_variance() {
        let p = spec(indep(
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
            MarginalSpec::student_t(5.0, 0.0, 1.0).unwrap(),
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let zs = p.sample(&mut rng, n);
        let mean = zs.iter().sum::<f64>() / n as f64;
        let var = zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n as f64;
        let m4 = zs.iter().map(|z| (z - mean).powi(4)).sum::<f64>() / n as f64;
        let se = ((m4 - var * var) / n as f64).sqrt();
        let want = 25.0 / 9.0;
        assert!((var - want).abs() < 3.0 * se, "var {var} vs {want} (se {se})");
    }

    #[test]
    fn quantile_round_trip() {
        let closed = spec(BivariateSpec::logn_logn(0.0, 0.0, 1.0, 0.5, 0.2).unwrap());
        for &p in &[0.05, 0.5, 0.99] {
            let z = closed.quantile(p).unwrap();
            assert!((closed.cdf(z).unwrap() - p).abs() < 1e-8);
        }
        let quad = spec(BivariateSpec::tt(5.0, 0.0).unwrap());
        for &p in &[0.1, 0.5, 0.9] {
            let z = quad.quantile(p).unwrap();
            assert!((quad.cdf(z).unwrap() - p).abs() < 1e-6);
        }
    }

    #[test]
    fn strategy_control() {
        // Forcing a closed form where none exists fails at construction.
        assert!(matches!(
            ProductSpec::with_config(
                BivariateSpec::tt(5.0, 0.0).unwrap(),
                QuadratureConfig::default(),
                Strategy::ClosedForm
            ),
            Err(Error::Unsupported(_))
        ));
        // Non-centered Gaussian pair has no closed form either.
        let shifted = BivariateSpec::gauss_gauss(1.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert!(!spec(shifted.clone()).has_closed_form());
        // But it evaluates by quadrature and integrates sensibly.
        let p = spec(shifted);
        assert!(p.pdf(0.7).unwrap() > 0.0);
    }
}
