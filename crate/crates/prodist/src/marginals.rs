//! The four univariate laws every product formula is built from: Gaussian,
//! log-normal, Student's t (with location and scale) and Pareto of the first
//! kind. Each exposes the PDF, CDF, quantile, raw moments and seeded sampling.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::special;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// A univariate marginal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginalSpec {
    Gaussian { mu: f64, sigma: f64 },
    LogNormal { mu: f64, sigma: f64 },
    /// Student's t with `dof` degrees of freedom, shifted by `loc` and scaled
    /// by `scale`. The standard law has `loc = 0`, `scale = 1`.
    StudentT { dof: f64, loc: f64, scale: f64 },
    /// Pareto of the first kind with tail index `shape` and support
    /// `x > scale`.
    Pareto { shape: f64, scale: f64 },
}

impl MarginalSpec {
    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        let s = MarginalSpec::Gaussian { mu, sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        let s = MarginalSpec::LogNormal { mu, sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn student_t(dof: f64, loc: f64, scale: f64) -> Result<Self> {
        let s = MarginalSpec::StudentT { dof, loc, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        let s = MarginalSpec::Pareto { shape, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        match *self {
            MarginalSpec::Gaussian { mu, sigma } | MarginalSpec::LogNormal { mu, sigma } => {
                if !ok(mu) || !ok(sigma) || sigma <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian/log-normal requires finite mu and sigma > 0, got ({mu}, {sigma})"
                    )));
                }
            }
            MarginalSpec::StudentT { dof, loc, scale } => {
                if !ok(dof) || dof <= 0.0 || !ok(loc) || !ok(scale) || scale <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "student t requires dof > 0 and scale > 0, got (n = {dof}, loc = {loc}, scale = {scale})"
                    )));
                }
            }
            MarginalSpec::Pareto { shape, scale } => {
                if !ok(shape) || shape <= 0.0 || !ok(scale) || scale <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "pareto requires shape > 0 and scale > 0, got ({shape}, {scale})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Support as an open interval `(lo, hi)`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            MarginalSpec::Gaussian { .. } | MarginalSpec::StudentT { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            MarginalSpec::LogNormal { .. } => (0.0, f64::INFINITY),
            MarginalSpec::Pareto { scale, .. } => (scale, f64::INFINITY),
        }
    }

    /// Whether the density is strictly positive in a neighborhood of zero;
    /// products of two such factors have a logarithmic singularity at z = 0.
    pub(crate) fn density_positive_at_zero(&self) -> bool {
        matches!(
            self,
            MarginalSpec::Gaussian { .. } | MarginalSpec::StudentT { .. }
        )
    }

    /// Density; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            MarginalSpec::Gaussian { mu, sigma } => {
                special::std_normal_pdf((x - mu) / sigma) / sigma
            }
            MarginalSpec::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    special::std_normal_pdf((x.ln() - mu) / sigma) / (sigma * x)
                }
            }
            MarginalSpec::StudentT { dof, loc, scale } => {
                let u = (x - loc) / scale;
                student_norm_const(dof) * (1.0 + u * u / dof).powf(-0.5 * (dof + 1.0)) / scale
            }
            MarginalSpec::Pareto { shape, scale } => {
                if x <= scale {
                    0.0
                } else {
                    shape * (scale / x).powf(shape) / x
                }
            }
        }
    }

    /// Log-density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            MarginalSpec::Gaussian { mu, sigma } => {
                let u = (x - mu) / sigma;
                -0.5 * u * u - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
            MarginalSpec::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let u = (x.ln() - mu) / sigma;
                    -0.5 * u * u - sigma.ln() - x.ln() - 0.5 * (2.0 * PI).ln()
                }
            }
            MarginalSpec::StudentT { dof, loc, scale } => {
                let u = (x - loc) / scale;
                student_norm_const(dof).ln()
                    - 0.5 * (dof + 1.0) * (1.0 + u * u / dof).ln()
                    - scale.ln()
            }
            MarginalSpec::Pareto { shape, scale } => {
                if x <= scale {
                    f64::NEG_INFINITY
                } else {
                    shape.ln() + shape * scale.ln() - (shape + 1.0) * x.ln()
                }
            }
        }
    }

    /// Distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            MarginalSpec::Gaussian { mu, sigma } => special::std_normal_cdf((x - mu) / sigma),
            MarginalSpec::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    special::std_normal_cdf((x.ln() - mu) / sigma)
                }
            }
            MarginalSpec::StudentT { dof, loc, scale } => {
                let u = (x - loc) / scale;
                student_cdf_standard(dof, u)
            }
            MarginalSpec::Pareto { shape, scale } => {
                if x <= scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(shape)
                }
            }
        }
    }

    /// Quantile (inverse CDF). Closed form except for Student's t, which is
    /// inverted by a bracketed Newton iteration on the CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "quantile requires p in (0, 1), got {p}"
            )));
        }
        match *self {
            MarginalSpec::Gaussian { mu, sigma } => {
                Ok(mu + sigma * special::std_normal_quantile(p)?)
            }
            MarginalSpec::LogNormal { mu, sigma } => {
                Ok((mu + sigma * special::std_normal_quantile(p)?).exp())
            }
            MarginalSpec::StudentT { dof, loc, scale } => {
                let u = student_quantile_standard(dof, p);
                Ok(loc + scale * u)
            }
            MarginalSpec::Pareto { shape, scale } => Ok(scale * (1.0 - p).powf(-1.0 / shape)),
        }
    }

    /// Raw moment `E[X^k]`, or `None` when it does not exist.
    pub fn raw_moment(&self, k: u32) -> Option<f64> {
        if k == 0 {
            return Some(1.0);
        }
        match *self {
            MarginalSpec::Gaussian { mu, sigma } => Some(gaussian_raw_moment(mu, sigma, k)),
            MarginalSpec::LogNormal { mu, sigma } => {
                let kf = k as f64;
                Some((kf * mu + 0.5 * kf * kf * sigma * sigma).exp())
            }
            MarginalSpec::StudentT { dof, loc, scale } => {
                if dof <= k as f64 {
                    return None;
                }
                // Binomial expansion over the standard-t moments.
                let mut total = 0.0;
                let mut binom = 1.0;
                for i in 0..=k {
                    if i > 0 {
                        binom *= (k - i + 1) as f64 / i as f64;
                    }
                    let std_m = student_standard_raw_moment(dof, i);
                    total += binom * loc.powi((k - i) as i32) * scale.powi(i as i32) * std_m;
                }
                Some(total)
            }
            MarginalSpec::Pareto { shape, scale } => {
                if shape <= k as f64 {
                    None
                } else {
                    Some(shape * scale.powi(k as i32) / (shape - k as f64))
                }
            }
        }
    }

    pub fn mean(&self) -> Option<f64> {
        self.raw_moment(1)
    }

    pub fn variance(&self) -> Option<f64> {
        let m1 = self.raw_moment(1)?;
        let m2 = self.raw_moment(2)?;
        Some(m2 - m1 * m1)
    }

    /// Draw one value.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarginalSpec::Gaussian { mu, sigma } => {
                let n: f64 = StandardNormal.sample(rng);
                mu + sigma * n
            }
            MarginalSpec::LogNormal { mu, sigma } => {
                let n: f64 = StandardNormal.sample(rng);
                (mu + sigma * n).exp()
            }
            MarginalSpec::StudentT { dof, loc, scale } => {
                // Normal over the square root of a scaled chi-square; the
                // gamma draw keeps non-integer degrees of freedom exact.
                let n: f64 = StandardNormal.sample(rng);
                let chi2 = Gamma::new(0.5 * dof, 2.0).expect("valid dof").sample(rng);
                loc + scale * n / (chi2 / dof).sqrt()
            }
            MarginalSpec::Pareto { shape, scale } => {
                let u: f64 = rng.gen();
                scale * (1.0 - u).powf(-1.0 / shape)
            }
        }
    }

    /// Draw `count` i.i.d. values; deterministic for a fixed RNG stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }
}

fn student_norm_const(dof: f64) -> f64 {
    let ln_c = special::ln_gamma(0.5 * (dof + 1.0)).unwrap_or(f64::NAN)
        - special::ln_gamma(0.5 * dof).unwrap_or(f64::NAN)
        - 0.5 * (dof * PI).ln();
    ln_c.exp()
}

fn student_cdf_standard(dof: f64, u: f64) -> f64 {
    if u == 0.0 {
        return 0.5;
    }
    let x = dof / (dof + u * u);
    let tail = 0.5 * special::regularized_incomplete_beta(0.5 * dof, 0.5, x).unwrap_or(f64::NAN);
    if u > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

fn student_quantile_standard(dof: f64, p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    // Work on the lower half and mirror.
    let pm = p.min(1.0 - p);
    // Bracket the root, expanding geometrically.
    let mut hi = 0.0;
    let mut lo = -1.0;
    let mut guard = 0;
    while student_cdf_standard(dof, lo) > pm {
        lo *= 4.0;
        guard += 1;
        if guard > 600 {
            break;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = student_cdf_standard(dof, u) - pm;
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        if f.abs() < 1e-15 {
            break;
        }
        let dens = student_norm_const(dof) * (1.0 + u * u / dof).powf(-0.5 * (dof + 1.0));
        let next = if dens > 0.0 { u - f / dens } else { f64::NAN };
        u = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-14 * (1.0 + u.abs()) {
            break;
        }
    }
    if p < 0.5 {
        u
    } else {
        -u
    }
}

fn gaussian_raw_moment(mu: f64, sigma: f64, k: u32) -> f64 {
    // E[X^k] = mu E[X^{k-1}] + (k-1) sigma^2 E[X^{k-2}]
    let mut prev = 1.0; // k = 0
    let mut cur = mu; // k = 1
    for j in 2..=k {
        let next = mu * cur + (j - 1) as f64 * sigma * sigma * prev;
        prev = cur;
        cur = next;
    }
    if k == 0 {
        1.0
    } else {
        cur
    }
}

fn student_standard_raw_moment(dof: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k % 2 == 1 {
        return 0.0; // odd moments vanish for k < dof
    }
    let half = k / 2;
    let mut m = 1.0;
    for j in 1..=half {
        m *= (2.0 * j as f64 - 1.0) * dof / (dof - 2.0 * j as f64);
    }
    m
}
