//! Numerical maximum-likelihood estimation of product-distribution parameters
//! from a sample of `Z = XY` values, plus goodness-of-fit support.
//!
//! Free parameters are named, mapped into an unconstrained space (log for
//! positive parameters, atanh for correlations, identity for locations) and
//! optimized with a multistart Nelder-Mead simplex; quadrature-backed
//! likelihoods make numerical gradients too noisy for derivative-based
//! methods. Scale non-identifiability is built into the parameter map: from
//! product data only combined scales can be inferred, so the Gaussian pair
//! exposes `sigma_prod`, the log-normal pair `sigma_z_sq` and the Pareto
//! pairs `theta_prod`; attempts to free both individual scales are rejected.

#[allow(unused_imports)]
use num_traits::Float;

use crate::bivariate::BivariateSpec;
use crate::error::{Error, Result};
use crate::marginals::MarginalSpec;
use crate::product::ProductSpec;
use crate::quadrature::QuadratureConfig;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Map between a parameter's natural scale and the unconstrained space the
/// optimizer works in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// Positive parameters: optimizer sees `ln(v)`.
    Log,
    /// Correlations in (-1, 1): optimizer sees `atanh(v)`.
    Atanh,
    /// Unbounded locations.
    Identity,
}

impl Transform {
    pub fn to_unconstrained(self, v: f64) -> f64 {
        match self {
            Transform::Log => v.ln(),
            Transform::Atanh => 0.5 * ((1.0 + v) / (1.0 - v)).ln(),
            Transform::Identity => v,
        }
    }

    pub fn to_natural(self, t: f64) -> f64 {
        match self {
            Transform::Log => t.exp(),
            Transform::Atanh => {
                let e = (2.0 * t).exp();
                (e - 1.0) / (e + 1.0)
            }
            Transform::Identity => t,
        }
    }
}

/// One free parameter with box bounds on the natural scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeParam {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl FreeParam {
    /// Free parameter with wide default bounds appropriate to its transform.
    pub fn new(name: &str) -> Self {
        let (lower, upper) = match transform_for_name(name) {
            Transform::Log => (1e-8, 1e8),
            Transform::Atanh => (-1.0 + 1e-9, 1.0 - 1e-9),
            Transform::Identity => (-1e12, 1e12),
        };
        FreeParam {
            name: name.to_string(),
            lower,
            upper,
        }
    }

    pub fn with_bounds(name: &str, lower: f64, upper: f64) -> Self {
        FreeParam {
            name: name.to_string(),
            lower,
            upper,
        }
    }
}

/// Nelder-Mead settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Initial displacement of the non-base vertices, in transformed space.
    pub initial_step: f64,
    /// Convergence tolerance on the simplex diameter.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            initial_step: 0.5,
            tol: 1e-8,
            max_iters: 2000,
        }
    }
}

/// A maximum-likelihood problem: data, a family template carrying the fixed
/// parameter values, and the set of free parameters.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub data: Vec<f64>,
    pub template: ProductSpec,
    pub free: Vec<FreeParam>,
    pub multistart: usize,
    pub options: SimplexOptions,
    pub quad: QuadratureConfig,
    pub seed: u64,
    /// Optional natural-scale start overriding the built-in seed heuristics.
    pub init: Option<Vec<f64>>,
}

impl FitProblem {
    pub fn new(data: Vec<f64>, template: ProductSpec, free: Vec<FreeParam>) -> Result<Self> {
        let quad = template.quad;
        let problem = FitProblem {
            data,
            template,
            free,
            multistart: 5,
            options: SimplexOptions::default(),
            quad,
            seed: 0,
            init: None,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.is_empty() {
            return Err(Error::InvalidParameter("fit data must be nonempty".into()));
        }
        if self.free.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one free parameter is required".into(),
            ));
        }
        for fp in &self.free {
            // Resolve the name against the family now so typos fail early.
            param_transform(&self.template.joint, &fp.name)?;
            if !(fp.lower < fp.upper) {
                return Err(Error::InvalidParameter(format!(
                    "bounds for {} are empty: ({}, {})",
                    fp.name, fp.lower, fp.upper
                )));
            }
        }
        if let Some(init) = &self.init {
            if init.len() != self.free.len() {
                return Err(Error::InvalidParameter(
                    "init length must match the number of free parameters".into(),
                ));
            }
        }
        Ok(())
    }

    /// Support lower bound with every free positive parameter pushed to its
    /// lower box bound: the widest support the free family can reach. Data at
    /// or below it can never carry positive density.
    fn maximal_support_lo(&self) -> f64 {
        let mut joint = self.template.joint.clone();
        for fp in &self.free {
            if let Ok(Transform::Log) = param_transform(&joint, &fp.name) {
                let v = fp.lower.max(1e-300);
                let _ = apply_param(&mut joint, &fp.name, v);
            }
        }
        let (xlo, _) = joint.marginal_x().support();
        let (ylo, _) = joint.marginal_y().support();
        if xlo >= 0.0 && ylo >= 0.0 {
            xlo * ylo
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Estimates on the natural scale, in the order of the free parameters.
    pub estimates: Vec<(String, f64)>,
    /// Log-likelihood at the estimate, recomputed at full quadrature quality.
    pub loglik: f64,
    pub converged: bool,
    /// Simplex iterations of the winning start.
    pub iterations: usize,
    pub starts_tried: usize,
    /// Points dropped because they lie at or outside the maximal support.
    pub excluded_points: usize,
}

// --- named parameter map -------------------------------------------------------

fn transform_for_name(name: &str) -> Transform {
    match name {
        "rho" => Transform::Atanh,
        "mu_z" | "mu_x" | "mu_y" | "loc_x" | "loc_y" => Transform::Identity,
        _ => Transform::Log,
    }
}

/// Transform for a named parameter, validating the name against the family.
pub fn param_transform(joint: &BivariateSpec, name: &str) -> Result<Transform> {
    // Validation happens by attempting to apply a representative value.
    let mut probe = joint.clone();
    let t = transform_for_name(name);
    let v = match t {
        Transform::Log => 1.0,
        Transform::Atanh => 0.0,
        Transform::Identity => 0.0,
    };
    apply_param(&mut probe, name, v)?;
    Ok(t)
}

/// Set one named parameter on a joint spec.
///
/// Family-level names encode the identifiable combinations: `sigma_prod`
/// (Gaussian pair, sets `sigma_x = v, sigma_y = 1`), `mu_z`/`sigma_z_sq`
/// (log-normal pair), `n`/`rho` (t pair), `a`/`theta_prod` (Pareto pair).
/// Independent pairs use per-coordinate names (`mu_x`, `sigma_x`, `n_y`,
/// `loc_y`, `scale_y`, `a_x`, `theta_x`, ...); an independent Pareto pair
/// additionally accepts `a` (shared shape) and only `theta_prod` for scale.
pub fn apply_param(joint: &mut BivariateSpec, name: &str, v: f64) -> Result<()> {
    let unknown = || {
        Err(Error::InvalidParameter(format!(
            "parameter '{name}' is not free-fittable for this family"
        )))
    };
    match joint {
        BivariateSpec::GaussGauss {
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
            rho,
        } => match name {
            "sigma_prod" => {
                if *mu_x != 0.0 || *mu_y != 0.0 {
                    return Err(Error::InvalidParameter(
                        "sigma_prod fitting requires the centered Gaussian pair".into(),
                    ));
                }
                *sigma_x = v;
                *sigma_y = 1.0;
                Ok(())
            }
            "rho" => {
                *rho = v;
                Ok(())
            }
            _ => unknown(),
        },
        BivariateSpec::LogNLogN {
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
            rho,
        } => match name {
            "mu_z" => {
                *mu_x = v;
                *mu_y = 0.0;
                Ok(())
            }
            "sigma_z_sq" => {
                if v <= 0.0 {
                    return Err(Error::InvalidParameter("sigma_z_sq must be positive".into()));
                }
                let s = (v / (2.0 * (1.0 + *rho))).sqrt();
                *sigma_x = s;
                *sigma_y = s;
                Ok(())
            }
            _ => unknown(),
        },
        BivariateSpec::TT { dof, rho } => match name {
            "n" => {
                *dof = v;
                Ok(())
            }
            "rho" => {
                *rho = v;
                Ok(())
            }
            _ => unknown(),
        },
        BivariateSpec::ParetoPareto {
            shape,
            theta_x,
            theta_y,
        } => match name {
            "a" => {
                *shape = v;
                Ok(())
            }
            "theta_prod" => {
                *theta_x = v;
                *theta_y = 1.0;
                Ok(())
            }
            _ => unknown(),
        },
        BivariateSpec::Independent { x, y } => {
            let both_pareto = matches!(
                (&*x, &*y),
                (MarginalSpec::Pareto { .. }, MarginalSpec::Pareto { .. })
            );
            if both_pareto {
                match name {
                    "a" => {
                        apply_marginal_param(x, "a", v)?;
                        apply_marginal_param(y, "a", v)?;
                        return Ok(());
                    }
                    "theta_prod" => {
                        apply_marginal_param(x, "theta", v)?;
                        apply_marginal_param(y, "theta", 1.0)?;
                        return Ok(());
                    }
                    "theta_x" | "theta_y" => {
                        // Only the product of the scales is identifiable from
                        // product data.
                        return Err(Error::InvalidParameter(
                            "individual Pareto scales are not identifiable from product data; \
                             free 'theta_prod' instead"
                                .into(),
                        ));
                    }
                    _ => {}
                }
            }
            if let Some(base) = name.strip_suffix("_x") {
                apply_marginal_param(x, base, v)
            } else if let Some(base) = name.strip_suffix("_y") {
                apply_marginal_param(y, base, v)
            } else {
                unknown()
            }
        }
    }
}

fn apply_marginal_param(m: &mut MarginalSpec, base: &str, v: f64) -> Result<()> {
    fn unknown(base: &str) -> Result<()> {
        Err(Error::InvalidParameter(format!(
            "marginal parameter '{base}' does not exist for this family"
        )))
    }
    match m {
        MarginalSpec::Gaussian { mu, sigma } | MarginalSpec::LogNormal { mu, sigma } => match base {
            "mu" => {
                *mu = v;
                Ok(())
            }
            "sigma" => {
                *sigma = v;
                Ok(())
            }
            _ => unknown(base),
        },
        MarginalSpec::StudentT { dof, loc, scale } => match base {
            "n" => {
                *dof = v;
                Ok(())
            }
            "loc" => {
                *loc = v;
                Ok(())
            }
            "scale" => {
                *scale = v;
                Ok(())
            }
            _ => unknown(base),
        },
        MarginalSpec::Pareto { shape, scale } => match base {
            "a" => {
                *shape = v;
                Ok(())
            }
            "theta" => {
                *scale = v;
                Ok(())
            }
            _ => unknown(base),
        },
    }
}

/// Read one named parameter (the identifiable combination) off a joint spec.
pub fn param_value(joint: &BivariateSpec, name: &str) -> Result<f64> {
    let missing = || {
        Err(Error::InvalidParameter(format!(
            "parameter '{name}' is not defined for this family"
        )))
    };
    match joint {
        BivariateSpec::GaussGauss {
            sigma_x,
            sigma_y,
            rho,
            ..
        } => match name {
            "sigma_prod" => Ok(sigma_x * sigma_y),
            "rho" => Ok(*rho),
            _ => missing(),
        },
        BivariateSpec::LogNLogN {
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
            rho,
        } => match name {
            "mu_z" => Ok(mu_x + mu_y),
            "sigma_z_sq" => {
                Ok(sigma_x * sigma_x + sigma_y * sigma_y + 2.0 * rho * sigma_x * sigma_y)
            }
            _ => missing(),
        },
        BivariateSpec::TT { dof, rho } => match name {
            "n" => Ok(*dof),
            "rho" => Ok(*rho),
            _ => missing(),
        },
        BivariateSpec::ParetoPareto {
            shape,
            theta_x,
            theta_y,
        } => match name {
            "a" => Ok(*shape),
            "theta_prod" => Ok(theta_x * theta_y),
            _ => missing(),
        },
        BivariateSpec::Independent { x, y } => {
            let both_pareto = matches!(
                (x, y),
                (MarginalSpec::Pareto { .. }, MarginalSpec::Pareto { .. })
            );
            if both_pareto {
                if name == "a" {
                    if let MarginalSpec::Pareto { shape, .. } = x {
                        return Ok(*shape);
                    }
                }
                if name == "theta_prod" {
                    if let (
                        MarginalSpec::Pareto { scale: tx, .. },
                        MarginalSpec::Pareto { scale: ty, .. },
                    ) = (x, y)
                    {
                        return Ok(tx * ty);
                    }
                }
            }
            if let Some(base) = name.strip_suffix("_x") {
                marginal_param_value(x, base).ok_or(()).or_else(|_| missing())
            } else if let Some(base) = name.strip_suffix("_y") {
                marginal_param_value(y, base).ok_or(()).or_else(|_| missing())
            } else {
                missing()
            }
        }
    }
}

fn marginal_param_value(m: &MarginalSpec, base: &str) -> Option<f64> {
    match (m, base) {
        (MarginalSpec::Gaussian { mu, .. }, "mu")
        | (MarginalSpec::LogNormal { mu, .. }, "mu") => Some(*mu),
        (MarginalSpec::Gaussian { sigma, .. }, "sigma")
        | (MarginalSpec::LogNormal { sigma, .. }, "sigma") => Some(*sigma),
        (MarginalSpec::StudentT { dof, .. }, "n") => Some(*dof),
        (MarginalSpec::StudentT { loc, .. }, "loc") => Some(*loc),
        (MarginalSpec::StudentT { scale, .. }, "scale") => Some(*scale),
        (MarginalSpec::Pareto { shape, .. }, "a") => Some(*shape),
        (MarginalSpec::Pareto { scale, .. }, "theta") => Some(*scale),
        _ => None,
    }
}

// --- likelihood -----------------------------------------------------------------

/// Sum of log product densities; `-inf` (a sentinel, not an error) when any
/// point carries zero density or a density evaluation fails.
pub fn log_likelihood(spec: &ProductSpec, data: &[f64]) -> f64 {
    let mut failures = 0usize;
    log_likelihood_with(spec, data, &spec.quad, &mut failures)
}

/// Likelihood with an explicit quadrature configuration and a counter for
/// density evaluations that failed to converge.
pub(crate) fn log_likelihood_with(
    spec: &ProductSpec,
    data: &[f64],
    cfg: &QuadratureConfig,
    failures: &mut usize,
) -> f64 {
    let mut total = 0.0;
    for &z in data {
        let lp = match spec.ln_pdf_with_cfg(z, cfg) {
            Ok(v) => v,
            Err(Error::SingularPoint { .. }) => {
                // z = 0 is a measure-zero point where symmetric product
                // densities diverge; nudge by one representable step.
                let z_adj = if z == 0.0 {
                    f64::MIN_POSITIVE
                } else {
                    z * (1.0 + f64::EPSILON)
                };
                match spec.ln_pdf_with_cfg(z_adj, cfg) {
                    Ok(v) => v,
                    Err(_) => {
                        *failures += 1;
                        return f64::NEG_INFINITY;
                    }
                }
            }
            Err(_) => {
                *failures += 1;
                return f64::NEG_INFINITY;
            }
        };
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += lp;
    }
    total
}

// --- Nelder-Mead -----------------------------------------------------------------

pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub fval: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` with the standard Nelder-Mead moves (reflection, expansion,
/// contraction, shrink). Convergence is declared when the simplex diameter
/// drops below `opts.tol`.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &SimplexOptions,
) -> SimplexOutcome {
    let n = x0.len();
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((f(x0), x0.to_vec()));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push((f(&v), v));
    }

    let (alpha, gamma, beta, delta) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
        let diameter = simplex[1..]
            .iter()
            .map(|(_, v)| {
                v.iter()
                    .zip(&simplex[0].1)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if diameter < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(_, v)| v[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = (0..n)
            .map(|i| centroid[i] + alpha * (centroid[i] - worst.1[i]))
            .collect();
        let f_reflect = f(&reflect);

        if f_reflect < simplex[0].0 {
            let expand: Vec<f64> = (0..n)
                .map(|i| centroid[i] + gamma * (centroid[i] - worst.1[i]))
                .collect();
            let f_expand = f(&expand);
            simplex[n] = if f_expand < f_reflect {
                (f_expand, expand)
            } else {
                (f_reflect, reflect)
            };
        } else if f_reflect < simplex[n - 1].0 {
            simplex[n] = (f_reflect, reflect);
        } else {
            let (f_anchor, anchor) = if f_reflect < worst.0 {
                (f_reflect, &reflect)
            } else {
                (worst.0, &worst.1)
            };
            let contract: Vec<f64> = (0..n)
                .map(|i| centroid[i] + beta * (anchor[i] - centroid[i]))
                .collect();
            let f_contract = f(&contract);
            if f_contract < f_anchor {
                simplex[n] = (f_contract, contract);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].1.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = entry
                        .1
                        .iter()
                        .zip(&best)
                        .map(|(x, b)| b + delta * (x - b))
                        .collect();
                    *entry = (f(&v), v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    let best = simplex.swap_remove(0);
    SimplexOutcome {
        x: best.1,
        fval: best.0,
        iterations,
        converged,
    }
}

// --- seeding ------------------------------------------------------------------------

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / xs.len() as f64;
    m4 / (m2 * m2)
}

/// Degrees-of-freedom seed from the sample kurtosis; heavy-tailed samples
/// (kurtosis unusable) fall back to 1.
fn dof_seed(data: &[f64]) -> f64 {
    let k = sample_kurtosis(data);
    if k.is_finite() && k > 3.2 && k < 1e6 {
        ((4.0 * k - 6.0) / (k - 3.0)).clamp(0.05, 200.0)
    } else {
        1.0
    }
}

/// Hill estimator of the tail index over the top decile of |z|.
fn hill_seed(data: &[f64]) -> f64 {
    let mut magnitudes: Vec<f64> = data.iter().map(|z| z.abs()).filter(|z| *z > 0.0).collect();
    if magnitudes.len() < 20 {
        return 1.0;
    }
    magnitudes.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let k = (magnitudes.len() / 10).max(10).min(magnitudes.len() - 1);
    let x_k = magnitudes[k];
    if x_k <= 0.0 {
        return 1.0;
    }
    let h = magnitudes[..k].iter().map(|x| (x / x_k).ln()).sum::<f64>() / k as f64;
    if h > 0.0 {
        (1.0 / h).clamp(0.05, 200.0)
    } else {
        1.0
    }
}

fn geometric_mean_abs(data: &[f64]) -> f64 {
    let logs: Vec<f64> = data
        .iter()
        .filter(|z| **z != 0.0)
        .map(|z| z.abs().ln())
        .collect();
    if logs.is_empty() {
        1.0
    } else {
        mean(&logs).exp()
    }
}

fn seed_for(name: &str, data: &[f64]) -> f64 {
    match name {
        "n" | "n_x" | "n_y" => dof_seed(data),
        "a" | "a_x" | "a_y" => hill_seed(data),
        "rho" => 0.0,
        "theta_prod" | "theta_x" | "theta_y" => {
            let min_pos = data
                .iter()
                .copied()
                .filter(|z| *z > 0.0)
                .fold(f64::INFINITY, f64::min);
            if min_pos.is_finite() {
                0.95 * min_pos
            } else {
                1.0
            }
        }
        "mu_z" => {
            let logs: Vec<f64> = data.iter().filter(|z| **z > 0.0).map(|z| z.ln()).collect();
            if logs.is_empty() {
                0.0
            } else {
                mean(&logs)
            }
        }
        "sigma_z_sq" => {
            let logs: Vec<f64> = data.iter().filter(|z| **z > 0.0).map(|z| z.ln()).collect();
            if logs.len() < 2 {
                1.0
            } else {
                let m = mean(&logs);
                (logs.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / logs.len() as f64)
                    .max(1e-6)
            }
        }
        "mu_x" | "mu_y" | "loc_x" | "loc_y" => 0.0,
        // Scale-like parameters: quantile (geometric-mean) matching.
        _ => geometric_mean_abs(data),
    }
}

// --- the fit driver --------------------------------------------------------------------

/// Maximize the product log-likelihood over the free parameters with a
/// multistart Nelder-Mead search. Deterministic for a fixed `problem.seed`.
pub fn fit_mle(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let support_lo = problem.maximal_support_lo();
    let data: Vec<f64> = problem
        .data
        .iter()
        .copied()
        .filter(|z| *z > support_lo)
        .collect();
    let excluded_points = problem.data.len() - data.len();
    if data.is_empty() {
        return Err(Error::InvalidParameter(
            "all data points lie outside the maximal support".into(),
        ));
    }

    let transforms: Vec<Transform> = problem
        .free
        .iter()
        .map(|fp| param_transform(&problem.template.joint, &fp.name))
        .collect::<Result<_>>()?;

    let seeds_natural: Vec<f64> = match &problem.init {
        Some(init) => init.clone(),
        None => problem
            .free
            .iter()
            .map(|fp| seed_for(&fp.name, &data))
            .collect(),
    };
    let base: Vec<f64> = seeds_natural
        .iter()
        .zip(&transforms)
        .zip(&problem.free)
        .map(|((&v, t), fp)| {
            let clamped = v.clamp(
                fp.lower + 1e-12 * (1.0 + fp.lower.abs()),
                fp.upper - 1e-12 * (1.0 + fp.upper.abs()),
            );
            t.to_unconstrained(clamped)
        })
        .collect();

    // Relaxed quadrature during optimization; the final value is recomputed
    // at the requested quality below.
    let relaxed = problem.quad.with_rel_tol(problem.quad.rel_tol.max(1e-6));
    let objective = |t_coords: &[f64]| -> f64 {
        let mut joint = problem.template.joint.clone();
        for ((t, fp), tr) in t_coords.iter().zip(&problem.free).zip(&transforms) {
            let v = tr.to_natural(*t);
            if !v.is_finite() || v < fp.lower || v > fp.upper {
                return f64::INFINITY;
            }
            if apply_param(&mut joint, &fp.name, v).is_err() {
                return f64::INFINITY;
            }
        }
        let spec = match ProductSpec::with_config(joint, relaxed, problem.template.strategy) {
            Ok(s) => s,
            Err(_) => return f64::INFINITY,
        };
        let mut failures = 0usize;
        let ll = log_likelihood_with(&spec, &data, &relaxed, &mut failures);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut best: Option<SimplexOutcome> = None;
    let starts = problem.multistart.max(1);
    for start_idx in 0..starts {
        let mut x0 = base.clone();
        if start_idx > 0 {
            for coord in x0.iter_mut() {
                *coord += rng.gen_range(-2.0..2.0);
            }
        }
        let outcome = nelder_mead(objective, &x0, &problem.options);
        let better = match &best {
            None => outcome.fval.is_finite(),
            Some(b) => outcome.fval.is_finite() && outcome.fval < b.fval,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.ok_or(Error::AllStartsFailed)?;
    if !best.fval.is_finite() {
        return Err(Error::AllStartsFailed);
    }

    let estimates: Vec<(String, f64)> = best
        .x
        .iter()
        .zip(&problem.free)
        .zip(&transforms)
        .map(|((t, fp), tr)| (fp.name.clone(), tr.to_natural(*t)))
        .collect();
    let mut joint = problem.template.joint.clone();
    for (name, v) in &estimates {
        apply_param(&mut joint, name, *v)?;
    }
    let final_spec = ProductSpec::with_config(joint, problem.quad, problem.template.strategy)?;
    let mut failures = 0usize;
    let loglik = log_likelihood_with(&final_spec, &data, &problem.quad, &mut failures);

    Ok(FitResult {
        estimates,
        loglik,
        converged: best.converged && loglik.is_finite(),
        iterations: best.iterations,
        starts_tried: starts,
        excluded_points,
    })
}

// --- goodness of fit ----------------------------------------------------------------------

/// Two-sided Kolmogorov-Smirnov statistic between the empirical CDF of
/// `data` and the model CDF.
pub fn ks_statistic(data: &[f64], spec: &ProductSpec) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("ks data must be nonempty".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let cdf = spec.cdf_many(&sorted)?;
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, f) in cdf.iter().enumerate() {
        d = d.max(((i + 1) as f64 / n - f).max(f - i as f64 / n));
    }
    Ok(d)
}

// --- marginal fits (used by the transaction-analysis pipeline) ------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalFamily {
    Gaussian,
    LogNormal,
    StudentT,
    Pareto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalFit {
    pub spec: MarginalSpec,
    pub loglik: f64,
    pub converged: bool,
}

/// Maximum-likelihood fit of one univariate family. Gaussian, log-normal and
/// Pareto have closed-form estimators; Student's t (location/scale/dof) is
/// optimized numerically.
pub fn fit_marginal_mle(data: &[f64], family: MarginalFamily, seed: u64) -> Result<MarginalFit> {
    if data.len() < 2 {
        return Err(Error::InvalidParameter(
            "marginal fit needs at least two points".into(),
        ));
    }
    let n = data.len() as f64;
    match family {
        MarginalFamily::Gaussian => {
            let mu = mean(data);
            let var = data.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
            let spec = MarginalSpec::gaussian(mu, var.sqrt().max(1e-12))?;
            Ok(MarginalFit {
                loglik: data.iter().map(|&x| spec.ln_pdf(x)).sum(),
                spec,
                converged: true,
            })
        }
        MarginalFamily::LogNormal => {
            if data.iter().any(|&x| x <= 0.0) {
                return Err(Error::InvalidParameter(
                    "log-normal requires strictly positive data".into(),
                ));
            }
            let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
            let mu = mean(&logs);
            let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n;
            let spec = MarginalSpec::log_normal(mu, var.sqrt().max(1e-12))?;
            Ok(MarginalFit {
                loglik: data.iter().map(|&x| spec.ln_pdf(x)).sum(),
                spec,
                converged: true,
            })
        }
        MarginalFamily::Pareto => {
            if data.iter().any(|&x| x <= 0.0) {
                return Err(Error::InvalidParameter(
                    "pareto requires strictly positive data".into(),
                ));
            }
            let min = data.iter().copied().fold(f64::INFINITY, f64::min);
            // Keep the support boundary strictly below the smallest point.
            let theta = min * (1.0 - 1e-12);
            let sum_log = data.iter().map(|x| (x / theta).ln()).sum::<f64>();
            if sum_log <= 0.0 {
                return Err(Error::InvalidParameter(
                    "degenerate sample for the pareto estimator".into(),
                ));
            }
            let shape = n / sum_log;
            let spec = MarginalSpec::pareto(shape, theta)?;
            Ok(MarginalFit {
                loglik: data.iter().map(|&x| spec.ln_pdf(x)).sum(),
                spec,
                converged: true,
            })
        }
        MarginalFamily::StudentT => {
            let mut sorted = data.to_vec();
            sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let median = sorted[sorted.len() / 2];
            let q75 = sorted[(sorted.len() * 3) / 4];
            let q25 = sorted[sorted.len() / 4];
            let scale0 = ((q75 - q25) / 1.349).max(1e-6);
            let n0 = {
                let k = sample_kurtosis(data);
                if k.is_finite() && k > 3.2 && k < 1e6 {
                    ((4.0 * k - 6.0) / (k - 3.0)).clamp(0.1, 100.0)
                } else {
                    2.0
                }
            };
            let transforms = [Transform::Log, Transform::Identity, Transform::Log];
            let objective = |t: &[f64]| -> f64 {
                let dof = transforms[0].to_natural(t[0]);
                let loc = t[1];
                let scale = transforms[2].to_natural(t[2]);
                if !(dof.is_finite() && dof > 1e-6 && dof < 1e6 && scale.is_finite() && scale > 0.0)
                {
                    return f64::INFINITY;
                }
                let spec = MarginalSpec::StudentT { dof, loc, scale };
                let ll: f64 = data.iter().map(|&x| spec.ln_pdf(x)).sum();
                if ll.is_finite() {
                    -ll
                } else {
                    f64::INFINITY
                }
            };
            let base = [n0.ln(), median, scale0.ln()];
            let opts = SimplexOptions::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: Option<SimplexOutcome> = None;
            for start in 0..3 {
                let mut x0 = base.to_vec();
                if start > 0 {
                    for c in x0.iter_mut() {
                        *c += rng.gen_range(-1.0..1.0);
                    }
                }
                let out = nelder_mead(objective, &x0, &opts);
                let better = match &best {
                    None => out.fval.is_finite(),
                    Some(b) => out.fval.is_finite() && out.fval < b.fval,
                };
                if better {
                    best = Some(out);
                }
            }
            let best = best.ok_or(Error::AllStartsFailed)?;
            let spec = MarginalSpec::student_t(
                transforms[0].to_natural(best.x[0]),
                best.x[1],
                transforms[2].to_natural(best.x[2]),
            )?;
            Ok(MarginalFit {
                loglik: -best.fval,
                spec,
                converged: best.converged,
            })
        }
    }
}
