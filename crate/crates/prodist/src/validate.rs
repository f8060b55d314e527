//! Monte Carlo experiment harness: simulate product samples, refit the free
//! parameters on every replication, and emit plot-ready density and tail
//! grids together with estimator-error summaries.
//!
//! Replication `i` draws from a stream derived from `(seed, i)`, so batches
//! are reproducible regardless of execution order; with the `parallel`
//! feature replications run on a thread pool.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fit::{fit_mle, ks_statistic, param_value, FitProblem, FreeParam};
use crate::product::ProductSpec;
use alloc::string::String;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Which artifacts an experiment produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Outputs {
    pub pdf_grid: bool,
    pub tail_grid: bool,
    pub error_boxplot: bool,
    pub ks_check: bool,
}

/// One simulation experiment: a true product law, a sampling budget, and the
/// set of parameters to re-estimate per replication.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub spec: ProductSpec,
    pub sample_size: usize,
    pub replications: usize,
    pub seed: u64,
    pub outputs: Outputs,
    /// Free parameters for the per-replication fits (`error_boxplot`).
    pub free: Vec<FreeParam>,
    /// Multistart count forwarded to every fit.
    pub multistart: usize,
}

impl ExperimentPlan {
    pub fn new(spec: ProductSpec) -> Self {
        ExperimentPlan {
            spec,
            sample_size: 1000,
            replications: 100,
            seed: 0,
            outputs: Outputs::default(),
            free: Vec::new(),
            multistart: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 10 {
            return Err(Error::InvalidParameter(
                "sample_size must be at least 10".into(),
            ));
        }
        if self.replications < 1 {
            return Err(Error::InvalidParameter(
                "replications must be at least 1".into(),
            ));
        }
        if self.outputs.error_boxplot && self.free.is_empty() {
            return Err(Error::InvalidParameter(
                "error_boxplot output requires free parameters".into(),
            ));
        }
        for fp in &self.free {
            // Truth must be readable for the error computation.
            param_value(&self.spec.joint, &fp.name)?;
        }
        Ok(())
    }
}

/// Five-number summary of a replication vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryQuantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let i = h.floor() as usize;
    let frac = h - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

pub fn summarize(values: &[f64]) -> SummaryQuantiles {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    SummaryQuantiles {
        min: sorted[0],
        q25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q75: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    }
}

/// Everything an experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub param_names: Vec<String>,
    pub truth: Vec<f64>,
    /// Per-replication estimates (rows of successful replications).
    pub estimates: Vec<Vec<f64>>,
    /// Per-replication errors `estimate - truth`.
    pub errors: Vec<Vec<f64>>,
    /// Five-number summaries of each error column.
    pub error_summary: Vec<SummaryQuantiles>,
    /// KS statistics of each replication sample against the true law.
    pub ks: Vec<f64>,
    /// Replications whose fit or KS evaluation failed.
    pub failures: usize,
    /// `(z, pdf)` evaluations of the true law.
    pub pdf_grid: Vec<(f64, f64)>,
    /// `(z, survival)` evaluations of the true law.
    pub tail_grid: Vec<(f64, f64)>,
}

enum RepOutcome {
    Ok {
        estimates: Vec<f64>,
        errors: Vec<f64>,
        ks: Option<f64>,
    },
    Failed,
}

fn run_replication(plan: &ExperimentPlan, truth: &[f64], index: usize) -> RepOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_stream(index as u64 + 1);
    let sample = plan.spec.sample(&mut rng, plan.sample_size);

    let mut estimates = Vec::new();
    let mut errors = Vec::new();
    if plan.outputs.error_boxplot {
        let mut problem = match FitProblem::new(sample.clone(), plan.spec.clone(), plan.free.clone())
        {
            Ok(p) => p,
            Err(_) => return RepOutcome::Failed,
        };
        problem.multistart = plan.multistart;
        problem.seed = plan.seed.wrapping_mul(1_000_003).wrapping_add(index as u64);
        match fit_mle(&problem) {
            Ok(fit) if fit.loglik.is_finite() => {
                estimates = fit.estimates.iter().map(|(_, v)| *v).collect();
                errors = estimates.iter().zip(truth).map(|(e, t)| e - t).collect();
            }
            _ => return RepOutcome::Failed,
        }
    }

    let ks = if plan.outputs.ks_check {
        match ks_statistic(&sample, &plan.spec) {
            Ok(d) => Some(d),
            Err(_) => return RepOutcome::Failed,
        }
    } else {
        None
    };

    RepOutcome::Ok {
        estimates,
        errors,
        ks,
    }
}

/// Run the full experiment. Deterministic for a fixed plan; replication
/// failures are counted, not fatal.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let truth: Vec<f64> = plan
        .free
        .iter()
        .map(|fp| param_value(&plan.spec.joint, &fp.name))
        .collect::<Result<_>>()?;

    let pdf_grid = if plan.outputs.pdf_grid {
        build_pdf_grid(&plan.spec)?
    } else {
        Vec::new()
    };
    let tail_grid = if plan.outputs.tail_grid {
        let points = tail_grid_points(&plan.spec)?;
        tail_survival_grid(&plan.spec, &points)?
    } else {
        Vec::new()
    };

    let indices: Vec<usize> = (0..plan.replications).collect();
    #[cfg(feature = "parallel")]
    let outcomes: Vec<RepOutcome> = indices
        .par_iter()
        .map(|&i| run_replication(plan, &truth, i))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<RepOutcome> = indices
        .iter()
        .map(|&i| run_replication(plan, &truth, i))
        .collect();

    let mut estimates = Vec::new();
    let mut errors = Vec::new();
    let mut ks = Vec::new();
    let mut failures = 0;
    for outcome in outcomes {
        match outcome {
            RepOutcome::Ok {
                estimates: e,
                errors: err,
                ks: k,
            } => {
                if plan.outputs.error_boxplot {
                    estimates.push(e);
                    errors.push(err);
                }
                if let Some(d) = k {
                    ks.push(d);
                }
            }
            RepOutcome::Failed => failures += 1,
        }
    }

    let error_summary = if errors.is_empty() {
        Vec::new()
    } else {
        (0..plan.free.len())
            .map(|j| {
                let column: Vec<f64> = errors.iter().map(|row| row[j]).collect();
                summarize(&column)
            })
            .collect()
    };

    Ok(ExperimentReport {
        param_names: plan.free.iter().map(|fp| fp.name.clone()).collect(),
        truth,
        estimates,
        errors,
        error_summary,
        ks,
        failures,
        pdf_grid,
        tail_grid,
    })
}

/// Survival function `1 - F(z)` on the given ascending grid, ready for
/// log-log plotting by external tools.
pub fn tail_survival_grid(spec: &ProductSpec, z_points: &[f64]) -> Result<Vec<(f64, f64)>> {
    if z_points.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(
            "tail grid points must be ascending".into(),
        ));
    }
    let cdf = spec.cdf_many(z_points)?;
    Ok(z_points
        .iter()
        .zip(cdf)
        .map(|(&z, f)| (z, (1.0 - f).clamp(0.0, 1.0)))
        .collect())
}

/// Log-spaced grid density, in points per decade.
const POINTS_PER_DECADE: f64 = 200.0;

fn log_spaced(lo: f64, hi: f64) -> Vec<f64> {
    let decades = (hi / lo).log10().max(1e-3);
    let n = ((POINTS_PER_DECADE * decades).ceil() as usize).clamp(16, 4000);
    let l0 = lo.ln();
    let l1 = hi.ln();
    (0..=n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / n as f64).exp())
        .collect()
}

/// Density grid between the 1e-6 and 1 - 1e-6 quantiles, log-spaced on each
/// side of the origin for real-line laws (their densities may diverge at 0,
/// which log spacing approaches but never hits).
fn build_pdf_grid(spec: &ProductSpec) -> Result<Vec<(f64, f64)>> {
    let (supp_lo, _) = spec.support();
    let q_lo = spec.quantile(1e-6)?;
    let q_hi = spec.quantile(1.0 - 1e-6)?;
    let mut zs: Vec<f64> = Vec::new();
    if supp_lo.is_finite() {
        let lo = q_lo.max(supp_lo * (1.0 + 1e-9) + 1e-300);
        zs.extend(log_spaced(lo.max(1e-300), q_hi));
    } else {
        let inner = (q_hi.abs().max(q_lo.abs())) * 1e-8;
        if q_lo < -inner {
            let mut neg: Vec<f64> = log_spaced(inner, -q_lo).into_iter().map(|z| -z).collect();
            neg.reverse();
            zs.extend(neg);
        }
        if q_hi > inner {
            zs.extend(log_spaced(inner, q_hi));
        }
    }
    let mut out = Vec::with_capacity(zs.len());
    for z in zs {
        out.push((z, spec.pdf(z)?));
    }
    Ok(out)
}

fn tail_grid_points(spec: &ProductSpec) -> Result<Vec<f64>> {
    let q_hi = spec.quantile(1.0 - 1e-6)?;
    let median = spec.quantile(0.5)?;
    // Keep the grid in the genuine upper tail: at most eight decades below
    // the extreme quantile, and never at or below zero.
    let lo = median.max(q_hi * 1e-8).max(1e-300);
    let hi = if q_hi > lo { q_hi } else { lo * 1e3 };
    Ok(log_spaced(lo, hi))
}
