//! The transaction-value analysis pipeline: correlation pretest, marginal
//! fits for volumes and prices, and product fits of the transaction value
//! `z = volume * price` done two ways — from the separately fitted marginals
//! ("(x,y) fit") and by direct likelihood maximization on the products
//! ("xy fit").

use crate::error::{CliError, CliResult};
use crate::table::TransactionTable;
use prodist::fit::{
    fit_marginal_mle, fit_mle, ks_statistic, log_likelihood, FitProblem, FreeParam,
    MarginalFamily,
};
use prodist::{BivariateSpec, MarginalSpec, ProductSpec, QuadratureConfig, Strategy};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOptions {
    pub min_rows: usize,
    pub seed: u64,
    pub quad_rel_tol: Option<f64>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            min_rows: 30,
            seed: 0,
            quad_rel_tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Units {
    pub volume: String,
    pub price: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationTest {
    pub pearson_r: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub significant_at_5pct: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginalFitReport {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub loglik: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub params: BTreeMap<String, f64>,
    pub loglik: f64,
    pub ks: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateReport {
    pub family: String,
    pub status: String,
    pub xy_fit: Option<FitSummary>,
    /// Product density assembled from the separately fitted marginals.
    pub marginal_fit: Option<FitSummary>,
    /// sup |f_xy - f_marginal| / sup f_xy over the central grid.
    pub pdf_sup_rel_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Histograms {
    pub volume: Histogram,
    pub price: Histogram,
    pub value: Histogram,
}

#[derive(Debug, Clone, Serialize)]
pub struct PdfCurve {
    pub family: String,
    pub fit_kind: String,
    pub pdf: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValuePdfGrid {
    pub z: Vec<f64>,
    pub curves: Vec<PdfCurve>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub source: String,
    pub rows_used: usize,
    pub rows_skipped_parse: usize,
    pub rows_dropped_nonpositive_volume: usize,
    pub units: Units,
    pub correlation: CorrelationTest,
    pub independence_assumption_violated: bool,
    pub volume_fits: Vec<MarginalFitReport>,
    pub price_fits: Vec<MarginalFitReport>,
    /// Product-distribution candidates, best xy-fit log-likelihood first.
    pub value_fits: Vec<CandidateReport>,
    pub selected_family: Option<String>,
    pub histograms: Histograms,
    pub value_pdf_grid: ValuePdfGrid,
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Two-sided Pearson t-test for zero correlation at the 5% level.
fn correlation_test(xs: &[f64], ys: &[f64]) -> CliResult<CorrelationTest> {
    let n = xs.len();
    let r = pearson(xs, ys);
    let dof = (n - 2) as f64;
    let t_stat = r * (dof / (1.0 - r * r)).sqrt();
    let t_dist = MarginalSpec::student_t(dof, 0.0, 1.0).map_err(CliError::from)?;
    let p_value = 2.0 * (1.0 - t_dist.cdf(t_stat.abs()));
    let significant = p_value < 0.05;
    Ok(CorrelationTest {
        pearson_r: r,
        t_statistic: t_stat,
        p_value,
        significant_at_5pct: significant,
        note: if significant {
            "correlation significant at 5%; independence assumption violated, product fits are \
             reported anyway"
                .to_string()
        } else {
            "correlation not significant at 5%; proceeding under independence".to_string()
        },
    })
}

fn ks_against<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
    let mut sorted = data.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).max(f - i as f64 / n));
    }
    d
}

fn marginal_params(spec: &MarginalSpec) -> BTreeMap<String, f64> {
    let mut map = BTreeMap::new();
    match *spec {
        MarginalSpec::Gaussian { mu, sigma } | MarginalSpec::LogNormal { mu, sigma } => {
            map.insert("mu".into(), mu);
            map.insert("sigma".into(), sigma);
        }
        MarginalSpec::StudentT { dof, loc, scale } => {
            map.insert("n".into(), dof);
            map.insert("loc".into(), loc);
            map.insert("scale".into(), scale);
        }
        MarginalSpec::Pareto { shape, scale } => {
            map.insert("a".into(), shape);
            map.insert("theta".into(), scale);
        }
    }
    map
}

fn marginal_report(name: &str, data: &[f64], family: MarginalFamily, seed: u64) -> Option<MarginalFitReport> {
    let fit = fit_marginal_mle(data, family, seed).ok()?;
    let ks = ks_against(data, |x| fit.spec.cdf(x));
    Some(MarginalFitReport {
        family: name.to_string(),
        params: marginal_params(&fit.spec),
        loglik: fit.loglik,
        ks,
    })
}

/// Freedman-Diaconis histogram normalized to a density.
fn histogram(data: &[f64]) -> Histogram {
    let mut sorted = data.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let q25 = sorted[n / 4];
    let q75 = sorted[(3 * n) / 4];
    let iqr = (q75 - q25).max(0.0);
    let span = sorted[n - 1] - sorted[0];
    let width = if iqr > 0.0 {
        2.0 * iqr / (n as f64).cbrt()
    } else if span > 0.0 {
        span / (n as f64).sqrt().ceil()
    } else {
        1.0
    };
    let bins = ((span / width).ceil() as usize).clamp(1, 10_000);
    let lo = sorted[0];
    let width = if span > 0.0 { span / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &x in &sorted {
        let mut idx = ((x - lo) / width) as usize;
        if idx >= bins {
            idx = bins - 1;
        }
        counts[idx] += 1;
    }
    Histogram {
        edges: (0..=bins).map(|i| lo + width * i as f64).collect(),
        densities: counts
            .iter()
            .map(|&c| c as f64 / (n as f64 * width))
            .collect(),
    }
}

struct Candidate {
    family: &'static str,
    marginal_spec: ProductSpec,
    marginal_params: BTreeMap<String, f64>,
    xy: CliResult<(ProductSpec, BTreeMap<String, f64>, f64, bool)>,
}

fn quad_config(opts: &AnalyzeOptions) -> QuadratureConfig {
    let mut quad = QuadratureConfig::default();
    if let Some(tol) = opts.quad_rel_tol {
        quad.rel_tol = tol;
    }
    quad
}

fn run_xy_fit(
    zs: &[f64],
    template: BivariateSpec,
    free: Vec<FreeParam>,
    init: Vec<f64>,
    opts: &AnalyzeOptions,
) -> CliResult<(ProductSpec, BTreeMap<String, f64>, f64, bool)> {
    let template = ProductSpec::with_config(template, quad_config(opts), Strategy::Auto)?;
    let mut problem = FitProblem::new(zs.to_vec(), template.clone(), free)?;
    problem.seed = opts.seed;
    problem.multistart = 3;
    problem.init = Some(init);
    let fit = fit_mle(&problem)?;
    let mut joint = template.joint.clone();
    for (name, value) in &fit.estimates {
        prodist::fit::apply_param(&mut joint, name, *value)?;
    }
    let spec = ProductSpec::with_config(joint, template.quad, Strategy::Auto)?;
    let params: BTreeMap<String, f64> = fit.estimates.into_iter().collect();
    Ok((spec, params, fit.loglik, fit.converged))
}

pub fn analyze(table: &TransactionTable, opts: &AnalyzeOptions) -> CliResult<AnalysisReport> {
    let n = table.len();
    if n < opts.min_rows {
        return Err(CliError::Data(format!(
            "insufficient data: {n} rows, need at least {}",
            opts.min_rows
        )));
    }
    let volumes = &table.volumes;
    let prices = &table.prices;
    let zs = table.values();
    let prices_all_positive = prices.iter().all(|&p| p > 0.0);

    // Correlation pretest between volumes and prices.
    let correlation = correlation_test(volumes, prices)?;
    let significant = correlation.significant_at_5pct;

    // Marginal fits. Volumes are positive by construction: log-normal and
    // Pareto. Prices: Gaussian and Student's t always, log-normal only when
    // every price is positive.
    let volume_fits: Vec<MarginalFitReport> = [
        marginal_report("log_normal", volumes, MarginalFamily::LogNormal, opts.seed),
        marginal_report("pareto", volumes, MarginalFamily::Pareto, opts.seed),
    ]
    .into_iter()
    .flatten()
    .collect();
    let mut price_fits: Vec<MarginalFitReport> = [
        marginal_report("gaussian", prices, MarginalFamily::Gaussian, opts.seed),
        marginal_report("student_t", prices, MarginalFamily::StudentT, opts.seed),
    ]
    .into_iter()
    .flatten()
    .collect();
    if prices_all_positive {
        if let Some(rep) = marginal_report("log_normal", prices, MarginalFamily::LogNormal, opts.seed)
        {
            price_fits.push(rep);
        }
    }

    let logn_vol = fit_marginal_mle(volumes, MarginalFamily::LogNormal, opts.seed)
        .map_err(CliError::from)?;
    let pareto_vol = fit_marginal_mle(volumes, MarginalFamily::Pareto, opts.seed)
        .map_err(CliError::from)?;
    let t_price =
        fit_marginal_mle(prices, MarginalFamily::StudentT, opts.seed).map_err(CliError::from)?;

    let quad = quad_config(opts);
    let mk_spec = |joint: BivariateSpec| ProductSpec::with_config(joint, quad, Strategy::Auto);

    let mut candidates: Vec<Candidate> = Vec::new();

    // Log-normal volume x Student's t price: always applicable.
    {
        let (mu_v, sigma_v) = match logn_vol.spec {
            MarginalSpec::LogNormal { mu, sigma } => (mu, sigma),
            _ => unreachable!(),
        };
        let (n_p, loc_p, scale_p) = match t_price.spec {
            MarginalSpec::StudentT { dof, loc, scale } => (dof, loc, scale),
            _ => unreachable!(),
        };
        let marginal_spec = mk_spec(
            BivariateSpec::independent(logn_vol.spec, t_price.spec).map_err(CliError::from)?,
        )
        .map_err(CliError::from)?;
        let mut mparams = BTreeMap::new();
        mparams.insert("mu_x".into(), mu_v);
        mparams.insert("sigma_x".into(), sigma_v);
        mparams.insert("n_y".into(), n_p);
        mparams.insert("loc_y".into(), loc_p);
        mparams.insert("scale_y".into(), scale_p);
        // From product data only e^{mu_x} loc_y and e^{mu_x} scale_y are
        // identifiable, so the direct fit pins mu_x = 0 and folds the
        // log-normal location into the t location and scale.
        let template = BivariateSpec::independent(
            MarginalSpec::log_normal(0.0, sigma_v).map_err(CliError::from)?,
            MarginalSpec::student_t(n_p, loc_p * mu_v.exp(), scale_p * mu_v.exp())
                .map_err(CliError::from)?,
        )
        .map_err(CliError::from)?;
        let xy = run_xy_fit(
            &zs,
            template,
            vec![
                FreeParam::new("sigma_x"),
                FreeParam::new("n_y"),
                FreeParam::new("loc_y"),
                FreeParam::new("scale_y"),
            ],
            vec![sigma_v, n_p, loc_p * mu_v.exp(), scale_p * mu_v.exp()],
            opts,
        );
        candidates.push(Candidate {
            family: "logn_x_student_t",
            marginal_spec,
            marginal_params: mparams,
            xy,
        });
    }

    // Log-normal volume x log-normal price: positive prices only. The product
    // is log-normal, so the direct fit is the closed-form Gaussian MLE on
    // ln z.
    if prices_all_positive {
        if let Ok(logn_price) = fit_marginal_mle(prices, MarginalFamily::LogNormal, opts.seed) {
            let marginal_spec = mk_spec(
                BivariateSpec::independent(logn_vol.spec, logn_price.spec)
                    .map_err(CliError::from)?,
            )
            .map_err(CliError::from)?;
            let mut mparams = BTreeMap::new();
            for (k, v) in marginal_params(&logn_vol.spec) {
                mparams.insert(format!("{k}_x"), v);
            }
            for (k, v) in marginal_params(&logn_price.spec) {
                mparams.insert(format!("{k}_y"), v);
            }
            let logs: Vec<f64> = zs.iter().map(|z| z.ln()).collect();
            let mu_z = logs.iter().sum::<f64>() / logs.len() as f64;
            let var_z = logs.iter().map(|l| (l - mu_z) * (l - mu_z)).sum::<f64>()
                / logs.len() as f64;
            let s = (var_z / 2.0).sqrt().max(1e-12);
            let xy = BivariateSpec::logn_logn(mu_z, 0.0, s, s, 0.0)
                .map_err(CliError::from)
                .and_then(|j| mk_spec(j).map_err(CliError::from))
                .map(|spec| {
                    let ll = log_likelihood(&spec, &zs);
                    let mut params = BTreeMap::new();
                    params.insert("mu_z".to_string(), mu_z);
                    params.insert("sigma_z_sq".to_string(), var_z);
                    (spec, params, ll, true)
                });
            candidates.push(Candidate {
                family: "logn_x_logn",
                marginal_spec,
                marginal_params: mparams,
                xy,
            });
        }
    }

    // Pareto volume x log-normal price: the alternative pairing; positive
    // prices only. Expected to rank poorly when small volumes are common, but
    // kept for comparability.
    if prices_all_positive {
        if let Ok(logn_price) = fit_marginal_mle(prices, MarginalFamily::LogNormal, opts.seed) {
            let (a_v, theta_v) = match pareto_vol.spec {
                MarginalSpec::Pareto { shape, scale } => (shape, scale),
                _ => unreachable!(),
            };
            let (mu_p, sigma_p) = match logn_price.spec {
                MarginalSpec::LogNormal { mu, sigma } => (mu, sigma),
                _ => unreachable!(),
            };
            let marginal_spec = mk_spec(
                BivariateSpec::independent(pareto_vol.spec, logn_price.spec)
                    .map_err(CliError::from)?,
            )
            .map_err(CliError::from)?;
            let mut mparams = BTreeMap::new();
            mparams.insert("a_x".into(), a_v);
            mparams.insert("theta_x".into(), theta_v);
            mparams.insert("mu_y".into(), mu_p);
            mparams.insert("sigma_y".into(), sigma_p);
            let template = BivariateSpec::independent(
                MarginalSpec::pareto(a_v, theta_v * mu_p.exp()).map_err(CliError::from)?,
                MarginalSpec::log_normal(0.0, sigma_p).map_err(CliError::from)?,
            )
            .map_err(CliError::from)?;
            let xy = run_xy_fit(
                &zs,
                template,
                vec![
                    FreeParam::new("a_x"),
                    FreeParam::new("theta_x"),
                    FreeParam::new("sigma_y"),
                ],
                vec![a_v, theta_v * mu_p.exp(), sigma_p],
                opts,
            );
            candidates.push(Candidate {
                family: "pareto_x_logn",
                marginal_spec,
                marginal_params: mparams,
                xy,
            });
        }
    }

    // Central grid for plotting and for the xy-vs-marginal sup-norm gap.
    let mut sorted_z = zs.clone();
    sorted_z.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let z_lo = sorted_z[(0.01 * (n - 1) as f64).round() as usize];
    let z_hi = sorted_z[(0.99 * (n - 1) as f64).round() as usize];
    let grid_n = 201;
    let z_grid: Vec<f64> = (0..grid_n)
        .map(|i| z_lo + (z_hi - z_lo) * i as f64 / (grid_n - 1) as f64)
        .collect();

    let mut curves = Vec::new();
    let mut reports = Vec::new();
    for cand in candidates {
        let marg_ll = log_likelihood(&cand.marginal_spec, &zs);
        let marg_ks = ks_statistic(&zs, &cand.marginal_spec).map_err(CliError::from)?;
        let marginal_fit = Some(FitSummary {
            params: cand.marginal_params.clone(),
            loglik: marg_ll,
            ks: marg_ks,
            converged: true,
        });
        let marg_pdf: Vec<f64> = z_grid
            .iter()
            .map(|&z| cand.marginal_spec.pdf(z).unwrap_or(f64::NAN))
            .collect();
        curves.push(PdfCurve {
            family: cand.family.to_string(),
            fit_kind: "marginal".to_string(),
            pdf: marg_pdf.clone(),
        });

        match cand.xy {
            Ok((spec, params, loglik, converged)) => {
                let ks = ks_statistic(&zs, &spec).map_err(CliError::from)?;
                let xy_pdf: Vec<f64> = z_grid
                    .iter()
                    .map(|&z| spec.pdf(z).unwrap_or(f64::NAN))
                    .collect();
                let sup_xy = xy_pdf.iter().copied().fold(0.0f64, f64::max);
                let gap = xy_pdf
                    .iter()
                    .zip(&marg_pdf)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
                    / sup_xy;
                curves.push(PdfCurve {
                    family: cand.family.to_string(),
                    fit_kind: "xy".to_string(),
                    pdf: xy_pdf,
                });
                reports.push(CandidateReport {
                    family: cand.family.to_string(),
                    status: "ok".to_string(),
                    xy_fit: Some(FitSummary {
                        params,
                        loglik,
                        ks,
                        converged,
                    }),
                    marginal_fit,
                    pdf_sup_rel_gap: Some(gap),
                });
            }
            Err(e) => reports.push(CandidateReport {
                family: cand.family.to_string(),
                status: format!("failed: {e}"),
                xy_fit: None,
                marginal_fit,
                pdf_sup_rel_gap: None,
            }),
        }
    }
    // Rank by direct-fit log-likelihood, failed candidates last.
    reports.sort_by(|a, b| {
        let la = a.xy_fit.as_ref().map(|f| f.loglik).unwrap_or(f64::NEG_INFINITY);
        let lb = b.xy_fit.as_ref().map(|f| f.loglik).unwrap_or(f64::NEG_INFINITY);
        lb.partial_cmp(&la).unwrap_or(std::cmp::Ordering::Equal)
    });
    let selected_family = reports
        .iter()
        .find(|r| r.xy_fit.is_some())
        .map(|r| r.family.clone());

    Ok(AnalysisReport {
        schema_version: 1,
        source: table.source.clone(),
        rows_used: n,
        rows_skipped_parse: table.skipped_parse,
        rows_dropped_nonpositive_volume: table.dropped_nonpositive_volume,
        units: Units {
            volume: "MWh".to_string(),
            price: "EUR/MWh".to_string(),
            value: "EUR".to_string(),
        },
        correlation,
        independence_assumption_violated: significant,
        volume_fits,
        price_fits,
        value_fits: reports,
        selected_family,
        histograms: Histograms {
            volume: histogram(volumes),
            price: histogram(prices),
            value: histogram(&zs),
        },
        value_pdf_grid: ValuePdfGrid { z: z_grid, curves },
    })
}
