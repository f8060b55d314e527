//! JSON wire formats for distribution specs, experiment plans and reports.

use crate::error::{CliError, CliResult};
use prodist::{BivariateSpec, MarginalSpec, ProductSpec, QuadratureConfig, Strategy};
use serde::{Deserialize, Serialize};

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalDto {
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    StudentT {
        n: f64,
        #[serde(default)]
        loc: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Pareto {
        a: f64,
        theta: f64,
    },
}

impl From<&MarginalSpec> for MarginalDto {
    fn from(m: &MarginalSpec) -> Self {
        match *m {
            MarginalSpec::Gaussian { mu, sigma } => MarginalDto::Gaussian { mu, sigma },
            MarginalSpec::LogNormal { mu, sigma } => MarginalDto::LogNormal { mu, sigma },
            MarginalSpec::StudentT { dof, loc, scale } => MarginalDto::StudentT {
                n: dof,
                loc,
                scale,
            },
            MarginalSpec::Pareto { shape, scale } => MarginalDto::Pareto {
                a: shape,
                theta: scale,
            },
        }
    }
}

impl TryFrom<MarginalDto> for MarginalSpec {
    type Error = CliError;

    fn try_from(dto: MarginalDto) -> CliResult<Self> {
        let spec = match dto {
            MarginalDto::Gaussian { mu, sigma } => MarginalSpec::gaussian(mu, sigma),
            MarginalDto::LogNormal { mu, sigma } => MarginalSpec::log_normal(mu, sigma),
            MarginalDto::StudentT { n, loc, scale } => MarginalSpec::student_t(n, loc, scale),
            MarginalDto::Pareto { a, theta } => MarginalSpec::pareto(a, theta),
        };
        spec.map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum JointDto {
    GaussGauss {
        mu_x: f64,
        mu_y: f64,
        sigma_x: f64,
        sigma_y: f64,
        rho: f64,
    },
    LognLogn {
        mu_x: f64,
        mu_y: f64,
        sigma_x: f64,
        sigma_y: f64,
        rho: f64,
    },
    StudentT {
        n: f64,
        rho: f64,
    },
    Pareto {
        a: f64,
        theta_x: f64,
        theta_y: f64,
    },
    Independent {
        x: MarginalDto,
        y: MarginalDto,
    },
}

impl From<&BivariateSpec> for JointDto {
    fn from(j: &BivariateSpec) -> Self {
        match j {
            BivariateSpec::GaussGauss {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => JointDto::GaussGauss {
                mu_x: *mu_x,
                mu_y: *mu_y,
                sigma_x: *sigma_x,
                sigma_y: *sigma_y,
                rho: *rho,
            },
            BivariateSpec::LogNLogN {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => JointDto::LognLogn {
                mu_x: *mu_x,
                mu_y: *mu_y,
                sigma_x: *sigma_x,
                sigma_y: *sigma_y,
                rho: *rho,
            },
            BivariateSpec::TT { dof, rho } => JointDto::StudentT { n: *dof, rho: *rho },
            BivariateSpec::ParetoPareto {
                shape,
                theta_x,
                theta_y,
            } => JointDto::Pareto {
                a: *shape,
                theta_x: *theta_x,
                theta_y: *theta_y,
            },
            BivariateSpec::Independent { x, y } => JointDto::Independent {
                x: x.into(),
                y: y.into(),
            },
        }
    }
}

impl TryFrom<JointDto> for BivariateSpec {
    type Error = CliError;

    fn try_from(dto: JointDto) -> CliResult<Self> {
        let spec = match dto {
            JointDto::GaussGauss {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => BivariateSpec::gauss_gauss(mu_x, mu_y, sigma_x, sigma_y, rho)
                .map_err(CliError::from)?,
            JointDto::LognLogn {
                mu_x,
                mu_y,
                sigma_x,
                sigma_y,
                rho,
            } => BivariateSpec::logn_logn(mu_x, mu_y, sigma_x, sigma_y, rho)
                .map_err(CliError::from)?,
            JointDto::StudentT { n, rho } => {
                BivariateSpec::tt(n, rho).map_err(CliError::from)?
            }
            JointDto::Pareto {
                a,
                theta_x,
                theta_y,
            } => BivariateSpec::pareto_pareto(a, theta_x, theta_y).map_err(CliError::from)?,
            JointDto::Independent { x, y } => BivariateSpec::independent(
                MarginalSpec::try_from(x)?,
                MarginalSpec::try_from(y)?,
            )
            .map_err(CliError::from)?,
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StrategyDto {
    Auto,
    ClosedForm,
    Quadrature,
}

impl From<StrategyDto> for Strategy {
    fn from(s: StrategyDto) -> Self {
        match s {
            StrategyDto::Auto => Strategy::Auto,
            StrategyDto::ClosedForm => Strategy::ClosedForm,
            StrategyDto::Quadrature => Strategy::Quadrature,
        }
    }
}

/// Parse a spec argument: inline JSON or `@path` to a JSON file.
pub fn parse_joint_arg(arg: &str) -> CliResult<BivariateSpec> {
    let text = if let Some(path) = arg.strip_prefix('@') {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read spec file {path}: {e}")))?
    } else {
        arg.to_string()
    };
    let dto: JointDto = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid spec json: {e}")))?;
    dto.try_into()
}

/// Assemble a product spec from CLI-level settings.
pub fn product_spec(
    joint: BivariateSpec,
    quad_rel_tol: Option<f64>,
    strategy: Option<StrategyDto>,
) -> CliResult<ProductSpec> {
    let mut quad = QuadratureConfig::default();
    if let Some(tol) = quad_rel_tol {
        quad.rel_tol = tol;
    }
    let strategy = strategy.map(Strategy::from).unwrap_or(Strategy::Auto);
    ProductSpec::with_config(joint, quad, strategy).map_err(CliError::from)
}

// --- experiment plan file -----------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FreeParamDto {
    Name(String),
    Bounded {
        name: String,
        lower: Option<f64>,
        upper: Option<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDto {
    pub schema_version: u32,
    pub spec: JointDto,
    #[serde(default)]
    pub strategy: Option<StrategyDto>,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub free: Vec<FreeParamDto>,
    #[serde(default = "default_multistart")]
    pub multistart: usize,
}

fn default_sample_size() -> usize {
    1000
}
fn default_replications() -> usize {
    100
}
fn default_multistart() -> usize {
    5
}

pub fn plan_from_dto(
    dto: PlanDto,
    cli_seed: u64,
    quad_rel_tol: Option<f64>,
) -> CliResult<prodist::ExperimentPlan> {
    if dto.schema_version != 1 {
        return Err(CliError::Usage(format!(
            "unsupported plan schema_version {}",
            dto.schema_version
        )));
    }
    let joint: BivariateSpec = dto.spec.try_into()?;
    let spec = product_spec(joint, quad_rel_tol, dto.strategy)?;
    let mut plan = prodist::ExperimentPlan::new(spec);
    plan.sample_size = dto.sample_size;
    plan.replications = dto.replications;
    plan.seed = dto.seed.unwrap_or(cli_seed);
    plan.multistart = dto.multistart;
    for out in &dto.outputs {
        match out.as_str() {
            "pdf_grid" => plan.outputs.pdf_grid = true,
            "tail_grid" => plan.outputs.tail_grid = true,
            "error_boxplot" => plan.outputs.error_boxplot = true,
            "ks_check" => plan.outputs.ks_check = true,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown experiment output '{other}'"
                )))
            }
        }
    }
    for fp in dto.free {
        let free = match fp {
            FreeParamDto::Name(name) => prodist::FreeParam::new(&name),
            FreeParamDto::Bounded { name, lower, upper } => {
                let mut f = prodist::FreeParam::new(&name);
                if let Some(lo) = lower {
                    f.lower = lo;
                }
                if let Some(hi) = upper {
                    f.upper = hi;
                }
                f
            }
        };
        plan.free.push(free);
    }
    plan.validate().map_err(CliError::from)?;
    Ok(plan)
}
