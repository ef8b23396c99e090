//! The JSON configuration document shared by all subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ewa_core::dynamics::{LambdaSchedule, PayoffTransform};
use ewa_core::ode::Stepper;
use ewa_core::{BehavioralParams, CensusConfig, EwaSystem, Graph, IntegrationConfig, PayoffMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::battery::ExperimentConfig;
use crate::scenarios::{CascadeConfig, ReinforceConfig, VectorFieldConfig};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub graph: Option<GraphSpec>,
    pub payoff: Option<PayoffSpec>,
    pub params: Option<ParamsSpec>,
    pub initial: Option<InitialSpec>,
    pub integration: IntegrationSpec,
    pub census: CensusSpec,
    pub montecarlo: ExperimentConfig,
    pub vector_field: VectorFieldConfig,
    pub cascade: Option<CascadeConfig>,
    pub reinforce_best: ReinforceConfig,
    /// Directory relative paths in the document are resolved against; set
    /// by [`Config::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    EdgeList(PathBuf),
    Edges { n: usize, edges: Vec<(usize, usize)> },
    Path(usize),
    Cycle(usize),
    Star(usize),
    Complete(usize),
    ErdosRenyi {
        n: usize,
        p: f64,
        #[serde(default = "yes")]
        require_connected: bool,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PayoffSpec {
    Full { z: f64, y: f64, x: f64, w: f64 },
    Symmetric { h: f64, l: f64 },
}

impl PayoffSpec {
    pub fn matrix(self) -> PayoffMatrix {
        match self {
            PayoffSpec::Full { z, y, x, w } => PayoffMatrix::new(z, y, x, w),
            PayoffSpec::Symmetric { h, l } => PayoffMatrix::symmetric(h, l),
        }
    }
}

/// A scalar applied to every agent or an explicit per-agent vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PerAgent {
    pub fn expand(&self, n: usize, name: &str) -> anyhow::Result<Vec<f64>> {
        match self {
            PerAgent::Scalar(v) => Ok(vec![*v; n]),
            PerAgent::Vector(v) if v.len() == n => Ok(v.clone()),
            PerAgent::Vector(v) => bail!("{name} has {} entries for {n} agents", v.len()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub psi: PerAgent,
    pub lambda: PerAgent,
    pub eta: PerAgent,
    #[serde(default)]
    pub lambda_schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub reinforce_best: Option<ReinforceSpec>,
    #[serde(default)]
    pub aspiration: Option<PerAgent>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Saturating { limit: PerAgent, timescale: PerAgent },
    Tabulated { times: Vec<f64>, values: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReinforceSpec {
    pub gamma: PerAgent,
    pub floor: f64,
}

impl ParamsSpec {
    pub fn build(&self, n: usize) -> anyhow::Result<BehavioralParams> {
        let mut p = BehavioralParams::new(
            self.psi.expand(n, "psi")?,
            self.lambda.expand(n, "lambda")?,
            self.eta.expand(n, "eta")?,
        );
        if let Some(s) = &self.lambda_schedule {
            p = p.with_schedule(match s {
                ScheduleSpec::Saturating { limit, timescale } => LambdaSchedule::Saturating {
                    limit: limit.expand(n, "limit")?,
                    timescale: timescale.expand(n, "timescale")?,
                },
                ScheduleSpec::Tabulated { times, values } => LambdaSchedule::Tabulated {
                    times: times.clone(),
                    values: values.clone(),
                },
            });
        }
        match (&self.reinforce_best, &self.aspiration) {
            (Some(_), Some(_)) => bail!("reinforce_best and aspiration cannot be combined"),
            (Some(r), None) => {
                p = p.with_transform(PayoffTransform::ReinforceBest {
                    gamma: r.gamma.expand(n, "gamma")?,
                    floor: r.floor,
                })
            }
            (None, Some(a)) => p = p.with_transform(PayoffTransform::Aspiration { level: a.expand(n, "aspiration")? }),
            (None, None) => {}
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Q(Vec<f64>),
    /// `q_i(0) ~ Normal(0, σ)` i.i.d., drawn from the run seed.
    Normal { sigma: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationSpec {
    /// `rk4` or `dopri5`.
    pub method: String,
    /// RK4 step; defaults to the system's own step rule.
    pub dt: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub horizon: f64,
    pub conv_tol: f64,
    pub sample_every: f64,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        let d = IntegrationConfig::default();
        IntegrationSpec {
            method: "rk4".into(),
            dt: None,
            rtol: 1e-9,
            atol: 1e-11,
            horizon: d.horizon,
            conv_tol: d.conv_tol,
            sample_every: 0.0,
        }
    }
}

impl IntegrationSpec {
    pub fn build(&self, sys: &EwaSystem) -> anyhow::Result<IntegrationConfig> {
        let stepper = match self.method.as_str() {
            "rk4" => Stepper::Rk4 { dt: self.dt.unwrap_or_else(|| sys.default_dt()) },
            "dopri5" => Stepper::dormand_prince(self.rtol, self.atol),
            other => bail!("unknown integration method {other:?} (expected rk4 or dopri5)"),
        };
        Ok(IntegrationConfig {
            stepper,
            horizon: self.horizon,
            conv_tol: self.conv_tol,
            sample_every: self.sample_every,
            ..IntegrationConfig::default()
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusSpec {
    pub corner_limit: usize,
    pub random_starts: usize,
    pub integration_starts: usize,
    pub newton_tol: f64,
    pub dedup_radius: f64,
    pub stability_margin: f64,
}

impl Default for CensusSpec {
    fn default() -> Self {
        let d = CensusConfig::default();
        CensusSpec {
            corner_limit: d.corner_limit,
            random_starts: d.random_starts,
            integration_starts: d.integration_starts,
            newton_tol: d.newton_tol,
            dedup_radius: d.dedup_radius,
            stability_margin: d.stability_margin,
        }
    }
}

impl CensusSpec {
    pub fn build(&self, seed: u64) -> CensusConfig {
        CensusConfig {
            corner_limit: self.corner_limit,
            random_starts: self.random_starts,
            integration_starts: self.integration_starts,
            seed,
            newton_tol: self.newton_tol,
            dedup_radius: self.dedup_radius,
            stability_margin: self.stability_margin,
            ..CensusConfig::default()
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Config = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn graph(&self, seed: u64) -> anyhow::Result<Graph> {
        let spec = self.graph.as_ref().context("config has no \"graph\" section")?;
        Ok(match spec {
            GraphSpec::EdgeList(p) => crate::io::read_edge_list(&self.base_dir.join(p))?,
            GraphSpec::Edges { n, edges } => Graph::new(*n, edges.iter().copied())?,
            GraphSpec::Path(n) => Graph::path(*n),
            GraphSpec::Cycle(n) => Graph::cycle(*n),
            GraphSpec::Star(n) => Graph::star(*n),
            GraphSpec::Complete(n) => Graph::complete(*n),
            GraphSpec::ErdosRenyi { n, p, require_connected, seed: s } => Graph::erdos_renyi(
                *n,
                *p,
                s.unwrap_or(seed),
                *require_connected,
                ewa_core::graph::DEFAULT_MAX_REDRAWS,
            )?,
        })
    }

    pub fn payoff(&self) -> anyhow::Result<PayoffMatrix> {
        Ok(self.payoff.context("config has no \"payoff\" section")?.matrix())
    }

    pub fn system(&self, seed: u64) -> anyhow::Result<EwaSystem> {
        let graph = self.graph(seed)?;
        let params = self.params.as_ref().context("config has no \"params\" section")?.build(graph.n())?;
        Ok(EwaSystem::new(graph, self.payoff()?, params)?)
    }

    /// Initial attractions; zero when the section is absent.
    pub fn initial(&self, n: usize, seed: u64) -> anyhow::Result<Vec<f64>> {
        match &self.initial {
            None => Ok(vec![0.0; n]),
            Some(InitialSpec::Q(q)) if q.len() == n => Ok(q.clone()),
            Some(InitialSpec::Q(q)) => bail!("initial q has {} entries for {n} agents", q.len()),
            Some(InitialSpec::Normal { sigma }) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let d = Normal::new(0.0, *sigma)?;
                Ok((0..n).map(|_| d.sample(&mut rng)).collect())
            }
        }
    }
}
