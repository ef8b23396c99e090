//! The Monte Carlo battery on random networks with symmetric payoffs.

use ewa_core::influence::{influence_report, predict_coordination, InfluenceConfig, Prediction};
use ewa_core::ode::integrate;
use ewa_core::rng::hash2;
use ewa_core::{BehavioralParams, EwaSystem, Graph, IntegrationConfig, PayoffMatrix, TerminalStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_sims: usize,
    pub n: usize,
    pub p: f64,
    pub require_connected: bool,
    pub max_redraws: usize,
    /// Symmetric `(h, l)` payoffs, picked uniformly per simulation.
    pub payoffs: Vec<(f64, f64)>,
    /// Range from which the lower and upper bounds of `ψ_i` are drawn.
    pub psi_range: (f64, f64),
    pub lambda_range: (f64, f64),
    pub eta_range: (f64, f64),
    pub sigma_q_range: (f64, f64),
    pub rtol: f64,
    pub atol: f64,
    pub horizon: f64,
    /// A state counts as consensus when every `|q_i|` exceeds this with a
    /// common sign.
    pub consensus_margin: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_sims: 2000,
            n: 100,
            p: 0.1,
            require_connected: true,
            max_redraws: ewa_core::graph::DEFAULT_MAX_REDRAWS,
            payoffs: vec![(2.0, -1.0), (1.0, -2.0)],
            psi_range: (0.1, 10.0),
            lambda_range: (0.1, 10.0),
            eta_range: (0.0, 1.0),
            sigma_q_range: (0.01, 1.0),
            rtol: 1e-8,
            atol: 1e-10,
            horizon: 1e4,
            consensus_margin: 1e-6,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.n >= 2, "need at least two agents");
        anyhow::ensure!(!self.payoffs.is_empty(), "payoff pool is empty");
        for &(h, l) in &self.payoffs {
            anyhow::ensure!(h > l, "payoff pair ({h}, {l}) needs h > l");
        }
        for (name, (lo, hi)) in [("psi_range", self.psi_range), ("lambda_range", self.lambda_range)] {
            anyhow::ensure!(0.0 < lo && lo <= hi, "{name} must satisfy 0 < lo <= hi");
        }
        anyhow::ensure!(
            0.0 <= self.eta_range.0 && self.eta_range.0 <= self.eta_range.1 && self.eta_range.1 <= 1.0,
            "eta_range must lie in [0, 1]"
        );
        anyhow::ensure!(
            0.0 < self.sigma_q_range.0 && self.sigma_q_range.0 <= self.sigma_q_range.1,
            "sigma_q_range must be positive and ordered"
        );
        Ok(())
    }

    fn integration(&self) -> IntegrationConfig {
        IntegrationConfig {
            // Under symmetric payoffs each sign orthant is forward invariant,
            // so a common sign decides the outcome.
            sign_lock: Some(self.consensus_margin),
            ..IntegrationConfig::adaptive(self.rtol, self.atol).with_horizon(self.horizon)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    AllD,
    AllC,
    Mixed,
    Nonconverged,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::AllD => "all_d",
            Outcome::AllC => "all_c",
            Outcome::Mixed => "mixed",
            Outcome::Nonconverged => "nonconverged",
        }
    }

    pub fn is_consensus(self) -> bool {
        matches!(self, Outcome::AllD | Outcome::AllC)
    }

    fn matches(self, p: Prediction) -> bool {
        matches!((self, p), (Outcome::AllD, Prediction::D) | (Outcome::AllC, Prediction::C))
    }
}

pub fn classify_state(q: &[f64], margin: f64) -> Outcome {
    if q.iter().all(|&v| v > margin) {
        Outcome::AllD
    } else if q.iter().all(|&v| v < -margin) {
        Outcome::AllC
    } else {
        Outcome::Mixed
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRecord {
    pub index: usize,
    pub seed: u64,
    pub h: f64,
    pub l: f64,
    pub edges: usize,
    pub kappa1: f64,
    pub all_positive_v1: bool,
    /// `None` when the prediction rule does not apply.
    pub prediction: Option<Prediction>,
    pub outcome: Outcome,
    pub status: TerminalStatus,
    pub final_time: f64,
    pub xi_dot_q0: f64,
    /// The drawn spread of the initial attractions.
    pub sigma_q: f64,
    /// Realised standard deviation of `q(0)`.
    pub sigma_q0: f64,
    pub cr_centrality: f64,
    pub cr_lambda: f64,
    pub mu_lambda: f64,
}

impl SimRecord {
    pub fn correct(&self) -> Option<bool> {
        self.prediction.map(|p| self.outcome.matches(p))
    }
}

/// Draws `lo ≤ hi` uniformly from `range` and returns them ordered.
fn bounds(rng: &mut ChaCha8Rng, range: (f64, f64)) -> (f64, f64) {
    let a = rng.gen_range(range.0..=range.1);
    let b = rng.gen_range(range.0..=range.1);
    (a.min(b), a.max(b))
}

fn draw_vec(rng: &mut ChaCha8Rng, n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    (0..n).map(|_| if lo < hi { rng.gen_range(lo..hi) } else { lo }).collect()
}

/// The randomly drawn inputs of one simulation.
pub struct SimInputs {
    pub system: EwaSystem,
    pub q0: Vec<f64>,
    pub sigma_q: f64,
}

pub fn draw_inputs(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<SimInputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = Graph::erdos_renyi(cfg.n, cfg.p, rng.gen(), cfg.require_connected, cfg.max_redraws)?;
    let (h, l) = cfg.payoffs[rng.gen_range(0..cfg.payoffs.len())];
    let psi_b = bounds(&mut rng, cfg.psi_range);
    let lambda_b = bounds(&mut rng, cfg.lambda_range);
    let eta_b = bounds(&mut rng, cfg.eta_range);
    let sigma_q = rng.gen_range(cfg.sigma_q_range.0..=cfg.sigma_q_range.1);
    let n = cfg.n;
    let params = BehavioralParams::new(draw_vec(&mut rng, n, psi_b), draw_vec(&mut rng, n, lambda_b), draw_vec(&mut rng, n, eta_b));
    let normal = Normal::new(0.0, sigma_q)?;
    let q0: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let system = EwaSystem::new(graph, PayoffMatrix::symmetric(h, l), params)?;
    Ok(SimInputs { system, q0, sigma_q })
}

pub fn sim_seed(master: u64, index: usize) -> u64 {
    hash2(master, index as u64)
}

/// Runs simulation `index`. Failures inside the simulation are recorded as
/// nonconverged rather than returned.
pub fn run_one(cfg: &ExperimentConfig, master: u64, index: usize) -> anyhow::Result<SimRecord> {
    let seed = sim_seed(master, index);
    let SimInputs { system, q0, sigma_q } = draw_inputs(cfg, seed)?;
    let (h, l) = system.base_payoff().symmetric_form().expect("pool is symmetric");
    let centrality = system.graph().eigenvector_centrality(1e-10, 1_000_000)?.weights;
    let lambda = &system.params().lambda;
    let mut rec = SimRecord {
        index,
        seed,
        h,
        l,
        edges: system.graph().edge_count(),
        kappa1: f64::NAN,
        all_positive_v1: false,
        prediction: None,
        outcome: Outcome::Nonconverged,
        status: TerminalStatus::HorizonReached,
        final_time: 0.0,
        xi_dot_q0: f64::NAN,
        sigma_q,
        sigma_q0: stats::std_dev(&q0),
        cr_centrality: stats::pearson(&q0, &centrality),
        cr_lambda: stats::pearson(&q0, lambda),
        mu_lambda: stats::mean(lambda),
    };
    if let Ok(report) = influence_report(&system, &InfluenceConfig::default()) {
        rec.kappa1 = report.kappa1;
        rec.all_positive_v1 = report.all_positive_v1;
        rec.xi_dot_q0 = report.xi.iter().zip(&q0).map(|(a, b)| a * b).sum();
        rec.prediction = predict_coordination(&report, &q0).ok();
    }
    if let Ok(tr) = integrate(&system, &q0, &cfg.integration()) {
        rec.status = tr.status;
        rec.final_time = tr.final_time();
        rec.outcome = match tr.status {
            TerminalStatus::Converged | TerminalStatus::SignLocked => {
                classify_state(tr.final_state(), cfg.consensus_margin)
            }
            _ => Outcome::Nonconverged,
        };
    }
    Ok(rec)
}

/// Runs the whole battery in parallel. The result is ordered by simulation
/// index and does not depend on the number of worker threads.
pub fn run_battery(cfg: &ExperimentConfig, master: u64) -> anyhow::Result<Vec<SimRecord>> {
    cfg.validate()?;
    (0..cfg.n_sims).into_par_iter().map(|i| run_one(cfg, master, i)).collect()
}

/// Serial version of [`run_battery`] over an index range, for sharding.
pub fn run_shard(cfg: &ExperimentConfig, master: u64, range: std::ops::Range<usize>) -> anyhow::Result<Vec<SimRecord>> {
    cfg.validate()?;
    range.map(|i| run_one(cfg, master, i)).collect()
}
