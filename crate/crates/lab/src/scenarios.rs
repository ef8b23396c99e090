//! Dyad vector fields and the two heterogeneous-behaviour scenarios: the
//! staged efficient cascade and the reinforce-the-best threshold.

use anyhow::{bail, ensure};
use ewa_core::equilibria::newton;
use ewa_core::ode::{integrate, Sample};
use ewa_core::{BehavioralParams, EwaSystem, Graph, IntegrationConfig, PayoffMatrix, PayoffTransform, TerminalStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::battery::{classify_state, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorFieldConfig {
    /// Half-width of the square box; defaults to 1.1 times the largest
    /// fixed-point bound `U_i / ψ_i`.
    pub half_width: Option<f64>,
    /// Grid points per axis. Odd values put the origin on the grid.
    pub resolution: usize,
}

impl Default for VectorFieldConfig {
    fn default() -> Self {
        VectorFieldConfig { half_width: None, resolution: 81 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub half_width: f64,
    pub axis: Vec<f64>,
    /// Row-major over `(axis[i], axis[j])`: `(q_0, q_1, F_0, F_1)`.
    pub points: Vec<[f64; 4]>,
    /// Grid cells where both drift components change sign.
    pub candidate_cells: usize,
    /// Isocline intersections, polished and deduplicated.
    pub intersections: Vec<[f64; 2]>,
}

pub fn vector_field(sys: &EwaSystem, cfg: &VectorFieldConfig) -> anyhow::Result<VectorField> {
    ensure!(sys.n() == 2, "vector fields need a two-agent system, got {}", sys.n());
    ensure!(cfg.resolution >= 2, "resolution must be at least 2");
    let half = cfg
        .half_width
        .unwrap_or_else(|| 1.1 * sys.magnitude_bounds().into_iter().fold(0.0, f64::max));
    ensure!(half > 0.0 && half.is_finite(), "box half-width must be positive");
    let k = cfg.resolution;
    let axis: Vec<f64> = (0..k).map(|i| -half + 2.0 * half * i as f64 / (k - 1) as f64).collect();
    let mut points = Vec::with_capacity(k * k);
    for &a in &axis {
        for &b in &axis {
            let f = sys.drift(&[a, b], 0.0);
            points.push([a, b, f[0], f[1]]);
        }
    }
    let at = |i: usize, j: usize| &points[i * k + j];
    let changes = |c: usize, corners: &[&[f64; 4]; 4]| {
        let pos = corners.iter().any(|p| p[c] >= 0.0);
        let neg = corners.iter().any(|p| p[c] <= 0.0);
        pos && neg
    };
    let mut candidate_cells = 0;
    let mut intersections: Vec<[f64; 2]> = Vec::new();
    let radius = 1e-6 * half;
    for i in 0..k - 1 {
        for j in 0..k - 1 {
            let corners = [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
            if !(changes(2, &corners) && changes(3, &corners)) {
                continue;
            }
            candidate_cells += 1;
            let centre = [(axis[i] + axis[i + 1]) / 2.0, (axis[j] + axis[j + 1]) / 2.0];
            let Some(root) = newton(sys, &centre, 1e-12, 60) else {
                continue;
            };
            if root.iter().any(|v| v.abs() > half) {
                continue;
            }
            if !intersections
                .iter()
                .any(|r| (r[0] - root[0]).abs().max((r[1] - root[1]).abs()) <= radius)
            {
                intersections.push([root[0], root[1]]);
            }
        }
    }
    intersections.sort_by(|a, b| (a[0] + a[1]).total_cmp(&(b[0] + b[1])));
    Ok(VectorField {
        half_width: half,
        axis,
        points,
        candidate_cells,
        intersections,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeConfig {
    /// Agents initially favouring `D`; the rest start favouring `C`.
    pub initial_d: Vec<usize>,
    /// `|q_i(0)|` for every agent.
    pub start_magnitude: f64,
    pub c_psi: f64,
    pub c_lambda: f64,
    /// D agents on the boundary whose D-neighbour share is below the
    /// cascade threshold.
    pub boundary_psi: f64,
    pub boundary_lambda: f64,
    pub interior_psi: f64,
    pub interior_lambda: f64,
    pub eta: f64,
    /// Time between partition checks.
    pub check_every: f64,
    pub horizon: f64,
    /// Extra time integrated after the last flip to confirm the outcome.
    pub settle: f64,
    /// Parameters of the unstaged comparison run.
    pub homogeneous_psi: f64,
    pub homogeneous_lambda: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            initial_d: Vec::new(),
            start_magnitude: 1.0,
            c_psi: 0.05,
            c_lambda: 20.0,
            boundary_psi: 50.0,
            boundary_lambda: 1e-3,
            interior_psi: 1.0,
            interior_lambda: 1e-3,
            eta: 1.0,
            check_every: 0.05,
            horizon: 500.0,
            settle: 50.0,
            homogeneous_psi: 0.05,
            homogeneous_lambda: 20.0,
        }
    }
}

/// The share of D neighbours below which a boundary D agent is pushed to
/// `C` by large `ψ` and small `λ`: `2(z − x) / (z − x + w − y)`.
pub fn cascade_threshold(payoff: &PayoffMatrix) -> f64 {
    let PayoffMatrix { z, y, x, w } = *payoff;
    2.0 * (z - x) / (z - x + w - y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeStage {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub d_agents: Vec<usize>,
    pub boundary: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeTranscript {
    pub stages: Vec<CascadeStage>,
    pub samples: Vec<Sample>,
    pub final_q: Vec<f64>,
    /// Every agent ends favouring `C`.
    pub full_cascade: bool,
    /// The horizon ran out before the partition settled.
    pub horizon_exhausted: bool,
    /// No D agent qualified for the boundary recipe.
    pub stalled: bool,
}

fn stage_integration() -> IntegrationConfig {
    IntegrationConfig::adaptive(1e-9, 1e-11)
}

fn d_set(q: &[f64]) -> Vec<usize> {
    (0..q.len()).filter(|&i| q[i] > 0.0).collect()
}

fn signed_start(n: usize, initial_d: &[usize], magnitude: f64) -> anyhow::Result<Vec<f64>> {
    let mut q = vec![-magnitude; n];
    for &i in initial_d {
        ensure!(i < n, "initial D agent {i} out of range for {n} agents");
        q[i] = magnitude;
    }
    Ok(q)
}

/// Runs the staged construction: C agents are accurate and retentive,
/// boundary D agents below the threshold are forgetful and inaccurate, and
/// the assignment is redone whenever an agent changes side.
pub fn cascade_scenario(graph: &Graph, payoff: PayoffMatrix, cfg: &CascadeConfig) -> anyhow::Result<CascadeTranscript> {
    ensure!(
        payoff.has_risk_efficiency_conflict(),
        "the cascade needs a coordination game with risk-dominant D and efficient C"
    );
    ensure!(cfg.check_every > 0.0 && cfg.horizon > 0.0, "check_every and horizon must be positive");
    let n = graph.n();
    let PayoffMatrix { z, y, x, w } = payoff;
    let mut q = signed_start(n, &cfg.initial_d, cfg.start_magnitude)?;
    let mut t = 0.0;
    let mut samples = vec![Sample { t, q: q.clone() }];
    let mut stages = Vec::new();
    let mut horizon_exhausted = false;
    let mut stalled = false;

    loop {
        let ds = d_set(&q);
        if ds.is_empty() {
            break;
        }
        let in_d: Vec<bool> = (0..n).map(|i| q[i] > 0.0).collect();
        let boundary: Vec<usize> = ds
            .iter()
            .copied()
            .filter(|&i| {
                let d = graph.degree(i) as f64;
                let nd = graph.neighbors_in(i, &in_d) as f64;
                nd < d && nd * (z - x + w - y) < 2.0 * (z - x) * d
            })
            .collect();
        let mut stage = CascadeStage {
            index: stages.len(),
            t_start: t,
            t_end: t,
            d_agents: ds.clone(),
            boundary: boundary.clone(),
        };
        if boundary.is_empty() {
            stalled = true;
            stages.push(stage);
            break;
        }
        let (mut psi, mut lambda) = (vec![cfg.c_psi; n], vec![cfg.c_lambda; n]);
        for &i in &ds {
            psi[i] = cfg.interior_psi;
            lambda[i] = cfg.interior_lambda;
        }
        for &i in &boundary {
            psi[i] = cfg.boundary_psi;
            lambda[i] = cfg.boundary_lambda;
        }
        let sys = EwaSystem::new(graph.clone(), payoff, BehavioralParams::new(psi, lambda, vec![cfg.eta; n]))?;
        loop {
            let tr = integrate(&sys, &q, &stage_integration().with_horizon(cfg.check_every))?;
            ensure!(tr.status != TerminalStatus::Diverged, "cascade stage {} diverged", stage.index);
            t += tr.final_time();
            q = tr.final_state().to_vec();
            samples.push(Sample { t, q: q.clone() });
            if d_set(&q) != ds {
                break;
            }
            if tr.converged() {
                stalled = true;
                break;
            }
            if t >= cfg.horizon {
                horizon_exhausted = true;
                break;
            }
        }
        stage.t_end = t;
        stages.push(stage);
        if stalled || horizon_exhausted {
            break;
        }
    }

    if !stalled && !horizon_exhausted {
        // Everyone favours C; keep the C recipe running to confirm all-C holds.
        let sys = EwaSystem::new(graph.clone(), payoff, BehavioralParams::uniform(n, cfg.c_psi, cfg.c_lambda, cfg.eta))?;
        let tr = integrate(&sys, &q, &stage_integration().with_horizon(cfg.settle))?;
        t += tr.final_time();
        q = tr.final_state().to_vec();
        samples.push(Sample { t, q: q.clone() });
    }
    Ok(CascadeTranscript {
        stages,
        samples,
        full_cascade: q.iter().all(|&v| v < 0.0),
        final_q: q,
        horizon_exhausted,
        stalled,
    })
}

/// The unstaged comparison: everyone shares the same near-best-response
/// parameters from the same start. Returns the final state.
pub fn homogeneous_cascade(graph: &Graph, payoff: PayoffMatrix, cfg: &CascadeConfig) -> anyhow::Result<Vec<f64>> {
    let n = graph.n();
    let q0 = signed_start(n, &cfg.initial_d, cfg.start_magnitude)?;
    let sys = EwaSystem::new(
        graph.clone(),
        payoff,
        BehavioralParams::uniform(n, cfg.homogeneous_psi, cfg.homogeneous_lambda, cfg.eta),
    )?;
    let tr = integrate(&sys, &q0, &stage_integration().with_horizon(cfg.horizon))?;
    Ok(tr.final_state().to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReinforceConfig {
    pub gamma_grid: Vec<f64>,
    /// Must lie below every payoff.
    pub floor: f64,
    pub psi: f64,
    pub lambda: f64,
    pub eta: f64,
    /// Extra starts drawn uniformly from `[−spread, spread]^n`.
    pub random_starts: usize,
    pub start_spread: f64,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        ReinforceConfig {
            gamma_grid: (0..=8).map(|k| 1.0 + 0.25 * k as f64).collect(),
            floor: -3.0,
            psi: 5.0,
            lambda: 0.01,
            eta: 1.0,
            random_starts: 20,
            start_spread: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReinforceRow {
    pub gamma: f64,
    /// Transformed payoffs `(z, y, x, w)`.
    pub transformed: PayoffMatrix,
    pub from_zero: Outcome,
    pub final_zero: Vec<f64>,
    /// Share of the random starts ending all-C.
    pub efficient_share: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReinforceReport {
    pub rows: Vec<ReinforceRow>,
    /// Smallest grid value with efficient absorption from `q = 0`.
    pub gamma_hat: Option<f64>,
}

pub fn reinforce_best_scenario(graph: &Graph, payoff: PayoffMatrix, cfg: &ReinforceConfig, seed: u64) -> anyhow::Result<ReinforceReport> {
    if !payoff.has_risk_efficiency_conflict() {
        bail!("reinforce-the-best needs a coordination game with risk-dominant D and efficient C");
    }
    let n = graph.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..cfg.random_starts)
        .map(|_| (0..n).map(|_| rng.gen_range(-cfg.start_spread..=cfg.start_spread)).collect())
        .collect();
    let integration = IntegrationConfig::adaptive(1e-9, 1e-12);
    let mut rows = Vec::with_capacity(cfg.gamma_grid.len());
    for &gamma in &cfg.gamma_grid {
        let params = BehavioralParams::uniform(n, cfg.psi, cfg.lambda, cfg.eta).with_transform(PayoffTransform::ReinforceBest {
            gamma: vec![gamma; n],
            floor: cfg.floor,
        });
        let sys = EwaSystem::new(graph.clone(), payoff, params)?;
        let run = |q0: &[f64]| -> anyhow::Result<Vec<f64>> {
            let tr = integrate(&sys, q0, &integration)?;
            ensure!(tr.converged(), "gamma = {gamma}: integration did not converge");
            Ok(tr.final_state().to_vec())
        };
        let final_zero = run(&vec![0.0; n])?;
        let mut efficient = 0;
        for s in &starts {
            if classify_state(&run(s)?, 0.0) == Outcome::AllC {
                efficient += 1;
            }
        }
        rows.push(ReinforceRow {
            gamma,
            transformed: payoff.reinforce_best(gamma, cfg.floor)?,
            from_zero: classify_state(&final_zero, 0.0),
            final_zero,
            efficient_share: if starts.is_empty() { f64::NAN } else { efficient as f64 / starts.len() as f64 },
        });
    }
    let gamma_hat = rows.iter().find(|r| r.from_zero == Outcome::AllC).map(|r| r.gamma);
    Ok(ReinforceReport { rows, gamma_hat })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_of_the_dyad_game() {
        let t = cascade_threshold(&PayoffMatrix::new(4.0, -2.0, 1.0, 2.0));
        assert!((t - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn grid_includes_origin() {
        let sys = EwaSystem::new(
            Graph::path(2),
            PayoffMatrix::new(4.0, -2.0, 1.0, 2.0),
            BehavioralParams::uniform(2, 1.0, 0.5, 1.0),
        )
        .unwrap();
        let vf = vector_field(&sys, &VectorFieldConfig { half_width: Some(4.0), resolution: 9 }).unwrap();
        let origin = vf.points.iter().find(|p| p[0] == 0.0 && p[1] == 0.0).unwrap();
        assert_eq!(&origin[2..], sys.drift(&[0.0, 0.0], 0.0).as_slice());
        assert_eq!(vf.points.len(), 81);
    }
}
