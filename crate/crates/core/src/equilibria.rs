//! Fixed points of the drift, their stability, and the census of stable ones
//! (behavioural equilibria).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Schur};

use crate::dynamics::{logit_response, EwaSystem};
use crate::ode::{integrate, IntegrationConfig, Stepper};
use crate::rng::CounterRng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    /// Every eigenvalue has real part below `−margin`.
    Stable,
    /// Some eigenvalue has real part above `margin`.
    Unstable,
    /// The largest real part lies within `±margin` of zero.
    Marginal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointRecord {
    pub q_star: Vec<f64>,
    pub p_star: Vec<f64>,
    pub residual: f64,
    /// Jacobian spectrum as `(re, im)` pairs, sorted by decreasing real part.
    pub eigenvalues: Vec<(f64, f64)>,
    pub max_re: f64,
    pub stability: Stability,
    /// Initial conditions whose forward integration ended here.
    pub basin_witnesses: Vec<Vec<f64>>,
}

impl FixedPointRecord {
    pub fn is_stable(&self) -> bool {
        self.stability == Stability::Stable
    }

    /// Whether every `p*_i` is within `tol` of 0 or 1.
    pub fn is_near_pure(&self, tol: f64) -> bool {
        self.p_star.iter().all(|&p| p <= tol || p >= 1.0 - tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensusConfig {
    /// Sign-pattern corners are seeded when `n` is at most this.
    pub corner_limit: usize,
    pub random_starts: usize,
    /// Random starts that are integrated forward before polishing.
    pub integration_starts: usize,
    pub seed: u64,
    pub newton_tol: f64,
    pub max_newton_iter: usize,
    pub dedup_radius: f64,
    pub stability_margin: f64,
    pub integration: IntegrationConfig,
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig {
            corner_limit: 12,
            random_starts: 64,
            integration_starts: 8,
            seed: 0,
            newton_tol: 1e-10,
            max_newton_iter: 60,
            dedup_radius: 1e-5,
            stability_margin: 1e-8,
            integration: IntegrationConfig {
                stepper: Stepper::dormand_prince(1e-9, 1e-11),
                ..IntegrationConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BeCensus {
    pub records: Vec<FixedPointRecord>,
    pub starts_used: usize,
    pub duplicates_merged: usize,
    pub failed_starts: usize,
}

impl BeCensus {
    /// Number of stable fixed points.
    pub fn count_be(&self) -> usize {
        self.records.iter().filter(|r| r.is_stable()).count()
    }

    pub fn stable(&self) -> impl Iterator<Item = &FixedPointRecord> {
        self.records.iter().filter(|r| r.is_stable())
    }

    fn insert(&mut self, q: Vec<f64>, witness: Option<&[f64]>, radius: f64) -> Option<usize> {
        if let Some(k) = self.records.iter().position(|r| sup_dist(&r.q_star, &q) <= radius) {
            self.duplicates_merged += 1;
            if let Some(w) = witness {
                self.records[k].basin_witnesses.push(w.to_vec());
            }
            return None;
        }
        self.records.push(FixedPointRecord {
            q_star: q,
            p_star: Vec::new(),
            residual: 0.0,
            eigenvalues: Vec::new(),
            max_re: 0.0,
            stability: Stability::Marginal,
            basin_witnesses: witness.map(|w| vec![w.to_vec()]).unwrap_or_default(),
        });
        Some(self.records.len() - 1)
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn require_autonomous(sys: &EwaSystem) -> Result<()> {
    if sys.is_autonomous() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "fixed points are undefined under a time-varying accuracy schedule".into(),
        ))
    }
}

/// Damped Newton iteration on `F(q) = 0`. Steps are halved until the
/// residual decreases; returns `None` when that fails or the iteration cap
/// is reached.
pub fn newton(sys: &EwaSystem, start: &[f64], tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let mut q = start.to_vec();
    let mut f = sys.drift(&q, 0.0);
    let mut norm = sup_norm(&f);
    for _ in 0..max_iter {
        if norm <= tol {
            return Some(q);
        }
        let jac = sys.jacobian(&q, 0.0);
        let rhs = DVector::from_iterator(f.len(), f.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs)?;
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = q.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect();
            let ft = sys.drift(&trial, 0.0);
            let nt = sup_norm(&ft);
            if nt < norm {
                q = trial;
                f = ft;
                norm = nt;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                return (norm <= tol).then_some(q);
            }
        }
    }
    (norm <= tol).then_some(q)
}

/// Eigenvalues of `m` as `(re, im)`, sorted by decreasing real part.
pub fn spectrum(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    // Nearly repeated eigenvalues can stall the QR iteration, so the
    // deflation tolerance is relaxed first. Exactly repeated diagonals are
    // then split by a small graded diagonal perturbation.
    let n = m.nrows();
    let cap = 100 * n.max(1);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let relaxed = [f64::EPSILON, 1e-13, 1e-11]
        .iter()
        .find_map(|&eps| Schur::try_new(m.clone(), eps, cap));
    let schur = relaxed.or_else(|| {
        [1e-12, 1e-9, 1e-6].iter().find_map(|&delta| {
            let mut p = m.clone();
            for i in 0..n {
                p[(i, i)] += delta * scale * (i as f64 + 1.0) / n as f64;
            }
            Schur::try_new(p, 1e-11, cap)
        })
    });
    let values = schur.map_or_else(|| m.complex_eigenvalues(), |s| s.complex_eigenvalues());
    let mut ev: Vec<(f64, f64)> = values.iter().map(|c| (c.re, c.im)).collect();
    ev.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    ev
}

/// Classifies a fixed point by the spectrum of the Jacobian there.
pub fn classify(sys: &EwaSystem, q: &[f64], margin: f64) -> (Vec<(f64, f64)>, f64, Stability) {
    let ev = spectrum(&sys.jacobian(q, 0.0));
    let max_re = ev.first().map_or(f64::NEG_INFINITY, |e| e.0);
    let stability = if max_re < -margin {
        Stability::Stable
    } else if max_re > margin {
        Stability::Unstable
    } else {
        Stability::Marginal
    };
    (ev, max_re, stability)
}

/// Locates fixed points by multi-start damped Newton and classifies each.
///
/// Starts are, in order: the origin, every sign-pattern corner of the box
/// `±U_i/ψ_i` (for `n ≤ corner_limit`, otherwise only the two uniform
/// corners), uniform random points in the box, and the endpoints of forward
/// integration from further random points.
pub fn find_fixed_points(sys: &EwaSystem, cfg: &CensusConfig) -> Result<BeCensus> {
    require_autonomous(sys)?;
    let n = sys.n();
    let bound = sys.magnitude_bounds();
    let mut rng = CounterRng::new(cfg.seed);
    let mut census = BeCensus::default();
    let tol = cfg.newton_tol;

    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; n]];
    if n <= cfg.corner_limit {
        for mask in 0..1u64 << n {
            starts.push((0..n).map(|i| if mask >> i & 1 == 1 { bound[i] } else { -bound[i] }).collect());
        }
    } else {
        starts.push(bound.clone());
        starts.push(bound.iter().map(|b| -b).collect());
    }
    for _ in 0..cfg.random_starts {
        starts.push(bound.iter().map(|&b| rng.uniform(-b, b)).collect());
    }
    for start in &starts {
        census.starts_used += 1;
        match newton(sys, start, tol, cfg.max_newton_iter) {
            Some(q) => {
                census.insert(q, None, cfg.dedup_radius);
            }
            None => census.failed_starts += 1,
        }
    }
    for _ in 0..cfg.integration_starts {
        let start: Vec<f64> = bound.iter().map(|&b| rng.uniform(-b, b)).collect();
        census.starts_used += 1;
        let tr = integrate(sys, &start, &cfg.integration)?;
        match newton(sys, tr.final_state(), tol, cfg.max_newton_iter) {
            Some(q) => {
                census.insert(q, Some(&start), cfg.dedup_radius);
            }
            None => census.failed_starts += 1,
        }
    }
    if census.records.is_empty() {
        return Err(Error::Inconsistent(format!(
            "no fixed point found from {} starts",
            census.starts_used
        )));
    }
    for r in &mut census.records {
        r.residual = sys.residual(&r.q_star, 0.0);
        r.p_star = (0..n).map(|i| logit_response(r.q_star[i], sys.params().lambda[i])).collect();
        let (ev, max_re, st) = classify(sys, &r.q_star, cfg.stability_margin);
        r.eigenvalues = ev;
        r.max_re = max_re;
        r.stability = st;
    }
    census
        .records
        .sort_by(|a, b| a.q_star.iter().sum::<f64>().total_cmp(&b.q_star.iter().sum::<f64>()));
    Ok(census)
}

/// Outcome of integrating from many starts under a risk/efficiency conflict.
#[derive(Clone, Debug, PartialEq)]
pub struct AbsorptionReport {
    pub starts: Vec<Vec<f64>>,
    pub endpoints: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    /// Every endpoint has `q_i > 0` for all agents.
    pub all_positive: bool,
}

/// Integrates from the all-efficient corner `q0 = −U/ψ`, the given extra
/// starts and `sample_starts` uniform random points in the box, and reports
/// whether every endpoint favours the risk-dominant action.
pub fn risk_dominant_absorption_probe(
    sys: &EwaSystem,
    extra_starts: &[Vec<f64>],
    sample_starts: usize,
    seed: u64,
    integration: &IntegrationConfig,
) -> Result<AbsorptionReport> {
    if !sys.base_payoff().has_risk_efficiency_conflict() {
        return Err(Error::NoRiskEfficiencyConflict);
    }
    let bound = sys.magnitude_bounds();
    let mut rng = CounterRng::new(seed);
    let mut starts = vec![bound.iter().map(|b| -b).collect::<Vec<f64>>()];
    starts.extend(extra_starts.iter().cloned());
    for _ in 0..sample_starts {
        starts.push(bound.iter().map(|&b| rng.uniform(-b, b)).collect());
    }
    let mut endpoints = Vec::with_capacity(starts.len());
    let mut converged = Vec::with_capacity(starts.len());
    for s in &starts {
        let tr = integrate(sys, s, integration)?;
        converged.push(tr.converged());
        endpoints.push(tr.final_state().to_vec());
    }
    let all_positive = endpoints.iter().all(|q| q.iter().all(|&v| v > 0.0));
    Ok(AbsorptionReport {
        starts,
        endpoints,
        converged,
        all_positive,
    })
}
