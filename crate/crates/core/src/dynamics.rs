//! The continuous-time EWA dynamics in attraction-difference space.
//!
//! With `q_i = a_{i,1} − a_{i,0}` and `p_j = 1 / (1 + exp(−λ_j q_j))` the drift is
//!
//! ```text
//! F_i(q) = −ψ_i q_i + (p_i + η_i (1 − p_i)) Σ_j G_ij (p_j w + (1 − p_j) x)
//!                   − (1 − p_i + η_i p_i) Σ_j G_ij (p_j y + (1 − p_j) z)
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::game::PayoffMatrix;
use crate::graph::Graph;
use crate::{Error, Result};

/// Probability of playing `D`, `1 / (1 + exp(−λ q))`, evaluated without
/// overflow for any finite input.
pub fn logit_response(q: f64, lambda: f64) -> f64 {
    let s = lambda * q;
    if s >= 0.0 {
        1.0 / (1.0 + libm::exp(-s))
    } else {
        let e = libm::exp(s);
        e / (1.0 + e)
    }
}

/// `dp/dq = λ p (1 − p)`, computed from `exp(−|λq|)` to avoid cancellation.
pub fn logit_slope(q: f64, lambda: f64) -> f64 {
    let e = libm::exp(-libm::fabs(lambda * q));
    lambda * e / ((1.0 + e) * (1.0 + e))
}

/// Weights on the `D` and `C` payoff sums: `(p + η(1 − p), 1 − p + ηp)`.
#[inline]
fn tau(p: f64, eta: f64) -> (f64, f64) {
    (p + eta * (1.0 - p), 1.0 - p + eta * p)
}

/// A nondecreasing per-agent decision accuracy `λ_i(t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaSchedule {
    /// `λ_i(t) = limit_i · t / (t + timescale_i)`.
    Saturating { limit: Vec<f64>, timescale: Vec<f64> },
    /// Piecewise-linear interpolation of `values[k][i]` at `times[k]`, held
    /// constant outside the table.
    Tabulated { times: Vec<f64>, values: Vec<Vec<f64>> },
}

impl LambdaSchedule {
    pub fn lambda(&self, i: usize, t: f64) -> f64 {
        match self {
            LambdaSchedule::Saturating { limit, timescale } => {
                let t = t.max(0.0);
                limit[i] * t / (t + timescale[i])
            }
            LambdaSchedule::Tabulated { times, values } => {
                if t <= times[0] {
                    return values[0][i];
                }
                let last = times.len() - 1;
                if t >= times[last] {
                    return values[last][i];
                }
                let k = times.partition_point(|&s| s <= t) - 1;
                let f = (t - times[k]) / (times[k + 1] - times[k]);
                values[k][i] + f * (values[k + 1][i] - values[k][i])
            }
        }
    }

    /// Largest accuracy reached at any time.
    pub fn upper_bound(&self, i: usize) -> f64 {
        match self {
            LambdaSchedule::Saturating { limit, .. } => limit[i],
            LambdaSchedule::Tabulated { values, .. } => values.iter().map(|v| v[i]).fold(0.0, f64::max),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            LambdaSchedule::Saturating { limit, timescale } => {
                check_len(n, limit.len())?;
                check_len(n, timescale.len())?;
                if limit.iter().chain(timescale).any(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(invalid("saturating schedule needs positive limits and timescales"));
                }
            }
            LambdaSchedule::Tabulated { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(invalid("tabulated schedule needs one value row per time"));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("schedule times must be strictly increasing"));
                }
                for row in values {
                    check_len(n, row.len())?;
                    if row.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                        return Err(invalid("scheduled accuracies must be positive"));
                    }
                }
                if values.windows(2).any(|w| w[1].iter().zip(&w[0]).any(|(b, a)| b < a)) {
                    return Err(invalid("scheduled accuracies must be nondecreasing in time"));
                }
            }
        }
        Ok(())
    }
}

/// Per-agent payoff transforms applied before the dynamics see the game.
#[derive(Clone, Debug, PartialEq)]
pub enum PayoffTransform {
    /// `π ↦ (π − floor)^γ_i`.
    ReinforceBest { gamma: Vec<f64>, floor: f64 },
    /// `π ↦ π − û_i`.
    Aspiration { level: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BehavioralParams {
    pub psi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub eta: Vec<f64>,
    pub lambda_schedule: Option<LambdaSchedule>,
    pub transform: Option<PayoffTransform>,
}

fn invalid(msg: &str) -> Error {
    Error::InvalidParameter(msg.into())
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

impl BehavioralParams {
    pub fn new(psi: Vec<f64>, lambda: Vec<f64>, eta: Vec<f64>) -> Self {
        BehavioralParams {
            psi,
            lambda,
            eta,
            lambda_schedule: None,
            transform: None,
        }
    }

    pub fn uniform(n: usize, psi: f64, lambda: f64, eta: f64) -> Self {
        Self::new(vec![psi; n], vec![lambda; n], vec![eta; n])
    }

    pub fn with_schedule(mut self, schedule: LambdaSchedule) -> Self {
        self.lambda_schedule = Some(schedule);
        self
    }

    pub fn with_transform(mut self, transform: PayoffTransform) -> Self {
        self.transform = Some(transform);
        self
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_len(n, self.psi.len())?;
        check_len(n, self.lambda.len())?;
        check_len(n, self.eta.len())?;
        for i in 0..n {
            if !(self.psi[i] > 0.0 && self.psi[i].is_finite()) {
                return Err(Error::InvalidParameter(format!("psi[{i}] = {} must be positive", self.psi[i])));
            }
            if !(self.lambda[i] > 0.0 && self.lambda[i].is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "lambda[{i}] = {} must be positive",
                    self.lambda[i]
                )));
            }
            if !(0.0..=1.0).contains(&self.eta[i]) {
                return Err(Error::InvalidParameter(format!("eta[{i}] = {} outside [0, 1]", self.eta[i])));
            }
        }
        if let Some(s) = &self.lambda_schedule {
            s.validate(n)?;
        }
        match &self.transform {
            Some(PayoffTransform::ReinforceBest { gamma, .. }) => check_len(n, gamma.len())?,
            Some(PayoffTransform::Aspiration { level }) => check_len(n, level.len())?,
            None => {}
        }
        Ok(())
    }
}

/// A graph, a stage game and behavioural parameters, ready to evaluate.
#[derive(Clone, Debug)]
pub struct EwaSystem {
    graph: Graph,
    base: PayoffMatrix,
    payoffs: Vec<PayoffMatrix>,
    params: BehavioralParams,
}

impl EwaSystem {
    pub fn new(graph: Graph, payoff: PayoffMatrix, params: BehavioralParams) -> Result<Self> {
        let n = graph.n();
        params.validate(n)?;
        let payoffs = match &params.transform {
            None => vec![payoff; n],
            Some(PayoffTransform::Aspiration { level }) => level.iter().map(|&u| payoff.shifted(u)).collect(),
            Some(PayoffTransform::ReinforceBest { gamma, floor }) => gamma
                .iter()
                .map(|&g| payoff.reinforce_best(g, *floor))
                .collect::<Result<_>>()?,
        };
        Ok(EwaSystem {
            graph,
            base: payoff,
            payoffs,
            params,
        })
    }

    /// Same graph and game with different parameters.
    pub fn with_params(&self, params: BehavioralParams) -> Result<Self> {
        EwaSystem::new(self.graph.clone(), self.base, params)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn params(&self) -> &BehavioralParams {
        &self.params
    }

    /// The game as supplied, before any transform.
    pub fn base_payoff(&self) -> &PayoffMatrix {
        &self.base
    }

    /// The payoffs agent `i` learns from.
    pub fn payoff(&self, i: usize) -> &PayoffMatrix {
        &self.payoffs[i]
    }

    pub fn is_autonomous(&self) -> bool {
        self.params.lambda_schedule.is_none()
    }

    pub fn lambda_at(&self, i: usize, t: f64) -> f64 {
        match &self.params.lambda_schedule {
            Some(s) => s.lambda(i, t),
            None => self.params.lambda[i],
        }
    }

    fn fill_p(&self, q: &[f64], t: f64, p: &mut [f64]) {
        for (j, pj) in p.iter_mut().enumerate() {
            *pj = logit_response(q[j], self.lambda_at(j, t));
        }
    }

    /// `(Σ_j p_j, D-track sum, C-track sum)` over the neighbours of `i`.
    #[inline]
    fn neighbour_sums(&self, i: usize, p: &[f64]) -> (f64, f64) {
        let s: f64 = self.graph.neighbors(i).iter().map(|&j| p[j]).sum();
        let d = self.graph.degree(i) as f64;
        let PayoffMatrix { z, y, x, w } = self.payoffs[i];
        (w * s + x * (d - s), y * s + z * (d - s))
    }

    pub fn drift(&self, q: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        let mut p = vec![0.0; self.n()];
        self.drift_into(q, t, &mut out, &mut p);
        out
    }

    /// Allocation-free drift; `p` is scratch space of length `n`.
    pub fn drift_into(&self, q: &[f64], t: f64, out: &mut [f64], p: &mut [f64]) {
        self.fill_p(q, t, p);
        for i in 0..self.n() {
            let (a, b) = self.neighbour_sums(i, p);
            let (t1, t0) = tau(p[i], self.params.eta[i]);
            out[i] = -self.params.psi[i] * q[i] + t1 * a - t0 * b;
        }
    }

    /// The two-track attraction dynamics `(da1, da0)`.
    pub fn drift_full(&self, a1: &[f64], a0: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let q: Vec<f64> = a1.iter().zip(a0).map(|(a, b)| a - b).collect();
        let mut p = vec![0.0; n];
        self.fill_p(&q, t, &mut p);
        let mut da1 = vec![0.0; n];
        let mut da0 = vec![0.0; n];
        for i in 0..n {
            let (a, b) = self.neighbour_sums(i, &p);
            let (t1, t0) = tau(p[i], self.params.eta[i]);
            let psi = self.params.psi[i];
            da1[i] = -psi * a1[i] + t1 * a;
            da0[i] = -psi * a0[i] + t0 * b;
        }
        (da1, da0)
    }

    /// Coefficient `τ1_i (w − x) − τ0_i (y − z)` multiplying `G_ij dp_j/dq_j`.
    fn coupling(&self, i: usize, p_i: f64) -> f64 {
        let PayoffMatrix { z, y, x, w } = self.payoffs[i];
        let (t1, t0) = tau(p_i, self.params.eta[i]);
        t1 * (w - x) - t0 * (y - z)
    }

    /// Analytic Jacobian of the drift.
    pub fn jacobian(&self, q: &[f64], t: f64) -> DMatrix<f64> {
        let n = self.n();
        let mut p = vec![0.0; n];
        self.fill_p(q, t, &mut p);
        let slope: Vec<f64> = (0..n).map(|j| logit_slope(q[j], self.lambda_at(j, t))).collect();
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            let (a, b) = self.neighbour_sums(i, &p);
            jac[(i, i)] = -self.params.psi[i] + slope[i] * (1.0 - self.params.eta[i]) * (a + b);
            let c = self.coupling(i, p[i]);
            for &j in self.graph.neighbors(i) {
                jac[(i, j)] = c * slope[j];
            }
        }
        jac
    }

    /// Whether every off-diagonal partial derivative is nonnegative at `q`.
    pub fn cooperativity_check(&self, q: &[f64], t: f64) -> bool {
        let jac = self.jacobian(q, t);
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| i == j || jac[(i, j)] >= 0.0))
    }

    /// `U_i = (1 + η_i) d_i max|π|`, which bounds `|F_i(q) + ψ_i q_i|`.
    pub fn drive_bound(&self, i: usize) -> f64 {
        (1.0 + self.params.eta[i]) * self.graph.degree(i) as f64 * self.payoffs[i].max_abs_entry()
    }

    /// Per-agent box `U_i / ψ_i` containing every fixed point.
    pub fn magnitude_bounds(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.drive_bound(i) / self.params.psi[i]).collect()
    }

    /// `d_max · (max π − min π)` over the effective payoffs.
    pub fn payoff_scale(&self) -> f64 {
        let range = self
            .payoffs
            .iter()
            .map(|p| {
                let e = p.entries();
                let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max);
        self.graph.max_degree() as f64 * range
    }

    /// Default RK4 step `0.01 / max_i max(ψ_i, λ_i · payoff scale)`.
    pub fn default_dt(&self) -> f64 {
        let scale = self.payoff_scale();
        let rate = (0..self.n())
            .map(|i| {
                let lam = match &self.params.lambda_schedule {
                    Some(s) => s.upper_bound(i),
                    None => self.params.lambda[i],
                };
                self.params.psi[i].max(lam * scale)
            })
            .fold(0.0, f64::max);
        0.01 / rate
    }

    /// Gershgorin bound on the spectral radius of the Jacobian at any state
    /// and time.
    pub fn stiffness_bound(&self) -> f64 {
        let lam_max = (0..self.n())
            .map(|i| match &self.params.lambda_schedule {
                Some(s) => s.upper_bound(i),
                None => self.params.lambda[i],
            })
            .fold(0.0, f64::max);
        (0..self.n())
            .map(|i| {
                let p = &self.payoffs[i];
                let d = self.graph.degree(i) as f64;
                let e = p.entries();
                let range = e.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    - e.iter().copied().fold(f64::INFINITY, f64::min);
                self.params.psi[i] + lam_max / 4.0 * 2.0 * d * (p.max_abs_entry() + range)
            })
            .fold(0.0, f64::max)
    }

    /// `max_i |F_i(q)|`.
    pub fn residual(&self, q: &[f64], t: f64) -> f64 {
        self.drift(q, t).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The `λ → 0` limit of the drift for uniform payoffs:
/// `−ψ ∘ q + ((w + x − y − z) / 2) ((1 + η) / 2) ∘ G·1`.
pub fn low_accuracy_limit_drift(sys: &EwaSystem, q: &[f64]) -> Vec<f64> {
    let PayoffMatrix { z, y, x, w } = *sys.base_payoff();
    let k = (w + x - y - z) / 2.0;
    (0..sys.n())
        .map(|i| {
            let p = sys.params();
            -p.psi[i] * q[i] + k * (1.0 + p.eta[i]) / 2.0 * sys.graph().degree(i) as f64
        })
        .collect()
}
