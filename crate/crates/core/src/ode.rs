//! Explicit integrators with convergence and divergence detection.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::EwaSystem;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stepper {
    /// Classical fourth-order Runge–Kutta at a fixed step.
    Rk4 { dt: f64 },
    /// Adaptive Dormand–Prince 5(4) with a mixed error test
    /// `|err_i| ≤ atol + rtol · |q_i|`.
    DormandPrince { rtol: f64, atol: f64, initial_dt: f64, max_dt: f64 },
}

impl Stepper {
    pub fn dormand_prince(rtol: f64, atol: f64) -> Self {
        Stepper::DormandPrince {
            rtol,
            atol,
            initial_dt: 1e-3,
            max_dt: f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationConfig {
    pub stepper: Stepper,
    pub horizon: f64,
    /// Converged once `‖F‖∞ ≤ conv_tol` on `conv_window` consecutive steps.
    pub conv_tol: f64,
    pub conv_window: usize,
    /// Minimum time between stored samples; `0` stores every step.
    pub sample_every: f64,
    pub divergence_bound: f64,
    /// Stop as soon as every `|q_i|` exceeds this margin with a common sign.
    pub sign_lock: Option<f64>,
    pub max_steps: usize,
}

impl IntegrationConfig {
    pub fn rk4(dt: f64) -> Self {
        IntegrationConfig {
            stepper: Stepper::Rk4 { dt },
            ..Self::default()
        }
    }

    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        IntegrationConfig {
            stepper: Stepper::dormand_prince(rtol, atol),
            ..Self::default()
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_sampling(mut self, every: f64) -> Self {
        self.sample_every = every;
        self
    }

    pub fn with_conv_tol(mut self, tol: f64) -> Self {
        self.conv_tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.stepper {
            Stepper::Rk4 { dt } => dt > 0.0 && dt.is_finite(),
            Stepper::DormandPrince {
                rtol,
                atol,
                initial_dt,
                max_dt,
            } => rtol >= 0.0 && atol >= 0.0 && rtol + atol > 0.0 && initial_dt > 0.0 && max_dt > 0.0,
        };
        if !ok {
            return Err(Error::InvalidParameter("step controls must be positive".into()));
        }
        if !(self.horizon > 0.0) || self.conv_window == 0 {
            return Err(Error::InvalidParameter("horizon and convergence window must be positive".into()));
        }
        Ok(())
    }
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            stepper: Stepper::Rk4 { dt: 0.01 },
            horizon: 1e4,
            conv_tol: 1e-9,
            conv_window: 10,
            sample_every: 0.0,
            divergence_bound: 1e12,
            sign_lock: None,
            max_steps: usize::MAX,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalStatus {
    Converged,
    HorizonReached,
    Diverged,
    /// Stopped early by the sign-lock rule.
    SignLocked,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub q: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// Strictly increasing in time; the first sample is the initial state and
    /// the last one the terminal (last finite) state.
    pub samples: Vec<Sample>,
    pub status: TerminalStatus,
    pub steps: usize,
    /// `‖F‖∞` at the terminal state.
    pub final_residual: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        &self.samples.last().expect("trajectory has samples").q
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().expect("trajectory has samples").t
    }

    pub fn converged(&self) -> bool {
        self.status == TerminalStatus::Converged
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sign_locked(q: &[f64], margin: f64) -> bool {
    q.iter().all(|&v| v > margin) || q.iter().all(|&v| v < -margin)
}

struct Recorder<'a> {
    cfg: &'a IntegrationConfig,
    samples: Vec<Sample>,
    streak: usize,
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, q: &[f64]) {
        let last = self.samples.last().map_or(f64::NEG_INFINITY, |s| s.t);
        if t - last >= self.cfg.sample_every && t > last {
            self.samples.push(Sample { t, q: q.to_vec() });
        }
    }

    fn finish(mut self, t: f64, q: &[f64], status: TerminalStatus, steps: usize, residual: f64) -> Trajectory {
        match self.samples.last_mut() {
            Some(s) if s.t == t => s.q.copy_from_slice(q),
            _ => self.samples.push(Sample { t, q: q.to_vec() }),
        }
        Trajectory {
            samples: self.samples,
            status,
            steps,
            final_residual: residual,
        }
    }

    /// Updates the convergence streak with the residual at the current state.
    fn converged(&mut self, residual: f64) -> bool {
        if residual <= self.cfg.conv_tol {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.cfg.conv_window
    }
}

/// Integrates `dq/dt = f(t, q)` from `q0` at `t = 0`.
///
/// `f(t, q, out)` writes the drift into `out`.
pub fn integrate_fn<F>(mut f: F, q0: &[f64], cfg: &IntegrationConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    cfg.validate()?;
    if q0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("initial state must be finite".into()));
    }
    match cfg.stepper {
        Stepper::Rk4 { dt } => rk4(&mut f, q0, dt, cfg),
        Stepper::DormandPrince {
            rtol,
            atol,
            initial_dt,
            max_dt,
        } => dopri(&mut f, q0, (rtol, atol, initial_dt, max_dt), cfg),
    }
}

/// Integrates the EWA dynamics of `sys` from `q0`.
pub fn integrate(sys: &EwaSystem, q0: &[f64], cfg: &IntegrationConfig) -> Result<Trajectory> {
    if q0.len() != sys.n() {
        return Err(Error::LengthMismatch {
            expected: sys.n(),
            got: q0.len(),
        });
    }
    let mut cfg = *cfg;
    if let Stepper::DormandPrince { max_dt, .. } = &mut cfg.stepper {
        // Large steps near a stable point can otherwise park the solution on
        // a spurious fixed point of the discrete map.
        *max_dt = max_dt.min(3.0 / sys.stiffness_bound());
    }
    let mut p = vec![0.0; sys.n()];
    integrate_fn(|t, q, out| sys.drift_into(q, t, out, &mut p), q0, &cfg)
}

fn out_of_bounds(q: &[f64], bound: f64) -> bool {
    q.iter().any(|v| !v.is_finite() || v.abs() > bound)
}

fn rk4<F>(f: &mut F, q0: &[f64], dt: f64, cfg: &IntegrationConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = q0.len();
    let mut rec = Recorder {
        cfg,
        samples: Vec::new(),
        streak: 0,
    };
    let mut q = q0.to_vec();
    let mut t = 0.0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    rec.push(t, &q);
    let mut steps = 0usize;
    loop {
        f(t, &q, &mut k1);
        let residual = sup_norm(&k1);
        if rec.converged(residual) {
            return Ok(rec.finish(t, &q, TerminalStatus::Converged, steps, residual));
        }
        if let Some(m) = cfg.sign_lock {
            if sign_locked(&q, m) {
                return Ok(rec.finish(t, &q, TerminalStatus::SignLocked, steps, residual));
            }
        }
        if t >= cfg.horizon * (1.0 - 1e-12) || steps >= cfg.max_steps {
            return Ok(rec.finish(t, &q, TerminalStatus::HorizonReached, steps, residual));
        }
        let h = dt.min(cfg.horizon - t);
        for i in 0..n {
            tmp[i] = q[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = q[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = q[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = q[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        steps += 1;
        if out_of_bounds(&tmp, cfg.divergence_bound) {
            return Ok(rec.finish(t, &q, TerminalStatus::Diverged, steps, residual));
        }
        q.copy_from_slice(&tmp);
        t = if cfg.horizon - t <= dt { cfg.horizon } else { t + h };
        rec.push(t, &q);
    }
}

const PI_BETA: f64 = 0.04;

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri<F>(f: &mut F, q0: &[f64], ctl: (f64, f64, f64, f64), cfg: &IntegrationConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (rtol, atol, initial_dt, max_dt) = ctl;
    let n = q0.len();
    let mut rec = Recorder {
        cfg,
        samples: Vec::new(),
        streak: 0,
    };
    let mut q = q0.to_vec();
    let mut t = 0.0;
    let mut k = [(); 7].map(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut next = vec![0.0; n];
    rec.push(t, &q);
    f(t, &q, &mut k[0]);
    let mut h = initial_dt.min(max_dt);
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut err_old: f64 = 1e-4;
    loop {
        let residual = sup_norm(&k[0]);
        if rec.converged(residual) {
            return Ok(rec.finish(t, &q, TerminalStatus::Converged, steps, residual));
        }
        if let Some(m) = cfg.sign_lock {
            if sign_locked(&q, m) {
                return Ok(rec.finish(t, &q, TerminalStatus::SignLocked, steps, residual));
            }
        }
        if t >= cfg.horizon * (1.0 - 1e-12) || steps + rejected >= cfg.max_steps {
            return Ok(rec.finish(t, &q, TerminalStatus::HorizonReached, steps, residual));
        }
        loop {
            let last = h >= cfg.horizon - t;
            let hh = if last { cfg.horizon - t } else { h };
            let stage = |tmp: &mut [f64], coeffs: &[(usize, f64)], k: &[Vec<f64>]| {
                for i in 0..n {
                    let mut acc = q[i];
                    for &(s, a) in coeffs {
                        acc += hh * a * k[s][i];
                    }
                    tmp[i] = acc;
                }
            };
            stage(&mut tmp, &[(0, A21)], &k);
            f(t + C2 * hh, &tmp, &mut k[1]);
            stage(&mut tmp, &[(0, A31), (1, A32)], &k);
            f(t + C3 * hh, &tmp, &mut k[2]);
            stage(&mut tmp, &[(0, A41), (1, A42), (2, A43)], &k);
            f(t + C4 * hh, &tmp, &mut k[3]);
            stage(&mut tmp, &[(0, A51), (1, A52), (2, A53), (3, A54)], &k);
            f(t + C5 * hh, &tmp, &mut k[4]);
            stage(&mut tmp, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k);
            f(t + hh, &tmp, &mut k[5]);
            stage(&mut next, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], &k);
            f(t + hh, &next, &mut k[6]);
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = hh
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = atol + rtol * q[i].abs().max(next[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() || out_of_bounds(&next, cfg.divergence_bound) {
                if hh < 1e-14 * (1.0 + t) {
                    return Ok(rec.finish(t, &q, TerminalStatus::Diverged, steps, residual));
                }
                h = hh * 0.1;
                rejected += 1;
                continue;
            }
            // Proportional-integral step control keeps the step from cycling
            // at the stability boundary once the solution settles.
            let err = err.max(1e-12);
            let fac11 = libm::pow(err, 0.2 - 0.75 * PI_BETA);
            if err <= 1.0 {
                let factor = (0.9 / (fac11 / libm::pow(err_old, PI_BETA))).clamp(0.1, 5.0);
                err_old = err.max(1e-4);
                q.copy_from_slice(&next);
                t = if last { cfg.horizon } else { t + hh };
                k.swap(0, 6);
                steps += 1;
                h = (hh * factor).min(max_dt);
                rec.push(t, &q);
                break;
            }
            h = hh * (0.9 / fac11).clamp(0.1, 1.0);
            rejected += 1;
            if rejected > cfg.max_steps.saturating_sub(steps) || h < 1e-14 * (1.0 + t) {
                return Ok(rec.finish(t, &q, TerminalStatus::Diverged, steps, residual));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let cfg = IntegrationConfig::rk4(0.01).with_horizon(2.0);
        let tr = integrate_fn(|_, q, out| out[0] = -q[0], &[1.0], &cfg).unwrap();
        assert_eq!(tr.status, TerminalStatus::HorizonReached);
        assert!((tr.final_time() - 2.0).abs() < 1e-12);
        assert!((tr.final_state()[0] - libm::exp(-2.0)).abs() < 1e-9);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));

        let cfg = IntegrationConfig::adaptive(1e-10, 1e-12).with_horizon(2.0);
        let tr = integrate_fn(|_, q, out| out[0] = -q[0], &[1.0], &cfg).unwrap();
        assert!((tr.final_state()[0] - libm::exp(-2.0)).abs() < 1e-9);
    }

    #[test]
    fn time_dependent_drift() {
        let cfg = IntegrationConfig::adaptive(1e-10, 1e-12).with_horizon(1.0);
        let tr = integrate_fn(|t, _, out| out[0] = 2.0 * t, &[0.0], &cfg).unwrap();
        assert!((tr.final_state()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn convergence_and_divergence() {
        let cfg = IntegrationConfig::rk4(0.1);
        let tr = integrate_fn(|_, q, out| out[0] = 1.0 - q[0], &[0.0], &cfg).unwrap();
        assert!(tr.converged());
        assert!(tr.final_residual <= 1e-9);

        let tr = integrate_fn(|_, q, out| out[0] = q[0] * q[0], &[1.0], &cfg.with_horizon(10.0)).unwrap();
        assert_eq!(tr.status, TerminalStatus::Diverged);
        assert!(tr.final_state()[0].is_finite());
    }

    #[test]
    fn sampling_thins_output() {
        let cfg = IntegrationConfig::rk4(0.01).with_horizon(1.0).with_sampling(0.25);
        let tr = integrate_fn(|_, _, out| out[0] = 1.0, &[0.0], &cfg).unwrap();
        assert!(tr.samples.len() <= 6, "{}", tr.samples.len());
        assert!((tr.final_time() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_config() {
        assert!(integrate_fn(|_, _, _| {}, &[0.0], &IntegrationConfig::rk4(0.0)).is_err());
        assert!(integrate_fn(|_, _, _| {}, &[f64::NAN], &IntegrationConfig::rk4(0.1)).is_err());
    }
}
