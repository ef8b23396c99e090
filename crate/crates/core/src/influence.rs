//! Linear analysis at the neutral state `q = 0` of a symmetric game.
//!
//! When every agent's payoffs have the form `z = w = h`, `y = x = l`, the
//! Jacobian at the origin is
//!
//! ```text
//! J_ii = −ψ_i + (1 − η_i) d_i (h + l) λ_i / 4
//! J_ij = G_ij (1 + η_i) (h − l) λ_j / 4
//! ```
//!
//! i.e. `J = D + C G Λ` with positive diagonal `C` and `Λ`. Conjugating by
//! `T = diag(√(c_i / λ_i))` gives the symmetric `S = D + (CΛ)^½ G (CΛ)^½`,
//! so the spectrum is real, right eigenvectors are `T w` and left ones
//! `T⁻¹ w` for eigenvectors `w` of `S`. Eigenpairs are found by shifted power
//! iteration on `S` and then checked against `J` and `Jᵀ` directly.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{BehavioralParams, EwaSystem};
use crate::{Error, Result};

/// Largest `n` for which a dense copy of the operator is kept for
/// Rayleigh quotient refinement.
const DENSE_POLISH_CAP: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfluenceConfig {
    /// Bound on `‖J v − κ v‖∞` for unit-norm eigenvectors.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest `n` for which the full spectrum is computed.
    pub spectrum_cap: usize,
    /// Smallest eigenvalue separation accepted for the full decomposition.
    pub gap_tol: f64,
}

impl Default for InfluenceConfig {
    fn default() -> Self {
        InfluenceConfig {
            tol: 1e-10,
            max_iter: 1_000_000,
            spectrum_cap: 50,
            gap_tol: 1e-8,
        }
    }
}

/// The neutral-state Jacobian as a sparse operator.
#[derive(Clone, Debug)]
pub struct NeutralJacobian {
    diag: Vec<f64>,
    /// `(1 + η_i)(h_i − l_i) / 4`.
    row: Vec<f64>,
    /// `λ_j`.
    col: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
}

impl NeutralJacobian {
    pub fn new(sys: &EwaSystem) -> Result<Self> {
        if !sys.is_autonomous() {
            return Err(Error::InvalidParameter(
                "neutral-state analysis needs a constant accuracy".into(),
            ));
        }
        let n = sys.n();
        let p = sys.params();
        let mut diag = Vec::with_capacity(n);
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            let (h, l) = sys.payoff(i).symmetric_form().ok_or(Error::NotSymmetric)?;
            if !(h > l) {
                return Err(Error::NotSymmetric);
            }
            let d = sys.graph().degree(i) as f64;
            diag.push(-p.psi[i] + (1.0 - p.eta[i]) * d * (h + l) * p.lambda[i] / 4.0);
            row.push((1.0 + p.eta[i]) * (h - l) / 4.0);
        }
        Ok(NeutralJacobian {
            diag,
            row,
            col: p.lambda.clone(),
            neighbors: (0..n).map(|i| sys.graph().neighbors(i).to_vec()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `y = J x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n() {
            let s: f64 = self.neighbors[i].iter().map(|&j| self.col[j] * x[j]).sum();
            y[i] = self.diag[i] * x[i] + self.row[i] * s;
        }
    }

    /// `y = Jᵀ x`.
    pub fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        for j in 0..self.n() {
            let s: f64 = self.neighbors[j].iter().map(|&i| self.row[i] * x[i]).sum();
            y[j] = self.diag[j] * x[j] + self.col[j] * s;
        }
    }

    /// `y = S x` for the symmetrised operator.
    fn apply_symmetric(&self, scale: &[f64], x: &[f64], y: &mut [f64]) {
        for i in 0..self.n() {
            let s: f64 = self.neighbors[i].iter().map(|&j| scale[j] * x[j]).sum();
            y[i] = self.diag[i] * x[i] + scale[i] * s;
        }
    }

    /// `√(c_i λ_i)`.
    fn sym_scale(&self) -> Vec<f64> {
        self.row.iter().zip(&self.col).map(|(c, l)| libm::sqrt(c * l)).collect()
    }

    /// `T_ii = √(c_i / λ_i)`.
    fn similarity(&self) -> Vec<f64> {
        self.row.iter().zip(&self.col).map(|(c, l)| libm::sqrt(c / l)).collect()
    }

    /// `max |J_ii| + max_i Σ_j |J_ij|`; adding it makes every eigenvalue of
    /// the symmetrised operator nonnegative.
    pub fn shift(&self) -> f64 {
        let d = self.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let off = (0..self.n())
            .map(|i| self.row[i] * self.neighbors[i].iter().map(|&j| self.col[j]).sum::<f64>())
            .fold(0.0, f64::max);
        d + off
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &j in &self.neighbors[i] {
                m[(i, j)] = self.row[i] * self.col[j];
            }
        }
        m
    }

    fn dense_symmetric(&self) -> DMatrix<f64> {
        let n = self.n();
        let s = self.sym_scale();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &j in &self.neighbors[i] {
                m[(i, j)] = s[i] * s[j];
            }
        }
        m
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn scale_in_place(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|v| *v *= s);
}

fn sup_residual(mx: &[f64], kappa: f64, x: &[f64]) -> f64 {
    mx.iter().zip(x).fold(0.0, |m, (a, b)| m.max((a - kappa * b).abs()))
}

/// Dominant eigenpair of a symmetric operator whose spectrum, after adding
/// `shift`, is nonnegative. `deflate` holds already found `(κ, w)` pairs.
///
/// With `dense` given, the iterate is finished by Rayleigh quotient
/// iteration once the residual is below `1e-6·shift`.
fn power_iteration<F>(
    n: usize,
    mut apply: F,
    shift: f64,
    deflate: &[(f64, Vec<f64>)],
    start: &[f64],
    dense: Option<&DMatrix<f64>>,
    cfg: &InfluenceConfig,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut polish_at = dense.map(|_| (1e-6 * shift).max(cfg.tol));
    let mut x = start.to_vec();
    let project = |x: &mut [f64]| {
        for (_, w) in deflate {
            let c = dot(x, w);
            x.iter_mut().zip(w).for_each(|(a, b)| *a -= c * b);
        }
    };
    project(&mut x);
    let norm = l2(&x);
    if norm == 0.0 {
        return Err(Error::Inconsistent("power iteration start is degenerate".into()));
    }
    scale_in_place(&mut x, 1.0 / norm);
    let mut y = vec![0.0; n];
    for _ in 0..cfg.max_iter {
        apply(&x, &mut y);
        let kappa = dot(&x, &y);
        let res = sup_residual(&y, kappa, &x);
        if res <= cfg.tol {
            return Ok((kappa, x));
        }
        if let (Some(m), Some(loose)) = (dense, polish_at) {
            if res <= loose {
                if let Some(pair) = rayleigh_polish(m, &x, kappa - res, &project, cfg.tol) {
                    return Ok(pair);
                }
                polish_at = None;
            }
        }
        for i in 0..n {
            y[i] += shift * x[i];
        }
        project(&mut y);
        let norm = l2(&y);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Inconsistent("power iteration collapsed".into()));
        }
        for i in 0..n {
            x[i] = y[i] / norm;
        }
    }
    Err(Error::NoConvergence {
        what: "power iteration",
        iterations: cfg.max_iter,
    })
}

/// Rayleigh quotient iteration from `x`. Gives up if the quotient drops
/// below `floor`, i.e. the iteration is heading for a lower eigenvalue.
fn rayleigh_polish(
    m: &DMatrix<f64>,
    x: &[f64],
    floor: f64,
    project: &dyn Fn(&mut [f64]),
    tol: f64,
) -> Option<(f64, Vec<f64>)> {
    let n = x.len();
    let mut x = DVector::from_column_slice(x);
    let mut kappa = x.dot(&(m * &x));
    for _ in 0..8 {
        let shifted = m - DMatrix::identity(n, n) * kappa;
        let mut y = shifted.lu().solve(&x)?;
        project(y.as_mut_slice());
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        x = y / norm;
        let mx = m * &x;
        kappa = x.dot(&mx);
        if kappa < floor {
            return None;
        }
        if sup_residual(mx.as_slice(), kappa, x.as_slice()) <= tol {
            return Some((kappa, x.as_slice().to_vec()));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceReport {
    /// Largest eigenvalue of the neutral Jacobian.
    pub kappa1: f64,
    /// Right eigenvector, unit L2 norm, oriented to a positive sum.
    pub v1: Vec<f64>,
    /// Left eigenvector (the influence vector), scaled to sum to one.
    pub xi: Vec<f64>,
    /// Remaining eigenvalues in decreasing order; empty when the full
    /// spectrum was not computed.
    pub subdominant_eigenvalues: Vec<f64>,
    pub unstable: bool,
    pub all_positive_v1: bool,
    pub right_residual: f64,
    pub left_residual: f64,
}

/// Dominant eigenpairs of the neutral Jacobian.
pub fn influence_report(sys: &EwaSystem, cfg: &InfluenceConfig) -> Result<InfluenceReport> {
    let jac = NeutralJacobian::new(sys)?;
    let n = jac.n();
    let scale = jac.sym_scale();
    let t = jac.similarity();
    // Start from T⁻¹·1, the symmetrised image of the uniform vector.
    let start: Vec<f64> = t.iter().map(|v| 1.0 / v).collect();
    // Residuals of `S` grow by at most max T / min T when mapped back to `J`.
    let (t_min, t_max) = t.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let sym_cfg = InfluenceConfig {
        tol: (cfg.tol * t_min / t_max).max(8.0 * f64::EPSILON * jac.shift()),
        ..*cfg
    };
    let dense = (n <= DENSE_POLISH_CAP).then(|| jac.dense_symmetric());
    let (kappa, w) = power_iteration(
        n,
        |x, y| jac.apply_symmetric(&scale, x, y),
        jac.shift(),
        &[],
        &start,
        dense.as_ref(),
        &sym_cfg,
    )?;

    let mut v1: Vec<f64> = w.iter().zip(&t).map(|(a, b)| a * b).collect();
    let mut xi: Vec<f64> = w.iter().zip(&t).map(|(a, b)| a / b).collect();
    let s = v1.iter().sum::<f64>().signum();
    let norm = l2(&v1);
    scale_in_place(&mut v1, s / norm);
    let total: f64 = xi.iter().sum();
    scale_in_place(&mut xi, 1.0 / total);

    let mut buf = vec![0.0; n];
    jac.apply(&v1, &mut buf);
    let right_residual = sup_residual(&buf, kappa, &v1);
    jac.apply_transpose(&xi, &mut buf);
    let left_residual = sup_residual(&buf, kappa, &xi) / l2(&xi);
    if right_residual > 10.0 * cfg.tol.max(1e-14 * jac.shift()) || left_residual > 1e3 * cfg.tol {
        return Err(Error::Inconsistent(alloc::format!(
            "eigenpair residuals {right_residual:e} / {left_residual:e} exceed tolerance"
        )));
    }

    let subdominant_eigenvalues = if n <= cfg.spectrum_cap {
        match spectral_decomposition_of(&jac, cfg) {
            Ok(spec) => spec.pairs.iter().skip(1).map(|p| p.kappa).collect(),
            Err(_) => Vec::new(),
        }
    } else {
        Vec::new()
    };

    Ok(InfluenceReport {
        kappa1: kappa,
        all_positive_v1: v1.iter().all(|&v| v > 0.0),
        v1,
        xi,
        subdominant_eigenvalues,
        unstable: kappa > 0.0,
        right_residual,
        left_residual,
    })
}

/// Asymptotic stability of the neutral state.
pub fn neutral_stability(report: &InfluenceReport) -> bool {
    report.kappa1 < 0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prediction {
    D,
    C,
    Indeterminate,
}

/// Predicts the long-run consensus from the sign of `ξ · q0`.
///
/// Refuses when the neutral state is stable or `v1` is not entrywise
/// positive, since the sign rule is only justified under those conditions.
pub fn predict_coordination(report: &InfluenceReport, q0: &[f64]) -> Result<Prediction> {
    if !report.unstable {
        return Err(Error::PredictionUndefined("neutral state is not unstable"));
    }
    if !report.all_positive_v1 {
        return Err(Error::PredictionUndefined("principal right eigenvector is not positive"));
    }
    if q0.len() != report.xi.len() {
        return Err(Error::LengthMismatch {
            expected: report.xi.len(),
            got: q0.len(),
        });
    }
    let s = dot(&report.xi, q0);
    Ok(if s.abs() <= 1e-12 * l2(q0) {
        Prediction::Indeterminate
    } else if s > 0.0 {
        Prediction::D
    } else {
        Prediction::C
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub kappa: f64,
    /// Right eigenvector.
    pub v: Vec<f64>,
    /// Left eigenvector, scaled so that `u · v = 1`.
    pub u: Vec<f64>,
}

/// Full eigendecomposition of the neutral Jacobian, eigenvalues decreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedSolution {
    /// `Σ_r (u_r · q0) e^{κ_r t} v_r`, when the full spectrum is available.
    pub full: Option<Vec<f64>>,
    /// The first term of the sum only.
    pub principal: Vec<f64>,
}

pub fn spectral_decomposition(sys: &EwaSystem, cfg: &InfluenceConfig) -> Result<Spectrum> {
    spectral_decomposition_of(&NeutralJacobian::new(sys)?, cfg)
}

/// Repeated power iteration with deflation on the symmetrised operator.
fn spectral_decomposition_of(jac: &NeutralJacobian, cfg: &InfluenceConfig) -> Result<Spectrum> {
    let n = jac.n();
    if n > cfg.spectrum_cap {
        return Err(Error::TooManyAgents { n, cap: cfg.spectrum_cap });
    }
    let dense = jac.dense_symmetric();
    let shift = jac.shift();
    let mut found: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    let mut rng = crate::rng::CounterRng::new(0x5eed);
    for _ in 0..n {
        let start: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = (0..n).map(|j| dense[(i, j)] * x[j]).sum();
            }
        };
        let (kappa, w) = power_iteration(n, apply, shift, &found, &start, Some(&dense), cfg).map_err(|e| match e {
            Error::NoConvergence { .. } => Error::NearDefective {
                gap: smallest_gap(&dense),
            },
            other => other,
        })?;
        found.push((kappa, w));
    }
    found.sort_by(|a, b| b.0.total_cmp(&a.0));
    let gap = found.windows(2).map(|w| w[0].0 - w[1].0).fold(f64::INFINITY, f64::min);
    if gap < cfg.gap_tol {
        return Err(Error::NearDefective { gap });
    }
    let t = jac.similarity();
    let pairs = found
        .into_iter()
        .map(|(kappa, w)| EigenPair {
            kappa,
            v: w.iter().zip(&t).map(|(a, b)| a * b).collect(),
            u: w.iter().zip(&t).map(|(a, b)| a / b).collect(),
        })
        .collect();
    Ok(Spectrum { pairs })
}

/// Smallest eigenvalue separation, for the error report when deflation stalls.
fn smallest_gap(dense: &DMatrix<f64>) -> f64 {
    let mut ev: Vec<f64> = dense.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

impl Spectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.kappa).collect()
    }
}

/// The linearised trajectory `q̂(t)` from `q0`.
pub fn linearized_solution(
    report: &InfluenceReport,
    spectrum: Option<&Spectrum>,
    q0: &[f64],
    t: f64,
) -> LinearizedSolution {
    let coef = dot(&report.xi, q0) / dot(&report.xi, &report.v1) * libm::exp(report.kappa1 * t);
    let principal = report.v1.iter().map(|v| coef * v).collect();
    let full = spectrum.map(|s| {
        let mut out = vec![0.0; q0.len()];
        for p in &s.pairs {
            let c = dot(&p.u, q0) * libm::exp(p.kappa * t);
            out.iter_mut().zip(&p.v).for_each(|(o, v)| *o += c * v);
        }
        out
    });
    LinearizedSolution { full, principal }
}

/// Finite-difference response of `ξ_agent` to `ψ_agent ± δ` and `λ_agent ± δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparativeStatics {
    pub agent: usize,
    pub delta: f64,
    pub xi: f64,
    pub psi_up: f64,
    pub psi_down: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Smallest eigenvalue gap `κ1 − κ2` seen across the perturbed systems,
    /// when the full spectrum was available.
    pub min_gap: Option<f64>,
}

impl ComparativeStatics {
    /// `ξ_i` falls as `ψ_i` rises.
    pub fn decreasing_in_psi(&self) -> bool {
        self.psi_up < self.xi && self.psi_down > self.xi
    }

    /// `ξ_i` rises with `λ_i`.
    pub fn increasing_in_lambda(&self) -> bool {
        self.lambda_up > self.xi && self.lambda_down < self.xi
    }
}

pub fn comparative_statics_probe(
    sys: &EwaSystem,
    agent: usize,
    delta: f64,
    cfg: &InfluenceConfig,
) -> Result<ComparativeStatics> {
    let n = sys.n();
    if agent >= n {
        return Err(Error::NodeOutOfRange { node: agent, n });
    }
    let base = sys.params();
    if !(delta > 0.0) || base.psi[agent] <= delta || base.lambda[agent] <= delta {
        return Err(Error::InvalidParameter(alloc::format!(
            "delta {delta} must be positive and below psi and lambda of agent {agent}"
        )));
    }
    let mut min_gap: Option<f64> = None;
    let mut xi_with = |edit: &dyn Fn(&mut BehavioralParams)| -> Result<f64> {
        let mut p = base.clone();
        edit(&mut p);
        let s = sys.with_params(p)?;
        let r = influence_report(&s, cfg)?;
        if let Some(&k2) = r.subdominant_eigenvalues.first() {
            let g = r.kappa1 - k2;
            min_gap = Some(min_gap.map_or(g, |m: f64| m.min(g)));
        }
        Ok(r.xi[agent])
    };
    let xi = xi_with(&|_| {})?;
    let psi_up = xi_with(&|p| p.psi[agent] += delta)?;
    let psi_down = xi_with(&|p| p.psi[agent] -= delta)?;
    let lambda_up = xi_with(&|p| p.lambda[agent] += delta)?;
    let lambda_down = xi_with(&|p| p.lambda[agent] -= delta)?;
    Ok(ComparativeStatics {
        agent,
        delta,
        xi,
        psi_up,
        psi_down,
        lambda_up,
        lambda_down,
        min_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::PayoffMatrix;
    use crate::graph::Graph;

    fn example3() -> EwaSystem {
        EwaSystem::new(
            Graph::star(3),
            PayoffMatrix::symmetric(2.0, -1.0),
            BehavioralParams::new(vec![1.0, 1.0, 0.5], vec![0.5, 0.5, 1.0], vec![0.5; 3]),
        )
        .unwrap()
    }

    #[test]
    fn neutral_jacobian_entries() {
        let j = NeutralJacobian::new(&example3()).unwrap().to_dense();
        let expected = [[-0.875, 0.5625, 1.125], [0.5625, -0.9375, 0.0], [0.5625, 0.0, -0.375]];
        for i in 0..3 {
            for k in 0..3 {
                assert!((j[(i, k)] - expected[i][k]).abs() < 1e-15);
            }
        }
        let full = example3().jacobian(&[0.0; 3], 0.0);
        assert!((full - j).abs().max() < 1e-15);
    }

    #[test]
    fn example3_report() {
        let r = influence_report(&example3(), &InfluenceConfig::default()).unwrap();
        assert!((r.kappa1 - 0.30705).abs() < 1e-4);
        let v: Vec<f64> = r.v1.iter().map(|x| x / r.v1[2]).collect();
        for (a, b) in v.iter().zip([1.2125, 0.5480, 1.0]) {
            assert!((a - b).abs() < 1e-3);
        }
        for (a, b) in r.xi.iter().zip([0.32243, 0.14573, 0.53184]) {
            assert!((a - b).abs() < 1e-4);
        }
        assert_eq!(r.subdominant_eigenvalues.len(), 2);
        assert!((r.subdominant_eigenvalues[0] + 0.75843).abs() < 1e-4);
        assert!((r.subdominant_eigenvalues[1] + 1.73612).abs() < 1e-4);
        assert_eq!(predict_coordination(&r, &[0.1, 0.1, -0.18]).unwrap(), Prediction::C);
        assert_eq!(predict_coordination(&r, &r.v1).unwrap(), Prediction::D);
        assert_eq!(predict_coordination(&r, &[0.0; 3]).unwrap(), Prediction::Indeterminate);
    }

    #[test]
    fn stable_neutral_state_refuses_prediction() {
        let sys = example3()
            .with_params(BehavioralParams::uniform(3, 5.0, 0.1, 0.5))
            .unwrap();
        let r = influence_report(&sys, &InfluenceConfig::default()).unwrap();
        assert!(neutral_stability(&r));
        assert!(predict_coordination(&r, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn asymmetric_payoffs_rejected() {
        let sys = EwaSystem::new(
            Graph::path(2),
            PayoffMatrix::new(4.0, -2.0, 1.0, 2.0),
            BehavioralParams::uniform(2, 1.0, 1.0, 1.0),
        )
        .unwrap();
        assert_eq!(influence_report(&sys, &InfluenceConfig::default()), Err(Error::NotSymmetric));
    }

    #[test]
    fn linearized_solution_at_zero_time() {
        let sys = example3();
        let cfg = InfluenceConfig::default();
        let r = influence_report(&sys, &cfg).unwrap();
        let s = spectral_decomposition(&sys, &cfg).unwrap();
        let q0 = [0.3, -0.2, 0.05];
        let sol = linearized_solution(&r, Some(&s), &q0, 0.0);
        for (a, b) in sol.full.unwrap().iter().zip(q0) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
