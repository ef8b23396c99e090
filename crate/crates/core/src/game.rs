//! 2×2 coordination stage games on networks.
//!
//! Action 0 is `C`, action 1 is `D`. Payoffs follow the row player's view:
//! `z = π(C, C)`, `y = π(C, D)`, `x = π(D, C)`, `w = π(D, D)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::graph::Graph;
use crate::ratio::Ratio;
use crate::{Error, Result};

/// Default brute-force cap: 2^20 profiles.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Strictness margin used when thresholds cannot be represented exactly.
pub const FLOAT_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PayoffMatrix {
    pub z: f64,
    pub y: f64,
    pub x: f64,
    pub w: f64,
}

/// Sign of `wz − xy`, which decides how limiting equilibria move with the
/// forgone-payoff weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiscoordinationRegime {
    /// `wz > xy`: limiting equilibria shrink as the weight grows.
    Mild,
    /// `wz < xy`: limiting equilibria grow with the weight.
    Severe,
    /// `wz = xy`.
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub coordination: bool,
    /// `D` risk-dominant and `C` efficient.
    pub risk_efficiency_conflict: bool,
    /// `(h, l)` when `z = w` and `y = x`.
    pub symmetric: Option<(f64, f64)>,
    pub wz_minus_xy: f64,
    pub regime: MiscoordinationRegime,
}

/// A cohesiveness threshold, exact when the inputs are short decimals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    Exact(Ratio),
    Approx(f64),
}

impl Threshold {
    pub fn value(&self) -> f64 {
        match self {
            Threshold::Exact(r) => r.to_f64(),
            Threshold::Approx(v) => *v,
        }
    }

    /// Whether the fraction `count / total` is above the threshold
    /// (strictly, or weakly when `strict` is false).
    pub fn admits(&self, count: usize, total: usize, strict: bool) -> bool {
        match self {
            Threshold::Exact(r) => {
                let frac = Ratio::new(count as i128, total as i128).expect("positive total");
                if strict {
                    frac > *r
                } else {
                    frac >= *r
                }
            }
            Threshold::Approx(r) => {
                let frac = count as f64 / total as f64;
                if strict {
                    frac > r + FLOAT_MARGIN
                } else {
                    frac >= r - FLOAT_MARGIN
                }
            }
        }
    }

    /// Same test for an exact cohesion level.
    pub fn admits_ratio(&self, frac: Ratio, strict: bool) -> bool {
        self.admits(frac.numer() as usize, frac.denom() as usize, strict)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Exact(r) => write!(f, "{r}"),
            Threshold::Approx(v) => write!(f, "{v}"),
        }
    }
}

impl PayoffMatrix {
    pub const fn new(z: f64, y: f64, x: f64, w: f64) -> Self {
        PayoffMatrix { z, y, x, w }
    }

    /// Coordination pays `h`, mis-coordination pays `l`.
    pub const fn symmetric(h: f64, l: f64) -> Self {
        PayoffMatrix {
            z: h,
            y: l,
            x: l,
            w: h,
        }
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.z, self.y, self.x, self.w]
    }

    pub fn min_entry(&self) -> f64 {
        self.entries().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries().into_iter().map(f64::abs).fold(0.0, f64::max)
    }

    pub fn is_coordination(&self) -> bool {
        let PayoffMatrix { z, y, x, w } = *self;
        z > x && w > y && w > x && z > y && w > 0.0 && z > 0.0
    }

    pub fn has_risk_efficiency_conflict(&self) -> bool {
        let PayoffMatrix { z, y, x, w } = *self;
        z > w && w > x && x > y && w + x > z + y && w > 0.0 && z > 0.0
    }

    pub fn symmetric_form(&self) -> Option<(f64, f64)> {
        (self.z == self.w && self.y == self.x).then_some((self.z, self.y))
    }

    pub fn classify(&self) -> Classification {
        let wz_minus_xy = self.w * self.z - self.x * self.y;
        let regime = match self.exact() {
            Some([z, y, x, w]) => {
                let lhs = w.checked_mul(z).zip(x.checked_mul(y));
                match lhs {
                    Some((a, b)) if a > b => MiscoordinationRegime::Mild,
                    Some((a, b)) if a < b => MiscoordinationRegime::Severe,
                    Some(_) => MiscoordinationRegime::Indeterminate,
                    None => float_regime(wz_minus_xy, self.max_abs_entry()),
                }
            }
            None => float_regime(wz_minus_xy, self.max_abs_entry()),
        };
        Classification {
            coordination: self.is_coordination(),
            risk_efficiency_conflict: self.has_risk_efficiency_conflict(),
            symmetric: self.symmetric_form(),
            wz_minus_xy,
            regime,
        }
    }

    /// Exact entries `[z, y, x, w]` when every payoff is a short decimal.
    pub fn exact(&self) -> Option<[Ratio; 4]> {
        Some([
            Ratio::from_decimal(self.z)?,
            Ratio::from_decimal(self.y)?,
            Ratio::from_decimal(self.x)?,
            Ratio::from_decimal(self.w)?,
        ])
    }

    fn require_coordination(&self) -> Result<()> {
        if self.is_coordination() {
            Ok(())
        } else {
            Err(Error::NotCoordination)
        }
    }

    /// The Nash threshold `r = (z − x) / (w − x + z − y)`: a `D` player best
    /// responds when at least a fraction `r` of its neighbours play `D`.
    pub fn ne_threshold(&self) -> Result<Threshold> {
        self.require_coordination()?;
        Ok(self.threshold_at(Ratio::ONE, 1.0).0)
    }

    /// Thresholds `(r1(η), r2(η))` for the limiting equilibria at
    /// forgone-payoff weight `η`:
    ///
    /// `r1 = (ηz − x) / (w − x + ηz − ηy)` bounds the `D`-share a `D`
    /// player needs, `r2 = (ηw − y) / (z − y + ηw − ηx)` the `C`-share a `C`
    /// player needs.
    pub fn limiting_thresholds(&self, eta: f64) -> Result<(Threshold, Threshold)> {
        self.require_coordination()?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("eta = {eta} outside [0, 1]")));
        }
        match Ratio::from_decimal(eta) {
            Some(e) => Ok(self.threshold_at(e, eta)),
            None => Ok(self.float_thresholds(eta)),
        }
    }

    fn threshold_at(&self, eta_exact: Ratio, eta: f64) -> (Threshold, Threshold) {
        let exact = self.exact().and_then(|[z, y, x, w]| {
            let ez = eta_exact.checked_mul(z)?;
            let ey = eta_exact.checked_mul(y)?;
            let ew = eta_exact.checked_mul(w)?;
            let ex = eta_exact.checked_mul(x)?;
            let r1 = ez
                .checked_sub(x)?
                .checked_div(w.checked_sub(x)?.checked_add(ez)?.checked_sub(ey)?)?;
            let r2 = ew
                .checked_sub(y)?
                .checked_div(z.checked_sub(y)?.checked_add(ew)?.checked_sub(ex)?)?;
            Some((Threshold::Exact(r1), Threshold::Exact(r2)))
        });
        exact.unwrap_or_else(|| self.float_thresholds(eta))
    }

    fn float_thresholds(&self, eta: f64) -> (Threshold, Threshold) {
        let PayoffMatrix { z, y, x, w } = *self;
        let r1 = (eta * z - x) / (w - x + eta * z - eta * y);
        let r2 = (eta * w - y) / (z - y + eta * w - eta * x);
        (Threshold::Approx(r1), Threshold::Approx(r2))
    }

    /// Shifts every payoff down by an aspiration level.
    pub fn shifted(&self, aspiration: f64) -> Self {
        PayoffMatrix::new(
            self.z - aspiration,
            self.y - aspiration,
            self.x - aspiration,
            self.w - aspiration,
        )
    }

    /// Maps every payoff `π` to `(π − floor)^γ`. `floor` must lie strictly
    /// below all payoffs and `γ` must be positive so the ordering survives.
    pub fn reinforce_best(&self, gamma: f64, floor: f64) -> Result<Self> {
        if !(floor < self.min_entry()) {
            return Err(Error::InvalidParameter(format!(
                "payoff floor {floor} must be below the smallest payoff {}",
                self.min_entry()
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
        }
        let f = |v: f64| libm::pow(v - floor, gamma);
        Ok(PayoffMatrix::new(f(self.z), f(self.y), f(self.x), f(self.w)))
    }
}

fn float_regime(value: f64, scale: f64) -> MiscoordinationRegime {
    let margin = FLOAT_MARGIN * (scale * scale).max(1.0);
    if value > margin {
        MiscoordinationRegime::Mild
    } else if value < -margin {
        MiscoordinationRegime::Severe
    } else {
        MiscoordinationRegime::Indeterminate
    }
}

/// A pure strategy profile; `true` marks an agent playing `D`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PureProfile(pub Vec<bool>);

impl PureProfile {
    /// Bit `i` of `index` is agent `i`'s action.
    pub fn from_index(n: usize, index: u64) -> Self {
        PureProfile((0..n).map(|i| index >> i & 1 == 1).collect())
    }

    pub fn all(n: usize, plays_d: bool) -> Self {
        PureProfile(vec![plays_d; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn plays_d(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn d_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i]).collect()
    }

    pub fn c_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.0[i]).collect()
    }
}

impl fmt::Display for PureProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for PureProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!("bad profile character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PureProfile)
    }
}

/// A pure Nash equilibrium and whether every best response is strict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NashProfile {
    pub profile: PureProfile,
    pub strict: bool,
}

fn check_enumerable(g: &Graph, cap: usize) -> Result<()> {
    if g.n() > cap || g.n() >= 64 {
        return Err(Error::TooManyAgents { n: g.n(), cap });
    }
    if let Some(i) = (0..g.n()).find(|&i| g.degree(i) == 0) {
        return Err(Error::IsolatedNode(i));
    }
    Ok(())
}

/// Sign of `u_i(D) − u_i(C)` given `m` of `d` neighbours playing `D`,
/// i.e. of `m(w − y) + (d − m)(x − z)`.
struct BestResponse {
    exact: Option<(Ratio, Ratio)>,
    payoff: PayoffMatrix,
}

impl BestResponse {
    fn new(payoff: &PayoffMatrix) -> Self {
        let exact = payoff.exact().and_then(|[z, y, x, w]| {
            Some((w.checked_sub(y)?, x.checked_sub(z)?))
        });
        BestResponse {
            exact,
            payoff: *payoff,
        }
    }

    fn sign(&self, m: usize, d: usize) -> i8 {
        if let Some((a, b)) = self.exact {
            let diff = Ratio::from_integer(m as i128)
                .checked_mul(a)
                .zip(Ratio::from_integer((d - m) as i128).checked_mul(b))
                .and_then(|(p, q)| p.checked_add(q));
            if let Some(diff) = diff {
                return diff.numer().signum() as i8;
            }
        }
        let PayoffMatrix { z, y, x, w } = self.payoff;
        let diff = m as f64 * (w - y) + (d - m) as f64 * (x - z);
        let margin = FLOAT_MARGIN * d as f64 * self.payoff.max_abs_entry().max(1.0);
        if diff > margin {
            1
        } else if diff < -margin {
            -1
        } else {
            0
        }
    }
}

/// Checks a supplied profile directly: `Some(strict)` when it is a (weak)
/// Nash equilibrium, `None` otherwise.
pub fn nash_check(g: &Graph, payoff: &PayoffMatrix, profile: &PureProfile) -> Result<Option<bool>> {
    payoff.require_coordination()?;
    if profile.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: profile.len(),
        });
    }
    let br = BestResponse::new(payoff);
    let mut strict = true;
    for i in 0..g.n() {
        let d = g.degree(i);
        let m = g.neighbors_in(i, &profile.0);
        let s = br.sign(m, d);
        let prefers = if profile.plays_d(i) { s } else { -s };
        if prefers < 0 {
            return Ok(None);
        }
        strict &= prefers > 0;
    }
    Ok(Some(strict))
}

/// The cohesiveness certificate: `N_D` is `r`-cohesive and `N_C` is
/// `(1 − r)`-cohesive.
pub fn nash_by_cohesion(g: &Graph, payoff: &PayoffMatrix, profile: &PureProfile) -> Result<bool> {
    let r = payoff.ne_threshold()?;
    let one_minus_r = match r {
        Threshold::Exact(v) => Threshold::Exact(Ratio::ONE.checked_sub(v).expect("small ratio")),
        Threshold::Approx(v) => Threshold::Approx(1.0 - v),
    };
    let d_set = profile.d_set();
    let c_set = profile.c_set();
    let d_ok = d_set.is_empty() || r.admits_ratio(g.cohesiveness(&d_set)?.value, false);
    let c_ok = c_set.is_empty() || one_minus_r.admits_ratio(g.cohesiveness(&c_set)?.value, false);
    Ok(d_ok && c_ok)
}

/// All pure Nash equilibria by exhaustive search, each confirmed by both the
/// best-response check and the cohesiveness certificate.
pub fn enumerate_pure_ne(g: &Graph, payoff: &PayoffMatrix, cap: usize) -> Result<Vec<NashProfile>> {
    payoff.require_coordination()?;
    check_enumerable(g, cap)?;
    let n = g.n();
    let mut out = Vec::new();
    for index in 0..1u64 << n {
        let profile = PureProfile::from_index(n, index);
        let direct = nash_check(g, payoff, &profile)?;
        let certified = nash_by_cohesion(g, payoff, &profile)?;
        if direct.is_some() != certified {
            return Err(Error::Inconsistent(format!(
                "best-response and cohesiveness tests disagree on profile {profile}"
            )));
        }
        if let Some(strict) = direct {
            out.push(NashProfile { profile, strict });
        }
    }
    Ok(out)
}

fn per_agent_thresholds(payoff: &PayoffMatrix, eta: &[f64]) -> Result<Vec<(Threshold, Threshold)>> {
    eta.iter().map(|&e| payoff.limiting_thresholds(e)).collect()
}

fn limiting_check(g: &Graph, thresholds: &[(Threshold, Threshold)], profile: &PureProfile) -> bool {
    (0..g.n()).all(|i| {
        let d = g.degree(i);
        let m = g.neighbors_in(i, &profile.0);
        let (r1, r2) = &thresholds[i];
        if profile.plays_d(i) {
            r1.admits(m, d, true)
        } else {
            r2.admits(d - m, d, true)
        }
    })
}

/// Whether `profile` is a limiting behavioural equilibrium for per-agent
/// weights `eta`: every `D` player has a `D`-share strictly above its
/// `r1(η_i)` and every `C` player a `C`-share strictly above its `r2(η_i)`.
pub fn is_limiting_be(g: &Graph, payoff: &PayoffMatrix, eta: &[f64], profile: &PureProfile) -> Result<bool> {
    if eta.len() != g.n() || profile.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: if eta.len() != g.n() { eta.len() } else { profile.len() },
        });
    }
    if let Some(i) = (0..g.n()).find(|&i| g.degree(i) == 0) {
        return Err(Error::IsolatedNode(i));
    }
    let thresholds = per_agent_thresholds(payoff, eta)?;
    Ok(limiting_check(g, &thresholds, profile))
}

/// All limiting behavioural equilibria by exhaustive search.
pub fn enumerate_limiting_be(
    g: &Graph,
    payoff: &PayoffMatrix,
    eta: &[f64],
    cap: usize,
) -> Result<Vec<PureProfile>> {
    payoff.require_coordination()?;
    check_enumerable(g, cap)?;
    if eta.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: eta.len(),
        });
    }
    let thresholds = per_agent_thresholds(payoff, eta)?;
    let n = g.n();
    Ok((0..1u64 << n)
        .map(|index| PureProfile::from_index(n, index))
        .filter(|p| limiting_check(g, &thresholds, p))
        .collect())
}

/// Human-readable profile list, e.g. `["000", "111"]`.
pub fn profile_strings(profiles: &[PureProfile]) -> Vec<String> {
    profiles.iter().map(|p| format!("{p}")).collect()
}
