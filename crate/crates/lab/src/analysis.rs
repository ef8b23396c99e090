//! Summaries of a battery: prediction accuracy and partial dependence of
//! the all-D frequency on correlation statistics.

use ewa_core::influence::Prediction;

use crate::battery::{Outcome, SimRecord};
use crate::stats;

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeShares {
    pub total: usize,
    pub all_d: usize,
    pub all_c: usize,
    pub mixed: usize,
    pub nonconverged: usize,
    pub unstable: usize,
}

impl OutcomeShares {
    pub fn of(records: &[SimRecord]) -> Self {
        let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
        OutcomeShares {
            total: records.len(),
            all_d: count(Outcome::AllD),
            all_c: count(Outcome::AllC),
            mixed: count(Outcome::Mixed),
            nonconverged: count(Outcome::Nonconverged),
            unstable: records.iter().filter(|r| r.kappa1 > 0.0).count(),
        }
    }

    /// Consensus share over all simulations.
    pub fn consensus(&self) -> f64 {
        (self.all_d + self.all_c) as f64 / self.total as f64
    }

    /// Consensus share with nonconverged runs left out of the denominator.
    pub fn consensus_converged(&self) -> f64 {
        (self.all_d + self.all_c) as f64 / (self.total - self.nonconverged) as f64
    }

    /// Share of consensus runs that settle on D.
    pub fn d_share(&self) -> f64 {
        self.all_d as f64 / (self.all_d + self.all_c) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub hits: usize,
}

impl AccuracyBin {
    pub fn accuracy(&self) -> f64 {
        self.hits as f64 / self.count as f64
    }

    pub fn se(&self) -> f64 {
        stats::binomial_se(self.accuracy(), self.count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracySummary {
    pub shares: OutcomeShares,
    /// Predictions scored: unstable neutral state and a defined prediction.
    pub scored: usize,
    pub d: AccuracyBin,
    pub c: AccuracyBin,
    /// Accuracy of all predictions against realised `σ(q(0))`.
    pub by_sigma: Vec<AccuracyBin>,
    /// Same, for D predictions only.
    pub by_sigma_d: Vec<AccuracyBin>,
}

impl AccuracySummary {
    pub fn is_empty(&self) -> bool {
        self.scored == 0
    }
}

/// Default `σ(q(0))` bin edges: width 0.1 up to 1, then one open bin.
pub fn default_sigma_edges() -> Vec<f64> {
    let mut e: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    e.push(f64::INFINITY);
    e
}

fn bin_accuracy<'a>(records: impl Iterator<Item = &'a SimRecord> + Clone, edges: &[f64]) -> Vec<AccuracyBin> {
    edges
        .windows(2)
        .map(|w| {
            let inside = records.clone().filter(|r| r.sigma_q0 >= w[0] && r.sigma_q0 < w[1]);
            AccuracyBin {
                lo: w[0],
                hi: w[1],
                count: inside.clone().count(),
                hits: inside.filter(|r| r.correct() == Some(true)).count(),
            }
        })
        .filter(|b| b.count > 0)
        .collect()
}

pub fn accuracy_summary(records: &[SimRecord], sigma_edges: &[f64]) -> AccuracySummary {
    let scored = records.iter().filter(|r| r.kappa1 > 0.0 && r.prediction.is_some());
    let class = |p: Prediction| {
        let s = scored.clone().filter(move |r| r.prediction == Some(p));
        AccuracyBin {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            count: s.clone().count(),
            hits: s.filter(|r| r.correct() == Some(true)).count(),
        }
    };
    AccuracySummary {
        shares: OutcomeShares::of(records),
        scored: scored.clone().count(),
        d: class(Prediction::D),
        c: class(Prediction::C),
        by_sigma: bin_accuracy(scored.clone(), sigma_edges),
        by_sigma_d: bin_accuracy(scored.filter(|r| r.prediction == Some(Prediction::D)), sigma_edges),
    }
}

/// The largest rise of a bin over any bin to its left, in excess of the
/// allowed noise `max(floor, 3σ)` of the difference. Nonpositive means the
/// sequence is nonincreasing within noise.
pub fn worst_rise(bins: &[(f64, f64, usize)], floor: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for j in 0..bins.len() {
        for i in 0..j {
            let (a, b) = (bins[i], bins[j]);
            let noise = floor.max(3.0 * (stats::binomial_se(a.0, a.2).powi(2) + stats::binomial_se(b.0, b.2).powi(2)).sqrt());
            worst = worst.max(b.0 - a.0 - noise);
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    CrCentrality,
    CrLambda,
}

impl Statistic {
    pub fn label(self) -> &'static str {
        match self {
            Statistic::CrCentrality => "cr_centrality",
            Statistic::CrLambda => "cr_lambda",
        }
    }

    fn of(self, r: &SimRecord) -> f64 {
        match self {
            Statistic::CrCentrality => r.cr_centrality,
            Statistic::CrLambda => r.cr_lambda,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DependenceBin {
    pub statistic: Statistic,
    /// Index of the `μ(λ)` band, 0 when unstratified.
    pub band: usize,
    pub band_lo: f64,
    pub band_hi: f64,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub mean_stat: f64,
    pub count: usize,
    pub all_d: usize,
    pub low_confidence: bool,
}

impl DependenceBin {
    pub fn frequency(&self) -> f64 {
        self.all_d as f64 / self.count as f64
    }
}

/// Bins with fewer records are flagged low-confidence.
pub const MIN_BIN_COUNT: usize = 30;

/// Frequency of all-D outcomes in equal-count quantile bins of `stat`,
/// optionally within `μ(λ)` bands given by their edges. Nonconverged runs
/// and undefined statistics are left out.
pub fn partial_dependence(records: &[SimRecord], stat: Statistic, bins: usize, bands: Option<&[f64]>) -> Vec<DependenceBin> {
    let default_band = [f64::NEG_INFINITY, f64::INFINITY];
    let edges = bands.unwrap_or(&default_band);
    let mut out = Vec::new();
    for (band, w) in edges.windows(2).enumerate() {
        let mut rows: Vec<(f64, bool)> = records
            .iter()
            .filter(|r| r.outcome != Outcome::Nonconverged && r.mu_lambda >= w[0] && r.mu_lambda < w[1])
            .map(|r| (stat.of(r), r.outcome == Outcome::AllD))
            .filter(|(s, _)| s.is_finite())
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (bin, range) in stats::equal_count_ranges(rows.len(), bins).into_iter().enumerate() {
            let part = &rows[range];
            if part.is_empty() {
                continue;
            }
            let values: Vec<f64> = part.iter().map(|r| r.0).collect();
            out.push(DependenceBin {
                statistic: stat,
                band,
                band_lo: w[0],
                band_hi: w[1],
                bin,
                lo: values[0],
                hi: values[values.len() - 1],
                mean_stat: stats::mean(&values),
                count: part.len(),
                all_d: part.iter().filter(|r| r.1).count(),
                low_confidence: part.len() < MIN_BIN_COUNT,
            });
        }
    }
    out
}

/// Least-squares slope of the all-D indicator on `stat` within each band.
pub fn band_slopes(records: &[SimRecord], stat: Statistic, bands: &[f64]) -> Vec<(f64, f64, usize, f64)> {
    bands
        .windows(2)
        .map(|w| {
            let (x, y): (Vec<f64>, Vec<f64>) = records
                .iter()
                .filter(|r| r.outcome != Outcome::Nonconverged && r.mu_lambda >= w[0] && r.mu_lambda < w[1])
                .filter(|r| stat.of(r).is_finite())
                .map(|r| (stat.of(r), if r.outcome == Outcome::AllD { 1.0 } else { 0.0 }))
                .unzip();
            let slope = if x.len() >= 2 { stats::ols_slope(&x, &y) } else { f64::NAN };
            (w[0], w[1], x.len(), slope)
        })
        .collect()
}

/// Default `μ(λ)` bands; the lowest matches the "overall λ below 2.5"
/// regime.
pub fn default_lambda_bands() -> Vec<f64> {
    vec![0.0, 2.5, 5.0, 7.5, f64::INFINITY]
}
