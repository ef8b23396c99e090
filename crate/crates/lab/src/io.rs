//! Edge lists and CSV output.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context};
use ewa_core::equilibria::BeCensus;
use ewa_core::influence::{InfluenceReport, Prediction};
use ewa_core::ode::Trajectory;
use ewa_core::{logit_response, EwaSystem, Graph};

use crate::analysis::{AccuracySummary, DependenceBin};
use crate::battery::SimRecord;

/// Parses the edge-list format: a header line `n m` followed by `m` lines
/// `u v`. Blank lines and lines starting with `#` are skipped.
pub fn parse_edge_list(text: &str) -> anyhow::Result<Graph> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().context("edge list is empty")?;
    let nums = |line: &str, lineno: usize| -> anyhow::Result<(usize, usize)> {
        let mut it = line.split_whitespace();
        let a = it.next().with_context(|| format!("line {}: missing field", lineno + 1))?;
        let b = it.next().with_context(|| format!("line {}: missing field", lineno + 1))?;
        if it.next().is_some() {
            bail!("line {}: expected two fields", lineno + 1);
        }
        Ok((
            a.parse().with_context(|| format!("line {}: bad integer {a:?}", lineno + 1))?,
            b.parse().with_context(|| format!("line {}: bad integer {b:?}", lineno + 1))?,
        ))
    };
    let (n, m) = nums(header, 0)?;
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines {
        edges.push(nums(line, lineno)?);
    }
    if edges.len() != m {
        bail!("header announces {m} edges, found {}", edges.len());
    }
    Ok(Graph::new(n, edges)?)
}

pub fn read_edge_list(path: &Path) -> anyhow::Result<Graph> {
    let mut text = String::new();
    for line in std::io::BufReader::new(std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?).lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    parse_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(s, "{u} {v}");
    }
    s
}

pub fn write_edge_list(path: &Path, g: &Graph) -> anyhow::Result<()> {
    std::fs::write(path, format_edge_list(g)).with_context(|| format!("writing {}", path.display()))
}

fn writer(path: &Path) -> anyhow::Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}_{i}"))
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// `t,q_0..q_{n-1}` and, with `with_p`, `p_0..p_{n-1}`.
pub fn write_trajectory(path: &Path, sys: &EwaSystem, tr: &Trajectory, with_p: bool) -> anyhow::Result<()> {
    let n = sys.n();
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(indexed("q", n));
    if with_p {
        header.extend(indexed("p", n));
    }
    w.write_record(&header)?;
    for s in &tr.samples {
        let mut row = vec![num(s.t)];
        row.extend(s.q.iter().map(|&v| num(v)));
        if with_p {
            row.extend((0..n).map(|i| num(logit_response(s.q[i], sys.lambda_at(i, s.t)))));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `root_id,stable,residual,q_*,p_*,max_re_eigenvalue`.
pub fn write_census(path: &Path, census: &BeCensus) -> anyhow::Result<()> {
    let n = census.records.first().map_or(0, |r| r.q_star.len());
    let mut w = writer(path)?;
    let mut header = vec!["root_id".to_string(), "stable".into(), "residual".into()];
    header.extend(indexed("q", n));
    header.extend(indexed("p", n));
    header.push("max_re_eigenvalue".into());
    w.write_record(&header)?;
    for (k, r) in census.records.iter().enumerate() {
        let mut row = vec![k.to_string(), r.is_stable().to_string(), num(r.residual)];
        row.extend(r.q_star.iter().map(|&v| num(v)));
        row.extend(r.p_star.iter().map(|&v| num(v)));
        row.push(num(r.max_re));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn prediction_label(p: Option<Prediction>) -> &'static str {
    match p {
        Some(Prediction::D) => "D",
        Some(Prediction::C) => "C",
        Some(Prediction::Indeterminate) => "indeterminate",
        None => "undefined",
    }
}

/// Per-agent table `agent,xi,v1,degree,psi,lambda,eta`, a blank line, then
/// the scalar block `kappa1,unstable[,prediction]`.
pub fn write_influence(path: &Path, sys: &EwaSystem, report: &InfluenceReport, prediction: Option<Option<Prediction>>) -> anyhow::Result<()> {
    let p = sys.params();
    let mut out = String::from("agent,xi,v1,degree,psi,lambda,eta\n");
    for i in 0..sys.n() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{}",
            report.xi[i],
            report.v1[i],
            sys.graph().degree(i),
            p.psi[i],
            p.lambda[i],
            p.eta[i]
        );
    }
    out.push('\n');
    match prediction {
        Some(pred) => {
            out.push_str("kappa1,unstable,prediction\n");
            let _ = writeln!(out, "{},{},{}", report.kappa1, report.unstable, prediction_label(pred));
        }
        None => {
            out.push_str("kappa1,unstable\n");
            let _ = writeln!(out, "{},{}", report.kappa1, report.unstable);
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_records(path: &Path, records: &[SimRecord]) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "index", "seed", "h", "l", "edges", "kappa1", "all_positive_v1", "prediction", "outcome", "status", "final_time",
        "xi_dot_q0", "sigma_q", "sigma_q0", "cr_centrality", "cr_lambda", "mu_lambda",
    ])?;
    for r in records {
        w.write_record([
            r.index.to_string(),
            r.seed.to_string(),
            num(r.h),
            num(r.l),
            r.edges.to_string(),
            num(r.kappa1),
            r.all_positive_v1.to_string(),
            prediction_label(r.prediction).to_string(),
            r.outcome.label().to_string(),
            format!("{:?}", r.status),
            num(r.final_time),
            num(r.xi_dot_q0),
            num(r.sigma_q),
            num(r.sigma_q0),
            num(r.cr_centrality),
            num(r.cr_lambda),
            num(r.mu_lambda),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `section,label,lo,hi,count,hits,value`.
pub fn write_accuracy(path: &Path, s: &AccuracySummary) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["section", "label", "lo", "hi", "count", "hits", "value"])?;
    if s.is_empty() {
        w.write_record(["empty", "no unstable records with a defined prediction", "", "", "0", "0", ""])?;
    }
    let sh = &s.shares;
    let share_rows = [
        ("consensus", sh.all_d + sh.all_c, sh.total, sh.consensus()),
        ("consensus_excluding_nonconverged", sh.all_d + sh.all_c, sh.total - sh.nonconverged, sh.consensus_converged()),
        ("d_share_of_consensus", sh.all_d, sh.all_d + sh.all_c, sh.d_share()),
        ("mixed", sh.mixed, sh.total, sh.mixed as f64 / sh.total as f64),
        ("nonconverged", sh.nonconverged, sh.total, sh.nonconverged as f64 / sh.total as f64),
        ("unstable_neutral_state", sh.unstable, sh.total, sh.unstable as f64 / sh.total as f64),
    ];
    for (label, hits, count, value) in share_rows {
        w.write_record(["shares", label, "", "", &count.to_string(), &hits.to_string(), &num(value)])?;
    }
    for (label, b) in [("D", &s.d), ("C", &s.c)] {
        w.write_record(["accuracy", label, "", "", &b.count.to_string(), &b.hits.to_string(), &num(b.accuracy())])?;
    }
    for (section, bins) in [("accuracy_by_sigma", &s.by_sigma), ("accuracy_d_by_sigma", &s.by_sigma_d)] {
        for b in bins {
            w.write_record([
                section,
                "",
                &num(b.lo),
                &num(b.hi),
                &b.count.to_string(),
                &b.hits.to_string(),
                &num(b.accuracy()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_partial_dependence(path: &Path, bins: &[DependenceBin]) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "statistic", "band", "band_lo", "band_hi", "bin", "lo", "hi", "mean_stat", "count", "all_d", "frequency", "low_confidence",
    ])?;
    for b in bins {
        w.write_record([
            b.statistic.label().to_string(),
            b.band.to_string(),
            num(b.band_lo),
            num(b.band_hi),
            b.bin.to_string(),
            num(b.lo),
            num(b.hi),
            num(b.mean_stat),
            b.count.to_string(),
            b.all_d.to_string(),
            num(b.frequency()),
            b.low_confidence.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let text = format_edge_list(&g);
        let back = parse_edge_list(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(format_edge_list(&back), text);
    }

    #[test]
    fn edge_list_errors() {
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("3 2\n0 1\n").is_err());
        assert!(parse_edge_list("3 1\n0 3\n").is_err());
        assert!(parse_edge_list("3 1\n1 1\n").is_err());
        assert!(parse_edge_list("3 1\n0 x\n").is_err());
        let g = parse_edge_list("# star\n3 2\n0 1\n\n0 2\n").unwrap();
        assert_eq!(g.degrees(), vec![2, 1, 1]);
    }
}
