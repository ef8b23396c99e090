use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ewa_core::equilibria::find_fixed_points;
use ewa_core::influence::{influence_report, predict_coordination, InfluenceConfig};
use ewa_core::ode::integrate;
use ewa_core::CensusConfig;
use ewa_lab::analysis::{accuracy_summary, default_lambda_bands, default_sigma_edges, partial_dependence, Statistic};
use ewa_lab::battery::run_battery;
use ewa_lab::config::Config;
use ewa_lab::svg::{Chart, Mark, Series};
use ewa_lab::{io, prop4, scenarios};

#[derive(Parser)]
#[command(name = "ewa", version, about = "Learning dynamics of coordination games on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration document.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Skip the SVG views.
    #[arg(long)]
    no_svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory.
    Simulate(Common),
    /// Fixed-point census with stability.
    Equilibria(Common),
    /// Influence vector and coordination prediction.
    Influence(Common),
    /// Monte Carlo battery on random networks.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        /// Overrides the number of simulations in the config.
        #[arg(long)]
        sims: Option<usize>,
    },
    /// Drift on a grid for a two-agent system.
    Vectorfield(Common),
    /// Staged heterogeneous parameters driving an efficient cascade.
    Cascade(Common),
    /// Reinforce-the-best payoff transform over a grid of exponents.
    ReinforceBest(Common),
    /// Search six-agent graphs for the non-monotone equilibrium example.
    Prop4Search(Common),
}

impl Common {
    fn load(&self) -> anyhow::Result<Config> {
        match &self.config {
            Some(p) => Config::load(p),
            None => Ok(Config::default()),
        }
    }

    fn require(&self) -> anyhow::Result<Config> {
        anyhow::ensure!(self.config.is_some(), "this subcommand needs --config");
        self.load()
    }

    fn out(&self, name: &str) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }

    fn svg(&self, name: &str, chart: impl FnOnce() -> Chart) -> anyhow::Result<()> {
        if !self.no_svg {
            chart().write(&self.out(name)?)?;
        }
        Ok(())
    }
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn simulate(c: &Common) -> anyhow::Result<()> {
    let cfg = c.require()?;
    let sys = cfg.system(c.seed)?;
    let q0 = cfg.initial(sys.n(), c.seed)?;
    let tr = integrate(&sys, &q0, &cfg.integration.build(&sys)?)?;
    let path = c.out("trajectory.csv")?;
    io::write_trajectory(&path, &sys, &tr, true)?;
    announce(&path);
    println!(
        "status {:?} after {} steps at t = {}, residual {:e}",
        tr.status,
        tr.steps,
        tr.final_time(),
        tr.final_residual
    );
    c.svg("trajectory.svg", || {
        let mut chart = Chart::new("attractions", "t", "q");
        for i in 0..sys.n().min(12) {
            let pts = tr.samples.iter().map(|s| (s.t, s.q[i])).collect();
            chart = chart.with(Series::new(format!("q{i}"), Mark::Line, pts));
        }
        chart
    })
}

fn equilibria(c: &Common) -> anyhow::Result<()> {
    let cfg = c.require()?;
    let sys = cfg.system(c.seed)?;
    let census = find_fixed_points(&sys, &cfg.census.build(c.seed))?;
    let path = c.out("equilibria.csv")?;
    io::write_census(&path, &census)?;
    announce(&path);
    println!(
        "{} fixed points, {} stable ({} starts, {} failed)",
        census.records.len(),
        census.count_be(),
        census.starts_used,
        census.failed_starts
    );
    Ok(())
}

fn influence(c: &Common) -> anyhow::Result<()> {
    let cfg = c.require()?;
    let sys = cfg.system(c.seed)?;
    let report = influence_report(&sys, &InfluenceConfig::default())?;
    let prediction = match &cfg.initial {
        Some(_) => {
            let q0 = cfg.initial(sys.n(), c.seed)?;
            Some(predict_coordination(&report, &q0).ok())
        }
        None => None,
    };
    let path = c.out("influence.csv")?;
    io::write_influence(&path, &sys, &report, prediction)?;
    announce(&path);
    println!("kappa1 = {}", report.kappa1);
    if let Some(p) = prediction {
        println!("prediction: {}", io::prediction_label(p));
    }
    Ok(())
}

fn montecarlo(c: &Common, sims: Option<usize>) -> anyhow::Result<()> {
    let mut exp = c.load()?.montecarlo;
    if let Some(s) = sims {
        exp.n_sims = s;
    }
    let records = run_battery(&exp, c.seed)?;
    let path = c.out("records.csv")?;
    io::write_records(&path, &records)?;
    announce(&path);

    let summary = accuracy_summary(&records, &default_sigma_edges());
    let path = c.out("accuracy.csv")?;
    io::write_accuracy(&path, &summary)?;
    announce(&path);

    let bands = default_lambda_bands();
    let mut bins = partial_dependence(&records, Statistic::CrCentrality, 20, None);
    bins.extend(partial_dependence(&records, Statistic::CrLambda, 20, None));
    bins.extend(partial_dependence(&records, Statistic::CrLambda, 20, Some(&bands)));
    let path = c.out("partial_dependence.csv")?;
    io::write_partial_dependence(&path, &bins)?;
    announce(&path);

    let s = &summary.shares;
    println!(
        "{} sims: all-D {}, all-C {}, mixed {}, nonconverged {}; consensus {:.4}, D share {:.4}",
        s.total,
        s.all_d,
        s.all_c,
        s.mixed,
        s.nonconverged,
        s.consensus(),
        s.d_share()
    );
    if !summary.is_empty() {
        println!("accuracy D {:.4} (n = {}), C {:.4} (n = {})", summary.d.accuracy(), summary.d.count, summary.c.accuracy(), summary.c.count);
    }

    c.svg("accuracy.svg", || {
        let pts = summary
            .by_sigma
            .iter()
            .map(|b| ((b.lo + b.hi.min(b.lo + 0.2)) / 2.0, b.accuracy()))
            .collect();
        Chart::new("prediction accuracy", "sigma(q0)", "accuracy").with(Series::new("", Mark::Line, pts))
    })?;
    c.svg("partial_dependence.svg", || {
        let mut chart = Chart::new("all-D frequency", "correlation", "frequency");
        for stat in [Statistic::CrCentrality, Statistic::CrLambda] {
            let pts = bins
                .iter()
                .filter(|b| b.statistic == stat && b.band_lo == f64::NEG_INFINITY)
                .map(|b| (b.mean_stat, b.frequency()))
                .collect();
            chart = chart.with(Series::new(stat.label(), Mark::Line, pts));
        }
        chart
    })
}

fn vectorfield(c: &Common) -> anyhow::Result<()> {
    let cfg = c.require()?;
    let sys = cfg.system(c.seed)?;
    let vf = scenarios::vector_field(&sys, &cfg.vector_field)?;
    let mut text = String::from("q0,q1,f0,f1\n");
    for p in &vf.points {
        let _ = writeln!(text, "{},{},{},{}", p[0], p[1], p[2], p[3]);
    }
    let path = c.out("vector_field.csv")?;
    io::write_text(&path, &text)?;
    announce(&path);
    let mut text = String::from("q0,q1\n");
    for r in &vf.intersections {
        let _ = writeln!(text, "{},{}", r[0], r[1]);
    }
    let path = c.out("isocline_intersections.csv")?;
    io::write_text(&path, &text)?;
    announce(&path);
    println!("{} isocline intersections in {} candidate cells", vf.intersections.len(), vf.candidate_cells);
    c.svg("vector_field.svg", || {
        let step = 2.0 * vf.half_width / (vf.axis.len().max(2) - 1) as f64;
        let mut arrows = Vec::new();
        for p in &vf.points {
            let norm = p[2].hypot(p[3]);
            if norm > 0.0 {
                let s = 0.8 * step / norm;
                arrows.push((p[0], p[1]));
                arrows.push((p[0] + s * p[2], p[1] + s * p[3]));
            }
        }
        Chart::new("drift", "q0", "q1")
            .with(Series::new("", Mark::Segments, arrows))
            .with(Series::new("fixed points", Mark::Points, vf.intersections.iter().map(|r| (r[0], r[1])).collect()))
    })
}

fn cascade(c: &Common) -> anyhow::Result<()> {
    let cfg = c.require()?;
    let graph = cfg.graph(c.seed)?;
    let payoff = cfg.payoff()?;
    let cc = cfg.cascade.clone().context("config has no \"cascade\" section")?;
    let tr = scenarios::cascade_scenario(&graph, payoff, &cc)?;
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    let mut text = String::from("stage,t_start,t_end,d_agents,boundary\n");
    for s in &tr.stages {
        let _ = writeln!(text, "{},{},{},{},{}", s.index, s.t_start, s.t_end, join(&s.d_agents), join(&s.boundary));
    }
    let path = c.out("cascade_stages.csv")?;
    io::write_text(&path, &text)?;
    announce(&path);
    let n = graph.n();
    let mut text = String::from("t");
    for i in 0..n {
        let _ = write!(text, ",q{i}");
    }
    text.push('\n');
    for s in &tr.samples {
        let _ = write!(text, "{}", s.t);
        for v in &s.q {
            let _ = write!(text, ",{v}");
        }
        text.push('\n');
    }
    let path = c.out("cascade_trajectory.csv")?;
    io::write_text(&path, &text)?;
    announce(&path);
    let homogeneous = scenarios::homogeneous_cascade(&graph, payoff, &cc)?;
    println!(
        "threshold {:.4}; {} stages; full cascade {}; stalled {}; horizon exhausted {}",
        scenarios::cascade_threshold(&payoff),
        tr.stages.len(),
        tr.full_cascade,
        tr.stalled,
        tr.horizon_exhausted
    );
    println!(
        "homogeneous run ends with {} of {n} agents favouring D",
        homogeneous.iter().filter(|&&v| v > 0.0).count()
    );
    c.svg("cascade.svg", || {
        let mut chart = Chart::new("staged cascade", "t", "q");
        for i in 0..n.min(12) {
            let pts = tr.samples.iter().map(|s| (s.t, s.q[i])).collect();
            chart = chart.with(Series::new(format!("q{i}"), Mark::Line, pts));
        }
        chart
    })
}

fn reinforce_best(c: &Common) -> anyhow::Result<()> {
    let cfg = c.require()?;
    let graph = cfg.graph(c.seed)?;
    let report = scenarios::reinforce_best_scenario(&graph, cfg.payoff()?, &cfg.reinforce_best, c.seed)?;
    let mut text = String::from("gamma,z,y,x,w,outcome_from_zero,efficient_share\n");
    for r in &report.rows {
        let t = r.transformed;
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            r.gamma,
            t.z,
            t.y,
            t.x,
            t.w,
            r.from_zero.label(),
            r.efficient_share
        );
    }
    let path = c.out("reinforce_best.csv")?;
    io::write_text(&path, &text)?;
    announce(&path);
    match report.gamma_hat {
        Some(g) => println!("gamma_hat = {g}"),
        None => println!("gamma_hat not found in grid"),
    }
    c.svg("reinforce_best.svg", || {
        let pts = report.rows.iter().map(|r| (r.gamma, r.efficient_share)).collect();
        Chart::new("efficient absorption", "gamma", "share of starts ending all-C").with(Series::new("", Mark::Line, pts))
    })
}

fn prop4_search(c: &Common) -> anyhow::Result<()> {
    let census = CensusConfig {
        seed: c.seed,
        ..CensusConfig::default()
    };
    let outcome = prop4::search(&census)?;
    let graph = outcome.found.as_ref().unwrap_or(&outcome.best);
    let path = c.out("prop4.edgelist")?;
    io::write_edge_list(&path, graph)?;
    announce(&path);
    let mut log = outcome.log.clone();
    for r in &outcome.best_results {
        let _ = writeln!(
            log,
            "{}: {} stable, count ok {}, max p error {:.4}",
            r.name, r.count, r.count_ok, r.max_p_err
        );
    }
    let path = c.out("prop4_search.log")?;
    io::write_text(&path, &log)?;
    announce(&path);
    println!(
        "{} after {} candidates and {} shapes",
        if outcome.found.is_some() { "match found" } else { "no full match" },
        outcome.candidates,
        outcome.shapes
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Equilibria(c) => equilibria(c),
        Command::Influence(c) => influence(c),
        Command::Montecarlo { common, sims } => montecarlo(common, *sims),
        Command::Vectorfield(c) => vectorfield(c),
        Command::Cascade(c) => cascade(c),
        Command::ReinforceBest(c) => reinforce_best(c),
        Command::Prop4Search(c) => prop4_search(c),
    }
}
