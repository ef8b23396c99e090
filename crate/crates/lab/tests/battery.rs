use ewa_lab::analysis::{accuracy_summary, default_sigma_edges, partial_dependence, Statistic};
use ewa_lab::battery::{run_battery, run_one, run_shard, ExperimentConfig};

fn small() -> ExperimentConfig {
    ExperimentConfig {
        n_sims: 24,
        n: 15,
        p: 0.3,
        ..ExperimentConfig::default()
    }
}

#[test]
fn same_seed_same_records() {
    let cfg = small();
    let a = run_battery(&cfg, 7).unwrap();
    let b = run_battery(&cfg, 7).unwrap();
    assert_eq!(a, b);
    let c = run_battery(&cfg, 8).unwrap();
    assert_ne!(a, c);
}

#[test]
fn shards_reassemble_the_battery() {
    let cfg = small();
    let all = run_battery(&cfg, 3).unwrap();
    let mut parts = run_shard(&cfg, 3, 10..24).unwrap();
    parts.extend(run_shard(&cfg, 3, 0..10).unwrap());
    parts.sort_by_key(|r| r.index);
    assert_eq!(all, parts);
    assert_eq!(run_one(&cfg, 3, 17).unwrap(), all[17]);
}

#[test]
fn summaries_account_for_every_record() {
    let cfg = small();
    let records = run_battery(&cfg, 11).unwrap();
    let s = accuracy_summary(&records, &default_sigma_edges());
    let sh = &s.shares;
    assert_eq!(sh.all_d + sh.all_c + sh.mixed + sh.nonconverged, records.len());
    assert_eq!(s.d.count + s.c.count, s.scored);
    assert_eq!(s.by_sigma.iter().map(|b| b.count).sum::<usize>(), s.scored);
    let bins = partial_dependence(&records, Statistic::CrCentrality, 4, None);
    assert!(bins.iter().all(|b| b.low_confidence));
    assert!(bins.windows(2).all(|w| w[0].mean_stat <= w[1].mean_stat));
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = ExperimentConfig {
        psi_range: (2.0, 1.0),
        ..small()
    };
    assert!(cfg.validate().is_err());
    assert!(run_battery(&cfg, 0).is_err());
}
