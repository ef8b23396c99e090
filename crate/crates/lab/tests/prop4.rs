use std::path::Path;

use ewa_core::CensusConfig;
use ewa_lab::{io, prop4};

#[test]
fn search_recovers_the_shipped_graph() {
    let shipped = io::read_edge_list(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/prop4.edgelist")).unwrap();
    let out = prop4::search(&CensusConfig::default()).unwrap();
    let found = out.found.expect("a full match");
    assert_eq!(found.edges(), shipped.edges());
    assert!(out.best_results.iter().all(|r| r.ok()));
    assert!(out.log.lines().last().unwrap().starts_with("match:"));
}
