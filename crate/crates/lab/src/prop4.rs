//! The six-agent example where the number of behavioural equilibria is not
//! monotone in forgetfulness or accuracy, and the search that recovers its
//! network from the reported equilibria.

use std::collections::HashMap;
use std::fmt::Write as _;

use ewa_core::equilibria::find_fixed_points;
use ewa_core::game::enumerate_pure_ne;
use ewa_core::{BehavioralParams, CensusConfig, EwaSystem, Graph, PayoffMatrix};

pub const N: usize = 6;
/// Agent whose parameters differ in Cases 4 and 5.
pub const SPECIAL: usize = 2;
/// Tolerance on reported equilibrium probabilities.
pub const P_TOL: f64 = 0.02;

pub fn payoff() -> PayoffMatrix {
    PayoffMatrix::new(3.0, -5.0, 0.0, 2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub name: &'static str,
    pub psi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub expected_count: usize,
    /// Reported `p*` of the stable points; empty when only the count is
    /// checked.
    pub expected_p: Vec<Vec<f64>>,
}

fn with_special(base: f64, special: f64) -> Vec<f64> {
    let mut v = vec![base; N];
    v[SPECIAL] = special;
    v
}

pub fn cases() -> Vec<Case> {
    vec![
        Case {
            name: "case1",
            psi: vec![0.5; N],
            lambda: vec![2.0; N],
            expected_count: 2,
            expected_p: Vec::new(),
        },
        Case {
            name: "case2",
            psi: vec![15.0; N],
            lambda: vec![2.0; N],
            expected_count: 1,
            expected_p: vec![vec![0.82, 0.82, 0.90, 0.90, 0.82, 0.82]],
        },
        Case {
            name: "case3",
            psi: vec![0.5; N],
            lambda: vec![0.06; N],
            expected_count: 1,
            expected_p: vec![vec![0.78, 0.78, 0.86, 0.86, 0.78, 0.78]],
        },
        Case {
            name: "case4",
            psi: with_special(0.5, 15.0),
            lambda: vec![2.0; N],
            expected_count: 3,
            expected_p: vec![
                vec![0.0, 0.0, 0.23, 0.0, 0.0, 0.0],
                vec![1.0, 1.0, 0.94, 1.0, 1.0, 1.0],
                vec![1.0, 1.0, 0.82, 0.04, 0.0, 0.0],
            ],
        },
        Case {
            name: "case5",
            psi: vec![0.5; N],
            lambda: with_special(2.0, 0.06),
            expected_count: 3,
            expected_p: vec![
                vec![0.0, 0.0, 0.25, 0.0, 0.0, 0.0],
                vec![1.0, 1.0, 0.93, 1.0, 1.0, 1.0],
                vec![1.0, 1.0, 0.79, 0.01, 0.0, 0.0],
            ],
        },
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseResult {
    pub name: &'static str,
    pub count: usize,
    pub stable_p: Vec<Vec<f64>>,
    pub count_ok: bool,
    /// Largest gap between a reported vector and its matched stable point;
    /// infinite when some reported vector has no match.
    pub max_p_err: f64,
}

impl CaseResult {
    pub fn p_ok(&self) -> bool {
        self.max_p_err <= P_TOL
    }

    pub fn ok(&self) -> bool {
        self.count_ok && self.p_ok()
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Best one-to-one assignment of reported vectors to stable points, scored
/// by the worst gap. Both lists are tiny, so all assignments are tried.
fn match_error(expected: &[Vec<f64>], found: &[Vec<f64>]) -> f64 {
    fn go(expected: &[Vec<f64>], found: &[Vec<f64>], used: &mut Vec<bool>) -> f64 {
        let Some((first, rest)) = expected.split_first() else {
            return 0.0;
        };
        let mut best = f64::INFINITY;
        for k in 0..found.len() {
            if used[k] {
                continue;
            }
            used[k] = true;
            best = best.min(sup_dist(first, &found[k]).max(go(rest, found, used)));
            used[k] = false;
        }
        best
    }
    go(expected, found, &mut vec![false; found.len()])
}

pub fn evaluate(graph: &Graph, case: &Case, census: &CensusConfig) -> anyhow::Result<CaseResult> {
    let sys = EwaSystem::new(graph.clone(), payoff(), BehavioralParams::new(case.psi.clone(), case.lambda.clone(), vec![1.0; N]))?;
    let c = find_fixed_points(&sys, census)?;
    let stable_p: Vec<Vec<f64>> = c.stable().map(|r| r.p_star.clone()).collect();
    Ok(CaseResult {
        name: case.name,
        count: stable_p.len(),
        count_ok: stable_p.len() == case.expected_count,
        max_p_err: match_error(&case.expected_p, &stable_p),
        stable_p,
    })
}

pub fn evaluate_all(graph: &Graph, census: &CensusConfig) -> anyhow::Result<Vec<CaseResult>> {
    cases().iter().map(|c| evaluate(graph, c, census)).collect()
}

fn pairs() -> Vec<(usize, usize)> {
    (0..N).flat_map(|i| (i + 1..N).map(move |j| (i, j))).collect()
}

fn graph_of(mask: u32, pairs: &[(usize, usize)]) -> Graph {
    let edges = pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e);
    Graph::new(N, edges).expect("pairs are valid")
}

fn permutations() -> Vec<[usize; N]> {
    let mut out = Vec::with_capacity(720);
    let mut p = [0, 1, 2, 3, 4, 5];
    fn heap(k: usize, p: &mut [usize; N], out: &mut Vec<[usize; N]>) {
        if k == 1 {
            out.push(*p);
            return;
        }
        heap(k - 1, p, out);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                p.swap(i, k - 1);
            } else {
                p.swap(0, k - 1);
            }
            heap(k - 1, p, out);
        }
    }
    heap(N, &mut p, &mut out);
    out
}

/// Smallest mask over all relabellings.
fn canonical(mask: u32, pairs: &[(usize, usize)], index: &[[usize; N]; N], perms: &[[usize; N]]) -> u32 {
    perms
        .iter()
        .map(|p| relabel(mask, p, pairs, index))
        .min()
        .expect("permutations are nonempty")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    /// First labelled graph matching every case, if any.
    pub found: Option<Graph>,
    /// Best labelled graph by number of matching cases, then by `p*` error.
    pub best: Graph,
    pub best_results: Vec<CaseResult>,
    pub candidates: usize,
    pub shapes: usize,
    pub log: String,
}

fn score(results: &[CaseResult]) -> (usize, f64) {
    let ok = results.iter().filter(|r| r.ok()).count();
    let err = results.iter().map(|r| r.max_p_err.min(1.0)).sum::<f64>();
    (ok, err)
}

/// Stable `p*` of every case on one representative labelling of a shape.
/// `by_special[v][k]` holds case `3 + k` with vertex `v` singled out.
struct ShapeData {
    rep: u32,
    uniform: Vec<Vec<Vec<f64>>>,
    by_special: Vec<Vec<Vec<Vec<f64>>>>,
}

fn stable_p(graph: &Graph, psi: Vec<f64>, lambda: Vec<f64>, census: &CensusConfig) -> anyhow::Result<Vec<Vec<f64>>> {
    let sys = EwaSystem::new(graph.clone(), payoff(), BehavioralParams::new(psi, lambda, vec![1.0; N]))?;
    let c = find_fixed_points(&sys, census)?;
    Ok(c.stable().map(|r| r.p_star.clone()).collect())
}

fn shape_data(rep: u32, g: &Graph, all: &[Case], census: &CensusConfig) -> anyhow::Result<ShapeData> {
    let uniform = all[..3]
        .iter()
        .map(|c| stable_p(g, c.psi.clone(), c.lambda.clone(), census))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut by_special = Vec::with_capacity(N);
    for v in 0..N {
        let mut per_case = Vec::with_capacity(2);
        for c in &all[3..] {
            let (mut psi, mut lambda) = (c.psi.clone(), c.lambda.clone());
            psi.swap(SPECIAL, v);
            lambda.swap(SPECIAL, v);
            per_case.push(stable_p(g, psi, lambda, census)?);
        }
        by_special.push(per_case);
    }
    Ok(ShapeData { rep, uniform, by_special })
}

fn relabel(mask: u32, perm: &[usize; N], pairs: &[(usize, usize)], index: &[[usize; N]; N]) -> u32 {
    pairs
        .iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .fold(0u32, |m, (_, &(i, j))| m | 1 << index[perm[i]][perm[j]])
}

fn result_for(case: &Case, found: &[Vec<f64>], perm: &[usize; N]) -> CaseResult {
    let stable_p: Vec<Vec<f64>> = found
        .iter()
        .map(|p| {
            let mut q = vec![0.0; N];
            for u in 0..N {
                q[perm[u]] = p[u];
            }
            q
        })
        .collect();
    CaseResult {
        name: case.name,
        count: stable_p.len(),
        count_ok: stable_p.len() == case.expected_count,
        max_p_err: match_error(&case.expected_p, &stable_p),
        stable_p,
    }
}

/// Enumerates labelled connected six-agent graphs with maximum degree at
/// most four and exactly two pure equilibria (all-C and all-D) in
/// increasing edge-mask order and stops at the first one matching every
/// case. Censuses run once per isomorphism class and choice of the singled
/// out agent; each labelling then reuses them through the relabelling.
pub fn search(census: &CensusConfig) -> anyhow::Result<SearchOutcome> {
    let pairs = pairs();
    let mut index = [[0usize; N]; N];
    for (k, &(i, j)) in pairs.iter().enumerate() {
        index[i][j] = k;
        index[j][i] = k;
    }
    let perms = permutations();
    let all = cases();
    let payoff = payoff();
    let mut log = String::new();
    let mut shapes: HashMap<u32, ShapeData> = HashMap::new();
    let mut best: Option<(Graph, Vec<CaseResult>, (usize, f64))> = None;
    let mut candidates = 0;
    let _ = writeln!(log, "# labelled graphs on {N} agents, connected, max degree <= 4, exactly two pure equilibria");
    for mask in 0u32..1 << pairs.len() {
        let g = graph_of(mask, &pairs);
        if !g.is_connected() || g.max_degree() > 4 {
            continue;
        }
        if enumerate_pure_ne(&g, &payoff, N)?.len() != 2 {
            continue;
        }
        candidates += 1;
        let shape = canonical(mask, &pairs, &index, &perms);
        if let std::collections::hash_map::Entry::Vacant(e) = shapes.entry(shape) {
            let data = shape_data(mask, &g, &all, census)?;
            let _ = writeln!(
                log,
                "shape {shape:#06x} (first labelling {mask:#06x}, edges {:?}): uniform counts {:?}, singled-out counts {:?}",
                g.edges(),
                data.uniform.iter().map(Vec::len).collect::<Vec<_>>(),
                data.by_special.iter().map(|v| (v[0].len(), v[1].len())).collect::<Vec<_>>()
            );
            e.insert(data);
        }
        let data = &shapes[&shape];
        let perm = perms
            .iter()
            .find(|p| relabel(data.rep, p, &pairs, &index) == mask)
            .expect("same shape");
        let v = (0..N).find(|&u| perm[u] == SPECIAL).expect("permutation");
        let mut results: Vec<CaseResult> = all[..3]
            .iter()
            .zip(&data.uniform)
            .map(|(c, found)| result_for(c, found, perm))
            .collect();
        results.extend(all[3..].iter().zip(&data.by_special[v]).map(|(c, found)| result_for(c, found, perm)));
        let s = score(&results);
        if best.as_ref().is_none_or(|b| s.0 > b.2 .0 || (s.0 == b.2 .0 && s.1 < b.2 .1)) {
            best = Some((g.clone(), results.clone(), s));
        }
        if results.iter().all(CaseResult::ok) {
            let _ = writeln!(
                log,
                "match: mask {mask:#06x}, edges {:?}, after {candidates} candidates and {} shapes",
                g.edges(),
                shapes.len()
            );
            return Ok(SearchOutcome {
                found: Some(g.clone()),
                best: g,
                best_results: results,
                candidates,
                shapes: shapes.len(),
                log,
            });
        }
    }
    let (g, results, _) = best.expect("at least one candidate graph");
    let _ = writeln!(log, "no labelled graph matches all cases; best has edges {:?}", g.edges());
    Ok(SearchOutcome {
        found: None,
        best: g,
        best_results: results,
        candidates,
        shapes: shapes.len(),
        log,
    })
}
