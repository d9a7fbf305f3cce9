//! Brute-force oracle and the instance/suite verification harness.
//!
//! [`verify_instance`] is the single-instance workhorse: properize if
//! needed, encode, decode every pair against the evaluated graph, and run
//! the structural invariants of the other modules. [`run_suite`] sweeps a
//! seeded parameter grid and aggregates deterministically, so a fixed
//! grid reproduces a byte-identical JSON report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::{self, analyze_level, extract_attachment, DecompositionStats, MAX_ATTACHMENTS};
use crate::kexpr::{evaluate, gen_random, validate, GenRandomParams, Graph, KExpr};
use crate::labels::{decode_labels, encode_with, label_stats, pack, unpack, Label, LabelStats, Labeling};
use crate::probe::{evaluate_probe, with_random_masks, ProbeInstance};
use crate::union_tree::{check_proper, evaluate_tree, make_proper, UnionTree};
use crate::Parallelism;

/// Instances up to this many vertices are checked on every unordered pair.
pub const ALL_PAIRS_MAX_N: usize = 4096;
/// Pair sample size for larger instances (drawn with replacement).
pub const SAMPLED_PAIRS: usize = 1_000_000;
/// Reports keep at most this many mismatches / failure strings verbatim.
const MAX_REPORTED: usize = 32;
/// Aggregate reports keep at most this many failing instance reports.
const MAX_FAILED_REPORTS: usize = 16;

const MASK_SALT: u64 = 0x6d61_736b;

/// Adjacency oracle: the graph the expression evaluates to, probe-aware
/// when every leaf carries a mask. `Graph::has_edge` is the predicate.
pub fn oracle(expr: &KExpr) -> Graph {
    match ProbeInstance::new(expr.clone()) {
        Ok(inst) => evaluate_probe(&inst),
        Err(_) => evaluate(expr),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub struct Mismatch {
    pub u: String,
    pub v: String,
    pub expected: bool,
    pub actual: bool,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct VerificationReport {
    pub instance: String,
    pub seed: Option<u64>,
    pub n: usize,
    pub k: u16,
    pub w: u16,
    pub properized: bool,
    pub pairs_checked: usize,
    pub sampled: bool,
    pub mismatch_count: usize,
    /// First mismatches in sorted pair order, capped.
    pub mismatches: Vec<Mismatch>,
    pub invariant_failure_count: usize,
    pub invariant_failures: Vec<String>,
    pub labels: Option<LabelStats>,
    pub decomposition: Option<DecompositionStats>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.mismatch_count == 0 && self.invariant_failure_count == 0
    }
}

#[derive(Default)]
struct FailLog {
    count: usize,
    items: Vec<String>,
}

impl FailLog {
    fn push(&mut self, msg: String) {
        self.count += 1;
        if self.items.len() < MAX_REPORTED {
            self.items.push(msg);
        }
    }
}

/// Structural invariants of one decomposition level tree, recursively:
/// enough but not too many attachments, no attachment or off-path
/// component above half the leaves, extracted subtrees proper.
fn check_decomposition(root: UnionTree, log: &mut FailLog) {
    let mut work = vec![(root, 0usize)];
    while let Some((tree, depth)) = work.pop() {
        let n = tree.leaf_count();
        if n < 2 {
            continue;
        }
        let analysis = analyze_level(&tree);
        let a = analysis.attachments.len();
        if !(2..=MAX_ATTACHMENTS).contains(&a) {
            log.push(format!("depth {depth}: {a} attachments"));
        }
        let half = n / 2;
        for (j, &bush) in analysis.bushes.iter().enumerate() {
            let leaves = tree.leaves_under(bush).len();
            if leaves > half {
                log.push(format!(
                    "depth {depth}: off-path component {j} holds {leaves} of {n} leaves"
                ));
            }
        }
        for att in &analysis.attachments {
            if att.leaf_total > half {
                log.push(format!(
                    "depth {depth}: attachment {} holds {} of {n} leaves",
                    att.rank, att.leaf_total
                ));
            }
            let sub = extract_attachment(&tree, &analysis, att);
            if !check_proper(&sub).proper {
                log.push(format!(
                    "depth {depth}: subtree of attachment {} is not proper",
                    att.rank
                ));
            }
            work.push((sub, depth + 1));
        }
    }
}

type RowResult = (usize, usize, Vec<Mismatch>, Vec<String>);

fn check_row(
    i: usize,
    names: &[&String],
    labels: &[&Label],
    ids: &[u32],
    oracle: &Graph,
) -> RowResult {
    let mut checked = 0;
    let mut count = 0;
    let mut sample = Vec::new();
    let mut errors = Vec::new();
    for j in i + 1..names.len() {
        checked += 1;
        let expected = oracle.has_edge_ids(ids[i], ids[j]);
        match decode_labels(labels[i], labels[j]) {
            Ok(actual) if actual == expected => {}
            Ok(actual) => {
                count += 1;
                if sample.len() < MAX_REPORTED {
                    sample.push(Mismatch {
                        u: names[i].clone(),
                        v: names[j].clone(),
                        expected,
                        actual,
                    });
                }
            }
            Err(e) => {
                count += 1;
                if errors.len() < MAX_REPORTED {
                    errors.push(format!("decode({}, {}): {e}", names[i], names[j]));
                }
            }
        }
    }
    (checked, count, sample, errors)
}

fn check_pairs(
    labeling: &Labeling,
    oracle: &Graph,
    par: Parallelism,
    log: &mut FailLog,
) -> (usize, usize, Vec<Mismatch>) {
    let names: Vec<&String> = labeling.labels.keys().collect();
    let labels: Vec<&Label> = names.iter().map(|n| &labeling.labels[*n]).collect();
    let ids: Vec<u32> = names
        .iter()
        .map(|n| oracle.vertex_id(n).expect("labeling and oracle share vertices"))
        .collect();
    let rows: Vec<RowResult> = match par {
        Parallelism::Sequential => (0..names.len())
            .map(|i| check_row(i, &names, &labels, &ids, oracle))
            .collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            use rayon::prelude::*;
            (0..names.len())
                .into_par_iter()
                .map(|i| check_row(i, &names, &labels, &ids, oracle))
                .collect()
        }
    };
    let mut pairs = 0;
    let mut count = 0;
    let mut mismatches = Vec::new();
    for (checked, c, sample, errors) in rows {
        pairs += checked;
        count += c;
        for m in sample {
            if mismatches.len() < MAX_REPORTED {
                mismatches.push(m);
            }
        }
        for e in errors {
            log.push(e);
        }
    }
    (pairs, count, mismatches)
}

fn sample_pairs(
    labeling: &Labeling,
    oracle: &Graph,
    samples: usize,
    seed: u64,
    log: &mut FailLog,
) -> (usize, usize, Vec<Mismatch>) {
    let names: Vec<&String> = labeling.labels.keys().collect();
    let labels: Vec<&Label> = names.iter().map(|n| &labeling.labels[*n]).collect();
    let ids: Vec<u32> = names
        .iter()
        .map(|n| oracle.vertex_id(n).expect("labeling and oracle share vertices"))
        .collect();
    let n = names.len();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x7061_6972));
    let mut count = 0;
    let mut mismatches = Vec::new();
    for _ in 0..samples {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (i, j) = (i.min(j), i.max(j));
        let expected = oracle.has_edge_ids(ids[i], ids[j]);
        match decode_labels(labels[i], labels[j]) {
            Ok(actual) if actual == expected => {}
            Ok(actual) => {
                count += 1;
                mismatches.push(Mismatch {
                    u: names[i].clone(),
                    v: names[j].clone(),
                    expected,
                    actual,
                });
            }
            Err(e) => {
                count += 1;
                log.push(format!("decode({}, {}): {e}", names[i], names[j]));
            }
        }
    }
    mismatches.sort();
    mismatches.dedup();
    mismatches.truncate(MAX_REPORTED);
    (samples, count, mismatches)
}

pub fn verify_instance(expr: &KExpr) -> VerificationReport {
    verify_instance_with(expr, "instance", None, Parallelism::default())
}

pub fn verify_instance_with(
    expr: &KExpr,
    id: &str,
    seed: Option<u64>,
    par: Parallelism,
) -> VerificationReport {
    verify_with_caps(expr, id, seed, par, ALL_PAIRS_MAX_N, SAMPLED_PAIRS)
}

fn verify_with_caps(
    expr: &KExpr,
    id: &str,
    seed: Option<u64>,
    par: Parallelism,
    all_pairs_max_n: usize,
    samples: usize,
) -> VerificationReport {
    let mut log = FailLog::default();
    let mut report = VerificationReport {
        instance: id.to_string(),
        seed,
        n: 0,
        k: 0,
        w: 0,
        properized: false,
        pairs_checked: 0,
        sampled: false,
        mismatch_count: 0,
        mismatches: Vec::new(),
        invariant_failure_count: 0,
        invariant_failures: Vec::new(),
        labels: None,
        decomposition: None,
    };
    let finish = |mut report: VerificationReport, log: FailLog| -> VerificationReport {
        report.invariant_failure_count = log.count;
        report.invariant_failures = log.items;
        report
    };

    let info = match validate(expr) {
        Ok(info) => info,
        Err(e) => {
            log.push(format!("invalid expression: {e}"));
            return finish(report, log);
        }
    };
    report.n = info.vertex_count;
    report.k = info.width_used;
    report.w = info.mask_width;

    let base = evaluate(expr);
    let target = if info.mask_width > 0 {
        let inst = ProbeInstance::new(expr.clone()).expect("validated above");
        evaluate_probe(&inst)
    } else {
        base.clone()
    };

    let tree = UnionTree::from_kexpression(expr);
    report.properized = !check_proper(&tree).proper;
    let tree = if report.properized { make_proper(&tree) } else { tree };
    if let Some(v) = check_proper(&tree).violations.first() {
        log.push(format!(
            "properization left a violation at node {} for ({}, {})",
            v.node, v.u, v.v
        ));
    }
    if evaluate_tree(&tree) != base {
        log.push("properization changed the edge set".to_string());
    }

    let dstats = decomposition::stats(&tree);
    if report.n >= 2 && dstats.depth > report.n.ilog2() as usize {
        log.push(format!(
            "decomposition depth {} exceeds floor(log2 {})",
            dstats.depth, report.n
        ));
    }
    check_decomposition(tree.clone(), &mut log);
    report.decomposition = Some(dstats);

    let labeling = match encode_with(&tree, par) {
        Ok(l) => l,
        Err(e) => {
            log.push(format!("encode failed: {e}"));
            return finish(report, log);
        }
    };
    let lstats = label_stats(&labeling);
    if lstats.max_bits > lstats.bound_bits {
        log.push(format!(
            "largest label is {} bits, bound is {}",
            lstats.max_bits, lstats.bound_bits
        ));
    }
    report.labels = Some(lstats);

    for (name, label) in &labeling.labels {
        match unpack(&pack(label)) {
            Ok(back) if back == *label => {}
            Ok(_) => log.push(format!("pack round trip altered the label of {name:?}")),
            Err(e) => log.push(format!("pack round trip failed for {name:?}: {e}")),
        }
    }

    if labeling.vertex_count() != target.vertex_count() {
        log.push(format!(
            "labeling covers {} vertices, graph has {}",
            labeling.vertex_count(),
            target.vertex_count()
        ));
        return finish(report, log);
    }
    let (pairs, count, mismatches) = if report.n <= all_pairs_max_n {
        check_pairs(&labeling, &target, par, &mut log)
    } else {
        report.sampled = true;
        sample_pairs(&labeling, &target, samples, seed.unwrap_or_default(), &mut log)
    };
    report.pairs_checked = pairs;
    report.mismatch_count = count;
    report.mismatches = mismatches;
    finish(report, log)
}

/// Parameter grid for [`run_suite`]. The default matches the master
/// correctness sweep: the full n x k grid, unmasked, 50 seeded trials per
/// cell.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SuiteGrid {
    pub ns: Vec<usize>,
    pub ks: Vec<u16>,
    pub ws: Vec<u16>,
    pub trials: usize,
    pub p_join: f64,
    pub p_relabel: f64,
    pub seed: u64,
}

impl Default for SuiteGrid {
    fn default() -> SuiteGrid {
        SuiteGrid {
            ns: vec![2, 3, 4, 8, 16, 64, 256, 1024, 4096],
            ks: vec![2, 3, 4, 8],
            ws: vec![0],
            trials: 50,
            p_join: 0.2,
            p_relabel: 0.3,
            seed: 0x5eed_cafe,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SuiteReport {
    pub grid: SuiteGrid,
    pub instances: usize,
    pub properized: usize,
    pub pairs_checked: usize,
    pub mismatch_count: usize,
    pub invariant_failure_count: usize,
    pub max_depth: usize,
    pub max_attachments: usize,
    pub max_label_bits: usize,
    /// Reports of failing instances, capped.
    pub failures: Vec<VerificationReport>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn instance_seed(base: u64, n: usize, k: u16, w: u16, trial: usize) -> u64 {
    let mut s = splitmix64(base ^ n as u64);
    s = splitmix64(s ^ k as u64);
    s = splitmix64(s ^ w as u64);
    splitmix64(s ^ trial as u64)
}

/// Sweeps the grid deterministically. Instances run concurrently under
/// [`Parallelism::Rayon`]; aggregation order is the grid order either
/// way, so the JSON report depends only on the grid.
pub fn run_suite(grid: &SuiteGrid, par: Parallelism) -> SuiteReport {
    let mut cells = Vec::new();
    for &n in &grid.ns {
        for &k in &grid.ks {
            for &w in &grid.ws {
                for trial in 0..grid.trials {
                    cells.push((n, k, w, trial));
                }
            }
        }
    }
    let run_one = |&(n, k, w, trial): &(usize, u16, u16, usize)| -> VerificationReport {
        let s = instance_seed(grid.seed, n, k, w, trial);
        let mut expr = gen_random(GenRandomParams {
            n,
            k,
            p_join: grid.p_join,
            p_relabel: grid.p_relabel,
            seed: s,
        })
        .expect("suite grid parameters are generable");
        if w > 0 {
            expr = with_random_masks(&expr, w, splitmix64(s ^ MASK_SALT));
        }
        let id = format!("n={n},k={k},w={w},trial={trial}");
        verify_instance_with(&expr, &id, Some(s), Parallelism::Sequential)
    };
    let reports: Vec<VerificationReport> = match par {
        Parallelism::Sequential => cells.iter().map(run_one).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            use rayon::prelude::*;
            cells.par_iter().map(run_one).collect()
        }
    };
    let mut out = SuiteReport {
        grid: grid.clone(),
        instances: reports.len(),
        properized: 0,
        pairs_checked: 0,
        mismatch_count: 0,
        invariant_failure_count: 0,
        max_depth: 0,
        max_attachments: 0,
        max_label_bits: 0,
        failures: Vec::new(),
        passed: true,
    };
    for report in reports {
        out.properized += report.properized as usize;
        out.pairs_checked += report.pairs_checked;
        out.mismatch_count += report.mismatch_count;
        out.invariant_failure_count += report.invariant_failure_count;
        if let Some(d) = &report.decomposition {
            out.max_depth = out.max_depth.max(d.depth);
            out.max_attachments = out.max_attachments.max(d.max_attachments);
        }
        if let Some(l) = &report.labels {
            out.max_label_bits = out.max_label_bits.max(l.max_bits);
        }
        if !report.passed() {
            out.passed = false;
            if out.failures.len() < MAX_FAILED_REPORTS {
                out.failures.push(report);
            }
        }
    }
    out
}

/// First induced path on four vertices, in path order. A 4-set induces a
/// P4 exactly when it spans three edges with maximum degree two and no
/// isolated vertex.
pub fn find_induced_p4(graph: &Graph) -> Option<[String; 4]> {
    let n = graph.vertex_count() as u32;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    if let Some(path) = p4_order(graph, [a, b, c, d]) {
                        return Some(path.map(|v| graph.name(v).to_string()));
                    }
                }
            }
        }
    }
    None
}

fn p4_order(graph: &Graph, quad: [u32; 4]) -> Option<[u32; 4]> {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); 4];
    let mut edges = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if graph.has_edge_ids(quad[i], quad[j]) {
                edges += 1;
                adj[i].push(j as u32);
                adj[j].push(i as u32);
            }
        }
    }
    if edges != 3 || adj.iter().any(|a| a.is_empty() || a.len() > 2) {
        return None;
    }
    let start = (0..4).find(|&i| adj[i].len() == 1).expect("an endpoint exists");
    let mut order = [start as u32; 4];
    let mut prev = start as u32;
    let mut cur = adj[start][0];
    for (slot, out) in order.iter_mut().enumerate().skip(1) {
        *out = cur;
        let next = adj[cur as usize].iter().copied().find(|&x| x != prev);
        if slot < 3 {
            let next = next?;
            prev = cur;
            cur = next;
        }
    }
    Some(order.map(|i| quad[i as usize]))
}
