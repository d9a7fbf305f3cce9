//! Probe extension: leaves carry bit masks marking membership in `w`
//! independent sets, and every edge whose endpoints share a set bit is
//! deleted from the evaluated graph. Labels absorb the mask at a cost of
//! exactly `w` extra bits, and decoding adds one disjointness test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kexpr::{validate, Graph, KExpr, Mask, ValidateError};
use crate::labels::{encode_with, EncodeError, Labeling};
use crate::union_tree::UnionTree;
use crate::Parallelism;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProbeError {
    #[error(transparent)]
    Invalid(#[from] ValidateError),
    #[error("no leaf carries a probe mask")]
    NoMasks,
}

/// A k-expression whose leaves all carry probe masks of one width `w ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeInstance {
    expr: KExpr,
    width: u16,
}

impl ProbeInstance {
    pub fn new(expr: KExpr) -> Result<ProbeInstance, ProbeError> {
        let info = validate(&expr)?;
        if info.mask_width == 0 {
            return Err(ProbeError::NoMasks);
        }
        Ok(ProbeInstance { expr, width: info.mask_width })
    }

    pub fn expr(&self) -> &KExpr {
        &self.expr
    }

    /// Number of independent sets.
    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn into_expr(self) -> KExpr {
        self.expr
    }
}

/// Per-vertex masks indexed by the graph's vertex ids.
fn masks_by_id(expr: &KExpr, graph: &Graph, width: u16) -> Vec<Mask> {
    let mut masks = vec![Mask::zeros(width); graph.vertex_count()];
    let mut stack = vec![expr];
    while let Some(e) = stack.pop() {
        match e {
            KExpr::Create { vertex, mask, .. } => {
                let id = graph.vertex_id(vertex).expect("graph came from this expression");
                masks[id as usize] = mask.clone().expect("validated instance");
            }
            KExpr::Union { left, right, .. } => {
                stack.push(left);
                stack.push(right);
            }
        }
    }
    masks
}

/// Evaluates the underlying expression, then deletes every edge whose
/// endpoints' masks share a set bit.
pub fn evaluate_probe(inst: &ProbeInstance) -> Graph {
    let mut graph = crate::kexpr::evaluate(&inst.expr);
    let masks = masks_by_id(&inst.expr, &graph, inst.width);
    graph.retain_mask_disjoint(&masks);
    graph
}

/// Sanity diagnostic for one probe set: its members and any edge between
/// two of them surviving probe evaluation (none can, by construction).
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct IndependenceReport {
    /// Size of set `t` at index `t - 1`.
    pub set_sizes: Vec<usize>,
    /// `(u, v, t)` for an edge inside set `t`; empty on any valid run.
    pub violations: Vec<(String, String, u16)>,
}

pub fn verify_independent_sets(inst: &ProbeInstance) -> IndependenceReport {
    let graph = evaluate_probe(inst);
    let masks = masks_by_id(&inst.expr, &graph, inst.width);
    let mut set_sizes = vec![0usize; inst.width as usize];
    let mut violations = Vec::new();
    for t in 1..=inst.width {
        let members: Vec<u32> = (0..graph.vertex_count() as u32)
            .filter(|&id| masks[id as usize].bit(t))
            .collect();
        set_sizes[t as usize - 1] = members.len();
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                if graph.has_edge_ids(u, v) {
                    let (a, b) = (graph.name(u), graph.name(v));
                    violations.push((a.to_string(), b.to_string(), t));
                }
            }
        }
    }
    IndependenceReport { set_sizes, violations }
}

/// Labels a probe instance: the underlying tree must be proper, and the
/// masks ride into the labels at `w` bits per vertex.
pub fn encode_probe(inst: &ProbeInstance, par: Parallelism) -> Result<Labeling, EncodeError> {
    let tree = UnionTree::from_kexpression(&inst.expr);
    let labeling = encode_with(&tree, par)?;
    debug_assert_eq!(labeling.mask_width, inst.width);
    Ok(labeling)
}

/// Copies an expression, giving every leaf a random mask of the given
/// width. Bit probability is `min(0.5, 2/width)`, keeping expected
/// per-vertex membership small so probe deletion leaves most edges alive.
/// Deterministic in the seed; masks are drawn in leaf order.
pub fn with_random_masks(expr: &KExpr, width: u16, seed: u64) -> KExpr {
    assert!(width >= 1);
    let mut out = expr.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (2.0 / width as f64).min(0.5);
    let mut stack: Vec<&mut KExpr> = vec![&mut out];
    while let Some(e) = stack.pop() {
        match e {
            KExpr::Create { mask, .. } => {
                let mut m = Mask::zeros(width);
                for t in 1..=width {
                    if rng.gen_bool(p) {
                        m.set_bit(t);
                    }
                }
                *mask = Some(m);
            }
            KExpr::Union { left, right, .. } => {
                stack.push(right);
                stack.push(left);
            }
        }
    }
    out
}
