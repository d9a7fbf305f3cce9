//! Per-vertex adjacency labels.
//!
//! [`encode`] turns a proper union tree into one short label per vertex;
//! [`decode`] answers adjacency from two packed labels alone. One level of
//! a label describes the vertex's place in one heavy-path decomposition
//! step: its attachment rank, the set of entering labels its hang node's
//! decorator joins to it (stored pre-translated through the fixed relabel
//! maps below its attachment), and its own label checkpointed at the
//! bottom node of every lower-ranked attachment. Two distinct vertices
//! first disagree on a rank at the level of their lowest common ancestor;
//! the lower rank's adjacency set queried with the higher rank's
//! checkpoint decides the edge.

mod bits;
mod cwl;

pub use bits::{pack, packed_bit_len, unpack, UnpackError};
pub use cwl::{read_cwl, write_cwl, CwlError};

use std::collections::{BTreeMap, HashMap};

use crate::decomposition::{analyze_level, extract_attachment, AttachmentKind, LevelAnalysis};
use crate::kexpr::{DecoratorOp, Mask};
use crate::union_tree::{check_proper, relabel_action, Node, RelabelMap, UnionTree};
use crate::Parallelism;

/// Set of labels drawn from `1..=255`.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelBitSet {
    words: [u64; 4],
}

impl LabelBitSet {
    pub fn empty() -> LabelBitSet {
        LabelBitSet::default()
    }

    pub fn insert(&mut self, label: u16) {
        debug_assert!((1..=255).contains(&label));
        let idx = (label - 1) as usize;
        self.words[idx / 64] |= 1 << (idx % 64);
    }

    pub fn contains(&self, label: u16) -> bool {
        if !(1..=255).contains(&label) {
            return false;
        }
        let idx = (label - 1) as usize;
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Member labels in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u16> + '_ {
        (1u16..=255).filter(|&l| self.contains(l))
    }
}

impl FromIterator<u16> for LabelBitSet {
    fn from_iter<I: IntoIterator<Item = u16>>(iter: I) -> LabelBitSet {
        let mut set = LabelBitSet::empty();
        for l in iter {
            set.insert(l);
        }
        set
    }
}

impl std::fmt::Debug for LabelBitSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// One decomposition level of a vertex's label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelRecord {
    /// Attachment rank at this level, `1..=14`.
    pub rank: u16,
    /// Entering labels (pre-translated) that the hang node joins to this
    /// vertex; queried with a lower-ranked partner never, with a
    /// higher-ranked partner's checkpoint always.
    pub adjacency: LabelBitSet,
    /// This vertex's label entering the bottom node of attachment `t`,
    /// stored at index `t - 1`, for `t` up to `rank - 1`.
    pub checkpoints: Vec<u16>,
}

/// Self-describing label of a single vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Label {
    /// Label budget of the originating expression.
    pub k: u16,
    /// Top level first.
    pub levels: Vec<LevelRecord>,
    /// Probe mask; zero-width when the instance carries no masks.
    pub mask: Mask,
}

impl Label {
    pub fn mask_width(&self) -> u16 {
        self.mask.width()
    }
}

/// Immutable labeling of one graph: every vertex's label under a common
/// `(k, mask_width)` header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling {
    pub k: u16,
    pub mask_width: u16,
    pub labels: BTreeMap<String, Label>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error(
        "tree is not proper: {missing} edge(s) first appear above their endpoints' \
         lowest common ancestor, e.g. ({u}, {v}); properize the tree first"
    )]
    NotProper { missing: usize, u: String, v: String },
    #[error("leaf masks mix widths {0} and {1}")]
    MixedMaskWidths(u16, u16),
    #[error("only some leaves carry probe masks")]
    PartialMasks,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("label headers disagree: (k={0}, w={1}) vs (k={2}, w={3})")]
    HeaderMismatch(u16, u16, u16, u16),
    #[error("labels agree on every level rank; not two distinct vertices of one labeling")]
    Indistinguishable,
    #[error("partner label stores {stored} checkpoint(s), rank {wanted} needs one more")]
    CheckpointOutOfRange { wanted: usize, stored: usize },
    #[error("malformed label: {0}")]
    Malformed(#[from] UnpackError),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("self-query on {0:?}: adjacency is defined on distinct vertices")]
    SelfQuery(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

impl Labeling {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, name: &str) -> Option<&Label> {
        self.labels.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn adjacent(&self, u: &str, v: &str) -> Result<bool, QueryError> {
        if u == v {
            return Err(QueryError::SelfQuery(u.to_string()));
        }
        let lu = self.get(u).ok_or_else(|| QueryError::UnknownVertex(u.to_string()))?;
        let lv = self.get(v).ok_or_else(|| QueryError::UnknownVertex(v.to_string()))?;
        Ok(decode_labels(lu, lv)?)
    }
}

/// Labels a vertex entering a decorator with label `entering` ends up
/// joined to: simulate the ops, tracking every pre-decorator label's
/// current value; a join touching the vertex's current class admits the
/// whole opposite class.
pub fn compute_c(ops: &[DecoratorOp], k: u16, entering: u16) -> LabelBitSet {
    let mut cur: Vec<u16> = (1..=k).collect();
    let mut mine = entering;
    let mut out = LabelBitSet::empty();
    for op in ops {
        match *op {
            DecoratorOp::Join(i, j) => {
                let other = if mine == i {
                    j
                } else if mine == j {
                    i
                } else {
                    continue;
                };
                for (idx, &v) in cur.iter().enumerate() {
                    if v == other {
                        out.insert(idx as u16 + 1);
                    }
                }
            }
            DecoratorOp::Relabel(i, j) => {
                for v in &mut cur {
                    if *v == i {
                        *v = j;
                    }
                }
                if mine == i {
                    mine = j;
                }
            }
        }
    }
    out
}

/// Bits needed to store a value in `0..k`.
pub(crate) fn ceil_log2(k: u16) -> usize {
    if k <= 1 {
        0
    } else {
        (k - 1).ilog2() as usize + 1
    }
}

/// Worst-case packed label size for an `n`-vertex instance.
pub fn size_bound_bits(n: usize, k: u16, w: u16) -> usize {
    let levels = if n <= 1 { 0 } else { n.ilog2() as usize };
    32 + levels * (4 + k as usize + 13 * ceil_log2(k)) + w as usize
}

/// Records of one level, keyed by vertex name.
fn level_records(tree: &UnionTree, analysis: &LevelAnalysis) -> HashMap<String, LevelRecord> {
    let k = tree.width();
    let path = &analysis.path;
    let terminal = path.len() - 1;
    let atts = &analysis.attachments;

    // Composed relabel action of each internal path node's decorator.
    let acts: Vec<RelabelMap> =
        (0..terminal).map(|j| relabel_action(tree.ops(path[j]), k)).collect();

    // Checkpoints anchor at the bottom position of every non-final
    // attachment. `climb[j]` composes the path actions from position j up
    // to (exclusive) the nearest anchor above it.
    let mut is_anchor = vec![false; terminal];
    for att in &atts[..atts.len() - 1] {
        is_anchor[att.end] = true;
    }
    let mut climb: Vec<RelabelMap> = Vec::with_capacity(terminal);
    for j in 0..terminal {
        let m = if j == 0 || is_anchor[j - 1] {
            acts[j].clone()
        } else {
            acts[j].then(&climb[j - 1])
        };
        climb.push(m);
    }
    // seg[t] carries a label from attachment t's anchor up to attachment
    // t-1's anchor.
    let mut seg: Vec<Option<RelabelMap>> = vec![None; atts.len() + 1];
    for t in 2..atts.len() {
        seg[t] = Some(climb[atts[t - 1].end].clone());
    }
    let checkpoints_for = |rank: usize, chi_bottom: u16| -> Vec<u16> {
        let mut cps = vec![0u16; rank - 1];
        let mut chi = chi_bottom;
        for t in (1..rank).rev() {
            cps[t - 1] = chi;
            if t > 1 {
                chi = seg[t].as_ref().unwrap().apply(chi);
            }
        }
        cps
    };

    let mut c_cache: HashMap<(usize, u16), LabelBitSet> = HashMap::new();
    let mut out: HashMap<String, LevelRecord> = HashMap::with_capacity(tree.leaf_count());
    for att in atts {
        let rank = att.rank as usize;
        if att.kind == AttachmentKind::TerminalLeaf {
            let leaf = path[terminal];
            let entering = tree.leaf_label(leaf).unwrap();
            let checkpoints =
                if rank >= 2 { checkpoints_for(rank, entering) } else { Vec::new() };
            out.insert(
                tree.leaf_name(leaf).unwrap().to_string(),
                LevelRecord { rank: att.rank, adjacency: LabelBitSet::empty(), checkpoints },
            );
            continue;
        }
        // Translation from a partner's checkpoint at this attachment's
        // bottom up to each hang position's decorator.
        let bottom = att.end.min(terminal - 1);
        let mut psi: Vec<RelabelMap> = vec![RelabelMap::identity(k); bottom - att.start + 1];
        for j in (att.start..bottom).rev() {
            psi[j - att.start] = psi[j + 1 - att.start].then(&acts[j + 1]);
        }
        let mut emit = |j: usize, name: &str, entering: u16| {
            let c = *c_cache
                .entry((j, entering))
                .or_insert_with(|| compute_c(tree.ops(path[j]), k, entering));
            let translate = &psi[j - att.start];
            let mut adjacency = LabelBitSet::empty();
            for lambda in 1..=k {
                if c.contains(translate.apply(lambda)) {
                    adjacency.insert(lambda);
                }
            }
            let checkpoints = if rank >= 2 {
                checkpoints_for(rank, climb[j].apply(entering))
            } else {
                Vec::new()
            };
            out.insert(
                name.to_string(),
                LevelRecord { rank: att.rank, adjacency, checkpoints },
            );
        };
        for j in att.start..=bottom {
            // Entering labels of the bush's leaves: initial label pushed
            // through every decorator strictly below the path node.
            let mut stack = vec![(analysis.bushes[j], RelabelMap::identity(k))];
            while let Some((id, above)) = stack.pop() {
                match tree.node(id) {
                    Node::Leaf { name, label, .. } => emit(j, name, above.apply(*label)),
                    Node::Union { left, right, ops } => {
                        let below = relabel_action(ops, k).then(&above);
                        stack.push((*left, below.clone()));
                        stack.push((*right, below));
                    }
                }
            }
        }
        if att.end == terminal {
            // Absorbed terminal leaf: hangs off the lowest internal path
            // node like a unit bush.
            let leaf = path[terminal];
            emit(terminal - 1, tree.leaf_name(leaf).unwrap(), tree.leaf_label(leaf).unwrap());
        }
    }
    out
}

/// Bottom-first record lists per vertex; the caller reverses them.
fn encode_records(tree: UnionTree, par: Parallelism) -> HashMap<String, Vec<LevelRecord>> {
    if tree.leaf_count() < 2 {
        let name = tree.leaf_name(tree.root()).unwrap().to_string();
        return HashMap::from([(name, Vec::new())]);
    }
    let analysis = analyze_level(&tree);
    let mut own = level_records(&tree, &analysis);
    let subtrees: Vec<UnionTree> = analysis
        .attachments
        .iter()
        .map(|att| extract_attachment(&tree, &analysis, att))
        .collect();
    // The level tree is no longer needed; recursion peaks at roughly twice
    // the input size this way.
    drop(tree);
    let child_maps: Vec<HashMap<String, Vec<LevelRecord>>> = match par {
        Parallelism::Sequential => {
            subtrees.into_iter().map(|t| encode_records(t, par)).collect()
        }
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            use rayon::prelude::*;
            subtrees.into_par_iter().map(|t| encode_records(t, par)).collect()
        }
    };
    let mut out = HashMap::with_capacity(own.len());
    for map in child_maps {
        for (name, mut records) in map {
            records.push(own.remove(&name).expect("attachment leaves cover the level"));
            out.insert(name, records);
        }
    }
    debug_assert!(own.is_empty());
    out
}

fn leaf_masks(tree: &UnionTree) -> Result<(u16, HashMap<String, Mask>), EncodeError> {
    let mut width: Option<u16> = None;
    let mut bare = false;
    let mut masks = HashMap::new();
    for leaf in tree.leaves() {
        match tree.leaf_mask(leaf) {
            Some(mask) => {
                match width {
                    Some(w) if w != mask.width() => {
                        return Err(EncodeError::MixedMaskWidths(w, mask.width()))
                    }
                    _ => width = Some(mask.width()),
                }
                masks.insert(tree.leaf_name(leaf).unwrap().to_string(), mask.clone());
            }
            None => bare = true,
        }
    }
    match (width, bare) {
        (Some(_), true) => Err(EncodeError::PartialMasks),
        (Some(w), false) => Ok((w, masks)),
        (None, _) => Ok((0, HashMap::new())),
    }
}

pub fn encode(tree: &UnionTree) -> Result<Labeling, EncodeError> {
    encode_with(tree, Parallelism::default())
}

/// Labels every vertex of a proper tree. Leaf masks, when present on all
/// leaves, ride along as probe masks.
pub fn encode_with(tree: &UnionTree, par: Parallelism) -> Result<Labeling, EncodeError> {
    let report = check_proper(tree);
    if let Some(first) = report.violations.first() {
        return Err(EncodeError::NotProper {
            missing: report.violations.len(),
            u: first.u.clone(),
            v: first.v.clone(),
        });
    }
    let (mask_width, mut masks) = leaf_masks(tree)?;
    let n = tree.leaf_count();
    let k = tree.width();
    let bound = size_bound_bits(n, k, mask_width);
    let max_levels = if n <= 1 { 0 } else { n.ilog2() as usize };
    let mut labels = BTreeMap::new();
    for (name, mut levels) in encode_records(tree.clone(), par) {
        levels.reverse();
        assert!(
            levels.len() <= max_levels,
            "{} levels for {name}, depth bound is {max_levels}",
            levels.len()
        );
        let mask = masks.remove(&name).unwrap_or_else(|| Mask::zeros(mask_width));
        let label = Label { k, levels, mask };
        let bits = packed_bit_len(&label);
        assert!(bits <= bound, "label for {name} packs to {bits} bits, bound is {bound}");
        labels.insert(name, label);
    }
    Ok(Labeling { k, mask_width, labels })
}

/// Adjacency from two unpacked labels.
pub fn decode_labels(a: &Label, b: &Label) -> Result<bool, DecodeError> {
    if a.k != b.k || a.mask.width() != b.mask.width() {
        return Err(DecodeError::HeaderMismatch(
            a.k,
            a.mask.width(),
            b.k,
            b.mask.width(),
        ));
    }
    let common = a.levels.len().min(b.levels.len());
    let split = (0..common).find(|&t| a.levels[t].rank != b.levels[t].rank);
    let Some(t) = split else {
        return Err(DecodeError::Indistinguishable);
    };
    let (lo, hi) = if a.levels[t].rank < b.levels[t].rank {
        (&a.levels[t], &b.levels[t])
    } else {
        (&b.levels[t], &a.levels[t])
    };
    let rank = lo.rank as usize;
    let chi = *hi
        .checkpoints
        .get(rank - 1)
        .ok_or(DecodeError::CheckpointOutOfRange { wanted: rank, stored: hi.checkpoints.len() })?;
    Ok(lo.adjacency.contains(chi) && !a.mask.intersects(&b.mask))
}

/// Adjacency from two packed payloads alone.
pub fn decode(a: &[u8], b: &[u8]) -> Result<bool, DecodeError> {
    decode_labels(&unpack(a)?, &unpack(b)?)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct LabelStats {
    pub vertices: usize,
    pub k: u16,
    pub mask_width: u16,
    pub max_levels: usize,
    pub mean_levels: f64,
    pub max_bits: usize,
    pub mean_bits: f64,
    pub total_bits: usize,
    pub bound_bits: usize,
}

pub fn label_stats(labeling: &Labeling) -> LabelStats {
    let n = labeling.vertex_count().max(1);
    let mut max_levels = 0;
    let mut total_levels = 0usize;
    let mut max_bits = 0;
    let mut total_bits = 0usize;
    for label in labeling.labels.values() {
        let bits = packed_bit_len(label);
        max_levels = max_levels.max(label.levels.len());
        total_levels += label.levels.len();
        max_bits = max_bits.max(bits);
        total_bits += bits;
    }
    LabelStats {
        vertices: labeling.vertex_count(),
        k: labeling.k,
        mask_width: labeling.mask_width,
        max_levels,
        mean_levels: total_levels as f64 / n as f64,
        max_bits,
        mean_bits: total_bits as f64 / n as f64,
        total_bits,
        bound_bits: size_bound_bits(labeling.vertex_count(), labeling.k, labeling.mask_width),
    }
}
