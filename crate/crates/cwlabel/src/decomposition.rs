//! Heavy-path level decomposition.
//!
//! One level of the scheme walks the heavy path from the root (always
//! descending into the child with more leaves) and partitions everything
//! hanging off that path into a bounded number of attachments: heavy
//! *large* bushes stand alone, runs of small bushes are greedily grouped,
//! and the path's terminal leaf either joins the last open group or forms
//! its own attachment. Every attachment covers at most half the level's
//! leaves, which bounds the recursion depth logarithmically, and the
//! attachment count per level stays below [`MAX_ATTACHMENTS`].

use std::collections::HashMap;

use crate::union_tree::{relabel_action, subtree, Node, NodeId, UnionTree};

/// Upper bound on attachments per level; the packed rank field relies on it.
pub const MAX_ATTACHMENTS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum AttachmentKind {
    /// A single bush holding at least a quarter of the level's leaves.
    Large,
    /// A greedy run of small bushes, possibly absorbing the terminal leaf.
    Group,
    /// The terminal leaf of the path, standing alone.
    TerminalLeaf,
}

/// One attachment: the path positions `start..=end` whose bushes (and,
/// when `end` is the terminal position, the terminal leaf) it covers.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Attachment {
    pub rank: u16,
    pub kind: AttachmentKind,
    pub start: usize,
    pub end: usize,
    pub leaf_total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelAnalysis {
    /// Heavy path, root first; the last node is the terminal leaf.
    pub path: Vec<NodeId>,
    /// `bushes[j]` is the off-path child of `path[j]`; one per non-leaf
    /// path position.
    pub bushes: Vec<NodeId>,
    pub attachments: Vec<Attachment>,
}

fn leaf_counts(tree: &UnionTree) -> Vec<usize> {
    let mut counts = vec![0usize; tree.node_count()];
    for id in 0..tree.node_count() {
        counts[id] = match tree.node(id) {
            Node::Leaf { .. } => 1,
            Node::Union { left, right, .. } => counts[*left] + counts[*right],
        };
    }
    counts
}

/// Heavy path from the root and the bush hanging off each path position.
/// Ties descend into the left child.
pub fn heavy_path(tree: &UnionTree) -> (Vec<NodeId>, Vec<NodeId>) {
    let counts = leaf_counts(tree);
    let mut path = vec![tree.root()];
    let mut bushes = Vec::new();
    let mut at = tree.root();
    while let Some((l, r)) = tree.children(at) {
        let (next, bush) = if counts[l] >= counts[r] { (l, r) } else { (r, l) };
        path.push(next);
        bushes.push(bush);
        at = next;
    }
    (path, bushes)
}

/// Groups the bush sizes along a heavy path into attachments. `bush_leaves`
/// lists leaf counts in path order; the terminal position follows them.
pub fn build_attachments(total_leaves: usize, bush_leaves: &[usize]) -> Vec<Attachment> {
    let threshold = total_leaves.div_ceil(4);
    let cap = total_leaves / 2;
    let mut atts: Vec<Attachment> = Vec::new();
    let mut open: Option<(usize, usize)> = None;
    let close_group = |atts: &mut Vec<Attachment>, start: usize, end: usize, total: usize| {
        atts.push(Attachment {
            rank: 0,
            kind: AttachmentKind::Group,
            start,
            end,
            leaf_total: total,
        });
    };
    for (j, &leaves) in bush_leaves.iter().enumerate() {
        if leaves >= threshold && leaves >= 2 {
            if let Some((s, c)) = open.take() {
                close_group(&mut atts, s, j - 1, c);
            }
            atts.push(Attachment {
                rank: 0,
                kind: AttachmentKind::Large,
                start: j,
                end: j,
                leaf_total: leaves,
            });
            continue;
        }
        if let Some((s, c)) = open {
            // Close early rather than let a group exceed half the level.
            if c + leaves > cap {
                close_group(&mut atts, s, j - 1, c);
                open = None;
            }
        }
        let (s, c) = match open {
            Some((s, c)) => (s, c + leaves),
            None => (j, leaves),
        };
        if c >= threshold {
            close_group(&mut atts, s, j, c);
            open = None;
        } else {
            open = Some((s, c));
        }
    }
    let terminal = bush_leaves.len();
    match open {
        Some((s, c)) => close_group(&mut atts, s, terminal, c + 1),
        None => atts.push(Attachment {
            rank: 0,
            kind: AttachmentKind::TerminalLeaf,
            start: terminal,
            end: terminal,
            leaf_total: 1,
        }),
    }
    assert!(
        atts.len() <= MAX_ATTACHMENTS,
        "level produced {} attachments, limit is {MAX_ATTACHMENTS}",
        atts.len()
    );
    for (i, att) in atts.iter_mut().enumerate() {
        att.rank = i as u16 + 1;
    }
    atts
}

pub fn analyze_level(tree: &UnionTree) -> LevelAnalysis {
    let counts = leaf_counts(tree);
    let (path, bushes) = heavy_path(tree);
    let bush_leaves: Vec<usize> = bushes.iter().map(|&b| counts[b]).collect();
    let attachments = build_attachments(counts[tree.root()], &bush_leaves);
    LevelAnalysis { path, bushes, attachments }
}

/// Leaf ids covered by an attachment, in path order (bush leaves left to
/// right, the terminal leaf last when covered).
pub fn attachment_leaves(
    tree: &UnionTree,
    analysis: &LevelAnalysis,
    att: &Attachment,
) -> Vec<NodeId> {
    let terminal = analysis.path.len() - 1;
    let mut out = Vec::new();
    for j in att.start..=att.end {
        if j == terminal {
            out.push(analysis.path[terminal]);
        } else {
            out.extend(tree.leaves_under(analysis.bushes[j]));
        }
    }
    out
}

fn copy_subtree_into(src: &UnionTree, at: NodeId, dst: &mut Vec<Node>) -> NodeId {
    let mut map: HashMap<NodeId, NodeId> = HashMap::new();
    let mut stack = vec![(at, false)];
    while let Some((id, expanded)) = stack.pop() {
        match src.node(id) {
            Node::Leaf { .. } => {
                dst.push(src.node(id).clone());
                map.insert(id, dst.len() - 1);
            }
            Node::Union { left, right, ops } => {
                if expanded {
                    dst.push(Node::Union {
                        left: map[left],
                        right: map[right],
                        ops: ops.clone(),
                    });
                    map.insert(id, dst.len() - 1);
                } else {
                    stack.push((id, true));
                    stack.push((*right, false));
                    stack.push((*left, false));
                }
            }
        }
    }
    map[&at]
}

/// A group that stops above the terminal leaf: copy the path segment with
/// its bushes, cut the path continuation below the last segment node, and
/// fold that node's now-unary decorator into its remaining bush.
fn extract_group_segment(
    tree: &UnionTree,
    analysis: &LevelAnalysis,
    a: usize,
    b: usize,
) -> UnionTree {
    let k = tree.width();
    let mut nodes: Vec<Node> = Vec::new();
    let mut cur = copy_subtree_into(tree, analysis.bushes[b], &mut nodes);
    let bottom_ops = tree.ops(analysis.path[b]);
    match &mut nodes[cur] {
        Node::Union { ops, .. } => ops.extend_from_slice(bottom_ops),
        Node::Leaf { label, .. } => {
            // Joins cannot fire on a single vertex; only the relabel
            // effect survives.
            *label = relabel_action(bottom_ops, k).apply(*label);
        }
    }
    for j in (a..b).rev() {
        let p = analysis.path[j];
        let bush_root = copy_subtree_into(tree, analysis.bushes[j], &mut nodes);
        let (l, _) = tree.children(p).unwrap();
        let (left, right) = if l == analysis.bushes[j] {
            (bush_root, cur)
        } else {
            (cur, bush_root)
        };
        nodes.push(Node::Union { left, right, ops: tree.ops(p).to_vec() });
        cur = nodes.len() - 1;
    }
    UnionTree::from_parts(nodes, cur, k)
}

/// Standalone tree evaluating to the induced subgraph on the attachment's
/// leaves. Properness of the source carries over.
pub fn extract_attachment(
    tree: &UnionTree,
    analysis: &LevelAnalysis,
    att: &Attachment,
) -> UnionTree {
    let terminal = analysis.path.len() - 1;
    match att.kind {
        AttachmentKind::Large => subtree(tree, analysis.bushes[att.start]),
        AttachmentKind::TerminalLeaf => subtree(tree, analysis.path[terminal]),
        AttachmentKind::Group if att.end == terminal => subtree(tree, analysis.path[att.start]),
        AttachmentKind::Group => extract_group_segment(tree, analysis, att.start, att.end),
    }
}

/// Fully materialized recursion, one node per level tree. Holds a copy of
/// every level, so prefer [`stats`] or the streaming encoder for large
/// inputs.
pub struct DecompositionNode {
    pub tree: UnionTree,
    /// `None` when the level tree is a single leaf and recursion stops.
    pub analysis: Option<LevelAnalysis>,
    /// One child per attachment, in rank order.
    pub children: Vec<DecompositionNode>,
}

impl DecompositionNode {
    /// Number of record-bearing levels below and including this one.
    pub fn depth(&self) -> usize {
        if self.analysis.is_none() {
            0
        } else {
            1 + self.children.iter().map(DecompositionNode::depth).max().unwrap_or(0)
        }
    }
}

pub fn decompose(tree: &UnionTree) -> DecompositionNode {
    build_node(tree.clone())
}

fn build_node(tree: UnionTree) -> DecompositionNode {
    if tree.leaf_count() < 2 {
        return DecompositionNode { tree, analysis: None, children: Vec::new() };
    }
    let analysis = analyze_level(&tree);
    let children = analysis
        .attachments
        .iter()
        .map(|att| build_node(extract_attachment(&tree, &analysis, att)))
        .collect();
    DecompositionNode { tree, analysis: Some(analysis), children }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct DecompositionStats {
    pub vertices: usize,
    /// Maximum number of level records any vertex receives.
    pub depth: usize,
    pub level_trees: usize,
    pub max_attachments: usize,
    pub large_attachments: usize,
    pub group_attachments: usize,
    pub terminal_attachments: usize,
    /// Heavy-path length (edges) of the top level.
    pub root_path_length: usize,
}

/// Decomposition statistics without materializing the levels.
pub fn stats(tree: &UnionTree) -> DecompositionStats {
    let mut s = DecompositionStats { vertices: tree.leaf_count(), ..Default::default() };
    let mut work: Vec<(UnionTree, usize)> = vec![(tree.clone(), 0)];
    let mut at_root = true;
    while let Some((t, d)) = work.pop() {
        if t.leaf_count() < 2 {
            s.depth = s.depth.max(d);
            continue;
        }
        let analysis = analyze_level(&t);
        if at_root {
            s.root_path_length = analysis.path.len() - 1;
            at_root = false;
        }
        s.level_trees += 1;
        s.max_attachments = s.max_attachments.max(analysis.attachments.len());
        s.depth = s.depth.max(d + 1);
        for att in &analysis.attachments {
            match att.kind {
                AttachmentKind::Large => s.large_attachments += 1,
                AttachmentKind::Group => s.group_attachments += 1,
                AttachmentKind::TerminalLeaf => s.terminal_attachments += 1,
            }
            work.push((extract_attachment(&t, &analysis, att), d + 1));
        }
    }
    s
}
