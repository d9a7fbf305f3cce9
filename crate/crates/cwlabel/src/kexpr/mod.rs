//! k-expressions: the input language for graphs of bounded clique-width.
//!
//! An expression is built from four operations: `create` a labeled vertex,
//! take the disjoint `union` of two expressions, `join` all pairs of
//! vertices across two label classes, and `relabel` one class into
//! another. Labels are 1-based and at most 255. In the tree form used
//! here, every union node carries a decorator: an ordered list of join and
//! relabel ops applied left to right after the union.
//!
//! Leaves may optionally carry a probe mask (see [`crate::probe`]); the
//! plain evaluator ignores masks.

use std::collections::HashMap;
use std::collections::HashSet;

pub mod gen;
mod parse;

pub use gen::{gen_cotree, gen_random, GenError, GenRandomParams};
pub use parse::{parse, ParseError, ParseErrorKind};

/// Highest label value representable in the packed label format.
pub const MAX_LABEL: u16 = 255;

/// Highest probe-mask width representable in the packed label format.
pub const MAX_MASK_WIDTH: u16 = u16::MAX;

/// One decorator operation, applied to the whole subexpression below it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecoratorOp {
    /// Add every edge between the two (distinct) label classes.
    Join(u16, u16),
    /// Move every vertex of the first class into the second.
    Relabel(u16, u16),
}

/// Fixed-width bit vector attached to a leaf; bit `t` (1-based) marks
/// membership in probe set `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: u16,
    words: Vec<u64>,
}

impl Mask {
    pub fn zeros(width: u16) -> Self {
        let words = vec![0u64; (width as usize).div_ceil(64)];
        Mask { width, words }
    }

    /// Parses a string of `0`/`1` characters, leftmost character = bit 1.
    /// Returns `None` if the string is empty or contains other characters.
    pub fn from_bit_str(s: &str) -> Option<Self> {
        if s.is_empty() || s.len() > MAX_MASK_WIDTH as usize {
            return None;
        }
        let mut mask = Mask::zeros(s.len() as u16);
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => mask.set_bit(i as u16 + 1),
                _ => return None,
            }
        }
        Some(mask)
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    /// Reads bit `t`, 1-based; `t` must be in `1..=width`.
    pub fn bit(&self, t: u16) -> bool {
        assert!(t >= 1 && t <= self.width);
        let idx = (t - 1) as usize;
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, t: u16) {
        assert!(t >= 1 && t <= self.width);
        let idx = (t - 1) as usize;
        self.words[idx / 64] |= 1 << (idx % 64);
    }

    /// True if the two masks share any set bit. Widths must match.
    pub fn intersects(&self, other: &Mask) -> bool {
        assert_eq!(self.width, other.width);
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn to_bit_str(&self) -> String {
        (1..=self.width).map(|t| if self.bit(t) { '1' } else { '0' }).collect()
    }
}

/// Abstract syntax tree of a k-expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KExpr {
    Create {
        vertex: String,
        label: u16,
        mask: Option<Mask>,
    },
    Union {
        left: Box<KExpr>,
        right: Box<KExpr>,
        ops: Vec<DecoratorOp>,
    },
}

impl KExpr {
    pub fn leaf(vertex: impl Into<String>, label: u16) -> KExpr {
        KExpr::Create { vertex: vertex.into(), label, mask: None }
    }

    pub fn union(left: KExpr, right: KExpr, ops: Vec<DecoratorOp>) -> KExpr {
        KExpr::Union { left: Box::new(left), right: Box::new(right), ops }
    }

    /// Iterator-free walk over all subexpressions, outermost first.
    fn walk<'a>(&'a self, mut visit: impl FnMut(&'a KExpr)) {
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            visit(e);
            if let KExpr::Union { left, right, .. } = e {
                stack.push(right);
                stack.push(left);
            }
        }
    }
}

// Deep expressions would otherwise recurse in the derived drop glue.
impl Drop for KExpr {
    fn drop(&mut self) {
        let mut stack = Vec::new();
        if let KExpr::Union { left, right, .. } = self {
            stack.push(std::mem::replace(left.as_mut(), KExpr::leaf("", 1)));
            stack.push(std::mem::replace(right.as_mut(), KExpr::leaf("", 1)));
        }
        while let Some(mut e) = stack.pop() {
            if let KExpr::Union { left, right, .. } = &mut e {
                stack.push(std::mem::replace(left.as_mut(), KExpr::leaf("", 1)));
                stack.push(std::mem::replace(right.as_mut(), KExpr::leaf("", 1)));
            }
        }
    }
}

/// Structural facts collected by [`validate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExprInfo {
    pub vertex_count: usize,
    pub width_used: u16,
    /// 0 when no leaf carries a mask.
    pub mask_width: u16,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ValidateError {
    #[error("label {0} out of range (must be 1..={MAX_LABEL})")]
    LabelOutOfRange(u16),
    #[error("duplicate vertex identifier {0:?}")]
    DuplicateVertex(String),
    #[error("empty vertex identifier")]
    EmptyVertexName,
    #[error("join with equal labels {0}")]
    JoinSelf(u16),
    #[error("relabel with equal labels {0}")]
    RelabelSelf(u16),
    #[error("inconsistent mask widths: {0} and {1}")]
    InconsistentMaskWidths(u16, u16),
    #[error("leaf {0:?} has no mask but other leaves do")]
    MissingMask(String),
}

/// Checks label ranges, op well-formedness, vertex uniqueness, and mask
/// consistency (either no leaf is masked or all are, with one width).
pub fn validate(expr: &KExpr) -> Result<ExprInfo, ValidateError> {
    let mut seen = HashSet::new();
    let mut width = 0u16;
    let mut mask_width: Option<u16> = None;
    let mut unmasked: Option<&str> = None;
    let mut vertex_count = 0usize;
    let mut err = None;
    expr.walk(|e| {
        if err.is_some() {
            return;
        }
        let check_label = |l: u16| -> Result<(), ValidateError> {
            if !(1..=MAX_LABEL).contains(&l) {
                return Err(ValidateError::LabelOutOfRange(l));
            }
            Ok(())
        };
        let r = (|| match e {
            KExpr::Create { vertex, label, mask } => {
                check_label(*label)?;
                width = width.max(*label);
                if vertex.is_empty() {
                    return Err(ValidateError::EmptyVertexName);
                }
                if !seen.insert(vertex.as_str()) {
                    return Err(ValidateError::DuplicateVertex(vertex.clone()));
                }
                vertex_count += 1;
                match (mask, mask_width) {
                    (Some(m), Some(w)) if m.width() != w => {
                        return Err(ValidateError::InconsistentMaskWidths(w, m.width()))
                    }
                    (Some(m), None) => mask_width = Some(m.width()),
                    (None, _) => unmasked = Some(vertex.as_str()),
                    _ => {}
                }
                Ok(())
            }
            KExpr::Union { ops, .. } => {
                for op in ops {
                    let (i, j) = match *op {
                        DecoratorOp::Join(i, j) => (i, j),
                        DecoratorOp::Relabel(i, j) => (i, j),
                    };
                    check_label(i)?;
                    check_label(j)?;
                    if i == j {
                        return Err(match op {
                            DecoratorOp::Join(..) => ValidateError::JoinSelf(i),
                            DecoratorOp::Relabel(..) => ValidateError::RelabelSelf(i),
                        });
                    }
                    width = width.max(i).max(j);
                }
                Ok(())
            }
        })();
        if let Err(e) = r {
            err = Some(e);
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if let (Some(_), Some(name)) = (mask_width, unmasked) {
        return Err(ValidateError::MissingMask(name.to_string()));
    }
    Ok(ExprInfo {
        vertex_count,
        width_used: width,
        mask_width: mask_width.unwrap_or(0),
    })
}

/// The maximum label mentioned anywhere in the expression (creates, joins,
/// and relabels all count).
pub fn width_used(expr: &KExpr) -> u16 {
    let mut width = 0u16;
    expr.walk(|e| match e {
        KExpr::Create { label, .. } => width = width.max(*label),
        KExpr::Union { ops, .. } => {
            for op in ops {
                let (DecoratorOp::Join(i, j) | DecoratorOp::Relabel(i, j)) = *op;
                width = width.max(i).max(j);
            }
        }
    });
    width
}

/// Vertex count up to which edge sets are stored as an adjacency bit
/// matrix (n*n bits, 32 MB at the cap) instead of a hash set.
const DENSE_MAX_N: usize = 16_384;

/// Undirected edge set over vertex ids `0..n`. Dense graphs get a bit
/// matrix for constant-time membership; huge vertex counts fall back to
/// hashing so memory stays proportional to the edges.
#[derive(Clone)]
pub(crate) enum EdgeSet {
    Sparse(HashSet<(u32, u32)>),
    Dense { n: usize, words: usize, bits: Vec<u64>, count: usize },
}

impl EdgeSet {
    pub(crate) fn for_vertices(n: usize) -> EdgeSet {
        if n <= DENSE_MAX_N {
            let words = n.div_ceil(64).max(1);
            EdgeSet::Dense { n, words, bits: vec![0; n * words], count: 0 }
        } else {
            EdgeSet::Sparse(HashSet::new())
        }
    }

    #[cfg(test)]
    pub(crate) fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> EdgeSet {
        let mut set = EdgeSet::for_vertices(n);
        for (u, v) in pairs {
            set.insert(u, v);
        }
        set
    }

    /// True when the edge was not present before.
    pub(crate) fn insert(&mut self, u: u32, v: u32) -> bool {
        debug_assert_ne!(u, v);
        match self {
            EdgeSet::Sparse(set) => set.insert((u.min(v), u.max(v))),
            EdgeSet::Dense { words, bits, count, .. } => {
                let (u, v) = (u as usize, v as usize);
                let (w, m) = (u * *words + v / 64, 1u64 << (v % 64));
                if bits[w] & m != 0 {
                    return false;
                }
                bits[w] |= m;
                bits[v * *words + u / 64] |= 1u64 << (u % 64);
                *count += 1;
                true
            }
        }
    }

    pub(crate) fn contains(&self, u: u32, v: u32) -> bool {
        match self {
            EdgeSet::Sparse(set) => set.contains(&(u.min(v), u.max(v))),
            EdgeSet::Dense { words, bits, .. } => {
                bits[u as usize * words + v as usize / 64] & (1u64 << (v % 64)) != 0
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        match self {
            EdgeSet::Sparse(set) => set.len(),
            EdgeSet::Dense { count, .. } => *count,
        }
    }

    /// Edges as `(u, v)` with `u < v`, in unspecified order.
    pub(crate) fn iter(&self) -> Box<dyn Iterator<Item = (u32, u32)> + '_> {
        match self {
            EdgeSet::Sparse(set) => Box::new(set.iter().copied()),
            EdgeSet::Dense { n, words, bits, .. } => {
                Box::new((0..*n as u32).flat_map(move |u| {
                    let row = &bits[u as usize * words..(u as usize + 1) * words];
                    row.iter().enumerate().flat_map(move |(wi, &word)| {
                        let mut word = word;
                        std::iter::from_fn(move || {
                            if word == 0 {
                                return None;
                            }
                            let b = word.trailing_zeros();
                            word &= word - 1;
                            Some((wi * 64 + b as usize) as u32)
                        })
                        .filter(move |&v| v > u)
                        .map(move |v| (u, v))
                    })
                }))
            }
        }
    }

    pub(crate) fn retain(&mut self, keep: impl Fn(u32, u32) -> bool) {
        match self {
            EdgeSet::Sparse(set) => set.retain(|&(u, v)| keep(u, v)),
            EdgeSet::Dense { .. } => {
                let doomed: Vec<(u32, u32)> = self.iter().filter(|&(u, v)| !keep(u, v)).collect();
                let EdgeSet::Dense { words, bits, count, .. } = self else { unreachable!() };
                for (u, v) in doomed {
                    let (u, v) = (u as usize, v as usize);
                    bits[u * *words + v / 64] &= !(1u64 << (v % 64));
                    bits[v * *words + u / 64] &= !(1u64 << (u % 64));
                    *count -= 1;
                }
            }
        }
    }
}

impl PartialEq for EdgeSet {
    fn eq(&self, other: &EdgeSet) -> bool {
        match (self, other) {
            (EdgeSet::Sparse(a), EdgeSet::Sparse(b)) => a == b,
            (
                EdgeSet::Dense { n: na, bits: ba, .. },
                EdgeSet::Dense { n: nb, bits: bb, .. },
            ) => na == nb && ba == bb,
            _ => self.len() == other.len() && self.iter().all(|(u, v)| other.contains(u, v)),
        }
    }
}

impl Eq for EdgeSet {}

/// The graph an expression evaluates to: interned vertex names in leaf
/// order, an undirected edge set, and the label each vertex ends with.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    names: Vec<String>,
    index: HashMap<String, u32>,
    final_labels: Vec<u16>,
    edges: EdgeSet,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut edges: Vec<(u32, u32)> = self.edges.iter().collect();
        edges.sort();
        f.debug_struct("Graph")
            .field("names", &self.names)
            .field("final_labels", &self.final_labels)
            .field("edges", &edges)
            .finish()
    }
}

impl Graph {
    #[cfg(test)]
    pub(crate) fn new(names: Vec<String>, final_labels: Vec<u16>, edges: HashSet<(u32, u32)>) -> Self {
        let set = EdgeSet::from_pairs(names.len(), edges);
        Graph::from_edge_set(names, final_labels, set)
    }

    pub(crate) fn from_edge_set(names: Vec<String>, final_labels: Vec<u16>, edges: EdgeSet) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Graph { names, index, final_labels, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    /// Vertex names indexed by id (creation order).
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn final_label(&self, id: u32) -> u16 {
        self.final_labels[id as usize]
    }

    pub fn has_edge_ids(&self, u: u32, v: u32) -> bool {
        self.edges.contains(u, v)
    }

    /// `None` if either name is unknown.
    pub fn has_edge(&self, u: &str, v: &str) -> Option<bool> {
        Some(self.has_edge_ids(self.vertex_id(u)?, self.vertex_id(v)?))
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.edges.iter()
    }

    /// Edge set as sorted name pairs, each pair lexicographically ordered.
    pub fn edge_names(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .edges
            .iter()
            .map(|(u, v)| {
                let (a, b) = (self.name(u), self.name(v));
                if a <= b {
                    (a.to_string(), b.to_string())
                } else {
                    (b.to_string(), a.to_string())
                }
            })
            .collect();
        out.sort();
        out
    }

    /// Plain-text edge list: a `n m` header line, then one `u v` line per
    /// edge with names in lexicographic order.
    pub fn to_edges_format(&self) -> String {
        let mut out = format!("{} {}\n", self.vertex_count(), self.edge_count());
        for (u, v) in self.edge_names() {
            out.push_str(&u);
            out.push(' ');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Removes every edge whose endpoints' masks intersect.
    pub(crate) fn retain_mask_disjoint(&mut self, masks: &[Mask]) {
        self.edges
            .retain(|u, v| !masks[u as usize].intersects(&masks[v as usize]));
    }
}

/// Evaluates the expression to its graph. Masks are ignored; see
/// [`crate::probe::evaluate_probe`] for the mask-aware variant.
///
/// The expression must be structurally valid (see [`validate`]).
pub fn evaluate(expr: &KExpr) -> Graph {
    let tree = crate::union_tree::UnionTree::from_kexpression(expr);
    crate::union_tree::evaluate_tree(&tree)
}

/// Serializes an expression in the grammar accepted by [`parse`]:
/// `(v name label)` / `(v name label : bits)` for leaves and
/// `(u left right [op; op; ...])` for unions, with `j i j` / `r i j` ops.
pub fn render(expr: &KExpr) -> String {
    enum Item<'a> {
        Expr(&'a KExpr),
        Text(&'static str),
        Owned(String),
    }
    let mut out = String::new();
    let mut stack = vec![Item::Expr(expr)];
    while let Some(item) = stack.pop() {
        match item {
            Item::Text(s) => out.push_str(s),
            Item::Owned(s) => out.push_str(&s),
            Item::Expr(KExpr::Create { vertex, label, mask }) => {
                out.push_str("(v ");
                out.push_str(vertex);
                out.push(' ');
                out.push_str(&label.to_string());
                if let Some(m) = mask {
                    out.push_str(" : ");
                    out.push_str(&m.to_bit_str());
                }
                out.push(')');
            }
            Item::Expr(KExpr::Union { left, right, ops }) => {
                let mut tail = String::from(" [");
                for (idx, op) in ops.iter().enumerate() {
                    if idx > 0 {
                        tail.push_str("; ");
                    }
                    let (tag, i, j) = match *op {
                        DecoratorOp::Join(i, j) => ('j', i, j),
                        DecoratorOp::Relabel(i, j) => ('r', i, j),
                    };
                    tail.push_str(&format!("{tag} {i} {j}"));
                }
                tail.push_str("])");
                out.push_str("(u ");
                stack.push(Item::Owned(tail));
                stack.push(Item::Expr(right));
                stack.push(Item::Text(" "));
                stack.push(Item::Expr(left));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{reference7, REFERENCE7_EDGES};

    #[test]
    fn reference7_evaluates_to_frozen_edge_set() {
        let g = evaluate(&reference7());
        assert_eq!(g.vertex_count(), 7);
        let got = g.edge_names();
        let want: Vec<(String, String)> = REFERENCE7_EDGES
            .iter()
            .map(|&(u, v)| (u.to_string(), v.to_string()))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn reference7_width_used_is_3() {
        assert_eq!(width_used(&reference7()), 3);
    }

    #[test]
    fn single_create_is_one_vertex_no_edges() {
        let g = evaluate(&KExpr::leaf("a", 1));
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.final_label(0), 1);
    }

    #[test]
    fn join_adds_all_cross_pairs() {
        let e = KExpr::union(
            KExpr::leaf("a", 1),
            KExpr::leaf("b", 2),
            vec![DecoratorOp::Join(1, 2)],
        );
        let g = evaluate(&e);
        assert_eq!(g.edge_names(), vec![("a".to_string(), "b".to_string())]);
    }

    #[test]
    fn join_on_empty_class_adds_nothing() {
        let e = KExpr::union(
            KExpr::leaf("a", 1),
            KExpr::leaf("b", 2),
            vec![DecoratorOp::Join(2, 3)],
        );
        assert_eq!(evaluate(&e).edge_count(), 0);
    }

    #[test]
    fn relabel_moves_class_before_later_ops() {
        // After 1->3, the join 3,2 sees a under label 3.
        let e = KExpr::union(
            KExpr::leaf("a", 1),
            KExpr::leaf("b", 2),
            vec![DecoratorOp::Relabel(1, 3), DecoratorOp::Join(3, 2)],
        );
        let g = evaluate(&e);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.final_label(g.vertex_id("a").unwrap()), 3);
    }

    #[test]
    fn ops_apply_left_to_right() {
        // Join first, then relabel: no second join target exists, so only ab.
        let joined_then_moved = KExpr::union(
            KExpr::leaf("a", 1),
            KExpr::leaf("b", 2),
            vec![DecoratorOp::Join(1, 2), DecoratorOp::Relabel(1, 2)],
        );
        let g = evaluate(&joined_then_moved);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.final_label(0), 2);

        // Relabel first: the join's class 1 is already empty.
        let moved_then_joined = KExpr::union(
            KExpr::leaf("a", 1),
            KExpr::leaf("b", 2),
            vec![DecoratorOp::Relabel(1, 2), DecoratorOp::Join(1, 2)],
        );
        assert_eq!(evaluate(&moved_then_joined).edge_count(), 0);
    }

    #[test]
    fn join_is_idempotent_on_edges() {
        let once = KExpr::union(
            KExpr::leaf("a", 1),
            KExpr::leaf("b", 2),
            vec![DecoratorOp::Join(1, 2)],
        );
        let twice = KExpr::union(
            KExpr::leaf("a", 1),
            KExpr::leaf("b", 2),
            vec![DecoratorOp::Join(1, 2), DecoratorOp::Join(1, 2)],
        );
        assert_eq!(evaluate(&once).edge_names(), evaluate(&twice).edge_names());
    }

    #[test]
    fn validate_reports_info() {
        let info = validate(&reference7()).unwrap();
        assert_eq!(info.vertex_count, 7);
        assert_eq!(info.width_used, 3);
        assert_eq!(info.mask_width, 0);
    }

    #[test]
    fn validate_rejects_duplicate_vertex() {
        let e = KExpr::union(KExpr::leaf("a", 1), KExpr::leaf("a", 2), vec![]);
        assert_eq!(validate(&e), Err(ValidateError::DuplicateVertex("a".into())));
    }

    #[test]
    fn validate_rejects_self_join() {
        let e = KExpr::union(
            KExpr::leaf("a", 1),
            KExpr::leaf("b", 2),
            vec![DecoratorOp::Join(2, 2)],
        );
        assert_eq!(validate(&e), Err(ValidateError::JoinSelf(2)));
    }

    #[test]
    fn validate_rejects_partial_masks() {
        let mut leaf = KExpr::leaf("a", 1);
        if let KExpr::Create { mask, .. } = &mut leaf {
            *mask = Some(Mask::from_bit_str("01").unwrap());
        }
        let e = KExpr::union(leaf, KExpr::leaf("b", 2), vec![]);
        assert_eq!(validate(&e), Err(ValidateError::MissingMask("b".into())));
    }

    #[test]
    fn render_empty_decorator() {
        let e = KExpr::union(KExpr::leaf("a", 1), KExpr::leaf("d", 2), vec![]);
        assert_eq!(render(&e), "(u (v a 1) (v d 2) [])");
    }

    #[test]
    fn render_parse_round_trip() {
        let e = reference7();
        assert_eq!(parse(&render(&e)).unwrap(), e);
    }

    #[test]
    fn mask_bit_string_round_trip() {
        let m = Mask::from_bit_str("0101").unwrap();
        assert_eq!(m.width(), 4);
        assert!(!m.bit(1) && m.bit(2) && !m.bit(3) && m.bit(4));
        assert_eq!(m.to_bit_str(), "0101");
    }

    #[test]
    fn mask_intersection() {
        let a = Mask::from_bit_str("0101").unwrap();
        let b = Mask::from_bit_str("1010").unwrap();
        let c = Mask::from_bit_str("0001").unwrap();
        assert!(!a.intersects(&b));
        assert!(a.intersects(&c));
    }

    #[test]
    fn deep_expression_drops_without_overflow() {
        let mut e = KExpr::leaf("x0", 1);
        for i in 1..200_000 {
            e = KExpr::union(e, KExpr::leaf(format!("x{i}"), 1), vec![]);
        }
        drop(e);
    }
}
