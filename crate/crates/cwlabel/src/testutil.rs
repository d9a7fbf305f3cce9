//! Shared fixtures for unit tests.

use crate::kexpr::{parse, KExpr};

/// Seven-vertex reference expression used across the test suite. Proper by
/// construction: every edge is created at the lca of its endpoints.
pub(crate) const REFERENCE7_KX: &str = "(u (u (u (v a 1) (v b 2) [j 1 2]) (v c 3) [j 2 3; r 1 2]) \
     (u (u (v d 1) (v e 2) [j 1 2]) (u (v f 3) (v g 2) [j 2 3]) \
     [j 2 3; j 1 2; r 3 2]) [j 1 3])";

/// The frozen edge set of [`reference7`], as lexicographic name pairs.
pub(crate) const REFERENCE7_EDGES: [(&str, &str); 7] =
    [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("d", "g"), ("e", "f"), ("f", "g")];

pub(crate) fn reference7() -> KExpr {
    parse(REFERENCE7_KX).unwrap()
}

/// Root decorator joins 1,2 but lca(a, b) is the inner union: the edge ab
/// is only created at the root, so the tree is not proper.
pub(crate) const IMPROPER3_KX: &str = "(u (u (v a 1) (v b 2) []) (v c 2) [j 1 2])";

pub(crate) fn improper3() -> KExpr {
    parse(IMPROPER3_KX).unwrap()
}

/// Left comb building the path a-b-c-d-e with three labels. Proper; its
/// heavy path runs down the comb spine.
pub(crate) const COMB5_KX: &str = "(u (u (u (u (v a 2) (v b 3) [j 2 3; r 2 1; r 3 2]) \
     (v c 3) [j 2 3; r 2 1; r 3 2]) \
     (v d 3) [j 2 3; r 2 1; r 3 2]) \
     (v e 3) [j 2 3; r 2 1; r 3 2])";

pub(crate) const COMB5_EDGES: [(&str, &str); 4] =
    [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")];

pub(crate) fn comb5() -> KExpr {
    parse(COMB5_KX).unwrap()
}
