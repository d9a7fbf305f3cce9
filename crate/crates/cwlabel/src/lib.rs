//! Adjacency labeling for graphs of bounded clique-width.
//!
//! The crate builds compact per-vertex labels for any graph given as a
//! k-expression, such that adjacency of two vertices can be decided from
//! their two labels alone. The pipeline:
//!
//! 1. [`kexpr`]: parse, generate, render, and evaluate k-expressions
//!    (`create` / `union` / `join` / `relabel` over labels `1..=k`).
//! 2. [`union_tree`]: the rooted binary view of an expression, plus the
//!    properness check/repair that pins every edge to the lca of its
//!    endpoints.
//! 3. [`decomposition`]: heavy-path based balanced decomposition of a
//!    proper tree into at most 14 attachments per level, recursing to
//!    depth at most `floor(log2 n)`.
//! 4. [`labels`]: per-vertex label construction, the two-label decoder,
//!    and the packed bit format with `.cwl` file I/O.
//! 5. [`probe`]: the probe-mask extension: labels that additionally rule
//!    out edges whose endpoints share a mask bit.
//! 6. [`verify`]: brute-force oracle, per-instance verification, and
//!    grid suites.
//!
//! Heavy verification loops run on a rayon pool when the default
//! `parallel` feature is enabled; disabling it leaves a purely
//! sequential build with the same API.

pub mod decomposition;
pub mod kexpr;
pub mod labels;
pub mod probe;
pub mod union_tree;
pub mod verify;

mod parallel;

#[cfg(test)]
pub(crate) mod testutil;

pub use parallel::Parallelism;
