//! Deterministic instance generators: random k-expressions for stress
//! suites and random 2-expressions of cographs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DecoratorOp, KExpr, MAX_LABEL};

#[derive(Clone, Copy, Debug)]
pub struct GenRandomParams {
    pub n: usize,
    pub k: u16,
    pub p_join: f64,
    pub p_relabel: f64,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GenError {
    #[error("n must be at least 1")]
    EmptyGraph,
    #[error("k must be in 2..={MAX_LABEL}")]
    BadWidth,
    #[error("probabilities must lie in [0, 1]")]
    BadProbability,
}

fn vertex_name(i: usize, digits: usize) -> String {
    format!("v{i:0digits$}")
}

fn name_digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

/// Uniform random label pair with `i != j`.
fn relabel_pair(rng: &mut impl Rng, k: u16) -> (u16, u16) {
    let i = rng.gen_range(1..=k);
    let j = rng.gen_range(1..k);
    (i, if j >= i { j + 1 } else { j })
}

fn random_decorator(rng: &mut impl Rng, k: u16, p_join: f64, p_relabel: f64) -> Vec<DecoratorOp> {
    let mut ops = Vec::new();
    for i in 1..=k {
        for j in i + 1..=k {
            if rng.gen_bool(p_join) {
                ops.push(DecoratorOp::Join(i, j));
            }
        }
    }
    // Geometric run of relabels, capped so p_relabel = 1.0 terminates.
    let cap = 4 * k as usize;
    let mut count = 0;
    while count < cap && rng.gen_bool(p_relabel) {
        let (i, j) = relabel_pair(rng, k);
        ops.push(DecoratorOp::Relabel(i, j));
        count += 1;
    }
    ops.shuffle(rng);
    ops
}

/// Random k-expression: `n` leaves with uniform labels, a random binary
/// union structure built by repeated merging, and per-node decorators
/// holding each possible join with probability `p_join` plus a geometric
/// number of random relabels. Deterministic in the parameters.
pub fn gen_random(params: GenRandomParams) -> Result<KExpr, GenError> {
    let GenRandomParams { n, k, p_join, p_relabel, seed } = params;
    if n < 1 {
        return Err(GenError::EmptyGraph);
    }
    if !(2..=MAX_LABEL).contains(&k) {
        return Err(GenError::BadWidth);
    }
    for p in [p_join, p_relabel] {
        if !(0.0..=1.0).contains(&p) {
            return Err(GenError::BadProbability);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let digits = name_digits(n);
    let mut forest: Vec<KExpr> = (0..n)
        .map(|i| KExpr::leaf(vertex_name(i, digits), rng.gen_range(1..=k)))
        .collect();
    while forest.len() > 1 {
        let i = rng.gen_range(0..forest.len());
        let a = forest.swap_remove(i);
        let j = rng.gen_range(0..forest.len());
        let b = forest.swap_remove(j);
        let ops = random_decorator(&mut rng, k, p_join, p_relabel);
        forest.push(KExpr::union(a, b, ops));
    }
    Ok(forest.pop().unwrap())
}

/// Random 2-expression of a cograph. Series composition joins the two
/// sides' classes and relabels everything back into one class, so the
/// result is P4-free by construction and uses labels {1, 2} only.
pub fn gen_cotree(n: usize, seed: u64) -> Result<KExpr, GenError> {
    if n < 1 {
        return Err(GenError::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let digits = name_digits(n);
    let mut next = 0usize;
    Ok(build_cotree(n, 1, &mut rng, &mut next, digits))
}

fn build_cotree(n: usize, target: u16, rng: &mut ChaCha8Rng, next: &mut usize, digits: usize) -> KExpr {
    if n == 1 {
        let leaf = KExpr::leaf(vertex_name(*next, digits), target);
        *next += 1;
        return leaf;
    }
    let n_left = rng.gen_range(1..n);
    if rng.gen_bool(0.5) {
        // Series: edges between the two sides, then unify into `target`.
        let left = build_cotree(n_left, 1, rng, next, digits);
        let right = build_cotree(n - n_left, 2, rng, next, digits);
        let unify = if target == 1 {
            DecoratorOp::Relabel(2, 1)
        } else {
            DecoratorOp::Relabel(1, 2)
        };
        KExpr::union(left, right, vec![DecoratorOp::Join(1, 2), unify])
    } else {
        let left = build_cotree(n_left, target, rng, next, digits);
        let right = build_cotree(n - n_left, target, rng, next, digits);
        KExpr::union(left, right, vec![])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kexpr::{evaluate, validate, width_used};

    fn params(n: usize, k: u16, seed: u64) -> GenRandomParams {
        GenRandomParams { n, k, p_join: 0.3, p_relabel: 0.3, seed }
    }

    #[test]
    fn same_seed_same_expression() {
        let a = gen_random(params(40, 4, 7)).unwrap();
        let b = gen_random(params(40, 4, 7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let a = gen_random(params(40, 4, 7)).unwrap();
        let b = gen_random(params(40, 4, 8)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn generated_expressions_validate() {
        for seed in 0..20 {
            let e = gen_random(params(25, 3, seed)).unwrap();
            let info = validate(&e).unwrap();
            assert_eq!(info.vertex_count, 25);
            assert!(info.width_used <= 3);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert_eq!(gen_random(params(0, 3, 1)), Err(GenError::EmptyGraph));
        assert_eq!(gen_random(params(5, 1, 1)), Err(GenError::BadWidth));
        let mut p = params(5, 3, 1);
        p.p_join = 1.5;
        assert_eq!(gen_random(p), Err(GenError::BadProbability));
    }

    #[test]
    fn extreme_probabilities_terminate() {
        let mut p = params(12, 3, 5);
        p.p_join = 1.0;
        p.p_relabel = 1.0;
        let e = gen_random(p).unwrap();
        assert_eq!(validate(&e).unwrap().vertex_count, 12);
    }

    #[test]
    fn single_vertex_graph() {
        let e = gen_random(params(1, 2, 0)).unwrap();
        assert_eq!(evaluate(&e).vertex_count(), 1);
    }

    #[test]
    fn cotree_uses_two_labels() {
        for seed in 0..20 {
            let e = gen_cotree(30, seed).unwrap();
            assert!(width_used(&e) <= 2);
            assert_eq!(validate(&e).unwrap().vertex_count, 30);
        }
    }

    #[test]
    fn cotree_two_vertices_is_k2_or_empty() {
        let mut seen_edge = false;
        let mut seen_empty = false;
        for seed in 0..20 {
            let g = evaluate(&gen_cotree(2, seed).unwrap());
            match g.edge_count() {
                0 => seen_empty = true,
                1 => seen_edge = true,
                _ => panic!("two vertices cannot have {} edges", g.edge_count()),
            }
        }
        assert!(seen_edge && seen_empty);
    }

    #[test]
    fn cotrees_are_p4_free() {
        for seed in 0..30 {
            let g = evaluate(&gen_cotree(14, seed).unwrap());
            assert_eq!(crate::verify::find_induced_p4(&g), None, "seed {seed}");
        }
    }
}
