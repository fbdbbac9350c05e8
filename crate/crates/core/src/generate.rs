//! Random and exhaustive generators for dendrograms and data matrices.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::Rng;

use crate::pway::PWayTree;
use crate::tree::{Dendrogram, NodeRef};

/// Random ranked history: at each step two random pool members merge, in
/// random child order.
pub fn random_dendrogram<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Dendrogram {
    assert!(n >= 1, "need at least one terminal");
    let mut pool: Vec<NodeRef> = (0..n).map(NodeRef::Terminal).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for rank in 1..n {
        let a = pool.swap_remove(rng.random_range(0..pool.len()));
        let b = pool.swap_remove(rng.random_range(0..pool.len()));
        merges.push((a, b));
        pool.push(NodeRef::Cluster(rank));
    }
    Dendrogram::build_from_merges(Dendrogram::default_labels(n), &merges, None)
        .expect("random history is a valid hierarchy")
}

/// `n x m` matrix with entries uniform in `[-1, 1)`.
pub fn random_data<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| rng.random_range(-1.0..1.0))
}

/// Random regular `arity`-way tree with `internal` internal nodes, so
/// `internal * (arity - 1) + 1` terminals.
pub fn random_pway_tree<R: Rng + ?Sized>(rng: &mut R, arity: usize, internal: usize) -> PWayTree {
    assert!(arity >= 2);
    let n = internal * (arity - 1) + 1;
    let mut pool: Vec<NodeRef> = (0..n).map(NodeRef::Terminal).collect();
    let mut nodes = Vec::with_capacity(internal);
    for rank in 1..=internal {
        let children: Vec<NodeRef> = (0..arity)
            .map(|_| pool.swap_remove(rng.random_range(0..pool.len())))
            .collect();
        nodes.push(children);
        pool.push(NodeRef::Cluster(rank));
    }
    PWayTree::new(arity, Dendrogram::default_labels(n), nodes).expect("random p-way history is valid")
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Shape {
    Leaf,
    Node(usize, Box<Shape>, Box<Shape>),
}

/// One representative of every ranked binary tree shape on `n` terminals,
/// i.e. every dendrogram up to child exchanges and terminal relabelling.
/// Terminals are numbered in leaf order. The count is the Euler zigzag
/// number `E(n-1)`: 1, 1, 2, 5, 16, 61, 272, ...
pub fn ranked_shapes(n: usize) -> Vec<Dendrogram> {
    assert!(n >= 1);
    let mut states: BTreeSet<Vec<Shape>> = BTreeSet::new();
    states.insert(vec![Shape::Leaf; n]);
    for rank in 1..n {
        let mut next = BTreeSet::new();
        for pool in &states {
            for i in 0..pool.len() {
                for j in i + 1..pool.len() {
                    let (lo, hi) = if pool[i] <= pool[j] { (&pool[i], &pool[j]) } else { (&pool[j], &pool[i]) };
                    let merged = Shape::Node(rank, Box::new(lo.clone()), Box::new(hi.clone()));
                    let mut rest: Vec<Shape> = pool
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != i && k != j)
                        .map(|(_, s)| s.clone())
                        .collect();
                    rest.push(merged);
                    rest.sort();
                    next.insert(rest);
                }
            }
        }
        states = next;
    }
    states
        .into_iter()
        .map(|pool| {
            let mut merges = vec![(NodeRef::Terminal(0), NodeRef::Terminal(0)); n - 1];
            let mut next_leaf = 0;
            let root = &pool[0];
            shape_to_merges(root, &mut merges, &mut next_leaf);
            Dendrogram::build_from_merges(Dendrogram::default_labels(n), &merges, None)
                .expect("enumerated shape is a valid hierarchy")
        })
        .collect()
}

fn shape_to_merges(shape: &Shape, merges: &mut [(NodeRef, NodeRef)], next_leaf: &mut usize) -> NodeRef {
    match shape {
        Shape::Leaf => {
            *next_leaf += 1;
            NodeRef::Terminal(*next_leaf - 1)
        }
        Shape::Node(rank, a, b) => {
            let left = shape_to_merges(a, merges, next_leaf);
            let right = shape_to_merges(b, merges, next_leaf);
            merges[rank - 1] = (left, right);
            NodeRef::Cluster(*rank)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_counts_follow_zigzag_numbers() {
        let counts: Vec<usize> = (1..=8).map(|n| ranked_shapes(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 1, 2, 5, 16, 61, 272]);
    }

    #[test]
    fn random_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..40 {
            let d = random_dendrogram(&mut rng, n);
            assert_eq!(d.n_terminals(), n);
            if n > 1 {
                assert_eq!(d.term_set(d.root()).unwrap(), (0..n).collect::<Vec<_>>());
            }
        }
    }
}
