//! Regular p-way trees, their unfolding into binary dendrograms, and the
//! box / triangle / B3-spline scaling filters.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Dendrogram, NodeRef};

/// Rooted tree whose internal nodes all have exactly `arity` ordered
/// children; internal nodes are ranked `1..=k` in creation order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PWayTreeDoc", into = "PWayTreeDoc")]
pub struct PWayTree {
    arity: usize,
    labels: Vec<String>,
    nodes: Vec<Vec<NodeRef>>,
}

impl PWayTree {
    pub fn new(arity: usize, labels: Vec<String>, nodes: Vec<Vec<NodeRef>>) -> Result<Self> {
        if arity < 2 {
            return Err(Error::Arity { rank: 0, expected: 2, got: arity });
        }
        let n = labels.len();
        let mut used_terminal = vec![false; n];
        let mut used_cluster = vec![false; nodes.len()];
        for (idx, children) in nodes.iter().enumerate() {
            let rank = idx + 1;
            if children.len() != arity {
                return Err(Error::Arity { rank, expected: arity, got: children.len() });
            }
            for &child in children {
                let slot = match child {
                    NodeRef::Terminal(i) if i < n => &mut used_terminal[i],
                    NodeRef::Cluster(r) if r >= 1 && r < rank => &mut used_cluster[r - 1],
                    other => {
                        return Err(Error::InvalidMerge {
                            rank,
                            reason: format!("child {other} does not exist before rank {rank}"),
                        })
                    }
                };
                if std::mem::replace(slot, true) {
                    return Err(Error::InvalidMerge {
                        rank,
                        reason: format!("{child} used twice"),
                    });
                }
            }
        }
        let unused_terminal = used_terminal.iter().position(|u| !u);
        let expected_terminals = nodes.len() * (arity - 1) + 1;
        if n != expected_terminals || (n > 1 && unused_terminal.is_some()) {
            return Err(Error::Schema {
                location: "terminals".into(),
                reason: format!(
                    "{n} terminals do not form a single {arity}-way tree with {} internal nodes",
                    nodes.len()
                ),
            });
        }
        Ok(PWayTree { arity, labels, nodes })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_terminals(&self) -> usize {
        self.labels.len()
    }

    pub fn n_internal(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self, rank: usize) -> &[NodeRef] {
        &self.nodes[rank - 1]
    }

    /// Terminal sets of the internal nodes, indexed by `rank - 1`.
    pub fn cluster_sets(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = Vec::with_capacity(self.nodes.len());
        for children in &self.nodes {
            let mut set = Vec::new();
            for &c in children {
                match c {
                    NodeRef::Terminal(i) => set.push(i),
                    NodeRef::Cluster(r) => set.extend_from_slice(&sets[r - 1]),
                }
            }
            set.sort_unstable();
            sets.push(set);
        }
        sets
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PWayTreeDoc {
    pub arity: usize,
    pub terminals: Vec<String>,
    pub nodes: Vec<PWayNodeDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PWayNodeDoc {
    pub rank: usize,
    pub children: Vec<NodeRef>,
}

impl From<PWayTree> for PWayTreeDoc {
    fn from(t: PWayTree) -> Self {
        PWayTreeDoc {
            arity: t.arity,
            terminals: t.labels,
            nodes: t
                .nodes
                .into_iter()
                .enumerate()
                .map(|(i, children)| PWayNodeDoc { rank: i + 1, children })
                .collect(),
        }
    }
}

impl TryFrom<PWayTreeDoc> for PWayTree {
    type Error = Error;

    fn try_from(doc: PWayTreeDoc) -> Result<Self> {
        let k = doc.nodes.len();
        let mut slots: Vec<Option<Vec<NodeRef>>> = vec![None; k];
        for (pos, node) in doc.nodes.into_iter().enumerate() {
            if node.rank == 0 || node.rank > k {
                return Err(Error::Schema {
                    location: format!("nodes[{pos}].rank"),
                    reason: format!("rank {} outside 1..={k}", node.rank),
                });
            }
            if slots[node.rank - 1].replace(node.children).is_some() {
                return Err(Error::Schema {
                    location: format!("nodes[{pos}].rank"),
                    reason: format!("duplicate rank {}", node.rank),
                });
            }
        }
        let nodes = slots.into_iter().map(|s| s.expect("all ranks present")).collect();
        PWayTree::new(doc.arity, doc.terminals, nodes)
    }
}

/// Binary dendrogram from a p-way tree plus, for each original rank, the
/// rank of the binary node that now holds its terminal set.
pub fn unfold_with_map(t: &PWayTree) -> (Dendrogram, Vec<usize>) {
    let mut merges = Vec::with_capacity(t.n_internal() * (t.arity - 1));
    let mut map = Vec::with_capacity(t.n_internal());
    let lift = |c: NodeRef, map: &[usize]| match c {
        NodeRef::Cluster(r) => NodeRef::Cluster(map[r - 1]),
        terminal => terminal,
    };
    for children in &t.nodes {
        let mut acc = lift(children[0], &map);
        for &c in &children[1..] {
            merges.push((acc, lift(c, &map)));
            acc = NodeRef::Cluster(merges.len());
        }
        map.push(merges.len());
    }
    let d = Dendrogram::build_from_merges(t.labels.clone(), &merges, None).expect("unfolding preserves validity");
    (d, map)
}

/// Replaces each p-ary node by a left-deep chain of `p - 1` binary merges
/// holding consecutive ranks, the last of which stands for the original node.
pub fn unfold(t: &PWayTree) -> Dendrogram {
    unfold_with_map(t).0
}

/// Named scaling filter with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalingFilter {
    pub name: &'static str,
    pub coeffs: Vec<Rational64>,
}

impl ScalingFilter {
    pub fn sum(&self) -> Rational64 {
        self.coeffs.iter().copied().sum()
    }
}

pub fn convolve(a: &[Rational64], b: &[Rational64]) -> Vec<Rational64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational64::from_integer(0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn ratios(pairs: &[(i64, i64)]) -> Vec<Rational64> {
    pairs.iter().map(|&(n, d)| Rational64::new(n, d)).collect()
}

/// Box `(1/2, 1/2)`, triangle `(1/4, 1/2, 1/4)` and B3 spline
/// `(1/16, 1/4, 3/8, 1/4, 1/16)`.
pub fn scaling_filters() -> Vec<ScalingFilter> {
    vec![
        ScalingFilter {
            name: "box",
            coeffs: ratios(&[(1, 2), (1, 2)]),
        },
        ScalingFilter {
            name: "triangle",
            coeffs: ratios(&[(1, 4), (1, 2), (1, 4)]),
        },
        ScalingFilter {
            name: "b3spline",
            coeffs: ratios(&[(1, 16), (1, 4), (3, 8), (1, 4), (1, 16)]),
        },
    ]
}
