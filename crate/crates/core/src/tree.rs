//! Node-ranked binary dendrograms.
//!
//! A dendrogram on `n` terminals has `n - 1` internal nodes whose ranks
//! `1..=n-1` give the agglomeration order; the root has rank `n - 1`.
//! Terminals are addressed by a zero-based index, clusters by their rank.
//! Each internal node stores an ordered pair of children. The order is
//! significant for the branch codes (`+1` for the first child, `-1` for the
//! second); [`Dendrogram::canonical_orient`] fixes it to elder-first.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference to a node of a dendrogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRef {
    /// Terminal (singleton) by zero-based index.
    Terminal(usize),
    /// Internal node by rank, `1..=n-1`.
    Cluster(usize),
}

impl NodeRef {
    /// Rank of the node; terminals sit at rank 0.
    pub fn rank(self) -> usize {
        match self {
            NodeRef::Terminal(_) => 0,
            NodeRef::Cluster(r) => r,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, NodeRef::Terminal(_))
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Terminal(i) => write!(f, "x{}", i + 1),
            NodeRef::Cluster(r) => write!(f, "q{r}"),
        }
    }
}

/// One bit per internal node; bit `k - 1` exchanges the children of rank `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwapMask(Vec<bool>);

impl SwapMask {
    pub fn new(bits: Vec<bool>) -> Self {
        SwapMask(bits)
    }

    pub fn identity(len: usize) -> Self {
        SwapMask(vec![false; len])
    }

    /// Mask whose bit `k` is bit `k` of `word`. Only meaningful for `len <= 64`.
    pub fn from_word(word: u64, len: usize) -> Self {
        SwapMask((0..len).map(|k| k < 64 && (word >> k) & 1 == 1).collect())
    }

    /// Mask flipping only the given ranks.
    pub fn flipping(len: usize, ranks: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &r in ranks {
            if (1..=len).contains(&r) {
                bits[r - 1] = true;
            }
        }
        SwapMask(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flips(&self, rank: usize) -> bool {
        self.0[rank - 1]
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LevelCheck {
    StrictlyIncreasing,
    Recorded,
}

/// Binary rooted node-ranked tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "DendrogramDoc", into = "DendrogramDoc")]
pub struct Dendrogram {
    labels: Vec<String>,
    children: Vec<[NodeRef; 2]>,
    levels: Option<Vec<f64>>,
    terminal_parent: Vec<usize>,
    cluster_parent: Vec<usize>,
    sizes: Vec<usize>,
}

impl PartialEq for Dendrogram {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.children == other.children && self.levels == other.levels
    }
}

impl Dendrogram {
    /// Builds a dendrogram from an ordered list of pairwise merges; the k-th
    /// merge (1-based) receives rank k. Levels, when given, must be finite and
    /// strictly increasing in rank.
    pub fn build_from_merges(
        labels: Vec<String>,
        merges: &[(NodeRef, NodeRef)],
        levels: Option<Vec<f64>>,
    ) -> Result<Self> {
        Self::assemble(labels, merges, levels, LevelCheck::StrictlyIncreasing)
    }

    /// Like [`Dendrogram::build_from_merges`] but records levels as observed by
    /// an agglomeration, allowing ties and inversions. Levels must be finite.
    pub fn from_agglomeration(
        labels: Vec<String>,
        merges: &[(NodeRef, NodeRef)],
        levels: Option<Vec<f64>>,
    ) -> Result<Self> {
        Self::assemble(labels, merges, levels, LevelCheck::Recorded)
    }

    /// Labels `x1..xn`.
    pub fn default_labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    fn assemble(
        labels: Vec<String>,
        merges: &[(NodeRef, NodeRef)],
        levels: Option<Vec<f64>>,
        check: LevelCheck,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Schema {
                location: "terminals".into(),
                reason: "a dendrogram needs at least one terminal".into(),
            });
        }
        if merges.len() != n - 1 {
            return Err(Error::InvalidMerge {
                rank: merges.len().min(n - 1).max(1),
                reason: format!("{} merges given for {} terminals, expected {}", merges.len(), n, n - 1),
            });
        }
        let mut terminal_parent = vec![0usize; n];
        let mut cluster_parent = vec![0usize; n - 1];
        let mut sizes = vec![0usize; n - 1];
        for (idx, &(a, b)) in merges.iter().enumerate() {
            let rank = idx + 1;
            if a == b {
                return Err(Error::InvalidMerge {
                    rank,
                    reason: format!("node {a} merged with itself"),
                });
            }
            let mut size = 0;
            for child in [a, b] {
                let slot = match child {
                    NodeRef::Terminal(i) if i < n => &mut terminal_parent[i],
                    NodeRef::Terminal(i) => {
                        return Err(Error::InvalidMerge {
                            rank,
                            reason: format!("terminal index {i} out of range for {n} terminals"),
                        })
                    }
                    NodeRef::Cluster(r) if r >= 1 && r < rank => &mut cluster_parent[r - 1],
                    NodeRef::Cluster(r) => {
                        return Err(Error::InvalidMerge {
                            rank,
                            reason: format!("dangling reference to q{r}: not formed before rank {rank}"),
                        })
                    }
                };
                if *slot != 0 {
                    return Err(Error::InvalidMerge {
                        rank,
                        reason: format!("{child} already merged at rank {}", *slot),
                    });
                }
                *slot = rank;
                size += match child {
                    NodeRef::Terminal(_) => 1,
                    NodeRef::Cluster(r) => sizes[r - 1],
                };
            }
            sizes[rank - 1] = size;
        }
        if let Some(lv) = &levels {
            if lv.len() != n - 1 {
                return Err(Error::Shape {
                    what: "levels",
                    expected: n - 1,
                    got: lv.len(),
                });
            }
            for (idx, &v) in lv.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidMerge {
                        rank: idx + 1,
                        reason: format!("level {v} is not finite"),
                    });
                }
                if check == LevelCheck::StrictlyIncreasing && idx > 0 && v <= lv[idx - 1] {
                    return Err(Error::InvalidMerge {
                        rank: idx + 1,
                        reason: format!("level {v} does not exceed level {} of rank {idx}", lv[idx - 1]),
                    });
                }
            }
        }
        Ok(Dendrogram {
            labels,
            children: merges.iter().map(|&(a, b)| [a, b]).collect(),
            levels,
            terminal_parent,
            cluster_parent,
            sizes,
        })
    }

    pub fn n_terminals(&self) -> usize {
        self.labels.len()
    }

    /// Number of internal nodes, `n - 1`.
    pub fn n_clusters(&self) -> usize {
        self.children.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, terminal: usize) -> Option<&str> {
        self.labels.get(terminal).map(String::as_str)
    }

    /// Finds a terminal by label, or accepts `x<k>` / `q<k>` node names.
    pub fn resolve(&self, name: &str) -> Option<NodeRef> {
        if let Some(i) = self.labels.iter().position(|l| l == name) {
            return Some(NodeRef::Terminal(i));
        }
        let num = |s: &str| s.parse::<usize>().ok();
        let node = match name.split_at_checked(1)? {
            ("q", rest) => NodeRef::Cluster(num(rest)?),
            ("x", rest) => NodeRef::Terminal(num(rest)?.checked_sub(1)?),
            _ => return None,
        };
        self.contains(node).then_some(node)
    }

    pub fn levels(&self) -> Option<&[f64]> {
        self.levels.as_deref()
    }

    /// True when levels are absent or non-decreasing in rank.
    pub fn has_monotone_levels(&self) -> bool {
        self.levels.as_ref().is_none_or(|lv| lv.windows(2).all(|w| w[0] <= w[1]))
    }

    /// Ordered children of the node of the given rank.
    pub fn children(&self, rank: usize) -> [NodeRef; 2] {
        self.children[rank - 1]
    }

    /// Merge list in rank order.
    pub fn merges(&self) -> impl Iterator<Item = (usize, [NodeRef; 2])> + '_ {
        self.children.iter().enumerate().map(|(i, &c)| (i + 1, c))
    }

    pub fn root(&self) -> NodeRef {
        match self.n_clusters() {
            0 => NodeRef::Terminal(0),
            k => NodeRef::Cluster(k),
        }
    }

    pub fn contains(&self, node: NodeRef) -> bool {
        match node {
            NodeRef::Terminal(i) => i < self.n_terminals(),
            NodeRef::Cluster(r) => (1..=self.n_clusters()).contains(&r),
        }
    }

    fn check(&self, node: NodeRef) -> Result<()> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(Error::UnknownNode(node))
        }
    }

    /// Rank of the parent, `None` for the root.
    pub fn parent(&self, node: NodeRef) -> Option<usize> {
        let p = match node {
            NodeRef::Terminal(i) => *self.terminal_parent.get(i)?,
            NodeRef::Cluster(r) => *self.cluster_parent.get(r.checked_sub(1)?)?,
        };
        (p != 0).then_some(p)
    }

    /// Ranks of all strict ancestors, bottom-up.
    pub fn ancestors(&self, node: NodeRef) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.parent(node), |&r| self.parent(NodeRef::Cluster(r)))
    }

    /// Number of strict ancestors.
    pub fn depth(&self, node: NodeRef) -> usize {
        self.ancestors(node).count()
    }

    /// Number of terminals below a node.
    pub fn cardinality(&self, node: NodeRef) -> usize {
        match node {
            NodeRef::Terminal(_) => 1,
            NodeRef::Cluster(r) => self.sizes[r - 1],
        }
    }

    /// Terminals descending from `node`, sorted ascending.
    pub fn term_set(&self, node: NodeRef) -> Result<Vec<usize>> {
        self.check(node)?;
        let mut out = Vec::with_capacity(self.cardinality(node));
        let mut stack = vec![node];
        while let Some(cur) = stack.pop() {
            match cur {
                NodeRef::Terminal(i) => out.push(i),
                NodeRef::Cluster(r) => stack.extend(self.children(r)),
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Terminal sets of every cluster, indexed by `rank - 1`.
    pub fn cluster_sets(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = Vec::with_capacity(self.n_clusters());
        for [a, b] in &self.children {
            let mut set = Vec::new();
            for child in [a, b] {
                match *child {
                    NodeRef::Terminal(i) => set.push(i),
                    NodeRef::Cluster(r) => set.extend_from_slice(&sets[r - 1]),
                }
            }
            set.sort_unstable();
            sets.push(set);
        }
        sets
    }

    /// Lowest-rank cluster containing both terminals.
    pub fn lca(&self, i: usize, j: usize) -> Result<NodeRef> {
        self.lca_rank(i, j).map(NodeRef::Cluster)
    }

    pub fn lca_rank(&self, i: usize, j: usize) -> Result<usize> {
        self.check(NodeRef::Terminal(i))?;
        self.check(NodeRef::Terminal(j))?;
        if i == j {
            return Err(Error::SameTerminal(i));
        }
        let mut on_path = vec![false; self.n_clusters() + 1];
        for r in self.ancestors(NodeRef::Terminal(i)) {
            on_path[r] = true;
        }
        Ok(self
            .ancestors(NodeRef::Terminal(j))
            .find(|&r| on_path[r])
            .expect("root is a common ancestor"))
    }

    /// Equivalent representation with the children exchanged wherever the
    /// mask is set.
    pub fn apply_swap(&self, mask: &SwapMask) -> Result<Dendrogram> {
        if mask.len() != self.n_clusters() {
            return Err(Error::MaskLength {
                expected: self.n_clusters(),
                got: mask.len(),
            });
        }
        let mut out = self.clone();
        for (idx, pair) in out.children.iter_mut().enumerate() {
            if mask.0[idx] {
                pair.swap(0, 1);
            }
        }
        Ok(out)
    }

    /// Whether `a` is the elder of the sibling pair `(a, b)`: higher rank, or
    /// for two terminals the smaller index.
    pub fn is_elder(a: NodeRef, b: NodeRef) -> bool {
        match (a, b) {
            (NodeRef::Terminal(i), NodeRef::Terminal(j)) => i < j,
            _ => a.rank() > b.rank(),
        }
    }

    /// Elder-first representation.
    pub fn canonical_orient(&self) -> Dendrogram {
        let mut out = self.clone();
        for pair in out.children.iter_mut() {
            if !Self::is_elder(pair[0], pair[1]) {
                pair.swap(0, 1);
            }
        }
        out
    }

    pub fn is_canonical(&self) -> bool {
        self.children.iter().all(|&[a, b]| Self::is_elder(a, b))
    }

    /// Mask taking `self` to its canonical orientation.
    pub fn canonicalizing_mask(&self) -> SwapMask {
        SwapMask(self.children.iter().map(|&[a, b]| !Self::is_elder(a, b)).collect())
    }

    /// Terminals in left-to-right drawing order (first child first).
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_terminals());
        let mut stack = vec![self.root()];
        while let Some(cur) = stack.pop() {
            match cur {
                NodeRef::Terminal(i) => out.push(i),
                NodeRef::Cluster(r) => {
                    let [a, b] = self.children(r);
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
        out
    }

    /// Same tree with terminal labels replaced.
    pub fn with_labels(&self, labels: Vec<String>) -> Result<Dendrogram> {
        if labels.len() != self.n_terminals() {
            return Err(Error::Shape {
                what: "terminal labels",
                expected: self.n_terminals(),
                got: labels.len(),
            });
        }
        let mut out = self.clone();
        out.labels = labels;
        Ok(out)
    }

    /// Same tree without agglomeration levels.
    pub fn without_levels(&self) -> Dendrogram {
        let mut out = self.clone();
        out.levels = None;
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dendrogram documents always serialize")
    }

    pub fn from_json(doc: &str) -> Result<Dendrogram> {
        Ok(serde_json::from_str(doc)?)
    }
}

/// JSON document form of a dendrogram.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DendrogramDoc {
    pub terminals: Vec<String>,
    pub nodes: Vec<NodeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub rank: usize,
    pub children: [NodeRef; 2],
}

impl From<Dendrogram> for DendrogramDoc {
    fn from(d: Dendrogram) -> Self {
        DendrogramDoc {
            nodes: d
                .merges()
                .map(|(rank, children)| NodeDoc { rank, children })
                .collect(),
            terminals: d.labels,
            levels: d.levels,
        }
    }
}

impl TryFrom<DendrogramDoc> for Dendrogram {
    type Error = Error;

    fn try_from(doc: DendrogramDoc) -> Result<Self> {
        let n = doc.terminals.len();
        if n == 0 {
            return Err(Error::Schema {
                location: "terminals".into(),
                reason: "empty terminal list".into(),
            });
        }
        if doc.nodes.len() != n - 1 {
            return Err(Error::Schema {
                location: "nodes".into(),
                reason: format!("{} nodes for {} terminals, expected {}", doc.nodes.len(), n, n - 1),
            });
        }
        let mut slots: Vec<Option<(NodeRef, NodeRef)>> = vec![None; n - 1];
        for (pos, node) in doc.nodes.iter().enumerate() {
            if node.rank == 0 || node.rank > n - 1 {
                return Err(Error::Schema {
                    location: format!("nodes[{pos}].rank"),
                    reason: format!("rank {} outside 1..={}", node.rank, n - 1),
                });
            }
            let slot = &mut slots[node.rank - 1];
            if slot.is_some() {
                return Err(Error::Schema {
                    location: format!("nodes[{pos}].rank"),
                    reason: format!("duplicate rank {}", node.rank),
                });
            }
            *slot = Some((node.children[0], node.children[1]));
        }
        let merges: Vec<_> = slots.into_iter().map(|s| s.expect("every rank filled")).collect();
        Dendrogram::from_agglomeration(doc.terminals, &merges, doc.levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::eight_terminal_example;
    use NodeRef::{Cluster as Q, Terminal as X};

    #[test]
    fn eight_terminal_clusters_match_caption() {
        let d = eight_terminal_example();
        let expected: [&[usize]; 7] = [
            &[0, 1],
            &[0, 1, 2],
            &[3, 4],
            &[3, 4, 5],
            &[0, 1, 2, 3, 4, 5],
            &[6, 7],
            &[0, 1, 2, 3, 4, 5, 6, 7],
        ];
        for (r, want) in expected.iter().enumerate() {
            assert_eq!(d.term_set(Q(r + 1)).unwrap(), *want, "q{}", r + 1);
        }
        assert_eq!(d.cluster_sets()[1], vec![0, 1, 2]);
        assert_eq!(d.term_set(X(4)).unwrap(), vec![4]);
        assert!(d.term_set(Q(8)).is_err());
    }

    #[test]
    fn two_terminals() {
        let d = Dendrogram::build_from_merges(Dendrogram::default_labels(2), &[(X(0), X(1))], None).unwrap();
        assert_eq!(d.root(), Q(1));
        assert_eq!(d.lca(0, 1).unwrap(), Q(1));
    }

    #[test]
    fn single_terminal_is_legal() {
        let d = Dendrogram::build_from_merges(vec!["a".into()], &[], None).unwrap();
        assert_eq!(d.root(), X(0));
        assert_eq!(d.leaf_order(), vec![0]);
        assert_eq!(d.canonical_orient(), d);
        let back = Dendrogram::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn lca_examples() {
        let d = eight_terminal_example();
        assert_eq!(d.lca(0, 1).unwrap(), Q(1));
        assert_eq!(d.lca(0, 3).unwrap(), Q(5));
        assert_eq!(d.lca(6, 2).unwrap(), Q(7));
        assert_eq!(d.lca(2, 6).unwrap(), Q(7));
        assert!(matches!(d.lca(3, 3), Err(Error::SameTerminal(3))));
    }

    #[test]
    fn merge_validation_names_rank() {
        let labels = Dendrogram::default_labels(3);
        let dup = Dendrogram::build_from_merges(labels.clone(), &[(X(0), X(1)), (X(0), X(2))], None);
        assert!(matches!(dup, Err(Error::InvalidMerge { rank: 2, .. })));
        let dangling = Dendrogram::build_from_merges(labels.clone(), &[(X(0), Q(2)), (Q(1), X(2))], None);
        assert!(matches!(dangling, Err(Error::InvalidMerge { rank: 1, .. })));
        let levels = Dendrogram::build_from_merges(labels.clone(), &[(X(0), X(1)), (Q(1), X(2))], Some(vec![2.0, 2.0]));
        assert!(matches!(levels, Err(Error::InvalidMerge { rank: 2, .. })));
        let recorded = Dendrogram::from_agglomeration(labels, &[(X(0), X(1)), (Q(1), X(2))], Some(vec![2.0, 1.5]));
        assert!(!recorded.unwrap().has_monotone_levels());
    }

    #[test]
    fn swap_root_preserves_term_sets() {
        let d = eight_terminal_example();
        let s = d.apply_swap(&SwapMask::flipping(7, &[7])).unwrap();
        assert_eq!(s.children(7), [Q(6), Q(5)]);
        for r in 1..=7 {
            assert_eq!(s.term_set(Q(r)).unwrap(), d.term_set(Q(r)).unwrap());
        }
        assert_eq!(d.apply_swap(&SwapMask::identity(7)).unwrap(), d);
        assert_eq!(s.apply_swap(&SwapMask::flipping(7, &[7])).unwrap(), d);
        assert!(matches!(d.apply_swap(&SwapMask::identity(3)), Err(Error::MaskLength { .. })));
    }

    #[test]
    fn canonical_orientation() {
        let d = eight_terminal_example();
        let c = d.canonical_orient();
        // q1 (rank 1) is already the elder of x3 at q2
        assert_eq!(c.children(2), d.children(2));
        // q4 outranks q2 and q6 outranks q5
        assert_eq!(c.children(5), [Q(4), Q(2)]);
        assert_eq!(c.children(7), [Q(6), Q(5)]);
        assert!(c.is_canonical());
        assert_eq!(c.canonical_orient(), c);
        assert_eq!(d.apply_swap(&d.canonicalizing_mask()).unwrap(), c);
    }

    #[test]
    fn leaf_order_and_resolve() {
        let d = eight_terminal_example();
        assert_eq!(d.leaf_order(), (0..8).collect::<Vec<_>>());
        assert_eq!(d.resolve("x3"), Some(X(2)));
        assert_eq!(d.resolve("q7"), Some(Q(7)));
        assert_eq!(d.resolve("q8"), None);
        assert_eq!(d.depth(X(0)), 4);
        assert_eq!(d.ancestors(X(2)).collect::<Vec<_>>(), vec![2, 5, 7]);
    }

    #[test]
    fn json_round_trip_and_schema_errors() {
        let d = eight_terminal_example();
        let json = d.to_json();
        assert!(json.contains("\"rank\": 7"));
        assert_eq!(Dendrogram::from_json(&json).unwrap(), d);

        let dup = json.replacen("\"rank\": 2", "\"rank\": 1", 1);
        let err = Dendrogram::from_json(&dup).unwrap_err();
        assert!(err.to_string().contains("duplicate rank 1"), "{err}");

        let single = r#"{"terminals":["only"],"nodes":[]}"#;
        assert_eq!(Dendrogram::from_json(single).unwrap().n_terminals(), 1);
    }
}
