//! Reference trees used by tests, benchmarks and the CLI demo.

use crate::tree::{Dendrogram, NodeRef};

/// The eight-terminal worked example: clusters `q1 = {x1,x2}`,
/// `q2 = {x1,x2,x3}`, `q3 = {x4,x5}`, `q4 = {x4,x5,x6}`, `q5 = q2 ∪ q4`,
/// `q6 = {x7,x8}`, `q7 = all`, with the first listed child carrying the `+1`
/// branch label at every node.
pub fn eight_terminal_example() -> Dendrogram {
    use NodeRef::{Cluster as Q, Terminal as X};
    let merges = [
        (X(0), X(1)),
        (Q(1), X(2)),
        (X(3), X(4)),
        (Q(3), X(5)),
        (Q(2), Q(4)),
        (X(6), X(7)),
        (Q(5), Q(6)),
    ];
    Dendrogram::build_from_merges(Dendrogram::default_labels(8), &merges, None)
        .expect("fixture is a valid hierarchy")
}

/// Caterpillar tree `(((x1,x2),x3),x4)...` on `n` terminals.
pub fn comb(n: usize) -> Dendrogram {
    let merges: Vec<_> = (1..n)
        .map(|k| {
            let left = if k == 1 { NodeRef::Terminal(0) } else { NodeRef::Cluster(k - 1) };
            (left, NodeRef::Terminal(k))
        })
        .collect();
    Dendrogram::build_from_merges(Dendrogram::default_labels(n), &merges, None)
        .expect("comb is a valid hierarchy")
}
