//! Walkthrough of the eight-terminal example: codes, sums, clusters,
//! distances, norms and dilation.

use std::fmt::Write as _;

use anyhow::Result;
use dendrowave::fixtures::eight_terminal_example;
use dendrowave::padic::{self, cluster_code, dilation_operator_norm};
use dendrowave::NodeRef::{self, Cluster as Q, Terminal as X};

pub fn walkthrough() -> Result<String> {
    let d = eight_terminal_example();
    let p = 3;
    let (codes, c) = padic::encode(&d, p)?;
    let mut out = String::new();

    writeln!(out, "eight-terminal dendrogram")?;
    for (rank, [a, b]) in d.merges() {
        writeln!(out, "  q{rank} = {a} {b}  {{{}}}", members(&d, Q(rank))?)?;
    }

    writeln!(out, "\nterminal codes (p = {p})")?;
    for (i, code) in codes.iter().enumerate() {
        writeln!(out, "  x{} = {}  decimal {}", i + 1, code.to_symbolic(), code.decimal_value())?;
    }

    writeln!(out, "\nbranch matrix C")?;
    for row in c.matrix().rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>2}")).collect();
        writeln!(out, "  {}", cells.join(" "))?;
    }

    writeln!(out, "\nsums")?;
    for (a, b) in [(0, 1), (0, 2), (0, 6), (2, 5), (4, 7)] {
        let sum = codes[a].oplus(&codes[b])?;
        writeln!(out, "  x{} (+) x{} = {sum}", a + 1, b + 1)?;
    }

    writeln!(out, "\nclusters")?;
    for (rank, [a, b]) in d.merges() {
        writeln!(out, "  q{rank} = {a} (+) {b} = {}", cluster_code(&d, Q(rank), p)?)?;
    }

    writeln!(out, "\ndistances")?;
    let pairs = [
        (X(0), X(1)),
        (X(0), X(3)),
        (X(2), X(5)),
        (X(0), X(4)),
        (X(4), X(7)),
        (Q(1), Q(3)),
        (Q(2), Q(6)),
    ];
    for (a, b) in pairs {
        writeln!(out, "  |{a} - {b}| = {}", padic::pdistance_nodes(&d, a, b, p)?)?;
    }

    writeln!(out, "\nnorms")?;
    for node in [X(0), Q(2), Q(4), Q(7)] {
        writeln!(out, "  |{node}| = {}", padic::pnorm(&d, node)?)?;
    }
    writeln!(out, "  |1/p| = {}", dilation_operator_norm())?;

    writeln!(out, "\ndilation (p = 2)")?;
    for i in 0..d.n_terminals() {
        let code = cluster_code(&d, X(i), 2)?;
        writeln!(out, "  x{}: {} -> {}", i + 1, code.to_base_string(), padic::dilate(&code).to_base_string())?;
    }
    Ok(out)
}

fn members(d: &dendrowave::Dendrogram, node: NodeRef) -> Result<String> {
    let names: Vec<String> = d.term_set(node)?.iter().map(|&i| format!("x{}", i + 1)).collect();
    Ok(names.join(", "))
}
