//! Haar wavelet transform of a dendrogram.
//!
//! Clusters are processed in increasing rank. For a node with ordered
//! children `(a, b)` the low-pass and band-pass filters give
//!
//! ```text
//! s(node) = ½ (s(a) + s(b))        d(node) = ½ (s(a) − s(b))
//! ```
//!
//! starting from the rows of the data matrix (ultrametric mode) or the
//! standard basis vectors (indicator mode). The inverse walks from the root
//! down, `s(a) = s + d` and `s(b) = s − d`, which is the same as
//! `X = C D + S` with `C` the branch-code matrix and `S` the final smooth
//! replicated on every row.
//!
//! The transform honours the stored child order: the first child carries the
//! `+1` code. Canonicalise the tree first (see
//! [`Dendrogram::canonical_orient`]) to obtain the representation-invariant
//! transform.
//!
//! The cardinality-weighted variant replaces the midpoint by the
//! size-weighted mean and stores `d = s(a) − s(node)`; the decomposition
//! remembers its weighting so the inverse stays exact.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::BranchMatrix;
use crate::tree::{Dendrogram, NodeRef};

/// What the terminal smooths are initialised from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Rows of an `n x m` observation matrix.
    Ultrametric,
    /// Indicator vectors, i.e. the `n x n` identity.
    Indicator,
}

/// Averaging rule used at each merge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Unweighted midpoint.
    Haar,
    /// Mean weighted by cluster cardinalities.
    Cardinality,
}

/// Smooth vectors of every node produced during a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothTable {
    terminals: Array2<f64>,
    clusters: Array2<f64>,
}

impl SmoothTable {
    pub fn get(&self, node: NodeRef) -> ArrayView1<'_, f64> {
        match node {
            NodeRef::Terminal(i) => self.terminals.row(i),
            NodeRef::Cluster(r) => self.clusters.row(r - 1),
        }
    }

    /// Cluster smooths, row `rank - 1`.
    pub fn clusters(&self) -> &Array2<f64> {
        &self.clusters
    }
}

/// Output of the forward transform.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletDecomposition {
    tree: Dendrogram,
    branch: BranchMatrix,
    details: Array2<f64>,
    smooth: Array1<f64>,
    mode: Mode,
    weighting: Weighting,
}

/// Hard-thresholding rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdRule {
    /// Zero every detail coefficient with `|d| <= t`.
    Absolute(f64),
    /// Keep the `k` detail rows carrying the most energy, zero the rest.
    KeepRows(usize),
    /// Zero every detail row whose Euclidean norm is `<= t`.
    RowNorm(f64),
}

fn check_finite(x: ArrayView2<'_, f64>) -> Result<()> {
    match x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, col), _)) => Err(Error::NonFinite { row, col }),
        None => Ok(()),
    }
}

/// Smooths of every node under the given weighting.
pub fn smooths(x: ArrayView2<'_, f64>, d: &Dendrogram, weighting: Weighting) -> Result<SmoothTable> {
    let n = d.n_terminals();
    if x.nrows() != n {
        return Err(Error::Shape {
            what: "data rows",
            expected: n,
            got: x.nrows(),
        });
    }
    check_finite(x)?;
    let m = x.ncols();
    let mut clusters = Array2::<f64>::zeros((d.n_clusters(), m));
    for (rank, [a, b]) in d.merges() {
        let (wa, wb) = merge_weights(d, a, b, weighting);
        for k in 0..m {
            let sa = node_value(x, &clusters, a, k);
            let sb = node_value(x, &clusters, b, k);
            clusters[[rank - 1, k]] = wa * sa + wb * sb;
        }
    }
    Ok(SmoothTable {
        terminals: x.to_owned(),
        clusters,
    })
}

fn node_value(x: ArrayView2<'_, f64>, clusters: &Array2<f64>, node: NodeRef, k: usize) -> f64 {
    match node {
        NodeRef::Terminal(i) => x[[i, k]],
        NodeRef::Cluster(r) => clusters[[r - 1, k]],
    }
}

fn merge_weights(d: &Dendrogram, a: NodeRef, b: NodeRef, weighting: Weighting) -> (f64, f64) {
    match weighting {
        Weighting::Haar => (0.5, 0.5),
        Weighting::Cardinality => {
            let (na, nb) = (d.cardinality(a) as f64, d.cardinality(b) as f64);
            (na / (na + nb), nb / (na + nb))
        }
    }
}

fn transform(x: ArrayView2<'_, f64>, d: &Dendrogram, mode: Mode, weighting: Weighting) -> Result<WaveletDecomposition> {
    let table = smooths(x, d, weighting)?;
    let m = x.ncols();
    let mut details = Array2::<f64>::zeros((d.n_clusters(), m));
    for (rank, [a, b]) in d.merges() {
        let sa = table.get(a);
        let sb = table.get(b);
        let mut row = details.row_mut(rank - 1);
        match weighting {
            Weighting::Haar => {
                for k in 0..m {
                    row[k] = 0.5 * (sa[k] - sb[k]);
                }
            }
            Weighting::Cardinality => {
                let s = table.clusters.row(rank - 1);
                for k in 0..m {
                    row[k] = sa[k] - s[k];
                }
            }
        }
    }
    let smooth = table.get(d.root()).to_owned();
    Ok(WaveletDecomposition {
        branch: BranchMatrix::from_dendrogram(d),
        tree: d.clone(),
        details,
        smooth,
        mode,
        weighting,
    })
}

/// Forward transform of the rows of `x` over `d`.
pub fn forward(x: ArrayView2<'_, f64>, d: &Dendrogram) -> Result<WaveletDecomposition> {
    transform(x, d, Mode::Ultrametric, Weighting::Haar)
}

/// Forward transform of the `n x n` identity: the embedded set-of-sets case.
pub fn forward_indicator(d: &Dendrogram) -> WaveletDecomposition {
    let eye = Array2::<f64>::eye(d.n_terminals());
    transform(eye.view(), d, Mode::Indicator, Weighting::Haar).expect("identity matches the tree")
}

/// Forward transform using cardinality-weighted means.
pub fn forward_weighted(x: ArrayView2<'_, f64>, d: &Dendrogram) -> Result<WaveletDecomposition> {
    transform(x, d, Mode::Ultrametric, Weighting::Cardinality)
}

/// Recursive top-down reconstruction.
pub fn inverse(w: &WaveletDecomposition) -> Array2<f64> {
    w.inverse()
}

/// Inverse of [`forward_weighted`]; identical to [`inverse`], which reads the
/// weighting stored in the decomposition.
pub fn inverse_weighted(w: &WaveletDecomposition) -> Array2<f64> {
    w.inverse()
}

/// Reconstruction as the matrix product `B D + S`.
pub fn reconstruct_matrix_form(w: &WaveletDecomposition) -> Array2<f64> {
    w.reconstruct_matrix_form()
}

pub fn hard_threshold(w: &WaveletDecomposition, rule: ThresholdRule) -> Result<WaveletDecomposition> {
    w.hard_threshold(rule)
}

pub fn detail_norms(w: &WaveletDecomposition) -> Vec<f64> {
    w.detail_norms()
}

impl WaveletDecomposition {
    /// Reassembles a decomposition from stored parts, e.g. a bundle on disk.
    pub fn from_parts(
        tree: Dendrogram,
        details: Array2<f64>,
        smooth: Array1<f64>,
        mode: Mode,
        weighting: Weighting,
    ) -> Result<Self> {
        if details.nrows() != tree.n_clusters() {
            return Err(Error::Shape {
                what: "detail rows",
                expected: tree.n_clusters(),
                got: details.nrows(),
            });
        }
        if details.ncols() != smooth.len() {
            return Err(Error::Shape {
                what: "smooth length",
                expected: details.ncols(),
                got: smooth.len(),
            });
        }
        check_finite(details.view())?;
        if let Some(col) = smooth.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, col });
        }
        Ok(WaveletDecomposition {
            branch: BranchMatrix::from_dendrogram(&tree),
            tree,
            details,
            smooth,
            mode,
            weighting,
        })
    }

    pub fn tree(&self) -> &Dendrogram {
        &self.tree
    }

    /// Branch codes `C`, `n x (n-1)`.
    pub fn branch(&self) -> &BranchMatrix {
        &self.branch
    }

    /// Detail matrix `D`, row `rank - 1` holds `d(q_rank)`.
    pub fn details(&self) -> &Array2<f64> {
        &self.details
    }

    /// Final smooth `s(q_{n-1})`.
    pub fn smooth(&self) -> &Array1<f64> {
        &self.smooth
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    /// Cluster ranks in processing order.
    pub fn order(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.tree.n_clusters()
    }

    pub fn n_terminals(&self) -> usize {
        self.tree.n_terminals()
    }

    pub fn n_features(&self) -> usize {
        self.smooth.len()
    }

    /// `S`: the final smooth repeated on each of the `n` rows.
    pub fn replicated_smooth(&self) -> Array2<f64> {
        let mut s = Array2::zeros((self.n_terminals(), self.n_features()));
        s.rows_mut().into_iter().for_each(|mut r| r.assign(&self.smooth));
        s
    }

    /// Synthesis matrix `B` with `X = B D + S`. Equal to the branch codes for
    /// the Haar weighting; for cardinality weighting the second child's
    /// entries are `-|a| / |b|`.
    pub fn synthesis_matrix(&self) -> Array2<f64> {
        let c = self.branch.matrix().mapv(f64::from);
        match self.weighting {
            Weighting::Haar => c,
            Weighting::Cardinality => {
                let mut b = c;
                for (rank, [first, second]) in self.tree.merges() {
                    let ratio = self.tree.cardinality(first) as f64 / self.tree.cardinality(second) as f64;
                    for mut row in b.rows_mut() {
                        if row[rank - 1] < 0.0 {
                            row[rank - 1] = -ratio;
                        }
                    }
                }
                b
            }
        }
    }

    pub fn inverse(&self) -> Array2<f64> {
        let n = self.n_terminals();
        let m = self.n_features();
        let mut out = Array2::<f64>::zeros((n, m));
        if self.tree.n_clusters() == 0 {
            out.row_mut(0).assign(&self.smooth);
            return out;
        }
        let mut clusters = Array2::<f64>::zeros((self.tree.n_clusters(), m));
        clusters.row_mut(self.tree.n_clusters() - 1).assign(&self.smooth);
        for rank in (1..=self.tree.n_clusters()).rev() {
            let [a, b] = self.tree.children(rank);
            let ratio = match self.weighting {
                Weighting::Haar => 1.0,
                Weighting::Cardinality => self.tree.cardinality(a) as f64 / self.tree.cardinality(b) as f64,
            };
            let s = clusters.row(rank - 1).to_owned();
            let det = self.details.row(rank - 1);
            for (child, sign) in [(a, 1.0), (b, -ratio)] {
                let mut target = match child {
                    NodeRef::Terminal(i) => out.row_mut(i),
                    NodeRef::Cluster(r) => clusters.row_mut(r - 1),
                };
                for k in 0..m {
                    target[k] = s[k] + sign * det[k];
                }
            }
        }
        out
    }

    pub fn reconstruct_matrix_form(&self) -> Array2<f64> {
        self.synthesis_matrix().dot(&self.details) + self.replicated_smooth()
    }

    /// Euclidean norm of each detail row, indexed by `rank - 1`.
    pub fn detail_norms(&self) -> Vec<f64> {
        self.details
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    /// Sum of each detail row. Zero in indicator mode.
    pub fn detail_row_sums(&self) -> Vec<f64> {
        self.details.sum_axis(Axis(1)).to_vec()
    }

    /// Per-terminal measure under which the synthesis columns are mutually
    /// orthogonal and orthogonal to the constants: `2^-depth` for the Haar
    /// weighting, `1` for cardinality weighting.
    pub fn terminal_weights(&self) -> Vec<f64> {
        (0..self.n_terminals())
            .map(|i| match self.weighting {
                Weighting::Haar => 0.5f64.powi(self.tree.depth(NodeRef::Terminal(i)) as i32),
                Weighting::Cardinality => 1.0,
            })
            .collect()
    }

    /// `ln` of the squared norm of synthesis column `rank` under
    /// [`Self::terminal_weights`].
    fn log_basis_energy(&self, rank: usize) -> f64 {
        match self.weighting {
            Weighting::Haar => -(self.tree.depth(NodeRef::Cluster(rank)) as f64) * std::f64::consts::LN_2,
            Weighting::Cardinality => {
                let [a, b] = self.tree.children(rank);
                let (na, nb) = (self.tree.cardinality(a) as f64, self.tree.cardinality(b) as f64);
                (na * (na + nb) / nb).ln()
            }
        }
    }

    /// Squared norm of synthesis column `rank` under [`Self::terminal_weights`].
    pub fn basis_energy(&self, rank: usize) -> f64 {
        self.log_basis_energy(rank).exp()
    }

    /// Energy each detail row contributes to the weighted reconstruction,
    /// `basis_energy(rank) * |d(rank)|²`.
    pub fn row_energies(&self) -> Vec<f64> {
        self.detail_norms()
            .iter()
            .enumerate()
            .map(|(j, norm)| self.basis_energy(j + 1) * norm * norm)
            .collect()
    }

    /// Ranks ordered by decreasing energy; ties favour the higher rank.
    pub fn ranks_by_energy(&self) -> Vec<usize> {
        let norms = self.detail_norms();
        let key = |rank: usize| {
            let norm = norms[rank - 1];
            if norm == 0.0 {
                f64::NEG_INFINITY
            } else {
                2.0 * norm.ln() + self.log_basis_energy(rank)
            }
        };
        let mut ranks: Vec<usize> = self.order().collect();
        ranks.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(b.cmp(&a)));
        ranks
    }

    pub fn hard_threshold(&self, rule: ThresholdRule) -> Result<WaveletDecomposition> {
        let mut out = self.clone();
        match rule {
            ThresholdRule::Absolute(t) => {
                if t.is_nan() || t < 0.0 {
                    return Err(Error::InvalidThreshold(format!("absolute threshold {t} must be >= 0")));
                }
                out.details.mapv_inplace(|v| if v.abs() <= t { 0.0 } else { v });
            }
            ThresholdRule::RowNorm(t) => {
                if t.is_nan() || t < 0.0 {
                    return Err(Error::InvalidThreshold(format!("row-norm threshold {t} must be >= 0")));
                }
                for (j, norm) in self.detail_norms().into_iter().enumerate() {
                    if norm <= t {
                        out.details.row_mut(j).fill(0.0);
                    }
                }
            }
            ThresholdRule::KeepRows(k) => {
                if k > self.tree.n_clusters() {
                    return Err(Error::InvalidThreshold(format!(
                        "cannot keep {k} rows of {}",
                        self.tree.n_clusters()
                    )));
                }
                for rank in self.ranks_by_energy().into_iter().skip(k) {
                    out.details.row_mut(rank - 1).fill(0.0);
                }
            }
        }
        Ok(out)
    }
}

/// `sum_i w_i |a_i − b_i|²` over the rows of two matrices.
pub fn weighted_squared_error(a: &Array2<f64>, b: &Array2<f64>, weights: &[f64]) -> f64 {
    a.rows()
        .into_iter()
        .zip(b.rows())
        .zip(weights)
        .map(|((ra, rb), w)| w * ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
        .sum()
}

/// Euclidean norm of each row difference.
pub fn row_errors(a: &Array2<f64>, b: &Array2<f64>) -> Vec<f64> {
    a.rows()
        .into_iter()
        .zip(b.rows())
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        .collect()
}

pub fn frobenius_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    weighted_squared_error(a, b, &vec![1.0; a.nrows()]).sqrt()
}

pub fn max_abs_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{comb, eight_terminal_example};
    use crate::generate::{random_data, random_dendrogram};
    use crate::tree::SwapMask;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two() -> Dendrogram {
        Dendrogram::build_from_merges(
            Dendrogram::default_labels(2),
            &[(NodeRef::Terminal(0), NodeRef::Terminal(1))],
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_merge() {
        let (a, b) = (5.0, 2.0);
        let w = forward(array![[a], [b]].view(), &two()).unwrap();
        assert_eq!(w.details(), &array![[(a - b) / 2.0]]);
        assert_eq!(w.smooth(), &array![(a + b) / 2.0]);
        assert_eq!(w.branch().matrix(), &array![[1i8], [-1]]);
        assert_eq!(w.detail_norms(), vec![1.5]);
        assert_eq!(w.inverse(), array![[a], [b]]);
        assert_eq!(w.reconstruct_matrix_form(), array![[a], [b]]);
    }

    #[test]
    fn indicator_pair() {
        let w = forward_indicator(&two());
        assert_eq!(w.details(), &array![[0.5, -0.5]]);
        assert_eq!(w.smooth(), &array![0.5, 0.5]);
        assert_eq!(w.mode(), Mode::Indicator);
    }

    /// Direct recursion: smooth of a node is the midpoint of its children's.
    fn recursive_smooth(d: &Dendrogram, x: &Array2<f64>, node: NodeRef) -> Array1<f64> {
        match node {
            NodeRef::Terminal(i) => x.row(i).to_owned(),
            NodeRef::Cluster(r) => {
                let [a, b] = d.children(r);
                (recursive_smooth(d, x, a) + recursive_smooth(d, x, b)) * 0.5
            }
        }
    }

    #[test]
    fn comb_indicator_matches_recursion() {
        let d = comb(4);
        let eye = Array2::<f64>::eye(4);
        let w = forward_indicator(&d);
        for r in 1..=3 {
            let [a, b] = d.children(r);
            let want = (recursive_smooth(&d, &eye, a) - recursive_smooth(&d, &eye, b)) * 0.5;
            assert_eq!(w.details().row(r - 1), want.view());
        }
        assert_eq!(w.smooth(), &array![0.125, 0.125, 0.25, 0.5]);
        for s in w.detail_row_sums() {
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn zero_details_reconstruct_constant() {
        let d = eight_terminal_example();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_data(&mut rng, 8, 3);
        let w = forward(x.view(), &d).unwrap();
        let flat = w.hard_threshold(ThresholdRule::KeepRows(0)).unwrap();
        assert!(flat.details().iter().all(|&v| v == 0.0));
        let rec = flat.inverse();
        for row in rec.rows() {
            assert_eq!(row, w.smooth().view());
        }
        let full = w.hard_threshold(ThresholdRule::KeepRows(7)).unwrap();
        assert_eq!(full.details(), w.details());
        assert_eq!(w.hard_threshold(ThresholdRule::Absolute(0.0)).unwrap().details(), w.details());
        assert!(w.hard_threshold(ThresholdRule::KeepRows(8)).is_err());
        assert!(w.hard_threshold(ThresholdRule::Absolute(-1.0)).is_err());
        assert!(w.hard_threshold(ThresholdRule::RowNorm(f64::NAN)).is_err());
    }

    #[test]
    fn row_norm_threshold_zeroes_small_rows() {
        let d = eight_terminal_example();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = forward(random_data(&mut rng, 8, 2).view(), &d).unwrap();
        let norms = w.detail_norms();
        let t = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        let f = w.hard_threshold(ThresholdRule::RowNorm(t)).unwrap();
        for (j, n) in norms.iter().enumerate() {
            let zeroed = f.details().row(j).iter().all(|&v| v == 0.0);
            assert_eq!(zeroed, *n <= t);
        }
    }

    #[test]
    fn round_trip_and_two_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = 1 + (rand::Rng::random_range(&mut rng, 0..30));
            let m = 1 + (rand::Rng::random_range(&mut rng, 0..5));
            let d = random_dendrogram(&mut rng, n);
            let x = random_data(&mut rng, n, m);
            for w in [forward(x.view(), &d).unwrap(), forward_weighted(x.view(), &d).unwrap()] {
                let rec = w.inverse();
                assert!(max_abs_error(&rec, &x) < 1e-12);
                assert!(max_abs_error(&rec, &w.reconstruct_matrix_form()) < 1e-12);
                // X − S = B D
                let centred = &x - &w.replicated_smooth();
                assert!(max_abs_error(&centred, &w.synthesis_matrix().dot(w.details())) < 1e-12);
            }
        }
    }

    #[test]
    fn weighted_merge_uses_cardinalities() {
        let d = eight_terminal_example();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_data(&mut rng, 8, 2);
        let table = smooths(x.view(), &d, Weighting::Cardinality).unwrap();
        let want = (table.get(NodeRef::Cluster(1)).to_owned() * 2.0 + table.get(NodeRef::Terminal(2))) / 3.0;
        let got = table.get(NodeRef::Cluster(2));
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-15));

        let pair = array![[1.0, -2.0], [3.0, 0.5]];
        assert_eq!(
            forward_weighted(pair.view(), &two()).unwrap().details(),
            forward(pair.view(), &two()).unwrap().details()
        );
    }

    #[test]
    fn flipping_a_node_negates_column_and_row() {
        let d = eight_terminal_example();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_data(&mut rng, 8, 3);
        let w = forward(x.view(), &d).unwrap();
        for j in 1..=7 {
            let flipped = d.apply_swap(&SwapMask::flipping(7, &[j])).unwrap();
            let v = forward(x.view(), &flipped).unwrap();
            for r in 1..=7 {
                let sign = if r == j { -1.0 } else { 1.0 };
                let cs = if r == j { -1 } else { 1 };
                assert_eq!(v.details().row(r - 1), w.details().row(r - 1).mapv(|e| sign * e));
                assert_eq!(v.branch().matrix().column(r - 1), w.branch().matrix().column(r - 1).mapv(|e| cs * e));
            }
            let prod_w = w.synthesis_matrix().dot(w.details());
            let prod_v = v.synthesis_matrix().dot(v.details());
            assert!(max_abs_error(&prod_w, &prod_v) < 1e-15);
        }
    }

    #[test]
    fn weighted_error_equals_dropped_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for weighted in [false, true] {
            let d = random_dendrogram(&mut rng, 20);
            let x = random_data(&mut rng, 20, 3);
            let w = if weighted { forward_weighted(x.view(), &d) } else { forward(x.view(), &d) }.unwrap();
            let energies = w.row_energies();
            let weights = w.terminal_weights();
            let ranked = w.ranks_by_energy();
            for k in 0..=19 {
                let f = w.hard_threshold(ThresholdRule::KeepRows(k)).unwrap();
                let err = weighted_squared_error(&x, &f.inverse(), &weights);
                let dropped: f64 = ranked[k..].iter().map(|&r| energies[r - 1]).sum();
                assert!((err - dropped).abs() < 1e-12 * (1.0 + dropped), "k={k}: {err} vs {dropped}");
            }
        }
    }

    #[test]
    fn shape_errors() {
        let d = eight_terminal_example();
        assert!(matches!(
            forward(Array2::zeros((7, 2)).view(), &d),
            Err(Error::Shape { expected: 8, got: 7, .. })
        ));
        let mut x = Array2::zeros((8, 2));
        x[[3, 1]] = f64::INFINITY;
        assert!(matches!(forward(x.view(), &d), Err(Error::NonFinite { row: 3, col: 1 })));
        assert!(WaveletDecomposition::from_parts(d, Array2::zeros((6, 2)), Array1::zeros(2), Mode::Ultrametric, Weighting::Haar).is_err());
    }
}
