//! Agglomerative hierarchical clustering with Lance–Williams updates.
//!
//! The implementation is the plain O(n³) stored-matrix algorithm: every step
//! scans all active pairs for the global minimum, merges it, and updates the
//! distances to the new cluster with the recurrence
//!
//! ```text
//! d(k, i∪j) = αᵢ d(k,i) + αⱼ d(k,j) + β d(i,j) + γ |d(k,i) − d(k,j)|
//! ```
//!
//! Ward, centroid and median run the recurrence on squared dissimilarities;
//! the recorded merge levels are the square roots, so for Euclidean input
//! they are comparable across criteria.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::tree::{Dendrogram, NodeRef};

/// Symmetric, nonnegative, zero-diagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dissimilarity(Array2<f64>);

impl Dissimilarity {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows != cols {
            return Err(Error::Shape {
                what: "dissimilarity columns",
                expected: rows,
                got: cols,
            });
        }
        for ((i, j), &v) in matrix.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if v < 0.0 {
                return Err(Error::Negative { i, j });
            }
            if i == j && v != 0.0 {
                return Err(Error::Schema {
                    location: format!("({i}, {i})"),
                    reason: format!("diagonal entry {v} is not zero"),
                });
            }
            if j > i && v != matrix[[j, i]] {
                return Err(Error::NotSymmetric { i, j });
            }
        }
        Ok(Dissimilarity(matrix))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.0
    }
}

/// Euclidean distances between the rows of `x`.
pub fn pairwise_euclidean(x: ArrayView2<'_, f64>) -> Result<Dissimilarity> {
    let (n, _) = x.dim();
    if n == 0 {
        return Err(Error::TooFewObservations(0));
    }
    if let Some(((row, col), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row, col });
    }
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    Ok(Dissimilarity(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Linkage {
    Ward,
    /// Median, Gower's method, WPGMC.
    MedianWpgmc,
    Centroid,
    Single,
    Complete,
    Average,
}

/// Lance–Williams coefficients for merging clusters `i` and `j`, seen from `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanceWilliams {
    pub alpha_i: f64,
    pub alpha_j: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl LanceWilliams {
    pub fn update(&self, d_ki: f64, d_kj: f64, d_ij: f64) -> f64 {
        self.alpha_i * d_ki + self.alpha_j * d_kj + self.beta * d_ij + self.gamma * (d_ki - d_kj).abs()
    }
}

impl Linkage {
    pub const ALL: [Linkage; 6] = [
        Linkage::Ward,
        Linkage::MedianWpgmc,
        Linkage::Centroid,
        Linkage::Single,
        Linkage::Complete,
        Linkage::Average,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Ward => "ward",
            Linkage::MedianWpgmc => "median",
            Linkage::Centroid => "centroid",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }

    /// Whether the recurrence operates on squared dissimilarities.
    pub fn uses_squared(self) -> bool {
        matches!(self, Linkage::Ward | Linkage::Centroid | Linkage::MedianWpgmc)
    }

    pub fn coefficients(self, n_i: usize, n_j: usize, n_k: usize) -> LanceWilliams {
        let (ni, nj, nk) = (n_i as f64, n_j as f64, n_k as f64);
        let (alpha_i, alpha_j, beta, gamma) = match self {
            Linkage::Single => (0.5, 0.5, 0.0, -0.5),
            Linkage::Complete => (0.5, 0.5, 0.0, 0.5),
            Linkage::Average => (ni / (ni + nj), nj / (ni + nj), 0.0, 0.0),
            Linkage::Ward => {
                let t = ni + nj + nk;
                ((ni + nk) / t, (nj + nk) / t, -nk / t, 0.0)
            }
            Linkage::Centroid => {
                let s = ni + nj;
                (ni / s, nj / s, -ni * nj / (s * s), 0.0)
            }
            Linkage::MedianWpgmc => (0.5, 0.5, -0.25, 0.0),
        };
        LanceWilliams {
            alpha_i,
            alpha_j,
            beta,
            gamma,
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ward" => Ok(Linkage::Ward),
            "median" | "wpgmc" | "median_wpgmc" | "gower" => Ok(Linkage::MedianWpgmc),
            "centroid" | "upgmc" => Ok(Linkage::Centroid),
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" | "upgma" => Ok(Linkage::Average),
            other => Err(format!(
                "unknown linkage {other:?}; expected one of ward, median, centroid, single, complete, average"
            )),
        }
    }
}

/// Agglomerates `diss` under `crit`. Ranks follow merge order, levels record
/// the merge dissimilarities (inversions included). Equal minima resolve to
/// the lexicographically smallest pair of smallest member indices.
pub fn agglomerate(diss: &Dissimilarity, crit: Linkage) -> Result<Dendrogram> {
    agglomerate_labeled(diss, crit, Dendrogram::default_labels(diss.len()))
}

pub fn agglomerate_labeled(diss: &Dissimilarity, crit: Linkage, labels: Vec<String>) -> Result<Dendrogram> {
    let n = diss.len();
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    if labels.len() != n {
        return Err(Error::Shape {
            what: "terminal labels",
            expected: n,
            got: labels.len(),
        });
    }
    let squared = crit.uses_squared();
    let mut work = diss.0.clone();
    if squared {
        work.mapv_inplace(|v| v * v);
    }
    // slot i holds the cluster whose smallest member is i
    let mut node: Vec<Option<NodeRef>> = (0..n).map(|i| Some(NodeRef::Terminal(i))).collect();
    let mut size = vec![1usize; n];
    let mut merges = Vec::with_capacity(n - 1);
    let mut levels = Vec::with_capacity(n - 1);

    for rank in 1..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if node[i].is_none() {
                continue;
            }
            for j in i + 1..n {
                if node[j].is_none() {
                    continue;
                }
                let v = work[[i, j]];
                if best.is_none_or(|(_, _, b)| v < b) {
                    best = Some((i, j, v));
                }
            }
        }
        let (i, j, d_ij) = best.expect("at least two active clusters");
        merges.push((node[i].expect("active"), node[j].expect("active")));
        let level = if squared { d_ij.max(0.0).sqrt() } else { d_ij };
        levels.push(level);

        for k in 0..n {
            if k == i || k == j || node[k].is_none() {
                continue;
            }
            let lw = crit.coefficients(size[i], size[j], size[k]);
            let mut v = lw.update(work[[k, i]], work[[k, j]], d_ij);
            if squared && v < 0.0 {
                v = 0.0;
            }
            work[[k, i]] = v;
            work[[i, k]] = v;
        }
        size[i] += size[j];
        node[i] = Some(NodeRef::Cluster(rank));
        node[j] = None;
    }
    Dendrogram::from_agglomeration(labels, &merges, Some(levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn one_dimensional_distances() {
        let x = array![[0.0], [3.0], [4.0]];
        let d = pairwise_euclidean(x.view()).unwrap();
        assert_eq!(d.get(0, 1), 3.0);
        assert_eq!(d.get(0, 2), 4.0);
        assert_eq!(d.get(1, 2), 1.0);
        let dup = pairwise_euclidean(array![[1.0, 2.0], [1.0, 2.0]].view()).unwrap();
        assert_eq!(dup.get(0, 1), 0.0);
        assert!(matches!(
            pairwise_euclidean(array![[1.0], [f64::NAN]].view()),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn three_point_single_linkage() {
        let d = pairwise_euclidean(array![[0.0], [3.0], [4.0]].view()).unwrap();
        let t = agglomerate(&d, Linkage::Single).unwrap();
        assert_eq!(t.children(1), [NodeRef::Terminal(1), NodeRef::Terminal(2)]);
        assert_eq!(t.children(2), [NodeRef::Terminal(0), NodeRef::Cluster(1)]);
        assert_eq!(t.levels().unwrap(), &[1.0, 3.0]);
        let c = agglomerate(&d, Linkage::Complete).unwrap();
        assert_eq!(c.levels().unwrap(), &[1.0, 4.0]);
        let a = agglomerate(&d, Linkage::Average).unwrap();
        assert_eq!(a.levels().unwrap(), &[1.0, 3.5]);
    }

    #[test]
    fn two_points_any_criterion() {
        let d = pairwise_euclidean(array![[1.0, 1.0], [4.0, 5.0]].view()).unwrap();
        for crit in Linkage::ALL {
            let t = agglomerate(&d, crit).unwrap();
            assert_eq!(t.levels().unwrap(), &[5.0], "{crit}");
        }
    }

    #[test]
    fn ward_level_is_variance_increase() {
        // ward on squared distances: merging {0},{1} then {2}:
        // d²(2, 01) = ((1+1)·d²(2,0) + (1+1)·d²(2,1) − 1·d²(0,1)) / 3
        let d = pairwise_euclidean(array![[0.0], [1.0], [5.0]].view()).unwrap();
        let t = agglomerate(&d, Linkage::Ward).unwrap();
        let expected = ((2.0 * 25.0 + 2.0 * 16.0 - 1.0) / 3.0f64).sqrt();
        assert!((t.levels().unwrap()[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn ties_break_lexicographically() {
        let d = pairwise_euclidean(array![[0.0], [1.0], [2.0], [3.0]].view()).unwrap();
        let t = agglomerate(&d, Linkage::Single).unwrap();
        assert_eq!(t.children(1), [NodeRef::Terminal(0), NodeRef::Terminal(1)]);
        assert_eq!(t.children(2), [NodeRef::Cluster(1), NodeRef::Terminal(2)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Dissimilarity::new(array![[0.0, 1.0], [2.0, 0.0]]),
            Err(Error::NotSymmetric { i: 0, j: 1 })
        ));
        let one = Dissimilarity::new(array![[0.0]]).unwrap();
        assert!(matches!(agglomerate(&one, Linkage::Ward), Err(Error::TooFewObservations(1))));
        assert_eq!("WPGMC".parse::<Linkage>(), Ok(Linkage::MedianWpgmc));
        assert!("kmeans".parse::<Linkage>().is_err());
    }

    #[test]
    fn median_can_invert() {
        // a centroid/median merge can land closer to a third point than the merged pair
        let x = array![[0.0, 0.0], [2.0, 0.0], [1.0, 1.8]];
        let d = pairwise_euclidean(x.view()).unwrap();
        let t = agglomerate(&d, Linkage::MedianWpgmc).unwrap();
        let lv = t.levels().unwrap();
        assert!(lv[1] < lv[0], "{lv:?}");
        assert!(!t.has_monotone_levels());
    }
}
