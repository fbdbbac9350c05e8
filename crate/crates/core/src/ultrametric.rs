//! Ultrametric matrices: cophenetic generation, strong-triangle validation,
//! the permuted canonical-form test, and ball properties.

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::tree::{Dendrogram, NodeRef};

/// Relative tolerance used for real-valued matrices.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Which node height the cophenetic matrix records.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Height {
    Ranks,
    Levels,
}

/// `D(i,j)` = height of the lowest cluster containing both terminals.
pub fn cophenetic(d: &Dendrogram, height: Height) -> Result<Array2<f64>> {
    let n = d.n_terminals();
    let heights: Vec<f64> = match height {
        Height::Ranks => (1..=d.n_clusters()).map(|r| r as f64).collect(),
        Height::Levels => d.levels().ok_or(Error::MissingLevels)?.to_vec(),
    };
    let sets = d.cluster_sets();
    let members = |node: NodeRef| -> Vec<usize> {
        match node {
            NodeRef::Terminal(i) => vec![i],
            NodeRef::Cluster(r) => sets[r - 1].clone(),
        }
    };
    let mut m = Array2::zeros((n, n));
    // a pair first meets where its two sides are joined
    for (rank, [a, b]) in d.merges() {
        let h = heights[rank - 1];
        let right = members(b);
        for i in members(a) {
            for &j in &right {
                m[[i, j]] = h;
                m[[j, i]] = h;
            }
        }
    }
    Ok(m)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn check_symmetric(m: &Array2<f64>, tol: f64) -> Result<usize> {
    let (n, cols) = m.dim();
    if n != cols {
        return Err(Error::Shape {
            what: "matrix columns",
            expected: n,
            got: cols,
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            if !close(m[[i, j]], m[[j, i]], tol) {
                return Err(Error::NotSymmetric { i, j });
            }
        }
    }
    Ok(n)
}

/// A triple with `d(x,z) > max(d(x,y), d(y,z))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Witness {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ultrametric,
    Violated(Witness),
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::Ultrametric
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Triangle {
    Equilateral,
    IsoscelesSmallBase,
    Violating(Witness),
}

/// In an ultrametric triangle the two longest sides are equal.
fn classify(m: &Array2<f64>, i: usize, j: usize, k: usize, tol: f64) -> Triangle {
    let mut sides = [(m[[i, j]], i, j, k), (m[[i, k]], i, k, j), (m[[j, k]], j, k, i)];
    sides.sort_by(|a, b| a.0.total_cmp(&b.0));
    let [(short, ..), (mid, ..), (long, x, z, y)] = sides;
    if !close(long, mid, tol) && long > mid {
        Triangle::Violating(Witness { x, y, z })
    } else if close(short, mid, tol) {
        Triangle::Equilateral
    } else {
        Triangle::IsoscelesSmallBase
    }
}

/// Checks the strong triangle inequality on every triple. `tol` is relative;
/// pass 0 for exact comparison.
pub fn is_ultrametric(m: &Array2<f64>, tol: f64) -> Result<Verdict> {
    let n = check_symmetric(m, tol)?;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if let Triangle::Violating(w) = classify(m, i, j, k, tol) {
                    return Ok(Verdict::Violated(w));
                }
            }
        }
    }
    Ok(Verdict::Ultrametric)
}

/// Counts of triangle types over all unordered triples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TriangleCensus {
    pub equilateral: usize,
    pub isosceles_small_base: usize,
    pub violating: usize,
}

impl TriangleCensus {
    pub fn total(&self) -> usize {
        self.equilateral + self.isosceles_small_base + self.violating
    }
}

pub fn triangle_classify(m: &Array2<f64>, tol: f64) -> Result<TriangleCensus> {
    let n = check_symmetric(m, tol)?;
    let mut census = TriangleCensus::default();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                match classify(m, i, j, k, tol) {
                    Triangle::Equilateral => census.equilateral += 1,
                    Triangle::IsoscelesSmallBase => census.isosceles_small_base += 1,
                    Triangle::Violating(_) => census.violating += 1,
                }
            }
        }
    }
    Ok(census)
}

/// `out[a][b] = m[order[a]][order[b]]`.
pub fn permute(m: &Array2<f64>, order: &[usize]) -> Result<Array2<f64>> {
    let n = m.nrows();
    let mut seen = vec![false; n];
    if order.len() != n || !order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true)) {
        return Err(Error::NotPermutation(n));
    }
    Ok(Array2::from_shape_fn((n, n), |(a, b)| m[[order[a], order[b]]]))
}

/// Tests the row-monotone canonical form on an already permuted matrix:
///
/// 1. every row is non-decreasing to the right of the diagonal;
/// 2. if row `k` starts with a run `d(k,k+1) = … = d(k,k+ℓ+1)` of maximal
///    length, then `d(k+1,j) <= d(k,j)` inside the run and
///    `d(k+1,j) = d(k,j)` beyond it.
pub fn has_canonical_form(p: &Array2<f64>, tol: f64) -> bool {
    let n = p.nrows();
    let le = |a: f64, b: f64| a <= b || close(a, b, tol);
    for k in 0..n {
        for j in k + 1..n.saturating_sub(1) {
            if !le(p[[k, j]], p[[k, j + 1]]) {
                return false;
            }
        }
    }
    for k in 0..n.saturating_sub(1) {
        let head = p[[k, k + 1]];
        let mut run_end = k + 1;
        while run_end + 1 < n && close(p[[k, run_end + 1]], head, tol) {
            run_end += 1;
        }
        for j in k + 2..n {
            let ok = if j <= run_end {
                le(p[[k + 1, j]], p[[k, j]])
            } else {
                close(p[[k + 1, j]], p[[k, j]], tol)
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Permutes rows and columns by `order` and reports whether the result has
/// the canonical form characterising ultrametric matrices.
pub fn canonical_form(m: &Array2<f64>, order: &[usize], tol: f64) -> Result<(Array2<f64>, bool)> {
    check_symmetric(m, tol)?;
    let p = permute(m, order)?;
    let ok = has_canonical_form(&p, tol);
    Ok((p, ok))
}

/// Matrix verified to be symmetric, nonnegative, zero-diagonal and
/// ultrametric.
#[derive(Clone, Debug, PartialEq)]
pub struct UltrametricMatrix {
    matrix: Array2<f64>,
    tol: f64,
}

impl UltrametricMatrix {
    pub fn validate(matrix: Array2<f64>, tol: f64) -> Result<Self> {
        let n = check_symmetric(&matrix, tol)?;
        for i in 0..n {
            for j in 0..n {
                let v = matrix[[i, j]];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::Negative { i, j });
                }
            }
            if matrix[[i, i]] != 0.0 {
                return Err(Error::Schema {
                    location: format!("({i}, {i})"),
                    reason: "diagonal entry is not zero".into(),
                });
            }
        }
        if let Verdict::Violated(Witness { x, y, z }) = is_ultrametric(&matrix, tol)? {
            return Err(Error::NotUltrametric { x, y, z });
        }
        Ok(UltrametricMatrix { matrix, tol })
    }

    /// Cophenetic matrix of a dendrogram, ultrametric by construction.
    pub fn from_dendrogram(d: &Dendrogram, height: Height) -> Result<Self> {
        Self::validate(cophenetic(d, height)?, 0.0)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Closed ball `{y : d(center, y) <= r}`.
    pub fn ball(&self, center: usize, r: f64) -> Vec<usize> {
        let row = self.matrix.row(center);
        (0..self.len()).filter(|&y| row[y] <= r).collect()
    }

    /// Distinct entries, including 0.
    pub fn radii(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.matrix.iter().copied().chain([0.0]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Distinct balls of radius `r`.
    pub fn balls(&self, r: f64) -> Vec<Vec<usize>> {
        let set: BTreeSet<Vec<usize>> = (0..self.len()).map(|c| self.ball(c, r)).collect();
        set.into_iter().collect()
    }

    /// Exhaustively checks, for every radius occurring in the matrix: every
    /// member of a ball is a centre of it; same-radius balls that meet
    /// coincide; same-radius balls partition the points; distances between
    /// disjoint balls do not depend on the chosen members.
    pub fn check_ball_properties(&self) -> std::result::Result<(), BallViolation> {
        let n = self.len();
        let mut distinct: BTreeSet<Vec<usize>> = BTreeSet::new();
        for r in self.radii() {
            let of_centre: Vec<Vec<usize>> = (0..n).map(|c| self.ball(c, r)).collect();
            for (c, b) in of_centre.iter().enumerate() {
                if let Some(&y) = b.iter().find(|&&y| of_centre[y] != *b) {
                    return Err(BallViolation::NotCentred { center: c, member: y, radius: r });
                }
            }
            let balls: BTreeSet<&Vec<usize>> = of_centre.iter().collect();
            let mut owner = vec![usize::MAX; n];
            for (k, ball) in balls.iter().enumerate() {
                for &x in ball.iter() {
                    if owner[x] != usize::MAX {
                        return Err(BallViolation::Overlap { radius: r });
                    }
                    owner[x] = k;
                }
            }
            if owner.contains(&usize::MAX) {
                return Err(BallViolation::NotPartition { radius: r });
            }
            distinct.extend(balls.into_iter().cloned());
        }
        let distinct: Vec<Vec<usize>> = distinct.into_iter().collect();
        for (i, a) in distinct.iter().enumerate() {
            for b in &distinct[i + 1..] {
                if a.iter().any(|x| b.binary_search(x).is_ok()) {
                    continue;
                }
                let first = self.matrix[[a[0], b[0]]];
                for &x in a {
                    for &y in b {
                        if !close(self.matrix[[x, y]], first, self.tol) {
                            return Err(BallViolation::InterBallDistance { x, y });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BallViolation {
    NotCentred { center: usize, member: usize, radius: f64 },
    Overlap { radius: f64 },
    NotPartition { radius: f64 },
    InterBallDistance { x: usize, y: usize },
}

/// `-ln d`; identical points have infinite proximity.
pub fn proximity(distance: f64) -> f64 {
    -distance.ln()
}

/// `exp(-p)`.
pub fn distance_from_proximity(proximity: f64) -> f64 {
    (-proximity).exp()
}

pub fn proximity_matrix(m: &Array2<f64>) -> Array2<f64> {
    m.mapv(proximity)
}

/// Symmetric, infinite exactly on the diagonal, and
/// `p(x,z) >= min(p(x,y), p(y,z))`.
pub fn is_ultrametric_proximity(p: &Array2<f64>, tol: f64) -> bool {
    let n = p.nrows();
    let ge = |a: f64, b: f64| a >= b || close(a, b, tol);
    for x in 0..n {
        for y in 0..n {
            if p[[x, y]] != p[[y, x]] || (p[[x, y]] == f64::INFINITY) != (x == y) {
                return false;
            }
            for z in 0..n {
                if !ge(p[[x, z]], p[[x, y]].min(p[[y, z]])) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::eight_terminal_example;
    use crate::hcluster::pairwise_euclidean;
    use ndarray::array;

    #[test]
    fn eight_terminal_ranks() {
        let d = eight_terminal_example();
        let m = cophenetic(&d, Height::Ranks).unwrap();
        assert_eq!(m[[0, 1]], 1.0);
        assert_eq!(m[[0, 3]], 5.0);
        assert_eq!(m[[6, 0]], 7.0);
        assert_eq!(m[[4, 4]], 0.0);
        assert!(is_ultrametric(&m, 0.0).unwrap().holds());
        let census = triangle_classify(&m, 0.0).unwrap();
        assert_eq!(census.violating, 0);
        assert_eq!(census.total(), 56);
        assert!(matches!(cophenetic(&d, Height::Levels), Err(Error::MissingLevels)));
    }

    #[test]
    fn collinear_points_violate() {
        let m = pairwise_euclidean(array![[0.0], [3.0], [4.0]].view()).unwrap().into_matrix();
        let v = is_ultrametric(&m, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v, Verdict::Violated(Witness { x: 0, y: 1, z: 2 }));
        assert!(UltrametricMatrix::validate(m, 0.0).is_err());
    }

    #[test]
    fn trivial_matrices() {
        assert!(is_ultrametric(&array![[0.0]], 0.0).unwrap().holds());
        let eq = array![[0.0, 2.0, 2.0], [2.0, 0.0, 2.0], [2.0, 2.0, 0.0]];
        let c = triangle_classify(&eq, 0.0).unwrap();
        assert_eq!(c, TriangleCensus { equilateral: 1, isosceles_small_base: 0, violating: 0 });
        assert!(matches!(is_ultrametric(&array![[0.0, 1.0], [2.0, 0.0]], 0.0), Err(Error::NotSymmetric { .. })));
        let (_, ok) = canonical_form(&array![[0.0, 5.0], [5.0, 0.0]], &[1, 0], 0.0).unwrap();
        assert!(ok);
    }

    #[test]
    fn canonical_form_in_leaf_order() {
        let d = eight_terminal_example();
        let m = cophenetic(&d, Height::Ranks).unwrap();
        let (p, ok) = canonical_form(&m, &d.leaf_order(), 0.0).unwrap();
        assert!(ok);
        assert_eq!(p, m);
        assert!(matches!(canonical_form(&m, &[0, 1, 2], 0.0), Err(Error::NotPermutation(8))));
        assert!(matches!(canonical_form(&m, &[0, 0, 1, 2, 3, 4, 5, 6], 0.0), Err(Error::NotPermutation(8))));
    }

    #[test]
    fn shuffled_order_breaks_canonical_form() {
        // ((a,b),(c,d)) at ranks 1, 2, 3
        let m = array![
            [0.0, 1.0, 3.0, 3.0],
            [1.0, 0.0, 3.0, 3.0],
            [3.0, 3.0, 0.0, 2.0],
            [3.0, 3.0, 2.0, 0.0]
        ];
        assert!(canonical_form(&m, &[0, 1, 2, 3], 0.0).unwrap().1);
        // a, c, b, d: row a reads 3, 1, 3, not monotone
        assert!(!canonical_form(&m, &[0, 2, 1, 3], 0.0).unwrap().1);
    }

    #[test]
    fn balls() {
        let d = eight_terminal_example();
        let u = UltrametricMatrix::from_dendrogram(&d, Height::Ranks).unwrap();
        assert_eq!(u.ball(0, 2.0), vec![0, 1, 2]);
        assert_eq!(u.ball(5, 0.0), vec![5]);
        assert_eq!(u.ball(5, 7.0), (0..8).collect::<Vec<_>>());
        assert_eq!(u.balls(4.0), vec![vec![0, 1, 2], vec![3, 4, 5], vec![6], vec![7]]);
        assert_eq!(u.balls(1.0), vec![vec![0, 1], vec![2], vec![3], vec![4], vec![5], vec![6], vec![7]]);
        assert_eq!(u.check_ball_properties(), Ok(()));
    }

    #[test]
    fn proximity_axioms() {
        let m = cophenetic(&eight_terminal_example(), Height::Ranks).unwrap();
        let p = proximity_matrix(&m);
        assert!(is_ultrametric_proximity(&p, 1e-12));
        let back = p.mapv(distance_from_proximity);
        assert!(back.iter().zip(&m).all(|(a, b)| (a - b).abs() < 1e-12));
        let e = pairwise_euclidean(array![[0.0], [3.0], [4.0]].view()).unwrap().into_matrix();
        assert!(!is_ultrametric_proximity(&proximity_matrix(&e), 1e-12));
    }
}
