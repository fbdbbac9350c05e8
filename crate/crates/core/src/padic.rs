//! p-adic encoding of dendrograms.
//!
//! Terminal `i` is encoded by its root path as `x_i = Σ_j c_ij p^j` with
//! `c_ij = +1` when `i` sits under the first child of the node of rank `j`,
//! `-1` under the second child and `0` when that node is not on its path.
//! The coefficient vectors of all terminals form the branch matrix `C`.
//!
//! Codes combine with the coefficientwise "average and threshold" rule `⊕`
//! (unanimous coefficients survive, everything else becomes 0), which maps
//! the members of a cluster to the cluster's own code and the full terminal
//! set to the null code. Norms and distances are exact powers of `p` and are
//! returned as [`PValue`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use ndarray::Array2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::tree::{Dendrogram, NodeRef};

/// Base used when none is given. Decimal codes are only guaranteed unique
/// for `p >= 3`.
pub const DEFAULT_BASE: u64 = 3;

fn check_base(p: u64, min: u64) -> Result<()> {
    if p < min {
        Err(Error::InvalidBase { got: p, min })
    } else {
        Ok(())
    }
}

/// Coefficients `c_1..c_{n-1}` in `{-1, 0, +1}` over powers of a base `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PAdicCode {
    coeffs: Vec<i8>,
    base: u64,
}

impl PAdicCode {
    pub fn new(coeffs: Vec<i8>, base: u64) -> Result<Self> {
        check_base(base, 2)?;
        if let Some((idx, &c)) = coeffs.iter().enumerate().find(|(_, c)| !(-1..=1).contains(*c)) {
            return Err(Error::InvalidCoefficient {
                level: idx + 1,
                value: c.into(),
            });
        }
        Ok(PAdicCode { coeffs, base })
    }

    /// The null element: all coefficients zero.
    pub fn null(len: usize, base: u64) -> Self {
        PAdicCode {
            coeffs: vec![0; len],
            base,
        }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    /// Number of levels, `n - 1`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_null(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Coefficient of `p^level`, `level` in `1..=n-1`.
    pub fn coeff(&self, level: usize) -> i8 {
        self.coeffs[level - 1]
    }

    pub fn coeffs(&self) -> &[i8] {
        &self.coeffs
    }

    fn same_context(&self, other: &PAdicCode) -> Result<()> {
        if self.base != other.base {
            return Err(Error::ContextMismatch(format!("bases {} and {}", self.base, other.base)));
        }
        if self.len() != other.len() {
            return Err(Error::ContextMismatch(format!("{} and {} levels", self.len(), other.len())));
        }
        Ok(())
    }

    /// The `⊕` composition.
    pub fn oplus(&self, other: &PAdicCode) -> Result<PAdicCode> {
        self.same_context(other)?;
        Ok(PAdicCode {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| if a == b { a } else { 0 })
                .collect(),
            base: self.base,
        })
    }

    /// `Σ c_j p^j` as an exact integer.
    pub fn decimal_value(&self) -> BigInt {
        let p = BigInt::from(self.base);
        let mut power = p.clone();
        let mut acc = BigInt::zero();
        for &c in &self.coeffs {
            acc += &power * c;
            power *= &p;
        }
        acc
    }

    /// Inverse of [`Self::decimal_value`] for `p >= 3`, where the signed digit
    /// expansion is unique.
    pub fn from_decimal(value: &BigInt, base: u64, len: usize) -> Result<PAdicCode> {
        check_base(base, 3)?;
        let p = BigInt::from(base);
        let bad = |reason: &str| Error::CodeSyntax {
            input: value.to_string(),
            reason: reason.to_string(),
        };
        let mut rest = value.clone();
        if !(&rest % &p).is_zero() {
            return Err(bad("value is not a multiple of p"));
        }
        rest /= &p;
        let mut coeffs = Vec::with_capacity(len);
        for _ in 0..len {
            let mut digit = &rest % &p;
            if digit > BigInt::one() {
                digit -= &p;
            } else if digit < -BigInt::one() {
                digit += &p;
            }
            let c: i8 = if digit.is_zero() {
                0
            } else if digit.is_positive() {
                1
            } else {
                -1
            };
            if BigInt::from(c) != digit {
                return Err(bad("digit outside {-1, 0, +1}"));
            }
            coeffs.push(c);
            rest = (rest - digit) / &p;
        }
        if !rest.is_zero() {
            return Err(bad("value needs more levels than the tree has"));
        }
        PAdicCode::new(coeffs, base)
    }

    /// Signed-power expression with the base left symbolic: `+p^1-p^3`.
    pub fn to_symbolic(&self) -> String {
        self.render("p")
    }

    /// Signed-power expression with the numeric base: `+2^1+2^4`.
    pub fn to_base_string(&self) -> String {
        self.render(&self.base.to_string())
    }

    fn render(&self, base: &str) -> String {
        if self.is_null() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, &c) in self.coeffs.iter().enumerate() {
            match c {
                1 => out.push('+'),
                -1 => out.push('-'),
                _ => continue,
            }
            out.push_str(base);
            out.push('^');
            out.push_str(&(idx + 1).to_string());
        }
        out
    }

    /// Parses either form produced by [`Self::to_symbolic`] and
    /// [`Self::to_base_string`], or a plain decimal integer.
    pub fn parse(input: &str, base: u64, len: usize) -> Result<PAdicCode> {
        check_base(base, 2)?;
        let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |reason: String| Error::CodeSyntax {
            input: input.to_string(),
            reason,
        };
        if s == "0" {
            return Ok(PAdicCode::null(len, base));
        }
        if !s.contains('^') {
            let v: BigInt = s.parse().map_err(|_| bad("not a signed-power expression or integer".into()))?;
            return PAdicCode::from_decimal(&v, base, len);
        }
        let mut coeffs = vec![0i8; len];
        let mut rest = s.as_str();
        while !rest.is_empty() {
            let sign: i8 = match rest.as_bytes()[0] {
                b'+' => 1,
                b'-' => -1,
                _ => return Err(bad(format!("expected '+' or '-' before {rest:?}"))),
            };
            rest = &rest[1..];
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let term = &rest[..end];
            rest = &rest[end..];
            let (b, e) = term.split_once('^').ok_or_else(|| bad(format!("term {term:?} has no exponent")))?;
            if b != "p" && b.parse::<u64>().ok() != Some(base) {
                return Err(bad(format!("term base {b:?} is neither p nor {base}")));
            }
            let level: usize = e.parse().map_err(|_| bad(format!("bad exponent {e:?}")))?;
            if level == 0 || level > len {
                return Err(bad(format!("exponent {level} outside 1..={len}")));
            }
            if coeffs[level - 1] != 0 {
                return Err(bad(format!("exponent {level} repeated")));
            }
            coeffs[level - 1] = sign;
        }
        PAdicCode::new(coeffs, base)
    }
}

impl fmt::Display for PAdicCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_symbolic())
    }
}

/// The `⊕` composition of two codes.
pub fn padd(a: &PAdicCode, b: &PAdicCode) -> Result<PAdicCode> {
    a.oplus(b)
}

/// Exact power of `p` (or zero): the value of p-adic norms and distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PValue {
    Zero,
    /// `p^exponent`.
    Power(i64),
}

impl PValue {
    pub const ONE: PValue = PValue::Power(0);

    pub fn to_ratio(self, base: u64) -> BigRational {
        match self {
            PValue::Zero => BigRational::zero(),
            PValue::Power(e) => {
                let p = BigInt::from(base).pow(e.unsigned_abs() as u32);
                if e >= 0 {
                    BigRational::from_integer(p)
                } else {
                    BigRational::new(BigInt::one(), p)
                }
            }
        }
    }

    pub fn to_f64(self, base: u64) -> f64 {
        match self {
            PValue::Zero => 0.0,
            PValue::Power(e) => (base as f64).powi(e as i32),
        }
    }

    /// Like `Display` but with the numeric base: `3^-2`.
    pub fn with_base(self, base: u64) -> String {
        match self {
            PValue::Zero => "0".into(),
            PValue::Power(0) => "1".into(),
            PValue::Power(e) => format!("{base}^{e}"),
        }
    }
}

impl std::ops::Mul for PValue {
    type Output = PValue;

    // p^a * p^b = p^(a+b)
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: PValue) -> PValue {
        match (self, rhs) {
            (PValue::Power(a), PValue::Power(b)) => PValue::Power(a + b),
            _ => PValue::Zero,
        }
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PValue::Zero => f.write_str("0"),
            PValue::Power(0) => f.write_str("1"),
            PValue::Power(1) => f.write_str("p"),
            PValue::Power(e) => write!(f, "p^{e}"),
        }
    }
}

/// Branch-code matrix `C`, `n x (n-1)`, row `i` holding terminal `i`'s code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchMatrix(Array2<i8>);

impl BranchMatrix {
    pub fn from_dendrogram(d: &Dendrogram) -> Self {
        let n = d.n_terminals();
        let mut c = Array2::<i8>::zeros((n, d.n_clusters()));
        let sets = d.cluster_sets();
        for (rank, children) in d.merges() {
            for (child, sign) in children.into_iter().zip([1i8, -1]) {
                match child {
                    NodeRef::Terminal(i) => c[[i, rank - 1]] = sign,
                    NodeRef::Cluster(r) => {
                        for &i in &sets[r - 1] {
                            c[[i, rank - 1]] = sign;
                        }
                    }
                }
            }
        }
        BranchMatrix(c)
    }

    /// Wraps a raw matrix after checking shape and alphabet.
    pub fn from_matrix(c: Array2<i8>) -> Result<Self> {
        let (n, cols) = c.dim();
        if n == 0 || cols + 1 != n {
            return Err(Error::Shape {
                what: "branch matrix columns",
                expected: n.saturating_sub(1),
                got: cols,
            });
        }
        if let Some(((_, j), &v)) = c.indexed_iter().find(|(_, v)| !(-1..=1).contains(*v)) {
            return Err(Error::InvalidCoefficient {
                level: j + 1,
                value: v.into(),
            });
        }
        Ok(BranchMatrix(c))
    }

    pub fn from_codes(codes: &[PAdicCode]) -> Result<Self> {
        let n = codes.len();
        let mut c = Array2::<i8>::zeros((n, n.saturating_sub(1)));
        for (i, code) in codes.iter().enumerate() {
            if code.len() + 1 != n {
                return Err(Error::Shape {
                    what: "code levels",
                    expected: n.saturating_sub(1),
                    got: code.len(),
                });
            }
            for (j, &v) in code.coeffs().iter().enumerate() {
                c[[i, j]] = v;
            }
        }
        BranchMatrix::from_matrix(c)
    }

    pub fn matrix(&self) -> &Array2<i8> {
        &self.0
    }

    pub fn n_terminals(&self) -> usize {
        self.0.nrows()
    }

    pub fn code(&self, terminal: usize, base: u64) -> Result<PAdicCode> {
        PAdicCode::new(self.0.row(terminal).to_vec(), base)
    }

    /// `x = C p`: decimal codes of all terminals.
    pub fn decimal_values(&self, base: u64) -> Result<Vec<BigInt>> {
        (0..self.n_terminals())
            .map(|i| self.code(i, base).map(|c| c.decimal_value()))
            .collect()
    }

    /// Rebuilds the dendrogram. Column `j` must split into a `+1` part and a
    /// `-1` part, each either a single terminal or exactly the support of an
    /// earlier column. Child order follows the signs.
    pub fn decode(&self, labels: Option<Vec<String>>) -> Result<Dendrogram> {
        let n = self.n_terminals();
        let labels = labels.unwrap_or_else(|| Dendrogram::default_labels(n));
        let mut support: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        for rank in 1..n {
            let col = self.0.column(rank - 1);
            let part = |sign: i8| -> Vec<usize> { (0..n).filter(|&i| col[i] == sign).collect() };
            let mut pair = [NodeRef::Terminal(0); 2];
            for (slot, sign) in pair.iter_mut().zip([1i8, -1]) {
                let members = part(sign);
                *slot = match members.len() {
                    0 => {
                        return Err(Error::NotLaminar {
                            rank,
                            reason: format!("no terminal carries {sign:+}"),
                        })
                    }
                    1 => NodeRef::Terminal(members[0]),
                    _ => match support.get(&members) {
                        Some(&r) => NodeRef::Cluster(r),
                        None => {
                            return Err(Error::NotLaminar {
                                rank,
                                reason: format!("{sign:+} branch {members:?} is not an earlier cluster"),
                            })
                        }
                    },
                };
            }
            let mut all: Vec<usize> = (0..n).filter(|&i| col[i] != 0).collect();
            all.sort_unstable();
            support.insert(all, rank);
            merges.push((pair[0], pair[1]));
        }
        Dendrogram::build_from_merges(labels, &merges, None).map_err(|e| match e {
            Error::InvalidMerge { rank, reason } => Error::NotLaminar { rank, reason },
            other => other,
        })
    }
}

/// Codes of all terminals plus the branch matrix.
pub fn encode(d: &Dendrogram, base: u64) -> Result<(Vec<PAdicCode>, BranchMatrix)> {
    check_base(base, 2)?;
    let c = BranchMatrix::from_dendrogram(d);
    let codes = (0..d.n_terminals())
        .map(|i| c.code(i, base))
        .collect::<Result<Vec<_>>>()?;
    Ok((codes, c))
}

pub fn decode(c: &BranchMatrix, labels: Option<Vec<String>>) -> Result<Dendrogram> {
    c.decode(labels)
}

pub fn decode_codes(codes: &[PAdicCode], labels: Option<Vec<String>>) -> Result<Dendrogram> {
    BranchMatrix::from_codes(codes)?.decode(labels)
}

pub fn decimal_value(code: &PAdicCode) -> BigInt {
    code.decimal_value()
}

/// Code of any node read from its root path: the branch signs at every
/// strict ancestor. For a terminal this is its encoding.
pub fn cluster_code(d: &Dendrogram, node: NodeRef, base: u64) -> Result<PAdicCode> {
    check_base(base, 2)?;
    if !d.contains(node) {
        return Err(Error::UnknownNode(node));
    }
    let mut coeffs = vec![0i8; d.n_clusters()];
    let mut below = node;
    for rank in d.ancestors(node) {
        coeffs[rank - 1] = if d.children(rank)[0] == below { 1 } else { -1 };
        below = NodeRef::Cluster(rank);
    }
    PAdicCode::new(coeffs, base)
}

/// Code of a node as the `⊕` of its members' codes.
pub fn cluster_code_by_sum(d: &Dendrogram, node: NodeRef, base: u64) -> Result<PAdicCode> {
    let members = d.term_set(node)?;
    let mut acc = cluster_code(d, NodeRef::Terminal(members[0]), base)?;
    for &i in &members[1..] {
        acc = acc.oplus(&cluster_code(d, NodeRef::Terminal(i), base)?)?;
    }
    Ok(acc)
}

/// Integer-coefficient Laurent polynomial in `p`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntPoly(BTreeMap<i64, i64>);

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly::default()
    }

    pub fn monomial(exponent: i64, coeff: i64) -> Self {
        let mut m = BTreeMap::new();
        if coeff != 0 {
            m.insert(exponent, coeff);
        }
        IntPoly(m)
    }

    pub fn constant(c: i64) -> Self {
        Self::monomial(0, c)
    }

    pub fn from_terms(terms: &[(i64, i64)]) -> Self {
        let mut out = IntPoly::zero();
        for &(e, c) in terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn from_code(code: &PAdicCode) -> Self {
        let terms: Vec<(i64, i64)> = code
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, &c)| (j as i64 + 1, c.into()))
            .collect();
        Self::from_terms(&terms)
    }

    fn add_term(&mut self, exponent: i64, coeff: i64) {
        let entry = self.0.entry(exponent).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.0.remove(&exponent);
        }
    }

    pub fn coeff(&self, exponent: i64) -> i64 {
        self.0.get(&exponent).copied().unwrap_or(0)
    }

    /// Nonzero terms as `(exponent, coefficient)`, ascending.
    pub fn terms(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.0.iter().map(|(&e, &c)| (e, c))
    }

    /// Keeps levels `1..=len` and converts back to a code; fails when a
    /// surviving coefficient leaves `{-1, 0, +1}`.
    pub fn to_code(&self, base: u64, len: usize) -> Result<PAdicCode> {
        let mut coeffs = vec![0i8; len];
        for (e, c) in self.terms() {
            if e >= 1 && e as usize <= len {
                if !(-1..=1).contains(&c) {
                    return Err(Error::InvalidCoefficient { level: e as usize, value: c });
                }
                coeffs[e as usize - 1] = c as i8;
            }
        }
        PAdicCode::new(coeffs, base)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (e, c) in self.terms() {
            let sign = if c < 0 { '-' } else { '+' };
            match c.abs() {
                1 => write!(f, "{sign}p^{e}")?,
                a => write!(f, "{sign}{a}p^{e}")?,
            }
        }
        Ok(())
    }
}

/// Product of two Laurent polynomials, keeping only terms up to `p^{n-1}`.
pub fn pmultiply(a: &IntPoly, b: &IntPoly, n: usize) -> IntPoly {
    let top = n as i64 - 1;
    let mut out = IntPoly::zero();
    for (ea, ca) in a.terms() {
        for (eb, cb) in b.terms() {
            if ea + eb <= top {
                out.add_term(ea + eb, ca * cb);
            }
        }
    }
    out
}

/// The operator `A`: product with `1/p`. Every level drops by one and the
/// lowest level is lost.
pub fn dilate(code: &PAdicCode) -> PAdicCode {
    let n = code.len() + 1;
    pmultiply(&IntPoly::from_code(code), &IntPoly::monomial(-1, 1), n)
        .to_code(code.base(), code.len())
        .expect("a shifted code stays in the alphabet")
}

/// Norm of the dilation operator, `|1/p| = p`.
pub fn dilation_operator_norm() -> PValue {
    PValue::Power(1)
}

/// For each terminal of `d`, its index in [`dilate_tree`]`(d)`.
pub fn dilation_terminal_map(d: &Dendrogram) -> Result<Vec<usize>> {
    if d.n_terminals() < 2 {
        return Err(Error::Degenerate);
    }
    let (lo, hi) = fused_pair(d);
    Ok((0..d.n_terminals())
        .map(|t| match t.cmp(&hi) {
            std::cmp::Ordering::Less => t,
            std::cmp::Ordering::Equal => lo,
            std::cmp::Ordering::Greater => t - 1,
        })
        .collect())
}

fn fused_pair(d: &Dendrogram) -> (usize, usize) {
    match d.children(1) {
        [NodeRef::Terminal(a), NodeRef::Terminal(b)] => (a.min(b), a.max(b)),
        _ => unreachable!("rank 1 always merges two terminals"),
    }
}

/// Lifts the tree one level: the two terminals merged at rank 1 fuse into a
/// single terminal and every other rank decreases by one.
pub fn dilate_tree(d: &Dendrogram) -> Result<Dendrogram> {
    let map = dilation_terminal_map(d)?;
    let (lo, _) = fused_pair(d);
    let [a, b] = d.children(1);
    let label_of = |node: NodeRef| match node {
        NodeRef::Terminal(i) => d.labels()[i].clone(),
        NodeRef::Cluster(_) => unreachable!(),
    };
    let mut labels: Vec<String> = Vec::with_capacity(d.n_terminals() - 1);
    for (t, label) in d.labels().iter().enumerate() {
        if map[t] == labels.len() {
            labels.push(if t == lo { format!("{}+{}", label_of(a), label_of(b)) } else { label.clone() });
        }
    }
    let relabel = |node: NodeRef| match node {
        NodeRef::Terminal(t) => NodeRef::Terminal(map[t]),
        NodeRef::Cluster(1) => NodeRef::Terminal(lo),
        NodeRef::Cluster(r) => NodeRef::Cluster(r - 1),
    };
    let merges: Vec<_> = d
        .merges()
        .skip(1)
        .map(|(_, [x, y])| (relabel(x), relabel(y)))
        .collect();
    let levels = d.levels().map(|lv| lv[1..].to_vec());
    Dendrogram::from_agglomeration(labels, &merges, levels)
}

/// p-adic norm of a node: 1 for terminals, `p^-rank` for clusters, 0 for
/// the full set (whose code is the null element).
pub fn pnorm(d: &Dendrogram, node: NodeRef) -> Result<PValue> {
    if !d.contains(node) {
        return Err(Error::UnknownNode(node));
    }
    Ok(match node {
        NodeRef::Terminal(_) => PValue::ONE,
        NodeRef::Cluster(r) if r == d.n_clusters() => PValue::Zero,
        NodeRef::Cluster(r) => PValue::Power(-(r as i64)),
    })
}

/// p-adic distance `p^-r`, `r` the lowest level where both codes are
/// nonzero. Identical codes are at distance 0; a nonzero code and the null
/// code meet at the root level `n - 1`.
pub fn pdistance(a: &PAdicCode, b: &PAdicCode) -> Result<PValue> {
    a.same_context(b)?;
    if a == b {
        return Ok(PValue::Zero);
    }
    let level = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .position(|(&x, &y)| x != 0 && y != 0)
        .map_or(a.len(), |idx| idx + 1);
    Ok(PValue::Power(-(level as i64)))
}

/// Distance between two nodes of `d` via their codes.
pub fn pdistance_nodes(d: &Dendrogram, a: NodeRef, b: NodeRef, base: u64) -> Result<PValue> {
    pdistance(&cluster_code(d, a, base)?, &cluster_code(d, b, base)?)
}
