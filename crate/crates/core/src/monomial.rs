//! Exponent tuples, the componentwise partial order on them, and index sets.
//!
//! A [`Monomial`] `x1^i1 ... xp^ip` is stored as its exponent tuple. Two
//! monomials are compared by componentwise dominance, which is only a partial
//! order; the total order used for iteration (`Ord`) is graded with ties
//! broken so that `x1` comes before `x2`, e.g. `1, x1, x2, x1^2, x1 x2, x2^2`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Largest exponent allowed on a single variable.
pub const MAX_VAR_DEGREE: u32 = 16;
/// Largest total degree allowed on a monomial.
pub const MAX_TOTAL_DEGREE: u32 = 32;
/// Largest number of monomials an [`IndexSet`] may hold.
pub const SIZE_CAP: usize = 100_000;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Monomial(Vec<u32>);

/// Result of comparing two monomials under componentwise dominance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartialOrdering {
    Less,
    Equal,
    Greater,
    Incomparable,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::ZeroArity);
        }
        let m = Monomial(exponents);
        if m.0.iter().any(|&e| e > MAX_VAR_DEGREE) || m.total_degree() > MAX_TOTAL_DEGREE {
            return Err(Error::DegreeCap(m));
        }
        Ok(m)
    }

    /// The constant monomial `1` of the given arity.
    pub fn one(arity: usize) -> Result<Self> {
        Monomial::new(vec![0; arity])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// True when `self >= other` componentwise.
    pub fn dominates(&self, other: &Monomial) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// Value of the monomial at `x`, with `0^0 = 1`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }

    /// Monomials obtained by lowering one exponent by one.
    pub fn immediate_divisors(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.0.iter().enumerate().filter(|(_, &e)| e > 0).map(move |(l, _)| {
            let mut exps = self.0.clone();
            exps[l] -= 1;
            Monomial(exps)
        })
    }

    /// Every `k` with `k <= self` componentwise, including `self`.
    pub fn divisors(&self) -> Vec<Monomial> {
        let mut out = vec![Vec::with_capacity(self.0.len())];
        for &e in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..=e).map(move |k| {
                        let mut next = prefix.clone();
                        next.push(k);
                        next
                    })
                })
                .collect();
        }
        out.into_iter().map(Monomial).collect()
    }
}

impl TryFrom<Vec<u32>> for Monomial {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        Monomial::new(v)
    }
}

impl From<Monomial> for Vec<u32> {
    fn from(m: Monomial) -> Self {
        m.0
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Position of `m2` relative to `m1`: `Less` means `m2` is strictly greater.
///
/// The naming follows "compare(m1, m2)" read as "m1 versus m2", so
/// `compare((1,2), (2,2)) == Less`.
pub fn compare(m1: &Monomial, m2: &Monomial) -> Result<PartialOrdering> {
    check_dim(m1.arity(), m2.arity())?;
    let ge = m1.dominates(m2);
    let le = m2.dominates(m1);
    Ok(match (ge, le) {
        (true, true) => PartialOrdering::Equal,
        (true, false) => PartialOrdering::Greater,
        (false, true) => PartialOrdering::Less,
        (false, false) => PartialOrdering::Incomparable,
    })
}

/// A finite set of monomials of one arity, iterated in canonical order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    arity: usize,
    members: BTreeSet<Monomial>,
}

impl IndexSet {
    pub fn new(arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::ZeroArity);
        }
        Ok(IndexSet {
            arity,
            members: BTreeSet::new(),
        })
    }

    /// Builds a set from monomials; duplicates collapse.
    pub fn from_monomials(arity: usize, monomials: impl IntoIterator<Item = Monomial>) -> Result<Self> {
        let mut set = IndexSet::new(arity)?;
        for m in monomials {
            set.insert(m)?;
        }
        Ok(set)
    }

    /// Convenience constructor from raw exponent rows.
    pub fn from_exponents<I, V>(arity: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = V>,
        V: Into<Vec<u32>>,
    {
        let ms = rows
            .into_iter()
            .map(|r| Monomial::new(r.into()))
            .collect::<Result<Vec<_>>>()?;
        IndexSet::from_monomials(arity, ms)
    }

    pub fn insert(&mut self, m: Monomial) -> Result<bool> {
        check_dim(self.arity, m.arity())?;
        let added = self.members.insert(m);
        if self.members.len() > SIZE_CAP {
            return Err(Error::Capacity {
                size: self.members.len(),
                limit: SIZE_CAP,
            });
        }
        Ok(added)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        self.members.contains(m)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Monomial> + '_ {
        self.members.iter()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.arity == other.arity && self.members.is_subset(&other.members)
    }

    /// Members of `self` not in `other`, in canonical order.
    pub fn difference(&self, other: &IndexSet) -> Vec<Monomial> {
        self.members.difference(&other.members).cloned().collect()
    }

    /// Position of `m` in canonical order.
    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.members.iter().position(|x| x == m)
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.members.is_empty() {
            Err(Error::EmptyIndexSet)
        } else {
            Ok(())
        }
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a Monomial;
    type IntoIter = std::collections::btree_set::Iter<'a, Monomial>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

impl Serialize for IndexSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.members.iter())
    }
}

/// Maximal elements of `set`: nothing else in `set` dominates them.
pub fn greatest_monomials(set: &IndexSet) -> Result<IndexSet> {
    set.require_nonempty()?;
    // Only strictly higher total degree can dominate a distinct monomial, and
    // canonical order is graded, so scan the tail.
    let members: Vec<&Monomial> = set.iter().collect();
    let mut out = IndexSet::new(set.arity())?;
    for (i, m) in members.iter().enumerate() {
        let dominated = members[i + 1..]
            .iter()
            .any(|other| other.total_degree() > m.total_degree() && other.dominates(m));
        if !dominated {
            out.insert((*m).clone())?;
        }
    }
    Ok(out)
}

/// True when every componentwise divisor of every member is also a member.
pub fn is_downward_closed(set: &IndexSet) -> Result<bool> {
    set.require_nonempty()?;
    Ok(set
        .iter()
        .all(|m| m.immediate_divisors().all(|d| set.contains(&d))))
}

/// Smallest downward-closed superset of `set`.
pub fn downward_closure(set: &IndexSet) -> Result<IndexSet> {
    set.require_nonempty()?;
    let mut out = set.clone();
    let mut queue: VecDeque<Monomial> = set.iter().cloned().collect();
    while let Some(m) = queue.pop_front() {
        for d in m.immediate_divisors() {
            if !out.contains(&d) {
                out.insert(d.clone())?;
                queue.push_back(d);
            }
        }
    }
    Ok(out)
}

/// Members of maximal total degree.
pub fn highest_total_degree_monomials(set: &IndexSet) -> Result<IndexSet> {
    set.require_nonempty()?;
    let top = set.iter().map(Monomial::total_degree).max().unwrap_or(0);
    IndexSet::from_monomials(
        set.arity(),
        set.iter().filter(|m| m.total_degree() == top).cloned(),
    )
}

/// Divisors of members that are missing from `set`, in canonical order.
pub fn missing_divisors(set: &IndexSet) -> Result<Vec<Monomial>> {
    Ok(downward_closure(set)?.difference(set))
}

/// All monomials of arity `p` with total degree at most `degree`.
pub fn total_degree_set(arity: usize, degree: u32) -> Result<IndexSet> {
    if degree > MAX_TOTAL_DEGREE {
        return Err(Error::invalid(format!("total degree {degree} above {MAX_TOTAL_DEGREE}")));
    }
    let top = Monomial(vec![degree.min(MAX_VAR_DEGREE); arity.max(1)]);
    IndexSet::from_monomials(
        arity,
        top.divisors().into_iter().filter(|m| m.total_degree() <= degree),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[u32]) -> Monomial {
        Monomial::new(v.to_vec()).unwrap()
    }

    fn set(arity: usize, rows: &[&[u32]]) -> IndexSet {
        IndexSet::from_exponents(arity, rows.iter().map(|r| r.to_vec())).unwrap()
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare(&m(&[1, 2]), &m(&[2, 2])).unwrap(), PartialOrdering::Less);
        assert_eq!(compare(&m(&[2, 0]), &m(&[0, 2])).unwrap(), PartialOrdering::Incomparable);
        assert_eq!(compare(&m(&[1, 1]), &m(&[1, 1])).unwrap(), PartialOrdering::Equal);
        assert_eq!(compare(&m(&[2, 2]), &m(&[1, 2])).unwrap(), PartialOrdering::Greater);
    }

    #[test]
    fn compare_rejects_arity_mismatch() {
        assert!(matches!(
            compare(&m(&[1]), &m(&[1, 0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn degree_caps() {
        assert!(Monomial::new(vec![16, 16]).is_ok());
        assert!(matches!(Monomial::new(vec![17]), Err(Error::DegreeCap(_))));
        assert!(matches!(Monomial::new(vec![16, 16, 1]), Err(Error::DegreeCap(_))));
        assert!(matches!(Monomial::new(vec![]), Err(Error::ZeroArity)));
    }

    #[test]
    fn canonical_order_is_graded() {
        let s = set(2, &[&[1, 1], &[0, 1], &[0, 2], &[1, 0], &[0, 0], &[2, 0]]);
        let order: Vec<_> = s.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(
            order,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn greatest_examples() {
        let full = set(2, &[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(greatest_monomials(&full).unwrap(), set(2, &[&[1, 1]]));
        let anti = set(2, &[&[2, 0], &[1, 1], &[0, 2]]);
        assert_eq!(greatest_monomials(&anti).unwrap(), anti);
        let chain = set(1, &[&[0], &[1], &[2]]);
        assert_eq!(greatest_monomials(&chain).unwrap(), set(1, &[&[2]]));
        assert!(matches!(
            greatest_monomials(&IndexSet::new(1).unwrap()),
            Err(Error::EmptyIndexSet)
        ));
    }

    #[test]
    fn downward_closed_examples() {
        assert!(is_downward_closed(&set(2, &[&[0, 0], &[1, 0], &[0, 1], &[1, 1]])).unwrap());
        assert!(!is_downward_closed(&set(2, &[&[0, 0], &[1, 1]])).unwrap());
        assert!(is_downward_closed(&set(1, &[&[0]])).unwrap());
    }

    #[test]
    fn closure_examples() {
        assert_eq!(
            downward_closure(&set(2, &[&[1, 1]])).unwrap(),
            set(2, &[&[0, 0], &[1, 0], &[0, 1], &[1, 1]])
        );
        assert_eq!(downward_closure(&set(1, &[&[2]])).unwrap(), set(1, &[&[0], &[1], &[2]]));
        let closed = set(2, &[&[0, 0], &[1, 0], &[2, 0]]);
        assert_eq!(downward_closure(&closed).unwrap(), closed);
    }

    #[test]
    fn closure_capacity() {
        // 5^8 divisors blow past the cap.
        let big = IndexSet::from_monomials(8, [m(&[4; 8])]).unwrap();
        assert!(matches!(downward_closure(&big), Err(Error::Capacity { .. })));
    }

    #[test]
    fn highest_degree_examples() {
        assert_eq!(
            highest_total_degree_monomials(&set(2, &[&[0, 0], &[1, 0], &[0, 1], &[2, 0]])).unwrap(),
            set(2, &[&[2, 0]])
        );
        assert_eq!(
            highest_total_degree_monomials(&set(2, &[&[2, 0], &[1, 1], &[0, 2], &[1, 0]])).unwrap(),
            set(2, &[&[2, 0], &[1, 1], &[0, 2]])
        );
        assert_eq!(highest_total_degree_monomials(&set(1, &[&[0]])).unwrap(), set(1, &[&[0]]));
    }

    #[test]
    fn greatest_strictly_larger_than_highest_degree() {
        // x1^2 and x2 are both greatest; only x1^2 has top degree.
        let s = downward_closure(&set(2, &[&[2, 0], &[0, 1]])).unwrap();
        let g = greatest_monomials(&s).unwrap();
        let h = highest_total_degree_monomials(&s).unwrap();
        assert_eq!(g, set(2, &[&[2, 0], &[0, 1]]));
        assert_eq!(h, set(2, &[&[2, 0]]));
        assert!(h.is_subset(&g) && h != g);
    }

    #[test]
    fn total_degree_set_sizes() {
        assert_eq!(total_degree_set(1, 3).unwrap().len(), 4);
        assert_eq!(total_degree_set(2, 3).unwrap().len(), 10);
        assert_eq!(total_degree_set(3, 3).unwrap().len(), 20);
    }

    #[test]
    fn json_shape() {
        let s = set(2, &[&[1, 1], &[0, 0]]);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[[0,0],[1,1]]");
        let back: Monomial = serde_json::from_str("[3,1]").unwrap();
        assert_eq!(back, m(&[3, 1]));
        assert!(serde_json::from_str::<Monomial>("[40]").is_err());
    }
}
