//! Exactly computable subsets of the positive integers.
//!
//! Every set is `((shape ∩ filter) ∪ add) \ remove`, where `shape` is all of
//! the universe, a union of blocks, or a named predicate, and `filter` is a
//! periodic residue set. The finite parts are kept in normal form: `add` is
//! disjoint from the core and `remove` lies inside it.

mod blocks;
mod density;
mod residues;
mod special;

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use thiserror::Error;

pub use blocks::BlockSpec;
pub use density::{density_rate, mu_empirical, mu_empirical_by, mu_exact, Density};
pub use residues::{Residues, MAX_MODULUS};
pub use special::{is_prime, isqrt, primes_upto, SpecialKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("unsupported algebra: no exact {op} for {left} and {right}")]
    UnsupportedAlgebra { op: &'static str, left: String, right: String },
    #[error("modulus {0} exceeds the supported bound {MAX_MODULUS}")]
    ModulusTooLarge(u64),
    #[error("set is finite: {0}")]
    Finite(String),
    #[error("invalid language spec: {0}")]
    InvalidSpec(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

fn unsupported(op: &'static str, a: &NatSet, b: &NatSet) -> LangError {
    LangError::UnsupportedAlgebra { op, left: a.to_string(), right: b.to_string() }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Shape {
    All,
    Blocks(BlockSpec),
    Special(SpecialKind),
}

/// An exactly represented subset of `{1, 2, ...}`, finite or infinite.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct NatSet {
    shape: Shape,
    filter: Arc<Residues>,
    add: Arc<Vec<u64>>,
    remove: Arc<Vec<u64>>,
}

impl NatSet {
    pub fn build(shape: Shape, filter: Residues, add: &[u64], remove: &[u64]) -> Self {
        Self::build_arc(shape, Arc::new(filter), add, remove)
    }

    fn build_arc(shape: Shape, filter: Arc<Residues>, add: &[u64], remove: &[u64]) -> Self {
        let mut remove_sorted: Vec<u64> = remove.iter().copied().filter(|&x| x >= 1).collect();
        remove_sorted.sort_unstable();
        remove_sorted.dedup();
        if let Some(core) = finite_core(&shape, &filter) {
            let mut elems: Vec<u64> = core.into_iter().chain(add.iter().copied()).filter(|&x| x >= 1).collect();
            elems.sort_unstable();
            elems.dedup();
            elems.retain(|x| remove_sorted.binary_search(x).is_err());
            return Self::finite(&elems);
        }
        let probe = Self { shape, filter, add: Arc::new(Vec::new()), remove: Arc::new(Vec::new()) };
        let mut a: Vec<u64> = add
            .iter()
            .copied()
            .filter(|&x| x >= 1 && !probe.core_contains(x) && remove_sorted.binary_search(&x).is_err())
            .collect();
        a.sort_unstable();
        a.dedup();
        remove_sorted.retain(|&x| probe.core_contains(x));
        Self { add: Arc::new(a), remove: Arc::new(remove_sorted), ..probe }
    }

    /// `{x >= 1 : x mod modulus in residues} ∪ add \ remove`.
    pub fn fep(modulus: u64, residues: &[u64], add: &[u64], remove: &[u64]) -> Result<Self, LangError> {
        Ok(Self::build(Shape::All, Residues::new(modulus, residues)?, add, remove))
    }

    pub fn periodic(filter: Residues) -> Self {
        Self::build(Shape::All, filter, &[], &[])
    }

    pub fn finite(elems: &[u64]) -> Self {
        let mut v: Vec<u64> = elems.iter().copied().filter(|&x| x >= 1).collect();
        v.sort_unstable();
        v.dedup();
        Self {
            shape: Shape::All,
            filter: Arc::new(Residues::empty()),
            add: Arc::new(v),
            remove: Arc::new(Vec::new()),
        }
    }

    pub fn empty() -> Self {
        Self::finite(&[])
    }

    pub fn nat() -> Self {
        Self::periodic(Residues::full())
    }

    /// `m·ℕ`.
    pub fn multiples(m: u64) -> Result<Self, LangError> {
        Self::fep(m, &[0], &[], &[])
    }

    pub fn blocks(spec: BlockSpec, filter: Residues) -> Self {
        Self::build(Shape::Blocks(spec), filter, &[], &[])
    }

    pub fn special(kind: SpecialKind, filter: Residues) -> Self {
        Self::build(Shape::Special(kind), filter, &[], &[])
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn filter(&self) -> &Residues {
        &self.filter
    }

    pub fn added(&self) -> &[u64] {
        &self.add
    }

    pub fn removed(&self) -> &[u64] {
        &self.remove
    }

    /// True for finitely modified periodic sets, including finite sets.
    pub fn is_fep(&self) -> bool {
        self.shape == Shape::All
    }

    pub fn is_infinite(&self) -> bool {
        !self.filter.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.filter.is_empty()
    }

    /// The members of a finite set, in increasing order.
    pub fn finite_elements(&self) -> Option<&[u64]> {
        if self.is_finite() {
            Some(&self.add)
        } else {
            None
        }
    }

    /// Largest element touched by the finite modifications (0 if none).
    pub fn modification_bound(&self) -> u64 {
        self.add.last().copied().unwrap_or(0).max(self.remove.last().copied().unwrap_or(0))
    }

    /// Number of finitely modified elements.
    pub fn modification_count(&self) -> usize {
        self.add.len() + self.remove.len()
    }

    fn core_contains(&self, x: u64) -> bool {
        x >= 1
            && self.filter.contains(x)
            && match &self.shape {
                Shape::All => true,
                Shape::Blocks(b) => b.contains(x),
                Shape::Special(k) => k.contains(x),
            }
    }

    fn core_count_le(&self, x: u64) -> u64 {
        match &self.shape {
            Shape::All => self.filter.count_le(x),
            Shape::Blocks(b) => b
                .blocks()
                .iter()
                .take_while(|&&(a, _)| a <= x)
                .map(|&(a, hi)| self.filter.count_range(a, hi.min(x)))
                .sum(),
            Shape::Special(k) => k.count_le_filtered(x, |p| self.filter.contains(p)),
        }
    }

    fn core_next_ge(&self, x: u64) -> Option<u64> {
        let x = x.max(1);
        match &self.shape {
            Shape::All => self.filter.next_ge(x),
            Shape::Blocks(b) => {
                for &(a, hi) in b.blocks() {
                    if hi < x {
                        continue;
                    }
                    if let Some(y) = self.filter.next_ge(a.max(x)) {
                        if y <= hi {
                            return Some(y);
                        }
                    }
                }
                None
            }
            Shape::Special(k) => {
                if self.filter.is_empty() {
                    return None;
                }
                let mut y = x;
                loop {
                    let c = k.next_ge(y)?;
                    if self.filter.contains(c) {
                        return Some(c);
                    }
                    y = c.checked_add(1)?;
                }
            }
        }
    }

    pub fn contains(&self, x: u64) -> bool {
        if x == 0 {
            return false;
        }
        if self.add.binary_search(&x).is_ok() {
            return true;
        }
        self.core_contains(x) && self.remove.binary_search(&x).is_err()
    }

    /// Members in `[1, x]`.
    pub fn count_le(&self, x: u64) -> u64 {
        let added = self.add.partition_point(|&a| a <= x) as u64;
        let removed = self.remove.partition_point(|&a| a <= x) as u64;
        self.core_count_le(x) + added - removed
    }

    /// Smallest member `>= x`.
    pub fn next_ge(&self, x: u64) -> Option<u64> {
        let x = x.max(1);
        let from_add = self.add.get(self.add.partition_point(|&a| a < x)).copied();
        let mut y = x;
        let from_core = loop {
            match self.core_next_ge(y) {
                None => break None,
                Some(c) if self.remove.binary_search(&c).is_ok() => y = c + 1,
                Some(c) => break Some(c),
            }
        };
        match (from_add, from_core) {
            (Some(a), Some(c)) => Some(a.min(c)),
            (a, c) => a.or(c),
        }
    }

    /// The `j`-th smallest member (1-based).
    pub fn nth(&self, j: u64) -> Option<u64> {
        if j == 0 {
            return None;
        }
        if self.is_finite() {
            return self.add.get(j as usize - 1).copied();
        }
        let mut hi = j.max(2);
        while self.count_le(hi) < j {
            hi = hi.checked_mul(2)?;
        }
        let mut lo = 1;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.count_le(mid) >= j {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }

    /// Position of `x` in the canonical enumeration, or 0 for non-members.
    pub fn rank(&self, x: u64) -> u64 {
        if self.contains(x) {
            self.count_le(x)
        } else {
            0
        }
    }

    /// Members in increasing order starting at `x`.
    pub fn iter_from(&self, x: u64) -> impl Iterator<Item = u64> + '_ {
        let mut next = self.next_ge(x);
        std::iter::from_fn(move || {
            let cur = next?;
            next = cur.checked_add(1).and_then(|y| self.next_ge(y));
            Some(cur)
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.iter_from(1)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self, LangError> {
        if self == other {
            return Ok(self.clone());
        }
        if self.is_finite() || other.is_finite() {
            let (fin, rest) = if self.is_finite() { (self, other) } else { (other, self) };
            let kept: Vec<u64> = fin.add.iter().copied().filter(|&x| rest.contains(x)).collect();
            return Ok(Self::finite(&kept));
        }
        let shape = match (&self.shape, &other.shape) {
            (Shape::All, s) | (s, Shape::All) => s.clone(),
            (a, b) if a == b => a.clone(),
            _ => return Err(unsupported("intersection", self, other)),
        };
        let filter = if Arc::ptr_eq(&self.filter, &other.filter) {
            self.filter.clone()
        } else {
            Arc::new(self.filter.intersect(&other.filter)?)
        };
        let both = |x: &u64| self.contains(*x) && other.contains(*x);
        let add: Vec<u64> = self.add.iter().chain(other.add.iter()).copied().filter(both).collect();
        let remove: Vec<u64> = self
            .remove
            .iter()
            .chain(other.remove.iter())
            .copied()
            .filter(|x| !both(x))
            .collect();
        Ok(Self::build_arc(shape, filter, &add, &remove))
    }

    /// Complement within the universe; defined for finitely modified periodic sets.
    pub fn complement(&self) -> Result<Self, LangError> {
        if !self.is_fep() {
            return Err(LangError::UnsupportedAlgebra {
                op: "complement",
                left: self.to_string(),
                right: "nat".into(),
            });
        }
        Ok(Self::build(Shape::All, self.filter.complement(), &self.remove, &self.add))
    }

    /// `self \ other`.
    pub fn difference(&self, other: &Self) -> Result<Self, LangError> {
        if let Some(elems) = other.finite_elements() {
            return Ok(self.minus_finite(elems));
        }
        if self.is_finite() {
            let kept: Vec<u64> = self.add.iter().copied().filter(|&x| !other.contains(x)).collect();
            return Ok(Self::finite(&kept));
        }
        self.intersect(&other.complement()?)
    }

    /// Exact subset test; both sides must be finitely modified periodic
    /// unless `self` is finite.
    pub fn is_subset(&self, other: &Self) -> Result<bool, LangError> {
        if let Some(elems) = self.finite_elements() {
            return Ok(elems.iter().all(|&x| other.contains(x)));
        }
        if self == other {
            return Ok(true);
        }
        if !other.is_fep() {
            return Err(unsupported("subset test", self, other));
        }
        let d = self.difference(other)?;
        Ok(d.finite_elements().is_some_and(|e| e.is_empty()))
    }

    pub fn union_finite(&self, elems: &[u64]) -> Self {
        let mut add: Vec<u64> = self.add.to_vec();
        add.extend_from_slice(elems);
        let remove: Vec<u64> = self.remove.iter().copied().filter(|x| !elems.contains(x)).collect();
        Self::build_arc(self.shape.clone(), self.filter.clone(), &add, &remove)
    }

    pub fn minus_finite(&self, elems: &[u64]) -> Self {
        let add: Vec<u64> = self.add.iter().copied().filter(|x| !elems.contains(x)).collect();
        let mut remove: Vec<u64> = self.remove.to_vec();
        remove.extend(elems.iter().copied().filter(|&x| self.core_contains(x)));
        Self::build_arc(self.shape.clone(), self.filter.clone(), &add, &remove)
    }

    /// Same as [`minus_finite`](Self::minus_finite) with a membership test
    /// over a candidate superset of the removed values.
    pub fn minus_where(&self, candidates: impl Iterator<Item = u64>, excluded: impl Fn(u64) -> bool) -> Self {
        let drop: Vec<u64> = candidates.filter(|&x| excluded(x) && self.contains(x)).collect();
        self.minus_finite(&drop)
    }
}

/// Exact core elements when the core is finite.
fn finite_core(shape: &Shape, filter: &Residues) -> Option<Vec<u64>> {
    if filter.is_empty() {
        return Some(Vec::new());
    }
    match shape {
        Shape::All | Shape::Blocks(_) => None,
        Shape::Special(SpecialKind::Primes) => {
            let q = filter.modulus();
            if filter.residues().any(|r| r.gcd(&q) == 1) {
                None
            } else {
                Some(primes_upto(q).into_iter().filter(|&p| filter.contains(p)).collect())
            }
        }
        Shape::Special(SpecialKind::PowersOfTwo) => {
            let q = filter.modulus();
            // 2^e mod q is purely periodic once 2^e exceeds the 2-part of q.
            let start = 30u32;
            let v0 = pow2_mod(start, q);
            let mut v = v0;
            let mut hit = false;
            loop {
                if filter.contains_residue(v) {
                    hit = true;
                    break;
                }
                v = (v * 2) % q;
                if v == v0 {
                    break;
                }
            }
            if hit {
                None
            } else {
                Some((0..start).map(|e| 1u64 << e).filter(|&p| filter.contains(p)).collect())
            }
        }
        Shape::Special(SpecialKind::Squares) => {
            let q = filter.modulus();
            if (0..q).any(|t| filter.contains_residue((t * t) % q)) {
                None
            } else {
                Some(Vec::new())
            }
        }
    }
}

fn pow2_mod(e: u32, q: u64) -> u64 {
    let mut v = 1 % q;
    for _ in 0..e {
        v = (v * 2) % q;
    }
    v
}

fn fmt_list(f: &mut fmt::Formatter<'_>, xs: &[u64]) -> fmt::Result {
    f.write_str("[")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str("]")
}

fn fmt_fep(f: &mut fmt::Formatter<'_>, r: &Residues, add: &[u64], remove: &[u64]) -> fmt::Result {
    write!(f, "fep(mod={}, residues=", r.modulus())?;
    fmt_list(f, &r.residues().collect::<Vec<_>>())?;
    if !add.is_empty() {
        f.write_str(", add=")?;
        fmt_list(f, add)?;
    }
    if !remove.is_empty() {
        f.write_str(", remove=")?;
        fmt_list(f, remove)?;
    }
    f.write_str(")")
}

/// Renders in scenario-config syntax.
impl fmt::Display for NatSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            f.write_str("finite(")?;
            fmt_list(f, &self.add)?;
            return f.write_str(")");
        }
        match &self.shape {
            Shape::All => fmt_fep(f, &self.filter, &self.add, &self.remove),
            other => {
                match other {
                    Shape::Blocks(b) => write!(f, "blocks({b}")?,
                    Shape::Special(k) => write!(f, "special({k}")?,
                    Shape::All => unreachable!(),
                }
                if !self.filter.is_full() {
                    f.write_str(", filter=")?;
                    fmt_fep(f, &self.filter, &[], &[])?;
                }
                if !self.add.is_empty() {
                    f.write_str(", add=")?;
                    fmt_list(f, &self.add)?;
                }
                if !self.remove.is_empty() {
                    f.write_str(", remove=")?;
                    fmt_list(f, &self.remove)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// An infinite [`NatSet`].
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SymbolicLanguage(NatSet);

impl SymbolicLanguage {
    pub fn new(set: NatSet) -> Result<Self, LangError> {
        if set.is_infinite() {
            Ok(Self(set))
        } else {
            Err(LangError::Finite(set.to_string()))
        }
    }

    pub fn nat() -> Self {
        Self(NatSet::nat())
    }

    pub fn fep(modulus: u64, residues: &[u64], add: &[u64], remove: &[u64]) -> Result<Self, LangError> {
        Self::new(NatSet::fep(modulus, residues, add, remove)?)
    }

    pub fn multiples(m: u64) -> Result<Self, LangError> {
        Self::new(NatSet::multiples(m)?)
    }

    pub fn set(&self) -> &NatSet {
        &self.0
    }

    pub fn into_set(self) -> NatSet {
        self.0
    }

    /// The `j`-th member; always defined for `j >= 1` below `u64::MAX`.
    pub fn nth(&self, j: u64) -> u64 {
        self.0.nth(j).expect("language enumeration overflowed u64")
    }
}

impl std::ops::Deref for SymbolicLanguage {
    type Target = NatSet;

    fn deref(&self) -> &NatSet {
        &self.0
    }
}

impl fmt::Display for SymbolicLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Result of intersecting languages: finite sets are materialized.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SetValue {
    Finite(Vec<u64>),
    Infinite(SymbolicLanguage),
}

impl SetValue {
    pub fn from_set(set: NatSet) -> Self {
        match set.finite_elements() {
            Some(e) => Self::Finite(e.to_vec()),
            None => Self::Infinite(SymbolicLanguage(set)),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite(_))
    }
}

/// Intersection of a non-empty list of languages.
pub fn intersect(langs: &[&NatSet]) -> Result<SetValue, LangError> {
    let (first, rest) = langs
        .split_first()
        .ok_or_else(|| LangError::InvalidSpec("intersection of an empty list".into()))?;
    let mut acc = (*first).clone();
    for l in rest {
        acc = acc.intersect(l)?;
    }
    Ok(SetValue::from_set(acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evens() -> NatSet {
        NatSet::multiples(2).unwrap()
    }

    fn factorial_blocks() -> NatSet {
        NatSet::blocks(BlockSpec::FactorialPairs, Residues::full())
    }

    #[test]
    fn membership() {
        assert!(evens().contains(4));
        assert!(!NatSet::special(SpecialKind::Primes, Residues::full()).contains(9));
        assert!(factorial_blocks().contains(3));
        assert!(!factorial_blocks().contains(10));
    }

    #[test]
    fn nth_and_rank() {
        assert_eq!(NatSet::nat().nth(7), Some(7));
        assert_eq!(evens().nth(3), Some(6));
        assert_eq!(NatSet::fep(1, &[0], &[], &[1]).unwrap().nth(1), Some(2));
        assert_eq!(evens().rank(7), 0);
        assert_eq!(evens().rank(6), 3);
        for n in 1..50 {
            assert_eq!(NatSet::nat().rank(n), n);
        }
    }

    #[test]
    fn intersections() {
        let odd = NatSet::fep(2, &[1], &[], &[]).unwrap();
        let not3 = NatSet::fep(3, &[1, 2], &[], &[]).unwrap();
        let both = odd.intersect(&not3).unwrap();
        assert_eq!(both, NatSet::fep(6, &[1, 5], &[], &[]).unwrap());

        let k = 3;
        let classes: Vec<NatSet> = (0..k)
            .map(|i| NatSet::fep(k, &(0..k).filter(|&r| r != i).collect::<Vec<_>>(), &[], &[]).unwrap())
            .collect();
        let refs: Vec<&NatSet> = classes.iter().collect();
        assert_eq!(intersect(&refs).unwrap(), SetValue::Finite(vec![]));
    }

    #[test]
    fn normal_form() {
        let s = NatSet::fep(2, &[0], &[4, 5], &[3, 6]).unwrap();
        assert_eq!(s.added(), &[5]);
        assert_eq!(s.removed(), &[6]);
        assert!(s.contains(5) && !s.contains(6) && s.contains(4) && !s.contains(3));
    }

    #[test]
    fn complement_roundtrip() {
        let s = NatSet::fep(6, &[1, 4], &[3], &[4]).unwrap();
        let c = s.complement().unwrap();
        for x in 1..200 {
            assert_eq!(s.contains(x), !c.contains(x), "x={x}");
        }
        assert_eq!(c.complement().unwrap(), s);
    }

    #[test]
    fn blocks_count_and_next() {
        let f = factorial_blocks();
        let brute = |x: u64| (1..=x).filter(|&y| f.contains(y)).count() as u64;
        for x in [1, 2, 6, 7, 23, 24, 100, 120, 121, 800, 5040, 6000] {
            assert_eq!(f.count_le(x), brute(x), "x={x}");
        }
        assert_eq!(f.next_ge(7), Some(24));
        assert_eq!(f.next_ge(121), Some(720));
    }

    #[test]
    fn special_finite_cores() {
        let even_primes = NatSet::special(SpecialKind::Primes, Residues::new(2, &[0]).unwrap());
        assert_eq!(even_primes.finite_elements(), Some(&[2u64][..]));
        let odd_squares = NatSet::special(SpecialKind::Squares, Residues::new(4, &[2, 3]).unwrap());
        assert!(odd_squares.is_finite());
        let pow2_mod3 = NatSet::special(SpecialKind::PowersOfTwo, Residues::new(3, &[0]).unwrap());
        assert!(pow2_mod3.is_finite());
        let pow2_even = NatSet::special(SpecialKind::PowersOfTwo, Residues::new(2, &[1]).unwrap());
        assert_eq!(pow2_even.finite_elements(), Some(&[1u64][..]));
    }

    #[test]
    fn display_is_config_syntax() {
        assert_eq!(NatSet::fep(6, &[1, 5], &[4], &[7]).unwrap().to_string(), "fep(mod=6, residues=[1,5], add=[4], remove=[7])");
        assert_eq!(factorial_blocks().to_string(), "blocks(factorial_pairs)");
        assert_eq!(NatSet::finite(&[2, 1]).to_string(), "finite([1,2])");
    }
}
