//! Indexed collections of languages, closures and finite expansions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::langs::{intersect, LangError, NatSet, Residues, SetValue, SymbolicLanguage};
use crate::rational::{Rational, Threshold};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionMode {
    /// `L ∪ A \ B` for finite `A`, `B`.
    AddRemove,
    /// `L ∪ A` for finite `A`.
    AddOnly,
}

impl ExpansionMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "add_remove" => Some(Self::AddRemove),
            "add_only" => Some(Self::AddOnly),
            _ => None,
        }
    }
}

/// How an expanded language was obtained from its base.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Modification {
    /// 1-based index into the base collection.
    pub base: usize,
    pub add: Vec<u64>,
    pub remove: Vec<u64>,
}

#[derive(Clone, Debug)]
pub enum CollectionKind {
    Explicit,
    Expanded { base: Arc<Collection>, mode: ExpansionMode, entries: Vec<Modification> },
}

/// A finite prefix of an indexed language collection; indices are 1-based.
#[derive(Clone, Debug)]
pub struct Collection {
    langs: Vec<SymbolicLanguage>,
    names: Vec<String>,
    kind: CollectionKind,
}

impl Collection {
    pub fn explicit(langs: Vec<SymbolicLanguage>) -> Self {
        let names = (1..=langs.len()).map(|i| format!("L{i}")).collect();
        Self { langs, names, kind: CollectionKind::Explicit }
    }

    pub fn named(entries: Vec<(String, SymbolicLanguage)>) -> Self {
        let (names, langs) = entries.into_iter().unzip();
        Self { langs, names, kind: CollectionKind::Explicit }
    }

    pub fn len(&self) -> usize {
        self.langs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.langs.is_empty()
    }

    pub fn kind(&self) -> &CollectionKind {
        &self.kind
    }

    pub fn language_at(&self, i: usize) -> &SymbolicLanguage {
        assert!(i >= 1 && i <= self.langs.len(), "index {i} outside collection of {}", self.langs.len());
        &self.langs[i - 1]
    }

    pub fn get(&self, i: usize) -> Option<&SymbolicLanguage> {
        i.checked_sub(1).and_then(|k| self.langs.get(k))
    }

    pub fn name_at(&self, i: usize) -> &str {
        &self.names[i - 1]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name).map(|k| k + 1)
    }

    /// First index holding a language equal to `lang`.
    pub fn find(&self, lang: &NatSet) -> Option<usize> {
        self.langs.iter().position(|l| l.set() == lang).map(|k| k + 1)
    }

    pub fn languages(&self) -> impl Iterator<Item = (usize, &SymbolicLanguage)> {
        self.langs.iter().enumerate().map(|(k, l)| (k + 1, l))
    }

    pub fn modification(&self, i: usize) -> Option<&Modification> {
        match &self.kind {
            CollectionKind::Expanded { entries, .. } => entries.get(i - 1),
            CollectionKind::Explicit => None,
        }
    }

    /// `Cl` of the indexed languages.
    pub fn closure(&self, indices: &[usize]) -> Result<SetValue, LangError> {
        let sets: Vec<&NatSet> = indices.iter().map(|&i| self.language_at(i).set()).collect();
        intersect(&sets)
    }

    /// The first `limit` languages of the finite expansion of `self`.
    pub fn expand(self: &Arc<Self>, mode: ExpansionMode, limit: usize) -> Result<Self, LangError> {
        let b = self.len();
        if b == 0 {
            return Err(LangError::InvalidSpec("cannot expand an empty collection".into()));
        }
        let mut langs = Vec::with_capacity(limit);
        let mut names = Vec::with_capacity(limit);
        let mut entries = Vec::with_capacity(limit);
        for j in 1..=limit {
            let (base, add, remove) = expansion_triple(mode, b, j as u64);
            let lang = self.language_at(base);
            let add: Vec<u64> = add.into_iter().filter(|&x| !lang.contains(x)).collect();
            let remove: Vec<u64> = remove.into_iter().filter(|&x| lang.contains(x)).collect();
            let built = lang.set().union_finite(&add).minus_finite(&remove);
            let name = describe_modification(self.name_at(base), &add, &remove);
            langs.push(SymbolicLanguage::new(built)?);
            names.push(name);
            entries.push(Modification { base, add, remove });
        }
        Ok(Self { langs, names, kind: CollectionKind::Expanded { base: self.clone(), mode, entries } })
    }

    /// Membership in an expanded language using only base membership and
    /// finite-set lookups; `base_query` is invoked at most once.
    pub fn expanded_member(&self, j: usize, x: u64, mut base_query: impl FnMut(usize, u64) -> bool) -> Option<bool> {
        let m = self.modification(j)?;
        if m.add.contains(&x) {
            return Some(true);
        }
        if m.remove.contains(&x) {
            return Some(false);
        }
        Some(base_query(m.base, x))
    }
}

fn describe_modification(base: &str, add: &[u64], remove: &[u64]) -> String {
    let mut s = base.to_string();
    if !add.is_empty() {
        s.push_str(&format!("+{add:?}"));
    }
    if !remove.is_empty() {
        s.push_str(&format!("-{remove:?}"));
    }
    s
}

/// Cantor pairing of non-negative integers.
pub fn pair(x: u64, y: u64) -> u64 {
    (x + y) * (x + y + 1) / 2 + y
}

pub fn unpair(z: u64) -> (u64, u64) {
    let w = (crate::langs::isqrt(8 * z + 1) - 1) / 2;
    let t = w * (w + 1) / 2;
    let y = z - t;
    (w - y, y)
}

/// Finite set whose characteristic number is `code` (bit `x-1` marks `x`).
pub fn decode_set(code: u64) -> Vec<u64> {
    (0..64).filter(|b| code >> b & 1 == 1).map(|b| b + 1).collect()
}

pub fn encode_set(set: &[u64]) -> u64 {
    set.iter().fold(0, |acc, &x| acc | 1 << (x - 1))
}

/// `(base index, A, B)` at 1-based position `j` of the expansion of a
/// base with `b` languages: bases interleave, modification codes ascend.
pub fn expansion_triple(mode: ExpansionMode, b: usize, j: u64) -> (usize, Vec<u64>, Vec<u64>) {
    let k = j - 1;
    let base = (k % b as u64) as usize + 1;
    let code = k / b as u64;
    match mode {
        ExpansionMode::AddOnly => (base, decode_set(code), Vec::new()),
        ExpansionMode::AddRemove => {
            let (a, r) = unpair(code);
            (base, decode_set(a), decode_set(r))
        }
    }
}

/// Position of `(base, A, B)` in the expansion; inverse of [`expansion_triple`].
pub fn expansion_index(mode: ExpansionMode, b: usize, base: usize, add: &[u64], remove: &[u64]) -> u64 {
    let code = match mode {
        ExpansionMode::AddOnly => encode_set(add),
        ExpansionMode::AddRemove => pair(encode_set(add), encode_set(remove)),
    };
    code * b as u64 + base as u64
}

/// Standard families used by the bundled scenarios.
pub mod families {
    use super::*;

    /// `{n : n mod k != i}` for `i = 0..k-1`.
    pub fn residue_exclusion(k: u64) -> Result<Collection, LangError> {
        let langs = (0..k)
            .map(|i| SymbolicLanguage::fep(k, &(0..k).filter(|&r| r != i).collect::<Vec<_>>(), &[], &[]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Collection::explicit(langs))
    }

    /// `{1..k} ∪ {n : n mod k != i mod k}` for `i = 1..k`; every pair of
    /// languages meets exactly in `{1..k}`.
    pub fn residue_with_prefix(k: u64) -> Result<Collection, LangError> {
        let prefix: Vec<u64> = (1..=k).collect();
        let langs = (1..=k)
            .map(|i| SymbolicLanguage::fep(k, &(0..k).filter(|&r| r != i % k).collect::<Vec<_>>(), &prefix, &[]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Collection::explicit(langs))
    }

    /// Integer encoding `z -> 2z` for `z >= 1` and `-z -> 2z - 1`.
    pub fn fold_integer(z: i64) -> u64 {
        if z >= 1 {
            2 * z as u64
        } else {
            assert!(z != 0, "zero is not encoded");
            2 * z.unsigned_abs() - 1
        }
    }

    /// The positive integers plus `count` distractors
    /// `L_i = {-1, -2} ∪ {1..i-1} ∪ {z <= -100}`, all under [`fold_integer`].
    /// The target is index 1.
    pub fn two_noisy(count: usize) -> Result<Collection, LangError> {
        let mut out = vec![("K".to_string(), SymbolicLanguage::multiples(2)?)];
        let tail_start = fold_integer(-100);
        let skipped: Vec<u64> = (fold_integer(-3)..tail_start).step_by(2).collect();
        for i in 1..=count as i64 {
            let mut add = vec![fold_integer(-1), fold_integer(-2)];
            add.extend((1..i).map(fold_integer));
            let lang = SymbolicLanguage::new(NatSet::build(
                crate::langs::Shape::All,
                Residues::new(2, &[1])?,
                &add,
                &skipped,
            ))?;
            out.push((format!("D{i}"), lang));
        }
        Ok(Collection::named(out))
    }
}

/// Outcome of the finite-horizon falsifier for the constant-noise property.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CNoiseVerdict {
    Satisfied,
    ViolatedBy(String),
    Inconclusive,
}

/// Falsifies "some member is noisier than `c` infinitely often, or the
/// closure is infinite" on the given probe prefixes.
///
/// A probe refutes the property when every member stays at or below `c`
/// over the second half of the horizon while the closure is finite.
pub fn check_c_noise_property(
    collection: &Collection,
    indices: &[usize],
    c: Rational,
    probes: &[(String, Vec<u64>)],
    horizon: usize,
) -> Result<CNoiseVerdict, LangError> {
    if collection.closure(indices)?.is_infinite() {
        return Ok(CNoiseVerdict::Satisfied);
    }
    let t = Threshold::constant(c);
    for (name, prefix) in probes {
        let steps = horizon.min(prefix.len());
        let tail_start = steps / 2 + 1;
        let all_quiet = indices.iter().all(|&i| {
            let lang = collection.language_at(i);
            let mut misses = 0u64;
            for (k, &x) in prefix[..steps].iter().enumerate() {
                if !lang.contains(x) {
                    misses += 1;
                }
                let n = k + 1;
                if n >= tail_start && t.exceeded(misses, n as u64) {
                    return false;
                }
            }
            true
        });
        if all_quiet && steps > 0 {
            return Ok(CNoiseVerdict::ViolatedBy(name.clone()));
        }
    }
    Ok(CNoiseVerdict::Inconclusive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn pair_of(a: SymbolicLanguage, b: SymbolicLanguage) -> Collection {
        Collection::explicit(vec![a, b])
    }

    #[test]
    fn pairing_roundtrip() {
        for z in 0..5000 {
            let (x, y) = unpair(z);
            assert_eq!(pair(x, y), z);
        }
        assert_eq!(decode_set(encode_set(&[1, 4, 7])), vec![1, 4, 7]);
    }

    #[test]
    fn closures() {
        let c = pair_of(
            SymbolicLanguage::fep(1, &[0], &[], &[1]).unwrap(),
            SymbolicLanguage::fep(1, &[0], &[], &[2]).unwrap(),
        );
        let cl = c.closure(&[1, 2]).unwrap();
        assert_eq!(cl, SetValue::Infinite(SymbolicLanguage::fep(1, &[0], &[], &[1, 2]).unwrap()));
        assert_eq!(c.closure(&[2]).unwrap(), SetValue::Infinite(c.language_at(2).clone()));

        let hard = families::residue_with_prefix(2).unwrap();
        assert_eq!(hard.closure(&[1, 2]).unwrap(), SetValue::Finite(vec![1, 2]));
    }

    #[test]
    fn expansion_positions() {
        let base = Arc::new(Collection::explicit(vec![SymbolicLanguage::multiples(2).unwrap()]));
        let ex = base.expand(ExpansionMode::AddRemove, 64).unwrap();
        let want = NatSet::multiples(2).unwrap().union_finite(&[1]).minus_finite(&[2]);
        let j = ex.find(&want).expect("modified language present");
        assert_eq!(j, 9);
        assert_eq!(ex.language_at(1).set(), &NatSet::multiples(2).unwrap());

        let only = base.expand(ExpansionMode::AddOnly, 200).unwrap();
        assert!(only.languages().all(|(_, l)| l.contains(2)));
    }

    #[test]
    fn expanded_membership_uses_base_once() {
        let base = Arc::new(pair_of(SymbolicLanguage::multiples(2).unwrap(), SymbolicLanguage::nat()));
        let ex = base.expand(ExpansionMode::AddRemove, 300).unwrap();
        for j in 1..=ex.len() {
            for x in 1..60 {
                let mut calls = 0;
                let got = ex
                    .expanded_member(j, x, |i, y| {
                        calls += 1;
                        base.language_at(i).contains(y)
                    })
                    .unwrap();
                assert!(calls <= 1);
                assert_eq!(got, ex.language_at(j).contains(x), "j={j} x={x}");
            }
        }
    }

    #[test]
    fn c_noise_falsifier() {
        let nat: Vec<u64> = (1..=10_000).collect();
        let evens: Vec<u64> = (1..=10_000).map(|x| 2 * x).collect();
        let residues = families::residue_exclusion(3).unwrap();
        let probe = vec![("canonical".to_string(), nat.clone())];
        let verdict = check_c_noise_property(&residues, &[1, 2, 3], rat(2, 5), &probe, 10_000).unwrap();
        assert_eq!(verdict, CNoiseVerdict::ViolatedBy("canonical".into()));
        // at exactly 1/3 two of the classes exceed the rate at every n with n mod 3 != 0
        let verdict = check_c_noise_property(&residues, &[1, 2, 3], rat(1, 3), &probe, 10_000).unwrap();
        assert_eq!(verdict, CNoiseVerdict::Inconclusive);

        let c = pair_of(SymbolicLanguage::multiples(2).unwrap(), SymbolicLanguage::nat());
        let probe = vec![("evens".to_string(), evens)];
        assert_eq!(check_c_noise_property(&c, &[1, 2], rat(1, 4), &probe, 10_000).unwrap(), CNoiseVerdict::Satisfied);
        assert_eq!(check_c_noise_property(&c, &[1], rat(1, 4), &probe, 10_000).unwrap(), CNoiseVerdict::Satisfied);
    }

    #[test]
    fn two_noisy_family_shape() {
        let c = families::two_noisy(5).unwrap();
        let d3 = c.language_at(4);
        for x in [1, 3, 2, 4, 199, 201, 1001] {
            assert!(d3.contains(x), "x={x}");
        }
        for x in [5, 197, 6, 8] {
            assert!(!d3.contains(x), "x={x}");
        }
    }
}
