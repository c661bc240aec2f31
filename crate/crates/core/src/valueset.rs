//! Growable membership set for observed values.

use std::collections::BTreeSet;

const DENSE_LIMIT: u64 = 1 << 26;

#[derive(Clone, Debug, Default)]
pub struct ValueSet {
    dense: Vec<u64>,
    sparse: BTreeSet<u64>,
    len: usize,
}

impl ValueSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, x: u64) -> bool {
        if x < DENSE_LIMIT {
            let w = (x / 64) as usize;
            w < self.dense.len() && self.dense[w] >> (x % 64) & 1 == 1
        } else {
            self.sparse.contains(&x)
        }
    }

    /// Returns true when `x` was not present before.
    pub fn insert(&mut self, x: u64) -> bool {
        let fresh = if x < DENSE_LIMIT {
            let w = (x / 64) as usize;
            if w >= self.dense.len() {
                self.dense.resize((w + 1).next_power_of_two(), 0);
            }
            let bit = 1u64 << (x % 64);
            let fresh = self.dense[w] & bit == 0;
            self.dense[w] |= bit;
            fresh
        } else {
            self.sparse.insert(x)
        };
        if fresh {
            self.len += 1;
        }
        fresh
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        let dense = self.dense.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64u64).filter(move |b| bits >> b & 1 == 1).map(move |b| w as u64 * 64 + b)
        });
        dense.chain(self.sparse.iter().copied())
    }
}

impl FromIterator<u64> for ValueSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.insert(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse() {
        let mut s = ValueSet::new();
        assert!(s.insert(3));
        assert!(!s.insert(3));
        assert!(s.insert(1 << 40));
        assert!(s.contains(3) && s.contains(1 << 40) && !s.contains(4));
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![3, 1 << 40]);
    }
}
