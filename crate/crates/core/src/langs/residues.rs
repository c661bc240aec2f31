use num_integer::Integer;

use super::LangError;
use crate::rational::Rational;

/// Largest modulus produced by residue algebra before it is rejected.
pub const MAX_MODULUS: u64 = 1 << 24;

/// A subset of `Z_q`, read as the periodic set `{x >= 1 : x mod q in R}`.
///
/// Always stored at its minimal period, so structural equality is set equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Residues {
    modulus: u64,
    bits: Vec<u64>,
    count: u64,
}

impl Residues {
    pub fn new(modulus: u64, residues: &[u64]) -> Result<Self, LangError> {
        if modulus == 0 {
            return Err(LangError::InvalidSpec("modulus must be at least 1".into()));
        }
        if modulus > MAX_MODULUS {
            return Err(LangError::ModulusTooLarge(modulus));
        }
        let mut bits = vec![0u64; words(modulus)];
        for &r in residues {
            let r = r % modulus;
            bits[(r / 64) as usize] |= 1 << (r % 64);
        }
        Ok(Self::from_bits(modulus, bits))
    }

    pub fn full() -> Self {
        Self { modulus: 1, bits: vec![1], count: 1 }
    }

    pub fn empty() -> Self {
        Self { modulus: 1, bits: vec![0], count: 0 }
    }

    fn from_bits(modulus: u64, bits: Vec<u64>) -> Self {
        let count = bits.iter().map(|w| w.count_ones() as u64).sum();
        let raw = Self { modulus, bits, count };
        raw.minimal()
    }

    fn minimal(self) -> Self {
        let q = self.modulus;
        if self.count == 0 {
            return Self::empty();
        }
        if self.count == q {
            return Self::full();
        }
        let mut d = 1;
        while d < q {
            if q.is_multiple_of(d) && (0..q).all(|r| self.bit(r) == self.bit(r % d)) {
                let mut bits = vec![0u64; words(d)];
                for r in 0..d {
                    if self.bit(r) {
                        bits[(r / 64) as usize] |= 1 << (r % 64);
                    }
                }
                let count = self.count / (q / d);
                return Self { modulus: d, bits, count };
            }
            d += 1;
        }
        self
    }

    fn bit(&self, r: u64) -> bool {
        self.bits[(r / 64) as usize] >> (r % 64) & 1 == 1
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Number of residues per period.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_full(&self) -> bool {
        self.count == self.modulus
    }

    pub fn residues(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.modulus).filter(|&r| self.bit(r))
    }

    pub fn contains_residue(&self, r: u64) -> bool {
        self.bit(r % self.modulus)
    }

    pub fn contains(&self, x: u64) -> bool {
        self.bit(x % self.modulus)
    }

    /// Members in `[1, s]` for `s < modulus`.
    fn partial(&self, s: u64) -> u64 {
        if s == 0 {
            return 0;
        }
        let full_words = (s + 1) / 64;
        let mut c: u64 = self.bits[..full_words as usize].iter().map(|w| w.count_ones() as u64).sum();
        let rem = (s + 1) % 64;
        if rem > 0 {
            c += (self.bits[full_words as usize] & ((1u64 << rem) - 1)).count_ones() as u64;
        }
        // residue 0 sits at position q, not in [1, s]
        c - self.bit(0) as u64
    }

    /// Members in `[1, x]`.
    pub fn count_le(&self, x: u64) -> u64 {
        (x / self.modulus) * self.count + self.partial(x % self.modulus)
    }

    /// Members in `[a, b]`.
    pub fn count_range(&self, a: u64, b: u64) -> u64 {
        if a > b {
            return 0;
        }
        self.count_le(b) - self.count_le(a.saturating_sub(1))
    }

    /// Smallest member `>= x`.
    pub fn next_ge(&self, x: u64) -> Option<u64> {
        if self.count == 0 {
            return None;
        }
        let q = self.modulus;
        let r = x % q;
        let mut off = 0;
        loop {
            let cand = (r + off) % q;
            if self.bit(cand) {
                return x.checked_add(off);
            }
            off += 1;
        }
    }

    pub fn intersect(&self, other: &Self) -> Result<Self, LangError> {
        self.combine(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Self) -> Result<Self, LangError> {
        self.combine(other, |a, b| a || b)
    }

    fn combine(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self, LangError> {
        let l = self.modulus.lcm(&other.modulus);
        if l > MAX_MODULUS {
            return Err(LangError::ModulusTooLarge(l));
        }
        let mut bits = vec![0u64; words(l)];
        for r in 0..l {
            if f(self.bit(r % self.modulus), other.bit(r % other.modulus)) {
                bits[(r / 64) as usize] |= 1 << (r % 64);
            }
        }
        Ok(Self::from_bits(l, bits))
    }

    pub fn complement(&self) -> Self {
        let q = self.modulus;
        let mut bits = vec![0u64; words(q)];
        for r in 0..q {
            if !self.bit(r) {
                bits[(r / 64) as usize] |= 1 << (r % 64);
            }
        }
        Self::from_bits(q, bits)
    }

    /// `|self ∩ other| / |other|` per common period; `other` must be non-empty.
    pub fn relative_density(&self, other: &Self) -> Result<Rational, LangError> {
        let both = self.intersect(other)?;
        let l = both.modulus.lcm(&other.modulus);
        let num = both.count * (l / both.modulus);
        let den = other.count * (l / other.modulus);
        Ok(Rational::new(num as i64, den as i64))
    }

    /// `|self| / q`, the natural density of the periodic set.
    pub fn density(&self) -> Rational {
        Rational::new(self.count as i64, self.modulus as i64)
    }
}

fn words(q: u64) -> usize {
    q.div_ceil(64) as usize
}
