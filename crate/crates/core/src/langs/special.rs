use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// Named infinite predicates with declared natural density zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialKind {
    Primes,
    PowersOfTwo,
    Squares,
}

impl SpecialKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "primes" => Some(Self::Primes),
            "pow2" | "powers_of_two" => Some(Self::PowersOfTwo),
            "squares" => Some(Self::Squares),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Primes => "primes",
            Self::PowersOfTwo => "pow2",
            Self::Squares => "squares",
        }
    }

    pub fn contains(&self, x: u64) -> bool {
        match self {
            Self::Primes => is_prime(x),
            Self::PowersOfTwo => x.is_power_of_two(),
            Self::Squares => x >= 1 && isqrt(x).pow(2) == x,
        }
    }

    /// Smallest member `>= x`, or `None` past `u64::MAX`.
    pub fn next_ge(&self, x: u64) -> Option<u64> {
        let x = x.max(1);
        match self {
            Self::Primes => (x..=u64::MAX).find(|&y| is_prime(y)),
            Self::PowersOfTwo => x.checked_next_power_of_two(),
            Self::Squares => {
                let mut s = isqrt(x);
                if s * s < x {
                    s += 1;
                }
                s.checked_mul(s)
            }
        }
    }

    /// Members in `[1, x]` accepted by `keep`.
    pub fn count_le_filtered(&self, x: u64, keep: impl Fn(u64) -> bool) -> u64 {
        match self {
            Self::Primes => {
                if x < 2 {
                    return 0;
                }
                primes_upto(x).into_iter().filter(|&p| keep(p)).count() as u64
            }
            Self::PowersOfTwo => (0..64).map(|e| 1u64 << e).take_while(|&p| p <= x).filter(|&p| keep(p)).count() as u64,
            Self::Squares => (1..=isqrt(x)).map(|s| s * s).filter(|&p| keep(p)).count() as u64,
        }
    }
}

impl fmt::Display for SpecialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn isqrt(x: u64) -> u64 {
    if x < 2 {
        return x;
    }
    let mut r = (x as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|v| v > x) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|v| v <= x) {
        r += 1;
    }
    r
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

static PRIMES: Mutex<(u64, Vec<u64>)> = Mutex::new((1, Vec::new()));

/// All primes `<= x`, served from a shared growing sieve.
pub fn primes_upto(x: u64) -> Vec<u64> {
    let mut guard = PRIMES.lock().expect("prime cache poisoned");
    if guard.0 < x {
        let limit = x.max(guard.0 * 2).max(1024);
        let mut composite = vec![false; limit as usize + 1];
        let mut list = Vec::new();
        for i in 2..=limit {
            if !composite[i as usize] {
                list.push(i);
                let mut j = i * i;
                while j <= limit {
                    composite[j as usize] = true;
                    j += i;
                }
            }
        }
        *guard = (limit, list);
    }
    let end = guard.1.partition_point(|&p| p <= x);
    guard.1[..end].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miller_rabin_agrees_with_sieve() {
        let sieve = primes_upto(5000);
        let mr: Vec<u64> = (1..=5000).filter(|&x| is_prime(x)).collect();
        assert_eq!(sieve, mr);
        assert!(is_prime(18446744073709551557));
        assert!(!is_prime(9));
    }

    #[test]
    fn next_members() {
        assert_eq!(SpecialKind::PowersOfTwo.next_ge(5), Some(8));
        assert_eq!(SpecialKind::Squares.next_ge(10), Some(16));
        assert_eq!(SpecialKind::Primes.next_ge(24), Some(29));
        assert_eq!(SpecialKind::Squares.count_le_filtered(100, |_| true), 10);
    }
}
