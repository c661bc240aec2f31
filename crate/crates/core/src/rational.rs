//! Exact rationals and dyadic thresholds.

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serializer};

pub type Rational = Ratio<i64>;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

/// Formats as `p/q`, always with an explicit denominator.
pub fn fmt_rat(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rat(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().ok()?;
            let q: i64 = q.trim().parse().ok()?;
            if q == 0 {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => s.parse::<i64>().ok().map(Rational::from_integer),
    }
}

pub mod serde_rat {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}

pub mod serde_opt_rat {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&fmt_rat(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        match s {
            None => Ok(None),
            Some(s) => parse_rat(&s)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))),
        }
    }
}

pub mod serde_vec_rat {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&fmt_rat(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.iter()
            .map(|s| parse_rat(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))))
            .collect()
    }
}

/// The value `num / (den * 2^shift)`; compared against counts without overflow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Threshold {
    num: u64,
    den: u64,
    shift: u32,
}

impl Threshold {
    pub fn new(r: Rational, shift: u32) -> Self {
        assert!(*r.numer() >= 0 && *r.denom() > 0, "threshold must be non-negative");
        Self { num: *r.numer() as u64, den: *r.denom() as u64, shift }
    }

    pub fn constant(r: Rational) -> Self {
        Self::new(r, 0)
    }

    /// True iff `count / n` is strictly greater than the threshold.
    pub fn exceeded(&self, count: u64, n: u64) -> bool {
        let lhs = count as u128 * self.den as u128;
        let rhs = self.num as u128 * n as u128;
        if lhs == 0 {
            return false;
        }
        let bits = 128 - lhs.leading_zeros();
        if bits + self.shift > 127 {
            return true;
        }
        (lhs << self.shift) > rhs
    }

    pub fn describe(&self) -> String {
        if self.shift == 0 {
            format!("{}/{}", self.num, self.den)
        } else {
            format!("{}/({}*2^{})", self.num, self.den, self.shift)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rat("3/6"), Some(rat(1, 2)));
        assert_eq!(parse_rat("2"), Some(rat(2, 1)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(fmt_rat(&rat(4, 1)), "4/1");
    }

    #[test]
    fn threshold_matches_rational_compare() {
        for shift in 0..6u32 {
            let t = Threshold::new(rat(3, 5), shift);
            let value = rat(3, 5 * (1 << shift));
            for n in 1..40u64 {
                for c in 0..=n {
                    assert_eq!(t.exceeded(c, n), rat(c as i64, n as i64) > value);
                }
            }
        }
    }

    #[test]
    fn huge_shift_means_zero_tolerance() {
        let t = Threshold::new(rat(1, 1), 400);
        assert!(!t.exceeded(0, 10));
        assert!(t.exceeded(1, u64::MAX / 2));
    }
}
