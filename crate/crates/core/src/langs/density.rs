use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::{unsupported, LangError, NatSet, Residues, Shape, SpecialKind};
use crate::rational::{serde_rat, Rational};

/// Lower and upper density of one set inside another.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Density {
    #[serde(with = "serde_rat")]
    pub low: Rational,
    #[serde(with = "serde_rat")]
    pub up: Rational,
}

impl Density {
    fn exact(d: Rational) -> Self {
        Self { low: d, up: d }
    }
}

fn prime_density(a: &Residues, b: &Residues) -> Rational {
    let q = a.modulus().lcm(&b.modulus());
    let coprime_in_b = (0..q).filter(|r| r.gcd(&q) == 1 && b.contains_residue(*r));
    let (mut num, mut den) = (0i64, 0i64);
    for r in coprime_in_b {
        den += 1;
        if a.contains_residue(r) {
            num += 1;
        }
    }
    Rational::new(num, den)
}

/// Exact `(liminf, limsup)` of `|A ∩ {b_1..b_m}| / m`.
///
/// Finite modifications never change a density, so only the cores matter.
pub fn mu_exact(a: &NatSet, b: &NatSet) -> Result<Density, LangError> {
    if b.is_finite() {
        return Err(LangError::Finite(b.to_string()));
    }
    if a == b {
        return Ok(Density::exact(Rational::from_integer(1)));
    }
    if a.is_finite() {
        return Ok(Density::exact(Rational::from_integer(0)));
    }
    let rel = || a.filter().relative_density(b.filter());
    match (a.shape(), b.shape()) {
        (Shape::All, Shape::All) | (Shape::All, Shape::Blocks(_)) => Ok(Density::exact(rel()?)),
        (Shape::Blocks(s), Shape::Blocks(t)) if s == t => Ok(Density::exact(rel()?)),
        // Blocks are separated by gaps that dwarf everything before them.
        (Shape::Blocks(_), Shape::All) => Ok(Density { low: Rational::from_integer(0), up: rel()? }),
        (Shape::Special(_), Shape::All | Shape::Blocks(_)) => Ok(Density::exact(Rational::from_integer(0))),
        (Shape::All | Shape::Special(SpecialKind::Primes), Shape::Special(SpecialKind::Primes)) => {
            Ok(Density::exact(prime_density(a.filter(), b.filter())))
        }
        (Shape::Special(k), Shape::Special(l)) if k == l && a.filter() == b.filter() => {
            Ok(Density::exact(Rational::from_integer(1)))
        }
        _ => Err(unsupported("density", a, b)),
    }
}

/// `|A ∩ {b_1..b_m}| / m` by direct enumeration of `B`.
pub fn mu_empirical(a: &NatSet, b: &NatSet, m: u64) -> Rational {
    mu_empirical_by(|x| a.contains(x), b, m)
}

pub fn mu_empirical_by(pred: impl Fn(u64) -> bool, b: &NatSet, m: u64) -> Rational {
    assert!(m >= 1, "prefix length must be positive");
    let hits = b.iter().take(m as usize).filter(|&x| pred(x)).count();
    Rational::new(hits as i64, m as i64)
}

/// Smallest `m*` with `mu_empirical(A, B, m) >= mu_low(A, B) / (1 + eps)` for every `m >= m*`.
///
/// Exact for finitely modified periodic pairs. Past the last modified
/// element both sets repeat with a common period, so the slack
/// `count(m)(1 + eps) - mu*m` grows by a fixed positive amount every
/// period and each residue class of `m` has a closed-form last failure.
pub fn density_rate(a: &NatSet, b: &NatSet, eps: Rational) -> Result<u64, LangError> {
    if *eps.numer() <= 0 {
        return Err(LangError::InvalidSpec("density rate needs eps > 0".into()));
    }
    let mu = mu_exact(a, b)?;
    if a == b || mu.low == Rational::from_integer(0) {
        return Ok(1);
    }
    if !a.is_fep() || !b.is_fep() {
        return Err(unsupported("density rate", a, b));
    }
    let q = a.filter().modulus().lcm(&b.filter().modulus());
    let both = a.filter().intersect(b.filter())?;
    let per_period_b = (b.filter().count() * (q / b.filter().modulus())) as i128;
    let per_period_ab = (both.count() * (q / both.modulus())) as i128;
    let (e_num, e_den) = (*eps.numer() as i128, *eps.denom() as i128);

    let ovf = || LangError::Overflow("density rate");
    let scale = (e_den + e_num).checked_mul(per_period_b).ok_or_else(ovf)?;
    let slope = per_period_ab.checked_mul(e_den).ok_or_else(ovf)?;
    let slack = |count: i128, m: i128| -> Result<i128, LangError> {
        let lhs = count.checked_mul(scale).ok_or_else(ovf)?;
        let rhs = slope.checked_mul(m).ok_or_else(ovf)?;
        Ok(lhs - rhs)
    };
    let gain = per_period_ab.checked_mul(e_num).ok_or_else(ovf)?.checked_mul(per_period_b).ok_or_else(ovf)?;

    let bound = a.modification_bound().max(b.modification_bound());
    let m_start = b.count_le(bound) as i128 + 1;
    let m_end = m_start + per_period_b;

    let mut last_fail: i128 = 0;
    let mut count: i128 = 0;
    for (idx, bx) in b.iter().enumerate() {
        let m = idx as i128 + 1;
        if m >= m_end {
            break;
        }
        if a.contains(bx) {
            count += 1;
        }
        let g = slack(count, m)?;
        if g >= 0 {
            continue;
        }
        if m < m_start {
            last_fail = last_fail.max(m);
        } else {
            let t = (-g + gain - 1) / gain - 1;
            let last = t.checked_mul(per_period_b).and_then(|v| v.checked_add(m)).ok_or_else(ovf)?;
            last_fail = last_fail.max(last);
        }
    }
    u64::try_from(last_fail + 1).map_err(|_| ovf())
}
