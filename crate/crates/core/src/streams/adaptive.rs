use crate::langs::{mu_exact, NatSet, SymbolicLanguage};
use crate::rational::Rational;
use crate::valueset::ValueSet;

use super::{Feedback, Source, StreamError};

/// Alternates between enumerating `Lp` and `L`, switching whenever the
/// generator's output satisfies the current phase's exit condition.
///
/// Odd phases enumerate `Lp` and end once the output is inside `Lp` with
/// lower density at least `c - eps/2`, where `c = mu_low(L, Lp) + eps`.
/// Even phases enumerate `L` and end once the output is inside `L`.
pub struct PhaseAdversary {
    l: NatSet,
    lp: NatSet,
    threshold: Rational,
    phase: u64,
    phase_start: u64,
    cursor: u64,
    seen: ValueSet,
    stall_limit: u64,
    switches: Vec<u64>,
}

impl PhaseAdversary {
    pub fn new(l: SymbolicLanguage, lp: SymbolicLanguage, eps: Rational, stall_limit: u64) -> Result<Self, StreamError> {
        let extra = l.difference(lp.set())?;
        if !extra.is_finite() {
            return Err(StreamError::Lang(crate::langs::LangError::InvalidSpec(format!("{l} minus {lp} must be finite"))));
        }
        let c = mu_exact(l.set(), lp.set())?.low + eps;
        Ok(Self {
            l: l.into_set(),
            lp: lp.into_set(),
            threshold: c - eps / Rational::from_integer(2),
            phase: 1,
            phase_start: 1,
            cursor: 1,
            seen: ValueSet::new(),
            stall_limit,
            switches: Vec::new(),
        })
    }

    pub fn phase(&self) -> u64 {
        self.phase
    }

    /// Whether `out \ S` is inside `target`, where `S` is everything emitted so far.
    fn inside_after_seen(&self, out: &NatSet, target: &NatSet) -> Result<bool, StreamError> {
        let outside = out.difference(target)?;
        Ok(match outside.finite_elements() {
            Some(elems) => elems.iter().all(|&x| self.seen.contains(x)),
            None => false,
        })
    }

    fn exit_reached(&self, out: &NatSet) -> Result<bool, StreamError> {
        if self.phase % 2 == 1 {
            if !self.inside_after_seen(out, &self.lp)? {
                return Ok(false);
            }
            if out.is_finite() {
                return Ok(false);
            }
            Ok(mu_exact(out, &self.lp)?.low >= self.threshold)
        } else {
            self.inside_after_seen(out, &self.l)
        }
    }

    fn current_target(&self) -> &NatSet {
        if self.phase % 2 == 1 {
            &self.lp
        } else {
            &self.l
        }
    }
}

impl Source for PhaseAdversary {
    fn switches(&self) -> &[u64] {
        &self.switches
    }

    fn emit(&mut self, n: u64, _history: &[u64], feedback: Option<&Feedback>) -> Result<(u64, bool), StreamError> {
        if n > 1 {
            let out = feedback.ok_or(StreamError::AdaptiveFeedbackMissing(n))?.as_set();
            if n > self.phase_start && self.exit_reached(&out)? {
                self.phase += 1;
                self.phase_start = n;
                self.cursor = 1;
                self.switches.push(n);
            } else if n - self.phase_start >= self.stall_limit {
                return Err(StreamError::PhaseStalled(n));
            }
        }
        let target = self.current_target();
        let mut x = target.next_ge(self.cursor).expect("phase targets are infinite");
        while self.seen.contains(x) {
            x = target.next_ge(x + 1).expect("phase targets are infinite");
        }
        self.cursor = x + 1;
        self.seen.insert(x);
        Ok((x, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::streams::Stream;

    fn langs() -> (SymbolicLanguage, SymbolicLanguage) {
        (SymbolicLanguage::fep(4, &[0], &[1], &[]).unwrap(), SymbolicLanguage::multiples(2).unwrap())
    }

    #[test]
    fn feedback_is_required() {
        let (l, lp) = langs();
        let adv = PhaseAdversary::new(l, lp.clone(), rat(1, 8), 100).unwrap();
        let mut s = Stream::adaptive(adv, lp);
        assert_eq!(s.next(None).unwrap().x, 2);
        assert_eq!(s.next(None).unwrap_err(), StreamError::AdaptiveFeedbackMissing(2));
    }

    #[test]
    fn stub_that_never_reaches_density_stalls() {
        let (l, lp) = langs();
        let adv = PhaseAdversary::new(l, lp.clone(), rat(1, 8), 50).unwrap();
        let mut s = Stream::adaptive(adv, lp.clone());
        let stub = Feedback::Set(NatSet::multiples(8).unwrap());
        let mut err = None;
        for _ in 0..100 {
            if let Err(e) = s.next(Some(&stub)) {
                err = Some(e);
                break;
            }
        }
        assert_eq!(err, Some(StreamError::PhaseStalled(51)));
        // noise w.r.t. L' in the carried prefix is bounded by its length
        assert!(s.history().iter().all(|x| lp.contains(*x)));
    }

    #[test]
    fn tracking_stub_switches_forever() {
        let (l, lp) = langs();
        let adv = PhaseAdversary::new(l.clone(), lp.clone(), rat(1, 4), 50).unwrap();
        let mut s = Stream::adaptive(adv, lp.clone());
        let mut fb: Option<Feedback> = None;
        for _ in 0..200 {
            let x = s.next(fb.as_ref()).unwrap().x;
            let seen = s.history().to_vec();
            let out = if x % 4 == 2 { lp.minus_finite(&seen) } else { l.minus_finite(&seen) };
            fb = Some(Feedback::Set(out));
        }
        assert!(s.phase_switches().len() >= 100);
        assert_eq!(&s.phase_switches()[..3], &[2, 3, 5]);
    }

    #[test]
    fn superset_pair_is_unreachable() {
        let l = SymbolicLanguage::fep(2, &[0], &[1], &[]).unwrap();
        let lp = SymbolicLanguage::multiples(2).unwrap();
        let adv = PhaseAdversary::new(l, lp.clone(), rat(1, 16), 30).unwrap();
        let mut s = Stream::adaptive(adv, lp.clone());
        let mut fb: Option<Feedback> = None;
        let mut stalled = false;
        for _ in 0..100 {
            match s.next(fb.as_ref()) {
                Ok(_) => fb = Some(Feedback::Set(lp.minus_finite(s.history()))),
                Err(StreamError::PhaseStalled(_)) => {
                    stalled = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(stalled);
        assert_eq!(s.history(), (1..=30).map(|k| 2 * k).collect::<Vec<_>>());
    }
}
