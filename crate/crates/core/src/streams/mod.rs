//! Adversarial enumerations with contamination labels.

mod adaptive;

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adaptive::PhaseAdversary;

use crate::langs::{mu_exact, BlockSpec, LangError, NatSet, Residues, SymbolicLanguage};
use crate::rational::{Rational, Threshold};
use crate::valueset::ValueSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StreamError {
    #[error("adaptive adversary needs the generator's output before step {0}")]
    AdaptiveFeedbackMissing(u64),
    #[error("noise schedule {0} has positive upper density")]
    ScheduleNotSparse(String),
    #[error("omission filter leaves only finitely many elements of {0}")]
    FilterExhaustsLanguage(String),
    #[error("phase did not end within the horizon (stalled at step {0})")]
    PhaseStalled(u64),
    #[error("noise source {0} ran out of elements")]
    NoiseExhausted(String),
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// What an adaptive adversary sees of the generator after each step.
#[derive(Clone, Debug)]
pub enum Feedback {
    /// The output is this set minus every element the stream has emitted.
    Set(NatSet),
    /// All elements output so far by an element-based generator.
    Elements(Vec<u64>),
}

impl Feedback {
    pub fn as_set(&self) -> NatSet {
        match self {
            Self::Set(s) => s.clone(),
            Self::Elements(e) => NatSet::finite(e),
        }
    }
}

/// When noise elements are emitted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NoiseSchedule {
    None,
    /// Noise at every fresh step whose index lies in the set.
    Steps(NatSet),
    /// Noise in the last `p` slots of every block of `q` fresh steps.
    Pattern { p: u64, q: u64 },
    /// These exact values, at steps `at` (default: steps 1, 2, ...).
    Finite { values: Vec<u64>, at: Option<Vec<u64>> },
}

impl NoiseSchedule {
    pub fn pow2() -> Self {
        Self::Steps(NatSet::special(crate::langs::SpecialKind::PowersOfTwo, Residues::full()))
    }

    pub fn is_noise_step(&self, t: u64) -> bool {
        match self {
            Self::None => false,
            Self::Steps(s) => s.contains(t),
            Self::Pattern { p, q } => (t - 1) % q >= q - p,
            Self::Finite { values, at } => match at {
                Some(at) => at.contains(&t),
                None => t <= values.len() as u64,
            },
        }
    }

    /// Noise steps among the first `t` fresh steps.
    pub fn count_le(&self, t: u64) -> u64 {
        match self {
            Self::None => 0,
            Self::Steps(s) => s.count_le(t),
            Self::Pattern { p, q } => (t / q) * p + (t % q).saturating_sub(q - p),
            Self::Finite { values, at } => match at {
                Some(at) => at.iter().filter(|&&s| s <= t).count() as u64,
                None => t.min(values.len() as u64),
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::None => "none".into(),
            Self::Steps(s) => format!("steps({s})"),
            Self::Pattern { p, q } => format!("pattern({p}, {q})"),
            Self::Finite { values, .. } => format!("finite({values:?})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Omissions {
    None,
    /// Drop these elements.
    Finite(Vec<u64>),
    /// Keep only elements in the residue set.
    Periodic(Residues),
    /// Keep only elements inside the blocks.
    Sparse(BlockSpec),
}

/// Declared contamination regime, checked against measured statistics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Regime {
    Noiseless,
    FiniteNoise,
    ConstantNoise {
        #[serde(with = "crate::rational::serde_rat")]
        c: Rational,
    },
    VanishingNoise,
}

#[derive(Clone, Debug)]
pub struct StreamSpec {
    /// Language enumerated on non-noise steps (before omissions).
    pub main: SymbolicLanguage,
    /// Noise values are drawn from `noise_from \ main`.
    pub noise_from: NatSet,
    pub schedule: NoiseSchedule,
    pub omissions: Omissions,
    /// Permute the main elements within consecutive windows of this size.
    pub shuffle: Option<u64>,
    /// Re-emit an earlier value after every this many fresh steps.
    pub repeats: Option<u64>,
    pub dedupe: bool,
    pub bounded: Option<Rational>,
    pub seed: u64,
}

impl StreamSpec {
    pub fn canonical(main: SymbolicLanguage) -> Self {
        Self {
            main,
            noise_from: NatSet::nat(),
            schedule: NoiseSchedule::None,
            omissions: Omissions::None,
            shuffle: None,
            repeats: None,
            dedupe: false,
            bounded: None,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, schedule: NoiseSchedule, from: NatSet) -> Self {
        self.schedule = schedule;
        self.noise_from = from;
        self
    }

    pub fn with_omissions(mut self, omissions: Omissions) -> Self {
        self.omissions = omissions;
        self
    }

    pub fn regime(&self) -> Regime {
        match &self.schedule {
            NoiseSchedule::None => Regime::Noiseless,
            NoiseSchedule::Finite { .. } => Regime::FiniteNoise,
            NoiseSchedule::Pattern { p, q } => Regime::ConstantNoise { c: Rational::new(*p as i64, *q as i64) },
            NoiseSchedule::Steps(_) => Regime::VanishingNoise,
        }
    }

    /// The subset of `main` that survives the omission filter.
    pub fn kept(&self) -> Result<NatSet, StreamError> {
        let kept = match &self.omissions {
            Omissions::None => self.main.set().clone(),
            Omissions::Finite(drop) => self.main.minus_finite(drop),
            Omissions::Periodic(keep) => self.main.intersect(&NatSet::periodic(keep.clone()))?,
            Omissions::Sparse(spec) => self.main.intersect(&NatSet::blocks(*spec, Residues::full()))?,
        };
        if kept.is_finite() {
            return Err(StreamError::FilterExhaustsLanguage(self.main.to_string()));
        }
        Ok(kept)
    }
}

/// Noise at sparse steps drawn from `noise_source`; rejects schedules of
/// positive upper density.
pub fn make_vanishing_noise(k: SymbolicLanguage, noise_source: NatSet, schedule: NatSet) -> Result<StreamSpec, StreamError> {
    if mu_exact(&schedule, &NatSet::nat())?.up > Rational::from_integer(0) {
        return Err(StreamError::ScheduleNotSparse(schedule.to_string()));
    }
    Ok(StreamSpec::canonical(k).with_noise(NoiseSchedule::Steps(schedule), noise_source))
}

/// Noise in `p` of every `q` steps, so the noise rate never exceeds `p/q`.
pub fn make_c_noise(k: SymbolicLanguage, noise_source: NatSet, p: u64, q: u64) -> StreamSpec {
    StreamSpec::canonical(k).with_noise(NoiseSchedule::Pattern { p, q }, noise_source)
}

pub fn apply_omissions(spec: StreamSpec, omissions: Omissions) -> Result<StreamSpec, StreamError> {
    let spec = spec.with_omissions(omissions);
    spec.kept()?;
    Ok(spec)
}

pub fn make_bounded(k: SymbolicLanguage, m: Rational, schedule: NoiseSchedule, noise_source: NatSet) -> StreamSpec {
    let mut spec = StreamSpec::canonical(k).with_noise(schedule, noise_source);
    spec.bounded = Some(m);
    spec
}

/// One emitted element with its labels relative to the declared target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLabel {
    pub n: u64,
    pub x: u64,
    pub is_noise: bool,
    pub sigma: u64,
    pub repeat: bool,
}

trait Source: Send {
    /// Steps at which an adaptive source changed phase.
    fn switches(&self) -> &[u64] {
        &[]
    }

    fn emit(&mut self, n: u64, history: &[u64], feedback: Option<&Feedback>) -> Result<(u64, bool), StreamError>;
}

struct Interleave {
    kept: NatSet,
    main_cursor: u64,
    noise_pool: NatSet,
    noise_cursor: u64,
    noise_label: String,
    schedule: NoiseSchedule,
    shuffle: Option<(u64, ChaCha8Rng, VecDeque<u64>)>,
    repeats: Option<u64>,
    fresh: u64,
    finite_noise_next: usize,
    seen: ValueSet,
}

impl Interleave {
    fn new(spec: &StreamSpec) -> Result<Self, StreamError> {
        let kept = spec.kept()?;
        let noise_pool = spec.noise_from.difference(spec.main.set())?;
        Ok(Self {
            kept,
            main_cursor: 1,
            noise_label: noise_pool.to_string(),
            noise_pool,
            noise_cursor: 1,
            schedule: spec.schedule.clone(),
            shuffle: spec.shuffle.map(|w| (w.max(1), ChaCha8Rng::seed_from_u64(spec.seed), VecDeque::new())),
            repeats: spec.repeats,
            fresh: 0,
            finite_noise_next: 0,
            seen: ValueSet::new(),
        })
    }

    fn next_main_sorted(&mut self) -> u64 {
        loop {
            let x = self.kept.next_ge(self.main_cursor).expect("kept set is infinite");
            self.main_cursor = x + 1;
            if !self.seen.contains(x) {
                return x;
            }
        }
    }

    fn next_main(&mut self) -> u64 {
        if self.shuffle.is_none() {
            return self.next_main_sorted();
        }
        let needs_refill = self.shuffle.as_ref().is_some_and(|(_, _, buf)| buf.is_empty());
        if needs_refill {
            let w = self.shuffle.as_ref().map(|s| s.0).unwrap_or(1);
            let mut block: Vec<u64> = (0..w).map(|_| self.next_main_sorted()).collect();
            let (_, rng, buf) = self.shuffle.as_mut().expect("shuffle configured");
            block.shuffle(rng);
            buf.extend(block);
        }
        let (_, _, buf) = self.shuffle.as_mut().expect("shuffle configured");
        buf.pop_front().expect("refilled")
    }

    fn next_noise(&mut self) -> Result<u64, StreamError> {
        if let NoiseSchedule::Finite { values, .. } = &self.schedule {
            let v = values[self.finite_noise_next];
            self.finite_noise_next += 1;
            return Ok(v);
        }
        loop {
            let x = self
                .noise_pool
                .next_ge(self.noise_cursor)
                .ok_or_else(|| StreamError::NoiseExhausted(self.noise_label.clone()))?;
            self.noise_cursor = x + 1;
            if !self.seen.contains(x) {
                return Ok(x);
            }
        }
    }
}

impl Source for Interleave {
    fn emit(&mut self, n: u64, history: &[u64], _feedback: Option<&Feedback>) -> Result<(u64, bool), StreamError> {
        if let Some(r) = self.repeats {
            if n.is_multiple_of(r + 1) {
                return Ok((history[(n / 2) as usize - 1], true));
            }
        }
        self.fresh += 1;
        let x = if self.schedule.is_noise_step(self.fresh) { self.next_noise()? } else { self.next_main() };
        self.seen.insert(x);
        Ok((x, false))
    }
}

struct Scripted<F>(F);

impl<F: FnMut(u64) -> u64 + Send> Source for Scripted<F> {
    fn emit(&mut self, n: u64, _history: &[u64], _feedback: Option<&Feedback>) -> Result<(u64, bool), StreamError> {
        Ok(((self.0)(n), false))
    }
}

/// A reproducible enumeration with per-step labels against `target`.
pub struct Stream {
    source: Box<dyn Source>,
    target: SymbolicLanguage,
    adaptive: bool,
    dedupe: bool,
    history: Vec<u64>,
    raw_history: Vec<u64>,
    labels: Vec<StepLabel>,
    distinct: ValueSet,
}

impl Stream {
    pub fn new(spec: &StreamSpec, target: SymbolicLanguage) -> Result<Self, StreamError> {
        Ok(Self::from_source(Box::new(Interleave::new(spec)?), target, false, spec.dedupe))
    }

    /// `x_n = step(n)`.
    pub fn scripted(step: impl FnMut(u64) -> u64 + Send + 'static, target: SymbolicLanguage) -> Self {
        Self::from_source(Box::new(Scripted(step)), target, false, false)
    }

    pub fn adaptive(adversary: PhaseAdversary, target: SymbolicLanguage) -> Self {
        Self::from_source(Box::new(adversary), target, true, false)
    }

    fn from_source(source: Box<dyn Source>, target: SymbolicLanguage, adaptive: bool, dedupe: bool) -> Self {
        Self {
            source,
            target,
            adaptive,
            dedupe,
            history: Vec::new(),
            raw_history: Vec::new(),
            labels: Vec::new(),
            distinct: ValueSet::new(),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        self.adaptive
    }

    pub fn phase_switches(&self) -> &[u64] {
        self.source.switches()
    }

    pub fn target(&self) -> &SymbolicLanguage {
        &self.target
    }

    /// Emits `x_n`; adaptive streams need the generator's latest output.
    pub fn next(&mut self, feedback: Option<&Feedback>) -> Result<StepLabel, StreamError> {
        loop {
            let raw_n = self.raw_history.len() as u64 + 1;
            let (x, repeat) = self.source.emit(raw_n, &self.raw_history, feedback)?;
            self.raw_history.push(x);
            let fresh = self.distinct.insert(x);
            if self.dedupe && !fresh {
                continue;
            }
            let n = self.history.len() as u64 + 1;
            let label = StepLabel { n, x, is_noise: !self.target.contains(x), sigma: self.target.rank(x), repeat: repeat && !fresh };
            self.history.push(x);
            self.labels.push(label);
            return Ok(label);
        }
    }

    pub fn history(&self) -> &[u64] {
        &self.history
    }

    pub fn labels(&self) -> &[StepLabel] {
        &self.labels
    }

    /// Materializes `n` steps of a non-adaptive stream.
    pub fn take(&mut self, n: usize) -> Result<Vec<u64>, StreamError> {
        for _ in 0..n {
            self.next(None)?;
        }
        Ok(self.history.clone())
    }
}

/// `R(L; x_{1:n})`.
pub fn empirical_noise_rate(history: &[u64], lang: &NatSet, n: usize) -> Rational {
    assert!(n >= 1 && n <= history.len(), "prefix length {n} outside history");
    let misses = history[..n].iter().filter(|&&x| !lang.contains(x)).count();
    Rational::new(misses as i64, n as i64)
}

/// First `n*` with `R(L; x_{1:n}) <= c` for all `n*` <= n <= |history|.
pub fn noise_nstar(history: &[u64], lang: &NatSet, c: Rational) -> u64 {
    let t = Threshold::constant(c);
    let mut misses = 0;
    let mut last_bad = 0;
    for (k, &x) in history.iter().enumerate() {
        if !lang.contains(x) {
            misses += 1;
        }
        if t.exceeded(misses, k as u64 + 1) {
            last_bad = k as u64 + 1;
        }
    }
    last_bad + 1
}

/// First `n*` with `max_{t<=n} rank(x_t, L) <= M n` for all `n*` <= n <= |history|.
pub fn bounded_nstar(history: &[u64], lang: &NatSet, m: Rational) -> u64 {
    let mut max_sigma = 0u64;
    let mut last_bad = 0;
    for (k, &x) in history.iter().enumerate() {
        max_sigma = max_sigma.max(lang.rank(x));
        let n = k as i128 + 1;
        if max_sigma as i128 * *m.denom() as i128 > *m.numer() as i128 * n {
            last_bad = n as u64;
        }
    }
    last_bad + 1
}

/// True iff `R(L; x_{1:n}) <= |T ∩ [1,n]| / n` at every prefix.
pub fn schedule_bound_holds(history: &[u64], lang: &NatSet, schedule: &NoiseSchedule) -> bool {
    let mut misses = 0;
    for (k, &x) in history.iter().enumerate() {
        if !lang.contains(x) {
            misses += 1;
        }
        if misses > schedule.count_le(k as u64 + 1) {
            return false;
        }
    }
    true
}

/// Finite-horizon evidence for a stream's declared regime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub regime: Regime,
    pub steps: u64,
    pub noise_steps: u64,
    pub last_noise: Option<u64>,
    /// For constant noise: first step from which the rate stays within `c`.
    pub c_noise_nstar: Option<u64>,
    /// For vanishing noise: the rate never exceeds the schedule's share.
    pub schedule_bound: Option<bool>,
    /// For bounded streams: first step from which displacement stays within `M n`.
    pub bounded_nstar: Option<u64>,
    pub holds: bool,
}

pub fn certify(spec: &StreamSpec, history: &[u64], target: &NatSet) -> Certificate {
    let noise: Vec<u64> = history
        .iter()
        .enumerate()
        .filter(|(_, &x)| !target.contains(x))
        .map(|(k, _)| k as u64 + 1)
        .collect();
    let steps = history.len() as u64;
    let regime = spec.regime();
    let mut cert = Certificate {
        regime: regime.clone(),
        steps,
        noise_steps: noise.len() as u64,
        last_noise: noise.last().copied(),
        c_noise_nstar: None,
        schedule_bound: None,
        bounded_nstar: None,
        holds: true,
    };
    match &regime {
        Regime::Noiseless => cert.holds = noise.is_empty(),
        Regime::FiniteNoise => cert.holds = cert.last_noise.is_none_or(|l| l <= steps / 2),
        Regime::ConstantNoise { c } => {
            let ns = noise_nstar(history, target, *c);
            cert.c_noise_nstar = Some(ns);
            cert.holds = ns <= steps / 2 + 1;
        }
        Regime::VanishingNoise => {
            let ok = spec.repeats.is_some() || schedule_bound_holds(history, target, &spec.schedule);
            cert.schedule_bound = Some(ok);
            cert.holds = ok;
        }
    }
    if let Some(m) = spec.bounded {
        let ns = bounded_nstar(history, target, m);
        cert.bounded_nstar = Some(ns);
        cert.holds &= ns <= steps / 2 + 1;
    }
    cert
}
