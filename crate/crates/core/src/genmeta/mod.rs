//! Priority-ordered intersection engine shared by every generator.
//!
//! Each step updates per-language priorities, orders languages by
//! `(priority, index)`, picks a stopping index with a pluggable rule, and
//! outputs the intersection of the ordered prefix minus the seen examples
//! (and optionally its smallest fresh element).

mod timeline;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use timeline::Timeline;

use crate::collections::Collection;
use crate::langs::{mu_exact, LangError, NatSet};
use crate::rational::{fmt_rat, Rational, Threshold};
use crate::valueset::ValueSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("density rate unavailable: {0}")]
    DensityRateUnavailable(String),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
}

/// A positive priority or `Top`, which sorts after every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Priority {
    Finite(u64),
    Top,
}

impl Priority {
    pub fn plus(self, k: u64) -> Self {
        match self {
            Self::Finite(v) => Self::Finite(v + k),
            Self::Top => Self::Top,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Top => f.write_str("top"),
        }
    }
}

impl Serialize for Priority {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => s.serialize_u64(*v),
            Self::Top => s.serialize_str("top"),
        }
    }
}

impl<'de> Deserialize<'de> for Priority {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Finite(u64),
            Named(String),
        }
        match Repr::deserialize(d)? {
            Repr::Finite(v) => Ok(Self::Finite(v)),
            Repr::Named(s) if s == "top" => Ok(Self::Top),
            Repr::Named(s) => Err(serde::de::Error::custom(format!("unknown priority `{s}`"))),
        }
    }
}

/// Per-language noise thresholds `c_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Thresholds {
    Uniform(Rational),
    /// `c_i = scale / 2^(i + offset)`.
    Geometric { scale: Rational, offset: u32 },
}

impl Thresholds {
    pub fn at(&self, i: usize) -> Threshold {
        match self {
            Self::Uniform(c) => Threshold::constant(*c),
            Self::Geometric { scale, offset } => Threshold::new(*scale, i as u32 + offset),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Uniform(c) => format!("uniform({})", fmt_rat(c)),
            Self::Geometric { scale, offset } => format!("{}/2^(i+{offset})", fmt_rat(scale)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PriorityRule {
    /// `P_i = i + N_i`, where `N_i` is one past the last step at which the
    /// noise rate exceeded `c_i` (or the displacement exceeded `M m`).
    NoiseThreshold { thresholds: Thresholds, displacement: Option<Rational> },
    /// `P_i = i` while `L_i` contains every example, `Top` afterwards.
    Consistency,
    /// `P_i = i` while the current noise rate is within `c_i`, `Top` otherwise.
    ActiveByIndex { thresholds: Thresholds },
}

impl PriorityRule {
    /// Whether priorities are guaranteed non-decreasing in `n`.
    pub fn is_monotone(&self) -> bool {
        !matches!(self, Self::ActiveByIndex { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StoppingRule {
    /// Largest prefix whose intersection is infinite.
    LargestInfinite,
    /// Largest prefix whose intersection has lower density at least `rho`
    /// inside every member of the prefix.
    DenseInAll(Rational),
    /// Common index-ordered prefix of the current and previous candidate
    /// lists, cut at the first finite intersection; empty at `n = 1`.
    FallbackCommonPrefix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Element,
    Set,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// No non-empty prefix qualified; the output is `Empty`.
    EmptyPrefix,
    /// The output set had no element outside `S_n ∪ W_{n-1}`.
    ClosureExhausted,
    /// Version space was empty; the element is a placeholder.
    ClosureBot,
    /// The dense stopping rule cut the prefix before the infinite chain ended.
    DensityTruncated,
    /// The input repeated an earlier example.
    Repeat,
}

/// Output set of one step: the closure of some languages minus `S_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymbolicSet {
    Empty,
    IntersectionMinus { indices: Vec<usize>, closure: NatSet },
}

impl SymbolicSet {
    pub fn closure(&self) -> Option<&NatSet> {
        match self {
            Self::Empty => None,
            Self::IntersectionMinus { closure, .. } => Some(closure),
        }
    }

    pub fn indices(&self) -> &[usize] {
        match self {
            Self::Empty => &[],
            Self::IntersectionMinus { indices, .. } => indices,
        }
    }

    /// Trace rendering; finite closures are listed explicitly.
    pub fn describe(&self) -> String {
        match self {
            Self::Empty => "empty".into(),
            Self::IntersectionMinus { indices, closure } => {
                let idx: Vec<String> = indices.iter().map(|i| i.to_string()).collect();
                format!("cl[{}] = {} minus seen", idx.join(","), closure)
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub distinct: u64,
    pub budget: u64,
    pub d_star: u64,
    pub version_space: Vec<usize>,
}

/// Generator-specific per-step diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Aux {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<Budget>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenStep {
    pub n: u64,
    /// Ordered prefix `(index, priority)` up to `J_n`.
    pub order: Vec<(usize, Priority)>,
    pub j: usize,
    pub set: SymbolicSet,
    pub element: Option<u64>,
    pub flags: Vec<Flag>,
    pub aux: Aux,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StabilizationReport {
    pub p: u64,
    pub n_star: Option<u64>,
    pub frozen: Vec<usize>,
}

pub trait Generator: Send {
    fn name(&self) -> String;
    fn mode(&self) -> Mode;
    fn collection(&self) -> &Arc<Collection>;
    fn step(&mut self, x: u64) -> Result<GenStep, GenError>;

    /// Prefix stabilization observed so far; `None` for generators without priorities.
    fn stabilization_report(&self, _p: u64) -> Option<StabilizationReport> {
        None
    }

    /// Current priority of `L_i`, if it has entered.
    fn priority(&self, _i: usize) -> Option<Priority> {
        None
    }
}

#[derive(Clone, Debug)]
struct LangState {
    threshold: Threshold,
    misses: u64,
    max_sigma: u64,
    last_violation: u64,
    violating: bool,
    priority: Priority,
}

/// Partial intersections along the current ordering, reused while the
/// ordered prefix is unchanged.
#[derive(Default)]
struct Chain {
    order: Vec<usize>,
    sets: Vec<NatSet>,
    dense: Vec<Option<bool>>,
}

impl Chain {
    fn sync(&mut self, order: &[usize]) {
        let common = self.order.iter().zip(order).take_while(|(a, b)| a == b).count();
        self.order.truncate(common);
        self.sets.truncate(common);
        self.dense.truncate(common);
        self.order.extend_from_slice(&order[common..]);
    }

    fn set(&mut self, collection: &Collection, j: usize) -> Result<&NatSet, LangError> {
        while self.sets.len() <= j {
            let k = self.sets.len();
            let lang = collection.language_at(self.order[k]).set();
            let next = match self.sets.last() {
                None => lang.clone(),
                Some(prev) => prev.intersect(lang)?,
            };
            self.sets.push(next);
            self.dense.push(None);
        }
        Ok(&self.sets[j])
    }
}

pub struct EngineConfig {
    pub name: String,
    pub priority: PriorityRule,
    pub stopping: StoppingRule,
    pub mode: Mode,
}

pub struct Engine {
    cfg: EngineConfig,
    collection: Arc<Collection>,
    states: Vec<LangState>,
    timelines: Vec<Timeline>,
    order: Vec<usize>,
    history: Vec<u64>,
    seen: ValueSet,
    used: ValueSet,
    chain: Chain,
    cursors: HashMap<NatSet, u64>,
    prev_candidates: Vec<usize>,
}

impl Engine {
    pub fn new(collection: Arc<Collection>, cfg: EngineConfig) -> Result<Self, GenError> {
        if collection.is_empty() {
            return Err(GenError::InvalidParameter("collection is empty".into()));
        }
        if let StoppingRule::DenseInAll(rho) = cfg.stopping {
            if rho <= Rational::from_integer(0) || rho > Rational::from_integer(1) {
                return Err(GenError::InvalidParameter(format!("rho = {} outside (0, 1]", fmt_rat(&rho))));
            }
        }
        Ok(Self {
            cfg,
            collection,
            states: Vec::new(),
            timelines: Vec::new(),
            order: Vec::new(),
            history: Vec::new(),
            seen: ValueSet::new(),
            used: ValueSet::new(),
            chain: Chain::default(),
            cursors: HashMap::new(),
            prev_candidates: Vec::new(),
        })
    }

    pub fn steps(&self) -> u64 {
        self.history.len() as u64
    }

    /// `N_i^{(n)}` as maintained incrementally (one past the last violation).
    pub fn n_value(&self, i: usize) -> Option<u64> {
        self.states.get(i - 1).map(|s| s.last_violation + 1)
    }

    pub fn timeline(&self, i: usize) -> Option<&Timeline> {
        self.timelines.get(i - 1)
    }

    fn threshold_for(&self, i: usize) -> Threshold {
        match &self.cfg.priority {
            PriorityRule::NoiseThreshold { thresholds, .. } | PriorityRule::ActiveByIndex { thresholds } => thresholds.at(i),
            PriorityRule::Consistency => Threshold::constant(Rational::from_integer(0)),
        }
    }

    fn observe(&self, state: &mut LangState, i: usize, x: u64, m: u64) {
        let lang = self.collection.language_at(i);
        if !lang.contains(x) {
            state.misses += 1;
        }
        let mut violated = state.threshold.exceeded(state.misses, m);
        if let PriorityRule::NoiseThreshold { displacement: Some(bound), .. } = &self.cfg.priority {
            state.max_sigma = state.max_sigma.max(lang.rank(x));
            let lhs = state.max_sigma as i128 * *bound.denom() as i128;
            violated |= lhs > *bound.numer() as i128 * m as i128;
        }
        state.violating = violated;
        if violated {
            state.last_violation = m;
        }
    }

    fn priority_of(&self, state: &LangState, i: usize) -> Priority {
        match &self.cfg.priority {
            PriorityRule::NoiseThreshold { .. } => Priority::Finite(i as u64 + state.last_violation + 1),
            PriorityRule::Consistency if state.misses == 0 => Priority::Finite(i as u64),
            PriorityRule::Consistency => Priority::Top,
            PriorityRule::ActiveByIndex { .. } if state.violating => Priority::Top,
            PriorityRule::ActiveByIndex { .. } => Priority::Finite(i as u64),
        }
    }

    fn update_priorities(&mut self, x: u64) {
        let n = self.history.len() as u64;
        let mut states = std::mem::take(&mut self.states);
        for (k, state) in states.iter_mut().enumerate() {
            self.observe(state, k + 1, x, n);
        }
        if (n as usize) <= self.collection.len() {
            let i = n as usize;
            let mut state = LangState {
                threshold: self.threshold_for(i),
                misses: 0,
                max_sigma: 0,
                last_violation: 0,
                violating: false,
                priority: Priority::Top,
            };
            for (m, &y) in self.history.iter().enumerate() {
                self.observe(&mut state, i, y, m as u64 + 1);
            }
            states.push(state);
            self.timelines.push(Timeline::default());
            self.order.push(i);
        }
        let monotone = self.cfg.priority.is_monotone();
        for (k, state) in states.iter_mut().enumerate() {
            let p = self.priority_of(state, k + 1);
            if monotone && (k as u64) + 1 < n {
                assert!(p >= state.priority, "priority of L_{} decreased at step {n}", k + 1);
            }
            assert!(p >= Priority::Finite(k as u64 + 1), "priority of L_{} below its index", k + 1);
            state.priority = p;
            self.timelines[k].push(n, p);
        }
        self.states = states;
        // the order is nearly sorted between steps
        let key = |i: usize, states: &[LangState]| (states[i - 1].priority, i);
        for a in 1..self.order.len() {
            let mut b = a;
            while b > 0 && key(self.order[b - 1], &self.states) > key(self.order[b], &self.states) {
                self.order.swap(b - 1, b);
                b -= 1;
            }
        }
    }

    fn stopping_index(&mut self, candidates: &[usize]) -> Result<(usize, Vec<Flag>), GenError> {
        self.chain.sync(candidates);
        let mut flags = Vec::new();
        let infinite_len = |chain: &mut Chain, collection: &Collection, limit: usize| -> Result<usize, LangError> {
            let mut j = 0;
            while j < limit && chain.set(collection, j)?.is_infinite() {
                j += 1;
            }
            Ok(j)
        };
        let j = match &self.cfg.stopping {
            StoppingRule::LargestInfinite => infinite_len(&mut self.chain, &self.collection, candidates.len())?,
            StoppingRule::FallbackCommonPrefix => {
                let lcp = if self.history.len() == 1 {
                    0
                } else {
                    self.prev_candidates.iter().zip(candidates).take_while(|(a, b)| a == b).count()
                };
                infinite_len(&mut self.chain, &self.collection, lcp)?
            }
            StoppingRule::DenseInAll(rho) => {
                let chain_len = infinite_len(&mut self.chain, &self.collection, candidates.len())?;
                let mut best = 0;
                for jbar in 1..=chain_len {
                    if self.chain.dense[jbar - 1].is_none() {
                        let inter = self.chain.sets[jbar - 1].clone();
                        let mut ok = true;
                        for &i in &self.chain.order[..jbar] {
                            if mu_exact(&inter, self.collection.language_at(i).set())?.low < *rho {
                                ok = false;
                                break;
                            }
                        }
                        self.chain.dense[jbar - 1] = Some(ok);
                    }
                    if self.chain.dense[jbar - 1] == Some(true) {
                        best = jbar;
                    }
                }
                if best < chain_len {
                    flags.push(Flag::DensityTruncated);
                }
                best
            }
        };
        if matches!(self.cfg.stopping, StoppingRule::FallbackCommonPrefix) {
            self.prev_candidates = candidates.to_vec();
        }
        Ok((j, flags))
    }

    /// Smallest element of `closure` outside `S_n ∪ W_{n-1}`.
    fn fresh_element(&mut self, closure: &NatSet) -> Option<u64> {
        let cursor = self.cursors.entry(closure.clone()).or_insert(1);
        let mut x = closure.next_ge(*cursor)?;
        while self.used.contains(x) {
            x = closure.next_ge(x + 1)?;
        }
        *cursor = x;
        Some(x)
    }
}

impl Generator for Engine {
    fn name(&self) -> String {
        self.cfg.name.clone()
    }

    fn mode(&self) -> Mode {
        self.cfg.mode
    }

    fn collection(&self) -> &Arc<Collection> {
        &self.collection
    }

    fn step(&mut self, x: u64) -> Result<GenStep, GenError> {
        let mut flags = Vec::new();
        if !self.seen.insert(x) {
            flags.push(Flag::Repeat);
        }
        self.used.insert(x);
        self.history.push(x);
        let n = self.history.len() as u64;
        self.update_priorities(x);
        let candidates: Vec<usize> = self.order.iter().copied().take_while(|&i| self.states[i - 1].priority.is_finite()).collect();
        let (j, stop_flags) = self.stopping_index(&candidates)?;
        flags.extend(stop_flags);
        let order: Vec<(usize, Priority)> = candidates[..j].iter().map(|&i| (i, self.states[i - 1].priority)).collect();
        let set = if j == 0 {
            flags.push(Flag::EmptyPrefix);
            SymbolicSet::Empty
        } else {
            let mut indices = candidates[..j].to_vec();
            indices.sort_unstable();
            SymbolicSet::IntersectionMinus { indices, closure: self.chain.sets[j - 1].clone() }
        };
        let element = match (self.cfg.mode, set.closure()) {
            (Mode::Element, Some(closure)) => {
                let closure = closure.clone();
                let w = self.fresh_element(&closure);
                match w {
                    Some(w) => {
                        self.used.insert(w);
                    }
                    None => flags.push(Flag::ClosureExhausted),
                }
                w
            }
            _ => None,
        };
        Ok(GenStep { n, order, j, set, element, flags, aux: Aux::default() })
    }

    fn stabilization_report(&self, p: u64) -> Option<StabilizationReport> {
        let horizon = self.steps();
        let mut frozen = Vec::new();
        let mut last = 0;
        for (k, t) in self.timelines.iter().enumerate().take(p as usize) {
            if t.current().is_some_and(|q| q <= Priority::Finite(p)) {
                frozen.push(k + 1);
            }
            if let Some(s) = t.last_relevant_change(p) {
                last = last.max(s);
            }
        }
        let n_star = if last == horizon && horizon > 1 { None } else { Some(last.max(1)) };
        Some(StabilizationReport { p, n_star, frozen })
    }

    fn priority(&self, i: usize) -> Option<Priority> {
        self.states.get(i.checked_sub(1)?).map(|s| s.priority)
    }
}
