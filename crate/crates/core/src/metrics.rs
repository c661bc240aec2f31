//! Trace analysis: validity tails, element and set density profiles.

use serde::Serialize;

use crate::genmeta::{Aux, Flag, Mode, Priority};
use crate::langs::{mu_exact, NatSet};
use crate::rational::{serde_opt_rat, serde_vec_rat, Rational};
use crate::valueset::ValueSet;

/// One step of a played game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub n: u64,
    pub x: u64,
    pub noise: bool,
    pub sigma: u64,
    pub repeat: bool,
    pub order: Vec<(usize, Priority)>,
    pub j: usize,
    pub indices: Vec<usize>,
    /// Closure of the chosen languages; the output set is this minus `S_n`.
    pub closure: Option<NatSet>,
    pub element: Option<u64>,
    pub flags: Vec<Flag>,
    pub aux: Aux,
    pub valid: bool,
    pub set_density: Option<Rational>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GameTrace {
    pub steps: Vec<StepRecord>,
}

/// `A_n = closure \ S_n ⊆ K`, i.e. every element of `closure \ K` has been seen.
pub fn set_output_valid(closure: Option<&NatSet>, k: &NatSet, seen: &ValueSet) -> bool {
    let Some(closure) = closure else {
        return true;
    };
    match closure.difference(k) {
        Ok(outside) => match outside.finite_elements() {
            Some(elems) => elems.iter().all(|&x| seen.contains(x)),
            None => false,
        },
        // unsupported algebra: only finite closures can be checked
        Err(_) => closure.finite_elements().is_some_and(|e| e.iter().all(|&x| k.contains(x) || seen.contains(x))),
    }
}

/// Fills `valid` and `set_density` from outputs and the target.
pub fn annotate(trace: &mut GameTrace, k: &NatSet, mode: Mode) {
    let mut seen = ValueSet::new();
    for step in &mut trace.steps {
        seen.insert(step.x);
        step.valid = match mode {
            Mode::Element => step.element.is_some_and(|w| k.contains(w) && !seen.contains(w)),
            Mode::Set => set_output_valid(step.closure.as_ref(), k, &seen),
        };
        step.set_density = match (mode, &step.closure) {
            (Mode::Set, None) => Some(Rational::from_integer(0)),
            (Mode::Set, Some(c)) => mu_exact(c, k).ok().map(|d| d.low),
            (Mode::Element, _) => None,
        };
    }
}

pub fn violations(trace: &GameTrace) -> u64 {
    trace.steps.iter().filter(|s| !s.valid).count() as u64
}

/// Largest `n` with an invalid output.
pub fn last_violation(trace: &GameTrace) -> Option<u64> {
    trace.steps.iter().rev().find(|s| !s.valid).map(|s| s.n)
}

/// Element outputs outside `K`.
pub fn hallucinations(trace: &GameTrace, k: &NatSet) -> u64 {
    trace.steps.iter().filter(|s| s.element.is_some_and(|w| !k.contains(w))).count() as u64
}

/// `m` values `H/points, 2H/points, ..., H`, deduplicated.
pub fn default_grid(horizon: u64, points: u64) -> Vec<u64> {
    if horizon == 0 {
        return Vec::new();
    }
    let mut grid: Vec<u64> = (1..=points).map(|j| (horizon * j / points).max(1)).collect();
    grid.dedup();
    grid
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElementDensity {
    pub grid: Vec<u64>,
    #[serde(with = "serde_vec_rat")]
    pub profile: Vec<Rational>,
    /// Minimum over grid points in the second half of the grid range.
    #[serde(with = "serde_opt_rat")]
    pub tail_min: Option<Rational>,
}

/// `|W ∩ {k_1..k_m}| / m` at each grid point, with `W` all element outputs.
pub fn element_density_profile(trace: &GameTrace, k: &NatSet, grid: &[u64]) -> ElementDensity {
    let w: ValueSet = trace.steps.iter().filter_map(|s| s.element).collect();
    let mut profile = Vec::with_capacity(grid.len());
    let mut hits = 0i64;
    let mut m = 0u64;
    let mut it = k.iter();
    for &g in grid {
        while m < g {
            let Some(x) = it.next() else { break };
            m += 1;
            if w.contains(x) {
                hits += 1;
            }
        }
        profile.push(Rational::new(hits, g.max(1) as i64));
    }
    let top = grid.last().copied().unwrap_or(0);
    let tail_min = grid.iter().zip(&profile).filter(|(&g, _)| 2 * g >= top).map(|(_, r)| *r).min();
    ElementDensity { grid: grid.to_vec(), profile, tail_min }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetDensity {
    /// Steps `n > horizon/2`.
    pub window: [u64; 2],
    #[serde(with = "serde_opt_rat")]
    pub tail_min: Option<Rational>,
    #[serde(with = "serde_opt_rat")]
    pub tail_max: Option<Rational>,
    /// Tail steps whose density is unknown because the algebra is unsupported.
    pub unknown: u64,
}

pub fn set_density_profile(trace: &GameTrace) -> Vec<Option<Rational>> {
    trace.steps.iter().map(|s| s.set_density).collect()
}

pub fn tail_window(horizon: u64) -> [u64; 2] {
    [horizon / 2 + 1, horizon]
}

pub fn set_density_summary(trace: &GameTrace) -> SetDensity {
    let horizon = trace.steps.len() as u64;
    let window = tail_window(horizon);
    let tail: Vec<Option<Rational>> = trace.steps.iter().filter(|s| s.n >= window[0]).map(|s| s.set_density).collect();
    let known: Vec<Rational> = tail.iter().flatten().copied().collect();
    SetDensity {
        window,
        tail_min: known.iter().min().copied(),
        tail_max: known.iter().max().copied(),
        unknown: (tail.len() - known.len()) as u64,
    }
}

/// Tail steps with exact set density at least `floor`.
pub fn set_density_hits(trace: &GameTrace, floor: Rational) -> u64 {
    let start = tail_window(trace.steps.len() as u64)[0];
    trace.steps.iter().filter(|s| s.n >= start && s.set_density.is_some_and(|d| d >= floor)).count() as u64
}

/// Number of noise samples among the first `d` distinct examples, `N_t`.
pub fn noisy_distinct(trace: &GameTrace, k: &NatSet) -> Vec<u64> {
    let mut seen = ValueSet::new();
    let mut count = 0;
    trace
        .steps
        .iter()
        .map(|s| {
            if seen.insert(s.x) && !k.contains(s.x) {
                count += 1;
            }
            count
        })
        .collect()
}
