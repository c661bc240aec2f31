//! The generation game: stream and generator in lockstep, then analysis
//! and evaluation of the expected outcomes.

use serde::Serialize;

use super::scenario::{Claim, Scenario, Start, StreamDef, WitnessRegime};
use super::HarnessError;
use crate::genmeta::{Flag, GenStep, Generator, Mode, Priority, StabilizationReport};
use crate::langs::NatSet;
use crate::metrics::{
    annotate, default_grid, element_density_profile, hallucinations, last_violation, noisy_distinct, set_density_hits, set_density_summary,
    tail_window, violations, ElementDensity, GameTrace, SetDensity, StepRecord,
};
use crate::rational::{fmt_rat, Rational, Threshold};
use crate::streams::{certify, noise_nstar, Certificate, Feedback, PhaseAdversary, Stream, StreamError};

pub const SUMMARY_SCHEMA: &str = "limitgen-summary/1";
pub const GRID_POINTS: u64 = 32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityReport {
    pub element: Option<ElementDensity>,
    pub set: Option<SetDensity>,
}

/// Everything recomputable from a persisted trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Analysis {
    pub steps: u64,
    /// First step from which every output is valid; `None` when the last step is invalid.
    pub n_star: Option<u64>,
    pub violations: u64,
    pub last_violation: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hallucinations: Option<u64>,
    pub density: DensityReport,
}

/// Fills validity and densities into `trace` and summarizes it.
pub fn analyze(trace: &mut GameTrace, target: &NatSet, mode: Mode) -> Analysis {
    annotate(trace, target, mode);
    let steps = trace.steps.len() as u64;
    let last = last_violation(trace);
    let n_star = match last {
        None => Some(1),
        Some(l) if l < steps => Some(l + 1),
        Some(_) => None,
    };
    let density = match mode {
        Mode::Element => DensityReport { element: Some(element_density_profile(trace, target, &default_grid(steps, GRID_POINTS))), set: None },
        Mode::Set => DensityReport { element: None, set: Some(set_density_summary(trace)) },
    };
    Analysis {
        steps,
        n_star,
        violations: violations(trace),
        last_violation: last,
        hallucinations: (mode == Mode::Element).then(|| hallucinations(trace, target)),
        density,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stabilization {
    pub target_index: usize,
    pub target_priority: String,
    #[serde(flatten)]
    pub report: StabilizationReport,
    pub contains_target: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificates {
    pub stream: Option<Certificate>,
    pub stabilization: Option<Stabilization>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_switches: Option<u64>,
    /// Step at which an adaptive stream stalled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stalled: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimResult {
    pub claim: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub scenario: String,
    pub claim: String,
    pub seed: u64,
    pub horizon: u64,
    pub generator: String,
    pub mode: Mode,
    pub target: String,
    #[serde(flatten)]
    pub analysis: Analysis,
    pub certificates: Certificates,
    pub claims: Vec<ClaimResult>,
    pub pass: bool,
}

pub struct RunOutput {
    pub trace: GameTrace,
    pub summary: Summary,
    /// Stream values, including steps the generator never saw because the stream stalled.
    pub history: Vec<u64>,
}

pub(crate) fn make_stream(scenario: &Scenario, dedupe: Option<bool>) -> Result<Stream, HarnessError> {
    Ok(match &scenario.stream {
        StreamDef::Spec(spec) => {
            let mut spec = spec.clone();
            if let Some(d) = dedupe {
                spec.dedupe = d;
            }
            Stream::new(&spec, scenario.target.clone())?
        }
        StreamDef::Adaptive { l, lp, eps, stall } => {
            Stream::adaptive(PhaseAdversary::new(l.clone(), lp.clone(), *eps, *stall)?, scenario.target.clone())
        }
    })
}

fn record(step: GenStep, x: u64, label: &crate::streams::StepLabel) -> StepRecord {
    StepRecord {
        n: step.n,
        x,
        noise: label.is_noise,
        sigma: label.sigma,
        repeat: label.repeat,
        order: step.order,
        j: step.j,
        indices: step.set.indices().to_vec(),
        closure: step.set.closure().cloned(),
        element: step.element,
        flags: step.flags,
        aux: step.aux,
        valid: false,
        set_density: None,
    }
}

struct Played {
    trace: GameTrace,
    history: Vec<u64>,
    stalled: Option<u64>,
    switches: Vec<u64>,
    generator: Box<dyn Generator>,
}

fn play(scenario: &Scenario, generator: Box<dyn Generator>, mut stream: Stream, horizon: u64) -> Result<Played, HarnessError> {
    let mut generator = generator;
    let mode = generator.mode();
    let mut trace = GameTrace::default();
    let mut feedback: Option<Feedback> = None;
    let mut outputs: Vec<u64> = Vec::new();
    let mut stalled = None;
    for _ in 0..horizon {
        let label = match stream.next(feedback.as_ref()) {
            Ok(l) => l,
            Err(StreamError::PhaseStalled(n)) => {
                stalled = Some(n);
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let step = generator.step(label.x)?;
        if stream.is_adaptive() {
            feedback = Some(match mode {
                Mode::Set => Feedback::Set(step.set.closure().cloned().unwrap_or_else(NatSet::empty)),
                Mode::Element => {
                    outputs.extend(step.element);
                    Feedback::Elements(outputs.clone())
                }
            });
        }
        trace.steps.push(record(step, label.x, &label));
    }
    let _ = scenario;
    Ok(Played { trace, history: stream.history().to_vec(), stalled, switches: stream.phase_switches().to_vec(), generator })
}

fn stabilization(generator: &dyn Generator, target: &NatSet) -> Option<Stabilization> {
    let i = generator.collection().find(target)?;
    let p = generator.priority(i)?;
    let Priority::Finite(pv) = p else {
        return Some(Stabilization {
            target_index: i,
            target_priority: p.to_string(),
            report: StabilizationReport { p: 0, n_star: None, frozen: Vec::new() },
            contains_target: false,
        });
    };
    let report = generator.stabilization_report(pv)?;
    let contains_target = report.n_star.is_some() && report.frozen.contains(&i);
    Some(Stabilization { target_index: i, target_priority: p.to_string(), report, contains_target })
}

pub fn run(scenario: &Scenario) -> Result<RunOutput, HarnessError> {
    let generator = scenario.generator.build(scenario.collection.clone())?;
    let mode = generator.mode();
    let stream = make_stream(scenario, None)?;
    let mut played = play(scenario, generator, stream, scenario.horizon)?;
    let target = scenario.target.set();
    let analysis = analyze(&mut played.trace, target, mode);
    let certificates = Certificates {
        stream: match &scenario.stream {
            StreamDef::Spec(spec) => Some(certify(spec, &played.history, target)),
            StreamDef::Adaptive { .. } => None,
        },
        stabilization: stabilization(played.generator.as_ref(), target),
        phase_switches: matches!(scenario.stream, StreamDef::Adaptive { .. }).then_some(played.switches.len() as u64),
        stalled: played.stalled,
    };
    let ctx = Ctx { scenario, played: &played, analysis: &analysis, certificates: &certificates };
    let claims: Vec<ClaimResult> = scenario
        .expect
        .iter()
        .map(|c| {
            let (pass, detail) = match ctx.evaluate(c) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            ClaimResult { claim: c.describe(), pass, detail }
        })
        .collect();
    let pass = claims.iter().all(|c| c.pass);
    let summary = Summary {
        schema: SUMMARY_SCHEMA,
        scenario: scenario.name.clone(),
        claim: scenario.claim.clone(),
        seed: scenario.seed,
        horizon: scenario.horizon,
        generator: played.generator.name(),
        mode,
        target: target.to_string(),
        analysis,
        certificates,
        claims,
        pass,
    };
    let Played { trace, history, .. } = played;
    Ok(RunOutput { trace, summary, history })
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    played: &'a Played,
    analysis: &'a Analysis,
    certificates: &'a Certificates,
}

fn opt(v: Option<u64>) -> String {
    v.map_or_else(|| "none".into(), |v| v.to_string())
}

fn opt_rat(v: Option<Rational>) -> String {
    v.map_or_else(|| "none".into(), |v| fmt_rat(&v))
}

impl Ctx<'_> {
    fn steps(&self) -> &[StepRecord] {
        &self.played.trace.steps
    }

    fn horizon(&self) -> u64 {
        self.scenario.horizon
    }

    fn complete(&self) -> bool {
        self.analysis.steps == self.horizon()
    }

    fn start(&self, s: Start) -> Result<u64, String> {
        match s {
            Start::Tail => Ok(tail_window(self.analysis.steps)[0]),
            Start::Step(n) => Ok(n),
            Start::Stabilization => match &self.certificates.stabilization {
                Some(Stabilization { report: StabilizationReport { n_star: Some(n), .. }, contains_target: true, .. }) => Ok(*n),
                _ => Err("no stabilization step for the target".into()),
            },
        }
    }

    fn evaluate(&self, claim: &Claim) -> Result<(bool, String), HarnessError> {
        let a = self.analysis;
        Ok(match claim {
            Claim::Generates { max_last_violation } => {
                let bound = max_last_violation.unwrap_or(self.horizon() / 2);
                let ok = self.complete() && a.last_violation.is_none_or(|l| l <= bound);
                (ok, format!("last_violation={} bound={bound} steps={}", opt(a.last_violation), a.steps))
            }
            Claim::Fails { min_violations } => {
                let late = a.last_violation.is_some_and(|l| l > a.steps / 2);
                (a.violations >= *min_violations && late, format!("violations={} last_violation={}", a.violations, opt(a.last_violation)))
            }
            Claim::SetDensityFloor { at_least, from } => self.density_window(*from, |d| d >= *at_least, "min"),
            Claim::SetDensityCeiling { at_most, strict, from } => {
                let strict = *strict;
                self.density_window(*from, move |d| if strict { d < *at_most } else { d <= *at_most }, "max")
            }
            Claim::SetDensityOften { at_least, min_steps } => {
                let hits = set_density_hits(&self.played.trace, *at_least);
                (hits >= *min_steps, format!("tail steps with density >= {}: {hits}", fmt_rat(at_least)))
            }
            Claim::ElementDensityTail { at_least } => {
                let tail = a.density.element.as_ref().and_then(|e| e.tail_min);
                (self.complete() && tail.is_some_and(|t| t >= *at_least), format!("tail_min={}", opt_rat(tail)))
            }
            Claim::Stabilizes => match &self.certificates.stabilization {
                Some(s) => (s.contains_target, format!("p={} n_star={} frozen={:?}", s.target_priority, opt(s.report.n_star), s.report.frozen)),
                None => (false, "generator exposes no priority for the target".into()),
            },
            Claim::ClosureExhaustion { capacity, min_violations, c } => self.closure_exhaustion(*capacity, *min_violations, *c)?,
            Claim::IndexWitness { within, regime, budget } => self.index_witness(*within, *regime, *budget)?,
            Claim::BudgetInvariant => self.budget_invariant(),
            Claim::PrefixToggles { index, at_least } => {
                let mut toggles = 0u64;
                let mut prev = false;
                for s in self.steps() {
                    let inside = s.indices.contains(index);
                    if inside != prev {
                        toggles += 1;
                    }
                    prev = inside;
                }
                (toggles >= *at_least, format!("membership changes of index {index}: {toggles}"))
            }
            Claim::DedupeEquivalent => self.dedupe_equivalent()?,
            Claim::KMonotone => {
                let ks: Vec<u64> = self.steps().iter().filter_map(|s| s.aux.k).collect();
                let monotone = ks.windows(2).all(|w| w[0] <= w[1]);
                let first = ks.first().copied();
                let last = ks.last().copied();
                let grows = matches!((first, last), (Some(f), Some(l)) if l > f);
                (ks.len() == self.steps().len() && monotone && grows, format!("k from {} to {}", opt(first), opt(last)))
            }
            Claim::Stalls => (self.played.stalled.is_some(), format!("stalled at {}", opt(self.played.stalled))),
        })
    }

    fn density_window(&self, from: Start, ok: impl Fn(Rational) -> bool, agg: &str) -> (bool, String) {
        let start = match self.start(from) {
            Ok(s) => s,
            Err(e) => return (false, e),
        };
        let window: Vec<&StepRecord> = self.steps().iter().filter(|s| s.n >= start).collect();
        let known: Vec<Rational> = window.iter().filter_map(|s| s.set_density).collect();
        let unknown = window.len() - known.len();
        let bad = known.iter().filter(|&&d| !ok(d)).count();
        let extreme = if agg == "min" { known.iter().min() } else { known.iter().max() };
        let pass = self.complete() && !window.is_empty() && unknown == 0 && bad == 0 && start <= self.analysis.steps / 2 + 1;
        (pass, format!("from step {start}: {agg}={} over {} steps, unknown={unknown}", opt_rat(extreme.copied()), window.len()))
    }

    fn closure_exhaustion(&self, capacity: u64, min_violations: u64, c: Rational) -> Result<(bool, String), HarnessError> {
        let col = &self.scenario.collection;
        let all: Vec<usize> = (1..=col.len()).collect();
        let closure = match col.closure(&all)? {
            crate::langs::SetValue::Finite(e) => e,
            crate::langs::SetValue::Infinite(_) => return Ok((false, "closure of the collection is infinite".into())),
        };
        let history = &self.played.history;
        let half = history.len() as u64 / 2 + 1;
        let compliant = col.languages().all(|(_, l)| noise_nstar(history, l.set(), c) <= half);
        let common_valid = self.steps().iter().filter(|s| s.element.is_some_and(|w| closure.contains(&w))).count() as u64;
        let mut worst = (0u64, 0usize);
        for (i, l) in col.languages() {
            let mut t = self.played.trace.clone();
            annotate(&mut t, l.set(), Mode::Element);
            let v = violations(&t);
            if v > worst.0 {
                worst = (v, i);
            }
        }
        let pass = compliant && closure.len() as u64 == capacity && common_valid <= capacity && worst.0 >= min_violations;
        Ok((
            pass,
            format!(
                "closure={closure:?} outputs inside closure={common_valid} worst target L{} violations={} all members {}-noise targets: {compliant}",
                worst.1,
                worst.0,
                fmt_rat(&c)
            ),
        ))
    }

    fn index_witness(&self, within: u64, regime: WitnessRegime, budget: u64) -> Result<(bool, String), HarnessError> {
        let col = &self.scenario.collection;
        let StreamDef::Spec(spec) = &self.scenario.stream else {
            return Ok((false, "index witnesses need a declarative stream".into()));
        };
        let kept = spec.kept()?;
        let history = &self.played.history;
        let scheduled_noise = spec.schedule.count_le(history.len() as u64);
        // symbolic admissibility of L_j as the declared target of the whole stream
        let mut admissible = Vec::new();
        for (_, l) in col.languages() {
            let extra = kept.difference(l.set())?;
            let missing = l.difference(&kept)?;
            let ok = match regime {
                WitnessRegime::Noise => {
                    missing.is_finite() && missing.finite_elements().is_some_and(|m| m.is_empty())
                        && extra.finite_elements().is_some_and(|e| e.len() as u64 + scheduled_noise <= budget)
                }
                WitnessRegime::Omission => {
                    extra.finite_elements().is_some_and(|e| e.is_empty())
                        && scheduled_noise == 0
                        && missing.finite_elements().is_some_and(|m| m.len() as u64 <= budget)
                }
            };
            admissible.push(ok);
        }
        let prefix = &history[..(within as usize).min(history.len())];
        let consistent = |lj: &NatSet| {
            let misses = prefix.iter().filter(|&&x| !lj.contains(x)).count() as u64;
            match regime {
                WitnessRegime::Noise => misses <= budget,
                WitnessRegime::Omission => misses == 0,
            }
        };
        let mut all_found = prefix.len() as u64 == within;
        let mut parts = Vec::new();
        for (i, li) in col.languages() {
            let mut found = None;
            for (j, lj) in col.languages() {
                if j == i || !admissible[j - 1] || !consistent(lj.set()) {
                    continue;
                }
                if let Some(w) = li.difference(lj.set())?.next_ge(1) {
                    found = Some((j, w));
                    break;
                }
            }
            match found {
                Some((j, w)) => parts.push(format!("L{i} not inside K=L{j}: {w}")),
                None => {
                    all_found = false;
                    parts.push(format!("L{i}: no witness"));
                }
            }
        }
        let found_at = if all_found { within } else { u64::MAX };
        Ok((found_at <= within, parts.join("; ")))
    }

    fn budget_invariant(&self) -> (bool, String) {
        let noisy = noisy_distinct(&self.played.trace, self.scenario.target.set());
        let budgets: Vec<Option<u64>> = self.steps().iter().map(|s| s.aux.budget.as_ref().map(|b| b.budget)).collect();
        if budgets.iter().any(Option::is_none) || budgets.is_empty() {
            return (false, "generator records no budget".into());
        }
        let mut t_rec = budgets.len() as u64 + 1;
        for k in (0..budgets.len()).rev() {
            if noisy[k] > budgets[k].expect("checked") {
                break;
            }
            t_rec = k as u64 + 1;
        }
        let max_slack = (t_rec as usize..=budgets.len()).filter_map(|t| t.checked_sub(1)).map(|k| budgets[k].unwrap() as i64 - noisy[k] as i64).min();
        (
            self.complete() && t_rec <= self.analysis.steps / 2 + 1,
            format!("N_t <= n_t for all t >= {t_rec}; minimum slack {}", max_slack.map_or("none".into(), |s| s.to_string())),
        )
    }

    fn dedupe_equivalent(&self) -> Result<(bool, String), HarnessError> {
        let crate::generators::GeneratorSpec::Dedupe { base } = &self.scenario.generator else {
            return Ok((false, "generator is not a dedupe wrapper".into()));
        };
        let fresh: Vec<&StepRecord> = self.steps().iter().filter(|s| !s.flags.contains(&Flag::Repeat)).collect();
        let repeats = self.steps().len() - fresh.len();
        let base_gen = base.build(self.scenario.collection.clone())?;
        let stream = make_stream(self.scenario, Some(true))?;
        let other = play(self.scenario, base_gen, stream, fresh.len() as u64)?;
        let same_len = other.trace.steps.len() == fresh.len();
        let mismatch = fresh.iter().zip(&other.trace.steps).position(|(a, b)| {
            (a.x, &a.order, a.j, &a.indices, &a.closure, a.element) != (b.x, &b.order, b.j, &b.indices, &b.closure, b.element)
        });
        let pass = same_len && mismatch.is_none() && repeats > 0;
        Ok((
            pass,
            match mismatch {
                Some(k) => format!("first mismatch at unique step {}", k + 1),
                None => format!("{} unique steps identical, {repeats} repeated inputs", fresh.len()),
            },
        ))
    }
}

/// Fraction test used by plots: `misses/n` compared exactly.
pub fn exceeds(misses: u64, n: u64, c: Rational) -> bool {
    Threshold::constant(c).exceeded(misses, n)
}
