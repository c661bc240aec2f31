//! The bundled scenario suite.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::persist::persist;
use super::run::{run, ClaimResult};
use super::scenario::Scenario;
use super::HarnessError;

pub const SEED_ENV: &str = "LIMITGEN_SEED";

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("scenarios/", $name, ".scn")))),*]
    };
}

/// `(name, source)` of every bundled scenario.
pub const BUNDLED: &[(&str, &str)] = bundled![
    "adaptive_phase_stall",
    "baseline_two_noisy",
    "bounded_element_m2",
    "bounded_m2",
    "constant_compliant",
    "constant_hard_residue",
    "constant_set_density_mod3",
    "dedupe_constant",
    "dedupe_sorting",
    "dedupe_vanishing",
    "expansion_finite_noise",
    "fallback_ceiling_witness",
    "fallback_keep_evens",
    "index_failure_noise",
    "index_failure_omission",
    "robust_compliant",
    "robust_residue",
    "set_density_mod3",
    "set_density_necessity",
    "sorting_basic",
    "sorting_fluctuation",
    "vanishing_basic",
    "vanishing_omissions_mod3",
    "vanishing_shuffled",
    "vanishing_sparse_omissions",
    "vanishing_two_noisy",
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Seed from `LIMITGEN_SEED`, if set.
pub fn seed_override() -> Result<Option<u64>, HarnessError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| HarnessError::Env(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOptions {
    /// Substring of the scenario name or claim id.
    pub filter: Option<String>,
    pub horizon: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub scenario: String,
    pub claim: String,
    pub horizon: u64,
    pub pass: bool,
    pub claims: Vec<ClaimResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn load_bundled(opts: &SuiteOptions) -> Result<Vec<Scenario>, HarnessError> {
    let mut out = Vec::new();
    for (name, src) in BUNDLED {
        let mut sc = Scenario::parse(src).map_err(|e| HarnessError::Config(format!("{name}: {e}")))?;
        if let Some(f) = &opts.filter {
            if !sc.name.contains(f.as_str()) && !sc.claim.contains(f.as_str()) {
                continue;
            }
        }
        if let Some(h) = opts.horizon {
            sc.horizon = h;
        }
        if let Some(s) = opts.seed {
            sc.set_seed(s);
        }
        out.push(sc);
    }
    Ok(out)
}

/// Runs the selected scenarios in parallel; rows are sorted by name.
/// With `out_dir`, every trace and summary is persisted there.
pub fn run_suite(opts: &SuiteOptions, out_dir: Option<&Path>) -> Result<Vec<SuiteRow>, HarnessError> {
    let scenarios = load_bundled(opts)?;
    let mut rows: Vec<SuiteRow> = scenarios
        .par_iter()
        .map(|sc| {
            let result = run(sc).and_then(|out| {
                if let Some(dir) = out_dir {
                    persist(dir, sc, &out)?;
                }
                Ok(out)
            });
            match result {
                Ok(out) => SuiteRow {
                    scenario: sc.name.clone(),
                    claim: sc.claim.clone(),
                    horizon: sc.horizon,
                    pass: out.summary.pass,
                    claims: out.summary.claims,
                    error: None,
                },
                Err(e) => SuiteRow {
                    scenario: sc.name.clone(),
                    claim: sc.claim.clone(),
                    horizon: sc.horizon,
                    pass: false,
                    claims: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    Ok(rows)
}
