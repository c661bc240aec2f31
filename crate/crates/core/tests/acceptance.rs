//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use limitgen::generators::GeneratorSpec;
use limitgen::genmeta::Priority;
use limitgen::harness::suite::{bundled, BUNDLED};
use limitgen::harness::{run, run_suite, Claim, RunOutput, Scenario, SuiteOptions};
use limitgen::langs::mu_exact;
use limitgen::{rat, NatSet, Rational};
use num_integer::Integer;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario(name: &str) -> Scenario {
    Scenario::parse(bundled(name).unwrap_or_else(|| panic!("missing bundled scenario {name}"))).expect("bundled scenario parses")
}

fn run_named(name: &str) -> Result<(Scenario, RunOutput), String> {
    let sc = scenario(name);
    let out = run(&sc).map_err(|e| format!("{name}: {e}"))?;
    Ok((sc, out))
}

/// Requires every listed claim of the scenario to pass.
fn claims_pass(out: &RunOutput, prefixes: &[&str]) -> Outcome {
    let mut notes = Vec::new();
    for p in prefixes {
        let c = out
            .summary
            .claims
            .iter()
            .find(|c| c.claim.starts_with(p))
            .ok_or_else(|| format!("{}: no `{p}` expectation", out.summary.scenario))?;
        if !c.pass {
            return Err(format!("{}: {} failed ({})", out.summary.scenario, c.claim, c.detail));
        }
        notes.push(format!("{}[{}]", out.summary.scenario, c.detail));
    }
    Ok(notes.join("; "))
}

// ---- criterion 1 -------------------------------------------------------

struct Fep {
    q: u64,
    residues: Vec<bool>,
    add: Vec<u64>,
    remove: Vec<u64>,
}

impl Fep {
    fn random(rng: &mut ChaCha8Rng, mods: bool) -> Self {
        let q = rng.gen_range(1..=12u64);
        let mut residues: Vec<bool> = (0..q).map(|_| rng.gen_bool(0.5)).collect();
        let r = rng.gen_range(0..q) as usize;
        residues[r] = true;
        let (mut add, mut remove) = (Vec::new(), Vec::new());
        if mods {
            for _ in 0..rng.gen_range(0..4) {
                add.push(rng.gen_range(1..60u64));
            }
            for _ in 0..rng.gen_range(0..4) {
                remove.push(rng.gen_range(1..60u64));
            }
            add.sort_unstable();
            add.dedup();
            remove.retain(|x| !add.contains(x));
            remove.sort_unstable();
            remove.dedup();
        }
        Self { q, residues, add, remove }
    }

    fn contains(&self, x: u64) -> bool {
        !self.remove.contains(&x) && (self.add.contains(&x) || self.residues[(x % self.q) as usize])
    }

    fn build(&self) -> NatSet {
        let r: Vec<u64> = (0..self.q).filter(|&r| self.residues[r as usize]).collect();
        NatSet::fep(self.q, &r, &self.add, &self.remove).expect("valid fep")
    }

    fn envelope(&self, other: &Self) -> u64 {
        self.q.lcm(&other.q) + (self.add.len() + self.remove.len()) as u64 + 2 * (other.add.len() + other.remove.len()) as u64
    }
}

fn oracle_density(a: &Fep, b: &Fep) -> Rational {
    let l = a.q.lcm(&b.q);
    let both = (0..l).filter(|&r| a.residues[(r % a.q) as usize] && b.residues[(r % b.q) as usize]).count();
    let in_b = (0..l).filter(|&r| b.residues[(r % b.q) as usize]).count();
    Rational::new(both as i64, in_b as i64)
}

fn check_pair(a: &Fep, b: &Fep, m_max: u64) -> Result<(), String> {
    let (sa, sb) = (a.build(), b.build());
    let d = mu_exact(&sa, &sb).map_err(|e| e.to_string())?;
    let want = oracle_density(a, b);
    if d.low != want || d.up != want {
        return Err(format!("mu_exact({sa}, {sb}) = [{}, {}], oracle {want}", d.low, d.up));
    }
    let bound = Rational::from_integer(a.envelope(b) as i64);
    let (mut hits, mut m, mut x) = (0i64, 0i64, 0u64);
    while m < m_max as i64 {
        x += 1;
        if !b.contains(x) {
            continue;
        }
        m += 1;
        hits += a.contains(x) as i64;
        if (Rational::from_integer(hits) - want * Rational::from_integer(m)).abs() > bound {
            return Err(format!("envelope broken for {sa} in {sb} at m={m}"));
        }
    }
    for x in 1..=m_max {
        if sa.contains(x) != a.contains(x) {
            return Err(format!("membership of {x} in {sa}"));
        }
        if a.contains(x) && sa.nth(sa.rank(x)) != Some(x) {
            return Err(format!("rank/nth round trip at {x} in {sa}"));
        }
    }
    Ok(())
}

fn crit1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for k in 0..200 {
        let a = Fep::random(&mut rng, false);
        let b = Fep::random(&mut rng, false);
        check_pair(&a, &b, 10_000).map_err(|e| format!("periodic pair {k}: {e}"))?;
    }
    for k in 0..200 {
        let a = Fep::random(&mut rng, true);
        let b = Fep::random(&mut rng, true);
        check_pair(&a, &b, 10_000).map_err(|e| format!("modified pair {k}: {e}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("200 periodic pairs within lcm/m, 200 modified pairs within (lcm + modifications)/m, m <= 10^4; {secs:.1}s"))
}

// ---- criteria 2 to 10 ---------------------------------------------------

fn crit2() -> Outcome {
    let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).filter(|n| scenario(n).claim == "vanishing-noise-generation").collect();
    if names.len() < 5 || !names.contains(&"vanishing_two_noisy") || !names.contains(&"vanishing_basic") {
        return Err(format!("scenario set {names:?}"));
    }
    let start = Instant::now();
    let mut notes = Vec::new();
    for n in &names {
        let (sc, out) = run_named(n)?;
        if sc.horizon != 100_000 || sc.generator != GeneratorSpec::VanishingNoise {
            return Err(format!("{n}: horizon {} generator {}", sc.horizon, sc.generator));
        }
        let lv = out.summary.analysis.last_violation;
        if lv.is_some_and(|l| l > sc.horizon / 2) || out.summary.analysis.steps != sc.horizon {
            return Err(format!("{n}: last violation {lv:?}"));
        }
        notes.push(format!("{n}: last_violation={}", lv.map_or("none".into(), |l| l.to_string())));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("{}; {secs:.1}s", notes.join(", ")))
}

fn crit3() -> Outcome {
    let (_, ok) = run_named("constant_compliant")?;
    let compliant = claims_pass(&ok, &["generates"])?;
    let (sc, hard) = run_named("constant_hard_residue")?;
    let claim = claims_pass(&hard, &["closure_exhaustion"])?;
    let closure: Vec<u64> = match sc.collection.closure(&[1, 2]).map_err(|e| e.to_string())? {
        limitgen::SetValue::Finite(e) => e,
        other => return Err(format!("closure {other:?}")),
    };
    if closure != [1, 2] {
        return Err(format!("closure {closure:?}"));
    }
    Ok(format!("{compliant}; {claim}"))
}

fn crit4() -> Outcome {
    let mut notes = Vec::new();
    for n in ["index_failure_noise", "index_failure_omission"] {
        let (_, out) = run_named(n)?;
        let note = claims_pass(&out, &["index_witness"])?;
        if note.matches("not inside").count() != 2 {
            return Err(format!("{n}: {note}"));
        }
        notes.push(note);
    }
    Ok(notes.join("; "))
}

fn crit5() -> Outcome {
    let (_, lower) = run_named("fallback_keep_evens")?;
    let (_, ceiling) = run_named("fallback_ceiling_witness")?;
    Ok(format!("{}; {}", claims_pass(&lower, &["set_density_often"])?, claims_pass(&ceiling, &["set_density_ceiling"])?))
}

fn crit6() -> Outcome {
    let (_, floor) = run_named("set_density_mod3")?;
    let (_, witness) = run_named("set_density_necessity")?;
    Ok(format!(
        "{}; {}",
        claims_pass(&floor, &["stabilizes", "set_density_floor"])?,
        claims_pass(&witness, &["generates", "set_density_ceiling"])?
    ))
}

fn crit7() -> Outcome {
    let (_, set) = run_named("bounded_m2")?;
    let (sc, el) = run_named("bounded_element_m2")?;
    if sc.horizon != 100_000 {
        return Err(format!("element horizon {}", sc.horizon));
    }
    let floor = rat(3, 16) - rat(1, 20);
    let tail = el.summary.analysis.density.element.as_ref().and_then(|e| e.tail_min);
    if !tail.is_some_and(|t| t >= floor) {
        return Err(format!("element tail {tail:?} below {floor}"));
    }
    Ok(format!(
        "{}; {}",
        claims_pass(&set, &["set_density_floor", "set_density_ceiling"])?,
        claims_pass(&el, &["element_density_tail", "k_monotone"])?
    ))
}

fn noise_priority(g: &GeneratorSpec) -> bool {
    match g {
        GeneratorSpec::VanishingNoise
        | GeneratorSpec::ConstantNoise { .. }
        | GeneratorSpec::VanishingSetDensity { .. }
        | GeneratorSpec::ConstantSetDensity { .. }
        | GeneratorSpec::BoundedDense { .. } => true,
        GeneratorSpec::SetToElement { base, .. } | GeneratorSpec::Dedupe { base } | GeneratorSpec::FiniteExpansion { base, .. } => noise_priority(base),
        _ => false,
    }
}

fn crit8() -> Outcome {
    let mut checked = Vec::new();
    for (name, src) in BUNDLED {
        let sc = Scenario::parse(src).map_err(|e| e.to_string())?;
        let achieves = sc.expect.iter().any(|c| matches!(c, Claim::Generates { .. }));
        if !achieves || !noise_priority(&sc.generator) {
            continue;
        }
        let out = run(&sc).map_err(|e| format!("{name}: {e}"))?;
        let stab = out.summary.certificates.stabilization.as_ref().ok_or_else(|| format!("{name}: no stabilization report"))?;
        if stab.report.n_star.is_none() || !stab.report.frozen.contains(&stab.target_index) {
            return Err(format!("{name}: p={} report {:?}", stab.target_priority, stab.report));
        }
        let mut last: BTreeMap<usize, Priority> = BTreeMap::new();
        for s in &out.trace.steps {
            for &(i, p) in &s.order {
                if last.get(&i).is_some_and(|&q| p < q) {
                    return Err(format!("{name}: priority of L{i} decreased at step {}", s.n));
                }
                last.insert(i, p);
            }
        }
        checked.push(format!("{name}(n*={})", stab.report.n_star.expect("checked")));
    }
    if checked.len() < 10 {
        return Err(format!("only {} achievability scenarios", checked.len()));
    }
    Ok(checked.join(", "))
}

fn crit9() -> Outcome {
    let (_, ok) = run_named("robust_compliant")?;
    let (_, bad) = run_named("robust_residue")?;
    Ok(format!("{}; {}", claims_pass(&ok, &["generates", "budget_invariant"])?, claims_pass(&bad, &["fails"])?))
}

fn crit10() -> Outcome {
    let mut notes = Vec::new();
    for n in ["dedupe_vanishing", "dedupe_constant", "dedupe_sorting"] {
        let (_, out) = run_named(n)?;
        notes.push(claims_pass(&out, &["dedupe_equivalent"])?);
    }
    Ok(notes.join("; "))
}

fn crit11() -> Outcome {
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    for d in &dirs {
        let rows = run_suite(&SuiteOptions::default(), Some(d.path())).map_err(|e| e.to_string())?;
        if rows.len() != BUNDLED.len() {
            return Err(format!("{} rows", rows.len()));
        }
    }
    let mut files = 0;
    for (name, _) in BUNDLED {
        for ext in ["trace.jsonl", "summary.json"] {
            let f = format!("{name}.{ext}");
            let a = std::fs::read(dirs[0].path().join(&f)).map_err(|e| format!("{f}: {e}"))?;
            let b = std::fs::read(dirs[1].path().join(&f)).map_err(|e| format!("{f}: {e}"))?;
            if a != b {
                return Err(format!("{f} differs between runs"));
            }
            files += 1;
        }
    }
    Ok(format!("{files} files byte-identical across two suite runs"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("oracle correctness", crit1),
        ("vanishing-noise generation", crit2),
        ("constant-noise dichotomy", crit3),
        ("index-based failure witnesses", crit4),
        ("set-based upper density", crit5),
        ("vanishing-noise set density", crit6),
        ("bounded-adversary density", crit7),
        ("prefix stabilization", crit8),
        ("robust version space", crit9),
        ("dedupe equivalence", crit10),
        ("determinism", crit11),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {why}", k + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
