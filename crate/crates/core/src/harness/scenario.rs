//! Scenario schema: languages, collection, target, stream, generator and
//! expected outcomes, built from a parsed config.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::config::{err, parse, Call, ConfigError, Value};
use crate::collections::{families, Collection, ExpansionMode};
use crate::genmeta::Thresholds;
use crate::generators::GeneratorSpec;
use crate::langs::{BlockSpec, NatSet, Residues, Shape, SpecialKind, SymbolicLanguage};
use crate::rational::Rational;
use crate::streams::{NoiseSchedule, Omissions, StreamSpec};

pub const SCENARIO_SCHEMA: &str = "limitgen-scenario/1";

#[derive(Clone, Debug)]
pub enum StreamDef {
    Spec(StreamSpec),
    /// Phase adversary switching between enumerating `lp` and `l`.
    Adaptive { l: SymbolicLanguage, lp: SymbolicLanguage, eps: Rational, stall: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessRegime {
    Noise,
    Omission,
}

/// Where a density claim starts counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    /// After the stabilization step of the target's priority.
    Stabilization,
    /// The second half of the horizon.
    Tail,
    Step(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Claim {
    /// No invalid output after `max_last_violation` (default: half the horizon).
    Generates { max_last_violation: Option<u64> },
    /// At least this many invalid outputs, some in the second half.
    Fails { min_violations: u64 },
    SetDensityFloor { at_least: Rational, from: Start },
    SetDensityCeiling { at_most: Rational, strict: bool, from: Start },
    SetDensityOften { at_least: Rational, min_steps: u64 },
    ElementDensityTail { at_least: Rational },
    Stabilizes,
    /// Every collection member is a `c`-noise target, their common closure
    /// has `capacity` elements, outputs valid for all members never exceed
    /// that, and some member sees `min_violations` invalid outputs.
    ClosureExhaustion { capacity: u64, min_violations: u64, c: Rational },
    /// Each index has an admissible alternative target it is not contained in.
    IndexWitness { within: u64, regime: WitnessRegime, budget: u64 },
    BudgetInvariant,
    PrefixToggles { index: usize, at_least: u64 },
    DedupeEquivalent,
    KMonotone,
    Stalls,
}

impl Claim {
    pub fn describe(&self) -> String {
        use crate::rational::fmt_rat;
        let from = |f: &Start| match f {
            Start::Stabilization => "stabilization".to_string(),
            Start::Tail => "tail".to_string(),
            Start::Step(n) => n.to_string(),
        };
        match self {
            Self::Generates { max_last_violation: Some(m) } => format!("generates(max_last_violation={m})"),
            Self::Generates { max_last_violation: None } => "generates".into(),
            Self::Fails { min_violations } => format!("fails(min_violations={min_violations})"),
            Self::SetDensityFloor { at_least, from: f } => format!("set_density_floor(at_least={}, from={})", fmt_rat(at_least), from(f)),
            Self::SetDensityCeiling { at_most, strict, from: f } => {
                format!("set_density_ceiling(at_most={}, strict={strict}, from={})", fmt_rat(at_most), from(f))
            }
            Self::SetDensityOften { at_least, min_steps } => format!("set_density_often(at_least={}, min_steps={min_steps})", fmt_rat(at_least)),
            Self::ElementDensityTail { at_least } => format!("element_density_tail(at_least={})", fmt_rat(at_least)),
            Self::Stabilizes => "stabilizes".into(),
            Self::ClosureExhaustion { capacity, min_violations, c } => {
                format!("closure_exhaustion(capacity={capacity}, min_violations={min_violations}, c={})", fmt_rat(c))
            }
            Self::IndexWitness { within, regime, budget } => {
                let r = match regime {
                    WitnessRegime::Noise => "noise",
                    WitnessRegime::Omission => "omission",
                };
                format!("index_witness(within={within}, regime={r}, budget={budget})")
            }
            Self::BudgetInvariant => "budget_invariant".into(),
            Self::PrefixToggles { index, at_least } => format!("prefix_toggles(index={index}, at_least={at_least})"),
            Self::DedupeEquivalent => "dedupe_equivalent".into(),
            Self::KMonotone => "k_monotone".into(),
            Self::Stalls => "stalls".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    /// Descriptive id of the property the scenario replicates.
    pub claim: String,
    pub horizon: u64,
    pub seed: u64,
    pub collection: Arc<Collection>,
    pub target: SymbolicLanguage,
    pub stream: StreamDef,
    pub generator: GeneratorSpec,
    pub expect: Vec<Claim>,
}

impl Scenario {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let root = parse(src)?;
        let r = root.as_record()?;
        let schema = r.require("schema")?;
        if schema.as_text()? != SCENARIO_SCHEMA {
            return err(schema.line, format!("unsupported schema `{}`, expected `{SCENARIO_SCHEMA}`", schema.as_text()?));
        }
        let name = r.require("name")?.as_text()?.to_string();
        let claim = r.require("claim")?.as_text()?.to_string();
        let horizon_v = r.require("horizon")?;
        let horizon = horizon_v.as_u64()?;
        if horizon == 0 {
            return err(horizon_v.line, "horizon must be at least 1");
        }
        let seed = r.get("seed").map(Value::as_u64).transpose()?.unwrap_or(0);

        let mut env = Env::default();
        if let Some(langs) = r.get("languages") {
            let lr = langs.as_record()?;
            for (key, v) in lr.entries() {
                let set = env.lang(v)?;
                env.names.insert(key.clone(), set);
            }
        }
        let collection = Arc::new(env.collection(r.require("collection")?)?);
        let target_v = r.require("target")?;
        let target = match target_v.as_u64() {
            Ok(i) => match collection.get(i as usize) {
                Some(l) => l.clone(),
                None => return err(target_v.line, format!("target index {i} outside collection of {}", collection.len())),
            },
            Err(_) => env.language(target_v)?,
        };
        let stream = env.stream(r.require("stream")?, seed)?;
        let generator = generator_spec(r.require("generator")?)?;
        if let Err(e) = generator.validate() {
            return err(r.require("generator")?.line, e.to_string());
        }
        let expect_v = r.require("expect")?;
        let expect = expect_v.as_list()?.iter().map(claim_spec).collect::<Result<Vec<_>, _>>()?;
        if expect.is_empty() {
            return err(expect_v.line, "expect block must list at least one claim");
        }
        r.finish()?;
        Ok(Self { name, claim, horizon, seed, collection, target, stream, generator, expect })
    }

    /// Replaces the seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let StreamDef::Spec(s) = &mut self.stream {
            s.seed = seed;
        }
    }
}

/// Named languages visible to later expressions.
#[derive(Default)]
struct Env {
    names: BTreeMap<String, NatSet>,
}

fn periodic_filter(set: &NatSet, line: usize) -> Result<Residues, ConfigError> {
    if *set.shape() == Shape::All && set.added().is_empty() && set.removed().is_empty() {
        Ok(set.filter().clone())
    } else {
        err(line, format!("filter must be a plain residue set, got {set}"))
    }
}

fn lang_err<T>(line: usize, e: impl std::fmt::Display) -> Result<T, ConfigError> {
    err(line, e.to_string())
}

impl Env {
    fn language(&self, v: &Value) -> Result<SymbolicLanguage, ConfigError> {
        let set = self.lang(v)?;
        SymbolicLanguage::new(set).or_else(|e| lang_err(v.line, e))
    }

    fn opt_list(c: &Call<'_>, key: &str) -> Result<Vec<u64>, ConfigError> {
        c.keyword(key).map(Value::as_u64_list).transpose().map(Option::unwrap_or_default)
    }

    /// Language expressions, including the rendering used by [`NatSet`]'s `Display`.
    fn lang(&self, v: &Value) -> Result<NatSet, ConfigError> {
        let c = v.as_call()?;
        let line = v.line;
        let wrap = |r: Result<NatSet, crate::langs::LangError>| r.or_else(|e| lang_err(line, e));
        let set = match c.name {
            "nat" => NatSet::nat(),
            "empty" => NatSet::empty(),
            "multiples" => {
                c.check(&["m"], 1)?;
                wrap(NatSet::multiples(c.require("m", 0)?.as_u64()?))?
            }
            "residues" => {
                c.check(&["mod", "residues"], 2)?;
                let m = c.require("mod", 0)?.as_u64()?;
                wrap(NatSet::fep(m, &c.require("residues", 1)?.as_u64_list()?, &[], &[]))?
            }
            "fep" => {
                c.check(&["mod", "residues", "add", "remove"], 0)?;
                let m = c.require("mod", 0)?.as_u64()?;
                let res = c.require("residues", 1)?.as_u64_list()?;
                wrap(NatSet::fep(m, &res, &Self::opt_list(&c, "add")?, &Self::opt_list(&c, "remove")?))?
            }
            "finite" => {
                c.check(&[], 1)?;
                NatSet::finite(&c.require("elements", 0)?.as_u64_list()?)
            }
            "blocks" | "special" => {
                c.check(&["filter", "add", "remove"], 1)?;
                let kind = c.require("kind", 0)?.as_text()?;
                let filter = match c.keyword("filter") {
                    Some(f) => periodic_filter(&self.lang(f)?, f.line)?,
                    None => Residues::full(),
                };
                let shape = if c.name == "blocks" {
                    Shape::Blocks(BlockSpec::parse(kind).map_or_else(|| err(line, format!("unknown block family `{kind}`")), Ok)?)
                } else {
                    Shape::Special(SpecialKind::parse(kind).map_or_else(|| err(line, format!("unknown special set `{kind}`")), Ok)?)
                };
                let core = NatSet::build(shape, filter, &[], &[]);
                core.union_finite(&Self::opt_list(&c, "add")?).minus_finite(&Self::opt_list(&c, "remove")?)
            }
            "add" | "union" => {
                c.check(&[], 2)?;
                self.lang(c.require("set", 0)?)?.union_finite(&c.require("elements", 1)?.as_u64_list()?)
            }
            "minus" => {
                c.check(&[], 2)?;
                self.lang(c.require("set", 0)?)?.minus_finite(&c.require("elements", 1)?.as_u64_list()?)
            }
            "intersect" => {
                c.check(&[], usize::MAX)?;
                let mut acc = self.lang(c.require("set", 0)?)?;
                for k in 1..c.positional_count() {
                    acc = wrap(acc.intersect(&self.lang(c.positional(k).expect("counted"))?))?;
                }
                acc
            }
            "complement" => {
                c.check(&[], 1)?;
                wrap(self.lang(c.require("set", 0)?)?.complement())?
            }
            "difference" => {
                c.check(&[], 2)?;
                wrap(self.lang(c.require("set", 0)?)?.difference(&self.lang(c.require("minus", 1)?)?))?
            }
            name if c.positional_count() == 0 && v.ident().is_some() => match self.names.get(name) {
                Some(s) => s.clone(),
                None => return err(line, format!("undefined language `{name}`")),
            },
            other => return err(line, format!("unknown language constructor `{other}`")),
        };
        Ok(set)
    }

    fn collection(&self, v: &Value) -> Result<Collection, ConfigError> {
        if let Ok(items) = v.as_list() {
            let entries = items
                .iter()
                .map(|item| {
                    let lang = self.language(item)?;
                    let name = item.ident().map_or_else(|| item.to_string(), str::to_string);
                    Ok((name, lang))
                })
                .collect::<Result<Vec<_>, ConfigError>>()?;
            if entries.is_empty() {
                return err(v.line, "collection must not be empty");
            }
            return Ok(Collection::named(entries));
        }
        let c = v.as_call()?;
        match c.name {
            "expand" => {
                c.check(&["base", "mode", "limit"], 1)?;
                let base = Arc::new(self.collection(c.require("base", 0)?)?);
                let mode_v = c.require("mode", 1)?;
                let mode = ExpansionMode::parse(mode_v.as_text()?).map_or_else(|| err(mode_v.line, "mode must be add_only or add_remove"), Ok)?;
                let limit = c.require("limit", 2)?.as_u64()? as usize;
                base.expand(mode, limit).or_else(|e| lang_err(v.line, e))
            }
            "family" => {
                c.check(&["k", "count"], 1)?;
                let name = c.require("name", 0)?.as_text()?;
                let r = match name {
                    "residue_exclusion" => families::residue_exclusion(c.require("k", 1)?.as_u64()?),
                    "residue_with_prefix" => families::residue_with_prefix(c.require("k", 1)?.as_u64()?),
                    "two_noisy" => families::two_noisy(c.require("count", 1)?.as_u64()? as usize),
                    other => return err(v.line, format!("unknown family `{other}`")),
                };
                r.or_else(|e| lang_err(v.line, e))
            }
            other => err(v.line, format!("unknown collection form `{other}`")),
        }
    }

    fn noise(&self, v: &Value) -> Result<(NoiseSchedule, NatSet), ConfigError> {
        let c = v.as_call()?;
        let from = match c.keyword("from") {
            Some(f) => self.lang(f)?,
            None => NatSet::nat(),
        };
        let sparse = |set: NatSet| -> Result<NoiseSchedule, ConfigError> {
            let d = crate::langs::mu_exact(&set, &NatSet::nat()).or_else(|e| lang_err(v.line, e))?;
            if d.up > Rational::from_integer(0) {
                return err(v.line, format!("noise schedule {set} has positive upper density"));
            }
            Ok(NoiseSchedule::Steps(set))
        };
        let schedule = match c.name {
            "none" => NoiseSchedule::None,
            "pow2" | "squares" | "primes" => {
                c.check(&["from"], 0)?;
                NoiseSchedule::Steps(NatSet::special(SpecialKind::parse(c.name).expect("known kind"), Residues::full()))
            }
            "steps" => {
                c.check(&["from"], 1)?;
                sparse(self.lang(c.require("steps", 0)?)?)?
            }
            "pattern" => {
                c.check(&["p", "q", "from"], 2)?;
                let p = c.require("p", 0)?.as_u64()?;
                let q = c.require("q", 1)?.as_u64()?;
                if q == 0 || p > q {
                    return err(v.line, "pattern needs 0 <= p <= q and q >= 1");
                }
                NoiseSchedule::Pattern { p, q }
            }
            "finite" => {
                c.check(&["at", "from"], 1)?;
                let values = c.require("values", 0)?.as_u64_list()?;
                let at = c.keyword("at").map(Value::as_u64_list).transpose()?;
                if let Some(at) = &at {
                    if at.len() != values.len() || at.contains(&0) || at.windows(2).any(|w| w[0] >= w[1]) {
                        return err(v.line, "`at` must list one increasing positive step per value");
                    }
                }
                NoiseSchedule::Finite { values, at }
            }
            other => return err(v.line, format!("unknown noise schedule `{other}`")),
        };
        Ok((schedule, from))
    }

    fn omissions(&self, v: &Value) -> Result<Omissions, ConfigError> {
        let c = v.as_call()?;
        Ok(match c.name {
            "none" => Omissions::None,
            "skip" => {
                c.check(&[], 1)?;
                Omissions::Finite(c.require("elements", 0)?.as_u64_list()?)
            }
            "keep" => {
                c.check(&[], 1)?;
                let set_v = c.require("set", 0)?;
                Omissions::Periodic(periodic_filter(&self.lang(set_v)?, set_v.line)?)
            }
            "sparse" => {
                c.check(&[], 1)?;
                let kind = c.require("blocks", 0)?.as_text()?;
                Omissions::Sparse(BlockSpec::parse(kind).map_or_else(|| err(v.line, format!("unknown block family `{kind}`")), Ok)?)
            }
            other => return err(v.line, format!("unknown omission form `{other}`")),
        })
    }

    fn stream(&self, v: &Value, seed: u64) -> Result<StreamDef, ConfigError> {
        if let Ok(c) = v.as_call() {
            if c.name != "adaptive" {
                return err(v.line, format!("expected a stream record or adaptive(...), found `{}`", c.name));
            }
            c.check(&["l", "lp", "eps", "stall"], 0)?;
            let eps = c.require("eps", 0)?.as_rat()?;
            if eps <= Rational::from_integer(0) {
                return err(v.line, "eps must be positive");
            }
            return Ok(StreamDef::Adaptive {
                l: self.language(c.require("l", 0)?)?,
                lp: self.language(c.require("lp", 0)?)?,
                eps,
                stall: c.require("stall", 0)?.as_u64()?,
            });
        }
        let r = v.as_record()?;
        let mut spec = StreamSpec::canonical(self.language(r.require("main")?)?);
        if let Some(n) = r.get("noise") {
            let (schedule, from) = self.noise(n)?;
            spec = spec.with_noise(schedule, from);
        }
        if let Some(o) = r.get("omissions") {
            spec = spec.with_omissions(self.omissions(o)?);
            if let Err(e) = spec.kept() {
                return lang_err(o.line, e);
            }
        }
        spec.shuffle = r.get("shuffle").map(Value::as_u64).transpose()?;
        if let Some(q) = r.get("repeats") {
            let n = q.as_u64()?;
            if n == 0 {
                return err(q.line, "repeats must be at least 1");
            }
            spec.repeats = Some(n);
        }
        spec.dedupe = r.get("dedupe").map(Value::as_bool).transpose()?.unwrap_or(false);
        spec.bounded = r.get("bounded").map(Value::as_rat).transpose()?;
        spec.seed = seed;
        r.finish()?;
        Ok(StreamDef::Spec(spec))
    }
}

fn thresholds(v: &Value) -> Result<Thresholds, ConfigError> {
    let c = v.as_call()?;
    match c.name {
        "uniform" => {
            c.check(&["c"], 1)?;
            Ok(Thresholds::Uniform(c.require("c", 0)?.as_rat()?))
        }
        "geometric" => {
            c.check(&["scale", "offset"], 2)?;
            let scale = c.require("scale", 0)?.as_rat()?;
            let offset = c.require("offset", 1)?.as_u64()? as u32;
            Ok(Thresholds::Geometric { scale, offset })
        }
        other => err(v.line, format!("unknown threshold schedule `{other}`")),
    }
}

pub fn generator_spec(v: &Value) -> Result<GeneratorSpec, ConfigError> {
    let c = v.as_call()?;
    let rat = |key: &str| -> Result<Rational, ConfigError> { c.require(key, usize::MAX)?.as_rat() };
    let base = || -> Result<Box<GeneratorSpec>, ConfigError> { Ok(Box::new(generator_spec(c.require("base", 0)?)?)) };
    let spec = match c.name {
        "baseline" => GeneratorSpec::Baseline,
        "vanishing_noise" => GeneratorSpec::VanishingNoise,
        "constant_noise" => {
            c.check(&["c"], 0)?;
            GeneratorSpec::ConstantNoise { c: rat("c")? }
        }
        "sorting_variant" => {
            c.check(&["thresholds"], 0)?;
            GeneratorSpec::SortingVariant { thresholds: c.keyword("thresholds").map(thresholds).transpose()? }
        }
        "fallback_upper_density" => GeneratorSpec::FallbackUpperDensity,
        "vanishing_set_density" => {
            c.check(&["eps"], 0)?;
            GeneratorSpec::VanishingSetDensity { eps: rat("eps")? }
        }
        "constant_set_density" => {
            c.check(&["c", "rho"], 0)?;
            GeneratorSpec::ConstantSetDensity { c: rat("c")?, rho: rat("rho")? }
        }
        "bounded_dense" => {
            c.check(&["eps", "M"], 0)?;
            GeneratorSpec::BoundedDense { eps: rat("eps")?, m: rat("M")? }
        }
        "set_to_element" => {
            c.check(&["base", "rho"], 1)?;
            GeneratorSpec::SetToElement { base: base()?, rho: rat("rho")? }
        }
        "robust_version_space" => {
            c.check(&["d_star"], 0)?;
            let d_star = match c.keyword("d_star") {
                None => None,
                Some(d) if d.ident() == Some("auto") => None,
                Some(d) => Some(d.as_u64()?),
            };
            GeneratorSpec::RobustVersionSpace { d_star }
        }
        "finite_expansion" => {
            c.check(&["base", "mode", "limit"], 1)?;
            let mode_v = c.require("mode", usize::MAX)?;
            let mode = ExpansionMode::parse(mode_v.as_text()?).map_or_else(|| err(mode_v.line, "mode must be add_only or add_remove"), Ok)?;
            GeneratorSpec::FiniteExpansion { base: base()?, mode, limit: c.require("limit", usize::MAX)?.as_u64()? as usize }
        }
        "dedupe" => {
            c.check(&["base"], 1)?;
            GeneratorSpec::Dedupe { base: base()? }
        }
        other => return err(v.line, format!("unknown generator `{other}`")),
    };
    Ok(spec)
}

fn from_arg(c: &Call<'_>, default: Start) -> Result<Start, ConfigError> {
    match c.keyword("from") {
        None => Ok(default),
        Some(v) => match v.ident() {
            Some("stabilization") => Ok(Start::Stabilization),
            Some("tail") => Ok(Start::Tail),
            _ => Ok(Start::Step(v.as_u64()?)),
        },
    }
}

fn claim_spec(v: &Value) -> Result<Claim, ConfigError> {
    let c = v.as_call()?;
    let u = |key: &str| -> Result<u64, ConfigError> { c.require(key, usize::MAX)?.as_u64() };
    let r = |key: &str| -> Result<Rational, ConfigError> { c.require(key, usize::MAX)?.as_rat() };
    let claim = match c.name {
        "generates" => {
            c.check(&["max_last_violation"], 0)?;
            Claim::Generates { max_last_violation: c.keyword("max_last_violation").map(Value::as_u64).transpose()? }
        }
        "fails" => {
            c.check(&["min_violations"], 0)?;
            Claim::Fails { min_violations: u("min_violations")? }
        }
        "set_density_floor" => {
            c.check(&["at_least", "from"], 0)?;
            Claim::SetDensityFloor { at_least: r("at_least")?, from: from_arg(&c, Start::Stabilization)? }
        }
        "set_density_ceiling" => {
            c.check(&["at_most", "strict", "from"], 0)?;
            let strict = c.keyword("strict").map(Value::as_bool).transpose()?.unwrap_or(false);
            Claim::SetDensityCeiling { at_most: r("at_most")?, strict, from: from_arg(&c, Start::Step(1))? }
        }
        "set_density_often" => {
            c.check(&["at_least", "min_steps"], 0)?;
            Claim::SetDensityOften { at_least: r("at_least")?, min_steps: u("min_steps")? }
        }
        "element_density_tail" => {
            c.check(&["at_least"], 0)?;
            Claim::ElementDensityTail { at_least: r("at_least")? }
        }
        "stabilizes" => Claim::Stabilizes,
        "closure_exhaustion" => {
            c.check(&["capacity", "min_violations", "c"], 0)?;
            Claim::ClosureExhaustion { capacity: u("capacity")?, min_violations: u("min_violations")?, c: r("c")? }
        }
        "index_witness" => {
            c.check(&["within", "regime", "budget"], 0)?;
            let regime_v = c.require("regime", usize::MAX)?;
            let regime = match regime_v.as_text()? {
                "noise" => WitnessRegime::Noise,
                "omission" => WitnessRegime::Omission,
                _ => return err(regime_v.line, "regime must be noise or omission"),
            };
            Claim::IndexWitness { within: u("within")?, regime, budget: u("budget")? }
        }
        "budget_invariant" => Claim::BudgetInvariant,
        "prefix_toggles" => {
            c.check(&["index", "at_least"], 0)?;
            Claim::PrefixToggles { index: u("index")? as usize, at_least: u("at_least")? }
        }
        "dedupe_equivalent" => Claim::DedupeEquivalent,
        "k_monotone" => Claim::KMonotone,
        "stalls" => Claim::Stalls,
        other => return err(v.line, format!("unknown claim `{other}`")),
    };
    Ok(claim)
}

/// Parses a language expression with no named languages in scope.
pub fn parse_language(src: &str) -> Result<NatSet, ConfigError> {
    Env::default().lang(&super::config::parse_value(src)?)
}
