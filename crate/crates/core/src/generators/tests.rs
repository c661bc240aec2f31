use super::*;
use crate::collections::families;
use crate::genmeta::{Flag, GenStep, SymbolicSet};
use crate::langs::{NatSet, SymbolicLanguage};
use crate::rational::rat;
use crate::streams::{NoiseSchedule, Stream, StreamSpec};

fn collection(langs: Vec<SymbolicLanguage>) -> Arc<Collection> {
    Arc::new(Collection::explicit(langs))
}

fn evens() -> SymbolicLanguage {
    SymbolicLanguage::multiples(2).unwrap()
}

fn run(spec: &GeneratorSpec, c: Arc<Collection>, xs: &[u64]) -> Vec<GenStep> {
    let mut g = spec.build(c).unwrap();
    xs.iter().map(|&x| g.step(x).unwrap()).collect()
}

fn stream(spec: &StreamSpec, target: SymbolicLanguage, n: usize) -> Vec<u64> {
    Stream::new(spec, target).unwrap().take(n).unwrap()
}

/// Last step whose element is outside `k` or already seen.
fn last_invalid(steps: &[GenStep], xs: &[u64], k: &SymbolicLanguage) -> usize {
    let mut seen = std::collections::HashSet::new();
    let mut last = 0;
    for (t, s) in steps.iter().enumerate() {
        seen.insert(xs[t]);
        match s.element {
            Some(w) if k.contains(w) && !seen.contains(&w) => {}
            _ => last = t + 1,
        }
    }
    last
}

#[test]
fn vanishing_noise_valid_from_start_when_noiseless() {
    let l1 = SymbolicLanguage::fep(1, &[0], &[], &[1]).unwrap();
    let c = collection(vec![l1.clone(), SymbolicLanguage::nat()]);
    let xs: Vec<u64> = (1..=20).collect();
    let steps = run(&GeneratorSpec::VanishingNoise, c, &xs);
    assert_eq!(last_invalid(&steps, &xs, &l1), 0);
}

#[test]
fn vanishing_noise_recovers_from_pow2_noise() {
    let c = collection(vec![evens(), SymbolicLanguage::nat()]);
    let spec = StreamSpec::canonical(evens()).with_noise(NoiseSchedule::pow2(), NatSet::nat());
    let xs = stream(&spec, evens(), 10_000);
    let steps = run(&GeneratorSpec::VanishingNoise, c, &xs);
    let last = last_invalid(&steps, &xs, &evens());
    assert!(last <= 4, "last invalid step {last}");
}

#[test]
fn remapped_two_noisy_examples() {
    let c = Arc::new(families::two_noisy(6).unwrap());
    let k = c.language_at(1).clone();
    let zs = [-2i64, -1];
    let xs: Vec<u64> = zs.iter().map(|&z| families::fold_integer(z)).chain((1..=400).map(families::fold_integer)).collect();
    let ours = run(&GeneratorSpec::VanishingNoise, c.clone(), &xs);
    assert!(last_invalid(&ours, &xs, &k) < 50);
    let base = run(&GeneratorSpec::Baseline, c, &xs);
    let bad = base.iter().filter(|s| !s.element.is_some_and(|w| k.contains(w))).count();
    assert_eq!(bad, xs.len());
}

#[test]
fn constant_noise_hard_instance_fails_for_some_target() {
    let c = Arc::new(families::residue_with_prefix(2).unwrap());
    let xs: Vec<u64> = (1..=400).collect();
    let steps = run(&GeneratorSpec::ConstantNoise { c: rat(1, 2) }, c.clone(), &xs);
    assert_eq!(c.closure(&[1, 2]).unwrap(), crate::langs::SetValue::Finite(vec![1, 2]));
    let worst = (1..=2).map(|i| last_invalid_count(&steps, &xs, c.language_at(i))).max().unwrap();
    assert!(worst >= 100, "{worst}");
}

fn last_invalid_count(steps: &[GenStep], xs: &[u64], k: &SymbolicLanguage) -> usize {
    steps.iter().zip(xs).filter(|(s, &x)| !s.element.is_some_and(|w| k.contains(w) && w != x)).count()
}

#[test]
fn set_to_element_on_constant_base() {
    let c = collection(vec![evens()]);
    let spec = GeneratorSpec::SetToElement { base: Box::new(GeneratorSpec::VanishingSetDensity { eps: rat(1, 4) }), rho: rat(1, 1) };
    let xs: Vec<u64> = (1..=200).map(|k| 4 * k).collect();
    let steps = run(&spec, c, &xs);
    let ws: Vec<u64> = steps.iter().map(|s| s.element.unwrap()).collect();
    assert_eq!(&ws[..5], &[2, 6, 10, 14, 18]);
    let ks: Vec<u64> = steps.iter().map(|s| s.aux.k.unwrap()).collect();
    assert!(ks.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn robust_budget_and_d_star() {
    let c = Arc::new(families::residue_with_prefix(2).unwrap());
    assert_eq!(estimate_d_star(&c).unwrap(), 2);
    assert_eq!(estimate_d_star(&collection(vec![evens(), SymbolicLanguage::nat()])).unwrap(), 0);
    let xs: Vec<u64> = (1..=40).collect();
    let steps = run(&GeneratorSpec::RobustVersionSpace { d_star: None }, c, &xs);
    let b = steps[39].aux.budget.as_ref().unwrap();
    assert_eq!((b.distinct, b.budget, b.d_star), (40, 18, 2));
}

#[test]
fn robust_fails_on_residue_exclusion() {
    let c = Arc::new(families::residue_exclusion(2).unwrap());
    let xs: Vec<u64> = (1..=200).collect();
    let steps = run(&GeneratorSpec::RobustVersionSpace { d_star: None }, c, &xs);
    let odd = steps.iter().filter(|s| s.element.unwrap() % 2 == 1).count();
    assert!(odd >= 10 && steps.len() - odd >= 10);
    assert!(steps.iter().skip(10).all(|s| s.flags.contains(&Flag::ClosureBot)));
}

#[test]
fn robust_compliant_stream() {
    let c = collection(vec![evens(), SymbolicLanguage::nat()]);
    let spec = crate::streams::make_c_noise(evens(), NatSet::nat(), 1, 4);
    let xs = stream(&spec, evens(), 2000);
    let steps = run(&GeneratorSpec::RobustVersionSpace { d_star: None }, c, &xs);
    assert!(last_invalid(&steps, &xs, &evens()) < 100);
}

#[test]
fn dedupe_matches_base_on_unique_steps() {
    let c = collection(vec![evens(), SymbolicLanguage::nat()]);
    let mut raw_spec = StreamSpec::canonical(evens()).with_noise(NoiseSchedule::pow2(), NatSet::nat());
    raw_spec.repeats = Some(2);
    let raw = stream(&raw_spec, evens(), 600);
    let mut dd_spec = raw_spec.clone();
    dd_spec.dedupe = true;
    let unique = stream(&dd_spec, evens(), 400);
    let base = run(&GeneratorSpec::VanishingNoise, c.clone(), &unique);
    let wrapped = run(&GeneratorSpec::Dedupe { base: Box::new(GeneratorSpec::VanishingNoise) }, c, &raw);
    let fresh: Vec<&GenStep> = wrapped.iter().filter(|s| !s.flags.contains(&Flag::Repeat)).collect();
    for (a, b) in base.iter().zip(&fresh) {
        assert_eq!((&a.set, &a.order, a.j), (&b.set, &b.order, b.j));
        assert_eq!(a.element, b.element);
    }
}

#[test]
fn expansion_handles_finite_noise() {
    let c = collection(vec![SymbolicLanguage::multiples(4).unwrap(), evens()]);
    let spec = StreamSpec::canonical(evens()).with_noise(NoiseSchedule::Finite { values: vec![5], at: None }, NatSet::nat());
    let xs = stream(&spec, evens(), 3000);
    let g = GeneratorSpec::FiniteExpansion { base: Box::new(GeneratorSpec::VanishingNoise), mode: crate::collections::ExpansionMode::AddRemove, limit: 300 };
    let steps = run(&g, c, &xs);
    assert!(last_invalid(&steps, &xs, &evens()) < 2000);
}

#[test]
fn bounded_dense_density_floor() {
    let c = collection(vec![evens(), SymbolicLanguage::nat()]);
    let spec = crate::streams::make_bounded(evens(), rat(2, 1), NoiseSchedule::pow2(), NatSet::nat());
    let xs = stream(&spec, SymbolicLanguage::nat(), 4000);
    let steps = run(&GeneratorSpec::BoundedDense { eps: rat(1, 4), m: rat(2, 1) }, c, &xs);
    let last = steps.last().unwrap();
    match &last.set {
        SymbolicSet::IntersectionMinus { closure, .. } => {
            let d = crate::langs::mu_exact(closure, &NatSet::nat()).unwrap();
            assert!(d.low >= rat(3, 8) && d.up <= rat(1, 2));
        }
        SymbolicSet::Empty => panic!("empty output"),
    }
}

#[test]
fn parameter_ranges() {
    assert!(GeneratorSpec::ConstantNoise { c: rat(1, 1) }.validate().is_err());
    assert!(GeneratorSpec::BoundedDense { eps: rat(1, 4), m: rat(1, 2) }.validate().is_err());
    let not_set = GeneratorSpec::SetToElement { base: Box::new(GeneratorSpec::VanishingNoise), rho: rat(1, 2) };
    assert!(not_set.validate().is_err());
}
