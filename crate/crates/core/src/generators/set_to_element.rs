use std::collections::HashMap;
use std::sync::Arc;

use crate::collections::Collection;
use crate::genmeta::{Aux, Flag, GenError, GenStep, Generator, Mode, Priority, StabilizationReport, SymbolicSet};
use crate::langs::density_rate;
use crate::rational::Rational;
use crate::valueset::ValueSet;

/// Turns a set generator into an element generator by emitting from the
/// output of an earlier step `k(n)`, chosen so that the earlier output is
/// already dense in every language of its prefix at the current scale.
pub struct SetToElement {
    base: Box<dyn Generator>,
    rho: Rational,
    name: String,
    history: Vec<u64>,
    outputs: Vec<SymbolicSet>,
    m: Vec<u64>,
    k: usize,
    used: ValueSet,
    cursors: HashMap<usize, u64>,
}

impl SetToElement {
    pub fn new(base: Box<dyn Generator>, rho: Rational, name: String) -> Self {
        Self { base, rho, name, history: Vec::new(), outputs: Vec::new(), m: Vec::new(), k: 1, used: ValueSet::new(), cursors: HashMap::new() }
    }

    /// `m_k` for the next uncomputed `k`.
    fn compute_next_m(&mut self) -> Result<(), GenError> {
        let k = self.m.len() + 1;
        if k > 62 {
            return Err(GenError::DensityRateUnavailable(format!("scale 2^-{k} exceeds exact range")));
        }
        let eps = Rational::new(1, 1i64 << k);
        let out = &self.outputs[k - 1];
        let mut mk = 1;
        if let Some(closure) = out.closure() {
            let a = closure.minus_finite(&self.history[..k]);
            for &i in out.indices() {
                let lang = self.base.collection().language_at(i);
                let r = density_rate(&a, lang.set(), eps).map_err(|e| GenError::DensityRateUnavailable(e.to_string()))?;
                mk = mk.max(r);
            }
        }
        if let Some(&prev) = self.m.last() {
            mk = mk.max(prev + 1);
        }
        self.m.push(mk);
        Ok(())
    }

    /// `m_k / (1 + 2^-k) <= 2n / rho`.
    fn qualifies(&self, k: usize, n: u64) -> bool {
        let p = 1i128 << k;
        let lhs = self.m[k - 1] as i128 * p * *self.rho.numer() as i128;
        let rhs = 2 * n as i128 * *self.rho.denom() as i128 * (p + 1);
        lhs <= rhs
    }

    pub fn m_values(&self) -> &[u64] {
        &self.m
    }
}

impl Generator for SetToElement {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn mode(&self) -> Mode {
        Mode::Element
    }

    fn collection(&self) -> &Arc<Collection> {
        self.base.collection()
    }

    fn step(&mut self, x: u64) -> Result<GenStep, GenError> {
        let base = self.base.step(x)?;
        self.history.push(x);
        self.used.insert(x);
        self.outputs.push(base.set.clone());
        let n = self.history.len() as u64;
        if self.m.is_empty() {
            self.compute_next_m()?;
        }
        while self.k < n as usize {
            if self.m.len() <= self.k {
                self.compute_next_m()?;
            }
            if !self.qualifies(self.k + 1, n) {
                break;
            }
            self.k += 1;
        }
        let k = self.k;
        let mut flags = base.flags.clone();
        let chosen = self.outputs[k - 1].clone();
        let element = match chosen.closure() {
            None => None,
            Some(closure) => {
                let cursor = self.cursors.entry(k).or_insert(1);
                let mut w = closure.next_ge(*cursor);
                while let Some(v) = w {
                    if !self.used.contains(v) {
                        break;
                    }
                    w = closure.next_ge(v + 1);
                }
                if let Some(v) = w {
                    *cursor = v;
                }
                w
            }
        };
        match element {
            Some(w) => {
                self.used.insert(w);
            }
            None => flags.push(Flag::ClosureExhausted),
        }
        let aux = Aux { k: Some(k as u64), m: Some(self.m[k - 1]), budget: None };
        Ok(GenStep { n, order: base.order, j: base.j, set: chosen, element, flags, aux })
    }

    fn stabilization_report(&self, p: u64) -> Option<StabilizationReport> {
        self.base.stabilization_report(p)
    }

    fn priority(&self, i: usize) -> Option<Priority> {
        self.base.priority(i)
    }
}
