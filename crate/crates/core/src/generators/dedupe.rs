use std::collections::HashMap;
use std::sync::Arc;

use crate::collections::Collection;
use crate::genmeta::{Flag, GenError, GenStep, Generator, Mode, Priority, StabilizationReport};
use crate::langs::NatSet;
use crate::valueset::ValueSet;

/// Feeds only first occurrences to the base generator; on a repeated
/// example it repeats the last output set and emits that set's first
/// element outside everything seen or emitted.
pub struct Dedupe {
    base: Box<dyn Generator>,
    seen: ValueSet,
    used: ValueSet,
    last: Option<GenStep>,
    steps: u64,
    cursors: HashMap<NatSet, u64>,
}

impl Dedupe {
    pub fn new(base: Box<dyn Generator>) -> Self {
        Self { base, seen: ValueSet::new(), used: ValueSet::new(), last: None, steps: 0, cursors: HashMap::new() }
    }
}

impl Generator for Dedupe {
    fn name(&self) -> String {
        format!("dedupe({})", self.base.name())
    }

    fn mode(&self) -> Mode {
        self.base.mode()
    }

    fn collection(&self) -> &Arc<Collection> {
        self.base.collection()
    }

    fn step(&mut self, x: u64) -> Result<GenStep, GenError> {
        self.steps += 1;
        let mut out = match (self.seen.insert(x), &self.last) {
            (false, Some(last)) => {
                let mut out = last.clone();
                out.flags = vec![Flag::Repeat];
                out.element = None;
                if self.base.mode() == Mode::Element {
                    if let Some(c) = out.set.closure() {
                        let cursor = self.cursors.entry(c.clone()).or_insert(1);
                        let mut w = c.next_ge(*cursor);
                        while let Some(v) = w.filter(|&v| self.used.contains(v)) {
                            w = c.next_ge(v + 1);
                        }
                        if let Some(v) = w {
                            *cursor = v;
                        }
                        out.element = w;
                    }
                    if out.element.is_none() {
                        out.flags.push(Flag::ClosureExhausted);
                    }
                }
                out
            }
            _ => {
                let out = self.base.step(x)?;
                self.last = Some(out.clone());
                out
            }
        };
        self.used.insert(x);
        if let Some(w) = out.element {
            self.used.insert(w);
        }
        out.n = self.steps;
        Ok(out)
    }

    fn stabilization_report(&self, p: u64) -> Option<StabilizationReport> {
        self.base.stabilization_report(p)
    }

    fn priority(&self, i: usize) -> Option<Priority> {
        self.base.priority(i)
    }
}
