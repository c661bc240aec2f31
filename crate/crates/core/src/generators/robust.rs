use std::collections::HashMap;
use std::sync::Arc;

use crate::collections::Collection;
use crate::genmeta::{Aux, Budget, Flag, GenError, GenStep, Generator, Mode, SymbolicSet};
use crate::langs::{NatSet, SetValue};
use crate::valueset::ValueSet;

const MAX_SUBSET_SEARCH: usize = 20;

/// Largest finite closure size over all nonempty subcollections, i.e. the
/// noiseless closure dimension; 0 if every closure is infinite.
pub fn estimate_d_star(collection: &Collection) -> Result<u64, GenError> {
    let k = collection.len();
    if k > MAX_SUBSET_SEARCH {
        return Err(GenError::InvalidParameter(format!("d* search over {k} languages exceeds {MAX_SUBSET_SEARCH}")));
    }
    let mut best = 0;
    for mask in 1u32..(1 << k) {
        let indices: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
        if let SetValue::Finite(elems) = collection.closure(&indices)? {
            best = best.max(elems.len() as u64);
        }
    }
    Ok(best)
}

/// Keeps the languages missing at most a linearly growing budget of the
/// distinct examples and emits from their intersection.
pub struct RobustVersionSpace {
    collection: Arc<Collection>,
    d_star: u64,
    hits: Vec<u64>,
    seen: ValueSet,
    used: ValueSet,
    steps: u64,
    closures: HashMap<Vec<usize>, (NatSet, u64)>,
    placeholder_cursor: u64,
}

impl RobustVersionSpace {
    pub fn new(collection: Arc<Collection>, d_star: Option<u64>) -> Result<Self, GenError> {
        if collection.is_empty() {
            return Err(GenError::InvalidParameter("collection is empty".into()));
        }
        let d_star = match d_star {
            Some(d) => d,
            None => estimate_d_star(&collection)?,
        };
        Ok(Self {
            hits: vec![0; collection.len()],
            collection,
            d_star,
            seen: ValueSet::new(),
            used: ValueSet::new(),
            steps: 0,
            closures: HashMap::new(),
            placeholder_cursor: 1,
        })
    }

    pub fn d_star(&self) -> u64 {
        self.d_star
    }

    /// `n_t = max(0, floor((d_t - (d* + 2)) / k))`.
    pub fn budget(&self) -> u64 {
        let d = self.seen.len() as u64;
        d.saturating_sub(self.d_star + 2) / self.collection.len() as u64
    }

    fn placeholder(&mut self) -> u64 {
        while self.used.contains(self.placeholder_cursor) {
            self.placeholder_cursor += 1;
        }
        self.placeholder_cursor
    }
}

impl Generator for RobustVersionSpace {
    fn name(&self) -> String {
        "robust_version_space".into()
    }

    fn mode(&self) -> Mode {
        Mode::Element
    }

    fn collection(&self) -> &Arc<Collection> {
        &self.collection
    }

    fn step(&mut self, x: u64) -> Result<GenStep, GenError> {
        self.steps += 1;
        let mut flags = Vec::new();
        if self.seen.insert(x) {
            for (k, h) in self.hits.iter_mut().enumerate() {
                if self.collection.language_at(k + 1).contains(x) {
                    *h += 1;
                }
            }
        } else {
            flags.push(Flag::Repeat);
        }
        self.used.insert(x);
        let d = self.seen.len() as u64;
        let budget = self.budget();
        let vs: Vec<usize> = (1..=self.collection.len()).filter(|&i| self.hits[i - 1] + budget >= d).collect();
        let mut set = SymbolicSet::Empty;
        let mut element = None;
        if vs.is_empty() {
            flags.push(Flag::ClosureBot);
        } else {
            if !self.closures.contains_key(&vs) {
                let closure = match self.collection.closure(&vs)? {
                    SetValue::Finite(elems) => NatSet::finite(&elems),
                    SetValue::Infinite(l) => l.into_set(),
                };
                self.closures.insert(vs.clone(), (closure, 1));
            }
            let (closure, cursor) = self.closures.get_mut(&vs).expect("inserted above");
            let mut w = closure.next_ge(*cursor);
            while let Some(v) = w {
                if !self.used.contains(v) {
                    *cursor = v;
                    break;
                }
                w = closure.next_ge(v + 1);
            }
            element = w;
            set = SymbolicSet::IntersectionMinus { indices: vs.clone(), closure: closure.clone() };
            if element.is_none() {
                flags.push(Flag::ClosureExhausted);
            }
        }
        let w = match element {
            Some(w) => w,
            None => self.placeholder(),
        };
        self.used.insert(w);
        let aux = Aux { k: None, m: None, budget: Some(Budget { distinct: d, budget, d_star: self.d_star, version_space: vs }) };
        Ok(GenStep { n: self.steps, order: Vec::new(), j: 0, set, element: Some(w), flags, aux })
    }
}
