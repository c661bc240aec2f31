use std::fmt;

use serde::{Deserialize, Serialize};

/// Unbounded union of disjoint closed intervals `[a_i, b_i]` with `b_i < a_{i+1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSpec {
    /// `[(2i)!, (2i+1)!]` for `i >= 1`; the last block that starts below
    /// `u64::MAX` runs to `u64::MAX`.
    FactorialPairs,
}

impl BlockSpec {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "factorial_pairs" | "factorial" => Some(Self::FactorialPairs),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::FactorialPairs => "factorial_pairs",
        }
    }

    /// All blocks inside the `u64` range, in increasing order.
    pub fn blocks(&self) -> &'static [(u64, u64)] {
        match self {
            Self::FactorialPairs => &FACTORIAL_BLOCKS,
        }
    }

    pub fn block_of(&self, x: u64) -> Option<(u64, u64)> {
        self.blocks().iter().copied().find(|&(a, b)| a <= x && x <= b)
    }

    pub fn contains(&self, x: u64) -> bool {
        self.block_of(x).is_some()
    }
}

impl fmt::Display for BlockSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const fn factorial(n: u64) -> u64 {
    let mut acc = 1u64;
    let mut i = 2;
    while i <= n {
        acc *= i;
        i += 1;
    }
    acc
}

const FACTORIAL_BLOCKS: [(u64, u64); 10] = {
    let mut out = [(0u64, 0u64); 10];
    let mut i = 1;
    while i <= 10 {
        let hi = if 2 * i < 20 { factorial(2 * i as u64 + 1) } else { u64::MAX };
        out[i - 1] = (factorial(2 * i as u64), hi);
        i += 1;
    }
    out
};
