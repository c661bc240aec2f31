//! Simulation of language generation in the limit from contaminated
//! enumerations: symbolic languages over the positive integers, adversarial
//! streams, priority-based generators and trace analysis.

pub mod collections;
pub mod generators;
pub mod harness;
pub mod genmeta;
pub mod langs;
pub mod metrics;
pub mod rational;
pub mod streams;
pub mod valueset;

pub use langs::{LangError, NatSet, SetValue, SymbolicLanguage};
pub use rational::{fmt_rat, parse_rat, rat, Rational};
