//! Concrete generators: engine instantiations and wrappers around them.

mod dedupe;
mod robust;
mod set_to_element;

use std::fmt;
use std::sync::Arc;

pub use dedupe::Dedupe;
pub use robust::{estimate_d_star, RobustVersionSpace};
pub use set_to_element::SetToElement;

use crate::collections::{Collection, ExpansionMode};
use crate::genmeta::{Engine, EngineConfig, GenError, Generator, Mode, PriorityRule, StoppingRule, Thresholds};
use crate::rational::{fmt_rat, Rational};

/// Config-addressable description of a generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratorSpec {
    /// Consistent languages in index order; largest infinite prefix.
    Baseline,
    VanishingNoise,
    ConstantNoise { c: Rational },
    /// Thresholds default to `2^-(i+1)`.
    SortingVariant { thresholds: Option<Thresholds> },
    FallbackUpperDensity,
    VanishingSetDensity { eps: Rational },
    ConstantSetDensity { c: Rational, rho: Rational },
    BoundedDense { eps: Rational, m: Rational },
    SetToElement { base: Box<GeneratorSpec>, rho: Rational },
    RobustVersionSpace { d_star: Option<u64> },
    FiniteExpansion { base: Box<GeneratorSpec>, mode: ExpansionMode, limit: usize },
    Dedupe { base: Box<GeneratorSpec> },
}

fn zero() -> Rational {
    Rational::from_integer(0)
}

fn one() -> Rational {
    Rational::from_integer(1)
}

fn check(ok: bool, what: &str, value: &Rational, range: &str) -> Result<(), GenError> {
    if ok {
        Ok(())
    } else {
        Err(GenError::InvalidParameter(format!("{what} = {} outside {range}", fmt_rat(value))))
    }
}

fn halving() -> Thresholds {
    Thresholds::Geometric { scale: one(), offset: 1 }
}

impl GeneratorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::VanishingNoise => "vanishing_noise",
            Self::ConstantNoise { .. } => "constant_noise",
            Self::SortingVariant { .. } => "sorting_variant",
            Self::FallbackUpperDensity => "fallback_upper_density",
            Self::VanishingSetDensity { .. } => "vanishing_set_density",
            Self::ConstantSetDensity { .. } => "constant_set_density",
            Self::BoundedDense { .. } => "bounded_dense",
            Self::SetToElement { .. } => "set_to_element",
            Self::RobustVersionSpace { .. } => "robust_version_space",
            Self::FiniteExpansion { .. } => "finite_expansion",
            Self::Dedupe { .. } => "dedupe",
        }
    }

    /// Output mode of the generator built from this spec.
    pub fn mode(&self) -> Mode {
        match self {
            Self::FallbackUpperDensity | Self::VanishingSetDensity { .. } | Self::ConstantSetDensity { .. } | Self::BoundedDense { .. } => Mode::Set,
            Self::FiniteExpansion { base, .. } | Self::Dedupe { base } => base.mode(),
            _ => Mode::Element,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        match self {
            Self::ConstantNoise { c } => check(*c > zero() && *c < one(), "c", c, "(0, 1)"),
            Self::VanishingSetDensity { eps } => check(*eps > zero() && *eps < one(), "eps", eps, "(0, 1)"),
            Self::ConstantSetDensity { c, rho } => {
                check(*c > zero() && *c <= one(), "c", c, "(0, 1]")?;
                check(*rho > zero() && *rho <= one(), "rho", rho, "(0, 1]")
            }
            Self::BoundedDense { eps, m } => {
                check(*eps > zero() && *eps < one(), "eps", eps, "(0, 1)")?;
                check(*m >= one(), "M", m, "[1, inf)")
            }
            Self::SetToElement { base, rho } => {
                check(*rho > zero() && *rho <= one(), "rho", rho, "(0, 1]")?;
                if base.mode() != Mode::Set {
                    return Err(GenError::InvalidParameter(format!("set_to_element needs a set generator, got {}", base.name())));
                }
                base.validate()
            }
            Self::FiniteExpansion { base, limit, .. } => {
                if *limit == 0 {
                    return Err(GenError::InvalidParameter("expansion limit must be positive".into()));
                }
                base.validate()
            }
            Self::Dedupe { base } => base.validate(),
            _ => Ok(()),
        }
    }

    fn engine(&self, collection: Arc<Collection>, priority: PriorityRule, stopping: StoppingRule) -> Result<Box<dyn Generator>, GenError> {
        let cfg = EngineConfig { name: self.to_string(), priority, stopping, mode: self.mode() };
        Ok(Box::new(Engine::new(collection, cfg)?))
    }

    pub fn build(&self, collection: Arc<Collection>) -> Result<Box<dyn Generator>, GenError> {
        self.validate()?;
        let noise = |thresholds| PriorityRule::NoiseThreshold { thresholds, displacement: None };
        match self {
            Self::Baseline => self.engine(collection, PriorityRule::Consistency, StoppingRule::LargestInfinite),
            Self::VanishingNoise => self.engine(collection, noise(halving()), StoppingRule::LargestInfinite),
            Self::ConstantNoise { c } => self.engine(collection, noise(Thresholds::Uniform(*c)), StoppingRule::LargestInfinite),
            Self::SortingVariant { thresholds } => {
                let thresholds = thresholds.clone().unwrap_or_else(halving);
                self.engine(collection, PriorityRule::ActiveByIndex { thresholds }, StoppingRule::LargestInfinite)
            }
            Self::FallbackUpperDensity => self.engine(collection, PriorityRule::Consistency, StoppingRule::FallbackCommonPrefix),
            Self::VanishingSetDensity { eps } => {
                self.engine(collection, noise(Thresholds::Geometric { scale: *eps, offset: 0 }), StoppingRule::LargestInfinite)
            }
            Self::ConstantSetDensity { c, rho } => self.engine(collection, noise(Thresholds::Uniform(*c)), StoppingRule::DenseInAll(*rho)),
            Self::BoundedDense { eps, m } => {
                let priority = PriorityRule::NoiseThreshold { thresholds: Thresholds::Geometric { scale: *eps, offset: 0 }, displacement: Some(*m) };
                self.engine(collection, priority, StoppingRule::DenseInAll((one() - eps) / m))
            }
            Self::SetToElement { base, rho } => Ok(Box::new(SetToElement::new(base.build(collection)?, *rho, self.to_string()))),
            Self::RobustVersionSpace { d_star } => Ok(Box::new(RobustVersionSpace::new(collection, *d_star)?)),
            Self::FiniteExpansion { base, mode, limit } => base.build(Arc::new(collection.expand(*mode, *limit)?)),
            Self::Dedupe { base } => Ok(Box::new(Dedupe::new(base.build(collection)?))),
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConstantNoise { c } => write!(f, "constant_noise(c={})", fmt_rat(c)),
            Self::SortingVariant { thresholds: Some(t) } => write!(f, "sorting_variant(thresholds={})", t.describe()),
            Self::VanishingSetDensity { eps } => write!(f, "vanishing_set_density(eps={})", fmt_rat(eps)),
            Self::ConstantSetDensity { c, rho } => write!(f, "constant_set_density(c={}, rho={})", fmt_rat(c), fmt_rat(rho)),
            Self::BoundedDense { eps, m } => write!(f, "bounded_dense(eps={}, M={})", fmt_rat(eps), fmt_rat(m)),
            Self::SetToElement { base, rho } => write!(f, "set_to_element({base}, rho={})", fmt_rat(rho)),
            Self::RobustVersionSpace { d_star: Some(d) } => write!(f, "robust_version_space(d_star={d})"),
            Self::FiniteExpansion { base, mode, limit } => {
                let mode = match mode {
                    ExpansionMode::AddOnly => "add_only",
                    ExpansionMode::AddRemove => "add_remove",
                };
                write!(f, "finite_expansion({base}, mode={mode}, limit={limit})")
            }
            Self::Dedupe { base } => write!(f, "dedupe({base})"),
            _ => f.write_str(self.name()),
        }
    }
}

#[cfg(test)]
mod tests;
