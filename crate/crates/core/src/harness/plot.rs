//! CSV series for external plotting.

use std::fmt::Write;

use super::persist::TraceHeader;
use super::scenario::parse_language;
use super::HarnessError;
use crate::metrics::GameTrace;
use crate::rational::{fmt_rat, Rational};

pub const PLOT_SCHEMA: &str = "limitgen-plot/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Empirical noise rate after each step.
    NoiseRate,
    /// Exact set density per step (set mode) or element density on the grid.
    Density,
    /// Priority of every ordered language per step.
    Priority,
}

impl PlotKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "noise-rate" => Some(Self::NoiseRate),
            "density" => Some(Self::Density),
            "priority" => Some(Self::Priority),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NoiseRate => "noise-rate",
            Self::Density => "density",
            Self::Priority => "priority",
        }
    }
}

/// Renders a plot from a trace. `language` selects the collection member
/// for noise rates (default: the target).
pub fn emit_plot_data(header: &TraceHeader, trace: &GameTrace, kind: PlotKind, language: Option<usize>) -> Result<String, HarnessError> {
    let mut out = format!("# {PLOT_SCHEMA} {}\n", kind.name());
    match kind {
        PlotKind::NoiseRate => {
            let src = match language {
                None => &header.target,
                Some(i) => header
                    .languages
                    .get(i.wrapping_sub(1))
                    .ok_or_else(|| HarnessError::Trace(format!("no language with index {i}")))?,
            };
            let lang = parse_language(src)?;
            out.push_str("n,rate\n");
            let mut misses = 0i64;
            for s in &trace.steps {
                if !lang.contains(s.x) {
                    misses += 1;
                }
                writeln!(out, "{},{}", s.n, fmt_rat(&Rational::new(misses, s.n as i64))).expect("string write");
            }
        }
        PlotKind::Density => {
            let analysis = super::persist::reanalyze(header, trace)?;
            if let Some(e) = &analysis.density.element {
                out.push_str("m,density\n");
                for (m, d) in e.grid.iter().zip(&e.profile) {
                    writeln!(out, "{m},{}", fmt_rat(d)).expect("string write");
                }
            } else {
                let mut t = trace.clone();
                crate::metrics::annotate(&mut t, &parse_language(&header.target)?, header.mode);
                out.push_str("n,density\n");
                for s in &t.steps {
                    let d = s.set_density.map_or_else(String::new, |d| fmt_rat(&d));
                    writeln!(out, "{},{d}", s.n).expect("string write");
                }
            }
        }
        PlotKind::Priority => {
            out.push_str("n,index,priority\n");
            for s in &trace.steps {
                for (i, p) in &s.order {
                    writeln!(out, "{},{i},{p}", s.n).expect("string write");
                }
            }
        }
    }
    Ok(out)
}
