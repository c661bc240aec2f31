//! Fixtures shared by the benchmarks.

use limitgen::harness::suite::bundled;
use limitgen::harness::Scenario;

/// A bundled scenario with its horizon replaced.
pub fn scenario(name: &str, horizon: u64) -> Scenario {
    let mut sc = Scenario::parse(bundled(name).expect("bundled scenario")).expect("bundled scenario parses");
    sc.horizon = horizon;
    sc
}
