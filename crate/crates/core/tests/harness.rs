use limitgen::harness::suite::bundled;
use limitgen::harness::{emit_plot_data, persist, read_trace, reanalyze, run, write_trace, PlotKind, Scenario, TraceHeader};
use limitgen::metrics::GameTrace;
use limitgen::{fmt_rat, Rational};

fn scenario(name: &str) -> Scenario {
    Scenario::parse(bundled(name).expect("bundled scenario")).expect("parses")
}

fn header_for(sc: &Scenario) -> (TraceHeader, limitgen::harness::RunOutput) {
    let out = run(sc).unwrap();
    (TraceHeader::new(sc, &out), out)
}

#[test]
fn vanishing_basic_records_n_star() {
    let mut sc = scenario("vanishing_basic");
    sc.horizon = 3000;
    let out = run(&sc).unwrap();
    let s = &out.summary;
    assert!(s.pass);
    assert_eq!(s.analysis.steps, 3000);
    assert!(s.analysis.n_star.is_some());
    assert!(s.analysis.last_violation.is_none_or(|l| l <= 1500));
    let json: serde_json::Value = serde_json::from_str(&limitgen::harness::persist::summary_json(&out).unwrap()).unwrap();
    for key in ["scenario", "n_star", "violations", "density", "certificates"] {
        assert!(json.get(key).is_some(), "summary lacks {key}");
    }
    assert_eq!(json["schema"], "limitgen-summary/1");
}

#[test]
fn malformed_configs_are_rejected() {
    let good = bundled("vanishing_basic").unwrap();
    for (from, to) in [
        ("horizon = 100000", "horizon = -3"),
        ("generator = vanishing_noise", "generator = nope"),
        ("stream { main = E", "stream { mian = E"),
        ("collection = [E, N]", "collection = []"),
        ("target = E", "target = finite([2])"),
        ("schema = \"limitgen-scenario/1\"", "schema = \"limitgen-scenario/9\""),
    ] {
        let bad = good.replace(from, to);
        assert_ne!(bad, good);
        assert!(Scenario::parse(&bad).is_err(), "accepted: {to}");
    }
}

#[test]
fn persisted_trace_replays_to_identical_analysis() {
    for name in ["vanishing_basic", "set_density_mod3", "bounded_element_m2", "robust_compliant"] {
        let mut sc = scenario(name);
        sc.horizon = 1500;
        let dir = tempfile::tempdir().unwrap();
        let out = run(&sc).unwrap();
        let written = persist(dir.path(), &sc, &out).unwrap();
        let (header, trace) = read_trace(std::fs::File::open(&written.trace).unwrap()).unwrap();
        assert_eq!(trace, out.trace, "{name}");
        assert_eq!(reanalyze(&header, &trace).unwrap(), out.summary.analysis, "{name}");
        let mut again = Vec::new();
        write_trace(&mut again, &header, &trace).unwrap();
        assert_eq!(again, std::fs::read(&written.trace).unwrap(), "{name}");
    }
}

#[test]
fn density_plot_has_one_row_per_grid_point() {
    let mut sc = scenario("bounded_element_m2");
    sc.horizon = 2000;
    let (header, out) = header_for(&sc);
    let csv = emit_plot_data(&header, &out.trace, PlotKind::Density, None).unwrap();
    let grid = out.summary.analysis.density.element.as_ref().unwrap().grid.len();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# limitgen-plot/1 density");
    assert_eq!(lines[1], "m,density");
    assert_eq!(lines.len() - 2, grid);
}

#[test]
fn empty_trace_plots_header_only() {
    let sc = scenario("vanishing_basic");
    let (header, _) = header_for(&Scenario { horizon: 1, ..sc });
    for kind in [PlotKind::NoiseRate, PlotKind::Density, PlotKind::Priority] {
        let csv = emit_plot_data(&header, &GameTrace::default(), kind, None).unwrap();
        assert_eq!(csv.lines().count(), 2, "{kind:?}: {csv}");
    }
}

fn in_fluctuating_language(x: u64) -> bool {
    let mut f = [1u64; 22];
    for k in 1..22 {
        f[k] = f[k - 1].saturating_mul(k as u64);
    }
    let in_blocks = (1..=10).any(|i| f[2 * i] <= x && x <= f[2 * i + 1]);
    in_blocks && !x.is_multiple_of(4)
}

#[test]
fn fluctuating_language_noise_rate() {
    let mut sc = scenario("sorting_fluctuation");
    sc.horizon = 50_000;
    let (header, out) = header_for(&sc);
    let csv = emit_plot_data(&header, &out.trace, PlotKind::NoiseRate, Some(3)).unwrap();
    let rates: Vec<Rational> = csv.lines().skip(2).map(|l| limitgen::parse_rat(l.split(',').nth(1).unwrap()).unwrap()).collect();
    let mut misses = 0;
    for (k, r) in rates.iter().enumerate() {
        let n = k as u64 + 1;
        if !in_fluctuating_language(n) {
            misses += 1;
        }
        assert_eq!(*r, Rational::new(misses, n as i64), "n={n}");
    }
    assert_eq!(fmt_rat(&rates[5]), "1/3");
    assert_eq!(fmt_rat(&rates[22]), "19/23");
    assert_eq!(fmt_rat(&rates[119]), "11/30");
    // member fraction: near 0 at the end of a gap, near 3/4 at the end of a block
    let member = |n: usize| Rational::from_integer(1) - rates[n - 1];
    assert!(member(40_319) < limitgen::rat(1, 10));
    assert!(member(5040) > limitgen::rat(5, 8));
    let half = limitgen::rat(1, 2);
    let crossings = rates.windows(2).filter(|w| (w[0] > half) != (w[1] > half)).count();
    assert!(crossings >= 4, "{crossings}");
}

#[test]
fn priority_plot_lists_ordered_languages() {
    let mut sc = scenario("vanishing_basic");
    sc.horizon = 50;
    let (header, out) = header_for(&sc);
    let csv = emit_plot_data(&header, &out.trace, PlotKind::Priority, None).unwrap();
    let rows = csv.lines().count() - 2;
    assert_eq!(rows, out.trace.steps.iter().map(|s| s.order.len()).sum::<usize>());
}
