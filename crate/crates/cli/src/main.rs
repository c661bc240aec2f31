use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use limitgen::harness::suite::{bundled, seed_override};
use limitgen::harness::{emit_plot_data, persist, read_trace, run, run_suite, PlotKind, Scenario, SuiteOptions};

#[derive(Parser)]
#[command(name = "limitgen", version, about = "Language generation in the limit from contaminated enumerations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file (or bundled scenario name) and persist its trace and summary.
    Run {
        file: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Run the bundled suite.
    Suite {
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Persist every trace and summary into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print rows as JSON lines.
        #[arg(long)]
        json: bool,
    },
    /// Emit CSV plot data from a persisted trace.
    Plot {
        trace: PathBuf,
        #[arg(long, value_parser = ["noise-rate", "density", "priority"])]
        kind: String,
        /// Collection index for noise rates; defaults to the target.
        #[arg(long)]
        language: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Parse and check a scenario file without running it.
    Validate { file: String },
    /// List bundled scenarios.
    List,
}

fn load(file: &str) -> Result<Scenario> {
    let path = Path::new(file);
    let src = if path.exists() {
        fs::read_to_string(path).with_context(|| format!("reading {file}"))?
    } else if let Some(src) = bundled(file) {
        src.to_string()
    } else {
        bail!("{file}: no such file or bundled scenario");
    };
    let mut sc = Scenario::parse(&src).map_err(|e| anyhow::anyhow!("{file}: {e}"))?;
    sc.generator.validate().map_err(|e| anyhow::anyhow!("{file}: {e}"))?;
    if let Some(seed) = seed_override()? {
        sc.set_seed(seed);
    }
    Ok(sc)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { file, out, horizon } => {
            let mut sc = load(&file)?;
            if let Some(h) = horizon {
                sc.horizon = h;
            }
            let result = run(&sc)?;
            let written = persist(&out, &sc, &result)?;
            for c in &result.summary.claims {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.claim, c.detail);
            }
            println!("trace: {}", written.trace.display());
            println!("summary: {}", written.summary.display());
            Ok(result.summary.pass)
        }
        Command::Suite { filter, horizon, out, json } => {
            let opts = SuiteOptions { filter, horizon, seed: seed_override()? };
            let rows = run_suite(&opts, out.as_deref())?;
            if rows.is_empty() {
                bail!("no bundled scenario matches the filter");
            }
            let mut stdout = std::io::stdout().lock();
            for r in &rows {
                if json {
                    writeln!(stdout, "{}", serde_json::to_string(r)?)?;
                    continue;
                }
                let status = if r.pass { "PASS" } else { "FAIL" };
                writeln!(stdout, "{status} {:<28} {:<38} H={}", r.scenario, r.claim, r.horizon)?;
                if let Some(e) = &r.error {
                    writeln!(stdout, "    error: {e}")?;
                }
                for c in r.claims.iter().filter(|c| !c.pass) {
                    writeln!(stdout, "    {}: {}", c.claim, c.detail)?;
                }
            }
            let passed = rows.iter().filter(|r| r.pass).count();
            writeln!(stdout, "{passed}/{} scenarios passed", rows.len())?;
            Ok(passed == rows.len())
        }
        Command::Plot { trace, kind, language, output } => {
            let file = fs::File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let (header, t) = read_trace(file)?;
            let kind = PlotKind::parse(&kind).expect("checked by clap");
            let csv = emit_plot_data(&header, &t, kind, language)?;
            match output {
                Some(p) => fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => std::io::stdout().write_all(csv.as_bytes())?,
            }
            Ok(true)
        }
        Command::Validate { file } => {
            let sc = load(&file)?;
            println!(
                "ok: {} ({}) horizon={} seed={} languages={} generator={}",
                sc.name,
                sc.claim,
                sc.horizon,
                sc.seed,
                sc.collection.len(),
                sc.generator.name()
            );
            Ok(true)
        }
        Command::List => {
            for (name, _) in limitgen::harness::BUNDLED {
                println!("{name}");
            }
            Ok(true)
        }
    }
}
