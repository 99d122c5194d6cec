//! Command-line front end: one verb per engine operation, a JSON report out.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flux_engine::cohomology::Circle;
use flux_engine::scenario::{
    expand_example_id, run_example, run_sections, HolonomyConfig, RunOptions, ScenarioConfig, Sections,
};
use flux_engine::{Error, Result};

#[derive(Parser)]
#[command(name = "flux-engine", version, about = "H-flux bookkeeping under reduction and T-duality")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the holonomy sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Include per-section wall-clock times in the report.
    #[arg(long)]
    timing: bool,
}

impl Output {
    fn options(&self) -> RunOptions {
        RunOptions {
            timing: self.timing,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Verb {
    /// Stratum verdict r, dim K and r♯.
    Rsharp(Common),
    /// Irreducible kernel of the class.
    Kernel(Common),
    /// Compose Buscher dualities along the configured circles.
    Tdualize {
        #[command(flatten)]
        common: Common,
        /// Comma-separated circle labels replacing the config's list.
        #[arg(long, value_delimiter = ',')]
        dualize: Option<Vec<String>>,
    },
    /// Collapse one torus circle and report the reduced verdict.
    Reduce {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        circle: Option<String>,
    },
    /// Per-circle BEM obstruction rows and case labels.
    CheckBem(Common),
    /// Off-diagonal holonomy rank survey against r♯.
    VerifyHolonomy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Reproduce a bundled worked example, e.g. `4.2` or `4.4-phi`.
    RunExample {
        id: String,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_circle(label: &str, path: &str) -> Result<Circle> {
    label
        .parse()
        .map_err(|e: String| Error::config(path, e))
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)
}

fn scenario_report(cfg: ScenarioConfig, sections: Sections, out: &Output) -> Result<String> {
    let sc = cfg.validate()?;
    let report = run_sections(&sc, sections, out.options())?;
    Ok(report.to_json())
}

fn run(verb: Verb) -> Result<(String, Option<PathBuf>)> {
    let only = |f: fn(&mut Sections)| {
        let mut s = Sections::none();
        f(&mut s);
        s
    };
    let (json, out) = match verb {
        Verb::Rsharp(c) | Verb::Kernel(c) => {
            let json = scenario_report(load(&c.config)?, only(|s| s.stratum = true), &c.output)?;
            (json, c.output)
        }
        Verb::CheckBem(c) => {
            let json = scenario_report(load(&c.config)?, only(|s| s.circles = true), &c.output)?;
            (json, c.output)
        }
        Verb::Tdualize { common, dualize } => {
            let mut cfg = load(&common.config)?;
            if let Some(labels) = dualize {
                cfg.dualize = labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| parse_circle(l, &format!("--dualize[{i}]")))
                    .collect::<Result<_>>()?;
            }
            let json = scenario_report(cfg, only(|s| s.duality = true), &common.output)?;
            (json, common.output)
        }
        Verb::Reduce { common, circle } => {
            let mut cfg = load(&common.config)?;
            if let Some(label) = circle {
                cfg.reduce = Some(parse_circle(&label, "--circle")?);
            }
            let json = scenario_report(
                cfg,
                Sections {
                    stratum: true,
                    reduction: true,
                    ..Sections::none()
                },
                &common.output,
            )?;
            (json, common.output)
        }
        Verb::VerifyHolonomy {
            common,
            step,
            samples,
            tolerance,
        } => {
            let mut cfg = load(&common.config)?;
            let mut h = cfg.holonomy.take().unwrap_or_else(HolonomyConfig::default);
            h.step = step.unwrap_or(h.step);
            h.sample_count = samples.unwrap_or(h.sample_count);
            h.tolerance = tolerance.unwrap_or(h.tolerance);
            cfg.holonomy = Some(h);
            let json = scenario_report(cfg, only(|s| s.holonomy = true), &common.output)?;
            (json, common.output)
        }
        Verb::RunExample { id, output } => {
            let ids = expand_example_id(&id)?;
            let reports = ids
                .iter()
                .map(|id| run_example(id, output.options()))
                .collect::<Result<Vec<_>>>()?;
            let json = if reports.len() == 1 {
                reports[0].to_json()
            } else {
                serde_json::to_string_pretty(&reports).expect("reports serialize")
            };
            (json, output)
        }
    };
    Ok((json, out.out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli.verb).and_then(|(json, out)| match out {
        Some(path) => fs::write(&path, json + "\n").map_err(Error::from),
        None => {
            println!("{json}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
