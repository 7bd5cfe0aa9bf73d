use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use apm_lab::experiment::{run_experiment, ExperimentConfig, Stage};
use apm_lab::probe::RandomModel;
use apm_lab::scenario::{builtin_scenarios, resolve_scenario, save_scenario, FAMILIES};
use apm_lab::{Error, Result, Tolerances, Vector};

/// Alternating projections, perturbed schedules and regularity probes.
#[derive(Parser)]
#[command(name = "apm-lab", version)]
struct Cli {
    /// Geometric tolerance (membership, projections, pinning).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Step cap per run or phase.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    budget: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ScenarioArg {
    /// Built-in spec such as `vanishing-angle(k=64)`, or a scenario JSON file.
    #[arg(long, short)]
    scenario: String,
}

// a comma-separated list is one argument; clap would split a bare Vec<f64>
type List = ::std::vec::Vec<f64>;

#[derive(Subcommand)]
enum Cmd {
    /// Project a point onto A or B of a scenario.
    Project {
        #[command(flatten)]
        s: ScenarioArg,
        #[arg(long, default_value = "a")]
        set: String,
        /// Comma-separated coordinates.
        #[arg(long, value_parser = parse_vector)]
        point: Vector,
    },
    /// Classical alternating projections.
    Apm {
        #[command(flatten)]
        s: ScenarioArg,
        #[arg(long, value_parser = parse_vector)]
        start: Option<Vector>,
        #[arg(long, default_value_t = 1e-12)]
        stop_tol: f64,
    },
    /// Replay a saved perturbation schedule.
    Perturbed {
        #[command(flatten)]
        s: ScenarioArg,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, value_parser = parse_vector)]
        start: Vector,
    },
    /// Hausdorff distance, displacement vector and fixed-point facts.
    Metrics {
        #[command(flatten)]
        s: ScenarioArg,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Build a schedule that keeps the iterates away from A ∩ B.
    Adversary {
        #[command(flatten)]
        s: ScenarioArg,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 8)]
        epochs: usize,
        /// Comma-separated δ_h, one per epoch.
        #[arg(long, value_parser = parse_list)]
        delta_schedule: Option<List>,
        /// Truncation radii are r_h = h + r0.
        #[arg(long, default_value_t = 2.0)]
        r0: f64,
        #[arg(long, value_parser = parse_vector)]
        start: Option<Vector>,
    },
    /// Regularity modulus search, window comparison and randomized trials.
    Probe {
        #[command(flatten)]
        s: ScenarioArg,
        #[arg(long, value_parser = parse_list, default_value = "0.1")]
        eps_grid: List,
        #[arg(long, value_parser = parse_list, default_value = "0.001,0.01,0.05")]
        delta_grid: List,
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, value_parser = parse_list)]
        windows: Option<List>,
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
        /// δ_n = c / n^p for the randomized trials.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Planar confinement run on a scenario with sandwich data.
    Sandwich {
        #[command(flatten)]
        s: ScenarioArg,
    },
    /// Built-in scenarios.
    Scenario {
        #[command(subcommand)]
        cmd: ScenarioCmd,
    },
    /// Run a pipeline from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    List,
    Show {
        name: String,
        /// Also write the scenario JSON here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", t.trim())))
        .collect()
}

fn parse_vector(s: &str) -> std::result::Result<Vector, String> {
    Vector::new(parse_list(s)?).map_err(|e| e.to_string())
}

/// Prints a line, ignoring a closed pipe.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn stage_for(cmd: Cmd) -> Option<(String, Stage)> {
    Some(match cmd {
        Cmd::Apm { s, start, stop_tol } => (s.scenario, Stage::Apm { start, stop_tol }),
        Cmd::Perturbed { s, schedule, start } => (s.scenario, Stage::Perturbed { schedule, start }),
        Cmd::Metrics { s, radius } => (s.scenario, Stage::Metrics { radius }),
        Cmd::Adversary {
            s,
            eps,
            epochs,
            delta_schedule,
            r0,
            start,
        } => (
            s.scenario,
            Stage::Adversary {
                eps,
                epochs,
                delta_schedule,
                r0,
                start,
            },
        ),
        Cmd::Probe {
            s,
            eps_grid,
            delta_grid,
            samples,
            window,
            windows,
            trials,
            horizon,
            c,
            p,
        } => (
            s.scenario,
            Stage::Probe {
                eps_grid,
                delta_grid,
                samples,
                window,
                windows: windows.unwrap_or_default(),
                trials,
                horizon,
                model: Some(RandomModel {
                    c,
                    p,
                    ..RandomModel::default()
                }),
            },
        ),
        Cmd::Sandwich { s } => (s.scenario, Stage::Sandwich),
        _ => return None,
    })
}

fn run(cli: Cli) -> Result<i32> {
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tol {
        if !(t > 0.0) {
            return Err(Error::Config(format!("--tol must be > 0, got {t}")));
        }
        tol.geometric = t;
    }
    let config = match cli.cmd {
        Cmd::Project { s, set, point } => {
            let sc = resolve_scenario(&s.scenario)?;
            let target = match set.as_str() {
                "a" | "A" => &sc.a,
                "b" | "B" => &sc.b,
                other => return Err(Error::Config(format!("--set must be a or b, got {other}"))),
            };
            let p = target.project(&point)?;
            let report = serde_json::json!({"point": point, "projection": p, "distance": p.dist(&point)});
            emit(&serde_json::to_string_pretty(&report)?);
            return Ok(0);
        }
        Cmd::Scenario { cmd: ScenarioCmd::List } => {
            for (family, params) in FAMILIES {
                emit(&format!("{family:<18} {params}"));
            }
            for s in builtin_scenarios() {
                emit(&format!("  {} (dim {}, {:?})", s.name, s.dimension, s.analytic.regularity));
            }
            return Ok(0);
        }
        Cmd::Scenario {
            cmd: ScenarioCmd::Show { name, save },
        } => {
            let s = resolve_scenario(&name)?;
            if let Some(path) = save {
                save_scenario(&s, &path)?;
            }
            emit(&s.to_json()?);
            return Ok(0);
        }
        Cmd::Run { config } => {
            let mut c = ExperimentConfig::load(&config)?;
            if cli.tol.is_some() {
                c.tol = tol;
            }
            c
        }
        other => {
            let (scenario, stage) = stage_for(other).expect("remaining commands are stages");
            ExperimentConfig {
                scenario,
                seed: cli.seed,
                tol,
                budget: cli.budget,
                pipeline: vec![stage],
            }
        }
    };
    let manifest = run_experiment(&config, &cli.out)?;
    for s in &manifest.stages {
        match &s.error {
            None => emit(&serde_json::to_string_pretty(&s.summary)?),
            Some(e) => eprintln!("{} failed: {e}", s.stage),
        }
    }
    eprintln!("wrote {}", cli.out.join("manifest.json").display());
    Ok(manifest.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
