//! Pipelines over a scenario, written to an output directory with a manifest
//! of file hashes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::adversary::{
    build_general_schedule, build_separated_schedule, sandwich_verify, witness_sequence, AdversaryRun, GeneralParams,
    SandwichOptions, SandwichParams, SeparatedParams, WitnessOptions,
};
use crate::engine::{
    displacement_vector, fact_bb93_check, run_apm_with, run_perturbed, DisplacementOptions, PerturbationSchedule,
    RunOptions,
};
use crate::error::{Error, Result};
use crate::metrics::{hausdorff, localized_hausdorff, Sampler};
use crate::probe::{
    bounded_vs_global_check, d_stability_trial, estimate_modulus, PerturbationModel, ProbeSampler, RandomModel,
};
use crate::scenario::{resolve_scenario, write_atomic, Scenario};
use crate::tol::Tolerances;
use crate::vector::Vector;

fn default_stop_tol() -> f64 {
    1e-12
}

fn default_r0() -> f64 {
    2.0
}

fn default_samples() -> usize {
    4096
}

/// One pipeline stage; the tag `stage` selects the variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case", deny_unknown_fields)]
pub enum Stage {
    Apm {
        /// Defaults to the all-ones vector.
        #[serde(default)]
        start: Option<Vector>,
        #[serde(default = "default_stop_tol")]
        stop_tol: f64,
    },
    /// Replays a schedule file, or the schedule inside an adversary report.
    Perturbed {
        schedule: PathBuf,
        start: Vector,
    },
    Metrics {
        /// Localized distances when set (required for unbounded sets).
        #[serde(default)]
        radius: Option<f64>,
    },
    Adversary {
        eps: f64,
        epochs: usize,
        #[serde(default)]
        delta_schedule: Option<Vec<f64>>,
        #[serde(default = "default_r0")]
        r0: f64,
        #[serde(default)]
        start: Option<Vector>,
    },
    Probe {
        eps_grid: Vec<f64>,
        delta_grid: Vec<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        window: Option<f64>,
        #[serde(default)]
        windows: Vec<f64>,
        #[serde(default)]
        trials: usize,
        #[serde(default)]
        horizon: usize,
        #[serde(default)]
        model: Option<RandomModel>,
    },
    Sandwich,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Apm { .. } => "apm",
            Stage::Perturbed { .. } => "perturbed",
            Stage::Metrics { .. } => "metrics",
            Stage::Adversary { .. } => "adversary",
            Stage::Probe { .. } => "probe",
            Stage::Sandwich => "sandwich",
        }
    }
}

fn default_budget() -> usize {
    1_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in spec such as `vanishing-angle(k=64)` or a scenario JSON path.
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tol: Tolerances,
    /// Step cap per run or phase.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub pipeline: Vec<Stage>,
}

impl ExperimentConfig {
    pub fn new(scenario: impl Into<String>, pipeline: Vec<Stage>) -> Self {
        ExperimentConfig {
            scenario: scenario.into(),
            seed: 0,
            tol: Tolerances::default(),
            budget: default_budget(),
            pipeline,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config(format!("{}: {}", e.path(), e.inner())))
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(self)?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exit_code: i32,
    pub outputs: Vec<OutputFile>,
    /// Headline numbers of the stage.
    pub summary: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub scenario: String,
    pub config: ExperimentConfig,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    /// First nonzero stage exit code, or 0.
    pub fn exit_code(&self) -> i32 {
        self.stages.iter().map(|s| s.exit_code).find(|c| *c != 0).unwrap_or(0)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<OutputFile>,
}

impl Outputs<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(OutputFile {
            path: name.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write(name, &text)
    }
}

/// Runs every stage in order (a failed stage does not stop the rest) and
/// writes `manifest.json` last.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Manifest> {
    let scenario = resolve_scenario(&config.scenario)?;
    std::fs::create_dir_all(out_dir)?;
    let mut stages = Vec::with_capacity(config.pipeline.len());
    for (i, stage) in config.pipeline.iter().enumerate() {
        let prefix = if config.pipeline.len() > 1 {
            format!("{:02}_{}", i + 1, stage.name())
        } else {
            stage.name().to_string()
        };
        let mut out = Outputs {
            dir: out_dir,
            files: Vec::new(),
        };
        let result = run_stage(&scenario, config, stage, &prefix, &mut out);
        stages.push(match result {
            Ok(summary) => StageRecord {
                stage: stage.name().into(),
                ok: true,
                error: None,
                exit_code: 0,
                outputs: out.files,
                summary,
            },
            Err(e) => StageRecord {
                stage: stage.name().into(),
                ok: false,
                error: Some(e.to_string()),
                exit_code: e.exit_code(),
                outputs: out.files,
                summary: Value::Null,
            },
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config.hash()?,
        seed: config.seed,
        scenario: scenario.name.clone(),
        config: config.clone(),
        stages,
    };
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    write_atomic(&out_dir.join("manifest.json"), &text)?;
    Ok(manifest)
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn run_stage(s: &Scenario, cfg: &ExperimentConfig, stage: &Stage, prefix: &str, out: &mut Outputs) -> Result<Value> {
    let pair = s.pair();
    let refs = RunOptions::with_refs(pair.references());
    match stage {
        Stage::Apm { start, stop_tol } => {
            let x0 = start.clone().unwrap_or_else(|| Vector::from_slice(&vec![1.0; s.dimension]));
            check_dim(&x0, s.dimension, "start")?;
            let trace = run_apm_with(&pair.a, &pair.b, &x0, cfg.budget, *stop_tol, &refs, |_| {
                Ok(std::ops::ControlFlow::Continue(()))
            })?;
            let summary = trace.summary();
            out.write(&format!("{prefix}_trace.csv"), &csv_bytes(|b| Ok(trace.write_csv(b)?))?)?;
            out.json(&format!("{prefix}.json"), &summary)?;
            Ok(serde_json::to_value(&summary)?)
        }
        Stage::Perturbed { schedule, start } => {
            let text = std::fs::read_to_string(schedule).map_err(|e| Error::Config(format!("{}: {e}", schedule.display())))?;
            let mut doc: Value = serde_json::from_str(&text)?;
            // an adversary report carries its schedule under `schedule`
            if let Some(inner) = doc.get_mut("schedule") {
                doc = inner.take();
            }
            let sched: PerturbationSchedule = serde_json::from_value(doc)?;
            check_dim(start, s.dimension, "start")?;
            let trace = run_perturbed(&sched, start, &refs)?;
            let summary = trace.summary();
            out.write(&format!("{prefix}_trace.csv"), &csv_bytes(|b| Ok(trace.write_csv(b)?))?)?;
            out.json(&format!("{prefix}.json"), &summary)?;
            Ok(serde_json::to_value(&summary)?)
        }
        Stage::Metrics { radius } => {
            let sampler = Sampler {
                seed: cfg.seed,
                ..Sampler::default()
            };
            let dist = match radius {
                Some(r) => Some(localized_hausdorff(&pair.a, &pair.b, *r, &sampler)?),
                None if pair.a.bound_radius().is_finite() && pair.b.bound_radius().is_finite() => {
                    Some(hausdorff(&pair.a, &pair.b, &sampler)?)
                }
                None => None,
            };
            let disp = displacement_vector(
                &pair.a,
                &pair.b,
                s.analytic.v.as_ref(),
                &DisplacementOptions {
                    seed: cfg.seed,
                    budget: cfg.budget,
                    ..DisplacementOptions::default()
                },
            )?;
            let bb93 = match (&pair.e, &pair.f) {
                (Some(_), Some(_)) => Some(fact_bb93_check(&pair, 100, cfg.seed)?),
                _ => None,
            };
            let report = json!({
                "scenario": s.name,
                "hausdorff": dist,
                "displacement": disp,
                "fact_check": bb93,
            });
            out.json(&format!("{prefix}.json"), &report)?;
            Ok(report)
        }
        Stage::Adversary {
            eps,
            epochs,
            delta_schedule,
            r0,
            start,
        } => {
            let run = adversary_run(s, cfg, *eps, *epochs, delta_schedule.as_deref(), *r0, start.as_ref())?;
            out.json(&format!("{prefix}.json"), &run)?;
            let trace = run_perturbed(&run.schedule, &run.start, &refs)?;
            out.write(&format!("{prefix}_trace.csv"), &csv_bytes(|b| Ok(trace.write_csv(b)?))?)?;
            let summary = json!({
                "eps": run.eps,
                "epochs": run.epochs.len(),
                "steps": run.schedule.total_len(),
                "min_separation": run.min_separation(),
                "checkpoints": run.checkpoints.iter().map(|c| json!({"epoch": c.epoch, "index": c.index, "dist_to_e": c.dist_to_e})).collect::<Vec<_>>(),
                "aw_certificate": run.aw_certificate,
            });
            if !run.aw_certificate {
                return Err(Error::Certificate {
                    what: "Attouch-Wets convergence of the schedule".into(),
                    measured: run.aw_a.as_ref().map_or(f64::NAN, |r| r.max_ratio),
                    bound: 1.0,
                });
            }
            Ok(summary)
        }
        Stage::Probe {
            eps_grid,
            delta_grid,
            samples,
            window,
            windows,
            trials,
            horizon,
            model,
        } => {
            let sampler = ProbeSampler {
                samples: *samples,
                seed: cfg.seed,
                extra: s.raw_witnesses(),
                ..ProbeSampler::default()
            };
            let est = estimate_modulus(&pair, eps_grid, delta_grid, &sampler, *window)?;
            out.json(&format!("{prefix}_modulus.json"), &est)?;
            let mut summary = json!({
                "eps_grid": est.eps_grid,
                "delta_hat": est.delta_hat,
                "violations": est.violations.len(),
                "candidates": est.candidates,
            });
            if !windows.is_empty() {
                let eps = *est.eps_grid.last().unwrap_or(&0.1);
                let rep = bounded_vs_global_check(&pair, windows, eps, delta_grid, &sampler)?;
                out.json(&format!("{prefix}_bounded.json"), &rep)?;
                summary["bounded"] = serde_json::to_value(&rep)?;
            }
            if *trials > 0 {
                let m = PerturbationModel::Random(model.clone().unwrap_or_default());
                let rep = d_stability_trial(&pair, &m, *trials, (*horizon).max(1), cfg.seed, 3.0)?;
                out.json(&format!("{prefix}_stability.json"), &rep)?;
                out.write(
                    &format!("{prefix}_profiles.csv"),
                    &csv_bytes(|b| rep.write_profiles_csv(b))?,
                )?;
                summary["max_terminal_dist"] = json!(rep.max_terminal_dist);
            }
            Ok(summary)
        }
        Stage::Sandwich => {
            let spec = s
                .analytic
                .sandwich
                .as_ref()
                .ok_or_else(|| Error::Config(format!("scenario {} has no sandwich data", s.name)))?;
            let params = SandwichParams::new(spec.z.clone(), spec.w.clone())?;
            let rep = sandwich_verify(&params, &pair.a, &pair.b, cfg.budget, &SandwichOptions::default())?;
            out.write(&format!("{prefix}_trace.csv"), &csv_bytes(|b| Ok(rep.trace.write_csv(b)?))?)?;
            let summary = json!({
                "plane_dist": rep.plane_dist,
                "segment_dist_a": rep.segment_dist_a,
                "segment_dist_b": rep.segment_dist_b,
                "reached_at": rep.reached_at,
                "final_dist_to_w": rep.final_dist_to_w,
            });
            out.json(&format!("{prefix}.json"), &summary)?;
            Ok(summary)
        }
    }
}

fn check_dim(x: &Vector, dim: usize, what: &str) -> Result<()> {
    if x.dim() != dim {
        return Err(Error::Config(format!("{what} has dimension {}, scenario has {dim}", x.dim())));
    }
    Ok(())
}

/// The general-case construction when the scenario lists opening directions,
/// otherwise the separated one.
pub fn adversary_run(
    s: &Scenario,
    cfg: &ExperimentConfig,
    eps: f64,
    epochs: usize,
    delta_schedule: Option<&[f64]>,
    r0: f64,
    start: Option<&Vector>,
) -> Result<AdversaryRun> {
    if epochs == 0 {
        return Err(Error::Config("epochs must be ≥ 1".into()));
    }
    if let Some(d) = delta_schedule {
        if d.len() != epochs {
            return Err(Error::Config(format!("delta schedule has {} entries for {epochs} epochs", d.len())));
        }
    }
    let pair = s.pair();
    let raw = s.raw_witnesses();
    let dirs = s.directions();
    if let Some(u) = dirs.last() {
        let mut params = GeneralParams::standard(eps, epochs, r0);
        if let Some(d) = delta_schedule {
            params.deltas = d.to_vec();
        }
        params.cap = cfg.budget;
        params.tol = cfg.tol;
        params.aw.sampler.seed = cfg.seed;
        let ws = witness_sequence(&pair, eps, &params.deltas, &raw, &WitnessOptions::default())?;
        let points: Vec<Vector> = ws.into_iter().map(|w| w.point).collect();
        return build_general_schedule(&pair, std::slice::from_ref(u), &points, &params);
    }
    let sep = s.analytic.separator.clone().ok_or_else(|| {
        Error::Hypothesis(format!(
            "scenario {} has neither opening directions nor a separator",
            s.name
        ))
    })?;
    let deltas = match delta_schedule {
        Some(d) => d.to_vec(),
        None => (0..epochs).map(|h| 0.3 * eps * 0.95f64.powi(h as i32)).collect(),
    };
    let opts = WitnessOptions {
        separator: Some(sep.clone()),
        ..WitnessOptions::default()
    };
    let ws = witness_sequence(&pair, eps, &deltas, &raw, &opts)?;
    let points: Vec<Vector> = ws.into_iter().map(|w| w.point).collect();
    let x0 = match start {
        Some(x) => x.clone(),
        None => raw
            .last()
            .cloned()
            .ok_or_else(|| Error::NoWitness("no start point and no witnesses".into()))?,
    };
    let mut params = SeparatedParams::new(eps, deltas, sep);
    params.budget_per_phase = cfg.budget;
    params.tol = cfg.tol;
    params.aw.sampler.seed = cfg.seed;
    build_separated_schedule(&pair, &x0, &points, &params)
}
