//! Ad-hoc subcommands: thin wrappers that print JSON to stdout.

use std::io::Read;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use heavytail::cadlag::{j1_distance, m1prime_bounds, rate_j1, rate_m1prime, rate_rw, uniform_distance, StepPath, DEFAULT_J1_TOL};
use heavytail::jump_sim::tail_moments;
use heavytail::rare_event::{
    estimate_big_jump_conditioned, estimate_plain, ln_exact_jump_vector_prob, EstimateResult, EventSpec, McSettings,
};
use heavytail::tail::{verify_limit, LimitId};
use serde_json::json;

use crate::config::RunConfig;
use crate::experiments::{lemma31, lemma31_csv, lemma32, lemma32_csv, simulate_records};
use crate::output::{to_json, write_atomic};
use crate::run::{out_dir, Manifest, Status, MANIFEST};
use crate::{MethodArg, MetricArg};

/// `n` grid of the log-probability decomposition when run from the command line.
const LEMMA32_GRID: [f64; 5] = [20.0, 100.0, 1000.0, 1e4, 162_754.791_419_003_9];

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RunConfig::parse(&text)
        }
        None => RunConfig::parse("{}"),
    }
}

fn read_stdin() -> Result<String> {
    let mut s = String::new();
    std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
    Ok(s)
}

/// Computation errors exit with 1; parsing problems propagate as usage errors.
fn computed<T>(r: Result<T>) -> std::result::Result<T, ExitCode> {
    r.map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}

macro_rules! try_compute {
    ($e:expr) => {
        match computed($e) {
            Ok(v) => v,
            Err(code) => return Ok(code),
        }
    };
}

pub fn simulate(
    config: Option<&Path>,
    out: Option<&Path>,
    n: u64,
    k: usize,
    trials: u64,
    seed: u64,
    resolution: usize,
) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let levy = cfg.levy()?;
    let moments = tail_moments(&cfg.tail)?;
    let lines = try_compute!(simulate_records(&levy, &moments, n, k, trials, seed, resolution));
    match out {
        Some(dir) => write_atomic(&dir.join("paths.jsonl"), lines.concat().as_bytes())?,
        None => print!("{}", lines.concat()),
    }
    Ok(ExitCode::SUCCESS)
}

pub fn distance(metric: MetricArg, density: f64) -> Result<ExitCode> {
    let [p, q]: [StepPath; 2] =
        serde_json::from_str(&read_stdin()?).context("stdin must hold a JSON array of two step paths")?;
    let v = match metric {
        MetricArg::J1 => json!({ "metric": "j1", "distance": try_compute!(Ok(j1_distance(&p, &q, DEFAULT_J1_TOL)?)) }),
        MetricArg::Uniform => json!({ "metric": "uniform", "distance": uniform_distance(&p, &q) }),
        MetricArg::M1p => {
            let b = try_compute!(Ok(m1prime_bounds(&p, &q, density)?));
            json!({ "metric": "m1p", "lower": b.lower, "upper": b.upper })
        }
    };
    println!("{v}");
    Ok(ExitCode::SUCCESS)
}

pub fn rate() -> Result<ExitCode> {
    let p: StepPath = serde_json::from_str(&read_stdin()?).context("stdin must hold a step path")?;
    println!("{}", json!({ "I_J1": rate_j1(&p), "I_M1p": rate_m1prime(&p), "I_rw": rate_rw(&p) }));
    Ok(ExitCode::SUCCESS)
}

pub fn estimate(
    config: Option<&Path>,
    event: &str,
    n: u64,
    method: MethodArg,
    trials: u64,
    j: Option<usize>,
    seed: u64,
) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let event: EventSpec = serde_json::from_str(event).context("--event is not a valid event")?;
    let event = event.complete()?;
    if matches!(method, MethodArg::Conditioned) && j.is_none() {
        return Err(anyhow!("--method conditioned needs --j"));
    }
    let levy = cfg.levy()?;
    let moments = tail_moments(&cfg.tail)?;
    let mc = McSettings::new(trials, seed);
    let r: EstimateResult = try_compute!((|| -> Result<EstimateResult> {
        Ok(match method {
            MethodArg::Plain => estimate_plain(&event, &levy, &moments, n, mc)?,
            MethodArg::Conditioned => estimate_big_jump_conditioned(&event, &levy, &moments, n, j.unwrap_or(0), mc)?,
            MethodArg::Exact => {
                let rect = event.rectangle().ok_or_else(|| anyhow!("exact estimation needs a jump-vector event"))?;
                let speed = cfg.tail.speed(n as f64)?;
                EstimateResult::exact(n, ln_exact_jump_vector_prob(&cfg.tail, n as f64, &rect)?, speed)
            }
        })
    })());
    println!("{}", serde_json::to_string(&r)?);
    Ok(ExitCode::SUCCESS)
}

pub fn verify_limits(config: Option<&Path>, out: Option<&Path>, n_grid: &[u64]) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let dir = out_dir(out, Some(&cfg));
    let mut summary = serde_json::Map::new();
    for id in LimitId::ALL {
        let r = try_compute!(Ok(verify_limit(id, &cfg.tail, &id.default_aux(), n_grid)?));
        write_atomic(&dir.join(format!("{}.csv", id.name())), r.to_csv().as_bytes())?;
        summary.insert(id.name().into(), json!(r.max_abs_error_at_largest_n));
    }
    println!("{}", serde_json::Value::Object(summary));
    Ok(ExitCode::SUCCESS)
}

pub fn counterexample(
    config: Option<&Path>,
    out: Option<&Path>,
    n_list: &[u64],
    trials: u64,
    seed: u64,
) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let dir = out_dir(out, Some(&cfg));
    let pretty = cfg.format.pretty_json;
    let r31 = try_compute!(lemma31(&cfg, n_list, seed));
    let r32 = try_compute!(lemma32(&cfg, &LEMMA32_GRID, trials, 256, seed));
    write_atomic(&dir.join("lemma31.json"), to_json(&r31, pretty)?.as_bytes())?;
    write_atomic(&dir.join("lemma31.csv"), lemma31_csv(&r31)?.as_bytes())?;
    write_atomic(&dir.join("lemma32.json"), to_json(&r32, pretty)?.as_bytes())?;
    write_atomic(&dir.join("lemma32.csv"), lemma32_csv(&r32)?.as_bytes())?;
    let v = json!({
        "n_threshold": heavytail::counterexample::CounterexampleParams::new(cfg.tail)?.n_min,
        "lemma31_all_positive": r31.all_positive,
        "lemma31_grid_stable": r31.grid_stable,
        "lemma32_target": r32.target,
        "lemma32_terminal_combined": r32.terminal_combined,
        "lemma32_above_minus_two": r32.above_minus_two,
    });
    println!("{v}");
    Ok(ExitCode::SUCCESS)
}

pub fn report(out: Option<&Path>) -> Result<ExitCode> {
    let path = out_dir(out, None).join(MANIFEST);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let m: Manifest = serde_json::from_str(&text).context("malformed manifest")?;
    println!("config {} (sha256 {})", m.config_path, m.config_sha256);
    for e in &m.experiments {
        let status = match e.status {
            Status::Ok => "ok",
            Status::Failed => "FAILED",
        };
        println!("{:<24} {:<20} seed {:<20} {status} {}", e.name, e.kind, e.seed, e.summary);
        if let Some(err) = &e.error {
            println!("    {err}");
        }
    }
    let failed = m.experiments.iter().any(|e| e.status == Status::Failed);
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
