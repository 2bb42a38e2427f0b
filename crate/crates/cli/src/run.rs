use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use heavytail::rng::derive_seed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::experiments::run_one;
use crate::output::{to_json, write_atomic};

pub const MANIFEST: &str = "manifest.json";
const DEFAULT_OUT: &str = "out";

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed_override: Option<u64>,
    /// Effective seed per experiment; setting it as the experiment's `seed`
    /// reproduces that experiment alone.
    pub seed_registry: BTreeMap<String, u64>,
    pub experiments: Vec<ExperimentRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub status: Status,
    #[serde(default)]
    pub error: Option<String>,
    pub artifacts: Vec<String>,
    #[serde(default)]
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
}

pub fn out_dir(out: Option<&Path>, cfg: Option<&RunConfig>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.and_then(|c| c.output_dir.as_ref()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn run(config: Option<&Path>, out: Option<&Path>, seed_override: Option<u64>) -> Result<ExitCode> {
    let path = config.ok_or_else(|| anyhow!("`run` needs --config PATH"))?;
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
    let cfg = RunConfig::parse(text)?;
    let dir = out_dir(out, Some(&cfg));
    let hash = format!("{:x}", Sha256::digest(&bytes));

    let mut records = Vec::with_capacity(cfg.experiments.len());
    let mut registry = BTreeMap::new();
    for exp in &cfg.experiments {
        let seed = seed_override.map_or(exp.seed, |s| derive_seed(s, &exp.name));
        registry.insert(exp.name.clone(), seed);
        let outcome = catch_unwind(AssertUnwindSafe(|| run_one(&cfg, exp, seed)))
            .unwrap_or_else(|p| Err(anyhow!("panicked: {}", panic_message(&p))));
        let written = outcome.and_then(|o| {
            let mut names = Vec::with_capacity(o.artifacts.len());
            for a in &o.artifacts {
                let rel = format!("{}/{}", exp.name, a.file);
                write_atomic(&dir.join(&rel), a.contents.as_bytes())?;
                names.push(rel);
            }
            Ok((names, o.summary))
        });
        let rec = match written {
            Ok((artifacts, summary)) => ExperimentRecord {
                name: exp.name.clone(),
                kind: exp.kind.name().into(),
                seed,
                status: Status::Ok,
                error: None,
                artifacts,
                summary,
            },
            Err(e) => {
                eprintln!("experiment `{}` failed: {e:#}", exp.name);
                ExperimentRecord {
                    name: exp.name.clone(),
                    kind: exp.kind.name().into(),
                    seed,
                    status: Status::Failed,
                    error: Some(format!("{e:#}")),
                    artifacts: Vec::new(),
                    summary: serde_json::Value::Null,
                }
            }
        };
        eprintln!("{}: {:?}", rec.name, rec.status);
        records.push(rec);
    }
    let failed = records.iter().any(|r| r.status == Status::Failed);
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_path: path.display().to_string(),
        config_sha256: hash,
        seed_override,
        seed_registry: registry,
        experiments: records,
    };
    let manifest_path = dir.join(MANIFEST);
    write_atomic(&manifest_path, to_json(&manifest, true)?.as_bytes())?;
    println!("{}", manifest_path.display());
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}
