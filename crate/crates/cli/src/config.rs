//! The run configuration: model parameters plus an ordered experiment list.

use std::collections::BTreeMap;

use anyhow::{anyhow, Result};
use heavytail::counterexample::Lemma31Settings;
use heavytail::jump_sim::{LevyConfig, PowerSmallJumps};
use heavytail::rare_event::EventSpec;
use heavytail::tail::{LimitId, TailParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "TailParams::reference")]
    pub tail: TailParams,
    #[serde(default)]
    pub levy: LevySection,
    #[serde(default)]
    pub counterexample: CounterexampleSection,
    /// Used when `--out` is absent.
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub format: FormatFlags,
    #[serde(default)]
    pub experiments: Vec<Experiment>,
}

/// Everything in the Lévy triplet except the tail, which is shared.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySection {
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub small_jump: Option<PowerSmallJumps>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    /// Brownian coefficient of the model used for `P(H_n in C_n)`.
    #[serde(default = "default_h_sigma")]
    pub a: f64,
    #[serde(default)]
    pub lemma31: Lemma31Settings,
}

fn default_h_sigma() -> f64 {
    0.2
}

impl Default for CounterexampleSection {
    fn default() -> Self {
        Self { a: default_h_sigma(), lemma31: Lemma31Settings::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormatFlags {
    #[serde(default)]
    pub pretty_json: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default)]
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Experiment {
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub n_grid: Vec<f64>,
    #[serde(default)]
    pub budget: Budget,
    #[serde(flatten)]
    pub kind: ExperimentKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Exact,
    Plain,
    Conditioned,
}

/// One variant per harness operation.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ExperimentKind {
    VerifyLimits {
        #[serde(default)]
        limits: Option<Vec<String>>,
        #[serde(default)]
        aux: BTreeMap<String, BTreeMap<String, f64>>,
    },
    Simulate {
        n: u64,
        k: usize,
        #[serde(default = "default_sim_resolution")]
        resolution: usize,
    },
    Estimate {
        event: EventSpec,
        #[serde(default = "default_estimator")]
        method: EstimatorChoice,
        #[serde(default)]
        j: Option<usize>,
    },
    LdpSlope {
        event: EventSpec,
        #[serde(default = "default_estimator")]
        method: EstimatorChoice,
        #[serde(default)]
        j: Option<usize>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    ProductLdp {
        tails: [TailParams; 2],
        events: [EventSpec; 2],
    },
    OneBigJump {
        #[serde(default)]
        x: Option<f64>,
        #[serde(default = "default_tail_probability")]
        tail_probability: f64,
    },
    OneBigJumpExact {
        n: u64,
        x_grid: Vec<f64>,
        #[serde(default = "default_lattice")]
        h: f64,
    },
    TruncatedSums {
        delta: f64,
        epsilon: f64,
        #[serde(default = "default_m")]
        m: u64,
    },
    Lemma31 {},
    Lemma32 {
        #[serde(default = "default_sim_resolution")]
        resolution: usize,
    },
}

fn default_sim_resolution() -> usize {
    256
}

fn default_estimator() -> EstimatorChoice {
    EstimatorChoice::Plain
}

fn default_tail_probability() -> f64 {
    1e-3
}

fn default_lattice() -> f64 {
    0.05
}

fn default_m() -> u64 {
    1
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::VerifyLimits { .. } => "verify_limits",
            ExperimentKind::Simulate { .. } => "simulate",
            ExperimentKind::Estimate { .. } => "estimate",
            ExperimentKind::LdpSlope { .. } => "ldp_slope",
            ExperimentKind::ProductLdp { .. } => "product_ldp",
            ExperimentKind::OneBigJump { .. } => "one_big_jump",
            ExperimentKind::OneBigJumpExact { .. } => "one_big_jump_exact",
            ExperimentKind::TruncatedSums { .. } => "truncated_sums",
            ExperimentKind::Lemma31 { .. } => "lemma31",
            ExperimentKind::Lemma32 { .. } => "lemma32",
        }
    }

    /// Derives the analytic rates the config left out.
    fn complete_events(&mut self) -> heavytail::Result<()> {
        let events: &mut [EventSpec] = match self {
            ExperimentKind::Estimate { event, .. } | ExperimentKind::LdpSlope { event, .. } => {
                std::slice::from_mut(event)
            }
            ExperimentKind::ProductLdp { events, .. } => events,
            _ => &mut [],
        };
        for e in events {
            *e = e.clone().complete()?;
        }
        Ok(())
    }

    fn needs_trials(&self) -> bool {
        match self {
            ExperimentKind::Simulate { .. } | ExperimentKind::OneBigJump { .. } => true,
            ExperimentKind::Estimate { method, .. } | ExperimentKind::LdpSlope { method, .. } => {
                *method != EstimatorChoice::Exact
            }
            _ => false,
        }
    }

    fn needs_grid(&self) -> bool {
        !matches!(self, ExperimentKind::Simulate { .. } | ExperimentKind::OneBigJumpExact { .. })
    }
}

impl RunConfig {
    /// Parses and validates; errors carry the line of the offending entry.
    /// `params` may be omitted for kinds whose parameters all have defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text)
            .map_err(|e| anyhow!("config line {}, column {}: {e}", e.line(), e.column()))?;
        let raw_experiments = match v.as_object_mut().and_then(|o| o.remove("experiments")) {
            Some(Value::Array(a)) => a,
            Some(_) => return Err(anyhow!("config line {}: `experiments` must be an array", line_of_key(text, "experiments"))),
            None => Vec::new(),
        };
        let mut cfg: RunConfig = serde_json::from_value(v).map_err(|e| anyhow!("config: {e}"))?;
        for (i, mut e) in raw_experiments.into_iter().enumerate() {
            let name = e.get("name").and_then(Value::as_str).unwrap_or_default().to_string();
            if let Some(o) = e.as_object_mut() {
                o.entry("params").or_insert_with(|| Value::Object(Default::default()));
            }
            let at = |err: &dyn std::fmt::Display| {
                anyhow!("config line {}: experiment #{} `{name}`: {err}", line_of(text, &name), i + 1)
            };
            let mut exp: Experiment = serde_json::from_value(e).map_err(|err| at(&err))?;
            exp.kind.complete_events().map_err(|err| at(&err))?;
            cfg.experiments.push(exp);
        }
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn levy(&self) -> Result<LevyConfig> {
        Ok(LevyConfig::new(self.tail, self.levy.a, self.levy.b, self.levy.small_jump)?)
    }

    fn validate(&self, text: &str) -> Result<()> {
        self.levy().map_err(|e| anyhow!("config `levy`: {e}"))?;
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.experiments {
            let at = |msg: String| anyhow!("config line {}: experiment `{}`: {msg}", line_of(text, &e.name), e.name);
            if e.name.is_empty() || e.name.contains(['/', '\\']) || e.name.starts_with('.') {
                return Err(at("names must be nonempty plain file names".into()));
            }
            if !seen.insert(e.name.clone()) {
                return Err(at("duplicate experiment name".into()));
            }
            if e.kind.needs_trials() && e.budget.trials.unwrap_or(0) == 0 {
                return Err(at("budget.trials must be positive".into()));
            }
            if e.kind.needs_grid() && e.n_grid.is_empty() {
                return Err(at("n_grid must be nonempty".into()));
            }
            if e.n_grid.windows(2).any(|w| w[0] >= w[1]) || e.n_grid.iter().any(|n| !(*n >= 1.0)) {
                return Err(at("n_grid must be strictly increasing and at least 1".into()));
            }
            if !matches!(e.kind, ExperimentKind::Lemma32 { .. }) && e.n_grid.iter().any(|n| n.fract() != 0.0) {
                return Err(at("n_grid must hold integers for this kind".into()));
            }
            if let ExperimentKind::VerifyLimits { limits: Some(ls), .. } = &e.kind {
                for l in ls {
                    l.parse::<LimitId>().map_err(|err| at(err.to_string()))?;
                }
            }
            if let ExperimentKind::Estimate { event, .. } | ExperimentKind::LdpSlope { event, .. } = &e.kind {
                event.validate().map_err(|err| at(err.to_string()))?;
            }
        }
        Ok(())
    }
}

pub fn int_grid(grid: &[f64]) -> Vec<u64> {
    grid.iter().map(|&n| n as u64).collect()
}

fn line_of_key(text: &str, key: &str) -> usize {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map_or(1, |i| i + 1)
}

/// Line (1-based) of the first `"name": "<name>"` entry, or 1.
fn line_of(text: &str, name: &str) -> usize {
    let quoted = format!("\"{name}\"");
    text.lines()
        .position(|l| l.contains("\"name\"") && l.contains(&quoted))
        .map_or(1, |i| i + 1)
}
