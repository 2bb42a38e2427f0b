//! One function per experiment kind; each returns its artifacts in memory
//! so the runner can write them atomically and record them in the manifest.

use anyhow::{anyhow, Result};
use heavytail::counterexample::{lemma31_evidence, lemma32_experiment, CounterexampleParams, Lemma31Report, Lemma32Report};
use heavytail::jump_sim::{sample_x_bar, tail_moments, LevyConfig, MomentCache};
use heavytail::rare_event::{
    centered_tail_quantile, estimate_big_jump_conditioned, estimate_plain, ldp_slope_check, ln_exact_jump_vector_prob,
    one_big_jump_check, one_big_jump_exact, product_ldp_check, results_to_csv, truncated_sum_tail_check,
    EstimateResult, EventSpec, McSettings, Method, SlopeSettings, TruncatedSettings,
};
use heavytail::rng::stream;
use heavytail::tail::{verify_limit, LimitId};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{int_grid, EstimatorChoice, Experiment, ExperimentKind, RunConfig};
use crate::output::{rows_to_csv, to_json};

/// Default Monte Carlo budget for the kinds where it is optional.
const DEFAULT_TRIALS: u64 = 2000;
/// Lattice step and search bound for the tail quantile of `X(1)`.
const QUANTILE_LATTICE: f64 = 0.05;
const QUANTILE_X_MAX: f64 = 200.0;

pub struct Artifact {
    pub file: String,
    pub contents: String,
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    levy: LevyConfig,
    moments: MomentCache,
    pretty: bool,
}

impl Ctx<'_> {
    fn json<T: Serialize>(&self, file: &str, v: &T) -> Result<Artifact> {
        Ok(Artifact { file: file.to_string(), contents: to_json(v, self.pretty)? })
    }
}

fn csv(file: &str, contents: String) -> Artifact {
    Artifact { file: file.to_string(), contents }
}

pub fn run_one(cfg: &RunConfig, exp: &Experiment, seed: u64) -> Result<Outcome> {
    let levy = cfg.levy()?;
    let ctx = Ctx { cfg, levy: levy.clone(), moments: tail_moments(&cfg.tail)?, pretty: cfg.format.pretty_json };
    let trials = exp.budget.trials;
    let grid = int_grid(&exp.n_grid);
    match &exp.kind {
        ExperimentKind::VerifyLimits { limits, aux } => {
            let ids: Vec<LimitId> = match limits {
                Some(ls) => ls.iter().map(|l| l.parse()).collect::<std::result::Result<_, _>>()?,
                None => LimitId::ALL.to_vec(),
            };
            let mut artifacts = Vec::new();
            let mut reports = Vec::new();
            let mut summary = serde_json::Map::new();
            for id in ids {
                let a = aux.get(id.name()).cloned().unwrap_or_else(|| id.default_aux());
                let r = verify_limit(id, &cfg.tail, &a, &grid)?;
                artifacts.push(csv(&format!("{}.csv", id.name()), r.to_csv()));
                summary.insert(id.name().into(), json!(r.max_abs_error_at_largest_n));
                reports.push(r);
            }
            artifacts.push(ctx.json("report.json", &reports)?);
            Ok(Outcome { artifacts, summary: Value::Object(summary) })
        }
        ExperimentKind::Simulate { n, k, resolution } => {
            let lines = simulate_records(&levy, &ctx.moments, *n, *k, trials.unwrap_or(1), seed, *resolution)?;
            Ok(Outcome { artifacts: vec![csv("paths.jsonl", lines.concat())], summary: json!({ "records": lines.len() }) })
        }
        ExperimentKind::Estimate { event, method, j } => {
            let rows = grid
                .iter()
                .enumerate()
                .map(|(i, &n)| estimate_at(&ctx, event, *method, *j, n, trials.unwrap_or(0), seed.wrapping_add(i as u64)))
                .collect::<Result<Vec<_>>>()?;
            let summary = json!({ "p_hat": rows.iter().map(|r| r.p_hat).collect::<Vec<_>>() });
            Ok(Outcome { artifacts: vec![csv("estimates.csv", results_to_csv(&rows)), ctx.json("report.json", &rows)?], summary })
        }
        ExperimentKind::LdpSlope { event, method, j, tolerance } => {
            let m = method_of(*method, *j, trials.unwrap_or(0))?;
            let mut st = SlopeSettings { seed, ..SlopeSettings::default() };
            if let Some(t) = tolerance {
                st.tolerance = *t;
            }
            let r = ldp_slope_check(event, &levy, &ctx.moments, &grid, m, &st)?;
            let summary = json!({ "verdict": r.verdict, "terminal_log_ratio": r.terminal_log_ratio, "band": r.band });
            Ok(Outcome { artifacts: vec![csv("log_ratios.csv", r.to_csv()), ctx.json("report.json", &r)?], summary })
        }
        ExperimentKind::ProductLdp { tails, events } => {
            let st = SlopeSettings { seed, ..SlopeSettings::default() };
            let r = product_ldp_check(tails, events, &grid, &st)?;
            let summary = json!({ "verdict": r.verdict, "terminal_log_ratio": r.terminal_log_ratio, "band": r.band });
            Ok(Outcome { artifacts: vec![csv("log_ratios.csv", r.to_csv()), ctx.json("report.json", &r)?], summary })
        }
        ExperimentKind::OneBigJump { x, tail_probability } => {
            let x = match x {
                Some(x) => *x,
                None => centered_tail_quantile(&levy, &ctx.moments, *tail_probability, QUANTILE_LATTICE, QUANTILE_X_MAX)?,
            };
            let r = one_big_jump_check(&levy, &ctx.moments, x, &grid, trials.unwrap_or(0), seed)?;
            let summary = json!({
                "x": x,
                "ratios": r.points.iter().map(|p| p.ratio).collect::<Vec<_>>(),
                "in_regime": r.points.iter().map(|p| p.in_regime).collect::<Vec<_>>(),
            });
            Ok(Outcome { artifacts: vec![csv("ratios.csv", r.to_csv()), ctx.json("report.json", &r)?], summary })
        }
        ExperimentKind::OneBigJumpExact { n, x_grid, h } => {
            let pts = one_big_jump_exact(&levy, &ctx.moments, *n, x_grid, *h)?;
            let summary = json!({ "last": pts.last().map(|p| (p.ratio_low, p.ratio_high)) });
            Ok(Outcome { artifacts: vec![csv("ratios.csv", rows_to_csv(&pts)?), ctx.json("report.json", &pts)?], summary })
        }
        ExperimentKind::TruncatedSums { delta, epsilon, m } => {
            let mut st = TruncatedSettings::new(*delta, *epsilon, *m);
            st.seed = seed;
            if let Some(t) = trials {
                st.trials = t;
            }
            let r = truncated_sum_tail_check(&cfg.tail, &grid, &st)?;
            let summary = json!({ "target": r.target, "holds_at_largest": r.holds_at_largest });
            Ok(Outcome { artifacts: vec![csv("points.csv", rows_to_csv(&r.points)?), ctx.json("report.json", &r)?], summary })
        }
        ExperimentKind::Lemma31 {} => {
            let r = lemma31(cfg, &grid, seed)?;
            let summary = json!({ "all_positive": r.all_positive, "grid_stable": r.grid_stable });
            Ok(Outcome { artifacts: vec![csv("minima.csv", lemma31_csv(&r)?), ctx.json("report.json", &r)?], summary })
        }
        ExperimentKind::Lemma32 { resolution } => {
            let r = lemma32(cfg, &exp.n_grid, trials.unwrap_or(DEFAULT_TRIALS), *resolution, seed)?;
            let summary = json!({ "target": r.target, "terminal_combined": r.terminal_combined, "above_minus_two": r.above_minus_two });
            Ok(Outcome { artifacts: vec![csv("points.csv", lemma32_csv(&r)?), ctx.json("report.json", &r)?], summary })
        }
    }
}

fn method_of(choice: EstimatorChoice, j: Option<usize>, trials: u64) -> Result<Method> {
    Ok(match choice {
        EstimatorChoice::Exact => Method::Exact,
        EstimatorChoice::Plain => Method::Plain { trials },
        EstimatorChoice::Conditioned => Method::Conditioned {
            j: j.ok_or_else(|| anyhow!("the conditioned estimator needs `j`"))?,
            trials,
        },
    })
}

fn estimate_at(
    ctx: &Ctx<'_>,
    event: &EventSpec,
    choice: EstimatorChoice,
    j: Option<usize>,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<EstimateResult> {
    let tail = &ctx.cfg.tail;
    let speed = tail.speed(n as f64)?;
    Ok(match choice {
        EstimatorChoice::Exact => {
            let rect = event.rectangle().ok_or_else(|| anyhow!("exact estimation needs a jump-vector event"))?;
            EstimateResult::exact(n, ln_exact_jump_vector_prob(tail, n as f64, &rect)?, speed)
        }
        EstimatorChoice::Plain => estimate_plain(event, &ctx.levy, &ctx.moments, n, McSettings::new(trials, seed))?,
        EstimatorChoice::Conditioned => {
            let j = j.ok_or_else(|| anyhow!("the conditioned estimator needs `j`"))?;
            estimate_big_jump_conditioned(event, &ctx.levy, &ctx.moments, n, j, McSettings::new(trials, seed))?
        }
    })
}

#[derive(Serialize)]
struct PathRecord<'a> {
    seed: u64,
    index: u64,
    n: u64,
    k: usize,
    terminal: f64,
    components: &'a heavytail::jump_sim::Components,
}

/// One JSON line per path; path `i` uses stream `i` of `seed`.
pub fn simulate_records(
    levy: &LevyConfig,
    moments: &MomentCache,
    n: u64,
    k: usize,
    trials: u64,
    seed: u64,
    resolution: usize,
) -> Result<Vec<String>> {
    (0..trials)
        .map(|i| {
            let s = sample_x_bar(levy, moments, n, k, resolution, &mut stream(seed, i))?;
            let c = s.components(k)?;
            let rec = PathRecord { seed, index: i, n, k, terminal: s.terminal(), components: &c };
            Ok(serde_json::to_string(&rec)? + "\n")
        })
        .collect()
}

pub fn lemma31(cfg: &RunConfig, n_list: &[u64], seed: u64) -> Result<Lemma31Report> {
    let params = CounterexampleParams::new(cfg.tail)?;
    let st = heavytail::counterexample::Lemma31Settings { seed, ..cfg.counterexample.lemma31 };
    Ok(lemma31_evidence(&params, n_list, &st)?)
}

pub fn lemma32(cfg: &RunConfig, n_grid: &[f64], trials: u64, resolution: usize, seed: u64) -> Result<Lemma32Report> {
    let params = CounterexampleParams::new(cfg.tail)?;
    let h_model = LevyConfig::new(cfg.tail, cfg.counterexample.a, 0.0, None)?;
    Ok(lemma32_experiment(&params, &h_model, n_grid, trials, resolution, seed)?)
}

#[derive(Serialize)]
struct Lemma31CsvRow {
    n: u64,
    v_points: usize,
    min_late: f64,
    min_early: f64,
    worst_late_v: f64,
    worst_late_z: f64,
    worst_early_v: f64,
    worst_early_z: f64,
}

pub fn lemma31_csv(r: &Lemma31Report) -> Result<String> {
    let rows: Vec<Lemma31CsvRow> = r
        .rows
        .iter()
        .chain(&r.refined)
        .map(|x| Lemma31CsvRow {
            n: x.n,
            v_points: x.v_points,
            min_late: x.min_late,
            min_early: x.min_early,
            worst_late_v: x.worst_late.0,
            worst_late_z: x.worst_late.1,
            worst_early_v: x.worst_early.0,
            worst_early_z: x.worst_early.1,
        })
        .collect();
    rows_to_csv(&rows)
}

#[derive(Serialize)]
struct Lemma32CsvRow {
    n: f64,
    speed: f64,
    term_iii: f64,
    term_iv: f64,
    term_v: f64,
    uniform: f64,
    exact: f64,
    p_h_in_c: Option<f64>,
    h_doob_lower: f64,
    combined: Option<f64>,
}

pub fn lemma32_csv(r: &Lemma32Report) -> Result<String> {
    let rows: Vec<Lemma32CsvRow> = r
        .points
        .iter()
        .map(|p| Lemma32CsvRow {
            n: p.j.n,
            speed: p.j.speed,
            term_iii: p.j.term_iii,
            term_iv: p.j.term_iv,
            term_v: p.j.term_v,
            uniform: p.j.uniform,
            exact: p.j.exact,
            p_h_in_c: p.h_in_c.as_ref().map(|h| h.p_hat),
            h_doob_lower: p.h_doob_lower,
            combined: p.combined,
        })
        .collect();
    rows_to_csv(&rows)
}
