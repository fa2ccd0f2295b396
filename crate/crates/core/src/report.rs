//! Aggregate statistics over a results CSV.
//!
//! For each configuration: success percentage, then mean/std/min/25%/50%/
//! 75%/max of normalized time and explored fraction over the successful
//! runs, plus the closed-form model prediction next to the empirical mean
//! for the strategies the model covers.

use std::collections::BTreeMap;

use crate::config::Strategy;
use crate::error::{Error, Result};
use crate::model::predict_mission_time;

/// Model comparison uses the mission defaults when the CSV does not carry
/// sensing parameters.
const MODEL_SENSE_RADIUS: f64 = 5.0;
const MODEL_SPEED: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct StatSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear-interpolation quantile on a sorted slice (the pandas default).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

pub fn summarize(values: &[f64]) -> Option<StatSummary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let std = if sorted.len() > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(StatSummary {
        mean,
        std,
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        q50: quantile(&sorted, 0.50),
        q75: quantile(&sorted, 0.75),
        max: *sorted.last().unwrap(),
    })
}

/// One parsed results row (the subset the report needs).
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub config_id: String,
    pub seed: u64,
    pub strategy: String,
    pub arena_side: f64,
    pub n_workers: u32,
    pub n_guides: u32,
    pub success: bool,
    pub t_s: Option<f64>,
    pub t_norm: Option<f64>,
    pub explored_frac: f64,
    pub avg_nb_dist: Option<f64>,
}

/// Parse the results CSV emitted by the batch runner.
pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty results CSV".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Config(format!("results CSV missing column `{name}`")))
    };
    let (c_id, c_seed, c_strategy) = (col("config_id")?, col("seed")?, col("strategy")?);
    let (c_side, c_w, c_g) = (col("arena_side")?, col("n_workers")?, col("n_guides")?);
    let (c_success, c_ts, c_tn) = (col("success")?, col("t_s")?, col("t_norm")?);
    let (c_expl, c_nbd) = (col("explored_frac")?, col("avg_nb_dist")?);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let parse_err = |what: &str| Error::Config(format!("row {}: bad {what}", i + 2));
        let opt = |s: &str| -> Option<f64> { (!s.is_empty()).then(|| s.parse().ok()).flatten() };
        rows.push(ResultRow {
            config_id: f[c_id].to_string(),
            seed: f[c_seed].parse().map_err(|_| parse_err("seed"))?,
            strategy: f[c_strategy].to_string(),
            arena_side: f[c_side].parse().map_err(|_| parse_err("arena_side"))?,
            n_workers: f[c_w].parse().map_err(|_| parse_err("n_workers"))?,
            n_guides: f[c_g].parse().map_err(|_| parse_err("n_guides"))?,
            success: f[c_success] == "1" || f[c_success] == "true",
            t_s: opt(f[c_ts]),
            t_norm: opt(f[c_tn]),
            explored_frac: f[c_expl].parse().map_err(|_| parse_err("explored_frac"))?,
            avg_nb_dist: opt(f[c_nbd]),
        });
    }
    if rows.is_empty() {
        return Err(Error::Config("results CSV has no data rows".into()));
    }
    Ok(rows)
}

fn strategy_of(name: &str) -> Option<Strategy> {
    match name {
        "hierarchical" => Some(Strategy::Hierarchical),
        "egalitarian" => Some(Strategy::Egalitarian),
        "heterogeneous" => Some(Strategy::Heterogeneous),
        _ => None,
    }
}

pub const REPORT_HEADER: &str = "config_id,n_runs,success_pct,\
t_norm_mean,t_norm_std,t_norm_min,t_norm_q25,t_norm_q50,t_norm_q75,t_norm_max,\
explored_mean,explored_std,explored_min,explored_q25,explored_q50,explored_q75,explored_max,\
t_model_s,t_mean_s,t_delta_s";

/// Aggregate a results CSV into per-configuration statistics. Identical
/// input bytes produce identical output bytes.
pub fn report(results_csv: &str) -> Result<String> {
    let rows = parse_results(results_csv)?;
    let mut by_config: BTreeMap<String, Vec<&ResultRow>> = BTreeMap::new();
    for row in &rows {
        by_config.entry(row.config_id.clone()).or_default().push(row);
    }

    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for (config_id, rows) in by_config {
        let n = rows.len();
        let successes: Vec<&&ResultRow> = rows.iter().filter(|r| r.success).collect();
        let success_pct = 100.0 * successes.len() as f64 / n as f64;

        let t_norms: Vec<f64> = successes.iter().filter_map(|r| r.t_norm).collect();
        let explored: Vec<f64> = successes.iter().map(|r| r.explored_frac).collect();
        let t_means: Vec<f64> = successes.iter().filter_map(|r| r.t_s).collect();

        let fmt_summary = |s: &Option<StatSummary>| -> String {
            match s {
                Some(s) => format!(
                    "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    s.mean, s.std, s.min, s.q25, s.q50, s.q75, s.max
                ),
                None => ",,,,,,".to_string(),
            }
        };
        let t_summary = summarize(&t_norms);
        let e_summary = summarize(&explored);

        // Model comparison from the row parameters.
        let first = rows[0];
        let model = strategy_of(&first.strategy).and_then(|s| {
            predict_mission_time(
                s,
                first.arena_side,
                first.n_workers,
                first.n_guides,
                MODEL_SENSE_RADIUS,
                MODEL_SPEED,
            )
            .ok()
        });
        let t_mean = if t_means.is_empty() {
            None
        } else {
            Some(t_means.iter().sum::<f64>() / t_means.len() as f64)
        };
        let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.3}"));
        let delta = match (model, t_mean) {
            (Some(m), Some(e)) => Some(e - m),
            _ => None,
        };

        out.push_str(&format!(
            "{config_id},{n},{success_pct:.1},{},{},{},{},{}\n",
            fmt_summary(&t_summary),
            fmt_summary(&e_summary),
            fmt_opt(model),
            fmt_opt(t_mean),
            fmt_opt(delta),
        ));
    }
    Ok(out)
}
