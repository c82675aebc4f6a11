//! Experiment harness: multi-seed repetitions over a config matrix, the
//! summary statistics, and per-run log emission.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::engine::{run_synthesis, RunReport};

/// One synthesis run within an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub config_id: String,
    pub seed: u64,
    pub success: bool,
    pub evaluations: usize,
    pub best_reward: f64,
    pub wall_ms: u64,
}

/// Aggregate statistics per configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigAggregate {
    pub config_id: String,
    pub runs: usize,
    pub failure_rate_pct: f64,
    /// Median evaluations over successful runs; absent if none succeeded.
    pub median_evals_success: Option<f64>,
    /// Median over all runs, failures counted at the full budget.
    pub median_evals_all: f64,
}

#[derive(Debug, Clone)]
pub struct SummaryTable {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<ConfigAggregate>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Recompute per-config aggregates from run rows. `budget_of` supplies the
/// evaluation budget failures are charged with.
pub fn aggregate_rows(
    rows: &[RunRow],
    budget_of: impl Fn(&str) -> usize,
) -> Vec<ConfigAggregate> {
    let mut ids: Vec<String> = Vec::new();
    for r in rows {
        if !ids.contains(&r.config_id) {
            ids.push(r.config_id.clone());
        }
    }
    ids.iter()
        .map(|id| {
            let budget = budget_of(id);
            let group: Vec<&RunRow> = rows.iter().filter(|r| &r.config_id == id).collect();
            let mut successes: Vec<f64> = group
                .iter()
                .filter(|r| r.success)
                .map(|r| r.evaluations as f64)
                .collect();
            successes.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut all: Vec<f64> = group
                .iter()
                .map(|r| {
                    if r.success {
                        r.evaluations as f64
                    } else {
                        budget as f64
                    }
                })
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let failures = group.len() - successes.len();
            ConfigAggregate {
                config_id: id.clone(),
                runs: group.len(),
                failure_rate_pct: 100.0 * failures as f64 / group.len() as f64,
                median_evals_success: if successes.is_empty() {
                    None
                } else {
                    Some(median(&successes))
                },
                median_evals_all: median(&all),
            }
        })
        .collect()
}

/// Run each configuration `repeats` times with derived seeds. Run errors
/// are recorded per-row and never abort the matrix.
pub fn run_experiment(configs: &[(String, RunConfig)], repeats: usize) -> SummaryTable {
    assert!(repeats >= 1);
    let mut rows = Vec::with_capacity(configs.len() * repeats);
    for (id, cfg) in configs {
        for rep in 0..repeats {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = cfg.seed.wrapping_add(rep as u64);
            let start = Instant::now();
            match run_synthesis(&run_cfg) {
                Ok(report) => rows.push(RunRow {
                    config_id: id.clone(),
                    seed: run_cfg.seed,
                    success: report.success,
                    evaluations: report.evaluations,
                    best_reward: report.best_reward,
                    wall_ms: start.elapsed().as_millis() as u64,
                }),
                Err(e) => {
                    log::error!("run {id} seed {} failed: {e}", run_cfg.seed);
                    rows.push(RunRow {
                        config_id: id.clone(),
                        seed: run_cfg.seed,
                        success: false,
                        evaluations: 0,
                        best_reward: -1.0,
                        wall_ms: start.elapsed().as_millis() as u64,
                    });
                }
            }
        }
    }
    let budgets: std::collections::BTreeMap<&str, usize> = configs
        .iter()
        .map(|(id, cfg)| (id.as_str(), cfg.budget))
        .collect();
    let aggregates = aggregate_rows(&rows, |id| budgets.get(id).copied().unwrap_or(0));
    SummaryTable { rows, aggregates }
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    task: &'a str,
    seed: u64,
    success: bool,
    evaluations: usize,
    budget: usize,
    best_reward: f64,
}

/// Write the run artifacts: `evals.csv`, `elites.csv`, `best.netlist`, and
/// `summary.json`.
pub fn emit_logs(report: &RunReport, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut evals = std::fs::File::create(dir.join("evals.csv"))?;
    writeln!(evals, "eval_index,origin,reward,netlist_len,elapsed_ms")?;
    for r in &report.records {
        writeln!(
            evals,
            "{},{},{},{},{}",
            r.eval_index,
            r.origin.as_str(),
            r.reward,
            r.netlist_len,
            r.elapsed_ms
        )?;
    }

    let mut elites = std::fs::File::create(dir.join("elites.csv"))?;
    writeln!(elites, "eval_index,random,crossover,mutation,pruning")?;
    for snap in &report.elite_series {
        writeln!(
            elites,
            "{},{},{},{},{}",
            snap.eval_index, snap.counts[0], snap.counts[1], snap.counts[2], snap.counts[3]
        )?;
    }

    std::fs::write(
        dir.join("best.netlist"),
        format!("{}\n", report.best_netlist),
    )?;

    let summary = SummaryJson {
        task: &report.task,
        seed: report.seed,
        success: report.success,
        evaluations: report.evaluations,
        budget: report.budget,
        best_reward: report.best_reward,
    };
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(())
}

/// Write the per-run rows of a sweep.
pub fn write_runs_csv(table: &SummaryTable, path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "config_id,seed,success,evaluations,best_reward,wall_ms")?;
    for r in &table.rows {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.config_id, r.seed, r.success, r.evaluations, r.best_reward, r.wall_ms
        )?;
    }
    Ok(())
}

/// Write the per-config aggregates of a sweep.
pub fn write_summary_csv(table: &SummaryTable, path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "config_id,runs,failure_rate_pct,median_evals_success,median_evals_all"
    )?;
    for a in &table.aggregates {
        writeln!(
            f,
            "{},{},{},{},{}",
            a.config_id,
            a.runs,
            a.failure_rate_pct,
            a.median_evals_success
                .map(|m| m.to_string())
                .unwrap_or_default(),
            a.median_evals_all
        )?;
    }
    Ok(())
}

/// Replay elite-set insertion from a report's records and return the
/// per-origin counts at each recorded snapshot index. Used to cross-check
/// the logged series.
pub fn replay_elite_series(report: &RunReport, policy: crate::engine::ElitePolicy) -> Vec<[usize; 4]> {
    let mut elite = crate::engine::EliteSet::new(policy);
    let mut out = Vec::new();
    let mut record_iter = report.records.iter().peekable();
    for snap in &report.elite_series {
        while let Some(r) = record_iter.peek() {
            if r.eval_index >= snap.eval_index {
                break;
            }
            let r = record_iter.next().unwrap();
            elite.insert(
                crate::engine::EliteEntry {
                    netlist: crate::netlist::Netlist::empty(crate::netlist::PortDecl::default()),
                    serialized: r.netlist.clone(),
                    signature: r.signature.clone(),
                    reward: r.reward,
                    origin: r.origin,
                    eval_index: r.eval_index,
                },
                r.eval_index + 1,
            );
        }
        out.push(elite.origin_counts());
    }
    out
}

/// Human-readable sweep table.
pub fn format_summary(table: &SummaryTable) -> String {
    let mut s = String::new();
    s.push_str("config_id            runs  fail%   med(success)  med(all)\n");
    for a in &table.aggregates {
        s.push_str(&format!(
            "{:<20} {:>4}  {:>5.1}   {:>12}  {:>8}\n",
            a.config_id,
            a.runs,
            a.failure_rate_pct,
            a.median_evals_success
                .map(|m| format!("{m:.1}"))
                .unwrap_or_else(|| "-".to_string()),
            a.median_evals_all
        ));
    }
    s
}
