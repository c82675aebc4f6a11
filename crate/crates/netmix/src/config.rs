//! Run configuration: the TOML file schema, validation, and the built-in
//! task library.
//!
//! A run configuration names a task and optionally overrides the search
//! hyperparameters. The full key set:
//!
//! ```toml
//! task = "nand2_fixed"        # required; see the task library
//! seed = 0
//! budget = 24576              # maximum evaluations
//! batch = 32                  # offspring generated per elite snapshot
//! alpha = 0.3                 # mutation bias
//! beta = 0.1                  # pruning rate
//! zeta = 30                   # fixed elite-set size ...
//! # eta = 0.01                # ... or relative size (mutually exclusive)
//! normalize = true            # netlist canonicalization on/off
//! checks_during = []          # consistency checks while sampling
//! checks_after = []           # consistency checks on finished candidates
//!
//! [sampler]                   # optional overrides
//! min_components = 3
//! max_components = 6
//! min_internal = 1
//! max_internal = 2
//! force_bulk = true
//! no_gate_to_rail = true
//!
//! [simulator]                 # external-simulator tasks only
//! command = "ngspice -b {{DECK_PATH}}"
//! timeout_s = 60.0
//! max_parallel = 8
//! template = "testbench.sp"   # file containing {{NETLIST}} once
//! [simulator.patterns]        # metric name -> regex with one capture
//! gain = "gain\\s*=\\s*(\\S+)"
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::engine::ElitePolicy;
use crate::eval::spice::{SpiceEvaluator, SpiceSettings};
use crate::eval::switch::{GateEvaluator, SwitchEvaluator};
use crate::eval::{DigitalTask, Evaluator, SeqStep, SeqStimulus, TruthTable};
use crate::netlist::PortDecl;
use crate::registry::{analog_block_registry, gate_registry, mos_registry, ModelRegistry};
use crate::reward::MetricSpec;
use crate::sampler::{CheckKind, SamplerSpec};

pub const DEFAULT_ALPHA: f64 = 0.3;
pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_ZETA: usize = 30;
pub const DEFAULT_BUDGET: usize = 24_576;
pub const DEFAULT_BATCH: usize = 32;

/// How candidates of a task are evaluated.
#[derive(Clone, Debug)]
pub enum EvaluatorKind {
    Switch(TruthTable),
    Gate(SeqStimulus),
    Spice(SpiceSettings),
}

/// A fully resolved task: model pool, ports, sampling rules, reward
/// metrics, and evaluator.
#[derive(Clone, Debug)]
pub struct Task {
    pub name: String,
    pub registry: ModelRegistry,
    pub ports: PortDecl,
    pub sampler: SamplerSpec,
    pub metrics: Vec<MetricSpec>,
    pub evaluator: EvaluatorKind,
}

impl Task {
    pub fn build_evaluator(&self) -> Result<Box<dyn Evaluator>, String> {
        match &self.evaluator {
            EvaluatorKind::Switch(table) => Ok(Box::new(SwitchEvaluator {
                table: table.clone(),
                registry: self.registry.clone(),
            })),
            EvaluatorKind::Gate(stim) => Ok(Box::new(GateEvaluator {
                stimulus: stim.clone(),
                registry: self.registry.clone(),
            })),
            EvaluatorKind::Spice(settings) => Ok(Box::new(
                SpiceEvaluator::new(settings.clone()).map_err(|e| e.to_string())?,
            )),
        }
    }

    /// The digital stimulus, for tasks that have one.
    pub fn digital_task(&self) -> Option<DigitalTask> {
        match &self.evaluator {
            EvaluatorKind::Switch(t) => Some(DigitalTask::Combinational(t.clone())),
            EvaluatorKind::Gate(s) => Some(DigitalTask::Sequential(s.clone())),
            EvaluatorKind::Spice(_) => None,
        }
    }
}

/// Validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    pub budget: usize,
    pub batch: usize,
    pub alpha: f64,
    pub beta: f64,
    pub policy: ElitePolicy,
    pub normalize: bool,
    pub checks_after: BTreeSet<CheckKind>,
}

impl RunConfig {
    /// Defaults for a library task.
    pub fn for_task(task: Task) -> Self {
        Self {
            task,
            seed: 0,
            budget: DEFAULT_BUDGET,
            batch: DEFAULT_BATCH,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            policy: ElitePolicy::Fixed(DEFAULT_ZETA),
            normalize: true,
            checks_after: BTreeSet::new(),
        }
    }

    /// Propagate the normalization switch into the sampler.
    pub fn set_normalize(&mut self, on: bool) {
        self.normalize = on;
        self.task.sampler.normalize = on;
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("configuration file not found: {0}")]
    MissingFile(PathBuf),
    #[error("configuration schema error: {0}")]
    Schema(String),
    #[error("eta and zeta are mutually exclusive elite-set policies")]
    ConflictingPolicy,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    task: String,
    seed: Option<u64>,
    budget: Option<usize>,
    batch: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    zeta: Option<usize>,
    eta: Option<f64>,
    normalize: Option<bool>,
    checks_during: Option<Vec<String>>,
    checks_after: Option<Vec<String>>,
    sampler: Option<SamplerOverrides>,
    simulator: Option<SimulatorConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplerOverrides {
    min_components: Option<usize>,
    max_components: Option<usize>,
    min_internal: Option<usize>,
    max_internal: Option<usize>,
    force_bulk: Option<bool>,
    no_gate_to_rail: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulatorConfig {
    command: Option<String>,
    timeout_s: Option<f64>,
    max_parallel: Option<usize>,
    template: Option<PathBuf>,
    patterns: Option<std::collections::BTreeMap<String, String>>,
}

fn parse_checks(names: &[String]) -> Result<BTreeSet<CheckKind>, ConfigError> {
    names
        .iter()
        .map(|s| s.parse::<CheckKind>().map_err(ConfigError::Schema))
        .collect()
}

/// Load and validate a run configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    if !path.exists() {
        return Err(ConfigError::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    let file: FileConfig =
        toml::from_str(&text).map_err(|e| ConfigError::Schema(e.to_string()))?;

    let mut task = builtin_task(&file.task)
        .ok_or_else(|| ConfigError::Schema(format!("unknown task {:?}", file.task)))?;

    if let Some(s) = &file.sampler {
        let (mut lo, mut hi) = task.sampler.count_range;
        lo = s.min_components.unwrap_or(lo);
        hi = s.max_components.unwrap_or(hi);
        if lo < 1 || lo > hi {
            return Err(ConfigError::Schema(
                "sampler component count range must satisfy 1 <= min <= max".to_string(),
            ));
        }
        task.sampler.count_range = (lo, hi);
        let (mut ilo, mut ihi) = task.sampler.internal_range;
        ilo = s.min_internal.unwrap_or(ilo);
        ihi = s.max_internal.unwrap_or(ihi);
        if ilo > ihi {
            return Err(ConfigError::Schema(
                "sampler internal net range must satisfy min <= max".to_string(),
            ));
        }
        task.sampler.internal_range = (ilo, ihi);
        if let Some(v) = s.force_bulk {
            task.sampler.force_bulk = v;
        }
        if let Some(v) = s.no_gate_to_rail {
            task.sampler.no_gate_to_rail = v;
        }
    }

    if let Some(sim) = &file.simulator {
        let EvaluatorKind::Spice(settings) = &mut task.evaluator else {
            return Err(ConfigError::Schema(format!(
                "task {:?} does not use an external simulator",
                file.task
            )));
        };
        if let Some(cmd) = &sim.command {
            settings.command = cmd.clone();
        }
        if let Some(t) = sim.timeout_s {
            settings.timeout_s = t;
        }
        if let Some(p) = sim.max_parallel {
            settings.max_parallel = p;
        }
        if let Some(tpl) = &sim.template {
            let resolved = if tpl.is_relative() {
                path.parent().unwrap_or(Path::new(".")).join(tpl)
            } else {
                tpl.clone()
            };
            if !resolved.exists() {
                return Err(ConfigError::MissingFile(resolved));
            }
            settings.template = std::fs::read_to_string(&resolved)?;
        }
        if let Some(pats) = &sim.patterns {
            settings.patterns = pats.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        }
    }
    if let EvaluatorKind::Spice(settings) = &task.evaluator {
        if settings.command.is_empty() {
            return Err(ConfigError::Schema(
                "simulator.command is required for external-simulator tasks".to_string(),
            ));
        }
        if settings.template.is_empty() {
            return Err(ConfigError::Schema(
                "simulator.template is required for external-simulator tasks".to_string(),
            ));
        }
    }

    let policy = match (file.eta, file.zeta) {
        (Some(_), Some(_)) => return Err(ConfigError::ConflictingPolicy),
        (Some(eta), None) => {
            if !(0.0..1.0).contains(&eta) || eta <= 0.0 {
                return Err(ConfigError::Schema("eta must lie in (0, 1)".to_string()));
            }
            ElitePolicy::Relative(eta)
        }
        (None, Some(zeta)) => {
            if zeta == 0 {
                return Err(ConfigError::Schema("zeta must be positive".to_string()));
            }
            ElitePolicy::Fixed(zeta)
        }
        (None, None) => ElitePolicy::Fixed(DEFAULT_ZETA),
    };

    let alpha = file.alpha.unwrap_or(DEFAULT_ALPHA);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ConfigError::Schema("alpha must lie in [0, 1]".to_string()));
    }
    let beta = file.beta.unwrap_or(DEFAULT_BETA);
    if beta < 0.0 {
        return Err(ConfigError::Schema(
            "beta must be non-negative".to_string(),
        ));
    }
    let budget = file.budget.unwrap_or(DEFAULT_BUDGET);
    let batch = file.batch.unwrap_or(DEFAULT_BATCH);
    if budget == 0 || batch == 0 {
        return Err(ConfigError::Schema(
            "budget and batch must be positive".to_string(),
        ));
    }

    if let Some(checks) = &file.checks_during {
        task.sampler.checks_during = parse_checks(checks)?;
    }
    let checks_after = match &file.checks_after {
        Some(checks) => parse_checks(checks)?,
        None => BTreeSet::new(),
    };
    task.sampler.checks_after = checks_after.clone();

    let mut cfg = RunConfig {
        task,
        seed: file.seed.unwrap_or(0),
        budget,
        batch,
        alpha,
        beta,
        policy,
        normalize: file.normalize.unwrap_or(true),
        checks_after,
    };
    let normalize = cfg.normalize;
    cfg.set_normalize(normalize);
    Ok(cfg)
}

// ---------------------------------------------------------------------
// Task library
// ---------------------------------------------------------------------

pub const TASK_NAMES: [&str; 8] = [
    "inv_fixed",
    "nand2_fixed",
    "nor2_fixed",
    "and2_fixed",
    "or2_fixed",
    "nand2_sized",
    "latch_gate",
    "opamp_external",
];

fn mos_pool() -> Vec<(String, f64)> {
    vec![
        ("sky130_fd_pr__nfet_01v8".to_string(), 1.0),
        ("sky130_fd_pr__pfet_01v8".to_string(), 1.0),
    ]
}

/// Per-row correctness metrics plus the short-circuit power proxy, all
/// saturating so the aggregate can reach exactly 1.
fn truth_table_metrics(table: &TruthTable) -> Vec<MetricSpec> {
    let mut metrics = Vec::new();
    for row in 0..table.rows.len() {
        for out in 0..table.outputs {
            metrics.push(MetricSpec::at_least(
                &format!("row{row}_out{out}"),
                1.0,
                1.0,
            ));
        }
    }
    metrics.push(MetricSpec::at_most("short_circuits", 0.0, 2.0));
    metrics
}

fn fixed_size_cell_task(
    name: &str,
    table: TruthTable,
    count_range: (usize, usize),
    internal_range: (usize, usize),
) -> Task {
    let registry = mos_registry((1.0, 1.0), (0.15, 0.15));
    let ports = PortDecl::new(table.inputs, table.outputs, 1);
    let mut sampler = SamplerSpec::new(mos_pool(), count_range, ports);
    sampler.internal_range = internal_range;
    let metrics = truth_table_metrics(&table);
    Task {
        name: name.to_string(),
        registry,
        ports,
        sampler,
        metrics,
        evaluator: EvaluatorKind::Switch(table),
    }
}

/// Level-sensitive latch protocol over 16 one-step states: transparent
/// while the clock is high, hold while low. The long-hold (decay) steps
/// admit only static storage.
pub fn latch_stimulus(long_hold: bool) -> SeqStimulus {
    let rows: [(bool, bool, bool, bool); 16] = [
        // (clk, data, expected output, long-hold decay)
        (true, false, false, false),
        (true, true, true, false),
        (false, true, true, false),
        (false, false, true, false),
        (true, false, false, false),
        (false, false, false, false),
        (false, true, false, false),
        (false, true, false, true),
        (false, true, false, true),
        (true, true, true, false),
        (false, true, true, false),
        (false, false, true, false),
        (false, false, true, true),
        (false, false, true, true),
        (true, false, false, false),
        (false, true, false, false),
    ];
    SeqStimulus {
        inputs: 2,
        outputs: 1,
        steps: rows
            .iter()
            .map(|&(clk, data, out, decay)| SeqStep {
                inputs: vec![Some(data), Some(clk)],
                expected: vec![Some(out)],
                decay: decay && long_hold,
            })
            .collect(),
    }
}

fn latch_metrics(stim: &SeqStimulus) -> Vec<MetricSpec> {
    let mut metrics = Vec::new();
    for (i, step) in stim.steps.iter().enumerate() {
        for (j, expected) in step.expected.iter().enumerate() {
            if expected.is_some() {
                metrics.push(MetricSpec::at_least(&format!("step{i}_out{j}"), 1.0, 1.0));
            }
        }
    }
    metrics.push(MetricSpec::at_most("conflict_steps", 0.0, 2.0));
    metrics
}

/// Look up a library task by name.
pub fn builtin_task(name: &str) -> Option<Task> {
    match name {
        "inv_fixed" => Some(fixed_size_cell_task(
            name,
            TruthTable::from_fn(1, |b| !b[0]),
            (2, 4),
            (0, 2),
        )),
        "nand2_fixed" => Some(fixed_size_cell_task(
            name,
            TruthTable::from_fn(2, |b| !(b[0] && b[1])),
            (3, 6),
            (1, 2),
        )),
        "nor2_fixed" => Some(fixed_size_cell_task(
            name,
            TruthTable::from_fn(2, |b| !(b[0] || b[1])),
            (3, 6),
            (1, 2),
        )),
        "and2_fixed" => Some(fixed_size_cell_task(
            name,
            TruthTable::from_fn(2, |b| b[0] && b[1]),
            (5, 7),
            (2, 2),
        )),
        "or2_fixed" => Some(fixed_size_cell_task(
            name,
            TruthTable::from_fn(2, |b| b[0] || b[1]),
            (5, 7),
            (2, 2),
        )),
        "nand2_sized" => {
            // same goal as nand2_fixed, with free sizing parameters to
            // exercise element-wise parameter mixing
            let table = TruthTable::from_fn(2, |b| !(b[0] && b[1]));
            let registry = mos_registry((0.42, 4.5), (0.15, 2.5));
            let ports = PortDecl::new(2, 1, 1);
            let mut sampler = SamplerSpec::new(mos_pool(), (3, 6), ports);
            sampler.internal_range = (1, 2);
            let metrics = truth_table_metrics(&table);
            Some(Task {
                name: name.to_string(),
                registry,
                ports,
                sampler,
                metrics,
                evaluator: EvaluatorKind::Switch(table),
            })
        }
        "latch_gate" => {
            let stim = latch_stimulus(true);
            let registry = gate_registry();
            let ports = PortDecl::new(2, 1, 0);
            let pool = vec![
                ("sky130_fd_pr__inv_01v8".to_string(), 1.0),
                ("sky130_fd_pr__invck_01v8".to_string(), 1.0),
            ];
            let mut sampler = SamplerSpec::new(pool, (3, 6), ports);
            sampler.internal_range = (1, 3);
            sampler.force_bulk = false;
            sampler.no_gate_to_rail = false;
            let metrics = latch_metrics(&stim);
            Some(Task {
                name: name.to_string(),
                registry,
                ports,
                sampler,
                metrics,
                evaluator: EvaluatorKind::Gate(stim),
            })
        }
        "opamp_external" => {
            let registry = analog_block_registry();
            let ports = PortDecl::new(2, 1, 1);
            let pool = registry
                .names()
                .map(|n| (n.to_string(), 1.0))
                .collect::<Vec<_>>();
            let mut sampler = SamplerSpec::new(pool, (2, 5), ports);
            sampler.internal_range = (1, 4);
            sampler.force_bulk = false;
            sampler.no_gate_to_rail = false;
            // scales are calibration constants, not measured values
            let metrics = vec![
                MetricSpec::at_least("gain", 45.0, 10.0),
                MetricSpec::at_least("ugbw", 1e6, 1e6),
                MetricSpec::at_least("phase_margin", 60.0, 30.0),
                MetricSpec::at_least("gain_margin", 15.0, 10.0),
            ];
            let settings = SpiceSettings {
                command: String::new(),
                timeout_s: 60.0,
                max_parallel: std::thread::available_parallelism()
                    .map(|p| p.get())
                    .unwrap_or(1),
                template: String::new(),
                patterns: vec![
                    ("gain".to_string(), r"gain\s*=\s*(\S+)".to_string()),
                    ("ugbw".to_string(), r"ugbw\s*=\s*(\S+)".to_string()),
                    (
                        "phase_margin".to_string(),
                        r"phase_margin\s*=\s*(\S+)".to_string(),
                    ),
                    (
                        "gain_margin".to_string(),
                        r"gain_margin\s*=\s*(\S+)".to_string(),
                    ),
                ],
            };
            Some(Task {
                name: name.to_string(),
                registry,
                ports,
                sampler,
                metrics,
                evaluator: EvaluatorKind::Spice(settings),
            })
        }
        _ => None,
    }
}
