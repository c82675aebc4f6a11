//! Fitness evaluators: a built-in switch-level/gate-level digital
//! evaluator and an adapter for external SPICE simulators.

pub mod spice;
pub mod switch;

use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use crate::netlist::Netlist;

/// Named measurements produced by an evaluator. A metric that could not be
/// measured is simply absent and scores -1 in the reward.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Measurements {
    values: BTreeMap<String, f64>,
}

impl Measurements {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Canonical one-line rendering of the measurement vector. Two
    /// netlists with equal signatures behave identically on the task.
    pub fn signature(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("model {0:?} is not supported by this evaluator")]
    UnsupportedModel(String),
    #[error("evaluator unavailable: {0}")]
    Unavailable(String),
}

/// A fitness evaluator. Implementations must be deterministic: identical
/// netlists yield identical measurements.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, n: &Netlist) -> Result<Measurements, EvalError>;

    /// Evaluate a batch, returning results in input order along with the
    /// wall time per item in milliseconds.
    fn evaluate_batch(&self, ns: &[Netlist]) -> Vec<(Result<Measurements, EvalError>, u64)> {
        ns.iter()
            .map(|n| {
                let start = Instant::now();
                let r = self.evaluate(n);
                (r, start.elapsed().as_millis() as u64)
            })
            .collect()
    }

    /// Whether per-evaluation wall time is meaningful enough to log. The
    /// built-in evaluators finish in microseconds and report zero so run
    /// logs stay byte-stable across repeated runs.
    fn wall_time_visible(&self) -> bool {
        false
    }
}

/// Truth table for a combinational task. Row r feeds input j the bit
/// `(r >> j) & 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub inputs: usize,
    pub outputs: usize,
    pub rows: Vec<Vec<bool>>,
}

impl TruthTable {
    /// Build a single-output table from a boolean function over the input
    /// bits; the stimulus covers all 2^inputs vectors.
    pub fn from_fn(inputs: usize, f: impl Fn(&[bool]) -> bool) -> Self {
        let rows = (0..1usize << inputs)
            .map(|r| {
                let bits: Vec<bool> = (0..inputs).map(|j| (r >> j) & 1 == 1).collect();
                vec![f(&bits)]
            })
            .collect();
        Self {
            inputs,
            outputs: 1,
            rows,
        }
    }

    pub fn input_bits(&self, row: usize) -> Vec<bool> {
        (0..self.inputs).map(|j| (row >> j) & 1 == 1).collect()
    }
}

/// One step of a sequential stimulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqStep {
    /// Value driven onto each input net this step; `None` leaves it alone.
    pub inputs: Vec<Option<bool>>,
    /// Expected logic level per output; `None` means unchecked.
    pub expected: Vec<Option<bool>>,
    /// Long-hold step: retained charge decays before propagation, so only
    /// actively driven nets keep their value.
    pub decay: bool,
}

/// Stimulus sequence for a sequential task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqStimulus {
    pub inputs: usize,
    pub outputs: usize,
    pub steps: Vec<SeqStep>,
}

/// A digital evaluation task: either a full truth table or a state
/// sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DigitalTask {
    Combinational(TruthTable),
    Sequential(SeqStimulus),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_table_covers_all_vectors() {
        let t = TruthTable::from_fn(2, |b| !(b[0] && b[1]));
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.rows[0], vec![true]);
        assert_eq!(t.rows[3], vec![false]);
        assert_eq!(t.input_bits(2), vec![false, true]);
    }

    #[test]
    fn missing_measurement_is_absent() {
        let mut m = Measurements::new();
        m.insert("a", 1.0);
        assert_eq!(m.get("a"), Some(1.0));
        assert_eq!(m.get("b"), None);
    }
}
