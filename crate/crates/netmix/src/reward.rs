//! Scalar fitness in [-1, 1].
//!
//! Each metric compares a measurement to its target via a quadratic error;
//! a saturating component returns exactly 1 only when its specification is
//! met. The aggregate is the mean over components. Missing measurements
//! (failed or non-convergent simulations) score -1.

use thiserror::Error;

/// How a measurement is compared to its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Violation is max(0, measured - target).
    AtMost,
    /// Violation is max(0, target - measured).
    AtLeast,
    /// Violation is |measured - target|.
    Equals,
    /// No target: score 1 - (measured/scale)^2, clamped. Reaches 1 only at
    /// measured == 0, so it keeps rewarding improvement.
    Minimize,
}

/// One reward component.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub name: String,
    pub direction: Direction,
    /// Absent exactly for [`Direction::Minimize`].
    pub target: Option<f64>,
    pub scale: f64,
    pub saturating: bool,
}

impl MetricSpec {
    pub fn new(
        name: &str,
        direction: Direction,
        target: Option<f64>,
        scale: f64,
        saturating: bool,
    ) -> Self {
        assert!(scale > 0.0, "scale must be positive");
        match direction {
            Direction::Minimize => {
                assert!(target.is_none(), "minimize metrics take no target");
                assert!(!saturating, "minimize metrics are non-saturating");
            }
            _ => assert!(target.is_some(), "directed metrics need a target"),
        }
        Self {
            name: name.to_string(),
            direction,
            target,
            scale,
            saturating,
        }
    }

    pub fn at_least(name: &str, target: f64, scale: f64) -> Self {
        Self::new(name, Direction::AtLeast, Some(target), scale, true)
    }

    pub fn at_most(name: &str, target: f64, scale: f64) -> Self {
        Self::new(name, Direction::AtMost, Some(target), scale, true)
    }
}

/// Per-component scores plus their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardReport {
    pub components: Vec<f64>,
    pub aggregate: f64,
    /// True iff every saturating component equals 1.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewardError {
    #[error("cannot aggregate an empty component list")]
    EmptyComponentList,
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// Score one measurement against its spec. A missing measurement scores -1.
pub fn component_reward(measured: Option<f64>, spec: &MetricSpec) -> f64 {
    let Some(m) = measured else {
        return -1.0;
    };
    match spec.direction {
        Direction::Minimize => clamp_unit(1.0 - (m / spec.scale).powi(2)),
        _ => {
            let t = spec.target.expect("directed metric has a target");
            let v = match spec.direction {
                Direction::AtMost => (m - t).max(0.0),
                Direction::AtLeast => (t - m).max(0.0),
                Direction::Equals => (m - t).abs(),
                Direction::Minimize => unreachable!(),
            };
            if v == 0.0 {
                1.0
            } else {
                clamp_unit(1.0 - (v / spec.scale).powi(2))
            }
        }
    }
}

/// Mean of the components; `saturating` flags which components must equal 1
/// for the report to count as fully valid.
pub fn aggregate(components: &[f64], saturating: &[bool]) -> Result<RewardReport, RewardError> {
    if components.is_empty() {
        return Err(RewardError::EmptyComponentList);
    }
    debug_assert_eq!(components.len(), saturating.len());
    let aggregate = components.iter().sum::<f64>() / components.len() as f64;
    let valid = components
        .iter()
        .zip(saturating)
        .all(|(c, sat)| !sat || *c == 1.0);
    Ok(RewardReport {
        components: components.to_vec(),
        aggregate,
        valid,
    })
}

/// Score a full measurement set against a metric list.
pub fn score(
    measurements: &crate::eval::Measurements,
    specs: &[MetricSpec],
) -> Result<RewardReport, RewardError> {
    let components: Vec<f64> = specs
        .iter()
        .map(|s| component_reward(measurements.get(&s.name), s))
        .collect();
    let saturating: Vec<bool> = specs.iter().map(|s| s.saturating).collect();
    aggregate(&components, &saturating)
}
