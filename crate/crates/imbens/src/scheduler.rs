//! Balancing schedules: how per-class resampling targets evolve across the
//! rounds of an iterative ensemble.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::dataset::ClassDistribution;
use crate::error::{Error, Result};
use crate::samplers::SamplingTargets;

/// A user-supplied schedule rule: `(origin distribution, final targets,
/// round index, total rounds) → per-class targets`. The output is validated
/// on every call before it reaches a sampler.
pub type ScheduleRule = Arc<
    dyn Fn(&ClassDistribution, &SamplingTargets, usize, usize) -> BTreeMap<usize, usize>
        + Send
        + Sync,
>;

/// Per-round resampling target policy.
#[derive(Clone)]
pub enum BalancingSchedule {
    /// Every round uses the final targets.
    Uniform,
    /// Linear per-class interpolation from the origin counts at round 0 to
    /// the final targets at the last round, rounded half up.
    Progressive,
    /// Arbitrary user rule (library-only; validated on every call).
    Custom(ScheduleRule),
}

impl fmt::Debug for BalancingSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BalancingSchedule::Uniform => f.write_str("Uniform"),
            BalancingSchedule::Progressive => f.write_str("Progressive"),
            BalancingSchedule::Custom(_) => f.write_str("Custom(<rule>)"),
        }
    }
}

impl Default for BalancingSchedule {
    fn default() -> Self {
        BalancingSchedule::Uniform
    }
}

impl BalancingSchedule {
    /// Stable lowercase name, used in CLI flags and the saved-model config
    /// echo (custom rules are closures and only their kind is recorded).
    pub fn kind_name(&self) -> &'static str {
        match self {
            BalancingSchedule::Uniform => "uniform",
            BalancingSchedule::Progressive => "progressive",
            BalancingSchedule::Custom(_) => "custom",
        }
    }
}

/// Targets for round `i_estimator` of `total_estimators`.
///
/// Classes missing from `final_targets` keep their origin counts. A one-round
/// ensemble jumps straight to the final targets.
pub fn schedule_targets(
    schedule: &BalancingSchedule,
    origin: &ClassDistribution,
    final_targets: &SamplingTargets,
    i_estimator: usize,
    total_estimators: usize,
) -> Result<SamplingTargets> {
    if total_estimators == 0 {
        return Err(Error::InvalidParameter {
            reason: "total_estimators must be at least 1".into(),
        });
    }
    if i_estimator >= total_estimators {
        return Err(Error::InvalidParameter {
            reason: format!(
                "estimator index {i_estimator} out of range for {total_estimators} rounds"
            ),
        });
    }
    match schedule {
        BalancingSchedule::Uniform => {
            let full: BTreeMap<usize, usize> = origin
                .counts()
                .iter()
                .map(|(&c, &count)| (c, final_targets.get(c).unwrap_or(count)))
                .collect();
            SamplingTargets::new(full)
        }
        BalancingSchedule::Progressive => {
            let targets: BTreeMap<usize, usize> = origin
                .counts()
                .iter()
                .map(|(&c, &count)| {
                    let fin = final_targets.get(c).unwrap_or(count);
                    if total_estimators == 1 {
                        return (c, fin);
                    }
                    let fraction = i_estimator as f64 / (total_estimators - 1) as f64;
                    let value = count as f64 + (fin as f64 - count as f64) * fraction;
                    (c, (value + 0.5).floor() as usize)
                })
                .collect();
            SamplingTargets::new(targets)
        }
        BalancingSchedule::Custom(rule) => {
            let raw = rule(origin, final_targets, i_estimator, total_estimators);
            for &c in origin.counts().keys() {
                if !raw.contains_key(&c) {
                    return Err(Error::InvalidScheduleOutput {
                        reason: format!("custom rule omitted class {c}"),
                    });
                }
            }
            if let Some(&stray) = raw.keys().find(|c| origin.count(**c) == 0) {
                return Err(Error::InvalidScheduleOutput {
                    reason: format!("custom rule targets unknown class {stray}"),
                });
            }
            if raw.values().all(|&t| t == 0) {
                return Err(Error::InvalidScheduleOutput {
                    reason: "custom rule returned all-zero targets".into(),
                });
            }
            SamplingTargets::new(raw)
        }
    }
}
