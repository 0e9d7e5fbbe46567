//! Reaction phase: read the metric history head, compare against thresholds,
//! scale the deployment up or down within bounds.
//!
//! The decision rule mirrors the degradation monitor: scale up when the
//! observed value exceeds `upper` (default `5/1000`), scale down when it
//! falls below `lower` (default `1/1000`), otherwise do nothing. A cooldown
//! demotes any action that follows too closely on the previous one, which
//! keeps the loop from flapping while a new instance is still booting.

use serde::{Deserialize, Serialize};

use crate::rat::Rat;
use crate::sim::{InstanceState, SimWorld, VmSpec};
use crate::trace::MetricHistory;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingPolicy {
    #[serde(default = "default_upper")]
    pub upper: Rat,
    #[serde(default = "default_lower")]
    pub lower: Rat,
    #[serde(default = "default_cooldown")]
    pub cooldown_ms: i64,
    #[serde(rename = "min", default = "default_min")]
    pub min_instances: u64,
    #[serde(rename = "max", default = "default_max")]
    pub max_instances: u64,
    #[serde(rename = "poll_ms", default = "default_poll")]
    pub poll_interval_ms: i64,
}

fn default_upper() -> Rat {
    Rat::new(5, 1000)
}
fn default_lower() -> Rat {
    Rat::new(1, 1000)
}
fn default_poll() -> i64 {
    1000
}
fn default_cooldown() -> i64 {
    // 2 x boot delay + poll interval, with the zero boot delay default.
    default_poll()
}
fn default_min() -> u64 {
    1
}
fn default_max() -> u64 {
    8
}

impl Default for ScalingPolicy {
    fn default() -> Self {
        ScalingPolicy {
            upper: default_upper(),
            lower: default_lower(),
            cooldown_ms: default_cooldown(),
            min_instances: default_min(),
            max_instances: default_max(),
            poll_interval_ms: default_poll(),
        }
    }
}

impl ScalingPolicy {
    /// Default policy with the cooldown derived from the instance boot
    /// delay: `2 * boot_delay + poll_interval`.
    pub fn for_vm(vm: &VmSpec) -> Self {
        let mut p = ScalingPolicy::default();
        p.cooldown_ms = 2 * vm.boot_delay_ms + p.poll_interval_ms;
        p
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.lower >= self.upper {
            return Err(format!(
                "lower threshold {} must be below upper {}",
                self.lower, self.upper
            ));
        }
        if self.min_instances < 1 {
            return Err("min instances must be >= 1".to_string());
        }
        if self.min_instances > self.max_instances {
            return Err(format!(
                "min instances {} exceeds max {}",
                self.min_instances, self.max_instances
            ));
        }
        if self.poll_interval_ms <= 0 {
            return Err("poll interval must be positive".to_string());
        }
        if self.cooldown_ms < 0 {
            return Err("cooldown must be >= 0".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionKind {
    ScaleUp,
    ScaleDown,
    NoAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionReason {
    /// A scaling action was due but fell inside the cooldown window.
    Cooldown { demoted: DecisionKind },
    /// The metric history is still empty.
    NoData,
}

/// One monitor verdict: a pure function of the history head, the policy and
/// the time of the last applied action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingDecision {
    pub kind: DecisionKind,
    pub at_ms: i64,
    pub observed: Option<Rat>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<DecisionReason>,
}

/// Reads the history head and picks a decision. Exactly one of
/// `v > upper`, `v < lower`, `lower <= v <= upper` holds, mapping to
/// ScaleUp, ScaleDown and NoAction respectively; cooldown then demotes
/// non-NoAction decisions that arrive within `cooldown_ms` of the last
/// applied action.
pub fn monitor_step(
    hist: &MetricHistory,
    policy: &ScalingPolicy,
    now_ms: i64,
    last_action_ms: Option<i64>,
) -> ScalingDecision {
    let Some(head) = hist.head() else {
        return ScalingDecision {
            kind: DecisionKind::NoAction,
            at_ms: now_ms,
            observed: None,
            reason: Some(DecisionReason::NoData),
        };
    };
    let observed = head.value.clone();
    let kind = if observed > policy.upper {
        DecisionKind::ScaleUp
    } else if observed < policy.lower {
        DecisionKind::ScaleDown
    } else {
        DecisionKind::NoAction
    };
    if kind != DecisionKind::NoAction {
        if let Some(last) = last_action_ms {
            if now_ms - last < policy.cooldown_ms {
                return ScalingDecision {
                    kind: DecisionKind::NoAction,
                    at_ms: now_ms,
                    observed: Some(observed),
                    reason: Some(DecisionReason::Cooldown { demoted: kind }),
                };
            }
        }
    }
    ScalingDecision {
        kind,
        at_ms: now_ms,
        observed: Some(observed),
        reason: None,
    }
}

/// Returned when a scaling action would leave the configured bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("deployment already at its instance bound")]
pub struct Bounded;

/// Applies scaling actions to a simulated deployment while keeping the
/// RUNNING+STARTING count inside `[min_instances, max_instances]`.
#[derive(Debug, Clone)]
pub struct Deployer {
    pub vm: VmSpec,
    pub min_instances: u64,
    pub max_instances: u64,
}

impl Deployer {
    pub fn from_policy(policy: &ScalingPolicy, vm: VmSpec) -> Self {
        Deployer {
            vm,
            min_instances: policy.min_instances,
            max_instances: policy.max_instances,
        }
    }

    /// Provisions one instance. It boots for `vm.boot_delay_ms`, then joins
    /// the balancer rotation; no dispatches reach it before that.
    pub fn scale_up(&self, world: &mut SimWorld) -> Result<usize, Bounded> {
        if world.active_count() >= self.max_instances {
            return Err(Bounded);
        }
        Ok(world.spawn_instance(self.vm.clone()))
    }

    /// Drains the most recently added active instance: it leaves the
    /// rotation immediately, finishes its queue, then stops.
    pub fn scale_down(&self, world: &mut SimWorld) -> Result<usize, Bounded> {
        if world.active_count() <= self.min_instances {
            return Err(Bounded);
        }
        let victim = world
            .instances
            .iter()
            .rev()
            .find(|i| matches!(i.state, InstanceState::Running | InstanceState::Starting))
            .map(|i| i.id)
            .expect("active_count > min >= 1 implies an active instance");
        world.begin_drain(victim);
        Ok(victim)
    }
}

/// Outcome of applying a decision to the world.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyOutcome {
    Applied { instance: usize },
    Bounded,
    None,
}

/// A decision together with what applying it did; one JSONL line each in the
/// run log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    #[serde(flatten)]
    pub decision: ScalingDecision,
    pub outcome: ApplyOutcome,
}

pub fn decisions_to_jsonl(records: &[DecisionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("decision serializes"));
        out.push('\n');
    }
    out
}
