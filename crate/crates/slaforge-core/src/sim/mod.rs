//! Deterministic discrete-event simulation of ECU-rated service instances
//! behind a round-robin load balancer.
//!
//! Completed requests emit `invoke(t = arrival, procTime = completion - arrival)`
//! events which stream through the trace engine as they happen; the metric
//! history they produce drives the monitor, which polls on a fixed period
//! and applies scaling decisions to the same world. Everything is integer
//! milliseconds and exact rationals: identical (seed, workload, config)
//! runs produce bit-identical artifacts.

mod balancer;
mod instance;
mod telemetry;
mod workload;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autoscaler::{
    monitor_step, ApplyOutcome, DecisionKind, DecisionRecord, Deployer, ScalingPolicy,
};
use crate::dsl::MetricDefinition;
use crate::rat::Rat;
use crate::trace::{EvaluatorState, MetricHistory, RawEvent, StepOutcome};

pub use balancer::{LoadBalancer, NoInstanceAvailable};
pub use instance::{InstanceState, NotRunning, QueuedRequest, ServiceInstance, VmSpec};
pub use telemetry::{TelemetryBuilder, TelemetryRow, TelemetrySeries};
pub use workload::{
    renumber, synth_workload, uniform_workload, workload_from_log, LogWorkload, Request,
    WorkloadError,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("simulation fault: {0}")]
    Fault(#[from] NotRunning),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub initial_instances: u64,
    pub vm: VmSpec,
    pub seed: u64,
    /// Metric sampling period in trace time; samples keep the history fresh
    /// for the monitor even between completions.
    pub sample_period_ms: i64,
    pub policy: Option<ScalingPolicy>,
    /// When true a dispatch to a non-RUNNING instance aborts the run instead
    /// of being dropped and counted.
    pub strict_faults: bool,
}

impl SimConfig {
    pub fn new(initial_instances: u64, vm: VmSpec) -> Self {
        SimConfig {
            initial_instances,
            vm,
            seed: 0,
            sample_period_ms: 1000,
            policy: None,
            strict_faults: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_policy(mut self, policy: ScalingPolicy) -> Self {
        self.policy = Some(policy);
        self
    }

    fn validate(&self) -> Result<(), SimError> {
        self.vm.validate().map_err(SimError::InvalidConfig)?;
        if self.sample_period_ms <= 0 {
            return Err(SimError::InvalidConfig(
                "sample period must be positive".to_string(),
            ));
        }
        if let Some(policy) = &self.policy {
            policy.validate().map_err(SimError::InvalidConfig)?;
            let n = self.initial_instances;
            if n < policy.min_instances || n > policy.max_instances {
                return Err(SimError::InvalidConfig(format!(
                    "initial instance count {n} outside policy bounds [{}, {}]",
                    policy.min_instances, policy.max_instances
                )));
            }
        } else if self.initial_instances == 0 {
            return Err(SimError::InvalidConfig(
                "at least one instance is required".to_string(),
            ));
        }
        Ok(())
    }
}

/// A serviced request with its full timing record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompletedRequest {
    pub request_id: u64,
    pub instance: usize,
    pub arrival_ms: i64,
    pub start_ms: i64,
    pub completion_ms: i64,
    pub proc_time_ms: i64,
}

/// Active instance count at a point in time; appended on every change so
/// bounds can be audited over the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountSample {
    pub time_ms: i64,
    pub active: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum SimEvent {
    Arrival(Request),
    Completion { instance: usize, request_id: u64 },
    BootComplete { instance: usize },
    MonitorPoll,
    SampleTick,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Scheduled {
    time_ms: i64,
    seq: u64,
    event: SimEvent,
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time_ms, self.seq).cmp(&(other.time_ms, other.seq))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// The simulated deployment: clock, instances, balancer and the time-ordered
/// event queue (FIFO tie-break by insertion).
#[derive(Debug)]
pub struct SimWorld {
    pub clock_ms: i64,
    queue: BinaryHeap<Reverse<Scheduled>>,
    seq: u64,
    pub instances: Vec<ServiceInstance>,
    pub balancer: LoadBalancer,
    pub seed: u64,
    pub completed: Vec<CompletedRequest>,
    pub admitted: u64,
    pub dropped: u64,
    audit: Vec<CountSample>,
    pending_arrivals: u64,
    pending_boots: u64,
}

impl SimWorld {
    pub fn new(config: &SimConfig) -> Self {
        let n = config.initial_instances as usize;
        let instances: Vec<ServiceInstance> = (0..n)
            .map(|id| ServiceInstance::new(id, config.vm.clone(), InstanceState::Running))
            .collect();
        let balancer = LoadBalancer::new((0..n).collect());
        let mut world = SimWorld {
            clock_ms: 0,
            queue: BinaryHeap::new(),
            seq: 0,
            instances,
            balancer,
            seed: config.seed,
            completed: Vec::new(),
            admitted: 0,
            dropped: 0,
            audit: Vec::new(),
            pending_arrivals: 0,
            pending_boots: 0,
        };
        world.audit.push(CountSample {
            time_ms: 0,
            active: world.active_count(),
        });
        world
    }

    fn schedule(&mut self, time_ms: i64, event: SimEvent) {
        debug_assert!(time_ms >= self.clock_ms, "cannot schedule into the past");
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Reverse(Scheduled {
            time_ms,
            seq,
            event,
        }));
    }

    /// RUNNING plus STARTING instances: the deployment size the scaling
    /// bounds constrain.
    pub fn active_count(&self) -> u64 {
        self.instances
            .iter()
            .filter(|i| matches!(i.state, InstanceState::Running | InstanceState::Starting))
            .count() as u64
    }

    pub fn audit(&self) -> &[CountSample] {
        &self.audit
    }

    /// Requests admitted but not yet completed.
    pub fn in_flight(&self) -> u64 {
        self.instances.iter().map(|i| i.in_flight() as u64).sum()
    }

    fn busy_count(&self) -> u64 {
        self.instances.iter().filter(|i| i.in_flight() > 0).count() as u64
    }

    fn pool_count(&self) -> u64 {
        self.instances
            .iter()
            .filter(|i| {
                matches!(i.state, InstanceState::Running)
                    || (matches!(i.state, InstanceState::Stopping) && !i.drained())
            })
            .count() as u64
    }

    fn record_active(&mut self) {
        let sample = CountSample {
            time_ms: self.clock_ms,
            active: self.active_count(),
        };
        self.audit.push(sample);
    }

    /// Adds a STARTING instance; it becomes RUNNING and joins the balancer
    /// after its boot delay.
    pub fn spawn_instance(&mut self, vm: VmSpec) -> usize {
        let id = self.instances.len();
        let boot_delay = vm.boot_delay_ms;
        self.instances
            .push(ServiceInstance::new(id, vm, InstanceState::Starting));
        self.pending_boots += 1;
        self.schedule(self.clock_ms + boot_delay, SimEvent::BootComplete { instance: id });
        self.record_active();
        id
    }

    /// Starts draining an instance: it leaves the rotation now, finishes its
    /// queued requests, then stops. A STARTING victim stops outright.
    pub fn begin_drain(&mut self, id: usize) {
        self.balancer.deregister(id);
        let inst = &mut self.instances[id];
        match inst.state {
            InstanceState::Starting => inst.state = InstanceState::Stop,
            InstanceState::Running => {
                inst.state = if inst.drained() {
                    InstanceState::Stop
                } else {
                    InstanceState::Stopping
                };
            }
            InstanceState::Stopping | InstanceState::Stop => {}
        }
        self.record_active();
    }

    fn has_outstanding_work(&self) -> bool {
        self.pending_arrivals > 0 || self.pending_boots > 0 || self.in_flight() > 0
    }
}

/// Everything one observation run produces.
#[derive(Debug)]
pub struct RunArtifacts {
    /// Invoke events in emission order (completion order; `time_ms` is the
    /// request arrival).
    pub trace: Vec<RawEvent>,
    pub telemetry: TelemetrySeries,
    pub history: MetricHistory,
    pub decisions: Vec<DecisionRecord>,
    pub final_state: EvaluatorState,
    pub summary: RunSummary,
}

/// Rejected event, by index into the emitted trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRejectionSummary {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub initial_instances: u64,
    pub final_instances: u64,
    pub admitted: u64,
    pub completed: u64,
    pub dropped: u64,
    pub events_emitted: u64,
    pub events_ignored: u64,
    pub trace_rejections: Vec<TraceRejectionSummary>,
    pub final_metrics: BTreeMap<String, Rat>,
    pub scale_ups: u64,
    pub scale_downs: u64,
    pub max_latency_ms: i64,
}

/// Runs `workload` through the world, streaming invoke events into an
/// evaluator for `def`. Returns the artifacts and the final world.
pub fn run(
    def: &Arc<MetricDefinition>,
    config: &SimConfig,
    workload: &[Request],
) -> Result<(RunArtifacts, SimWorld), SimError> {
    config.validate()?;
    let mut world = SimWorld::new(config);
    let mut evaluator = EvaluatorState::new(Arc::clone(def));
    let mut history = MetricHistory::new();
    let mut telemetry = TelemetryBuilder::new();
    let mut trace: Vec<RawEvent> = Vec::new();
    let mut rejections: Vec<TraceRejectionSummary> = Vec::new();
    let mut decisions: Vec<DecisionRecord> = Vec::new();
    let mut ignored: u64 = 0;

    let deployer = config
        .policy
        .as_ref()
        .map(|p| Deployer::from_policy(p, config.vm.clone()));
    let mut last_action_ms: Option<i64> = None;

    let workload_end_ms = workload.last().map(|r| r.arrival_ms).unwrap_or(0);
    for req in workload {
        world.pending_arrivals += 1;
        world.schedule(req.arrival_ms, SimEvent::Arrival(req.clone()));
    }

    if !workload.is_empty() {
        // Initial sample so the monitor has data from the start.
        for (key, value) in evaluator.metrics() {
            history.record(0, &key, value).expect("t=0 is monotone");
        }
        world.schedule(config.sample_period_ms, SimEvent::SampleTick);
        if let Some(policy) = &config.policy {
            world.schedule(policy.poll_interval_ms, SimEvent::MonitorPoll);
        }
    }

    while let Some(Reverse(scheduled)) = world.queue.pop() {
        // Integrate telemetry over the interval the old state was valid.
        telemetry.advance(
            scheduled.time_ms,
            world.in_flight(),
            world.busy_count(),
            world.pool_count(),
        );
        world.clock_ms = scheduled.time_ms;

        match scheduled.event {
            SimEvent::Arrival(request) => {
                world.pending_arrivals -= 1;
                world.admitted += 1;
                let request_id = request.id;
                match world.balancer.dispatch() {
                    Ok(id) => match world.instances[id].process(request, world.clock_ms) {
                        Ok(completion) => {
                            world.schedule(
                                completion,
                                SimEvent::Completion {
                                    instance: id,
                                    request_id,
                                },
                            );
                        }
                        Err(fault) => {
                            if config.strict_faults {
                                return Err(SimError::Fault(fault));
                            }
                            world.dropped += 1;
                            telemetry.dropped(world.clock_ms);
                        }
                    },
                    Err(NoInstanceAvailable) => {
                        world.dropped += 1;
                        telemetry.dropped(world.clock_ms);
                    }
                }
            }
            SimEvent::Completion {
                instance,
                request_id,
            } => {
                let done = world.instances[instance].complete_front(request_id);
                telemetry.completion(world.clock_ms);
                let proc_time_ms = done.completion_ms - done.request.arrival_ms;
                world.completed.push(CompletedRequest {
                    request_id: done.request.id,
                    instance,
                    arrival_ms: done.request.arrival_ms,
                    start_ms: done.start_ms,
                    completion_ms: done.completion_ms,
                    proc_time_ms,
                });
                let event =
                    RawEvent::invoke(done.request.arrival_ms, Rat::from_int(proc_time_ms));
                match evaluator.step(&event) {
                    StepOutcome::Stepped => {
                        for (key, value) in evaluator.metrics() {
                            history
                                .record(world.clock_ms, &key, value)
                                .expect("simulation clock is monotone");
                        }
                    }
                    StepOutcome::Ignored => ignored += 1,
                    StepOutcome::Rejected(reason) => rejections.push(TraceRejectionSummary {
                        index: trace.len(),
                        reason: reason.to_string(),
                    }),
                }
                trace.push(event);
                let inst = &mut world.instances[instance];
                if inst.state == InstanceState::Stopping && inst.drained() {
                    inst.state = InstanceState::Stop;
                }
            }
            SimEvent::BootComplete { instance } => {
                world.pending_boots -= 1;
                let inst = &mut world.instances[instance];
                if inst.state == InstanceState::Starting {
                    inst.state = InstanceState::Running;
                    world.balancer.register(instance);
                }
            }
            SimEvent::SampleTick => {
                for (key, value) in evaluator.metrics() {
                    history
                        .record(world.clock_ms, &key, value)
                        .expect("simulation clock is monotone");
                }
                let next = world.clock_ms + config.sample_period_ms;
                if world.has_outstanding_work() || next <= workload_end_ms {
                    world.schedule(next, SimEvent::SampleTick);
                }
            }
            SimEvent::MonitorPoll => {
                let policy = config.policy.as_ref().expect("poll implies policy");
                let deployer = deployer.as_ref().expect("poll implies deployer");
                let decision = monitor_step(&history, policy, world.clock_ms, last_action_ms);
                let outcome = match decision.kind {
                    DecisionKind::ScaleUp => match deployer.scale_up(&mut world) {
                        Ok(instance) => {
                            last_action_ms = Some(world.clock_ms);
                            ApplyOutcome::Applied { instance }
                        }
                        Err(_) => ApplyOutcome::Bounded,
                    },
                    DecisionKind::ScaleDown => match deployer.scale_down(&mut world) {
                        Ok(instance) => {
                            last_action_ms = Some(world.clock_ms);
                            ApplyOutcome::Applied { instance }
                        }
                        Err(_) => ApplyOutcome::Bounded,
                    },
                    DecisionKind::NoAction => ApplyOutcome::None,
                };
                decisions.push(DecisionRecord { decision, outcome });
                let next = world.clock_ms + policy.poll_interval_ms;
                if world.has_outstanding_work() || next <= workload_end_ms {
                    world.schedule(next, SimEvent::MonitorPoll);
                }
            }
        }
    }

    let summary = RunSummary {
        seed: config.seed,
        initial_instances: config.initial_instances,
        final_instances: world.active_count(),
        admitted: world.admitted,
        completed: world.completed.len() as u64,
        dropped: world.dropped,
        events_emitted: trace.len() as u64,
        events_ignored: ignored,
        trace_rejections: rejections,
        final_metrics: evaluator.metrics().into_iter().collect(),
        scale_ups: decisions
            .iter()
            .filter(|d| {
                d.decision.kind == DecisionKind::ScaleUp
                    && matches!(d.outcome, ApplyOutcome::Applied { .. })
            })
            .count() as u64,
        scale_downs: decisions
            .iter()
            .filter(|d| {
                d.decision.kind == DecisionKind::ScaleDown
                    && matches!(d.outcome, ApplyOutcome::Applied { .. })
            })
            .count() as u64,
        max_latency_ms: world.instances.iter().map(|i| i.latency_ms).max().unwrap_or(0),
    };

    Ok((
        RunArtifacts {
            trace,
            telemetry: telemetry.finalize(),
            history,
            decisions,
            final_state: evaluator,
            summary,
        },
        world,
    ))
}

/// Replays pre-measured `(time_ms, proc_time_ms)` pairs straight through the
/// trace engine, bypassing the simulator. Telemetry and decisions stay empty;
/// the history is recorded at the logged event times, which
/// [`workload_from_log`] has already verified to be non-decreasing.
pub fn replay_proc_times(def: &Arc<MetricDefinition>, proc_times: &[(i64, Rat)]) -> RunArtifacts {
    let mut evaluator = EvaluatorState::new(Arc::clone(def));
    let mut history = MetricHistory::new();
    let mut trace = Vec::new();
    let mut rejections = Vec::new();
    let mut ignored = 0u64;

    if !proc_times.is_empty() {
        for (key, value) in evaluator.metrics() {
            history.record(0, &key, value).expect("t=0 is monotone");
        }
    }

    for &(time_ms, ref proc_time) in proc_times {
        let event = RawEvent::invoke(time_ms, proc_time.clone());
        match evaluator.step(&event) {
            StepOutcome::Stepped => {
                for (key, value) in evaluator.metrics() {
                    history
                        .record(time_ms, &key, value)
                        .expect("replay logs are arrival-ordered");
                }
            }
            StepOutcome::Ignored => ignored += 1,
            StepOutcome::Rejected(reason) => rejections.push(TraceRejectionSummary {
                index: trace.len(),
                reason: reason.to_string(),
            }),
        }
        trace.push(event);
    }

    let summary = RunSummary {
        seed: 0,
        initial_instances: 0,
        final_instances: 0,
        admitted: 0,
        completed: 0,
        dropped: 0,
        events_emitted: trace.len() as u64,
        events_ignored: ignored,
        trace_rejections: rejections,
        final_metrics: evaluator.metrics().into_iter().collect(),
        scale_ups: 0,
        scale_downs: 0,
        max_latency_ms: 0,
    };

    RunArtifacts {
        trace,
        telemetry: TelemetrySeries::default(),
        history,
        decisions: Vec::new(),
        final_state: evaluator,
        summary,
    }
}
