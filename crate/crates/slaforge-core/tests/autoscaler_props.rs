//! Reaction-phase behavior: the threshold partition, deployment bounds over
//! randomized runs, cooldown spacing, drain semantics and closed-loop
//! scale-up/scale-down scenarios on the simulator.

use std::sync::Arc;

use proptest::prelude::*;

use slaforge_core::autoscaler::{
    monitor_step, ApplyOutcome, DecisionKind, DecisionRecord, Deployer, ScalingPolicy,
};
use slaforge_core::dsl::{builtin, MetricDefinition};
use slaforge_core::rat::Rat;
use slaforge_core::sim::{
    renumber, run, synth_workload, uniform_workload, InstanceState, Request, RunArtifacts,
    SimConfig, SimWorld, VmSpec,
};
use slaforge_core::trace::MetricHistory;

fn windowed_def() -> Arc<MetricDefinition> {
    Arc::new(builtin::windowed_degradation_definition(200, 10_000))
}

fn scenario_policy() -> ScalingPolicy {
    ScalingPolicy {
        upper: Rat::new(5, 1000),
        lower: Rat::zero(),
        cooldown_ms: 6_000,
        min_instances: 1,
        max_instances: 4,
        poll_interval_ms: 2_000,
    }
}

fn scenario_vm() -> VmSpec {
    VmSpec::new(Rat::from_int(40)).with_boot_delay(2_000)
}

/// 6 req/s for 60 s, then double to 12 req/s (beyond one instance's
/// 10 req/s capacity) for another 60 s. Evenly spaced, fully deterministic.
fn step_workload() -> Vec<Request> {
    let cost = Rat::from_int(4);
    let base = uniform_workload(&Rat::from_int(6), 60_000, &cost, 0).unwrap();
    let doubled = uniform_workload(&Rat::from_int(12), 60_000, &cost, 60_000).unwrap();
    renumber([base, doubled].concat())
}

fn run_step_scenario() -> (RunArtifacts, SimWorld) {
    let def = windowed_def();
    let config = SimConfig::new(1, scenario_vm())
        .with_seed(42)
        .with_policy(scenario_policy());
    run(&def, &config, &step_workload()).unwrap()
}

fn applied(records: &[DecisionRecord]) -> Vec<&DecisionRecord> {
    records
        .iter()
        .filter(|r| matches!(r.outcome, ApplyOutcome::Applied { .. }))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn threshold_partition(num in -2000i64..2000, den in 1i64..2000) {
        // Every rational falls in exactly one region and maps to exactly one
        // decision kind (cooldown aside).
        let policy = ScalingPolicy::default();
        let v = Rat::new(num, den);
        let above = v > policy.upper;
        let below = v < policy.lower;
        let between = policy.lower <= v && v <= policy.upper;
        prop_assert_eq!(
            [above, below, between].iter().filter(|&&b| b).count(),
            1
        );
        let mut h = MetricHistory::new();
        h.record(0, "m", v).unwrap();
        let d = monitor_step(&h, &policy, 1_000, None);
        let expected = if above {
            DecisionKind::ScaleUp
        } else if below {
            DecisionKind::ScaleDown
        } else {
            DecisionKind::NoAction
        };
        prop_assert_eq!(d.kind, expected);
    }
}

#[test]
fn scale_up_respects_boot_and_bounds() {
    let config = SimConfig::new(2, scenario_vm());
    let mut world = SimWorld::new(&config);
    let deployer = Deployer {
        vm: scenario_vm(),
        min_instances: 1,
        max_instances: 4,
    };
    let id = deployer.scale_up(&mut world).unwrap();
    assert_eq!(id, 2);
    assert_eq!(world.instances[id].state, InstanceState::Starting);
    assert_eq!(world.active_count(), 3);
    assert!(
        !world.balancer.services().contains(&id),
        "a booting instance is not dispatchable"
    );

    deployer.scale_up(&mut world).unwrap();
    assert_eq!(world.active_count(), 4);
    assert!(deployer.scale_up(&mut world).is_err(), "max reached");
    assert_eq!(world.active_count(), 4, "bounded scale-up changes nothing");
}

#[test]
fn scale_down_picks_newest_and_respects_min() {
    let config = SimConfig::new(3, scenario_vm());
    let mut world = SimWorld::new(&config);
    let deployer = Deployer {
        vm: scenario_vm(),
        min_instances: 1,
        max_instances: 4,
    };
    let id = deployer.scale_down(&mut world).unwrap();
    assert_eq!(id, 2, "newest instance drains first");
    assert!(!world.balancer.services().contains(&2));
    assert_eq!(world.active_count(), 2);

    deployer.scale_down(&mut world).unwrap();
    assert_eq!(world.active_count(), 1);
    assert!(deployer.scale_down(&mut world).is_err(), "min reached");
    assert_eq!(world.active_count(), 1);
}

#[test]
fn draining_instance_finishes_queued_work() {
    let config = SimConfig::new(2, scenario_vm());
    let mut world = SimWorld::new(&config);
    // Queue two requests on the newest instance, then drain it.
    for id in 1..=2 {
        world.instances[1]
            .process(
                Request {
                    id,
                    cost: Rat::from_int(4),
                    arrival_ms: 0,
                },
                0,
            )
            .unwrap();
    }
    world.begin_drain(1);
    assert_eq!(world.instances[1].state, InstanceState::Stopping);
    assert_eq!(world.instances[1].in_flight(), 2, "queued work survives");
    assert!(!world.balancer.services().contains(&1));

    // An idle victim stops outright.
    world.begin_drain(0);
    assert_eq!(world.instances[0].state, InstanceState::Stop);
}

#[test]
fn unsaturated_load_never_scales_up() {
    let def = windowed_def();
    let config = SimConfig::new(1, scenario_vm())
        .with_seed(1)
        .with_policy(scenario_policy());
    let workload = uniform_workload(&Rat::from_int(6), 60_000, &Rat::from_int(4), 0).unwrap();
    let (artifacts, _) = run(&def, &config, &workload).unwrap();
    assert!(!artifacts.decisions.is_empty());
    assert!(artifacts
        .decisions
        .iter()
        .all(|d| d.decision.kind == DecisionKind::NoAction));
    assert_eq!(artifacts.summary.scale_ups, 0);
}

#[test]
fn step_workload_triggers_scale_up_and_recovers() {
    let (artifacts, world) = run_step_scenario();

    // At least one scale-up once the doubled rate overloads the instance.
    let ups: Vec<&DecisionRecord> = artifacts
        .decisions
        .iter()
        .filter(|d| {
            d.decision.kind == DecisionKind::ScaleUp
                && matches!(d.outcome, ApplyOutcome::Applied { .. })
        })
        .collect();
    assert!(!ups.is_empty(), "doubled load must trigger a scale-up");
    assert!(ups[0].decision.at_ms >= 60_000, "no scale-up before the step");

    // Bounds hold at every recorded instant.
    for sample in world.audit() {
        assert!(
            (1..=4).contains(&sample.active),
            "bounds violated at {} ms: {}",
            sample.time_ms,
            sample.active
        );
    }

    // Cooldown: applied actions are never closer than cooldown_ms.
    let times: Vec<i64> = applied(&artifacts.decisions)
        .iter()
        .map(|d| d.decision.at_ms)
        .collect();
    for pair in times.windows(2) {
        assert!(
            pair[1] - pair[0] >= 6_000,
            "applied actions {} and {} violate cooldown",
            pair[0],
            pair[1]
        );
    }

    // Recovery: within 5 poll intervals of the new instance running, some
    // poll observes windowed degradation back at or below 5/1000.
    let first_up_at = ups[0].decision.at_ms;
    let running_at = first_up_at + scenario_vm().boot_delay_ms;
    let recovery_window = running_at..=running_at + 5 * 2_000;
    let recovered = artifacts
        .decisions
        .iter()
        .filter(|d| recovery_window.contains(&d.decision.at_ms))
        .filter_map(|d| d.decision.observed.as_ref())
        .any(|v| *v <= Rat::new(5, 1000));
    assert!(
        recovered,
        "windowed degradation did not return to <= 5/1000 within 5 polls"
    );

    // No lost work: every admitted request completed.
    assert_eq!(world.dropped, 0);
    assert_eq!(world.admitted, world.completed.len() as u64);
}

#[test]
fn load_drop_scales_down_to_min() {
    // Start at 2 with the default lower threshold: near-zero fast traffic
    // reads as degradation 0, below 1/1000, so the deployment shrinks to
    // min and stays there (further decisions come back Bounded).
    let def = windowed_def();
    let policy = ScalingPolicy {
        upper: Rat::new(5, 1000),
        lower: Rat::new(1, 1000),
        cooldown_ms: 4_000,
        min_instances: 1,
        max_instances: 4,
        poll_interval_ms: 2_000,
    };
    let config = SimConfig::new(2, scenario_vm()).with_policy(policy);
    let workload = uniform_workload(&Rat::one(), 40_000, &Rat::from_int(4), 0).unwrap();
    let (artifacts, world) = run(&def, &config, &workload).unwrap();

    assert!(artifacts.summary.scale_downs >= 1);
    assert_eq!(world.active_count(), 1, "settles at min_instances");
    assert!(artifacts
        .decisions
        .iter()
        .any(|d| matches!(d.outcome, ApplyOutcome::Bounded)));
    // Drained instance lost nothing.
    assert_eq!(world.dropped, 0);
    assert_eq!(world.admitted, world.completed.len() as u64);
}

#[test]
fn new_instance_gets_no_dispatch_before_boot_completes() {
    // Overload from t=0 forces an early scale-up; the booted instance may
    // only serve requests dispatched after spawn + boot_delay.
    let def = windowed_def();
    let policy = ScalingPolicy {
        upper: Rat::new(5, 1000),
        lower: Rat::zero(),
        cooldown_ms: 2_000,
        min_instances: 1,
        max_instances: 2,
        poll_interval_ms: 1_000,
    };
    let vm = VmSpec::new(Rat::from_int(40)).with_boot_delay(500);
    let config = SimConfig::new(1, vm).with_policy(policy);
    let burst: Vec<Request> = (0..30)
        .map(|i| Request {
            id: i + 1,
            cost: Rat::from_int(4),
            arrival_ms: 0,
        })
        .collect();
    let tail = uniform_workload(&Rat::from_int(5), 5_000, &Rat::from_int(4), 1_000).unwrap();
    let workload = renumber([burst, tail].concat());
    let (artifacts, world) = run(&def, &config, &workload).unwrap();

    let up_at = artifacts
        .decisions
        .iter()
        .find(|d| matches!(d.outcome, ApplyOutcome::Applied { .. }))
        .expect("burst forces a scale-up")
        .decision
        .at_ms;
    let served_by_new: Vec<i64> = world
        .completed
        .iter()
        .filter(|c| c.instance == 1)
        .map(|c| c.start_ms)
        .collect();
    assert!(!served_by_new.is_empty(), "new instance takes load");
    assert!(served_by_new.iter().all(|&s| s >= up_at + 500));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bounds_hold_under_random_load(seed in 0u64..200, rate in 1i64..30) {
        let def = windowed_def();
        let config = SimConfig::new(1, scenario_vm())
            .with_seed(seed)
            .with_policy(ScalingPolicy {
                upper: Rat::new(5, 1000),
                lower: Rat::new(1, 1000),
                cooldown_ms: 3_000,
                min_instances: 1,
                max_instances: 3,
                poll_interval_ms: 1_000,
            });
        let workload =
            synth_workload(&Rat::from_int(rate), 30_000, &Rat::from_int(4), seed).unwrap();
        let (artifacts, world) = run(&def, &config, &workload).unwrap();
        for sample in world.audit() {
            prop_assert!((1..=3).contains(&sample.active));
        }
        let times: Vec<i64> = applied(&artifacts.decisions)
            .iter()
            .map(|d| d.decision.at_ms)
            .collect();
        for pair in times.windows(2) {
            prop_assert!(pair[1] - pair[0] >= 3_000);
        }
        // Scaling never loses admitted work.
        prop_assert_eq!(
            world.completed.len() as u64 + world.dropped,
            world.admitted
        );
    }
}
