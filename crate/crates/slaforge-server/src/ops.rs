//! The negotiation, simulation and replay operations behind the gateway's
//! POST endpoints. Pure synchronous work; handlers run them on the blocking
//! pool.

use std::sync::Arc;

use slaforge_client::types::{
    ArrivalProcess, DefinitionSource, NegotiateRequest, NegotiateResponse, PhaseSpec,
    ReplayRequest, RunArtifactsWire, SimulateRequest,
};
use slaforge_core::autoscaler::decisions_to_jsonl;
use slaforge_core::dsl::{self, MetricDefinition};
use slaforge_core::negotiation::{feasibility, min_instances, validation_workloads};
use slaforge_core::rat::Rat;
use slaforge_core::sim::{
    renumber, replay_proc_times, run, synth_workload, uniform_workload, workload_from_log,
    LogWorkload, Request, RunArtifacts, SimConfig, VmSpec,
};
use slaforge_core::trace::events_to_jsonl;

/// Client-attributable failure; the gateway answers 400 with this message.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct OpError(pub String);

impl From<String> for OpError {
    fn from(s: String) -> Self {
        OpError(s)
    }
}

pub fn load_definition(source: &DefinitionSource) -> Result<Arc<MetricDefinition>, OpError> {
    let (view, parts) = match (&source.combined, &source.view, &source.grammar) {
        (Some(combined), None, None) => {
            dsl::parse_combined(combined).map_err(|e| OpError(format!("metric file: {e}")))?
        }
        (None, Some(view), Some(grammar)) => {
            let view = dsl::parse_view(view).map_err(|e| OpError(format!("view: {e}")))?;
            let parts =
                dsl::parse_grammar(grammar).map_err(|e| OpError(format!("grammar: {e}")))?;
            (view, parts)
        }
        _ => {
            return Err(OpError(
                "provide either `view` and `grammar`, or a `combined` metric source".to_string(),
            ))
        }
    };
    let def = dsl::bind(&view, &parts).map_err(|e| OpError(e.to_string()))?;
    Ok(Arc::new(def))
}

pub fn negotiate(req: &NegotiateRequest) -> Result<NegotiateResponse, OpError> {
    let spec = VmSpec {
        ecu: req.ecu.clone(),
        boot_delay_ms: req.boot_delay_ms,
    };
    let report = feasibility(&req.sla, &req.cost, &spec, req.instances)
        .map_err(|e| OpError(e.to_string()))?;
    let workloads = if req.include_workloads {
        validation_workloads(&report, &req.sla, &req.cost, &spec.ecu)
            .map_err(|e| OpError(e.to_string()))?
    } else {
        Vec::new()
    };
    let report_text = report.render_text();
    Ok(NegotiateResponse {
        report,
        report_text,
        workloads,
    })
}

fn phases_to_workload(
    phases: &[PhaseSpec],
    cost: &Rat,
    arrivals: ArrivalProcess,
    seed: u64,
) -> Result<Vec<Request>, OpError> {
    if phases.is_empty() {
        return Err(OpError("at least one workload phase is required".to_string()));
    }
    let mut all = Vec::new();
    let mut start_ms = 0i64;
    for (i, phase) in phases.iter().enumerate() {
        if phase.until_ms <= start_ms {
            return Err(OpError(format!(
                "phase {i} ends at {} ms, before it starts at {start_ms} ms",
                phase.until_ms
            )));
        }
        let duration = phase.until_ms - start_ms;
        let mut batch = match arrivals {
            ArrivalProcess::Uniform => uniform_workload(&phase.rate_per_s, duration, cost, start_ms),
            ArrivalProcess::Poisson => {
                synth_workload(&phase.rate_per_s, duration, cost, seed ^ (i as u64 + 1)).map(
                    |mut reqs| {
                        for r in &mut reqs {
                            r.arrival_ms += start_ms;
                        }
                        reqs
                    },
                )
            }
        }
        .map_err(|e| OpError(e.to_string()))?;
        all.append(&mut batch);
        start_ms = phase.until_ms;
    }
    Ok(renumber(all))
}

fn resolve_instances(
    instances: Option<u64>,
    sla: Option<&slaforge_core::negotiation::SlaDocument>,
    cost: &Rat,
    ecu: &Rat,
) -> Result<u64, OpError> {
    match instances {
        Some(n) => Ok(n),
        None => {
            let sla = sla.ok_or_else(|| {
                OpError("either `instances` or an `sla` to size from is required".to_string())
            })?;
            min_instances(cost, ecu, &sla.latency_bound_ms).map_err(|e| OpError(e.to_string()))
        }
    }
}

fn artifacts_to_wire(artifacts: RunArtifacts) -> RunArtifactsWire {
    RunArtifactsWire {
        trace_jsonl: events_to_jsonl(&artifacts.trace),
        telemetry_csv: artifacts.telemetry.to_csv(),
        history_jsonl: artifacts.history.to_jsonl(),
        decisions_jsonl: decisions_to_jsonl(&artifacts.decisions),
        summary: artifacts.summary,
    }
}

pub fn simulate(req: &SimulateRequest) -> Result<RunArtifactsWire, OpError> {
    let def = load_definition(&req.definition)?;
    let workload = phases_to_workload(&req.phases, &req.cost, req.arrivals, req.seed)?;
    let instances = resolve_instances(req.instances, req.sla.as_ref(), &req.cost, &req.ecu)?;
    let vm = VmSpec {
        ecu: req.ecu.clone(),
        boot_delay_ms: req.boot_delay_ms,
    };
    let mut config = SimConfig::new(instances, vm).with_seed(req.seed);
    if let Some(policy) = &req.policy {
        config = config.with_policy(policy.clone());
    }
    if let Some(sample_ms) = req.sample_ms {
        config.sample_period_ms = sample_ms;
    }
    let (artifacts, _world) = run(&def, &config, &workload).map_err(|e| OpError(e.to_string()))?;
    Ok(artifacts_to_wire(artifacts))
}

pub fn replay(req: &ReplayRequest) -> Result<RunArtifactsWire, OpError> {
    let def = load_definition(&req.definition)?;
    match workload_from_log(&req.log_jsonl).map_err(|e| OpError(e.to_string()))? {
        LogWorkload::ProcTimes(proc_times) => {
            // Pre-measured response times bypass the simulator.
            Ok(artifacts_to_wire(replay_proc_times(&def, &proc_times)))
        }
        LogWorkload::Requests(requests) => {
            if requests.is_empty() {
                // Nothing to simulate: empty outputs, initial metrics.
                return Ok(artifacts_to_wire(replay_proc_times(&def, &[])));
            }
            let ecu = req.ecu.clone().ok_or_else(|| {
                OpError("`ecu` is required to simulate a cost log".to_string())
            })?;
            let cost_hint = requests
                .first()
                .map(|r| r.cost.clone())
                .unwrap_or_else(Rat::one);
            let instances =
                resolve_instances(req.instances, req.sla.as_ref(), &cost_hint, &ecu)?;
            let vm = VmSpec {
                ecu,
                boot_delay_ms: req.boot_delay_ms,
            };
            let mut config = SimConfig::new(instances, vm);
            if let Some(policy) = &req.policy {
                config = config.with_policy(policy.clone());
            }
            if let Some(sample_ms) = req.sample_ms {
                config.sample_period_ms = sample_ms;
            }
            let (artifacts, _world) =
                run(&def, &config, &requests).map_err(|e| OpError(e.to_string()))?;
            Ok(artifacts_to_wire(artifacts))
        }
    }
}
