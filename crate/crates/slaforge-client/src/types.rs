//! Request and response bodies shared by the gateway and its clients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use slaforge_core::autoscaler::ScalingPolicy;
use slaforge_core::negotiation::{FeasibilityReport, SlaDocument, ValidationWorkload};
use slaforge_core::rat::Rat;
use slaforge_core::sim::RunSummary;

fn default_instances() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegotiateRequest {
    pub sla: SlaDocument,
    pub cost: Rat,
    pub ecu: Rat,
    #[serde(default)]
    pub boot_delay_ms: i64,
    #[serde(default = "default_instances")]
    pub instances: u64,
    /// Attach the validation workloads to the response.
    #[serde(default)]
    pub include_workloads: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegotiateResponse {
    pub report: FeasibilityReport,
    pub report_text: String,
    #[serde(default)]
    pub workloads: Vec<ValidationWorkload>,
}

/// Sources of the metric definition: either separate view and grammar
/// sources, or one combined `.sla-metric` source.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DefinitionSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grammar: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combined: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalProcess {
    #[default]
    Poisson,
    Uniform,
}

/// One constant-rate phase of a synthetic workload, ending at `until_ms`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub rate_per_s: Rat,
    pub until_ms: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateRequest {
    #[serde(flatten)]
    pub definition: DefinitionSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sla: Option<SlaDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<ScalingPolicy>,
    pub ecu: Rat,
    #[serde(default)]
    pub boot_delay_ms: i64,
    /// Defaults to the negotiated minimum when an SLA is supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<u64>,
    pub phases: Vec<PhaseSpec>,
    pub cost: Rat,
    #[serde(default)]
    pub arrivals: ArrivalProcess,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_ms: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayRequest {
    #[serde(flatten)]
    pub definition: DefinitionSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sla: Option<SlaDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<ScalingPolicy>,
    /// Required for `cost` logs; ignored for `proc_time_ms` logs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecu: Option<Rat>,
    #[serde(default)]
    pub boot_delay_ms: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<u64>,
    pub log_jsonl: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_ms: Option<i64>,
}

/// Run artifacts as written to disk: JSONL and CSV payloads verbatim, plus
/// the run summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifactsWire {
    pub trace_jsonl: String,
    pub telemetry_csv: String,
    pub history_jsonl: String,
    pub decisions_jsonl: String,
    pub summary: RunSummary,
}

/// Body of `POST /events/{event_name}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventBody {
    pub time_ms: i64,
    #[serde(default)]
    pub args: BTreeMap<String, serde_json::Value>,
}

/// Gateway verdict on a posted event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventAck {
    /// 202: consumed, metrics advanced.
    Accepted,
    /// 200: not selected by the view, state unchanged.
    Ignored,
    /// 422: selected but illegal here.
    Rejected(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub time_ms: i64,
    pub value: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
