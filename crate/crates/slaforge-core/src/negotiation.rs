//! Negotiation phase: turn an SLA into metric bounds, size the minimum
//! deployment that can meet them, and emit validation workloads.
//!
//! The sizing arithmetic is the capacity idealization `cost/(n*k) <= bound`:
//! uniform request arrivals, zero load-balancing overhead. The report spells
//! that assumption out so discrepancies against the queueing simulation are
//! attributable to it rather than to a bug.

use serde::{Deserialize, Serialize};

use crate::rat::Rat;
use crate::sim::{uniform_workload, Request, VmSpec};

/// Minimal machine-readable SLA: one latency bound with a compliance level.
///
/// File form: `{"metric":"fas.200","latency_bound_ms":200,"compliance":"995/1000"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlaDocument {
    pub metric: String,
    pub latency_bound_ms: Rat,
    pub compliance: Rat,
}

impl SlaDocument {
    pub fn new(metric: impl Into<String>, latency_bound_ms: i64, compliance: Rat) -> Self {
        SlaDocument {
            metric: metric.into(),
            latency_bound_ms: Rat::from_int(latency_bound_ms),
            compliance,
        }
    }

    pub fn validate(&self) -> Result<(), NegotiationError> {
        if !self.latency_bound_ms.is_positive() {
            return Err(NegotiationError::InvalidInput(format!(
                "latency bound must be > 0 ms, got {}",
                self.latency_bound_ms
            )));
        }
        if !self.compliance.is_positive() || self.compliance > Rat::one() {
            return Err(NegotiationError::InvalidInput(format!(
                "compliance must be in (0, 1], got {}",
                self.compliance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NegotiationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// SLA bounds as the monitor consumes them: the latency bound and the
/// allowed slow fraction `1 - compliance`.
pub fn extract_bounds(sla: &SlaDocument) -> Result<(Rat, Rat), NegotiationError> {
    sla.validate()?;
    let threshold = Rat::one() - sla.compliance.clone();
    Ok((sla.latency_bound_ms.clone(), threshold))
}

/// Time for one request on a single machine: `1000 * cost / k` milliseconds,
/// exact.
pub fn single_machine_time_ms(cost: &Rat, k: &Rat) -> Result<Rat, NegotiationError> {
    if !cost.is_positive() {
        return Err(NegotiationError::InvalidInput(format!(
            "cost must be > 0, got {cost}"
        )));
    }
    if !k.is_positive() {
        return Err(NegotiationError::InvalidInput(format!(
            "capacity must be > 0, got {k}"
        )));
    }
    Ok(Rat::from_int(1000) * cost.clone() / k.clone())
}

/// Least machine count `n` with `cost/(n*k) <= bound`:
/// `ceil(1000*cost / (k*bound_ms))`. For a 200 ms bound this is exactly
/// `ceil(5*cost/k)`.
pub fn min_instances(cost: &Rat, k: &Rat, bound_ms: &Rat) -> Result<u64, NegotiationError> {
    if !bound_ms.is_positive() {
        return Err(NegotiationError::InvalidInput(format!(
            "latency bound must be > 0, got {bound_ms}"
        )));
    }
    let per_machine_ms = single_machine_time_ms(cost, k)?;
    let n = (per_machine_ms / bound_ms.clone()).ceil_bigint();
    u64::try_from(&n).map_err(|_| {
        NegotiationError::InvalidInput(format!("required instance count {n} out of range"))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Suggestion {
    /// Smallest latency bound the supplied deployment can honor.
    RelaxBound { latency_bound_ms: Rat },
    /// Instances needed to honor the SLA as written.
    EnlargeResources { required_n: u64 },
    /// Largest per-request cost feasible on the supplied deployment.
    ReduceCost { max_cost: Rat },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub metric: String,
    pub latency_bound_ms: Rat,
    pub slow_fraction_threshold: Rat,
    pub cost: Rat,
    pub machine_ecu: Rat,
    pub supplied_n: u64,
    pub required_n: u64,
    /// `1000 * cost / k`: time for one request on one machine.
    pub per_request_ms: Rat,
    pub assumption: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suggestions: Vec<Suggestion>,
}

const SIZING_ASSUMPTION: &str = "uniform request arrival times; load-balancing and \
     distribution overhead ignored; requests draw on aggregate capacity n*k";

/// Assesses whether `n` machines of `spec` meet the SLA for requests of
/// `cost` ECU. Infeasible reports carry concrete relaxations.
pub fn feasibility(
    sla: &SlaDocument,
    cost: &Rat,
    spec: &VmSpec,
    n: u64,
) -> Result<FeasibilityReport, NegotiationError> {
    sla.validate()?;
    spec.validate().map_err(NegotiationError::InvalidInput)?;
    let (bound_ms, threshold) = extract_bounds(sla)?;
    let per_request_ms = single_machine_time_ms(cost, &spec.ecu)?;
    let required_n = min_instances(cost, &spec.ecu, &bound_ms)?;
    let feasible = n >= required_n;

    let mut suggestions = Vec::new();
    if !feasible {
        if n > 0 {
            // cost/(n*k) in milliseconds: the tightest bound n machines meet.
            let achievable_ms = per_request_ms.clone() / Rat::from(n);
            suggestions.push(Suggestion::RelaxBound {
                latency_bound_ms: achievable_ms,
            });
        }
        suggestions.push(Suggestion::EnlargeResources { required_n });
        if n > 0 {
            // Largest cost with 1000*cost/(n*k) <= bound.
            let max_cost = Rat::from(n) * spec.ecu.clone() * bound_ms.clone()
                / Rat::from_int(1000);
            suggestions.push(Suggestion::ReduceCost { max_cost });
        }
    }

    Ok(FeasibilityReport {
        feasible,
        metric: sla.metric.clone(),
        latency_bound_ms: bound_ms,
        slow_fraction_threshold: threshold,
        cost: cost.clone(),
        machine_ecu: spec.ecu.clone(),
        supplied_n: n,
        required_n,
        per_request_ms,
        assumption: SIZING_ASSUMPTION.to_string(),
        suggestions,
    })
}

impl FeasibilityReport {
    /// Human-readable rendering for the text report artifact.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "feasibility: {}\n",
            if self.feasible { "FEASIBLE" } else { "INFEASIBLE" }
        ));
        out.push_str(&format!("metric: {}\n", self.metric));
        out.push_str(&format!(
            "latency bound: {} ms, slow fraction threshold: {}\n",
            self.latency_bound_ms.to_decimal_string(6),
            self.slow_fraction_threshold
        ));
        out.push_str(&format!(
            "request cost: {} ECU on machines of {} ECU/s\n",
            self.cost.to_decimal_string(6),
            self.machine_ecu.to_decimal_string(6)
        ));
        out.push_str(&format!(
            "single-machine time per request: {} ms\n",
            self.per_request_ms.to_decimal_string(6)
        ));
        out.push_str(&format!(
            "instances: supplied {}, required {}\n",
            self.supplied_n, self.required_n
        ));
        out.push_str(&format!("assumption: {}\n", self.assumption));
        for s in &self.suggestions {
            match s {
                Suggestion::RelaxBound { latency_bound_ms } => out.push_str(&format!(
                    "suggestion: relax the latency bound to {} ms\n",
                    latency_bound_ms.to_decimal_string(6)
                )),
                Suggestion::EnlargeResources { required_n } => out.push_str(&format!(
                    "suggestion: enlarge the deployment to {required_n} instances\n"
                )),
                Suggestion::ReduceCost { max_cost } => out.push_str(&format!(
                    "suggestion: reduce per-request cost to at most {} ECU\n",
                    max_cost.to_decimal_string(6)
                )),
            }
        }
        out
    }
}

/// What a validation workload is expected to show when simulated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum ExpectedOutcome {
    DegradationEquals { value: Rat },
    DegradationExceeds { threshold: Rat },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationWorkload {
    pub label: String,
    /// Instance count the workload is meant to run on.
    pub instances: u64,
    pub expected: ExpectedOutcome,
    pub requests: Vec<Request>,
}

/// Emits two validation workloads: an unsaturated one at half the aggregate
/// service rate, and a saturating burst on fewer instances than required.
/// Expected verdicts are computed from the simulator's own latency law
/// (`procTime = ceil(1000*cost/ecu)` when unsaturated), not from the sizing
/// idealization, so they hold when replayed.
pub fn validation_workloads(
    report: &FeasibilityReport,
    sla: &SlaDocument,
    cost: &Rat,
    machine_ecu: &Rat,
) -> Result<Vec<ValidationWorkload>, NegotiationError> {
    let per_request = single_machine_time_ms(cost, machine_ecu)?;
    let duration_ms = per_request.ceil_i64().max(1);
    let bound_ms = &sla.latency_bound_ms;
    let threshold = report.slow_fraction_threshold.clone();
    let n = report.required_n.max(1);
    let mut out = Vec::new();

    // (i) Unsaturated: half the aggregate service rate of the required
    // deployment, evenly spaced, ten requests per instance. Every request
    // meets `procTime = duration`, so the verdict follows from whether a
    // single machine beats the bound.
    let aggregate_rate = Rat::from(n) * machine_ecu.clone() / cost.clone();
    let rate = aggregate_rate / Rat::from_int(2);
    let span_ms = (Rat::from(10 * n) * Rat::from_int(1000) / rate.clone()).ceil_i64();
    let requests = uniform_workload(&rate, span_ms.max(1), cost, 0)
        .map_err(|e| NegotiationError::InvalidInput(e.to_string()))?;
    let expected = if Rat::from_int(duration_ms) <= *bound_ms {
        ExpectedOutcome::DegradationEquals { value: Rat::zero() }
    } else {
        // Even unsaturated, one machine cannot beat the bound; the sizing
        // assumption (aggregate capacity) does not transfer to the
        // one-request-per-machine simulation.
        ExpectedOutcome::DegradationExceeds { threshold: threshold.clone() }
    };
    out.push(ValidationWorkload {
        label: "unsaturated-half-rate".to_string(),
        instances: n,
        expected,
        requests,
    });

    // (ii) Saturating burst on fewer instances than required (floor 1):
    // enough simultaneous requests that FIFO queueing pushes most past the
    // bound even when a single request would meet it.
    let burst_instances = (report.required_n.saturating_sub(1)).max(1);
    let per_instance = (bound_ms.clone() / Rat::from_int(duration_ms)).floor_bigint();
    let per_instance = u64::try_from(&per_instance).unwrap_or(0) + 10;
    let total = per_instance * burst_instances;
    let requests = (0..total)
        .map(|i| Request {
            id: i + 1,
            cost: cost.clone(),
            arrival_ms: 0,
        })
        .collect();
    out.push(ValidationWorkload {
        label: "saturating-burst-undersized".to_string(),
        instances: burst_instances,
        expected: ExpectedOutcome::DegradationExceeds { threshold },
        requests,
    });

    Ok(out)
}
