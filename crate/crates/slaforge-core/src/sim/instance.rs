//! Service instances: single-server FIFO queues with ECU-rated capacity.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::workload::Request;
use crate::rat::Rat;

/// Virtual machine sizing: execution resources per second and boot latency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VmSpec {
    pub ecu: Rat,
    #[serde(default)]
    pub boot_delay_ms: i64,
}

impl VmSpec {
    pub fn new(ecu: Rat) -> Self {
        VmSpec {
            ecu,
            boot_delay_ms: 0,
        }
    }

    pub fn with_boot_delay(mut self, boot_delay_ms: i64) -> Self {
        self.boot_delay_ms = boot_delay_ms;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.ecu.is_positive() {
            return Err(format!("ecu must be > 0, got {}", self.ecu));
        }
        if self.boot_delay_ms < 0 {
            return Err(format!("boot_delay_ms must be >= 0, got {}", self.boot_delay_ms));
        }
        Ok(())
    }

    /// Milliseconds one request of `cost` ECU occupies this machine:
    /// `ceil(1000 * cost / ecu)`. Rounding up never understates latency.
    pub fn service_duration_ms(&self, cost: &Rat) -> i64 {
        ((Rat::from_int(1000) * cost.clone()) / self.ecu.clone()).ceil_i64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceState {
    Stop,
    Starting,
    Running,
    Stopping,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueuedRequest {
    pub request: Request,
    pub start_ms: i64,
    pub completion_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("instance {id} is {state:?}, not RUNNING")]
pub struct NotRunning {
    pub id: usize,
    pub state: InstanceState,
}

/// One query-service instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceInstance {
    pub id: usize,
    pub spec: VmSpec,
    pub state: InstanceState,
    /// Total requests admitted.
    pub log: u64,
    /// Maximum observed response time (queueing included).
    pub latency_ms: i64,
    queue: VecDeque<QueuedRequest>,
    pub busy_until_ms: i64,
}

impl ServiceInstance {
    pub fn new(id: usize, spec: VmSpec, state: InstanceState) -> Self {
        ServiceInstance {
            id,
            spec,
            state,
            log: 0,
            latency_ms: 0,
            queue: VecDeque::new(),
            busy_until_ms: 0,
        }
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn queue(&self) -> &VecDeque<QueuedRequest> {
        &self.queue
    }

    /// Admits a request at `now`. FIFO: it starts when the work already
    /// queued finishes, so the instance is never idle while its queue is
    /// nonempty. Returns the completion time.
    pub fn process(&mut self, request: Request, now_ms: i64) -> Result<i64, NotRunning> {
        if self.state != InstanceState::Running {
            return Err(NotRunning {
                id: self.id,
                state: self.state,
            });
        }
        let duration = self.spec.service_duration_ms(&request.cost);
        let start = now_ms.max(self.busy_until_ms);
        let completion = start + duration;
        self.busy_until_ms = completion;
        self.log += 1;
        self.latency_ms = self.latency_ms.max(completion - request.arrival_ms);
        self.queue.push_back(QueuedRequest {
            request,
            start_ms: start,
            completion_ms: completion,
        });
        Ok(completion)
    }

    /// Pops the completed head of the queue. Completions arrive in FIFO
    /// order, so the head always matches.
    pub fn complete_front(&mut self, request_id: u64) -> QueuedRequest {
        let front = self.queue.pop_front().expect("completion without queued request");
        debug_assert_eq!(front.request.id, request_id, "FIFO completion order");
        front
    }

    /// True when a draining instance has nothing left to finish.
    pub fn drained(&self) -> bool {
        self.queue.is_empty()
    }
}
