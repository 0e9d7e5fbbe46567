//! Live event ingestion: a single writer task owns the evaluator, handlers
//! talk to it over a channel, and readers see lock-free snapshots of the
//! last committed valuation through a watch channel.

use std::sync::{Arc, RwLock};

use tokio::sync::{mpsc, oneshot, watch};

use slaforge_core::dsl::MetricDefinition;
use slaforge_core::rat::Rat;
use slaforge_core::trace::{EvaluatorState, MetricHistory, RawEvent, RejectReason, StepOutcome};

/// Last committed `(key, value)` pairs.
pub type Valuation = Arc<Vec<(String, Rat)>>;

#[derive(Debug)]
pub enum IngestReply {
    Accepted,
    Ignored,
    Rejected(String),
    /// `time_ms` precedes an already-accepted event.
    OutOfOrder { last_ms: i64 },
    /// Arguments do not fit the bound signature.
    BadArgs(String),
}

pub struct IngestMsg {
    pub event: RawEvent,
    pub reply: oneshot::Sender<IngestReply>,
}

/// Handle the HTTP handlers hold.
#[derive(Clone)]
pub struct IngestHandle {
    pub tx: mpsc::Sender<IngestMsg>,
    pub snapshot: watch::Receiver<Valuation>,
    pub history: Arc<RwLock<MetricHistory>>,
}

impl IngestHandle {
    pub fn metric(&self, key: &str) -> Option<Rat> {
        self.snapshot
            .borrow()
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
    }

    pub fn known_key(&self, key: &str) -> bool {
        self.metric(key).is_some()
            || self
                .history
                .read()
                .expect("history lock")
                .latest_for_key(key)
                .is_some()
    }
}

/// Spawns the writer task for `def` and returns the shared handle.
pub fn spawn(def: Arc<MetricDefinition>) -> IngestHandle {
    let evaluator = EvaluatorState::new(def);
    let (tx, rx) = mpsc::channel::<IngestMsg>(256);
    let (snapshot_tx, snapshot_rx) = watch::channel::<Valuation>(Arc::new(evaluator.metrics()));
    let history = Arc::new(RwLock::new(MetricHistory::new()));
    let handle = IngestHandle {
        tx,
        snapshot: snapshot_rx,
        history: Arc::clone(&history),
    };
    tokio::spawn(writer_task(evaluator, rx, snapshot_tx, history));
    handle
}

async fn writer_task(
    mut evaluator: EvaluatorState,
    mut rx: mpsc::Receiver<IngestMsg>,
    snapshot_tx: watch::Sender<Valuation>,
    history: Arc<RwLock<MetricHistory>>,
) {
    // Trace semantics are order-of-arrival: an accepted event pins the
    // low-water mark for every later event the view selects.
    let mut last_accepted_ms: Option<i64> = None;
    while let Some(IngestMsg { event, reply }) = rx.recv().await {
        let selected = evaluator.definition().binding_for_event(&event.name).is_some();
        if selected {
            if let Some(last) = last_accepted_ms {
                if event.time_ms < last {
                    let _ = reply.send(IngestReply::OutOfOrder { last_ms: last });
                    continue;
                }
            }
        }
        let verdict = match evaluator.step(&event) {
            StepOutcome::Stepped => {
                last_accepted_ms = Some(event.time_ms);
                let metrics = evaluator.metrics();
                {
                    let mut hist = history.write().expect("history lock");
                    for (key, value) in &metrics {
                        hist.record(event.time_ms, key, value.clone())
                            .expect("409 gate keeps times monotone");
                    }
                }
                let _ = snapshot_tx.send(Arc::new(metrics));
                IngestReply::Accepted
            }
            StepOutcome::Ignored => IngestReply::Ignored,
            StepOutcome::Rejected(RejectReason::BadArgs(e)) => IngestReply::BadArgs(e.to_string()),
            StepOutcome::Rejected(reason) => IngestReply::Rejected(reason.to_string()),
        };
        let _ = reply.send(verdict);
    }
}
