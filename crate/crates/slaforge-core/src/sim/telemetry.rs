//! Per-second telemetry: completions, mean in-flight requests and CPU
//! utilization, accumulated exactly as time-weighted integer integrals.

use std::collections::BTreeMap;

use crate::rat::Rat;

const BUCKET_MS: i64 = 1000;

#[derive(Debug, Clone, Default)]
struct BucketAcc {
    completed: u64,
    dropped: u64,
    inflight_ms: i128,
    busy_ms: i128,
    running_ms: i128,
}

/// Accumulates world state between events; call [`TelemetryBuilder::advance`]
/// with the *old* state before applying a change at the new clock.
#[derive(Debug, Clone)]
pub struct TelemetryBuilder {
    buckets: BTreeMap<i64, BucketAcc>,
    last_ms: i64,
}

impl Default for TelemetryBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl TelemetryBuilder {
    pub fn new() -> Self {
        TelemetryBuilder {
            buckets: BTreeMap::new(),
            last_ms: 0,
        }
    }

    /// Integrates constant counts over `[last, to)`, split on bucket
    /// boundaries so every millisecond lands in its own bucket.
    pub fn advance(&mut self, to_ms: i64, inflight: u64, busy: u64, running: u64) {
        let mut t = self.last_ms;
        while t < to_ms {
            let bucket = t.div_euclid(BUCKET_MS);
            let bucket_end = (bucket + 1) * BUCKET_MS;
            let span = (bucket_end.min(to_ms) - t) as i128;
            let acc = self.buckets.entry(bucket).or_default();
            acc.inflight_ms += span * inflight as i128;
            acc.busy_ms += span * busy as i128;
            acc.running_ms += span * running as i128;
            t = bucket_end.min(to_ms);
        }
        self.last_ms = self.last_ms.max(to_ms);
    }

    pub fn completion(&mut self, at_ms: i64) {
        self.buckets
            .entry(at_ms.div_euclid(BUCKET_MS))
            .or_default()
            .completed += 1;
    }

    pub fn dropped(&mut self, at_ms: i64) {
        self.buckets
            .entry(at_ms.div_euclid(BUCKET_MS))
            .or_default()
            .dropped += 1;
    }

    pub fn finalize(self) -> TelemetrySeries {
        let last_bucket = self.buckets.keys().next_back().copied();
        let mut rows = Vec::new();
        if let Some(last) = last_bucket {
            for bucket in 0..=last {
                let acc = self.buckets.get(&bucket).cloned().unwrap_or_default();
                let ratio = |num: i128| -> Rat {
                    if acc.running_ms == 0 {
                        Rat::zero()
                    } else {
                        Rat::from_bigint(num.into()) / Rat::from_bigint(acc.running_ms.into())
                    }
                };
                rows.push(TelemetryRow {
                    bucket_start_ms: bucket * BUCKET_MS,
                    qps: acc.completed,
                    concurrent_avg: ratio(acc.inflight_ms),
                    cpu_util: ratio(acc.busy_ms),
                    dropped: acc.dropped,
                });
            }
        }
        TelemetrySeries { rows }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TelemetryRow {
    pub bucket_start_ms: i64,
    /// Completions inside the 1 s bucket.
    pub qps: u64,
    /// Time-weighted mean of in-flight requests per active instance.
    pub concurrent_avg: Rat,
    /// Busy-time fraction averaged over active instances.
    pub cpu_util: Rat,
    /// Dispatch failures in the bucket (not part of the CSV schema).
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TelemetrySeries {
    pub rows: Vec<TelemetryRow>,
}

impl TelemetrySeries {
    pub fn total_dropped(&self) -> u64 {
        self.rows.iter().map(|r| r.dropped).sum()
    }

    /// CSV export with the fixed header
    /// `bucket_start_ms,qps,concurrent_avg,cpu_util`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket_start_ms,qps,concurrent_avg,cpu_util\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.bucket_start_ms,
                row.qps,
                row.concurrent_avg.to_decimal_string(6),
                row.cpu_util.to_decimal_string(6)
            ));
        }
        out
    }
}
