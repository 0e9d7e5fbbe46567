//! Workloads: replayed logs and seeded synthetic arrival processes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rat::Rat;

/// One request: a resource demand in ECU arriving at a point in time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub cost: Rat,
    pub arrival_ms: i64,
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: arrival times must be non-decreasing ({prev} ms then {next} ms)")]
    OutOfOrder { line: usize, prev: i64, next: i64 },
    #[error(
        "line {line}: mixed log schema; a log is either all cost lines or all proc_time lines"
    )]
    MixedSchema { line: usize },
    #[error("{field} must be positive")]
    NonPositive { field: &'static str },
}

/// A parsed replay log. `cost` lines drive the simulator; `proc_time` lines
/// bypass it and feed the trace engine directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogWorkload {
    Requests(Vec<Request>),
    ProcTimes(Vec<(i64, Rat)>),
}

#[derive(Deserialize)]
struct LogLine {
    time_ms: i64,
    #[serde(default)]
    cost: Option<serde_json::Number>,
    #[serde(default)]
    proc_time_ms: Option<serde_json::Number>,
}

/// Parses a JSON Lines log: `{"time_ms":..,"cost":..}` or
/// `{"time_ms":..,"proc_time_ms":..}`. Recorded timings are preserved
/// exactly; ties are allowed, regressions are not.
pub fn workload_from_log(text: &str) -> Result<LogWorkload, WorkloadError> {
    let mut requests: Vec<Request> = Vec::new();
    let mut proc_times: Vec<(i64, Rat)> = Vec::new();
    let mut last_time: Option<i64> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parsed: LogLine =
            serde_json::from_str(trimmed).map_err(|e| WorkloadError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        if parsed.time_ms < 0 {
            return Err(WorkloadError::Malformed {
                line: line_no,
                message: format!("time_ms must be >= 0, got {}", parsed.time_ms),
            });
        }
        if let Some(prev) = last_time {
            if parsed.time_ms < prev {
                return Err(WorkloadError::OutOfOrder {
                    line: line_no,
                    prev,
                    next: parsed.time_ms,
                });
            }
        }
        last_time = Some(parsed.time_ms);

        match (parsed.cost, parsed.proc_time_ms) {
            (Some(cost), None) => {
                if !proc_times.is_empty() {
                    return Err(WorkloadError::MixedSchema { line: line_no });
                }
                let cost = Rat::from_json_number(&cost).map_err(|e| WorkloadError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
                if !cost.is_positive() {
                    return Err(WorkloadError::Malformed {
                        line: line_no,
                        message: format!("cost must be > 0, got {cost}"),
                    });
                }
                requests.push(Request {
                    id: requests.len() as u64 + 1,
                    cost,
                    arrival_ms: parsed.time_ms,
                });
            }
            (None, Some(pt)) => {
                if !requests.is_empty() {
                    return Err(WorkloadError::MixedSchema { line: line_no });
                }
                let pt = Rat::from_json_number(&pt).map_err(|e| WorkloadError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
                proc_times.push((parsed.time_ms, pt));
            }
            (Some(_), Some(_)) => {
                return Err(WorkloadError::Malformed {
                    line: line_no,
                    message: "line carries both `cost` and `proc_time_ms`".to_string(),
                })
            }
            (None, None) => {
                return Err(WorkloadError::Malformed {
                    line: line_no,
                    message: "line needs either `cost` or `proc_time_ms`".to_string(),
                })
            }
        }
    }

    if proc_times.is_empty() {
        Ok(LogWorkload::Requests(requests))
    } else {
        Ok(LogWorkload::ProcTimes(proc_times))
    }
}

/// Poisson arrivals at mean `rate_per_s` over `[0, duration_ms)`, all with
/// the same cost. Deterministic per seed; zero rate yields an empty workload.
pub fn synth_workload(
    rate_per_s: &Rat,
    duration_ms: i64,
    cost: &Rat,
    seed: u64,
) -> Result<Vec<Request>, WorkloadError> {
    if rate_per_s.is_negative() {
        return Err(WorkloadError::NonPositive { field: "rate" });
    }
    if !cost.is_positive() {
        return Err(WorkloadError::NonPositive { field: "cost" });
    }
    if rate_per_s.is_zero() || duration_ms <= 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate_per_ms = rate_per_s.to_f64() / 1000.0;
    let mut t = 0.0_f64;
    let mut out = Vec::new();
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / rate_per_ms;
        let arrival = t.floor() as i64;
        if arrival >= duration_ms {
            break;
        }
        out.push(Request {
            id: out.len() as u64 + 1,
            cost: cost.clone(),
            arrival_ms: arrival,
        });
    }
    Ok(out)
}

/// Evenly spaced arrivals at `rate_per_s` over `[start_ms, start_ms + duration_ms)`.
/// Arrival k is `start + floor(k * 1000 / rate)`, exact, so the spacing never
/// drifts. Used where a workload must be deterministic without a seed.
pub fn uniform_workload(
    rate_per_s: &Rat,
    duration_ms: i64,
    cost: &Rat,
    start_ms: i64,
) -> Result<Vec<Request>, WorkloadError> {
    if rate_per_s.is_negative() {
        return Err(WorkloadError::NonPositive { field: "rate" });
    }
    if !cost.is_positive() {
        return Err(WorkloadError::NonPositive { field: "cost" });
    }
    if rate_per_s.is_zero() || duration_ms <= 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut k: i64 = 0;
    loop {
        let offset = (Rat::from_int(k) * Rat::from_int(1000) / rate_per_s.clone()).floor_bigint();
        let offset: i64 = i64::try_from(&offset).expect("arrival offset fits i64");
        if offset >= duration_ms {
            break;
        }
        out.push(Request {
            id: out.len() as u64 + 1,
            cost: cost.clone(),
            arrival_ms: start_ms + offset,
        });
        k += 1;
    }
    Ok(out)
}

/// Renumbers ids after concatenating workload phases.
pub fn renumber(mut requests: Vec<Request>) -> Vec<Request> {
    requests.sort_by_key(|r| r.arrival_ms);
    for (i, r) in requests.iter_mut().enumerate() {
        r.id = i as u64 + 1;
    }
    requests
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_preserves_timings() {
        let log = r#"{"time_ms":0,"cost":4}
{"time_ms":50,"cost":4}
{"time_ms":50,"cost":4}
{"time_ms":120,"cost":4}"#;
        match workload_from_log(log).unwrap() {
            LogWorkload::Requests(reqs) => {
                let arrivals: Vec<i64> = reqs.iter().map(|r| r.arrival_ms).collect();
                assert_eq!(arrivals, vec![0, 50, 50, 120]);
            }
            other => panic!("expected requests, got {other:?}"),
        }
    }

    #[test]
    fn proc_time_schema_bypasses_simulation() {
        let log = r#"{"time_ms":0,"proc_time_ms":100}
{"time_ms":10,"proc_time_ms":300.5}"#;
        match workload_from_log(log).unwrap() {
            LogWorkload::ProcTimes(pts) => {
                assert_eq!(pts[1], (10, Rat::new(601, 2)));
            }
            other => panic!("expected proc times, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_is_numbered() {
        let err = workload_from_log("{\"time_ms\":0,\"cost\":1}\nnope").unwrap_err();
        assert!(matches!(err, WorkloadError::Malformed { line: 2, .. }));
    }

    #[test]
    fn regression_and_mixed_schema_rejected() {
        let err = workload_from_log(
            "{\"time_ms\":9,\"cost\":1}\n{\"time_ms\":5,\"cost\":1}",
        )
        .unwrap_err();
        assert!(matches!(err, WorkloadError::OutOfOrder { line: 2, .. }));

        let err = workload_from_log(
            "{\"time_ms\":0,\"cost\":1}\n{\"time_ms\":5,\"proc_time_ms\":10}",
        )
        .unwrap_err();
        assert!(matches!(err, WorkloadError::MixedSchema { line: 2 }));
    }

    #[test]
    fn zero_rate_is_empty() {
        assert!(synth_workload(&Rat::zero(), 1_000, &Rat::one(), 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn synth_is_deterministic_per_seed() {
        let a = synth_workload(&Rat::from_int(100), 10_000, &Rat::from_int(4), 7).unwrap();
        let b = synth_workload(&Rat::from_int(100), 10_000, &Rat::from_int(4), 7).unwrap();
        assert_eq!(a, b);
        let c = synth_workload(&Rat::from_int(100), 10_000, &Rat::from_int(4), 8).unwrap();
        assert_ne!(a, c);
        // Mean rate sanity: 100/s over 10 s is about 1000 arrivals.
        assert!((600..1500).contains(&a.len()), "got {}", a.len());
    }

    #[test]
    fn uniform_spacing_is_exact() {
        let w = uniform_workload(&Rat::from_int(5), 1_000, &Rat::one(), 0).unwrap();
        let arrivals: Vec<i64> = w.iter().map(|r| r.arrival_ms).collect();
        assert_eq!(arrivals, vec![0, 200, 400, 600, 800]);
        // A non-divisor rate must not drift: 3/s over 2 s.
        let w = uniform_workload(&Rat::from_int(3), 2_000, &Rat::one(), 0).unwrap();
        let arrivals: Vec<i64> = w.iter().map(|r| r.arrival_ms).collect();
        assert_eq!(arrivals, vec![0, 333, 666, 1000, 1333, 1666]);
    }
}
