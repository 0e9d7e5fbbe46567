//! Gateway conformance over a live endpoint: ingestion verdict codes,
//! metric readout, ordering rules and the compute endpoints.

use std::collections::BTreeMap;
use std::sync::Arc;

use slaforge_client::types::{
    ArrivalProcess, DefinitionSource, EventAck, EventBody, NegotiateRequest, PhaseSpec,
    ReplayRequest, SimulateRequest,
};
use slaforge_client::{ApiClient, ClientError};
use slaforge_core::dsl::builtin;
use slaforge_core::negotiation::SlaDocument;
use slaforge_core::rat::Rat;

async fn start_gateway(with_def: bool) -> (ApiClient, tokio::sync::oneshot::Sender<()>) {
    let def = with_def.then(|| Arc::new(builtin::degradation_definition(200)));
    let (addr, shutdown, _handle) = slaforge_server::serve("127.0.0.1:0", def)
        .await
        .expect("bind loopback");
    (ApiClient::new(format!("http://{addr}")), shutdown)
}

fn invoke_body(time_ms: i64, proc_time_ms: i64) -> EventBody {
    let mut args = BTreeMap::new();
    args.insert("procTime_ms".to_string(), serde_json::json!(proc_time_ms));
    EventBody { time_ms, args }
}

fn degradation_source() -> DefinitionSource {
    DefinitionSource {
        view: Some(builtin::degradation_view_source()),
        grammar: Some(builtin::degradation_grammar_source(200)),
        combined: None,
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn slow_query_then_metric_readout() {
    let (client, _shutdown) = start_gateway(true).await;
    client.health().await.unwrap();

    let ack = client.post_event("invoke", &invoke_body(1000, 300)).await.unwrap();
    assert_eq!(ack, EventAck::Accepted);

    let value = client.metric("fas.200").await.unwrap();
    assert_eq!(value.as_deref(), Some("100/1"));
}

#[tokio::test(flavor = "multi_thread")]
async fn unbound_event_is_ignored_and_metrics_unchanged() {
    let (client, _shutdown) = start_gateway(true).await;
    let before = client.metric("fas.200").await.unwrap();

    let ack = client
        .post_event("heartbeat", &EventBody {
            time_ms: 5,
            args: BTreeMap::new(),
        })
        .await
        .unwrap();
    assert_eq!(ack, EventAck::Ignored);

    let after = client.metric("fas.200").await.unwrap();
    assert_eq!(before, after);
    assert_eq!(after.as_deref(), Some("0/1"), "initial valuation is readable");
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_metric_is_404() {
    let (client, _shutdown) = start_gateway(true).await;
    assert_eq!(client.metric("unknown").await.unwrap(), None);
}

#[tokio::test(flavor = "multi_thread")]
async fn out_of_order_event_is_409() {
    let (client, _shutdown) = start_gateway(true).await;
    client.post_event("invoke", &invoke_body(1000, 100)).await.unwrap();

    let result = client.post_event("invoke", &invoke_body(500, 100)).await;
    match result {
        Err(ClientError::Api { status: 409, .. }) => {}
        other => panic!("expected 409, got {other:?}"),
    }

    // Equal timestamps are fine (ties are legal in traces).
    let ack = client.post_event("invoke", &invoke_body(1000, 100)).await.unwrap();
    assert_eq!(ack, EventAck::Accepted);
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_args_are_400() {
    let (client, _shutdown) = start_gateway(true).await;
    // invoke without procTime: the signature cannot be satisfied.
    let result = client
        .post_event("invoke", &EventBody {
            time_ms: 0,
            args: BTreeMap::new(),
        })
        .await;
    match result {
        Err(ClientError::Api { status: 400, .. }) => {}
        other => panic!("expected 400, got {other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_body_is_400_not_422() {
    // Raw bodies bypass the typed client: bad JSON and a missing time_ms
    // must both read as malformed (400), never as grammar rejections (422).
    let def = Some(Arc::new(builtin::degradation_definition(200)));
    let (addr, _shutdown, _handle) = slaforge_server::serve("127.0.0.1:0", def).await.unwrap();
    let http = reqwest::Client::new();
    for body in ["not json", "{\"args\":{}}"] {
        let resp = http
            .post(format!("http://{addr}/events/invoke"))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status().as_u16(), 400, "body: {body}");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn history_grows_with_accepted_events() {
    let (client, _shutdown) = start_gateway(true).await;
    client.post_event("invoke", &invoke_body(100, 100)).await.unwrap();
    client.post_event("invoke", &invoke_body(200, 300)).await.unwrap();

    let points = client.metric_history("fas.200").await.unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[0].time_ms, 100);
    assert_eq!(points[0].value, "0/1");
    assert_eq!(points[1].time_ms, 200);
    assert_eq!(points[1].value, "50/1");
}

#[tokio::test(flavor = "multi_thread")]
async fn snapshots_are_never_torn() {
    // Concurrent readers may only ever observe committed valuations, i.e.
    // values that the recorded history also contains.
    let (client, _shutdown) = start_gateway(true).await;

    let writer = {
        let client = client.clone();
        tokio::spawn(async move {
            for i in 0..50i64 {
                let proc = if i % 2 == 0 { 100 } else { 300 };
                client
                    .post_event("invoke", &invoke_body(i * 10, proc))
                    .await
                    .unwrap();
            }
        })
    };
    let reader = {
        let client = client.clone();
        tokio::spawn(async move {
            let mut seen = Vec::new();
            for _ in 0..50 {
                if let Some(v) = client.metric("fas.200").await.unwrap() {
                    seen.push(v);
                }
            }
            seen
        })
    };
    let (w, seen) = tokio::join!(writer, reader);
    w.unwrap();
    let seen = seen.unwrap();

    let mut committed: Vec<String> = vec!["0/1".to_string()];
    for p in client.metric_history("fas.200").await.unwrap() {
        committed.push(p.value);
    }
    for value in seen {
        assert!(
            committed.contains(&value),
            "observed `{value}` is not a committed valuation"
        );
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn ingestion_routes_require_a_definition() {
    let (client, _shutdown) = start_gateway(false).await;
    client.health().await.unwrap();
    let result = client.post_event("invoke", &invoke_body(0, 100)).await;
    assert!(matches!(result, Err(ClientError::Api { status: 404, .. })));
    assert_eq!(client.metric("fas.200").await.unwrap(), None);
}

#[tokio::test(flavor = "multi_thread")]
async fn negotiate_endpoint_reports_feasibility() {
    let (client, _shutdown) = start_gateway(false).await;
    let request = NegotiateRequest {
        sla: SlaDocument::new("fas.200", 200, Rat::new(995, 1000)),
        cost: Rat::from_int(4),
        ecu: Rat::from_int(10),
        boot_delay_ms: 0,
        instances: 2,
        include_workloads: true,
    };
    let resp = client.negotiate(&request).await.unwrap();
    assert!(resp.report.feasible);
    assert_eq!(resp.report.required_n, 2);
    assert_eq!(resp.workloads.len(), 2);
    assert!(resp.report_text.contains("FEASIBLE"));

    let undersized = NegotiateRequest {
        instances: 1,
        include_workloads: false,
        ..request
    };
    let resp = client.negotiate(&undersized).await.unwrap();
    assert!(!resp.report.feasible);
    assert_eq!(resp.report.suggestions.len(), 3);
}

#[tokio::test(flavor = "multi_thread")]
async fn simulate_endpoint_is_deterministic() {
    let (client, _shutdown) = start_gateway(false).await;
    let request = SimulateRequest {
        definition: degradation_source(),
        sla: None,
        policy: None,
        ecu: Rat::from_int(40),
        boot_delay_ms: 0,
        instances: Some(1),
        phases: vec![PhaseSpec {
            rate_per_s: Rat::from_int(8),
            until_ms: 5_000,
        }],
        cost: Rat::from_int(4),
        arrivals: ArrivalProcess::Poisson,
        seed: 99,
        sample_ms: None,
    };
    let a = client.simulate(&request).await.unwrap();
    let b = client.simulate(&request).await.unwrap();
    assert_eq!(a.trace_jsonl, b.trace_jsonl);
    assert_eq!(a.telemetry_csv, b.telemetry_csv);
    assert_eq!(a.history_jsonl, b.history_jsonl);
    assert_eq!(a.summary, b.summary);
    assert!(a.summary.admitted > 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn replay_endpoint_handles_proc_time_logs() {
    let (client, _shutdown) = start_gateway(false).await;
    let request = ReplayRequest {
        definition: degradation_source(),
        sla: None,
        policy: None,
        ecu: None,
        boot_delay_ms: 0,
        instances: None,
        log_jsonl: "{\"time_ms\":0,\"proc_time_ms\":100}\n{\"time_ms\":10,\"proc_time_ms\":150}\n"
            .to_string(),
        sample_ms: None,
    };
    let artifacts = client.replay(&request).await.unwrap();
    assert_eq!(artifacts.summary.final_metrics["fas.200"], Rat::zero());
    assert_eq!(artifacts.summary.events_emitted, 2);
    assert!(artifacts.telemetry_csv.starts_with("bucket_start_ms"));

    // Malformed logs surface the offending line.
    let bad = ReplayRequest {
        log_jsonl: "{\"time_ms\":0,\"proc_time_ms\":100}\nnot json\n".to_string(),
        ..request
    };
    match client.replay(&bad).await {
        Err(ClientError::Api { status: 400, message }) => {
            assert!(message.contains("line 2"), "message: {message}");
        }
        other => panic!("expected 400, got {other:?}"),
    }
}
