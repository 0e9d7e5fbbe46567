//! Subcommand implementations. Batch commands go through the HTTP client:
//! against `--server URL` when given, otherwise against an embedded
//! loopback gateway started just for the call.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};

use slaforge_client::types::{
    ArrivalProcess, DefinitionSource, NegotiateRequest, PhaseSpec, ReplayRequest,
    RunArtifactsWire, SimulateRequest,
};
use slaforge_client::ApiClient;
use slaforge_core::autoscaler::ScalingPolicy;
use slaforge_core::dsl::{self, MetricDefinition};
use slaforge_core::negotiation::SlaDocument;
use slaforge_core::rat::Rat;
use slaforge_core::sim::RunSummary;

use crate::{Command, DefinitionArgs};

pub async fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Negotiate {
            sla,
            cost,
            ecu,
            boot_delay_ms,
            instances,
            workloads,
            out,
            server,
        } => {
            negotiate(
                sla,
                cost,
                ecu,
                boot_delay_ms,
                instances,
                workloads,
                out,
                server,
            )
            .await
        }
        Command::Simulate {
            definition,
            sla,
            policy,
            ecu,
            boot_delay_ms,
            instances,
            rate,
            duration_ms,
            phase,
            cost,
            arrivals,
            seed,
            sample_ms,
            out,
            server,
        } => {
            let request = SimulateRequest {
                definition: definition_source(&definition)?,
                sla: sla.map(|p| load_sla(&p)).transpose()?,
                policy: policy.map(|p| load_policy(&p)).transpose()?,
                ecu: parse_rat(&ecu, "--ecu")?,
                boot_delay_ms,
                instances,
                phases: parse_phases(rate.as_deref(), duration_ms, &phase)?,
                cost: parse_rat(&cost, "--cost")?,
                arrivals: parse_arrivals(&arrivals)?,
                seed,
                sample_ms,
            };
            let (client, _gateway) = gateway(server).await?;
            let artifacts = client
                .simulate(&request)
                .await
                .context("simulate failed")?;
            finish_run(&out, &artifacts, "simulate")
        }
        Command::Replay {
            definition,
            sla,
            policy,
            ecu,
            boot_delay_ms,
            instances,
            log,
            sample_ms,
            out,
            server,
        } => {
            let request = ReplayRequest {
                definition: definition_source(&definition)?,
                sla: sla.map(|p| load_sla(&p)).transpose()?,
                policy: policy.map(|p| load_policy(&p)).transpose()?,
                ecu: ecu.map(|e| parse_rat(&e, "--ecu")).transpose()?,
                boot_delay_ms,
                instances,
                log_jsonl: read_file(&log)?,
                sample_ms,
            };
            let (client, _gateway) = gateway(server).await?;
            let artifacts = client.replay(&request).await.context("replay failed")?;
            finish_run(&out, &artifacts, "replay")
        }
        Command::Serve { definition, bind } => serve(definition, bind).await,
        Command::Report { out } => report(&out),
    }
}

// ---- shared plumbing ----

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_rat(text: &str, flag: &str) -> Result<Rat> {
    Rat::parse(text).with_context(|| format!("{flag}: invalid rational `{text}`"))
}

fn load_sla(path: &Path) -> Result<SlaDocument> {
    let text = read_file(path)?;
    let sla: SlaDocument = serde_json::from_str(&text)
        .with_context(|| format!("parsing SLA file {}", path.display()))?;
    sla.validate()
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(sla)
}

fn load_policy(path: &Path) -> Result<ScalingPolicy> {
    let text = read_file(path)?;
    let policy: ScalingPolicy = serde_json::from_str(&text)
        .with_context(|| format!("parsing policy file {}", path.display()))?;
    policy
        .validate()
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(policy)
}

fn parse_arrivals(text: &str) -> Result<ArrivalProcess> {
    match text {
        "poisson" => Ok(ArrivalProcess::Poisson),
        "uniform" => Ok(ArrivalProcess::Uniform),
        other => bail!("--arrivals must be `poisson` or `uniform`, got `{other}`"),
    }
}

/// Either `--rate R --duration-ms D` (one phase) or repeated
/// `--phase RATE:UNTIL_MS` entries with strictly increasing end times.
fn parse_phases(
    rate: Option<&str>,
    duration_ms: Option<i64>,
    phases: &[String],
) -> Result<Vec<PhaseSpec>> {
    match (rate, phases.is_empty()) {
        (Some(rate), true) => {
            let duration_ms =
                duration_ms.ok_or_else(|| anyhow::anyhow!("--rate requires --duration-ms"))?;
            Ok(vec![PhaseSpec {
                rate_per_s: parse_rat(rate, "--rate")?,
                until_ms: duration_ms,
            }])
        }
        (None, false) => phases
            .iter()
            .map(|spec| {
                let (rate, until) = spec.rsplit_once(':').ok_or_else(|| {
                    anyhow::anyhow!("--phase takes RATE:UNTIL_MS, got `{spec}`")
                })?;
                Ok(PhaseSpec {
                    rate_per_s: parse_rat(rate, "--phase")?,
                    until_ms: until
                        .parse()
                        .with_context(|| format!("--phase end `{until}` is not integer ms"))?,
                })
            })
            .collect(),
        (None, true) => bail!("a workload is required: --rate/--duration-ms or --phase"),
        (Some(_), false) => bail!("--rate and --phase are mutually exclusive"),
    }
}

fn definition_source(args: &DefinitionArgs) -> Result<DefinitionSource> {
    match (&args.metric, &args.view, &args.grammar) {
        (Some(metric), None, None) => Ok(DefinitionSource {
            view: None,
            grammar: None,
            combined: Some(read_file(metric)?),
        }),
        (None, Some(view), Some(grammar)) => Ok(DefinitionSource {
            view: Some(read_file(view)?),
            grammar: Some(read_file(grammar)?),
            combined: None,
        }),
        _ => bail!("provide --view and --grammar together, or --metric alone"),
    }
}

/// Parses and binds the definition locally so file errors surface with the
/// right paths before anything runs.
fn bind_definition(args: &DefinitionArgs) -> Result<Arc<MetricDefinition>> {
    let (view, parts) = match (&args.metric, &args.view, &args.grammar) {
        (Some(metric), None, None) => dsl::parse_combined(&read_file(metric)?)
            .with_context(|| format!("parsing {}", metric.display()))?,
        (None, Some(view_path), Some(grammar_path)) => {
            let view = dsl::parse_view(&read_file(view_path)?)
                .with_context(|| format!("parsing {}", view_path.display()))?;
            let parts = dsl::parse_grammar(&read_file(grammar_path)?)
                .with_context(|| format!("parsing {}", grammar_path.display()))?;
            (view, parts)
        }
        _ => bail!("provide --view and --grammar together, or --metric alone"),
    };
    Ok(Arc::new(dsl::bind(&view, &parts)?))
}

/// Keeps the embedded gateway alive for the duration of a command.
struct EmbeddedGateway {
    _shutdown: tokio::sync::oneshot::Sender<()>,
}

async fn gateway(server: Option<String>) -> Result<(ApiClient, Option<EmbeddedGateway>)> {
    match server {
        Some(url) => Ok((ApiClient::new(url), None)),
        None => {
            let (addr, shutdown, _handle) = slaforge_server::serve("127.0.0.1:0", None)
                .await
                .context("starting embedded gateway")?;
            Ok((
                ApiClient::new(format!("http://{addr}")),
                Some(EmbeddedGateway {
                    _shutdown: shutdown,
                }),
            ))
        }
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn finish_run(out: &Path, artifacts: &RunArtifactsWire, what: &str) -> Result<i32> {
    write_out(out, "trace.jsonl", &artifacts.trace_jsonl)?;
    write_out(out, "telemetry.csv", &artifacts.telemetry_csv)?;
    write_out(out, "metric_history.jsonl", &artifacts.history_jsonl)?;
    write_out(out, "decisions.jsonl", &artifacts.decisions_jsonl)?;
    let summary_json = serde_json::to_string_pretty(&artifacts.summary)?;
    write_out(out, "summary.json", &summary_json)?;

    let s = &artifacts.summary;
    println!(
        "{what}: {} events, {} completed, {} dropped, {} scale-ups, {} scale-downs",
        s.events_emitted,
        s.completed,
        s.dropped,
        s.scale_ups,
        s.scale_downs
    );
    for (key, value) in &s.final_metrics {
        println!("  {key} = {value}");
    }
    println!("artifacts written to {}", out.display());

    if !s.trace_rejections.is_empty() {
        for r in &s.trace_rejections {
            eprintln!("rejected event at trace index {}: {}", r.index, r.reason);
        }
        return Ok(1);
    }
    Ok(0)
}

// ---- subcommands ----

#[allow(clippy::too_many_arguments)]
async fn negotiate(
    sla: PathBuf,
    cost: String,
    ecu: String,
    boot_delay_ms: i64,
    instances: u64,
    workloads: bool,
    out: Option<PathBuf>,
    server: Option<String>,
) -> Result<i32> {
    let request = NegotiateRequest {
        sla: load_sla(&sla)?,
        cost: parse_rat(&cost, "--cost")?,
        ecu: parse_rat(&ecu, "--ecu")?,
        boot_delay_ms,
        instances,
        include_workloads: workloads,
    };
    let (client, _gateway) = gateway(server).await?;
    let response = client.negotiate(&request).await.context("negotiate failed")?;

    print!("{}", response.report_text);
    if let Some(dir) = &out {
        write_out(dir, "report.json", &serde_json::to_string_pretty(&response.report)?)?;
        write_out(dir, "report.txt", &response.report_text)?;
        if workloads {
            write_out(
                dir,
                "workloads.json",
                &serde_json::to_string_pretty(&response.workloads)?,
            )?;
        }
        println!("artifacts written to {}", dir.display());
    }
    Ok(if response.report.feasible { 0 } else { 1 })
}

async fn serve(definition: DefinitionArgs, bind: String) -> Result<i32> {
    let def = bind_definition(&definition)?;
    let keys: Vec<String> = def.export_names().map(|(_, key)| key.to_string()).collect();
    let (addr, _shutdown, handle) = slaforge_server::serve(&bind, Some(def))
        .await
        .with_context(|| format!("binding {bind}"))?;
    println!("gateway listening on http://{addr} (metrics: {})", keys.join(", "));
    handle.await.context("server stopped")?;
    Ok(0)
}

fn report(out: &Path) -> Result<i32> {
    let summary_path = out.join("summary.json");
    let report_path = out.join("report.json");
    if summary_path.exists() {
        let summary: RunSummary = serde_json::from_str(&read_file(&summary_path)?)
            .context("parsing summary.json")?;
        println!("run artifacts in {}", out.display());
        println!(
            "  seed {}, instances {} -> {}",
            summary.seed, summary.initial_instances, summary.final_instances
        );
        println!(
            "  requests: {} admitted, {} completed, {} dropped",
            summary.admitted, summary.completed, summary.dropped
        );
        println!(
            "  events: {} emitted, {} ignored, {} rejected",
            summary.events_emitted,
            summary.events_ignored,
            summary.trace_rejections.len()
        );
        println!(
            "  scaling: {} up, {} down (max latency {} ms)",
            summary.scale_ups, summary.scale_downs, summary.max_latency_ms
        );
        for (key, value) in &summary.final_metrics {
            println!("  final {key} = {value} ({}%)", value.to_decimal_string(4));
        }
        let telemetry = out.join("telemetry.csv");
        if telemetry.exists() {
            let rows = read_file(&telemetry)?.lines().count().saturating_sub(1);
            println!("  telemetry: {rows} one-second buckets");
        }
        Ok(0)
    } else if report_path.exists() {
        print!("{}", read_file(&out.join("report.txt"))?);
        Ok(0)
    } else {
        bail!(
            "{} holds neither summary.json nor report.json",
            out.display()
        );
    }
}
