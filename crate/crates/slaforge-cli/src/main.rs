//! `slaforge`: negotiate, simulate, replay, serve, report.
//!
//! Every batch subcommand is a client of the gateway service: it either
//! targets a running instance via `--server URL` or spins up an embedded
//! loopback gateway for the duration of the command. `serve` runs the
//! gateway in the foreground for live event ingestion.

mod commands;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "slaforge",
    version,
    about = "SLA-aware service deployment workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DefinitionArgs {
    /// View file (`.view`); requires --grammar.
    #[arg(long, value_name = "FILE")]
    view: Option<std::path::PathBuf>,
    /// Grammar file (`.metric`); requires --view.
    #[arg(long, value_name = "FILE")]
    grammar: Option<std::path::PathBuf>,
    /// Combined file (`.sla-metric`): one view followed by one grammar.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["view", "grammar"])]
    metric: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Assess whether a deployment can meet an SLA and write the report.
    Negotiate {
        /// SLA file: {"metric":..,"latency_bound_ms":..,"compliance":..}.
        #[arg(long, value_name = "FILE")]
        sla: std::path::PathBuf,
        /// Per-request cost in ECU (integer, decimal or num/den).
        #[arg(long)]
        cost: String,
        /// Machine capacity in ECU per second.
        #[arg(long)]
        ecu: String,
        #[arg(long, default_value_t = 0)]
        boot_delay_ms: i64,
        /// Supplied instance count to assess.
        #[arg(long, short = 'n')]
        instances: u64,
        /// Also emit validation workloads.
        #[arg(long)]
        workloads: bool,
        #[arg(long, value_name = "DIR")]
        out: Option<std::path::PathBuf>,
        /// Target a running gateway instead of the embedded one.
        #[arg(long, value_name = "URL")]
        server: Option<String>,
    },
    /// Run a synthetic workload through the simulator and write artifacts.
    Simulate {
        #[command(flatten)]
        definition: DefinitionArgs,
        #[arg(long, value_name = "FILE")]
        sla: Option<std::path::PathBuf>,
        /// Scaling policy file enabling the autoscaler control loop.
        #[arg(long, value_name = "FILE")]
        policy: Option<std::path::PathBuf>,
        #[arg(long)]
        ecu: String,
        #[arg(long, default_value_t = 0)]
        boot_delay_ms: i64,
        /// Initial instances; defaults to the negotiated minimum when --sla
        /// is given.
        #[arg(long, short = 'n')]
        instances: Option<u64>,
        /// Constant arrival rate in requests per second.
        #[arg(long, conflicts_with = "phase")]
        rate: Option<String>,
        /// Workload duration for --rate.
        #[arg(long, requires = "rate")]
        duration_ms: Option<i64>,
        /// Workload phase RATE:UNTIL_MS; repeat for rate steps.
        #[arg(long, value_name = "RATE:UNTIL_MS")]
        phase: Vec<String>,
        /// Per-request cost in ECU.
        #[arg(long)]
        cost: String,
        /// Arrival process: poisson or uniform.
        #[arg(long, default_value = "poisson")]
        arrivals: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sample_ms: Option<i64>,
        #[arg(long, value_name = "DIR")]
        out: std::path::PathBuf,
        #[arg(long, value_name = "URL")]
        server: Option<String>,
    },
    /// Replay a recorded log (cost lines simulate; proc_time lines feed the
    /// trace engine directly) and write artifacts.
    Replay {
        #[command(flatten)]
        definition: DefinitionArgs,
        #[arg(long, value_name = "FILE")]
        sla: Option<std::path::PathBuf>,
        #[arg(long, value_name = "FILE")]
        policy: Option<std::path::PathBuf>,
        /// Machine capacity; required for cost logs.
        #[arg(long)]
        ecu: Option<String>,
        #[arg(long, default_value_t = 0)]
        boot_delay_ms: i64,
        #[arg(long, short = 'n')]
        instances: Option<u64>,
        /// JSON Lines log file.
        #[arg(long, value_name = "FILE")]
        log: std::path::PathBuf,
        #[arg(long)]
        sample_ms: Option<i64>,
        #[arg(long, value_name = "DIR")]
        out: std::path::PathBuf,
        #[arg(long, value_name = "URL")]
        server: Option<String>,
    },
    /// Run the gateway: live event ingestion over HTTP plus the compute
    /// endpoints.
    Serve {
        #[command(flatten)]
        definition: DefinitionArgs,
        /// Listen address.
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
    /// Summarize the artifacts a previous run wrote to --out.
    Report {
        #[arg(long, value_name = "DIR")]
        out: std::path::PathBuf,
    },
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt().with_target(false).init();

    let cli = Cli::parse();
    let code = match commands::dispatch(cli.command).await {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}
