//! gridmon: domain-based grid network monitoring from the command line.
//!
//! Every data command works in one of two modes:
//!
//! - local (default): operates directly on the snapshot files, loading
//!   state, applying the operation, and atomically rewriting the files;
//! - remote (`--server host:port`): sends the operation to a running
//!   `gridmon serve` instance over its JSON API.
//!
//! Local mode assumes exclusive access to the state files.

mod client;

use std::io::Read;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gridmon_core::service::{persist, Monitor, Service, ServiceConfig, StatePaths};
use gridmon_core::simulator::{
    domain_views, generate, probe_all, representativeness_error, TopologySpec, SIM_METRIC,
};
use gridmon_core::validator::{mesh_cost, validate_domain, DEFAULT_EPSILON, DEFAULT_RHO};
use gridmon_core::{EntityKind, IntraDomainView, MeasurementRecord, Polarity, ValidationReport};

#[derive(Parser)]
#[command(
    name = "gridmon",
    version,
    about = "Grid network monitoring registry and query engine"
)]
struct Cli {
    /// Send the command to a running service instead of using local files.
    #[arg(long, global = true, value_name = "HOST:PORT")]
    server: Option<String>,
    /// Registry snapshot file (overrides GRIDMON_SNAPSHOT_PATH).
    #[arg(long, global = true, value_name = "PATH")]
    snapshot: Option<PathBuf>,
    /// Measurement log file (overrides GRIDMON_MEASUREMENT_LOG_PATH).
    #[arg(long, global = true, value_name = "PATH")]
    log: Option<PathBuf>,
    /// Metric catalog file (overrides GRIDMON_CATALOG_PATH).
    #[arg(long, global = true, value_name = "PATH")]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Computing,
    Storage,
    Theodolite,
}

impl From<KindArg> for EntityKind {
    fn from(k: KindArg) -> EntityKind {
        match k {
            KindArg::Computing => EntityKind::Computing,
            KindArg::Storage => EntityKind::Storage,
            KindArg::Theodolite => EntityKind::Theodolite,
        }
    }
}

fn kind_str(k: KindArg) -> &'static str {
    match k {
        KindArg::Computing => "computing",
        KindArg::Storage => "storage",
        KindArg::Theodolite => "theodolite",
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    HigherIsBetter,
    LowerIsBetter,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Polarity {
        match p {
            PolarityArg::HigherIsBetter => Polarity::HigherIsBetter,
            PolarityArg::LowerIsBetter => Polarity::LowerIsBetter,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the monitoring service.
    Serve(ServeArgs),
    /// Register an edge entity into a domain.
    Register {
        #[arg(long)]
        id: String,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        domain: String,
    },
    /// Designate the theodolite pair measuring an ordered domain pair.
    Designate {
        #[arg(long)]
        domain_a: String,
        #[arg(long)]
        domain_b: String,
        #[arg(long)]
        theodolite_a: String,
        #[arg(long)]
        theodolite_b: String,
    },
    /// Add a metric to the catalog.
    DefineMetric {
        #[arg(long)]
        name: String,
        #[arg(long, value_enum)]
        polarity: PolarityArg,
        #[arg(long)]
        unit: Option<String>,
        /// Admissible value range as LO:HI.
        #[arg(long, value_name = "LO:HI")]
        range: Option<String>,
    },
    /// Ingest measurement records (one JSON object per line).
    Ingest {
        /// Read records from a file instead of stdin.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Consumer queries over the registry and measurement store.
    #[command(subcommand)]
    Query(QueryCommand),
    /// Partner theodolites of a producer theodolite.
    Partners {
        #[arg(long)]
        theodolite: String,
    },
    /// Validate a domain view against the comparability and negligibility
    /// properties.
    Validate {
        /// JSON file holding the intra-domain view.
        #[arg(long)]
        view: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RHO)]
        rho: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Emit the raw JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Domain pairs lacking a designation or measurements.
    Coverage,
    /// Generate a synthetic topology with ground-truth costs.
    Simulate(SimulateArgs),
    /// Verify the state files and rewrite them atomically (local), or ask
    /// a running service to persist its state (remote).
    Snapshot,
}

#[derive(Subcommand)]
enum QueryCommand {
    /// Latest metric value between two entities.
    Between {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Metric values from one entity to every entity of a kind.
    ToKind {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        from: String,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// The entity of a kind with the best value under the metric polarity.
    Best {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        from: String,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
}

#[derive(Args)]
struct ServeArgs {
    /// JSON config file; flags and GRIDMON_* variables override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    listen: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_name = "SECONDS")]
    interval: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 3)]
    domains: usize,
    #[arg(long, default_value_t = 2)]
    computing: usize,
    #[arg(long, default_value_t = 2)]
    storage: usize,
    #[arg(long, default_value_t = 1)]
    theodolites: usize,
    /// Entity-to-gateway cost range.
    #[arg(long, value_name = "LO:HI", default_value = "1.0:1.3")]
    internal: String,
    /// Inter-gateway cost range.
    #[arg(long, value_name = "LO:HI", default_value = "50:100")]
    external: String,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Probe rounds to emit.
    #[arg(long, default_value_t = 1)]
    rounds: u64,
    /// Output directory for the fixture files.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Serve(args) => cmd_serve(&cli, args),
        Command::Register { id, kind, domain } => cmd_register(&cli, id, *kind, domain),
        Command::Designate {
            domain_a,
            domain_b,
            theodolite_a,
            theodolite_b,
        } => cmd_designate(&cli, domain_a, domain_b, theodolite_a, theodolite_b),
        Command::DefineMetric {
            name,
            polarity,
            unit,
            range,
        } => cmd_define_metric(&cli, name, *polarity, unit.clone(), range.as_deref()),
        Command::Ingest { file } => cmd_ingest(&cli, file.as_deref()),
        Command::Query(q) => cmd_query(&cli, q),
        Command::Partners { theodolite } => cmd_partners(&cli, theodolite),
        Command::Validate {
            view,
            rho,
            epsilon,
            json,
        } => cmd_validate(&cli, view, *rho, *epsilon, *json),
        Command::Coverage => cmd_coverage(&cli),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Snapshot => cmd_snapshot(&cli),
    }
}

/// State file locations: flags beat GRIDMON_* variables beat defaults.
fn state_paths(cli: &Cli) -> StatePaths {
    let mut config = ServiceConfig::default();
    config.apply_env_overrides();
    if let Some(p) = &cli.snapshot {
        config.snapshot_path = p.clone();
    }
    if let Some(p) = &cli.log {
        config.measurement_log_path = p.clone();
    }
    if let Some(p) = &cli.catalog {
        config.catalog_path = p.clone();
    }
    config.state_paths()
}

fn load_monitor(cli: &Cli) -> anyhow::Result<Monitor> {
    Monitor::load(&state_paths(cli)).map_err(|e| anyhow!("{}: {e}", e.name()))
}

fn save_monitor(cli: &Cli, monitor: &Monitor) -> anyhow::Result<()> {
    monitor
        .snapshot(&state_paths(cli))
        .map_err(|e| anyhow!("{}: {e}", e.name()))
}

/// Sends a request in remote mode and prints the body; non-200 responses
/// become errors carrying the service's JSON error object.
fn remote(server: &str, method: &str, path: &str, body: Option<&str>) -> anyhow::Result<()> {
    let response = client::request(server, method, path, body)?;
    if response.status != 200 {
        bail!("{}", response.body);
    }
    println!("{}", response.body);
    Ok(())
}

fn cmd_serve(cli: &Cli, args: &ServeArgs) -> anyhow::Result<()> {
    let mut config = match &args.config {
        Some(path) => ServiceConfig::from_file(path).map_err(|e| anyhow!("{e}"))?,
        None => ServiceConfig::default(),
    };
    config.apply_env_overrides();
    if let Some(p) = &cli.snapshot {
        config.snapshot_path = p.clone();
    }
    if let Some(p) = &cli.log {
        config.measurement_log_path = p.clone();
    }
    if let Some(p) = &cli.catalog {
        config.catalog_path = p.clone();
    }
    if let Some(listen) = &args.listen {
        config.listen = listen.clone();
    }
    if let Some(rho) = args.rho {
        config.rho = rho;
    }
    if let Some(epsilon) = args.epsilon {
        config.epsilon = epsilon;
    }
    if let Some(interval) = args.interval {
        config.snapshot_interval_secs = interval;
    }
    config.validate().map_err(|e| anyhow!("{e}"))?;

    let monitor =
        Arc::new(Monitor::load(&config.state_paths()).map_err(|e| anyhow!("{}: {e}", e.name()))?);
    let service = Service::bind(config, monitor).map_err(|e| anyhow!("{}: {e}", e.name()))?;
    println!("gridmon: listening on {}", service.local_addr());
    service.run().map_err(|e| anyhow!("{}: {e}", e.name()))
}

fn cmd_register(cli: &Cli, id: &str, kind: KindArg, domain: &str) -> anyhow::Result<()> {
    if let Some(server) = &cli.server {
        let body = serde_json::json!({ "entity": id, "kind": kind_str(kind), "domain": domain });
        return remote(server, "POST", "/register", Some(&body.to_string()));
    }
    let monitor = load_monitor(cli)?;
    let record = monitor
        .register_entity(id, kind.into(), domain)
        .map_err(|e| anyhow!("{}: {e}", e.name()))?;
    save_monitor(cli, &monitor)?;
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}

fn cmd_designate(
    cli: &Cli,
    domain_a: &str,
    domain_b: &str,
    theodolite_a: &str,
    theodolite_b: &str,
) -> anyhow::Result<()> {
    if let Some(server) = &cli.server {
        let body = serde_json::json!({
            "domain_a": domain_a,
            "domain_b": domain_b,
            "theodolite_a": theodolite_a,
            "theodolite_b": theodolite_b,
        });
        return remote(server, "POST", "/designate", Some(&body.to_string()));
    }
    let monitor = load_monitor(cli)?;
    let record = monitor
        .designate(domain_a, domain_b, theodolite_a, theodolite_b)
        .map_err(|e| anyhow!("{}: {e}", e.name()))?;
    save_monitor(cli, &monitor)?;
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}

fn parse_range(raw: &str) -> anyhow::Result<(f64, f64)> {
    let (lo, hi) = raw
        .split_once(':')
        .with_context(|| format!("range {raw:?} must look like LO:HI"))?;
    Ok((
        lo.trim()
            .parse()
            .with_context(|| format!("bad lower bound {lo:?}"))?,
        hi.trim()
            .parse()
            .with_context(|| format!("bad upper bound {hi:?}"))?,
    ))
}

fn cmd_define_metric(
    cli: &Cli,
    name: &str,
    polarity: PolarityArg,
    unit: Option<String>,
    range: Option<&str>,
) -> anyhow::Result<()> {
    let range = range.map(parse_range).transpose()?;
    if let Some(server) = &cli.server {
        let polarity = match polarity {
            PolarityArg::HigherIsBetter => "higher_is_better",
            PolarityArg::LowerIsBetter => "lower_is_better",
        };
        let mut body = serde_json::json!({ "name": name, "polarity": polarity });
        if let Some(unit) = unit {
            body["unit"] = serde_json::json!(unit);
        }
        if let Some((lo, hi)) = range {
            body["range"] = serde_json::json!({ "lo": lo, "hi": hi });
        }
        return remote(server, "POST", "/metrics", Some(&body.to_string()));
    }
    let monitor = load_monitor(cli)?;
    let def = monitor
        .define_metric(name, polarity.into(), unit, range)
        .map_err(|e| anyhow!("{}: {e}", e.name()))?;
    save_monitor(cli, &monitor)?;
    println!("{}", serde_json::to_string(&def)?);
    Ok(())
}

fn cmd_ingest(cli: &Cli, file: Option<&std::path::Path>) -> anyhow::Result<()> {
    let text = match file {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?,
        None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf)?;
            buf
        }
    };
    if let Some(server) = &cli.server {
        return remote(server, "POST", "/ingest", Some(&text));
    }
    let monitor = load_monitor(cli)?;
    let mut accepted = 0usize;
    let mut stale = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let record: MeasurementRecord = serde_json::from_str(raw)
            .with_context(|| format!("line {}: not a measurement record", idx + 1))?;
        let m = monitor
            .ingest_record(&record)
            .map_err(|e| anyhow!("line {}: {}: {e}", idx + 1, e.name()))?;
        accepted += 1;
        if m.stale {
            stale += 1;
        }
    }
    save_monitor(cli, &monitor)?;
    println!(
        "{}",
        serde_json::json!({ "accepted": accepted, "stale": stale })
    );
    Ok(())
}

fn cmd_query(cli: &Cli, query: &QueryCommand) -> anyhow::Result<()> {
    if let Some(server) = &cli.server {
        let path = match query {
            QueryCommand::Between { metric, from, to } => {
                format!("/query/between?metric={metric}&from={from}&to={to}")
            }
            QueryCommand::ToKind { metric, from, kind } => {
                format!(
                    "/query/to-kind?metric={metric}&from={from}&kind={}",
                    kind_str(*kind)
                )
            }
            QueryCommand::Best { metric, from, kind } => {
                format!(
                    "/query/best?metric={metric}&from={from}&kind={}",
                    kind_str(*kind)
                )
            }
        };
        return remote(server, "GET", &path, None);
    }
    let monitor = load_monitor(cli)?;
    let body = match query {
        QueryCommand::Between { metric, from, to } => {
            let result = monitor
                .metric_between(metric, from, to)
                .map_err(|e| anyhow!("{}: {e}", e.name()))?;
            serde_json::json!({ "result": result })
        }
        QueryCommand::ToKind { metric, from, kind } => {
            let results = monitor
                .metric_to_kind(metric, from, (*kind).into())
                .map_err(|e| anyhow!("{}: {e}", e.name()))?;
            serde_json::json!({ "results": results })
        }
        QueryCommand::Best { metric, from, kind } => {
            let result = monitor
                .best_partner(metric, from, (*kind).into())
                .map_err(|e| anyhow!("{}: {e}", e.name()))?;
            serde_json::json!({ "result": result })
        }
    };
    println!("{body}");
    Ok(())
}

fn cmd_partners(cli: &Cli, theodolite: &str) -> anyhow::Result<()> {
    if let Some(server) = &cli.server {
        return remote(
            server,
            "GET",
            &format!("/partners?theodolite={theodolite}"),
            None,
        );
    }
    let monitor = load_monitor(cli)?;
    let partners = monitor
        .partner_theodolites(theodolite)
        .map_err(|e| anyhow!("{}: {e}", e.name()))?;
    println!("{}", serde_json::json!({ "partners": partners }));
    Ok(())
}

fn print_report_table(report: &ValidationReport, rho: f64, epsilon: f64) {
    println!("domain           {}", report.domain);
    println!(
        "comparability    {:.6}  (rho {rho})",
        report.comparability_ratio
    );
    println!(
        "negligibility    {:.6}  (epsilon {epsilon})",
        report.negligibility_ratio
    );
    println!(
        "passes           {}",
        if report.passes { "yes" } else { "no" }
    );
    if report.violations.is_empty() {
        println!("violations       none");
    } else {
        println!("violations       {}", report.violations.len());
        for v in &report.violations {
            println!("  - {v}");
        }
    }
}

fn cmd_validate(
    cli: &Cli,
    view_path: &std::path::Path,
    rho: f64,
    epsilon: f64,
    json: bool,
) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(view_path)
        .with_context(|| format!("cannot read {}", view_path.display()))?;
    if let Some(server) = &cli.server {
        let response = client::request(
            server,
            "POST",
            &format!("/validate?rho={rho}&epsilon={epsilon}"),
            Some(&text),
        )?;
        if response.status != 200 {
            bail!("{}", response.body);
        }
        if json {
            println!("{}", response.body);
        } else {
            let report: ValidationReport = serde_json::from_str(&response.body)?;
            print_report_table(&report, rho, epsilon);
        }
        return Ok(());
    }
    let view: IntraDomainView = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a domain view", view_path.display()))?;
    let report = validate_domain(&view, rho, epsilon).map_err(|e| anyhow!("{}: {e}", e.name()))?;
    if json {
        println!("{}", serde_json::to_string(&report)?);
    } else {
        print_report_table(&report, rho, epsilon);
    }
    Ok(())
}

fn cmd_coverage(cli: &Cli) -> anyhow::Result<()> {
    if let Some(server) = &cli.server {
        return remote(server, "GET", "/coverage", None);
    }
    let monitor = load_monitor(cli)?;
    println!("{}", serde_json::json!({ "gaps": monitor.coverage_gaps() }));
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let spec = TopologySpec {
        num_domains: args.domains,
        computing_per_domain: args.computing,
        storage_per_domain: args.storage,
        theodolites_per_domain: args.theodolites,
        internal_cost_range: parse_range(&args.internal)?,
        external_cost_range: parse_range(&args.external)?,
        noise_fraction: args.noise,
        seed: args.seed,
    };
    let (registry, truth) = generate(&spec).map_err(|e| anyhow!("{}: {e}", e.name()))?;
    let mut store = gridmon_core::simulator::sim_store();
    for round in 0..args.rounds {
        for record in probe_all(&truth, &registry, spec.noise_fraction, round) {
            store
                .ingest_record(&registry, &record)
                .map_err(|e| anyhow!("{}: {e}", e.name()))?;
        }
    }

    let views = domain_views(&truth, &registry);
    let validation: Vec<ValidationReport> = views
        .iter()
        .map(|v| validate_domain(v, DEFAULT_RHO, DEFAULT_EPSILON))
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow!("{}: {e}", e.name()))?;
    let representativeness = representativeness_error(&truth, &registry, &store, SIM_METRIC)
        .map_err(|e| anyhow!("{}: {e}", e.name()))?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let write = |name: &str, contents: &str| -> anyhow::Result<()> {
        persist::atomic_write(&args.out.join(name), contents).map_err(|e| anyhow!("{e}"))
    };
    write("registry.snapshot", &persist::registry_to_lines(&registry))?;
    write("measurements.log", &persist::log_to_lines(&store))?;
    write("metrics.json", &persist::catalog_to_json(&store))?;
    write(
        "views.json",
        &format!("{}\n", serde_json::to_string_pretty(&views)?),
    )?;

    let report = serde_json::json!({
        "spec": spec,
        "mesh": {
            "domains": args.domains,
            "communication_entities": mesh_cost(args.domains as u64, false),
            "directed_pairs": mesh_cost(args.domains as u64, true),
        },
        "representativeness": representativeness,
        "validation": validation,
    });
    write(
        "report.json",
        &format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;

    println!(
        "{}",
        serde_json::json!({
            "out": args.out.display().to_string(),
            "entities": registry.entity_count(),
            "designations": registry.designation_count(),
            "measurements": store.measurement_count(),
            "worst_relative_error": representativeness.worst,
        })
    );
    Ok(())
}

fn cmd_snapshot(cli: &Cli) -> anyhow::Result<()> {
    if let Some(server) = &cli.server {
        return remote(server, "POST", "/snapshot", None);
    }
    let monitor = load_monitor(cli)?;
    save_monitor(cli, &monitor)?;
    let (entities, designations, measurements) = monitor.with_state(|r, s| {
        (
            r.entity_count(),
            r.designation_count(),
            s.measurement_count(),
        )
    });
    println!(
        "{}",
        serde_json::json!({
            "status": "ok",
            "entities": entities,
            "designations": designations,
            "measurements": measurements,
        })
    );
    Ok(())
}
