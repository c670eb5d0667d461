//! The `bancast` command-line interface.
//!
//! Subcommands: `run` (one scenario), `sweep` (the full experiment grid),
//! `ppvg-trees` (export per-posture trees), `etx-table` (per-link
//! probabilities and ETX), `validate` (check configs and tables without
//! running). Exit codes: 0 success, 2 config error, 3 runtime fault.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::channel::{
    connectivity_graph, ChannelTable, PostureId, RadioBudget, DEFAULT_PROBABILITY_THRESHOLD,
};
use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::ppvg::ppvg_trees_all_postures;
use crate::strategies::StrategyKind;
use crate::sweep::{aggregate, aggregate_to_csv, run_sweep, rows_to_csv};
use crate::time::SimTime;
use crate::topology::{BodyTopology, NodeId};

#[derive(Parser)]
#[command(
    name = "bancast",
    version,
    about = "Deterministic simulator for convergecast strategies in body-area networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one scenario and print its metrics.
    Run(RunArgs),
    /// Execute the configured sweep; write per-run rows and per-cell means.
    Sweep(SweepArgs),
    /// Export the per-posture minimum-ETX trees.
    PpvgTrees(TreesArgs),
    /// Print per-link success probabilities and ETX.
    EtxTable(EtxArgs),
    /// Check a config and its channel table without running anything.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured strategy.
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Override the configured posture (1..=7).
    #[arg(long)]
    posture: Option<u8>,
    /// Override the configured per-source rate (packets/s).
    #[arg(long)]
    rate: Option<f64>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured duration (simulated seconds).
    #[arg(long)]
    duration: Option<f64>,
    /// Append the run's CSV row here (header written if the file is new).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario config (TOML) with a `[sweep]` section.
    #[arg(long)]
    config: PathBuf,
    /// Per-run rows CSV path.
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Per-cell means CSV path (defaults to `<out stem>_summary.csv`).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct TreesArgs {
    /// Channel statistics CSV (or use --config).
    #[arg(long, conflicts_with = "config")]
    table: Option<PathBuf>,
    /// Scenario config naming the table and topology.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sink node id (only with --table; configs carry their own).
    #[arg(long, default_value_t = 0)]
    sink: u8,
    /// Write the tree table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EtxArgs {
    /// Channel statistics CSV (or use --config).
    #[arg(long, conflicts_with = "config")]
    table: Option<PathBuf>,
    /// Scenario config naming the table and topology.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict the output to one posture.
    #[arg(long)]
    posture: Option<u8>,
    /// Link-existence threshold for the etx column.
    #[arg(long, default_value_t = DEFAULT_PROBABILITY_THRESHOLD)]
    threshold: f64,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario config (TOML).
    #[arg(long)]
    config: PathBuf,
}

impl clap::builder::ValueParserFactory for StrategyKind {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| {
            s.parse::<StrategyKind>().map_err(|e| e.to_string())
        })
    }
}

/// Parse and execute; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/usage; usage problems are config errors.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::PpvgTrees(args) => cmd_trees(args),
        Command::EtxTable(args) => cmd_etx(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => 3,
                _ => 2,
            }
        }
    }
}

/// Input loading belongs to validation: a missing or unreadable file is a
/// config error (exit 2), unlike output-write faults (exit 3).
fn load_phase<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io { path, source } => Error::Config(format!("cannot read {path}: {source}")),
        other => other,
    })
}

fn write_out(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, content).map_err(|e| Error::io(p.display().to_string(), e))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cfg = load_phase(ConfigFile::load(&args.config))?;
    let mut scenario = load_phase(cfg.scenario())?;
    if let Some(kind) = args.strategy {
        scenario.strategy = kind;
    }
    if let Some(p) = args.posture {
        scenario.posture = PostureId::new(p)?;
    }
    if let Some(r) = args.rate {
        scenario.rate_pps = r;
    }
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    if let Some(d) = args.duration {
        scenario.duration = SimTime::from_secs_f64(d);
    }
    let report = scenario.run()?;
    print_report(&scenario, &report);
    if let Some(out) = &args.out {
        let row = report.csv_row(
            scenario.strategy.name(),
            scenario.posture.id(),
            scenario.rate_pps,
            scenario.seed,
        );
        append_csv_row(out, &row)?;
        println!("row appended to {}", out.display());
    }
    Ok(())
}

fn append_csv_row(path: &Path, row: &str) -> Result<()> {
    use std::io::Write;
    let fresh = !path.exists();
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut write = |s: &str| -> Result<()> {
        writeln!(f, "{s}").map_err(|e| Error::io(path.display().to_string(), e))
    };
    if fresh {
        write(MetricsReport::csv_header())?;
    }
    write(row)
}

fn print_report(scenario: &crate::scenario::Scenario, r: &MetricsReport) {
    println!(
        "strategy {} posture {} ({}) rate {} pkt/s seed {} duration {}",
        scenario.strategy,
        scenario.posture,
        scenario.posture.label(),
        scenario.rate_pps,
        scenario.seed,
        scenario.duration,
    );
    println!(
        "  generated {}  delivered {}  reception rate {:.4}",
        r.generated, r.delivered_unique, r.reception_rate
    );
    println!(
        "  inversions {}  total-order rate {:.4}  duplicates {}",
        r.inversions, r.total_order_rate, r.duplicates
    );
    println!(
        "  transmissions {}  mean delay {:.4} s  max delay {:.4} s",
        r.transmissions, r.mean_delay_s, r.max_delay_s
    );
    println!(
        "  losses: attenuation {}  collision {}  buffer {}  ttl/policy {}  pending {}",
        r.losses.attenuation,
        r.losses.collision,
        r.losses.buffer,
        r.losses.ttl_expired + r.losses.policy_discard,
        r.losses.pending
    );
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = load_phase(ConfigFile::load(&args.config))?;
    let spec = load_phase(cfg.sweep_spec())?;
    eprintln!(
        "sweep: {} strategies x {} postures x {} rates x {} seeds = {} runs",
        spec.strategies.len(),
        spec.postures.len(),
        spec.rates_pps.len(),
        spec.seeds.len(),
        spec.cell_count()
    );
    let rows = run_sweep(&spec)?;
    std::fs::write(&args.out, rows_to_csv(&rows))
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let summary_path = args.summary.unwrap_or_else(|| {
        let stem = args.out.file_stem().unwrap_or_default().to_string_lossy();
        args.out.with_file_name(format!("{stem}_summary.csv"))
    });
    std::fs::write(&summary_path, aggregate_to_csv(&aggregate(&rows)))
        .map_err(|e| Error::io(summary_path.display().to_string(), e))?;
    println!(
        "{} rows -> {}; summary -> {}",
        rows.len(),
        args.out.display(),
        summary_path.display()
    );
    Ok(())
}

/// Table + topology + budget + threshold from either a config or a bare
/// table path.
fn load_inputs(
    table: Option<&Path>,
    config: Option<&Path>,
    sink: u8,
) -> Result<(ChannelTable, BodyTopology, RadioBudget, f64)> {
    match (table, config) {
        (Some(t), None) => {
            let topology = BodyTopology::body_with_sink(NodeId(sink))?;
            let table = load_phase(ChannelTable::load_validated(t, &topology))?;
            Ok((
                table,
                topology,
                RadioBudget::default(),
                DEFAULT_PROBABILITY_THRESHOLD,
            ))
        }
        (None, Some(c)) => {
            let cfg = load_phase(ConfigFile::load(c))?;
            let topology = cfg.topology()?;
            let table = load_phase(ChannelTable::load_validated(cfg.table_path(), &topology))?;
            Ok((table, topology, cfg.budget(), cfg.threshold()))
        }
        _ => Err(Error::config("pass exactly one of --table or --config")),
    }
}

fn cmd_trees(args: TreesArgs) -> Result<()> {
    let (table, topology, budget, threshold) =
        load_inputs(args.table.as_deref(), args.config.as_deref(), args.sink)?;
    let trees = ppvg_trees_all_postures(&table, &topology, &budget, threshold, topology.sink())?;
    let mut out = String::from("posture,node,parent,link_etx,total_etx\n");
    for tree in trees.values() {
        for row in tree.export_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    write_out(args.out.as_deref(), &out)
}

fn cmd_etx(args: EtxArgs) -> Result<()> {
    let (table, topology, budget, _) =
        load_inputs(args.table.as_deref(), args.config.as_deref(), 0)?;
    let postures: Vec<PostureId> = match args.posture {
        Some(p) => vec![PostureId::new(p)?],
        None => PostureId::ALL.to_vec(),
    };
    let mut out = String::from("posture,node_a,node_b,probability,etx\n");
    for &posture in &postures {
        for (a, b) in topology.pairs() {
            let stats = table.stats(posture, a, b).ok_or_else(|| {
                Error::config(format!(
                    "channel table is missing pair {{{a},{b}}} for posture {posture}"
                ))
            })?;
            let p = crate::channel::link_success_probability(stats, &budget);
            if p > args.threshold {
                out.push_str(&format!("{posture},{a},{b},{p:.6},{:.6}\n", 1.0 / p));
            } else {
                // Below the existence threshold: no usable link, no ETX.
                out.push_str(&format!("{posture},{a},{b},{p:.6},\n"));
            }
        }
    }
    write_out(args.out.as_deref(), &out)
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let cfg = load_phase(ConfigFile::load(&args.config))?;
    let topology = cfg.topology()?;
    let table = load_phase(ChannelTable::load_validated(cfg.table_path(), &topology))?;
    // Per-posture graphs must be constructible whatever the scenario uses.
    for posture in PostureId::ALL {
        connectivity_graph(&table, &topology, posture, &cfg.budget(), cfg.threshold())?;
    }
    let scenario = cfg.scenario()?;
    scenario.prepare()?;
    cfg.sweep_spec()?;
    println!(
        "ok: {} nodes, sink {}, table {} covers all {} postures",
        topology.len(),
        topology.sink(),
        cfg.table_path().display(),
        PostureId::ALL.len()
    );
    Ok(())
}
