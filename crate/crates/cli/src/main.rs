//! `tidelink`: sweeps, LoS-probability and path-loss tables, and the
//! invariant self-check.
//!
//! Exit status is 0 on success, 1 for bad input (flags, config files,
//! unwritable paths) and 2 when the numerics fail.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use tidelink_core::channel::{draw_shadowing, path_loss_free_space, path_loss_los, path_loss_nlos};
use tidelink_core::harness::{emit_results, run_sweep, OutputFormat, ScenarioConfig, SweepSpec, SweepVariable};
use tidelink_core::sea_surface::{los_probability_in, wave_from_sea_state, FloatingNode, LinkState};
use tidelink_core::validation::run_invariant_suite;
use tidelink_core::{Error, LinkGeometry, Result, SeaStateLevel};

#[derive(Parser)]
#[command(name = "tidelink", version, about = "RIS-assisted maritime IoT uplink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep of one scenario parameter.
    Sweep(SweepArgs),
    /// LoS probability of a buoy-to-buoy link per sea state and Rx mast height.
    LosProb(LosArgs),
    /// LoS, NLoS and free-space path loss against distance.
    Pathloss(PathlossArgs),
    /// Run the invariant self-check suite.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario file (TOML); defaults apply to omitted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Swept parameter: hr0, n, pmax or sea.
    #[arg(long = "var")]
    variable: String,
    /// Comma-separated values, e.g. `2,5,10` or `4,6,>8`.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config thread count.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// csv or structured (JSON with per-trial records).
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct LosArgs {
    /// Scenario file; only the sea-state table and wave source are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "2,3,4,5,6,7,8,>8", allow_hyphen_values = true)]
    states: String,
    /// Rx mast heights, meters.
    #[arg(long, default_value = "2,5,10,20,30")]
    heights: String,
    /// Tx-Rx distance along the wave direction, meters.
    #[arg(long, default_value_t = 1000.0)]
    distance: f64,
    #[arg(long, default_value_t = 2.0)]
    tx_mast: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathlossArgs {
    /// Scenario file; only the radio path-loss parameters are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100.0)]
    d_min: f64,
    #[arg(long, default_value_t = 1000.0)]
    d_max: f64,
    #[arg(long, default_value_t = 10.0)]
    step: f64,
    #[arg(long, default_value_t = 2.0)]
    h_t: f64,
    #[arg(long, default_value_t = 5.0)]
    h_r: f64,
    /// Seed for the shadowed columns.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn parse_list<T: std::str::FromStr>(what: &str, list: &str) -> Result<Vec<T>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("{what}: cannot parse {s:?}"))))
        .collect()
}

fn write_rows<R: Serialize>(rows: &[R], out: Option<&Path>) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(
            std::fs::File::create(p).map_err(|source| Error::Io { path: p.to_path_buf(), source })?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let name = out.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    let fail = |e: csv::Error| Error::Format { path: name.clone(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.flush().map_err(|source| Error::Io { path: name.clone(), source })
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    cfg.validate()?;
    let variable: SweepVariable = args.variable.parse()?;
    let format: OutputFormat = args.format.parse()?;
    let spec = SweepSpec { variable, values: variable.parse_list(&args.values)?, trials: args.trials };
    let table = run_sweep(&cfg, &spec)?;
    emit_results(&table, &args.out, format)?;
    let mut failed = false;
    for cell in table.failed_cells() {
        failed = true;
        eprintln!(
            "cell {}={} sea {}: {} of {} trials completed: {}",
            variable,
            cell.value,
            cell.sea_state,
            cell.trials,
            args.trials,
            cell.error.as_deref().unwrap_or("")
        );
    }
    Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

#[derive(Serialize)]
struct LosRow {
    sea_state: String,
    rx_mast_height_m: f64,
    tx_mast_height_m: f64,
    distance_m: f64,
    los_probability: f64,
    samples: usize,
    seed: u64,
}

fn los_prob(args: LosArgs) -> Result<ExitCode> {
    let cfg = load_config(args.config.as_deref())?;
    let states: Vec<SeaStateLevel> = parse_list("states", &args.states)?;
    let heights: Vec<f64> = parse_list("heights", &args.heights)?;
    if !(args.distance > 0.0) || args.samples == 0 {
        return Err(Error::Config("distance and samples must be positive".into()));
    }
    // Rx downwind of Tx, on the line from the wave source
    let source = cfg.geometry.wave_source;
    let tx = FloatingNode::at(0.0, 0.0, args.tx_mast)?;
    let dir = (tx.position - source).normalize();
    let mut rows = Vec::new();
    for &level in &states {
        let wave = wave_from_sea_state(cfg.sea_state_table.lookup(level)?, source)?;
        for &h in &heights {
            let rx = FloatingNode::new(tx.position + dir * args.distance, h)?;
            rows.push(LosRow {
                sea_state: level.to_string(),
                rx_mast_height_m: h,
                tx_mast_height_m: args.tx_mast,
                distance_m: args.distance,
                los_probability: los_probability_in(&wave, &tx, &rx, args.samples, args.seed)?,
                samples: args.samples,
                seed: args.seed,
            });
        }
    }
    write_rows(&rows, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PathlossRow {
    distance_m: f64,
    los_db: f64,
    los_clamped: bool,
    nlos_db: f64,
    free_space_db: f64,
    los_shadowed_db: f64,
    nlos_shadowed_db: f64,
}

fn pathloss(args: PathlossArgs) -> Result<ExitCode> {
    let cfg = load_config(args.config.as_deref())?;
    let p = cfg.radio.path_loss;
    if !(args.step > 0.0) || !(args.d_min > 0.0) || !(args.d_max >= args.d_min) {
        return Err(Error::Config("need 0 < d_min <= d_max and step > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let count = ((args.d_max - args.d_min) / args.step + 1e-9).floor() as usize + 1;
    let mut rows = Vec::with_capacity(count);
    for k in 0..count {
        let d = args.d_min + k as f64 * args.step;
        let geom = LinkGeometry { h_t: args.h_t, h_r: args.h_r, d, los: LinkState::Los };
        let los = path_loss_los(&geom, &p, 0.0)?;
        let nlos = path_loss_nlos(d, &p, 0.0)?;
        rows.push(PathlossRow {
            distance_m: d,
            los_db: los.db,
            los_clamped: los.clamped,
            nlos_db: nlos,
            free_space_db: path_loss_free_space(d, p.carrier_hz),
            los_shadowed_db: los.db + draw_shadowing(p.sigma_los_db, &mut rng),
            nlos_shadowed_db: nlos + draw_shadowing(p.sigma_nlos_db, &mut rng),
        });
    }
    write_rows(&rows, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let results = run_invariant_suite(args.seed);
    let mut ok = true;
    for r in &results {
        ok &= r.passed;
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    println!("{}/{} checks passed", results.iter().filter(|r| r.passed).count(), results.len());
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::LosProb(a) => los_prob(a),
        Command::Pathloss(a) => pathloss(a),
        Command::Validate(a) => validate(a),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(if e.is_config_error() { 1 } else { 2 })
    })
}
