use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ilqkd::harness::{
    self, bundled_references, compare_to_reference, load_config, parse_references, run_sweep, ExperimentConfig,
    SweepTable,
};
use ilqkd::linkmodel::ChannelModel;
use ilqkd::optics::constellation_eye;
use ilqkd::protocols::{analytic_expectations, run_session_seeded};
use ilqkd::randomness::{self, DEFAULT_MAX_LAG};
use ilqkd::{rng, Error, Result};

#[derive(Parser)]
#[command(
    name = "ilqkd",
    version,
    about = "Injection-locked phase-encoding QKD transmitter simulator"
)]
struct Cli {
    /// Rayon worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated channel losses in dB; overrides the config.
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<f64>>,
    /// Output file (default: stdout or the path named in the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single loss point and print the session and analytic expectation.
    Simulate(ExperimentArgs),
    /// Run every loss point of the config.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Generate, test and optionally extract phase-randomization random numbers.
    Qrng {
        #[arg(long, default_value_t = 1_025_000)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
        lags: usize,
        /// Digitizer full scale relative to the input intensity.
        #[arg(long, default_value_t = 1.0)]
        full_scale: f64,
        /// JSON report path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Raw byte stream path.
        #[arg(long)]
        bytes_out: Option<PathBuf>,
        /// Number of extracted bits; 0 uses the whole entropy budget.
        #[arg(long)]
        extract_bits: Option<usize>,
        /// Extracted bit stream path (packed, most significant bit first).
        #[arg(long)]
        extract_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        extractor_seed: u64,
    },
    /// Synthesize and demodulate an M-level DPSK constellation.
    Constellation {
        #[arg(long, default_value_t = 8)]
        levels: u32,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 10_000)]
        symbols: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Sweep and compare against reference operating points; exit code 2 on any miss.
    Compare {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Previously written JSON sweep instead of running one.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Reference file (default: bundled).
        #[arg(long)]
        references: Option<PathBuf>,
    },
}

fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&PathBuf>, value: &serde_json::Value) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = load_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(p) = &args.points {
        cfg = cfg.with_points(p.clone())?;
    }
    Ok(cfg)
}

fn out_path(args: &ExperimentArgs, configured: &Option<String>) -> Option<PathBuf> {
    args.out.clone().or_else(|| configured.as_ref().map(PathBuf::from))
}

fn warn_failures(table: &SweepTable) {
    for f in &table.failures {
        eprintln!("warning: point {} dB (seed {}) failed: {}", f.loss_db, f.seed, f.error);
    }
}

enum Outcome {
    Ok,
    ComparisonFailed,
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = experiment(&args)?;
            if cfg.loss_db.len() != 1 {
                return Err(Error::Config {
                    field: "points".into(),
                    message: format!("simulate runs one point, got {}", cfg.loss_db.len()),
                });
            }
            let db = cfg.loss_db[0];
            let seed = harness::point_seed(cfg.seed, db);
            let ch = ChannelModel::from_loss_db(db)?.then(&ChannelModel::from_loss_db(cfg.receiver_loss_db)?);
            let session = run_session_seeded(&cfg.protocol, &ch, &cfg.detector, cfg.pulses_per_point as usize, seed)?;
            let analytic = analytic_expectations(&cfg.protocol, &ch, &cfg.detector)?;
            let report = json!({
                "config": cfg.emitted(),
                "loss_db": db,
                "seed": seed,
                "session": session,
                "analytic": analytic,
            });
            write_json(out_path(&args, &cfg.outputs.report).as_ref(), &report)?;
        }
        Command::Sweep { exp, format } => {
            let cfg = experiment(&exp)?;
            let table = run_sweep(&cfg)?;
            warn_failures(&table);
            let path = out_path(&exp, &cfg.outputs.table);
            match format {
                Format::Csv => {
                    let mut w = sink(path.as_ref())?;
                    harness::write_csv(&table, &mut w)?;
                    w.flush()?;
                }
                Format::Json => write_json(path.as_ref(), &json!({ "config": cfg.emitted(), "table": table }))?,
            }
        }
        Command::Qrng {
            n,
            seed,
            lags,
            full_scale,
            out,
            bytes_out,
            extract_bits,
            extract_out,
            extractor_seed,
        } => {
            let samples = randomness::sample_interference_seeded(n, 1.0, seed)?;
            let samples = randomness::quantize(&samples, full_scale)?;
            let report = randomness::analyze(&samples, full_scale, lags)?;
            if let Some(p) = &bytes_out {
                std::fs::write(p, &samples.bytes)?;
            }
            let mut extracted = None;
            if extract_bits.is_some() || extract_out.is_some() {
                let budget = randomness::extraction_budget(samples.bytes.len(), report.min_entropy_bits);
                let want = match extract_bits {
                    Some(0) | None => budget,
                    Some(k) => k,
                };
                let bits = randomness::extract_bits_with_entropy(
                    &samples.bytes,
                    want,
                    extractor_seed,
                    report.min_entropy_bits,
                )?;
                if let Some(p) = &extract_out {
                    std::fs::write(p, randomness::pack_bits(&bits))?;
                }
                let ones = bits.iter().filter(|&&b| b == 1).count();
                extracted = Some(json!({ "bits": bits.len(), "ones": ones, "budget": budget }));
            }
            write_json(
                out.as_ref(),
                &json!({ "seed": seed, "report": report, "extraction": extracted }),
            )?;
        }
        Command::Constellation {
            levels,
            sigma,
            symbols,
            seed,
            out,
            format,
        } => {
            let mut r = rng::seeded(seed);
            let rep = constellation_eye(levels, sigma, symbols, &mut r)?;
            if !rep.eye_formula_applies {
                eprintln!(
                    "warning: M = {levels} is odd; the eye shows {} distinct levels, not M/2 + 1",
                    rep.eye_levels.len()
                );
            }
            match format {
                Format::Json => write_json(out.as_ref(), &serde_json::to_value(&rep)?)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(sink(out.as_ref())?);
                    w.write_record(["symbol", "radius", "angle", "i", "q"])?;
                    for (p, s) in rep.points.iter().zip(&rep.symbols) {
                        let (i, q) = p.to_cartesian();
                        w.write_record([
                            s.to_string(),
                            p.radius.to_string(),
                            p.angle.to_string(),
                            i.to_string(),
                            q.to_string(),
                        ])?;
                    }
                    w.flush()?;
                }
            }
        }
        Command::Compare { exp, table, references } => {
            let refs = match &references {
                Some(p) => parse_references(&std::fs::read_to_string(p)?)?,
                None => bundled_references()?,
            };
            let (config, table) = match &table {
                Some(p) => {
                    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p)?)?;
                    let t: SweepTable = serde_json::from_value(v.get("table").cloned().unwrap_or(v))?;
                    (None, t)
                }
                None => {
                    let cfg = experiment(&exp)?;
                    let t = run_sweep(&cfg)?;
                    warn_failures(&t);
                    (Some(cfg), t)
                }
            };
            let report = compare_to_reference(&table, &refs)?;
            for e in &report.entries {
                eprintln!(
                    "{} {}: observed {:.6e} expected {:.6e} ({:?} {})",
                    if e.pass { "PASS" } else { "FAIL" },
                    e.label,
                    e.observed,
                    e.expected,
                    e.tolerance_kind,
                    e.tolerance
                );
            }
            let path = exp.out.clone().or_else(|| {
                config
                    .as_ref()
                    .and_then(|c| c.outputs.report.clone())
                    .map(PathBuf::from)
            });
            write_json(path.as_ref(), &json!({ "comparison": report, "table": table }))?;
            if !report.all_pass {
                return Ok(Outcome::ComparisonFailed);
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ComparisonFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
