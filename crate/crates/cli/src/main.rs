//! `fadingrx`: pilot generation, training, evaluation and BER sweeps.
//!
//! Every configuration key may be passed as `--<key>=<value>` (or
//! `--<key> <value>`), e.g. `--fed.rounds=3 --fading.kind=non-iid`, and
//! takes precedence over `--config`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use fadingrx::channel::{read_datasets_csv, write_datasets_csv};
use fadingrx::fed::{comm_overhead, write_telemetry_csv, Scheme};
use fadingrx::harness::{
    ber_evaluate, constellation_at, emit_csv, emit_plot, format_overhead, format_table, gen_datasets,
    named_detector, run_experiment_with, test_stream, train_scheme, EvalCounts, ExperimentConfig, CONFIG_KEYS,
};
use fadingrx::nn::{param_count, read_checkpoint, write_checkpoint, NnDetector};
use fadingrx::{Error, SeedTree};

#[derive(Parser, Debug)]
#[command(name = "fadingrx", version, about = "Symbol detection over Rayleigh fading with federated training")]
struct Cli {
    /// Flat dotted-key TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Extra `key=value` overrides (same as `--key=value`)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the pilot datasets of all users at one SNR point
    GenData {
        #[arg(long)]
        snr: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train one learned scheme (fedrec, cl, nl) at one SNR point
    Train {
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        snr: f64,
        /// Output directory for parameter files and telemetry
        #[arg(long, short)]
        out: PathBuf,
        /// Train on these pilots instead of generating them
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score one receiver at one SNR point
    Eval {
        /// map-numeric, map-rayleigh, md-estimated, min-distance or nn
        #[arg(long)]
        detector: String,
        #[arg(long)]
        snr: f64,
        /// Parameter files for `nn`; errors are summed over all of them
        #[arg(long)]
        model: Vec<PathBuf>,
        /// Pilots for `md-estimated` instead of generating them
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run every configured receiver over the SNR grid
    Sweep {
        #[arg(long, default_value = "ber.csv")]
        csv: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Training overhead in float32 words
    Overhead {
        /// User counts to tabulate
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 5])]
        users: Vec<usize>,
    },
    /// Print the resolved configuration, or the list of keys
    Config {
        #[arg(long)]
        keys: bool,
    },
}

/// Pulls `--<config key>[=value]` arguments out of argv.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let is_key = |k: &str| CONFIG_KEYS.iter().any(|(name, _)| *name == k);
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if let Some(body) = a.strip_prefix("--") {
            if let Some((k, v)) = body.split_once('=') {
                if is_key(k) {
                    overrides.push(format!("{k}={v}"));
                    continue;
                }
            } else if is_key(body) {
                match it.next() {
                    Some(v) => overrides.push(format!("{body}={v}")),
                    None => overrides.push(body.to_string()),
                }
                continue;
            }
        }
        rest.push(a);
    }
    (rest, overrides)
}

fn load_config(cli: &Cli, overrides: &[String]) -> fadingrx::Result<ExperimentConfig> {
    let mut all = cli.set.clone();
    all.extend_from_slice(overrides);
    ExperimentConfig::resolve(cli.config.as_deref(), &all)
}

fn datasets_for(
    cfg: &ExperimentConfig,
    seeds: &SeedTree,
    c: &fadingrx::Constellation,
    path: Option<&Path>,
) -> anyhow::Result<Vec<fadingrx::PilotDataset>> {
    Ok(match path {
        Some(p) => read_datasets_csv(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?))?,
        None => gen_datasets(cfg, seeds, c)?,
    })
}

fn print_counts(label: &str, snr: f64, n: &EvalCounts, secs: f64) {
    println!(
        "{label} snr={snr} dB: ber={:.6} ({} / {} bits), ser={:.6}, {secs:.2} s",
        n.ber(),
        n.bit_errors,
        n.total_bits,
        n.ser()
    );
}

fn run(cli: Cli, overrides: Vec<String>) -> anyhow::Result<()> {
    let cfg = load_config(&cli, &overrides)?;
    let seeds = SeedTree::new(cfg.master_seed);
    match &cli.command {
        Command::GenData { snr, out } => {
            let c = constellation_at(&cfg, *snr)?;
            let d = gen_datasets(&cfg, &seeds, &c)?;
            write_datasets_csv(&d, BufWriter::new(File::create(out)?))?;
            println!("wrote {} users x {} pilots to {}", d.len(), cfg.per_user_train(), out.display());
        }
        Command::Train { scheme, snr, out, data } => {
            let c = constellation_at(&cfg, *snr)?;
            let d = datasets_for(&cfg, &seeds, &c, data.as_deref())?;
            std::fs::create_dir_all(out)?;
            let t = Instant::now();
            let trained = train_scheme(&cfg, *scheme, &d, &seeds)?;
            for (i, m) in trained.models.iter().enumerate() {
                let name = if trained.models.len() == 1 {
                    format!("{}.bin", scheme.as_str().to_lowercase())
                } else {
                    format!("{}_user{i}.bin", scheme.as_str().to_lowercase())
                };
                let path = out.join(name);
                write_checkpoint(m, BufWriter::new(File::create(&path)?))?;
                println!("wrote {}", path.display());
            }
            if !trained.telemetry.is_empty() {
                let path = out.join("telemetry.csv");
                write_telemetry_csv(&trained.telemetry, BufWriter::new(File::create(&path)?))?;
                println!("wrote {}", path.display());
            }
            println!("trained {scheme} in {:.2} s", t.elapsed().as_secs_f64());
        }
        Command::Eval { detector, snr, model, data } => {
            let c = constellation_at(&cfg, *snr)?;
            let stream = test_stream(&cfg, &seeds)?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
            let t = Instant::now();
            let n = if detector == "nn" {
                if model.is_empty() {
                    bail!(Error::Input("the nn receiver needs at least one --model".into()));
                }
                let mut n = EvalCounts::default();
                for p in model {
                    let params = read_checkpoint(BufReader::new(
                        File::open(p).with_context(|| format!("opening {}", p.display()))?,
                    ))?;
                    n += pool.install(|| ber_evaluate(&NnDetector { params }, &stream, &c))?;
                }
                n
            } else {
                let d = if detector == "md-estimated" {
                    Some(datasets_for(&cfg, &seeds, &c, data.as_deref())?)
                } else {
                    None
                };
                let det = named_detector(detector, &cfg, &c, d.as_deref())?;
                pool.install(|| ber_evaluate(det.as_ref(), &stream, &c))?
            };
            print_counts(detector, *snr, &n, t.elapsed().as_secs_f64());
        }
        Command::Sweep { csv, plot } => {
            let report = run_experiment_with(&cfg, &|row| {
                eprintln!(
                    "{:<8} {:>6} dB  ber={:.6}  ({:.1} s)",
                    row.scheme, row.snr_db, row.ber, row.wall_time_s
                );
            })?;
            emit_csv(&report, csv)?;
            println!("{}", format_table(&report));
            if !report.overhead.is_empty() {
                let rows: Vec<_> = report.overhead.iter().map(|o| (cfg.users, *o)).collect();
                println!("{}", format_overhead(&rows));
            }
            println!("wrote {}", csv.display());
            if let Some(p) = plot {
                emit_plot(&report, p)?;
                println!("wrote {}", p.display());
            }
        }
        Command::Overhead { users } => {
            let n_params = param_count(&cfg.layer_dims);
            let mut rows = Vec::new();
            for &u in users {
                for s in Scheme::ALL {
                    rows.push((u, comm_overhead(s, u, n_params, cfg.rounds, cfg.train_size)));
                }
            }
            print!("{}", format_overhead(&rows));
        }
        Command::Config { keys } => {
            if *keys {
                for (k, help) in CONFIG_KEYS {
                    println!("{k:<34} {help}");
                }
            } else {
                print!("{}", cfg.to_toml());
            }
        }
    }
    std::io::stdout().flush()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config { .. } => 2,
                Error::Numerical(_) => 3,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = Cli::parse_from(args);
    match run(cli, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
