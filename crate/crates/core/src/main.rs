use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hut::datagen::{gen_speeds, Profile, DEFAULT_N};
use hut::harness::{
    self, audit_counting, defaults_text, emit_outputs, mean_std, parse_config, trial_mses,
    ExperimentReport, QueryKind, SweepSpec,
};
use hut::mechanism::audit_bound;
use hut::{Dataset, DatasetKind, ExecMode, HutError, Method, Params};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CELLS_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hut",
    version,
    about = "Differentially private release of unbalanced query batches"
)]
struct Cli {
    /// Run trials and sweep cells on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryArg {
    Simple,
    Counting,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic `id,value` speed dataset.
    Generate {
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, default_value = "right-skewed")]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Protect a dataset with one method and report MSE over trials.
    Run {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "hut")]
        method: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = harness::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "simple")]
        query: String,
        #[arg(long, default_value_t = hut::dataset::DEFAULT_BIN_WIDTH)]
        bin_width: f64,
    },
    /// Sweep the (ε, k, p) grid for every method and write reports and plots.
    Sweep {
        #[arg(long, required_unless_present = "print_defaults")]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        query: QueryArg,
        /// `key = value` file overriding the default grids.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "print_defaults")]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the default grids in config syntax and exit.
        #[arg(long)]
        print_defaults: bool,
    },
    /// Rebuild the reduction table and plots from an existing report.csv.
    Compare {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Empirical likelihood-ratio audit of the counting pipeline.
    Audit {
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code(err: &HutError) -> u8 {
    match err {
        HutError::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mode = if cli.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };
    match run(cli.command, mode) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command, mode: ExecMode) -> hut::Result<u8> {
    match command {
        Command::Generate {
            n,
            profile,
            seed,
            out,
        } => {
            let ds = gen_speeds(n, profile.parse::<Profile>()?, seed)?;
            ds.write_csv(&out)?;
            println!("wrote {} records to {}", ds.len(), out.display());
            Ok(0)
        }
        Command::Run {
            data,
            method,
            epsilon,
            k,
            p,
            trials,
            seed,
            query,
            bin_width,
        } => {
            let method: Method = method.parse()?;
            let query: QueryKind = query.parse()?;
            let params = Params::new(epsilon, k, p, seed, trials)?;
            let ds = Dataset::read_csv(&data, DatasetKind::SimpleValues)?;
            let ds = harness::dataset_for_query(&ds, query, bin_width)?;
            let mses = trial_mses(method, &ds, &params, mode)?;
            let (mean, std) = mean_std(&mses);
            println!("method,query,epsilon,k,threshold,trials,mean_mse,std_mse");
            println!("{method},{query},{epsilon},{k},{p},{trials},{mean},{std}");
            Ok(0)
        }
        Command::Sweep {
            data,
            query,
            config,
            out_dir,
            seed,
            print_defaults,
        } => {
            if print_defaults {
                print!("{}", defaults_text());
                return Ok(0);
            }
            let (Some(data), Some(out_dir)) = (data, out_dir) else {
                return Err(HutError::Config("--data and --out-dir are required".into()));
            };
            let text = match &config {
                Some(path) => std::fs::read_to_string(path).map_err(|e| HutError::Io {
                    path: path.clone(),
                    source: e,
                })?,
                None => String::new(),
            };
            let queries = match query {
                QueryArg::Simple => vec![QueryKind::Simple],
                QueryArg::Counting => vec![QueryKind::Counting],
                QueryArg::Both => vec![QueryKind::Simple, QueryKind::Counting],
            };
            let ds = Dataset::read_csv(&data, DatasetKind::SimpleValues)?;
            let mut report = ExperimentReport::default();
            for q in queries {
                let spec: SweepSpec = parse_config(&text, q)?;
                report = report.merge(harness::run_sweep(&spec, &ds, seed, mode)?);
            }
            finish(&report, &out_dir)
        }
        Command::Compare { report, out_dir } => {
            let file = std::fs::File::open(&report).map_err(|e| HutError::Io {
                path: report.clone(),
                source: e,
            })?;
            let parsed = ExperimentReport::from_csv_reader(file).map_err(|e| match e {
                HutError::Csv { source, .. } => HutError::Csv {
                    path: report.clone(),
                    source,
                },
                other => other,
            })?;
            finish(&parsed, &out_dir)
        }
        Command::Audit {
            epsilon,
            samples,
            seed,
        } => {
            let report = audit_counting(epsilon, samples, seed, mode)?;
            let bound = audit_bound(epsilon);
            println!("epsilon,samples,max_ratio,bound,within_bound");
            println!(
                "{epsilon},{samples},{:.6},{:.6},{}",
                report.max_ratio,
                bound,
                report.max_ratio <= bound
            );
            Ok(0)
        }
    }
}

fn finish(report: &ExperimentReport, out_dir: &std::path::Path) -> hut::Result<u8> {
    let files = emit_outputs(report, out_dir)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    for r in report.reductions() {
        println!(
            "{} epsilon={} k={} threshold={} reduction={:.2}%",
            r.query, r.epsilon, r.k, r.threshold, r.reduction_pct
        );
    }
    let failed: Vec<_> = report.failed().collect();
    for r in &failed {
        eprintln!(
            "cell {} {} epsilon={} k={} threshold={}: {}",
            r.method, r.query, r.epsilon, r.k, r.threshold, r.status
        );
    }
    Ok(if failed.is_empty() {
        0
    } else {
        EXIT_CELLS_FAILED
    })
}
