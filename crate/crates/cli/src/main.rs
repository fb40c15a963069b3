//! `j4reg` command-line front end.
//!
//! Every subcommand starts from the defaults (or `--config FILE`), applies
//! its flags on top, runs, and prints one JSON record per line on stdout.
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 non-convergence or divergence, 5 time limit exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use j4reg::dataset::{synth_generate, SynthFunction};
use j4reg::pipeline::{
    output_path, run_compare_bibennett, run_evaluate, run_plotdata, run_predict,
    run_regressability, run_solve, run_train, run_transform, RunConfig, SYNTH_TARGET,
};
use j4reg::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "j4reg", version, about = "Regression through equivalent binary classification")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory all output files are written to.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Wall-clock budget in seconds.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Target column (default: last column).
    #[arg(long)]
    target: Option<String>,
    /// Skip per-column standardization of the features.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args, Debug, Default)]
struct TrainArgs {
    /// Hidden and output layer sizes, comma separated (e.g. 5,10).
    #[arg(long, value_delimiter = ',')]
    arch: Option<Vec<usize>>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Near-zero target threshold of the training loss.
    #[arg(long = "train-tau")]
    train_tau: Option<f64>,
    #[arg(long)]
    eps_div: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the equivalent classification dataset as CSV.
    Transform {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Fit the L1-error SVC on the equivalent dataset.
    Solve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Regressability score of a dataset.
    Regressability {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        d_percentile: Option<f64>,
    },
    /// Train the feature map and head on all samples; writes model.json.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Alias of --train-tau.
        #[arg(long)]
        tau: Option<f64>,
        /// Also write PCA projections of the features at the snapshot epochs.
        #[arg(long)]
        pca: bool,
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<usize>>,
    },
    /// Apply a saved model to a CSV; writes predictions.csv.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// k-fold evaluation of the full pipeline.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        k_folds: Option<usize>,
        #[arg(long)]
        d_percentile: Option<f64>,
    },
    /// Generate a one-dimensional synthetic dataset.
    Synth {
        #[arg(long)]
        function: SynthFunction,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// File name inside the output directory.
        #[arg(long, default_value = "synth.csv")]
        output: String,
    },
    /// Emit the CSVs behind the transform, classifiability, loss and PCA plots.
    PlotData {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        d_percentile: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<usize>>,
    },
    /// k-fold comparison with the augmented-space classifier baseline.
    CompareBibennett {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        k_folds: Option<usize>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl DataArgs {
    fn apply(self, cfg: &mut RunConfig) {
        if self.data.is_some() {
            cfg.data = self.data;
            cfg.synth = None;
        }
        set_opt(&mut cfg.target, self.target);
        if self.no_standardize {
            cfg.standardize = false;
        }
    }
}

impl TrainArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.arch, self.arch);
        set(&mut cfg.lr, self.lr);
        set(&mut cfg.epochs, self.epochs);
        set_opt(&mut cfg.train_tau, self.train_tau);
        set(&mut cfg.eps_div, self.eps_div);
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::Config(e.to_string()))?;
    println!("{line}");
    Ok(())
}

fn base_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.out_dir, cli.out_dir.clone());
    set_opt(&mut cfg.time_limit, cli.time_limit);
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = base_config(&cli)?;
    match cli.command {
        Command::Transform { data, tau } => {
            data.apply(&mut cfg);
            set_opt(&mut cfg.tau, tau);
            print_json(&run_transform(&cfg)?)
        }
        Command::Solve {
            data,
            tau,
            c,
            tol,
            max_iter,
        } => {
            data.apply(&mut cfg);
            set_opt(&mut cfg.tau, tau);
            set(&mut cfg.c, c);
            set(&mut cfg.tol, tol);
            set(&mut cfg.max_iter, max_iter);
            let report = run_solve(&cfg)?;
            print_json(&report)?;
            if !report.converged {
                return Err(Error::NotConverged {
                    iterations: report.iterations,
                    violation: report.max_violation,
                });
            }
            Ok(())
        }
        Command::Regressability {
            data,
            tau,
            d_percentile,
        } => {
            data.apply(&mut cfg);
            set_opt(&mut cfg.tau, tau);
            set(&mut cfg.d_percentile, d_percentile);
            print_json(&run_regressability(&cfg)?)
        }
        Command::Train {
            data,
            train,
            tau,
            pca,
            snapshots,
        } => {
            data.apply(&mut cfg);
            train.apply(&mut cfg);
            set_opt(&mut cfg.train_tau, tau);
            set(&mut cfg.snapshots, snapshots);
            print_json(&run_train(&cfg, pca)?)
        }
        Command::Predict { model, input } => {
            cfg.validate()?;
            print_json(&run_predict(&model, &input, &cfg)?)
        }
        Command::Evaluate {
            data,
            train,
            k_folds,
            d_percentile,
        } => {
            data.apply(&mut cfg);
            train.apply(&mut cfg);
            set(&mut cfg.k_folds, k_folds);
            set(&mut cfg.d_percentile, d_percentile);
            print!("{}", run_evaluate(&cfg)?.to_json_lines());
            Ok(())
        }
        Command::Synth {
            function,
            samples,
            lo,
            hi,
            noise,
            output,
        } => {
            cfg.validate()?;
            let ds = synth_generate(function, samples, (lo, hi), noise, cfg.seed)?;
            let path = output_path(&cfg, &output)?;
            ds.write_csv(&path, SYNTH_TARGET)?;
            print_json(&serde_json::json!({
                "function": function.name(),
                "samples": samples,
                "seed": cfg.seed,
                "file": path,
            }))
        }
        Command::PlotData {
            data,
            train,
            tau,
            d_percentile,
            snapshots,
        } => {
            data.apply(&mut cfg);
            train.apply(&mut cfg);
            set_opt(&mut cfg.tau, tau);
            set(&mut cfg.d_percentile, d_percentile);
            set(&mut cfg.snapshots, snapshots);
            print_json(&run_plotdata(&cfg)?)
        }
        Command::CompareBibennett {
            data,
            train,
            epsilon,
            c,
            tol,
            max_iter,
            k_folds,
        } => {
            data.apply(&mut cfg);
            train.apply(&mut cfg);
            set_opt(&mut cfg.epsilon, epsilon);
            set(&mut cfg.c, c);
            set(&mut cfg.tol, tol);
            set(&mut cfg.max_iter, max_iter);
            set(&mut cfg.k_folds, k_folds);
            for report in run_compare_bibennett(&cfg)? {
                print!("{}", report.to_json_lines());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
