use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spectral_uq::datasets::{load_csv, pca_project, CsvOptions, Normalization, NormalConvention, SyntheticKind, SyntheticModel};
use spectral_uq::experiment::{
    emit, recompute_reports, report_file_name, run_experiment, write_points, write_report, ExperimentConfig,
};
use spectral_uq::{Error, Result};

#[derive(Parser)]
#[command(name = "spectral-uq", version, about = "Monte Carlo expectations of spectral bi-clusterings under corrupted data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    PointInCircle,
    HalfCircles,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Zscore,
    Minmax,
    None,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Zscore => Normalization::Zscore,
            NormArg::Minmax => Normalization::Minmax,
            NormArg::None => Normalization::None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic reference data set as points.csv.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Read N(a, b) as standard deviation b instead of variance b.
        #[arg(long)]
        std_convention: bool,
        #[arg(long, default_value = "points.csv")]
        output: PathBuf,
    },
    /// Run a full experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mc_samples: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Comma-separated noise levels.
        #[arg(long, value_delimiter = ',')]
        epsilon: Option<Vec<f64>>,
        #[arg(long)]
        store_samples: bool,
    },
    /// Rebuild report CSVs from stored per-sample files.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the input directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Normalize a CSV and project it onto its leading principal axes.
    Project {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "zscore")]
        normalization: NormArg,
        #[arg(long)]
        label_column: bool,
        #[arg(long, default_value_t = 2)]
        components: usize,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            kind,
            m,
            seed,
            std_convention,
            output,
        } => {
            let model = SyntheticModel {
                kind: match kind {
                    Kind::PointInCircle => SyntheticKind::PointInCircle,
                    Kind::HalfCircles => SyntheticKind::HalfCircles,
                },
                convention: if std_convention {
                    NormalConvention::StdDev
                } else {
                    NormalConvention::Variance
                },
            };
            let data = model.generate(m, &mut ChaCha8Rng::seed_from_u64(seed))?;
            write_points(&output, &data, None)
        }
        Command::Run {
            config,
            seed,
            mc_samples,
            workers,
            output_dir,
            epsilon,
            store_samples,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                let mut c = cfg.corruption();
                c.master_seed = seed;
                cfg.corruption = Some(c);
            }
            if let Some(m) = mc_samples {
                cfg.mc_samples = m;
            }
            if let Some(w) = workers {
                cfg.execution.workers = w;
            }
            if let Some(dir) = output_dir {
                cfg.execution.output_dir = dir;
            }
            if let Some(eps) = epsilon {
                cfg.epsilon_grid = eps;
            }
            cfg.store_samples |= store_samples;
            let out = run_experiment(&cfg)?;
            emit(&out, &cfg.execution.output_dir)?;
            for r in &out.results {
                eprintln!(
                    "eps={} M={} rate={:.4} skipped={} warnings={}",
                    r.epsilon, r.report.samples, r.report.expected_misclustering_rate, r.skipped_samples, r.report.warn_count
                );
            }
            Ok(())
        }
        Command::Report { input, output } => {
            let dir = output.unwrap_or_else(|| input.clone());
            std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
            for (eps, report) in recompute_reports(&input)? {
                write_report(&dir.join(report_file_name(eps)), &report)?;
                eprintln!("eps={eps} M={} rate={:.4}", report.samples, report.expected_misclustering_rate);
            }
            Ok(())
        }
        Command::Project {
            input,
            output,
            normalization,
            label_column,
            components,
        } => {
            let opts = CsvOptions {
                normalization: normalization.into(),
                has_header: None,
                label_column,
            };
            let data = load_csv(&input, &opts)?;
            let projected = pca_project(&data, components)?;
            write_points(&output, &projected, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
