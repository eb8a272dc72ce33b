use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ppg_snd::config::{PipelineConfig, Strategy};
use ppg_snd::error::{Error, Result};
use ppg_snd::{io, pipeline, synth, wavelet};

#[derive(Parser)]
#[command(name = "ppgsnd", version, about = "Subject-normalized PPG cognitive-load pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override the configured worker thread count.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the default configuration.
    Config,
    /// Generate a synthetic cohort as recordings plus manifest.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wavelet-denoise a manifest, or a single recording with --input/--output.
    Denoise {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "input")]
        manifest: Option<PathBuf>,
        #[arg(long, requires = "manifest")]
        out: Option<PathBuf>,
        #[arg(long, requires = "output")]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Amplitude-normalize (and for PersFreqN resample) a denoised manifest.
    Normalize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract labeled feature rows from a normalized manifest.
    Features {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long)]
        out: PathBuf,
    },
    /// LOSO evaluation of features_<strategy>.csv files found in a directory.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        features_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a summary CSV as a text table and a long-format CSV.
    Report {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline as configured.
    Run {
        #[command(flatten)]
        common: Common,
        /// Overrides paths.output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn pooled<T: Send>(cfg: &PipelineConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    pipeline::with_threads(cfg.threads, f)?
}

fn denoise_file(cfg: &PipelineConfig, input: &Path, output: &Path) -> Result<()> {
    let samples = io::read_recording_csv(input).map_err(|e| e.in_stage("ingest"))?;
    let spec = cfg.wavelet.spec()?;
    let out = wavelet::denoise_samples(&samples, &spec, cfg.wavelet.threshold).map_err(|e| e.in_stage("denoise"))?;
    io::write_recording_csv(output, &out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Config => {
            print!("{}", PipelineConfig::default().to_toml());
            Ok(())
        }
        Command::Synth { common, out } => {
            let cfg = load_config(&common)?;
            cfg.synth.validate()?;
            pooled(&cfg, || {
                let cohort = synth::generate_cohort(&cfg.synth, cfg.seed)?;
                io::write_sessions(&out, &cohort.sessions)?;
                io::write_ground_truth(&out.join("ground_truth.csv"), &cohort.truth)
            })
        }
        Command::Denoise {
            common,
            manifest,
            out,
            input,
            output,
        } => {
            let cfg = load_config(&common)?;
            match (manifest, out, input, output) {
                (Some(m), Some(o), None, None) => pooled(&cfg, || {
                    let sessions = io::ingest(&m).map_err(|e| e.in_stage("ingest"))?;
                    let denoised = pipeline::denoise_sessions(&sessions, &cfg)?;
                    io::write_sessions(&o, &denoised).map(|_| ())
                }),
                (None, None, Some(i), Some(o)) => denoise_file(&cfg, &i, &o),
                _ => Err(Error::Config(
                    "denoise needs either --manifest and --out, or --input and --output".into(),
                )),
            }
        }
        Command::Normalize {
            common,
            manifest,
            strategy,
            out,
        } => {
            let cfg = load_config(&common)?;
            pooled(&cfg, || {
                let sessions = io::ingest(&manifest).map_err(|e| e.in_stage("ingest"))?;
                let (normalized, profiles) = pipeline::normalize_sessions(&sessions, strategy, &cfg)?;
                io::write_sessions(&out, &normalized)?;
                if !profiles.is_empty() {
                    io::write_profiles(&pipeline::profiles_path(&out), &profiles)?;
                }
                Ok(())
            })
        }
        Command::Features {
            common,
            manifest,
            strategy,
            out,
        } => {
            let cfg = load_config(&common)?;
            pooled(&cfg, || {
                let sessions = io::ingest(&manifest).map_err(|e| e.in_stage("ingest"))?;
                let instances = pipeline::extract_instances(&sessions, strategy, &cfg)?;
                io::write_features(&out, &instances)
            })
        }
        Command::Evaluate {
            common,
            features_dir,
            out,
        } => {
            let cfg = load_config(&common)?;
            pooled(&cfg, || {
                let mut rows = Vec::new();
                for &strategy in &cfg.strategies {
                    let path = pipeline::features_path(&features_dir, strategy);
                    let instances = io::read_features(&path).map_err(|e| e.in_stage("ingest"))?;
                    rows.extend(pipeline::evaluate_instances(&instances, strategy, &cfg)?);
                }
                io::write_folds(&out.join("folds.csv"), &rows)?;
                io::write_summary(&out.join("summary.csv"), &rows)
            })
        }
        Command::Report { summary, out } => {
            let rows = io::read_summary(&summary)?;
            let table = io::render_summary_table(&rows);
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("summary.txt"), &table)?;
            std::fs::write(out.join("summary_long.csv"), io::render_long_csv(&rows))?;
            print!("{table}");
            Ok(())
        }
        Command::Run { common, out } => {
            let mut cfg = load_config(&common)?;
            if let Some(o) = out {
                cfg.paths.output_dir = o;
            }
            let result = pipeline::run_pipeline(&cfg)?;
            let rows: Vec<io::SummaryRecord> = result
                .summary_rows()
                .iter()
                .map(|r| io::SummaryRecord {
                    strategy: r.strategy.to_string(),
                    classifier: r.report.classifier.to_string(),
                    accuracy: r.report.metrics.accuracy,
                    f1_high: r.report.metrics.f1_high,
                    f1_low: r.report.metrics.f1_low,
                })
                .collect();
            print!("{}", io::render_summary_table(&rows));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            let diag = serde_json::json!({
                "category": category.as_str(),
                "stage": e.stage(),
                "message": e.to_string(),
            });
            eprintln!("{diag}");
            ExitCode::from(category.exit_code() as u8)
        }
    }
}
