use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bayes_atr::classifier::{save_model, train_logreg, train_mlp, LabeledDataset, ModelKind};
use bayes_atr::experiment::dataset::{read_train_csv, write_test_csv, write_train_csv};
use bayes_atr::experiment::{
    emit_plot_data, generate_test_dataset, generate_train_samples, load_grid, read_metrics,
    run_experiment_with_library, write_metrics, ExperimentConfig, Figure, Jitter, TestSetSpec,
};
use bayes_atr::kinematics::make_radar_grid;
use bayes_atr::seed::derived_rng;
use bayes_atr::signature::save_library;
use bayes_atr::{Error, Result};

/// Multistatic-radar UAV recognition: simulation, training and fusion sweeps.
#[derive(Parser)]
#[command(name = "bayes-atr", version)]
struct Cli {
    /// Experiment config file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Classify from RCS only, without the reported angles.
    #[arg(long, global = true)]
    no_angles: bool,
    /// Override any config key, e.g. `--set trials=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured RCS library to a grid file.
    GenGrid {
        #[arg(long, default_value = "grid.rcs")]
        file: PathBuf,
    },
    /// Dump a training set and one batch of test trajectories as CSV.
    GenData {
        /// Radar count for the test trajectories.
        #[arg(long, default_value_t = 4)]
        radars: usize,
        /// SNR in dB (defaults to the first configured value).
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        /// Jitter half-width `a` or `az:el` (defaults to the first configured value).
        #[arg(long)]
        jitter: Option<String>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Train one classifier and save it.
    Train {
        /// Training CSV from `gen-data`; generated from the config if omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "logreg")]
        model: ModelKind,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[arg(long)]
        jitter: Option<String>,
    },
    /// Run the configured sweep and write metrics and plot data.
    Run,
    /// Aggregate a metrics CSV into plot-ready summaries.
    PlotData {
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// fig5 | fig6 | fig7 | fig8; all figures if omitted.
        #[arg(long)]
        figure: Option<Figure>,
    },
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::desk(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {o:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = cli.seed {
        cfg.base_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if cli.no_angles {
        cfg.include_angles = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn condition(
    cfg: &ExperimentConfig,
    snr: Option<f64>,
    jitter: &Option<String>,
) -> Result<(f64, Jitter)> {
    let snr = snr.unwrap_or(cfg.snr_db[0]);
    let jitter = match jitter {
        Some(s) => {
            let mut tmp = cfg.clone();
            tmp.set("jitter_deg", s)?;
            tmp.jitter[0]
        }
        None => cfg.jitter[0],
    };
    Ok((snr, jitter))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    let out = cfg.out_dir.clone();
    match cli.command {
        Command::GenGrid { file } => {
            let lib = load_grid(&cfg)?;
            save_library(&lib, &file)?;
            log::info!("wrote {} classes to {}", lib.n_classes(), file.display());
        }
        Command::GenData {
            radars,
            snr,
            jitter,
            trial,
        } => {
            let lib = load_grid(&cfg)?;
            let (snr, jitter) = condition(&cfg, snr, &jitter)?;
            let noise = cfg.noise(snr, jitter);
            let mut rng = derived_rng(cfg.base_seed, &[0xDA7A, trial as u64]);
            let (obs, labels) = generate_train_samples(&lib, cfg.train_size, &noise, &mut rng)?;
            write_with(&out.join("train.csv"), |w| {
                write_train_csv(w, &obs, &labels)
            })?;
            let spec = TestSetSpec {
                kinematics: cfg.kinematics.clone(),
                radars: make_radar_grid(radars, cfg.radar_area_m)?,
                noise,
                n_trajectories: cfg.test_trajectories,
                base_seed: cfg.base_seed,
                trial,
            };
            let records = generate_test_dataset(&lib, &spec)?;
            write_with(&out.join("test.csv"), |w| write_test_csv(w, &records))?;
            log::info!("wrote train.csv and test.csv to {}", out.display());
        }
        Command::Train {
            data,
            model,
            snr,
            jitter,
        } => {
            let dataset = match data {
                Some(path) => {
                    let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
                    let (obs, labels) = read_train_csv(BufReader::new(f))?;
                    let k = labels.iter().max().map_or(0, |m| m + 1).max(cfg.classes);
                    LabeledDataset::from_observations(&obs, labels, k, cfg.include_angles)?
                }
                None => {
                    let lib = load_grid(&cfg)?;
                    let (snr, jitter) = condition(&cfg, snr, &jitter)?;
                    let mut rng = derived_rng(cfg.base_seed, &[0xDA7A, 0]);
                    let (obs, labels) = generate_train_samples(
                        &lib,
                        cfg.train_size,
                        &cfg.noise(snr, jitter),
                        &mut rng,
                    )?;
                    LabeledDataset::from_observations(
                        &obs,
                        labels,
                        lib.n_classes(),
                        cfg.include_angles,
                    )?
                }
            };
            let trained = match model {
                ModelKind::LogReg => train_logreg(&dataset, &cfg.logreg)?,
                ModelKind::Mlp => train_mlp(&dataset, &cfg.mlp)?,
            };
            let path = out.join(format!("model_{model}.bin"));
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            save_model(&trained, &path)?;
            println!(
                "{model}: training accuracy {:.4}, saved to {}",
                trained.accuracy(&dataset)?,
                path.display()
            );
        }
        Command::Run => {
            let lib = load_grid(&cfg)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            std::fs::write(out.join("config.lock"), cfg.to_text())
                .map_err(|e| Error::io(out.join("config.lock"), e))?;
            let report = run_experiment_with_library(&cfg, &lib)?;
            let metrics = out.join("metrics.csv");
            write_with(&metrics, |w| {
                write_metrics(w, &report.rows, &cfg.config_hash())
            })?;
            for f in Figure::ALL {
                if let Err(e) = emit_plot_data(&report.rows, f, &out) {
                    log::warn!("skipping {}: {e}", f.name());
                }
            }
            println!(
                "{} metric rows written to {}",
                report.rows.len(),
                metrics.display()
            );
            if !report.failures.is_empty() {
                for f in &report.failures {
                    eprintln!("failed: {}: {}", f.condition, f.message);
                }
                return Err(Error::Numerical(format!(
                    "{} condition(s) failed",
                    report.failures.len()
                )));
            }
        }
        Command::PlotData { metrics, figure } => {
            let path = metrics.unwrap_or_else(|| out.join("metrics.csv"));
            let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let (rows, _) = read_metrics(BufReader::new(f))?;
            let figures = match figure {
                Some(f) => vec![f],
                None => Figure::ALL.to_vec(),
            };
            for fig in figures {
                for p in emit_plot_data(&rows, fig, &out)? {
                    println!("{}", p.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
