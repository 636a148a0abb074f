use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mlc::cdi::read_cdi_csv;
use mlc::classifier::{HyperGrid, TrainedModel};
use mlc::dataprep::read_split_csv;
use mlc::gate::{gate_case, gate_csv, MlcCertificate};
use mlc::irt::{ItemBank, ModelKind};
use mlc::pipeline::{self, artifacts, create_file, write_json, CodingSource, RunConfig};
use mlc::{ClassLabel, Error, Result};

#[derive(Parser)]
#[command(name = "mlc", version, about = "Case difficulty, adaptive testing and MLC certification for binary classifiers")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct DataFlags {
    /// Overrides the data CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Overrides the coding spec (JSON file).
    #[arg(long)]
    coding_spec: Option<PathBuf>,
    /// Balance classes before coding.
    #[arg(long)]
    balance: Option<bool>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the item bank and write itembank.json.
    FitIrt {
        #[command(flatten)]
        data: DataFlags,
        #[arg(long, value_parser = parse_model_kind)]
        model_kind: Option<ModelKind>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Score every case with a fitted bank and write cdi.csv.
    ScoreCdi {
        #[command(flatten)]
        data: DataFlags,
        #[arg(long)]
        item_bank: Option<PathBuf>,
    },
    /// Difficulty-stratified train/test split of cdi.csv into split.csv.
    Split {
        #[arg(long)]
        cdi: Option<PathBuf>,
    },
    /// Grid-search the classifier on the training split; writes model.json.
    Train {
        #[command(flatten)]
        data: DataFlags,
        /// Hyperparameter grid (JSON).
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Traditional metrics on the test split; writes metrics.json.
    Evaluate {
        #[command(flatten)]
        data: DataFlags,
        #[arg(long)]
        positive_class: Option<ClassLabel>,
    },
    /// Adaptive test per class; writes trajectories and certificate.json.
    Cat {
        #[command(flatten)]
        data: DataFlags,
        #[arg(long)]
        reliability: Option<f64>,
        #[arg(long)]
        jitter_sd: Option<f64>,
        #[arg(long)]
        stop_window: Option<usize>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        step_l_offset: Option<i32>,
    },
    /// Route a case (or a CSV of cases) to the algorithm or to human review.
    Gate {
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long, allow_hyphen_values = true, requires = "predicted", conflicts_with = "batch")]
        cdi: Option<f64>,
        #[arg(long)]
        predicted: Option<ClassLabel>,
        #[arg(long, default_value = "case")]
        case_id: String,
        /// CSV with `case_id,raw_cdi,predicted_class` columns.
        #[arg(long)]
        batch: Option<PathBuf>,
        /// Where to write batch decisions; stdout by default.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Every stage end to end, plus the comparison report.
    RunAll {
        #[command(flatten)]
        data: DataFlags,
    },
}

fn parse_model_kind(s: &str) -> std::result::Result<ModelKind, String> {
    match s {
        "dichotomous" | "2pl" => Ok(ModelKind::Dichotomous),
        "graded" | "grm" => Ok(ModelKind::Graded),
        other => Err(format!("unknown model kind `{other}`")),
    }
}

fn load_config(cli: &Cli, data: Option<&DataFlags>) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this subcommand needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(d) = data {
        if let Some(p) = &d.data {
            cfg.data = p.clone();
        }
        if let Some(p) = &d.coding_spec {
            cfg.coding = CodingSource::Path(p.clone());
        }
        if let Some(b) = d.balance {
            cfg.balance = b;
        }
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json("stdout", e))?;
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("stdout", e)),
        _ => Ok(()),
    }
}

fn artifact(cfg: &RunConfig, given: Option<&PathBuf>, name: &str) -> PathBuf {
    given.cloned().unwrap_or_else(|| cfg.out_dir.join(name))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::FitIrt { data, model_kind, max_iter, tol } => {
            let mut cfg = load_config(&cli, Some(data))?;
            if let Some(k) = model_kind {
                cfg.model_kind = *k;
            }
            if let Some(m) = max_iter {
                cfg.fit.max_iter = *m;
            }
            if let Some(t) = tol {
                cfg.fit.tol = *t;
            }
            let prepared = pipeline::prepare(&cfg)?;
            let fit = pipeline::fit_irt(&cfg, &prepared)?;
            fit.bank.save(&cfg.out_dir.join(artifacts::ITEM_BANK))?;
            write_json(&cfg.out_dir.join(artifacts::CODING_REPORT), &prepared.coding_report)?;
            print_json(&serde_json::json!({
                "converged": fit.converged,
                "iterations": fit.iterations,
                "log_likelihood": fit.log_likelihood(),
                "collapsed": fit.collapsed,
            }))
        }
        Command::ScoreCdi { data, item_bank } => {
            let cfg = load_config(&cli, Some(data))?;
            let bank = ItemBank::load(&artifact(&cfg, item_bank.as_ref(), artifacts::ITEM_BANK))?;
            let prepared = pipeline::prepare(&cfg)?;
            let records = pipeline::score(&prepared, &bank)?;
            mlc::cdi::write_cdi_csv(&records, create_file(&cfg.out_dir.join(artifacts::CDI))?)?;
            eprintln!("scored {} cases", records.len());
            Ok(())
        }
        Command::Split { cdi } => {
            let cfg = load_config(&cli, None)?;
            let records = read_cdi_csv(&artifact(&cfg, cdi.as_ref(), artifacts::CDI))?;
            let split = pipeline::split(&cfg, &records)?;
            mlc::dataprep::write_split_csv(&split, create_file(&cfg.out_dir.join(artifacts::SPLIT))?)?;
            print_json(&split.bins)
        }
        Command::Train { data, grid, folds, epochs } => {
            let mut cfg = load_config(&cli, Some(data))?;
            if let Some(p) = grid {
                let s = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                cfg.grid = serde_json::from_str::<HyperGrid>(&s).map_err(|e| Error::json("grid", e))?;
            }
            if let Some(f) = folds {
                cfg.folds = *f;
            }
            if let Some(e) = epochs {
                cfg.train.epochs = *e;
            }
            cfg.validate()?;
            let prepared = pipeline::prepare(&cfg)?;
            let split = read_split_csv(&cfg.out_dir.join(artifacts::SPLIT))?;
            let outcome = pipeline::train(&cfg, &prepared, &split)?;
            outcome.model.save(&cfg.out_dir.join(artifacts::MODEL))?;
            write_json(&cfg.out_dir.join(artifacts::GRID), &outcome.cells)?;
            print_json(&outcome.chosen)
        }
        Command::Evaluate { data, positive_class } => {
            let mut cfg = load_config(&cli, Some(data))?;
            if let Some(c) = positive_class {
                cfg.positive_class = *c;
            }
            let prepared = pipeline::prepare(&cfg)?;
            let split = read_split_csv(&cfg.out_dir.join(artifacts::SPLIT))?;
            let model = TrainedModel::load(&cfg.out_dir.join(artifacts::MODEL))?;
            let metrics = pipeline::evaluate(&cfg, &prepared, &split, &model)?;
            write_json(&cfg.out_dir.join(artifacts::METRICS), &metrics)?;
            print_json(&metrics)
        }
        Command::Cat { data, reliability, jitter_sd, stop_window, max_steps, step_l_offset } => {
            let mut cfg = load_config(&cli, Some(data))?;
            let c = &mut cfg.cat;
            c.reliability = reliability.unwrap_or(c.reliability);
            c.jitter_sd = jitter_sd.unwrap_or(c.jitter_sd);
            c.stop_window = stop_window.unwrap_or(c.stop_window);
            c.max_steps = max_steps.unwrap_or(c.max_steps);
            c.step_l_offset = step_l_offset.unwrap_or(c.step_l_offset);
            cfg.validate()?;
            let prepared = pipeline::prepare(&cfg)?;
            let records = read_cdi_csv(&cfg.out_dir.join(artifacts::CDI))?;
            let split = read_split_csv(&cfg.out_dir.join(artifacts::SPLIT))?;
            let model = TrainedModel::load(&cfg.out_dir.join(artifacts::MODEL))?;
            let [c1, c2] = pipeline::run_cat_sessions(&cfg, &prepared, &records, &split, &model)?;
            c1.write_trajectory_csv(create_file(&cfg.out_dir.join(artifacts::CAT_CLASS1))?)?;
            c2.write_trajectory_csv(create_file(&cfg.out_dir.join(artifacts::CAT_CLASS2))?)?;
            write_json(&cfg.out_dir.join(artifacts::CAT_REPORTS), &[&c1, &c2])?;
            let cert = MlcCertificate::from_reports(&model, &c1, &c2, cfg.cat.reliability)
                .map_err(|e| e.in_stage("gate"))?;
            cert.save(&cfg.out_dir.join(artifacts::CERTIFICATE))?;
            print_json(&cert)
        }
        Command::Gate { certificate, cdi, predicted, case_id, batch, output } => {
            let cert = MlcCertificate::load(certificate)?;
            match (cdi, predicted, batch) {
                (Some(x), Some(p), None) => print_json(&gate_case(case_id, *x, *p, &cert)),
                (None, _, Some(path)) => {
                    let input = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
                    match output {
                        Some(o) => gate_csv(input, &cert, create_file(o)?).map(|_| ()),
                        None => gate_csv(input, &cert, std::io::stdout().lock()).map(|_| ()),
                    }
                }
                _ => Err(Error::Config("gate needs --cdi with --predicted, or --batch".into())),
            }
        }
        Command::RunAll { data } => {
            let cfg = load_config(&cli, Some(data))?;
            let report = pipeline::run_pipeline(&cfg)?;
            let _ = write!(std::io::stdout(), "{}", report.render_text());
            eprintln!("artifacts written to {}", cfg.out_dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let family = e.family();
            eprintln!("error [{}]: {e}", family.name());
            ExitCode::from(family.exit_code() as u8)
        }
    }
}
