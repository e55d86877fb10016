use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use symprobe::datagen::{csv_read, csv_write, verify_constraints, DatasetSpec, MuonCuts};
use symprobe::experiment::{
    analyze_model, run_experiment, threads_from_env, train_model, write_experiment,
    ExperimentConfig, ExperimentReport, ModelFile,
};
use symprobe::report::{render_figures, write_atomic};
use symprobe::vae::TrainConfig;

/// Train small VAEs on constrained datasets and measure how many latents they use.
#[derive(Parser)]
#[command(name = "symprobe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and write it as CSV.
    Gen(GenArgs),
    /// Standardize a CSV dataset and train one VAE on it.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset and write a single-run report.
    Analyze(AnalyzeArgs),
    /// Run a multi-seed experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Render the SVG figures for a report.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Uniform2d,
    Circle,
    EeDimuon,
    PpDrellyan,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    dataset: Generator,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Half-width of the square or circle radius.
    #[arg(long)]
    r: Option<f64>,
    /// Collision energy: GeV for ee-dimuon, TeV for pp-drellyan.
    #[arg(long)]
    sqrt_s: Option<f64>,
    /// Z mass in GeV (pp-drellyan).
    #[arg(long)]
    m_z: Option<f64>,
    /// Minimum muon pT in GeV (pp-drellyan); enables cuts together with --max-eta.
    #[arg(long, requires = "max_eta")]
    min_pt: Option<f64>,
    #[arg(long, requires = "min_pt")]
    max_eta: Option<f64>,
}

impl GenArgs {
    fn spec(&self) -> anyhow::Result<DatasetSpec> {
        let unused = |flag: &str, set: bool| -> anyhow::Result<()> {
            if set {
                bail!(symprobe::Error::Config(format!(
                    "--{flag} does not apply to this dataset"
                )));
            }
            Ok(())
        };
        let n = self.n;
        let spec = match self.dataset {
            Generator::Uniform2d | Generator::Circle => {
                unused("sqrt-s", self.sqrt_s.is_some())?;
                unused("m-z", self.m_z.is_some())?;
                unused("min-pt", self.min_pt.is_some())?;
                let r = self.r.unwrap_or(10.0);
                match self.dataset {
                    Generator::Circle => DatasetSpec::Circle { n, r },
                    _ => DatasetSpec::Uniform2d { n, r },
                }
            }
            Generator::EeDimuon => {
                unused("r", self.r.is_some())?;
                unused("m-z", self.m_z.is_some())?;
                unused("min-pt", self.min_pt.is_some())?;
                DatasetSpec::EeDimuon {
                    n,
                    sqrt_s: self.sqrt_s.unwrap_or(symprobe::datagen::DEFAULT_SQRT_S_EE),
                }
            }
            Generator::PpDrellyan => {
                unused("r", self.r.is_some())?;
                DatasetSpec::PpDrellyan {
                    n,
                    sqrt_s: self
                        .sqrt_s
                        .unwrap_or(symprobe::datagen::DEFAULT_SQRT_S_PP_TEV),
                    m_z: self.m_z.unwrap_or(symprobe::datagen::DEFAULT_M_Z),
                    cuts: self
                        .min_pt
                        .zip(self.max_eta)
                        .map(|(min_pt, max_abs_eta)| MuonCuts {
                            min_pt,
                            max_abs_eta,
                        }),
                }
            }
        };
        Ok(spec)
    }
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    latent_dim: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    /// Model file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss trace (CSV); defaults to the model path with `.trace.csv`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Report file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also render figures into this directory.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    svg: PathBuf,
}

fn gen(args: GenArgs) -> anyhow::Result<()> {
    let spec = args.spec()?;
    let data = spec.generate(args.seed)?;
    let checks = verify_constraints(&data)?;
    csv_write(&data, &args.out)?;
    let verified: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "{} (max residual {:.1e})",
                c.constraint.id(),
                c.max_residual
            )
        })
        .collect();
    println!(
        "wrote {} events of {} to {}",
        data.len(),
        spec.generator_id(),
        args.out.display()
    );
    if !verified.is_empty() {
        println!("constraints verified: {}", verified.join(", "));
    }
    Ok(())
}

fn trace_csv(file: &ModelFile) -> String {
    let t = &file.trace;
    let mut s = String::from("epoch,total,rec,kl\n");
    for e in 0..t.epochs() {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e}\n",
            e + 1,
            t.total[e],
            t.rec[e],
            t.kl[e]
        ));
    }
    s
}

fn train(args: TrainArgs) -> anyhow::Result<()> {
    let raw = csv_read(&args.data)?;
    let cfg = TrainConfig {
        beta: args.beta,
        lr: args.lr,
        epochs: args.epochs,
        batch_size: args.batch,
        ..TrainConfig::new(args.latent_dim, args.seed)
    };
    let file = train_model(&raw, &cfg)?;
    write_atomic(&args.out, file.to_json()?.as_bytes())?;
    let trace_path = args
        .trace
        .unwrap_or_else(|| args.out.with_extension("trace.csv"));
    write_atomic(&trace_path, trace_csv(&file).as_bytes())?;
    let t = &file.trace;
    println!(
        "trained {} epochs: loss {:.4} -> {:.4}; model {}, trace {}",
        t.epochs(),
        t.total[0],
        t.total[t.epochs() - 1],
        args.out.display(),
        trace_path.display()
    );
    Ok(())
}

fn read_model(path: &Path) -> anyhow::Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| symprobe::Error::Io {
        path: path.into(),
        source: e,
    })?;
    ModelFile::from_json(&text).with_context(|| format!("reading model {}", path.display()))
}

fn read_report(path: &Path) -> anyhow::Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| symprobe::Error::Io {
        path: path.into(),
        source: e,
    })?;
    ExperimentReport::from_json(&text).with_context(|| format!("reading report {}", path.display()))
}

fn print_profile(report: &ExperimentReport) {
    let sorted: Vec<String> = report
        .aggregate
        .sorted()
        .iter()
        .map(|v| format!("{v:.3}"))
        .collect();
    println!(
        "relevance (sorted, {} run(s)): [{}]; effective dimension {} (largest gap ratio {:.2})",
        report.aggregate.runs,
        sorted.join(", "),
        report.aggregate.effective_dim,
        report.aggregate.gap_ratio
    );
}

fn analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let file = read_model(&args.model)?;
    let raw = csv_read(&args.data)?;
    let report = analyze_model(&file, &raw)?;
    write_atomic(&args.out, report.to_json()?.as_bytes())?;
    if let Some(dir) = &args.svg {
        render_figures(&report, dir)?;
    }
    print_profile(&report);
    Ok(())
}

fn experiment(args: ExperimentArgs) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let Some(dir) = args.out.or_else(|| cfg.output_dir.clone()) else {
        bail!(symprobe::Error::Config(
            "no output directory: pass --out or set `output_dir`".into()
        ));
    };
    let report = run_experiment(&cfg, threads_from_env())?;
    let outputs = write_experiment(&report, &dir)?;
    print_profile(&report);
    println!(
        "wrote {} and {} figure(s)",
        outputs.report.display(),
        outputs.figures.len()
    );
    Ok(())
}

fn report(args: ReportArgs) -> anyhow::Result<()> {
    let report = read_report(&args.input)?;
    for path in render_figures(&report, &args.svg)? {
        println!("{}", path.display());
    }
    Ok(())
}

/// Machine-readable code of the first library error in the chain.
fn error_code(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| e.downcast_ref::<symprobe::Error>())
        .map_or("error", symprobe::Error::code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let detail: Vec<&str> = msg
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!(
                "error[usage]: {}",
                detail.join(" ").trim_start_matches("error: ")
            );
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Analyze(a) => analyze(a),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error[{}]: {msg}", error_code(&e));
            ExitCode::FAILURE
        }
    }
}
