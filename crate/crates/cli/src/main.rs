use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use medbench_core::dataset::load_manifest;
use medbench_core::orchestrator::{
    build_filter, read_results, render_report, run_benchmark, ReportFormat, RunSummary,
};
use medbench_core::{
    Backend, BackendConfig, FilterArtifact, FilterCriteria, HarnessError, PowerProfile, RunConfig,
    Split, SplitRatios,
};

#[derive(Parser)]
#[command(
    name = "medbench",
    version,
    about = "Benchmark harness for medical image classification"
)]
struct Cli {
    /// Log filter, e.g. `info` or `medbench_core=debug`. Overrides RUST_LOG.
    #[arg(long, global = true)]
    log: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one split of a dataset and write results.csv + summary.json.
    Run(RunArgs),
    /// Turn high-confidence train results into a targeted-question artifact.
    BuildFilter(BuildFilterArgs),
    /// Tabulate one or more runs, or compare a pair with --ab.
    Report(ReportArgs),
    /// Lint inputs without contacting any backend.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run config TOML, or a previous run's summary.json to replay.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    split: Option<Split>,
    #[arg(long, required_unless_present = "config")]
    backend_config: Option<PathBuf>,
    /// Filter artifact; repeat for several target labels.
    #[arg(long = "filter")]
    filters: Vec<PathBuf>,
    #[arg(long)]
    power_profile: Option<PathBuf>,
    /// Output root; the run directory is <out>/<run-id>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    run_id: Option<String>,
    /// Split ratios `train,val,test` used when the manifest assigns none.
    #[arg(long)]
    ratios: Option<SplitRatios>,
    #[arg(long)]
    n_bins: Option<usize>,
}

#[derive(Args)]
struct BuildFilterArgs {
    /// results.csv of a train-split run.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    label: String,
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    #[arg(long, default_value_t = 50)]
    max_responses: usize,
    #[arg(long)]
    aggregator_config: PathBuf,
    /// Defaults to filter-<label>.artifact next to the results.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    results: Vec<PathBuf>,
    /// Compare exactly two runs, without and with filtering.
    #[arg(long)]
    ab: bool,
    #[arg(long, default_value = "table_text")]
    format: ReportFormat,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    backend_config: Option<PathBuf>,
    #[arg(long)]
    power_profile: Option<PathBuf>,
    /// Run config TOML.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    artifact: Option<PathBuf>,
    #[arg(long)]
    results: Option<PathBuf>,
}

fn run_config(args: RunArgs) -> Result<RunConfig, HarnessError> {
    let mut config = match &args.config {
        Some(path) if path.extension().is_some_and(|e| e == "json") => {
            RunSummary::load(path)?.config
        }
        Some(path) => RunConfig::load(path)?,
        None => {
            let backend =
                BackendConfig::load(args.backend_config.as_ref().expect("clap requires it"))?;
            let split = args.split.expect("clap requires it");
            let run_id = format!(
                "{}-{}{}",
                backend.backend_id,
                split,
                if args.filters.is_empty() {
                    ""
                } else {
                    "-filtered"
                }
            );
            RunConfig::new(
                run_id,
                args.manifest.clone().expect("clap requires it"),
                split,
                backend,
                PathBuf::from("runs"),
            )
        }
    };
    if args.config.is_some() {
        if let Some(m) = args.manifest {
            config.manifest_path = m;
        }
        if let Some(s) = args.split {
            config.split = s;
        }
        if let Some(b) = &args.backend_config {
            config.backend = BackendConfig::load(b)?;
        }
    }
    if !args.filters.is_empty() {
        config.filter_artifact_paths = args.filters;
    }
    if let Some(p) = &args.power_profile {
        config.power_profile = PowerProfile::load(p)?;
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(id) = args.run_id {
        config.run_id = id;
    }
    if let Some(r) = args.ratios {
        config.split_ratios = r;
    }
    if let Some(n) = args.n_bins {
        config.n_bins = n;
    }
    Ok(config)
}

async fn cmd_run(args: RunArgs) -> Result<(), HarnessError> {
    let config = run_config(args)?;
    let out = run_benchmark(&config).await?;
    let m = &out.metrics;
    println!("run {} ({} samples)", config.run_id, out.summary.n_samples);
    println!("  accuracy   {:.4}", m.accuracy);
    println!("  macro F1   {:.4}", m.macro_f1);
    match m.avg_confidence {
        Some(c) => println!("  avg CS     {c:.4}"),
        None => println!("  avg CS     n/a"),
    }
    println!("  unparsed   {}", m.n_unparsed);
    println!("  errors     {}", out.summary.errors.len());
    println!("  results    {}", out.results_path.display());
    println!("  summary    {}", out.summary_path.display());
    Ok(())
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect()
}

async fn cmd_build_filter(args: BuildFilterArgs) -> Result<(), HarnessError> {
    let criteria = FilterCriteria::new(&args.label)
        .with_threshold(args.threshold)
        .with_max_responses(args.max_responses);
    let aggregator = Backend::from_config(&BackendConfig::load(&args.aggregator_config)?)?;
    let out = args.out.unwrap_or_else(|| {
        args.results
            .with_file_name(format!("filter-{}.artifact", slug(&args.label)))
    });
    let built = build_filter(&args.results, &criteria, &aggregator, &out).await?;
    let c = built.stage_counts;
    println!(
        "stages: total {} / label-matched {} / above-threshold {} / sampled {}",
        c.total, c.label_matched, c.above_threshold, c.sampled
    );
    println!(
        "{} questions for `{}` written to {}",
        built.artifact.targeted_questions.len(),
        built.artifact.target_label,
        built.artifact_path.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), HarnessError> {
    let report = render_report(&args.results, args.format, args.ab)?;
    print!("{}", report.rendered);
    Ok(())
}

fn check(what: &str, path: &Path, result: Result<String, HarnessError>) -> bool {
    match result {
        Ok(detail) => {
            println!("ok    {what} {}: {detail}", path.display());
            true
        }
        Err(e) => {
            println!("error {what} {}: {e}", path.display());
            false
        }
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<(), HarnessError> {
    let mut ok = true;
    let mut any = false;
    if let Some(p) = &args.manifest {
        any = true;
        ok &= check(
            "manifest",
            p,
            (|| {
                let m = load_manifest(p)?;
                for s in &m.samples {
                    if !m.image_path(s).is_file() {
                        return Err(HarnessError::Config(format!(
                            "image for sample `{}` not found at {}",
                            s.sample_id,
                            m.image_path(s).display()
                        )));
                    }
                }
                Ok(format!(
                    "{} samples, {} labels",
                    m.samples.len(),
                    m.label_set.len()
                ))
            })(),
        );
    }
    if let Some(p) = &args.backend_config {
        any = true;
        ok &= check(
            "backend",
            p,
            (|| {
                let c = BackendConfig::load(p)?;
                c.validate()?;
                Ok(format!("{} ({:?})", c.backend_id, c.kind))
            })(),
        );
    }
    if let Some(p) = &args.power_profile {
        any = true;
        ok &= check(
            "power profile",
            p,
            (|| {
                let prof = PowerProfile::load(p)?;
                Ok(format!(
                    "{} W, {} g/kWh",
                    prof.avg_power_w, prof.carbon_intensity_g_per_kwh
                ))
            })(),
        );
    }
    if let Some(p) = &args.config {
        any = true;
        ok &= check(
            "run config",
            p,
            (|| {
                let c = RunConfig::load(p)?;
                c.validate()?;
                Ok(format!("run `{}`", c.run_id))
            })(),
        );
    }
    if let Some(p) = &args.artifact {
        any = true;
        ok &= check(
            "artifact",
            p,
            (|| {
                let a = FilterArtifact::load(p)?;
                Ok(format!(
                    "`{}`, {} questions",
                    a.target_label,
                    a.targeted_questions.len()
                ))
            })(),
        );
    }
    if let Some(p) = &args.results {
        any = true;
        ok &= check(
            "results",
            p,
            (|| Ok(format!("{} rows", read_results(p)?.len())))(),
        );
    }
    if !any {
        return Err(HarnessError::Config("nothing to validate".into()));
    }
    if ok {
        Ok(())
    } else {
        Err(HarnessError::Config("validation failed".into()))
    }
}

fn init_logging(filter: Option<&str>) {
    use tracing_subscriber::EnvFilter;
    let filter = match filter {
        Some(f) => EnvFilter::new(f),
        None => EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")),
    };
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.log.as_deref());
    let result = match cli.command {
        Command::Run(a) => cmd_run(a).await,
        Command::BuildFilter(a) => cmd_build_filter(a).await,
        Command::Report(a) => cmd_report(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
