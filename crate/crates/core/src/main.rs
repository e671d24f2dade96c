use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use triage_audit::cohort::{ingest_tables, stratified_sample_with, synth_cohort, RaceRules, SampleOptions, TablePaths};
use triage_audit::error::{Error, Result};
use triage_audit::gateway::{serve_simulator, CaseIndex, SimProfile, Simulator};
use triage_audit::metrics::Population;
use triage_audit::runner::{
    analyze, execute, export_prompts, read_records, test_retest, write_reports, AnalyzeOptions, AuditReport,
    ReportFormat, RunConfig,
};
use triage_audit::stats::BootstrapSpec;
use triage_audit::vignette::{build_corpus, read_corpus_jsonl, write_corpus_jsonl, BuildOptions, NamePools};

#[derive(Parser)]
#[command(name = "triage-audit", version, about = "Counterfactual gender-fairness audits of LLM triage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Md,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
            Format::Md => ReportFormat::Md,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PopulationArg {
    All,
    Originals,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic MIMIC-shaped ED tables (edstays, triage, patients, medrecon).
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ingest cohort tables, draw the stratified sample and write the vignette corpus.
    Build {
        /// Directory holding edstays.csv, triage.csv, patients.csv and medrecon.csv.
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long)]
        per_stratum: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Name pool JSON; the bundled pools are used when omitted.
        #[arg(long)]
        pools: Option<PathBuf>,
        #[arg(long)]
        race_rules: Option<PathBuf>,
        /// Let a visit be drawn for every category its complaint matches.
        #[arg(long)]
        multi_label_strata: bool,
        /// Skip the GenderOnly, NameOnly and age-preserving blind variants.
        #[arg(long)]
        no_ablations: bool,
        /// Corpus JSONL path. A build manifest is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the corpus against every configured endpoint and strategy. Resumes
    /// from existing records in the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate sampled vignettes twice with identical inputs and count disagreements.
    Retest {
        #[arg(long)]
        config: PathBuf,
        /// Endpoint id from the config.
        #[arg(long)]
        endpoint: String,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Optional JSON output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Join records into pairs and compute the metric suite.
    Analyze {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory; analysis.json is written there.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = PopulationArg::All)]
        population: PopulationArg,
        #[arg(long, default_value_t = 10_000)]
        bootstrap_iterations: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Headline metrics count each source visit once.
        #[arg(long)]
        dedupe: bool,
        /// Also score the more-urgent-of-two pair aggregation.
        #[arg(long)]
        augmentation: bool,
    },
    /// Render an analysis.json as tables.
    Report {
        #[arg(long)]
        analysis: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// Defaults to the analysis file's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the four system prompts as text files.
    Prompts {
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the biased-model simulator as a chat-completions endpoint.
    ServeSim {
        #[arg(long, default_value = "127.0.0.1:8089")]
        addr: SocketAddr,
        /// SimProfile JSON; defaults apply when omitted.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Corpus used to look up ground truth for incoming vignettes.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

async fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth { n, seed, out } => {
            synth_cohort(n, seed).write_to_dir(&out)?;
            info!("wrote synthetic tables for {n} visits to {}", out.display());
        }
        Command::Build { cohort, per_stratum, seed, pools, race_rules, multi_label_strata, no_ablations, out } => {
            let rules = match race_rules {
                Some(p) => read_json::<RaceRules>(&p)?,
                None => RaceRules::default(),
            };
            let pools = match pools {
                Some(p) => NamePools::load(&p)?,
                None => NamePools::default(),
            };
            let ingested = ingest_tables(&TablePaths::in_dir(&cohort), &rules)?;
            let sample = stratified_sample_with(
                &ingested.rows,
                per_stratum,
                seed,
                SampleOptions { multi_label: multi_label_strata },
            )?;
            let corpus = build_corpus(&sample, &pools, BuildOptions { seed, ablations: !no_ablations });
            write_corpus_jsonl(&out, &corpus.vignettes)?;
            let manifest = serde_json::json!({
                "cohort": ingested.manifest,
                "sampling": sample.manifest,
                "build": corpus.manifest,
            });
            write_json(&out.with_extension("manifest.json"), &manifest)?;
            println!(
                "{} originals, {} pairs, {} vignettes -> {}",
                corpus.manifest.originals,
                corpus.manifest.pairs,
                corpus.vignettes.len(),
                out.display()
            );
        }
        Command::Run { config } => {
            let config = RunConfig::load(&config)?;
            let corpus = read_corpus_jsonl(&config.corpus_path)?;
            let m = execute(&config, &corpus).await?;
            println!(
                "{}: {} planned, {} OK, {} parse failures, {} persistent failures",
                m.run_id, m.planned, m.ok, m.parse_failures, m.persistent_failures
            );
        }
        Command::Retest { config, endpoint, n, seed, out } => {
            let config = RunConfig::load(&config)?;
            let ep = config
                .endpoints
                .iter()
                .find(|e| e.id == endpoint)
                .ok_or_else(|| Error::Config(format!("no endpoint {endpoint:?} in config")))?;
            let corpus = read_corpus_jsonl(&config.corpus_path)?;
            let report = test_retest(ep, &corpus, n, seed, config.retry.clone(), config.decode).await?;
            println!("{}", report.summary());
            if let Some(out) = out {
                write_json(&out, &report)?;
            }
        }
        Command::Analyze { records, corpus, out, population, bootstrap_iterations, seed, dedupe, augmentation } => {
            let records = read_records(&records)?;
            let corpus = read_corpus_jsonl(&corpus)?;
            let opts = AnalyzeOptions {
                bootstrap: BootstrapSpec { iterations: bootstrap_iterations, seed, ..BootstrapSpec::default() },
                population: match population {
                    PopulationArg::All => Population::AllVignettes,
                    PopulationArg::Originals => Population::OriginalsOnly,
                },
                dedupe,
                augmentation,
                ..AnalyzeOptions::default()
            };
            let report = analyze(&records, &corpus, opts);
            let path = out.join("analysis.json");
            write_json(&path, &report)?;
            println!("{} cells -> {}", report.cells.len(), path.display());
        }
        Command::Report { analysis, format, out } => {
            let report: AuditReport = read_json(&analysis)?;
            let dir = out.unwrap_or_else(|| analysis.parent().map(Path::to_path_buf).unwrap_or_default());
            for p in write_reports(&report, &dir, format.into())? {
                println!("{}", p.display());
            }
        }
        Command::Prompts { out } => {
            for p in export_prompts(&out)? {
                println!("{}", p.display());
            }
        }
        Command::ServeSim { addr, profile, corpus } => {
            let profile = match profile {
                Some(p) => read_json::<SimProfile>(&p)?,
                None => SimProfile::default(),
            };
            profile.validate().map_err(Error::Config)?;
            let cases = match corpus {
                Some(p) => Some(Arc::new(CaseIndex::from_vignettes(&read_corpus_jsonl(&p)?))),
                None => None,
            };
            let sim = Arc::new(Simulator::new(profile, cases));
            let (bound, handle) = serve_simulator(sim, addr).await.map_err(|e| Error::io(Path::new("<socket>"), e))?;
            println!("simulator listening on http://{bound}");
            tokio::select! {
                r = handle => { r.map_err(|e| Error::Config(e.to_string()))?.map_err(|e| Error::io(Path::new("<socket>"), e))?; }
                _ = tokio::signal::ctrl_c() => {}
            }
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
