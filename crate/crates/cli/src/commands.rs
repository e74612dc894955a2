use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use concord_core::eval::{run_benchmark, Corpus, SplitSpec};
use concord_core::eventlog::{read_events, write_events};
use concord_core::inference::{
    content_based_preferences, first_voter_preferences, fit_influence, FittedModel, ItemFeatureTable, PrefSource,
};
use concord_core::recommender::{rank_for_group, Catalog, GeoPoint, RankFilters, UserHistory};
use concord_core::synth::generate;
use concord_core::{CascadeEvent, CascadeParams, UserId};
use concord_service::http::serve;
use concord_service::Service;

use crate::config::Config;

#[derive(Debug, Parser)]
#[command(name = "concord", version, about = "Group decisions with social influence")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the synthetic-data and solver seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Write the event log of a service data directory.
    Export(ExportArgs),
    /// Generate a synthetic corpus.
    Simulate(SimulateArgs),
    /// Fit the influence model to an event log.
    Fit(FitArgs),
    /// Compare the influence model with the independent baseline.
    Eval(EvalArgs),
    /// Rank catalog items for a group.
    Recommend(RecommendArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Catalog JSON file.
    #[arg(long)]
    pub catalog: PathBuf,
    /// Journal and snapshot directory. Without it nothing is persisted.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Event-log output (JSON lines); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Only events created at or after this time (ms).
    #[arg(long)]
    pub since: Option<i64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Event-log output (JSON lines); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub catalog_out: Option<PathBuf>,
    /// Generating parameters, in the fitted-model parameter format.
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Needed unless the preference source is free-variable.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Fitted-model output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, conflicts_with = "synthetic", requires = "catalog")]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Generate the corpus from the `[synthetic]` config section instead.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Machine-readable report (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    /// Vote-history JSON file; everyone starts cold without it.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Comma-separated member ids.
    #[arg(long, value_delimiter = ',', required = true)]
    pub group: Vec<UserId>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub category: Option<String>,
    #[arg(long)]
    pub datetime: Option<String>,
    #[arg(long, requires = "lon")]
    pub lat: Option<f64>,
    #[arg(long, requires = "lat")]
    pub lon: Option<f64>,
    #[arg(long, requires = "lat")]
    pub radius_km: Option<f64>,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = Config::load(cli.config.as_deref())?.with_seed(cli.seed);
    match cli.command {
        Command::Serve(args) => serve_cmd(&config, args),
        Command::Export(args) => export_cmd(&config, args),
        Command::Simulate(args) => simulate_cmd(&config, args),
        Command::Fit(args) => fit_cmd(&config, args),
        Command::Eval(args) => eval_cmd(&config, args),
        Command::Recommend(args) => recommend_cmd(&config, args),
    }
}

/// File at `path`, or stdout.
fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    let mut out = output(path)?;
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn load_catalog(path: &Path) -> anyhow::Result<Catalog> {
    Catalog::load(path).with_context(|| format!("loading catalog {}", path.display()))
}

fn load_events(path: &Path) -> anyhow::Result<Vec<CascadeEvent>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_events(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn serve_cmd(config: &Config, args: ServeArgs) -> anyhow::Result<()> {
    let catalog = load_catalog(&args.catalog)?;
    let service = match &args.data_dir {
        Some(dir) => Service::open(catalog, config.service_config(), dir)?,
        None => Service::new(catalog, config.service_config())?,
    };
    let addr = SocketAddr::new(args.host, args.port);
    tracing::info!(%addr, data_dir = ?args.data_dir, "serving");
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(serve(Arc::new(service), addr))?;
    Ok(())
}

fn export_cmd(config: &Config, args: ExportArgs) -> anyhow::Result<()> {
    let service = Service::open(load_catalog(&args.catalog)?, config.service_config(), &args.data_dir)?;
    let events = service.export_event_log(args.since);
    write_events(output(args.out.as_deref())?, &events)?;
    tracing::info!(events = events.len(), "exported");
    Ok(())
}

fn simulate_cmd(config: &Config, args: SimulateArgs) -> anyhow::Result<()> {
    let corpus = generate(&config.synthetic)?;
    write_events(output(args.out.as_deref())?, &corpus.events)?;
    if let Some(path) = &args.catalog_out {
        write_text(Some(path), &to_json(&corpus.catalog)?)?;
    }
    if let Some(path) = &args.truth_out {
        write_text(Some(path), &to_json(&corpus.truth)?)?;
    }
    Ok(())
}

fn fit_cmd(config: &Config, args: FitArgs) -> anyhow::Result<()> {
    let events = load_events(&args.events)?;
    let catalog = args.catalog.as_deref().map(load_catalog).transpose()?;
    let fit = &config.fit;
    let fixed: Option<CascadeParams> = match (fit.pref_source, &catalog) {
        (PrefSource::FreeVariable, _) => None,
        (PrefSource::FirstVoterLogistic, Some(c)) => {
            Some(first_voter_preferences(&events, &ItemFeatureTable::from_catalog(c), fit)?.params)
        }
        (PrefSource::ContentBased, Some(c)) => Some(content_based_preferences(&events, c, config.recommender.alpha)?),
        (_, None) => bail!("--catalog is required for preference source {:?}", fit.pref_source),
    };
    let (params, report) = fit_influence(&events, fit, fixed.as_ref())?;
    tracing::info!(
        log_likelihood = report.final_log_likelihood,
        iterations = report.iterations,
        converged = report.converged,
        "fitted"
    );
    write_text(args.out.as_deref(), &FittedModel::new(params, fit.clone(), report).to_json())
}

fn eval_cmd(config: &Config, args: EvalArgs) -> anyhow::Result<()> {
    let corpus = match (&args.events, &args.catalog, args.synthetic) {
        (Some(events), Some(catalog), false) => Corpus { events: load_events(events)?, catalog: load_catalog(catalog)? },
        (None, _, true) => {
            let c = generate(&config.synthetic)?;
            Corpus { events: c.events, catalog: c.catalog }
        }
        _ => bail!("give either --events with --catalog, or --synthetic"),
    };
    let split = SplitSpec::new(args.split.unwrap_or(config.eval.split))?;
    let threshold = args.threshold.unwrap_or(config.eval.threshold);
    let report = run_benchmark(&corpus, &config.fit, &split, threshold)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.out {
        write_text(Some(path), &to_json(&report)?)?;
    }
    Ok(())
}

fn recommend_cmd(config: &Config, args: RecommendArgs) -> anyhow::Result<()> {
    let catalog = load_catalog(&args.catalog)?;
    let history = match &args.history {
        Some(p) => UserHistory::load(p).with_context(|| format!("loading history {}", p.display()))?,
        None => UserHistory::new(),
    };
    let filters = RankFilters {
        category: args.category,
        datetime: args.datetime,
        location: args.lat.zip(args.lon).map(|(lat, lon)| GeoPoint::new(lat, lon)),
        radius_km: args.radius_km,
    };
    let rec = &config.recommender;
    let ranked = rank_for_group(
        &args.group,
        &catalog,
        &history,
        rec.weights(args.group.len())?,
        &filters,
        rec.alpha,
        args.k.unwrap_or(rec.k),
    )?;
    write_text(None, &to_json(&ranked)?)
}
