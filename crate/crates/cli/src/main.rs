//! `rankbins`: bin-number selection for ensemble rank histograms.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on domain errors (reported
//! as a JSON object on stderr).

mod report;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rankbins::alt_distributions::DEFAULT_POWER_REPLICATIONS;
use rankbins::bin_selection::{DEFAULT_K_MAX, DEFAULT_K_MIN};
use rankbins::monte_carlo::DEFAULT_REPLICATIONS;
use rankbins::study::{analyze, read_labels, DeckSpec, StudyDeck, DEFAULT_DELTA};
use rankbins::{
    critical_value, distance, false_reject_curve, optimal_bin_count, rank_histogram, rejection_probability,
    AlternativeKind, BinSearchSpec, DistanceKind, Histogram, McConfig, RankSeries, SelectionRule, ThresholdCache,
};
use rankbins_service::{ServiceConfig, ServiceError};

use report::{Format, Report};

#[derive(Debug, Parser)]
#[command(name = "rankbins", version, about = "Choose bin numbers for rank histograms")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Monte-Carlo replications for null distributions.
    #[arg(long, global = true, default_value_t = DEFAULT_REPLICATIONS)]
    mc_samples: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Worker threads for simulations (default: all cores). Results do not
    /// depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rebin observation ranks into a histogram with any number of bins.
    Transform {
        /// CSV with a `rank` column, or a JSON array of ranks.
        #[arg(long)]
        ranks: PathBuf,
        #[arg(long)]
        ensemble_size: u64,
        #[arg(long)]
        bins: usize,
    },
    /// Distance of a histogram file from the flat histogram.
    Distance {
        /// JSON object with `counts` or `heights`.
        #[arg(long)]
        histogram: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DistanceKind::ALL)]
        kind: Vec<DistanceKind>,
    },
    /// Critical value of the flatness test.
    Threshold {
        #[arg(long)]
        kind: DistanceKind,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        bins: usize,
        #[arg(long)]
        n: usize,
        /// JSON file of previously computed critical values, updated in place.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Bin count whose critical value best matches an acceptance threshold.
    OptimalK {
        #[arg(long)]
        kind: DistanceKind,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        c_target: f64,
        #[arg(long, default_value_t = DEFAULT_K_MIN)]
        k_min: usize,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
        #[arg(long, default_value_t = SelectionRule::Nearest)]
        rule: SelectionRule,
    },
    /// Rejection probabilities under uniform, sloped or U-shaped data.
    Power {
        #[arg(long, value_delimiter = ',', required = true)]
        alternative: Vec<AlternativeKind>,
        #[arg(long, value_delimiter = ',', required = true)]
        kind: Vec<DistanceKind>,
        #[arg(long)]
        c: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        bins: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_POWER_REPLICATIONS)]
        reps: usize,
    },
    /// False-rejection probability of uniform data over a (k, n) grid.
    FalseReject {
        #[arg(long)]
        kind: DistanceKind,
        #[arg(long)]
        c: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        bins: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Labeling study: decks, analysis and the HTTP service.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Debug, Subcommand)]
enum StudyCommand {
    /// Generate a shuffled study deck (shuffled with `--seed`).
    New {
        #[arg(long, default_value_t = DeckSpec::default().per_category)]
        per_category: usize,
        /// Write the deck here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Personal thresholds and acceptance rates from a label log.
    Analyze {
        #[arg(long)]
        deck: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Run the labeling service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "RANKBINS_DATA_DIR", default_value = "rankbins-data")]
    data_dir: PathBuf,
    #[arg(long, env = "RANKBINS_BIND", default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Directory with the labeling UI bundle.
    #[arg(long, env = "RANKBINS_STATIC_DIR")]
    static_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Domain(rankbins::Error),
    Service(ServiceError),
}

impl From<rankbins::Error> for CliError {
    fn from(e: rankbins::Error) -> Self {
        CliError::Domain(e)
    }
}

impl CliError {
    fn to_json(&self) -> serde_json::Value {
        let (code, message) = match self {
            CliError::Domain(e) => (e.code(), e.to_string()),
            CliError::Service(e) => ("service", e.to_string()),
        };
        serde_json::json!({ "error": code, "message": message })
    }
}

fn mc(cli: &Cli, replications: usize) -> McConfig {
    let cfg = McConfig::new(replications, cli.seed);
    match cli.workers {
        Some(w) => cfg.with_workers(w),
        None => cfg,
    }
}

fn run(cli: &Cli) -> Result<Option<Report>, CliError> {
    let cfg = mc(cli, cli.mc_samples);
    let report = match &cli.command {
        Command::Transform { ranks, ensemble_size, bins } => {
            let series = RankSeries::from_path(ranks, *ensemble_size)?;
            Report::histogram(&rank_histogram(&series, *bins, cli.seed)?)
        }
        Command::Distance { histogram, kind } => {
            let text = std::fs::read_to_string(histogram).map_err(rankbins::Error::from)?;
            let hist: Histogram = serde_json::from_str(&text).map_err(rankbins::Error::from)?;
            Report::distances(kind.iter().map(|&k| (k, distance(&hist, k))).collect())
        }
        Command::Threshold { kind, alpha, bins, n, cache } => {
            let result = match cache {
                Some(path) => {
                    let mut cache = ThresholdCache::open(path)?;
                    let result = cache.critical_value(*kind, *alpha, *bins, *n, &cfg)?;
                    cache.save()?;
                    result
                }
                None => critical_value(*kind, *alpha, *bins, *n, &cfg)?,
            };
            Report::rows(&[result])?
        }
        Command::OptimalK { kind, alpha, n, c_target, k_min, k_max, rule } => {
            let spec = BinSearchSpec::new(*kind, *alpha, *n, *c_target, cfg)
                .with_range(*k_min, *k_max)
                .with_rule(*rule);
            Report::bin_search(&optimal_bin_count(&spec)?)?
        }
        Command::Power { alternative, kind, c, bins, n, reps } => {
            let cfg = mc(cli, *reps);
            let mut rows = Vec::new();
            for &a in alternative {
                for &d in kind {
                    for &k in bins {
                        for &size in n {
                            rows.push(rejection_probability(a, d, *c, k, size, &cfg)?);
                        }
                    }
                }
            }
            Report::rows(&rows)?
        }
        Command::FalseReject { kind, c, bins, n } => Report::rows(&false_reject_curve(*kind, *c, bins, n, &cfg)?)?,
        Command::Study(StudyCommand::New { per_category, out }) => {
            let spec = DeckSpec { per_category: *per_category, shuffle_seed: cli.seed, categories: None };
            let deck = spec.build()?;
            match out {
                Some(path) => {
                    deck.save(path)?;
                    Report::deck_summary(&deck, path)
                }
                None => Report::deck(&deck)?,
            }
        }
        Command::Study(StudyCommand::Analyze { deck, labels, delta }) => {
            let deck = StudyDeck::load(deck)?;
            let labels = read_labels(labels)?;
            Report::analysis(&analyze(&deck, &labels, *delta)?)?
        }
        Command::Study(StudyCommand::Serve(args)) => {
            serve(args).map_err(CliError::Service)?;
            return Ok(None);
        }
    };
    Ok(Some(report))
}

fn serve(args: &ServeArgs) -> Result<(), ServiceError> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .with_writer(std::io::stderr)
        .init();
    let config = ServiceConfig { data_dir: args.data_dir.clone(), static_dir: args.static_dir.clone() };
    tokio::runtime::Runtime::new()
        .map_err(|e| ServiceError::Internal(e.to_string()))?
        .block_on(rankbins_service::serve(config, args.bind))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Some(report)) => match report.write(cli.format, std::io::stdout().lock()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{}", CliError::Domain(e).to_json());
                ExitCode::from(2)
            }
        },
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
