mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use palmtri::Config;

/// Palmprint recognition over Delaunay triangulations of palm-line
/// endpoints: enroll templates, match and identify them, evaluate corpora,
/// and generate synthetic test data.
#[derive(Parser)]
#[command(name = "palmtri", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: ConfigOverrides,
}

/// Flags override values from --config, which overrides the defaults.
#[derive(Args)]
struct ConfigOverrides {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Niblack window side (odd, >= 3).
    #[arg(long, global = true)]
    window: Option<usize>,

    /// Niblack threshold coefficient (negative for dark lines).
    #[arg(long, global = true, allow_negative_numbers = true)]
    k: Option<f64>,

    /// Minimum skeleton component size in pixels.
    #[arg(long, global = true)]
    min_component: Option<usize>,

    /// Minimum branch length kept at junctions, pixels.
    #[arg(long, global = true)]
    min_spur: Option<usize>,

    /// Weight on the relative-length distance.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Weight on the relative-area distance.
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Weight on the angle distance.
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Weight on the relative-incenter distance.
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Triangle-count prefilter tolerance in [0, 1].
    #[arg(long, global = true)]
    tau: Option<f64>,

    /// Neighborhood size for the k-NN classifier.
    #[arg(long, global = true)]
    knn_k: Option<usize>,

    /// Seed for synthetic data generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract an enrollment template from one image.
    Extract {
        image: PathBuf,
        /// Template JSON output path.
        #[arg(long)]
        out: PathBuf,
        /// Dump binarized/skeleton/cleaned masks and the triangulation here.
        #[arg(long)]
        debug_dir: Option<PathBuf>,
    },
    /// Compare two templates; prints per-group distances and the total.
    Match { a: PathBuf, b: PathBuf },
    /// Rank a gallery of templates against a query image or template.
    Identify {
        /// Query image (pgm/png) or template (json).
        query: PathBuf,
        /// Directory of template JSONs, flat or one subdirectory per label.
        gallery: PathBuf,
        /// Write the ranking CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leave-one-out evaluation over a corpus directory.
    Evaluate {
        /// Corpus root: <subject>/<sample>.(pgm|png).
        corpus: PathBuf,
        #[arg(long, value_enum, default_value_t = ClassifierArg::Weighted)]
        classifier: ClassifierArg,
        /// Measure per-stage runtimes and include them in the report.
        #[arg(long)]
        timing: bool,
        /// Base path for <out>.json and <out>.csv.
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Generate a synthetic labeled corpus with ground-truth endpoints.
    Synth {
        out_dir: PathBuf,
        #[arg(long)]
        subjects: usize,
        #[arg(long)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Weighted,
    Knn,
}

/// Usage problems exit 2, pipeline and data problems exit 3.
pub(crate) enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

fn resolve_config(o: &ConfigOverrides) -> Result<Config, Failure> {
    let mut cfg = match &o.config {
        Some(path) => Config::load(path).map_err(|e| Failure::Usage(e.to_string()))?,
        None => Config::default(),
    };
    if let Some(v) = o.window {
        cfg.niblack.window = v;
    }
    if let Some(v) = o.k {
        cfg.niblack.k = v;
    }
    if let Some(v) = o.min_component {
        cfg.niblack.min_component = v;
    }
    if let Some(v) = o.min_spur {
        cfg.niblack.min_spur = v;
    }
    if let Some(v) = o.alpha {
        cfg.weights.alpha = v;
    }
    if let Some(v) = o.beta {
        cfg.weights.beta = v;
    }
    if let Some(v) = o.gamma {
        cfg.weights.gamma = v;
    }
    if let Some(v) = o.delta {
        cfg.weights.delta = v;
    }
    if let Some(v) = o.tau {
        cfg.tau = v;
    }
    if let Some(v) = o.knn_k {
        cfg.knn_k = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve_config(&cli.overrides)?;
    match cli.command {
        Command::Extract {
            image,
            out,
            debug_dir,
        } => commands::extract(&image, &out, debug_dir.as_deref(), &cfg),
        Command::Match { a, b } => commands::match_templates(&a, &b, &cfg),
        Command::Identify {
            query,
            gallery,
            out,
        } => commands::identify(&query, &gallery, out.as_deref(), &cfg),
        Command::Evaluate {
            corpus,
            classifier,
            timing,
            out,
        } => {
            let classifier = match classifier {
                ClassifierArg::Weighted => palmtri::evaluation::Classifier::WeightedRank1,
                ClassifierArg::Knn => palmtri::evaluation::Classifier::Knn,
            };
            commands::evaluate(&corpus, classifier, timing, &out, &cfg)
        }
        Command::Synth {
            out_dir,
            subjects,
            samples,
        } => commands::synth(&out_dir, subjects, samples, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}
