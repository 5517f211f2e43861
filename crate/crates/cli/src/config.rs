//! Run configuration: defaults, optional TOML config file, CLI flags, with
//! precedence flags > file > defaults.

use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use stylerank::features::{parse_feature_list, Feature};
use stylerank::forest::ForestConfig;
use stylerank::midi::{ParseOptions, CANONICAL_RESOLUTION};

use crate::error::{usage, CliResult};

pub const DEFAULT_ALPHA_LEVELS: [f64; 4] = [5.0, 0.5, 0.05, 0.005];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Flags shared across subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Feature names, comma separated (repeatable); `all` selects the full
    /// catalog, which is also the default.
    #[arg(long)]
    pub features: Vec<String>,

    /// Seed for forests, shuffles and trial batches.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of trees per forest.
    #[arg(long)]
    pub trees: Option<usize>,

    /// Maximum decision-tree depth.
    #[arg(long)]
    pub max_depth: Option<usize>,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,

    /// Output file (default: stdout; `extract` treats it as a directory).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,

    /// TOML config file; command-line flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Significance level (repeatable); values above 1 disable filtering.
    #[arg(long)]
    pub alpha: Vec<f64>,

    /// Ticks per quarter that all files are rescaled to.
    #[arg(long)]
    pub resolution: Option<u32>,

    /// Drop notes on MIDI channel 10 (percussion).
    #[arg(long)]
    pub exclude_percussion: bool,
}

/// TOML file counterpart of [`CommonArgs`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    features: Option<Vec<String>>,
    seed: Option<u64>,
    trees: Option<usize>,
    max_depth: Option<usize>,
    workers: Option<usize>,
    format: Option<OutputFormat>,
    alpha: Option<Vec<f64>>,
    resolution: Option<u32>,
    include_percussion: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub features: Vec<Feature>,
    pub forest: ForestConfig,
    pub seed: u64,
    pub alpha_levels: Vec<f64>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub parse_options: ParseOptions,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        Self::resolve_with_default_format(args, OutputFormat::Json)
    }

    /// Commands whose natural output is tabular default to CSV.
    pub fn resolve_with_default_format(
        args: &CommonArgs,
        default_format: OutputFormat,
    ) -> CliResult<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| usage(format!("bad config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };

        let feature_names: &[String] = if !args.features.is_empty() {
            &args.features
        } else if let Some(names) = &file.features {
            names
        } else {
            &["all".to_string()]
        };
        let features = parse_feature_list(feature_names)
            .map_err(|e| usage(e.to_string()))?;
        if features.is_empty() {
            return Err(usage("the feature set is empty"));
        }

        let seed = args.seed.or(file.seed).unwrap_or(0);
        let defaults = ForestConfig::default();
        let forest = ForestConfig {
            tree_count: args.trees.or(file.trees).unwrap_or(defaults.tree_count),
            max_depth: args.max_depth.or(file.max_depth).unwrap_or(defaults.max_depth),
            seed,
        };
        if forest.tree_count == 0 {
            return Err(usage("--trees must be positive"));
        }
        if forest.max_depth == 0 {
            return Err(usage("--max-depth must be positive"));
        }

        let alpha_levels = if !args.alpha.is_empty() {
            args.alpha.clone()
        } else {
            file.alpha.unwrap_or_else(|| DEFAULT_ALPHA_LEVELS.to_vec())
        };
        if alpha_levels.iter().any(|&a| a <= 0.0) {
            return Err(usage("--alpha values must be positive"));
        }

        let resolution = args.resolution.or(file.resolution).unwrap_or(CANONICAL_RESOLUTION);
        if resolution == 0 {
            return Err(usage("--resolution must be positive"));
        }
        let include_percussion = if args.exclude_percussion {
            false
        } else {
            file.include_percussion.unwrap_or(true)
        };

        Ok(RunConfig {
            features,
            forest,
            seed,
            alpha_levels,
            format: args.format.or(file.format).unwrap_or(default_format),
            out: args.out.clone(),
            workers: args.workers.or(file.workers),
            parse_options: ParseOptions { resolution, include_percussion },
        })
    }
}
