use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "napkit",
    version,
    about = "Extract, study and serve neural activation patterns"
)]
pub struct Cli {
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the pipeline on some layers and write an export directory.
    Extract(ExtractArgs),
    /// Count NAPs over a grid of aggregations and input-subset sizes (CSV).
    Study(StudyArgs),
    /// Serve one export directory, or a directory of them, over HTTP.
    Serve(ServeArgs),
    /// Convert an .npy float32 array into a .napt tensor file.
    Convert(ConvertArgs),
    /// Write the synthetic bar dataset and its toy model.
    Synth(SynthArgs),
    /// Query a running server.
    Remote(RemoteArgs),
}

/// Either a model plus its inputs, or one precomputed tensor per layer.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Model description (JSON).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Input batch for --model (.napt or .npy).
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    /// Layer activations, input side first; the file stem is the layer id.
    #[arg(long, value_delimiter = ',')]
    pub tensors: Vec<PathBuf>,
    /// Per-sample labels, predictions and image refs (JSON lines).
    #[arg(long)]
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Smallest group reported as a NAP [default: 5].
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    /// Neighbour rank for core distances [default: 5].
    #[arg(long)]
    pub min_samples: Option<usize>,
    /// leaf or eom [default: leaf].
    #[arg(long)]
    pub selection: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub cluster: ClusterArgs,
    /// Layers to analyse, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<String>,
    /// none, max, minmax, mean or meanstd [default: mean].
    #[arg(long)]
    pub agg: Option<String>,
    /// Defaults to the model name.
    #[arg(long)]
    pub model_id: Option<String>,
    /// Directory that image_ref paths are relative to; copied into the export.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// Timestamp written to the manifest [default: $SOURCE_DATE_EPOCH, else now].
    #[arg(long)]
    pub created_at: Option<String>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub cluster: ClusterArgs,
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<String>,
    /// Aggregations to compare, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub aggs: Vec<String>,
    /// Input-subset sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Subset sampling seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV path [default: stdout].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    pub dir: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Static UI files served at /.
    #[arg(long)]
    pub ui: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub src: PathBuf,
    /// The file stem becomes the layer id.
    pub dst: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write PNGs under images/ and reference them from the metadata.
    #[arg(long)]
    pub images: bool,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RemoteArgs {
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    pub server: String,
    #[command(subcommand)]
    pub query: RemoteQuery,
}

#[derive(Debug, Subcommand)]
pub enum RemoteQuery {
    Models,
    Layers {
        model: String,
    },
    Naps {
        model: String,
        layer: String,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        prediction: Option<String>,
        #[arg(long)]
        mispredicted: bool,
    },
    Nap {
        nap_id: String,
    },
    Trace {
        sample_id: usize,
        #[arg(long)]
        model: Option<String>,
    },
    /// Download one image.
    Asset {
        image_ref: String,
        #[arg(long)]
        model: Option<String>,
        #[arg(short, long)]
        out: PathBuf,
    },
}
