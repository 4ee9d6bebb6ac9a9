use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "spikesel", version, about = "Spike detection in calcium traces with selective inference")]
pub struct Cli {
    /// Worker threads for spikes and replicates (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the spike model to one trace.
    Fit(FitArgs),
    /// Fit, then test every detected spike.
    Infer(InferArgs),
    /// Run a simulation experiment and write a long-format CSV.
    #[command(subcommand)]
    Simulate(Experiment),
    /// Compare estimated spikes with ground truth.
    Evaluate(EvaluateArgs),
    /// Find the penalty that yields a target number of spikes.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Indicator {
    /// γ = 0.993
    Gcamp6f,
    /// γ = 0.98
    Gcamp6s,
}

impl Indicator {
    pub fn gamma(self) -> f64 {
        match self {
            Indicator::Gcamp6f => 0.993,
            Indicator::Gcamp6s => 0.98,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    /// Per-sample calcium decay in (0, 1).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub gamma: Option<f64>,

    /// Indicator preset for the decay.
    #[arg(long, value_enum)]
    pub preset: Option<Indicator>,
}

impl DecayArgs {
    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| self.preset.expect("clap enforces one of the two").gamma())
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("penalty").required(true).multiple(false)))]
pub struct FitArgs {
    /// Fluorescence CSV: one column, or `time,fluorescence`.
    pub input: PathBuf,

    #[command(flatten)]
    pub decay: DecayArgs,

    /// Penalty per spike.
    #[arg(long, group = "penalty")]
    pub lambda: Option<f64>,

    /// Choose the penalty so the fit has this many spikes.
    #[arg(long, group = "penalty")]
    pub target_spikes: Option<usize>,

    /// Candidate penalties for the baseline search (comma list or `start:stop:step`).
    #[arg(long, group = "penalty")]
    pub lambda_grid: Option<String>,

    /// Candidate baselines β₀ (comma list or `start:stop:step`); fits `y − β₀`.
    #[arg(long, requires = "lambda_grid")]
    pub beta0_grid: Option<String>,

    /// Spike count the baseline search aims for.
    #[arg(long, requires = "beta0_grid")]
    pub grid_target: Option<usize>,

    /// Allowed distance from `--grid-target`.
    #[arg(long, default_value_t = 10)]
    pub count_slack: usize,

    /// Output file (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub fit: FitArgs,

    /// Half-width of the test window.
    #[arg(long, default_value_t = spikesel::inference::DEFAULT_H)]
    pub h: usize,

    /// Significance level for the confidence intervals.
    #[arg(long, default_value_t = spikesel::inference::DEFAULT_ALPHA)]
    pub alpha: f64,

    /// Noise standard deviation; estimated from the fit when absent.
    #[arg(long)]
    pub sigma: Option<f64>,

    /// Include the conditioning set of every spike.
    #[arg(long)]
    pub emit_s_set: bool,

    /// Identifier stored in the report (default: input file stem).
    #[arg(long)]
    pub trace_id: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Selective and naive p-values under the global null.
    Type1(SimArgs),
    /// Conditional power and detection probability.
    Power(SimArgs),
    /// Coverage, width and midpoint of confidence intervals.
    Ci(SimArgs),
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 2000)]
    pub t: usize,

    #[arg(long, default_value_t = 0.98)]
    pub gamma: f64,

    /// Noise levels: one value, a comma list, or an integer range `a..b`.
    /// Defaults to 0.2 for type1 and 1 otherwise.
    #[arg(long)]
    pub sigma: Option<String>,

    /// Poisson spike rate per step (ignored by type1).
    #[arg(long, default_value_t = 0.01)]
    pub rate: f64,

    #[arg(long, default_value_t = 50)]
    pub reps: usize,

    /// Test windows, comma separated.
    #[arg(long, default_value = "1,20", value_delimiter = ',')]
    pub h: Vec<usize>,

    /// Calibrate each trace to this many spikes (type1 default 20, else rate·T).
    #[arg(long)]
    pub target_spikes: Option<usize>,

    /// Use a fixed penalty instead of calibrating.
    #[arg(long, conflicts_with = "target_spikes")]
    pub lambda: Option<f64>,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Matching distance for detection.
    #[arg(long, default_value_t = 2)]
    pub n: usize,

    #[arg(long, env = "SPIKE_SELINF_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output file (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Estimated spikes: `time[,p_value]` in samples.
    #[arg(long)]
    pub estimated: PathBuf,

    /// True spikes: `time` in samples.
    #[arg(long)]
    pub truth: PathBuf,

    /// Sampling rate in Hz.
    #[arg(long, default_value_t = 100.0)]
    pub rate: f64,

    /// Victor–Purpura cost per second of shift.
    #[arg(long, default_value_t = spikesel::evalmetrics::DEFAULT_VP_COST)]
    pub q: f64,

    /// Samples per correlation bin (100 Hz → 25 Hz is 4).
    #[arg(long, default_value_t = 4)]
    pub bin_factor: usize,

    /// Trace length in samples (default: one past the last spike).
    #[arg(long)]
    pub samples: Option<usize>,

    /// Spikes with p ≤ alpha form the selected subset.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Skip the selected-subset analysis (no p-value column needed).
    #[arg(long)]
    pub all_only: bool,

    /// Random subsets drawn for the resampling test.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    #[arg(long, env = "SPIKE_SELINF_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output file (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    pub input: PathBuf,

    #[command(flatten)]
    pub decay: DecayArgs,

    #[arg(long)]
    pub target_spikes: usize,

    /// Output file (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
