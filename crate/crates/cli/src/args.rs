//! Command-line surface. Every pipeline's arguments are serializable so a
//! manifest can replay them.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "cyclos", version, about = "Cycle-closure pipelines over chain complexes, spikes, paths and sheaves")]
pub struct Cli {
    /// Directory receiving every output file and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Run seed; the CYCLOS_SEED environment variable takes precedence.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the parallel stages (all cores when omitted).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: TopLevel,
}

#[derive(Debug, Subcommand)]
pub enum TopLevel {
    #[command(flatten)]
    Pipeline(Pipeline),
    /// Replays a recorded run and checks its outputs reproduce.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// Chain complexes: boundary checks and homology classes.
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Persistence barcode of a filtration.
    Barcode(BarcodeArgs),
    /// Phase windings.
    #[command(subcommand)]
    Phase(PhaseCmd),
    /// Coincidence graphs of spike trains.
    Coincide(CoincideArgs),
    /// Delay-network simulation and cycle mining.
    #[command(subcommand)]
    Png(PngCmd),
    /// Grid-to-place fields and tours.
    #[command(subcommand)]
    Grid(GridCmd),
    /// Homing windings around obstacles.
    #[command(subcommand)]
    Nav(NavCmd),
    /// Hough voting across glimpses.
    #[command(subcommand)]
    Ght(GhtCmd),
    /// Sheaf gluing, cosheaf colimits and the pairing cocycle.
    #[command(subcommand)]
    Cech(CechCmd),
    /// Hopf normal form and limit-cycle detection.
    Hopf(HopfArgs),
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainCmd {
    /// Checks ∂1∂2 = 0 and reports Betti numbers.
    Verify {
        #[arg(long)]
        complex: PathBuf,
    },
    /// Projects a chain onto the cycle space and reports its class.
    Class {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        chain: PathBuf,
    },
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BarcodeArgs {
    #[arg(long)]
    pub filtration: PathBuf,
    /// Also render the barcode to this file (inside the output directory).
    #[arg(long)]
    pub svg: Option<String>,
    /// Where infinite bars stop in lengths and drawings.
    #[arg(long)]
    pub cap: Option<f64>,
    /// Report the persistence index for bars at least this long.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseCmd {
    /// Winding number of a phase series (JSON array of radians).
    Wind {
        #[arg(long)]
        phases: PathBuf,
        /// Treat the series as open and report only its unwrapped change.
        #[arg(long)]
        open: bool,
        #[arg(long, default_value_t = cyclos::phasecode::DEFAULT_PHASE_TOL)]
        tol: f64,
    },
    /// Turn counts of two oscillators sampled together on the torus.
    Torus {
        #[arg(long)]
        freq_hz: f64,
        #[arg(long)]
        gamma_hz: f64,
        #[arg(long, default_value_t = 0.0)]
        offset_rad: f64,
        #[arg(long)]
        duration: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = cyclos::phasecode::DEFAULT_PHASE_TOL)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CoincideArgs {
    #[arg(long)]
    pub spikes: PathBuf,
    #[arg(long)]
    pub freq_hz: f64,
    #[arg(long, default_value_t = 0.0)]
    pub offset_rad: f64,
    #[arg(long)]
    pub delta_rad: f64,
    /// Jitter half-width for the trial-invariance check.
    #[arg(long)]
    pub epsilon_rad: Option<f64>,
    /// Jittered trials drawn when `--epsilon-rad` is given.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Window values for a persistence barcode, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PngCmd {
    /// Runs the event-driven simulator.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        /// JSON array of `[neuron, time_ms]` forced spikes.
        #[arg(long)]
        stimuli: PathBuf,
        #[arg(long)]
        horizon_ms: f64,
        #[arg(long, default_value_t = 0.0)]
        jitter_ms: f64,
        /// STDP as `a_plus,a_minus,tau_plus,tau_minus`.
        #[arg(long, value_delimiter = ',')]
        stdp: Option<Vec<f64>>,
    },
    /// Lists resonant cycles.
    Mine(MineArgs),
    /// Mines cycles and checks that each one re-enters.
    Reentry {
        #[command(flatten)]
        mine: MineArgs,
        #[arg(long, default_value_t = 10)]
        periods: usize,
    },
    /// Consolidates mined cycles by replay and re-mines.
    Replay {
        #[command(flatten)]
        mine: MineArgs,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        #[arg(long, default_value_t = 1.05)]
        gain: f64,
        #[arg(long, default_value_t = 0.95)]
        decay: f64,
    },
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MineArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub t_theta_ms: f64,
    /// Resonance tolerance; the network's window when omitted.
    #[arg(long)]
    pub delta_ms: Option<f64>,
    #[arg(long)]
    pub tau_gain: f64,
    #[arg(long, default_value_t = cyclos::pngsim::MAX_CYCLE_LEN)]
    pub max_len: usize,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridCmd {
    /// Place-field map over a region, as CSV, PGM and peak list.
    Field {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compares two closed tours.
    Tour {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tours: PathBuf,
    },
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NavCmd {
    /// Winding vector of each move and of their composition.
    Wind {
        #[arg(long)]
        workspace: PathBuf,
        #[arg(long)]
        moves: PathBuf,
        #[arg(long, default_value_t = cyclos::nav::DEFAULT_TOL)]
        tol: f64,
    },
    /// Composes the moves in several orders and compares windings.
    Perm {
        #[arg(long)]
        workspace: PathBuf,
        #[arg(long)]
        moves: PathBuf,
        /// JSON array of orderings; every permutation when omitted.
        #[arg(long)]
        orderings: Option<PathBuf>,
        #[arg(long, default_value_t = cyclos::nav::DEFAULT_TOL)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GhtCmd {
    /// Accumulates glimpses and reports the peak.
    Run {
        #[arg(long)]
        input: PathBuf,
    },
    /// Accumulates a scene along several gaze paths and compares peaks.
    Audit {
        #[arg(long)]
        input: PathBuf,
        /// Accumulate glimpses as seen, without undoing the gaze.
        #[arg(long)]
        no_reregister: bool,
    },
    /// Superlevel barcode of the accumulator.
    Persist {
        #[arg(long)]
        input: PathBuf,
        /// Threshold count, spaced evenly from the maximum down.
        #[arg(long, default_value_t = 16)]
        levels: usize,
        #[arg(long)]
        svg: Option<String>,
    },
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CechCmd {
    /// Glues sections into a global section or reports obstructions.
    Glue {
        #[arg(long)]
        system: PathBuf,
    },
    /// Colimit class of the co-sections or a deadlock report.
    Colimit {
        #[arg(long)]
        system: PathBuf,
    },
    /// Pairing cocycle, its coboundary and its class.
    Cocycle {
        #[arg(long)]
        system: PathBuf,
        /// Skip the naturality precondition.
        #[arg(long)]
        unchecked: bool,
        /// Perturbation magnitudes for a drift report, comma separated.
        #[arg(long, value_delimiter = ',')]
        drift: Option<Vec<f64>>,
        #[arg(long, default_value_t = 8)]
        drift_trials: usize,
    },
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HopfArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub omega0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 200.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = cyclos::hopf::DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.3, 0.0], allow_hyphen_values = true)]
    pub x0: Vec<f64>,
    /// Keep every `stride`-th sample in the trajectory CSV.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
}
