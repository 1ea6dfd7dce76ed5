//! `mubkit` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mubkit::mub::Construction;
use mubkit::optics::{SwitchMode, Topology};

#[derive(Parser, Debug)]
#[command(
    name = "mubkit",
    version,
    about = "Mutually unbiased bases, time-bin analyzers and QKD key rates"
)]
struct Cli {
    /// Directory for generated files.
    #[arg(long, global = true, env = "MUBKIT_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct FieldArgs {
    /// Characteristic (prime).
    #[arg(long)]
    p: usize,
    /// Extension degree.
    #[arg(long = "N", default_value_t = 1)]
    n: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ConstructionArg {
    WoottersFields,
    Durt,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::WoottersFields => Construction::WoottersFields,
            ConstructionArg::Durt => Construction::Durt,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TopologyArg {
    Tdm,
    Tree,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Tdm => Topology::TimeDivisionMultiplexed,
            TopologyArg::Tree => Topology::Tree,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SwitchArg {
    Passive,
    Active,
}

impl From<SwitchArg> for SwitchMode {
    fn from(s: SwitchArg) -> Self {
        match s {
            SwitchArg::Passive => SwitchMode::Passive,
            SwitchArg::Active => SwitchMode::ActiveSwitch,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ChannelArg {
    Identity,
    Depolarizing,
    Correlated,
    BellDiagonal,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BackendArg {
    Ideal,
    Optics,
}

#[derive(Args, Debug, Clone, Copy)]
struct LayoutArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, value_enum, default_value = "tdm")]
    topology: TopologyArg,
    #[arg(long = "switch", value_enum, default_value = "passive")]
    switch_mode: SwitchArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a complete MUB family and write it with its verification report.
    GenMub {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_enum, default_value = "wootters-fields")]
        construction: ConstructionArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Check unbiasedness and unitarity of a MUB JSON file.
    VerifyMub {
        input: PathBuf,
        #[arg(long, default_value_t = mubkit::mub::ANALYTIC_TOL)]
        tol: f64,
    },
    /// Write the interferometer netlist of a phase-basis analyzer.
    Netlist(LayoutArgs),
    /// Write the POVM realized by an analyzer network.
    Povm(LayoutArgs),
    /// Monte-Carlo run of the (d+1)-basis protocol.
    Simulate {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "identity")]
        channel: ChannelArg,
        /// Depolarizing strength, or e_Z for the correlated channel.
        #[arg(long)]
        param: Option<f64>,
        /// Depolarizing channel given by its symbol error instead of its strength.
        #[arg(long, conflicts_with = "param")]
        symbol_error: Option<f64>,
        /// λ CSV for the Bell-diagonal channel.
        #[arg(long)]
        lambda: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ideal")]
        backend: BackendArg,
        #[arg(long, value_enum, default_value = "tdm")]
        topology: TopologyArg,
        #[arg(long = "switch", value_enum, default_value = "passive")]
        switch_mode: SwitchArg,
        /// Comma-separated selection probabilities of the d+1 bases (Z last).
        #[arg(long, value_delimiter = ',')]
        basis_probs: Option<Vec<f64>>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Asymptotic key rate from λ00, ē, error statistics or a λ table.
    Keyrate {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, requires = "d", conflicts_with_all = ["e_bar", "stats", "lambda"])]
        lambda00: Option<f64>,
        #[arg(long, requires = "d", conflicts_with_all = ["stats", "lambda"])]
        e_bar: Option<f64>,
        /// ErrorStats JSON.
        #[arg(long, conflicts_with = "lambda")]
        stats: Option<PathBuf>,
        /// λ CSV (d rows of d values).
        #[arg(long)]
        lambda: Option<PathBuf>,
    },
    /// Rate-versus-error curves for the two-basis and (d+1)-basis protocols.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "2,4")]
        d: Vec<usize>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value_t = 0.3)]
        e_max: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
