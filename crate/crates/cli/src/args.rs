use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpf_core::hopfield::HopfieldMethod;

#[derive(Debug, Parser)]
#[command(name = "mpf", version, about = "Minimum probability flow estimation")]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory that output files are written to.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// JSON file overriding optimizer and training settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic data and ground-truth parameters.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Fit a model to a dataset.
    Fit(FitArgs),
    /// Compare an estimate against the true parameters.
    Eval(EvalArgs),
    /// Hopfield storage and recall experiments.
    #[command(subcommand)]
    Hopfield(HopfieldCommand),
    /// Run the self-check suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Lattice Ising model with Gaussian nearest-neighbour couplings.
    Ising {
        #[arg(long, default_value = "4x4")]
        lattice: Lattice,
        #[arg(long, default_value_t = 10.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        /// Write the exact model distribution as a weighted dataset instead of samples.
        #[arg(long)]
        weighted: bool,
    },
    /// Uniform random binary patterns.
    HopfieldPatterns {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 32)]
        m: usize,
    },
    /// Laplace sources mixed by the inverse of a random filter matrix.
    Ica {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub rows: usize,
    pub cols: usize,
}

impl FromStr for Lattice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected ROWSxCOLS, got '{s}'");
        let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let rows: usize = r.trim().parse().map_err(|_| bad())?;
        let cols: usize = c.trim().parse().map_err(|_| bad())?;
        if rows == 0 || cols == 0 {
            return Err(format!("lattice sides must be positive, got '{s}'"));
        }
        Ok(Self { rows, cols })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mpf,
    MpfAllflip,
    Pl,
    Cd1,
    Cd10,
    MlExact,
    Pmpf,
    HopfieldMpf,
    Opr,
    Per,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mpf => "mpf",
            Self::MpfAllflip => "mpf-allflip",
            Self::Pl => "pl",
            Self::Cd1 => "cd1",
            Self::Cd10 => "cd10",
            Self::MlExact => "ml-exact",
            Self::Pmpf => "pmpf",
            Self::HopfieldMpf => "hopfield-mpf",
            Self::Opr => "opr",
            Self::Per => "per",
        }
    }

    pub fn model_kind(self) -> &'static str {
        match self {
            Self::Pmpf => "ica",
            Self::HopfieldMpf | Self::Opr | Self::Per => "hopfield",
            _ => "ising",
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Dataset file.
    #[arg(long)]
    pub data: PathBuf,
    /// True parameters; enables the error metrics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Starting parameters (zeros or identity when omitted).
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub estimate: PathBuf,
    /// Dataset to score under the estimate.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum HopfieldCommand {
    /// Fraction of random patterns stored as fixed points, against the pattern count.
    Capacity {
        #[arg(long, default_value_t = 32)]
        n: usize,
        /// Pattern counts; defaults to 1 and multiples of n/8 up to n.
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "mpf,opr,per")]
        methods: Vec<HopfieldMethod>,
    },
    /// Exact recall from corrupted patterns, against the number of flipped bits.
    Denoise {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 13)]
        m: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,2,4,6,8,10")]
        bits: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "mpf,opr,per")]
        methods: Vec<HopfieldMethod>,
    },
    /// Storage of templates seen only through corrupted copies.
    CorruptedStorage {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        copies: usize,
        #[arg(long, default_value_t = 0.2)]
        frac: f64,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only the named suites (repeatable).
    #[arg(long)]
    pub only: Vec<String>,
}
