use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Takagi-van der Waerden functions, Lipschitz derivatives and hermeticity.
#[derive(Parser, Debug)]
#[command(name = "tvdw", version)]
pub struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "TVDW_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a maximal epsilon-separated net.
    Net(NetArgs),
    /// Build a nested hierarchy of a^{-n}-nets.
    Hierarchy(HierarchyArgs),
    /// Evaluate a TW function with a certified error bound.
    Eval(EvalArgs),
    /// Estimate a Lipschitz functional.
    Lip(LipArgs),
    /// Hermeticity, shell porosity and radius of hermeticity.
    Hermeticity(HermeticityArgs),
    /// Check the blow-up theorems with explicit witnesses.
    Verify(VerifyArgs),
    /// Build f = g·h with prescribed blow-up set G.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    /// Space as a JSON file or an inline JSON object.
    #[arg(long)]
    pub space: String,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct NetArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub eps: f64,
    /// Comma-separated seed points.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<String>,
    /// Check separation and density; exit 1 on failure.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Args, Debug)]
pub struct HierarchyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub depth: u32,
    /// Build every level independently instead of nesting them.
    #[arg(long)]
    pub non_monotone: bool,
    /// Check every level; exit 1 on failure.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    /// Comma-separated points.
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<String>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub index_start: u32,
    /// Output format; several points default to CSV.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FunctionalArg {
    #[value(name = "Lip")]
    BigLip,
    #[value(name = "lip")]
    SmallLip,
    #[value(name = "LLip")]
    LLip,
    #[value(name = "Lip_r_ball")]
    LipRBall,
    #[value(name = "Lip_r_closed")]
    LipRClosed,
    #[value(name = "Lip_r_sup")]
    LipRSup,
    #[value(name = "lip_r_inf")]
    LipRInf,
    #[value(name = "LLip_r")]
    LLipR,
}

#[derive(Args, Debug)]
pub struct LipArgs {
    #[command(flatten)]
    pub common: Common,
    /// `tw:a,b[,index_start]` or `builtin:identity|abs|square|const[:c]`.
    #[arg(long)]
    pub function: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<String>,
    #[arg(long, value_enum, default_value = "Lip")]
    pub functional: FunctionalArg,
    /// Radius for the fixed-radius functionals.
    #[arg(long)]
    pub r: Option<f64>,
    /// `dyadic:K`, `tw:a,from,to` or a comma-separated descending list.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, default_value_t = 1e3)]
    pub threshold: f64,
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
    /// Evaluation tolerance for TW functions.
    #[arg(long, default_value_t = 1e-15)]
    pub tol: f64,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct HermeticityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, required_unless_present = "all")]
    pub x: Option<String>,
    #[arg(long)]
    pub rmin: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    /// Sweep sample points and write CSV.
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    Biglip,
    Littlelip,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub theorem: Theorem,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    /// Number of test points: `x = lo` and random points.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 8)]
    pub nmax: u32,
    /// Little-lip level; defaults to 0.99 H.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Hermeticity of the space; estimated when absent.
    #[arg(long = "H")]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
    /// Summary JSON file (stderr when absent).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Open set, e.g. `(0.2,0.8)` or `(0,0.1)u(0.5,0.7)`.
    #[arg(long = "G", allow_hyphen_values = true)]
    pub g: String,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Check the prescribed sets; exit 1 on failure.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Collar around the boundary of G (default 10·resolution).
    #[arg(long)]
    pub collar: Option<f64>,
    #[arg(long, default_value_t = 1e3)]
    pub threshold: f64,
}
