mod commands;
mod demo;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Dendrogram wavelets, p-adic codes and ultrametric checks.
#[derive(Parser, Debug)]
#[command(name = "dendrowave", version)]
struct Cli {
    /// Directory for written files.
    #[arg(long, global = true, env = "DENDROWAVE_OUTDIR", default_value = ".")]
    outdir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Agglomerative clustering of a numeric CSV: writes dendrogram.json and cophenetic.csv.
    Cluster {
        csv: PathBuf,
        #[arg(long, default_value = "average")]
        linkage: dendrowave::Linkage,
        /// Input is a square dissimilarity matrix rather than observations.
        #[arg(long)]
        matrix: bool,
    },
    /// Haar transform on a dendrogram: writes the bundle (C.csv, D.csv, smooth.csv, tree.json, manifest.json).
    Transform(TransformArgs),
    /// Hard-thresholds a bundle's details and reconstructs.
    Filter(FilterArgs),
    /// p-adic codes, distances, norms, dilation and decoding.
    Padic {
        /// Base p.
        #[arg(short, long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
        p: u64,
        #[command(subcommand)]
        op: PadicOp,
    },
    /// Ultrametric validation report for a matrix, point set or dendrogram.
    Check(CheckArgs),
    /// Seeded random dendrogram and data matrix: writes tree.json and data.csv.
    Generate {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Observation CSV, one row per terminal (ignored in indicator mode).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Ultrametric)]
    mode: ModeArg,
    /// Cardinality-weighted averaging instead of the plain midpoint.
    #[arg(long)]
    weighted: bool,
    /// Reload the bundle, reconstruct, and report the max abs error.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Ultrametric,
    Indicator,
}

#[derive(Args, Debug)]
struct FilterArgs {
    bundle: PathBuf,
    #[arg(long, value_enum)]
    rule: RuleArg,
    /// Threshold, or the number of rows to keep.
    #[arg(long, default_value_t = 0.0)]
    param: f64,
    /// Also tabulate errors for every keep-k.
    #[arg(long)]
    sweep: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    KeepK,
    Absolute,
    RowNorm,
}

#[derive(Subcommand, Debug)]
enum PadicOp {
    /// Terminal codes and decimal values; writes C.csv.
    Encode {
        #[arg(long)]
        tree: PathBuf,
    },
    /// Distance between two nodes (labels, x<k> or q<k>).
    Dist {
        #[arg(long)]
        tree: PathBuf,
        a: String,
        b: String,
    },
    /// Norm of a node.
    Norm {
        #[arg(long)]
        tree: PathBuf,
        node: String,
    },
    /// Product with 1/p of one node's code, or of every terminal with --all
    /// (also writes dilated.json).
    Dilate {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, conflicts_with = "node")]
        all: bool,
        #[arg(required_unless_present = "all")]
        node: Option<String>,
    },
    /// Rebuilds dendrogram.json from a branch-code CSV.
    Decode { codes: PathBuf },
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Square matrix CSV, point CSV (with --points) or dendrogram JSON.
    #[arg(required_unless_present = "demo")]
    input: Option<PathBuf>,
    /// Treat the CSV as observations and check their Euclidean distances.
    #[arg(long)]
    points: bool,
    /// Height used for dendrogram input.
    #[arg(long, value_enum, default_value_t = HeightArg::Ranks)]
    height: HeightArg,
    #[arg(long, value_enum, conflicts_with = "input")]
    demo: Option<Demo>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum HeightArg {
    Ranks,
    Levels,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Demo {
    #[value(name = "fig2")]
    Example,
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    /// The input was read but failed validation.
    Invalid,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster { csv, linkage, matrix } => commands::cluster(&csv, linkage, matrix, &cli.outdir),
        Command::Transform(a) => commands::transform(&a, &cli.outdir),
        Command::Filter(a) => commands::filter(&a, &cli.outdir),
        Command::Padic { p, op } => commands::padic(p, &op, &cli.outdir),
        Command::Check(a) => match a.demo {
            Some(Demo::Example) => demo::walkthrough().map(|text| {
                print!("{text}");
                Status::Ok
            }),
            None => commands::check(&a),
        },
        Command::Generate { n, m, seed } => commands::generate(n, m, seed, &cli.outdir),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Invalid) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
