use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use curved_nbody::cli::{
    cmd_check, cmd_continue, cmd_embed, cmd_seed, cmd_verify, DirectionChoice, RunConfig, SeedKind,
};

#[derive(Parser)]
#[command(
    name = "curved-nbody",
    version,
    about = "Central configurations and their continuation to curved spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArgs {
    /// Regular polygon of N unit masses.
    #[arg(long, value_name = "N", conflicts_with_all = ["lagrange3", "custom"])]
    polygon: Option<usize>,
    /// Lagrange triangle with the three given masses.
    #[arg(long, num_args = 3, value_names = ["M1", "M2", "M3"], conflicts_with = "custom")]
    lagrange3: Option<Vec<f64>>,
    /// Seed JSON file.
    #[arg(long, value_name = "FILE")]
    custom: Option<PathBuf>,
}

impl SeedArgs {
    fn kind(&self) -> anyhow::Result<SeedKind> {
        if let Some(n) = self.polygon {
            Ok(SeedKind::Polygon(n))
        } else if let Some(m) = &self.lagrange3 {
            Ok(SeedKind::Lagrange3(m[0], m[1], m[2]))
        } else if let Some(path) = &self.custom {
            Ok(SeedKind::Custom(path.clone()))
        } else {
            anyhow::bail!("one of --polygon, --lagrange3, --custom is required")
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Construct a planar central-configuration seed and write it as JSON.
    Seed {
        #[command(flatten)]
        seed: SeedArgs,
        /// Output seed file.
        #[arg(long, default_value = "seed.json")]
        out: PathBuf,
    },
    /// Check non-degeneracy of a seed without writing output.
    Check {
        #[command(flatten)]
        seed: SeedArgs,
    },
    /// Continue a seed in curvature and write the family CSV.
    Continue {
        #[command(flatten)]
        seed: SeedArgs,
        /// pos, neg, or both.
        #[arg(long, default_value = "pos")]
        direction: String,
        /// Curvature step.
        #[arg(long, default_value_t = 0.01)]
        dk: f64,
        /// Continuation target |kappa|.
        #[arg(long, value_name = "KAPPA")]
        kappa_limit: f64,
        /// Residual tolerance.
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        /// Disable adaptive step halving/doubling (stop at first failure).
        #[arg(long)]
        fixed_step: bool,
        /// Family CSV output (suffixes _pos/_neg appended for `both`).
        #[arg(long, default_value = "family.csv")]
        out: PathBuf,
        /// Manifest JSON output.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Project family rows onto the unit sphere/hyperboloid.
    Embed {
        /// Family CSV written by `continue`.
        #[arg(long)]
        family: PathBuf,
        /// Apply the z -> -z reflection.
        #[arg(long)]
        reflect_z: bool,
        /// Embedded point-series CSV output.
        #[arg(long, default_value = "embedded.csv")]
        out: PathBuf,
    },
    /// Integrate sampled family rows over one period and report drift.
    Verify {
        /// Family CSV written by `continue`.
        #[arg(long)]
        family: PathBuf,
        /// Masses, in body order.
        #[arg(long, num_args = 1.., required = true)]
        masses: Vec<f64>,
        /// Drift threshold for flagging a row.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Maximum number of rows to sample.
        #[arg(long, default_value_t = 16)]
        max_rows: usize,
    },
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Seed { seed, out } => {
            cmd_seed(&seed.kind()?, &out)?;
            Ok(true)
        }
        Command::Check { seed } => {
            cmd_check(&seed.kind()?)?;
            Ok(true)
        }
        Command::Continue {
            seed,
            direction,
            dk,
            kappa_limit,
            tol,
            fixed_step,
            out,
            manifest,
        } => {
            let direction = match direction.as_str() {
                "pos" => DirectionChoice::Pos,
                "neg" => DirectionChoice::Neg,
                "both" => DirectionChoice::Both,
                other => anyhow::bail!("unknown direction {other:?} (pos, neg, both)"),
            };
            let config = RunConfig {
                seed_kind: seed.kind()?,
                direction,
                delta_kappa: dk,
                kappa_limit,
                tol,
                adaptive: !fixed_step,
                reflect_z: false,
                out,
                manifest,
            };
            cmd_continue(&config)?;
            Ok(true)
        }
        Command::Embed {
            family,
            reflect_z,
            out,
        } => {
            cmd_embed(&family, &out, reflect_z)?;
            Ok(true)
        }
        Command::Verify {
            family,
            masses,
            tol,
            max_rows,
        } => {
            let rows = cmd_verify(&family, &masses, tol, max_rows)?;
            Ok(rows.iter().all(|r| r.ok))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
