use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hmat::cluster::make_sphere_geometry;
use hmat::mvm::Variant;
use hmat_bench::{cmd_bench_mvm, cmd_build, cmd_sweep, cmd_verify, to_json, write_csv, Axis, BenchConfig, BenchReport, Campaign, FormatKind, Result, Scheme};

#[derive(Parser)]
#[command(name = "hmat-bench", version, about = "Build, verify and time hierarchical matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a matrix, optionally save the container file, report memory.
    Build {
        #[command(flatten)]
        run: RunArgs,
        /// Container file to write.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Report errors against the reference and, for small n, the dense matrix.
    Verify {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Time the products of the format.
    BenchMvm {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Repeat a campaign over refinements or accuracies.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated refinements (axis n) or accuracies (axis eps).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_enum, default_value = "build")]
        campaign: CampaignArg,
    },
    /// Write the sphere geometry as a point-weight file (text for .txt).
    Geometry {
        #[arg(long, default_value_t = 3)]
        refine: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    N,
    Eps,
}

#[derive(Clone, Copy, ValueEnum)]
enum CampaignArg {
    Build,
    Verify,
    BenchMvm,
}

#[derive(Args)]
struct RunArgs {
    /// Sphere refinement, n = 20·4^r.
    #[arg(long, conflicts_with = "n")]
    refine: Option<usize>,
    /// Problem size, must be 20·4^r.
    #[arg(long)]
    n: Option<usize>,
    /// Point-weight file instead of the sphere.
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long, default_value = "h", value_parser = |s: &str| s.parse::<FormatKind>())]
    format: FormatKind,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = hmat::cluster::DEFAULT_ETA)]
    eta: f64,
    #[arg(long, default_value_t = hmat::cluster::DEFAULT_N_MIN)]
    nmin: usize,
    /// Leaves of the flat BLR clustering.
    #[arg(long, default_value_t = 16)]
    blr_p: usize,
    #[arg(long, default_value = "none", value_parser = |s: &str| s.parse::<Scheme>())]
    compress: Scheme,
    /// Per-column accuracy for low-rank factors and bases.
    #[arg(long)]
    valr: bool,
    /// Product routine, all routines of the format when omitted.
    #[arg(long, value_parser = |s: &str| s.parse::<Variant>())]
    variant: Option<Variant>,
    /// Worker count, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Accuracy of the uncompressed H reference, defaults to eps.
    #[arg(long)]
    ref_eps: Option<f64>,
    /// Report file, stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

impl RunArgs {
    fn config(&self) -> Result<BenchConfig> {
        let refinement = match (self.refine, self.n) {
            (Some(r), _) => r,
            (None, Some(n)) => BenchConfig::refinement_for(n)?,
            (None, None) => 3,
        };
        let config = BenchConfig {
            refinement,
            format: self.format,
            eps: self.eps,
            eta: self.eta,
            n_min: self.nmin,
            blr_p: self.blr_p,
            scheme: self.compress,
            valr: self.valr,
            variant: self.variant,
            threads: self.threads,
            reps: self.reps,
            seed: self.seed,
            ref_eps: self.ref_eps.unwrap_or(self.eps),
            geometry: self.geometry.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    fn emit(&self, reports: &[BenchReport]) -> Result<()> {
        let mut out: Box<dyn Write> = match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        };
        if self.json {
            writeln!(out, "{}", to_json(reports)?)?;
        } else {
            write_csv(reports, &mut out)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build { run, save } => run.emit(&[cmd_build(&run.config()?, save.as_deref())?]),
        Command::Verify { run } => run.emit(&[cmd_verify(&run.config()?)?]),
        Command::BenchMvm { run } => run.emit(&[cmd_bench_mvm(&run.config()?)?]),
        Command::Sweep { run, axis, values, campaign } => {
            let axis = match axis {
                AxisArg::N => Axis::N,
                AxisArg::Eps => Axis::Eps,
            };
            let campaign = match campaign {
                CampaignArg::Build => Campaign::Build,
                CampaignArg::Verify => Campaign::Verify,
                CampaignArg::BenchMvm => Campaign::BenchMvm,
            };
            run.emit(&cmd_sweep(&run.config()?, axis, &values, campaign)?)
        }
        Command::Geometry { refine, out } => Ok(make_sphere_geometry(refine)?.save(&out)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
