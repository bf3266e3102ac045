use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use rfi_forge::cli::{self, ConfigSource, Overrides, RunManifest, SEED_ENV};

#[derive(Parser)]
#[command(
    name = "rfi-forge",
    version,
    about = "Spatial RFI mitigation simulator"
)]
struct Cli {
    /// Worker threads for Monte-Carlo studies (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one scenario and write its sample covariances.
    Simulate(Common),
    /// Signature-estimation accuracy versus INR and sample count.
    GammaStudy(Common),
    /// Eigen-spectrum of a drifting interferer's covariance.
    SmearStudy(Common),
    /// Projection versus lag subtraction over many seeds.
    Compare(Common),
    /// Dirty maps of raw, lagged and corrected covariances.
    Image(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration (fig1, fig2) instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Base seed (overrides the config and the RFI_FORGE_SEED variable).
    #[arg(long)]
    seed: Option<u64>,
    /// Trials (studies) or seeds (compare).
    #[arg(long)]
    trials: Option<usize>,
    /// Lag in samples.
    #[arg(long)]
    tau: Option<usize>,
    /// Gain error half width.
    #[arg(long)]
    delta: Option<f64>,
    /// Also write the raw snapshots (simulate only).
    #[arg(long)]
    snapshots: bool,
}

impl Common {
    fn source(&self) -> ConfigSource {
        match (&self.config, &self.preset) {
            (Some(p), _) => ConfigSource::Path(p.clone()),
            (None, Some(name)) => ConfigSource::Preset(name.clone()),
            (None, None) => unreachable!("clap enforces a config source"),
        }
    }

    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            tau: self.tau,
            delta: self.delta,
            env_seed: std::env::var(SEED_ENV).ok(),
            write_snapshots: self.snapshots,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Cli::parse();

    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            error!("cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    type Runner = fn(&ConfigSource, &std::path::Path, &Overrides) -> rfi_forge::Result<RunManifest>;
    let (runner, common): (Runner, &Common) = match &args.command {
        Command::Simulate(c) => (cli::cmd_simulate, c),
        Command::GammaStudy(c) => (cli::cmd_gamma_study, c),
        Command::SmearStudy(c) => (cli::cmd_smear_study, c),
        Command::Compare(c) => (cli::cmd_compare, c),
        Command::Image(c) => (cli::cmd_image, c),
    };

    match runner(&common.source(), &common.out, &common.overrides()) {
        Ok(manifest) => {
            for o in &manifest.outputs {
                info!(
                    "wrote {} ({} bytes)",
                    common.out.join(&o.path).display(),
                    o.bytes
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
