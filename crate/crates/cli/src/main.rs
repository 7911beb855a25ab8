mod config;
mod error;
mod experiments;
mod output;
mod verify;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{
    CommonArgs, Experiment, ExperimentConfig, Extra, MomentArgs, SweepKcArgs, SweepLArgs,
    VerifyArgs,
};
pub use error::ConfigError;

/// Green's function decay experiments for periodic 1-D Schrödinger operators.
#[derive(Parser)]
#[command(name = "resolvent-decay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// |G(x, 0)| over half the domain, one CSV per scheme.
    Profile {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Decay rate γ as the domain length grows.
    GammaSweepL {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sweep: SweepLArgs,
    },
    /// Decay rate γ as the Fourier edge kc grows.
    GammaSweepKc {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sweep: SweepKcArgs,
    },
    /// The cutoff θ₀, its smoothed version θ and the symbol ĥ on the grid.
    Mollifier {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Discrete moment bounds ‖d^m G‖ against their Fourier-side bound.
    Moments {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        moments: MomentArgs,
    },
    /// Run the invariant suites; exits nonzero on any failure.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        verify: VerifyArgs,
    },
}

impl Command {
    fn split(self) -> (Experiment, CommonArgs, Extra) {
        match self {
            Command::Profile { common } => (Experiment::Profile, common, Extra::default()),
            Command::GammaSweepL { common, sweep } => (
                Experiment::GammaSweepL,
                common,
                Extra {
                    ls: sweep.ls,
                    ..Extra::default()
                },
            ),
            Command::GammaSweepKc { common, sweep } => (
                Experiment::GammaSweepKc,
                common,
                Extra {
                    dxs: sweep.dxs,
                    ..Extra::default()
                },
            ),
            Command::Mollifier { common } => (Experiment::Mollifier, common, Extra::default()),
            Command::Moments { common, moments } => (
                Experiment::Moments,
                common,
                Extra {
                    m_max: moments.m_max,
                    ..Extra::default()
                },
            ),
            Command::Verify { common, verify } => (
                Experiment::Verify,
                common,
                Extra {
                    suites: verify.suite,
                    ..Extra::default()
                },
            ),
        }
    }
}

fn main() -> ExitCode {
    let (experiment, common, extra) = Cli::parse().command.split();
    match run(experiment, &common, &extra) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every verification line passed (always true for experiments).
fn run(experiment: Experiment, common: &CommonArgs, extra: &Extra) -> Result<bool, ConfigError> {
    let start = Instant::now();
    let config = ExperimentConfig::resolve(experiment, common, extra)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()?;

    if experiment == Experiment::Verify {
        let checks = verify::run(&config.suites, &pool);
        for c in &checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            println!("{}/{}: {status} {}", c.suite.name(), c.name, c.detail);
        }
        let failed = checks.iter().filter(|c| !c.pass).count();
        println!("{} checks, {failed} failed", checks.len());
        return Ok(failed == 0);
    }

    output::ensure_dir(&config.out)?;
    let result = experiments::run(&config, &pool)?;
    let mut meta = config.meta();
    meta.extend(result.meta);
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("version.core".into(), resolvent_decay::VERSION.into());
    let names: Vec<String> = result
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    meta.insert("outputs".into(), names.join(","));
    meta.insert(
        "wall_time_s".into(),
        format!("{:.3}", start.elapsed().as_secs_f64()),
    );
    let meta_path = output::write_meta(&config.out, &meta)?;
    for f in result.files.iter().chain(std::iter::once(&meta_path)) {
        println!("wrote {}", f.display());
    }
    Ok(true)
}
