use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hypercurv::cli::{self, Mode, RunConfig};
use hypercurv::Error;

/// Prescribed curvature measures for star-shaped hypersurfaces in hyperbolic space.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// What to run.
    #[arg(value_enum)]
    mode: Mode,
    /// TOML run configuration (optional for sphere-test).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides HYPERCURV_OUT and the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for Jacobian assembly.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for perturbations and randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &Args) -> Result<RunConfig, Error> {
    let mut cfg = match (&args.config, args.mode) {
        (Some(path), mode) => RunConfig::load(path, mode)?,
        (None, Mode::SphereTest) => RunConfig::self_test(),
        (None, _) => return Err(Error::Config("--config is required for this mode".into())),
    };
    if let Some(t) = args.threads {
        cfg.continuation.threads = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = load(&args).and_then(|cfg| {
        let dir = cfg.output_dir(args.out.as_deref());
        cli::run(&cfg, &dir)
    });
    match outcome {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.report.passed {
                println!("status: pass");
                ExitCode::SUCCESS
            } else {
                println!("status: validation failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let line = serde_json::json!({
                "category": cli::category(&e),
                "exit_code": cli::exit_code(&e),
                "message": e.to_string(),
            });
            eprintln!("{line}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
