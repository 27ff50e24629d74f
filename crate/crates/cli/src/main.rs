use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use peano_ldp_cli::stages::{
    build_context, run_pipeline, run_verify, stage_density, stage_flow, stage_rate,
    stage_simulate, stage_spectrum,
};

/// Numerical laboratory for small-noise gradient SDEs at a Peano point.
#[derive(Parser)]
#[command(name = "peano-ldp", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores). Numerical outputs are identical
    /// for any worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// For `pipeline`: stop after this stage
    /// (spectrum | flow | simulate | density | rate).
    #[arg(long, global = true)]
    stage: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the Schrödinger bottom spectrum and export eigenpairs.
    Spectrum,
    /// Integrate the extremal flows and export g samples.
    Flow,
    /// Simulate the ε ladder and persist the ensembles.
    Simulate,
    /// Density estimates and representation cross-checks at the targets.
    Density,
    /// Rate extraction, path classification and selection weights.
    Rate,
    /// Run every stage and write the manifest.
    Pipeline,
    /// Run the invariant suites against the configured potential.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        // ignore the error if a pool already exists (e.g. repeated init)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    let Some(config) = cli.config.as_deref() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(1);
    };

    let ctx = match build_context(config, cli.out.clone(), cli.seed) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(1);
        }
    };

    let run = || -> anyhow::Result<bool> {
        match cli.cmd {
            Cmd::Spectrum => {
                let art = stage_spectrum(&ctx)?;
                println!(
                    "lambda: {:?} (files: {})",
                    art.spec.eigenvalues,
                    art.files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
                );
                Ok(true)
            }
            Cmd::Flow => {
                let art = stage_spectrum(&ctx)?;
                let (_, files) = stage_flow(&ctx, art.lambda1)?;
                println!("flow artifacts: {}", files.len());
                Ok(true)
            }
            Cmd::Simulate => {
                let files = stage_simulate(&ctx)?;
                println!("wrote {} ensemble artifacts", files.len());
                Ok(true)
            }
            Cmd::Density => {
                let art = stage_spectrum(&ctx)?;
                let files = stage_density(&ctx, &art.spec)?;
                println!("density artifacts: {}", files.len());
                Ok(true)
            }
            Cmd::Rate => {
                let art = stage_spectrum(&ctx)?;
                let (gf, _) = stage_flow(&ctx, art.lambda1)?;
                let files = stage_rate(&ctx, &gf)?;
                println!("rate artifacts: {}", files.len());
                Ok(true)
            }
            Cmd::Pipeline => {
                let (manifest, all_ok) = run_pipeline(&ctx, cli.stage.as_deref())?;
                for s in &manifest.stages {
                    println!("stage {:10} {}", s.name, s.status);
                }
                println!("manifest: {}", ctx.out_dir.join("manifest.json").display());
                Ok(all_ok)
            }
            Cmd::Verify => {
                let (_, failed) = run_verify(&ctx)?;
                Ok(failed == 0)
            }
        }
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("stage failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
