//! `wkg`: command-line driver for the wave–Klein-Gordon lab.
//!
//! Exit status: 0 when a run reaches its horizon (or a command succeeds),
//! 2 on detected blow-up or a failing identity check, 1 on configuration
//! and I/O errors.

mod config;
mod fit;
mod run;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::RunConfig;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wkg_core::nullforms::identities::{catalog, catalog_with_mutation, run_catalog};

#[derive(Parser, Debug)]
#[command(name = "wkg", version, about = "Numerical lab for the quasilinear wave–Klein-Gordon system")]
struct Cli {
    /// Output root (defaults to $WKG_OUT, then ./wkg-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve one configuration and write energy, region and fit artifacts.
    Run { config: PathBuf },
    /// Check the exact identity catalog on random polynomial inputs.
    Verify {
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Corrupt the named identity (mutation testing of the checker).
        #[arg(long, hide = true)]
        corrupt: Option<String>,
    },
    /// Run the configuration once per amplitude in `sweep.eps`.
    Sweep { config: PathBuf },
    /// Recompute `fit.json` from the CSVs in a run directory.
    Fit { dir: PathBuf },
}

fn load(path: &Path) -> Result<RunConfig, ExitCode> {
    RunConfig::from_file(path).map_err(|e| {
        eprintln!("wkg: {e}");
        ExitCode::from(1)
    })
}

fn cmd_run(path: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    let dir = run::output_root(out).join(&cfg.output_dir);
    let summary = run::execute(&cfg, &dir, "run")?;
    println!(
        "{}: {} at t = {} after {} steps (dt = {:.6}); smallness norm {:.4e}; artifacts in {}",
        cfg.output_dir,
        summary.reason,
        summary.t_final,
        summary.steps,
        summary.dt,
        summary.smallness_norm,
        dir.display()
    );
    Ok(if summary.blew_up() { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn cmd_sweep(path: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    if cfg.eps_list.is_empty() {
        eprintln!("wkg: sweep needs `sweep.eps`");
        return Ok(ExitCode::from(1));
    }
    let root = run::output_root(out).join(&cfg.output_dir);
    let rows: Vec<Vec<String>> = cfg
        .eps_list
        .par_iter()
        .map(|&eps| {
            let sub = cfg.with_amplitude(eps);
            let dir = root.join(format!("eps_{eps}"));
            match run::execute(&sub, &dir, "sweep") {
                Ok(s) => {
                    let p = fit::fit_dir(&dir)
                        .ok()
                        .and_then(|f| f.records.into_iter().find(|r| r.name == "energy_growth"))
                        .map(|r| run::num(r.exponents["p"]))
                        .unwrap_or_default();
                    vec![run::num(eps), run::num(s.t_final), s.reason, p]
                }
                Err(e) => vec![run::num(eps), String::new(), format!("error: {e:#}"), String::new()],
            }
        })
        .collect();
    let header = ["eps", "t_star", "reason", "growth_p"].map(String::from);
    std::fs::create_dir_all(&root)?;
    run::write_csv(&root.join("summary.csv"), &header, &rows)?;
    for r in &rows {
        println!("ε = {:<8} T* = {:<8} {:<16} p = {}", r[0], r[1], r[2], r[3]);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(trials: usize, degree: u32, seed: u64, corrupt: Option<String>) -> Result<ExitCode> {
    let cat = match corrupt {
        Some(name) => catalog_with_mutation(&name)?,
        None => catalog(),
    };
    let reports = run_catalog(&cat, trials, degree, seed)?;
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(8);
    println!("{:<width$}  {:<22} {:>6} {:>8}  residual-is-zero", "identity", "family", "trials", "failures");
    for r in &reports {
        println!(
            "{:<width$}  {:<22} {:>6} {:>8}  {}",
            r.name,
            format!("{:?}", r.family),
            r.trials,
            r.failures,
            if r.passed() { "yes" } else { "NO" }
        );
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        println!("{} identities, all zero-residual", reports.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{} of {} identities FAILED: {}", failed.len(), reports.len(), failed.join(", "));
        Ok(ExitCode::from(2))
    }
}

fn cmd_fit(dir: &Path) -> Result<ExitCode> {
    let report = fit::fit_dir(dir)?;
    for r in &report.records {
        let ex: Vec<String> = r.exponents.iter().map(|(k, v)| format!("{k} = {v:.4}")).collect();
        println!("{:<22} {}{}", r.name, ex.join(", "), r.r2.map(|x| format!(" (r² = {x:.3})")).unwrap_or_default());
    }
    for e in &report.errors {
        println!("{:<22} not fitted: {}", e.name, e.message);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config, cli.out),
        Command::Verify { trials, degree, seed, corrupt } => cmd_verify(trials, degree, seed, corrupt),
        Command::Sweep { config } => cmd_sweep(&config, cli.out),
        Command::Fit { dir } => cmd_fit(&dir),
    };
    result.unwrap_or_else(|e| {
        eprintln!("wkg: {e:#}");
        ExitCode::from(1)
    })
}
