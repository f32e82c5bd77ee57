//! The `run` pipeline: evolve one configuration and write its artifacts.
//!
//! Files written to the run directory (all CSVs have a header row; floats
//! use the shortest representation that round-trips):
//!
//! | file               | columns                                                              |
//! |--------------------|----------------------------------------------------------------------|
//! | `energy.csv`       | `time,E,E1..En,Evf,Equasi,A,B,Eghost_S<s>...`                        |
//! | `regions.csv`      | `time,T,S,kind,points,sup_du,sup_dv,sup_Zu` (`S` empty off-cone)     |
//! | `region_norms.csv` | `T,kind,S,cell_integral,energy_sup,hyperboloid_sup` (`X^T` of `(u,v)`)|
//! | `hyperboloids.csv` | `T,rho2,integral`                                                    |
//! | `bootstrap.csv`    | `bound,max_ratio,violations` (only with `diagnostics.bootstrap`)     |
//! | `fit.json`         | see [`crate::fit`]                                                   |
//! | `metadata.json`    | schema version, effective config, smallness norm, exit status        |

use crate::config::RunConfig;
use anyhow::{Context, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use wkg_core::data::{initial_state, smallness_norm};
use wkg_core::diagnostics::{Bound, BootstrapMonitor};
use wkg_core::energies::{energy_report, EnergyReport};
use wkg_core::regions::norms::XtAccumulator;
use wkg_core::regions::{all_region_masks, XtReport};
use wkg_core::tower::TimeTower;
use wkg_core::vectorfields::{apply_z, VectorField};
use wkg_core::{evolve, time_deriv_closure, Axis, ExitReason, Field, Grid, State};

/// Version of the artifact schemas above; bumped on any column change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub reason: String,
    pub t_final: f64,
    pub steps: usize,
    pub dt: f64,
    pub b_integral: f64,
    pub smallness_norm: f64,
    pub bootstrap_violations: Option<usize>,
    pub skipped_windows: Vec<String>,
}

impl RunSummary {
    pub fn blew_up(&self) -> bool {
        self.reason != ExitReason::Horizon.as_str()
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    schema_version: u32,
    generator: String,
    command: &'a str,
    config: &'a BTreeMap<String, String>,
    summary: &'a RunSummary,
    files: Vec<String>,
}

pub(crate) fn num(x: f64) -> String {
    format!("{x}")
}

pub(crate) fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn energy_header(cfg: &RunConfig) -> Vec<String> {
    let mut h = vec!["time".to_string(), "E".to_string()];
    h.extend((1..=cfg.energy.n_max).map(|k| format!("E{k}")));
    h.extend(["Evf", "Equasi", "A", "B"].map(String::from));
    h.extend(cfg.energy.ghost_s.iter().map(|s| format!("Eghost_S{s}")));
    h
}

fn energy_row(r: &EnergyReport) -> Vec<String> {
    let mut row = vec![num(r.time), num(r.e)];
    row.extend(r.en.iter().map(|&x| num(x)));
    row.extend([r.evf, r.equasi, r.a, r.b].map(num));
    row.extend(r.eghost.iter().map(|&(_, x)| num(x)));
    row
}

fn magnitude(parts: &[&Field]) -> Field {
    let mut out = Field::zeros(parts[0].n());
    for p in parts {
        out = out.zip_map(p, |a, b| a + b * b);
    }
    out.map(f64::sqrt)
}

/// `(t, T, S, kind, points, sup|∂u|, sup|∂v|, sup|Zu|)` for every region present at `s.time`.
fn region_rows(grid: &Grid, s: &State) -> wkg_core::Result<Vec<Vec<String>>> {
    let grad = |f: &Field, ft: &Field| magnitude(&[ft, &grid.d1(f, Axis::X1), &grid.d1(f, Axis::X2)]);
    let du = grad(&s.u, &s.ut);
    let dv = grad(&s.v, &s.vt);
    let tower = TimeTower::from_pair(s.time, s.u.clone(), s.ut.clone());
    let mut zu = Field::zeros(grid.n());
    for z in VectorField::ALL {
        let zf = apply_z(grid, z, &tower)?;
        zu = zu.zip_map(zf.value(), |a, b| a.max(b.abs()));
    }
    Ok(all_region_masks(grid, s.time)
        .into_iter()
        .map(|(id, m)| {
            vec![
                num(s.time),
                num(id.t_scale()),
                id.s_scale().map(num).unwrap_or_default(),
                id.kind.name().to_string(),
                m.count().to_string(),
                num(du.max_abs_masked(Some(&m))),
                num(dv.max_abs_masked(Some(&m))),
                num(zu.max_abs_masked(Some(&m))),
            ]
        })
        .collect())
}

/// One `X^T` window `[T, 2T]` fed with the solution's own snapshots.
struct XtWindow<'g> {
    t_exp: i32,
    acc: XtAccumulator<'g>,
}

fn xt_windows<'g>(grid: &'g Grid, cfg: &RunConfig, t_start: f64, skipped: &mut Vec<String>) -> Vec<XtWindow<'g>> {
    let t_end = t_start + cfg.evolution.horizon;
    let mut out = Vec::new();
    let mut t_exp = 0;
    while 2f64.powi(t_exp + 1) <= t_end + 1e-9 {
        if 2f64.powi(t_exp) >= t_start {
            match XtAccumulator::new(grid, t_exp, None) {
                Ok(acc) => out.push(XtWindow { t_exp, acc }),
                Err(e) => skipped.push(format!("T = {}: {e}", 2f64.powi(t_exp))),
            }
        }
        t_exp += 1;
    }
    out
}

fn xt_rows(reports: &[XtReport]) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let mut cells = Vec::new();
    let mut hyper = Vec::new();
    for r in reports {
        let big_t = num(2f64.powi(r.t_exp));
        for (c, v) in &r.cells {
            let s = if c.kind == wkg_core::regions::RegionKind::Shell { String::new() } else { num(c.s_scale()) };
            cells.push(vec![big_t.clone(), c.kind.name().to_string(), s, num(*v), num(r.energy_sup), num(r.hyperboloid_sup())]);
        }
        for (rho2, v) in &r.hyperboloids {
            hyper.push(vec![big_t.clone(), num(*rho2), num(*v)]);
        }
    }
    (cells, hyper)
}

/// Evolve `cfg` and write every artifact into `dir`.
pub fn execute(cfg: &RunConfig, dir: &Path, command: &str) -> Result<RunSummary> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let grid = cfg.build_grid();
    let data = initial_state(&grid, &cfg.data)?;
    let spec = cfg.evolution.spec;
    let smallness = smallness_norm(&grid, &data, cfg.diagnostics.smallness_h)?;
    let (steps, dt) = cfg.evolution.steps(&grid);
    let sample_gap = dt * cfg.evolution.snapshot_stride as f64;

    let mut skipped = Vec::new();
    let mut windows = if cfg.diagnostics.xt { xt_windows(&grid, cfg, data.time, &mut skipped) } else { Vec::new() };
    let mut monitor = match &cfg.diagnostics.bootstrap {
        Some(b) => Some(BootstrapMonitor::new(b.clone(), cfg.data.amplitude)?),
        None => None,
    };
    let mut energy = Vec::new();
    let mut regions = Vec::new();

    let mut observer = |g: &Grid, s: &State| -> wkg_core::Result<()> {
        energy.push(energy_row(&energy_report(g, s, &spec, &cfg.energy, cfg.evolution.truncation_t0)?));
        if cfg.diagnostics.regions {
            regions.extend(region_rows(g, s)?);
        }
        for w in windows.iter_mut() {
            let big_t = 2f64.powi(w.t_exp);
            if s.time >= big_t - sample_gap - 1e-12 && s.time <= 2.0 * big_t + sample_gap + 1e-12 {
                w.acc.push(s)?;
            }
        }
        if let Some(m) = monitor.as_mut() {
            if cfg.data.amplitude > 0.0 {
                m.observe(g, &time_deriv_closure(g, s, &spec, Bound::REQUIRED_CLOSURE + 1)?, None)?;
            }
        }
        Ok(())
    };
    let traj = evolve(&grid, &data, &cfg.evolution, &mut [&mut observer])?;

    let mut files = vec!["energy.csv".to_string()];
    write_csv(&dir.join("energy.csv"), &energy_header(cfg), &energy)?;
    if cfg.diagnostics.regions {
        let header = ["time", "T", "S", "kind", "points", "sup_du", "sup_dv", "sup_Zu"].map(String::from);
        write_csv(&dir.join("regions.csv"), &header, &regions)?;
        files.push("regions.csv".into());
    }
    if cfg.diagnostics.xt {
        let mut reports = Vec::new();
        for w in &windows {
            match w.acc.finish() {
                Ok(r) => reports.push(r),
                // a blow-up can end the run inside a window
                Err(e) => skipped.push(format!("T = {}: {e}", 2f64.powi(w.t_exp))),
            }
        }
        let (cells, hyper) = xt_rows(&reports);
        let header = ["T", "kind", "S", "cell_integral", "energy_sup", "hyperboloid_sup"].map(String::from);
        write_csv(&dir.join("region_norms.csv"), &header, &cells)?;
        write_csv(&dir.join("hyperboloids.csv"), &["T", "rho2", "integral"].map(String::from), &hyper)?;
        files.extend(["region_norms.csv".into(), "hyperboloids.csv".into()]);
    }
    let mut bootstrap_violations = None;
    if let Some(m) = &monitor {
        let violations = m.violations();
        let rows: Vec<Vec<String>> = m
            .max_ratios()
            .iter()
            .map(|(b, r)| {
                vec![b.name().to_string(), num(*r), violations.iter().filter(|v| v.bound == *b).count().to_string()]
            })
            .collect();
        write_csv(&dir.join("bootstrap.csv"), &["bound", "max_ratio", "violations"].map(String::from), &rows)?;
        files.push("bootstrap.csv".into());
        bootstrap_violations = Some(violations.len());
    }

    crate::fit::fit_dir(dir)?;
    files.extend(["fit.json".into(), "metadata.json".into()]);

    let summary = RunSummary {
        reason: traj.reason.as_str().to_string(),
        t_final: traj.t_final(),
        steps,
        dt,
        b_integral: traj.b_integral,
        smallness_norm: smallness,
        bootstrap_violations,
        skipped_windows: skipped,
    };
    let meta = Metadata {
        schema_version: SCHEMA_VERSION,
        generator: format!("wkg {}", env!("CARGO_PKG_VERSION")),
        command,
        config: &cfg.effective,
        summary: &summary,
        files,
    };
    write_json(&dir.join("metadata.json"), &meta)?;
    Ok(summary)
}

/// Root directory for run outputs: `--out`, else `$WKG_OUT`, else `wkg-out`.
pub fn output_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("WKG_OUT").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("wkg-out"))
}
