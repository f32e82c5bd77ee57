//! Exponent fits over a run directory's CSVs.
//!
//! `fit.json` holds
//! `{schema_version, records: [{name, exponents, r2, cells}], errors: [{name, message}]}`
//! with three records:
//!
//! * `wave_gradient_decay`: `sup|∂u| ≈ c·T^a_T·S^a_S` over interior cells,
//!   sampled at the snapshot closest to the window mid-time `1.5·T`;
//! * `kg_gradient_decay`: `sup_x|∂v| ≈ c·t^p` over snapshots with `t ≥ 1`;
//! * `energy_growth`: `Evf ≈ c·t^p` (log-log slope, `t ≥ 1`).
//!
//! A record that cannot be fitted (too few cells, zero data) is listed under
//! `errors` instead. `fit_cells.csv` repeats the decay cells as a table.

use crate::run::{num, write_csv, write_json, SCHEMA_VERSION};
use anyhow::{bail, Context, Result};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use wkg_core::diagnostics::{decay_fit, growth_exponent, power_fit};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Cell {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Record {
    pub name: String,
    pub exponents: BTreeMap<String, f64>,
    pub r2: Option<f64>,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FitError {
    pub name: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FitReport {
    pub schema_version: u32,
    pub records: Vec<Record>,
    pub errors: Vec<FitError>,
}

/// A CSV read as rows of named columns.
struct Table {
    rows: Vec<HashMap<String, String>>,
}

impl Table {
    fn read(path: &Path, required: &[&str]) -> Result<Table> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        for col in required {
            if !header.iter().any(|h| h == col) {
                bail!("{}: missing column `{col}`", path.display());
            }
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            rows.push(header.iter().cloned().zip(rec.iter().map(String::from)).collect());
        }
        Ok(Table { rows })
    }
}

fn field(row: &HashMap<String, String>, col: &str) -> Result<f64> {
    let raw = &row[col];
    raw.parse().with_context(|| format!("column `{col}`: `{raw}` is not a number"))
}

fn wave_decay(regions: &Table) -> Result<Record> {
    let mut times: Vec<f64> = regions.rows.iter().map(|r| field(r, "time")).collect::<Result<_>>()?;
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut samples = Vec::new();
    let mut cells = Vec::new();
    let mut big_t = 1.0;
    while let Some(&t_max) = times.last() {
        if 1.5 * big_t > t_max + 0.25 * big_t {
            break;
        }
        let mid = 1.5 * big_t;
        let nearest = times.iter().cloned().min_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs())).unwrap();
        if (nearest - mid).abs() <= 0.25 * big_t {
            for r in &regions.rows {
                if r["kind"] == "interior" && field(r, "time")? == nearest && field(r, "T")? == big_t {
                    let (s, v) = (field(r, "S")?, field(r, "sup_du")?);
                    if v > 0.0 {
                        samples.push((big_t, s, v));
                        cells.push(Cell { t: big_t, s: Some(s), value: v });
                    }
                }
            }
        }
        big_t *= 2.0;
    }
    let fit = decay_fit(&samples)?;
    Ok(Record {
        name: "wave_gradient_decay".into(),
        exponents: BTreeMap::from([("a_T".to_string(), fit.a_t), ("a_S".to_string(), fit.a_s)]),
        r2: Some(fit.r2),
        cells,
    })
}

fn kg_decay(regions: &Table) -> Result<Record> {
    let mut sup: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for r in &regions.rows {
        let (t, v) = (field(r, "time")?, field(r, "sup_dv")?);
        let e = sup.entry(t.to_bits()).or_insert((t, 0.0));
        e.1 = e.1.max(v);
    }
    let series: Vec<(f64, f64)> = sup.into_values().filter(|&(t, v)| t >= 1.0 && v > 0.0).collect();
    let (p, _, r2) = power_fit(&series)?;
    Ok(Record {
        name: "kg_gradient_decay".into(),
        exponents: BTreeMap::from([("p".to_string(), p)]),
        r2: Some(r2),
        cells: Vec::new(),
    })
}

fn energy_growth(energy: &Table) -> Result<Record> {
    let series: Vec<(f64, f64)> =
        energy.rows.iter().map(|r| Ok((field(r, "time")?, field(r, "Evf")?))).collect::<Result<Vec<_>>>()?;
    let series: Vec<(f64, f64)> = series.into_iter().filter(|&(t, _)| t >= 1.0).collect();
    let p = growth_exponent(&series)?;
    Ok(Record {
        name: "energy_growth".into(),
        exponents: BTreeMap::from([("p".to_string(), p)]),
        r2: None,
        cells: Vec::new(),
    })
}

/// Fit everything available in `dir` and write `fit.json` and `fit_cells.csv`.
pub fn fit_dir(dir: &Path) -> Result<FitReport> {
    let energy = Table::read(&dir.join("energy.csv"), &["time", "Evf"])?;
    let regions_path = dir.join("regions.csv");
    let regions = if regions_path.exists() {
        Some(Table::read(&regions_path, &["time", "T", "S", "kind", "sup_du", "sup_dv"])?)
    } else {
        None
    };
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut attempt = |name: &str, r: Result<Record>| match r {
        Ok(rec) => records.push(rec),
        Err(e) => errors.push(FitError { name: name.to_string(), message: format!("{e:#}") }),
    };
    match &regions {
        Some(t) => {
            attempt("wave_gradient_decay", wave_decay(t));
            attempt("kg_gradient_decay", kg_decay(t));
        }
        None => {
            for name in ["wave_gradient_decay", "kg_gradient_decay"] {
                attempt(name, Err(anyhow::anyhow!("no regions.csv in this directory")));
            }
        }
    }
    attempt("energy_growth", energy_growth(&energy));
    let report = FitReport { schema_version: SCHEMA_VERSION, records, errors };
    write_json(&dir.join("fit.json"), &report)?;
    let cell_rows: Vec<Vec<String>> = report
        .records
        .iter()
        .flat_map(|r| {
            r.cells.iter().map(|c| vec![r.name.clone(), num(c.t), c.s.map(num).unwrap_or_default(), num(c.value)])
        })
        .collect();
    write_csv(&dir.join("fit_cells.csv"), &["record", "T", "S", "value"].map(String::from), &cell_rows)?;
    Ok(report)
}
