//! Flat result tables and their CSV encoding.
//!
//! Every table has a fixed header. Floats are written in shortest
//! round-trip form, so equal results give byte-identical text and parsing a
//! table recovers the written values exactly.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bag::{BagConfig, BagReport, MitLimit};
use crate::dirac::{density, RadialField, RadialSpinor};
use crate::error::{Error, Result};
use crate::gamma::GammaSweep;
use crate::soliton::{SolitonConfig, SolitonReport};

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn table_error(e: impl std::fmt::Display) -> Error {
    Error::Table(e.to_string())
}

/// Serializes rows with a header taken from the field names.
pub fn write_table<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(table_error)?;
    }
    let bytes = w.into_inner().map_err(table_error)?;
    String::from_utf8(bytes).map_err(table_error)
}

pub fn read_table<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(table_error))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagRow {
    #[serde(rename = "N")]
    pub quarks: usize,
    pub g: f64,
    pub m: f64,
    pub a: f64,
    pub b: f64,
    pub k: usize,
    #[serde(rename = "R_opt")]
    pub radius: f64,
    pub lambda: f64,
    pub energy: f64,
    pub curvature_residual: f64,
    pub bound: bool,
    pub boundary_minimum: bool,
}

pub fn bag_row(cfg: &BagConfig, report: &BagReport) -> BagRow {
    BagRow {
        quarks: cfg.quarks,
        g: cfg.g,
        m: cfg.m,
        a: cfg.a,
        b: cfg.b,
        k: cfg.level,
        radius: report.radius,
        lambda: report.lambda,
        energy: report.energy,
        curvature_residual: report.curvature_residual,
        bound: report.bound,
        boundary_minimum: report.boundary_minimum,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitLimitCsvRow {
    #[serde(rename = "N")]
    pub quarks: usize,
    pub m: f64,
    pub a: f64,
    pub b: f64,
    pub k: usize,
    #[serde(rename = "M_n")]
    pub mass: f64,
    #[serde(rename = "R_n")]
    pub radius: f64,
    pub l_n: f64,
    pub l_mit: f64,
    pub gap: f64,
    pub lambda: f64,
    /// Absent when the level is not bound.
    pub boundary_ratio: Option<f64>,
    pub bound: bool,
    pub boundary_minimum: bool,
}

pub fn mit_limit_rows(cfg: &BagConfig, limit: &MitLimit) -> Vec<MitLimitCsvRow> {
    limit
        .rows
        .iter()
        .map(|row| MitLimitCsvRow {
            quarks: cfg.quarks,
            m: cfg.m,
            a: cfg.a,
            b: cfg.b,
            k: cfg.level,
            mass: row.mass,
            radius: row.report.radius,
            l_n: row.report.energy,
            l_mit: limit.limit.energy,
            gap: row.gap,
            lambda: row.report.lambda,
            boundary_ratio: finite(row.report.boundary_ratio),
            bound: row.report.bound,
            boundary_minimum: row.report.boundary_minimum,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCsvRow {
    pub eps: f64,
    pub l_s_eps: f64,
    pub l_c_ref: f64,
    /// Absent when a level set is not crossed.
    pub interface_width: Option<f64>,
    pub l2_dist_to_char: f64,
    pub equipartition_ratio: f64,
    pub gap: f64,
    pub lambda: f64,
    pub fitted_radius: f64,
    pub liminf_surrogate: f64,
    pub min_liminf_margin: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn gamma_rows(sweep: &GammaSweep) -> Vec<GammaCsvRow> {
    sweep
        .rows
        .iter()
        .map(|r| GammaCsvRow {
            eps: r.eps,
            l_s_eps: r.energy,
            l_c_ref: r.reference,
            interface_width: finite(r.width),
            l2_dist_to_char: r.l2_distance,
            equipartition_ratio: r.equipartition,
            gap: r.gap,
            lambda: r.lambda,
            fitted_radius: r.fitted_radius,
            liminf_surrogate: r.liminf_surrogate,
            min_liminf_margin: r.min_liminf_margin,
            iterations: r.iterations,
            converged: r.converged,
        })
        .collect()
}

/// One soliton run. The CSV form has one `lambda_i` column per quark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonRow {
    pub g: f64,
    pub m: f64,
    pub levels: Vec<usize>,
    pub energy: f64,
    pub lambdas: Vec<f64>,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn soliton_row(cfg: &SolitonConfig, report: &SolitonReport) -> SolitonRow {
    SolitonRow {
        g: cfg.model.g,
        m: cfg.model.m,
        levels: cfg.model.levels.clone(),
        energy: report.energy,
        lambdas: report.lambdas.clone(),
        el_residual: report.el_residual,
        iterations: report.iterations,
        converged: report.converged,
    }
}

fn soliton_header(quarks: usize) -> Vec<String> {
    let mut h: Vec<String> = ["g", "m", "N", "k_list", "energy"]
        .map(String::from)
        .to_vec();
    h.extend((1..=quarks).map(|i| format!("lambda_{i}")));
    h.extend(["el_residual", "iterations", "converged"].map(String::from));
    h
}

/// All rows must share the quark count.
pub fn write_soliton_table(rows: &[SolitonRow]) -> Result<String> {
    let quarks = rows.first().map_or(0, |r| r.levels.len());
    if rows
        .iter()
        .any(|r| r.levels.len() != quarks || r.lambdas.len() != quarks)
    {
        return Err(Error::Table("rows disagree on the quark count".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(soliton_header(quarks))
        .map_err(table_error)?;
    let mut buf = ryu::Buffer::new();
    let mut float = |x: f64| -> String {
        if x.is_finite() {
            buf.format(x).to_string()
        } else {
            x.to_string()
        }
    };
    for r in rows {
        let mut rec = vec![
            float(r.g),
            float(r.m),
            quarks.to_string(),
            r.levels
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            float(r.energy),
        ];
        rec.extend(r.lambdas.iter().map(|&l| float(l)));
        rec.push(float(r.el_residual));
        rec.push(r.iterations.to_string());
        rec.push(r.converged.to_string());
        w.write_record(&rec).map_err(table_error)?;
    }
    let bytes = w.into_inner().map_err(table_error)?;
    String::from_utf8(bytes).map_err(table_error)
}

pub fn read_soliton_table(text: &str) -> Result<Vec<SolitonRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(table_error)?.clone();
    let quarks = header
        .len()
        .checked_sub(8)
        .ok_or_else(|| table_error("short header"))?;
    if header.iter().collect::<Vec<_>>() != soliton_header(quarks) {
        return Err(table_error("unexpected soliton header"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(table_error);
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(table_error)?;
            let levels = rec[3]
                .split(';')
                .map(|k| k.parse::<usize>().map_err(table_error))
                .collect::<Result<Vec<_>>>()?;
            Ok(SolitonRow {
                g: num(&rec[0])?,
                m: num(&rec[1])?,
                levels,
                energy: num(&rec[4])?,
                lambdas: (0..quarks)
                    .map(|i| num(&rec[5 + i]))
                    .collect::<Result<_>>()?,
                el_residual: num(&rec[5 + quarks])?,
                iterations: rec[6 + quarks].parse().map_err(table_error)?,
                converged: rec[7 + quarks].parse().map_err(table_error)?,
            })
        })
        .collect()
}

/// Long-format profile sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub series: String,
    pub r: f64,
    pub value: f64,
}

pub fn field_profile(series: &str, field: &RadialField) -> Vec<ProfileRow> {
    field
        .grid()
        .primal_nodes()
        .zip(field.values())
        .map(|(r, &value)| ProfileRow {
            series: series.to_string(),
            r,
            value,
        })
        .collect()
}

/// `v² − u²` on the primal nodes.
pub fn density_profile(series: &str, psi: &RadialSpinor) -> Vec<ProfileRow> {
    field_profile(series, &density(psi))
}
