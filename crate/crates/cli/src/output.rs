//! CSV tables and the run manifest.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use mdi_spdc::pnd::SourceSetting;
use mdi_spdc::presets::{DistributionRow, Figure};
use mdi_spdc::protocol::{Intensity, ModelOptions, SystemParams};
use mdi_spdc::sweep::{SweepPoint, SweepSpec};
use mdi_spdc::verify::VerifyReport;
use serde::Serialize;

pub const CURVE_HEADER: [&str; 9] = [
    "distance_km",
    "rate",
    "branch",
    "alpha_star",
    "y11_lower",
    "e11_upper",
    "q_z",
    "e_z",
    "feasible",
];

/// Shortest round-trip representation, independent of locale.
fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn curve_record(p: &SweepPoint) -> [String; 9] {
    let mut rec: [String; 9] = Default::default();
    rec[0] = num(p.distance_km);
    if let Some(e) = &p.evaluation {
        rec[1] = num(e.rate.rate);
        rec[2] = e
            .rate
            .branch
            .map(|b| b.label().to_string())
            .unwrap_or_default();
        rec[3] = e.rate.alpha_star.map(num).unwrap_or_default();
        rec[4] = num(e.bounds.y11_lower);
        rec[5] = num(e.bounds.e11_upper);
        rec[6] = num(e.q_z);
        rec[7] = num(e.e_z);
    }
    rec[8] = p.feasible.to_string();
    rec
}

pub fn write_curve(path: &Path, points: &[SweepPoint]) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(CURVE_HEADER)?;
    for p in points {
        w.write_record(curve_record(p))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_distribution(path: &Path, rows: &[DistributionRow]) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["n", "spdcs", "poisson"])?;
    for r in rows {
        w.write_record([r.n.to_string(), num(r.spdcs), num(r.poisson)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Figure>,
    pub system: SystemParams,
    pub options: ModelOptions,
    pub curves: Vec<CurveEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub unavailable: Vec<Unavailable>,
    pub oracle_checks: Vec<CheckSummary>,
}

#[derive(Debug, Serialize)]
pub struct CurveEntry {
    pub name: String,
    pub file: String,
    pub spec: SweepSpec,
    pub rows: usize,
    pub feasible_rows: usize,
    /// Intensities picked at each distance when the spec searches.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub chosen: Vec<Chosen>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<RowFailure>,
}

#[derive(Debug, Serialize)]
pub struct Chosen {
    pub distance_km: f64,
    pub signal: Intensity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoy: Option<Intensity>,
}

#[derive(Debug, Serialize)]
pub struct RowFailure {
    pub distance_km: f64,
    pub error: String,
}

#[derive(Debug, Serialize)]
pub struct DistributionEntry {
    pub file: String,
    pub n_top: usize,
    pub source: SourceSetting,
    pub wcs_mean: f64,
}

#[derive(Debug, Serialize)]
pub struct Unavailable {
    pub curve: &'static str,
    pub reason: &'static str,
}

#[derive(Debug, Serialize)]
pub struct CheckSummary {
    pub family: String,
    pub passed: bool,
    pub cases: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
}

pub fn summarize(report: &VerifyReport) -> Vec<CheckSummary> {
    report
        .families
        .iter()
        .map(|f| CheckSummary {
            family: f.name.clone(),
            passed: f.passed,
            cases: f.cases,
            worst_residual: f.worst_residual,
            tolerance: f.tolerance,
        })
        .collect()
}

pub fn curve_entry(
    name: &str,
    file: String,
    spec: &SweepSpec,
    points: &[SweepPoint],
) -> CurveEntry {
    let searched = spec.search.decoy.is_some() || spec.search.signal.is_some();
    CurveEntry {
        name: name.to_string(),
        file,
        spec: spec.clone(),
        rows: points.len(),
        feasible_rows: points.iter().filter(|p| p.feasible).count(),
        chosen: if searched {
            points
                .iter()
                .filter_map(|p| {
                    p.evaluation.as_ref().map(|e| Chosen {
                        distance_km: p.distance_km,
                        signal: e.config.signal,
                        decoy: e.config.decoy,
                    })
                })
                .collect()
        } else {
            Vec::new()
        },
        failures: points
            .iter()
            .filter(|p| p.evaluation.is_none())
            .map(|p| RowFailure {
                distance_km: p.distance_km,
                error: p.error.clone().unwrap_or_default(),
            })
            .collect(),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
