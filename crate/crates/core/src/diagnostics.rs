//! Error metrics and machine-readable comparison reports.
//!
//! Errors are measured against the raw full-order snapshots, so the
//! projection-error floor is visible in every report. The in-space variant
//! exists for debugging and subtracts that floor by comparing against the
//! projected snapshot instead.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};
use crate::fom::SnapshotSet;
use crate::galerkin::RomTrajectory;
use crate::pod::PodBasis;

pub const REPORT_VERSION: &str = "romclose-report-v1";

/// One error value per snapshot time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ErrorSeries {
    pub fn time_averaged(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn terminal(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Run parameters recorded alongside a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub big_r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub viscosity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantErrors {
    pub label: String,
    pub series: ErrorSeries,
    pub time_averaged: f64,
    pub terminal: f64,
}

/// Aligned error series for several ROM variants plus summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub version: String,
    pub metadata: ReportMeta,
    pub variants: Vec<VariantErrors>,
    pub ratios: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Weighted L2 field error of a ROM trajectory against raw snapshots,
/// evaluated at every snapshot time (trajectory linearly interpolated).
pub fn field_error_series(
    basis: &PodBasis,
    traj: &RomTrajectory,
    snapshots: &SnapshotSet,
) -> Result<ErrorSeries> {
    error_series_impl(basis, traj, snapshots, false)
}

/// Debug variant: error against the projected snapshot, which removes the
/// projection-error floor.
pub fn in_space_error_series(
    basis: &PodBasis,
    traj: &RomTrajectory,
    snapshots: &SnapshotSet,
) -> Result<ErrorSeries> {
    error_series_impl(basis, traj, snapshots, true)
}

fn error_series_impl(
    basis: &PodBasis,
    traj: &RomTrajectory,
    snapshots: &SnapshotSet,
    against_projection: bool,
) -> Result<ErrorSeries> {
    if snapshots.grid() != basis.grid() {
        return Err(RomError::DimensionMismatch(
            "snapshot grid does not match basis grid".into(),
        ));
    }
    if traj.rank() > basis.rank() {
        return Err(RomError::RankTooLarge {
            requested: traj.rank(),
            available: basis.rank(),
        });
    }
    let grid = basis.grid();
    let mut values = Vec::with_capacity(snapshots.n_snapshots());
    for (j, &t) in snapshots.times().iter().enumerate() {
        let coeffs = traj.sample(t)?;
        let field = basis.reconstruct(&coeffs)?;
        let target = if against_projection {
            let projected = basis.project(&snapshots.snapshot(j), traj.rank())?;
            basis.reconstruct(&projected)?
        } else {
            snapshots.snapshot(j)
        };
        values.push(grid.weighted_norm(&(target - field)));
    }
    Ok(ErrorSeries {
        times: snapshots.times().to_vec(),
        values,
    })
}

fn label_rank(label: &str) -> (usize, String) {
    let rank = match label {
        "grom" => 0,
        "irom" => 1,
        "d2vms" => 2,
        "toy" => 3,
        _ => 4,
    };
    (rank, label.to_string())
}

fn ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator != 0.0 {
        numerator / denominator
    } else if numerator == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Assembles aligned per-variant series into one report.
///
/// Input order does not matter: variants are sorted canonically, so the
/// result is permutation-invariant. Time axes must match exactly.
pub fn compare(entries: &[(String, ErrorSeries)], metadata: ReportMeta) -> Result<ErrorReport> {
    if let Some((_, first)) = entries.first() {
        for (_, series) in entries.iter().skip(1) {
            if series.times.len() != first.times.len()
                || series
                    .times
                    .iter()
                    .zip(first.times.iter())
                    .any(|(a, b)| a != b)
            {
                return Err(RomError::MisalignedTimes);
            }
        }
    }
    for (label, series) in entries {
        if series.times.len() != series.values.len() {
            return Err(RomError::DimensionMismatch(format!(
                "series '{label}' has {} times and {} values",
                series.times.len(),
                series.values.len()
            )));
        }
        if series.values.iter().any(|&v| v < 0.0) {
            return Err(RomError::InvalidParameter(format!(
                "series '{label}' contains negative error values"
            )));
        }
    }

    let mut sorted: Vec<&(String, ErrorSeries)> = entries.iter().collect();
    sorted.sort_by_key(|(label, _)| label_rank(label));

    let variants: Vec<VariantErrors> = sorted
        .into_iter()
        .map(|(label, series)| VariantErrors {
            label: label.clone(),
            series: series.clone(),
            time_averaged: series.time_averaged(),
            terminal: series.terminal(),
        })
        .collect();

    let averaged = |name: &str| -> Option<f64> {
        variants
            .iter()
            .find(|v| v.label == name)
            .map(|v| v.time_averaged)
    };
    let mut ratios = BTreeMap::new();
    if let (Some(d2vms), Some(grom)) = (averaged("d2vms"), averaged("grom")) {
        ratios.insert("e_d2vms_over_e_grom".to_string(), ratio(d2vms, grom));
    }
    if let (Some(irom), Some(grom)) = (averaged("irom"), averaged("grom")) {
        ratios.insert("e_irom_over_e_grom".to_string(), ratio(irom, grom));
    }
    if let (Some(d2vms), Some(irom)) = (averaged("d2vms"), averaged("irom")) {
        ratios.insert("e_d2vms_over_e_irom".to_string(), ratio(d2vms, irom));
    }

    Ok(ErrorReport {
        version: REPORT_VERSION.to_string(),
        metadata,
        variants,
        ratios,
    })
}

/// 17 significant digits round-trip any f64 exactly.
fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a report as CSV (`time,variant,l2_error`) or versioned JSON.
pub fn emit(report: &ErrorReport, format: ReportFormat, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("time,variant,l2_error\n");
            for variant in &report.variants {
                for (t, v) in variant.series.times.iter().zip(variant.series.values.iter()) {
                    out.push_str(&format!(
                        "{},{},{}\n",
                        format_float(*t),
                        variant.label,
                        format_float(*v)
                    ));
                }
            }
            file.write_all(out.as_bytes())?;
        }
        ReportFormat::Json => {
            let text = serde_json::to_string_pretty(report)
                .map_err(|e| RomError::MalformedArtifact(e.to_string()))?;
            file.write_all(text.as_bytes())?;
            file.write_all(b"\n")?;
        }
    }
    Ok(())
}
