//! Artifact persistence: JSON sidecar plus raw little-endian f64 binary.
//!
//! Every artifact is a two-file pair sharing a path stem: `<stem>.json`
//! holds metadata (with a version field readers must match exactly) and
//! `<stem>.bin` holds the numeric payload as little-endian 64-bit floats.
//! Matrices are stored column-major; operator tensors i-major, then m,
//! then n. Writing is deterministic: identical inputs produce identical
//! bytes.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::closure::ClosureOperators;
use crate::error::{Result, RomError};
use crate::fom::SnapshotSet;
use crate::galerkin::{RomLabel, RomOperators, RomTrajectory};
use crate::grid::{Boundary, Grid1D};
use crate::pod::PodBasis;
use crate::tensor::Tensor3;

pub const SNAPSHOT_VERSION: &str = "romclose-snap-v1";
pub const BASIS_VERSION: &str = "romclose-basis-v1";
pub const OPERATORS_VERSION: &str = "romclose-ops-v1";
pub const CLOSURE_VERSION: &str = "romclose-closure-v1";
pub const TRAJECTORY_VERSION: &str = "romclose-traj-v1";

const ENDIANNESS: &str = "little";

/// Sidecar and binary paths for a stem.
pub fn artifact_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

/// True when both files of the pair exist.
pub fn artifact_exists(stem: &Path) -> bool {
    let (json, bin) = artifact_paths(stem);
    json.is_file() && bin.is_file()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridMeta {
    n_points: usize,
    domain_length: f64,
    boundary: Boundary,
}

impl From<&Grid1D> for GridMeta {
    fn from(grid: &Grid1D) -> Self {
        Self {
            n_points: grid.n_points(),
            domain_length: grid.domain_length(),
            boundary: grid.boundary(),
        }
    }
}

impl GridMeta {
    fn build(&self) -> Result<Grid1D> {
        Grid1D::new(self.n_points, self.domain_length, self.boundary)
    }
}

fn write_f64_file(path: &Path, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, buf)?;
    Ok(())
}

fn read_f64_file(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() != expected_len * 8 {
        return Err(RomError::MalformedArtifact(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            expected_len * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunked to 8 bytes")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RomError::MalformedArtifact(format!(
            "{} contains non-finite values",
            path.display()
        )));
    }
    Ok(values)
}

fn write_sidecar<T: Serialize>(path: &Path, sidecar: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(sidecar)
        .map_err(|e| RomError::MalformedArtifact(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn load_sidecar<T: DeserializeOwned>(path: &Path, expected_version: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| RomError::MalformedArtifact(format!("{}: {e}", path.display())))?;
    let found = value
        .get("version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            RomError::MalformedArtifact(format!("{} has no version field", path.display()))
        })?;
    if found != expected_version {
        return Err(RomError::VersionMismatch {
            expected: expected_version.to_string(),
            found: found.to_string(),
        });
    }
    let endianness = value.get("endianness").and_then(|v| v.as_str());
    if endianness != Some(ENDIANNESS) {
        return Err(RomError::MalformedArtifact(format!(
            "{} declares unsupported endianness {endianness:?}",
            path.display()
        )));
    }
    serde_json::from_value(value)
        .map_err(|e| RomError::MalformedArtifact(format!("{}: {e}", path.display())))
}

fn data_path(stem: &Path, sidecar_file: &str) -> PathBuf {
    match stem.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent.join(sidecar_file),
        _ => PathBuf::from(sidecar_file),
    }
}

fn bin_name(bin: &Path) -> String {
    bin.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data.bin".to_string())
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotSidecar {
    version: String,
    endianness: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
    grid: GridMeta,
    times: Vec<f64>,
    n_points: usize,
    n_snapshots: usize,
    /// Field matrix layout in the binary file.
    layout: String,
    data_file: String,
}

pub fn save_snapshots(
    snapshots: &SnapshotSet,
    stem: &Path,
    provenance: Option<&str>,
) -> Result<()> {
    let (json, bin) = artifact_paths(stem);
    let sidecar = SnapshotSidecar {
        version: SNAPSHOT_VERSION.to_string(),
        endianness: ENDIANNESS.to_string(),
        provenance: provenance.map(str::to_string),
        grid: snapshots.grid().into(),
        times: snapshots.times().to_vec(),
        n_points: snapshots.grid().n_points(),
        n_snapshots: snapshots.n_snapshots(),
        layout: "column_major".to_string(),
        data_file: bin_name(&bin),
    };
    write_f64_file(&bin, snapshots.fields().as_slice().iter().copied())?;
    write_sidecar(&json, &sidecar)
}

pub fn load_snapshots(stem: &Path) -> Result<SnapshotSet> {
    let (json, _) = artifact_paths(stem);
    let sidecar: SnapshotSidecar = load_sidecar(&json, SNAPSHOT_VERSION)?;
    let grid = sidecar.grid.build()?;
    let n = sidecar.n_points;
    let m = sidecar.n_snapshots;
    if grid.n_points() != n || sidecar.times.len() != m {
        return Err(RomError::MalformedArtifact(
            "snapshot sidecar dimensions are inconsistent".into(),
        ));
    }
    let data = read_f64_file(&data_path(stem, &sidecar.data_file), n * m)?;
    let fields = DMatrix::from_column_slice(n, m, &data);
    SnapshotSet::new(grid, sidecar.times, fields)
}

// ---------------------------------------------------------------------------
// POD basis
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct BasisSidecar {
    version: String,
    endianness: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
    grid: GridMeta,
    rank: usize,
    singular_values: Vec<f64>,
    centered: bool,
    /// Binary payload: modes column-major, then the mean field if centered.
    layout: String,
    data_file: String,
}

pub fn save_basis(basis: &PodBasis, stem: &Path, provenance: Option<&str>) -> Result<()> {
    let (json, bin) = artifact_paths(stem);
    let sidecar = BasisSidecar {
        version: BASIS_VERSION.to_string(),
        endianness: ENDIANNESS.to_string(),
        provenance: provenance.map(str::to_string),
        grid: basis.grid().into(),
        rank: basis.rank(),
        singular_values: basis.singular_values().iter().copied().collect(),
        centered: basis.is_centered(),
        layout: "modes_column_major_then_mean".to_string(),
        data_file: bin_name(&bin),
    };
    let modes = basis.modes().as_slice().iter().copied();
    match basis.mean_field() {
        Some(mean) => write_f64_file(&bin, modes.chain(mean.iter().copied()))?,
        None => write_f64_file(&bin, modes)?,
    }
    write_sidecar(&json, &sidecar)
}

pub fn load_basis(stem: &Path) -> Result<PodBasis> {
    let (json, _) = artifact_paths(stem);
    let sidecar: BasisSidecar = load_sidecar(&json, BASIS_VERSION)?;
    let grid = sidecar.grid.build()?;
    let n = grid.n_points();
    let r = sidecar.rank;
    let expected = n * r + if sidecar.centered { n } else { 0 };
    let data = read_f64_file(&data_path(stem, &sidecar.data_file), expected)?;
    let modes = DMatrix::from_column_slice(n, r, &data[..n * r]);
    let mean = sidecar
        .centered
        .then(|| DVector::from_column_slice(&data[n * r..]));
    PodBasis::from_parts(
        grid,
        modes,
        DVector::from_vec(sidecar.singular_values),
        mean,
    )
}

// ---------------------------------------------------------------------------
// ROM operators
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct OperatorsSidecar {
    version: String,
    endianness: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
    r: usize,
    viscosity: f64,
    centered: bool,
    /// Binary payload: A (i-major), B (i-major, then m, then n), then the
    /// mean coupling matrix (i-major) and forcing vector when centered.
    layout: String,
    data_file: String,
}

pub fn save_operators(ops: &RomOperators, stem: &Path, provenance: Option<&str>) -> Result<()> {
    if !ops.viscosity().is_finite() {
        return Err(RomError::InvalidParameter(
            "operators without a finite viscosity cannot be persisted".into(),
        ));
    }
    let (json, bin) = artifact_paths(stem);
    let r = ops.r();
    let sidecar = OperatorsSidecar {
        version: OPERATORS_VERSION.to_string(),
        endianness: ENDIANNESS.to_string(),
        provenance: provenance.map(str::to_string),
        r,
        viscosity: ops.viscosity(),
        centered: ops.is_centered(),
        layout: "a_imajor_b_imn_then_mean_terms".to_string(),
        data_file: bin_name(&bin),
    };
    let mut values: Vec<f64> = Vec::with_capacity(r * r + r * r * r + r * r + r);
    for i in 0..r {
        for m in 0..r {
            values.push(ops.a_matrix()[(i, m)]);
        }
    }
    values.extend(ops.b_tensor().iter());
    if let (Some(coupling), Some(forcing)) = (ops.mean_coupling(), ops.mean_forcing()) {
        for i in 0..r {
            for m in 0..r {
                values.push(coupling[(i, m)]);
            }
        }
        values.extend(forcing.iter().copied());
    }
    write_f64_file(&bin, values.into_iter())?;
    write_sidecar(&json, &sidecar)
}

pub fn load_operators(stem: &Path) -> Result<RomOperators> {
    let (json, _) = artifact_paths(stem);
    let sidecar: OperatorsSidecar = load_sidecar(&json, OPERATORS_VERSION)?;
    let r = sidecar.r;
    let base = r * r + r * r * r;
    let expected = base + if sidecar.centered { r * r + r } else { 0 };
    let data = read_f64_file(&data_path(stem, &sidecar.data_file), expected)?;

    let mut a_matrix = DMatrix::zeros(r, r);
    for i in 0..r {
        for m in 0..r {
            a_matrix[(i, m)] = data[i * r + m];
        }
    }
    let b_tensor = Tensor3::from_flat(r, data[r * r..base].to_vec())
        .ok_or_else(|| RomError::MalformedArtifact("tensor block size mismatch".into()))?;
    let (mean_coupling, mean_forcing) = if sidecar.centered {
        let mut coupling = DMatrix::zeros(r, r);
        for i in 0..r {
            for m in 0..r {
                coupling[(i, m)] = data[base + i * r + m];
            }
        }
        let forcing = DVector::from_column_slice(&data[base + r * r..]);
        (Some(coupling), Some(forcing))
    } else {
        (None, None)
    };
    Ok(
        RomOperators::from_parts(a_matrix, b_tensor, mean_coupling, mean_forcing)
            .with_viscosity(sidecar.viscosity),
    )
}

// ---------------------------------------------------------------------------
// Closure operators
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ClosureSidecar {
    version: String,
    endianness: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
    r: usize,
    ridge_lambda: f64,
    residual_rel: f64,
    condition: f64,
    /// Binary payload: A~ (i-major) then B~ (i-major, then m, then n).
    layout: String,
    data_file: String,
}

pub fn save_closure(
    closure: &ClosureOperators,
    stem: &Path,
    provenance: Option<&str>,
) -> Result<()> {
    let (json, bin) = artifact_paths(stem);
    let r = closure.r();
    let condition = if closure.condition().is_finite() {
        closure.condition()
    } else {
        // JSON has no Inf; an impossible condition value marks "unbounded".
        -1.0
    };
    let sidecar = ClosureSidecar {
        version: CLOSURE_VERSION.to_string(),
        endianness: ENDIANNESS.to_string(),
        provenance: provenance.map(str::to_string),
        r,
        ridge_lambda: closure.ridge_lambda(),
        residual_rel: closure.residual_rel(),
        condition,
        layout: "a_imajor_b_imn".to_string(),
        data_file: bin_name(&bin),
    };
    let mut values: Vec<f64> = Vec::with_capacity(r * r + r * r * r);
    for i in 0..r {
        for m in 0..r {
            values.push(closure.a_tilde()[(i, m)]);
        }
    }
    values.extend(closure.b_tilde().iter());
    write_f64_file(&bin, values.into_iter())?;
    write_sidecar(&json, &sidecar)
}

pub fn load_closure(stem: &Path) -> Result<ClosureOperators> {
    let (json, _) = artifact_paths(stem);
    let sidecar: ClosureSidecar = load_sidecar(&json, CLOSURE_VERSION)?;
    let r = sidecar.r;
    let data = read_f64_file(&data_path(stem, &sidecar.data_file), r * r + r * r * r)?;
    let mut a_tilde = DMatrix::zeros(r, r);
    for i in 0..r {
        for m in 0..r {
            a_tilde[(i, m)] = data[i * r + m];
        }
    }
    let b_tilde = Tensor3::from_flat(r, data[r * r..].to_vec())
        .ok_or_else(|| RomError::MalformedArtifact("tensor block size mismatch".into()))?;
    let condition = if sidecar.condition < 0.0 {
        f64::INFINITY
    } else {
        sidecar.condition
    };
    ClosureOperators::from_parts(
        a_tilde,
        b_tilde,
        sidecar.ridge_lambda,
        sidecar.residual_rel,
        condition,
    )
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TrajectorySidecar {
    version: String,
    endianness: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
    label: RomLabel,
    r: usize,
    times: Vec<f64>,
    /// Binary payload: one frame of `r` coefficients per time point.
    layout: String,
    data_file: String,
}

pub fn save_trajectory(
    traj: &RomTrajectory,
    stem: &Path,
    provenance: Option<&str>,
) -> Result<()> {
    let (json, bin) = artifact_paths(stem);
    let r = traj.rank();
    let sidecar = TrajectorySidecar {
        version: TRAJECTORY_VERSION.to_string(),
        endianness: ENDIANNESS.to_string(),
        provenance: provenance.map(str::to_string),
        label: traj.label(),
        r,
        times: traj.times().to_vec(),
        layout: "frame_major".to_string(),
        data_file: bin_name(&bin),
    };
    let n_rows = traj.coeffs().nrows();
    let mut values = Vec::with_capacity(n_rows * r);
    for j in 0..n_rows {
        for i in 0..r {
            values.push(traj.coeffs()[(j, i)]);
        }
    }
    write_f64_file(&bin, values.into_iter())?;
    write_sidecar(&json, &sidecar)
}

pub fn load_trajectory(stem: &Path) -> Result<RomTrajectory> {
    let (json, _) = artifact_paths(stem);
    let sidecar: TrajectorySidecar = load_sidecar(&json, TRAJECTORY_VERSION)?;
    let r = sidecar.r;
    let m = sidecar.times.len();
    let data = read_f64_file(&data_path(stem, &sidecar.data_file), m * r)?;
    let mut coeffs = DMatrix::zeros(m, r);
    for j in 0..m {
        for i in 0..r {
            coeffs[(j, i)] = data[j * r + i];
        }
    }
    RomTrajectory::from_parts(sidecar.times, coeffs, sidecar.label)
}
