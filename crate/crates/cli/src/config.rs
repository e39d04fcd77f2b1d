//! Pipeline configuration: one JSON document drives every stage, so each
//! artifact can carry the hash of the exact configuration that produced it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use romclose::{Boundary, FomConfig, Grid1D, InitialCondition, ToySystem};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    pub domain_length: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcSpec {
    SinBump,
    StepProfile,
    Custom(Vec<f64>),
}

impl From<&IcSpec> for InitialCondition {
    fn from(spec: &IcSpec) -> Self {
        match spec {
            IcSpec::SinBump => InitialCondition::SinBump,
            IcSpec::StepProfile => InitialCondition::StepProfile,
            IcSpec::Custom(values) => InitialCondition::Custom(values.clone()),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FomSection {
    pub grid: GridSection,
    pub viscosity: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_stride: usize,
    pub initial_condition: IcSpec,
    #[serde(default = "default_true")]
    pub advection: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PodSection {
    pub rank: usize,
    pub centering: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomSection {
    pub r: usize,
    pub dt: f64,
    pub n_steps: usize,
}

/// Either a fixed ridge weight or the automatic policy
/// (1e-6 times the largest squared feature singular value).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RidgeSpec {
    Fixed(f64),
    Policy(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureSection {
    pub ridge: RidgeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatSpec {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<FormatSpec>,
}

fn default_toy_dt() -> f64 {
    1e-3
}

fn default_toy_steps() -> usize {
    20_000
}

fn default_toy_keep() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_matrix: Option<[[f64; 3]; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_tensor: Option<[[[f64; 3]; 3]; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<[f64; 3]>,
    #[serde(default = "default_toy_dt")]
    pub dt: f64,
    #[serde(default = "default_toy_steps")]
    pub n_steps: usize,
    #[serde(default = "default_toy_keep")]
    pub keep: usize,
}

impl Default for ToySection {
    fn default() -> Self {
        Self {
            a_matrix: None,
            b_tensor: None,
            initial: None,
            dt: default_toy_dt(),
            n_steps: default_toy_steps(),
            keep: default_toy_keep(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub fom: FomSection,
    pub pod: PodSection,
    pub rom: RomSection,
    pub closure: ClosureSection,
    pub output: OutputSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub toy: Option<ToySection>,
}

impl PipelineConfig {
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(
            self.fom.grid.n_points,
            self.fom.grid.domain_length,
            self.fom.grid.boundary,
        )
        .map_err(CliError::from)
    }

    pub fn fom_config(&self) -> FomConfig {
        FomConfig {
            viscosity: self.fom.viscosity,
            dt: self.fom.dt,
            n_steps: self.fom.n_steps,
            snapshot_stride: self.fom.snapshot_stride,
            initial_condition: (&self.fom.initial_condition).into(),
            advection: self.fom.advection,
        }
    }

    #[allow(clippy::needless_range_loop)]
    pub fn toy_system(&self) -> Result<ToySystem> {
        let section = self.toy.clone().unwrap_or_default();
        let default = ToySystem::shipped_default();
        let a_matrix = match section.a_matrix {
            Some(rows) => nalgebra::DMatrix::from_fn(3, 3, |i, j| rows[i][j]),
            None => default.a_matrix().clone(),
        };
        let b_tensor = match section.b_tensor {
            Some(blocks) => {
                let mut t = romclose::Tensor3::zeros(3);
                for i in 0..3 {
                    for m in 0..3 {
                        for n in 0..3 {
                            t.set(i, m, n, blocks[i][m][n]);
                        }
                    }
                }
                t
            }
            None => default.b_tensor().clone(),
        };
        let initial = match section.initial {
            Some(v) => nalgebra::DVector::from_vec(v.to_vec()),
            None => default.initial().clone(),
        };
        ToySystem::new(a_matrix, b_tensor, initial).map_err(CliError::from)
    }

    /// Semantic checks beyond the JSON schema, named by field path.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::ConfigInvalid(msg));
        if self.fom.grid.n_points < 3 {
            return fail("fom.grid.n_points must be at least 3".into());
        }
        if self.fom.grid.domain_length <= 0.0 || self.fom.grid.domain_length.is_nan() {
            return fail("fom.grid.domain_length must be positive".into());
        }
        if self.fom.viscosity <= 0.0 || self.fom.viscosity.is_nan() {
            return fail("fom.viscosity must be positive".into());
        }
        if self.fom.dt <= 0.0 || self.fom.dt.is_nan() {
            return fail("fom.dt must be positive".into());
        }
        if self.fom.snapshot_stride == 0 {
            return fail("fom.snapshot_stride must be at least 1".into());
        }
        if self.fom.n_steps < self.fom.snapshot_stride {
            return fail(
                "fom.n_steps must be at least fom.snapshot_stride (two snapshots needed)".into(),
            );
        }
        if let IcSpec::Custom(values) = &self.fom.initial_condition {
            if values.len() != self.fom.grid.n_points {
                return fail(format!(
                    "fom.initial_condition.custom has {} samples, fom.grid.n_points is {}",
                    values.len(),
                    self.fom.grid.n_points
                ));
            }
        }
        if self.pod.rank == 0 {
            return fail("pod.rank must be at least 1".into());
        }
        if self.rom.r == 0 {
            return fail("rom.r must be at least 1".into());
        }
        if self.rom.r > self.pod.rank {
            return fail(format!(
                "rom.r = {} must not exceed pod.rank = {}",
                self.rom.r, self.pod.rank
            ));
        }
        if self.rom.dt <= 0.0 || self.rom.dt.is_nan() {
            return fail("rom.dt must be positive".into());
        }
        if self.rom.n_steps == 0 {
            return fail("rom.n_steps must be at least 1".into());
        }
        match &self.closure.ridge {
            RidgeSpec::Fixed(v) if *v < 0.0 || !v.is_finite() => {
                return fail("closure.ridge must be non-negative and finite".into());
            }
            RidgeSpec::Policy(p) if p != "auto" => {
                return fail(format!(
                    "closure.ridge must be a number or \"auto\", got \"{p}\""
                ));
            }
            _ => {}
        }
        if self.output.formats.is_empty() {
            return fail("output.formats must list at least one format".into());
        }
        if let Some(toy) = &self.toy {
            if toy.dt <= 0.0 || toy.dt.is_nan() {
                return fail("toy.dt must be positive".into());
            }
            if toy.n_steps == 0 {
                return fail("toy.n_steps must be at least 1".into());
            }
            if toy.keep == 0 || toy.keep >= 3 {
                return fail("toy.keep must be 1 or 2".into());
            }
        }
        Ok(())
    }

    /// Hash of the effective configuration, stored as provenance in every
    /// artifact this run writes. The output section is excluded: where the
    /// artifacts land does not change what they contain.
    pub fn provenance_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value
            .as_object_mut()
            .expect("config is a JSON object")
            .remove("output");
        let canonical = serde_json::to_string(&value).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Applies one `--set KEY=VALUE` override onto the raw JSON document.
/// The value is parsed as JSON when possible, else taken as a string.
fn apply_override(root: &mut serde_json::Value, assignment: &str) -> Result<()> {
    let (path, raw_value) = assignment.split_once('=').ok_or_else(|| {
        CliError::ConfigInvalid(format!("--set expects KEY=VALUE, got \"{assignment}\""))
    })?;
    if path.is_empty() {
        return Err(CliError::ConfigInvalid(
            "--set key must not be empty".into(),
        ));
    }
    let value: serde_json::Value = serde_json::from_str(raw_value)
        .unwrap_or_else(|_| serde_json::Value::String(raw_value.to_string()));

    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (idx, segment) in segments.iter().enumerate() {
        let map = cursor.as_object_mut().ok_or_else(|| {
            CliError::ConfigInvalid(format!(
                "--set {path}: \"{}\" is not an object",
                segments[..idx].join(".")
            ))
        })?;
        if idx == segments.len() - 1 {
            map.insert((*segment).to_string(), value);
            return Ok(());
        }
        cursor = map
            .entry((*segment).to_string())
            .or_insert_with(|| serde_json::Value::Object(serde_json::Map::new()));
    }
    unreachable!("loop returns on the last segment");
}

/// Loads a config file, applies `--set` overrides and an optional output-dir
/// override, and validates the result.
pub fn load_config(
    path: &Path,
    overrides: &[String],
    out_dir: Option<&Path>,
) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::ConfigInvalid(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))?;
    for assignment in overrides {
        apply_override(&mut raw, assignment)?;
    }
    let mut config: PipelineConfig = serde_json::from_value(raw)
        .map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))?;
    if let Some(dir) = out_dir {
        config.output.dir = dir.to_path_buf();
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn sample_config_json() -> serde_json::Value {
        serde_json::json!({
            "fom": {
                "grid": {"n_points": 64, "domain_length": std::f64::consts::TAU, "boundary": "periodic"},
                "viscosity": 0.05,
                "dt": 0.001,
                "n_steps": 500,
                "snapshot_stride": 50,
                "initial_condition": "sin_bump"
            },
            "pod": {"rank": 6, "centering": true},
            "rom": {"r": 3, "dt": 0.001, "n_steps": 500},
            "closure": {"ridge": "auto"},
            "output": {"dir": "out", "formats": ["csv", "json"]}
        })
    }

    fn write_config(value: &serde_json::Value) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
        (dir, path)
    }

    #[test]
    fn parses_and_validates_sample_config() {
        let (_dir, path) = write_config(&sample_config_json());
        let config = load_config(&path, &[], None).unwrap();
        assert_eq!(config.pod.rank, 6);
        assert!(matches!(config.closure.ridge, RidgeSpec::Policy(ref p) if p == "auto"));
        assert!(config.fom.advection);
    }

    #[test]
    fn set_overrides_scalar_fields() {
        let (_dir, path) = write_config(&sample_config_json());
        let config = load_config(
            &path,
            &[
                "rom.r=2".to_string(),
                "closure.ridge=1e-7".to_string(),
                "fom.advection=false".to_string(),
            ],
            None,
        )
        .unwrap();
        assert_eq!(config.rom.r, 2);
        assert!(matches!(config.closure.ridge, RidgeSpec::Fixed(v) if v == 1e-7));
        assert!(!config.fom.advection);
    }

    #[test]
    fn rejects_rank_inversion_with_field_path() {
        let (_dir, path) = write_config(&sample_config_json());
        let err = load_config(&path, &["rom.r=10".to_string()], None).unwrap_err();
        match err {
            CliError::ConfigInvalid(msg) => {
                assert!(msg.contains("rom.r"), "message was: {msg}");
            }
            other => panic!("expected ConfigInvalid, got {other:?}"),
        }
        assert_eq!(
            load_config(&path, &["rom.r=10".to_string()], None)
                .unwrap_err()
                .exit_code(),
            2
        );
    }

    #[test]
    fn rejects_unknown_fields() {
        let mut value = sample_config_json();
        value["pod"]["extra_knob"] = serde_json::json!(1);
        let (_dir, path) = write_config(&value);
        assert!(matches!(
            load_config(&path, &[], None),
            Err(CliError::ConfigInvalid(_))
        ));
    }

    #[test]
    fn rejects_bad_ridge_policy() {
        let (_dir, path) = write_config(&sample_config_json());
        let err = load_config(&path, &["closure.ridge=\"kryptonite\"".to_string()], None)
            .unwrap_err();
        assert!(matches!(err, CliError::ConfigInvalid(_)));
    }

    #[test]
    fn provenance_hash_is_stable_and_sensitive() {
        let (_dir, path) = write_config(&sample_config_json());
        let a = load_config(&path, &[], None).unwrap().provenance_hash();
        let b = load_config(&path, &[], None).unwrap().provenance_hash();
        assert_eq!(a, b);
        let c = load_config(&path, &["rom.r=2".to_string()], None)
            .unwrap()
            .provenance_hash();
        assert_ne!(a, c);
    }

    #[test]
    fn out_dir_override_applies() {
        let (_dir, path) = write_config(&sample_config_json());
        let config = load_config(&path, &[], Some(Path::new("/tmp/elsewhere"))).unwrap();
        assert_eq!(config.output.dir, PathBuf::from("/tmp/elsewhere"));
    }
}
