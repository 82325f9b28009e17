//! Artifact persistence: datasets, catalogs, models, and reports.
//!
//! Every artifact file is a JSON object `{ "manifest": …, "payload": … }`.
//! The manifest records the producing command, its full configuration, and
//! wall-clock timestamps; the payload holds the data itself and contains no
//! timestamps, so identical runs produce byte-identical payloads. Writes go
//! through a temp file in the target directory followed by a rename, so a
//! failed run never leaves a partial artifact behind.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::EvaluationReport;
use crate::explorer::{ExplorationConfig, Terminated};
use crate::learners::TrainedPredictor;
use crate::problem::{ParameterSpace, ParametricProblem};
use crate::strategy::{Strategy, StrategyCatalog};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed artifact {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("serialization failed: {0}")]
    Encode(#[from] serde_json::Error),
}

/// Provenance attached to every artifact file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, inputs: Vec<String>) -> Self {
        let now = unix_now();
        RunManifest {
            command: command.into(),
            config,
            inputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: now,
            finished_unix: now,
        }
    }

    pub fn finish(mut self) -> Self {
        self.finished_unix = unix_now();
        self
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub manifest: RunManifest,
    pub payload: T,
}

/// Atomically write an artifact (temp file + rename in the target directory).
pub fn save_artifact<T: Serialize>(
    path: &Path,
    manifest: RunManifest,
    payload: &T,
) -> Result<(), PersistError> {
    let doc = serde_json::json!({
        "manifest": manifest.finish(),
        "payload": payload,
    });
    let bytes = serde_json::to_vec_pretty(&doc)?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| PersistError::Io { path: path.display().to_string(), source: e })?;
    tmp.write_all(&bytes)
        .map_err(|e| PersistError::Io { path: path.display().to_string(), source: e })?;
    tmp.persist(path)
        .map_err(|e| PersistError::Io { path: path.display().to_string(), source: e.error })?;
    Ok(())
}

pub fn load_artifact<T: DeserializeOwned>(path: &Path) -> Result<Artifact<T>, PersistError> {
    let bytes = fs::read(path)
        .map_err(|e| PersistError::Io { path: path.display().to_string(), source: e })?;
    serde_json::from_slice(&bytes)
        .map_err(|e| PersistError::Json { path: path.display().to_string(), source: e })
}

/// Canonical payload bytes of an artifact file: the payload value
/// re-serialized without the manifest. Used for determinism comparisons
/// (timestamps live only in the manifest).
pub fn payload_bytes(path: &Path) -> Result<Vec<u8>, PersistError> {
    let doc: serde_json::Value = serde_json::from_slice(
        &fs::read(path)
            .map_err(|e| PersistError::Io { path: path.display().to_string(), source: e })?,
    )
    .map_err(|e| PersistError::Json { path: path.display().to_string(), source: e })?;
    Ok(serde_json::to_vec(&doc["payload"])?)
}

/// One catalog record in the stable on-disk layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub label: u32,
    pub tight_rows: Vec<u32>,
    pub integer_values: Vec<i64>,
    pub count: u64,
}

/// Ordered catalog records (label order), stable across versions.
pub fn catalog_records(catalog: &StrategyCatalog) -> Vec<CatalogRecord> {
    catalog
        .strategies()
        .iter()
        .zip(catalog.counts())
        .enumerate()
        .map(|(label, (s, &count))| CatalogRecord {
            label: label as u32,
            tight_rows: s.tight_rows.clone(),
            integer_values: s.integer_values.clone(),
            count,
        })
        .collect()
}

/// Rebuild a catalog from its records (labels must be dense and ordered).
pub fn catalog_from_records(records: &[CatalogRecord]) -> StrategyCatalog {
    let mut catalog = StrategyCatalog::new();
    for rec in records {
        let strategy =
            Strategy { tight_rows: rec.tight_rows.clone(), integer_values: rec.integer_values.clone() };
        let (label, is_new) = catalog.insert(strategy.clone());
        debug_assert!(is_new && label == rec.label);
        for _ in 1..rec.count {
            catalog.insert(strategy.clone());
        }
    }
    catalog
}

/// Dataset artifact payload: exploration header plus (θ, label) rows and the
/// catalog that defines the labels. Embeds the problem so downstream stages
/// are self-contained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    pub problem_id: String,
    pub problem: ParametricProblem,
    pub space: ParameterSpace,
    pub exploration: ExplorationConfig,
    pub n: u64,
    pub n_strategies: u32,
    pub good_turing: f64,
    pub bound_value: f64,
    pub terminated_by: Terminated,
    pub samples: Vec<(Vec<f64>, u32)>,
    pub catalog: Vec<CatalogRecord>,
}

/// Standalone catalog artifact payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogFile {
    pub problem_id: String,
    pub records: Vec<CatalogRecord>,
}

/// Model artifact payload: the predictor plus everything the online path
/// needs (problem, space, catalog, exploration header).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub problem_id: String,
    pub problem: ParametricProblem,
    pub space: ParameterSpace,
    pub catalog: Vec<CatalogRecord>,
    pub predictor: TrainedPredictor,
    pub n_train: u64,
    pub good_turing: f64,
}

/// Report artifact payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub report: EvaluationReport,
    pub table: String,
}

/// Cost section of a problem description file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostSection {
    #[serde(default)]
    pub quadratic: Vec<crate::problem::QuadTerm>,
    #[serde(default)]
    pub linear: Vec<(usize, crate::problem::Coeff)>,
    #[serde(default = "zero_coeff")]
    pub constant: crate::problem::Coeff,
}

impl Default for CostSection {
    fn default() -> Self {
        CostSection { quadratic: Vec::new(), linear: Vec::new(), constant: zero_coeff() }
    }
}

fn zero_coeff() -> crate::problem::Coeff {
    crate::problem::Coeff::constant(0.0)
}

/// User-facing problem description file: a symbolic model plus its parameter
/// space, in sections `variables` / `cost` / `constraints` / `max_terms` /
/// `parameter_space`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub name: String,
    /// Parameter names; the parameter dimension is their count.
    pub parameters: Vec<String>,
    pub variables: Vec<crate::problem::Variable>,
    #[serde(default)]
    pub cost: CostSection,
    #[serde(default)]
    pub constraints: Vec<crate::problem::Constraint>,
    #[serde(default)]
    pub max_terms: Vec<crate::problem::MaxTerm>,
    pub parameter_space: ParameterSpace,
}

impl ProblemFile {
    pub fn into_parts(
        self,
    ) -> Result<(ParametricProblem, ParameterSpace), crate::problem::ProblemError> {
        let dim = self.parameters.len();
        let problem = ParametricProblem::new(
            self.name,
            dim,
            self.parameters,
            self.variables,
            self.cost.quadratic,
            self.cost.linear,
            self.cost.constant,
            self.constraints,
            self.max_terms,
        )?;
        self.parameter_space.validate()?;
        Ok((problem, self.parameter_space))
    }

    pub fn from_parts(problem: &ParametricProblem, space: &ParameterSpace) -> Self {
        ProblemFile {
            name: problem.name.clone(),
            parameters: problem.param_names.clone(),
            variables: problem.variables.clone(),
            cost: CostSection {
                quadratic: problem.quad_cost.clone(),
                linear: problem.lin_cost.clone(),
                constant: problem.const_cost.clone(),
            },
            constraints: problem.constraints.clone(),
            max_terms: problem.max_terms.clone(),
            parameter_space: space.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn artifact_round_trip_and_payload_bytes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.json");
        let manifest = RunManifest::new("test", serde_json::json!({"k": 1}), vec![]);
        save_artifact(&path, manifest, &vec![1.0_f64, 2.0, 3.0]).unwrap();
        let loaded: Artifact<Vec<f64>> = load_artifact(&path).unwrap();
        assert_eq!(loaded.payload, vec![1.0, 2.0, 3.0]);
        assert_eq!(loaded.manifest.command, "test");

        // Payload bytes ignore the manifest (and therefore its timestamps).
        let manifest2 = RunManifest::new("test-again", serde_json::json!({"k": 2}), vec![]);
        let path2 = dir.path().join("y.json");
        save_artifact(&path2, manifest2, &vec![1.0_f64, 2.0, 3.0]).unwrap();
        assert_eq!(payload_bytes(&path).unwrap(), payload_bytes(&path2).unwrap());
    }

    #[test]
    fn catalog_records_round_trip() {
        let mut catalog = StrategyCatalog::new();
        for k in 0..6u32 {
            catalog.insert(Strategy {
                tight_rows: vec![k % 3, 7],
                integer_values: vec![i64::from(k % 2)],
            });
        }
        let records = catalog_records(&catalog);
        let rebuilt = catalog_from_records(&records);
        assert_eq!(rebuilt.strategies(), catalog.strategies());
        assert_eq!(rebuilt.counts(), catalog.counts());
    }
}
