//! JSON file formats: instances (sparse scores), ground truth, and results.
//!
//! Files are UTF-8 with LF line endings, pretty-printed, and written
//! deterministically so that fixed-seed runs produce byte-identical output.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::OracleResult;
use crate::problem::{ClusterLabeling, Instance};
use crate::solver::{SolverConfig, SolverResult, StageRecord};
use crate::synth::{GroundTruth, SynthConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreEntry {
    pub a: usize,
    pub b: usize,
    pub s: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<SynthConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub set_sizes: Vec<usize>,
    pub modalities: usize,
    pub scores: Vec<ScoreEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<InstanceMetadata>,
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance, metadata: Option<InstanceMetadata>) -> Self {
        let scores = instance
            .stored_scores()
            .iter()
            .map(|(&(a, b), s)| ScoreEntry { a, b, s: s.clone() })
            .collect();
        Self { set_sizes: instance.set_sizes().to_vec(), modalities: instance.modality_count(), scores, metadata }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let mut inst = Instance::new(self.set_sizes.clone(), self.modalities)
            .map_err(|e| Error::InvalidInstance(format!("set_sizes/modalities: {e}")))?;
        for (k, e) in self.scores.iter().enumerate() {
            if e.a >= e.b {
                return Err(Error::InvalidInstance(format!("scores[{k}]: expected a < b, got a = {}, b = {}", e.a, e.b)));
            }
            if inst.stored_scores().contains_key(&(e.a, e.b)) {
                return Err(Error::InvalidInstance(format!("scores[{k}]: duplicate pair ({}, {})", e.a, e.b)));
            }
            inst.set_score(e.a, e.b, e.s.clone()).map_err(|err| Error::InvalidInstance(format!("scores[{k}]: {err}")))?;
        }
        Ok(inst)
    }
}

/// One cluster per universe object, as sorted global element indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub method: String,
    pub clusters: Vec<Vec<usize>>,
    pub frobenius_value: f64,
    pub relaxed_value: Option<f64>,
    pub converged: bool,
    pub trace: Vec<StageRecord>,
    pub config: Option<SolverConfig>,
}

impl ResultFile {
    pub fn from_solver(result: &SolverResult, config: &SolverConfig) -> Self {
        Self {
            method: "solver".into(),
            clusters: result.clusters().clusters(),
            frobenius_value: result.frobenius_value,
            relaxed_value: Some(result.relaxed_value),
            converged: result.converged,
            trace: result.trace.clone(),
            config: Some(config.clone()),
        }
    }

    pub fn from_oracle(result: &OracleResult) -> Self {
        Self {
            method: "oracle".into(),
            clusters: result.assignment.clusters().clusters(),
            frobenius_value: result.value,
            relaxed_value: None,
            converged: true,
            trace: Vec::new(),
            config: None,
        }
    }

    /// Cluster labels over `m` elements; fails unless the clusters partition
    /// `0..m`.
    pub fn labeling(&self, m: usize) -> Result<ClusterLabeling> {
        let mut labels = vec![usize::MAX; m];
        for (c, cluster) in self.clusters.iter().enumerate() {
            if cluster.is_empty() {
                return Err(Error::InvalidClustering(format!("clusters[{c}] is empty")));
            }
            for &a in cluster {
                if a >= m {
                    return Err(Error::InvalidClustering(format!("clusters[{c}]: element {a} out of range for {m}")));
                }
                if labels[a] != usize::MAX {
                    return Err(Error::InvalidClustering(format!("element {a} appears in more than one cluster")));
                }
                labels[a] = c;
            }
        }
        if let Some(a) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidClustering(format!("element {a} is not in any cluster")));
        }
        Ok(ClusterLabeling::new(labels))
    }
}

fn file_err(path: &Path, message: impl ToString) -> Error {
    Error::File { path: path.display().to_string(), message: message.to_string() }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| file_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| file_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| file_err(path, e))
}

pub fn parse_instance(text: &str) -> Result<(Instance, Option<InstanceMetadata>)> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))?;
    Ok((file.to_instance()?, file.metadata))
}

pub fn read_instance(path: &Path) -> Result<(Instance, Option<InstanceMetadata>)> {
    let file: InstanceFile = read_json(path)?;
    let inst = file.to_instance().map_err(|e| file_err(path, e))?;
    Ok((inst, file.metadata))
}

pub fn write_instance(path: &Path, instance: &Instance, metadata: Option<InstanceMetadata>) -> Result<()> {
    write_json(path, &InstanceFile::from_instance(instance, metadata))
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    read_json(path)
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    write_json(path, truth)
}

pub fn read_result(path: &Path) -> Result<ResultFile> {
    read_json(path)
}

pub fn write_result(path: &Path, result: &ResultFile) -> Result<()> {
    write_json(path, result)
}

pub fn read_solver_config(path: &Path) -> Result<SolverConfig> {
    read_json(path)
}

pub fn read_synth_config(path: &Path) -> Result<SynthConfig> {
    read_json(path)
}
