//! Dataset and artifact file layout, plus small JSON helpers.
//!
//! A dataset directory holds `meta.json`, the canonical body
//! (`template.obj`, `weights.json`, `merge_map.json`) and
//! `samples/sample_NNNN.obj` with a `.joints.json` sidecar per sample.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use hppm_core::mesh::{load_mesh, Mesh};
use hppm_core::parts::NUM_JOINTS;
use hppm_core::synth::SynthBodySpec;
use hppm_core::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DATASET_FORMAT: &str = "hppm-dataset/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: String,
    pub n_samples: usize,
    pub spec: SynthBodySpec,
}

pub fn sample_mesh_path(data_dir: &Path, i: usize) -> PathBuf {
    data_dir.join("samples").join(format!("sample_{i:04}.obj"))
}

pub fn sample_joints_path(data_dir: &Path, i: usize) -> PathBuf {
    data_dir.join("samples").join(format!("sample_{i:04}.joints.json"))
}

pub fn annotation_file(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("sample_{i:04}.json"))
}

pub fn part_mesh_file(dir: &Path, i: usize, part: usize) -> PathBuf {
    dir.join(format!("sample_{i:04}.part_{part:02}.obj"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, &e))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes).map_err(|e| Error::json(path, &e))?)
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug)]
pub struct Dataset {
    pub bodies: Vec<Mesh>,
    pub joints: Vec<Vec<[f64; 3]>>,
}

/// Loads the first `limit` samples (all when `None`).
pub fn load_dataset(data_dir: &Path, limit: Option<usize>) -> Result<Dataset, CliError> {
    let meta_path = data_dir.join("meta.json");
    if !meta_path.exists() {
        return Err(CliError::data(format!(
            "no dataset at {}: run `hppm synth` first",
            data_dir.display()
        )));
    }
    let meta: DatasetMeta = read_json(&meta_path)?;
    if meta.format_version != DATASET_FORMAT {
        return Err(CliError::data(format!(
            "unsupported dataset format {:?} (this build reads {DATASET_FORMAT:?})",
            meta.format_version
        )));
    }
    let n = limit.unwrap_or(meta.n_samples).min(meta.n_samples);
    let mut bodies = Vec::with_capacity(n);
    let mut joints = Vec::with_capacity(n);
    for i in 0..n {
        bodies.push(load_mesh(sample_mesh_path(data_dir, i))?);
        let j: Vec<[f64; 3]> = read_json(&sample_joints_path(data_dir, i))?;
        if j.len() != NUM_JOINTS {
            return Err(CliError::data(format!(
                "sample {i} has {} joints, expected {NUM_JOINTS}",
                j.len()
            )));
        }
        joints.push(j);
    }
    Ok(Dataset { bodies, joints })
}

/// One benchmark crop. `annotation` is relative to the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub sample_id: usize,
    pub crop_id: usize,
    pub center: [f64; 2],
    pub side: f64,
    pub visibility: Vec<bool>,
    pub annotation: String,
}

/// JSON lines, one record per line.
pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<(), CliError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::json(path, &e))?;
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line).map_err(|e| Error::json(path, &e))?);
    }
    Ok(records)
}
