//! Model bundle persistence.
//!
//! A bundle directory holds `templates.json` (the segmented template set),
//! `model.json` (format version, per-part dimensions and joint lists,
//! training provenance) and one `part_<id>.bin` per part with the raw
//! arrays: mean (3N doubles) followed by the basis (3N x k, column-major)
//! followed by the joint regressor (|J| x N, row-major), all little-endian
//! f64. Loading then saving reproduces every byte, so bundles can be
//! content-compared directly.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::{JointRegressor, PartShapeModel, TrainingConfig, TrainingReport};
use crate::template::{HppmTemplateSet, MergeMap};
use crate::train::TrainedParts;

pub const FORMAT_VERSION: &str = "hppm-bundle/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundlePartInfo {
    pub part_id: usize,
    pub name: String,
    pub n_vertices: usize,
    pub k: usize,
    pub joint_ids: Vec<usize>,
    pub joint_names: Vec<String>,
    pub training_report: TrainingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format_version: String,
    pub parts: Vec<BundlePartInfo>,
    pub neighbors: Vec<(usize, usize)>,
    pub merge_map: MergeMap,
    pub dilation_steps: usize,
    pub training_config: TrainingConfig,
    /// How per-sample seeds derive from a base seed, for external tooling.
    pub seed_mixing: String,
}

#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub manifest: BundleManifest,
    pub templates: HppmTemplateSet,
    pub models: Vec<PartShapeModel>,
    pub regressors: Vec<JointRegressor>,
}

pub fn save_templates(path: impl AsRef<Path>, templates: &HppmTemplateSet) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_vec_pretty(templates)
        .map_err(|e| Error::json(path, &e))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<HppmTemplateSet> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&text).map_err(|e| Error::json(path, &e))
}

/// Writes the whole bundle. The merge map must be the one the templates were
/// built from (checked by hash).
pub fn save_bundle(
    dir: impl AsRef<Path>,
    templates: &HppmTemplateSet,
    trained: &TrainedParts,
    cfg: &TrainingConfig,
    merge_map: &MergeMap,
) -> Result<()> {
    let dir = dir.as_ref();
    if merge_map.hash() != templates.merge_map_hash {
        return Err(Error::Bundle(format!(
            "merge map hash {} does not match the template set's {}",
            merge_map.hash(),
            templates.merge_map_hash
        )));
    }
    let n_parts = templates.n_parts();
    if trained.models.len() != n_parts || trained.regressors.len() != n_parts {
        return Err(Error::Bundle(format!(
            "trained part count ({} models, {} regressors) does not match {} templates",
            trained.models.len(),
            trained.regressors.len(),
            n_parts
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    save_templates(dir.join("templates.json"), templates)?;

    let mut parts = Vec::with_capacity(n_parts);
    for p in 0..n_parts {
        let model = &trained.models[p];
        let reg = &trained.regressors[p];
        let n = templates.parts[p].n_vertices();
        if model.n_vertices() != n || reg.matrix.ncols() != n {
            return Err(Error::Bundle(format!(
                "part {p}: model/regressor vertex counts ({}, {}) disagree with template ({n})",
                model.n_vertices(),
                reg.matrix.ncols()
            )));
        }
        parts.push(BundlePartInfo {
            part_id: p,
            name: templates.parts[p].name.clone(),
            n_vertices: n,
            k: model.k,
            joint_ids: reg.joint_ids.clone(),
            joint_names: reg.joint_names.clone(),
            training_report: model.training_report.clone(),
        });
        let bin = encode_part_bin(model, reg);
        let bin_path = dir.join(format!("part_{p}.bin"));
        fs::write(&bin_path, bin).map_err(|e| Error::io(&bin_path, e))?;
    }

    let manifest = BundleManifest {
        format_version: FORMAT_VERSION.to_string(),
        parts,
        neighbors: templates.neighbors.clone(),
        merge_map: merge_map.clone(),
        dilation_steps: templates.dilation_steps,
        training_config: cfg.clone(),
        seed_mixing: crate::numeric::SEED_MIXING_DESC.to_string(),
    };
    let manifest_path = dir.join("model.json");
    let json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::json(&manifest_path, &e))?;
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))
}

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<LoadedBundle> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("model.json");
    let text = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: BundleManifest =
        serde_json::from_slice(&text).map_err(|e| Error::json(&manifest_path, &e))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Bundle(format!(
            "unsupported bundle format {:?}, expected {FORMAT_VERSION:?}",
            manifest.format_version
        )));
    }
    let templates = load_templates(dir.join("templates.json"))?;
    if templates.n_parts() != manifest.parts.len() {
        return Err(Error::Bundle(format!(
            "model.json lists {} parts but templates.json has {}",
            manifest.parts.len(),
            templates.n_parts()
        )));
    }

    let mut models = Vec::with_capacity(manifest.parts.len());
    let mut regressors = Vec::with_capacity(manifest.parts.len());
    for (p, info) in manifest.parts.iter().enumerate() {
        if info.part_id != p {
            return Err(Error::Bundle(format!(
                "model.json part list out of order: index {p} holds part {}",
                info.part_id
            )));
        }
        if templates.parts[p].n_vertices() != info.n_vertices {
            return Err(Error::Bundle(format!(
                "part {p}: model.json says {} vertices, templates.json says {}",
                info.n_vertices,
                templates.parts[p].n_vertices()
            )));
        }
        if info.joint_ids.len() != info.joint_names.len() {
            return Err(Error::Bundle(format!(
                "part {p}: {} joint ids vs {} joint names",
                info.joint_ids.len(),
                info.joint_names.len()
            )));
        }
        let bin_path = dir.join(format!("part_{p}.bin"));
        let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
        let (model, reg) = decode_part_bin(&bytes, info)?;
        models.push(model);
        regressors.push(reg);
    }

    Ok(LoadedBundle { manifest, templates, models, regressors })
}

fn encode_part_bin(model: &PartShapeModel, reg: &JointRegressor) -> Vec<u8> {
    let n3 = model.mean.len();
    let k = model.k;
    let (n_j, n_p) = (reg.matrix.nrows(), reg.matrix.ncols());
    let mut out = Vec::with_capacity(8 * (n3 + n3 * k + n_j * n_p));
    for i in 0..n3 {
        out.extend_from_slice(&model.mean[i].to_le_bytes());
    }
    for c in 0..k {
        for r in 0..n3 {
            out.extend_from_slice(&model.basis[(r, c)].to_le_bytes());
        }
    }
    for r in 0..n_j {
        for c in 0..n_p {
            out.extend_from_slice(&reg.matrix[(r, c)].to_le_bytes());
        }
    }
    out
}

fn decode_part_bin(
    bytes: &[u8],
    info: &BundlePartInfo,
) -> Result<(PartShapeModel, JointRegressor)> {
    let n3 = 3 * info.n_vertices;
    let n_j = info.joint_ids.len();
    let expected = 8 * (n3 + n3 * info.k + n_j * info.n_vertices);
    if bytes.len() != expected {
        return Err(Error::Bundle(format!(
            "part_{}.bin is {} bytes, expected exactly {expected}",
            info.part_id,
            bytes.len()
        )));
    }
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));

    let mean = DVector::from_iterator(n3, values.by_ref().take(n3));
    let basis_data: Vec<f64> = values.by_ref().take(n3 * info.k).collect();
    let basis = DMatrix::from_column_slice(n3, info.k, &basis_data);
    let reg_data: Vec<f64> = values.by_ref().take(n_j * info.n_vertices).collect();
    let matrix = DMatrix::from_row_slice(n_j, info.n_vertices, &reg_data);
    if !mean.iter().all(|v| v.is_finite())
        || !basis.iter().all(|v| v.is_finite())
        || !matrix.iter().all(|v| v.is_finite())
    {
        return Err(Error::Bundle(format!(
            "part_{}.bin contains non-finite values",
            info.part_id
        )));
    }

    let model = PartShapeModel {
        part_id: info.part_id,
        basis,
        mean,
        k: info.k,
        training_report: info.training_report.clone(),
    };
    let reg = JointRegressor {
        part_id: info.part_id,
        matrix,
        joint_ids: info.joint_ids.clone(),
        joint_names: info.joint_names.clone(),
    };
    Ok((model, reg))
}
