//! Whole-model training: per-part canonicalization, joint regressors, and
//! shape models from a set of posed ground-truth bodies.
//!
//! Per part and sample the pipeline is: slice the body by the part's
//! template ids, fit a rigid transform onto the part template, map slice and
//! the part's joints into canonical space with the inverse, then train the
//! joint regressor and the shape model on the canonicalized set. Parts are
//! independent, so training parallelizes across them.

use serde::{Deserialize, Serialize};

use crate::annotate::{fit_global_transform, FitMode};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::numeric::{map_indexed, map_indexed_seq};
use crate::parts::{JOINT_NAMES, NUM_JOINTS, PART_JOINTS};
use crate::shape::{
    train_joint_regressor, train_part_pca, JointRegressor, PartShapeModel, TrainingConfig,
};
use crate::template::{HppmTemplateSet, PartTemplate};
use crate::transform::apply_transform;

/// What the joint regressor is trained against. The part-joint relation is
/// stated over template vertices, but whether those are the fixed template
/// or each sample's canonicalized vertices is open; per-sample is the
/// default because it generalizes across shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RegressorMode {
    #[default]
    PerSample,
    FixedTemplate,
}

/// Posed ground-truth bodies plus their named joint positions.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub bodies: Vec<Mesh>,
    /// `joints[s]` holds the named joints of body s, world space.
    pub joints: Vec<Vec<[f64; 3]>>,
}

impl TrainingData {
    pub fn validate(&self) -> Result<()> {
        if self.bodies.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 training bodies, got {}",
                self.bodies.len()
            )));
        }
        if self.joints.len() != self.bodies.len() {
            return Err(Error::SizeMismatch {
                what: "training joint sets".into(),
                expected: self.bodies.len(),
                got: self.joints.len(),
            });
        }
        for (s, j) in self.joints.iter().enumerate() {
            if j.len() != NUM_JOINTS {
                return Err(Error::SizeMismatch {
                    what: format!("sample {s} named joints"),
                    expected: NUM_JOINTS,
                    got: j.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedParts {
    pub models: Vec<PartShapeModel>,
    pub regressors: Vec<JointRegressor>,
}

/// Trains one part's regressor and shape model.
pub fn train_one_part(
    template: &PartTemplate,
    data: &TrainingData,
    cfg: &TrainingConfig,
    mode: RegressorMode,
) -> Result<(PartShapeModel, JointRegressor)> {
    let part_id = template.part_id;
    let joint_ids = PART_JOINTS[part_id].to_vec();
    let n_s = data.bodies.len();

    let mut canonical_verts = Vec::with_capacity(n_s);
    let mut canonical_joints = Vec::with_capacity(n_s);
    for s in 0..n_s {
        let slice = template.slice_vertices(&data.bodies[s].vertices)?;
        let m = fit_global_transform(&slice, &template.template_vertices, FitMode::Rigid)?;
        let inv = m.inverse()?;
        canonical_verts.push(apply_transform(&inv, &slice));
        let world_joints: Vec<[f64; 3]> =
            joint_ids.iter().map(|&j| data.joints[s][j]).collect();
        canonical_joints.push(apply_transform(&inv, &world_joints));
    }

    let regressor_verts: Vec<Vec<[f64; 3]>> = match mode {
        RegressorMode::PerSample => canonical_verts.clone(),
        RegressorMode::FixedTemplate => vec![template.template_vertices.clone(); n_s],
    };
    let joint_names = joint_ids.iter().map(|&j| JOINT_NAMES[j].to_string()).collect();
    let regressor = train_joint_regressor(
        part_id,
        &regressor_verts,
        &canonical_joints,
        joint_ids,
        joint_names,
    )?;

    let model = train_part_pca(part_id, &canonical_verts, &regressor, &canonical_joints, cfg)?;
    Ok((model, regressor))
}

/// Trains every part; parallel across parts when the `parallel` feature is
/// on, identical output either way.
pub fn train_all_parts(
    templates: &HppmTemplateSet,
    data: &TrainingData,
    cfg: &TrainingConfig,
    mode: RegressorMode,
) -> Result<TrainedParts> {
    data.validate()?;
    let results: Result<Vec<_>> = map_indexed(templates.n_parts(), |p| {
        train_one_part(&templates.parts[p], data, cfg, mode)
    })
    .into_iter()
    .collect();
    let (models, regressors) = results?.into_iter().unzip();
    Ok(TrainedParts { models, regressors })
}

/// Always-sequential twin of [`train_all_parts`] for benchmarks and
/// determinism checks.
pub fn train_all_parts_seq(
    templates: &HppmTemplateSet,
    data: &TrainingData,
    cfg: &TrainingConfig,
    mode: RegressorMode,
) -> Result<TrainedParts> {
    data.validate()?;
    let results: Result<Vec<_>> = map_indexed_seq(templates.n_parts(), |p| {
        train_one_part(&templates.parts[p], data, cfg, mode)
    })
    .into_iter()
    .collect();
    let (models, regressors) = results?.into_iter().unzip();
    Ok(TrainedParts { models, regressors })
}
