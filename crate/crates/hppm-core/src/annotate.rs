//! Annotation: recovering per-part (S, M) parameters from whole-body meshes.
//!
//! For each part the ground-truth slice is aligned to the part template by a
//! least-squares global transform M, mapped to canonical space with the true
//! inverse M⁻¹, and projected onto the part's shape basis. The annotation
//! also records how well decode(S, M) reproduces the slice, which is the
//! quantity the whole pipeline is judged on.

use nalgebra::{Matrix3, Vector3, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::numeric::{dist3, map_indexed, map_indexed_seq, pairwise_sum};
use crate::rotation::matrix_to_rot6d;
use crate::shape::{decode_part, encode_shape, regress_joints, JointRegressor, PartShapeModel, PartState};
use crate::template::HppmTemplateSet;
use crate::transform::{apply_transform, CameraIntrinsics, PartTransform};

/// Smallest-to-largest singular value ratio below which a point cloud is
/// treated as collinear (RIGID) or coplanar (AFFINE).
const DEGENERATE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FitMode {
    /// Rotation + translation by orthogonal Procrustes. The decoder
    /// reconstructs with a rigid transform, so this is the default.
    #[default]
    Rigid,
    /// Unconstrained linear map + translation, for diagnostics. Stored
    /// annotations are rigid-only, so the fitted matrix is snapped to the
    /// nearest rotation (translation refit at the centroids) before storage;
    /// recovery errors are measured from that stored rigid state.
    Affine,
}

/// Recovery quality of one part's annotation: mean distances between the
/// decoded part and the ground-truth slice it was fitted to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartFitReport {
    pub part_id: usize,
    pub vertex_error_mm: f64,
    pub joint_error_mm: f64,
}

/// One sample's annotation: camera, per-part states, recovery report.
/// Serialized field names are a fixed external interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleAnnotation {
    pub camera: CameraIntrinsics,
    pub parts: Vec<PartState>,
    pub fit_report: Vec<PartFitReport>,
}

/// Least-squares transform mapping `v0` onto `v_gt` (M·v0 ≈ v_gt).
///
/// RIGID: centroid-aligned SVD Procrustes with determinant correction.
/// AFFINE: normal-equations minimizer over unconstrained linear maps.
pub fn fit_global_transform(
    v_gt: &[[f64; 3]],
    v0: &[[f64; 3]],
    mode: FitMode,
) -> Result<PartTransform> {
    if v_gt.len() != v0.len() {
        return Err(Error::SizeMismatch {
            what: "fit point counts".into(),
            expected: v0.len(),
            got: v_gt.len(),
        });
    }
    let min_pts = match mode {
        FitMode::Rigid => 3,
        FitMode::Affine => 4,
    };
    if v0.len() < min_pts {
        return Err(Error::InsufficientData(format!(
            "{mode:?} fit needs at least {min_pts} points, got {}",
            v0.len()
        )));
    }
    let n = v0.len() as f64;
    let mut c0 = Vector3::zeros();
    let mut c1 = Vector3::zeros();
    for (a, b) in v0.iter().zip(v_gt) {
        c0 += Vector3::from(*a);
        c1 += Vector3::from(*b);
    }
    c0 /= n;
    c1 /= n;

    // Cross-covariance H = Σ (v0-c0)(v_gt-c1)ᵀ and source scatter C = Σ (v0-c0)(v0-c0)ᵀ.
    let mut h = Matrix3::zeros();
    let mut scatter = Matrix3::zeros();
    for (a, b) in v0.iter().zip(v_gt) {
        let da = Vector3::from(*a) - c0;
        let db = Vector3::from(*b) - c1;
        h += da * db.transpose();
        scatter += da * da.transpose();
    }

    match mode {
        FitMode::Rigid => {
            let svd = SVD::new(h, true, true);
            let (rotation, sv) = det_corrected_rotation(&svd)?;
            if sv[1] <= DEGENERATE_REL_TOL * sv[0] {
                return Err(Error::DegenerateFit(
                    "rigid fit: points are collinear, rotation about the axis unconstrained"
                        .into(),
                ));
            }
            let translation = c1 - rotation * c0;
            Ok(PartTransform { rotation, translation })
        }
        FitMode::Affine => {
            let ssvd = SVD::new(scatter, false, false);
            let smax = ssvd.singular_values.max();
            let smin = ssvd.singular_values.min();
            if smin <= DEGENERATE_REL_TOL * smax {
                return Err(Error::DegenerateFit(
                    "affine fit: points are coplanar or collinear, linear map underdetermined"
                        .into(),
                ));
            }
            let inv = scatter
                .try_inverse()
                .ok_or_else(|| Error::DegenerateFit("affine fit: singular scatter".into()))?;
            let a = h.transpose() * inv;
            let translation = c1 - a * c0;
            Ok(PartTransform { rotation: a, translation })
        }
    }
}

/// Proper rotation from the cross-covariance SVD: R = V·diag(1,1,d)·Uᵀ with
/// d = det(V·Uᵀ), plus the singular values sorted descending for the caller's
/// degeneracy check.
fn det_corrected_rotation(svd: &SVD<f64, nalgebra::U3, nalgebra::U3>) -> Result<(Matrix3<f64>, [f64; 3])> {
    let u = svd.u.ok_or_else(|| Error::DegenerateFit("svd without u".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::DegenerateFit("svd without v".into()))?;
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let mut sv = [svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]];
    sv.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    Ok((rotation, sv))
}

/// Nearest proper rotation to an arbitrary linear map (Frobenius norm).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let svd = SVD::new(*m, true, true);
    let u = svd.u.ok_or_else(|| Error::DegenerateFit("svd without u".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::DegenerateFit("svd without v".into()))?;
    let d = (u * v_t).determinant().signum();
    Ok(u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t)
}

/// Annotates one whole-body mesh: per part, fit M, canonicalize with M⁻¹,
/// encode S, and measure recovery of decode(S, M) against the slice.
///
/// Joint recovery compares joints regressed from the decoded part against
/// joints regressed from the ground-truth slice (ground-truth joints are not
/// an input here; the regressor defines the joint convention).
pub fn annotate_sample(
    templates: &HppmTemplateSet,
    models: &[PartShapeModel],
    regressors: &[JointRegressor],
    body_gt: &Mesh,
    cam: &CameraIntrinsics,
    mode: FitMode,
) -> Result<SampleAnnotation> {
    check_model_set(templates, models, regressors)?;
    let mut parts = Vec::with_capacity(templates.n_parts());
    for (p, template) in templates.parts.iter().enumerate() {
        let slice = template.slice_vertices(&body_gt.vertices)?;
        let fitted = fit_global_transform(&slice, &template.template_vertices, mode)?;
        let canonical = apply_transform(&fitted.inverse()?, &slice);
        let s = encode_shape(&models[p], &canonical)?;
        let stored = match mode {
            FitMode::Rigid => fitted,
            FitMode::Affine => {
                let r = nearest_rotation(&fitted.rotation)?;
                // Optimal translation for the snapped rotation: align centroids.
                let mut c0 = Vector3::zeros();
                let mut c1 = Vector3::zeros();
                for (a, b) in template.template_vertices.iter().zip(&slice) {
                    c0 += Vector3::from(*a);
                    c1 += Vector3::from(*b);
                }
                let n = slice.len() as f64;
                PartTransform { rotation: r, translation: c1 / n - r * (c0 / n) }
            }
        };
        parts.push(PartState {
            part_id: p,
            visible: true,
            s,
            rot6d: matrix_to_rot6d(&stored.rotation)?,
            t: [stored.translation.x, stored.translation.y, stored.translation.z],
        });
    }
    let annotation = SampleAnnotation { camera: *cam, parts, fit_report: Vec::new() };
    let fit_report = recovery_report(&annotation, body_gt, models, regressors, templates)?;
    Ok(SampleAnnotation { fit_report, ..annotation })
}

/// Mean per-part vertex and joint recovery errors (mm) of an annotation
/// against the ground-truth body it was produced from.
pub fn recovery_report(
    annotation: &SampleAnnotation,
    body_gt: &Mesh,
    models: &[PartShapeModel],
    regressors: &[JointRegressor],
    templates: &HppmTemplateSet,
) -> Result<Vec<PartFitReport>> {
    check_model_set(templates, models, regressors)?;
    if annotation.parts.len() != templates.n_parts() {
        return Err(Error::SizeMismatch {
            what: "annotation part count".into(),
            expected: templates.n_parts(),
            got: annotation.parts.len(),
        });
    }
    let mut report = Vec::with_capacity(templates.n_parts());
    for (p, template) in templates.parts.iter().enumerate() {
        let state = &annotation.parts[p];
        if state.part_id != p {
            return Err(Error::Data(format!(
                "annotation parts out of order: index {p} holds part {}",
                state.part_id
            )));
        }
        let gt_slice = template.slice_vertices(&body_gt.vertices)?;
        let decoded = decode_part(&models[p], state)?;
        let vertex_error_mm = mean_dist_mm(&decoded, &gt_slice);
        let pred_joints = regress_joints(&regressors[p], &decoded)?;
        let gt_joints = regress_joints(&regressors[p], &gt_slice)?;
        let joint_error_mm = mean_dist_mm(&pred_joints, &gt_joints);
        report.push(PartFitReport { part_id: p, vertex_error_mm, joint_error_mm });
    }
    Ok(report)
}

fn mean_dist_mm(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let norms: Vec<f64> = a.iter().zip(b).map(|(x, y)| dist3(*x, *y)).collect();
    1000.0 * pairwise_sum(&norms) / norms.len() as f64
}

fn check_model_set(
    templates: &HppmTemplateSet,
    models: &[PartShapeModel],
    regressors: &[JointRegressor],
) -> Result<()> {
    if models.len() != templates.n_parts() {
        return Err(Error::SizeMismatch {
            what: "shape model count".into(),
            expected: templates.n_parts(),
            got: models.len(),
        });
    }
    if regressors.len() != templates.n_parts() {
        return Err(Error::SizeMismatch {
            what: "joint regressor count".into(),
            expected: templates.n_parts(),
            got: regressors.len(),
        });
    }
    Ok(())
}

/// Annotates a batch of bodies; parallel across samples when the `parallel`
/// feature is enabled, with output order fixed by input order either way.
pub fn annotate_samples(
    templates: &HppmTemplateSet,
    models: &[PartShapeModel],
    regressors: &[JointRegressor],
    bodies: &[Mesh],
    cam: &CameraIntrinsics,
    mode: FitMode,
) -> Result<Vec<SampleAnnotation>> {
    map_indexed(bodies.len(), |i| {
        annotate_sample(templates, models, regressors, &bodies[i], cam, mode)
    })
    .into_iter()
    .collect()
}

/// Always-sequential twin of [`annotate_samples`] for benchmarks and
/// determinism checks.
pub fn annotate_samples_seq(
    templates: &HppmTemplateSet,
    models: &[PartShapeModel],
    regressors: &[JointRegressor],
    bodies: &[Mesh],
    cam: &CameraIntrinsics,
    mode: FitMode,
) -> Result<Vec<SampleAnnotation>> {
    map_indexed_seq(bodies.len(), |i| {
        annotate_sample(templates, models, regressors, &bodies[i], cam, mode)
    })
    .into_iter()
    .collect()
}
