//! Per-part global transforms (rigid or affine) and pinhole projection.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RIGID_TOL: f64 = 1e-9;

/// A 3x3 linear block plus translation, exposable as a 4x4 homogeneous
/// matrix with last row (0, 0, 0, 1).
///
/// In rigid mode the linear block is a proper rotation (checked at
/// construction within 1e-9); [`PartTransform::affine`] skips that check and
/// only requires finite entries. The field is named `rotation` because the
/// decoder and all annotations are rigid; affine transforms appear only as a
/// fitting diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl PartTransform {
    pub fn identity() -> Self {
        PartTransform { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Builds a rigid transform; `rotation` must satisfy RᵀR = I and
    /// det R = +1, both within 1e-9.
    pub fn rigid(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let dev = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !dev.is_finite() || dev > RIGID_TOL {
            return Err(Error::NotOrthonormal { dev });
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > RIGID_TOL {
            return Err(Error::DegenerateRotation(format!(
                "rigid transform needs det = +1, got {det}"
            )));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::DegenerateRotation("non-finite translation".into()));
        }
        Ok(PartTransform { rotation, translation })
    }

    /// Builds an affine transform: the 3x3 block is unconstrained but must
    /// be finite.
    pub fn affine(linear: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !linear.iter().chain(translation.iter()).all(|x| x.is_finite()) {
            return Err(Error::DegenerateRotation("non-finite affine transform".into()));
        }
        Ok(PartTransform { rotation: linear, translation })
    }

    pub fn is_rigid(&self, tol: f64) -> bool {
        let dev = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        dev <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// General affine inverse. Errors when the linear block is singular.
    pub fn inverse(&self) -> Result<Self> {
        let inv = self.rotation.try_inverse().ok_or_else(|| {
            Error::DegenerateFit("transform linear block is singular".into())
        })?;
        Ok(PartTransform { rotation: inv, translation: -(inv * self.translation) })
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        PartTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.rotation * Vector3::new(p[0], p[1], p[2]) + self.translation;
        [q[0], q[1], q[2]]
    }
}

/// Maps every point by `R·x + T`.
pub fn apply_transform(m: &PartTransform, points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    points.iter().map(|&p| m.apply_point(p)).collect()
}

/// Pinhole camera, no distortion. The projection model is
/// `(fx·x/z + cx, fy·y/z + cy)` for z > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && cx.is_finite() && cy.is_finite()) {
            return Err(Error::Config(format!(
                "camera needs fx > 0, fy > 0 and finite principal point, got fx={fx} fy={fy} cx={cx} cy={cy}"
            )));
        }
        Ok(CameraIntrinsics { fx, fy, cx, cy })
    }

    /// Method form of [`project`].
    pub fn project(&self, points: &[[f64; 3]]) -> Result<Vec<[f64; 2]>> {
        project(self, points)
    }
}

/// Projects points to pixels. Any point with z <= 0 makes the whole call
/// fail with the complete list of offending indices.
pub fn project(cam: &CameraIntrinsics, points: &[[f64; 3]]) -> Result<Vec<[f64; 2]>> {
    let behind: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p[2] <= 0.0)
        .map(|(i, _)| i)
        .collect();
    if !behind.is_empty() {
        return Err(Error::BehindCamera { indices: behind });
    }
    Ok(points
        .iter()
        .map(|p| [cam.fx * p[0] / p[2] + cam.cx, cam.fy * p[1] / p[2] + cam.cy])
        .collect())
}
