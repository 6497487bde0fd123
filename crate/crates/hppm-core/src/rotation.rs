//! 6D rotation representation: the first two columns of a rotation matrix,
//! stored column-major. Continuous in the matrix, hence the preferred
//! regression target; converted to a full matrix by Gram-Schmidt.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Six values `(r00, r10, r20, r01, r11, r21)`: column one then column two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation6D(pub [f64; 6]);

impl Rotation6D {
    pub const IDENTITY: Rotation6D = Rotation6D([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
}

const DEGENERATE_EPS: f64 = 1e-12;

/// Gram-Schmidt orthonormalization of the two stored columns; the third
/// column is their cross product, so the result is a proper rotation
/// (det = +1). Scale-invariant in both inputs.
///
/// Degenerate inputs (zero first vector, parallel vectors) are an error:
/// silent repair would hide upstream bugs.
pub fn rot6d_to_matrix(r: &Rotation6D) -> Result<Matrix3<f64>> {
    let a1 = Vector3::new(r.0[0], r.0[1], r.0[2]);
    let a2 = Vector3::new(r.0[3], r.0[4], r.0[5]);
    if !a1.iter().chain(a2.iter()).all(|x| x.is_finite()) {
        return Err(Error::DegenerateRotation("non-finite 6D input".into()));
    }
    let n1 = a1.norm();
    if n1 <= DEGENERATE_EPS {
        return Err(Error::DegenerateRotation("first 6D column is (near) zero".into()));
    }
    let b1 = a1 / n1;
    let u2 = a2 - b1 * b1.dot(&a2);
    let n2 = u2.norm();
    if n2 <= DEGENERATE_EPS * a2.norm().max(1.0) {
        return Err(Error::DegenerateRotation(
            "second 6D column is zero or parallel to the first".into(),
        ));
    }
    let b2 = u2 / n2;
    let b3 = b1.cross(&b2);
    Ok(Matrix3::from_columns(&[b1, b2, b3]))
}

/// First two columns of `m`, which must be orthonormal within 1e-6.
pub fn matrix_to_rot6d(m: &Matrix3<f64>) -> Result<Rotation6D> {
    let dev = (m.transpose() * m - Matrix3::identity()).abs().max();
    if !dev.is_finite() || dev > 1e-6 {
        return Err(Error::NotOrthonormal { dev });
    }
    Ok(Rotation6D([
        m[(0, 0)],
        m[(1, 0)],
        m[(2, 0)],
        m[(0, 1)],
        m[(1, 1)],
        m[(2, 1)],
    ]))
}
