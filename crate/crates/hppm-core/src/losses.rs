//! Training losses over per-part predictions, pure and gradient-free.
//!
//! Every loss is a visibility-gated sum of per-item l2 norms. Gating skips
//! invisible parts entirely (never multiplies by zero), so an invisible
//! part's prediction can hold arbitrary garbage (even behind the camera)
//! without changing any loss value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::dist3;
use crate::shape::PartState;
use crate::template::HppmTemplateSet;
use crate::transform::CameraIntrinsics;

/// Term weights; defaults are the published training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_v: f64,
    pub lambda_j3d: f64,
    pub lambda_j2d: f64,
    pub lambda_s: f64,
    pub lambda_r: f64,
    pub lambda_t: f64,
    pub lambda_ol: f64,
    pub lambda_dc: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_v: 2.5,
            lambda_j3d: 1250.0,
            lambda_j2d: 2500.0,
            lambda_s: 100.0,
            lambda_r: 200.0,
            lambda_t: 500.0,
            lambda_ol: 100.0,
            lambda_dc: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_v,
            self.lambda_j3d,
            self.lambda_j2d,
            self.lambda_s,
            self.lambda_r,
            self.lambda_t,
            self.lambda_ol,
            self.lambda_dc,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("loss weights must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Which average the overlap loss pulls copies toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OverlapLossMode {
    /// Midpoint of the two copies of each shared vertex; each pair
    /// contributes its gap. Default: this is the reading under which the
    /// loss pulls both copies "closer to each other".
    #[default]
    PairMidpoint,
    /// One centroid over all copies in an adjacent pair's overlap region;
    /// kept for comparison, collapses overlap geometry toward a point.
    UnionCentroid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    #[serde(rename = "L_v")]
    pub l_v: f64,
    #[serde(rename = "L_j3d")]
    pub l_j3d: f64,
    #[serde(rename = "L_j2d")]
    pub l_j2d: f64,
    #[serde(rename = "L_s")]
    pub l_s: f64,
    #[serde(rename = "L_r")]
    pub l_r: f64,
    #[serde(rename = "L_t")]
    pub l_t: f64,
    #[serde(rename = "L_ol")]
    pub l_ol: f64,
    #[serde(rename = "L_dc")]
    pub l_dc: f64,
    #[serde(rename = "L_div")]
    pub l_div: f64,
    #[serde(rename = "L_fu")]
    pub l_fu: f64,
    #[serde(rename = "L_total")]
    pub l_total: f64,
}

fn check_gated_shapes<T, U>(
    what: &str,
    pred: &[Vec<T>],
    gt: &[Vec<U>],
    visibility: &[bool],
) -> Result<()> {
    if pred.len() != gt.len() || visibility.len() != pred.len() {
        return Err(Error::SizeMismatch {
            what: format!("{what} part counts"),
            expected: gt.len(),
            got: pred.len().min(visibility.len()),
        });
    }
    for (p, (a, b)) in pred.iter().zip(gt).enumerate() {
        if visibility[p] && a.len() != b.len() {
            return Err(Error::SizeMismatch {
                what: format!("{what} part {p} item count"),
                expected: b.len(),
                got: a.len(),
            });
        }
    }
    Ok(())
}

/// Sum over visible parts of per-vertex distances, meters.
pub fn loss_vertex(
    pred: &[Vec<[f64; 3]>],
    gt: &[Vec<[f64; 3]>],
    visibility: &[bool],
) -> Result<f64> {
    check_gated_shapes("vertex loss", pred, gt, visibility)?;
    let mut total = 0.0;
    for (p, vis) in visibility.iter().enumerate() {
        if !vis {
            continue;
        }
        for (a, b) in pred[p].iter().zip(&gt[p]) {
            total += dist3(*a, *b);
        }
    }
    Ok(total)
}

/// Sum over visible parts of per-joint distances, meters.
pub fn loss_joint3d(
    pred_joints: &[Vec<[f64; 3]>],
    gt_joints: &[Vec<[f64; 3]>],
    visibility: &[bool],
) -> Result<f64> {
    check_gated_shapes("3d joint loss", pred_joints, gt_joints, visibility)?;
    let mut total = 0.0;
    for (p, vis) in visibility.iter().enumerate() {
        if !vis {
            continue;
        }
        for (a, b) in pred_joints[p].iter().zip(&gt_joints[p]) {
            total += dist3(*a, *b);
        }
    }
    Ok(total)
}

/// Sum over visible parts of projected joint distances, pixels. Only
/// visible parts are projected, so invisible parts may sit behind the
/// camera without erroring.
pub fn loss_joint2d(
    pred_joints: &[Vec<[f64; 3]>],
    gt_joints: &[Vec<[f64; 3]>],
    cam: &CameraIntrinsics,
    visibility: &[bool],
) -> Result<f64> {
    check_gated_shapes("2d joint loss", pred_joints, gt_joints, visibility)?;
    let mut total = 0.0;
    for (p, vis) in visibility.iter().enumerate() {
        if !vis {
            continue;
        }
        let pp = cam.project(&pred_joints[p])?;
        let gp = cam.project(&gt_joints[p])?;
        for (a, b) in pp.iter().zip(&gp) {
            total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        }
    }
    Ok(total)
}

/// Per-part parameter losses: l2 norms of the S, 6D-rotation, and T
/// differences, gated and summed. Returns (L_s, L_r, L_t).
pub fn loss_params(
    pred_states: &[PartState],
    gt_states: &[PartState],
    visibility: &[bool],
) -> Result<(f64, f64, f64)> {
    if pred_states.len() != gt_states.len() || visibility.len() != pred_states.len() {
        return Err(Error::SizeMismatch {
            what: "parameter loss part counts".into(),
            expected: gt_states.len(),
            got: pred_states.len().min(visibility.len()),
        });
    }
    let (mut l_s, mut l_r, mut l_t) = (0.0, 0.0, 0.0);
    for (p, vis) in visibility.iter().enumerate() {
        if !vis {
            continue;
        }
        let (a, b) = (&pred_states[p], &gt_states[p]);
        if a.s.len() != b.s.len() {
            return Err(Error::SizeMismatch {
                what: format!("shape parameter length for part {p}"),
                expected: b.s.len(),
                got: a.s.len(),
            });
        }
        l_s += a
            .s
            .iter()
            .zip(&b.s)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        l_r += a
            .rot6d
            .0
            .iter()
            .zip(&b.rot6d.0)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        l_t += dist3(a.t, b.t);
    }
    Ok((l_s, l_r, l_t))
}

/// Overlap loss: for every vertex shared by a visible adjacent pair, each
/// copy's distance to the average location. With the default pair-midpoint
/// average a pair contributes exactly its gap.
pub fn loss_overlap(
    decoded: &[Vec<[f64; 3]>],
    templates: &HppmTemplateSet,
    visibility: &[bool],
    mode: OverlapLossMode,
) -> Result<f64> {
    if decoded.len() != templates.n_parts() || visibility.len() != templates.n_parts() {
        return Err(Error::SizeMismatch {
            what: "overlap loss part counts".into(),
            expected: templates.n_parts(),
            got: decoded.len().min(visibility.len()),
        });
    }
    let mut total = 0.0;
    for &(p, q) in &templates.neighbors {
        if !(visibility[p] && visibility[q]) {
            continue;
        }
        let region = templates.overlap_region(p, q)?;
        let copies: Vec<([f64; 3], [f64; 3])> = region
            .iter()
            .map(|&gid| {
                let lp = templates.parts[p].local_index(gid).expect("overlap id in part");
                let lq = templates.parts[q].local_index(gid).expect("overlap id in part");
                (decoded[p][lp], decoded[q][lq])
            })
            .collect();
        match mode {
            OverlapLossMode::PairMidpoint => {
                for (a, b) in &copies {
                    let mid = [
                        0.5 * (a[0] + b[0]),
                        0.5 * (a[1] + b[1]),
                        0.5 * (a[2] + b[2]),
                    ];
                    total += dist3(*a, mid) + dist3(*b, mid);
                }
            }
            OverlapLossMode::UnionCentroid => {
                if copies.is_empty() {
                    continue;
                }
                let mut c = [0.0f64; 3];
                for (a, b) in &copies {
                    for axis in 0..3 {
                        c[axis] += a[axis] + b[axis];
                    }
                }
                let n = (2 * copies.len()) as f64;
                for v in &mut c {
                    *v /= n;
                }
                for (a, b) in &copies {
                    total += dist3(*a, c) + dist3(*b, c);
                }
            }
        }
    }
    Ok(total)
}

/// Depth consistency: sum over all visible parts' vertices of |z - mean z|,
/// with the mean taken over those same vertices.
pub fn loss_depth_consistency(decoded: &[Vec<[f64; 3]>], visibility: &[bool]) -> Result<f64> {
    if visibility.len() != decoded.len() {
        return Err(Error::SizeMismatch {
            what: "depth loss part counts".into(),
            expected: decoded.len(),
            got: visibility.len(),
        });
    }
    let mut sum_z = 0.0;
    let mut count = 0usize;
    for (p, vis) in visibility.iter().enumerate() {
        if !vis {
            continue;
        }
        for v in &decoded[p] {
            sum_z += v[2];
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoVisiblePart);
    }
    let mean_z = sum_z / count as f64;
    let mut total = 0.0;
    for (p, vis) in visibility.iter().enumerate() {
        if !vis {
            continue;
        }
        for v in &decoded[p] {
            total += (v[2] - mean_z).abs();
        }
    }
    Ok(total)
}

/// Everything the full loss needs for one sample. Visibility is the
/// authoritative gate; `PartState::visible` flags are ignored here.
pub struct LossInputs<'a> {
    pub pred_parts: &'a [Vec<[f64; 3]>],
    pub gt_parts: &'a [Vec<[f64; 3]>],
    pub pred_joints: &'a [Vec<[f64; 3]>],
    pub gt_joints: &'a [Vec<[f64; 3]>],
    pub pred_states: &'a [PartState],
    pub gt_states: &'a [PartState],
    pub camera: &'a CameraIntrinsics,
    pub templates: &'a HppmTemplateSet,
    pub visibility: &'a [bool],
    pub overlap_mode: OverlapLossMode,
}

/// Full breakdown: the reconstruction term bundles the six supervised
/// losses, the self-supervised term bundles overlap and depth consistency,
/// and the total is their sum.
pub fn total_loss(inputs: &LossInputs<'_>, weights: &LossWeights) -> Result<LossBreakdown> {
    weights.validate()?;
    let l_v = loss_vertex(inputs.pred_parts, inputs.gt_parts, inputs.visibility)?;
    let l_j3d = loss_joint3d(inputs.pred_joints, inputs.gt_joints, inputs.visibility)?;
    let l_j2d = loss_joint2d(inputs.pred_joints, inputs.gt_joints, inputs.camera, inputs.visibility)?;
    let (l_s, l_r, l_t) = loss_params(inputs.pred_states, inputs.gt_states, inputs.visibility)?;
    let l_ol = loss_overlap(
        inputs.pred_parts,
        inputs.templates,
        inputs.visibility,
        inputs.overlap_mode,
    )?;
    let l_dc = loss_depth_consistency(inputs.pred_parts, inputs.visibility)?;

    let l_div = weights.lambda_v * l_v
        + weights.lambda_j3d * l_j3d
        + weights.lambda_j2d * l_j2d
        + weights.lambda_s * l_s
        + weights.lambda_r * l_r
        + weights.lambda_t * l_t;
    let l_fu = weights.lambda_ol * l_ol + weights.lambda_dc * l_dc;
    Ok(LossBreakdown {
        l_v,
        l_j3d,
        l_j2d,
        l_s,
        l_r,
        l_t,
        l_ol,
        l_dc,
        l_div,
        l_fu,
        l_total: l_div + l_fu,
    })
}
