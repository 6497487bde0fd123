//! Partial-visibility benchmark harness: square crops, the 50%-bbox
//! visibility rule, and evaluation metrics.
//!
//! Everything here is geometric (rectangles, projected points); no pixels
//! are rendered. All randomness is seed-determined with a documented draw
//! order, so benchmark sets regenerate bit-identically.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dist3, map_indexed, map_indexed_seq, pairwise_sum};
use crate::parts::{joint_owners, NUM_JOINTS, NUM_PARTS, PART_NAMES};

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn width(&self) -> f64 {
        (self.max[0] - self.min[0]).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.max[1] - self.min[1]).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = (self.max[0].min(other.max[0]) - self.min[0].max(other.min[0])).max(0.0);
        let h = (self.max[1].min(other.max[1]) - self.min[1].max(other.min[1])).max(0.0);
        w * h
    }
}

/// Bounding box of projected points; `None` when there are no points.
pub fn bbox_2d(points: &[[f64; 2]]) -> Option<Rect> {
    let first = points.first()?;
    let mut r = Rect { min: *first, max: *first };
    for p in points {
        r.min[0] = r.min[0].min(p[0]);
        r.min[1] = r.min[1].min(p[1]);
        r.max[0] = r.max[0].max(p[0]);
        r.max[1] = r.max[1].max(p[1]);
    }
    Some(r)
}

/// One square crop with its per-part visibility flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropSpec {
    pub sample_id: usize,
    pub center: [f64; 2],
    pub side: f64,
    pub visibility: Vec<bool>,
}

impl CropSpec {
    pub fn rect(&self) -> Rect {
        let h = self.side / 2.0;
        Rect {
            min: [self.center[0] - h, self.center[1] - h],
            max: [self.center[0] + h, self.center[1] + h],
        }
    }

    pub fn n_visible(&self) -> usize {
        self.visibility.iter().filter(|&&v| v).count()
    }
}

/// Crop generation policy. The side range is in fractions of the larger
/// human-bbox dimension; the published construction fixes attempts = 20 and
/// keeps 1 to 4 visible parts but gives no side distribution, so the range
/// here is a configurable default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CropConfig {
    pub attempts: usize,
    pub keep_range: [usize; 2],
    pub side_range: [f64; 2],
}

impl Default for CropConfig {
    fn default() -> Self {
        CropConfig { attempts: 20, keep_range: [1, 4], side_range: [0.2, 1.2] }
    }
}

impl CropConfig {
    pub fn validate(&self) -> Result<()> {
        if self.keep_range[0] < 1 || self.keep_range[0] > self.keep_range[1] {
            return Err(Error::Config(format!(
                "keep_range must satisfy 1 <= lo <= hi, got {:?}",
                self.keep_range
            )));
        }
        if !(self.side_range[0] > 0.0 && self.side_range[0] <= self.side_range[1]) {
            return Err(Error::Config(format!(
                "side_range must satisfy 0 < lo <= hi, got {:?}",
                self.side_range
            )));
        }
        Ok(())
    }
}

/// A part is visible when at least half of its projected bounding box lies
/// inside the crop (inclusive at exactly 50%). Degenerate boxes (empty or
/// zero area) are invisible.
pub fn part_visibility(parts_2d: &[Vec<[f64; 2]>], crop: &Rect) -> Vec<bool> {
    parts_2d
        .iter()
        .map(|pts| match bbox_2d(pts) {
            Some(bbox) => {
                let area = bbox.area();
                area > 0.0 && bbox.intersection_area(crop) >= 0.5 * area
            }
            None => false,
        })
        .collect()
}

/// Random square crops over one sample's projections.
///
/// Per attempt the draw order is fixed: center x, center y (uniform in the
/// human bbox), then side (uniform in side_range x the larger bbox
/// dimension). Attempts whose visible-part count falls outside keep_range
/// are discarded, so the result may be empty.
pub fn gen_crops(
    sample_id: usize,
    parts_2d: &[Vec<[f64; 2]>],
    human_bbox: &Rect,
    seed: u64,
    cfg: &CropConfig,
) -> Result<Vec<CropSpec>> {
    cfg.validate()?;
    if human_bbox.area() <= 0.0 {
        return Err(Error::Data("human bounding box has zero area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = human_bbox.width().max(human_bbox.height());
    let mut crops = Vec::new();
    for _ in 0..cfg.attempts {
        let cx = rng.random_range(human_bbox.min[0]..=human_bbox.max[0]);
        let cy = rng.random_range(human_bbox.min[1]..=human_bbox.max[1]);
        let side = rng.random_range(cfg.side_range[0] * dim..=cfg.side_range[1] * dim);
        let crop = CropSpec { sample_id, center: [cx, cy], side, visibility: Vec::new() };
        let visibility = part_visibility(parts_2d, &crop.rect());
        let n = visibility.iter().filter(|&&v| v).count();
        if n >= cfg.keep_range[0] && n <= cfg.keep_range[1] {
            crops.push(CropSpec { visibility, ..crop });
        }
    }
    Ok(crops)
}

/// Batch crop generation; sample i uses the seed derived from (base_seed, i)
/// and parallelizes when the `parallel` feature is on. Output order and
/// content are identical in both builds.
pub fn gen_crops_batch(
    samples: &[(Vec<Vec<[f64; 2]>>, Rect)],
    base_seed: u64,
    cfg: &CropConfig,
) -> Result<Vec<Vec<CropSpec>>> {
    map_indexed(samples.len(), |i| {
        let (parts_2d, bbox) = &samples[i];
        gen_crops(i, parts_2d, bbox, crate::numeric::derive_seed(base_seed, i as u64), cfg)
    })
    .into_iter()
    .collect()
}

/// Always-sequential twin of [`gen_crops_batch`].
pub fn gen_crops_batch_seq(
    samples: &[(Vec<Vec<[f64; 2]>>, Rect)],
    base_seed: u64,
    cfg: &CropConfig,
) -> Result<Vec<Vec<CropSpec>>> {
    map_indexed_seq(samples.len(), |i| {
        let (parts_2d, bbox) = &samples[i];
        gen_crops(i, parts_2d, bbox, crate::numeric::derive_seed(base_seed, i as u64), cfg)
    })
    .into_iter()
    .collect()
}

/// Mean per-vertex error over visible parts, millimeters.
pub fn mpve(
    pred_parts: &[Vec<[f64; 3]>],
    gt_parts: &[Vec<[f64; 3]>],
    visibility: &[bool],
) -> Result<f64> {
    if pred_parts.len() != gt_parts.len() || visibility.len() != pred_parts.len() {
        return Err(Error::SizeMismatch {
            what: "mpve part counts".into(),
            expected: gt_parts.len(),
            got: pred_parts.len().min(visibility.len()),
        });
    }
    let mut norms = Vec::new();
    for (p, vis) in visibility.iter().enumerate() {
        if !vis {
            continue;
        }
        if pred_parts[p].len() != gt_parts[p].len() {
            return Err(Error::SizeMismatch {
                what: format!("mpve part {p} vertex count"),
                expected: gt_parts[p].len(),
                got: pred_parts[p].len(),
            });
        }
        norms.extend(pred_parts[p].iter().zip(&gt_parts[p]).map(|(a, b)| dist3(*a, *b)));
    }
    if norms.is_empty() {
        return Err(Error::Data("mpve: no visible vertices to compare".into()));
    }
    Ok(1000.0 * pairwise_sum(&norms) / norms.len() as f64)
}

/// Mean per-joint error over counted joints, millimeters. A named joint is
/// counted when at least one part owning it is visible.
pub fn mpjpe(
    pred_joints: &[[f64; 3]],
    gt_joints: &[[f64; 3]],
    visibility: &[bool],
) -> Result<f64> {
    if pred_joints.len() != NUM_JOINTS || gt_joints.len() != NUM_JOINTS {
        return Err(Error::SizeMismatch {
            what: "mpjpe joint count".into(),
            expected: NUM_JOINTS,
            got: pred_joints.len().min(gt_joints.len()),
        });
    }
    if visibility.len() != NUM_PARTS {
        return Err(Error::SizeMismatch {
            what: "mpjpe visibility flags".into(),
            expected: NUM_PARTS,
            got: visibility.len(),
        });
    }
    let mut norms = Vec::new();
    for j in 0..NUM_JOINTS {
        if joint_owners(j).iter().any(|&p| visibility[p]) {
            norms.push(dist3(pred_joints[j], gt_joints[j]));
        }
    }
    if norms.is_empty() {
        return Err(Error::Data("mpjpe: no counted joints".into()));
    }
    Ok(1000.0 * pairwise_sum(&norms) / norms.len() as f64)
}

/// Named-joint predictions from per-part regressed joints: each counted
/// joint is the average over its visible owning parts' predictions (shared
/// joints get multi-part averaging). `per_part[p]` is ordered like the
/// part's joint id list. Uncounted joints are returned as the origin with
/// `counted` false.
pub fn named_joints_from_parts(
    per_part: &[Vec<[f64; 3]>],
    part_joint_ids: &[Vec<usize>],
    visibility: &[bool],
) -> Result<(Vec<[f64; 3]>, Vec<bool>)> {
    if per_part.len() != visibility.len() || part_joint_ids.len() != per_part.len() {
        return Err(Error::SizeMismatch {
            what: "named joint part counts".into(),
            expected: visibility.len(),
            got: per_part.len().min(part_joint_ids.len()),
        });
    }
    let mut sums = [[0.0f64; 3]; NUM_JOINTS];
    let mut counts = [0usize; NUM_JOINTS];
    for (p, vis) in visibility.iter().enumerate() {
        if !vis {
            continue;
        }
        if per_part[p].len() != part_joint_ids[p].len() {
            return Err(Error::SizeMismatch {
                what: format!("part {p} regressed joint count"),
                expected: part_joint_ids[p].len(),
                got: per_part[p].len(),
            });
        }
        for (local, &j) in part_joint_ids[p].iter().enumerate() {
            if j >= NUM_JOINTS {
                return Err(Error::Data(format!("part {p} lists unknown joint id {j}")));
            }
            for axis in 0..3 {
                sums[j][axis] += per_part[p][local][axis];
            }
            counts[j] += 1;
        }
    }
    let mut joints = vec![[0.0f64; 3]; NUM_JOINTS];
    let mut counted = vec![false; NUM_JOINTS];
    for j in 0..NUM_JOINTS {
        if counts[j] > 0 {
            counted[j] = true;
            joints[j] = [
                sums[j][0] / counts[j] as f64,
                sums[j][1] / counts[j] as f64,
                sums[j][2] / counts[j] as f64,
            ];
        }
    }
    Ok((joints, counted))
}

/// Per-part slice of an aggregate metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartMetrics {
    pub part_id: usize,
    pub name: String,
    /// `None` when the part was never visible in the evaluated set.
    pub mpve_mm: Option<f64>,
    pub counted_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mpve_mm: f64,
    pub mpjpe_mm: f64,
    pub per_part: Vec<PartMetrics>,
    pub counted_vertices: usize,
    pub counted_joints: usize,
}

/// Accumulates per-vertex and per-joint error norms across samples and
/// reduces them with pairwise summation at the end.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    per_part_norms: Vec<Vec<f64>>,
    joint_norms: Vec<f64>,
}

impl MetricsAccumulator {
    pub fn new() -> Self {
        MetricsAccumulator { per_part_norms: vec![Vec::new(); NUM_PARTS], joint_norms: Vec::new() }
    }

    /// Adds one evaluated crop: visible parts' vertex errors and counted
    /// joints' errors.
    pub fn add_sample(
        &mut self,
        pred_parts: &[Vec<[f64; 3]>],
        gt_parts: &[Vec<[f64; 3]>],
        pred_joints: &[[f64; 3]],
        gt_joints: &[[f64; 3]],
        joint_counted: &[bool],
        visibility: &[bool],
    ) -> Result<()> {
        if pred_parts.len() != NUM_PARTS
            || gt_parts.len() != NUM_PARTS
            || visibility.len() != NUM_PARTS
        {
            return Err(Error::SizeMismatch {
                what: "metrics part counts".into(),
                expected: NUM_PARTS,
                got: pred_parts.len().min(gt_parts.len()).min(visibility.len()),
            });
        }
        for (p, vis) in visibility.iter().enumerate() {
            if !vis {
                continue;
            }
            if pred_parts[p].len() != gt_parts[p].len() {
                return Err(Error::SizeMismatch {
                    what: format!("metrics part {p} vertex count"),
                    expected: gt_parts[p].len(),
                    got: pred_parts[p].len(),
                });
            }
            self.per_part_norms[p]
                .extend(pred_parts[p].iter().zip(&gt_parts[p]).map(|(a, b)| dist3(*a, *b)));
        }
        for (j, &counted) in joint_counted.iter().enumerate() {
            if counted {
                self.joint_norms.push(dist3(pred_joints[j], gt_joints[j]));
            }
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<MetricsReport> {
        let mut all_vertex_norms = Vec::new();
        let mut per_part = Vec::with_capacity(NUM_PARTS);
        for (p, norms) in self.per_part_norms.iter().enumerate() {
            all_vertex_norms.extend_from_slice(norms);
            let mpve_mm = if norms.is_empty() {
                None
            } else {
                Some(1000.0 * pairwise_sum(norms) / norms.len() as f64)
            };
            per_part.push(PartMetrics {
                part_id: p,
                name: PART_NAMES[p].to_string(),
                mpve_mm,
                counted_vertices: norms.len(),
            });
        }
        if all_vertex_norms.is_empty() {
            return Err(Error::Data("metrics: no visible vertices accumulated".into()));
        }
        if self.joint_norms.is_empty() {
            return Err(Error::Data("metrics: no counted joints accumulated".into()));
        }
        Ok(MetricsReport {
            mpve_mm: 1000.0 * pairwise_sum(&all_vertex_norms) / all_vertex_norms.len() as f64,
            mpjpe_mm: 1000.0 * pairwise_sum(&self.joint_norms) / self.joint_norms.len() as f64,
            per_part,
            counted_vertices: all_vertex_norms.len(),
            counted_joints: self.joint_norms.len(),
        })
    }
}
