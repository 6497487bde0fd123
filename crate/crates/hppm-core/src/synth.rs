//! Deterministic synthetic articulated body.
//!
//! A 24-joint, 23-bone humanoid skeleton carries one tube of vertices per
//! bone; bridge faces stitch tubes together at the joints so the mesh graph
//! is connected and part dilation can cross joints. Posing is linear blend
//! skinning over per-bone rigid transforms, so part slices, joints and blend
//! weights are all analytically known.
//!
//! Key construction invariants the rest of the pipeline leans on:
//!
//! - Every vertex's largest blend weight belongs to its own bone (own share
//!   is at least 0.55), so argmax segmentation reproduces the tubes exactly.
//! - All vertices of one ring share a single blend-weight vector, rings are
//!   centered on the bone axis, and the terminal rings sit exactly on the
//!   joints. Every transform that can influence a ring at a joint keeps that
//!   joint fixed, so the posed ring centroid equals the posed joint in every
//!   pose; each named joint is therefore an exact affine function of any
//!   owning part's vertices.
//! - Tubes are long enough (12 rings) that two 5-step dilations entering a
//!   tube from opposite ends can never meet, which keeps every vertex
//!   covered by at most two parts.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::numeric::{derive_seed, norm3, sub3};
use crate::parts::NUM_JOINTS;
use crate::template::BlendWeights;
use crate::transform::PartTransform;

pub const N_TREE_JOINTS: usize = 24;
pub const N_BONES: usize = 23;

/// Rest positions of the 24 skeleton joints, meters. +x is the body's left,
/// +y is up, +z is forward. Feet point forward, arms hang along x (T-pose).
pub const REST_JOINTS: [[f64; 3]; N_TREE_JOINTS] = [
    [0.00, 0.95, 0.00],   // 0 pelvis (root)
    [0.10, 0.90, 0.00],   // 1 left hip
    [-0.10, 0.90, 0.00],  // 2 right hip
    [0.00, 1.05, 0.00],   // 3 spine 1
    [0.11, 0.50, 0.00],   // 4 left knee
    [-0.11, 0.50, 0.00],  // 5 right knee
    [0.00, 1.18, 0.00],   // 6 spine 2
    [0.12, 0.10, 0.00],   // 7 left ankle
    [-0.12, 0.10, 0.00],  // 8 right ankle
    [0.00, 1.30, 0.00],   // 9 spine 3
    [0.12, 0.03, 0.12],   // 10 left toe
    [-0.12, 0.03, 0.12],  // 11 right toe
    [0.00, 1.45, 0.00],   // 12 neck
    [0.08, 1.40, 0.00],   // 13 left collar
    [-0.08, 1.40, 0.00],  // 14 right collar
    [0.00, 1.70, 0.00],   // 15 head top
    [0.20, 1.40, 0.00],   // 16 left shoulder
    [-0.20, 1.40, 0.00],  // 17 right shoulder
    [0.45, 1.40, 0.00],   // 18 left elbow
    [-0.45, 1.40, 0.00],  // 19 right elbow
    [0.70, 1.40, 0.00],   // 20 left wrist
    [-0.70, 1.40, 0.00],  // 21 right wrist
    [0.80, 1.40, 0.00],   // 22 left fingertips
    [-0.80, 1.40, 0.00],  // 23 right fingertips
];

/// Bone b runs from `BONE_ENDPOINTS[b].0` to `BONE_ENDPOINTS[b].1`; the end
/// joint of bone b is always joint b + 1, so the parent bone of b (the bone
/// ending at b's start joint) is `start - 1` unless b starts at the root.
pub const BONE_ENDPOINTS: [(usize, usize); N_BONES] = [
    (0, 1),   // 0 pelvis -> left hip
    (0, 2),   // 1 pelvis -> right hip
    (0, 3),   // 2 pelvis -> spine 1
    (1, 4),   // 3 left thigh
    (2, 5),   // 4 right thigh
    (3, 6),   // 5 mid spine
    (4, 7),   // 6 left calf
    (5, 8),   // 7 right calf
    (6, 9),   // 8 upper spine
    (7, 10),  // 9 left foot
    (8, 11),  // 10 right foot
    (9, 12),  // 11 neck link
    (9, 13),  // 12 left collar
    (9, 14),  // 13 right collar
    (12, 15), // 14 head
    (13, 16), // 15 left shoulder link
    (14, 17), // 16 right shoulder link
    (16, 18), // 17 left upper arm
    (17, 19), // 18 right upper arm
    (18, 20), // 19 left forearm
    (19, 21), // 20 right forearm
    (20, 22), // 21 left hand
    (21, 23), // 22 right hand
];

/// Tube radii per bone, meters. Adjacent bones get distinct radii so the
/// coincident terminal rings of neighboring tubes never collapse onto the
/// same points.
pub const DEFAULT_BONE_RADII: [f64; N_BONES] = [
    0.060, 0.060, 0.070, // hip links, lower spine
    0.055, 0.055, // thighs
    0.075, // mid spine
    0.045, 0.045, // calves
    0.080, // upper spine
    0.030, 0.030, // feet
    0.035, // neck link
    0.040, 0.040, // collars
    0.065, // head
    0.036, 0.036, // shoulder links
    0.042, 0.042, // upper arms
    0.032, 0.032, // forearms
    0.022, 0.022, // hands
];

/// Bones posed with the (smaller) torso angle limit; everything else uses
/// the limb limit.
const TORSO_BONES: [bool; N_BONES] = [
    true, true, true, // hip links, lower spine
    false, false, // thighs
    true, // mid spine
    false, false, // calves
    true, // upper spine
    false, false, // feet
    true, // neck link
    true, true, // collars
    true, // head (kept gentle)
    true, true, // shoulder links
    false, false, // upper arms
    false, false, // forearms
    false, false, // hands
];

/// Tree joint backing each named joint; the Nose (index 9) has no tree
/// joint and is derived from the head bone frame instead.
const NAMED_TO_TREE: [usize; NUM_JOINTS] = [
    0,          // Pelvis
    2,          // Right Hip
    5,          // Right Knee
    8,          // Right Ankle
    1,          // Left Hip
    4,          // Left Knee
    7,          // Left Ankle
    6,          // Torso (spine 2)
    12,         // Neck
    usize::MAX, // Nose (derived)
    15,         // Head (top)
    16,         // Left Shoulder
    18,         // Left Elbow
    20,         // Left Wrist
    17,         // Right Shoulder
    19,         // Right Elbow
    21,         // Right Wrist
];

const HEAD_BONE: usize = 14;
/// Nose offset in the head bone's rest frame: along the bone, then forward.
const NOSE_ALONG: f64 = 0.17;
const NOSE_FORWARD: f64 = 0.10;

/// Fraction of a bone's own weight given away near each end, and the length
/// fraction over which the share ramps to zero.
const WEIGHT_SHARE: f64 = 0.45;
const WEIGHT_RAMP: f64 = 0.4;

/// Ring angular offset per bone, keeps rings of different bones from
/// aligning vertex-for-vertex.
const RING_PHASE_STEP: f64 = 0.7;

/// Vertex layout: tubes are stored bone-major, ring-major, segment-minor.
pub fn tube_vertex_id(spec: &SynthBodySpec, bone: usize, ring: usize, seg: usize) -> usize {
    bone * spec.rings_per_bone * spec.ring_segments + ring * spec.ring_segments + seg
}

pub fn parent_bone(b: usize) -> Option<usize> {
    let start = BONE_ENDPOINTS[b].0;
    if start == 0 {
        None
    } else {
        Some(start - 1)
    }
}

pub fn child_bones(b: usize) -> Vec<usize> {
    let end = BONE_ENDPOINTS[b].1;
    (0..N_BONES).filter(|&c| BONE_ENDPOINTS[c].0 == end).collect()
}

/// Generator settings. `bone_count` exists for config validation and must
/// match the built-in skeleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthBodySpec {
    pub seed: u64,
    pub bone_count: usize,
    pub rings_per_bone: usize,
    pub ring_segments: usize,
    pub bone_radii: Vec<f64>,
    /// Axis-angle magnitude limit for limb bones, radians.
    pub limb_angle_limit: f64,
    /// Axis-angle magnitude limit for torso/neck/collar bones, radians.
    pub torso_angle_limit: f64,
    /// Per-bone length multipliers are drawn uniformly from this range.
    pub length_scale_range: [f64; 2],
    /// Per-bone radius multipliers are drawn uniformly from this range.
    pub radius_scale_range: [f64; 2],
    /// Root placement: xy jitter and depth range (camera looks along +z).
    pub root_xy_jitter: f64,
    pub depth_range: [f64; 2],
    /// Root orientation jitter (yaw, then pitch and roll), radians.
    pub root_yaw_limit: f64,
    pub root_tilt_limit: f64,
}

impl Default for SynthBodySpec {
    fn default() -> Self {
        SynthBodySpec {
            seed: 0,
            bone_count: N_BONES,
            rings_per_bone: 12,
            ring_segments: 8,
            bone_radii: DEFAULT_BONE_RADII.to_vec(),
            limb_angle_limit: 0.30,
            torso_angle_limit: 0.10,
            length_scale_range: [0.95, 1.05],
            radius_scale_range: [0.97, 1.03],
            root_xy_jitter: 0.20,
            depth_range: [3.2, 3.8],
            root_yaw_limit: 0.40,
            root_tilt_limit: 0.10,
        }
    }
}

impl SynthBodySpec {
    pub fn validate(&self) -> Result<()> {
        if self.bone_count < 2 {
            return Err(Error::Config("bone_count must be at least 2".into()));
        }
        if self.bone_count != N_BONES {
            return Err(Error::Config(format!(
                "bone_count {} does not match the built-in skeleton ({N_BONES} bones)",
                self.bone_count
            )));
        }
        if self.rings_per_bone < 2 {
            return Err(Error::Config("rings_per_bone must be at least 2".into()));
        }
        if self.ring_segments < 3 {
            return Err(Error::Config("ring_segments must be at least 3".into()));
        }
        if self.bone_radii.len() != N_BONES {
            return Err(Error::SizeMismatch {
                what: "bone_radii".into(),
                expected: N_BONES,
                got: self.bone_radii.len(),
            });
        }
        if !self.bone_radii.iter().all(|&r| r > 0.0) {
            return Err(Error::Config("bone radii must be positive".into()));
        }
        for limit in [self.limb_angle_limit, self.torso_angle_limit] {
            if !(0.0..std::f64::consts::PI).contains(&limit) {
                return Err(Error::Config(format!(
                    "angle limit {limit} outside [0, pi)"
                )));
            }
        }
        for range in [self.length_scale_range, self.radius_scale_range, self.depth_range] {
            if !(range[0] <= range[1] && range[0] > 0.0) {
                return Err(Error::Config(format!("bad sampling range {range:?}")));
            }
        }
        Ok(())
    }
}

/// Per-bone multipliers on rest offsets and tube radii.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeScales {
    pub length: Vec<f64>,
    pub radius: Vec<f64>,
}

impl ShapeScales {
    pub fn unit() -> Self {
        ShapeScales { length: vec![1.0; N_BONES], radius: vec![1.0; N_BONES] }
    }
}

/// Root rigid motion (rotation about the rest pelvis, then translation)
/// plus one rotation per bone about its start joint.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyPose {
    pub root: PartTransform,
    pub bone_rotations: Vec<Matrix3<f64>>,
}

impl BodyPose {
    pub fn rest() -> Self {
        BodyPose {
            root: PartTransform::identity(),
            bone_rotations: vec![Matrix3::identity(); N_BONES],
        }
    }
}

/// A generated body: mesh, skinning weights, the 17 named joints, the raw
/// tree joints and the per-bone skinning transforms.
#[derive(Debug, Clone)]
pub struct SynthBody {
    pub mesh: Mesh,
    pub weights: BlendWeights,
    /// Named joints in `parts::JOINT_NAMES` order.
    pub joints: Vec<[f64; 3]>,
    pub tree_joints: Vec<[f64; 3]>,
    pub bone_transforms: Vec<PartTransform>,
}

/// Rest-pose, unit-scale body: the whole-body template everything is
/// segmented from.
pub fn synth_template(spec: &SynthBodySpec) -> Result<SynthBody> {
    pose_body(spec, &ShapeScales::unit(), &BodyPose::rest())
}

/// Samples shape scales and a pose from `derive_seed(spec.seed, pose_seed)`
/// and builds the posed body. Bitwise deterministic for identical inputs.
pub fn synth_body(spec: &SynthBodySpec, pose_seed: u64) -> Result<SynthBody> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, pose_seed));
    let scales = sample_scales(spec, &mut rng);
    let pose = sample_pose(spec, &mut rng);
    pose_body(spec, &scales, &pose)
}

/// Draw order is fixed: per-bone length scales, then per-bone radius scales.
pub fn sample_scales(spec: &SynthBodySpec, rng: &mut impl Rng) -> ShapeScales {
    let [l0, l1] = spec.length_scale_range;
    let [r0, r1] = spec.radius_scale_range;
    let length = (0..N_BONES).map(|_| rng.random_range(l0..=l1)).collect();
    let radius = (0..N_BONES).map(|_| rng.random_range(r0..=r1)).collect();
    ShapeScales { length, radius }
}

/// Draw order is fixed: root yaw, pitch, roll, translation xyz, then one
/// axis-angle rotation per bone.
pub fn sample_pose(spec: &SynthBodySpec, rng: &mut impl Rng) -> BodyPose {
    let yaw = rng.random_range(-spec.root_yaw_limit..=spec.root_yaw_limit);
    let pitch = rng.random_range(-spec.root_tilt_limit..=spec.root_tilt_limit);
    let roll = rng.random_range(-spec.root_tilt_limit..=spec.root_tilt_limit);
    let root_rot = Rotation3::from_axis_angle(&Vector3::y_axis(), yaw)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), pitch)
        * Rotation3::from_axis_angle(&Vector3::z_axis(), roll);
    let tx = rng.random_range(-spec.root_xy_jitter..=spec.root_xy_jitter);
    let ty = rng.random_range(-spec.root_xy_jitter..=spec.root_xy_jitter) - REST_JOINTS[0][1];
    let tz = rng.random_range(spec.depth_range[0]..=spec.depth_range[1]);
    let root = PartTransform {
        rotation: *root_rot.matrix(),
        translation: Vector3::new(tx, ty, tz),
    };

    let bone_rotations = (0..N_BONES)
        .map(|b| {
            let limit = if TORSO_BONES[b] { spec.torso_angle_limit } else { spec.limb_angle_limit };
            let axis = random_unit(rng);
            let angle = rng.random_range(-limit..=limit);
            *Rotation3::from_axis_angle(&Unit::new_unchecked(axis), angle).matrix()
        })
        .collect();

    BodyPose { root, bone_rotations }
}

fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Builds the body for explicit scales and pose. Zero pose and unit scales
/// reproduce the template exactly.
pub fn pose_body(spec: &SynthBodySpec, scales: &ShapeScales, pose: &BodyPose) -> Result<SynthBody> {
    spec.validate()?;
    if scales.length.len() != N_BONES || scales.radius.len() != N_BONES {
        return Err(Error::SizeMismatch {
            what: "shape scale vectors".into(),
            expected: N_BONES,
            got: scales.length.len().min(scales.radius.len()),
        });
    }
    if pose.bone_rotations.len() != N_BONES {
        return Err(Error::SizeMismatch {
            what: "bone rotations".into(),
            expected: N_BONES,
            got: pose.bone_rotations.len(),
        });
    }

    // Scaled rest skeleton: each bone offset stretched by its length scale.
    let mut rest = [[0.0f64; 3]; N_TREE_JOINTS];
    rest[0] = REST_JOINTS[0];
    for (b, &(s, e)) in BONE_ENDPOINTS.iter().enumerate() {
        let off = sub3(REST_JOINTS[e], REST_JOINTS[s]);
        for k in 0..3 {
            rest[e][k] = rest[s][k] + scales.length[b] * off[k];
        }
    }

    // Forward kinematics. G[b] maps rest space to world for material on
    // bone b; A at a joint is G of the bone ending there. The root rotation
    // acts about the rest pelvis, so the root translation moves the pelvis
    // itself: tree_joints[0] = rest pelvis + root translation.
    let pelvis = Vector3::from(rest[0]);
    let shift = PartTransform { rotation: Matrix3::identity(), translation: pose.root.translation };
    let a_root = shift.compose(&rotation_about(&pose.root.rotation, &pelvis));
    let mut g = Vec::with_capacity(N_BONES);
    for (b, &(s, _)) in BONE_ENDPOINTS.iter().enumerate() {
        let a_start = if s == 0 { a_root } else { g[s - 1] };
        let pivot = Vector3::from(rest[s]);
        let local = rotation_about(&pose.bone_rotations[b], &pivot);
        g.push(a_start.compose(&local));
    }

    // Posed joints: a joint's position comes from its parent chain only.
    let mut tree_joints = vec![[0.0f64; 3]; N_TREE_JOINTS];
    tree_joints[0] = a_root.apply_point(rest[0]);
    for b in 0..N_BONES {
        let (_, e) = BONE_ENDPOINTS[b];
        tree_joints[e] = g[b].apply_point(rest[e]);
    }

    let mut joints = Vec::with_capacity(NUM_JOINTS);
    for (j, &t) in NAMED_TO_TREE.iter().enumerate() {
        if j == 9 {
            // Nose: fixed offset in the head bone's rest frame.
            let neck = rest[BONE_ENDPOINTS[HEAD_BONE].0];
            let nose_rest = [
                neck[0],
                neck[1] + scales.length[HEAD_BONE] * NOSE_ALONG,
                neck[2] + scales.radius[HEAD_BONE] * NOSE_FORWARD,
            ];
            joints.push(g[HEAD_BONE].apply_point(nose_rest));
        } else {
            joints.push(tree_joints[t]);
        }
    }

    // Tube geometry in rest space plus per-ring blend weights.
    let rings = spec.rings_per_bone;
    let segs = spec.ring_segments;
    let n_vertices = N_BONES * rings * segs;
    let mut rest_vertices = Vec::with_capacity(n_vertices);
    let mut weights = vec![0.0f64; n_vertices * N_BONES];

    for b in 0..N_BONES {
        let (s, e) = BONE_ENDPOINTS[b];
        let start = Vector3::from(rest[s]);
        let end = Vector3::from(rest[e]);
        let axis_raw = end - start;
        let len = axis_raw.norm();
        if len <= 1e-9 {
            return Err(Error::Data(format!("bone {b} has zero length")));
        }
        let axis = axis_raw / len;
        let pick = if axis.dot(&Vector3::y_axis()).abs() < 0.99 {
            Vector3::y_axis().into_inner()
        } else {
            Vector3::x_axis().into_inner()
        };
        let u = {
            let c = pick.cross(&axis);
            c / c.norm()
        };
        let w_dir = axis.cross(&u);
        let radius = spec.bone_radii[b] * scales.radius[b];
        let phase = b as f64 * RING_PHASE_STEP;

        let parent = parent_bone(b);
        let children = child_bones(b);

        for r in 0..rings {
            let t = r as f64 / (rings - 1) as f64;
            let center = start + axis_raw * t;

            // One weight vector per ring; shares ramp linearly to zero away
            // from the joints and never exceed the own-bone weight.
            let parent_share = match parent {
                Some(_) if t < WEIGHT_RAMP => WEIGHT_SHARE * (WEIGHT_RAMP - t) / WEIGHT_RAMP,
                _ => 0.0,
            };
            let child_share = if !children.is_empty() && t > 1.0 - WEIGHT_RAMP {
                WEIGHT_SHARE * (t - (1.0 - WEIGHT_RAMP)) / WEIGHT_RAMP
            } else {
                0.0
            };

            for k in 0..segs {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / segs as f64 + phase;
                let p = center + (u * theta.cos() + w_dir * theta.sin()) * radius;
                let vid = rest_vertices.len();
                rest_vertices.push([p[0], p[1], p[2]]);

                let row = &mut weights[vid * N_BONES..(vid + 1) * N_BONES];
                row[b] = 1.0 - parent_share - child_share;
                if let Some(pb) = parent {
                    row[pb] += parent_share;
                }
                if !children.is_empty() {
                    let each = child_share / children.len() as f64;
                    for &c in &children {
                        row[c] += each;
                    }
                }
            }
        }
    }

    // Faces: tube walls, then bridges across each joint.
    let vid = |b: usize, r: usize, k: usize| b * rings * segs + r * segs + k;
    let mut faces = Vec::new();
    for b in 0..N_BONES {
        for r in 0..rings - 1 {
            for k in 0..segs {
                let kn = (k + 1) % segs;
                faces.push([vid(b, r, k), vid(b, r, kn), vid(b, r + 1, k)]);
                faces.push([vid(b, r, kn), vid(b, r + 1, kn), vid(b, r + 1, k)]);
            }
        }
    }
    let mut bridge = |ring_a: Vec<usize>, ring_b: Vec<usize>| {
        for k in 0..segs {
            let kn = (k + 1) % segs;
            faces.push([ring_a[k], ring_a[kn], ring_b[k]]);
            faces.push([ring_a[kn], ring_b[kn], ring_b[k]]);
        }
    };
    let ring_ids = |b: usize, r: usize| (0..segs).map(|k| vid(b, r, k)).collect::<Vec<_>>();
    let mut root_bones = Vec::new();
    for b in 0..N_BONES {
        match parent_bone(b) {
            Some(pb) => bridge(ring_ids(pb, rings - 1), ring_ids(b, 0)),
            None => root_bones.push(b),
        }
    }
    // Root bones have no parent tube; chain their start rings together.
    for &b in &root_bones[1..] {
        bridge(ring_ids(root_bones[0], 0), ring_ids(b, 0));
    }

    // Skinning.
    let posed: Vec<[f64; 3]> = rest_vertices
        .iter()
        .enumerate()
        .map(|(vid, p)| {
            let row = &weights[vid * N_BONES..(vid + 1) * N_BONES];
            let mut out = [0.0f64; 3];
            for (b, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    let q = g[b].apply_point(*p);
                    for k in 0..3 {
                        out[k] += w * q[k];
                    }
                }
            }
            out
        })
        .collect();

    let mesh = Mesh::new(posed, faces)?;
    let weights = BlendWeights::new(n_vertices, N_BONES, weights)?;
    let bone_transforms = g;
    Ok(SynthBody { mesh, weights, joints, tree_joints, bone_transforms })
}

/// Rotation about a pivot point as a PartTransform: x -> R(x - c) + c.
fn rotation_about(r: &Matrix3<f64>, c: &Vector3<f64>) -> PartTransform {
    PartTransform { rotation: *r, translation: c - r * c }
}

/// Sanity helper for tests: total tube length of the rest skeleton.
pub fn rest_height() -> f64 {
    let ys: Vec<f64> = REST_JOINTS.iter().map(|j| j[1]).collect();
    let max = ys.iter().cloned().fold(f64::MIN, f64::max);
    let min = ys.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

/// Shortest scaled bone length; used by tests checking that two 5-step
/// dilations cannot meet inside a 12-ring tube.
pub fn min_bone_length(scales: &ShapeScales) -> f64 {
    (0..N_BONES)
        .map(|b| {
            let (s, e) = BONE_ENDPOINTS[b];
            norm3(sub3(REST_JOINTS[e], REST_JOINTS[s])) * scales.length[b]
        })
        .fold(f64::MAX, f64::min)
}
