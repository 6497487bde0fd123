//! Fixed naming tables: the 15 body parts, the 17 joints, which joints each
//! part is responsible for, and the default 23-segment merge map for the
//! bundled synthetic body.

use crate::template::MergeMap;

pub const NUM_PARTS: usize = 15;

pub const PART_NAMES: [&str; NUM_PARTS] = [
    "Abdomen",
    "Left Thigh",
    "Right Thigh",
    "Left Calf",
    "Right Calf",
    "Chest",
    "Left Foot",
    "Right Foot",
    "Head",
    "Left Upper Arm",
    "Right Upper Arm",
    "Left Forearm",
    "Right Forearm",
    "Left Hand",
    "Right Hand",
];

pub const NUM_JOINTS: usize = 17;

pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "Pelvis",
    "Right Hip",
    "Right Knee",
    "Right Ankle",
    "Left Hip",
    "Left Knee",
    "Left Ankle",
    "Torso",
    "Neck",
    "Nose",
    "Head",
    "Left Shoulder",
    "Left Elbow",
    "Left Wrist",
    "Right Shoulder",
    "Right Elbow",
    "Right Wrist",
];

/// Joints each part regresses. A joint sitting between two parts (hip, knee,
/// ankle, wrist, shoulder, elbow, torso, neck) is listed by both, so either
/// side can predict it when the other is out of frame.
pub const PART_JOINTS: [&[usize]; NUM_PARTS] = [
    &[0, 1, 4, 7],    // Abdomen: Pelvis, Right Hip, Left Hip, Torso
    &[4, 5],          // Left Thigh: Left Hip, Left Knee
    &[1, 2],          // Right Thigh: Right Hip, Right Knee
    &[5, 6],          // Left Calf: Left Knee, Left Ankle
    &[2, 3],          // Right Calf: Right Knee, Right Ankle
    &[7, 8, 11, 14],  // Chest: Torso, Neck, both Shoulders
    &[6],             // Left Foot: Left Ankle
    &[3],             // Right Foot: Right Ankle
    &[8, 9, 10],      // Head: Neck, Nose, Head
    &[11, 12],        // Left Upper Arm: Left Shoulder, Left Elbow
    &[14, 15],        // Right Upper Arm: Right Shoulder, Right Elbow
    &[12, 13],        // Left Forearm: Left Elbow, Left Wrist
    &[15, 16],        // Right Forearm: Right Elbow, Right Wrist
    &[13],            // Left Hand: Left Wrist
    &[16],            // Right Hand: Right Wrist
];

/// Parts that list joint `j`, in ascending part order.
pub fn joint_owners(j: usize) -> Vec<usize> {
    (0..NUM_PARTS).filter(|&p| PART_JOINTS[p].contains(&j)).collect()
}

/// Default merge of the synthetic body's 23 bone segments into the 15 parts.
/// Indexed by bone; see `synth` for the bone layout.
pub const DEFAULT_SEGMENT_TO_PART: [usize; 23] = [
    0,  // pelvis -> left hip link
    0,  // pelvis -> right hip link
    0,  // pelvis -> lower spine
    1,  // left thigh
    2,  // right thigh
    0,  // mid spine
    3,  // left calf
    4,  // right calf
    5,  // upper spine
    6,  // left foot
    7,  // right foot
    5,  // neck link
    5,  // left collar
    5,  // right collar
    8,  // head
    5,  // left shoulder link
    5,  // right shoulder link
    9,  // left upper arm
    10, // right upper arm
    11, // left forearm
    12, // right forearm
    13, // left hand
    14, // right hand
];

pub fn default_merge_map() -> MergeMap {
    MergeMap::new(
        DEFAULT_SEGMENT_TO_PART.to_vec(),
        PART_NAMES.iter().map(|s| s.to_string()).collect(),
    )
    .expect("default merge map is valid")
}
