//! The parallel entry points must produce bit-identical results to their
//! sequential twins and to repeated runs of themselves: training and
//! annotation are numeric pipelines whose outputs feed content-hashed
//! bundles.

use hppm_core::annotate::{annotate_samples, annotate_samples_seq, FitMode};
use hppm_core::mesh::Mesh;
use hppm_core::parts::default_merge_map;
use hppm_core::shape::TrainingConfig;
use hppm_core::synth::{pose_body, sample_pose, sample_scales, synth_template, SynthBodySpec};
use hppm_core::template::{build_templates, HppmTemplateSet};
use hppm_core::train::{train_all_parts, train_all_parts_seq, RegressorMode, TrainedParts, TrainingData};
use hppm_core::transform::CameraIntrinsics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture() -> (HppmTemplateSet, TrainingData) {
    let spec = SynthBodySpec::default();
    let template = synth_template(&spec).unwrap();
    let templates =
        build_templates(&template.mesh, &template.weights, &default_merge_map(), 5).unwrap();
    let mut bodies = Vec::new();
    let mut joints = Vec::new();
    for seed in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scales = sample_scales(&spec, &mut rng);
        let pose = sample_pose(&spec, &mut rng);
        let body = pose_body(&spec, &scales, &pose).unwrap();
        bodies.push(body.mesh);
        joints.push(body.joints);
    }
    (templates, TrainingData { bodies, joints })
}

fn assert_trained_bitwise_equal(a: &TrainedParts, b: &TrainedParts) {
    assert_eq!(a.models.len(), b.models.len());
    for (x, y) in a.models.iter().zip(&b.models) {
        assert_eq!(x.part_id, y.part_id);
        assert_eq!(x.k, y.k);
        assert_eq!(x.training_report, y.training_report);
        assert_eq!(x.mean.len(), y.mean.len());
        for (u, v) in x.mean.iter().zip(y.mean.iter()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
        assert_eq!(x.basis.shape(), y.basis.shape());
        for (u, v) in x.basis.iter().zip(y.basis.iter()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
    for (x, y) in a.regressors.iter().zip(&b.regressors) {
        assert_eq!(x.joint_ids, y.joint_ids);
        assert_eq!(x.matrix.shape(), y.matrix.shape());
        for (u, v) in x.matrix.iter().zip(y.matrix.iter()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
}

#[test]
fn training_matches_its_sequential_twin_bit_for_bit() {
    let (templates, data) = fixture();
    let cfg = TrainingConfig { max_error_mm: 2.0, k_min: 1, k_max: 8 };
    let par = train_all_parts(&templates, &data, &cfg, RegressorMode::PerSample).unwrap();
    let seq = train_all_parts_seq(&templates, &data, &cfg, RegressorMode::PerSample).unwrap();
    let again = train_all_parts(&templates, &data, &cfg, RegressorMode::PerSample).unwrap();
    assert_trained_bitwise_equal(&par, &seq);
    assert_trained_bitwise_equal(&par, &again);
}

#[test]
fn annotation_matches_its_sequential_twin_bit_for_bit() {
    let (templates, data) = fixture();
    let cfg = TrainingConfig { max_error_mm: 1e-9, k_min: 1, k_max: 8 };
    let trained =
        train_all_parts(&templates, &data, &cfg, RegressorMode::PerSample).unwrap();
    let cam = CameraIntrinsics::new(1000.0, 1000.0, 500.0, 500.0).unwrap();

    let bodies: Vec<Mesh> = data.bodies[..6].to_vec();
    let par = annotate_samples(
        &templates,
        &trained.models,
        &trained.regressors,
        &bodies,
        &cam,
        FitMode::Rigid,
    )
    .unwrap();
    let seq = annotate_samples_seq(
        &templates,
        &trained.models,
        &trained.regressors,
        &bodies,
        &cam,
        FitMode::Rigid,
    )
    .unwrap();
    let again = annotate_samples(
        &templates,
        &trained.models,
        &trained.regressors,
        &bodies,
        &cam,
        FitMode::Rigid,
    )
    .unwrap();
    assert_eq!(par, seq);
    assert_eq!(par, again);

    // Structural equality is necessary but f64 PartialEq would also accept
    // -0.0 == 0.0; pin the payloads to their bits.
    for (a, b) in par.iter().zip(&seq) {
        for (pa, pb) in a.parts.iter().zip(&b.parts) {
            for (x, y) in pa.s.iter().zip(&pb.s) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            for c in 0..3 {
                assert_eq!(pa.t[c].to_bits(), pb.t[c].to_bits());
            }
            for c in 0..6 {
                assert_eq!(pa.rot6d.0[c].to_bits(), pb.rot6d.0[c].to_bits());
            }
        }
    }
}
