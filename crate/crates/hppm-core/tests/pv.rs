//! Partial-visibility harness tests: the 50%-bbox rule against a brute-force
//! rectangle oracle, crop generation determinism, and metric exactness.

use hppm_core::numeric::derive_seed;
use hppm_core::parts::{joint_owners, NUM_JOINTS, NUM_PARTS, PART_JOINTS, PART_NAMES};
use hppm_core::pv::*;
use hppm_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn part_joint_id_lists() -> Vec<Vec<usize>> {
    PART_JOINTS.iter().map(|ids| ids.to_vec()).collect()
}

#[test]
fn rect_geometry_is_exact() {
    let r = Rect { min: [1.0, 2.0], max: [4.0, 8.0] };
    assert_eq!(r.width(), 3.0);
    assert_eq!(r.height(), 6.0);
    assert_eq!(r.area(), 18.0);

    // Inverted extents clamp to zero instead of going negative.
    let inv = Rect { min: [4.0, 2.0], max: [1.0, 8.0] };
    assert_eq!(inv.width(), 0.0);
    assert_eq!(inv.area(), 0.0);

    let other = Rect { min: [3.0, 5.0], max: [10.0, 20.0] };
    assert_eq!(r.intersection_area(&other), 3.0); // 1 wide, 3 tall
    assert_eq!(other.intersection_area(&r), 3.0);

    // Disjoint and edge-touching rectangles overlap nothing.
    let disjoint = Rect { min: [100.0, 100.0], max: [101.0, 101.0] };
    assert_eq!(r.intersection_area(&disjoint), 0.0);
    let touching = Rect { min: [4.0, 2.0], max: [6.0, 8.0] };
    assert_eq!(r.intersection_area(&touching), 0.0);

    // Containment gives the smaller area.
    let inner = Rect { min: [2.0, 3.0], max: [3.0, 4.0] };
    assert_eq!(r.intersection_area(&inner), inner.area());
}

#[test]
fn bbox_bounds_every_point() {
    assert_eq!(bbox_2d(&[]), None);
    let single = bbox_2d(&[[3.0, -1.0]]).unwrap();
    assert_eq!(single, Rect { min: [3.0, -1.0], max: [3.0, -1.0] });
    assert_eq!(single.area(), 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let pts: Vec<[f64; 2]> = (0..rng.random_range(1..40))
            .map(|_| std::array::from_fn(|_| rng.random_range(-100.0..100.0)))
            .collect();
        let b = bbox_2d(&pts).unwrap();
        for p in &pts {
            assert!(b.min[0] <= p[0] && p[0] <= b.max[0]);
            assert!(b.min[1] <= p[1] && p[1] <= b.max[1]);
        }
        // Tight: every edge is achieved by some point.
        assert!(pts.iter().any(|p| p[0] == b.min[0]));
        assert!(pts.iter().any(|p| p[0] == b.max[0]));
        assert!(pts.iter().any(|p| p[1] == b.min[1]));
        assert!(pts.iter().any(|p| p[1] == b.max[1]));
    }
}

/// Interval overlap written with explicit branches, so the oracle shares no
/// code shape with the implementation under test.
fn overlap_1d(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    let lo = if a0 > b0 { a0 } else { b0 };
    let hi = if a1 < b1 { a1 } else { b1 };
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

fn oracle_visible(points: &[[f64; 2]], crop: &Rect) -> bool {
    if points.is_empty() {
        return false;
    }
    let (mut x0, mut y0, mut x1, mut y1) = (points[0][0], points[0][1], points[0][0], points[0][1]);
    for p in points {
        if p[0] < x0 {
            x0 = p[0];
        }
        if p[0] > x1 {
            x1 = p[0];
        }
        if p[1] < y0 {
            y0 = p[1];
        }
        if p[1] > y1 {
            y1 = p[1];
        }
    }
    let area = (x1 - x0) * (y1 - y0);
    if !(area > 0.0) {
        return false;
    }
    let inter = overlap_1d(x0, x1, crop.min[0], crop.max[0])
        * overlap_1d(y0, y1, crop.min[1], crop.max[1]);
    inter >= 0.5 * area
}

#[test]
fn visibility_rule_matches_a_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut exact_half_hits = 0usize;
    for case in 0..1000 {
        let (points, crop) = if case % 10 == 0 {
            // Crafted dyadic case: the crop covers exactly the left half of
            // the box, exercising the inclusive branch with exact areas.
            let x0 = rng.random_range(-20..20) as f64 * 0.25;
            let y0 = rng.random_range(-20..20) as f64 * 0.25;
            let w = rng.random_range(1..=8) as f64 * 0.25;
            let h = rng.random_range(1..=8) as f64 * 0.25;
            let points = vec![[x0, y0], [x0 + w, y0 + h]];
            let crop = Rect { min: [x0 - 1.0, y0 - 1.0], max: [x0 + w / 2.0, y0 + h + 1.0] };
            exact_half_hits += 1;
            (points, crop)
        } else {
            let points: Vec<[f64; 2]> = (0..rng.random_range(1..12))
                .map(|_| std::array::from_fn(|_| rng.random_range(-50.0..50.0)))
                .collect();
            let cx = rng.random_range(-60.0..60.0);
            let cy = rng.random_range(-60.0..60.0);
            let half = rng.random_range(0.1..40.0);
            (points, Rect { min: [cx - half, cy - half], max: [cx + half, cy + half] })
        };
        let got = part_visibility(&[points.clone()], &crop)[0];
        let want = oracle_visible(&points, &crop);
        assert_eq!(got, want, "case {case}: points {points:?} crop {crop:?}");
        if case % 10 == 0 {
            assert!(got, "case {case}: exactly half inside must count as visible");
        }
    }
    assert_eq!(exact_half_hits, 100);

    // Nudge one crafted case just below half: no longer visible.
    let points = vec![[0.0, 0.0], [2.0, 2.0]];
    let at_half = Rect { min: [-1.0, -1.0], max: [1.0, 3.0] };
    let below_half = Rect { min: [-1.0, -1.0], max: [1.0 - 1e-9, 3.0] };
    assert!(part_visibility(&[points.clone()], &at_half)[0]);
    assert!(!part_visibility(&[points.clone()], &below_half)[0]);

    // Degenerate boxes are invisible even when fully inside the crop.
    let line = vec![[0.5, 0.0], [0.5, 2.0]];
    let everything = Rect { min: [-10.0, -10.0], max: [10.0, 10.0] };
    assert!(!part_visibility(&[line], &everything)[0]);
    assert!(!part_visibility(&[Vec::new()], &everything)[0]);
}

/// Fifteen random point clusters inside a 200x400 frame.
fn synthetic_projections(seed: u64) -> (Vec<Vec<[f64; 2]>>, Rect) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts: Vec<Vec<[f64; 2]>> = (0..NUM_PARTS)
        .map(|_| {
            let cx = rng.random_range(20.0..180.0);
            let cy = rng.random_range(40.0..360.0);
            (0..8)
                .map(|_| [cx + rng.random_range(-15.0..15.0), cy + rng.random_range(-25.0..25.0)])
                .collect()
        })
        .collect();
    let all: Vec<[f64; 2]> = parts.iter().flatten().copied().collect();
    (parts.clone(), bbox_2d(&all).unwrap())
}

#[test]
fn crop_generation_is_deterministic_and_filtered() {
    let (parts, bbox) = synthetic_projections(2);
    let cfg = CropConfig::default();
    assert_eq!(cfg.attempts, 20);
    assert_eq!(cfg.keep_range, [1, 4]);

    let a = gen_crops(7, &parts, &bbox, 1234, &cfg).unwrap();
    let b = gen_crops(7, &parts, &bbox, 1234, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_empty(), "default config over a spread body should keep some crops");
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.center[0].to_bits(), y.center[0].to_bits());
        assert_eq!(x.center[1].to_bits(), y.center[1].to_bits());
        assert_eq!(x.side.to_bits(), y.side.to_bits());
    }
    let c = gen_crops(7, &parts, &bbox, 1235, &cfg).unwrap();
    assert_ne!(a, c, "different seeds should draw different crops");

    let dim = bbox.width().max(bbox.height());
    for crop in &a {
        assert_eq!(crop.sample_id, 7);
        let n = crop.n_visible();
        assert!((1..=4).contains(&n), "kept crop with {n} visible parts");
        assert_eq!(crop.visibility, part_visibility(&parts, &crop.rect()));
        assert!(crop.side >= cfg.side_range[0] * dim && crop.side <= cfg.side_range[1] * dim);
        assert!(crop.center[0] >= bbox.min[0] && crop.center[0] <= bbox.max[0]);
        assert!(crop.center[1] >= bbox.min[1] && crop.center[1] <= bbox.max[1]);
    }

    // The filter really discards: a keep range demanding more visible parts
    // than exist keeps nothing.
    let impossible = CropConfig { keep_range: [NUM_PARTS + 1, NUM_PARTS + 2], ..cfg.clone() };
    assert!(gen_crops(0, &parts, &bbox, 1234, &impossible).unwrap().is_empty());

    // Config and data validation.
    assert!(matches!(
        gen_crops(0, &parts, &bbox, 1, &CropConfig { keep_range: [0, 4], ..cfg.clone() }),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        gen_crops(0, &parts, &bbox, 1, &CropConfig { keep_range: [4, 1], ..cfg.clone() }),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        gen_crops(0, &parts, &bbox, 1, &CropConfig { side_range: [0.0, 1.0], ..cfg.clone() }),
        Err(Error::Config(_))
    ));
    let degenerate = Rect { min: [5.0, 5.0], max: [5.0, 9.0] };
    assert!(matches!(gen_crops(0, &parts, &degenerate, 1, &cfg), Err(Error::Data(_))));
}

#[test]
fn crop_batches_are_reproducible_and_match_the_sequential_twin() {
    let samples: Vec<(Vec<Vec<[f64; 2]>>, Rect)> =
        (0..12).map(|i| synthetic_projections(100 + i)).collect();
    let cfg = CropConfig::default();

    let batch = gen_crops_batch(&samples, 42, &cfg).unwrap();
    let seq = gen_crops_batch_seq(&samples, 42, &cfg).unwrap();
    let again = gen_crops_batch(&samples, 42, &cfg).unwrap();
    assert_eq!(batch, seq);
    assert_eq!(batch, again);

    // Batch entry i is exactly the single-sample call with the derived seed.
    for (i, (parts, bbox)) in samples.iter().enumerate() {
        let solo = gen_crops(i, parts, bbox, derive_seed(42, i as u64), &cfg).unwrap();
        assert_eq!(batch[i], solo);
    }
}

#[test]
fn mpve_matches_a_brute_force_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..100 {
        let n_parts = rng.random_range(1..8);
        let gt: Vec<Vec<[f64; 3]>> = (0..n_parts)
            .map(|_| {
                (0..rng.random_range(1..30))
                    .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let pred: Vec<Vec<[f64; 3]>> = gt
            .iter()
            .map(|vs| {
                vs.iter()
                    .map(|v| std::array::from_fn(|c| v[c] + rng.random_range(-0.01..0.01)))
                    .collect()
            })
            .collect();
        let mut vis: Vec<bool> = (0..n_parts).map(|_| rng.random_bool(0.7)).collect();
        vis[0] = true;

        let got = mpve(&pred, &gt, &vis).unwrap();
        let mut sum = 0.0;
        let mut n = 0usize;
        for p in 0..n_parts {
            if !vis[p] {
                continue;
            }
            for (a, b) in pred[p].iter().zip(&gt[p]) {
                let d2: f64 = (0..3).map(|c| (a[c] - b[c]) * (a[c] - b[c])).sum();
                sum += d2.sqrt();
                n += 1;
            }
        }
        let want = 1000.0 * sum / n as f64;
        assert!((got - want).abs() < 1e-10, "case {case}: {got} vs {want}");
    }
}

#[test]
fn uniform_offset_recovers_exact_millimeters() {
    // 256 vertices, all offset 5mm along x from an exact-zero baseline: the
    // norms are exactly 0.005 and a power-of-two count keeps the pairwise
    // mean exact, so the metric is 5.0 to the last bit.
    let gt = vec![(0..256).map(|i| [0.0, i as f64 * 0.5, 3.0 + i as f64]).collect::<Vec<_>>()];
    let pred: Vec<Vec<[f64; 3]>> =
        vec![gt[0].iter().map(|v| [0.005, v[1], v[2]]).collect()];
    assert_eq!(mpve(&pred, &gt, &[true]).unwrap(), 5.0);

    // Joints: parts 0,1,2,3,4,6,7 own exactly joints 0..=7, eight counted
    // joints. Uncounted joints carry garbage to prove they are excluded.
    let vis: Vec<bool> = (0..NUM_PARTS).map(|p| matches!(p, 0 | 1 | 2 | 3 | 4 | 6 | 7)).collect();
    let counted: Vec<usize> =
        (0..NUM_JOINTS).filter(|&j| joint_owners(j).iter().any(|&p| vis[p])).collect();
    assert_eq!(counted, vec![0, 1, 2, 3, 4, 5, 6, 7]);
    let mut gt_joints = vec![[9.0, 9.0, 9.0]; NUM_JOINTS];
    let mut pred_joints = vec![[-9.0, 4.5, 1.0]; NUM_JOINTS];
    for &j in &counted {
        gt_joints[j] = [0.0, j as f64, 2.0];
        pred_joints[j] = [0.005, j as f64, 2.0];
    }
    assert_eq!(mpjpe(&pred_joints, &gt_joints, &vis).unwrap(), 5.0);

    // A non-power-of-two count (all 17 joints) still lands within rounding.
    let vis_all = vec![true; NUM_PARTS];
    let gt_joints: Vec<[f64; 3]> = (0..NUM_JOINTS).map(|j| [0.0, j as f64, 2.0]).collect();
    let pred_joints: Vec<[f64; 3]> =
        gt_joints.iter().map(|v| [0.005, v[1], v[2]]).collect();
    let got = mpjpe(&pred_joints, &gt_joints, &vis_all).unwrap();
    assert!((got - 5.0).abs() < 1e-9);
}

#[test]
fn mpjpe_counts_joints_with_any_visible_owner() {
    // Only the left hand is visible; it owns joint 13 alone, so exactly one
    // joint is scored no matter how wrong the others are.
    let vis: Vec<bool> = (0..NUM_PARTS).map(|p| p == 13).collect();
    let gt = vec![[0.0, 0.0, 2.0]; NUM_JOINTS];
    let mut pred = vec![[100.0, -40.0, 7.0]; NUM_JOINTS];
    pred[13] = [0.005, 0.0, 2.0];
    assert_eq!(mpjpe(&pred, &gt, &vis).unwrap(), 5.0);

    // The counted set is the union over visible owners.
    for vis_parts in [vec![0usize], vec![5], vec![0, 5], vec![9, 11, 13]] {
        let vis: Vec<bool> = (0..NUM_PARTS).map(|p| vis_parts.contains(&p)).collect();
        let counted: Vec<usize> = (0..NUM_JOINTS)
            .filter(|&j| joint_owners(j).iter().any(|&p| vis[p]))
            .collect();
        let expected: Vec<usize> = (0..NUM_JOINTS)
            .filter(|j| vis_parts.iter().any(|&p| PART_JOINTS[p].contains(j)))
            .collect();
        assert_eq!(counted, expected);
    }

    assert!(matches!(
        mpjpe(&pred, &gt, &vec![false; NUM_PARTS]),
        Err(Error::Data(_))
    ));
    assert!(matches!(
        mpjpe(&pred[..5], &gt, &vis),
        Err(Error::SizeMismatch { expected: 17, .. })
    ));
    assert!(matches!(
        mpjpe(&pred, &gt, &[true; 3]),
        Err(Error::SizeMismatch { expected: 15, .. })
    ));
}

#[test]
fn mpve_rejects_empty_and_mismatched_inputs() {
    let gt = vec![vec![[0.0; 3]; 4], vec![[0.0; 3]; 4]];
    let pred = gt.clone();
    assert!(matches!(
        mpve(&pred, &gt, &[false, false]),
        Err(Error::Data(_))
    ));
    assert!(matches!(
        mpve(&pred[..1], &gt, &[true, true]),
        Err(Error::SizeMismatch { .. })
    ));
    let mut short = pred.clone();
    short[1].pop();
    match mpve(&short, &gt, &[true, true]) {
        Err(Error::SizeMismatch { what, expected: 4, got: 3 }) => {
            assert!(what.contains("part 1"))
        }
        other => panic!("expected SizeMismatch, got {other:?}"),
    }
    // A visible but empty part contributes nothing; with nothing else
    // visible there is no mean to take.
    assert!(matches!(
        mpve(&vec![Vec::new()], &vec![Vec::new()], &[true]),
        Err(Error::Data(_))
    ));
}

#[test]
fn named_joints_average_over_visible_owners() {
    let ids = part_joint_id_lists();
    // Parts 0, 1, 3 visible. Joint 4 is shared by parts 0 and 1, joint 5 by
    // parts 1 and 3; every other owned joint has a single visible owner.
    let vis: Vec<bool> = (0..NUM_PARTS).map(|p| matches!(p, 0 | 1 | 3)).collect();
    let mut per_part: Vec<Vec<[f64; 3]>> = ids
        .iter()
        .map(|list| list.iter().map(|&j| [j as f64, 10.0, -2.0]).collect())
        .collect();
    // Disagreeing copies for the shared joints.
    let j4_in_p0 = ids[0].iter().position(|&j| j == 4).unwrap();
    let j4_in_p1 = ids[1].iter().position(|&j| j == 4).unwrap();
    per_part[0][j4_in_p0] = [1.0, 2.0, 3.0];
    per_part[1][j4_in_p1] = [3.0, 4.0, 5.0];
    let j5_in_p1 = ids[1].iter().position(|&j| j == 5).unwrap();
    let j5_in_p3 = ids[3].iter().position(|&j| j == 5).unwrap();
    per_part[1][j5_in_p1] = [0.5, 0.0, 8.0];
    per_part[3][j5_in_p3] = [1.5, 1.0, 6.0];

    let (joints, counted) = named_joints_from_parts(&per_part, &ids, &vis).unwrap();
    assert_eq!(joints.len(), NUM_JOINTS);
    assert_eq!(joints[4], [2.0, 3.0, 4.0]);
    assert_eq!(joints[5], [1.0, 0.5, 7.0]);

    for j in 0..NUM_JOINTS {
        let visible_owners: Vec<usize> =
            joint_owners(j).into_iter().filter(|&p| vis[p]).collect();
        assert_eq!(counted[j], !visible_owners.is_empty());
        if visible_owners.len() == 1 {
            // Single-owner joints pass through bitwise.
            let p = visible_owners[0];
            let local = ids[p].iter().position(|&x| x == j).unwrap();
            assert_eq!(joints[j], per_part[p][local]);
        }
        if !counted[j] {
            assert_eq!(joints[j], [0.0; 3]);
        }
    }

    // Shape errors.
    let mut bad = per_part.clone();
    bad[1].pop();
    match named_joints_from_parts(&bad, &ids, &vis) {
        Err(Error::SizeMismatch { what, .. }) => assert!(what.contains("part 1")),
        other => panic!("expected SizeMismatch, got {other:?}"),
    }
    let mut bad_ids = ids.clone();
    bad_ids[0][0] = NUM_JOINTS;
    assert!(matches!(
        named_joints_from_parts(&per_part, &bad_ids, &vis),
        Err(Error::Data(_))
    ));
    assert!(matches!(
        named_joints_from_parts(&per_part[..3], &ids, &vis),
        Err(Error::SizeMismatch { .. })
    ));
}

#[test]
fn accumulator_matches_naive_means_over_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut acc = MetricsAccumulator::new();

    // Naive tallies kept alongside.
    let mut per_part_sum = vec![0.0f64; NUM_PARTS];
    let mut per_part_n = vec![0usize; NUM_PARTS];
    let mut joint_sum = 0.0f64;
    let mut joint_n = 0usize;

    for _ in 0..6 {
        let vis: Vec<bool> = (0..NUM_PARTS).map(|p| p != 14 && rng.random_bool(0.5)).collect();
        let gt_parts: Vec<Vec<[f64; 3]>> = (0..NUM_PARTS)
            .map(|_| {
                (0..rng.random_range(3..10))
                    .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let pred_parts: Vec<Vec<[f64; 3]>> = gt_parts
            .iter()
            .map(|vs| {
                vs.iter()
                    .map(|v| std::array::from_fn(|c| v[c] + rng.random_range(-0.02..0.02)))
                    .collect()
            })
            .collect();
        let gt_joints: Vec<[f64; 3]> = (0..NUM_JOINTS)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        let pred_joints: Vec<[f64; 3]> = gt_joints
            .iter()
            .map(|v| std::array::from_fn(|c| v[c] + rng.random_range(-0.02..0.02)))
            .collect();
        let counted: Vec<bool> = (0..NUM_JOINTS)
            .map(|j| joint_owners(j).iter().any(|&p| vis[p]))
            .collect();

        if !vis.iter().any(|&v| v) {
            continue;
        }
        acc.add_sample(&pred_parts, &gt_parts, &pred_joints, &gt_joints, &counted, &vis)
            .unwrap();

        for p in 0..NUM_PARTS {
            if !vis[p] {
                continue;
            }
            for (a, b) in pred_parts[p].iter().zip(&gt_parts[p]) {
                let d2: f64 = (0..3).map(|c| (a[c] - b[c]) * (a[c] - b[c])).sum();
                per_part_sum[p] += d2.sqrt();
                per_part_n[p] += 1;
            }
        }
        for j in 0..NUM_JOINTS {
            if counted[j] {
                let d2: f64 =
                    (0..3).map(|c| (pred_joints[j][c] - gt_joints[j][c]).powi(2)).sum();
                joint_sum += d2.sqrt();
                joint_n += 1;
            }
        }
    }

    let report = acc.finish().unwrap();
    assert_eq!(report.counted_vertices, per_part_n.iter().sum::<usize>());
    assert_eq!(report.counted_joints, joint_n);

    let total_mean = 1000.0 * per_part_sum.iter().sum::<f64>() / report.counted_vertices as f64;
    assert!((report.mpve_mm - total_mean).abs() <= 1e-12 * total_mean.max(1.0));
    let joint_mean = 1000.0 * joint_sum / joint_n as f64;
    assert!((report.mpjpe_mm - joint_mean).abs() <= 1e-12 * joint_mean.max(1.0));

    assert_eq!(report.per_part.len(), NUM_PARTS);
    for p in 0..NUM_PARTS {
        let entry = &report.per_part[p];
        assert_eq!(entry.part_id, p);
        assert_eq!(entry.name, PART_NAMES[p]);
        assert_eq!(entry.counted_vertices, per_part_n[p]);
        match entry.mpve_mm {
            Some(got) => {
                let want = 1000.0 * per_part_sum[p] / per_part_n[p] as f64;
                assert!((got - want).abs() <= 1e-12 * want.max(1.0));
            }
            None => assert_eq!(per_part_n[p], 0, "part {p} has samples but no mean"),
        }
    }
    // Part 14 was never visible, so it reports no mean.
    assert_eq!(report.per_part[14].mpve_mm, None);

    // Round-trips through JSON with its field names.
    let json = serde_json::to_value(&report).unwrap();
    for key in ["mpve_mm", "mpjpe_mm", "per_part", "counted_vertices", "counted_joints"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    let back: MetricsReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, report);

    // An empty accumulator has nothing to report.
    assert!(matches!(MetricsAccumulator::new().finish(), Err(Error::Data(_))));
}
