//! The seven subcommands, in pipeline order: synth, build-template, train,
//! annotate, decode-fuse, gen-pv, eval.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use hppm_core::annotate::{annotate_samples, SampleAnnotation};
use hppm_core::bundle::{load_bundle, load_templates, save_bundle, save_templates, LoadedBundle};
use hppm_core::fuse::{overlap_residual, Fuser};
use hppm_core::losses::{total_loss, LossBreakdown, LossInputs, OverlapLossMode};
use hppm_core::mesh::{load_mesh, save_mesh, Mesh};
use hppm_core::parts::{default_merge_map, NUM_PARTS, PART_JOINTS};
use hppm_core::pv::{bbox_2d, gen_crops_batch, named_joints_from_parts, MetricsAccumulator};
use hppm_core::shape::{decode_part, regress_joints};
use hppm_core::synth::{synth_body, synth_template};
use hppm_core::template::{build_templates, BlendWeights, HppmTemplateSet, MergeMap};
use hppm_core::train::{train_all_parts, TrainingData};
use hppm_core::transform::project;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::data::{
    annotation_file, ensure_dir, load_dataset, part_mesh_file, read_json, read_manifest,
    sample_joints_path, sample_mesh_path, write_json, write_manifest, DatasetMeta, ManifestRecord,
    DATASET_FORMAT,
};
use crate::CliError;

pub fn cmd_synth(
    cfg: &RunConfig,
    count: Option<usize>,
    out: Option<&Path>,
    json: bool,
) -> Result<Value, CliError> {
    let t0 = Instant::now();
    let n = count.unwrap_or(cfg.n_samples);
    if n == 0 {
        return Err(CliError::config("sample count must be positive"));
    }
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.data_dir.clone());
    ensure_dir(&dir.join("samples"))?;

    let template = synth_template(&cfg.synth)?;
    save_mesh(&template.mesh, dir.join("template.obj"))?;
    write_json(&dir.join("weights.json"), &template.weights)?;
    write_json(&dir.join("merge_map.json"), &default_merge_map())?;

    for i in 0..n {
        let body = synth_body(&cfg.synth, i as u64)?;
        save_mesh(&body.mesh, sample_mesh_path(&dir, i))?;
        write_json(&sample_joints_path(&dir, i), &body.joints)?;
    }
    let meta =
        DatasetMeta { format_version: DATASET_FORMAT.into(), n_samples: n, spec: cfg.synth.clone() };
    write_json(&dir.join("meta.json"), &meta)?;

    if !json {
        println!(
            "wrote {n} samples ({} vertices each) to {} in {:.2}s",
            template.mesh.n_vertices(),
            dir.display(),
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(json!({
        "data_dir": dir,
        "n_samples": n,
        "n_vertices": template.mesh.n_vertices(),
        "n_faces": template.mesh.n_faces(),
        "seconds": t0.elapsed().as_secs_f64(),
    }))
}

pub fn cmd_build_template(
    cfg: &RunConfig,
    dilation: Option<usize>,
    json: bool,
) -> Result<Value, CliError> {
    let mesh = load_mesh(cfg.template_mesh_path())?;
    let weights: BlendWeights = read_json(&cfg.blend_weights_path())?;
    let merge_map = resolve_merge_map(cfg)?;
    let steps = dilation.unwrap_or(cfg.dilation_steps);
    let templates = build_templates(&mesh, &weights, &merge_map, steps)?;

    let bundle = cfg.bundle_dir();
    ensure_dir(&bundle)?;
    save_templates(bundle.join("templates.json"), &templates)?;
    write_json(&bundle.join("merge_map.json"), &merge_map)?;

    let parts: Vec<Value> = templates
        .parts
        .iter()
        .map(|p| {
            json!({
                "part_id": p.part_id,
                "name": p.name,
                "n_vertices": p.n_vertices(),
                "n_core": p.core_vertex_ids.len(),
                "n_overlap": p.overlap.values().map(Vec::len).sum::<usize>(),
            })
        })
        .collect();
    if !json {
        println!("{:<16} {:>6} {:>6} {:>8}", "part", "N_p", "core", "overlap");
        for p in &templates.parts {
            println!(
                "{:<16} {:>6} {:>6} {:>8}",
                p.name,
                p.n_vertices(),
                p.core_vertex_ids.len(),
                p.overlap.values().map(Vec::len).sum::<usize>()
            );
        }
        println!(
            "{} parts, {} neighbor pairs, dilation {steps} -> {}",
            templates.n_parts(),
            templates.neighbors.len(),
            bundle.join("templates.json").display()
        );
    }
    Ok(json!({
        "bundle": bundle,
        "n_parts": templates.n_parts(),
        "n_neighbors": templates.neighbors.len(),
        "dilation_steps": steps,
        "parts": parts,
    }))
}

pub fn cmd_train(cfg: &RunConfig, samples: Option<usize>, json: bool) -> Result<Value, CliError> {
    let t0 = Instant::now();
    let bundle_dir = cfg.bundle_dir();
    let templates = load_built_templates(&bundle_dir)?;
    let merge_map: MergeMap = read_json(&bundle_dir.join("merge_map.json"))?;
    let dataset = load_dataset(&cfg.data_dir, samples)?;
    let data = TrainingData { bodies: dataset.bodies, joints: dataset.joints };
    let trained = train_all_parts(&templates, &data, &cfg.training, cfg.regressor_mode)?;
    save_bundle(&bundle_dir, &templates, &trained, &cfg.training, &merge_map)?;

    let mut rows = Vec::new();
    for (model, reg) in trained.models.iter().zip(&trained.regressors) {
        let r = &model.training_report;
        rows.push(json!({
            "part_id": model.part_id,
            "name": templates.parts[model.part_id].name,
            "k": model.k,
            "n_vertices": model.n_vertices(),
            "n_joints": reg.n_joints(),
            "vertex_mm": r.mean_vertex_error_mm,
            "joint_mm": r.mean_joint_error_mm,
            "budget_violated": r.budget_violated,
            "rank_clamped": r.rank_clamped,
        }));
    }
    if !json {
        println!(
            "{:<16} {:>4} {:>6} {:>6} {:>10} {:>10}",
            "part", "k_p", "N_p", "|J_p|", "vertex mm", "joint mm"
        );
        for (model, reg) in trained.models.iter().zip(&trained.regressors) {
            let r = &model.training_report;
            let mut flags = String::new();
            if r.budget_violated {
                flags.push_str("  over budget at k_max");
            }
            if r.rank_clamped {
                flags.push_str("  rank limited");
            }
            println!(
                "{:<16} {:>4} {:>6} {:>6} {:>10.4} {:>10.4}{flags}",
                templates.parts[model.part_id].name,
                model.k,
                model.n_vertices(),
                reg.n_joints(),
                r.mean_vertex_error_mm,
                r.mean_joint_error_mm,
            );
        }
        println!(
            "trained {} parts on {} samples in {:.2}s -> {}",
            trained.models.len(),
            data.bodies.len(),
            t0.elapsed().as_secs_f64(),
            bundle_dir.display()
        );
    }
    Ok(json!({
        "bundle": bundle_dir,
        "n_samples": data.bodies.len(),
        "parts": rows,
        "seconds": t0.elapsed().as_secs_f64(),
    }))
}

pub fn cmd_annotate(
    cfg: &RunConfig,
    samples: Option<usize>,
    dump_gt_parts: bool,
    json: bool,
) -> Result<Value, CliError> {
    let t0 = Instant::now();
    let bundle = load_trained_bundle(&cfg.bundle_dir())?;
    let dataset = load_dataset(&cfg.data_dir, samples)?;
    let annotations = annotate_samples(
        &bundle.templates,
        &bundle.models,
        &bundle.regressors,
        &dataset.bodies,
        &cfg.camera,
        cfg.fit_mode,
    )?;

    let dir = cfg.annotations_dir();
    ensure_dir(&dir)?;
    for (i, ann) in annotations.iter().enumerate() {
        write_json(&annotation_file(&dir, i), ann)?;
    }

    let mut gt_dir_json = Value::Null;
    if dump_gt_parts {
        let gt_dir = cfg.gt_parts_dir();
        ensure_dir(&gt_dir)?;
        for (i, body) in dataset.bodies.iter().enumerate() {
            for part in &bundle.templates.parts {
                let slice = part.slice_vertices(&body.vertices)?;
                let mesh = Mesh::new(slice, part.local_faces.clone())?;
                save_mesh(&mesh, part_mesh_file(&gt_dir, i, part.part_id))?;
            }
        }
        gt_dir_json = json!(gt_dir);
    }

    let n = annotations.len() as f64;
    let mut per_part = Vec::new();
    for p in 0..bundle.templates.n_parts() {
        let v = annotations.iter().map(|a| a.fit_report[p].vertex_error_mm).sum::<f64>() / n;
        let j = annotations.iter().map(|a| a.fit_report[p].joint_error_mm).sum::<f64>() / n;
        per_part.push(json!({
            "part_id": p,
            "name": bundle.templates.parts[p].name,
            "vertex_mm": v,
            "joint_mm": j,
        }));
    }
    let mean = |key: &str| {
        per_part.iter().map(|r| r[key].as_f64().expect("numeric field")).sum::<f64>()
            / per_part.len() as f64
    };
    let (mean_v, mean_j) = (mean("vertex_mm"), mean("joint_mm"));
    if !json {
        println!("{:<16} {:>10} {:>10}", "part", "vertex mm", "joint mm");
        for row in &per_part {
            println!(
                "{:<16} {:>10.4} {:>10.4}",
                row["name"].as_str().expect("name"),
                row["vertex_mm"].as_f64().expect("numeric field"),
                row["joint_mm"].as_f64().expect("numeric field"),
            );
        }
        println!(
            "annotated {} samples (mean recovery {mean_v:.4} mm vertices, {mean_j:.4} mm joints) in {:.2}s -> {}",
            annotations.len(),
            t0.elapsed().as_secs_f64(),
            dir.display()
        );
    }
    Ok(json!({
        "annotations": dir,
        "n_samples": annotations.len(),
        "mean_vertex_mm": mean_v,
        "mean_joint_mm": mean_j,
        "per_part": per_part,
        "gt_parts": gt_dir_json,
        "seconds": t0.elapsed().as_secs_f64(),
    }))
}

pub fn cmd_decode_fuse(
    cfg: &RunConfig,
    annotation: &Path,
    visible: Option<&str>,
    out: Option<&Path>,
    json: bool,
) -> Result<Value, CliError> {
    let bundle = load_trained_bundle(&cfg.bundle_dir())?;
    let n_parts = bundle.templates.n_parts();
    let ann: SampleAnnotation = read_json(annotation)?;
    if ann.parts.len() != n_parts {
        return Err(CliError::data(format!(
            "annotation has {} parts, the bundle has {n_parts}",
            ann.parts.len()
        )));
    }
    let visibility = match visible {
        Some(arg) => parse_visible(arg, n_parts)?,
        None => ann.parts.iter().map(|p| p.visible).collect(),
    };
    let mut decoded = vec![Vec::new(); n_parts];
    for (p, vis) in visibility.iter().enumerate() {
        if *vis {
            decoded[p] = decode_part(&bundle.models[p], &ann.parts[p])?;
        }
    }
    let fused = Fuser::new(&bundle.templates).fuse(&decoded, &visibility)?;
    let gaps = overlap_residual(&bundle.templates, &decoded, &visibility)?;
    let mean_gap_mm = if gaps.is_empty() {
        0.0
    } else {
        1000.0 * gaps.iter().map(|g| g.gap_m).sum::<f64>() / gaps.len() as f64
    };
    let max_gap_mm = 1000.0 * gaps.iter().map(|g| g.gap_m).fold(0.0, f64::max);

    let out_path = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = annotation.file_stem().and_then(|s| s.to_str()).unwrap_or("fused");
            cfg.fused_dir().join(format!("{stem}.obj"))
        }
    };
    if let Some(parent) = out_path.parent() {
        ensure_dir(parent)?;
    }
    save_mesh(&Mesh::new(fused.vertices.clone(), fused.faces.clone())?, &out_path)?;
    let sidecar = out_path.with_extension("fused.json");
    write_json(&sidecar, &fused)?;

    let n_blended = fused.vertices.len() - single_count(&fused);
    if !json {
        println!(
            "fused {} visible parts: {} vertices ({n_blended} blended), {} faces, \
             overlap gap mean {mean_gap_mm:.4} mm max {max_gap_mm:.4} mm",
            visibility.iter().filter(|&&v| v).count(),
            fused.vertices.len(),
            fused.faces.len()
        );
        println!("-> {} (+ {})", out_path.display(), sidecar.display());
    }
    Ok(json!({
        "out": out_path,
        "sidecar": sidecar,
        "n_vertices": fused.vertices.len(),
        "n_faces": fused.faces.len(),
        "n_blended": n_blended,
        "visible_parts": visibility.iter().filter(|&&v| v).count(),
        "mean_gap_mm": mean_gap_mm,
        "max_gap_mm": max_gap_mm,
    }))
}

pub fn cmd_gen_pv(cfg: &RunConfig, samples: Option<usize>, json: bool) -> Result<Value, CliError> {
    let templates = load_built_templates(&cfg.bundle_dir())?;
    let dataset = load_dataset(&cfg.data_dir, samples)?;
    let ann_dir = cfg.annotations_dir();
    for i in 0..dataset.bodies.len() {
        let path = annotation_file(&ann_dir, i);
        if !path.exists() {
            return Err(CliError::data(format!(
                "missing annotation {}: run `hppm annotate` first",
                path.display()
            )));
        }
    }

    let mut inputs = Vec::with_capacity(dataset.bodies.len());
    for body in &dataset.bodies {
        let mut parts_2d = Vec::with_capacity(templates.n_parts());
        let mut all = Vec::new();
        for part in &templates.parts {
            let proj = project(&cfg.camera, &part.slice_vertices(&body.vertices)?)?;
            all.extend_from_slice(&proj);
            parts_2d.push(proj);
        }
        let bbox =
            bbox_2d(&all).ok_or_else(|| CliError::data("sample has no projected vertices"))?;
        inputs.push((parts_2d, bbox));
    }
    let crops = gen_crops_batch(&inputs, cfg.seed, &cfg.crops)?;

    let mut records = Vec::new();
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for per_sample in &crops {
        for (c, crop) in per_sample.iter().enumerate() {
            *histogram.entry(crop.n_visible()).or_insert(0) += 1;
            records.push(ManifestRecord {
                sample_id: crop.sample_id,
                crop_id: c,
                center: crop.center,
                side: crop.side,
                visibility: crop.visibility.clone(),
                annotation: format!("annotations/sample_{:04}.json", crop.sample_id),
            });
        }
    }
    ensure_dir(&cfg.out_dir)?;
    let path = cfg.manifest_path();
    write_manifest(&path, &records)?;

    if !json {
        println!("visible-part histogram:");
        for (n, count) in &histogram {
            println!("  {n} visible: {count}");
        }
        println!(
            "{} records over {} samples -> {}",
            records.len(),
            dataset.bodies.len(),
            path.display()
        );
    }
    Ok(json!({
        "manifest": path,
        "n_records": records.len(),
        "n_samples": dataset.bodies.len(),
        "histogram": histogram,
    }))
}

pub fn cmd_eval(
    cfg: &RunConfig,
    manifest: Option<&Path>,
    pred: Option<&Path>,
    losses: bool,
    out: Option<&Path>,
    json: bool,
) -> Result<Value, CliError> {
    let t0 = Instant::now();
    let bundle = load_trained_bundle(&cfg.bundle_dir())?;
    let manifest_path = manifest.map(Path::to_path_buf).unwrap_or_else(|| cfg.manifest_path());
    let records = read_manifest(&manifest_path)?;
    if records.is_empty() {
        return Err(CliError::data(format!("{} has no records", manifest_path.display())));
    }
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let pred_dir = pred.map(Path::to_path_buf).unwrap_or_else(|| cfg.annotations_dir());
    let part_joint_ids: Vec<Vec<usize>> = PART_JOINTS.iter().map(|ids| ids.to_vec()).collect();

    // (part slices, per-part regressed joints) of each ground-truth body.
    type GtSample = (Vec<Vec<[f64; 3]>>, Vec<Vec<[f64; 3]>>);
    let mut gt_cache: BTreeMap<usize, GtSample> = BTreeMap::new();
    let mut acc = MetricsAccumulator::new();
    let mut breakdowns = Vec::new();

    for record in &records {
        let i = record.sample_id;
        if record.visibility.len() != NUM_PARTS {
            return Err(CliError::data(format!(
                "record for sample {i} has {} visibility flags, expected {NUM_PARTS}",
                record.visibility.len()
            )));
        }
        if let Entry::Vacant(entry) = gt_cache.entry(i) {
            let body = load_mesh(sample_mesh_path(&cfg.data_dir, i))?;
            let slices = bundle
                .templates
                .parts
                .iter()
                .map(|p| p.slice_vertices(&body.vertices))
                .collect::<hppm_core::Result<Vec<_>>>()?;
            let joints = slices
                .iter()
                .enumerate()
                .map(|(p, s)| regress_joints(&bundle.regressors[p], s))
                .collect::<hppm_core::Result<Vec<_>>>()?;
            entry.insert((slices, joints));
        }
        let (gt_parts, gt_pp_joints) = &gt_cache[&i];

        let (pred_parts, pred_ann) = load_prediction(&bundle, &pred_dir, i, &record.visibility)?;
        let mut pred_pp_joints = vec![Vec::new(); NUM_PARTS];
        for (p, vis) in record.visibility.iter().enumerate() {
            if *vis {
                pred_pp_joints[p] = regress_joints(&bundle.regressors[p], &pred_parts[p])?;
            }
        }
        let (pred_joints, counted) =
            named_joints_from_parts(&pred_pp_joints, &part_joint_ids, &record.visibility)?;
        let (gt_joints, _) =
            named_joints_from_parts(gt_pp_joints, &part_joint_ids, &record.visibility)?;
        acc.add_sample(&pred_parts, gt_parts, &pred_joints, &gt_joints, &counted, &record.visibility)?;

        if losses {
            let ann = pred_ann.as_ref().ok_or_else(|| {
                CliError::config("--losses requires annotation-format predictions")
            })?;
            let gt_ann: SampleAnnotation = read_json(&manifest_dir.join(&record.annotation))?;
            let inputs = LossInputs {
                pred_parts: &pred_parts,
                gt_parts,
                pred_joints: &pred_pp_joints,
                gt_joints: gt_pp_joints,
                pred_states: &ann.parts,
                gt_states: &gt_ann.parts,
                camera: &cfg.camera,
                templates: &bundle.templates,
                visibility: &record.visibility,
                overlap_mode: OverlapLossMode::PairMidpoint,
            };
            breakdowns.push(total_loss(&inputs, &cfg.loss_weights)?);
        }
    }

    let report = acc.finish()?;
    let report_path = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.metrics_path());
    if let Some(parent) = report_path.parent() {
        ensure_dir(parent)?;
    }
    write_json(&report_path, &report)?;
    let mean_losses = (!breakdowns.is_empty()).then(|| mean_breakdown(&breakdowns));
    if let Some(mean) = &mean_losses {
        write_json(&report_path.with_file_name("losses.json"), mean)?;
    }

    if !json {
        println!(
            "MPVE {:.6} mm over {} vertices, MPJPE {:.6} mm over {} joints",
            report.mpve_mm, report.counted_vertices, report.mpjpe_mm, report.counted_joints
        );
        println!("{:<16} {:>12} {:>10}", "part", "mpve mm", "vertices");
        for p in &report.per_part {
            match p.mpve_mm {
                Some(v) => println!("{:<16} {:>12.6} {:>10}", p.name, v, p.counted_vertices),
                None => println!("{:<16} {:>12} {:>10}", p.name, "-", 0),
            }
        }
        if let Some(mean) = &mean_losses {
            println!("mean L_total {:.6} over {} records", mean.l_total, breakdowns.len());
        }
        println!(
            "{} records in {:.2}s -> {}",
            records.len(),
            t0.elapsed().as_secs_f64(),
            report_path.display()
        );
    }
    Ok(json!({
        "report": report_path,
        "metrics": report,
        "mean_losses": mean_losses,
        "n_records": records.len(),
        "seconds": t0.elapsed().as_secs_f64(),
    }))
}

/// Per-part predicted vertices plus the annotation they were decoded from,
/// when the prediction was annotation-format.
type Prediction = (Vec<Vec<[f64; 3]>>, Option<SampleAnnotation>);

/// Predictions for one sample: annotation JSON (decoded through the bundle)
/// or per-part OBJ meshes. Invisible parts stay empty.
fn load_prediction(
    bundle: &LoadedBundle,
    pred_dir: &Path,
    sample_id: usize,
    visibility: &[bool],
) -> Result<Prediction, CliError> {
    let ann_path = annotation_file(pred_dir, sample_id);
    if ann_path.exists() {
        let ann: SampleAnnotation = read_json(&ann_path)?;
        if ann.parts.len() != NUM_PARTS {
            return Err(CliError::data(format!(
                "{} has {} parts, expected {NUM_PARTS}",
                ann_path.display(),
                ann.parts.len()
            )));
        }
        let mut decoded = vec![Vec::new(); NUM_PARTS];
        for (p, vis) in visibility.iter().enumerate() {
            if *vis {
                decoded[p] = decode_part(&bundle.models[p], &ann.parts[p])?;
            }
        }
        return Ok((decoded, Some(ann)));
    }
    let mut parts = vec![Vec::new(); NUM_PARTS];
    for (p, vis) in visibility.iter().enumerate() {
        if *vis {
            let path = part_mesh_file(pred_dir, sample_id, p);
            if !path.exists() {
                return Err(CliError::data(format!(
                    "no prediction for sample {sample_id}: neither {} nor {} exists",
                    ann_path.display(),
                    path.display()
                )));
            }
            parts[p] = load_mesh(&path)?.vertices;
        }
    }
    Ok((parts, None))
}

fn mean_breakdown(items: &[LossBreakdown]) -> LossBreakdown {
    let n = items.len() as f64;
    let mean = |f: fn(&LossBreakdown) -> f64| items.iter().map(f).sum::<f64>() / n;
    LossBreakdown {
        l_v: mean(|b| b.l_v),
        l_j3d: mean(|b| b.l_j3d),
        l_j2d: mean(|b| b.l_j2d),
        l_s: mean(|b| b.l_s),
        l_r: mean(|b| b.l_r),
        l_t: mean(|b| b.l_t),
        l_ol: mean(|b| b.l_ol),
        l_dc: mean(|b| b.l_dc),
        l_div: mean(|b| b.l_div),
        l_fu: mean(|b| b.l_fu),
        l_total: mean(|b| b.l_total),
    }
}

fn parse_visible(arg: &str, n_parts: usize) -> Result<Vec<bool>, CliError> {
    if arg.trim() == "all" {
        return Ok(vec![true; n_parts]);
    }
    let mut vis = vec![false; n_parts];
    for tok in arg.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let id: usize = tok
            .parse()
            .map_err(|_| CliError::config(format!("bad part id {tok:?} in --visible")))?;
        if id >= n_parts {
            return Err(CliError::config(format!("part id {id} out of range (0..{n_parts})")));
        }
        vis[id] = true;
    }
    if !vis.iter().any(|&v| v) {
        return Err(CliError::config("--visible selected no parts"));
    }
    Ok(vis)
}

fn single_count(fused: &hppm_core::fuse::FusedMesh) -> usize {
    use hppm_core::fuse::VertexProvenance;
    fused.provenance.iter().filter(|p| matches!(p, VertexProvenance::Single { .. })).count()
}

fn resolve_merge_map(cfg: &RunConfig) -> Result<MergeMap, CliError> {
    if let Some(path) = &cfg.merge_map {
        return read_json(path);
    }
    let in_data = cfg.data_dir.join("merge_map.json");
    if in_data.exists() {
        return read_json(&in_data);
    }
    Ok(default_merge_map())
}

fn load_built_templates(bundle_dir: &Path) -> Result<HppmTemplateSet, CliError> {
    let path = bundle_dir.join("templates.json");
    if !path.exists() {
        return Err(CliError::data(format!(
            "no part templates at {}: run `hppm build-template` first",
            path.display()
        )));
    }
    Ok(load_templates(path)?)
}

fn load_trained_bundle(bundle_dir: &Path) -> Result<LoadedBundle, CliError> {
    if !bundle_dir.join("templates.json").exists() {
        return Err(CliError::data(format!(
            "no bundle at {}: run `hppm build-template` first",
            bundle_dir.display()
        )));
    }
    if !bundle_dir.join("model.json").exists() {
        return Err(CliError::data(format!(
            "bundle at {} has no trained model: run `hppm train` first",
            bundle_dir.display()
        )));
    }
    Ok(load_bundle(bundle_dir)?)
}
