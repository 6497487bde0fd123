//! Run configuration: one JSON file drives every subcommand.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use hppm_core::annotate::FitMode;
use hppm_core::losses::LossWeights;
use hppm_core::pv::CropConfig;
use hppm_core::shape::TrainingConfig;
use hppm_core::synth::SynthBodySpec;
use hppm_core::train::RegressorMode;
use hppm_core::transform::CameraIntrinsics;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_ENV: &str = "HPPM_CONFIG";

/// Settings for the whole pipeline. Every field has a default, so `{}` is a
/// valid configuration file; relative paths resolve against the working
/// directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Base seed for benchmark crop generation. Dataset content is governed
    /// by `synth.seed`.
    pub seed: u64,
    /// Dataset directory: `synth` writes it, the other commands read it.
    pub data_dir: PathBuf,
    /// Output directory: bundle, annotations, manifests, reports.
    pub out_dir: PathBuf,
    /// Canonical-body inputs; `None` resolves inside `data_dir`, where
    /// `synth` puts them.
    pub template_mesh: Option<PathBuf>,
    pub blend_weights: Option<PathBuf>,
    pub merge_map: Option<PathBuf>,
    pub dilation_steps: usize,
    /// Default sample count for `synth`.
    pub n_samples: usize,
    pub synth: SynthBodySpec,
    pub training: TrainingConfig,
    pub regressor_mode: RegressorMode,
    pub fit_mode: FitMode,
    pub camera: CameraIntrinsics,
    pub loss_weights: LossWeights,
    pub crops: CropConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            template_mesh: None,
            blend_weights: None,
            merge_map: None,
            dilation_steps: 5,
            n_samples: 200,
            synth: SynthBodySpec::default(),
            training: TrainingConfig::default(),
            regressor_mode: RegressorMode::default(),
            fit_mode: FitMode::default(),
            camera: CameraIntrinsics { fx: 1000.0, fy: 1000.0, cx: 500.0, cy: 500.0 },
            loss_weights: LossWeights::default(),
            crops: CropConfig::default(),
        }
    }
}

/// Loads the configuration: explicit `--config` path first, then the
/// `HPPM_CONFIG` environment variable, then built-in defaults.
pub fn load(explicit: Option<&Path>) -> Result<RunConfig, CliError> {
    let source = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
    };
    let cfg: RunConfig = match source {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let config_err = |e: hppm_core::Error| CliError::config(e.to_string());
        self.synth.validate().map_err(config_err)?;
        self.crops.validate().map_err(config_err)?;
        self.loss_weights.validate().map_err(config_err)?;
        // Per-part dimensions are unknown until templates exist; usize::MAX
        // checks everything except the k_max <= 3N_p bound, which training
        // re-checks per part.
        self.training.validate(usize::MAX).map_err(config_err)?;
        CameraIntrinsics::new(self.camera.fx, self.camera.fy, self.camera.cx, self.camera.cy)
            .map(drop)
            .map_err(config_err)?;
        for (label, path) in [
            ("template_mesh", &self.template_mesh),
            ("blend_weights", &self.blend_weights),
            ("merge_map", &self.merge_map),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::config(format!(
                        "configured {label} {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn template_mesh_path(&self) -> PathBuf {
        self.template_mesh.clone().unwrap_or_else(|| self.data_dir.join("template.obj"))
    }

    pub fn blend_weights_path(&self) -> PathBuf {
        self.blend_weights.clone().unwrap_or_else(|| self.data_dir.join("weights.json"))
    }

    pub fn bundle_dir(&self) -> PathBuf {
        self.out_dir.join("bundle")
    }

    pub fn annotations_dir(&self) -> PathBuf {
        self.out_dir.join("annotations")
    }

    pub fn gt_parts_dir(&self) -> PathBuf {
        self.out_dir.join("gt_parts")
    }

    pub fn fused_dir(&self) -> PathBuf {
        self.out_dir.join("fused")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join("pv_manifest.jsonl")
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.out_dir.join("metrics.json")
    }
}
