//! Evaluation run configuration (TOML): thresholds and weights in a
//! `[settings]` section, shared baseline inputs in `[baseline]`, and one
//! `[[method]]` section per anonymization method. Any omitted method input
//! leaves the corresponding dimension missing rather than failing the run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use privlens_core::practicality::{MmdParams, WeightVector};
use privlens_core::report::EvaluationSettings;
use serde::{Deserialize, Serialize};

/// Builds a weight vector from raw non-negative values, scaling by their
/// sum; `0.3,0.3,0.3` therefore means equal thirds. This also absorbs the
/// small drift introduced by fixed-decimal serialization.
pub fn normalized_weights(
    robustness: f64,
    intelligibility: f64,
    throughput: f64,
) -> Result<WeightVector> {
    let values = [robustness, intelligibility, throughput];
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        bail!("weights must be non-negative and finite, got {values:?}");
    }
    let sum: f64 = values.iter().sum();
    if sum <= 0.0 {
        bail!("weights must not all be zero");
    }
    Ok(WeightVector::new(
        robustness / sum,
        intelligibility / sum,
        throughput / sum,
    )?)
}

fn default_iou() -> f64 {
    0.5
}
fn default_confidence() -> f64 {
    0.25
}
fn default_ssim() -> f64 {
    0.99
}
fn default_mmd_sigma() -> f64 {
    10.0
}
fn default_mmd_scale() -> f64 {
    1000.0
}
fn default_weights() -> [f64; 3] {
    [1.0 / 3.0; 3]
}

/// `[settings]` section; every field has the module default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsSection {
    #[serde(default = "default_iou")]
    pub iou_threshold: f64,
    #[serde(default = "default_confidence")]
    pub confidence_threshold: f64,
    #[serde(default = "default_ssim")]
    pub ssim_threshold: f64,
    #[serde(default = "default_mmd_sigma")]
    pub mmd_sigma: f64,
    #[serde(default = "default_mmd_scale")]
    pub mmd_scale: f64,
    #[serde(default)]
    pub person_class: u32,
    /// Raw (robustness, intelligibility, throughput) weights, normalized by
    /// their sum on use.
    #[serde(default = "default_weights")]
    pub weights: [f64; 3],
}

impl Default for SettingsSection {
    fn default() -> Self {
        Self {
            iou_threshold: default_iou(),
            confidence_threshold: default_confidence(),
            ssim_threshold: default_ssim(),
            mmd_sigma: default_mmd_sigma(),
            mmd_scale: default_mmd_scale(),
            person_class: 0,
            weights: default_weights(),
        }
    }
}

impl SettingsSection {
    pub fn to_settings(&self) -> Result<EvaluationSettings> {
        let settings = EvaluationSettings {
            iou_threshold: self.iou_threshold,
            confidence_threshold: self.confidence_threshold,
            ssim_threshold: self.ssim_threshold,
            mmd: MmdParams {
                sigma: self.mmd_sigma,
                scale: self.mmd_scale,
            },
            person_class: self.person_class,
            weights: normalized_weights(self.weights[0], self.weights[1], self.weights[2])?,
        };
        settings.validate()?;
        Ok(settings)
    }
}

/// `[baseline]` section: inputs from the un-anonymized run that several
/// dimensions compare against.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub images: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
}

/// One `[[method]]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub name: String,
    #[serde(default)]
    pub images: Option<PathBuf>,
    #[serde(default)]
    pub detections: Option<PathBuf>,
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub scores: Option<PathBuf>,
    #[serde(default)]
    pub timing: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    #[serde(default)]
    pub settings: SettingsSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default, rename = "method")]
    pub methods: Vec<MethodSection>,
}

impl EvaluationConfig {
    /// Resolves every relative path against `base` (the config directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&path);
                }
            }
        };
        fix(&mut self.baseline.images);
        fix(&mut self.baseline.detections);
        fix(&mut self.baseline.embeddings);
        fix(&mut self.baseline.labels);
        fix(&mut self.baseline.ground_truth);
        for method in &mut self.methods {
            fix(&mut method.images);
            fix(&mut method.detections);
            fix(&mut method.embeddings);
            fix(&mut method.scores);
            fix(&mut method.timing);
        }
    }
}

/// Parses a config file and resolves its relative paths against its parent
/// directory.
pub fn load_config(path: &Path) -> Result<EvaluationConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config: EvaluationConfig =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    config.resolve_paths(base);
    Ok(config)
}
