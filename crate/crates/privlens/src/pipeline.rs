//! End-to-end orchestration: the anonymization batch job and the
//! multi-method evaluation that fills a [`TradeoffTable`].

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use privlens_core::anonymize::{apply, OperatorSpec};
use privlens_core::model::{
    DetectionSet, EmbeddingSet, GroundTruthSet, RasterImage, TimedFrame, TimingLog,
};
use privlens_core::practicality::{
    components, fps, fuse_components, mmd, robustness, PracticalityComponents, PracticalityInputs,
    WeightVector,
};
use privlens_core::report::{assemble, EvaluationSettings, MethodMetrics, TradeoffTable};
use serde::{Deserialize, Serialize};

use crate::config::EvaluationConfig;
use crate::io::{detections, embeddings, images, scores, timing};

/// One anonymization batch: apply `spec` to every image in `images_dir`
/// using the same-named mask from `masks_dir`.
#[derive(Debug, Clone)]
pub struct AnonymizeJob {
    pub spec: OperatorSpec,
    pub images_dir: PathBuf,
    pub masks_dir: PathBuf,
    pub out_dir: PathBuf,
    /// When set, per-frame completion timestamps are recorded here
    /// (requires at least two images).
    pub timing_out: Option<PathBuf>,
}

/// Runs the batch single-threaded in image-id order; outputs keep the id
/// and container format of their source. Returns the processed ids.
pub fn run_anonymize_job(job: &AnonymizeJob) -> Result<Vec<String>> {
    job.spec.validate()?;
    let files = images::list_image_files(&job.images_dir)?;
    let missing: Vec<&str> = files
        .iter()
        .filter(|(id, _)| !job.masks_dir.join(format!("{id}.png")).is_file())
        .map(|(id, _)| id.as_str())
        .collect();
    if !missing.is_empty() {
        bail!(
            "no mask in {} for image ids: {}",
            job.masks_dir.display(),
            missing.join(", ")
        );
    }
    if job.timing_out.is_some() && files.len() < 2 {
        bail!(
            "a timing log needs at least 2 images, found {}",
            files.len()
        );
    }

    fs::create_dir_all(&job.out_dir)
        .with_context(|| format!("creating {}", job.out_dir.display()))?;
    let start = Instant::now();
    let mut frames = Vec::new();
    let mut previous = 0.0f64;
    let mut ids = Vec::new();
    for (index, (id, path)) in files.iter().enumerate() {
        let img = images::load_image(path).with_context(|| format!("image id `{id}`"))?;
        let mask = images::load_mask(&job.masks_dir.join(format!("{id}.png")))
            .with_context(|| format!("mask id `{id}`"))?;
        let out = apply(&job.spec, &img, &mask).with_context(|| format!("image id `{id}`"))?;
        let extension = path.extension().and_then(|e| e.to_str()).unwrap_or("png");
        images::save_image(&out, &job.out_dir.join(format!("{id}.{extension}")))?;
        if job.timing_out.is_some() {
            // Clock reads can collide at nanosecond granularity; nudge so the
            // strictly-increasing invariant holds.
            let mut t = start.elapsed().as_secs_f64();
            if t <= previous {
                t = previous + 1e-9;
            }
            frames.push(TimedFrame {
                index: index as u64,
                timestamp: t,
            });
            previous = t;
        }
        ids.push(id.clone());
    }
    if let Some(timing_path) = &job.timing_out {
        timing::save_timing(&TimingLog::new(frames)?, timing_path)?;
    }
    Ok(ids)
}

/// Fully expanded practicality computation of one standalone run, as
/// emitted by the `practicality` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PracticalityRun {
    pub weights: WeightVector,
    pub methods: BTreeMap<String, MethodPracticality>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodPracticality {
    pub throughput_fps: f64,
    pub robustness_count: u64,
    pub intelligibility_mmd: f64,
    pub components: PracticalityComponents,
    pub practicality: f64,
}

/// Inputs for one method of a standalone practicality run.
pub struct PracticalityMethodInputs {
    pub timing: PathBuf,
    pub detections: PathBuf,
    pub embeddings: PathBuf,
    pub images: PathBuf,
}

pub struct PracticalityJob {
    pub orig_detections: PathBuf,
    pub orig_embeddings: PathBuf,
    pub orig_images: PathBuf,
    pub methods: BTreeMap<String, PracticalityMethodInputs>,
    pub settings: EvaluationSettings,
}

pub fn run_practicality_job(job: &PracticalityJob) -> Result<PracticalityRun> {
    if job.methods.is_empty() {
        bail!("no methods given");
    }
    let orig_dets =
        detections::load_detections(&job.orig_detections)?.filter_class(job.settings.person_class);
    let orig_embeds = embeddings::load_embeddings(&job.orig_embeddings)?;
    let orig_imgs = images::load_image_dir(&job.orig_images, None)?;

    let mut inputs = PracticalityInputs::default();
    for (name, m) in &job.methods {
        let mut run = || -> Result<()> {
            let log = timing::load_timing(&m.timing)?;
            inputs.throughput_fps.insert(name.clone(), fps(&log));

            let anon_dets =
                detections::load_detections(&m.detections)?.filter_class(job.settings.person_class);
            let anon_imgs = images::load_image_dir(&m.images, None)?;
            let survived = robustness(
                &orig_dets,
                &anon_dets,
                &orig_imgs,
                &anon_imgs,
                job.settings.iou_threshold,
                job.settings.ssim_threshold,
            )?;
            inputs
                .robustness_count
                .insert(name.clone(), survived as f64);

            let anon_embeds = embeddings::load_embeddings(&m.embeddings)?;
            let discrepancy = mmd(&anon_embeds, &orig_embeds, &job.settings.mmd)?;
            inputs.intelligibility_mmd.insert(name.clone(), discrepancy);
            Ok(())
        };
        run().with_context(|| format!("method `{name}`"))?;
    }

    let per_method_components = components(&inputs)?;
    let mut methods = BTreeMap::new();
    for (name, c) in per_method_components {
        methods.insert(
            name.clone(),
            MethodPracticality {
                throughput_fps: inputs.throughput_fps[&name],
                robustness_count: inputs.robustness_count[&name] as u64,
                intelligibility_mmd: inputs.intelligibility_mmd[&name],
                components: c,
                practicality: fuse_components(&c, &job.settings.weights),
            },
        );
    }
    Ok(PracticalityRun {
        weights: job.settings.weights,
        methods,
    })
}

/// Baseline inputs loaded once and shared across methods.
struct BaselineData {
    ground_truth: Option<GroundTruthSet>,
    person_detections: Option<DetectionSet>,
    embeddings: Option<EmbeddingSet>,
    images: Option<BTreeMap<String, RasterImage>>,
    labels_path: Option<PathBuf>,
}

/// Evaluates every configured method and assembles the trade-off table.
/// A dimension is computed exactly when the method-side and baseline-side
/// inputs it needs are both configured; anything else stays missing.
pub fn evaluate_all(config: &EvaluationConfig) -> Result<TradeoffTable> {
    let settings = config.settings.to_settings()?;
    let baseline = BaselineData {
        ground_truth: config
            .baseline
            .ground_truth
            .as_deref()
            .map(detections::load_ground_truth)
            .transpose()
            .context("baseline ground truth")?,
        person_detections: config
            .baseline
            .detections
            .as_deref()
            .map(detections::load_detections)
            .transpose()
            .context("baseline detections")?
            .map(|d| d.filter_class(settings.person_class)),
        embeddings: config
            .baseline
            .embeddings
            .as_deref()
            .map(embeddings::load_embeddings)
            .transpose()
            .context("baseline embeddings")?,
        images: config
            .baseline
            .images
            .as_deref()
            .map(|dir| images::load_image_dir(dir, None))
            .transpose()
            .context("baseline images")?,
        labels_path: config.baseline.labels.clone(),
    };

    let mut methods = Vec::new();
    for section in &config.methods {
        let metrics = evaluate_method(section, &baseline, &settings)
            .with_context(|| format!("method `{}`", section.name))?;
        methods.push((section.name.clone(), metrics));
    }
    Ok(assemble(&settings, methods)?)
}

fn evaluate_method(
    section: &crate::config::MethodSection,
    baseline: &BaselineData,
    settings: &EvaluationSettings,
) -> Result<MethodMetrics> {
    let mut metrics = MethodMetrics::default();

    if let Some(scores_path) = &section.scores {
        let labels_path = baseline
            .labels_path
            .as_ref()
            .context("scores configured but [baseline] has no labels file")?;
        let table = scores::load_scores(scores_path, labels_path)?;
        metrics.privacy = Some(privlens_core::privacy::cmap(&table)?);
    }

    if let (Some(dets_path), Some(gts)) = (&section.detections, &baseline.ground_truth) {
        let dets = detections::load_detections(dets_path)?;
        metrics.utility = Some(privlens_core::report::utility_report(
            &dets,
            gts,
            settings.iou_threshold,
            settings.confidence_threshold,
        )?);
    }

    if let Some(timing_path) = &section.timing {
        let log = timing::load_timing(timing_path)?;
        metrics.throughput_fps = Some(fps(&log));
    }

    if let (Some(dets_path), Some(images_dir), Some(orig_dets), Some(orig_imgs)) = (
        &section.detections,
        &section.images,
        &baseline.person_detections,
        &baseline.images,
    ) {
        let anon_dets = detections::load_detections(dets_path)?.filter_class(settings.person_class);
        let anon_imgs = images::load_image_dir(images_dir, None)?;
        metrics.robustness_count = Some(robustness(
            orig_dets,
            &anon_dets,
            orig_imgs,
            &anon_imgs,
            settings.iou_threshold,
            settings.ssim_threshold,
        )?);
    }

    if let (Some(embeds_path), Some(orig_embeds)) = (&section.embeddings, &baseline.embeddings) {
        let anon_embeds = embeddings::load_embeddings(embeds_path)?;
        metrics.intelligibility_mmd = Some(mmd(&anon_embeds, orig_embeds, &settings.mmd)?);
    }

    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use privlens_core::model::RegionMask;

    fn write_pair(dir: &std::path::Path, id: &str, width: u32, height: u32) {
        let mut img = RasterImage::filled(width, height, [10, 20, 30]).unwrap();
        for y in 0..height {
            for x in 0..width {
                img.set_pixel(
                    x,
                    y,
                    [
                        ((x * 9 + y * 5) % 256) as u8,
                        ((x * 3 + y * 17) % 256) as u8,
                        ((x * 29 + y) % 256) as u8,
                    ],
                );
            }
        }
        images::save_image(&img, &dir.join("images").join(format!("{id}.png"))).unwrap();
        let mut bits = vec![false; (width * height) as usize];
        for y in 2..height.min(6) {
            for x in 1..width.min(5) {
                bits[(y * width + x) as usize] = true;
            }
        }
        let mask = RegionMask::new(width, height, bits).unwrap();
        images::save_mask(&mask, &dir.join("masks").join(format!("{id}.png"))).unwrap();
    }

    #[test]
    fn anonymize_job_matches_direct_operator_application() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("images")).unwrap();
        fs::create_dir_all(dir.path().join("masks")).unwrap();
        for id in ["a", "b", "c"] {
            write_pair(dir.path(), id, 12, 9);
        }
        let timing_path = dir.path().join("timing.csv");
        let job = AnonymizeJob {
            spec: OperatorSpec::Pixelate { block: 3 },
            images_dir: dir.path().join("images"),
            masks_dir: dir.path().join("masks"),
            out_dir: dir.path().join("out"),
            timing_out: Some(timing_path.clone()),
        };
        let ids = run_anonymize_job(&job).unwrap();
        assert_eq!(ids, ["a", "b", "c"]);

        for id in &ids {
            let src =
                images::load_image(&dir.path().join("images").join(format!("{id}.png"))).unwrap();
            let mask =
                images::load_mask(&dir.path().join("masks").join(format!("{id}.png"))).unwrap();
            let expected = apply(&job.spec, &src, &mask).unwrap();
            let written =
                images::load_image(&dir.path().join("out").join(format!("{id}.png"))).unwrap();
            assert_eq!(written, expected);
        }
        let log = timing::load_timing(&timing_path).unwrap();
        assert_eq!(log.len(), 3);
    }

    #[test]
    fn anonymize_job_checks_mask_coverage_and_timing_minimum() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("images")).unwrap();
        fs::create_dir_all(dir.path().join("masks")).unwrap();
        write_pair(dir.path(), "a", 8, 8);
        let img = RasterImage::filled(8, 8, [1, 2, 3]).unwrap();
        images::save_image(&img, &dir.path().join("images").join("orphan.png")).unwrap();

        let job = AnonymizeJob {
            spec: OperatorSpec::MaskBlack,
            images_dir: dir.path().join("images"),
            masks_dir: dir.path().join("masks"),
            out_dir: dir.path().join("out"),
            timing_out: None,
        };
        let err = run_anonymize_job(&job).unwrap_err();
        assert!(err.to_string().contains("orphan"), "{err}");

        fs::remove_file(dir.path().join("images").join("orphan.png")).unwrap();
        let with_timing = AnonymizeJob {
            timing_out: Some(dir.path().join("timing.csv")),
            ..job
        };
        let err = run_anonymize_job(&with_timing).unwrap_err();
        assert!(err.to_string().contains("at least 2"), "{err}");
    }
}
