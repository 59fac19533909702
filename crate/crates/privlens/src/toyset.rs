//! Deterministic demo dataset: 20 synthetic 64×64 frames, each with one
//! rectangular "person" region and one high-contrast beacon patch outside
//! it. Six binary attributes drive visible patterns inside the region, a
//! scripted scorer reads those patterns back, a scripted detector scores
//! boxes by local contrast, and a scripted embedder summarizes whole
//! frames. The generator writes everything an evaluation run needs except
//! the anonymized image directories themselves, which the `anonymize`
//! subcommand is expected to fill in.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use privlens_core::anonymize::{apply, OperatorSpec};
use privlens_core::model::{
    Detection, DetectionSet, EmbeddingSet, GroundTruth, GroundTruthSet, PixelRect, RasterImage,
    RegionMask, TimedFrame, TimingLog,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BaselineSection, EvaluationConfig, MethodSection, SettingsSection};
use crate::io;

/// Frame edge length.
pub const SIDE: u32 = 64;
/// Number of frames.
pub const IMAGE_COUNT: usize = 20;
/// Key used by the bundled `encrypt` method configuration.
pub const ENCRYPT_KEY: [u8; 16] = *b"0123456789abcdef";
/// Nonce used by the bundled `encrypt` method configuration.
pub const ENCRYPT_NONCE: [u8; 16] = *b"fedcba9876543210";

const PERSON_CLASS: u32 = 0;
const BEACON_CLASS: u32 = 1;
const BEACON: PixelRect = PixelRect {
    x0: 52,
    y0: 52,
    x1: 60,
    y1: 60,
};

/// Attribute columns in header order.
pub const ATTRIBUTES: [&str; 6] = [
    "bright_region",
    "checker_texture",
    "green_tint",
    "horizontal_stripes",
    "red_clothing",
    "speckle_contrast",
];

const A_BRIGHT: usize = 0;
const A_CHECKER: usize = 1;
const A_GREEN: usize = 2;
const A_STRIPES: usize = 3;
const A_RED: usize = 4;
const A_SPECKLE: usize = 5;

/// The six bundled method configurations, in the order the demo writes
/// them. Every parameter here is part of the dataset contract: the scripted
/// scores were produced with exactly these operators.
pub fn method_operators() -> Vec<(&'static str, OperatorSpec)> {
    vec![
        ("blur", OperatorSpec::Blur { kernel: 21 }),
        ("pixelate", OperatorSpec::Pixelate { block: 2 }),
        ("emboss", OperatorSpec::Emboss { kernel: 3 }),
        ("mask", OperatorSpec::MaskBlack),
        (
            "encrypt",
            OperatorSpec::Encrypt {
                key: ENCRYPT_KEY,
                nonce: ENCRYPT_NONCE,
            },
        ),
        ("lowres", OperatorSpec::Lowres { side: 8 }),
    ]
}

/// Mask directory (relative to the dataset root) a method reads: region
/// masks normally, full-frame masks for the whole-frame operator.
pub fn mask_subdir(method: &str) -> &'static str {
    if method == "lowres" {
        "orig/masks_full"
    } else {
        "orig/masks"
    }
}

/// Scripted per-frame processing interval for each method's timing log.
fn frame_interval(method: &str) -> f64 {
    match method {
        "blur" => 0.02,
        "pixelate" => 0.004,
        "emboss" => 0.006,
        "mask" => 0.002,
        "encrypt" => 0.005,
        "lowres" => 0.003,
        _ => 0.01,
    }
}

struct ImagePlan {
    id: String,
    region: PixelRect,
    labels: [bool; 6],
    background: [i32; 3],
    luma_jitter: i32,
}

fn attribute_label(image_index: usize, attribute_index: usize) -> bool {
    (image_index + 2 * attribute_index) % IMAGE_COUNT >= 14
}

fn person_rect(image_index: usize) -> PixelRect {
    let x0 = 8 + (image_index as u32 % 5) * 4;
    let y0 = 8 + (image_index as u32 % 4) * 4;
    PixelRect {
        x0,
        y0,
        x1: x0 + 20,
        y1: y0 + 28,
    }
}

fn make_plans(seed: u64) -> Vec<ImagePlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..IMAGE_COUNT)
        .map(|i| {
            let background = [
                60 + rng.random_range(0..80),
                60 + rng.random_range(0..80),
                60 + rng.random_range(0..80),
            ];
            let luma_jitter = rng.random_range(-8..=8);
            let mut labels = [false; 6];
            for (j, slot) in labels.iter_mut().enumerate() {
                *slot = attribute_label(i, j);
            }
            ImagePlan {
                id: format!("img{i:03}"),
                region: person_rect(i),
                labels,
                background,
                luma_jitter,
            }
        })
        .collect()
}

fn speckle_bit(x: u32, y: u32, image_index: usize) -> bool {
    let h = x.wrapping_mul(0x9E37_79B9)
        ^ y.wrapping_mul(0x85EB_CA6B)
        ^ (image_index as u32).wrapping_mul(0xC2B2_AE35);
    let h = (h ^ (h >> 13)).wrapping_mul(0x27D4_EB2F);
    (h >> 16) & 1 == 1
}

fn contains(rect: &PixelRect, x: u32, y: u32) -> bool {
    x >= rect.x0 && x < rect.x1 && y >= rect.y0 && y < rect.y1
}

fn synth_image(plan: &ImagePlan, image_index: usize) -> RasterImage {
    let mut pixels = Vec::with_capacity((SIDE * SIDE * 3) as usize);
    for y in 0..SIDE {
        for x in 0..SIDE {
            let (r, g, b) = if contains(&plan.region, x, y) {
                let dx = x - plan.region.x0;
                let dy = y - plan.region.y0;
                let luma = if plan.labels[A_BRIGHT] { 180 } else { 70 } + plan.luma_jitter;
                let red_shift = if plan.labels[A_RED] { 55 } else { -10 };
                let green_shift = if plan.labels[A_GREEN] { 45 } else { -15 };
                let mut r = luma + red_shift;
                let mut g = luma + green_shift;
                let mut b = luma - red_shift / 2 - green_shift / 2;
                // Patterns below paint all three channels equally so the
                // color attributes stay readable underneath them.
                let mut paint = (dy as i32 * 3) / 2;
                if plan.labels[A_STRIPES] {
                    paint += if dy % 4 < 2 { 40 } else { -40 };
                }
                if plan.labels[A_CHECKER] {
                    paint += if (dx / 4 + dy / 4).is_multiple_of(2) {
                        35
                    } else {
                        -35
                    };
                }
                if plan.labels[A_SPECKLE] {
                    paint += if speckle_bit(x, y, image_index) {
                        25
                    } else {
                        -25
                    };
                }
                r += paint;
                g += paint;
                b += paint;
                (r, g, b)
            } else if contains(&BEACON, x, y) {
                let dx = x - BEACON.x0;
                let dy = y - BEACON.y0;
                let v = if dx == 0 || dy == 0 || dx == 7 || dy == 7 {
                    240
                } else {
                    30
                };
                (v, v, v)
            } else {
                (
                    plan.background[0] + (x / 4) as i32,
                    plan.background[1] + (y / 4) as i32,
                    plan.background[2] + ((x + y) / 8) as i32,
                )
            };
            pixels.push(r.clamp(0, 255) as u8);
            pixels.push(g.clamp(0, 255) as u8);
            pixels.push(b.clamp(0, 255) as u8);
        }
    }
    RasterImage::new(SIDE, SIDE, pixels).expect("demo frame dimensions are consistent")
}

fn rect_mask(rect: &PixelRect) -> RegionMask {
    let mut bits = vec![false; (SIDE * SIDE) as usize];
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            bits[(y * SIDE + x) as usize] = true;
        }
    }
    RegionMask::new(SIDE, SIDE, bits).expect("demo mask dimensions are consistent")
}

/// Luma statistics of a pixel rectangle used by the scripted scorer,
/// detector and embedder.
struct RegionStats {
    mean_r: f64,
    mean_g: f64,
    mean_b: f64,
    mean_luma: f64,
    std_luma: f64,
    /// Absolute difference of the two 2-row band luma means (4-row period).
    band_diff: f64,
    /// Absolute difference of the two 4×4 cell parity luma means.
    parity_diff: f64,
    /// Mean absolute deviation from the local 2×2 block mean.
    high_freq: f64,
    /// Mean absolute horizontal neighbor difference.
    edge_x: f64,
}

fn luma_at(img: &RasterImage, x: u32, y: u32) -> f64 {
    let [r, g, b] = img.pixel(x, y);
    (r as f64 + g as f64 + b as f64) / 3.0
}

fn region_stats(img: &RasterImage, rect: &PixelRect) -> RegionStats {
    let (w, h) = (rect.x1 - rect.x0, rect.y1 - rect.y0);
    let n = (w * h) as f64;
    let mut sum = [0.0f64; 3];
    let mut sum_luma = 0.0;
    let mut sum_luma_sq = 0.0;
    let mut band = [0.0f64; 2];
    let mut band_n = [0.0f64; 2];
    let mut parity = [0.0f64; 2];
    let mut parity_n = [0.0f64; 2];
    let mut edge_sum = 0.0;
    let mut edge_n = 0.0;
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            let [r, g, b] = img.pixel(x, y);
            sum[0] += r as f64;
            sum[1] += g as f64;
            sum[2] += b as f64;
            let l = luma_at(img, x, y);
            sum_luma += l;
            sum_luma_sq += l * l;
            let dy = y - rect.y0;
            let dx = x - rect.x0;
            let band_idx = usize::from(dy % 4 >= 2);
            band[band_idx] += l;
            band_n[band_idx] += 1.0;
            let parity_idx = ((dx / 4 + dy / 4) % 2) as usize;
            parity[parity_idx] += l;
            parity_n[parity_idx] += 1.0;
            if x + 1 < rect.x1 {
                edge_sum += (luma_at(img, x + 1, y) - l).abs();
                edge_n += 1.0;
            }
        }
    }
    let mut high_freq_sum = 0.0;
    let mut high_freq_n = 0.0;
    for by in 0..h / 2 {
        for bx in 0..w / 2 {
            let x = rect.x0 + bx * 2;
            let y = rect.y0 + by * 2;
            let cells = [
                luma_at(img, x, y),
                luma_at(img, x + 1, y),
                luma_at(img, x, y + 1),
                luma_at(img, x + 1, y + 1),
            ];
            let mean = cells.iter().sum::<f64>() / 4.0;
            high_freq_sum += cells.iter().map(|c| (c - mean).abs()).sum::<f64>();
            high_freq_n += 4.0;
        }
    }
    let mean_luma = sum_luma / n;
    let variance = (sum_luma_sq / n - mean_luma * mean_luma).max(0.0);
    RegionStats {
        mean_r: sum[0] / n,
        mean_g: sum[1] / n,
        mean_b: sum[2] / n,
        mean_luma,
        std_luma: variance.sqrt(),
        band_diff: (band[0] / band_n[0].max(1.0) - band[1] / band_n[1].max(1.0)).abs(),
        parity_diff: (parity[0] / parity_n[0].max(1.0) - parity[1] / parity_n[1].max(1.0)).abs(),
        high_freq: if high_freq_n > 0.0 {
            high_freq_sum / high_freq_n
        } else {
            0.0
        },
        edge_x: if edge_n > 0.0 { edge_sum / edge_n } else { 0.0 },
    }
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Scripted attribute scorer: reads each attribute's visual signature back
/// out of the (possibly anonymized) person region.
fn score_region(img: &RasterImage, rect: &PixelRect) -> Vec<f64> {
    let s = region_stats(img, rect);
    let mut scores = vec![0.0; ATTRIBUTES.len()];
    scores[A_BRIGHT] = clamp01(s.mean_luma / 255.0);
    scores[A_CHECKER] = clamp01(s.parity_diff / 70.0);
    scores[A_GREEN] = clamp01((s.mean_g - s.mean_b) / 100.0 + 0.5);
    scores[A_STRIPES] = clamp01(s.band_diff / 90.0);
    scores[A_RED] = clamp01((s.mean_r - (s.mean_g + s.mean_b) / 2.0) / 120.0 + 0.5);
    scores[A_SPECKLE] = clamp01(s.high_freq / 25.0);
    scores
}

/// Scripted detector: one candidate box per annotated object, scored by
/// local luma contrast and dropped below a fixed floor. Person boxes carry
/// a small deterministic jitter so they are near but not equal to the
/// annotation.
fn detect(img: &RasterImage, plan: &ImagePlan, image_index: usize) -> Vec<Detection> {
    let mut out = Vec::new();
    let candidates = [
        (PERSON_CLASS, plan.region, true),
        (BEACON_CLASS, BEACON, false),
    ];
    for (class_id, rect, jittered) in candidates {
        let stats = region_stats(img, &rect);
        let confidence = clamp01(stats.std_luma / 14.0).min(0.95);
        if confidence < 0.15 {
            continue;
        }
        let (dx, dy) = if jittered {
            (
                (image_index % 3) as f64 - 1.0,
                ((image_index + 1) % 3) as f64 - 1.0,
            )
        } else {
            (0.0, 0.0)
        };
        out.push(Detection {
            image_id: plan.id.clone(),
            class_id,
            bbox: privlens_core::model::BBox::new(
                rect.x0 as f64 + dx,
                rect.y0 as f64 + dy,
                (rect.x1 - rect.x0) as f64,
                (rect.y1 - rect.y0) as f64,
            )
            .expect("demo boxes are well-formed"),
            score: confidence,
        });
    }
    out
}

/// Scripted embedder: whole-frame statistics, so background and beacon
/// content dominate unless an operator touches the full frame.
fn embed(img: &RasterImage) -> Vec<f64> {
    let full = PixelRect {
        x0: 0,
        y0: 0,
        x1: SIDE,
        y1: SIDE,
    };
    let s = region_stats(img, &full);
    vec![
        s.mean_r,
        s.mean_g,
        s.mean_b,
        s.std_luma,
        s.band_diff,
        s.parity_diff,
        s.high_freq,
        s.edge_x,
    ]
}

fn attribute_names() -> Vec<String> {
    ATTRIBUTES.iter().map(|a| a.to_string()).collect()
}

fn timing_log(method: &str) -> TimingLog {
    let dt = frame_interval(method);
    let frames = (0..IMAGE_COUNT as u64)
        .map(|i| TimedFrame {
            index: i,
            timestamp: (i + 1) as f64 * dt,
        })
        .collect();
    TimingLog::new(frames).expect("scripted timing is strictly increasing")
}

fn demo_config() -> EvaluationConfig {
    let method = |name: &str| MethodSection {
        name: name.to_string(),
        images: Some(format!("anon/{name}/images").into()),
        detections: Some(format!("anon/{name}/detections.json").into()),
        embeddings: Some(format!("anon/{name}/embeddings.csv").into()),
        scores: Some(format!("anon/{name}/scores.csv").into()),
        timing: Some(format!("anon/{name}/timing.csv").into()),
    };
    EvaluationConfig {
        settings: SettingsSection::default(),
        baseline: BaselineSection {
            images: Some("orig/images".into()),
            detections: Some("orig/detections.json".into()),
            embeddings: Some("orig/embeddings.bin".into()),
            labels: Some("labels.csv".into()),
            ground_truth: Some("ground_truth.json".into()),
        },
        methods: method_operators()
            .iter()
            .map(|(name, _)| method(name))
            .collect(),
    }
}

/// Generates the dataset under `root`. Everything is derived from `seed`,
/// so equal seeds produce byte-identical trees.
pub fn generate(root: &Path, seed: u64) -> Result<()> {
    let plans = make_plans(seed);
    let orig = root.join("orig");
    for sub in ["images", "masks", "masks_full"] {
        fs::create_dir_all(orig.join(sub))
            .with_context(|| format!("creating {}", orig.join(sub).display()))?;
    }

    let full_mask = RegionMask::full(SIDE, SIDE)?;
    let mut originals = Vec::new();
    let mut orig_scores: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut labels: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    let mut orig_dets = Vec::new();
    let mut gts = Vec::new();
    let mut orig_embeds = EmbeddingSet::new(8)?;
    for (i, plan) in plans.iter().enumerate() {
        let img = synth_image(plan, i);
        let mask = rect_mask(&plan.region);
        io::images::save_image(&img, &orig.join("images").join(format!("{}.png", plan.id)))?;
        io::images::save_mask(&mask, &orig.join("masks").join(format!("{}.png", plan.id)))?;
        io::images::save_mask(
            &full_mask,
            &orig.join("masks_full").join(format!("{}.png", plan.id)),
        )?;
        orig_scores.insert(plan.id.clone(), score_region(&img, &plan.region));
        labels.insert(plan.id.clone(), plan.labels.to_vec());
        orig_dets.extend(detect(&img, plan, i));
        orig_embeds.insert(&plan.id, embed(&img))?;
        for (class_id, rect) in [(PERSON_CLASS, plan.region), (BEACON_CLASS, BEACON)] {
            gts.push(GroundTruth {
                image_id: plan.id.clone(),
                class_id,
                bbox: privlens_core::model::BBox::new(
                    rect.x0 as f64,
                    rect.y0 as f64,
                    (rect.x1 - rect.x0) as f64,
                    (rect.y1 - rect.y0) as f64,
                )?,
            });
        }
        originals.push((img, mask));
    }

    let attrs = attribute_names();
    io::scores::write_scores_csv(&orig.join("scores.csv"), &attrs, &orig_scores)?;
    io::scores::write_labels_csv(&root.join("labels.csv"), &attrs, &labels)?;
    io::detections::save_detections(
        &DetectionSet::new(orig_dets)?,
        &orig.join("detections.json"),
    )?;
    io::detections::save_ground_truth(
        &GroundTruthSet::with_generated_names(gts)?,
        &root.join("ground_truth.json"),
    )?;
    io::embeddings::save_embeddings_binary(&orig_embeds, &orig.join("embeddings.bin"))?;

    for (name, spec) in method_operators() {
        let dir = root.join("anon").join(name);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut scores: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut dets = Vec::new();
        let mut embeds = EmbeddingSet::new(8)?;
        for (i, plan) in plans.iter().enumerate() {
            let (img, mask) = &originals[i];
            let mask = if name == "lowres" { &full_mask } else { mask };
            let anon = apply(&spec, img, mask)?;
            scores.insert(plan.id.clone(), score_region(&anon, &plan.region));
            dets.extend(detect(&anon, plan, i));
            embeds.insert(&plan.id, embed(&anon))?;
        }
        io::scores::write_scores_csv(&dir.join("scores.csv"), &attrs, &scores)?;
        io::detections::save_detections(&DetectionSet::new(dets)?, &dir.join("detections.json"))?;
        io::embeddings::save_embeddings_csv(&embeds, &dir.join("embeddings.csv"))?;
        io::timing::save_timing(&timing_log(name), &dir.join("timing.csv"))?;
    }

    let config_text =
        toml::to_string_pretty(&demo_config()).context("serializing demo configuration")?;
    fs::write(root.join("config.toml"), config_text)
        .with_context(|| format!("writing {}", root.join("config.toml").display()))?;
    Ok(())
}
