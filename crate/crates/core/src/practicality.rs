//! Practicality dimension: throughput from timing logs, robustness (how many
//! person detections survive anonymization nearly unchanged), intelligibility
//! (embedding-distribution discrepancy) and their fusion into a single score
//! by a weighted sum of min-max normalized components.
//!
//! Robustness and intelligibility are inverted during normalization so that
//! higher always means better before weighting.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imageops::{bilinear_resize, channel_planes, convolve_separable_replicate, crop};
use crate::model::{DetectionSet, EmbeddingSet, PixelRect, RasterImage, TimingLog};
use crate::utility::iou;

/// SSIM stabilization constants for 8-bit dynamic range.
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);
/// SSIM window: 11×11 Gaussian, σ = 1.5.
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

/// Non-negative fusion weights summing to 1 (within 1e-9) for robustness,
/// intelligibility and throughput.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightVector {
    pub robustness: f64,
    pub intelligibility: f64,
    pub throughput: f64,
}

impl WeightVector {
    pub fn new(robustness: f64, intelligibility: f64, throughput: f64) -> Result<Self> {
        let w = Self {
            robustness,
            intelligibility,
            throughput,
        };
        w.validate()?;
        Ok(w)
    }

    /// The equal-emphasis vector (1/3, 1/3, 1/3).
    pub fn equal() -> Self {
        Self {
            robustness: 1.0 / 3.0,
            intelligibility: 1.0 / 3.0,
            throughput: 1.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.robustness, self.intelligibility, self.throughput] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::WeightRange { value: v });
            }
        }
        let sum = self.robustness + self.intelligibility + self.throughput;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::WeightSum { sum });
        }
        Ok(())
    }
}

/// Raw per-method metrics prior to normalization. The three maps must cover
/// the same method set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PracticalityInputs {
    pub throughput_fps: BTreeMap<String, f64>,
    pub robustness_count: BTreeMap<String, f64>,
    pub intelligibility_mmd: BTreeMap<String, f64>,
}

impl PracticalityInputs {
    pub fn validate(&self) -> Result<()> {
        if self.throughput_fps.is_empty() {
            return Err(Error::EmptyInput {
                what: "practicality inputs",
            });
        }
        let maps = [
            (&self.throughput_fps, "throughput"),
            (&self.robustness_count, "robustness"),
            (&self.intelligibility_mmd, "intelligibility"),
        ];
        for (map, from) in maps {
            for method in self.throughput_fps.keys().chain(map.keys()) {
                let missing_here = !map.contains_key(method);
                let missing_ref = !self.throughput_fps.contains_key(method);
                if missing_here || missing_ref {
                    return Err(Error::MethodSetMismatch {
                        method: method.clone(),
                        from: if missing_here { from } else { "throughput" },
                    });
                }
            }
        }
        for (method, &v) in &self.throughput_fps {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::FpsRange {
                    method: method.clone(),
                });
            }
        }
        for map in [&self.robustness_count, &self.intelligibility_mmd] {
            for (method, &v) in map {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NonFinite {
                        context: "practicality inputs",
                        id: method.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Min-max normalized components of one method, each in `[0, 1]` and
/// oriented so that higher is better.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PracticalityComponents {
    pub robustness: f64,
    pub intelligibility: f64,
    pub throughput: f64,
}

/// Frames per second of a single-threaded run. The telescoping sum of
/// per-frame durations collapses to the first/last timestamp difference, so
/// interior timestamps never matter.
pub fn fps(log: &TimingLog) -> f64 {
    // TimingLog guarantees N ≥ 2 and strictly increasing timestamps.
    log.len() as f64 / (log.last().timestamp - log.first().timestamp)
}

fn ssim_window_taps() -> Vec<f64> {
    let radius = (SSIM_WINDOW / 2) as f64;
    let mut taps = Vec::with_capacity(SSIM_WINDOW);
    let mut sum = 0.0;
    for i in 0..SSIM_WINDOW {
        let d = i as f64 - radius;
        let w = libm::exp(-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
        taps.push(w);
        sum += w;
    }
    for w in &mut taps {
        *w /= sum;
    }
    taps
}

/// Mean structural similarity between two equal-size images: Gaussian-
/// windowed local statistics per channel, channel-averaged. Identical
/// images score exactly 1.0.
pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    a.check_same_size(b)?;
    let (w, h) = (a.width() as usize, a.height() as usize);
    let taps = ssim_window_taps();
    let planes_a = channel_planes(a);
    let planes_b = channel_planes(b);

    let mut channel_sum = 0.0;
    for (pa, pb) in planes_a.iter().zip(&planes_b) {
        let conv = |p: &[f64]| convolve_separable_replicate(p, w, h, &taps);
        let mu_a = conv(pa);
        let mu_b = conv(pb);
        let aa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| x * y).collect();
        let m_aa = conv(&aa);
        let m_bb = conv(&bb);
        let m_ab = conv(&ab);

        let mut sum = 0.0;
        for i in 0..w * h {
            let var_a = m_aa[i] - mu_a[i] * mu_a[i];
            let var_b = m_bb[i] - mu_b[i] * mu_b[i];
            let cov = m_ab[i] - mu_a[i] * mu_b[i];
            let numerator = (2.0 * mu_a[i] * mu_b[i] + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let denominator =
                (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + SSIM_C1) * (var_a + var_b + SSIM_C2);
            sum += numerator / denominator;
        }
        channel_sum += sum / (w * h) as f64;
    }
    Ok(channel_sum / 3.0)
}

/// Pixel-aligns and clamps a float box to image bounds (floor/ceil).
fn pixel_rect(bbox: &crate::model::BBox) -> PixelRect {
    let x0 = libm::floor(bbox.x.max(0.0)) as u32;
    let y0 = libm::floor(bbox.y.max(0.0)) as u32;
    let x1 = libm::ceil(bbox.right().max(0.0)) as u32;
    let y1 = libm::ceil(bbox.bottom().max(0.0)) as u32;
    PixelRect { x0, y0, x1, y1 }
}

/// Counts original↔anonymized person detections that stay IoU-matched and
/// visually near-identical: matched pairs (greedy, score-ordered, IoU ≥
/// `iou_thresh`) whose union-box crops reach `ssim_thresh`. Crops are
/// resized (bilinear) to their elementwise max dimensions when they differ;
/// a pair whose clamped union box misses either image entirely is skipped.
/// Lower counts mean stronger protection.
///
/// Both detection sets are expected to be pre-filtered to the person class;
/// matching is additionally class- and image-gated.
pub fn robustness(
    orig_dets: &DetectionSet,
    anon_dets: &DetectionSet,
    orig_imgs: &BTreeMap<String, RasterImage>,
    anon_imgs: &BTreeMap<String, RasterImage>,
    iou_thresh: f64,
    ssim_thresh: f64,
) -> Result<u64> {
    // Greedy matching, original detections by descending score.
    let mut order: Vec<usize> = (0..orig_dets.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&orig_dets.entries()[i], &orig_dets.entries()[j]);
        b.score
            .total_cmp(&a.score)
            .then(a.image_id.cmp(&b.image_id))
            .then(a.bbox.lex_cmp(&b.bbox))
    });
    let mut anon_taken = alloc::vec![false; anon_dets.len()];

    let mut count = 0u64;
    for oi in order {
        let orig = &orig_dets.entries()[oi];
        let mut best: Option<(f64, usize)> = None;
        for (ai, anon) in anon_dets.entries().iter().enumerate() {
            if anon_taken[ai] || anon.image_id != orig.image_id || anon.class_id != orig.class_id {
                continue;
            }
            let overlap = iou(&orig.bbox, &anon.bbox);
            if overlap >= iou_thresh && best.is_none_or(|(b, _)| overlap > b) {
                best = Some((overlap, ai));
            }
        }
        let Some((_, ai)) = best else { continue };
        anon_taken[ai] = true;

        let orig_img = orig_imgs
            .get(&orig.image_id)
            .ok_or_else(|| Error::MissingImage {
                id: orig.image_id.clone(),
            })?;
        let anon_img = anon_imgs
            .get(&orig.image_id)
            .ok_or_else(|| Error::MissingImage {
                id: orig.image_id.clone(),
            })?;

        let union = orig.bbox.union(&anon_dets.entries()[ai].bbox);
        let rect = pixel_rect(&union);
        let (Ok(crop_orig), Ok(crop_anon)) = (crop(orig_img, rect), crop(anon_img, rect)) else {
            continue; // union box entirely outside an image: nothing to compare
        };

        let target_w = crop_orig.width().max(crop_anon.width());
        let target_h = crop_orig.height().max(crop_anon.height());
        let resized_orig = if crop_orig.dimensions() != (target_w, target_h) {
            bilinear_resize(&crop_orig, target_w, target_h)?
        } else {
            crop_orig
        };
        let resized_anon = if crop_anon.dimensions() != (target_w, target_h) {
            bilinear_resize(&crop_anon, target_w, target_h)?
        } else {
            crop_anon
        };
        if ssim(&resized_orig, &resized_anon)? >= ssim_thresh {
            count += 1;
        }
    }
    Ok(count)
}

/// RBF kernel parameters for [`mmd`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MmdParams {
    pub sigma: f64,
    pub scale: f64,
}

impl Default for MmdParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            scale: 1000.0,
        }
    }
}

impl MmdParams {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite()
            || self.sigma <= 0.0
            || !self.scale.is_finite()
            || self.scale < 0.0
        {
            return Err(Error::BadMmdParams {
                sigma: self.sigma,
                scale: self.scale,
            });
        }
        Ok(())
    }
}

fn unit_normalized_rows(set: &EmbeddingSet) -> Vec<Vec<f64>> {
    set.rows()
        .map(|(_, row)| {
            let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            if norm > 0.0 {
                row.iter().map(|v| v / norm).collect()
            } else {
                row.to_vec()
            }
        })
        .collect()
}

fn rbf_gram_mean(a: &[Vec<f64>], b: &[Vec<f64>], sigma: f64) -> f64 {
    let mut sum = 0.0;
    for u in a {
        for v in b {
            let dist2: f64 = u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum();
            sum += libm::exp(-dist2 / (2.0 * sigma * sigma));
        }
    }
    sum / (a.len() as f64 * b.len() as f64)
}

/// Biased (V-statistic) squared maximum mean discrepancy between two
/// embedding sets under an RBF kernel, scaled and clamped at zero. Rows are
/// unit-normalized before kerneling; identical sets yield exactly 0.
pub fn mmd(x: &EmbeddingSet, y: &EmbeddingSet, params: &MmdParams) -> Result<f64> {
    params.validate()?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput {
            what: "embedding set",
        });
    }
    if x.dim() != y.dim() {
        return Err(Error::EmbeddingDim {
            id: "second embedding set".to_string(),
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let rows_x = unit_normalized_rows(x);
    let rows_y = unit_normalized_rows(y);
    let mean_xx = rbf_gram_mean(&rows_x, &rows_x, params.sigma);
    let mean_yy = rbf_gram_mean(&rows_y, &rows_y, params.sigma);
    let mean_xy = rbf_gram_mean(&rows_x, &rows_y, params.sigma);
    Ok(params.scale * (mean_xx + mean_yy - 2.0 * mean_xy).max(0.0))
}

/// Min-max scales a per-method metric into `[0, 1]`, optionally inverting
/// the orientation; all-equal inputs map every method to 0.5.
pub fn normalize_invert(
    values: &BTreeMap<String, f64>,
    invert: bool,
) -> Result<BTreeMap<String, f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput {
            what: "normalization input",
        });
    }
    for (method, &v) in values {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "normalization input",
                id: method.clone(),
            });
        }
    }
    let min = values.values().cloned().fold(f64::INFINITY, f64::min);
    let max = values.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    Ok(values
        .iter()
        .map(|(method, &v)| {
            let scaled = if range == 0.0 {
                0.5
            } else if invert {
                (max - v) / range
            } else {
                (v - min) / range
            };
            (method.clone(), scaled)
        })
        .collect())
}

/// Normalizes the three raw metrics across methods: robustness and
/// intelligibility inverted (lower raw is better), throughput kept as-is.
pub fn components(inputs: &PracticalityInputs) -> Result<BTreeMap<String, PracticalityComponents>> {
    inputs.validate()?;
    let robustness_n = normalize_invert(&inputs.robustness_count, true)?;
    let intelligibility_n = normalize_invert(&inputs.intelligibility_mmd, true)?;
    let throughput_n = normalize_invert(&inputs.throughput_fps, false)?;
    Ok(inputs
        .throughput_fps
        .keys()
        .map(|method| {
            (
                method.clone(),
                PracticalityComponents {
                    robustness: robustness_n[method],
                    intelligibility: intelligibility_n[method],
                    throughput: throughput_n[method],
                },
            )
        })
        .collect())
}

/// The weighted sum `w_r·R_n + w_i·I_n + w_t·T_n` over already-normalized
/// components.
pub fn fuse_components(c: &PracticalityComponents, w: &WeightVector) -> f64 {
    // The true value lies between the smallest and largest component; the
    // clamp only removes the one-ulp overshoot that three rounded products
    // of near-one factors can accumulate.
    (w.robustness * c.robustness
        + w.intelligibility * c.intelligibility
        + w.throughput * c.throughput)
        .clamp(0.0, 1.0)
}

/// Full practicality scores per method: normalize, then fuse under `w`.
pub fn practicality(
    inputs: &PracticalityInputs,
    w: &WeightVector,
) -> Result<BTreeMap<String, f64>> {
    w.validate()?;
    Ok(components(inputs)?
        .into_iter()
        .map(|(method, c)| (method, fuse_components(&c, w)))
        .collect())
}
