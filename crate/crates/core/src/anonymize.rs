//! Region anonymization operators. Each operator transforms only the pixels
//! inside a [`RegionMask`] and composites the result back into the image —
//! except `lowres`, which by design resamples the whole frame and therefore
//! demands a full-frame mask.
//!
//! All operators are pure and bit-deterministic.

use aes::cipher::{KeyIvInit, StreamCipher};
use aes::Aes128;
use alloc::vec::Vec;
use ctr::Ctr128BE;

use crate::error::{Error, Result};
use crate::imageops::{bilinear_resize, channel_planes, convolve_separable_replicate, quantize};
use crate::model::{RasterImage, RegionMask, CHANNELS};

/// Fixed 3×3 emboss kernel (sums to 1), applied as correlation with a +128
/// offset.
const EMBOSS_KERNEL: [[i32; 3]; 3] = [[-2, -1, 0], [-1, 1, 1], [0, 1, 2]];

/// A fully parameterized anonymization operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperatorSpec {
    /// Gaussian blur with an odd kernel size ≥ 3.
    Blur { kernel: u32 },
    /// Block-mean pixelation with block size ≥ 1.
    Pixelate { block: u32 },
    /// Relief emboss; the kernel size is fixed at 3.
    Emboss { kernel: u32 },
    /// Fill the region with black.
    MaskBlack,
    /// XOR the region's byte stream with an AES-128-CTR keystream.
    Encrypt { key: [u8; 16], nonce: [u8; 16] },
    /// Downscale the whole frame to `side`×`side`, then upscale back.
    Lowres { side: u32 },
}

impl OperatorSpec {
    /// Checks the parameter constraints that do not depend on any image.
    pub fn validate(&self) -> Result<()> {
        match *self {
            OperatorSpec::Blur { kernel } => {
                if kernel < 3 || kernel.is_multiple_of(2) {
                    return Err(Error::BlurKernel { kernel });
                }
            }
            OperatorSpec::Pixelate { block } => {
                if block == 0 {
                    return Err(Error::PixelateBlock);
                }
            }
            OperatorSpec::Emboss { kernel } => {
                if kernel != 3 {
                    return Err(Error::EmbossKernel { kernel });
                }
            }
            OperatorSpec::MaskBlack | OperatorSpec::Encrypt { .. } => {}
            OperatorSpec::Lowres { side } => {
                if side == 0 {
                    return Err(Error::LowresSide);
                }
            }
        }
        Ok(())
    }

    /// Stable operator name used in CLI flags and file naming.
    pub fn name(&self) -> &'static str {
        match self {
            OperatorSpec::Blur { .. } => "blur",
            OperatorSpec::Pixelate { .. } => "pixelate",
            OperatorSpec::Emboss { .. } => "emboss",
            OperatorSpec::MaskBlack => "mask",
            OperatorSpec::Encrypt { .. } => "encrypt",
            OperatorSpec::Lowres { .. } => "lowres",
        }
    }
}

/// Validates the operator parameters and mask pairing, then dispatches.
pub fn apply(spec: &OperatorSpec, img: &RasterImage, mask: &RegionMask) -> Result<RasterImage> {
    spec.validate()?;
    mask.check_matches(img)?;
    match *spec {
        OperatorSpec::Blur { kernel } => blur_region(img, mask, kernel),
        OperatorSpec::Pixelate { block } => pixelate_region(img, mask, block),
        OperatorSpec::Emboss { kernel } => emboss_region(img, mask, kernel),
        OperatorSpec::MaskBlack => mask_black_region(img, mask),
        OperatorSpec::Encrypt { key, nonce } => encrypt_region(img, mask, &key, &nonce),
        OperatorSpec::Lowres { side } => lowres_region(img, mask, side),
    }
}

/// σ tied to the kernel size by the widely used OpenCV default.
pub fn gaussian_sigma(kernel: u32) -> f64 {
    0.3 * ((f64::from(kernel) - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalized 1-D Gaussian taps for an odd kernel size; the 2-D kernel is
/// their outer product. Weights sum to 1 within 1e-12.
pub fn gaussian_kernel(kernel: u32) -> Result<Vec<f64>> {
    if kernel < 3 || kernel.is_multiple_of(2) {
        return Err(Error::BlurKernel { kernel });
    }
    let sigma = gaussian_sigma(kernel);
    let radius = f64::from(kernel / 2);
    let mut taps = Vec::with_capacity(kernel as usize);
    let mut sum = 0.0;
    for i in 0..kernel {
        let d = f64::from(i) - radius;
        let w = libm::exp(-(d * d) / (2.0 * sigma * sigma));
        taps.push(w);
        sum += w;
    }
    for w in &mut taps {
        *w /= sum;
    }
    Ok(taps)
}

/// Gaussian-blurs the masked region (σ derived from `kernel`), replicating
/// edges; pixels outside the mask are untouched.
pub fn blur_region(img: &RasterImage, mask: &RegionMask, kernel: u32) -> Result<RasterImage> {
    mask.check_matches(img)?;
    let taps = gaussian_kernel(kernel)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let planes = channel_planes(img);
    let blurred: Vec<Vec<f64>> = planes
        .iter()
        .map(|p| convolve_separable_replicate(p, w, h, &taps))
        .collect();

    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if mask.get(x, y) {
                let i = y as usize * w + x as usize;
                out.set_pixel(
                    x,
                    y,
                    [
                        quantize(blurred[0][i]),
                        quantize(blurred[1][i]),
                        quantize(blurred[2][i]),
                    ],
                );
            }
        }
    }
    Ok(out)
}

/// Integer mean of `sum` over `count` samples, rounded half-up, without
/// leaving integer arithmetic.
#[inline]
fn mean_half_up(sum: u64, count: u64) -> u8 {
    ((2 * sum + count) / (2 * count)) as u8
}

/// Replaces each masked pixel with the per-channel mean of the masked pixels
/// in its block. Blocks tile the mask's bounding box anchored at its
/// top-left corner; taking means over block ∩ mask (rather than the whole
/// block) makes the operation exactly idempotent.
pub fn pixelate_region(img: &RasterImage, mask: &RegionMask, block: u32) -> Result<RasterImage> {
    mask.check_matches(img)?;
    if block == 0 {
        return Err(Error::PixelateBlock);
    }
    let Some(bbox) = mask.bounding_box() else {
        return Ok(img.clone()); // empty mask: nothing to do
    };

    let mut out = img.clone();
    let mut by = bbox.y0;
    while by < bbox.y1 {
        let block_y1 = (by + block).min(bbox.y1);
        let mut bx = bbox.x0;
        while bx < bbox.x1 {
            let block_x1 = (bx + block).min(bbox.x1);

            let mut sums = [0u64; CHANNELS];
            let mut count = 0u64;
            for y in by..block_y1 {
                for x in bx..block_x1 {
                    if mask.get(x, y) {
                        let px = img.pixel(x, y);
                        for c in 0..CHANNELS {
                            sums[c] += u64::from(px[c]);
                        }
                        count += 1;
                    }
                }
            }
            if count > 0 {
                let mean = [
                    mean_half_up(sums[0], count),
                    mean_half_up(sums[1], count),
                    mean_half_up(sums[2], count),
                ];
                for y in by..block_y1 {
                    for x in bx..block_x1 {
                        if mask.get(x, y) {
                            out.set_pixel(x, y, mean);
                        }
                    }
                }
            }
            bx = block_x1;
        }
        by = block_y1;
    }
    Ok(out)
}

/// Embosses the masked region: 3×3 correlation with [`EMBOSS_KERNEL`] plus a
/// 128 offset, clamped, edges replicated. Neighborhoods always read the
/// original image.
pub fn emboss_region(img: &RasterImage, mask: &RegionMask, kernel: u32) -> Result<RasterImage> {
    mask.check_matches(img)?;
    if kernel != 3 {
        return Err(Error::EmbossKernel { kernel });
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if !mask.get(x, y) {
                continue;
            }
            let mut acc = [0i32; CHANNELS];
            for (ky, row) in EMBOSS_KERNEL.iter().enumerate() {
                for (kx, &coeff) in row.iter().enumerate() {
                    let sx = (i64::from(x) + kx as i64 - 1).clamp(0, w - 1) as u32;
                    let sy = (i64::from(y) + ky as i64 - 1).clamp(0, h - 1) as u32;
                    let px = img.pixel(sx, sy);
                    for c in 0..CHANNELS {
                        acc[c] += coeff * i32::from(px[c]);
                    }
                }
            }
            out.set_pixel(
                x,
                y,
                [
                    (acc[0] + 128).clamp(0, 255) as u8,
                    (acc[1] + 128).clamp(0, 255) as u8,
                    (acc[2] + 128).clamp(0, 255) as u8,
                ],
            );
        }
    }
    Ok(out)
}

/// Fills the masked region with black.
pub fn mask_black_region(img: &RasterImage, mask: &RegionMask) -> Result<RasterImage> {
    mask.check_matches(img)?;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if mask.get(x, y) {
                out.set_pixel(x, y, [0, 0, 0]);
            }
        }
    }
    Ok(out)
}

/// XORs the masked pixels' byte stream (row-major scan order, RGB
/// interleaved) with the AES-128-CTR keystream, using the nonce as the
/// initial big-endian counter block. Applying the operator twice with the
/// same key and nonce restores the input exactly.
pub fn encrypt_region(
    img: &RasterImage,
    mask: &RegionMask,
    key: &[u8; 16],
    nonce: &[u8; 16],
) -> Result<RasterImage> {
    mask.check_matches(img)?;
    let mut masked_bytes = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if mask.get(x, y) {
                masked_bytes.extend_from_slice(&img.pixel(x, y));
            }
        }
    }
    let mut cipher = Ctr128BE::<Aes128>::new(&(*key).into(), &(*nonce).into());
    cipher.apply_keystream(&mut masked_bytes);

    let mut out = img.clone();
    let mut cursor = masked_bytes.chunks_exact(CHANNELS);
    for y in 0..img.height() {
        for x in 0..img.width() {
            if mask.get(x, y) {
                let chunk = cursor.next().expect("one chunk per masked pixel");
                out.set_pixel(x, y, [chunk[0], chunk[1], chunk[2]]);
            }
        }
    }
    Ok(out)
}

/// Bilinearly downscales the whole frame to `side`×`side` and upscales back
/// to the original dimensions. The mask must cover every pixel: this
/// operator deliberately has whole-frame semantics.
pub fn lowres_region(img: &RasterImage, mask: &RegionMask, side: u32) -> Result<RasterImage> {
    mask.check_matches(img)?;
    if side == 0 {
        return Err(Error::LowresSide);
    }
    if !mask.is_full_frame() {
        return Err(Error::LowresNeedsFullFrame);
    }
    let small = bilinear_resize(img, side, side)?;
    bilinear_resize(&small, img.width(), img.height())
}
