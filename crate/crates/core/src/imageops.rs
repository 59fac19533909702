//! Low-level pixel-plane helpers shared by the anonymization operators and
//! the SSIM computation: channel splitting, separable replicate-padded
//! convolution, bilinear resampling and cropping.
//!
//! Everything works on `f64` planes so callers control quantization.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{PixelRect, RasterImage, CHANNELS};

/// Splits an image into three row-major `f64` channel planes.
pub fn channel_planes(img: &RasterImage) -> [Vec<f64>; 3] {
    let n = img.width() as usize * img.height() as usize;
    let mut planes = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for px in img.pixels().chunks_exact(CHANNELS) {
        planes[0].push(f64::from(px[0]));
        planes[1].push(f64::from(px[1]));
        planes[2].push(f64::from(px[2]));
    }
    planes
}

/// Rounds half away from zero and clamps to the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    libm::round(v).clamp(0.0, 255.0) as u8
}

/// Convolves a plane with a 1-D kernel horizontally then vertically
/// (outer-product 2-D convolution), replicating edge pixels. The kernel
/// length must be odd; it may exceed the plane dimensions.
pub fn convolve_separable_replicate(
    plane: &[f64],
    width: usize,
    height: usize,
    kernel: &[f64],
) -> Vec<f64> {
    debug_assert_eq!(plane.len(), width * height);
    debug_assert_eq!(kernel.len() % 2, 1);
    let radius = (kernel.len() / 2) as isize;

    let mut horizontal = Vec::with_capacity(plane.len());
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width as isize {
            let mut acc = 0.0;
            for (tap, &coeff) in kernel.iter().enumerate() {
                let sx = (x + tap as isize - radius).clamp(0, width as isize - 1);
                acc += coeff * row[sx as usize];
            }
            horizontal.push(acc);
        }
    }

    let mut output = Vec::with_capacity(plane.len());
    for y in 0..height as isize {
        for x in 0..width {
            let mut acc = 0.0;
            for (tap, &coeff) in kernel.iter().enumerate() {
                let sy = (y + tap as isize - radius).clamp(0, height as isize - 1);
                acc += coeff * horizontal[sy as usize * width + x];
            }
            output.push(acc);
        }
    }
    output
}

/// Bilinear resample to `new_w`×`new_h` using the half-pixel-center
/// convention (`src = (dst + 0.5)·scale − 0.5`), which makes same-size
/// resampling an exact identity.
pub fn bilinear_resize(img: &RasterImage, new_w: u32, new_h: u32) -> Result<RasterImage> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::EmptyImage {
            width: new_w,
            height: new_h,
        });
    }
    let (src_w, src_h) = (img.width() as usize, img.height() as usize);
    let scale_x = src_w as f64 / new_w as f64;
    let scale_y = src_h as f64 / new_h as f64;

    let mut pixels = Vec::with_capacity(new_w as usize * new_h as usize * CHANNELS);
    for dy in 0..new_h {
        let sy = (f64::from(dy) + 0.5) * scale_y - 0.5;
        let sy = sy.clamp(0.0, (src_h - 1) as f64);
        let y0 = libm::floor(sy) as usize;
        let y1 = (y0 + 1).min(src_h - 1);
        let fy = sy - y0 as f64;
        for dx in 0..new_w {
            let sx = (f64::from(dx) + 0.5) * scale_x - 0.5;
            let sx = sx.clamp(0.0, (src_w - 1) as f64);
            let x0 = libm::floor(sx) as usize;
            let x1 = (x0 + 1).min(src_w - 1);
            let fx = sx - x0 as f64;

            let p00 = img.pixel(x0 as u32, y0 as u32);
            let p10 = img.pixel(x1 as u32, y0 as u32);
            let p01 = img.pixel(x0 as u32, y1 as u32);
            let p11 = img.pixel(x1 as u32, y1 as u32);
            for c in 0..CHANNELS {
                let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
                let bottom = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
                pixels.push(quantize(top * (1.0 - fy) + bottom * fy));
            }
        }
    }
    RasterImage::new(new_w, new_h, pixels)
}

/// Copies out `rect` after clamping it to the image; an empty clamped
/// rectangle is an error.
pub fn crop(img: &RasterImage, rect: PixelRect) -> Result<RasterImage> {
    let clamped = PixelRect {
        x0: rect.x0.min(img.width()),
        y0: rect.y0.min(img.height()),
        x1: rect.x1.min(img.width()),
        y1: rect.y1.min(img.height()),
    };
    if clamped.is_empty() {
        return Err(Error::EmptyImage {
            width: clamped.width(),
            height: clamped.height(),
        });
    }
    let mut pixels =
        Vec::with_capacity(clamped.width() as usize * clamped.height() as usize * CHANNELS);
    for y in clamped.y0..clamped.y1 {
        for x in clamped.x0..clamped.x1 {
            pixels.extend_from_slice(&img.pixel(x, y));
        }
    }
    RasterImage::new(clamped.width(), clamped.height(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_plane_survives_normalized_kernel() {
        let plane = vec![7.0; 5 * 4];
        let kernel = [0.25, 0.5, 0.25];
        let out = convolve_separable_replicate(&plane, 5, 4, &kernel);
        assert!(out.iter().all(|&v| (v - 7.0).abs() < 1e-12));
    }

    #[test]
    fn convolution_replicates_edges() {
        // Box kernel over a 3×1 ramp: left edge averages 1,1,2 (clamped).
        let plane = vec![1.0, 2.0, 3.0];
        let third = 1.0 / 3.0;
        let out = convolve_separable_replicate(&plane, 3, 1, &[third, third, third]);
        assert!((out[0] - (1.0 + 1.0 + 2.0) / 3.0).abs() < 1e-12);
        assert!((out[1] - 2.0).abs() < 1e-12);
        assert!((out[2] - (2.0 + 3.0 + 3.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_longer_than_plane_is_fine() {
        let plane = vec![5.0, 9.0];
        let kernel = vec![0.2; 5];
        let out = convolve_separable_replicate(&plane, 2, 1, &kernel);
        // x=0 samples clamped [5,5,5,9,9]; x=1 samples [5,5,9,9,9].
        assert!((out[0] - 0.2 * (5.0 * 3.0 + 9.0 * 2.0)).abs() < 1e-12);
        assert!((out[1] - 0.2 * (5.0 * 2.0 + 9.0 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn same_size_resize_is_identity() {
        let mut img = RasterImage::filled(4, 3, [10, 20, 30]).unwrap();
        img.set_pixel(2, 1, [200, 100, 50]);
        let out = bilinear_resize(&img, 4, 3).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn downscale_to_single_pixel_takes_center_mean() {
        let mut img = RasterImage::filled(2, 2, [0, 0, 0]).unwrap();
        img.set_pixel(0, 0, [10, 0, 0]);
        img.set_pixel(1, 0, [20, 0, 0]);
        img.set_pixel(0, 1, [30, 0, 0]);
        img.set_pixel(1, 1, [41, 0, 0]);
        let out = bilinear_resize(&img, 1, 1).unwrap();
        // (10+20+30+41)/4 = 25.25 → 25.
        assert_eq!(out.pixel(0, 0), [25, 0, 0]);
    }

    #[test]
    fn crop_clamps_and_rejects_empty() {
        let mut img = RasterImage::filled(4, 4, [1, 1, 1]).unwrap();
        img.set_pixel(3, 3, [9, 9, 9]);
        let out = crop(
            &img,
            PixelRect {
                x0: 3,
                y0: 3,
                x1: 10,
                y1: 10,
            },
        )
        .unwrap();
        assert_eq!(out.dimensions(), (1, 1));
        assert_eq!(out.pixel(0, 0), [9, 9, 9]);
        assert!(crop(
            &img,
            PixelRect {
                x0: 4,
                y0: 0,
                x1: 4,
                y1: 2
            }
        )
        .is_err());
    }
}
