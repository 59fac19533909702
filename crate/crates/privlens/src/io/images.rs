//! Image and mask directory IO. Image ids are file stems; directories load
//! into id-sorted maps. Masks are single-channel PNGs binarized on read
//! (any nonzero intensity marks the region).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use image::{DynamicImage, GrayImage, RgbImage};
use privlens_core::model::{RasterImage, RegionMask};

fn is_image_extension(ext: &str) -> bool {
    matches!(ext.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg")
}

/// Lists `(image_id, path)` pairs of the PNG/JPEG files in `dir`, sorted by
/// id. Errors on an empty directory or on two files sharing a stem.
pub fn list_image_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries =
        fs::read_dir(dir).with_context(|| format!("reading image directory {}", dir.display()))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let Some(ext) = path.extension().and_then(|e| e.to_str()) else {
            continue;
        };
        if !is_image_extension(ext) {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .with_context(|| format!("non-UTF-8 file name {}", path.display()))?;
        files.push((stem.to_string(), path.clone()));
    }
    files.sort();
    if files.is_empty() {
        bail!("no PNG/JPEG images in {}", dir.display());
    }
    for pair in files.windows(2) {
        if pair[0].0 == pair[1].0 {
            bail!(
                "image id `{}` appears twice in {} (file stems must be unique)",
                pair[0].0,
                dir.display()
            );
        }
    }
    Ok(files)
}

/// Decodes one image file to RGB.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let rgb = image::open(path)
        .with_context(|| format!("decoding image {}", path.display()))?
        .to_rgb8();
    Ok(RasterImage::new(rgb.width(), rgb.height(), rgb.into_raw())?)
}

/// Loads a directory of images keyed by file stem. With a manifest only the
/// listed ids are loaded, and every listed id must exist.
pub fn load_image_dir(
    dir: &Path,
    manifest: Option<&[String]>,
) -> Result<BTreeMap<String, RasterImage>> {
    let files = list_image_files(dir)?;
    let wanted: Option<BTreeSet<&str>> =
        manifest.map(|ids| ids.iter().map(String::as_str).collect());
    let mut out = BTreeMap::new();
    for (id, path) in &files {
        if wanted.as_ref().is_some_and(|w| !w.contains(id.as_str())) {
            continue;
        }
        out.insert(
            id.clone(),
            load_image(path).with_context(|| format!("image id `{id}`"))?,
        );
    }
    if let Some(wanted) = wanted {
        let missing: Vec<&str> = wanted
            .iter()
            .filter(|id| !out.contains_key(**id))
            .copied()
            .collect();
        if !missing.is_empty() {
            bail!(
                "manifest ids missing from {}: {}",
                dir.display(),
                missing.join(", ")
            );
        }
    }
    Ok(out)
}

/// Decodes one mask file; anything but single-channel (8- or 16-bit
/// grayscale) is rejected.
pub fn load_mask(path: &Path) -> Result<RegionMask> {
    let decoded = image::open(path).with_context(|| format!("decoding mask {}", path.display()))?;
    let mask = match decoded {
        DynamicImage::ImageLuma8(gray) => {
            RegionMask::from_bytes(gray.width(), gray.height(), gray.as_raw())?
        }
        DynamicImage::ImageLuma16(gray) => RegionMask::new(
            gray.width(),
            gray.height(),
            gray.pixels().map(|p| p.0[0] != 0).collect(),
        )?,
        other => bail!(
            "mask {} must be single-channel, got {:?}",
            path.display(),
            other.color()
        ),
    };
    Ok(mask)
}

/// Loads a directory of single-channel PNG masks keyed by file stem.
pub fn load_masks(dir: &Path) -> Result<BTreeMap<String, RegionMask>> {
    let files = list_image_files(dir)?;
    let mut out = BTreeMap::new();
    for (id, path) in &files {
        out.insert(
            id.clone(),
            load_mask(path).with_context(|| format!("mask id `{id}`"))?,
        );
    }
    Ok(out)
}

/// Encodes to the format implied by the path's extension (PNG stays
/// lossless; JPEG output is re-encoded and lossy).
pub fn save_image(img: &RasterImage, path: &Path) -> Result<()> {
    let rgb = RgbImage::from_raw(img.width(), img.height(), img.pixels().to_vec())
        .expect("pixel buffer length matches dimensions");
    rgb.save(path)
        .with_context(|| format!("writing image {}", path.display()))?;
    Ok(())
}

/// Writes a mask as an 8-bit grayscale PNG (region pixels 255, rest 0).
pub fn save_mask(mask: &RegionMask, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = (0..mask.height())
        .flat_map(|y| (0..mask.width()).map(move |x| if mask.get(x, y) { 255 } else { 0 }))
        .collect();
    let gray = GrayImage::from_raw(mask.width(), mask.height(), bytes)
        .expect("mask buffer length matches dimensions");
    gray.save(path)
        .with_context(|| format!("writing mask {}", path.display()))?;
    Ok(())
}
