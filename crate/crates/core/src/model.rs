//! Core domain types shared by the operators and the three metric families:
//! images, masks, boxes, detection sets, attribute score tables, embedding
//! sets and timing logs.
//!
//! Constructors validate every documented invariant and return [`Error`]
//! rather than panicking; once built, values are immutable (or expose only
//! invariant-preserving mutation) and freely shareable.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

/// Interleaved channels per pixel in a [`RasterImage`].
pub const CHANNELS: usize = 3;

/// 8-bit interleaved RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RasterImage {
    /// Builds an image from a row-major interleaved RGB buffer.
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        let expected = width as usize * height as usize * CHANNELS;
        if pixels.len() != expected {
            return Err(Error::PixelBufferSize {
                width,
                height,
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Solid-color image.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * CHANNELS);
        for _ in 0..(width as usize * height as usize) {
            pixels.extend_from_slice(&rgb);
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// `(width, height)` pair, handy for mismatch checks.
    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub(crate) fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * CHANNELS
    }

    /// RGB triple at `(x, y)`. Panics on out-of-bounds coordinates, which are
    /// a programming error rather than a data error.
    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = self.offset(x, y);
        self.pixels[o..o + 3].copy_from_slice(&rgb);
    }

    /// Errors unless `other` has identical dimensions.
    pub fn check_same_size(&self, other: &RasterImage) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch {
                expected_w: self.width,
                expected_h: self.height,
                got_w: other.width,
                got_h: other.height,
            });
        }
        Ok(())
    }
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    pub fn width(&self) -> u32 {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> u32 {
        self.y1.saturating_sub(self.y0)
    }

    pub fn is_empty(&self) -> bool {
        self.x1 <= self.x0 || self.y1 <= self.y0
    }
}

/// Binary per-pixel region mask aligned to one image (1 = inside region).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl RegionMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(Error::MaskBufferSize {
                width,
                height,
                expected,
                got: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Binarizes raw intensities: any nonzero byte marks the region.
    pub fn from_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| b != 0).collect())
    }

    /// Mask covering every pixel.
    pub fn full(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![true; width as usize * height as usize])
    }

    /// Mask covering no pixel.
    pub fn empty(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![false; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// True when every bit is set (whole-frame region).
    pub fn is_full_frame(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// True when at least one bit is set.
    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    /// Tight half-open bounding box of the set bits, `None` for empty masks.
    pub fn bounding_box(&self) -> Option<PixelRect> {
        let (mut x0, mut y0) = (u32::MAX, u32::MAX);
        let (mut x1, mut y1) = (0u32, 0u32);
        let mut seen = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    seen = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x + 1);
                    y1 = y1.max(y + 1);
                }
            }
        }
        seen.then_some(PixelRect { x0, y0, x1, y1 })
    }

    /// Errors unless the mask matches the image dimensions.
    pub fn check_matches(&self, img: &RasterImage) -> Result<()> {
        if (self.width, self.height) != img.dimensions() {
            return Err(Error::DimensionMismatch {
                expected_w: img.width(),
                expected_h: img.height(),
                got_w: self.width,
                got_h: self.height,
            });
        }
        Ok(())
    }
}

/// Axis-aligned box with top-left corner `(x, y)` and positive extent.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::BBoxOrigin { x, y });
        }
        if !w.is_finite() || !h.is_finite() || w <= 0.0 || h <= 0.0 {
            return Err(Error::BBoxExtent { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// Smallest box containing both operands.
    pub fn union(&self, other: &BBox) -> BBox {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        BBox {
            x,
            y,
            w: self.right().max(other.right()) - x,
            h: self.bottom().max(other.bottom()) - y,
        }
    }

    /// Total lexicographic order on `(x, y, w, h)` used for canonical sorting.
    pub(crate) fn lex_cmp(&self, other: &BBox) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.w.total_cmp(&other.w))
            .then(self.h.total_cmp(&other.h))
    }
}

/// One scored, classified box on one image.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub image_id: String,
    pub class_id: u32,
    pub bbox: BBox,
    pub score: f64,
}

/// Scored detections across images in canonical order
/// (image id, class id, box, score) — insertion order never matters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionSet {
    entries: Vec<Detection>,
}

impl DetectionSet {
    pub fn new(mut entries: Vec<Detection>) -> Result<Self> {
        for d in &entries {
            if d.image_id.is_empty() {
                return Err(Error::EmptyImageId);
            }
            if !d.score.is_finite() || !(0.0..=1.0).contains(&d.score) {
                return Err(Error::ScoreRange {
                    id: d.image_id.clone(),
                    value: d.score,
                });
            }
        }
        entries.sort_by(|a, b| {
            a.image_id
                .cmp(&b.image_id)
                .then(a.class_id.cmp(&b.class_id))
                .then(a.bbox.lex_cmp(&b.bbox))
                .then(a.score.total_cmp(&b.score))
        });
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Detection] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Subset holding only `class_id`, preserving canonical order.
    pub fn filter_class(&self, class_id: u32) -> DetectionSet {
        DetectionSet {
            entries: self
                .entries
                .iter()
                .filter(|d| d.class_id == class_id)
                .cloned()
                .collect(),
        }
    }

    /// Sorted distinct image ids referenced by the set.
    pub fn image_ids(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|d| d.image_id.as_str()).collect()
    }

    /// Sorted distinct class ids referenced by the set.
    pub fn class_ids(&self) -> BTreeSet<u32> {
        self.entries.iter().map(|d| d.class_id).collect()
    }
}

/// One reference box on one image.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    pub image_id: String,
    pub class_id: u32,
    pub bbox: BBox,
}

/// Reference boxes plus the class-name vocabulary they index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruthSet {
    entries: Vec<GroundTruth>,
    class_names: Vec<String>,
}

impl GroundTruthSet {
    pub fn new(mut entries: Vec<GroundTruth>, class_names: Vec<String>) -> Result<Self> {
        for g in &entries {
            if g.image_id.is_empty() {
                return Err(Error::EmptyImageId);
            }
            if g.class_id as usize >= class_names.len() {
                return Err(Error::UnknownClassId {
                    class_id: g.class_id,
                    class_count: class_names.len(),
                });
            }
        }
        entries.sort_by(|a, b| {
            a.image_id
                .cmp(&b.image_id)
                .then(a.class_id.cmp(&b.class_id))
                .then(a.bbox.lex_cmp(&b.bbox))
        });
        Ok(Self {
            entries,
            class_names,
        })
    }

    /// Builds the set with synthesized names `class_0 .. class_<max>` when no
    /// vocabulary accompanies the boxes.
    pub fn with_generated_names(entries: Vec<GroundTruth>) -> Result<Self> {
        let count = entries
            .iter()
            .map(|g| g.class_id as usize + 1)
            .max()
            .unwrap_or(0);
        let mut names = Vec::with_capacity(count);
        for i in 0..count {
            let mut name = String::from("class_");
            name.push_str(&i.to_string());
            names.push(name);
        }
        Self::new(entries, names)
    }

    pub fn entries(&self) -> &[GroundTruth] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_name(&self, class_id: u32) -> Option<&str> {
        self.class_names.get(class_id as usize).map(String::as_str)
    }

    /// Sorted distinct class ids that actually occur in the entries.
    pub fn class_ids(&self) -> BTreeSet<u32> {
        self.entries.iter().map(|g| g.class_id).collect()
    }
}

/// Scores and labels of one image across all attributes, index-aligned with
/// [`AttributeScoreTable::attributes`].
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeRow {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

/// Per-image per-attribute classifier scores in `[0,1]` with binary ground
/// truth, keyed by image id (canonically sorted by the map).
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeScoreTable {
    attributes: Vec<String>,
    rows: BTreeMap<String, AttributeRow>,
}

impl AttributeScoreTable {
    pub fn new(attributes: Vec<String>) -> Result<Self> {
        if attributes.is_empty() || attributes.iter().any(String::is_empty) {
            return Err(Error::BadAttributeList);
        }
        let unique: BTreeSet<&str> = attributes.iter().map(String::as_str).collect();
        if unique.len() != attributes.len() {
            return Err(Error::BadAttributeList);
        }
        Ok(Self {
            attributes,
            rows: BTreeMap::new(),
        })
    }

    /// Adds one image's scores and labels; rejects width mismatches, scores
    /// outside `[0,1]` and duplicate ids.
    pub fn insert(&mut self, id: &str, scores: Vec<f64>, labels: Vec<bool>) -> Result<()> {
        if id.is_empty() {
            return Err(Error::EmptyImageId);
        }
        let n = self.attributes.len();
        if scores.len() != n || labels.len() != n {
            return Err(Error::RowWidth {
                id: id.to_string(),
                expected: n,
                got: if scores.len() != n {
                    scores.len()
                } else {
                    labels.len()
                },
            });
        }
        for &s in &scores {
            if !s.is_finite() {
                return Err(Error::NonFinite {
                    context: "attribute scores",
                    id: id.to_string(),
                });
            }
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::ScoreRange {
                    id: id.to_string(),
                    value: s,
                });
            }
        }
        if self.rows.contains_key(id) {
            return Err(Error::DuplicateImageId { id: id.to_string() });
        }
        self.rows
            .insert(id.to_string(), AttributeRow { scores, labels });
        Ok(())
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &AttributeRow)> {
        self.rows.iter().map(|(id, row)| (id.as_str(), row))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// One attribute's `(image_id, score, label)` column in id order.
    pub fn column(&self, attribute_index: usize) -> Vec<(&str, f64, bool)> {
        self.rows
            .iter()
            .map(|(id, row)| {
                (
                    id.as_str(),
                    row.scores[attribute_index],
                    row.labels[attribute_index],
                )
            })
            .collect()
    }
}

/// Fixed-dimension real vectors keyed by image id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    rows: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroEmbeddingDim);
        }
        Ok(Self {
            dim,
            rows: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, id: &str, vector: Vec<f64>) -> Result<()> {
        if id.is_empty() {
            return Err(Error::EmptyImageId);
        }
        if vector.len() != self.dim {
            return Err(Error::EmbeddingDim {
                id: id.to_string(),
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "embedding components",
                id: id.to_string(),
            });
        }
        if self.rows.contains_key(id) {
            return Err(Error::DuplicateImageId { id: id.to_string() });
        }
        self.rows.insert(id.to_string(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.rows.iter().map(|(id, v)| (id.as_str(), v.as_slice()))
    }
}

/// Completion record of one processed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimedFrame {
    pub index: u64,
    pub timestamp: f64,
}

/// Ordered per-frame completion timestamps of a single-threaded run.
/// At least two frames, indices and timestamps strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingLog {
    frames: Vec<TimedFrame>,
}

impl TimingLog {
    pub fn new(frames: Vec<TimedFrame>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::TimingTooShort { got: frames.len() });
        }
        for f in &frames {
            if !f.timestamp.is_finite() {
                return Err(Error::NonFinite {
                    context: "timestamps",
                    id: String::new(),
                });
            }
        }
        for i in 1..frames.len() {
            if frames[i].timestamp <= frames[i - 1].timestamp
                || frames[i].index <= frames[i - 1].index
            {
                return Err(Error::TimingNotIncreasing { index: i });
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[TimedFrame] {
        &self.frames
    }

    /// Frame count; the constructor guarantees at least two, so there is
    /// no matching `is_empty`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn first(&self) -> TimedFrame {
        self.frames[0]
    }

    pub fn last(&self) -> TimedFrame {
        self.frames[self.frames.len() - 1]
    }
}
