//! Crate-wide error type shared by model constructors, operators and metrics.

use alloc::string::String;

/// Convenience alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong while building model values or computing
/// metrics. Variants carry the offending id or value so callers can surface
/// actionable messages without extra bookkeeping.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    // --- model construction ---
    #[error("image dimensions must be nonzero (got {width}x{height})")]
    EmptyImage { width: u32, height: u32 },
    #[error("pixel buffer holds {got} bytes but a {width}x{height} RGB image needs {expected}")]
    PixelBufferSize {
        width: u32,
        height: u32,
        expected: usize,
        got: usize,
    },
    #[error("mask buffer holds {got} entries but a {width}x{height} mask needs {expected}")]
    MaskBufferSize {
        width: u32,
        height: u32,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: {expected_w}x{expected_h} vs {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: u32,
        expected_h: u32,
        got_w: u32,
        got_h: u32,
    },
    #[error("bounding box extent must be positive and finite (got w={w}, h={h})")]
    BBoxExtent { w: f64, h: f64 },
    #[error("bounding box origin must be finite (got x={x}, y={y})")]
    BBoxOrigin { x: f64, y: f64 },
    #[error("score {value} outside [0, 1] for `{id}`")]
    ScoreRange { id: String, value: f64 },
    #[error("empty image id")]
    EmptyImageId,
    #[error("duplicate image id `{id}`")]
    DuplicateImageId { id: String },
    #[error("class id {class_id} does not index the {class_count} known class names")]
    UnknownClassId { class_id: u32, class_count: usize },
    #[error("attribute name list must be non-empty, unique and free of blanks")]
    BadAttributeList,
    #[error("row `{id}` has {got} values but the table has {expected} attributes")]
    RowWidth {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {context} for `{id}`")]
    NonFinite { context: &'static str, id: String },
    #[error("embedding for `{id}` has {got} components, expected {expected}")]
    EmbeddingDim {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("embedding dimension must be at least 1")]
    ZeroEmbeddingDim,
    #[error("timing log needs at least 2 frames (got {got})")]
    TimingTooShort { got: usize },
    #[error(
        "timing log frame {index} does not advance (indices and timestamps must strictly increase)"
    )]
    TimingNotIncreasing { index: usize },

    // --- operator parameters ---
    #[error("blur kernel must be odd and >= 3 (got {kernel})")]
    BlurKernel { kernel: u32 },
    #[error("pixelate block size must be >= 1")]
    PixelateBlock,
    #[error("emboss kernel size must be 3 (got {kernel})")]
    EmbossKernel { kernel: u32 },
    #[error("lowres target side must be >= 1")]
    LowresSide,
    #[error("lowres operates on whole frames; the mask must cover every pixel")]
    LowresNeedsFullFrame,

    // --- privacy metrics ---
    #[error("attribute score table has no rows")]
    EmptyScoreTable,
    #[error("every attribute lacks positive labels; cMAP is undefined")]
    AllAttributesSkipped,
    #[error("attribute sets differ between the two results: missing {missing}")]
    AttributeSetMismatch { missing: String },
    #[error("attribute `{attribute}` has no positive labels; class weight undefined")]
    NoPositives { attribute: String },

    // --- practicality ---
    #[error("weight {value} must be non-negative and finite")]
    WeightRange { value: f64 },
    #[error("weights must sum to 1.0 within 1e-9 (got {sum})")]
    WeightSum { sum: f64 },
    #[error("{what} is empty")]
    EmptyInput { what: &'static str },
    #[error("method `{method}` is missing from the {from} inputs")]
    MethodSetMismatch { method: String, from: &'static str },
    #[error("no image `{id}` supplied for a matched detection pair")]
    MissingImage { id: String },
    #[error("throughput for method `{method}` must be positive and finite")]
    FpsRange { method: String },
    #[error(
        "discrepancy kernel parameters must be positive and finite (sigma={sigma}, scale={scale})"
    )]
    BadMmdParams { sigma: f64, scale: f64 },

    // --- report assembly ---
    #[error("duplicate method name `{name}`")]
    DuplicateMethod { name: String },
    #[error("no methods to evaluate")]
    NoMethods,
    #[error("method `{method}`: {field} = {value} is outside its valid range")]
    ReportFieldRange {
        method: String,
        field: &'static str,
        value: f64,
    },
}
