//! Readers and writers for every on-disk format the pipeline touches.

pub mod detections;
pub mod embeddings;
pub mod images;
pub mod scores;
pub mod timing;
