//! File formats, orchestration and dataset tooling around [`privlens_core`]:
//! image/mask directories, detection and score files, embedding and timing
//! logs, trade-off table emission (JSON/CSV/SVG), the end-to-end evaluation
//! pipeline and a deterministic toy dataset generator.

pub mod config;
pub mod emit;
pub mod io;
pub mod pipeline;
pub mod toyset;
