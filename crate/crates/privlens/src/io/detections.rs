//! Detection and ground-truth JSON: an array of records shaped like COCO
//! results, `{image_id, category_id, bbox: [x, y, w, h], score?}`. Ground
//! truth carries no score; a score present there is ignored.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{Context, Result};
use privlens_core::model::{BBox, Detection, DetectionSet, GroundTruth, GroundTruthSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    image_id: String,
    category_id: u32,
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

fn read_records(path: &Path) -> Result<Vec<Record>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let records: Vec<Record> = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing detection records from {}", path.display()))?;
    Ok(records)
}

pub fn load_detections(path: &Path) -> Result<DetectionSet> {
    let mut entries = Vec::new();
    for r in read_records(path)? {
        let score = r.score.with_context(|| {
            format!(
                "detection for `{}` in {} has no score",
                r.image_id,
                path.display()
            )
        })?;
        entries.push(Detection {
            image_id: r.image_id,
            class_id: r.category_id,
            bbox: BBox::new(r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3])?,
            score,
        });
    }
    Ok(DetectionSet::new(entries)?)
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruthSet> {
    let mut entries = Vec::new();
    for r in read_records(path)? {
        entries.push(GroundTruth {
            image_id: r.image_id,
            class_id: r.category_id,
            bbox: BBox::new(r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3])?,
        });
    }
    Ok(GroundTruthSet::with_generated_names(entries)?)
}

pub fn save_detections(set: &DetectionSet, path: &Path) -> Result<()> {
    let records: Vec<Record> = set
        .entries()
        .iter()
        .map(|d| Record {
            image_id: d.image_id.clone(),
            category_id: d.class_id,
            bbox: [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h],
            score: Some(d.score),
        })
        .collect();
    write_records(&records, path)
}

pub fn save_ground_truth(set: &GroundTruthSet, path: &Path) -> Result<()> {
    let records: Vec<Record> = set
        .entries()
        .iter()
        .map(|g| Record {
            image_id: g.image_id.clone(),
            category_id: g.class_id,
            bbox: [g.bbox.x, g.bbox.y, g.bbox.w, g.bbox.h],
            score: None,
        })
        .collect();
    write_records(&records, path)
}

fn write_records(records: &[Record], path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), records)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
