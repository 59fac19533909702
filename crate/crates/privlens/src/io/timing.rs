//! Timing log CSV: header `frame_index,timestamp_seconds`, one row per
//! processed frame in completion order.

use std::path::Path;

use anyhow::{Context, Result};
use privlens_core::model::{TimedFrame, TimingLog};

pub fn load_timing(path: &Path) -> Result<TimingLog> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut frames = Vec::new();
    for record in reader.deserialize() {
        let (index, timestamp): (u64, f64) =
            record.with_context(|| format!("reading a row of {}", path.display()))?;
        frames.push(TimedFrame { index, timestamp });
    }
    TimingLog::new(frames).with_context(|| format!("validating {}", path.display()))
}

pub fn save_timing(log: &TimingLog, path: &Path) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["frame_index", "timestamp_seconds"])?;
    for frame in log.frames() {
        writer.write_record([frame.index.to_string(), format!("{}", frame.timestamp)])?;
    }
    writer.flush()?;
    Ok(())
}
