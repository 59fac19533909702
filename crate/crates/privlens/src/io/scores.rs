//! Attribute score/label CSV pair: both files share the header
//! `image_id,<attr>,...`; the scores file holds classifier outputs in
//! `[0, 1]`, the labels file binary ground truth (0/1). Rows align by
//! image id and both files must cover the same ids.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use privlens_core::model::AttributeScoreTable;

type CsvTable = (Vec<String>, BTreeMap<String, Vec<f64>>);

fn read_csv_table(path: &Path) -> Result<CsvTable> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("reading header of {}", path.display()))?;
    let mut columns = headers.iter().map(str::to_string).collect::<Vec<_>>();
    if columns.first().map(String::as_str) != Some("image_id") {
        bail!(
            "{}: first header column must be `image_id`, got `{}`",
            path.display(),
            columns.first().cloned().unwrap_or_default()
        );
    }
    let attributes = columns.split_off(1);

    let mut rows = BTreeMap::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading a row of {}", path.display()))?;
        let id = record
            .get(0)
            .context("row without an image_id column")?
            .to_string();
        let values: Vec<f64> = record
            .iter()
            .skip(1)
            .map(|cell| {
                cell.parse::<f64>()
                    .with_context(|| format!("{}: row `{id}`: bad number `{cell}`", path.display()))
            })
            .collect::<Result<_>>()?;
        if rows.insert(id.clone(), values).is_some() {
            bail!("{}: duplicate image id `{id}`", path.display());
        }
    }
    Ok((attributes, rows))
}

/// Loads the score/label pair into one table, erroring on header or id-set
/// disagreements, non-binary labels and out-of-range scores.
pub fn load_scores(scores_path: &Path, labels_path: &Path) -> Result<AttributeScoreTable> {
    let (attributes, score_rows) = read_csv_table(scores_path)?;
    let (label_attributes, label_rows) = read_csv_table(labels_path)?;
    if attributes != label_attributes {
        bail!(
            "attribute headers differ between {} and {}",
            scores_path.display(),
            labels_path.display()
        );
    }
    let missing: Vec<&String> = score_rows
        .keys()
        .filter(|id| !label_rows.contains_key(*id))
        .chain(label_rows.keys().filter(|id| !score_rows.contains_key(*id)))
        .collect();
    if !missing.is_empty() {
        let names: Vec<&str> = missing.iter().map(|s| s.as_str()).collect();
        bail!(
            "image ids present in only one of {} and {}: {}",
            scores_path.display(),
            labels_path.display(),
            names.join(", ")
        );
    }

    let mut table = AttributeScoreTable::new(attributes)?;
    for (id, scores) in score_rows {
        let labels: Vec<bool> = label_rows[&id]
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    Ok(false)
                } else if v == 1.0 {
                    Ok(true)
                } else {
                    bail!(
                        "{}: label for `{id}` must be 0 or 1, got {v}",
                        labels_path.display()
                    )
                }
            })
            .collect::<Result<_>>()?;
        table.insert(&id, scores, labels)?;
    }
    Ok(table)
}

/// Writes a `image_id,<attr>...` CSV of float cells (full precision).
pub fn write_scores_csv(
    path: &Path,
    attributes: &[String],
    rows: &BTreeMap<String, Vec<f64>>,
) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    write_header(&mut writer, attributes)?;
    for (id, values) in rows {
        let mut record = vec![id.clone()];
        record.extend(values.iter().map(|v| format!("{v}")));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the parallel labels CSV with 0/1 cells.
pub fn write_labels_csv(
    path: &Path,
    attributes: &[String],
    rows: &BTreeMap<String, Vec<bool>>,
) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    write_header(&mut writer, attributes)?;
    for (id, values) in rows {
        let mut record = vec![id.clone()];
        record.extend(
            values
                .iter()
                .map(|&v| if v { "1" } else { "0" }.to_string()),
        );
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn write_header<W: std::io::Write>(
    writer: &mut csv::Writer<W>,
    attributes: &[String],
) -> Result<()> {
    let mut header = vec!["image_id".to_string()];
    header.extend_from_slice(attributes);
    writer.write_record(&header)?;
    Ok(())
}
