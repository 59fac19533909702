//! Embedding sets in two interchangeable encodings, told apart by content:
//! a CSV with header `image_id,v0,...,v{D-1}`, or a little-endian binary
//! stream — magic `PLEMB1`, u32 dimension, then per row a u32 id length,
//! the UTF-8 id bytes and D f64 components.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use privlens_core::model::EmbeddingSet;

pub const BINARY_MAGIC: [u8; 6] = *b"PLEMB1";

pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut magic = [0u8; 6];
    let is_binary = match file.read_exact(&mut magic) {
        Ok(()) => magic == BINARY_MAGIC,
        Err(_) => false, // shorter than the magic: can only be CSV
    };
    if is_binary {
        load_binary(BufReader::new(file))
            .with_context(|| format!("parsing binary embeddings from {}", path.display()))
    } else {
        load_csv(path)
    }
}

fn load_binary<R: Read>(mut reader: R) -> Result<EmbeddingSet> {
    let mut u32_buf = [0u8; 4];
    reader
        .read_exact(&mut u32_buf)
        .context("missing dimension header")?;
    let dim = u32::from_le_bytes(u32_buf) as usize;
    let mut set = EmbeddingSet::new(dim)?;
    loop {
        match reader.read_exact(&mut u32_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e).context("reading id length"),
        }
        let id_len = u32::from_le_bytes(u32_buf) as usize;
        let mut id_bytes = vec![0u8; id_len];
        reader.read_exact(&mut id_bytes).context("truncated id")?;
        let id = String::from_utf8(id_bytes).context("id is not UTF-8")?;
        let mut row = Vec::with_capacity(dim);
        let mut f64_buf = [0u8; 8];
        for _ in 0..dim {
            reader
                .read_exact(&mut f64_buf)
                .with_context(|| format!("truncated row for `{id}`"))?;
            row.push(f64::from_le_bytes(f64_buf));
        }
        set.insert(&id, row)?;
    }
    Ok(set)
}

fn load_csv(path: &Path) -> Result<EmbeddingSet> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("reading header of {}", path.display()))?;
    if headers.get(0) != Some("image_id") || headers.len() < 2 {
        bail!("{}: expected header image_id,v0,...,v(D-1)", path.display());
    }
    let dim = headers.len() - 1;
    let mut set = EmbeddingSet::new(dim)?;
    for record in reader.records() {
        let record = record.with_context(|| format!("reading a row of {}", path.display()))?;
        let id = record.get(0).context("row without an id")?.to_string();
        let row: Vec<f64> = record
            .iter()
            .skip(1)
            .map(|cell| {
                cell.parse::<f64>()
                    .with_context(|| format!("{}: row `{id}`: bad number `{cell}`", path.display()))
            })
            .collect::<Result<_>>()?;
        set.insert(&id, row)
            .with_context(|| format!("{}: row `{id}`", path.display()))?;
    }
    Ok(set)
}

pub fn save_embeddings_csv(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["image_id".to_string()];
    header.extend((0..set.dim()).map(|i| format!("v{i}")));
    writer.write_record(&header)?;
    for (id, row) in set.rows() {
        let mut record = vec![id.to_string()];
        record.extend(row.iter().map(|v| format!("{v}")));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_embeddings_binary(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    writer.write_all(&BINARY_MAGIC)?;
    writer.write_all(&(set.dim() as u32).to_le_bytes())?;
    for (id, row) in set.rows() {
        writer.write_all(&(id.len() as u32).to_le_bytes())?;
        writer.write_all(id.as_bytes())?;
        for v in row {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    writer.flush()?;
    Ok(())
}
