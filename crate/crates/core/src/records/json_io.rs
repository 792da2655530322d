use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{check_same_head, HeadKind, McIndex, PredictionRecord, RecordSet};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordJson {
    subject_id: String,
    session_id: String,
    image_id: String,
    head: String,
    k: usize,
    mc_index: i64,
    outputs: Vec<f64>,
}

/// Reads a JSON array of record objects; row numbers are 1-based array positions.
pub fn read_json<R: Read>(reader: R) -> Result<RecordSet> {
    let rows: Vec<serde_json::Value> = serde_json::from_reader(reader)?;
    let mut records = Vec::with_capacity(rows.len());
    let mut head_seen = None;
    for (i, value) in rows.into_iter().enumerate() {
        let row = i + 1;
        let err = |message: String| Error::Schema { row, message };
        let raw: RecordJson = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
        let head = HeadKind::new(&raw.head, raw.k).map_err(err)?;
        let record = PredictionRecord {
            subject_id: raw.subject_id,
            session_id: raw.session_id,
            image_id: raw.image_id,
            head,
            mc_index: McIndex::from_file_value(raw.mc_index).map_err(err)?,
            outputs: raw.outputs,
        };
        record.validate().map_err(err)?;
        check_same_head(&mut head_seen, head, row)?;
        records.push(record);
    }
    Ok(RecordSet { records })
}

pub fn write_json<W: Write>(mut writer: W, records: &RecordSet) -> Result<()> {
    let rows: Vec<RecordJson> = records
        .records()
        .iter()
        .map(|r| RecordJson {
            subject_id: r.subject_id.clone(),
            session_id: r.session_id.clone(),
            image_id: r.image_id.clone(),
            head: r.head.name().to_string(),
            k: r.head.num_classes(),
            mc_index: r.mc_index.file_value(),
            outputs: r.outputs.clone(),
        })
        .collect();
    serde_json::to_writer_pretty(&mut writer, &rows)?;
    writer.write_all(b"\n")?;
    Ok(())
}
