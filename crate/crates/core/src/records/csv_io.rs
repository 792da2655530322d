use std::io::{Read, Write};

use super::{check_same_head, HeadKind, McIndex, PredictionRecord, RecordSet};
use crate::error::{Error, Result};

const FIXED_COLUMNS: [&str; 6] = ["subject_id", "session_id", "image_id", "head", "k", "mc_index"];

/// Reads the record CSV schema
/// `subject_id,session_id,image_id,head,k,mc_index,out_0[,out_1,...]`.
///
/// Row numbers in errors count data rows from 1, header excluded.
pub fn read_csv<R: Read>(reader: R) -> Result<RecordSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let schema_err = |message: String| Error::Schema { row: 0, message };

    let mut fixed = [0usize; 6];
    for (slot, name) in fixed.iter_mut().zip(FIXED_COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema_err(format!("header is missing column {name:?}")))?;
    }
    let mut out_columns = Vec::new();
    while let Some(pos) = header.iter().position(|h| h == format!("out_{}", out_columns.len())) {
        out_columns.push(pos);
    }
    if out_columns.is_empty() {
        return Err(schema_err("header is missing column \"out_0\"".into()));
    }

    let mut records = Vec::new();
    let mut head_seen = None;
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let err = |message: String| Error::Schema { row: row_no, message };
        let field = |idx: usize| row.get(idx).unwrap_or("").trim();

        let k: usize = field(fixed[4])
            .parse()
            .map_err(|_| err(format!("k {:?} is not a non-negative integer", field(fixed[4]))))?;
        let head = HeadKind::new(field(fixed[3]), k).map_err(err)?;
        let mc_raw: i64 = field(fixed[5])
            .parse()
            .map_err(|_| err(format!("mc_index {:?} is not an integer", field(fixed[5]))))?;
        let mc_index = McIndex::from_file_value(mc_raw).map_err(err)?;

        let arity = head.output_len();
        if out_columns.len() < arity {
            return Err(err(format!(
                "{head} needs {arity} output columns, header has {}",
                out_columns.len()
            )));
        }
        let mut outputs = Vec::with_capacity(arity);
        for (j, &col) in out_columns.iter().enumerate() {
            let raw = field(col);
            if j < arity {
                if raw.is_empty() {
                    return Err(err(format!("missing out_{j} for {head}")));
                }
                let v: f64 = raw
                    .parse()
                    .map_err(|_| err(format!("out_{j} {raw:?} is not a number")))?;
                outputs.push(v);
            } else if !raw.is_empty() {
                return Err(err(format!("out_{j} must be empty for {head}")));
            }
        }

        let subject_id = field(fixed[0]).to_string();
        let session_id = field(fixed[1]).to_string();
        let image_id = field(fixed[2]).to_string();
        if subject_id.is_empty() || session_id.is_empty() || image_id.is_empty() {
            return Err(err("subject_id, session_id and image_id must be non-empty".into()));
        }
        let record = PredictionRecord {
            subject_id,
            session_id,
            image_id,
            head,
            mc_index,
            outputs,
        };
        record.validate().map_err(err)?;
        check_same_head(&mut head_seen, head, row_no)?;
        records.push(record);
    }
    Ok(RecordSet { records })
}

pub fn write_csv<W: Write>(writer: W, records: &RecordSet) -> Result<()> {
    let width = records.head().map_or(1, HeadKind::output_len);
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..width).map(|j| format!("out_{j}")));
    wtr.write_record(&header)?;
    for r in records.records() {
        let mut row = vec![
            r.subject_id.clone(),
            r.session_id.clone(),
            r.image_id.clone(),
            r.head.name().to_string(),
            r.head.num_classes().to_string(),
            r.mc_index.file_value().to_string(),
        ];
        row.extend(r.outputs.iter().map(|v| v.to_string()));
        row.resize(FIXED_COLUMNS.len() + width, String::new());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RecordSet> {
        read_csv(text.as_bytes())
    }

    #[test]
    fn four_row_multiclass_image() {
        let text = "subject_id,session_id,image_id,head,k,mc_index,out_0,out_1,out_2\n\
                    s1,v1,a,multiclass,3,0,0.2,0.5,0.3\n\
                    s1,v1,a,multiclass,3,1,0.1,0.6,0.3\n\
                    s1,v1,a,multiclass,3,2,0.3,0.4,0.3\n\
                    s1,v1,a,multiclass,3,3,0.2,0.2,0.6\n";
        let set = parse(text).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.head(), Some(HeadKind::MultiClass(3)));
        let mc: Vec<i64> = set.records().iter().map(|r| r.mc_index.file_value()).collect();
        assert_eq!(mc, vec![0, 1, 2, 3]);
    }

    #[test]
    fn simplex_violation_names_row() {
        let text = "subject_id,session_id,image_id,head,k,mc_index,out_0,out_1,out_2\n\
                    s1,v1,a,multiclass,3,0,0.2,0.5,0.3\n\
                    s1,v1,a,multiclass,3,1,0.4,0.5,0.3\n";
        match parse(text).unwrap_err() {
            Error::Schema { row, message } => {
                assert_eq!(row, 2);
                assert!(message.contains("sum"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        let set = parse("subject_id,session_id,image_id,head,k,mc_index,out_0\n").unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn unused_output_columns_must_be_empty() {
        let text = "subject_id,session_id,image_id,head,k,mc_index,out_0,out_1\n\
                    s1,v1,a,binary,2,0,0.2,0.5\n";
        assert!(matches!(parse(text), Err(Error::Schema { row: 1, .. })));
        let ok = "subject_id,session_id,image_id,head,k,mc_index,out_0,out_1\n\
                  s1,v1,a,binary,2,0,0.2,\n";
        assert_eq!(parse(ok).unwrap().len(), 1);
    }

    #[test]
    fn missing_output_and_bad_probability() {
        let text = "subject_id,session_id,image_id,head,k,mc_index,out_0,out_1\n\
                    s1,v1,a,ordinal,3,0,0.2,\n";
        assert!(matches!(parse(text), Err(Error::Schema { row: 1, .. })));
        let text = "subject_id,session_id,image_id,head,k,mc_index,out_0\n\
                    s1,v1,a,binary,2,-1,1.5\n";
        assert!(matches!(parse(text), Err(Error::Schema { row: 1, .. })));
    }

    #[test]
    fn mixed_heads_error() {
        let text = "subject_id,session_id,image_id,head,k,mc_index,out_0\n\
                    s1,v1,a,binary,2,0,0.2\n\
                    s1,v1,a,regression,3,0,0.2\n";
        assert!(matches!(parse(text), Err(Error::Schema { row: 2, .. })));
    }

    #[test]
    fn missing_column_rejected() {
        assert!(parse("subject_id,session_id,image_id,head,k,out_0\n").is_err());
    }
}
