use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ImageKey;
use crate::error::{Error, Result};

/// Ground-truth class per image, integers in `[0, k-1]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    labels: BTreeMap<ImageKey, usize>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the previous label if the image was already present.
    pub fn insert(&mut self, key: ImageKey, label: usize) -> Option<usize> {
        self.labels.insert(key, label)
    }

    pub fn get(&self, key: &ImageKey) -> Option<usize> {
        self.labels.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ImageKey, usize)> {
        self.labels.iter().map(|(k, v)| (k, *v))
    }
}

impl FromIterator<(ImageKey, usize)> for LabelSet {
    fn from_iter<I: IntoIterator<Item = (ImageKey, usize)>>(iter: I) -> Self {
        Self {
            labels: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRow {
    subject_id: String,
    session_id: String,
    image_id: String,
    label: i64,
}

/// Reads `subject_id,session_id,image_id,label`; duplicate images are rejected.
pub fn read_labels_csv<R: Read>(reader: R) -> Result<LabelSet> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut set = LabelSet::new();
    for (i, row) in rdr.deserialize::<LabelRow>().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Schema {
            row: row_no,
            message: e.to_string(),
        })?;
        if row.label < 0 {
            return Err(Error::Schema {
                row: row_no,
                message: format!("label {} is negative", row.label),
            });
        }
        let key = ImageKey {
            subject_id: row.subject_id,
            session_id: row.session_id,
            image_id: row.image_id,
        };
        if set.insert(key.clone(), row.label as usize).is_some() {
            return Err(Error::Schema {
                row: row_no,
                message: format!("duplicate label for image {key}"),
            });
        }
    }
    Ok(set)
}

pub fn write_labels_csv<W: Write>(writer: W, labels: &LabelSet) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (key, label) in labels.iter() {
        wtr.serialize(LabelRow {
            subject_id: key.subject_id.clone(),
            session_id: key.session_id.clone(),
            image_id: key.image_id.clone(),
            label: label as i64,
        })?;
    }
    if labels.is_empty() {
        wtr.write_record(["subject_id", "session_id", "image_id", "label"])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let run = || -> Result<LabelSet> { read_labels_csv(std::io::BufReader::new(std::fs::File::open(path)?)) };
    run().map_err(|e| e.in_file(path))
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelSet) -> Result<()> {
    let path = path.as_ref();
    let run = || -> Result<()> { write_labels_csv(std::io::BufWriter::new(std::fs::File::create(path)?), labels) };
    run().map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "subject_id,session_id,image_id,label\ns1,v1,a,2\ns1,v1,b,0\n";
        let set = read_labels_csv(text.as_bytes()).unwrap();
        assert_eq!(set.len(), 2);
        let mut out = Vec::new();
        write_labels_csv(&mut out, &set).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn rejects_duplicates_and_negatives() {
        let dup = "subject_id,session_id,image_id,label\ns1,v1,a,2\ns1,v1,a,1\n";
        assert!(matches!(read_labels_csv(dup.as_bytes()), Err(Error::Schema { row: 2, .. })));
        let neg = "subject_id,session_id,image_id,label\ns1,v1,a,-1\n";
        assert!(matches!(read_labels_csv(neg.as_bytes()), Err(Error::Schema { row: 1, .. })));
    }
}
