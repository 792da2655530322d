//! Prediction records: one row per image and MC sample, keyed by
//! `(subject_id, session_id, image_id)`.
//!
//! Outputs are stored post-activation: sigmoid probabilities for binary and
//! ordinal heads, softmax probabilities for multi-class heads and the raw value
//! for regression heads.

mod csv_io;
mod json_io;
mod labels;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

pub use labels::{load_labels, read_labels_csv, write_labels, write_labels_csv, LabelSet};

/// Tolerance on the sum of a multi-class probability vector.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Output head of a predictor together with its number of classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeadKind {
    Binary,
    MultiClass(usize),
    Ordinal(usize),
    /// Continuous output; `k` is the nominal label range `[0, k-1]`.
    Regression(usize),
}

impl HeadKind {
    pub fn new(name: &str, k: usize) -> Result<Self, String> {
        let head = match name {
            "binary" => {
                if k != 2 {
                    return Err(format!("binary head requires k = 2, got {k}"));
                }
                HeadKind::Binary
            }
            "multiclass" => HeadKind::MultiClass(k),
            "ordinal" => HeadKind::Ordinal(k),
            "regression" => HeadKind::Regression(k),
            other => return Err(format!("unknown head {other:?}")),
        };
        if k < 2 {
            return Err(format!("{name} head requires k >= 2, got {k}"));
        }
        Ok(head)
    }

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::Binary => "binary",
            HeadKind::MultiClass(_) => "multiclass",
            HeadKind::Ordinal(_) => "ordinal",
            HeadKind::Regression(_) => "regression",
        }
    }

    pub fn num_classes(self) -> usize {
        match self {
            HeadKind::Binary => 2,
            HeadKind::MultiClass(k) | HeadKind::Ordinal(k) | HeadKind::Regression(k) => k,
        }
    }

    /// Length of the output vector stored per record.
    pub fn output_len(self) -> usize {
        match self {
            HeadKind::Binary | HeadKind::Regression(_) => 1,
            HeadKind::MultiClass(k) => k,
            HeadKind::Ordinal(k) => k - 1,
        }
    }

    /// Range of the continuous severity score: `[0, 1]` for binary heads,
    /// `[0, k-1]` otherwise.
    pub fn score_range(self) -> (f64, f64) {
        match self {
            HeadKind::Binary => (0.0, 1.0),
            other => (0.0, (other.num_classes() - 1) as f64),
        }
    }

    /// Checks an output vector against this head's arity and value constraints.
    pub fn check_outputs(self, outputs: &[f64]) -> Result<(), String> {
        if outputs.len() != self.output_len() {
            return Err(format!(
                "{} head with k = {} expects {} outputs, got {}",
                self.name(),
                self.num_classes(),
                self.output_len(),
                outputs.len()
            ));
        }
        if let Some(v) = outputs.iter().find(|v| !v.is_finite()) {
            return Err(format!("output {v} is not finite"));
        }
        match self {
            HeadKind::Regression(_) => {}
            _ => {
                if let Some(v) = outputs.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(format!("probability {v} outside [0, 1]"));
                }
            }
        }
        if let HeadKind::MultiClass(_) = self {
            let sum: f64 = outputs.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(format!("multiclass probabilities sum to {sum}, expected 1"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(k={})", self.name(), self.num_classes())
    }
}

/// Which forward pass produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum McIndex {
    /// Dropout-disabled single forward pass; `-1` in files.
    Deterministic,
    Sample(u32),
}

impl McIndex {
    pub fn from_file_value(v: i64) -> Result<Self, String> {
        match v {
            -1 => Ok(McIndex::Deterministic),
            v if v >= 0 && v <= i64::from(u32::MAX) => Ok(McIndex::Sample(v as u32)),
            v => Err(format!("mc_index {v} is neither -1 nor a non-negative sample index")),
        }
    }

    pub fn file_value(self) -> i64 {
        match self {
            McIndex::Deterministic => -1,
            McIndex::Sample(i) => i64::from(i),
        }
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, McIndex::Deterministic)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ImageKey {
    pub subject_id: String,
    pub session_id: String,
    pub image_id: String,
}

impl fmt::Display for ImageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.subject_id, self.session_id, self.image_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub subject_id: String,
    pub session_id: String,
    pub image_id: String,
    pub head: HeadKind,
    pub mc_index: McIndex,
    pub outputs: Vec<f64>,
}

impl PredictionRecord {
    pub fn key(&self) -> ImageKey {
        ImageKey {
            subject_id: self.subject_id.clone(),
            session_id: self.session_id.clone(),
            image_id: self.image_id.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.head.check_outputs(&self.outputs)
    }
}

/// Validated collection of records sharing one head.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordSet {
    records: Vec<PredictionRecord>,
}

impl RecordSet {
    /// Validates every record; row numbers in errors are 1-based positions in `records`.
    pub fn new(records: Vec<PredictionRecord>) -> Result<Self> {
        let mut head = None;
        for (i, record) in records.iter().enumerate() {
            record
                .validate()
                .map_err(|message| Error::Schema { row: i + 1, message })?;
            check_same_head(&mut head, record.head, i + 1)?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<PredictionRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Head shared by all records, `None` for an empty set.
    pub fn head(&self) -> Option<HeadKind> {
        self.records.first().map(|r| r.head)
    }

    pub fn has_deterministic(&self) -> bool {
        self.records.iter().any(|r| r.mc_index.is_deterministic())
    }
}

pub(crate) fn check_same_head(seen: &mut Option<HeadKind>, head: HeadKind, row: usize) -> Result<()> {
    match seen {
        None => {
            *seen = Some(head);
            Ok(())
        }
        Some(first) if *first == head => Ok(()),
        Some(first) => Err(Error::Schema {
            row,
            message: format!("mixed heads in one file: {head} after {first}"),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Json,
}

impl RecordFormat {
    /// Format from the file extension (`.csv` or `.json`).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "csv" => Ok(RecordFormat::Csv),
            Some(ext) if ext == "json" => Ok(RecordFormat::Json),
            _ => Err(Error::InvalidInput(format!(
                "cannot infer record format of {} (expected .csv or .json)",
                path.display()
            ))),
        }
    }
}

pub fn load_records(path: impl AsRef<Path>, format: RecordFormat) -> Result<RecordSet> {
    let path = path.as_ref();
    let run = || -> Result<RecordSet> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        match format {
            RecordFormat::Csv => csv_io::read_csv(reader),
            RecordFormat::Json => json_io::read_json(reader),
        }
    };
    run().map_err(|e| e.in_file(path))
}

pub fn write_records(path: impl AsRef<Path>, format: RecordFormat, records: &RecordSet) -> Result<()> {
    let path = path.as_ref();
    let run = || -> Result<()> {
        let file = std::fs::File::create(path)?;
        let writer = std::io::BufWriter::new(file);
        match format {
            RecordFormat::Csv => csv_io::write_csv(writer, records),
            RecordFormat::Json => json_io::write_json(writer, records),
        }
    };
    run().map_err(|e| e.in_file(path))
}

pub use csv_io::{read_csv as read_records_csv, write_csv as write_records_csv};
pub use json_io::{read_json as read_records_json, write_json as write_records_json};

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecords {
    pub image_id: String,
    /// Records in file order.
    pub records: Vec<PredictionRecord>,
}

/// All images of one subject acquired in one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionGroup {
    pub subject_id: String,
    pub session_id: String,
    pub head: HeadKind,
    /// Sorted by `image_id`.
    pub images: Vec<ImageRecords>,
}

impl SessionGroup {
    /// Groups with two or more images form a test-retest unit.
    pub fn is_test_retest(&self) -> bool {
        self.images.len() >= 2
    }
}

/// Partitions records by `(subject_id, session_id)`, ordered by
/// `(subject_id, session_id, image_id)`.
pub fn group_by_session(records: &RecordSet) -> Vec<SessionGroup> {
    let mut sessions: BTreeMap<(&str, &str), BTreeMap<&str, Vec<PredictionRecord>>> = BTreeMap::new();
    for r in records.records() {
        sessions
            .entry((&r.subject_id, &r.session_id))
            .or_default()
            .entry(&r.image_id)
            .or_default()
            .push(r.clone());
    }
    sessions
        .into_iter()
        .map(|((subject, session), images)| {
            let images: Vec<ImageRecords> = images
                .into_iter()
                .map(|(image_id, records)| ImageRecords {
                    image_id: image_id.to_string(),
                    records,
                })
                .collect();
            SessionGroup {
                subject_id: subject.to_string(),
                session_id: session.to_string(),
                head: images[0].records[0].head,
                images,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(subject: &str, session: &str, image: &str, mc: i64, outputs: &[f64]) -> PredictionRecord {
        PredictionRecord {
            subject_id: subject.into(),
            session_id: session.into(),
            image_id: image.into(),
            head: HeadKind::Binary,
            mc_index: McIndex::from_file_value(mc).unwrap(),
            outputs: outputs.to_vec(),
        }
    }

    #[test]
    fn head_constraints() {
        assert!(HeadKind::new("binary", 3).is_err());
        assert!(HeadKind::new("ordinal", 1).is_err());
        assert!(HeadKind::new("softmax", 3).is_err());
        assert_eq!(HeadKind::new("ordinal", 5).unwrap().output_len(), 4);
        assert_eq!(HeadKind::new("multiclass", 3).unwrap().output_len(), 3);
        assert_eq!(HeadKind::new("regression", 3).unwrap().output_len(), 1);
        assert_eq!(HeadKind::Regression(5).score_range(), (0.0, 4.0));
    }

    #[test]
    fn output_checks() {
        assert!(HeadKind::MultiClass(3).check_outputs(&[0.2, 0.5, 0.3]).is_ok());
        assert!(HeadKind::MultiClass(3).check_outputs(&[0.4, 0.5, 0.3]).is_err());
        assert!(HeadKind::Ordinal(3).check_outputs(&[0.9, 1.1]).is_err());
        assert!(HeadKind::Binary.check_outputs(&[0.2, 0.8]).is_err());
        assert!(HeadKind::Regression(3).check_outputs(&[-7.5]).is_ok());
        assert!(HeadKind::Regression(3).check_outputs(&[f64::NAN]).is_err());
    }

    #[test]
    fn mc_index_sentinel() {
        assert_eq!(McIndex::from_file_value(-1).unwrap(), McIndex::Deterministic);
        assert_eq!(McIndex::Sample(4).file_value(), 4);
        assert!(McIndex::from_file_value(-2).is_err());
    }

    #[test]
    fn mixed_heads_rejected() {
        let mut b = rec("s1", "v1", "a", 0, &[0.1]);
        b.head = HeadKind::Regression(2);
        let err = RecordSet::new(vec![rec("s1", "v1", "a", 0, &[0.1]), b]).unwrap_err();
        assert!(matches!(err, Error::Schema { row: 2, .. }));
    }

    #[test]
    fn grouping_two_subjects_two_images() {
        let mut rows = Vec::new();
        for s in ["s2", "s1"] {
            for img in ["b", "a"] {
                for mc in 0..3 {
                    rows.push(rec(s, "v1", img, mc, &[0.5]));
                }
            }
        }
        let groups = group_by_session(&RecordSet::new(rows).unwrap());
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].subject_id, "s1");
        assert!(groups.iter().all(|g| g.images.len() == 2 && g.is_test_retest()));
        assert_eq!(groups[0].images[0].image_id, "a");
        assert_eq!(groups[0].images[0].records.len(), 3);
    }

    #[test]
    fn grouping_three_views_one_group() {
        let rows = ["cc", "mlo", "lat"].iter().map(|v| rec("s1", "v1", v, 0, &[0.5])).collect();
        let groups = group_by_session(&RecordSet::new(rows).unwrap());
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].images.len(), 3);
    }

    #[test]
    fn grouping_two_sessions_are_distinct() {
        let rows = vec![rec("s1", "v1", "a", 0, &[0.5]), rec("s1", "v2", "a", 0, &[0.5])];
        let groups = group_by_session(&RecordSet::new(rows).unwrap());
        assert_eq!(groups.len(), 2);
        assert!(groups.iter().all(|g| !g.is_test_retest()));
    }

    #[test]
    fn grouping_preserves_file_order_within_image() {
        let rows = vec![rec("s1", "v1", "a", 2, &[0.2]), rec("s1", "v1", "a", 0, &[0.0]), rec("s1", "v1", "a", 1, &[0.1])];
        let groups = group_by_session(&RecordSet::new(rows).unwrap());
        let order: Vec<i64> = groups[0].images[0].records.iter().map(|r| r.mc_index.file_value()).collect();
        assert_eq!(order, vec![2, 0, 1]);
    }
}
