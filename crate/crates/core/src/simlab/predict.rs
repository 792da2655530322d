//! MC dropout inference over a cohort split.

use rayon::prelude::*;

use crate::error::Result;
use crate::records::{McIndex, PredictionRecord, RecordSet};
use crate::rng::substream;

use super::cohort::{Split, SyntheticCohort};
use super::mlp::MlpModel;

/// `n_mc` dropout-enabled passes per image (`mc_index` 0..n_mc), plus one
/// deterministic row when requested. Image `i` of the split draws its masks
/// from substream `i` of `seed`, so results do not depend on thread count.
pub fn predict_records(
    model: &MlpModel,
    cohort: &SyntheticCohort,
    split: Split,
    n_mc: usize,
    seed: u64,
    include_deterministic: bool,
) -> Result<RecordSet> {
    let images = cohort.images_in(split);
    let rows: Vec<Vec<PredictionRecord>> = images
        .par_iter()
        .enumerate()
        .map(|(i, (subject, image))| {
            let mut rng = substream(seed, i as u64);
            let record = |mc_index, outputs| PredictionRecord {
                subject_id: subject.subject_id.clone(),
                session_id: subject.session_id.clone(),
                image_id: image.image_id.clone(),
                head: model.head(),
                mc_index,
                outputs,
            };
            let mut out: Vec<PredictionRecord> = (0..n_mc)
                .map(|m| record(McIndex::Sample(m as u32), model.forward(&image.features, true, &mut rng)))
                .collect();
            if include_deterministic {
                out.push(record(McIndex::Deterministic, model.forward(&image.features, false, &mut rng)));
            }
            out
        })
        .collect();
    RecordSet::new(rows.into_iter().flatten().collect())
}
