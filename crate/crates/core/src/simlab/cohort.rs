//! Synthetic test-retest cohorts.
//!
//! Each subject has a latent severity `u ~ Uniform(0, k-1)`. A fixed, seeded
//! nonlinear embedding maps `u` to a feature vector, and every image of the
//! subject adds independent Gaussian noise to it. Labels bin `u` into `k`
//! equal intervals; near a class boundary a label may flip to the adjacent
//! class, imitating rater disagreement on borderline cases.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{HeadKind, ImageKey, LabelSet};
use crate::rng::{shuffle, substream};

/// Fraction of a bin's width around each internal boundary where labels may flip.
pub const BOUNDARY_BAND: f64 = 0.1;

/// Euclidean norm of the embedding's linear part over the full severity range.
pub const SIGNAL_NORM: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub n_subjects: usize,
    pub images_per_subject: usize,
    pub k: usize,
    pub feature_dim: usize,
    pub image_noise_sigma: f64,
    pub label_noise_rate: f64,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl CohortConfig {
    /// Default simulated task with `k` classes.
    pub fn with_classes(k: usize) -> Self {
        Self {
            n_subjects: 500,
            images_per_subject: 2,
            k,
            feature_dim: 16,
            image_noise_sigma: 0.8,
            label_noise_rate: 0.2,
            train_fraction: 0.2,
            validation_fraction: 0.10,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidInput(m));
        if self.n_subjects < 3 {
            return fail(format!("n_subjects must be at least 3, got {}", self.n_subjects));
        }
        if self.images_per_subject < 2 {
            return fail(format!("images_per_subject must be at least 2, got {}", self.images_per_subject));
        }
        if self.k < 2 {
            return fail(format!("k must be at least 2, got {}", self.k));
        }
        if self.feature_dim == 0 {
            return fail("feature_dim must be positive".into());
        }
        if !(self.image_noise_sigma >= 0.0 && self.image_noise_sigma.is_finite()) {
            return fail(format!("image_noise_sigma must be >= 0, got {}", self.image_noise_sigma));
        }
        if !(0.0..0.5).contains(&self.label_noise_rate) {
            return fail(format!("label_noise_rate must lie in [0, 0.5), got {}", self.label_noise_rate));
        }
        let (t, v) = (self.train_fraction, self.validation_fraction);
        if !(t > 0.0 && v >= 0.0 && t + v < 1.0) {
            return fail(format!("split fractions train = {t}, validation = {v} leave no test subjects"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    pub image_id: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSubject {
    pub subject_id: String,
    pub session_id: String,
    pub severity: f64,
    /// Class label in `[0, k-1]`, shared by all images of the subject.
    pub label: usize,
    pub split: Split,
    pub images: Vec<SyntheticImage>,
}

impl SyntheticSubject {
    pub fn image_key(&self, image: &SyntheticImage) -> ImageKey {
        ImageKey {
            subject_id: self.subject_id.clone(),
            session_id: self.session_id.clone(),
            image_id: image.image_id.clone(),
        }
    }
}

/// Per-dimension map `t -> slope * t + amplitude * sin(2 pi frequency t + phase)`
/// with `t = u / (k-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    slope: Vec<f64>,
    amplitude: Vec<f64>,
    frequency: Vec<f64>,
    phase: Vec<f64>,
}

impl Embedding {
    fn sample<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        let mut slope: Vec<f64> = (0..dim).map(|_| normal()).collect();
        let mut amplitude: Vec<f64> = (0..dim).map(|_| 0.5 * normal()).collect();
        // Fix the total signal so that feature_dim only changes redundancy.
        let scale = SIGNAL_NORM / slope.iter().map(|v| v * v).sum::<f64>().sqrt();
        slope.iter_mut().chain(amplitude.iter_mut()).for_each(|v| *v *= scale);
        let frequency = (0..dim).map(|_| 0.5 + rng.random::<f64>()).collect();
        let phase = (0..dim).map(|_| std::f64::consts::TAU * rng.random::<f64>()).collect();
        Self {
            slope,
            amplitude,
            frequency,
            phase,
        }
    }

    pub fn embed(&self, t: f64) -> Vec<f64> {
        (0..self.slope.len())
            .map(|j| {
                self.slope[j] * t
                    + self.amplitude[j] * (std::f64::consts::TAU * self.frequency[j] * t + self.phase[j]).sin()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub config: CohortConfig,
    pub embedding: Embedding,
    pub subjects: Vec<SyntheticSubject>,
}

/// Class of a severity under `k` equal bins of width `(k-1)/k`.
pub fn severity_class(u: f64, k: usize) -> usize {
    let width = (k - 1) as f64 / k as f64;
    ((u / width) as usize).min(k - 1)
}

/// Label used for a given head: binary tasks split classes at `k / 2`.
pub fn task_label(head: HeadKind, cohort_k: usize, label: usize) -> usize {
    match head {
        HeadKind::Binary => usize::from(label >= cohort_k / 2),
        _ => label,
    }
}

/// Builds the cohort; identical configs give identical cohorts.
///
/// Streams of `seed`: 0 embedding, 1 severities and label noise, 2 split
/// assignment, `16 + i` image noise of subject `i`.
pub fn generate_cohort(cfg: &CohortConfig) -> Result<SyntheticCohort> {
    cfg.validate()?;
    let k = cfg.k;
    let embedding = Embedding::sample(cfg.feature_dim, &mut substream(cfg.seed, 0));
    let mut rng = substream(cfg.seed, 1);
    let width = (k - 1) as f64 / k as f64;

    let mut order: Vec<usize> = (0..cfg.n_subjects).collect();
    shuffle(&mut substream(cfg.seed, 2), &mut order);
    let n_train = ((cfg.n_subjects as f64 * cfg.train_fraction).round() as usize).max(1);
    let n_val = (cfg.n_subjects as f64 * cfg.validation_fraction).round() as usize;
    let mut split = vec![Split::Test; cfg.n_subjects];
    for (rank, &i) in order.iter().enumerate() {
        split[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Validation
        } else {
            Split::Test
        };
    }

    let digits = cfg.n_subjects.to_string().len();
    let subjects = (0..cfg.n_subjects)
        .map(|i| {
            let u = rng.random::<f64>() * (k - 1) as f64;
            let mut label = severity_class(u, k);
            // Nearest internal boundary.
            let b = (u / width).round() as usize;
            let flip: f64 = rng.random();
            if (1..k).contains(&b) && (u - b as f64 * width).abs() < BOUNDARY_BAND * width && flip < cfg.label_noise_rate {
                label = if u < b as f64 * width { b } else { b - 1 };
            }

            let center = embedding.embed(u / (k - 1) as f64);
            let mut noise_rng = substream(cfg.seed, 16 + i as u64);
            let images = (0..cfg.images_per_subject)
                .map(|m| SyntheticImage {
                    image_id: format!("img{m}"),
                    features: center
                        .iter()
                        .map(|c| {
                            let e: f64 = StandardNormal.sample(&mut noise_rng);
                            c + cfg.image_noise_sigma * e
                        })
                        .collect(),
                })
                .collect();
            SyntheticSubject {
                subject_id: format!("s{i:0digits$}"),
                session_id: "v1".into(),
                severity: u,
                label,
                split: split[i],
                images,
            }
        })
        .collect();
    Ok(SyntheticCohort {
        config: cfg.clone(),
        embedding,
        subjects,
    })
}

impl SyntheticCohort {
    pub fn subjects_in(&self, split: Split) -> impl Iterator<Item = &SyntheticSubject> {
        self.subjects.iter().filter(move |s| s.split == split)
    }

    /// `(subject, image)` pairs of a split in subject order.
    pub fn images_in(&self, split: Split) -> Vec<(&SyntheticSubject, &SyntheticImage)> {
        self.subjects_in(split)
            .flat_map(|s| s.images.iter().map(move |img| (s, img)))
            .collect()
    }

    /// Task labels of every image in a split.
    pub fn labels(&self, split: Split, head: HeadKind) -> LabelSet {
        self.images_in(split)
            .into_iter()
            .map(|(s, img)| (s.image_key(img), task_label(head, self.config.k, s.label)))
            .collect()
    }
}
