//! Training losses, evaluated on pre-activation logits for numerical stability.

use serde::{Deserialize, Serialize};

use crate::records::HeadKind;

use super::mlp::{sigmoid, softmax};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    BinaryCrossEntropy,
    CrossEntropy,
    Coral,
    MeanSquaredError,
}

impl Loss {
    /// The loss paired with each head.
    pub fn for_head(head: HeadKind) -> Self {
        match head {
            HeadKind::Binary => Self::BinaryCrossEntropy,
            HeadKind::MultiClass(_) => Self::CrossEntropy,
            HeadKind::Ordinal(_) => Self::Coral,
            HeadKind::Regression(_) => Self::MeanSquaredError,
        }
    }

    pub fn matches(self, head: HeadKind) -> bool {
        self == Self::for_head(head)
    }

    /// Loss of one sample with integer label `y`, and its gradient with
    /// respect to the logits.
    pub fn evaluate(self, logits: &[f64], y: usize) -> (f64, Vec<f64>) {
        match self {
            Self::BinaryCrossEntropy => {
                let z = logits[0];
                let t = y as f64;
                (softplus(z) - t * z, vec![sigmoid(z) - t])
            }
            Self::CrossEntropy => {
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
                let mut grad = softmax(logits);
                grad[y] -= 1.0;
                (lse - logits[y], grad)
            }
            // Unit j is the binary task "label > j".
            Self::Coral => {
                let mut loss = 0.0;
                let grad = logits
                    .iter()
                    .enumerate()
                    .map(|(j, &z)| {
                        let t = if y > j { 1.0 } else { 0.0 };
                        loss += softplus(z) - t * z;
                        sigmoid(z) - t
                    })
                    .collect();
                (loss, grad)
            }
            Self::MeanSquaredError => {
                let r = logits[0] - y as f64;
                (r * r, vec![2.0 * r])
            }
        }
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
