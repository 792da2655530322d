//! Fully connected ReLU network with inverted dropout and four output heads.
//!
//! All parameters live in one flat vector. Hidden layer `l` stores its
//! weights row-major (`out x in`) followed by its biases, then the output
//! layer does the same. The ordinal (CORAL) head has a single shared weight
//! row and `k - 1` biases, kept in descending order so the cumulative
//! probabilities are non-increasing in rank.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::HeadKind;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub dropout_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LayerShape {
    inputs: usize,
    /// Weight rows.
    rows: usize,
    biases: usize,
    weight_offset: usize,
    bias_offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    input_dim: usize,
    hidden: Vec<usize>,
    head: HeadKind,
    dropout_rate: f64,
    params: Vec<f64>,
    shapes: Vec<LayerShape>,
}

/// Per-hidden-layer multipliers: `0` for dropped units, `1 / (1 - p)` for kept ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks(pub Vec<Vec<f64>>);

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `activations[0]` is the input; `activations[l + 1]` the output of
    /// hidden layer `l` after ReLU and dropout.
    activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
    masks: Option<DropoutMasks>,
    pub logits: Vec<f64>,
}

impl Trace {
    /// Hidden-layer values before ReLU, one vector per hidden layer.
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre_activations
    }
}

fn shapes_for(input_dim: usize, hidden: &[usize], head: HeadKind) -> Vec<LayerShape> {
    let mut shapes = Vec::with_capacity(hidden.len() + 1);
    let mut offset = 0;
    let mut inputs = input_dim;
    let mut push = |inputs: usize, rows: usize, biases: usize| {
        let weight_offset = offset;
        let bias_offset = weight_offset + rows * inputs;
        offset = bias_offset + biases;
        shapes.push(LayerShape {
            inputs,
            rows,
            biases,
            weight_offset,
            bias_offset,
        });
    };
    for &h in hidden {
        push(inputs, h, h);
        inputs = h;
    }
    match head {
        HeadKind::Binary | HeadKind::Regression(_) => push(inputs, 1, 1),
        HeadKind::MultiClass(k) => push(inputs, k, k),
        HeadKind::Ordinal(k) => push(inputs, 1, k - 1),
    }
    shapes
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / sum).collect()
}

impl MlpModel {
    /// He-initialized hidden layers, zero hidden biases; output weights drawn
    /// with variance `1 / fan_in`. Ordinal biases start evenly spaced and
    /// descending.
    pub fn new(cfg: &MlpConfig, head: HeadKind) -> Result<Self> {
        if cfg.input_dim == 0 || cfg.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidInput("layer sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&cfg.dropout_rate) {
            return Err(Error::InvalidInput(format!("dropout rate {} outside [0, 1)", cfg.dropout_rate)));
        }
        let shapes = shapes_for(cfg.input_dim, &cfg.hidden, head);
        let last = shapes[shapes.len() - 1];
        let mut params = vec![0.0; last.bias_offset + last.biases];
        let mut rng = substream(cfg.seed, 0);
        for (l, s) in shapes.iter().enumerate() {
            let is_output = l + 1 == shapes.len();
            let var = if is_output { 1.0 } else { 2.0 } / s.inputs as f64;
            let dist = Normal::new(0.0, var.sqrt()).expect("positive variance");
            for w in &mut params[s.weight_offset..s.bias_offset] {
                *w = dist.sample(&mut rng);
            }
        }
        if let HeadKind::Ordinal(k) = head {
            let b = &mut params[last.bias_offset..];
            for (j, v) in b.iter_mut().enumerate() {
                *v = 0.5 * ((k - 2) as f64 / 2.0 - j as f64);
            }
        }
        Ok(Self {
            input_dim: cfg.input_dim,
            hidden: cfg.hidden.clone(),
            head,
            dropout_rate: cfg.dropout_rate,
            params,
            shapes,
        })
    }

    pub fn head(&self) -> HeadKind {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_parameters(&self) -> usize {
        self.params.len()
    }

    pub fn ordinal_biases(&self) -> Option<&[f64]> {
        match self.head {
            HeadKind::Ordinal(_) => {
                let last = self.shapes[self.shapes.len() - 1];
                Some(&self.params[last.bias_offset..last.bias_offset + last.biases])
            }
            _ => None,
        }
    }

    /// Restores the descending order of ordinal biases; no-op for other heads.
    pub fn sort_ordinal_biases(&mut self) {
        if let HeadKind::Ordinal(_) = self.head {
            let last = self.shapes[self.shapes.len() - 1];
            self.params[last.bias_offset..last.bias_offset + last.biases].sort_by(|a, b| b.total_cmp(a));
        }
    }

    /// Fresh dropout masks for every hidden layer.
    pub fn sample_masks<R: Rng + ?Sized>(&self, rng: &mut R) -> DropoutMasks {
        let keep = 1.0 - self.dropout_rate;
        let scale = 1.0 / keep;
        DropoutMasks(
            self.hidden
                .iter()
                .map(|&h| {
                    (0..h)
                        .map(|_| if rng.random::<f64>() < self.dropout_rate { 0.0 } else { scale })
                        .collect()
                })
                .collect(),
        )
    }

    /// Forward pass with explicit masks (`None` disables dropout).
    pub fn forward_trace(&self, x: &[f64], masks: Option<&DropoutMasks>) -> Trace {
        assert_eq!(x.len(), self.input_dim, "input length");
        let mut activations = Vec::with_capacity(self.shapes.len());
        let mut pre_activations = Vec::with_capacity(self.hidden.len());
        activations.push(x.to_vec());
        for (l, s) in self.shapes[..self.hidden.len()].iter().enumerate() {
            let z = self.affine(s, &activations[l]);
            let mut a: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
            if let Some(m) = masks {
                a.iter_mut().zip(&m.0[l]).for_each(|(v, m)| *v *= m);
            }
            pre_activations.push(z);
            activations.push(a);
        }
        let out = self.shapes[self.shapes.len() - 1];
        let h = &activations[activations.len() - 1];
        let logits = match self.head {
            HeadKind::Ordinal(_) => {
                let w = &self.params[out.weight_offset..out.bias_offset];
                let shared: f64 = w.iter().zip(h).map(|(a, b)| a * b).sum();
                self.params[out.bias_offset..out.bias_offset + out.biases]
                    .iter()
                    .map(|b| shared + b)
                    .collect()
            }
            _ => self.affine(&out, h),
        };
        Trace {
            activations,
            pre_activations,
            masks: masks.cloned(),
            logits,
        }
    }

    fn affine(&self, s: &LayerShape, input: &[f64]) -> Vec<f64> {
        (0..s.rows)
            .map(|r| {
                let row = &self.params[s.weight_offset + r * s.inputs..s.weight_offset + (r + 1) * s.inputs];
                self.params[s.bias_offset + r] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    /// Head activation: sigmoid per unit for binary and ordinal heads,
    /// softmax for multi-class, identity for regression.
    pub fn activate(&self, logits: &[f64]) -> Vec<f64> {
        match self.head {
            HeadKind::Binary | HeadKind::Ordinal(_) => logits.iter().map(|&z| sigmoid(z)).collect(),
            HeadKind::MultiClass(_) => softmax(logits),
            HeadKind::Regression(_) => logits.to_vec(),
        }
    }

    /// Post-activation output. With dropout enabled, masks are drawn from `rng`;
    /// otherwise `rng` is untouched and the pass is deterministic.
    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], dropout_enabled: bool, rng: &mut R) -> Vec<f64> {
        let masks = (dropout_enabled && self.dropout_rate > 0.0).then(|| self.sample_masks(rng));
        self.activate(&self.forward_trace(x, masks.as_ref()).logits)
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d logits`.
    pub fn backward(&self, trace: &Trace, dlogits: &[f64], grad: &mut [f64]) {
        let out = self.shapes[self.shapes.len() - 1];
        let h = &trace.activations[trace.activations.len() - 1];
        let mut dh = vec![0.0; out.inputs];
        match self.head {
            HeadKind::Ordinal(_) => {
                let dshared: f64 = dlogits.iter().sum();
                for (i, &hi) in h.iter().enumerate() {
                    grad[out.weight_offset + i] += dshared * hi;
                    dh[i] = dshared * self.params[out.weight_offset + i];
                }
                for (j, &d) in dlogits.iter().enumerate() {
                    grad[out.bias_offset + j] += d;
                }
            }
            _ => self.affine_backward(&out, h, dlogits, grad, &mut dh),
        }
        for l in (0..self.hidden.len()).rev() {
            let s = self.shapes[l];
            let z = &trace.pre_activations[l];
            let dz: Vec<f64> = (0..s.rows)
                .map(|r| {
                    let m = trace.masks.as_ref().map_or(1.0, |m| m.0[l][r]);
                    if z[r] > 0.0 {
                        dh[r] * m
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut dprev = vec![0.0; s.inputs];
            self.affine_backward(&s, &trace.activations[l], &dz, grad, &mut dprev);
            dh = dprev;
        }
    }

    fn affine_backward(&self, s: &LayerShape, input: &[f64], dz: &[f64], grad: &mut [f64], dinput: &mut [f64]) {
        for (r, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let w0 = s.weight_offset + r * s.inputs;
            for i in 0..s.inputs {
                grad[w0 + i] += d * input[i];
                dinput[i] += d * self.params[w0 + i];
            }
            grad[s.bias_offset + r] += d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn model(head: HeadKind, p: f64) -> MlpModel {
        MlpModel::new(
            &MlpConfig {
                input_dim: 5,
                hidden: vec![8, 6],
                dropout_rate: p,
                seed: 3,
            },
            head,
        )
        .unwrap()
    }

    const X: [f64; 5] = [0.3, -1.2, 0.8, 0.05, 1.5];

    #[test]
    fn parameter_counts() {
        assert_eq!(model(HeadKind::MultiClass(3), 0.1).num_parameters(), 5 * 8 + 8 + 8 * 6 + 6 + 6 * 3 + 3);
        assert_eq!(model(HeadKind::Ordinal(4), 0.1).num_parameters(), 5 * 8 + 8 + 8 * 6 + 6 + 6 + 3);
    }

    #[test]
    fn zero_rate_dropout_is_identity() {
        let m = model(HeadKind::MultiClass(3), 0.0);
        let mut rng = substream(1, 0);
        assert_eq!(m.forward(&X, true, &mut rng), m.forward(&X, false, &mut rng));
    }

    #[test]
    fn same_stream_same_output() {
        let m = model(HeadKind::Binary, 0.5);
        let a = m.forward(&X, true, &mut substream(9, 4));
        let b = m.forward(&X, true, &mut substream(9, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn softmax_sums_to_one() {
        for seed in 0..20 {
            let m = MlpModel::new(
                &MlpConfig {
                    input_dim: 5,
                    hidden: vec![7],
                    dropout_rate: 0.2,
                    seed,
                },
                HeadKind::MultiClass(5),
            )
            .unwrap();
            let out = m.forward(&X, true, &mut substream(seed, 1));
            assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ordinal_probabilities_are_rank_monotone() {
        let m = model(HeadKind::Ordinal(5), 0.2);
        let out = m.forward(&X, false, &mut substream(0, 0));
        assert!(out.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sorting_restores_bias_order() {
        let mut m = model(HeadKind::Ordinal(4), 0.0);
        let n = m.num_parameters();
        m.parameters_mut()[n - 3..].copy_from_slice(&[-1.0, 2.0, 0.5]);
        m.sort_ordinal_biases();
        assert_eq!(m.ordinal_biases().unwrap(), &[2.0, 0.5, -1.0]);
    }

    #[test]
    fn invalid_configs() {
        let cfg = MlpConfig {
            input_dim: 3,
            hidden: vec![4],
            dropout_rate: 1.0,
            seed: 0,
        };
        assert!(MlpModel::new(&cfg, HeadKind::Binary).is_err());
        assert!(MlpModel::new(&MlpConfig { hidden: vec![0], dropout_rate: 0.1, ..cfg }, HeadKind::Binary).is_err());
    }
}
