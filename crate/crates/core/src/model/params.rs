use rand::Rng;

use super::config::ModelConfig;
use crate::nn::{ConvGrad, ConvParams, DenseGrad, DenseParams, GradientSet, ParamSet, Tensor};

/// One gated residual unit: `z = tanh(filter(h)) * sigmoid(gate(h))`,
/// `h' = h + residual(z)`, `skip = skip(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedBlock {
    pub filter: ConvParams,
    pub gate: ConvParams,
    /// 1x1
    pub residual: ConvParams,
    /// 1x1
    pub skip: ConvParams,
}

/// Input projection, gated blocks, and a dense head over the summed skips.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvStack {
    /// 1x1
    pub input: ConvParams,
    pub blocks: Vec<GatedBlock>,
    pub head: DenseParams,
}

/// Encoder and decoder own disjoint parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub encoder: ConvStack,
    pub decoder: ConvStack,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BlockGrad {
    pub filter: ConvGrad,
    pub gate: ConvGrad,
    pub residual: ConvGrad,
    pub skip: ConvGrad,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StackGrad {
    pub input: ConvGrad,
    pub blocks: Vec<BlockGrad>,
    pub head: DenseGrad,
}

impl ConvStack {
    fn zeros(in_ch: usize, channels: usize, layers: usize, kernel: usize, out_dim: usize) -> Self {
        Self {
            input: ConvParams::zeros(channels, in_ch, 1, 1),
            blocks: (0..layers)
                .map(|l| GatedBlock {
                    filter: ConvParams::zeros(channels, channels, kernel, ModelConfig::dilation(l)),
                    gate: ConvParams::zeros(channels, channels, kernel, ModelConfig::dilation(l)),
                    residual: ConvParams::zeros(channels, channels, 1, 1),
                    skip: ConvParams::zeros(channels, channels, 1, 1),
                })
                .collect(),
            head: DenseParams::zeros(out_dim, channels),
        }
    }

    pub fn channels(&self) -> usize {
        self.input.out_channels()
    }

    fn convs(&self) -> Vec<(String, &ConvParams)> {
        let mut v = vec![("input".to_string(), &self.input)];
        for (l, b) in self.blocks.iter().enumerate() {
            v.push((format!("block{l}.filter"), &b.filter));
            v.push((format!("block{l}.gate"), &b.gate));
            v.push((format!("block{l}.residual"), &b.residual));
            v.push((format!("block{l}.skip"), &b.skip));
        }
        v
    }

    fn tensors(&self) -> Vec<&Tensor> {
        let mut v = Vec::new();
        for (_, c) in self.convs() {
            v.push(&c.weights);
            v.push(&c.bias);
        }
        v.push(&self.head.weights);
        v.push(&self.head.bias);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.input.weights, &mut self.input.bias];
        for b in &mut self.blocks {
            for c in [&mut b.filter, &mut b.gate, &mut b.residual, &mut b.skip] {
                v.push(&mut c.weights);
                v.push(&mut c.bias);
            }
        }
        v.push(&mut self.head.weights);
        v.push(&mut self.head.bias);
        v
    }

    fn names(&self, prefix: &str, head: &str) -> Vec<String> {
        let mut v = Vec::new();
        for (name, _) in self.convs() {
            v.push(format!("{prefix}.{name}.weight"));
            v.push(format!("{prefix}.{name}.bias"));
        }
        v.push(format!("{prefix}.{head}.weight"));
        v.push(format!("{prefix}.{head}.bias"));
        v
    }

    pub(crate) fn zero_grad(&self) -> StackGrad {
        StackGrad {
            input: self.input.zero_grad(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockGrad {
                    filter: b.filter.zero_grad(),
                    gate: b.gate.zero_grad(),
                    residual: b.residual.zero_grad(),
                    skip: b.skip.zero_grad(),
                })
                .collect(),
            head: self.head.zero_grad(),
        }
    }
}

impl StackGrad {
    fn into_tensors(self, out: &mut Vec<Tensor>) {
        out.push(self.input.weights);
        out.push(self.input.bias);
        for b in self.blocks {
            for c in [b.filter, b.gate, b.residual, b.skip] {
                out.push(c.weights);
                out.push(c.bias);
            }
        }
        out.push(self.head.weights);
        out.push(self.head.bias);
    }
}

pub(crate) fn into_gradient_set(encoder: StackGrad, decoder: StackGrad) -> GradientSet {
    let mut tensors = Vec::new();
    encoder.into_tensors(&mut tensors);
    decoder.into_tensors(&mut tensors);
    GradientSet { tensors }
}

impl ModelParams {
    /// All-zero parameters; the model then predicts exactly 0 everywhere.
    pub fn zeros(config: &ModelConfig) -> Self {
        Self {
            config: config.clone(),
            encoder: ConvStack::zeros(
                config.encoder_channels,
                config.channels,
                config.n_layers,
                config.kernel_size,
                config.channels,
            ),
            decoder: ConvStack::zeros(
                config.decoder_inputs(),
                config.channels,
                config.decoder_layers,
                config.kernel_size,
                1,
            ),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(config);
        for t in p.tensors_mut() {
            if t.rank() < 2 {
                continue;
            }
            let receptive: usize = t.shape()[2..].iter().product();
            let fan_in = t.dim(1) * receptive;
            let fan_out = t.dim(0) * receptive;
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in t.data_mut() {
                *v = rng.random_range(-limit..limit);
            }
        }
        p
    }
}

impl ParamSet for ModelParams {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut v = self.encoder.tensors();
        v.extend(self.decoder.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.encoder.tensors_mut();
        v.extend(self.decoder.tensors_mut());
        v
    }

    fn names(&self) -> Vec<String> {
        let mut v = self.encoder.names("encoder", "head");
        v.extend(self.decoder.names("decoder", "output"));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn names_and_tensors_align() {
        let cfg = ModelConfig {
            n_layers: 2,
            decoder_layers: 2,
            channels: 4,
            encoder_len: 16,
            ..ModelConfig::default()
        };
        let p = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        let names = p.names();
        assert_eq!(names.len(), p.tensors().len());
        assert_eq!(names[0], "encoder.input.weight");
        assert_eq!(names.last().unwrap(), "decoder.output.bias");
        let unique: std::collections::HashSet<_> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
        assert_eq!(p.zero_grads().tensors.len(), names.len());
        assert_eq!(p.decoder.blocks[1].filter.dilation, 2);
    }

    #[test]
    fn init_respects_glorot_bound() {
        let cfg = ModelConfig::default();
        let p = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let w = &p.encoder.blocks[0].filter.weights;
        let limit = (6.0f64 / (16.0 * 2.0 + 16.0 * 2.0)).sqrt();
        assert!(w.max_abs() <= limit);
        assert!(w.max_abs() > 0.0);
        assert!(p.encoder.blocks[0].filter.bias.data().iter().all(|&b| b == 0.0));
    }
}
