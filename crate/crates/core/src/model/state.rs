use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{is_layer_norm, param_shapes};
use super::{ModelConfig, ModelError, Tensor};
use crate::{rng, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    /// `[in, out]`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings<T> {
    pub word: Tensor<T>,
    pub position: Tensor<T>,
    pub segment: Tensor<T>,
    pub norm: LayerNorm<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer<T> {
    pub query: Linear<T>,
    pub key: Linear<T>,
    pub value: Linear<T>,
    pub attention_output: Linear<T>,
    pub attention_norm: LayerNorm<T>,
    pub intermediate: Linear<T>,
    pub output: Linear<T>,
    pub output_norm: LayerNorm<T>,
}

/// Dense + GELU + layer norm, then a decoder tied to the word embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct MlmHead<T> {
    pub transform: Linear<T>,
    pub norm: LayerNorm<T>,
    pub bias: Tensor<T>,
}

/// Every learnable tensor of the encoder and its two pretraining heads.
///
/// The same type doubles as a gradient accumulator and as optimizer moment
/// storage, so all three line up tensor-for-tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState<T> {
    pub config: ModelConfig,
    pub embeddings: Embeddings<T>,
    pub layers: Vec<EncoderLayer<T>>,
    pub pooler: Linear<T>,
    pub mlm: MlmHead<T>,
    pub nsp: Linear<T>,
}

fn linear<T: Scalar>(i: usize, o: usize) -> Linear<T> {
    Linear {
        weight: Tensor::zeros(&[i, o]),
        bias: Tensor::zeros(&[o]),
    }
}

fn layer_norm<T: Scalar>(h: usize) -> LayerNorm<T> {
    LayerNorm {
        gamma: Tensor::zeros(&[h]),
        beta: Tensor::zeros(&[h]),
    }
}

impl<T: Scalar> EncoderState<T> {
    /// All-zero tensors with the shapes implied by `config`.
    pub fn zeros(config: &ModelConfig) -> Self {
        let h = config.hidden_size;
        let f = config.ffn_size;
        Self {
            config: config.clone(),
            embeddings: Embeddings {
                word: Tensor::zeros(&[config.vocab_size, h]),
                position: Tensor::zeros(&[config.max_positions, h]),
                segment: Tensor::zeros(&[config.segment_types, h]),
                norm: layer_norm(h),
            },
            layers: (0..config.num_layers)
                .map(|_| EncoderLayer {
                    query: linear(h, h),
                    key: linear(h, h),
                    value: linear(h, h),
                    attention_output: linear(h, h),
                    attention_norm: layer_norm(h),
                    intermediate: linear(h, f),
                    output: linear(f, h),
                    output_norm: layer_norm(h),
                })
                .collect(),
            pooler: linear(h, h),
            mlm: MlmHead {
                transform: linear(h, h),
                norm: layer_norm(h),
                bias: Tensor::zeros(&[config.vocab_size]),
            },
            nsp: linear(h, 2),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config)
    }

    /// Tensors in canonical order, named as in [`param_shapes`].
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        let e = &self.embeddings;
        out.extend([&e.word, &e.position, &e.segment, &e.norm.gamma, &e.norm.beta]);
        for l in &self.layers {
            out.extend([
                &l.query.weight,
                &l.query.bias,
                &l.key.weight,
                &l.key.bias,
                &l.value.weight,
                &l.value.bias,
                &l.attention_output.weight,
                &l.attention_output.bias,
                &l.attention_norm.gamma,
                &l.attention_norm.beta,
                &l.intermediate.weight,
                &l.intermediate.bias,
                &l.output.weight,
                &l.output.bias,
                &l.output_norm.gamma,
                &l.output_norm.beta,
            ]);
        }
        out.extend([
            &self.pooler.weight,
            &self.pooler.bias,
            &self.mlm.transform.weight,
            &self.mlm.transform.bias,
            &self.mlm.norm.gamma,
            &self.mlm.norm.beta,
            &self.mlm.bias,
            &self.nsp.weight,
            &self.nsp.bias,
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        let e = &mut self.embeddings;
        out.extend([
            &mut e.word,
            &mut e.position,
            &mut e.segment,
            &mut e.norm.gamma,
            &mut e.norm.beta,
        ]);
        for l in &mut self.layers {
            out.extend([
                &mut l.query.weight,
                &mut l.query.bias,
                &mut l.key.weight,
                &mut l.key.bias,
                &mut l.value.weight,
                &mut l.value.bias,
                &mut l.attention_output.weight,
                &mut l.attention_output.bias,
                &mut l.attention_norm.gamma,
                &mut l.attention_norm.beta,
                &mut l.intermediate.weight,
                &mut l.intermediate.bias,
                &mut l.output.weight,
                &mut l.output.bias,
                &mut l.output_norm.gamma,
                &mut l.output_norm.beta,
            ]);
        }
        out.extend([
            &mut self.pooler.weight,
            &mut self.pooler.bias,
            &mut self.mlm.transform.weight,
            &mut self.mlm.transform.bias,
            &mut self.mlm.norm.gamma,
            &mut self.mlm.norm.beta,
            &mut self.mlm.bias,
            &mut self.nsp.weight,
            &mut self.nsp.bias,
        ]);
        out
    }

    pub fn names(&self) -> Vec<String> {
        param_shapes(&self.config).into_iter().map(|(n, _)| n).collect()
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        self.names().into_iter().zip(self.tensors()).collect()
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.names().into_iter().zip(self.tensors_mut()).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.all_finite())
    }

    /// Converts every tensor to another scalar type.
    pub fn cast<U: Scalar>(&self) -> EncoderState<U> {
        let mut out = EncoderState::<U>::zeros(&self.config);
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d = U::of(s.as_f64());
            }
        }
        out
    }

    /// Global L2 norm over all tensors, accumulated in `f64`.
    pub fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.data().iter())
            .map(|&x| {
                let x = x.as_f64();
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: T) {
        for t in self.tensors_mut() {
            t.data_mut().iter_mut().for_each(|x| *x *= factor);
        }
    }
}

/// Standard deviation of a unit normal truncated to [-2, 2].
const TRUNCATED_UNIT_STDDEV: f64 = 0.879_625_661_034_239_8;

/// Draws from a normal truncated at two scale units, with the scale chosen
/// so the draws have standard deviation `stddev`.
fn truncated_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R, stddev: f64) -> T {
    let scale = stddev / TRUNCATED_UNIT_STDDEV;
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 2.0 {
            return T::of(z * scale);
        }
    }
}

/// Weights from a truncated normal with standard deviation
/// `initializer_stddev`, biases 0, layer-norm scales 1.
pub fn init_model<T: Scalar>(config: &ModelConfig, rng_seed: u64) -> Result<EncoderState<T>, ModelError> {
    config.validate()?;
    let mut state = EncoderState::zeros(config);
    let mut stream = rng::stream(&[rng::tag::INIT, rng_seed]);
    let stddev = config.initializer_stddev;
    for (name, tensor) in state.named_tensors_mut() {
        if is_layer_norm(&name) {
            if name.ends_with(".weight") {
                tensor.fill(T::one());
            }
        } else if name.ends_with(".weight") {
            for x in tensor.data_mut() {
                *x = truncated_normal(&mut stream, stddev);
            }
        }
    }
    Ok(state)
}
