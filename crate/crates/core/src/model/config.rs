use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// tanh approximation
    Gelu,
}

/// Encoder hyperparameters. `Default` is the 12-layer, 768-wide base model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub hidden_size: usize,
    pub num_heads: usize,
    pub ffn_size: usize,
    pub vocab_size: usize,
    pub max_positions: usize,
    pub segment_types: usize,
    pub dropout_rate: f64,
    pub activation: Activation,
    pub initializer_stddev: f64,
    pub layer_norm_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_layers: 12,
            hidden_size: 768,
            num_heads: 12,
            ffn_size: 3072,
            vocab_size: 30_000,
            max_positions: 512,
            segment_types: 2,
            dropout_rate: 0.1,
            activation: Activation::Gelu,
            initializer_stddev: 0.02,
            layer_norm_eps: 1e-12,
        }
    }
}

impl ModelConfig {
    pub fn head_size(&self) -> usize {
        self.hidden_size / self.num_heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: String| Err(ModelError::InvalidConfig(m));
        if self.hidden_size == 0 || self.num_heads == 0 {
            return fail("hidden_size and num_heads must be positive".into());
        }
        if !self.hidden_size.is_multiple_of(self.num_heads) {
            return fail(format!(
                "hidden_size {} is not divisible by num_heads {}",
                self.hidden_size, self.num_heads
            ));
        }
        if self.ffn_size == 0 || self.vocab_size == 0 || self.max_positions == 0 || self.segment_types == 0 {
            return fail("ffn_size, vocab_size, max_positions and segment_types must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate {} is outside [0, 1)", self.dropout_rate));
        }
        if !(self.initializer_stddev > 0.0 && self.initializer_stddev.is_finite()) {
            return fail(format!(
                "initializer_stddev {} must be positive",
                self.initializer_stddev
            ));
        }
        if self.layer_norm_eps.is_nan() || self.layer_norm_eps <= 0.0 {
            return fail("layer_norm_eps must be positive".into());
        }
        Ok(())
    }
}

/// Canonical tensor names and shapes. Dense weights are stored `[in, out]`.
pub fn param_shapes(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let h = config.hidden_size;
    let f = config.ffn_size;
    let mut shapes = vec![
        (
            "embeddings.word_embeddings.weight".to_string(),
            vec![config.vocab_size, h],
        ),
        (
            "embeddings.position_embeddings.weight".to_string(),
            vec![config.max_positions, h],
        ),
        (
            "embeddings.token_type_embeddings.weight".to_string(),
            vec![config.segment_types, h],
        ),
        ("embeddings.LayerNorm.weight".to_string(), vec![h]),
        ("embeddings.LayerNorm.bias".to_string(), vec![h]),
    ];
    for l in 0..config.num_layers {
        let p = format!("encoder.layer.{l}");
        for (name, shape) in [
            ("attention.self.query.weight", vec![h, h]),
            ("attention.self.query.bias", vec![h]),
            ("attention.self.key.weight", vec![h, h]),
            ("attention.self.key.bias", vec![h]),
            ("attention.self.value.weight", vec![h, h]),
            ("attention.self.value.bias", vec![h]),
            ("attention.output.dense.weight", vec![h, h]),
            ("attention.output.dense.bias", vec![h]),
            ("attention.output.LayerNorm.weight", vec![h]),
            ("attention.output.LayerNorm.bias", vec![h]),
            ("intermediate.dense.weight", vec![h, f]),
            ("intermediate.dense.bias", vec![f]),
            ("output.dense.weight", vec![f, h]),
            ("output.dense.bias", vec![h]),
            ("output.LayerNorm.weight", vec![h]),
            ("output.LayerNorm.bias", vec![h]),
        ] {
            shapes.push((format!("{p}.{name}"), shape));
        }
    }
    shapes.extend([
        ("pooler.dense.weight".to_string(), vec![h, h]),
        ("pooler.dense.bias".to_string(), vec![h]),
        ("cls.predictions.transform.dense.weight".to_string(), vec![h, h]),
        ("cls.predictions.transform.dense.bias".to_string(), vec![h]),
        ("cls.predictions.transform.LayerNorm.weight".to_string(), vec![h]),
        ("cls.predictions.transform.LayerNorm.bias".to_string(), vec![h]),
        ("cls.predictions.bias".to_string(), vec![config.vocab_size]),
        ("cls.seq_relationship.weight".to_string(), vec![h, 2]),
        ("cls.seq_relationship.bias".to_string(), vec![2]),
    ]);
    shapes
}

/// Number of learnable scalars; the MLM decoder shares the word embedding
/// table and is counted once.
pub fn count_parameters(config: &ModelConfig) -> u64 {
    param_shapes(config)
        .iter()
        .map(|(_, shape)| shape.iter().product::<usize>() as u64)
        .sum()
}

pub fn is_layer_norm(name: &str) -> bool {
    name.contains("LayerNorm")
}

/// Parameters exempt from weight decay: biases and layer-norm scales/shifts.
pub fn is_no_decay(name: &str) -> bool {
    name.ends_with(".bias") || is_layer_norm(name)
}
