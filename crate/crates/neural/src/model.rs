use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::Rng;

use crate::error::NeuralError;

/// Width of one normalized observation `(idle, success, collision) / F`.
pub const INPUT_WIDTH: usize = 3;

/// Shape of a stacked LSTM classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input_width: usize,
    pub layer_sizes: Vec<usize>,
    pub classes: usize,
}

/// Offsets of one LSTM layer inside the flat parameter buffer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerSlot {
    pub input: usize,
    pub hidden: usize,
    /// `4H x (input + H)` gate weights, gate blocks ordered input, forget, candidate, output.
    pub weights: usize,
    pub bias: usize,
}

impl LayerSlot {
    pub fn fan_in(&self) -> usize {
        self.input + self.hidden
    }
    pub fn gates(&self) -> usize {
        4 * self.hidden
    }
}

impl Architecture {
    pub fn new(input_width: usize, layer_sizes: Vec<usize>, classes: usize) -> Result<Self, NeuralError> {
        if input_width == 0 || classes == 0 || layer_sizes.is_empty() || layer_sizes.contains(&0) {
            return Err(NeuralError::Shape(format!(
                "degenerate architecture: input {input_width}, layers {layer_sizes:?}, classes {classes}"
            )));
        }
        Ok(Self { input_width, layer_sizes, classes })
    }

    pub(crate) fn slots(&self) -> Vec<LayerSlot> {
        let mut offset = 0;
        let mut input = self.input_width;
        self.layer_sizes
            .iter()
            .map(|&hidden| {
                let weights = offset;
                let bias = weights + 4 * hidden * (input + hidden);
                offset = bias + 4 * hidden;
                let slot = LayerSlot { input, hidden, weights, bias };
                input = hidden;
                slot
            })
            .collect()
    }

    pub fn top_hidden(&self) -> usize {
        *self.layer_sizes.last().expect("non-empty layers")
    }

    pub(crate) fn head_offset(&self) -> usize {
        let slot = *self.slots().last().expect("non-empty layers");
        slot.bias + slot.gates()
    }

    pub fn param_count(&self) -> usize {
        self.head_offset() + self.classes * self.top_hidden() + self.classes
    }
}

/// All trainable parameters: LSTM gates of every layer plus the softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    arch: Architecture,
    params: Vec<f64>,
}

/// Gradient of the loss with respect to every parameter of a model, using the
/// same flat layout as [`LstmModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

impl Gradients {
    pub fn zeros(arch: &Architecture) -> Self {
        Self { values: vec![0.0; arch.param_count()] }
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn head_bias<'a>(&'a self, arch: &Architecture) -> &'a [f64] {
        let start = arch.head_offset() + arch.classes * arch.top_hidden();
        &self.values[start..start + arch.classes]
    }

    pub fn head_weights<'a>(&'a self, arch: &Architecture) -> &'a [f64] {
        let start = arch.head_offset();
        &self.values[start..start + arch.classes * arch.top_hidden()]
    }

    /// Gradient slice of the gate weights and biases of one LSTM layer.
    pub fn layer<'a>(&'a self, arch: &Architecture, layer: usize) -> &'a [f64] {
        let slot = arch.slots()[layer];
        &self.values[slot.weights..slot.bias + slot.gates()]
    }
}

impl LstmModel {
    /// Model with every parameter equal to zero.
    pub fn zeros(arch: Architecture) -> Self {
        let params = vec![0.0; arch.param_count()];
        Self { arch, params }
    }

    /// Uniform `[-k, k]` initialization with `k = 1/sqrt(fan_in)`; forget-gate
    /// biases start at 1.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let mut model = Self::zeros(arch);
        let slots = model.arch.slots();
        for slot in &slots {
            let k = 1.0 / (slot.fan_in() as f64).sqrt();
            for w in &mut model.params[slot.weights..slot.bias] {
                *w = rng.random_range(-k..k);
            }
            let bias = &mut model.params[slot.bias..slot.bias + slot.gates()];
            bias.fill(0.0);
            bias[slot.hidden..2 * slot.hidden].fill(1.0);
        }
        let head = model.arch.head_offset();
        let k = 1.0 / (model.arch.top_hidden() as f64).sqrt();
        for w in &mut model.params[head..] {
            *w = rng.random_range(-k..k);
        }
        model
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self, NeuralError> {
        if params.len() != arch.param_count() {
            return Err(NeuralError::Shape(format!(
                "expected {} parameters, got {}",
                arch.param_count(),
                params.len()
            )));
        }
        Ok(Self { arch, params })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn classes(&self) -> usize {
        self.arch.classes
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Zero the softmax head so the model outputs the uniform distribution.
    pub fn zero_head(&mut self) {
        let head = self.arch.head_offset();
        self.params[head..].fill(0.0);
    }

    pub(crate) fn layer_weights(&self, slot: &LayerSlot) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((slot.gates(), slot.fan_in()), &self.params[slot.weights..slot.bias])
            .expect("layer layout")
    }

    pub(crate) fn layer_bias(&self, slot: &LayerSlot) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.params[slot.bias..slot.bias + slot.gates()])
    }

    pub(crate) fn head_weights(&self) -> ArrayView2<'_, f64> {
        let start = self.arch.head_offset();
        let len = self.arch.classes * self.arch.top_hidden();
        ArrayView2::from_shape((self.arch.classes, self.arch.top_hidden()), &self.params[start..start + len])
            .expect("head layout")
    }

    pub(crate) fn head_bias(&self) -> ArrayView1<'_, f64> {
        let start = self.arch.head_offset() + self.arch.classes * self.arch.top_hidden();
        ArrayView1::from(&self.params[start..])
    }
}

pub(crate) fn grad_layer_views<'a>(
    grads: &'a mut [f64],
    slot: &LayerSlot,
) -> (ArrayViewMut2<'a, f64>, ArrayViewMut1<'a, f64>) {
    let (w, rest) = grads[slot.weights..slot.bias + slot.gates()].split_at_mut(slot.bias - slot.weights);
    (
        ArrayViewMut2::from_shape((slot.gates(), slot.fan_in()), w).expect("layer layout"),
        ArrayViewMut1::from(rest),
    )
}

pub(crate) fn grad_head_views<'a>(
    grads: &'a mut [f64],
    arch: &Architecture,
) -> (ArrayViewMut2<'a, f64>, ArrayViewMut1<'a, f64>) {
    let start = arch.head_offset();
    let (w, b) = grads[start..].split_at_mut(arch.classes * arch.top_hidden());
    (
        ArrayViewMut2::from_shape((arch.classes, arch.top_hidden()), w).expect("head layout"),
        ArrayViewMut1::from(b),
    )
}
