use ndarray::Array3;
use rand::Rng;

/// Multiplicative masks for the outputs of every LSTM layer, indexed
/// `[time, batch, unit]`. Entries are `0` or `1 / (1 - rate)` when sampled,
/// but any finite values are accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub layers: Vec<Array3<f64>>,
}

impl DropoutMask {
    pub fn ones(layer_sizes: &[usize], steps: usize, batch: usize) -> Self {
        Self {
            layers: layer_sizes.iter().map(|&h| Array3::ones((steps, batch, h))).collect(),
        }
    }
}

/// Inverted-dropout mask generator.
#[derive(Debug, Clone, Copy)]
pub struct DropoutSampler {
    rate: f64,
}

impl DropoutSampler {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must lie in [0, 1)");
        Self { rate }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Sample a training mask, or `None` when the rate is zero (identity).
    pub fn sample<R: Rng + ?Sized>(
        &self,
        layer_sizes: &[usize],
        steps: usize,
        batch: usize,
        rng: &mut R,
    ) -> Option<DropoutMask> {
        if self.rate == 0.0 {
            return None;
        }
        let keep = 1.0 - self.rate;
        let scale = 1.0 / keep;
        let layers = layer_sizes
            .iter()
            .map(|&h| Array3::from_shape_fn((steps, batch, h), |_| if rng.random_bool(keep) { scale } else { 0.0 }))
            .collect();
        Some(DropoutMask { layers })
    }
}
