use crate::error::NeuralError;

/// Supervised-learning hyperparameters.
///
/// The defaults are the published settings: window 20, learning rate 1e-4,
/// dropout 0.2, minibatch 64 and a 1000-sample replay buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    /// Observation window length fed to the stateless LSTM.
    pub window: usize,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub minibatch: usize,
    /// Replay buffer capacity.
    pub buffer_size: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            window: 20,
            learning_rate: 1e-4,
            dropout_rate: 0.2,
            minibatch: 64,
            buffer_size: 1000,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.window < 1 {
            return Err(NeuralError::InvalidHyperParam("window must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NeuralError::InvalidHyperParam(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(NeuralError::InvalidHyperParam(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.minibatch < 1 || self.buffer_size < 1 {
            return Err(NeuralError::InvalidHyperParam(
                "minibatch and buffer_size must be >= 1".into(),
            ));
        }
        if self.minibatch > self.buffer_size {
            return Err(NeuralError::InvalidHyperParam(format!(
                "minibatch ({}) exceeds buffer_size ({})",
                self.minibatch, self.buffer_size
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_table() {
        let hp = HyperParams::default();
        assert_eq!(hp.window, 20);
        assert_eq!(hp.learning_rate, 0.0001);
        assert_eq!(hp.dropout_rate, 0.2);
        assert_eq!(hp.minibatch, 64);
        assert_eq!(hp.buffer_size, 1000);
        hp.validate().unwrap();
    }

    #[test]
    fn rejects_minibatch_larger_than_buffer() {
        let hp = HyperParams { minibatch: 10, buffer_size: 5, ..Default::default() };
        assert!(hp.validate().is_err());
        let hp = HyperParams { dropout_rate: 1.0, ..Default::default() };
        assert!(hp.validate().is_err());
    }
}
