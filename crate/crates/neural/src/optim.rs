use crate::error::NeuralError;
use crate::model::{Gradients, LstmModel};

/// RMSProp settings. Only the learning rate is a published value; decay and
/// epsilon use common defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-4, decay: 0.9, epsilon: 1e-8 }
    }
}

/// Running mean of squared gradients, one accumulator per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: RmsPropConfig,
    pub accumulators: Vec<f64>,
    pub steps: u64,
}

impl OptimizerState {
    pub fn new(config: RmsPropConfig, param_count: usize) -> Result<Self, NeuralError> {
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(NeuralError::InvalidHyperParam(format!(
                "learning_rate must be positive, got {}",
                config.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&config.decay) || config.epsilon < 0.0 {
            return Err(NeuralError::InvalidHyperParam(format!(
                "decay must lie in [0, 1) and epsilon be >= 0 (got {}, {})",
                config.decay, config.epsilon
            )));
        }
        Ok(Self { config, accumulators: vec![0.0; param_count], steps: 0 })
    }

    pub fn for_model(config: RmsPropConfig, model: &LstmModel) -> Result<Self, NeuralError> {
        Self::new(config, model.params().len())
    }

    /// One RMSProp update of `params`:
    ///
    /// `acc <- decay * acc + (1 - decay) * g^2`, `p <- p - lr * g / sqrt(acc + eps)`.
    ///
    /// A non-finite gradient rejects the whole step and leaves both the
    /// parameters and the accumulators untouched.
    pub fn step_params(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NeuralError> {
        if params.len() != grads.len() || params.len() != self.accumulators.len() {
            return Err(NeuralError::Shape(format!(
                "optimizer over {} params, got {} params and {} grads",
                self.accumulators.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NeuralError::NonFiniteGradient { index });
        }
        let RmsPropConfig { learning_rate, decay, epsilon } = self.config;
        for ((p, &g), acc) in params.iter_mut().zip(grads).zip(self.accumulators.iter_mut()) {
            *acc = decay * *acc + (1.0 - decay) * g * g;
            if g != 0.0 {
                *p -= learning_rate * g / (*acc + epsilon).sqrt();
            }
        }
        self.steps += 1;
        Ok(())
    }

    pub fn step(&mut self, model: &mut LstmModel, grads: &Gradients) -> Result<(), NeuralError> {
        self.step_params(model.params_mut(), &grads.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(lr: f64, decay: f64, eps: f64) -> RmsPropConfig {
        RmsPropConfig { learning_rate: lr, decay, epsilon: eps }
    }

    #[test]
    fn one_step_hand_computation() {
        let mut opt = OptimizerState::new(config(0.1, 0.9, 0.0), 1).unwrap();
        let mut p = [0.0];
        opt.step_params(&mut p, &[1.0]).unwrap();
        assert!((opt.accumulators[0] - 0.1).abs() < 1e-15);
        assert!((p[0] + 0.1 / 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_decays_accumulator_only() {
        let mut opt = OptimizerState::new(config(0.1, 0.9, 1e-8), 2).unwrap();
        opt.accumulators = vec![4.0, 1.0];
        let mut p = [1.5, -2.0];
        opt.step_params(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, [1.5, -2.0]);
        assert!((opt.accumulators[0] - 3.6).abs() < 1e-15);
        assert!((opt.accumulators[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_step_converges_to_learning_rate() {
        let lr = 0.01;
        let g = -3.0;
        let mut opt = OptimizerState::new(config(lr, 0.9, 0.0), 1).unwrap();
        let mut p = [0.0];
        let mut last = 0.0;
        for _ in 0..500 {
            let before = p[0];
            opt.step_params(&mut p, &[g]).unwrap();
            last = p[0] - before;
        }
        // accumulator -> g^2, so the step -> -lr * g / |g| = +lr
        assert!((last - lr).abs() < 1e-12, "last step {last}");
    }

    #[test]
    fn non_finite_gradient_is_rejected_without_mutation() {
        let mut opt = OptimizerState::new(config(0.1, 0.9, 1e-8), 2).unwrap();
        let mut p = [1.0, 2.0];
        let err = opt.step_params(&mut p, &[0.5, f64::NAN]).unwrap_err();
        assert!(matches!(err, NeuralError::NonFiniteGradient { index: 1 }));
        assert_eq!(p, [1.0, 2.0]);
        assert_eq!(opt.accumulators, vec![0.0, 0.0]);
        assert_eq!(opt.steps, 0);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(OptimizerState::new(config(0.0, 0.9, 0.0), 1).is_err());
        assert!(OptimizerState::new(config(0.1, 1.0, 0.0), 1).is_err());
    }
}
