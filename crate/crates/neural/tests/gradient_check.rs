//! Analytic BPTT gradients against central finite differences.

use aloha_neural::{
    backward_batch, backward_window, forward_batch, forward_window, Architecture, DropoutSampler, LstmModel,
};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;
/// Denominator floor so that coordinates whose true gradient is numerically
/// zero are compared in absolute terms.
const FLOOR: f64 = 1e-6;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

fn loss_of(model: &LstmModel, window: &Array2<f64>, label: usize, mask: Option<&aloha_neural::DropoutMask>) -> f64 {
    let p = forward_window(model, window.view(), mask).unwrap();
    -p[label].ln()
}

fn check_model(seed: u64, with_dropout: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = rng.random_range(3..12);
    let arch = Architecture::new(3, vec![8, 8], classes).unwrap();
    let mut model = LstmModel::init(arch.clone(), &mut rng);
    // spread the parameters so that gates leave their linear regime
    for p in model.params_mut() {
        *p *= 2.0;
    }
    let window = Array2::from_shape_fn((5, 3), |_| rng.random_range(-1.0..1.0));
    let label = rng.random_range(0..classes);
    let mask = with_dropout
        .then(|| DropoutSampler::new(0.3).sample(&arch.layer_sizes, 5, 1, &mut rng))
        .flatten();

    let (_, grads) = backward_window(&model, window.view(), label, mask.as_ref()).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..model.params().len() {
        let orig = model.params()[k];
        model.params_mut()[k] = orig + STEP;
        let up = loss_of(&model, &window, label, mask.as_ref());
        model.params_mut()[k] = orig - STEP;
        let down = loss_of(&model, &window, label, mask.as_ref());
        model.params_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let err = relative_error(grads.values[k], numeric);
        assert!(
            err <= TOLERANCE,
            "seed {seed} param {k}: analytic {} numeric {numeric} rel {err}",
            grads.values[k]
        );
        worst = worst.max(err);
    }
    worst
}

#[test]
fn bptt_matches_finite_differences_on_random_models() {
    let worst = (0..20).map(|seed| check_model(seed, false)).fold(0.0, f64::max);
    println!("max relative error over 20 models: {worst:.3e}");
}

#[test]
fn bptt_matches_finite_differences_with_fixed_dropout_mask() {
    let worst = (100..105).map(|seed| check_model(seed, true)).fold(0.0, f64::max);
    println!("max relative error with dropout: {worst:.3e}");
}

#[test]
fn batch_gradient_is_mean_of_single_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let arch = Architecture::new(3, vec![6, 5], 4).unwrap();
    let model = LstmModel::init(arch, &mut rng);
    let windows: Vec<Array2<f64>> = (0..4)
        .map(|_| Array2::from_shape_fn((6, 3), |_| rng.random_range(0.0..1.0)))
        .collect();
    let labels = [0, 3, 1, 3];
    let mut batch = Array3::zeros((4, 6, 3));
    for (b, w) in windows.iter().enumerate() {
        batch.index_axis_mut(ndarray::Axis(0), b).assign(w);
    }
    let out = forward_batch(&model, batch.view(), None).unwrap();
    let batched = backward_batch(&model, &out, &labels, None).unwrap();
    let mut summed = vec![0.0; model.params().len()];
    for (w, &l) in windows.iter().zip(&labels) {
        let (_, g) = backward_window(&model, w.view(), l, None).unwrap();
        for (s, v) in summed.iter_mut().zip(&g.values) {
            *s += v / 4.0;
        }
    }
    for (a, b) in batched.values.iter().zip(&summed) {
        assert!((a - b).abs() < 1e-13);
    }
}
