use ndarray::ArrayViewMut1;

/// Lower bound applied to the labelled probability inside the log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Numerically stable in-place softmax.
pub fn softmax_in_place(mut logits: ArrayViewMut1<'_, f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    logits.mapv_inplace(|z| {
        let e = (z - max).exp();
        sum += e;
        e
    });
    logits.mapv_inplace(|e| e / sum);
}

/// `-ln(pred[label])` with the probability floored at [`PROBABILITY_FLOOR`].
///
/// Panics if `label` is out of range.
pub fn cross_entropy_loss(pred: &[f64], label: usize) -> f64 {
    -pred[label].max(PROBABILITY_FLOOR).ln()
}

/// Mean cross-entropy over `(prediction, label)` pairs.
pub fn mean_cross_entropy<'a, I>(pairs: I) -> f64
where
    I: IntoIterator<Item = (&'a [f64], usize)>,
{
    let (sum, count) = pairs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), (p, l)| (s + cross_entropy_loss(p, l), n + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
