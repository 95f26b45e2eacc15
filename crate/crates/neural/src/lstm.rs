//! Batched forward pass and backpropagation through time.
//!
//! Per layer and step, with `z = [x_t, h_{t-1}]`:
//!
//! ```text
//! i = sigmoid(W_i z + b_i)    f = sigmoid(W_f z + b_f)
//! g = tanh(W_g z + b_g)       o = sigmoid(W_o z + b_o)
//! c_t = f * c_{t-1} + i * g   h_t = o * tanh(c_t)
//! ```
//!
//! State starts at zero for every window. Layer outputs are multiplied by the
//! dropout mask before feeding the next layer (or the head); the recurrent
//! path always uses the unmasked `h`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis};

use crate::activation::{sigmoid_slice, tanh_slice};
use crate::dropout::DropoutMask;
use crate::error::NeuralError;
use crate::loss::{cross_entropy_loss, softmax_in_place};
use crate::model::{grad_head_views, grad_layer_views, Gradients, LayerSlot, LstmModel};

struct LayerCache {
    /// `[t, b, input + hidden]` concatenated gate inputs.
    z: Array3<f64>,
    /// `[t, b, 4H]` activated gates.
    act: Array3<f64>,
    c: Array3<f64>,
    tanh_c: Array3<f64>,
    h: Array3<f64>,
}

/// Result of a batched forward pass; keeps the activations needed by
/// [`backward_batch`].
pub struct BatchOutput {
    /// `[batch, classes]` softmax outputs.
    pub probs: Array2<f64>,
    caches: Vec<LayerCache>,
    steps: usize,
}

impl BatchOutput {
    pub fn batch(&self) -> usize {
        self.probs.nrows()
    }

    /// Mean floored cross-entropy of the batch against `labels`.
    pub fn mean_loss(&self, labels: &[usize]) -> f64 {
        let total: f64 = self
            .probs
            .outer_iter()
            .zip(labels)
            .map(|(row, &l)| cross_entropy_loss(row.as_slice().expect("contiguous"), l))
            .sum();
        total / labels.len() as f64
    }
}

fn check_mask(model: &LstmModel, mask: Option<&DropoutMask>, steps: usize, batch: usize) -> Result<(), NeuralError> {
    let Some(mask) = mask else { return Ok(()) };
    let sizes = &model.architecture().layer_sizes;
    if mask.layers.len() != sizes.len() {
        return Err(NeuralError::Shape(format!(
            "dropout mask has {} layers, model has {}",
            mask.layers.len(),
            sizes.len()
        )));
    }
    for (m, &h) in mask.layers.iter().zip(sizes) {
        if m.dim() != (steps, batch, h) {
            return Err(NeuralError::Shape(format!(
                "dropout mask layer shape {:?}, expected {:?}",
                m.dim(),
                (steps, batch, h)
            )));
        }
    }
    Ok(())
}

/// Run a batch of windows, shaped `[batch, steps, input_width]`, through the
/// network.
pub fn forward_batch(
    model: &LstmModel,
    inputs: ArrayView3<'_, f64>,
    mask: Option<&DropoutMask>,
) -> Result<BatchOutput, NeuralError> {
    let arch = model.architecture();
    let (batch, steps, width) = inputs.dim();
    if width != arch.input_width {
        return Err(NeuralError::Shape(format!(
            "input width {width}, model expects {}",
            arch.input_width
        )));
    }
    if batch == 0 || steps == 0 {
        return Err(NeuralError::Shape("empty batch or window".into()));
    }
    if inputs.iter().any(|x| !x.is_finite()) {
        return Err(NeuralError::Shape("non-finite input".into()));
    }
    check_mask(model, mask, steps, batch)?;

    let slots = arch.slots();
    let mut caches: Vec<LayerCache> = Vec::with_capacity(slots.len());
    for (l, slot) in slots.iter().enumerate() {
        let hidden = slot.hidden;
        let mut cache = LayerCache {
            z: Array3::zeros((steps, batch, slot.fan_in())),
            act: Array3::zeros((steps, batch, slot.gates())),
            c: Array3::zeros((steps, batch, hidden)),
            tanh_c: Array3::zeros((steps, batch, hidden)),
            h: Array3::zeros((steps, batch, hidden)),
        };
        // gate inputs from below
        match caches.last() {
            None => {
                for t in 0..steps {
                    cache
                        .z
                        .slice_mut(s![t, .., ..slot.input])
                        .assign(&inputs.slice(s![.., t, ..]));
                }
            }
            Some(below) => {
                let mut x = cache.z.slice_mut(s![.., .., ..slot.input]);
                x.assign(&below.h);
                if let Some(m) = mask {
                    x *= &m.layers[l - 1];
                }
            }
        }
        let w = model.layer_weights(slot);
        let bias = model.layer_bias(slot);
        let bias = bias.as_slice().expect("contiguous");
        for t in 0..steps {
            if t > 0 {
                cache
                    .z
                    .slice_mut(s![t, .., slot.input..])
                    .assign(&cache.h.index_axis(Axis(0), t - 1));
            }
            let mut act_t = cache.act.index_axis_mut(Axis(0), t);
            general_mat_mul(1.0, &cache.z.index_axis(Axis(0), t), &w.t(), 0.0, &mut act_t);
            let (c_prev, mut c_cur) = cache.c.view_mut().split_at(Axis(0), t);
            let mut c_cur = c_cur.index_axis_mut(Axis(0), 0);
            let mut tc_t = cache.tanh_c.index_axis_mut(Axis(0), t);
            let mut h_t = cache.h.index_axis_mut(Axis(0), t);
            for b in 0..batch {
                let a = act_t.row_mut(b).into_slice().expect("contiguous");
                for (x, &bk) in a.iter_mut().zip(bias) {
                    *x += bk;
                }
                let (ifg, o) = a.split_at_mut(3 * hidden);
                let (i_f, g) = ifg.split_at_mut(2 * hidden);
                sigmoid_slice(i_f);
                tanh_slice(g);
                sigmoid_slice(o);
                let (i, f) = i_f.split_at(hidden);
                let c_row = c_cur.row_mut(b).into_slice().expect("contiguous");
                if t > 0 {
                    let prev = c_prev.slice(s![t - 1, b, ..]);
                    let prev = prev.as_slice().expect("contiguous");
                    for j in 0..hidden {
                        c_row[j] = f[j] * prev[j] + i[j] * g[j];
                    }
                } else {
                    for j in 0..hidden {
                        c_row[j] = i[j] * g[j];
                    }
                }
                let tc_row = tc_t.row_mut(b).into_slice().expect("contiguous");
                tc_row.copy_from_slice(c_row);
                tanh_slice(tc_row);
                let h_row = h_t.row_mut(b).into_slice().expect("contiguous");
                for j in 0..hidden {
                    h_row[j] = o[j] * tc_row[j];
                }
            }
        }
        caches.push(cache);
    }

    let top = caches.last().expect("non-empty layers");
    let mut last = top.h.index_axis(Axis(0), steps - 1).to_owned();
    if let Some(m) = mask {
        last *= &m.layers[slots.len() - 1].index_axis(Axis(0), steps - 1);
    }
    let mut probs = Array2::<f64>::zeros((batch, arch.classes));
    general_mat_mul(1.0, &last, &model.head_weights().t(), 0.0, &mut probs);
    probs += &model.head_bias();
    for row in probs.outer_iter_mut() {
        softmax_in_place(row);
    }
    Ok(BatchOutput { probs, caches, steps })
}

/// Gradient of the batch-mean cross-entropy with respect to every parameter.
///
/// `mask` must be the mask used in the forward pass that produced `output`.
pub fn backward_batch(
    model: &LstmModel,
    output: &BatchOutput,
    labels: &[usize],
    mask: Option<&DropoutMask>,
) -> Result<Gradients, NeuralError> {
    let arch = model.architecture();
    let batch = output.batch();
    let steps = output.steps;
    if labels.len() != batch {
        return Err(NeuralError::Shape(format!("{} labels for batch of {batch}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= arch.classes) {
        return Err(NeuralError::Shape(format!("label {bad} out of range 0..{}", arch.classes)));
    }
    check_mask(model, mask, steps, batch)?;
    let slots = arch.slots();
    let top = slots.len() - 1;
    let mut grads = Gradients::zeros(arch);

    let mut dlogits = output.probs.clone();
    for (b, &l) in labels.iter().enumerate() {
        dlogits[[b, l]] -= 1.0;
    }
    dlogits /= batch as f64;

    let mut last = output.caches[top].h.index_axis(Axis(0), steps - 1).to_owned();
    let top_mask = mask.map(|m| m.layers[top].index_axis(Axis(0), steps - 1));
    if let Some(m) = &top_mask {
        last *= m;
    }
    {
        let (mut dw, mut db) = grad_head_views(&mut grads.values, arch);
        general_mat_mul(1.0, &dlogits.t(), &last, 0.0, &mut dw);
        db.assign(&dlogits.sum_axis(Axis(0)));
    }
    let mut d_last = dlogits.dot(&model.head_weights());
    if let Some(m) = &top_mask {
        d_last *= m;
    }

    let mut dh_ext = Array3::<f64>::zeros((steps, batch, slots[top].hidden));
    dh_ext.index_axis_mut(Axis(0), steps - 1).assign(&d_last);

    for l in (0..slots.len()).rev() {
        dh_ext = backward_layer(model, &slots[l], &output.caches[l], dh_ext, &mut grads.values, l > 0)?;
        if l > 0 {
            if let Some(m) = mask {
                dh_ext *= &m.layers[l - 1];
            }
        }
    }
    Ok(grads)
}

/// BPTT through one layer. Returns the gradient with respect to the layer's
/// inputs `[t, b, input]` (empty when `need_input_grad` is false).
fn backward_layer(
    model: &LstmModel,
    slot: &LayerSlot,
    cache: &LayerCache,
    dh_ext: Array3<f64>,
    grads: &mut [f64],
    need_input_grad: bool,
) -> Result<Array3<f64>, NeuralError> {
    let (steps, batch, hidden) = dh_ext.dim();
    let w = model.layer_weights(slot);
    let w_rec: ArrayView2<'_, f64> = w.slice(s![.., slot.input..]);
    let w_in: ArrayView2<'_, f64> = w.slice(s![.., ..slot.input]);
    let (mut dw, mut db) = grad_layer_views(grads, slot);

    let mut dh_next = Array2::<f64>::zeros((batch, hidden));
    let mut dc_next = Array2::<f64>::zeros((batch, hidden));
    let mut dpre = Array2::<f64>::zeros((batch, slot.gates()));
    let mut dx = if need_input_grad {
        Array3::<f64>::zeros((steps, batch, slot.input))
    } else {
        Array3::<f64>::zeros((0, 0, 0))
    };

    for t in (0..steps).rev() {
        let act = cache.act.index_axis(Axis(0), t);
        let tc = cache.tanh_c.index_axis(Axis(0), t);
        let ext = dh_ext.index_axis(Axis(0), t);
        for b in 0..batch {
            let a = act.row(b);
            let a = a.as_slice().expect("contiguous");
            let tc_row = tc.row(b);
            let tc_row = tc_row.as_slice().expect("contiguous");
            let ext_row = ext.row(b);
            let ext_row = ext_row.as_slice().expect("contiguous");
            let dh_row = dh_next.row(b).to_owned();
            let dcn = dc_next.row_mut(b).into_slice().expect("contiguous");
            let dp = dpre.row_mut(b).into_slice().expect("contiguous");
            for j in 0..hidden {
                let (i, f, g, o) = (a[j], a[hidden + j], a[2 * hidden + j], a[3 * hidden + j]);
                let c_prev = if t > 0 { cache.c[[t - 1, b, j]] } else { 0.0 };
                let dh = ext_row[j] + dh_row[j];
                let dc = dh * o * (1.0 - tc_row[j] * tc_row[j]) + dcn[j];
                dp[j] = dc * g * i * (1.0 - i);
                dp[hidden + j] = dc * c_prev * f * (1.0 - f);
                dp[2 * hidden + j] = dc * i * (1.0 - g * g);
                dp[3 * hidden + j] = dh * tc_row[j] * o * (1.0 - o);
                dcn[j] = dc * f;
            }
        }
        general_mat_mul(1.0, &dpre.t(), &cache.z.index_axis(Axis(0), t), 1.0, &mut dw);
        db += &dpre.sum_axis(Axis(0));
        general_mat_mul(1.0, &dpre, &w_rec, 0.0, &mut dh_next);
        if need_input_grad {
            let mut dx_t = dx.index_axis_mut(Axis(0), t);
            general_mat_mul(1.0, &dpre, &w_in, 0.0, &mut dx_t);
        }
    }
    Ok(dx)
}

/// Probability vector for a single `[steps, input_width]` window.
pub fn forward_window(
    model: &LstmModel,
    window: ArrayView2<'_, f64>,
    mask: Option<&DropoutMask>,
) -> Result<Vec<f64>, NeuralError> {
    let inputs = window.insert_axis(Axis(0));
    let out = forward_batch(model, inputs, mask)?;
    Ok(out.probs.row(0).to_vec())
}

/// Loss and gradient for a single labelled window.
pub fn backward_window(
    model: &LstmModel,
    window: ArrayView2<'_, f64>,
    label: usize,
    mask: Option<&DropoutMask>,
) -> Result<(f64, Gradients), NeuralError> {
    let inputs = window.insert_axis(Axis(0));
    let out = forward_batch(model, inputs, mask)?;
    let grads = backward_batch(model, &out, &[label], mask)?;
    Ok((out.mean_loss(&[label]), grads))
}
