use alloc::vec;
use alloc::vec::Vec;

use super::CmseLoss;
use crate::math::{self, sigmoid, tanh};
use crate::preprocess::SampleWindow;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Predictions at `t + PH - 1` and `t + PH`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStepPrediction {
    pub prev: f64,
    pub horizon: f64,
}

impl TwoStepPrediction {
    /// Predicted variation `ŷ(t+PH) - ŷ(t+PH-1)`.
    pub fn variation(&self) -> f64 {
        self.horizon - self.prev
    }
}

/// Single-layer LSTM with a scalar linear head shared by the last two steps.
///
/// All parameters live in one flat vector, in this order (which is also the
/// serialization order):
///
/// 1. input weights, `4·units x inputs`, row-major
/// 2. recurrent weights, `4·units x units`, row-major
/// 3. gate biases, `4·units`
/// 4. head weights, `units`
/// 5. head bias, 1
///
/// Gate blocks are stacked input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    units: usize,
    inputs: usize,
    data: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(units: usize, inputs: usize) -> Self {
        let len = Self::len_for(units, inputs);
        Self {
            units,
            inputs,
            data: vec![0.0; len],
        }
    }

    pub fn len_for(units: usize, inputs: usize) -> usize {
        4 * units * inputs + 4 * units * units + 4 * units + units + 1
    }

    pub fn from_flat(units: usize, inputs: usize, data: Vec<f64>) -> Result<Self> {
        let expected = Self::len_for(units, inputs);
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                what: "lstm parameter block",
                left: data.len(),
                right: expected,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lstm parameters"));
        }
        Ok(Self { units, inputs, data })
    }

    /// Weights uniform in `±1/sqrt(units)`, forget-gate bias 1, other biases 0.
    pub fn init(units: usize, inputs: usize, seed: u64) -> Self {
        let mut p = Self::zeros(units, inputs);
        let mut rng = SplitMix64::derive(seed, 0x4c53_544d);
        let bound = 1.0 / math::sqrt(units as f64);
        let (w_in, w_rec, bias, head, _) = p.split_mut();
        for w in w_in.iter_mut().chain(w_rec.iter_mut()).chain(head.iter_mut()) {
            *w = rng.uniform(-bound, bound);
        }
        bias[units..2 * units].fill(1.0);
        p
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn offsets(&self) -> [usize; 5] {
        let g = 4 * self.units;
        let a = g * self.inputs;
        let b = a + g * self.units;
        let c = b + g;
        let d = c + self.units;
        [a, b, c, d, d + 1]
    }

    pub fn w_input(&self) -> &[f64] {
        &self.data[..self.offsets()[0]]
    }

    pub fn w_recurrent(&self) -> &[f64] {
        let o = self.offsets();
        &self.data[o[0]..o[1]]
    }

    pub fn bias(&self) -> &[f64] {
        let o = self.offsets();
        &self.data[o[1]..o[2]]
    }

    pub fn head_weights(&self) -> &[f64] {
        let o = self.offsets();
        &self.data[o[2]..o[3]]
    }

    pub fn head_bias(&self) -> f64 {
        self.data[self.offsets()[3]]
    }

    #[allow(clippy::type_complexity)]
    fn split_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut [f64], &mut f64) {
        let o = self.offsets();
        let (w_in, rest) = self.data.split_at_mut(o[0]);
        let (w_rec, rest) = rest.split_at_mut(o[1] - o[0]);
        let (bias, rest) = rest.split_at_mut(o[2] - o[1]);
        let (head, rest) = rest.split_at_mut(o[3] - o[2]);
        (w_in, w_rec, bias, head, &mut rest[0])
    }

    /// Index ranges of the weight tensors (biases excluded), for L2.
    pub fn weight_ranges(&self) -> [core::ops::Range<usize>; 3] {
        let o = self.offsets();
        [0..o[0], o[0]..o[1], o[2]..o[3]]
    }

    pub fn l2_norm_squared(&self) -> f64 {
        self.weight_ranges()
            .into_iter()
            .map(|r| self.data[r].iter().map(|w| w * w).sum::<f64>())
            .sum()
    }
}

/// Activations kept by the forward pass for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    steps: usize,
    /// Post-nonlinearity gates per step, `4·units` each.
    gates: Vec<f64>,
    /// Cell states per step, `units` each.
    cells: Vec<f64>,
    /// tanh of cell states.
    cell_tanh: Vec<f64>,
    /// Hidden states per step.
    hidden: Vec<f64>,
    z: Vec<f64>,
}

impl ForwardCache {
    fn prepare(&mut self, steps: usize, units: usize) {
        self.steps = steps;
        self.gates.resize(steps * 4 * units, 0.0);
        self.cells.resize(steps * units, 0.0);
        self.cell_tanh.resize(steps * units, 0.0);
        self.hidden.resize(steps * units, 0.0);
        self.z.resize(4 * units, 0.0);
    }

    pub fn hidden(&self, step: usize, units: usize) -> &[f64] {
        &self.hidden[step * units..(step + 1) * units]
    }
}

/// Runs the recurrence over `x` (`steps x inputs`, row-major) from zero state
/// and reads the head at the last two steps.
pub fn lstm_forward(
    params: &LstmParams,
    x: &[f64],
    cache: &mut ForwardCache,
) -> Result<TwoStepPrediction> {
    let u = params.units;
    let n_in = params.inputs;
    if !x.len().is_multiple_of(n_in) || x.len() / n_in < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "lstm input of length {} is not >= 2 steps of {} features",
            x.len(),
            n_in
        )));
    }
    let steps = x.len() / n_in;
    cache.prepare(steps, u);
    let w_in = params.w_input();
    let w_rec = params.w_recurrent();
    let bias = params.bias();

    for t in 0..steps {
        let xt = &x[t * n_in..(t + 1) * n_in];
        let z = &mut cache.z;
        z.copy_from_slice(bias);
        for (r, zr) in z.iter_mut().enumerate() {
            *zr += math::dot(&w_in[r * n_in..(r + 1) * n_in], xt);
        }
        if t > 0 {
            let h_prev = &cache.hidden[(t - 1) * u..t * u];
            for (r, zr) in z.iter_mut().enumerate() {
                *zr += math::dot(&w_rec[r * u..(r + 1) * u], h_prev);
            }
        }
        let gates = &mut cache.gates[t * 4 * u..(t + 1) * 4 * u];
        for k in 0..u {
            gates[k] = sigmoid(z[k]);
            gates[u + k] = sigmoid(z[u + k]);
            gates[2 * u + k] = tanh(z[2 * u + k]);
            gates[3 * u + k] = sigmoid(z[3 * u + k]);
        }
        let (done, cur) = cache.cells.split_at_mut(t * u);
        let c_prev = if t > 0 { &done[(t - 1) * u..] } else { &[][..] };
        let c = &mut cur[..u];
        for k in 0..u {
            let carry = if t > 0 { gates[u + k] * c_prev[k] } else { 0.0 };
            c[k] = carry + gates[k] * gates[2 * u + k];
            let tc = tanh(c[k]);
            cache.cell_tanh[t * u + k] = tc;
            cache.hidden[t * u + k] = gates[3 * u + k] * tc;
        }
    }

    let head = params.head_weights();
    let b = params.head_bias();
    let prev = b + math::dot(head, cache.hidden(steps - 2, u));
    let horizon = b + math::dot(head, cache.hidden(steps - 1, u));
    if !(prev.is_finite() && horizon.is_finite()) {
        return Err(Error::NonFinite("lstm activations"));
    }
    Ok(TwoStepPrediction { prev, horizon })
}

/// Scratch buffers for [`lstm_backward`].
#[derive(Debug, Clone, Default)]
struct BackwardScratch {
    dh: Vec<f64>,
    dh_extra: Vec<f64>,
    dc: Vec<f64>,
    dz: Vec<f64>,
}

/// Accumulates into `grads` the gradient of one sample whose loss has
/// derivatives `d_prev`, `d_horizon` with respect to the two outputs.
fn backward_sample(
    params: &LstmParams,
    x: &[f64],
    cache: &ForwardCache,
    d_prev: f64,
    d_horizon: f64,
    grads: &mut LstmParams,
    scratch: &mut BackwardScratch,
) {
    let u = params.units;
    let n_in = params.inputs;
    let steps = cache.steps;
    let head = params.head_weights();
    let w_rec = params.w_recurrent();

    {
        let (_, _, _, g_head, g_head_b) = grads.split_mut();
        *g_head_b += d_prev + d_horizon;
        for k in 0..u {
            g_head[k] += d_horizon * cache.hidden[(steps - 1) * u + k]
                + d_prev * cache.hidden[(steps - 2) * u + k];
        }
    }

    scratch.dh.clear();
    scratch.dh.extend(head.iter().map(|w| d_horizon * w));
    scratch.dh_extra.clear();
    scratch.dh_extra.extend(head.iter().map(|w| d_prev * w));
    scratch.dc.clear();
    scratch.dc.resize(u, 0.0);
    scratch.dz.resize(4 * u, 0.0);

    let (g_in, g_rec, g_bias, _, _) = grads.split_mut();
    for t in (0..steps).rev() {
        if t == steps - 2 {
            for (a, b) in scratch.dh.iter_mut().zip(&scratch.dh_extra) {
                *a += b;
            }
        }
        let gates = &cache.gates[t * 4 * u..(t + 1) * 4 * u];
        let tc = &cache.cell_tanh[t * u..(t + 1) * u];
        let dz = &mut scratch.dz;
        for k in 0..u {
            let (i, f, g, o) = (gates[k], gates[u + k], gates[2 * u + k], gates[3 * u + k]);
            let dh = scratch.dh[k];
            let d_o = dh * tc[k];
            let dc = scratch.dc[k] + dh * o * (1.0 - tc[k] * tc[k]);
            let c_prev = if t > 0 { cache.cells[(t - 1) * u + k] } else { 0.0 };
            dz[k] = dc * g * i * (1.0 - i);
            dz[u + k] = dc * c_prev * f * (1.0 - f);
            dz[2 * u + k] = dc * i * (1.0 - g * g);
            dz[3 * u + k] = d_o * o * (1.0 - o);
            scratch.dc[k] = dc * f;
        }

        let xt = &x[t * n_in..(t + 1) * n_in];
        for (r, &d) in dz.iter().enumerate() {
            g_bias[r] += d;
            for (g, xv) in g_in[r * n_in..(r + 1) * n_in].iter_mut().zip(xt) {
                *g += d * xv;
            }
        }
        scratch.dh.iter_mut().for_each(|v| *v = 0.0);
        if t > 0 {
            let h_prev = &cache.hidden[(t - 1) * u..t * u];
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &w_rec[r * u..(r + 1) * u];
                let g_row = &mut g_rec[r * u..(r + 1) * u];
                for k in 0..u {
                    g_row[k] += d * h_prev[k];
                    scratch.dh[k] += d * row[k];
                }
            }
        }
    }
}

/// Loss and exact gradient of `cMSE(batch) + l2 · Σ w²` (biases excluded).
///
/// Returns the data term (without the penalty) and the full gradient.
pub fn lstm_backward(
    params: &LstmParams,
    batch: &[&SampleWindow],
    loss: &CmseLoss,
    l2_penalty: f64,
) -> Result<(f64, LstmParams)> {
    let mut grads = LstmParams::zeros(params.units, params.inputs);
    let value = accumulate_gradient(params, batch, loss, l2_penalty, &mut grads, &mut Workspace::default())?;
    Ok((value, grads))
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Workspace {
    cache: ForwardCache,
    scratch: BackwardScratch,
}

pub(crate) fn accumulate_gradient(
    params: &LstmParams,
    batch: &[&SampleWindow],
    loss: &CmseLoss,
    l2_penalty: f64,
    grads: &mut LstmParams,
    ws: &mut Workspace,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("gradient over an empty batch"));
    }
    grads.data.iter_mut().for_each(|g| *g = 0.0);
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for w in batch {
        let p = lstm_forward(params, &w.features, &mut ws.cache)?;
        let target = (w.target_prev, w.target_final);
        total += loss.term(&p, target);
        let (d_prev, d_horizon) = loss.term_gradient(&p, target, scale);
        backward_sample(params, &w.features, &ws.cache, d_prev, d_horizon, grads, &mut ws.scratch);
    }
    if l2_penalty > 0.0 {
        for r in params.weight_ranges() {
            for (g, w) in grads.data[r.clone()].iter_mut().zip(&params.data[r]) {
                *g += 2.0 * l2_penalty * w;
            }
        }
    }
    Ok(total * scale)
}

/// `cMSE(batch) + l2 · Σ w²`, the quantity differentiated by
/// [`lstm_backward`].
pub fn objective(params: &LstmParams, batch: &[&SampleWindow], loss: &CmseLoss, l2_penalty: f64) -> Result<f64> {
    let mut cache = ForwardCache::default();
    let mut preds = Vec::with_capacity(batch.len());
    let mut targets = Vec::with_capacity(batch.len());
    for w in batch {
        preds.push(lstm_forward(params, &w.features, &mut cache)?);
        targets.push((w.target_prev, w.target_final));
    }
    Ok(loss.value(&preds, &targets)? + l2_penalty * params.l2_norm_squared())
}
