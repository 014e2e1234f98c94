//! Minimal feed-forward network with exact reverse-mode gradients.
//!
//! Hidden layers are rectified; the output is either linear (critic) or an
//! affine tanh squash into per-dimension bounds (actor). Everything is
//! plain `f64` so gradients can be checked against central finite
//! differences to tight tolerances.

use rand::Rng;

use super::RlError;

#[derive(Debug, Clone, PartialEq)]
pub enum OutputActivation {
    Linear,
    /// y = low + (high - low) * (tanh(z) + 1) / 2, per dimension.
    BoundedSquash { low: Vec<f64>, high: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], z: &mut Vec<f64>) {
        z.clear();
        for i in 0..self.out_dim {
            let row = &self.w[i * self.in_dim..(i + 1) * self.in_dim];
            let mut acc = self.b[i];
            for (wj, xj) in row.iter().zip(x) {
                acc += wj * xj;
            }
            z.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub output: OutputActivation,
}

/// Per-parameter gradient (or Adam moment) storage, shaped like the net.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in &mut self.layers {
            for g in w.iter_mut().chain(b.iter_mut()) {
                *g *= factor;
            }
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            for (g, o) in w.iter_mut().zip(ow).chain(b.iter_mut().zip(ob)) {
                *g += o;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()))
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Forward activations kept for one backward pass.
pub struct ForwardCache {
    /// Input plus each layer's post-activation output.
    activations: Vec<Vec<f64>>,
    /// Each layer's pre-activation values.
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    /// Raw (pre-squash) values of the final layer.
    pub fn raw_output(&self) -> &[f64] {
        self.pre_activations.last().unwrap()
    }
}

impl Mlp {
    /// Uniform init in +-1/sqrt(fan_in), biases zero.
    pub fn new(sizes: &[usize], output: OutputActivation, rng: &mut impl Rng) -> Result<Self, RlError> {
        if sizes.len() < 2 {
            return Err(RlError::InvalidConfig { reason: "need at least input and output sizes".into() });
        }
        if let OutputActivation::BoundedSquash { low, high } = &output {
            let out = *sizes.last().unwrap();
            if low.len() != out || high.len() != out {
                return Err(RlError::ShapeMismatch);
            }
            if low.iter().zip(high).any(|(l, h)| !(l < h)) {
                return Err(RlError::InvalidConfig { reason: "bounds must satisfy low < high".into() });
            }
        }
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (in_dim, out_dim) = (pair[0], pair[1]);
                let scale = 1.0 / (in_dim as f64).sqrt();
                Layer {
                    in_dim,
                    out_dim,
                    w: (0..in_dim * out_dim)
                        .map(|_| rng.random_range(-scale..scale))
                        .collect(),
                    b: vec![0.0; out_dim],
                }
            })
            .collect();
        Ok(Self { layers, output })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().unwrap().in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.out_dim));
        sizes
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn apply_output(&self, z: &[f64]) -> Vec<f64> {
        match &self.output {
            OutputActivation::Linear => z.to_vec(),
            OutputActivation::BoundedSquash { low, high } => z
                .iter()
                .zip(low.iter().zip(high))
                .map(|(zi, (l, h))| l + (h - l) * (zi.tanh() + 1.0) / 2.0)
                .collect(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, RlError> {
        if x.len() != self.input_dim() {
            return Err(RlError::DimensionMismatch { expected: self.input_dim(), actual: x.len() });
        }
        let mut cur = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut z);
            if li < last {
                cur.clear();
                cur.extend(z.iter().map(|v| v.max(0.0)));
            } else {
                cur = self.apply_output(&z);
            }
        }
        Ok(cur)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache), RlError> {
        if x.len() != self.input_dim() {
            return Err(RlError::DimensionMismatch { expected: self.input_dim(), actual: x.len() });
        }
        let mut activations = vec![x.to_vec()];
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward(activations.last().unwrap(), &mut z);
            let a = if li < last {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                self.apply_output(&z)
            };
            pre_activations.push(z);
            activations.push(a);
        }
        let out = activations.last().unwrap().clone();
        Ok((out, ForwardCache { activations, pre_activations }))
    }

    /// Backpropagate from a gradient w.r.t. the post-activation output.
    /// Returns parameter gradients and the gradient w.r.t. the input.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64]) -> (Gradients, Vec<f64>) {
        let z_out = cache.pre_activations.last().unwrap();
        let grad_raw: Vec<f64> = match &self.output {
            OutputActivation::Linear => grad_output.to_vec(),
            OutputActivation::BoundedSquash { low, high } => grad_output
                .iter()
                .zip(z_out.iter().zip(low.iter().zip(high)))
                .map(|(g, (z, (l, h)))| {
                    let t = z.tanh();
                    g * (h - l) / 2.0 * (1.0 - t * t)
                })
                .collect(),
        };
        self.backward_from_raw(cache, &grad_raw)
    }

    /// Backpropagate from a gradient w.r.t. the final pre-activation
    /// values, skipping the output activation.
    pub fn backward_from_raw(&self, cache: &ForwardCache, grad_raw: &[f64]) -> (Gradients, Vec<f64>) {
        let mut grads = Gradients::zeros_like(self);
        let mut delta = grad_raw.to_vec();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &cache.activations[li];
            let (gw, gb) = &mut grads.layers[li];
            for i in 0..layer.out_dim {
                let d = delta[i];
                gb[i] += d;
                let row = &mut gw[i * layer.in_dim..(i + 1) * layer.in_dim];
                for (g, xj) in row.iter_mut().zip(input) {
                    *g += d * xj;
                }
            }
            // Gradient w.r.t. this layer's input.
            let mut prev = vec![0.0; layer.in_dim];
            for i in 0..layer.out_dim {
                let d = delta[i];
                let row = &layer.w[i * layer.in_dim..(i + 1) * layer.in_dim];
                for (p, wj) in prev.iter_mut().zip(row) {
                    *p += d * wj;
                }
            }
            if li > 0 {
                // Rectifier derivative; zero at exactly zero.
                let z_prev = &cache.pre_activations[li - 1];
                for (p, z) in prev.iter_mut().zip(z_prev) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        (grads, delta)
    }

    /// Mean squared-error loss and its exact parameter gradients over a
    /// batch. Targets are per-sample vectors of the output dimension.
    pub fn squared_loss_gradient(
        &self,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
    ) -> Result<(f64, Gradients), RlError> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(RlError::InvalidConfig { reason: "batch must be non-empty and aligned".into() });
        }
        let n = inputs.len() as f64;
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for (x, y) in inputs.iter().zip(targets) {
            let (out, cache) = self.forward_cached(x)?;
            if out.len() != y.len() {
                return Err(RlError::DimensionMismatch { expected: out.len(), actual: y.len() });
            }
            let mut grad_out = Vec::with_capacity(out.len());
            for (o, t) in out.iter().zip(y) {
                let err = o - t;
                loss += err * err;
                grad_out.push(2.0 * err / n);
            }
            let (g, _) = self.backward(&cache, &grad_out);
            grads.add_assign(&g);
        }
        loss /= n;
        if !loss.is_finite() {
            return Err(RlError::NonFiniteLoss);
        }
        Ok((loss, grads))
    }

    /// Blend parameters toward a source network: theta <- tau*source +
    /// (1-tau)*theta, elementwise.
    pub fn soft_update_from(&mut self, source: &Mlp, tau: f64) -> Result<(), RlError> {
        if self.layer_sizes() != source.layer_sizes() {
            return Err(RlError::ShapeMismatch);
        }
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            for (d, s) in dst.w.iter_mut().zip(&src.w).chain(dst.b.iter_mut().zip(&src.b)) {
                *d = tau * s + (1.0 - tau) * *d;
            }
        }
        Ok(())
    }

    pub fn for_each_param(&self, mut f: impl FnMut(f64)) {
        for l in &self.layers {
            for p in l.w.iter().chain(l.b.iter()) {
                f(*p);
            }
        }
    }

    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for l in &mut self.layers {
            for p in l.w.iter_mut().chain(l.b.iter_mut()) {
                f(p);
            }
        }
    }
}

/// Adam with bias correction; state is flat over the net's parameters in
/// layer order.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, param_count: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<(), RlError> {
        if net.param_count() != self.m.len() {
            return Err(RlError::ShapeMismatch);
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut idx = 0;
        for (layer, (gw, gb)) in net.layers.iter_mut().zip(&grads.layers) {
            for (p, g) in layer
                .w
                .iter_mut()
                .zip(gw.iter())
                .chain(layer.b.iter_mut().zip(gb.iter()))
            {
                let m = &mut self.m[idx];
                let v = &mut self.v[idx];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *p -= self.lr * mhat / (vhat.sqrt() + self.eps);
                idx += 1;
            }
        }
        Ok(())
    }
}
