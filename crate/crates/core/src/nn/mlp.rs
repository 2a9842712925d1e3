//! Fully connected regressor: ReLU hidden layers, identity output.
//!
//! Parameters live in one flat vector, layer by layer, each layer's
//! row-major `inputs x outputs` weight matrix followed by its bias vector,
//! so `z[j] = b[j] + sum_i w[i][j] a[i]`.
//! The loss is the mean over samples of the mean squared error over
//! outputs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Offset of the weight matrix in the flat parameter vector.
    pub offset: usize,
}

impl Layer {
    pub fn weight_count(&self) -> usize {
        self.inputs * self.outputs
    }

    pub fn bias_offset(&self) -> usize {
        self.offset + self.weight_count()
    }

    pub fn end(&self) -> usize {
        self.bias_offset() + self.outputs
    }
}

/// Flat parameter gradient in the same layout as [`Mlp::parameters`].
pub type Gradients = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

fn layout(sizes: &[usize]) -> Result<(Vec<Layer>, usize), NnError> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(NnError::InvalidArchitecture(sizes.to_vec()));
    }
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    let mut offset = 0;
    for w in sizes.windows(2) {
        let l = Layer { inputs: w[0], outputs: w[1], offset };
        offset = l.end();
        layers.push(l);
    }
    Ok((layers, offset))
}

impl Mlp {
    /// He-normal weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self, NnError> {
        let (layers, n) = layout(sizes)?;
        let mut params = vec![0.0; n];
        for l in &layers {
            let std = (2.0 / l.inputs as f64).sqrt();
            for w in &mut params[l.offset..l.bias_offset()] {
                *w = std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
            }
        }
        Ok(Mlp { sizes: sizes.to_vec(), layers, params })
    }

    pub fn from_parameters(sizes: &[usize], params: Vec<f64>) -> Result<Self, NnError> {
        let (layers, n) = layout(sizes)?;
        if params.len() != n {
            return Err(NnError::InvalidArchitecture(sizes.to_vec()));
        }
        Ok(Mlp { sizes: sizes.to_vec(), layers, params })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn max_width(&self) -> usize {
        *self.sizes.iter().max().expect("non-empty")
    }

    fn affine(&self, l: &Layer, input: &[f64], out: &mut [f64]) {
        let w = &self.params[l.offset..l.bias_offset()];
        let b = &self.params[l.bias_offset()..l.end()];
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx2") {
                // SAFETY: the CPU supports AVX2, checked just above.
                return unsafe { affine_avx2(w, b, input, out) };
            }
        }
        affine_kernel(w, b, input, out)
    }

    /// Forward pass. Panics if `x` has the wrong length.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        self.forward_into(x, &mut out);
        out
    }

    /// Forward pass writing into `out`; allocation free for layers up to
    /// 64 wide.
    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.input_dim(), "input dimension");
        assert_eq!(out.len(), self.output_dim(), "output dimension");
        const STACK: usize = 64;
        let width = self.max_width();
        let (mut sa, mut sz) = ([0.0; STACK], [0.0; STACK]);
        let (mut ha, mut hz);
        let (mut a, mut z): (&mut [f64], &mut [f64]) = if width <= STACK {
            (&mut sa[..], &mut sz[..])
        } else {
            ha = vec![0.0; width];
            hz = vec![0.0; width];
            (&mut ha[..], &mut hz[..])
        };
        a[..x.len()].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            self.affine(l, &a[..l.inputs], &mut z[..l.outputs]);
            if i < last {
                for v in &mut z[..l.outputs] {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut a, &mut z);
        }
        out.copy_from_slice(&a[..out.len()]);
    }

    /// Adds `scale * d(loss_i)/d(params)` for one sample into `grad`, where
    /// `loss_i` is the sample's mean squared error over outputs. Returns the
    /// sample's summed squared error.
    pub fn accumulate_gradient(&self, x: &[f64], y: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let n_layers = self.layers.len();
        // acts[0] = input, acts[k] = output of layer k-1 (post activation)
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; l.outputs];
            self.affine(l, &acts[i], &mut z);
            if i + 1 < n_layers {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts.push(z);
        }
        let out = &acts[n_layers];
        let n_out = out.len() as f64;
        let mut sq = 0.0;
        let mut delta: Vec<f64> = out
            .iter()
            .zip(y)
            .map(|(o, t)| {
                let e = o - t;
                sq += e * e;
                scale * 2.0 * e / n_out
            })
            .collect();
        for i in (0..n_layers).rev() {
            let l = &self.layers[i];
            let input = &acts[i];
            let (gw, gb) = grad[l.offset..l.end()].split_at_mut(l.weight_count());
            for (g, d) in gb.iter_mut().zip(&delta) {
                *g += d;
            }
            for (row, xi) in gw.chunks_exact_mut(l.outputs).zip(input) {
                for (g, d) in row.iter_mut().zip(&delta) {
                    *g += d * xi;
                }
            }
            if i == 0 {
                break;
            }
            let w = &self.params[l.offset..l.bias_offset()];
            let mut prev: Vec<f64> = w
                .chunks_exact(l.outputs)
                .map(|row| row.iter().zip(&delta).map(|(wij, d)| wij * d).sum())
                .collect();
            // ReLU derivative, taken as 0 at the kink
            for (p, a) in prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
        sq
    }

    /// Mean over samples of the per-sample mean squared error. Inputs and
    /// labels are flat row-major matrices.
    pub fn mse(&self, inputs: &[f64], labels: &[f64]) -> f64 {
        let (d_in, d_out) = (self.input_dim(), self.output_dim());
        let n = inputs.len() / d_in;
        if n == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for (x, y) in inputs.chunks_exact(d_in).zip(labels.chunks_exact(d_out)) {
            let out = self.forward(x);
            total += out.iter().zip(y).map(|(o, t)| (o - t) * (o - t)).sum::<f64>() / d_out as f64;
        }
        total / n as f64
    }

    /// MSE and its exact parameter gradient over the given samples.
    pub fn loss_and_gradient(&self, inputs: &[f64], labels: &[f64]) -> (f64, Gradients) {
        let (d_in, d_out) = (self.input_dim(), self.output_dim());
        let n = inputs.len() / d_in;
        let mut grad = vec![0.0; self.params.len()];
        if n == 0 {
            return (0.0, grad);
        }
        let scale = 1.0 / n as f64;
        let mut sq = 0.0;
        for (x, y) in inputs.chunks_exact(d_in).zip(labels.chunks_exact(d_out)) {
            sq += self.accumulate_gradient(x, y, scale, &mut grad);
        }
        (sq / (n * d_out) as f64, grad)
    }
}

/// `out = b + W^T input` with `W` stored input-major. Blocks of outputs
/// stay in registers; each output still sums its bias, then the inputs in
/// order, so every instruction set gives the same bits (no fused
/// multiply-add).
#[inline(always)]
fn affine_kernel(w: &[f64], b: &[f64], input: &[f64], out: &mut [f64]) {
    let n = out.len();
    const BLOCK: usize = 8;
    let mut j = 0;
    while j + BLOCK <= n {
        let mut acc: [f64; BLOCK] = b[j..j + BLOCK].try_into().expect("block");
        for (row, &xi) in w.chunks_exact(n).zip(input) {
            let r: &[f64; BLOCK] = row[j..j + BLOCK].try_into().expect("block");
            for k in 0..BLOCK {
                acc[k] += r[k] * xi;
            }
        }
        out[j..j + BLOCK].copy_from_slice(&acc);
        j += BLOCK;
    }
    for j in j..n {
        let mut acc = b[j];
        for (row, &xi) in w.chunks_exact(n).zip(input) {
            acc += row[j] * xi;
        }
        out[j] = acc;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn affine_avx2(w: &[f64], b: &[f64], input: &[f64], out: &mut [f64]) {
    affine_kernel(w, b, input, out)
}
