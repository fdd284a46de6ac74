use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hidden layer sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub trunk: [usize; 2],
    pub stream: usize,
    pub layer_norm_eps: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { trunk: [256, 256], stream: 128, layer_norm_eps: 1e-5 }
    }
}

/// A named parameter array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    /// Subject to weight decay.
    pub decay: bool,
}

// Parameter slots.
const L1W: usize = 0;
const L1B: usize = 1;
const N1G: usize = 2;
const N1B: usize = 3;
const L2W: usize = 4;
const L2B: usize = 5;
const N2G: usize = 6;
const N2B: usize = 7;
const V1W: usize = 8;
const V1B: usize = 9;
const V2W: usize = 10;
const V2B: usize = 11;
const A1W: usize = 12;
const A1B: usize = 13;
const A2W: usize = 14;
const A2B: usize = 15;

/// Dueling Q-network: `trunk -> (value, advantage) -> V + A - mean(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    input_dim: usize,
    n_actions: usize,
    cfg: NetworkConfig,
    params: Vec<Param>,
}

/// Activations kept for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    batch: usize,
    x: Vec<f64>,
    xhat1: Vec<f64>,
    inv1: Vec<f64>,
    h1: Vec<f64>,
    xhat2: Vec<f64>,
    inv2: Vec<f64>,
    h2: Vec<f64>,
    v1: Vec<f64>,
    a1: Vec<f64>,
    /// Value stream output per sample.
    pub value: Vec<f64>,
    /// Raw advantage outputs, `batch x n_actions`.
    pub advantage: Vec<f64>,
    /// Q-values, `batch x n_actions`.
    pub q: Vec<f64>,
}

/// Orthogonal `rows x cols` matrix with orthonormal rows or columns.
fn orthogonal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    let g = DMatrix::from_fn(tall, short, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..short {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[i * cols + j] = if rows >= cols { q[(i, j)] } else { q[(j, i)] };
        }
    }
    out
}

/// `y[b, o] = sum_i x[b, i] w[o, i] + bias[o]`.
fn affine(x: &[f64], w: &[f64], bias: &[f64], batch: usize, n_in: usize, n_out: usize, y: &mut Vec<f64>) {
    y.clear();
    for _ in 0..batch {
        y.extend_from_slice(bias);
    }
    unsafe {
        matrixmultiply::dgemm(
            batch,
            n_in,
            n_out,
            1.0,
            x.as_ptr(),
            n_in as isize,
            1,
            w.as_ptr(),
            1,
            n_in as isize,
            1.0,
            y.as_mut_ptr(),
            n_out as isize,
            1,
        );
    }
}

/// Accumulates `dw += dy^T x`, `db += sum_b dy`, and optionally writes `dx = dy w`.
#[allow(clippy::too_many_arguments)]
fn affine_backward(
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    batch: usize,
    n_in: usize,
    n_out: usize,
    dw: &mut [f64],
    db: &mut [f64],
    dx: Option<&mut Vec<f64>>,
) {
    unsafe {
        matrixmultiply::dgemm(
            n_out,
            batch,
            n_in,
            1.0,
            dy.as_ptr(),
            1,
            n_out as isize,
            x.as_ptr(),
            n_in as isize,
            1,
            1.0,
            dw.as_mut_ptr(),
            n_in as isize,
            1,
        );
    }
    for row in dy.chunks_exact(n_out) {
        for (d, g) in db.iter_mut().zip(row) {
            *d += g;
        }
    }
    if let Some(dx) = dx {
        dx.clear();
        dx.resize(batch * n_in, 0.0);
        unsafe {
            matrixmultiply::dgemm(
                batch,
                n_out,
                n_in,
                1.0,
                dy.as_ptr(),
                n_out as isize,
                1,
                w.as_ptr(),
                n_in as isize,
                1,
                0.0,
                dx.as_mut_ptr(),
                n_in as isize,
                1,
            );
        }
    }
}

/// Row-wise normalization, returning `xhat` and `1/sqrt(var + eps)` per row.
pub fn layer_norm_rows(z: &[f64], width: usize, eps: f64, xhat: &mut Vec<f64>, inv: &mut Vec<f64>) {
    xhat.clear();
    inv.clear();
    for row in z.chunks_exact(width) {
        let mean = row.iter().sum::<f64>() / width as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / width as f64;
        let s = 1.0 / (var + eps).sqrt();
        inv.push(s);
        xhat.extend(row.iter().map(|v| (v - mean) * s));
    }
}

fn scale_shift_relu(xhat: &[f64], gain: &[f64], offset: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let w = gain.len();
    out.extend(xhat.iter().enumerate().map(|(i, v)| (v * gain[i % w] + offset[i % w]).max(0.0)));
}

/// Backward through `relu(gain * xhat + offset)` and the normalization.
#[allow(clippy::too_many_arguments)]
fn norm_relu_backward(
    dh: &[f64],
    h: &[f64],
    xhat: &[f64],
    inv: &[f64],
    gain: &[f64],
    dgain: &mut [f64],
    doffset: &mut [f64],
    dz: &mut Vec<f64>,
) {
    let w = gain.len();
    dz.clear();
    let mut dxhat = vec![0.0; w];
    for (b, s) in inv.iter().enumerate() {
        let off = b * w;
        for c in 0..w {
            let g = if h[off + c] > 0.0 { dh[off + c] } else { 0.0 };
            dgain[c] += g * xhat[off + c];
            doffset[c] += g;
            dxhat[c] = g * gain[c];
        }
        let m1 = dxhat.iter().sum::<f64>() / w as f64;
        let m2 = dxhat.iter().zip(&xhat[off..off + w]).map(|(a, x)| a * x).sum::<f64>() / w as f64;
        dz.extend((0..w).map(|c| s * (dxhat[c] - m1 - xhat[off + c] * m2)));
    }
}

impl QNetwork {
    /// Orthogonal weights, zero biases, unit gains and zero offsets.
    pub fn new(input_dim: usize, n_actions: usize, cfg: NetworkConfig, seed: u64) -> Result<Self> {
        if input_dim == 0 || n_actions == 0 || cfg.trunk.contains(&0) || cfg.stream == 0 {
            return Err(Error::config("network", "all layer sizes must be positive"));
        }
        if !(cfg.layer_norm_eps > 0.0) {
            return Err(Error::config("layer_norm_eps", "must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [t1, t2] = cfg.trunk;
        let s = cfg.stream;
        let mut params = Vec::with_capacity(16);
        let mut push = |name: &str, shape: Vec<usize>, data: Vec<f64>, decay: bool| {
            params.push(Param { name: name.into(), shape, data, decay })
        };
        let mut weight =
            |name: &str, rows: usize, cols: usize, push: &mut dyn FnMut(&str, Vec<usize>, Vec<f64>, bool)| {
                let w = orthogonal(rows, cols, &mut rng);
                push(name, vec![rows, cols], w, true);
            };
        weight("trunk.0.weight", t1, input_dim, &mut push);
        push("trunk.0.bias", vec![t1], vec![0.0; t1], false);
        push("trunk.0.norm.gain", vec![t1], vec![1.0; t1], false);
        push("trunk.0.norm.offset", vec![t1], vec![0.0; t1], false);
        weight("trunk.1.weight", t2, t1, &mut push);
        push("trunk.1.bias", vec![t2], vec![0.0; t2], false);
        push("trunk.1.norm.gain", vec![t2], vec![1.0; t2], false);
        push("trunk.1.norm.offset", vec![t2], vec![0.0; t2], false);
        weight("value.0.weight", s, t2, &mut push);
        push("value.0.bias", vec![s], vec![0.0; s], false);
        weight("value.1.weight", 1, s, &mut push);
        push("value.1.bias", vec![1], vec![0.0], false);
        weight("advantage.0.weight", s, t2, &mut push);
        push("advantage.0.bias", vec![s], vec![0.0; s], false);
        weight("advantage.1.weight", n_actions, s, &mut push);
        push("advantage.1.bias", vec![n_actions], vec![0.0; n_actions], false);
        Ok(QNetwork { input_dim, n_actions, cfg, params })
    }

    /// Rebuilds a network from stored arrays, checking every shape.
    pub fn from_params(input_dim: usize, n_actions: usize, cfg: NetworkConfig, params: Vec<Param>) -> Result<Self> {
        let reference = QNetwork::new(input_dim, n_actions, cfg, 0)?;
        if reference.params.len() != params.len() {
            return Err(Error::Checkpoint("parameter count mismatch".into()));
        }
        for (a, b) in reference.params.iter().zip(&params) {
            if a.name != b.name || a.shape != b.shape || b.data.len() != a.data.len() {
                return Err(Error::Checkpoint(format!("parameter `{}` does not match", b.name)));
            }
        }
        Ok(QNetwork { input_dim, n_actions, cfg, params })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    /// Zero arrays shaped like the parameters.
    pub fn zeros_like(&self) -> Vec<Vec<f64>> {
        self.params.iter().map(|p| vec![0.0; p.data.len()]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.data.iter().all(|v| v.is_finite()))
    }

    fn p(&self, slot: usize) -> &[f64] {
        &self.params[slot].data
    }

    /// Batched forward pass over `batch` row-major inputs.
    pub fn forward_batch(&self, x: &[f64], batch: usize, cache: &mut ForwardCache) -> Result<()> {
        if x.len() != batch * self.input_dim {
            return Err(Error::Dimension(format!(
                "input of length {} for batch {batch} x {}",
                x.len(),
                self.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        let [t1, t2] = self.cfg.trunk;
        let s = self.cfg.stream;
        let n = self.n_actions;
        let eps = self.cfg.layer_norm_eps;
        cache.batch = batch;
        cache.x.clear();
        cache.x.extend_from_slice(x);
        let mut z = Vec::new();
        affine(x, self.p(L1W), self.p(L1B), batch, self.input_dim, t1, &mut z);
        layer_norm_rows(&z, t1, eps, &mut cache.xhat1, &mut cache.inv1);
        scale_shift_relu(&cache.xhat1, self.p(N1G), self.p(N1B), &mut cache.h1);
        affine(&cache.h1, self.p(L2W), self.p(L2B), batch, t1, t2, &mut z);
        layer_norm_rows(&z, t2, eps, &mut cache.xhat2, &mut cache.inv2);
        scale_shift_relu(&cache.xhat2, self.p(N2G), self.p(N2B), &mut cache.h2);

        affine(&cache.h2, self.p(V1W), self.p(V1B), batch, t2, s, &mut cache.v1);
        cache.v1.iter_mut().for_each(|v| *v = v.max(0.0));
        affine(&cache.v1, self.p(V2W), self.p(V2B), batch, s, 1, &mut cache.value);
        affine(&cache.h2, self.p(A1W), self.p(A1B), batch, t2, s, &mut cache.a1);
        cache.a1.iter_mut().for_each(|v| *v = v.max(0.0));
        affine(&cache.a1, self.p(A2W), self.p(A2B), batch, s, n, &mut cache.advantage);

        cache.q.clear();
        for (b, adv) in cache.advantage.chunks_exact(n).enumerate() {
            let mean = adv.iter().sum::<f64>() / n as f64;
            let v = cache.value[b];
            cache.q.extend(adv.iter().map(|a| v + a - mean));
        }
        Ok(())
    }

    /// Q-values for one observation.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = ForwardCache::default();
        self.forward_batch(x, 1, &mut cache)?;
        Ok(cache.q)
    }

    /// Accumulates parameter gradients of `sum_{b,a} dq[b,a] * Q[b,a]` into `grads`.
    pub fn backward(&self, cache: &ForwardCache, dq: &[f64], grads: &mut [Vec<f64>]) {
        let batch = cache.batch;
        let [t1, t2] = self.cfg.trunk;
        let s = self.cfg.stream;
        let n = self.n_actions;
        debug_assert_eq!(dq.len(), batch * n);
        let mut dv = Vec::with_capacity(batch);
        let mut da = Vec::with_capacity(batch * n);
        for row in dq.chunks_exact(n) {
            let sum: f64 = row.iter().sum();
            dv.push(sum);
            da.extend(row.iter().map(|g| g - sum / n as f64));
        }
        let (g_lo, g_hi) = grads.split_at_mut(A2W);
        let (g_a2w, g_a2b) = g_hi.split_at_mut(1);
        let mut d_a1 = Vec::new();
        affine_backward(&cache.a1, self.p(A2W), &da, batch, s, n, &mut g_a2w[0], &mut g_a2b[0], Some(&mut d_a1));
        for (d, a) in d_a1.iter_mut().zip(&cache.a1) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        let mut dh2 = Vec::new();
        {
            let (a, b) = g_lo.split_at_mut(A1B);
            affine_backward(&cache.h2, self.p(A1W), &d_a1, batch, t2, s, &mut a[A1W], &mut b[0], Some(&mut dh2));
        }
        let mut d_v1 = Vec::new();
        {
            let (a, b) = g_lo.split_at_mut(V2B);
            affine_backward(&cache.v1, self.p(V2W), &dv, batch, s, 1, &mut a[V2W], &mut b[0], Some(&mut d_v1));
        }
        for (d, a) in d_v1.iter_mut().zip(&cache.v1) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        let mut dh2_v = Vec::new();
        {
            let (a, b) = g_lo.split_at_mut(V1B);
            affine_backward(&cache.h2, self.p(V1W), &d_v1, batch, t2, s, &mut a[V1W], &mut b[0], Some(&mut dh2_v));
        }
        for (d, e) in dh2.iter_mut().zip(&dh2_v) {
            *d += e;
        }
        let mut dz2 = Vec::new();
        {
            let (a, b) = g_lo.split_at_mut(N2B);
            norm_relu_backward(
                &dh2,
                &cache.h2,
                &cache.xhat2,
                &cache.inv2,
                self.p(N2G),
                &mut a[N2G],
                &mut b[0],
                &mut dz2,
            );
        }
        let mut dh1 = Vec::new();
        {
            let (a, b) = g_lo.split_at_mut(L2B);
            affine_backward(&cache.h1, self.p(L2W), &dz2, batch, t1, t2, &mut a[L2W], &mut b[0], Some(&mut dh1));
        }
        let mut dz1 = Vec::new();
        {
            let (a, b) = g_lo.split_at_mut(N1B);
            norm_relu_backward(
                &dh1,
                &cache.h1,
                &cache.xhat1,
                &cache.inv1,
                self.p(N1G),
                &mut a[N1G],
                &mut b[0],
                &mut dz1,
            );
        }
        {
            let (a, b) = g_lo.split_at_mut(L1B);
            affine_backward(&cache.x, self.p(L1W), &dz1, batch, self.input_dim, t1, &mut a[L1W], &mut b[0], None);
        }
    }

    /// Copies every parameter from `other`.
    pub fn copy_from(&mut self, other: &QNetwork) -> Result<()> {
        if self.input_dim != other.input_dim
            || self.n_actions != other.n_actions
            || self.params.iter().zip(&other.params).any(|(a, b)| a.shape != b.shape)
        {
            return Err(Error::Dimension("network shapes differ".into()));
        }
        for (a, b) in self.params.iter_mut().zip(&other.params) {
            a.data.copy_from_slice(&b.data);
        }
        self.cfg = other.cfg;
        Ok(())
    }
}

/// Makes `target` a bitwise copy of `online`.
pub fn sync_target(online: &QNetwork, target: &mut QNetwork) -> Result<()> {
    target.copy_from(online)
}
