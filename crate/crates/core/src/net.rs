//! Feedforward policy/value networks with analytic gradients, an
//! adaptive-moment optimizer, finite-difference gradient checking, and a
//! binary checkpoint format.
//!
//! All math is f64 so trajectories and updates are deterministic at desk
//! scale.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Network shape: a fixed two-layer ReLU trunk feeding independent
/// categorical heads and/or a scalar value head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden: [usize; 2],
    pub heads: Vec<usize>,
    pub value_head: bool,
}

impl NetSpec {
    pub fn policy(input_dim: usize, heads: Vec<usize>) -> Self {
        Self {
            input_dim,
            hidden: [128, 128],
            heads,
            value_head: false,
        }
    }

    pub fn value(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: [128, 128],
            heads: Vec::new(),
            value_head: true,
        }
    }
}

/// Head sizes of the attacker's multi-branched action space, in sampling
/// order: spawn gate, lane, health, damage, speed, range, regen, leech,
/// phys def, magic def, phys pen, magic pen, damage type.
pub fn attacker_head_sizes(lanes: usize) -> Vec<usize> {
    vec![2, lanes.max(2), 15, 5, 5, 25, 4, 6, 6, 6, 6, 6, 2]
}

/// The defender policy has a single 6-way head.
pub const DEFENDER_HEAD_SIZES: [usize; 1] = [6];

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Weight matrix, `out x in`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn zeros(out: usize, input: usize) -> Self {
        Self {
            w: Array2::zeros((out, input)),
            b: Array1::zeros(out),
        }
    }
}

/// One MLP: shared trunk plus per-head output layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetSpec,
    pub trunk: Vec<Dense>,
    pub heads: Vec<Dense>,
    pub value: Option<Dense>,
}

/// Orthonormalizes the rows of a random Gaussian matrix (modified
/// Gram-Schmidt), then scales by `gain`. When rows exceed columns the
/// surplus rows stay Gaussian with matched norm.
fn orthogonal_init(rng: &mut ChaCha8Rng, out: usize, input: usize, gain: f64) -> Array2<f64> {
    let mut w = Array2::from_shape_fn((out, input), |_| {
        // Box-Muller from two uniforms keeps us off rand_distr.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    let rank = out.min(input);
    for i in 0..rank {
        for j in 0..i {
            let row_j = w.row(j).to_owned();
            let dot = w.row(i).dot(&row_j);
            w.row_mut(i).zip_mut_with(&row_j, |x, &y| *x -= dot * y);
        }
        let norm = w.row(i).dot(&w.row(i)).sqrt();
        if norm > 1e-12 {
            w.row_mut(i).mapv_inplace(|x| x / norm);
        }
    }
    for i in rank..out {
        let norm = w.row(i).dot(&w.row(i)).sqrt();
        if norm > 1e-12 {
            w.row_mut(i).mapv_inplace(|x| x / norm);
        }
    }
    w.mapv_inplace(|x| x * gain);
    w
}

impl Network {
    /// Random initialization: orthogonal trunk with ReLU gain, output heads
    /// scaled down so initial policies are near-uniform.
    pub fn init(spec: NetSpec, rng: &mut ChaCha8Rng) -> Self {
        let relu_gain = 2.0_f64.sqrt();
        let dims = [spec.input_dim, spec.hidden[0], spec.hidden[1]];
        let trunk = (0..2)
            .map(|i| Dense {
                w: orthogonal_init(rng, dims[i + 1], dims[i], relu_gain),
                b: Array1::zeros(dims[i + 1]),
            })
            .collect();
        let heads = spec
            .heads
            .iter()
            .map(|&size| Dense {
                w: orthogonal_init(rng, size, spec.hidden[1], 0.01),
                b: Array1::zeros(size),
            })
            .collect();
        let value = spec.value_head.then(|| Dense {
            w: orthogonal_init(rng, 1, spec.hidden[1], 1.0),
            b: Array1::zeros(1),
        });
        Self { spec, trunk, heads, value }
    }

    /// All-zero parameters; useful as a reference point in tests.
    pub fn zeros(spec: NetSpec) -> Self {
        let trunk = vec![
            Dense::zeros(spec.hidden[0], spec.input_dim),
            Dense::zeros(spec.hidden[1], spec.hidden[0]),
        ];
        let heads = spec.heads.iter().map(|&s| Dense::zeros(s, spec.hidden[1])).collect();
        let value = spec.value_head.then(|| Dense::zeros(1, spec.hidden[1]));
        Self { spec, trunk, heads, value }
    }

    /// Single-sample forward pass: per-head logits plus the value estimate
    /// when a value head exists.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<Vec<f64>>, Option<f64>)> {
        if obs.len() != self.spec.input_dim {
            return Err(Error::Usage(format!(
                "observation length {} does not match input_dim {}",
                obs.len(),
                self.spec.input_dim
            )));
        }
        let x = Array1::from(obs.to_vec());
        let a1 = (self.trunk[0].w.dot(&x) + &self.trunk[0].b).mapv(|v| v.max(0.0));
        let a2 = (self.trunk[1].w.dot(&a1) + &self.trunk[1].b).mapv(|v| v.max(0.0));
        let logits = self
            .heads
            .iter()
            .map(|h| (h.w.dot(&a2) + &h.b).to_vec())
            .collect();
        let value = self.value.as_ref().map(|v| v.w.dot(&a2)[0] + v.b[0]);
        Ok((logits, value))
    }

    /// Batched forward pass with cached activations for backprop.
    /// `x` is `batch x input_dim`.
    pub fn forward_batch(&self, x: &Array2<f64>) -> BatchForward {
        assert_eq!(x.ncols(), self.spec.input_dim);
        let a1 = (x.dot(&self.trunk[0].w.t()) + &self.trunk[0].b).mapv(|v| v.max(0.0));
        let a2 = (a1.dot(&self.trunk[1].w.t()) + &self.trunk[1].b).mapv(|v| v.max(0.0));
        let logits = self
            .heads
            .iter()
            .map(|h| a2.dot(&h.w.t()) + &h.b)
            .collect();
        let value = self
            .value
            .as_ref()
            .map(|v| a2.dot(&v.w.t()).column(0).to_owned() + v.b[0]);
        BatchForward { a1, a2, logits, value }
    }

    /// Backpropagates per-head logit gradients (and the value-head gradient)
    /// through the cached forward pass.
    pub fn backward_batch(
        &self,
        x: &Array2<f64>,
        fwd: &BatchForward,
        dlogits: &[Array2<f64>],
        dvalue: Option<&Array1<f64>>,
    ) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        let mut da2: Array2<f64> = Array2::zeros(fwd.a2.raw_dim());
        for (h, (head, dl)) in self.heads.iter().zip(dlogits.iter()).enumerate() {
            grads.heads[h].w = dl.t().dot(&fwd.a2);
            grads.heads[h].b = dl.sum_axis(Axis(0));
            da2 = da2 + dl.dot(&head.w);
        }
        if let (Some(vh), Some(dv)) = (&self.value, dvalue) {
            let dv2 = dv.view().insert_axis(Axis(1)).to_owned();
            let gv = grads.value.as_mut().expect("value grads allocated");
            gv.w = dv2.t().dot(&fwd.a2);
            gv.b = Array1::from(vec![dv.sum()]);
            da2 = da2 + dv2.dot(&vh.w);
        }
        let dz2 = &da2 * &fwd.a2.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        grads.trunk[1].w = dz2.t().dot(&fwd.a1);
        grads.trunk[1].b = dz2.sum_axis(Axis(0));
        let da1 = dz2.dot(&self.trunk[1].w);
        let dz1 = &da1 * &fwd.a1.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        grads.trunk[0].w = dz1.t().dot(x);
        grads.trunk[0].b = dz1.sum_axis(Axis(0));
        grads
    }

    pub fn param_count(&self) -> usize {
        self.dense_iter().map(|d| d.w.len() + d.b.len()).sum()
    }

    /// Parameters flattened in declaration order: trunk, heads, value; each
    /// layer's weights row-major, then biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for d in self.dense_iter() {
            out.extend(d.w.iter());
            out.extend(d.b.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut offset = 0;
        for d in self.dense_iter_mut() {
            for v in d.w.iter_mut() {
                *v = params[offset];
                offset += 1;
            }
            for v in d.b.iter_mut() {
                *v = params[offset];
                offset += 1;
            }
        }
    }

    fn dense_iter(&self) -> impl Iterator<Item = &Dense> {
        self.trunk.iter().chain(self.heads.iter()).chain(self.value.iter())
    }

    fn dense_iter_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.trunk
            .iter_mut()
            .chain(self.heads.iter_mut())
            .chain(self.value.iter_mut())
    }
}

/// Cached activations from [`Network::forward_batch`].
pub struct BatchForward {
    pub a1: Array2<f64>,
    pub a2: Array2<f64>,
    pub logits: Vec<Array2<f64>>,
    pub value: Option<Array1<f64>>,
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub trunk: Vec<Dense>,
    pub heads: Vec<Dense>,
    pub value: Option<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            trunk: net
                .trunk
                .iter()
                .map(|d| Dense::zeros(d.w.nrows(), d.w.ncols()))
                .collect(),
            heads: net
                .heads
                .iter()
                .map(|d| Dense::zeros(d.w.nrows(), d.w.ncols()))
                .collect(),
            value: net
                .value
                .as_ref()
                .map(|d| Dense::zeros(d.w.nrows(), d.w.ncols())),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for d in self.trunk.iter().chain(self.heads.iter()).chain(self.value.iter()) {
            out.extend(d.w.iter());
            out.extend(d.b.iter());
        }
        out
    }
}

/// Adaptive-moment optimizer over the flattened parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, param_count: usize) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// Applies one update step in place. Rejects non-finite gradients with
    /// a diagnostic instead of corrupting the parameters.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        let g = grads.flat();
        if g.len() != self.m.len() {
            return Err(Error::Usage("gradient/optimizer shape mismatch".into()));
        }
        if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite gradient at flat index {pos} (step {})",
                self.t + 1
            )));
        }
        self.t += 1;
        let mut params = net.flat_params();
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..g.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        net.set_flat_params(&params);
        Ok(())
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - max - log_sum).collect()
}

pub fn categorical_entropy(logits: &[f64]) -> f64 {
    let log_p = log_softmax(logits);
    -log_p.iter().map(|&lp| lp.exp() * lp).sum::<f64>()
}

pub fn sample_categorical(logits: &[f64], rng: &mut impl Rng) -> usize {
    let p = softmax(logits);
    let draw: f64 = rng.gen_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if draw < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Head-masking convention for the joint log-probability and entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadMask {
    /// Sum over all heads (defender convention).
    All,
    /// Head 0 is a spawn gate: when it selects index 0 (pass), the remaining
    /// heads are causally irrelevant and excluded from both the joint
    /// log-probability and the entropy.
    SpawnGated,
}

impl HeadMask {
    /// Number of heads contributing for the given action.
    pub fn active_heads(self, indices: &[usize], total: usize) -> usize {
        match self {
            HeadMask::All => total,
            HeadMask::SpawnGated if indices[0] == 0 => 1,
            HeadMask::SpawnGated => total,
        }
    }
}

/// Samples every head independently from its softmax and returns the joint
/// log-probability under the masking convention.
pub fn sample_action(
    logits: &[Vec<f64>],
    mask: HeadMask,
    rng: &mut impl Rng,
) -> (Vec<usize>, f64) {
    let indices: Vec<usize> = logits.iter().map(|l| sample_categorical(l, rng)).collect();
    let lp = log_prob_and_entropy(logits, &indices, mask).0;
    (indices, lp)
}

/// Joint log-probability of `indices` and the summed per-head entropy,
/// excluding gated heads symmetrically with [`sample_action`].
pub fn log_prob_and_entropy(logits: &[Vec<f64>], indices: &[usize], mask: HeadMask) -> (f64, f64) {
    assert_eq!(logits.len(), indices.len());
    let active = mask.active_heads(indices, logits.len());
    let mut lp = 0.0;
    let mut entropy = 0.0;
    for (head, (l, &a)) in logits.iter().zip(indices.iter()).enumerate() {
        if head >= active {
            break;
        }
        lp += log_softmax(l)[a];
        entropy += categorical_entropy(l);
    }
    (lp, entropy)
}

/// Compares the analytic gradient returned by `loss_and_grad` against
/// central finite differences on a random subsample of parameters; returns
/// the maximum relative error.
pub fn grad_check<F>(net: &mut Network, loss_and_grad: F, rng: &mut ChaCha8Rng) -> f64
where
    F: Fn(&Network) -> (f64, Gradients),
{
    const STEP: f64 = 1e-5;
    const SAMPLES: usize = 200;
    let (_, grads) = loss_and_grad(net);
    let analytic = grads.flat();
    let base = net.flat_params();
    let n = base.len();
    let mut max_rel = 0.0_f64;
    for _ in 0..SAMPLES {
        let idx = rng.gen_range(0..n);
        let mut perturbed = base.clone();
        perturbed[idx] = base[idx] + STEP;
        net.set_flat_params(&perturbed);
        let plus = loss_and_grad(net).0;
        perturbed[idx] = base[idx] - STEP;
        net.set_flat_params(&perturbed);
        let minus = loss_and_grad(net).0;
        let numeric = (plus - minus) / (2.0 * STEP);
        let denom = analytic[idx].abs().max(numeric.abs()).max(1e-6);
        max_rel = max_rel.max((analytic[idx] - numeric).abs() / denom);
    }
    net.set_flat_params(&base);
    max_rel
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"LWNC";
const CHECKPOINT_VERSION: u32 = 1;

/// Writes a checkpoint: magic, version, shape header, then the flattened
/// parameters as 64-bit little-endian floats.
pub fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(net.spec.input_dim as u32).to_le_bytes())?;
    w.write_all(&(net.spec.hidden[0] as u32).to_le_bytes())?;
    w.write_all(&(net.spec.hidden[1] as u32).to_le_bytes())?;
    w.write_all(&(net.spec.heads.len() as u32).to_le_bytes())?;
    for &h in &net.spec.heads {
        w.write_all(&(h as u32).to_le_bytes())?;
    }
    w.write_all(&[u8::from(net.spec.value_head)])?;
    for p in net.flat_params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Network> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("bad checkpoint magic in {}", path.display())));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let input_dim = read_u32(&mut r)? as usize;
    let h0 = read_u32(&mut r)? as usize;
    let h1 = read_u32(&mut r)? as usize;
    let n_heads = read_u32(&mut r)? as usize;
    let mut heads = Vec::with_capacity(n_heads);
    for _ in 0..n_heads {
        heads.push(read_u32(&mut r)? as usize);
    }
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let spec = NetSpec {
        input_dim,
        hidden: [h0, h1],
        heads,
        value_head: flag[0] != 0,
    };
    let mut net = Network::zeros(spec);
    let count = net.param_count();
    let mut params = Vec::with_capacity(count);
    let mut f64buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut f64buf)?;
        params.push(f64::from_le_bytes(f64buf));
    }
    if r.read(&mut f64buf)? != 0 {
        return Err(Error::Format("trailing bytes in checkpoint".into()));
    }
    net.set_flat_params(&params);
    Ok(net)
}
