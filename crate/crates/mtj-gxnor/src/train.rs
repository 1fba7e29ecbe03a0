//! Quantized network training through the synapse-array model: forward and
//! surrogate-gradient backward passes, GXNOR updates via the hardware pulse
//! schedule, and accuracy/convergence reporting.
//!
//! The train loop is generic over a [`Backend`] so the hardware array and a
//! pure-software reference trainer run the exact same code path and RNG
//! draw sequence; with the array in software-projection mode the two produce
//! bit-identical trajectories.

use crate::array::{Mode, SynapseArray, UpdateRule, UpdateScheme, UpdateStats, VariationSpec};
use crate::error::{Error, Result};
use crate::gxnor::{self, ActivationWindow, QuantSpace};
use crate::mnist::Dataset;
use crate::mtj::MtjDeviceParams;
use crate::rng::SeedTree;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

/// Network flavor (Table IV rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NetMode {
    /// Ternary weights and ternary activations (4T2R).
    Ternary,
    /// Binary weights and binary activations (2T1R).
    Binary,
    /// Ternary weights with sign activations.
    BinActivation,
}

impl NetMode {
    pub fn array_mode(self) -> Mode {
        match self {
            NetMode::Ternary | NetMode::BinActivation => Mode::Ternary,
            NetMode::Binary => Mode::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Training configuration.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplicative decay applied at each milestone epoch (1-based).
    pub lr_decay: f64,
    pub lr_milestones: Vec<usize>,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub mode: NetMode,
    pub scheme_sgd: bool,
    pub hidden: Vec<usize>,
    /// Adjustment factor m of the software projection.
    pub m_adjust: f64,
    pub window_r: f64,
    pub window_a: f64,
    pub variation: Option<VariationSpec>,
    /// Bernoulli law for hardware updates.
    pub update_rule: UpdateRule,
    /// Update pulse window T_up in seconds. Sets where the switching curve
    /// P_sw(|nu| T_up) is responsive relative to the optimizer step size.
    pub t_up: f64,
    /// Optional caps on the number of train/test samples used.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 100,
            learning_rate: 1.0,
            lr_decay: 0.5,
            lr_milestones: vec![6, 9],
            optimizer: Optimizer::Sgd,
            seed: 42,
            mode: NetMode::Ternary,
            scheme_sgd: false,
            hidden: vec![512],
            m_adjust: 3.0,
            window_r: 0.5,
            window_a: 0.5,
            variation: None,
            update_rule: UpdateRule::Hardware,
            t_up: 2e-9,
            train_limit: None,
            test_limit: None,
        }
    }
}

/// Read/update window counts logged per epoch for the energy model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PhaseCounts {
    /// Array read windows (one per sample per layer, forward).
    pub read_windows: u64,
    /// Inverse-read windows (backward error propagation).
    pub inverse_read_windows: u64,
    /// Update windows (one per column in the general scheme).
    pub update_windows: u64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    pub mean_loss: f64,
    pub switches: Vec<UpdateStats>,
    pub phases: PhaseCounts,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    pub final_test_acc: f64,
}

/// Quantized inputs and labels ready for the train loop.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub train_x: Vec<i8>,
    pub train_y: Vec<u8>,
    pub test_x: Vec<i8>,
    pub test_y: Vec<u8>,
    pub input_dim: usize,
    pub classes: usize,
}

/// Quantize dataset pixels into the activation space of `mode`.
pub fn prepare_data(
    train: &Dataset,
    test: &Dataset,
    mode: NetMode,
    train_limit: Option<usize>,
    test_limit: Option<usize>,
) -> TrainData {
    let space = match mode {
        NetMode::Ternary | NetMode::BinActivation => QuantSpace::ternary(),
        NetMode::Binary => QuantSpace::binary(),
    };
    let quant = |ds: &Dataset, limit: Option<usize>| -> (Vec<i8>, Vec<u8>) {
        let count = limit.map_or(ds.count, |l| l.min(ds.count));
        let px = ds.pixels_per_image();
        let mut x = Vec::with_capacity(count * px);
        for i in 0..count {
            for &b in ds.image(i) {
                let v = b as f64 / 255.0 * 2.0 - 1.0;
                x.push(space.activate(v) as i8);
            }
        }
        (x, ds.labels[..count].to_vec())
    };
    let (train_x, train_y) = quant(train, train_limit);
    let (test_x, test_y) = quant(test, test_limit);
    TrainData {
        train_x,
        train_y,
        test_x,
        test_y,
        input_dim: train.pixels_per_image(),
        classes: 10,
    }
}

/// Weight storage abstraction: the hardware crossbars or the plain-matrix
/// software reference. Both consume identical RNG draw sequences in
/// software-projection mode.
pub trait Backend {
    /// (fan_out, fan_in) of each layer.
    fn sizes(&self) -> Vec<(usize, usize)>;
    /// Row-major effective analog weights of layer `l` (unitless, +-1 ideal).
    fn effective_weights(&self, l: usize) -> &[f32];
    /// Apply a row-major update matrix to layer `l`.
    fn apply_deltas<R: Rng + ?Sized>(
        &mut self,
        l: usize,
        deltas: &[f64],
        rng: &mut R,
    ) -> Result<UpdateStats>;
    /// Logical weights of layer `l` for closure checks.
    fn logical_weights(&self, l: usize) -> Vec<i8>;
}

/// Hardware backend: one SynapseArray per layer.
pub struct HardwareBackend {
    pub arrays: Vec<SynapseArray>,
    weff: Vec<Vec<f32>>,
    scheme: UpdateScheme,
}

impl HardwareBackend {
    pub fn new(
        cfg: &TrainConfig,
        input_dim: usize,
        classes: usize,
        device: MtjDeviceParams,
        seeds: &SeedTree,
    ) -> Result<Self> {
        let mut sizes = Vec::new();
        let mut prev = input_dim;
        for &h in &cfg.hidden {
            sizes.push((h, prev));
            prev = h;
        }
        sizes.push((classes, prev));
        let mut arrays = Vec::new();
        let mut rng = seeds.stream("init");
        for (m, n) in sizes {
            let mut arr = SynapseArray::new(cfg.mode.array_mode(), m, n, device.clone())?;
            arr.update_rule = cfg.update_rule;
            arr.t_up = cfg.t_up;
            if let Some(spec) = &cfg.variation {
                let mut vrng = seeds.stream("variation");
                arr.apply_variation(spec, &mut vrng)?;
            }
            arr.init_random(&mut rng);
            arrays.push(arr);
        }
        let weff = arrays
            .iter()
            .map(|a| a.effective_weights().iter().map(|&x| x as f32).collect())
            .collect();
        Ok(HardwareBackend {
            arrays,
            weff,
            scheme: if cfg.scheme_sgd {
                UpdateScheme::Sgd
            } else {
                UpdateScheme::General
            },
        })
    }
}

impl Backend for HardwareBackend {
    fn sizes(&self) -> Vec<(usize, usize)> {
        self.arrays.iter().map(|a| a.dims()).collect()
    }

    fn effective_weights(&self, l: usize) -> &[f32] {
        &self.weff[l]
    }

    fn apply_deltas<R: Rng + ?Sized>(
        &mut self,
        l: usize,
        deltas: &[f64],
        rng: &mut R,
    ) -> Result<UpdateStats> {
        let stats = self.arrays[l].apply_update(deltas, self.scheme, rng)?;
        self.weff[l] = self.arrays[l]
            .effective_weights()
            .iter()
            .map(|&x| x as f32)
            .collect();
        Ok(stats)
    }

    fn logical_weights(&self, l: usize) -> Vec<i8> {
        self.arrays[l].logical_weights()
    }
}

/// Pure-software reference backend implementing the gxnor-core projection on
/// plain integer matrices.
pub struct SoftwareBackend {
    sizes: Vec<(usize, usize)>,
    weights: Vec<Vec<i8>>,
    weff: Vec<Vec<f32>>,
    space: QuantSpace,
    m_adjust: f64,
}

impl SoftwareBackend {
    pub fn new(cfg: &TrainConfig, input_dim: usize, classes: usize, seeds: &SeedTree) -> Self {
        let mut sizes = Vec::new();
        let mut prev = input_dim;
        for &h in &cfg.hidden {
            sizes.push((h, prev));
            prev = h;
        }
        sizes.push((classes, prev));
        let space = match cfg.mode.array_mode() {
            Mode::Ternary => QuantSpace::ternary(),
            Mode::Binary => QuantSpace::binary(),
        };
        // mirror SynapseArray::init_random draw-for-draw
        let mut rng = seeds.stream("init");
        let mut weights = Vec::new();
        for &(m, n) in &sizes {
            let mut w = Vec::with_capacity(m * n);
            for _ in 0..m * n {
                let v: i8 = match space.n_bits() {
                    0 => {
                        if rng.gen_bool(0.5) {
                            1
                        } else {
                            -1
                        }
                    }
                    _ => [-1, 0, 1][rng.gen_range(0..3usize)],
                };
                w.push(v);
            }
            weights.push(w);
        }
        let weff = weights
            .iter()
            .map(|w| w.iter().map(|&x| x as f32).collect())
            .collect();
        SoftwareBackend {
            sizes,
            weights,
            weff,
            space,
            m_adjust: cfg.m_adjust,
        }
    }
}

impl Backend for SoftwareBackend {
    fn sizes(&self) -> Vec<(usize, usize)> {
        self.sizes.clone()
    }

    fn effective_weights(&self, l: usize) -> &[f32] {
        &self.weff[l]
    }

    fn apply_deltas<R: Rng + ?Sized>(
        &mut self,
        l: usize,
        deltas: &[f64],
        rng: &mut R,
    ) -> Result<UpdateStats> {
        let (m, n) = self.sizes[l];
        let mut stats = UpdateStats::default();
        let dz = self.space.resolution();
        // same traversal order as SynapseArray::apply_update: column-serial,
        // rows within a column
        for col in 0..n {
            for row in 0..m {
                let idx = row * n + col;
                let w = self.weights[l][idx] as f64;
                let bounded = gxnor::bound_update(w, deltas[idx]);
                let (kappa, nu) = gxnor::decompose(self.space, bounded);
                let p = gxnor::tau(self.space, nu, self.m_adjust);
                let extra = if rng.gen_bool(p) { nu.signum() * dz } else { 0.0 };
                let new_w = w + kappa as f64 * dz + extra;
                stats.attempted += u64::from(kappa != 0 || nu != 0.0);
                stats.realized += u64::from(new_w != w);
                self.weights[l][idx] = new_w.round() as i8;
            }
        }
        self.weff[l] = self.weights[l].iter().map(|&x| x as f32).collect();
        Ok(stats)
    }

    fn logical_weights(&self, l: usize) -> Vec<i8> {
        self.weights[l].clone()
    }
}

struct SamplePass {
    /// Input activations of each layer (layer 0's input is the image).
    inputs: Vec<Vec<f32>>,
    predicted: usize,
    loss: f32,
    /// dL/dh per layer, filled by backward.
    grads: Vec<Vec<f32>>,
}

fn dot(row: &[f32], x: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let rc = row.chunks_exact(8);
    let xc = x.chunks_exact(8);
    let tail: f32 = rc
        .remainder()
        .iter()
        .zip(xc.remainder())
        .map(|(a, b)| a * b)
        .sum();
    for (r8, x8) in rc.zip(xc) {
        for k in 0..8 {
            acc[k] += r8[k] * x8[k];
        }
    }
    acc.iter().sum::<f32>() + tail
}

fn matvec(w: &[f32], m: usize, n: usize, x: &[f32]) -> Vec<f32> {
    let mut out = vec![0.0f32; m];
    for i in 0..m {
        out[i] = dot(&w[i * n..(i + 1) * n], x);
    }
    out
}

fn matvec_t(w: &[f32], m: usize, n: usize, y: &[f32]) -> Vec<f32> {
    let mut out = vec![0.0f32; n];
    for i in 0..m {
        let g = y[i];
        if g == 0.0 {
            continue;
        }
        let row = &w[i * n..(i + 1) * n];
        for (o, wv) in out.iter_mut().zip(row) {
            *o += wv * g;
        }
    }
    out
}

fn activate_mode(mode: NetMode, h: f32) -> i8 {
    match mode {
        NetMode::Ternary => {
            if h > 0.5 {
                1
            } else if h < -0.5 {
                -1
            } else {
                0
            }
        }
        NetMode::Binary | NetMode::BinActivation => {
            if h < 0.0 {
                -1
            } else {
                1
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn forward_backward(
    weffs: &[&[f32]],
    biases: &[Vec<i64>],
    sizes: &[(usize, usize)],
    scales: &[f32],
    mode: NetMode,
    window: ActivationWindow,
    x: &[i8],
    label: usize,
    with_backward: bool,
) -> SamplePass {
    let layers = sizes.len();
    let mut inputs: Vec<Vec<f32>> = Vec::with_capacity(layers);
    let mut hs: Vec<Vec<f32>> = Vec::with_capacity(layers);
    let mut cur: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    for l in 0..layers {
        let (m, n) = sizes[l];
        let pre = matvec(weffs[l], m, n, &cur);
        let mut h = Vec::with_capacity(m);
        for i in 0..m {
            // comparator/ADC: quantize the row sum to an integer, saturate
            let decoded = (pre[i].round() as i64).clamp(-(n as i64), n as i64);
            h.push((decoded + biases[l][i]) as f32 / scales[l]);
        }
        let next: Vec<f32> = if l + 1 < layers {
            h.iter().map(|&v| activate_mode(mode, v) as f32).collect()
        } else {
            Vec::new()
        };
        inputs.push(cur);
        hs.push(h);
        cur = next;
    }
    let scores = hs.last().expect("at least one layer");
    let predicted = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);
    // multiclass hinge (SVM head), margin 1
    let sy = scores[label];
    let mut loss = 0.0f32;
    let mut g_out = vec![0.0f32; scores.len()];
    for (j, &s) in scores.iter().enumerate() {
        if j == label {
            continue;
        }
        let v = s - sy + 1.0;
        if v > 0.0 {
            loss += v;
            g_out[j] = 1.0;
            g_out[label] -= 1.0;
        }
    }
    let mut grads = vec![Vec::new(); layers];
    if with_backward {
        grads[layers - 1] = g_out;
        for l in (0..layers - 1).rev() {
            let (m_up, n_up) = sizes[l + 1];
            let upstream = matvec_t(weffs[l + 1], m_up, n_up, &grads[l + 1]);
            let g: Vec<f32> = upstream
                .iter()
                .zip(&hs[l])
                .map(|(&u, &h)| {
                    (u / scales[l + 1]) * window.grad(h.abs() as f64) as f32
                })
                .collect();
            grads[l] = g;
        }
    }
    SamplePass {
        inputs,
        predicted,
        loss,
        grads,
    }
}

struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    bm: Vec<Vec<f64>>,
    bv: Vec<Vec<f64>>,
    t: i32,
}

/// Train a backend on the prepared data. Deterministic given the seed tree.
pub fn train<B: Backend>(
    backend: &mut B,
    cfg: &TrainConfig,
    data: &TrainData,
    seeds: &SeedTree,
) -> Result<TrainReport> {
    let sizes = backend.sizes();
    let layers = sizes.len();
    let window = ActivationWindow::new(cfg.window_r, cfg.window_a)?;
    // Normalize each row sum by the RMS of its input vector rather than the
    // raw fan-in: quantized MNIST inputs (and ternary hidden codes) are
    // sparse, and sqrt(fan_in) would leave most comparator outputs far below
    // the activation window.
    let input_sq: f64 = data.train_x.iter().map(|&v| (v as f64) * (v as f64)).sum();
    let input_density = (input_sq / data.train_x.len().max(1) as f64).max(1e-3);
    let scales: Vec<f32> = sizes
        .iter()
        .enumerate()
        .map(|(l, &(_, n))| {
            let density = if l == 0 { input_density } else { 0.5 };
            ((n as f64 * density).sqrt()) as f32
        })
        .collect();
    let mut biases: Vec<Vec<i64>> = sizes.iter().map(|&(m, _)| vec![0i64; m]).collect();
    let n_train = data.train_y.len();
    let n_test = data.test_y.len();
    let dim = data.input_dim;
    let mut shuffle_rng = seeds.stream("shuffle");
    let mut update_rng = seeds.stream("update");
    let mut adam = AdamState {
        m: sizes.iter().map(|&(m, n)| vec![0.0; m * n]).collect(),
        v: sizes.iter().map(|&(m, n)| vec![0.0; m * n]).collect(),
        bm: sizes.iter().map(|&(m, _)| vec![0.0; m]).collect(),
        bv: sizes.iter().map(|&(m, _)| vec![0.0; m]).collect(),
        t: 0,
    };
    let mut epochs_out = Vec::new();
    let mut lr = cfg.learning_rate;
    for epoch in 1..=cfg.epochs {
        if cfg.lr_milestones.contains(&epoch) {
            lr *= cfg.lr_decay;
        }
        let mut order: Vec<usize> = (0..n_train).collect();
        order.shuffle(&mut shuffle_rng);
        let mut correct = 0usize;
        let mut loss_sum = 0.0f64;
        let mut switches = vec![UpdateStats::default(); layers];
        let mut phases = PhaseCounts::default();
        for batch in order.chunks(cfg.batch_size) {
            let weffs: Vec<&[f32]> = (0..layers).map(|l| backend.effective_weights(l)).collect();
            let passes: Vec<SamplePass> = batch
                .par_iter()
                .map(|&s| {
                    forward_backward(
                        &weffs,
                        &biases,
                        &sizes,
                        &scales,
                        cfg.mode,
                        window,
                        &data.train_x[s * dim..(s + 1) * dim],
                        data.train_y[s] as usize,
                        true,
                    )
                })
                .collect();
            for (p, &s) in passes.iter().zip(batch) {
                if p.predicted == data.train_y[s] as usize {
                    correct += 1;
                }
                loss_sum += p.loss as f64;
            }
            phases.read_windows += (batch.len() * layers) as u64;
            phases.inverse_read_windows += (batch.len() * (layers - 1)) as u64;
            let bsz = batch.len() as f64;
            adam.t += 1;
            for l in 0..layers {
                let (m, n) = sizes[l];
                let scale = scales[l] as f64;
                // dW[i][j] = sum_s g_s[i]/scale * x_s[j], accumulated in
                // sample order per row for determinism
                let mut deltas = vec![0.0f64; m * n];
                deltas
                    .par_chunks_mut(n)
                    .enumerate()
                    .for_each(|(i, drow)| {
                        for p in &passes {
                            let g = p.grads[l][i] as f64;
                            if g == 0.0 {
                                continue;
                            }
                            let gs = (g / scale / bsz) as f32;
                            for (d, &xv) in drow.iter_mut().zip(&p.inputs[l]) {
                                *d += (gs * xv) as f64;
                            }
                        }
                    });
                match cfg.optimizer {
                    Optimizer::Sgd => {
                        for d in deltas.iter_mut() {
                            *d = -lr * *d;
                        }
                    }
                    Optimizer::Adam => {
                        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
                        let bc1 = 1.0 - b1.powi(adam.t);
                        let bc2 = 1.0 - b2.powi(adam.t);
                        for (idx, d) in deltas.iter_mut().enumerate() {
                            let g = *d;
                            adam.m[l][idx] = b1 * adam.m[l][idx] + (1.0 - b1) * g;
                            adam.v[l][idx] = b2 * adam.v[l][idx] + (1.0 - b2) * g * g;
                            let mh = adam.m[l][idx] / bc1;
                            let vh = adam.v[l][idx] / bc2;
                            *d = -lr * mh / (vh.sqrt() + eps);
                        }
                    }
                }
                let stats = backend.apply_deltas(l, &deltas, &mut update_rng)?;
                switches[l].merge(stats);
                phases.update_windows += n as u64;
                // software-projected integer bias update
                for i in 0..m {
                    let mut gb = 0.0f64;
                    for p in &passes {
                        gb += p.grads[l][i] as f64;
                    }
                    gb = gb / scale / bsz;
                    let db = match cfg.optimizer {
                        Optimizer::Sgd => -lr * gb,
                        Optimizer::Adam => {
                            let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
                            adam.bm[l][i] = b1 * adam.bm[l][i] + (1.0 - b1) * gb;
                            adam.bv[l][i] = b2 * adam.bv[l][i] + (1.0 - b2) * gb * gb;
                            let mh = adam.bm[l][i] / (1.0 - b1.powi(adam.t));
                            let vh = adam.bv[l][i] / (1.0 - b2.powi(adam.t));
                            -lr * mh / (vh.sqrt() + eps)
                        }
                    };
                    let kappa = db.trunc();
                    let nu = db - kappa;
                    let pb = (cfg.m_adjust * nu.abs()).tanh();
                    let extra = if update_rng.gen_bool(pb) {
                        nu.signum() as i64
                    } else {
                        0
                    };
                    biases[l][i] += kappa as i64 + extra;
                }
            }
        }
        let mean_loss = loss_sum / n_train as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        // weight closure check at epoch granularity
        for l in 0..layers {
            let space = match cfg.mode.array_mode() {
                Mode::Ternary => QuantSpace::ternary(),
                Mode::Binary => QuantSpace::binary(),
            };
            for &w in &backend.logical_weights(l) {
                debug_assert!(space.contains(w as f64));
                let _ = w;
            }
        }
        let weffs: Vec<&[f32]> = (0..layers).map(|l| backend.effective_weights(l)).collect();
        let test_correct: usize = (0..n_test)
            .into_par_iter()
            .map(|s| {
                let p = forward_backward(
                    &weffs,
                    &biases,
                    &sizes,
                    &scales,
                    cfg.mode,
                    window,
                    &data.test_x[s * dim..(s + 1) * dim],
                    data.test_y[s] as usize,
                    false,
                );
                usize::from(p.predicted == data.test_y[s] as usize)
            })
            .sum();
        phases.read_windows += (n_test * layers) as u64;
        epochs_out.push(EpochMetrics {
            epoch,
            train_acc: correct as f64 / n_train as f64,
            test_acc: test_correct as f64 / n_test as f64,
            mean_loss,
            switches,
            phases,
        });
    }
    let final_test_acc = epochs_out.last().map_or(0.0, |e| e.test_acc);
    Ok(TrainReport {
        epochs: epochs_out,
        final_test_acc,
    })
}

/// Convenience: build the hardware backend from a config and train it.
pub fn train_hardware(
    cfg: &TrainConfig,
    data: &TrainData,
    device: MtjDeviceParams,
) -> Result<TrainReport> {
    let seeds = SeedTree::new(cfg.seed);
    let mut backend = HardwareBackend::new(cfg, data.input_dim, data.classes, device, &seeds)?;
    train(&mut backend, cfg, data, &seeds)
}
