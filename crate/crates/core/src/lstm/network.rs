//! Two stacked LSTM layers, a ReLU dense layer and a linear output.
//!
//! Every pass works on a batch: row `b` of each matrix belongs to sample `b`.
//! Gate blocks inside a layer's weight matrix are ordered input, forget,
//! cell candidate, output; the weight of a layer with `n` inputs and `h`
//! units is `4h x (n + h)` and multiplies `[x_t, h_{t-1}]`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) type Mat = DMatrix<f64>;

/// Layer sizes, window length and dropout rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub window: usize,
    pub units1: usize,
    pub units2: usize,
    pub dense: usize,
    pub dropout1: f64,
    pub dropout2: f64,
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.units1 == 0 || self.units2 == 0 || self.dense == 0 {
            return Err(Error::invalid("network sizes must be positive"));
        }
        for (name, r) in [("dropout1", self.dropout1), ("dropout2", self.dropout2)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::config(name, "rate must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

pub const TENSOR_NAMES: [&str; 8] = [
    "lstm1.weight",
    "lstm1.bias",
    "lstm2.weight",
    "lstm2.bias",
    "dense.weight",
    "dense.bias",
    "output.weight",
    "output.bias",
];

/// All trainable tensors. Biases are `1 x n` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub w1: Mat,
    pub b1: Mat,
    pub w2: Mat,
    pub b2: Mat,
    pub wd: Mat,
    pub bd: Mat,
    pub wo: Mat,
    pub bo: Mat,
}

impl Params {
    pub fn zeros(shape: &Shape) -> Self {
        let (h1, h2, d) = (shape.units1, shape.units2, shape.dense);
        Self {
            w1: Mat::zeros(4 * h1, 1 + h1),
            b1: Mat::zeros(1, 4 * h1),
            w2: Mat::zeros(4 * h2, h1 + h2),
            b2: Mat::zeros(1, 4 * h2),
            wd: Mat::zeros(d, h2),
            bd: Mat::zeros(1, d),
            wo: Mat::zeros(1, d),
            bo: Mat::zeros(1, 1),
        }
    }

    pub fn tensors(&self) -> [&Mat; 8] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.wd, &self.bd, &self.wo, &self.bo]
    }

    pub fn tensors_mut(&mut self) -> [&mut Mat; 8] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.wd,
            &mut self.bd,
            &mut self.wo,
            &mut self.bo,
        ]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat view in tensor order, column-major inside each tensor.
    pub fn flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.as_slice().iter().copied()).collect()
    }

    fn locate(&self, mut index: usize) -> (usize, usize) {
        for (k, t) in self.tensors().iter().enumerate() {
            if index < t.len() {
                return (k, index);
            }
            index -= t.len();
        }
        panic!("parameter index out of range");
    }

    pub fn get(&self, index: usize) -> f64 {
        let (k, i) = self.locate(index);
        self.tensors()[k].as_slice()[i]
    }

    pub fn set(&mut self, index: usize, value: f64) {
        let (k, i) = self.locate(index);
        self.tensors_mut()[k].as_mut_slice()[i] = value;
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmNetwork {
    pub shape: Shape,
    pub params: Params,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Glorot-uniform bound for a block with the given fans.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn add_row(a: &mut Mat, row: &Mat) {
    for j in 0..a.ncols() {
        let bj = row[(0, j)];
        a.column_mut(j).iter_mut().for_each(|x| *x += bj);
    }
}

fn col_sums(a: &Mat) -> Mat {
    Mat::from_fn(1, a.ncols(), |_, j| a.column(j).sum())
}

struct Step {
    z: Mat,
    i: Mat,
    f: Mat,
    g: Mat,
    o: Mat,
    c_prev: Mat,
    tanh_c: Mat,
}

struct LayerCache {
    steps: Vec<Step>,
}

/// Activations kept by a batch forward pass for backpropagation.
pub struct ForwardCache {
    l1: LayerCache,
    l2: LayerCache,
    masks1: Vec<Mat>,
    mask2: Option<Mat>,
    h2: Mat,
    u: Mat,
    r: Mat,
    /// Network outputs, one row per sample.
    pub output: Mat,
}

impl ForwardCache {
    /// Gate activations (input, forget, output) and cell candidates of both layers.
    pub fn gate_values(&self) -> (Vec<f64>, Vec<f64>) {
        let mut gates = Vec::new();
        let mut cands = Vec::new();
        for s in self.l1.steps.iter().chain(&self.l2.steps) {
            gates.extend(s.i.iter().chain(s.f.iter()).chain(s.o.iter()));
            cands.extend(s.g.iter());
        }
        (gates, cands)
    }
}

fn lstm_forward(w: &Mat, b: &Mat, xs: &[Mat], nh: usize) -> (Vec<Mat>, LayerCache) {
    let bsz = xs[0].nrows();
    let nin = xs[0].ncols();
    let wt = w.transpose();
    let mut h = Mat::zeros(bsz, nh);
    let mut c = Mat::zeros(bsz, nh);
    let mut hs = Vec::with_capacity(xs.len());
    let mut steps = Vec::with_capacity(xs.len());
    for x in xs {
        let mut z = Mat::zeros(bsz, nin + nh);
        z.columns_mut(0, nin).copy_from(x);
        z.columns_mut(nin, nh).copy_from(&h);
        let mut a = &z * &wt;
        add_row(&mut a, b);
        let i = a.columns(0, nh).map(sigmoid);
        let f = a.columns(nh, nh).map(sigmoid);
        let g = a.columns(2 * nh, nh).map(f64::tanh);
        let o = a.columns(3 * nh, nh).map(sigmoid);
        let c_new = f.component_mul(&c) + i.component_mul(&g);
        let tanh_c = c_new.map(f64::tanh);
        h = o.component_mul(&tanh_c);
        hs.push(h.clone());
        steps.push(Step {
            z,
            i,
            f,
            g,
            o,
            c_prev: std::mem::replace(&mut c, c_new),
            tanh_c,
        });
    }
    (hs, LayerCache { steps })
}

/// Returns weight and bias gradients and the gradient for each input step.
fn lstm_backward(w: &Mat, cache: &LayerCache, d_above: &[Mat], nin: usize, nh: usize) -> (Mat, Mat, Vec<Mat>) {
    let bsz = d_above[0].nrows();
    let mut dw = Mat::zeros(w.nrows(), w.ncols());
    let mut db = Mat::zeros(1, w.nrows());
    let mut dxs = vec![Mat::zeros(0, 0); cache.steps.len()];
    let mut dh_next = Mat::zeros(bsz, nh);
    let mut dc_next = Mat::zeros(bsz, nh);
    for t in (0..cache.steps.len()).rev() {
        let s = &cache.steps[t];
        let dh = &d_above[t] + &dh_next;
        let dc = &dc_next + dh.component_mul(&s.o).component_mul(&s.tanh_c.map(|v| 1.0 - v * v));
        let mut da = Mat::zeros(bsz, 4 * nh);
        da.columns_mut(0, nh)
            .copy_from(&dc.component_mul(&s.g).component_mul(&s.i.map(|v| v * (1.0 - v))));
        da.columns_mut(nh, nh)
            .copy_from(&dc.component_mul(&s.c_prev).component_mul(&s.f.map(|v| v * (1.0 - v))));
        da.columns_mut(2 * nh, nh)
            .copy_from(&dc.component_mul(&s.i).component_mul(&s.g.map(|v| 1.0 - v * v)));
        da.columns_mut(3 * nh, nh)
            .copy_from(&dh.component_mul(&s.tanh_c).component_mul(&s.o.map(|v| v * (1.0 - v))));
        // An explicit transpose lets the product take the blocked gemm path.
        dw.gemm(1.0, &da.transpose(), &s.z, 1.0);
        db += col_sums(&da);
        let dz = &da * w;
        dxs[t] = dz.columns(0, nin).into_owned();
        dh_next = dz.columns(nin, nh).into_owned();
        dc_next = dc.component_mul(&s.f);
    }
    (dw, db, dxs)
}

fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut ChaCha8Rng) -> Mat {
    let keep = 1.0 / (1.0 - rate);
    // Column-major fill keeps the draw order fixed for a given shape.
    Mat::from_iterator(rows, cols, (0..rows * cols).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }))
}

impl LstmNetwork {
    /// Glorot-uniform weights, zero biases except forget-gate biases of 1.
    pub fn init(shape: Shape, seed: u64) -> Result<Self> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::zeros(&shape);
        let (h1, h2, d) = (shape.units1, shape.units2, shape.dense);
        let mut fill = |m: &mut Mat, bound: f64| {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    m[(r, c)] = rng.random_range(-bound..=bound);
                }
            }
        };
        fill(&mut params.w1, glorot_bound(1 + h1, h1));
        fill(&mut params.w2, glorot_bound(h1 + h2, h2));
        fill(&mut params.wd, glorot_bound(h2, d));
        fill(&mut params.wo, glorot_bound(d, 1));
        params.b1.columns_mut(h1, h1).fill(1.0);
        params.b2.columns_mut(h2, h2).fill(1.0);
        Ok(Self { shape, params })
    }

    pub fn from_params(shape: Shape, params: Params) -> Result<Self> {
        shape.validate()?;
        let expected = Params::zeros(&shape);
        for (k, (a, b)) in expected.tensors().iter().zip(params.tensors()).enumerate() {
            if a.shape() != b.shape() {
                return Err(Error::invalid(format!(
                    "{} has shape {:?}, expected {:?}",
                    TENSOR_NAMES[k],
                    b.shape(),
                    a.shape()
                )));
            }
        }
        if !params.all_finite() {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(Self { shape, params })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn check_windows(&self, windows: &[&[f64]]) -> Result<()> {
        if windows.is_empty() {
            return Err(Error::invalid("no input windows"));
        }
        for w in windows {
            if w.len() != self.shape.window {
                return Err(Error::invalid(format!(
                    "window has {} values, network expects {}",
                    w.len(),
                    self.shape.window
                )));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("input window".into()));
            }
        }
        Ok(())
    }

    /// Batch forward pass. Dropout is applied only when `rng` is given.
    pub fn forward_batch(&self, windows: &[&[f64]], rng: Option<&mut ChaCha8Rng>) -> Result<ForwardCache> {
        self.check_windows(windows)?;
        Ok(self.forward_unchecked(windows, rng))
    }

    pub(crate) fn forward_unchecked(&self, windows: &[&[f64]], mut rng: Option<&mut ChaCha8Rng>) -> ForwardCache {
        let p = &self.params;
        let s = &self.shape;
        let bsz = windows.len();
        let xs: Vec<Mat> = (0..s.window).map(|t| Mat::from_fn(bsz, 1, |b, _| windows[b][t])).collect();
        let (hs1, l1) = lstm_forward(&p.w1, &p.b1, &xs, s.units1);

        let mut masks1 = Vec::new();
        let inputs2: Vec<Mat> = match rng.as_deref_mut() {
            Some(r) if s.dropout1 > 0.0 => hs1
                .iter()
                .map(|h| {
                    let m = dropout_mask(bsz, s.units1, s.dropout1, r);
                    let out = h.component_mul(&m);
                    masks1.push(m);
                    out
                })
                .collect(),
            _ => hs1,
        };
        let (hs2, l2) = lstm_forward(&p.w2, &p.b2, &inputs2, s.units2);
        let last = hs2.into_iter().last().expect("window is non-empty");
        let (h2, mask2) = match rng {
            Some(r) if s.dropout2 > 0.0 => {
                let m = dropout_mask(bsz, s.units2, s.dropout2, r);
                (last.component_mul(&m), Some(m))
            }
            _ => (last, None),
        };
        let mut u = &h2 * p.wd.transpose();
        add_row(&mut u, &p.bd);
        let r = u.map(|v| v.max(0.0));
        let mut output = &r * p.wo.transpose();
        add_row(&mut output, &p.bo);
        ForwardCache {
            l1,
            l2,
            masks1,
            mask2,
            h2,
            u,
            r,
            output,
        }
    }

    /// Single-window forward pass returning the scaled prediction.
    pub fn forward(&self, window: &[f64], training: bool, rng: &mut ChaCha8Rng) -> Result<(f64, ForwardCache)> {
        let cache = self.forward_batch(&[window], if training { Some(rng) } else { None })?;
        Ok((cache.output[(0, 0)], cache))
    }

    /// Gradients of a loss whose derivative with respect to each output
    /// row is `d_output`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &Mat) -> Params {
        let p = &self.params;
        let s = &self.shape;
        let mut g = Params::zeros(s);
        g.wo = d_output.tr_mul(&cache.r);
        g.bo = col_sums(d_output);
        let dr = d_output * &p.wo;
        let du = dr.zip_map(&cache.u, |d, u| if u > 0.0 { d } else { 0.0 });
        g.wd = du.tr_mul(&cache.h2);
        g.bd = col_sums(&du);
        let mut dh2 = &du * &p.wd;
        if let Some(m) = &cache.mask2 {
            dh2.component_mul_assign(m);
        }

        let bsz = d_output.nrows();
        let steps = cache.l2.steps.len();
        let mut above2 = vec![Mat::zeros(bsz, s.units2); steps];
        above2[steps - 1] = dh2;
        let (w2, b2, mut dx2) = lstm_backward(&p.w2, &cache.l2, &above2, s.units1, s.units2);
        g.w2 = w2;
        g.b2 = b2;
        if !cache.masks1.is_empty() {
            for (d, m) in dx2.iter_mut().zip(&cache.masks1) {
                d.component_mul_assign(m);
            }
        }
        let (w1, b1, _) = lstm_backward(&p.w1, &cache.l1, &dx2, 1, s.units1);
        g.w1 = w1;
        g.b1 = b1;
        g
    }

    /// Mean squared error over the batch and its gradient, dropout off.
    pub fn mse_gradient(&self, windows: &[&[f64]], targets: &[f64]) -> Result<(f64, Params)> {
        if windows.len() != targets.len() {
            return Err(Error::LengthMismatch { left: windows.len(), right: targets.len() });
        }
        let cache = self.forward_batch(windows, None)?;
        Ok(self.mse_backward(&cache, targets))
    }

    pub(crate) fn mse_backward(&self, cache: &ForwardCache, targets: &[f64]) -> (f64, Params) {
        let n = targets.len() as f64;
        let resid = Mat::from_fn(targets.len(), 1, |b, _| cache.output[(b, 0)] - targets[b]);
        let loss = resid.iter().map(|r| r * r).sum::<f64>() / n;
        let grad = self.backward(cache, &(resid * (2.0 / n)));
        (loss, grad)
    }

    /// Inference predictions for many windows, in chunks.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(rows.len());
        for chunk in rows.chunks(256) {
            let windows: Vec<&[f64]> = chunk.iter().map(|r| r.as_slice()).collect();
            let cache = self.forward_batch(&windows, None)?;
            out.extend(cache.output.iter().copied());
        }
        Ok(out)
    }

    pub fn predict_window(&self, window: &[f64]) -> Result<f64> {
        Ok(self.forward_batch(&[window], None)?.output[(0, 0)])
    }
}
