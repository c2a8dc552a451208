//! Feed-forward network with ReLU hidden layers and a single logit output.
//!
//! Parameters live in one flat vector, layer by layer, each layer laid out as
//! its weight matrix (`in_dim × out_dim`, row-major) followed by its biases.
//! Keeping them flat lets the optimizer and the gradient checker treat the
//! whole network as one vector.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;
use crate::seed;

/// Layer sizes of a classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    input_dim: usize,
    hidden_layer_sizes: Vec<usize>,
    bias: bool,
}

impl MlpArchitecture {
    /// ReLU network `input_dim → hidden[0] → … → 1`. At least one hidden layer.
    pub fn new(input_dim: usize, hidden_layer_sizes: Vec<usize>) -> Result<Self> {
        if hidden_layer_sizes.is_empty() {
            return Err(Error::InvalidConfig(
                "an MLP needs at least one hidden layer".into(),
            ));
        }
        let arch = Self {
            input_dim,
            hidden_layer_sizes,
            bias: true,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// The default two hidden layers of 64 units.
    pub fn standard(input_dim: usize) -> Result<Self> {
        Self::new(input_dim, vec![64, 64])
    }

    /// A bias-free linear model on the raw features (logistic regression
    /// through the origin). Not an MLP; used to demonstrate why the
    /// two-sample estimator needs non-linear features.
    pub fn logistic(input_dim: usize) -> Result<Self> {
        let arch = Self {
            input_dim,
            hidden_layer_sizes: Vec::new(),
            bias: false,
        };
        arch.validate()?;
        Ok(arch)
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input dimension must be > 0".into()));
        }
        if self.hidden_layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig("hidden layer sizes must be > 0".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_layer_sizes(&self) -> &[usize] {
        &self.hidden_layer_sizes
    }

    pub fn has_bias(&self) -> bool {
        self.bias
    }

    /// `(in, out)` for every dense layer including the output layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layer_sizes.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_layer_sizes);
        dims.push(1);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerLayout {
    in_dim: usize,
    out_dim: usize,
    w_off: usize,
    b_off: Option<usize>,
}

impl LayerLayout {
    fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.w_off..self.w_off + self.in_dim * self.out_dim]
    }
}

/// A binary classifier: the logit is the network output, `P(label = 1) = σ(logit)`.
#[derive(Debug, Clone)]
pub struct MlpClassifier {
    arch: MlpArchitecture,
    layout: Vec<LayerLayout>,
    params: Vec<f64>,
    weight_mask: Vec<bool>,
    pub(crate) adam: AdamState,
}

/// Scratch buffers for a minibatch forward/backward pass.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl MlpClassifier {
    /// Fan-in scaled uniform initialization, `U(-√(6/fan_in), √(6/fan_in))`, zero biases.
    pub fn new(arch: MlpArchitecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut layout = Vec::new();
        let mut off = 0;
        for (in_dim, out_dim) in arch.layer_shapes() {
            let w_off = off;
            off += in_dim * out_dim;
            let b_off = if arch.bias {
                let b = off;
                off += out_dim;
                Some(b)
            } else {
                None
            };
            layout.push(LayerLayout {
                in_dim,
                out_dim,
                w_off,
                b_off,
            });
        }
        let mut params = vec![0.0; off];
        let mut weight_mask = vec![false; off];
        let mut rng = seed::rng(seed);
        for l in &layout {
            let limit = (6.0 / l.in_dim as f64).sqrt();
            for p in l.w_off..l.w_off + l.in_dim * l.out_dim {
                params[p] = rng.random_range(-limit..limit);
                weight_mask[p] = true;
            }
        }
        Ok(Self {
            adam: AdamState::new(off),
            arch,
            layout,
            params,
            weight_mask,
        })
    }

    pub fn architecture(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_parameters(&self) -> usize {
        self.params.len()
    }

    /// True for entries of [`parameters`](Self::parameters) that are weights
    /// (as opposed to biases).
    pub fn weight_mask(&self) -> &[bool] {
        &self.weight_mask
    }

    /// Weight matrix `(in, out)` shapes, one per layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.layout.iter().map(|l| (l.in_dim, l.out_dim)).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Pre-sigmoid output for one input.
    pub fn forward_logit(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                got: x.len(),
            });
        }
        let mut ws = Workspace::default();
        Ok(self.forward_batch(x, 1, &mut ws)[0])
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.forward_logit(x).map(super::loss::sigmoid)
    }

    /// Logits for every row.
    pub fn logits(&self, rows: &RowMatrix) -> Result<Vec<f64>> {
        if rows.cols() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                got: rows.cols(),
            });
        }
        const CHUNK: usize = 256;
        let mut ws = Workspace::default();
        let mut out = Vec::with_capacity(rows.rows());
        let d = rows.cols();
        for chunk in rows.as_slice().chunks(CHUNK * d.max(1)) {
            let b = chunk.len().checked_div(d).unwrap_or(0);
            out.extend_from_slice(self.forward_batch(chunk, b, &mut ws));
        }
        Ok(out)
    }

    /// Probabilities `σ(logit)` for every row.
    pub fn predict_proba_rows(&self, rows: &RowMatrix) -> Result<Vec<f64>> {
        Ok(self
            .logits(rows)?
            .into_iter()
            .map(super::loss::sigmoid)
            .collect())
    }

    /// Forward a row-major batch of `b` inputs; returns the `b` logits.
    pub(crate) fn forward_batch<'w>(
        &self,
        input: &[f64],
        b: usize,
        ws: &'w mut Workspace,
    ) -> &'w [f64] {
        let n_layers = self.layout.len();
        ws.acts.resize_with(n_layers + 1, Vec::new);
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(&input[..b * self.arch.input_dim]);
        for (li, l) in self.layout.iter().enumerate() {
            let (head, tail) = ws.acts.split_at_mut(li + 1);
            let a_in = &head[li];
            let a_out = &mut tail[0];
            a_out.clear();
            a_out.resize(b * l.out_dim, 0.0);
            let w = l.weights(&self.params);
            for i in 0..b {
                let row_out = &mut a_out[i * l.out_dim..(i + 1) * l.out_dim];
                if let Some(bo) = l.b_off {
                    row_out.copy_from_slice(&self.params[bo..bo + l.out_dim]);
                }
                let row_in = &a_in[i * l.in_dim..(i + 1) * l.in_dim];
                for (k, &xk) in row_in.iter().enumerate() {
                    if xk != 0.0 {
                        axpy(xk, &w[k * l.out_dim..(k + 1) * l.out_dim], row_out);
                    }
                }
                if li + 1 < n_layers {
                    for v in row_out.iter_mut() {
                        *v = v.max(0.0);
                    }
                }
            }
        }
        &ws.acts[n_layers]
    }

    /// Accumulate into `grad` the gradient of `Σᵢ dlogits[i] · logitᵢ` with
    /// respect to the parameters, for the batch last passed to
    /// [`forward_batch`](Self::forward_batch) with the same workspace.
    pub(crate) fn backward_batch(&self, dlogits: &[f64], ws: &mut Workspace, grad: &mut [f64]) {
        let n_layers = self.layout.len();
        let b = dlogits.len();
        ws.deltas.resize_with(n_layers + 1, Vec::new);
        ws.deltas[n_layers].clear();
        ws.deltas[n_layers].extend_from_slice(dlogits);
        for li in (0..n_layers).rev() {
            let l = self.layout[li];
            let w = l.weights(&self.params);
            let a_in = &ws.acts[li];
            let (dhead, dtail) = ws.deltas.split_at_mut(li + 1);
            let delta = &dtail[0];
            {
                let gw = &mut grad[l.w_off..l.w_off + l.in_dim * l.out_dim];
                for i in 0..b {
                    let d_i = &delta[i * l.out_dim..(i + 1) * l.out_dim];
                    let a_i = &a_in[i * l.in_dim..(i + 1) * l.in_dim];
                    for (k, &ak) in a_i.iter().enumerate() {
                        if ak != 0.0 {
                            axpy(ak, d_i, &mut gw[k * l.out_dim..(k + 1) * l.out_dim]);
                        }
                    }
                }
            }
            if let Some(bo) = l.b_off {
                let gb = &mut grad[bo..bo + l.out_dim];
                for i in 0..b {
                    axpy(1.0, &delta[i * l.out_dim..(i + 1) * l.out_dim], gb);
                }
            }
            if li > 0 {
                let prev = &mut dhead[li];
                prev.clear();
                prev.resize(b * l.in_dim, 0.0);
                for i in 0..b {
                    let d_i = &delta[i * l.out_dim..(i + 1) * l.out_dim];
                    let a_i = &a_in[i * l.in_dim..(i + 1) * l.in_dim];
                    let p_i = &mut prev[i * l.in_dim..(i + 1) * l.in_dim];
                    for k in 0..l.in_dim {
                        // a_in here is post-ReLU, so a > 0 exactly where the unit was active
                        if a_i[k] > 0.0 {
                            p_i[k] = dot(d_i, &w[k * l.out_dim..(k + 1) * l.out_dim]);
                        }
                    }
                }
            }
        }
    }

    /// Mean BCE plus `l2 · Σ w²` on a batch, and its gradient.
    ///
    /// This is the objective minimized by the classifier trainer; exposed for
    /// gradient verification.
    pub fn bce_objective_and_gradient(
        &self,
        rows: &RowMatrix,
        labels: &[bool],
        l2: f64,
    ) -> Result<(f64, Vec<f64>)> {
        if rows.cols() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                got: rows.cols(),
            });
        }
        if rows.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.rows(),
                got: labels.len(),
            });
        }
        let mut ws = Workspace::default();
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.bce_step(rows.as_slice(), labels, l2, &mut ws, &mut grad);
        Ok((loss, grad))
    }

    /// Objective value only (used for finite differences).
    pub fn bce_objective(&self, rows: &RowMatrix, labels: &[bool], l2: f64) -> Result<f64> {
        let z = self.logits(rows)?;
        let mean = super::loss::bce_with_logits(&z, labels)?;
        Ok(mean + l2 * self.l2_norm_sq())
    }

    pub(crate) fn l2_norm_sq(&self) -> f64 {
        self.params
            .iter()
            .zip(&self.weight_mask)
            .filter(|(_, &w)| w)
            .map(|(p, _)| p * p)
            .sum()
    }

    /// Forward + backward on one batch; writes the gradient into `grad`
    /// (overwriting) and returns the objective.
    pub(crate) fn bce_step(
        &self,
        input: &[f64],
        labels: &[bool],
        l2: f64,
        ws: &mut Workspace,
        grad: &mut [f64],
    ) -> f64 {
        let b = labels.len();
        let logits = self.forward_batch(input, b, ws).to_vec();
        let inv_b = 1.0 / b as f64;
        let mut loss = 0.0;
        let dlogits: Vec<f64> = logits
            .iter()
            .zip(labels)
            .map(|(&z, &l)| {
                loss += super::loss::bce_logit(z, l);
                (super::loss::sigmoid(z) - if l { 1.0 } else { 0.0 }) * inv_b
            })
            .collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.backward_batch(&dlogits, ws, grad);
        let mut penalty = 0.0;
        if l2 > 0.0 {
            for ((g, &p), &is_w) in grad.iter_mut().zip(&self.params).zip(&self.weight_mask) {
                if is_w {
                    *g += 2.0 * l2 * p;
                    penalty += p * p;
                }
            }
        }
        loss * inv_b + l2 * penalty
    }

    pub(crate) fn params_and_adam(&mut self) -> (&mut [f64], &mut AdamState) {
        (&mut self.params, &mut self.adam)
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::loss::sigmoid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn layer_shapes_follow_architecture() {
        let arch = MlpArchitecture::new(2, vec![64, 64]).unwrap();
        let c = MlpClassifier::new(arch, 7).unwrap();
        assert_eq!(c.layer_shapes(), vec![(2, 64), (64, 64), (64, 1)]);
        assert_eq!(c.num_parameters(), 2 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
    }

    #[test]
    fn init_is_seeded() {
        let arch = MlpArchitecture::standard(2).unwrap();
        let a = MlpClassifier::new(arch.clone(), 7).unwrap();
        let b = MlpClassifier::new(arch.clone(), 7).unwrap();
        let c = MlpClassifier::new(arch, 8).unwrap();
        assert_eq!(a.parameters(), b.parameters());
        assert_ne!(a.parameters(), c.parameters());
    }

    #[test]
    fn invalid_architectures() {
        assert!(MlpArchitecture::new(0, vec![4]).is_err());
        assert!(MlpArchitecture::new(3, vec![]).is_err());
        assert!(MlpArchitecture::new(3, vec![4, 0]).is_err());
        assert!(MlpArchitecture::logistic(0).is_err());
    }

    #[test]
    fn zero_network_gives_half() {
        let mut c = MlpClassifier::new(MlpArchitecture::standard(3).unwrap(), 1).unwrap();
        c.parameters_mut().iter_mut().for_each(|p| *p = 0.0);
        let z = c.forward_logit(&[0.3, -2.0, 9.0]).unwrap();
        assert_eq!(z, 0.0);
        assert_eq!(c.predict_proba(&[0.3, -2.0, 9.0]).unwrap(), 0.5);
    }

    #[test]
    fn linear_layer() {
        let mut c = MlpClassifier::new(MlpArchitecture::logistic(2).unwrap(), 1).unwrap();
        c.parameters_mut().copy_from_slice(&[1.0, 1.0]);
        assert_eq!(c.forward_logit(&[2.0, 3.0]).unwrap(), 5.0);
        assert!(c.forward_logit(&[2.0]).is_err());
    }

    #[test]
    fn probability_is_sigmoid_of_logit() {
        let c = MlpClassifier::new(MlpArchitecture::new(4, vec![8, 5]).unwrap(), 3).unwrap();
        let rows = RowMatrix::from_rows(&[[0.1, 0.2, -1.0, 3.0], [2.0, -0.5, 0.0, 1.0]]).unwrap();
        let z = c.logits(&rows).unwrap();
        for (i, r) in rows.iter_rows().enumerate() {
            let p = c.predict_proba(r).unwrap();
            assert_abs_diff_eq!(p, 1.0 / (1.0 + (-z[i]).exp()), epsilon = 1e-15);
            assert_abs_diff_eq!(p, sigmoid(c.forward_logit(r).unwrap()), epsilon = 0.0);
        }
    }

    #[test]
    fn batched_logits_match_single() {
        let c = MlpClassifier::new(MlpArchitecture::new(3, vec![16]).unwrap(), 11).unwrap();
        let rows: Vec<[f64; 3]> = (0..600)
            .map(|i| {
                let t = i as f64 * 0.01;
                [t.sin(), t.cos(), t - 3.0]
            })
            .collect();
        let m = RowMatrix::from_rows(&rows).unwrap();
        let z = c.logits(&m).unwrap();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(z[i], c.forward_logit(r).unwrap());
        }
    }
}
