//! Synthetic benchmark models with ground-truth (C)MI.
//!
//! | model | data | truth |
//! |-------|------|-------|
//! | `gauss-corr` | `d` independent pairs `(Xᵢ, Yᵢ)` with correlation ρ | `−(d/2) ln(1 − ρ²)` |
//! | `linear-I` | `Z ~ U(−½, ½)^{d_z}`, `X ~ N(0,1)`, `Y = X + N(Z₁, σ²)` | `½ ln(1 + 1/σ²)` |
//! | `linear-II` | `Z ~ N(0, I)`, `Y = X + N(wᵀZ, σ²)`, `‖w‖₁ = 1` | `½ ln(1 + 1/σ²)` |
//! | `nonlinear` | `Z ~ N(𝟙, I)`, `X = f₁(η₁)`, `Y = f₂(A_zy Z + A_xy X + η₂)` | KSG on `(X, Y, A_zy Z)` |
//! | `post-nonlinear` | `X = cos(a_x Z + η₁)`, `Y = cos(c X + b_y Z + η₂)` (or `c = 0`) | 0 under CI |
//!
//! Random model parameters (w, A_zy, f₁, f₂, a_x, b_y, c) are drawn from a
//! stream of the spec seed and stay fixed for every sample of a dataset;
//! samples come from a second stream, so fresh draws of the same model are
//! available for oracles.

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cit::CiLabel;
use crate::dataset::SampleSet;
use crate::error::{Error, Result};
use crate::knn::ksg_cmi;
use crate::matrix::RowMatrix;
use crate::seed;

pub const DEFAULT_SIGMA: f64 = 0.1;
pub const NONLINEAR_A_XY: f64 = 2.0;
pub const NONLINEAR_NOISE_VAR: f64 = 0.1;
pub const POST_NONLINEAR_NOISE_SD: f64 = 0.5;
pub const DEFAULT_ORACLE_N: usize = 50_000;
pub const ORACLE_K: usize = 5;

const PARAM_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;

/// Model family and its fixed parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelKind {
    GaussCorr {
        dim: usize,
        rho: f64,
    },
    #[serde(rename = "linear-I")]
    LinearI { d_z: usize, sigma: f64 },
    #[serde(rename = "linear-II")]
    LinearII { d_z: usize, sigma: f64 },
    Nonlinear {
        d_z: usize,
        #[serde(default = "default_a_xy")]
        a_xy: f64,
    },
    PostNonlinear { d_z: usize, dependent: bool },
}

fn default_a_xy() -> f64 {
    NONLINEAR_A_XY
}

/// A fully specified synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundTruthMethod {
    Analytic,
    KsgOnU,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub value: f64,
    pub method: GroundTruthMethod,
}

impl GroundTruth {
    fn analytic(value: f64) -> Self {
        Self {
            value,
            method: GroundTruthMethod::Analytic,
        }
    }
}

/// Bounded non-linearities of the non-linear model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundedFn {
    Cos,
    Tanh,
    ExpNegAbs,
}

impl BoundedFn {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            BoundedFn::Cos => v.cos(),
            BoundedFn::Tanh => v.tanh(),
            BoundedFn::ExpNegAbs => (-v.abs()).exp(),
        }
    }

    fn draw(rng: &mut seed::Rng) -> Self {
        [BoundedFn::Cos, BoundedFn::Tanh, BoundedFn::ExpNegAbs][rng.random_range(0..3)]
    }
}

/// Analytic MI of `d` independent correlated Gaussian pairs.
pub fn gauss_corr_truth(dim: usize, rho: f64) -> f64 {
    -0.5 * dim as f64 * (1.0 - rho * rho).ln()
}

/// Analytic CMI of both linear models: given Z, `Y ~ N(μ(Z), 1 + σ²)` and
/// `Y | X ~ N(X + μ(Z), σ²)`.
pub fn linear_truth(sigma: f64) -> f64 {
    0.5 * (1.0 + 1.0 / (sigma * sigma)).ln()
}

/// Differential entropy of `N(0, var)` by composite Simpson quadrature of
/// `−∫ φ ln φ` over ±12 standard deviations.
pub fn gaussian_entropy_quadrature(var: f64) -> f64 {
    const STEPS: usize = 20_000;
    let sd = var.sqrt();
    let (a, b) = (-12.0 * sd, 12.0 * sd);
    let h = (b - a) / STEPS as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    let integrand = |x: f64| {
        let p = norm * (-x * x / (2.0 * var)).exp();
        if p > 0.0 {
            -p * p.ln()
        } else {
            0.0
        }
    };
    let mut s = integrand(a) + integrand(b);
    for i in 1..STEPS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * integrand(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Numerical-integration cross-check of [`linear_truth`]: `h(Y|Z) − h(Y|X,Z)`.
pub fn linear_truth_quadrature(sigma: f64) -> f64 {
    gaussian_entropy_quadrature(1.0 + sigma * sigma) - gaussian_entropy_quadrature(sigma * sigma)
}

fn normal_matrix(n: usize, d: usize, mean: f64, rng: &mut seed::Rng) -> RowMatrix {
    let data = (0..n * d)
        .map(|_| mean + Distribution::<f64>::sample(&StandardNormal, rng))
        .collect();
    RowMatrix::new(n, d, data).expect("shape")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2_normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

fn require_dz(d_z: usize) -> Result<()> {
    if d_z == 0 {
        return Err(Error::InvalidConfig("d_z must be ≥ 1".into()));
    }
    Ok(())
}

/// Correlated Gaussians: `dim` independent coordinate pairs, each with correlation ρ.
pub fn gen_gauss_corr(dim: usize, rho: f64, n: usize, seed: u64) -> Result<(SampleSet, GroundTruth)> {
    if dim == 0 {
        return Err(Error::InvalidConfig("dimension must be ≥ 1".into()));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidConfig(format!("|rho| must be < 1, got {rho}")));
    }
    let mut rng = seed::rng(seed::derive(seed, SAMPLE_STREAM));
    let x = normal_matrix(n, dim, 0.0, &mut rng);
    let e = normal_matrix(n, dim, 0.0, &mut rng);
    let s = (1.0 - rho * rho).sqrt();
    let y_data = x
        .as_slice()
        .iter()
        .zip(e.as_slice())
        .map(|(&xi, &ei)| rho * xi + s * ei)
        .collect();
    let y = RowMatrix::new(n, dim, y_data)?;
    Ok((
        SampleSet::unconditional(x, y)?,
        GroundTruth::analytic(gauss_corr_truth(dim, rho)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearModel {
    I,
    II,
}

/// The fixed unit-ℓ₁ weight vector of linear Model II for a seed.
pub fn linear_ii_weights(d_z: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(seed, PARAM_STREAM));
    let mut w: Vec<f64> = (0..d_z).map(|_| StandardNormal.sample(&mut rng)).collect();
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    w.iter_mut().for_each(|v| *v /= l1);
    w
}

/// Linear Models I and II.
pub fn gen_linear(
    model: LinearModel,
    d_z: usize,
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<(SampleSet, GroundTruth)> {
    require_dz(d_z)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma must be > 0, got {sigma}")));
    }
    let mut rng = seed::rng(seed::derive(seed, SAMPLE_STREAM));
    let x = normal_matrix(n, 1, 0.0, &mut rng);
    let (z, mu): (RowMatrix, Vec<f64>) = match model {
        LinearModel::I => {
            let data = (0..n * d_z).map(|_| rng.random_range(-0.5..0.5)).collect();
            let z = RowMatrix::new(n, d_z, data)?;
            let mu = (0..n).map(|i| z.get(i, 0)).collect();
            (z, mu)
        }
        LinearModel::II => {
            let w = linear_ii_weights(d_z, seed);
            let z = normal_matrix(n, d_z, 0.0, &mut rng);
            let mu = (0..n).map(|i| dot(&w, z.row(i))).collect();
            (z, mu)
        }
    };
    let noise = Normal::new(0.0, sigma).expect("sigma > 0");
    let y = RowMatrix::column(
        (0..n)
            .map(|i| x.get(i, 0) + mu[i] + noise.sample(&mut rng))
            .collect(),
    );
    Ok((SampleSet::new(x, y, z)?, GroundTruth::analytic(linear_truth(sigma))))
}

/// Fixed parameters of one non-linear dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearModel {
    pub d_z: usize,
    pub f1: BoundedFn,
    pub f2: BoundedFn,
    /// Unit ℓ₂ norm.
    pub a_zy: Vec<f64>,
    pub a_xy: f64,
    pub noise_var: f64,
}

impl NonlinearModel {
    pub fn from_seed(d_z: usize, a_xy: f64, seed: u64) -> Result<Self> {
        require_dz(d_z)?;
        let mut rng = seed::rng(seed::derive(seed, PARAM_STREAM));
        let f1 = BoundedFn::draw(&mut rng);
        let f2 = BoundedFn::draw(&mut rng);
        let a_zy = l2_normalized((0..d_z).map(|_| StandardNormal.sample(&mut rng)).collect());
        Ok(Self {
            d_z,
            f1,
            f2,
            a_zy,
            a_xy,
            noise_var: NONLINEAR_NOISE_VAR,
        })
    }

    /// Draw `n` samples; also returns `U = A_zy Z` for every row.
    pub fn sample(&self, n: usize, sample_seed: u64) -> Result<(SampleSet, RowMatrix)> {
        let mut rng = seed::rng(sample_seed);
        let z = normal_matrix(n, self.d_z, 1.0, &mut rng);
        let eta = Normal::new(0.0, self.noise_var.sqrt()).expect("variance > 0");
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let mut us = Vec::with_capacity(n);
        for i in 0..n {
            let u = dot(&self.a_zy, z.row(i));
            let x = self.f1.apply(eta.sample(&mut rng));
            let y = self.f2.apply(u + self.a_xy * x + eta.sample(&mut rng));
            xs.push(x);
            ys.push(y);
            us.push(u);
        }
        Ok((
            SampleSet::new(RowMatrix::column(xs), RowMatrix::column(ys), z)?,
            RowMatrix::column(us),
        ))
    }

    /// `I(X; Y | Z) = I(X; Y | U)` with `U = A_zy Z` one-dimensional, estimated
    /// by KSG on `oracle_n` fresh samples.
    pub fn ground_truth(&self, oracle_n: usize, oracle_seed: u64) -> Result<GroundTruth> {
        let (d, u) = self.sample(oracle_n, oracle_seed)?;
        let (x, y, _) = d.into_blocks();
        let reduced = SampleSet::new(x, y, u)?;
        Ok(GroundTruth {
            value: ksg_cmi(&reduced, ORACLE_K)?,
            method: GroundTruthMethod::KsgOnU,
        })
    }
}

/// Non-linear model dataset and its parameter object.
pub fn gen_nonlinear(d_z: usize, n: usize, seed: u64) -> Result<(SampleSet, NonlinearModel)> {
    let model = NonlinearModel::from_seed(d_z, NONLINEAR_A_XY, seed)?;
    let (d, _) = model.sample(n, seed::derive(seed, SAMPLE_STREAM))?;
    Ok((d, model))
}

/// Ground truth for a non-linear model from a fresh oracle draw.
pub fn nonlinear_ground_truth(model: &NonlinearModel, oracle_n: usize, oracle_seed: u64) -> Result<GroundTruth> {
    model.ground_truth(oracle_n, oracle_seed)
}

/// Fixed parameters of one post non-linear CIT dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostNonlinearModel {
    pub d_z: usize,
    /// Unit ℓ₂ norm, entries drawn from U(0, 1) before normalizing.
    pub a_x: Vec<f64>,
    pub b_y: Vec<f64>,
    /// Strength of the X → Y term, drawn from U[0, 2]; 0 under CI.
    pub c: f64,
    pub dependent: bool,
}

impl PostNonlinearModel {
    pub fn from_seed(d_z: usize, dependent: bool, seed: u64) -> Result<Self> {
        require_dz(d_z)?;
        let mut rng = seed::rng(seed::derive(seed, PARAM_STREAM));
        let a_x = l2_normalized((0..d_z).map(|_| rng.random::<f64>()).collect());
        let b_y = l2_normalized((0..d_z).map(|_| rng.random::<f64>()).collect());
        let c = rng.random_range(0.0..=2.0);
        Ok(Self {
            d_z,
            a_x,
            b_y,
            c,
            dependent,
        })
    }

    pub fn label(&self) -> CiLabel {
        if self.dependent {
            CiLabel::Dependent
        } else {
            CiLabel::Independent
        }
    }

    /// Draw `n` samples; also returns `(a_x Z, b_y Z)` for every row.
    pub fn sample(&self, n: usize, sample_seed: u64) -> Result<(SampleSet, RowMatrix)> {
        let mut rng = seed::rng(sample_seed);
        let z = normal_matrix(n, self.d_z, 1.0, &mut rng);
        let eta = Normal::new(0.0, POST_NONLINEAR_NOISE_SD).expect("sd > 0");
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let mut us = Vec::with_capacity(2 * n);
        for i in 0..n {
            let ua = dot(&self.a_x, z.row(i));
            let ub = dot(&self.b_y, z.row(i));
            let x = (ua + eta.sample(&mut rng)).cos();
            let coupling = if self.dependent { self.c * x } else { 0.0 };
            let y = (coupling + ub + eta.sample(&mut rng)).cos();
            xs.push(x);
            ys.push(y);
            us.extend_from_slice(&[ua, ub]);
        }
        Ok((
            SampleSet::new(RowMatrix::column(xs), RowMatrix::column(ys), z)?,
            RowMatrix::new(n, 2, us)?,
        ))
    }

    /// 0 under CI; otherwise KSG on `(X, Y, (a_x Z, b_y Z))`, which carries all
    /// of Z's influence.
    pub fn ground_truth(&self, oracle_n: usize, oracle_seed: u64) -> Result<GroundTruth> {
        if !self.dependent {
            return Ok(GroundTruth::analytic(0.0));
        }
        let (d, u) = self.sample(oracle_n, oracle_seed)?;
        let (x, y, _) = d.into_blocks();
        Ok(GroundTruth {
            value: ksg_cmi(&SampleSet::new(x, y, u)?, ORACLE_K)?,
            method: GroundTruthMethod::KsgOnU,
        })
    }
}

/// One post non-linear noise dataset with its CI label.
pub fn gen_post_nonlinear_cit(d_z: usize, n: usize, dependent: bool, seed: u64) -> Result<(SampleSet, CiLabel)> {
    let model = PostNonlinearModel::from_seed(d_z, dependent, seed)?;
    let (d, _) = model.sample(n, seed::derive(seed, SAMPLE_STREAM))?;
    Ok((d, model.label()))
}

/// Options for truths that need an oracle sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub n: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            n: DEFAULT_ORACLE_N,
            seed: 0x0_0ac1e,
        }
    }
}

/// A generated dataset with everything known about it.
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: SampleSet,
    pub label: Option<CiLabel>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n: usize, seed: u64) -> Self {
        Self { kind, n, seed }
    }

    pub fn generate(&self) -> Result<Generated> {
        let (n, seed) = (self.n, self.seed);
        Ok(match &self.kind {
            ModelKind::GaussCorr { dim, rho } => Generated {
                data: gen_gauss_corr(*dim, *rho, n, seed)?.0,
                label: None,
            },
            ModelKind::LinearI { d_z, sigma } => Generated {
                data: gen_linear(LinearModel::I, *d_z, n, *sigma, seed)?.0,
                label: None,
            },
            ModelKind::LinearII { d_z, sigma } => Generated {
                data: gen_linear(LinearModel::II, *d_z, n, *sigma, seed)?.0,
                label: None,
            },
            ModelKind::Nonlinear { d_z, a_xy } => {
                let m = NonlinearModel::from_seed(*d_z, *a_xy, seed)?;
                Generated {
                    data: m.sample(n, seed::derive(seed, SAMPLE_STREAM))?.0,
                    label: None,
                }
            }
            ModelKind::PostNonlinear { d_z, dependent } => {
                let (data, label) = gen_post_nonlinear_cit(*d_z, n, *dependent, seed)?;
                Generated {
                    data,
                    label: Some(label),
                }
            }
        })
    }

    /// Ground truth. Analytic where available; oracle-based models use `oracle`.
    pub fn ground_truth(&self, oracle: OracleOptions) -> Result<GroundTruth> {
        match &self.kind {
            ModelKind::GaussCorr { dim, rho } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::InvalidConfig(format!("|rho| must be < 1, got {rho}")));
                }
                Ok(GroundTruth::analytic(gauss_corr_truth(*dim, *rho)))
            }
            ModelKind::LinearI { sigma, .. } | ModelKind::LinearII { sigma, .. } => {
                Ok(GroundTruth::analytic(linear_truth(*sigma)))
            }
            ModelKind::Nonlinear { d_z, a_xy } => {
                NonlinearModel::from_seed(*d_z, *a_xy, self.seed)?.ground_truth(oracle.n, oracle.seed)
            }
            ModelKind::PostNonlinear { d_z, dependent } => {
                PostNonlinearModel::from_seed(*d_z, *dependent, self.seed)?
                    .ground_truth(oracle.n, oracle.seed)
            }
        }
    }

    /// `(d_x, d_y, d_z)` of generated data.
    pub fn dims(&self) -> (usize, usize, usize) {
        match &self.kind {
            ModelKind::GaussCorr { dim, .. } => (*dim, *dim, 0),
            ModelKind::LinearI { d_z, .. }
            | ModelKind::LinearII { d_z, .. }
            | ModelKind::Nonlinear { d_z, .. }
            | ModelKind::PostNonlinear { d_z, .. } => (1, 1, *d_z),
        }
    }
}

/// Sidecar metadata written next to a generated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub spec: ModelSpec,
    pub d_x: usize,
    pub d_y: usize,
    pub d_z: usize,
    pub n: usize,
    pub ground_truth: GroundTruth,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<CiLabel>,
}
