//! Seeded single- and multiple-index regression generators and the Monte
//! Carlo check of the cosine-model constants.
//!
//! Predictors are i.i.d. `N_p(0, I)`. Normals come from `rand_distr`'s
//! ziggurat `StandardNormal` over ChaCha20 seeded from a `u64`, so a
//! `(seed, spec)` pair reproduces the same bytes on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PhdError, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::moments::Dataset;
use crate::population::cosine_model_constants;

/// Link functions available to [`SimModel::CustomIndex`]; `z` holds the K
/// index values `Bᵀx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `Σ z_k²`.
    SumOfSquares,
    /// `z₁ z₂`; needs K = 2.
    Product,
    /// `sin z₁ + z₂²`; needs K = 2.
    SinePlusSquare,
    /// `Σ cos(2 z_k − π/4)`.
    CosineSum,
}

impl Link {
    fn required_k(self) -> Option<usize> {
        match self {
            Link::Product | Link::SinePlusSquare => Some(2),
            Link::SumOfSquares | Link::CosineSum => None,
        }
    }

    fn eval(self, z: &[f64]) -> f64 {
        match self {
            Link::SumOfSquares => z.iter().map(|v| v * v).sum(),
            Link::Product => z[0] * z[1],
            Link::SinePlusSquare => z[0].sin() + z[1] * z[1],
            Link::CosineSum => z.iter().map(|v| (2.0 * v - std::f64::consts::FRAC_PI_4).cos()).sum(),
        }
    }
}

/// Regression function and noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimModel {
    /// `Y = cos(2β₁ᵀX − π/4) + σε`, `‖β₁‖ = 1`.
    CosineIndex { beta: Vec<f64>, sigma: f64 },
    /// `Y = X₁² + σε`.
    QuadraticFirst { sigma: f64 },
    /// `Y = βᵀX + σε`.
    LinearIndex { beta: Vec<f64>, sigma: f64 },
    /// `Y = g(Bᵀx) + σε` with `B` given as K columns of length p.
    CustomIndex { b: Vec<Vec<f64>>, link: Link, sigma: f64 },
}

impl SimModel {
    fn sigma(&self) -> f64 {
        match self {
            SimModel::CosineIndex { sigma, .. }
            | SimModel::QuadraticFirst { sigma }
            | SimModel::LinearIndex { sigma, .. }
            | SimModel::CustomIndex { sigma, .. } => *sigma,
        }
    }

    /// Noise-free regression function.
    pub fn mean_response(&self, x: &[f64]) -> f64 {
        match self {
            SimModel::CosineIndex { beta, .. } => (2.0 * dot(beta, x) - std::f64::consts::FRAC_PI_4).cos(),
            SimModel::QuadraticFirst { .. } => x[0] * x[0],
            SimModel::LinearIndex { beta, .. } => dot(beta, x),
            SimModel::CustomIndex { b, link, .. } => {
                let z: Vec<f64> = b.iter().map(|col| dot(col, x)).collect();
                link.eval(&z)
            }
        }
    }
}

/// A reproducible simulation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub p: usize,
    pub n: usize,
    pub model: SimModel,
    pub seed: u64,
}

const UNIT_TOL: f64 = 1e-12;

impl SimSpec {
    pub fn new(p: usize, n: usize, model: SimModel, seed: u64) -> Result<Self> {
        let spec = Self { p, n, model, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Cosine model with `β₁ = e₁`.
    pub fn cosine(p: usize, n: usize, sigma: f64, seed: u64) -> Result<Self> {
        let mut beta = vec![0.0; p];
        if p > 0 {
            beta[0] = 1.0;
        }
        Self::new(p, n, SimModel::CosineIndex { beta, sigma }, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(PhdError::InvalidData("p must be positive".into()));
        }
        let sigma = self.model.sigma();
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(PhdError::InvalidData(format!("noise level {sigma} must be finite and ≥ 0")));
        }
        let check_len = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != self.p || v.iter().any(|x| !x.is_finite()) {
                return Err(PhdError::DimensionMismatch(format!("{what} must be {} finite values", self.p)));
            }
            Ok(())
        };
        match &self.model {
            SimModel::CosineIndex { beta, .. } => {
                check_len(beta, "β₁")?;
                if (norm(beta) - 1.0).abs() > UNIT_TOL {
                    return Err(PhdError::InvalidVector(format!("β₁ must be unit length (‖β₁‖ = {})", norm(beta))));
                }
            }
            SimModel::QuadraticFirst { .. } => {}
            SimModel::LinearIndex { beta, .. } => check_len(beta, "β")?,
            SimModel::CustomIndex { b, link, .. } => {
                if b.is_empty() {
                    return Err(PhdError::InvalidData("B needs at least one column".into()));
                }
                for col in b {
                    check_len(col, "each column of B")?;
                    if (norm(col) - 1.0).abs() > UNIT_TOL {
                        return Err(PhdError::InvalidVector("columns of B must be unit length".into()));
                    }
                }
                if let Some(k) = link.required_k() {
                    if b.len() != k {
                        return Err(PhdError::InvalidData(format!("{link:?} needs K = {k}, got {}", b.len())));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Draws `n` rows: for each row, `p` predictor normals then one noise normal.
pub fn simulate(spec: &SimSpec) -> Result<Dataset<f64>> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let sigma = spec.model.sigma();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    let mut row = vec![0.0; p];
    for _ in 0..n {
        for v in row.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let eps: f64 = StandardNormal.sample(&mut rng);
        let mean = spec.model.mean_response(&row);
        y.push(if sigma == 0.0 { mean } else { mean + sigma * eps });
        x.extend_from_slice(&row);
    }
    Dataset::new(y, Matrix::from_row_major(n, p, x)?, None)
}

/// Monte Carlo estimate with its plug-in standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    /// `|estimate − target| ≤ k·se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error
    }
}

/// Monte Carlo estimates of `E Y`, `cov(β₁ᵀX, Y)` and `E[(Y − μ_y)(β₁ᵀX)²]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConstants {
    pub n_mc: usize,
    pub mu_y: McEstimate,
    pub cov_zy: McEstimate,
    pub lambda1: McEstimate,
}

/// Closed-form targets `(E Y, cov coefficient, λ₁)`.
pub fn constant_targets() -> (f64, f64, f64) {
    cosine_model_constants::<f64>()
}

/// Draws per Monte Carlo chunk; each chunk uses its own ChaCha stream.
pub const MC_CHUNK: usize = 1 << 16;

/// Power sums of `y` and `z = β₁ᵀx` for the three estimates.
#[derive(Default, Clone, Copy)]
struct Sums {
    y: f64,
    yy: f64,
    z: f64,
    yz: f64,
    z2: f64,
    yz2: f64,
    yyz2: f64,
    z4: f64,
    yz4: f64,
    yyz4: f64,
}

impl Sums {
    fn push(&mut self, y: f64, z: f64) {
        let (z2, yy) = (z * z, y * y);
        let z4 = z2 * z2;
        self.y += y;
        self.yy += yy;
        self.z += z;
        self.yz += y * z;
        self.z2 += z2;
        self.yz2 += y * z2;
        self.yyz2 += yy * z2;
        self.z4 += z4;
        self.yz4 += y * z4;
        self.yyz4 += yy * z4;
    }

    fn add(mut self, o: Sums) -> Sums {
        self.y += o.y;
        self.yy += o.yy;
        self.z += o.z;
        self.yz += o.yz;
        self.z2 += o.z2;
        self.yz2 += o.yz2;
        self.yyz2 += o.yyz2;
        self.z4 += o.z4;
        self.yz4 += o.yz4;
        self.yyz4 += o.yyz4;
        self
    }
}

/// Per-sample terms are `y`, `z(y − ȳ)` and `z²(y − ȳ)`; each standard error
/// is the sample standard deviation of its terms over `√n_mc`.
///
/// The result does not depend on the thread count: chunk `c` draws from
/// stream `c` of the seed and chunk sums are combined in chunk order.
pub fn mc_constants(spec: &SimSpec, n_mc: usize) -> Result<McConstants> {
    spec.validate()?;
    let (beta, sigma) = match &spec.model {
        SimModel::CosineIndex { beta, sigma } => (beta.clone(), *sigma),
        _ => return Err(PhdError::UnsupportedModel("Monte Carlo constants need the cosine index model".into())),
    };
    if n_mc < 2 {
        return Err(PhdError::InsufficientData { n: n_mc, required: 2 });
    }
    let p = spec.p;
    let chunks = n_mc.div_ceil(MC_CHUNK);
    let partial: Vec<Sums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
            rng.set_stream(c as u64);
            let len = MC_CHUNK.min(n_mc - c * MC_CHUNK);
            let mut s = Sums::default();
            let mut row = vec![0.0; p];
            for _ in 0..len {
                for v in row.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let eps: f64 = StandardNormal.sample(&mut rng);
                let z = dot(&beta, &row);
                s.push((2.0 * z - std::f64::consts::FRAC_PI_4).cos() + sigma * eps, z);
            }
            s
        })
        .collect();
    let s = partial.into_iter().fold(Sums::default(), Sums::add);
    let nf = n_mc as f64;
    let ybar = s.y / nf;
    let estimate = |sum: f64, sum_sq: f64| {
        let mean = sum / nf;
        let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        McEstimate { estimate: mean, std_error: (var / nf).sqrt() }
    };
    Ok(McConstants {
        n_mc,
        mu_y: estimate(s.y, s.yy),
        cov_zy: estimate(s.yz - ybar * s.z, s.yyz2 - 2.0 * ybar * s.yz2 + ybar * ybar * s.z2),
        lambda1: estimate(s.yz2 - ybar * s.z2, s.yyz4 - 2.0 * ybar * s.yz4 + ybar * ybar * s.z4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::compute_moments;

    #[test]
    fn noiseless_cosine_is_exact() {
        let spec = SimSpec::cosine(4, 200, 0.0, 1).unwrap();
        let d = simulate(&spec).unwrap();
        for i in 0..d.n() {
            assert_eq!(d.y()[i], (2.0 * d.row(i)[0] - std::f64::consts::FRAC_PI_4).cos());
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SimSpec::cosine(3, 50, 0.5, 42).unwrap();
        assert_eq!(simulate(&spec).unwrap(), simulate(&spec).unwrap());
        let other = SimSpec { seed: 43, ..spec.clone() };
        assert_ne!(simulate(&spec).unwrap(), simulate(&other).unwrap());
    }

    #[test]
    fn linear_model_recovers_beta() {
        let n = 10_000;
        let beta = vec![0.5, -1.0, 2.0];
        let spec = SimSpec::new(3, n, SimModel::LinearIndex { beta: beta.clone(), sigma: 1.0 }, 5).unwrap();
        let m = compute_moments(&simulate(&spec).unwrap()).unwrap();
        let err: Vec<f64> = m.beta.iter().zip(&beta).map(|(a, b)| a - b).collect();
        assert!(norm(&err) <= 5.0 / (n as f64).sqrt());
    }

    #[test]
    fn quadratic_first_has_no_linear_trend() {
        let spec = SimSpec::new(3, 100_000, SimModel::QuadraticFirst { sigma: 1.0 }, 6).unwrap();
        let m = compute_moments(&simulate(&spec).unwrap()).unwrap();
        assert!(norm(&m.s_xy) <= 0.02);
    }

    #[test]
    fn predictor_distribution() {
        let n = 20_000;
        let spec = SimSpec::cosine(4, n, 1.0, 7).unwrap();
        let m = compute_moments(&simulate(&spec).unwrap()).unwrap();
        let rt = (n as f64).sqrt();
        assert!(m.xbar.iter().all(|v| v.abs() <= 4.0 / rt));
        let dev = m.s.max_abs_diff(&Matrix::identity(4));
        assert!(dev <= 5.0 / rt, "{dev}");
    }

    #[test]
    fn spec_validation() {
        assert!(SimSpec::new(2, 10, SimModel::CosineIndex { beta: vec![1.0, 1.0], sigma: 0.0 }, 0).is_err());
        assert!(SimSpec::new(2, 10, SimModel::QuadraticFirst { sigma: -1.0 }, 0).is_err());
        let b = vec![vec![1.0, 0.0, 0.0]];
        assert!(SimSpec::new(3, 10, SimModel::CustomIndex { b, link: Link::Product, sigma: 0.0 }, 0).is_err());
        let b = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let spec = SimSpec::new(3, 10, SimModel::CustomIndex { b, link: Link::Product, sigma: 0.0 }, 0).unwrap();
        let d = simulate(&spec).unwrap();
        assert_eq!(d.y()[3], d.row(3)[0] * d.row(3)[1]);
    }

    #[test]
    fn mc_needs_cosine_model() {
        let spec = SimSpec::new(2, 10, SimModel::QuadraticFirst { sigma: 0.0 }, 0).unwrap();
        assert!(matches!(mc_constants(&spec, 1000), Err(PhdError::UnsupportedModel(_))));
    }

    #[test]
    fn mc_small_run_brackets_targets() {
        let spec = SimSpec::cosine(2, 0, 0.0, 11).unwrap();
        let mc = mc_constants(&spec, 200_000).unwrap();
        let (mu_y, c, l1) = constant_targets();
        assert!(mc.mu_y.within(mu_y, 4.0));
        assert!(mc.cov_zy.within(c, 4.0));
        assert!(mc.lambda1.within(l1, 4.0));
    }

    #[test]
    fn mc_sums_match_two_pass() {
        // Oracle: recompute the λ₁ estimate and its standard error with an
        // explicit two-pass loop over the same draws.
        let spec = SimSpec::cosine(2, 0, 0.3, 12).unwrap();
        let n = 1000;
        let mc = mc_constants(&spec, n).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        rng.set_stream(0);
        let mut ys = Vec::new();
        let mut zs = Vec::new();
        for _ in 0..n {
            let x0: f64 = StandardNormal.sample(&mut rng);
            let _x1: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            zs.push(x0);
            ys.push((2.0 * x0 - std::f64::consts::FRAC_PI_4).cos() + 0.3 * e);
        }
        let ybar = ys.iter().sum::<f64>() / n as f64;
        let t: Vec<f64> = ys.iter().zip(&zs).map(|(y, z)| (y - ybar) * z * z).collect();
        let mean = t.iter().sum::<f64>() / n as f64;
        let sd = (t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        assert!((mc.lambda1.estimate - mean).abs() < 1e-12);
        assert!((mc.lambda1.std_error - sd / (n as f64).sqrt()).abs() < 1e-10);
    }
}
