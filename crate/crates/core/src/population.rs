//! Population influence of a point contamination on the PHD directions.
//!
//! Three independent routes compute the same quantity, the rate at which the
//! sine between a perturbed direction and the true subspace grows:
//!
//! * the closed-form `α` expressions ([`ris_y`], [`ris_r`]),
//! * the influence function of the Hessian matrix projected off the subspace
//!   ([`if_h_y`], [`if_h_r`], [`ris_from_if`]),
//! * finite contamination of the exact mixture moments followed by an
//!   eigendecomposition ([`ris_numeric_oracle`]).
//!
//! All routes assume Gaussian predictors, so every third central moment of `X`
//! vanishes and `Σ_rxx = Σ_yxx`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PhdError, Result};
use crate::linalg::{dot, norm, spd_inverse, sqrt_spd, sub_vec, sym_eigen, inv_sqrt, Basis, Matrix, SymMatrix};
use crate::phd::{population_h, PhdVariant};
use crate::scalar::Real;

/// Exact population quantities at which influence is evaluated.
#[derive(Debug, Clone)]
pub struct PopulationModel<T> {
    pub mu: Vec<T>,
    pub sigma: SymMatrix<T>,
    pub gamma: Basis<T>,
    pub lambda: Vec<T>,
    pub mu_y: T,
    pub sigma_xy: Vec<T>,
    sigma_inv: SymMatrix<T>,
    sigma_inv_sqrt: SymMatrix<T>,
    sigma_sqrt: SymMatrix<T>,
    h: SymMatrix<T>,
}

impl<T: Real> PopulationModel<T> {
    pub fn new(
        mu: Vec<T>,
        sigma: SymMatrix<T>,
        gamma: Basis<T>,
        lambda: Vec<T>,
        mu_y: T,
        sigma_xy: Vec<T>,
    ) -> Result<Self> {
        Self::build(mu, sigma, gamma, lambda, mu_y, sigma_xy, true)
    }

    /// `strict = false` skips the eigenvalue-separation check; plug-in models
    /// built from sample estimates use it.
    pub(crate) fn build(
        mu: Vec<T>,
        sigma: SymMatrix<T>,
        gamma: Basis<T>,
        lambda: Vec<T>,
        mu_y: T,
        sigma_xy: Vec<T>,
        strict: bool,
    ) -> Result<Self> {
        let p = sigma.dim();
        if mu.len() != p || gamma.dim() != p || sigma_xy.len() != p {
            return Err(PhdError::DimensionMismatch("model vectors must match the dimension of Σ".into()));
        }
        let k = gamma.rank();
        if k == 0 {
            return Err(PhdError::InvalidModel("the subspace must have rank K ≥ 1".into()));
        }
        if lambda.len() != k {
            return Err(PhdError::DimensionMismatch(format!("{} eigenvalues for rank {k}", lambda.len())));
        }
        if let Some(i) = lambda.iter().position(|l| !l.is_finite() || *l == T::zero()) {
            return Err(PhdError::InvalidModel(format!("eigenvalue {} must be finite and nonzero", i + 1)));
        }
        if lambda.windows(2).any(|w| w[0].abs() < w[1].abs()) {
            return Err(PhdError::InvalidModel("eigenvalues must be ordered by decreasing |λ|".into()));
        }
        for a in 0..k {
            for b in (a + 1)..k {
                if !strict {
                    break;
                }
                if (lambda[a] - lambda[b]).abs() < T::tol(1e-9) {
                    return Err(PhdError::DegenerateSpectrum { first: a + 1, second: b + 1 });
                }
            }
        }
        if !mu.iter().chain(&sigma_xy).all(|v| v.is_finite()) || !mu_y.is_finite() {
            return Err(PhdError::InvalidModel("non-finite parameter".into()));
        }
        let sigma_inv = spd_inverse(&sigma)?;
        let sigma_inv_sqrt = inv_sqrt(&sigma)?;
        let sigma_sqrt = sqrt_spd(&sigma)?;

        let ols = sigma_inv.matvec(&sigma_xy);
        let off = norm(&gamma.residual(&ols));
        if off > T::tol(1e-10) * T::one().max(norm(&ols)) {
            return Err(PhdError::InvalidModel(format!("OLS direction lies {off:e} outside the subspace")));
        }

        let mut model = Self {
            mu,
            sigma,
            gamma,
            lambda,
            mu_y,
            sigma_xy,
            sigma_inv,
            sigma_inv_sqrt,
            sigma_sqrt,
            h: SymMatrix::zeros(p),
        };
        model.h = population_h(&model);
        Ok(model)
    }

    /// `Y = cos(2β₁ᵀX − π/4) + σε` with `X ~ N_p(0, I)`; `β₁` is normalised.
    pub fn cosine_model(p: usize, beta: &[T]) -> Result<Self> {
        if beta.len() != p || p < 2 {
            return Err(PhdError::DimensionMismatch(format!("β has length {} for p = {p} (p ≥ 2 required)", beta.len())));
        }
        let len = norm(beta);
        if !(len > T::zero()) {
            return Err(PhdError::InvalidVector("β must be nonzero".into()));
        }
        let beta: Vec<T> = beta.iter().map(|&b| b / len).collect();
        let (mu_y, cov, lambda1) = cosine_model_constants::<T>();
        let sigma_xy = beta.iter().map(|&b| cov * b).collect();
        Self::new(vec![T::zero(); p], SymMatrix::identity(p), Basis::from_vectors(&[beta])?, vec![lambda1], mu_y, sigma_xy)
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }

    pub fn rank(&self) -> usize {
        self.gamma.rank()
    }

    /// Population average Hessian.
    pub fn h(&self) -> &SymMatrix<T> {
        &self.h
    }

    pub fn sigma_inv(&self) -> &SymMatrix<T> {
        &self.sigma_inv
    }

    /// `Σ_yxx = Σ H̄ Σ`.
    pub fn sigma_yxx(&self) -> SymMatrix<T> {
        self.h.sandwich(&self.sigma)
    }

    /// OLS slope `Σ⁻¹ σ_xy`.
    pub fn ols_slope(&self) -> Vec<T> {
        self.sigma_inv.matvec(&self.sigma_xy)
    }

    fn check_direction(&self, k: usize) -> Result<()> {
        if k >= self.rank() {
            return Err(PhdError::InvalidDirection { k, max: self.rank() });
        }
        Ok(())
    }

    /// Orthogonal change of coordinates `x ↦ Qx` applied to every parameter.
    pub fn rotated(&self, q: &Matrix<T>) -> Result<Self> {
        let sigma = SymMatrix::symmetrize(q.matmul(self.sigma.as_matrix()).matmul(&q.transpose()));
        let gamma = Basis::new(q.matmul(self.gamma.columns()))?;
        Self::new(q.matvec(&self.mu), sigma, gamma, self.lambda.clone(), self.mu_y, q.matvec(&self.sigma_xy))
    }
}

/// A point mass `(y₀, x₀)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContaminationPoint<T> {
    pub y0: T,
    pub x0: Vec<T>,
}

impl<T: Real> ContaminationPoint<T> {
    pub fn new(y0: T, x0: Vec<T>) -> Result<Self> {
        if !y0.is_finite() || x0.iter().any(|v| !v.is_finite()) {
            return Err(PhdError::InvalidVector("contamination point must be finite".into()));
        }
        Ok(Self { y0, x0 })
    }
}

/// Influence value for one direction of one variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RisValue<T> {
    pub variant: PhdVariant,
    pub k: usize,
    pub value: T,
}

/// `y₀ − μ_y − (x₀ − μ)ᵀ Σ⁻¹ σ_xy`.
pub fn population_ols_residual<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>) -> T {
    let d = sub_vec(&pt.x0, &model.mu);
    pt.y0 - model.mu_y - dot(&d, &model.ols_slope())
}

fn check_point<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>) -> Result<()> {
    if pt.x0.len() != model.p() {
        return Err(PhdError::DimensionMismatch(format!("x₀ has length {} for p = {}", pt.x0.len(), model.p())));
    }
    Ok(())
}

/// `‖(I − P_S) Σ^{-1/2} α‖ / |λ_k|`.
fn ris_from_alpha<T: Real>(model: &PopulationModel<T>, alpha: &[T], k: usize) -> T {
    let v = model.sigma_inv_sqrt.matvec(alpha);
    norm(&model.gamma.residual(&v)) / model.lambda[k].abs()
}

/// `α` for a response-like weight `w` with an optional OLS-direction term:
/// `{w γᵀΣ^{-1/2}z₀ − λ γᵀΣ^{1/2}z₀ − c} z₀ − w Σ^{-1/2}γ`.
fn alpha<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>, k: usize, w: T, ols_term: T) -> Vec<T> {
    let gamma = model.gamma.column(k);
    let z0 = model.sigma_inv_sqrt.matvec(&sub_vec(&pt.x0, &model.mu));
    let a = dot(&gamma, &model.sigma_inv_sqrt.matvec(&z0));
    let b = dot(&gamma, &model.sigma_sqrt.matvec(&z0));
    let coef = w * a - model.lambda[k] * b - ols_term;
    let sg = model.sigma_inv_sqrt.matvec(&gamma);
    z0.iter().zip(&sg).map(|(&z, &g)| coef * z - w * g).collect()
}

/// `α_{y,k}` of the response-based closed form.
pub fn alpha_y<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>, k: usize) -> Result<Vec<T>> {
    check_point(model, pt)?;
    model.check_direction(k)?;
    let ols_term = dot(&model.gamma.column(k), &model.ols_slope());
    Ok(alpha(model, pt, k, pt.y0 - model.mu_y, ols_term))
}

/// `α_{r,k}` with an explicit residual for the contamination point.
pub fn alpha_r_with_residual<T: Real>(
    model: &PopulationModel<T>,
    pt: &ContaminationPoint<T>,
    k: usize,
    residual: T,
) -> Result<Vec<T>> {
    check_point(model, pt)?;
    model.check_direction(k)?;
    Ok(alpha(model, pt, k, residual, T::zero()))
}

/// Closed-form influence for the response-based direction `k` (0-based).
pub fn ris_y<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>, k: usize) -> Result<RisValue<T>> {
    let a = alpha_y(model, pt, k)?;
    Ok(RisValue { variant: PhdVariant::YBased, k, value: ris_from_alpha(model, &a, k) })
}

/// Closed-form influence for the residual-based direction `k` (0-based).
pub fn ris_r<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>, k: usize) -> Result<RisValue<T>> {
    ris_r_with_residual(model, pt, k, population_ols_residual(model, pt))
}

/// As [`ris_r`] with the OLS residual of the point supplied by the caller.
pub fn ris_r_with_residual<T: Real>(
    model: &PopulationModel<T>,
    pt: &ContaminationPoint<T>,
    k: usize,
    residual: T,
) -> Result<RisValue<T>> {
    let a = alpha_r_with_residual(model, pt, k, residual)?;
    Ok(RisValue { variant: PhdVariant::RBased, k, value: ris_from_alpha(model, &a, k) })
}

pub fn ris<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>, k: usize, v: PhdVariant) -> Result<RisValue<T>> {
    match v {
        PhdVariant::YBased => ris_y(model, pt, k),
        PhdVariant::RBased => ris_r(model, pt, k),
    }
}

/// `H − A − Aᵀ + w Σ⁻¹{ddᵀ − Σ}Σ⁻¹` with `A = Σ⁻¹d (Hd + c)ᵀ`.
fn if_h_generic<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>, w: T, c: &[T]) -> SymMatrix<T> {
    let d = sub_vec(&pt.x0, &model.mu);
    let si_d = model.sigma_inv.matvec(&d);
    let hd = model.h.matvec(&d);
    let right: Vec<T> = hd.iter().zip(c).map(|(&a, &b)| a + b).collect();
    let mut out = model.h.as_matrix().clone();
    out.add_outer(-T::one(), &si_d, &right);
    out.add_outer(-T::one(), &right, &si_d);
    out.add_outer(w, &si_d, &si_d);
    out.add_scaled(-w, model.sigma_inv.as_matrix());
    SymMatrix::symmetrize(out)
}

/// Influence function of the response-based Hessian functional.
pub fn if_h_y<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>) -> Result<SymMatrix<T>> {
    check_point(model, pt)?;
    Ok(if_h_generic(model, pt, pt.y0 - model.mu_y, &model.ols_slope()))
}

/// Influence function of the residual-based Hessian functional.
pub fn if_h_r<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>) -> Result<SymMatrix<T>> {
    if_h_r_with_residual(model, pt, population_ols_residual(model, pt))
}

pub fn if_h_r_with_residual<T: Real>(model: &PopulationModel<T>, pt: &ContaminationPoint<T>, residual: T) -> Result<SymMatrix<T>> {
    check_point(model, pt)?;
    Ok(if_h_generic(model, pt, residual, &vec![T::zero(); model.p()]))
}

/// `‖(I − P_S) IF γ_k‖ / |λ_k|` for a Hessian influence matrix.
pub fn ris_from_if<T: Real>(model: &PopulationModel<T>, if_h: &SymMatrix<T>, k: usize) -> Result<T> {
    model.check_direction(k)?;
    let v = if_h.matvec(&model.gamma.column(k));
    Ok(norm(&model.gamma.residual(&v)) / model.lambda[k].abs())
}

/// Exact moments of `(1 − ε)G + εΔ_{(y₀, x₀)}`.
#[derive(Debug, Clone)]
pub struct ContaminatedMoments<T> {
    pub mu: Vec<T>,
    pub sigma: SymMatrix<T>,
    pub sigma_yxx: SymMatrix<T>,
    pub sigma_rxx: SymMatrix<T>,
    pub mu_y: T,
    pub sigma_xy: Vec<T>,
}

impl<T: Real> ContaminatedMoments<T> {
    /// `Σ_ε⁻¹ M_ε Σ_ε⁻¹` for the chosen variant.
    pub fn hessian(&self, v: PhdVariant) -> Result<SymMatrix<T>> {
        let si = spd_inverse(&self.sigma)?;
        let m = match v {
            PhdVariant::YBased => &self.sigma_yxx,
            PhdVariant::RBased => &self.sigma_rxx,
        };
        Ok(m.sandwich(&si))
    }
}

/// Moments of the contaminated distribution, exact in `ε`.
///
/// With `d = x₀ − μ`, `e = y₀ − μ_y` and `a = 1 − ε`, the mixture mean moves by
/// `εd` and every central moment splits into the bulk part (expanded about the
/// shifted mean using only `Σ`, `Σ_yxx`, `σ_xy` and vanishing third moments of
/// `X`) plus the point mass, which sits `a·d` from the new mean.
pub fn contaminated_moments<T: Real>(
    model: &PopulationModel<T>,
    pt: &ContaminationPoint<T>,
    eps: T,
) -> Result<ContaminatedMoments<T>> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(PhdError::InvalidEpsilon(eps.as_f64()));
    }
    check_point(model, pt)?;
    let p = model.p();
    let a = T::one() - eps;
    let a3 = a * a * a;
    let d = sub_vec(&pt.x0, &model.mu);
    let e = pt.y0 - model.mu_y;

    let mu: Vec<T> = model.mu.iter().zip(&d).map(|(&m, &dv)| m + eps * dv).collect();
    let mu_y = model.mu_y + eps * e;

    let mut sigma = model.sigma.scale(a);
    sigma.add_outer(eps * a, &d, &d);
    let sigma = SymMatrix::symmetrize(sigma);

    let sigma_xy: Vec<T> = model.sigma_xy.iter().zip(&d).map(|(&s, &dv)| a * s + eps * a * e * dv).collect();

    // Bulk: M − ε(σ dᵀ + d σᵀ) − εe(Σ + ε² ddᵀ); point: a³ e ddᵀ.
    let mut yxx = model.sigma_yxx().into_matrix();
    yxx.add_outer(-eps, &model.sigma_xy, &d);
    yxx.add_outer(-eps, &d, &model.sigma_xy);
    yxx.add_scaled(-eps * e, model.sigma.as_matrix());
    yxx.add_outer(-eps * eps * eps * e, &d, &d);
    let mut yxx = yxx.scale(a);
    yxx.add_outer(eps * a3 * e, &d, &d);
    let sigma_yxx = SymMatrix::symmetrize(yxx);

    // The residual is re-centred at the contaminated OLS fit β_ε, so subtract
    // E_ε[((X − μ_ε)ᵀβ_ε)(X − μ_ε)(X − μ_ε)ᵀ], again split into bulk and point.
    let beta = spd_inverse(&sigma)?.matvec(&sigma_xy);
    let db = dot(&d, &beta);
    let s_beta = model.sigma.matvec(&beta);
    let mut t = Matrix::zeros(p, p);
    t.add_outer(-eps, &s_beta, &d);
    t.add_outer(-eps, &d, &s_beta);
    t.add_scaled(-eps * db, model.sigma.as_matrix());
    t.add_outer(-eps * eps * eps * db, &d, &d);
    let mut t = t.scale(a);
    t.add_outer(eps * a3 * db, &d, &d);
    let sigma_rxx = SymMatrix::symmetrize(sigma_yxx.as_matrix() - &t);

    Ok(ContaminatedMoments { mu, sigma, sigma_yxx, sigma_rxx, mu_y, sigma_xy })
}

/// Default contamination weight for [`ris_numeric_oracle`].
pub const ORACLE_EPS: f64 = 1e-6;

/// Finite-`ε` estimate of the influence: eigendecompose the contaminated
/// Hessian, take the eigenvector best aligned with `γ_k` and return its sine to
/// the true subspace divided by `ε`.
pub fn ris_numeric_oracle<T: Real>(
    model: &PopulationModel<T>,
    pt: &ContaminationPoint<T>,
    k: usize,
    v: PhdVariant,
    eps: T,
) -> Result<T> {
    model.check_direction(k)?;
    let cm = contaminated_moments(model, pt, eps)?;
    let eig = sym_eigen(&cm.hessian(v)?)?;
    let gamma = model.gamma.column(k);
    let mut scores: Vec<(T, usize)> = (0..eig.dim()).map(|i| (dot(&eig.vector(i), &gamma).abs(), i)).collect();
    scores.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    if scores.len() > 1 && scores[0].0 - scores[1].0 < T::lit(1e-8) {
        return Err(PhdError::AmbiguousMatch { direction: k });
    }
    let matched = eig.vector(scores[0].1);
    let sine = norm(&model.gamma.residual(&matched)).min(T::one());
    Ok(sine / eps)
}

/// Closed-form `(μ_y, c, λ₁)` for the cosine single-index model:
/// `E Y = e⁻²/√2`, `cov(X, Y) = c β₁` with `c = √2 e⁻²`, and
/// `λ₁ = E[(Y − μ_y)(β₁ᵀX)²] = −2√2 e⁻²`.
pub fn cosine_model_constants<T: Real>() -> (T, T, T) {
    let e2 = (-2.0f64).exp();
    let r2 = std::f64::consts::SQRT_2;
    (T::lit(e2 / r2), T::lit(r2 * e2), T::lit(-2.0 * r2 * e2))
}

/// One cell of the influence surface over `(‖x₀‖, cos θ₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceCell<T> {
    pub norm_x0: T,
    pub cos_theta0: T,
    pub ris_y: T,
    pub ris_r: T,
}

/// Evaluates both closed forms on a grid of `(‖x₀‖, cos θ₀)` for a rank-one
/// model with `μ = 0`, `Σ = I`, placing `y₀` on the noiseless curve
/// `cos(2β₁ᵀx₀ − π/4)`.
///
/// Each cell is also evaluated with the one-dimensional shortcut
/// `c·‖x₀‖·|sin θ₀|`; a disagreement beyond `1e-9` is reported as an error.
/// Rows are in row-major order: norms outer, cosines inner.
pub fn influence_surface<T: Real>(model: &PopulationModel<T>, norm_grid: &[T], costheta_grid: &[T]) -> Result<Vec<SurfaceCell<T>>> {
    let p = model.p();
    if model.rank() != 1 || p < 2 {
        return Err(PhdError::UnsupportedModel("surface needs a rank-one model with p ≥ 2".into()));
    }
    let tol = T::tol(1e-12);
    if model.mu.iter().any(|m| m.abs() > tol) || model.sigma.max_abs_diff(&Matrix::identity(p)) > tol {
        return Err(PhdError::UnsupportedModel("surface needs μ = 0 and Σ = I".into()));
    }
    if let Some(c) = costheta_grid.iter().find(|c| !(c.abs() <= T::one())) {
        return Err(PhdError::InvalidVector(format!("cos θ₀ = {c} outside [-1, 1]")));
    }
    let beta = model.gamma.column(0);
    let u = unit_orthogonal(&beta);
    let lambda = model.lambda[0];
    let beta_sxy = dot(&beta, &model.sigma_xy);
    let quarter_pi = T::lit(std::f64::consts::FRAC_PI_4);

    let cells: Vec<(T, T)> = norm_grid.iter().flat_map(|&r| costheta_grid.iter().map(move |&c| (r, c))).collect();
    cells
        .par_iter()
        .map(|&(r, c)| {
            let s = (T::one() - c * c).max(T::zero()).sqrt();
            let x0: Vec<T> = beta.iter().zip(&u).map(|(&b, &uu)| r * (c * b + s * uu)).collect();
            let t = r * c;
            let y0 = (T::lit(2.0) * t - quarter_pi).cos();
            let pt = ContaminationPoint { y0, x0 };
            let ry = ris_y(model, &pt, 0)?.value;
            let rr = ris_r(model, &pt, 0)?.value;

            let e = y0 - model.mu_y;
            let c_y = ((e * t - lambda * t - beta_sxy) / lambda).abs();
            let c_r = (((e - beta_sxy * t) * t - lambda * t) / lambda).abs();
            let (sy, sr) = (c_y * r * s, c_r * r * s);
            let agree = |a: T, b: T| (a - b).abs() <= T::tol(1e-9) * T::one().max(b.abs());
            if !agree(ry, sy) || !agree(rr, sr) {
                return Err(PhdError::InvalidModel(format!(
                    "closed form and shortcut disagree at (‖x₀‖ = {r}, cos θ₀ = {c}): ({ry}, {rr}) vs ({sy}, {sr})"
                )));
            }
            Ok(SurfaceCell { norm_x0: r, cos_theta0: c, ris_y: ry, ris_r: rr })
        })
        .collect()
}

/// A fixed unit vector orthogonal to `beta`: the coordinate axis least aligned
/// with it, Gram–Schmidt reduced.
fn unit_orthogonal<T: Real>(beta: &[T]) -> Vec<T> {
    let mut axis = 0;
    for (i, b) in beta.iter().enumerate() {
        if b.abs() < beta[axis].abs() {
            axis = i;
        }
    }
    let mut u = vec![T::zero(); beta.len()];
    u[axis] = T::one();
    let proj = dot(&u, beta);
    let u: Vec<T> = u.iter().zip(beta).map(|(&a, &b)| a - proj * b).collect();
    let len = norm(&u);
    u.into_iter().map(|v| v / len).collect()
}

/// Evenly spaced grid `start + (end − start)·i/(count − 1)`.
pub fn linspace<T: Real>(start: T, end: T, count: usize) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let steps = T::from_usize_lossy(count - 1);
            (0..count).map(|i| start + (end - start) * T::from_usize_lossy(i) / steps).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e42() -> PopulationModel<f64> {
        PopulationModel::cosine_model(3, &[1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn constants_decimal_values() {
        let (mu_y, c, l1) = cosine_model_constants::<f64>();
        assert!((mu_y - 0.0956965).abs() < 5e-8);
        assert!((c - 0.1913931).abs() < 5e-7);
        assert!((c - 2.0f64.sqrt() * (-2.0f64).exp()).abs() < 1e-16);
        assert!((l1 + 0.3827862).abs() < 5e-7);
    }

    #[test]
    fn model_validation() {
        let g = Basis::from_vectors(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let bad_ols = PopulationModel::new(vec![0.0; 3], SymMatrix::identity(3), g.clone(), vec![1.0], 0.0, vec![0.0, 1.0, 0.0]);
        assert!(matches!(bad_ols, Err(PhdError::InvalidModel(_))));
        let g2 = Basis::from_vectors(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let tie = PopulationModel::new(vec![0.0; 3], SymMatrix::identity(3), g2.clone(), vec![1.0, 1.0], 0.0, vec![0.0; 3]);
        assert!(matches!(tie, Err(PhdError::DegenerateSpectrum { first: 1, second: 2 })));
        let zero = PopulationModel::new(vec![0.0; 3], SymMatrix::identity(3), g, vec![0.0], 0.0, vec![0.0; 3]);
        assert!(matches!(zero, Err(PhdError::InvalidModel(_))));
        let unordered = PopulationModel::new(vec![0.0; 3], SymMatrix::identity(3), g2, vec![0.5, -1.0], 0.0, vec![0.0; 3]);
        assert!(unordered.is_err());
    }

    #[test]
    fn residual_cases() {
        let m = e42();
        let (mu_y, c, _) = cosine_model_constants::<f64>();
        let at_mean = ContaminationPoint::new(m.mu_y, m.mu.clone()).unwrap();
        assert_eq!(population_ols_residual(&m, &at_mean), 0.0);
        let y0 = (4.0 - std::f64::consts::FRAC_PI_4).cos();
        let pt = ContaminationPoint::new(y0, vec![2.0, 0.0, 0.0]).unwrap();
        assert!((population_ols_residual(&m, &pt) - (y0 - mu_y - 2.0 * c)).abs() < 1e-15);
    }

    #[test]
    fn zero_at_the_centre() {
        let m = e42();
        let pt = ContaminationPoint::new(m.mu_y, vec![0.0; 3]).unwrap();
        assert_eq!(ris_y(&m, &pt, 0).unwrap().value, 0.0);
        assert_eq!(ris_r(&m, &pt, 0).unwrap().value, 0.0);
        // Literal substitution into the Hessian influence gives H̄ itself.
        let ifh = if_h_y(&m, &pt).unwrap();
        assert!(ifh.max_abs_diff(m.h()) < 1e-15);
    }

    #[test]
    fn cosine_model_checkpoints() {
        let m = e42();
        // ‖x₀‖ = 2, cos θ₀ = 0, y₀ on the noiseless curve.
        let pt = ContaminationPoint::new((-std::f64::consts::FRAC_PI_4).cos(), vec![0.0, 2.0, 0.0]).unwrap();
        assert!((ris_y(&m, &pt, 0).unwrap().value - 1.0).abs() < 1e-12);
        assert!(ris_r(&m, &pt, 0).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn direction_out_of_range() {
        let m = e42();
        let pt = ContaminationPoint::new(0.0, vec![1.0; 3]).unwrap();
        assert!(matches!(ris_y(&m, &pt, 1), Err(PhdError::InvalidDirection { .. })));
        assert!(matches!(contaminated_moments(&m, &pt, 1.0), Err(PhdError::InvalidEpsilon(_))));
        assert!(matches!(contaminated_moments(&m, &pt, 0.0), Err(PhdError::InvalidEpsilon(_))));
    }

    #[test]
    fn contaminated_moments_limits_and_derivatives() {
        let m = e42();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let x0: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let pt = ContaminationPoint::new(rng.random_range(-1.0..1.0), x0.clone()).unwrap();
            let tiny = contaminated_moments(&m, &pt, 1e-12).unwrap();
            assert!(tiny.sigma.max_abs_diff(&m.sigma) <= 1e-10);
            assert!(tiny.sigma_yxx.max_abs_diff(&m.sigma_yxx()) <= 1e-10 * m.sigma_yxx().max_abs());

            let eps = 1e-7;
            let cm = contaminated_moments(&m, &pt, eps).unwrap();
            let d = x0.clone();
            let e = pt.y0 - m.mu_y;
            // Linear coefficient of Σ_yxx,ε.
            let mut lin = Matrix::outer(&d, &d);
            lin.add_scaled(-1.0, m.sigma.as_matrix());
            let mut yxx_lin = lin.scale(e);
            yxx_lin.add_outer(-1.0, &d, &m.sigma_xy);
            yxx_lin.add_outer(-1.0, &m.sigma_xy, &d);
            yxx_lin.add_scaled(-1.0, &m.sigma_yxx());
            let fd = (cm.sigma_yxx.as_matrix() - &m.sigma_yxx()).scale(1.0 / eps);
            assert!(fd.max_abs_diff(&yxx_lin) <= 1e-5 * yxx_lin.max_abs());
            let fd_c = (cm.sigma.as_matrix() - m.sigma.as_matrix()).scale(1.0 / eps);
            assert!(fd_c.max_abs_diff(&lin) <= 1e-5 * lin.max_abs());
        }
    }

    #[test]
    fn surface_guards() {
        let g = Basis::from_vectors(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let m2 = PopulationModel::new(vec![0.0; 3], SymMatrix::identity(3), g, vec![1.0, 0.5], 0.0, vec![0.0; 3]).unwrap();
        assert!(matches!(influence_surface(&m2, &[1.0], &[0.0]), Err(PhdError::UnsupportedModel(_))));
        assert!(influence_surface(&e42(), &[1.0], &[1.5]).is_err());
    }

    #[test]
    fn linspace_endpoints_exact() {
        let g = linspace(0.0, 3.0, 61);
        assert_eq!(g[40], 2.0);
        let c = linspace(-1.0, 1.0, 61);
        assert_eq!(c[30], 0.0);
        assert_eq!(c[0], -1.0);
        assert_eq!(c[60], 1.0);
    }
}
