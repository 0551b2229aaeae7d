//! Sample moments, OLS byproducts and closed-form leave-one-out downdates.
//!
//! Conventions: `S` and `S_xy` divide by `n − 1`; the third-moment matrices
//! `Σ̂_yxx`, `Σ̂_rxx` divide by `n`. Leave-one-out quantities use the same
//! conventions on the `n − 1` remaining rows, centred at the leave-one-out means.

use crate::error::{PhdError, Result};
use crate::linalg::{dot, inv_sqrt, spd_inverse, sub_vec, Matrix, SymMatrix};
use crate::scalar::Real;

/// Observations of a scalar response and a p-vector predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    y: Vec<T>,
    x: Matrix<T>,
    names: Option<Vec<String>>,
}

impl<T: Real> Dataset<T> {
    /// Requires `n ≥ p + 2` and finite entries.
    pub fn new(y: Vec<T>, x: Matrix<T>, names: Option<Vec<String>>) -> Result<Self> {
        let d = Self::with_min_rows(y, x, names, 0)?;
        let (n, p) = (d.n(), d.p());
        if n < p + 2 {
            return Err(PhdError::InsufficientData { n, required: p + 2 });
        }
        Ok(d)
    }

    fn with_min_rows(y: Vec<T>, x: Matrix<T>, names: Option<Vec<String>>, min_rows: usize) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(PhdError::DimensionMismatch(format!("{} responses for {} predictor rows", y.len(), x.nrows())));
        }
        if x.ncols() == 0 {
            return Err(PhdError::InvalidData("no predictor columns".into()));
        }
        if y.len() < min_rows {
            return Err(PhdError::InsufficientData { n: y.len(), required: min_rows });
        }
        if let Some(ns) = &names {
            if ns.len() != x.ncols() {
                return Err(PhdError::DimensionMismatch(format!("{} names for {} columns", ns.len(), x.ncols())));
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(PhdError::InvalidData(format!("non-finite response at row {i}")));
        }
        if !x.is_finite() {
            return Err(PhdError::InvalidData("non-finite predictor entry".into()));
        }
        Ok(Self { y, x, names })
    }

    pub fn from_rows(y: Vec<T>, rows: &[Vec<T>]) -> Result<Self> {
        Self::new(y, Matrix::from_rows(rows)?, None)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.x.row(i)
    }

    /// The dataset with row `j` removed. The result may hold only `p + 1` rows.
    pub fn without(&self, j: usize) -> Result<Self> {
        if j >= self.n() {
            return Err(PhdError::InvalidData(format!("row {j} out of range")));
        }
        let keep: Vec<usize> = (0..self.n()).filter(|&i| i != j).collect();
        let x = Matrix::from_fn(keep.len(), self.p(), |i, c| self.x[(keep[i], c)]);
        let y = keep.iter().map(|&i| self.y[i]).collect();
        Self::with_min_rows(y, x, self.names.clone(), 2)
    }

    /// Applies `f` to every response.
    pub fn map_y(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::with_min_rows(self.y.iter().map(|&v| f(v)).collect(), self.x.clone(), self.names.clone(), 0)
    }

    /// Replaces the predictor matrix, keeping responses.
    pub fn with_x(&self, x: Matrix<T>) -> Result<Self> {
        Self::with_min_rows(self.y.clone(), x, None, 0)
    }

    pub fn cast<U: Real>(&self) -> Dataset<U> {
        Dataset {
            y: self.y.iter().map(|&v| U::lit(v.as_f64())).collect(),
            x: self.x.cast(),
            names: self.names.clone(),
        }
    }
}

/// Everything a PHD fit and its diagnostics need from a sample.
#[derive(Debug, Clone)]
pub struct MomentSet<T> {
    pub n: usize,
    pub xbar: Vec<T>,
    pub ybar: T,
    pub s: SymMatrix<T>,
    pub s_inv: SymMatrix<T>,
    pub s_inv_sqrt: SymMatrix<T>,
    pub s_xy: Vec<T>,
    /// OLS slope `S⁻¹ S_xy`.
    pub beta: Vec<T>,
    pub sigma_yxx_hat: SymMatrix<T>,
    pub sigma_rxx_hat: SymMatrix<T>,
    pub residuals: Vec<T>,
    /// `third[k] = (1/n) Σᵢ dᵢₖ dᵢ dᵢᵀ` with `dᵢ = xᵢ − x̄`.
    pub third: Vec<SymMatrix<T>>,
}

impl<T: Real> MomentSet<T> {
    pub fn p(&self) -> usize {
        self.xbar.len()
    }

    /// `xⱼ − x̄`.
    pub fn centered(&self, x: &[T]) -> Vec<T> {
        sub_vec(x, &self.xbar)
    }

    /// `(1/n) Σᵢ (dᵢᵀ b) dᵢ dᵢᵀ`.
    pub fn third_contract(&self, b: &[T]) -> Matrix<T> {
        let p = self.p();
        assert_eq!(self.third.len(), p, "third moments were not computed");
        let mut out = Matrix::zeros(p, p);
        for (t, &bk) in self.third.iter().zip(b) {
            out.add_scaled(bk, t.as_matrix());
        }
        out
    }
}

/// Sample moments of a dataset.
pub fn compute_moments<T: Real>(d: &Dataset<T>) -> Result<MomentSet<T>> {
    if d.n() < d.p() + 2 {
        return Err(PhdError::InsufficientData { n: d.n(), required: d.p() + 2 });
    }
    moments_unchecked(d, true)
}

/// As [`compute_moments`] but only requires enough rows for `S` to be
/// invertible; used on leave-one-out subsets. `third` is left empty unless
/// `with_third` is set.
pub(crate) fn moments_unchecked<T: Real>(d: &Dataset<T>, with_third: bool) -> Result<MomentSet<T>> {
    let (n, p) = (d.n(), d.p());
    if n < p + 1 {
        return Err(PhdError::InsufficientData { n, required: p + 1 });
    }
    let nf = T::from_usize_lossy(n);
    let n1 = nf - T::one();

    let mut xbar = vec![T::zero(); p];
    for i in 0..n {
        for (m, &v) in xbar.iter_mut().zip(d.row(i)) {
            *m += v;
        }
    }
    xbar.iter_mut().for_each(|m| *m /= nf);
    let ybar = d.y().iter().copied().sum::<T>() / nf;

    let centered: Vec<Vec<T>> = (0..n).map(|i| sub_vec(d.row(i), &xbar)).collect();
    let ey: Vec<T> = d.y().iter().map(|&v| v - ybar).collect();

    let mut s = Matrix::zeros(p, p);
    let mut s_xy = vec![T::zero(); p];
    for (di, &ei) in centered.iter().zip(&ey) {
        s.add_outer(T::one(), di, di);
        for (acc, &v) in s_xy.iter_mut().zip(di) {
            *acc += ei * v;
        }
    }
    let s = SymMatrix::symmetrize(s.scale(T::one() / n1));
    s_xy.iter_mut().for_each(|v| *v /= n1);

    let s_inv_sqrt = inv_sqrt(&s)?;
    let s_inv = spd_inverse(&s)?;
    let beta = s_inv.matvec(&s_xy);

    let residuals: Vec<T> = centered.iter().zip(&ey).map(|(di, &ei)| ei - dot(di, &beta)).collect();

    let mut syxx = Matrix::zeros(p, p);
    let mut srxx = Matrix::zeros(p, p);
    let mut third = if with_third { vec![Matrix::zeros(p, p); p] } else { Vec::new() };
    for ((di, &ei), &ri) in centered.iter().zip(&ey).zip(&residuals) {
        syxx.add_outer(ei, di, di);
        srxx.add_outer(ri, di, di);
        for (t, &dik) in third.iter_mut().zip(di) {
            t.add_outer(dik, di, di);
        }
    }
    let inv_n = T::one() / nf;
    Ok(MomentSet {
        n,
        xbar,
        ybar,
        s,
        s_inv,
        s_inv_sqrt,
        s_xy,
        beta,
        sigma_yxx_hat: SymMatrix::symmetrize(syxx.scale(inv_n)),
        sigma_rxx_hat: SymMatrix::symmetrize(srxx.scale(inv_n)),
        residuals,
        third: third.into_iter().map(|t| SymMatrix::symmetrize(t.scale(inv_n))).collect(),
    })
}

/// Moments of the sample with observation `j` removed.
#[derive(Debug, Clone)]
pub struct LooMoments<T> {
    pub j: usize,
    pub xbar_j: Vec<T>,
    pub ybar_j: T,
    pub s_inv_j: SymMatrix<T>,
    pub s_xy_j: Vec<T>,
    pub beta_j: Vec<T>,
    pub sigma_yxx_j: SymMatrix<T>,
    pub sigma_rxx_j: SymMatrix<T>,
}

/// `(n−1)²/n − dⱼᵀ S⁻¹ dⱼ`, the Sherman–Morrison denominator of the covariance
/// downdate. Zero exactly at the leverage singularity.
pub fn leverage_gap<T: Real>(m: &MomentSet<T>, x_j: &[T]) -> T {
    let nf = T::from_usize_lossy(m.n);
    let n1 = nf - T::one();
    let d = m.centered(x_j);
    n1 * n1 / nf - m.s_inv.quad_form(&d)
}

/// Closed-form leave-one-out moments for observation `j`; no pass over the
/// remaining data.
///
/// With `dⱼ = xⱼ − x̄`, `eⱼ = yⱼ − ȳ`, `κ = n(n+1)/(n−1)²` and `c = (n−1)²/n`:
///
/// ```text
/// S₍ⱼ₎⁻¹      = (n−2)/(n−1) · [S⁻¹ + wwᵀ/(c − dⱼᵀw)],   w = S⁻¹dⱼ
/// (n−1)Σ̂yxx₍ⱼ₎ = nΣ̂yxx + S_xy dⱼᵀ + dⱼ S_xyᵀ + eⱼ(S − κ dⱼdⱼᵀ)
/// (n−1)Σ̂rxx₍ⱼ₎ = n(Σ̂yxx − T(β₍ⱼ₎)) + u dⱼᵀ + dⱼ uᵀ + (eⱼ − dⱼᵀβ₍ⱼ₎)(S − κ dⱼdⱼᵀ)
/// ```
///
/// where `T(b) = (1/n)Σᵢ(dᵢᵀb)dᵢdᵢᵀ` and `u = S_xy − Sβ₍ⱼ₎`. The first line is
/// the `S^{-1/2}[I + (c − zⱼᵀzⱼ)⁻¹zⱼzⱼᵀ]S^{-1/2}` update written without the
/// square root.
pub fn loo_downdate<T: Real>(d: &Dataset<T>, m: &MomentSet<T>, j: usize) -> Result<LooMoments<T>> {
    let n = m.n;
    if j >= n || d.n() != n {
        return Err(PhdError::InvalidData(format!("row {j} out of range for n = {n}")));
    }
    let nf = T::from_usize_lossy(n);
    let n1 = nf - T::one();
    let n2 = nf - T::lit(2.0);
    let c = n1 * n1 / nf;
    let kappa = nf * (nf + T::one()) / (n1 * n1);

    let dj = m.centered(d.row(j));
    let ej = d.y()[j] - m.ybar;
    let w = m.s_inv.matvec(&dj);
    let gap = c - dot(&dj, &w);
    if gap.abs() <= T::lit(1e-10) * c {
        return Err(PhdError::DegenerateLeverage { index: j, denominator: gap.as_f64() });
    }

    let mut s_inv_j = m.s_inv.as_matrix().clone();
    s_inv_j.add_outer(T::one() / gap, &w, &w);
    let s_inv_j = SymMatrix::symmetrize(s_inv_j.scale(n2 / n1));

    let xbar_j: Vec<T> = m.xbar.iter().zip(&dj).map(|(&xb, &dv)| xb - dv / n1).collect();
    let ybar_j = m.ybar - ej / n1;

    let s_xy_j: Vec<T> = m.s_xy.iter().zip(&dj).map(|(&s, &dv)| (n1 * s - nf / n1 * ej * dv) / n2).collect();
    let beta_j = s_inv_j.matvec(&s_xy_j);

    // S − κ dⱼdⱼᵀ appears in both downdates.
    let mut core = m.s.as_matrix().clone();
    core.add_outer(-kappa, &dj, &dj);

    let mut yxx = m.sigma_yxx_hat.scale(nf);
    yxx.add_outer(T::one(), &m.s_xy, &dj);
    yxx.add_outer(T::one(), &dj, &m.s_xy);
    yxx.add_scaled(ej, &core);
    let sigma_yxx_j = SymMatrix::symmetrize(yxx.scale(T::one() / n1));

    let s_beta = m.s.matvec(&beta_j);
    let u = sub_vec(&m.s_xy, &s_beta);
    let rj = ej - dot(&dj, &beta_j);
    let mut rxx = m.sigma_yxx_hat.as_matrix().clone();
    rxx.add_scaled(-T::one(), &m.third_contract(&beta_j));
    let mut rxx = rxx.scale(nf);
    rxx.add_outer(T::one(), &u, &dj);
    rxx.add_outer(T::one(), &dj, &u);
    rxx.add_scaled(rj, &core);
    let sigma_rxx_j = SymMatrix::symmetrize(rxx.scale(T::one() / n1));

    Ok(LooMoments { j, xbar_j, ybar_j, s_inv_j, s_xy_j, beta_j, sigma_yxx_j, sigma_rxx_j })
}

/// Mahalanobis distance of every predictor row from the sample mean.
pub fn mahalanobis<T: Real>(d: &Dataset<T>, m: &MomentSet<T>) -> Vec<T> {
    (0..d.n()).map(|i| m.s_inv.quad_form(&m.centered(d.row(i))).max(T::zero()).sqrt()).collect()
}
