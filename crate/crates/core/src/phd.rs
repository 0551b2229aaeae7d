//! Principal Hessian directions: the response-based and residual-based
//! average-Hessian estimators and their leading eigenvectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PhdError, Result};
use crate::linalg::{sym_eigen, Basis, EigenSystem, Matrix, SymMatrix};
use crate::moments::{compute_moments, Dataset, MomentSet};
use crate::population::PopulationModel;
use crate::scalar::Real;

/// Which third-moment matrix the Hessian estimate is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhdVariant {
    /// Weights by the centred response, `Σ_yxx`.
    #[serde(rename = "y")]
    YBased,
    /// Weights by the OLS residual, `Σ_rxx`.
    #[serde(rename = "r")]
    RBased,
}

impl PhdVariant {
    pub const ALL: [PhdVariant; 2] = [PhdVariant::YBased, PhdVariant::RBased];

    pub fn tag(self) -> &'static str {
        match self {
            PhdVariant::YBased => "y",
            PhdVariant::RBased => "r",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PhdVariant::YBased => "PHD_y",
            PhdVariant::RBased => "PHD_r",
        }
    }
}

impl fmt::Display for PhdVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PhdVariant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "y" | "y_based" | "phd_y" => Ok(PhdVariant::YBased),
            "r" | "r_based" | "phd_r" => Ok(PhdVariant::RBased),
            other => Err(format!("unknown PHD variant '{other}' (expected y or r)")),
        }
    }
}

/// A fitted average Hessian with its eigensystem and the chosen K-dimensional basis.
#[derive(Debug, Clone)]
pub struct PhdFit<T> {
    pub variant: PhdVariant,
    /// `S⁻¹ M S⁻¹`.
    pub h: SymMatrix<T>,
    pub eig: EigenSystem<T>,
    pub k: usize,
    pub gamma_hat: Basis<T>,
    pub p_hat: SymMatrix<T>,
    pub lambda_hat: Vec<T>,
}

/// One row of the eigenvalue table printed for choosing K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenvalueRow {
    pub index: usize,
    pub eigenvalue: f64,
    pub abs_eigenvalue: f64,
    /// `|λ_i| / |λ_{i+1}|`; `None` for the last row or when the next value is zero.
    pub ratio_to_next: Option<f64>,
}

impl<T: Real> PhdFit<T> {
    /// Builds a fit from an already assembled Hessian estimate.
    pub fn from_hessian(variant: PhdVariant, h: SymMatrix<T>, k: usize) -> Result<Self> {
        let p = h.dim();
        if k == 0 || k > p {
            return Err(PhdError::InvalidRank { k, p });
        }
        let eig = sym_eigen(&h)?;
        let gamma_hat = Basis::leading(&eig, k)?;
        let p_hat = gamma_hat.projector();
        let lambda_hat = eig.values[..k].to_vec();
        Ok(Self { variant, h, eig, k, gamma_hat, p_hat, lambda_hat })
    }

    pub fn p(&self) -> usize {
        self.h.dim()
    }

    pub fn direction(&self, k: usize) -> Vec<T> {
        self.gamma_hat.column(k)
    }

    pub fn eigenvalue_table(&self) -> Vec<EigenvalueRow> {
        let vals = &self.eig.values;
        (0..vals.len())
            .map(|i| {
                let a = vals[i].abs().as_f64();
                let ratio = vals.get(i + 1).map(|v| v.abs().as_f64()).filter(|&b| b > 0.0).map(|b| a / b);
                EigenvalueRow { index: i + 1, eigenvalue: vals[i].as_f64(), abs_eigenvalue: a, ratio_to_next: ratio }
            })
            .collect()
    }
}

/// The third-moment matrix a variant is built from.
pub fn weighted_moment<T: Real>(m: &MomentSet<T>, v: PhdVariant) -> &SymMatrix<T> {
    match v {
        PhdVariant::YBased => &m.sigma_yxx_hat,
        PhdVariant::RBased => &m.sigma_rxx_hat,
    }
}

/// `S⁻¹ M S⁻¹` from precomputed moments.
pub fn fit_from_moments<T: Real>(m: &MomentSet<T>, v: PhdVariant, k: usize) -> Result<PhdFit<T>> {
    let p = m.p();
    if k == 0 || k > p {
        return Err(PhdError::InvalidRank { k, p });
    }
    let h = weighted_moment(m, v).sandwich(&m.s_inv);
    PhdFit::from_hessian(v, h, k)
}

/// Fits PHD of the given variant and rank to a dataset.
pub fn fit_phd<T: Real>(d: &Dataset<T>, v: PhdVariant, k: usize) -> Result<PhdFit<T>> {
    if k == 0 || k > d.p() {
        return Err(PhdError::InvalidRank { k, p: d.p() });
    }
    let m = compute_moments(d)?;
    fit_from_moments(&m, v, k)
}

/// Population average Hessian `Γ diag(λ) Γᵀ`.
pub fn population_h<T: Real>(model: &PopulationModel<T>) -> SymMatrix<T> {
    let g = model.gamma.columns();
    let scaled = Matrix::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] * model.lambda[j]);
    SymMatrix::symmetrize(scaled.matmul(&g.transpose()))
}
