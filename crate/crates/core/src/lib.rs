//! Principal Hessian directions (PHD) with influence diagnostics.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar type for the common cases.

pub mod error;
pub mod linalg;
pub mod moments;
pub mod phd;
pub mod population;
pub mod rank;
pub mod sample;
pub mod sim;
pub mod scalar;

pub use error::{ErrorClass, PhdError, Result};
pub use linalg::{Basis, EigenSystem, Matrix, SymMatrix};
pub use moments::{compute_moments, loo_downdate, mahalanobis, Dataset, LooMoments, MomentSet};
pub use phd::{fit_phd, PhdFit, PhdVariant};
pub use population::{ContaminationPoint, PopulationModel, RisValue};
pub use scalar::Real;

pub type MatrixF64 = Matrix<f64>;
pub type SymMatrixF64 = SymMatrix<f64>;
pub type DatasetF64 = Dataset<f64>;
pub type DatasetF32 = Dataset<f32>;
pub type MomentSetF64 = MomentSet<f64>;
pub type PhdFitF64 = PhdFit<f64>;
pub type PhdFitF32 = PhdFit<f32>;
pub type PopulationModelF64 = PopulationModel<f64>;
pub type PopulationModelF32 = PopulationModel<f32>;
