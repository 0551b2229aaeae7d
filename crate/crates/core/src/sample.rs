//! Per-observation influence diagnostics for a fitted PHD subspace.
//!
//! * SRIS refits without each observation and measures how far each refit
//!   direction leaves the full-sample span.
//! * ERIS evaluates the population influence formulas at the sample estimates.
//! * HRIS uses the exact leave-one-out change of the Hessian estimate, obtained
//!   from closed-form downdates, in place of the influence function.
//!
//! Values for observation `j` are reported in row order `0..n`. Observations at
//! the leave-one-out singularity get `None` rather than aborting the report.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PhdError, Result};
use crate::linalg::{dot, norm, sym_eigen, SymMatrix};
use crate::moments::{compute_moments, leverage_gap, loo_downdate, mahalanobis, moments_unchecked, Dataset, MomentSet};
use crate::phd::{fit_from_moments, weighted_moment, PhdFit, PhdVariant};
use crate::population::{
    if_h_r_with_residual, if_h_y, ris_from_if, ris_r_with_residual, ris_y, ContaminationPoint, PopulationModel,
};
use crate::rank::spearman;
use crate::scalar::Real;

/// How far below the best competing refit direction the rank-matched one may
/// fall, in absolute inner product with `γ̂_k`, before it is flagged.
pub const ORDER_SWAP_MARGIN: f64 = 0.2;

/// SRIS for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SrisRow<T> {
    pub values: Vec<T>,
    /// Directions (0-based) whose rank-matched refit vector is clearly not the
    /// one best aligned with `γ̂_k`.
    pub order_swap: Vec<usize>,
}

fn check_fit<T: Real>(d: &Dataset<T>, fit: &PhdFit<T>) -> Result<()> {
    if fit.p() != d.p() {
        return Err(PhdError::DimensionMismatch(format!("fit has p = {} but data has p = {}", fit.p(), d.p())));
    }
    if d.n() < d.p() + 2 {
        return Err(PhdError::InsufficientData { n: d.n(), required: d.p() + 2 });
    }
    Ok(())
}

fn check_eigenvalues<T: Real>(fit: &PhdFit<T>) -> Result<()> {
    match fit.lambda_hat.iter().position(|l| l.abs() <= T::tol(1e-12)) {
        Some(k) => Err(PhdError::DegenerateEigenvalue { direction: k }),
        None => Ok(()),
    }
}

fn check_leverage<T: Real>(m: &MomentSet<T>, x_j: &[T], j: usize) -> Result<()> {
    let nf = T::from_usize_lossy(m.n);
    let c = (nf - T::one()) * (nf - T::one()) / nf;
    let gap = leverage_gap(m, x_j);
    if gap.abs() <= T::lit(1e-10) * c {
        return Err(PhdError::DegenerateLeverage { index: j, denominator: gap.as_f64() });
    }
    Ok(())
}

/// SRIS for observation `j` by a full refit on the other `n − 1` rows.
pub fn sris_row<T: Real>(d: &Dataset<T>, fit: &PhdFit<T>, m: &MomentSet<T>, j: usize) -> Result<SrisRow<T>> {
    check_leverage(m, d.row(j), j)?;
    let sub = d.without(j)?;
    let mj = moments_unchecked(&sub, false).map_err(|e| match e {
        PhdError::NotPositiveDefinite { eigenvalue } => PhdError::DegenerateLeverage { index: j, denominator: eigenvalue },
        other => other,
    })?;
    let h = weighted_moment(&mj, fit.variant).sandwich(&mj.s_inv);
    let eig = sym_eigen(&h)?;
    let scale = T::from_usize_lossy(d.n() - 1);
    let mut values = Vec::with_capacity(fit.k);
    let mut order_swap = Vec::new();
    for k in 0..fit.k {
        let v = eig.vector(k);
        let sine = norm(&fit.gamma_hat.residual(&v)).min(T::one());
        values.push(scale * sine);

        let g = fit.direction(k);
        let own = dot(&v, &g).abs();
        let best_other = (0..eig.dim()).filter(|&i| i != k).map(|i| dot(&eig.vector(i), &g).abs()).fold(T::zero(), T::max);
        if own < best_other - T::lit(ORDER_SWAP_MARGIN) {
            order_swap.push(k);
        }
    }
    Ok(SrisRow { values, order_swap })
}

/// `(n − 1)·sin` between each refit direction and the span of `Γ̂`.
pub fn sris<T: Real>(d: &Dataset<T>, fit: &PhdFit<T>) -> Result<Vec<Result<SrisRow<T>>>> {
    check_fit(d, fit)?;
    let m = compute_moments(d)?;
    Ok((0..d.n()).into_par_iter().map(|j| sris_row(d, fit, &m, j)).collect())
}

/// The population model whose influence formulas ERIS evaluates: `μ = x̄`,
/// `Σ = S`, `Γ = Γ̂`, `λ = λ̂`, `μ_y = ȳ` and `σ_xy = S P̂ β̂`.
///
/// The OLS slope is projected onto the span so the model satisfies the
/// linearity condition exactly; the closed-form influence only sees `γ̂ₖᵀβ̂`,
/// which the projection leaves unchanged.
pub fn fitted_model<T: Real>(fit: &PhdFit<T>, m: &MomentSet<T>) -> Result<PopulationModel<T>> {
    check_eigenvalues(fit)?;
    let projected = fit.p_hat.matvec(&m.beta);
    let sigma_xy = m.s.matvec(&projected);
    PopulationModel::build(
        m.xbar.clone(),
        m.s.clone(),
        fit.gamma_hat.clone(),
        fit.lambda_hat.clone(),
        m.ybar,
        sigma_xy,
        false,
    )
}

fn point<T: Real>(d: &Dataset<T>, j: usize) -> ContaminationPoint<T> {
    ContaminationPoint { y0: d.y()[j], x0: d.row(j).to_vec() }
}

/// ERIS through the closed-form `α` expressions; `n × K`.
pub fn eris<T: Real>(d: &Dataset<T>, fit: &PhdFit<T>, m: &MomentSet<T>) -> Result<Vec<Vec<T>>> {
    check_fit(d, fit)?;
    let model = fitted_model(fit, m)?;
    (0..d.n())
        .into_par_iter()
        .map(|j| {
            let pt = point(d, j);
            (0..fit.k)
                .map(|k| match fit.variant {
                    PhdVariant::YBased => ris_y(&model, &pt, k).map(|r| r.value),
                    PhdVariant::RBased => ris_r_with_residual(&model, &pt, k, m.residuals[j]).map(|r| r.value),
                })
                .collect()
        })
        .collect()
}

/// ERIS through the Hessian influence function of the fitted model; agrees
/// with [`eris`] up to rounding.
pub fn eris_via_influence_function<T: Real>(d: &Dataset<T>, fit: &PhdFit<T>, m: &MomentSet<T>) -> Result<Vec<Vec<T>>> {
    check_fit(d, fit)?;
    let model = fitted_model(fit, m)?;
    (0..d.n())
        .into_par_iter()
        .map(|j| {
            let pt = point(d, j);
            let ifh = match fit.variant {
                PhdVariant::YBased => if_h_y(&model, &pt)?,
                PhdVariant::RBased => if_h_r_with_residual(&model, &pt, m.residuals[j])?,
            };
            (0..fit.k).map(|k| ris_from_if(&model, &ifh, k)).collect()
        })
        .collect()
}

/// `‖(I − P̂) SIF γ̂ₖ‖ / |λ̂ₖ|` for a sample influence matrix.
pub fn ris_from_sif<T: Real>(fit: &PhdFit<T>, sif: &SymMatrix<T>) -> Vec<T> {
    (0..fit.k)
        .map(|k| {
            let v = sif.matvec(&fit.direction(k));
            norm(&fit.gamma_hat.residual(&v)) / fit.lambda_hat[k].abs()
        })
        .collect()
}

/// `(n − 1)(Ĥ − Ĥ₍ⱼ₎)` from the closed-form downdate.
pub fn sample_influence_h<T: Real>(d: &Dataset<T>, fit: &PhdFit<T>, m: &MomentSet<T>, j: usize) -> Result<SymMatrix<T>> {
    let loo = loo_downdate(d, m, j)?;
    let mj = match fit.variant {
        PhdVariant::YBased => &loo.sigma_yxx_j,
        PhdVariant::RBased => &loo.sigma_rxx_j,
    };
    let hj = mj.sandwich(&loo.s_inv_j);
    let diff = fit.h.as_matrix() - hj.as_matrix();
    Ok(SymMatrix::symmetrize(diff.scale(T::from_usize_lossy(d.n() - 1))))
}

/// HRIS for every observation; rows at the leverage singularity are
/// `DegenerateLeverage` errors.
pub fn hris<T: Real>(d: &Dataset<T>, fit: &PhdFit<T>, m: &MomentSet<T>) -> Result<Vec<Result<Vec<T>>>> {
    check_fit(d, fit)?;
    check_eigenvalues(fit)?;
    Ok((0..d.n())
        .into_par_iter()
        .map(|j| sample_influence_h(d, fit, m, j).map(|sif| ris_from_sif(fit, &sif)))
        .collect())
}

/// Diagnostics of one observation for one variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantDiagnostics<T> {
    pub sris: Option<Vec<T>>,
    pub eris: Vec<T>,
    pub hris: Option<Vec<T>>,
    pub sris_avg: Option<T>,
    pub eris_avg: T,
    pub hris_avg: Option<T>,
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len())
}

impl<T: Real> VariantDiagnostics<T> {
    fn new(sris: Option<Vec<T>>, eris: Vec<T>, hris: Option<Vec<T>>) -> Self {
        Self {
            sris_avg: sris.as_deref().map(mean),
            eris_avg: mean(&eris),
            hris_avg: hris.as_deref().map(mean),
            sris,
            eris,
            hris,
        }
    }
}

/// All diagnostics for observation `j` (0-based row of the input).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceRecord<T> {
    pub j: usize,
    pub y: VariantDiagnostics<T>,
    pub r: VariantDiagnostics<T>,
    pub md: T,
    /// `degenerate_leverage`, or `order_swap:<variant>:<direction>` with the
    /// direction numbered from 1.
    pub flags: Vec<String>,
}

impl<T: Real> InfluenceRecord<T> {
    pub fn variant(&self, v: PhdVariant) -> &VariantDiagnostics<T> {
        match v {
            PhdVariant::YBased => &self.y,
            PhdVariant::RBased => &self.r,
        }
    }
}

/// The diagnostic SRIS is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Eris,
    Hris,
    Md,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Eris, Target::Hris, Target::Md];

    pub fn tag(self) -> &'static str {
        match self {
            Target::Eris => "eris",
            Target::Hris => "hris",
            Target::Md => "md",
        }
    }
}

/// Spearman correlation of SRIS with one target, per direction and for the
/// direction average. `None` when undefined (constant input).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub variant: PhdVariant,
    pub target: Target,
    pub directions: Vec<Option<f64>>,
    pub average: Option<f64>,
}

/// Rows ordered by variant (`y`, `r`) then target (`eris`, `hris`, `md`).
/// Observations with a missing diagnostic are excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
    pub n_used: usize,
}

impl CorrelationReport {
    pub fn get(&self, v: PhdVariant, t: Target) -> &CorrelationRow {
        self.rows.iter().find(|r| r.variant == v && r.target == t).expect("every variant/target pair is present")
    }

    pub fn from_records<T: Real>(records: &[InfluenceRecord<T>], k: usize) -> Self {
        let complete: Vec<&InfluenceRecord<T>> = records
            .iter()
            .filter(|r| PhdVariant::ALL.iter().all(|&v| r.variant(v).sris.is_some() && r.variant(v).hris.is_some()))
            .collect();
        let mut rows = Vec::new();
        for v in PhdVariant::ALL {
            let diag = |r: &InfluenceRecord<T>| r.variant(v).clone();
            let sris_k = |i: usize| -> Vec<T> { complete.iter().map(|r| diag(r).sris.unwrap()[i]).collect() };
            let sris_avg: Vec<T> = complete.iter().map(|r| diag(r).sris_avg.unwrap()).collect();
            for t in Target::ALL {
                let target_k = |i: usize| -> Vec<T> {
                    complete
                        .iter()
                        .map(|r| match t {
                            Target::Eris => r.variant(v).eris[i],
                            Target::Hris => r.variant(v).hris.as_ref().unwrap()[i],
                            Target::Md => r.md,
                        })
                        .collect()
                };
                let target_avg: Vec<T> = complete
                    .iter()
                    .map(|r| match t {
                        Target::Eris => r.variant(v).eris_avg,
                        Target::Hris => r.variant(v).hris_avg.unwrap(),
                        Target::Md => r.md,
                    })
                    .collect();
                let directions = (0..k).map(|i| spearman(&sris_k(i), &target_k(i)).ok()).collect();
                let average = spearman(&sris_avg, &target_avg).ok();
                rows.push(CorrelationRow { variant: v, target: t, directions, average });
            }
        }
        Self { rows, n_used: complete.len() }
    }
}

/// Fit metadata carried with a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary<T> {
    pub variant: PhdVariant,
    pub eigenvalues: Vec<T>,
    pub directions: Vec<Vec<T>>,
}

/// Everything [`influence_report`] produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceReport<T> {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub fits: Vec<FitSummary<T>>,
    /// Ascending by PHD_y average SRIS; flagged records without it come last.
    pub records: Vec<InfluenceRecord<T>>,
    pub correlations: CorrelationReport,
}

struct VariantColumns<T> {
    sris: Vec<Result<SrisRow<T>>>,
    eris: Vec<Vec<T>>,
    hris: Vec<Result<Vec<T>>>,
}

fn variant_columns<T: Real>(d: &Dataset<T>, fit: &PhdFit<T>, m: &MomentSet<T>) -> Result<VariantColumns<T>> {
    let sris = (0..d.n()).into_par_iter().map(|j| sris_row(d, fit, m, j)).collect();
    Ok(VariantColumns { sris, eris: eris(d, fit, m)?, hris: hris(d, fit, m)? })
}

fn leverage_only<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(PhdError::DegenerateLeverage { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Fits both variants at rank `k` and computes SRIS, ERIS, HRIS and the
/// Mahalanobis distance of every observation.
pub fn influence_report<T: Real>(d: &Dataset<T>, k: usize) -> Result<InfluenceReport<T>> {
    let m = compute_moments(d)?;
    let fits: Vec<PhdFit<T>> = PhdVariant::ALL.iter().map(|&v| fit_from_moments(&m, v, k)).collect::<Result<_>>()?;
    let cols: Vec<VariantColumns<T>> = fits.iter().map(|f| variant_columns(d, f, &m)).collect::<Result<_>>()?;
    let md = mahalanobis(d, &m);

    let mut records = Vec::with_capacity(d.n());
    let mut cols: Vec<_> = cols.into_iter().map(|c| (c.sris.into_iter(), c.eris.into_iter(), c.hris.into_iter())).collect();
    for (j, &md_j) in md.iter().enumerate() {
        let mut flags = Vec::new();
        let mut per = Vec::with_capacity(2);
        for (v, (s_it, e_it, h_it)) in PhdVariant::ALL.iter().zip(cols.iter_mut()) {
            let s = leverage_only(s_it.next().expect("one row per observation"))?;
            let e = e_it.next().expect("one row per observation");
            let h = leverage_only(h_it.next().expect("one row per observation"))?;
            if s.is_none() || h.is_none() {
                if !flags.iter().any(|f| f == "degenerate_leverage") {
                    flags.push("degenerate_leverage".to_string());
                }
            }
            if let Some(row) = &s {
                flags.extend(row.order_swap.iter().map(|k| format!("order_swap:{}:{}", v.tag(), k + 1)));
            }
            per.push(VariantDiagnostics::new(s.map(|r| r.values), e, h));
        }
        let r = per.pop().unwrap();
        let y = per.pop().unwrap();
        records.push(InfluenceRecord { j, y, r, md: md_j, flags });
    }

    records.sort_by(|a, b| match (a.y.sris_avg, b.y.sris_avg) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap().then(a.j.cmp(&b.j)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.j.cmp(&b.j),
    });
    let correlations = CorrelationReport::from_records(&records, k);
    let fits = fits
        .iter()
        .map(|f| FitSummary { variant: f.variant, eigenvalues: f.eig.values.clone(), directions: (0..k).map(|i| f.direction(i)).collect() })
        .collect();
    Ok(InfluenceReport { n: d.n(), p: d.p(), k, fits, records, correlations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn data(n: usize, p: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| draw()).collect()).collect();
        let y = rows.iter().map(|r| r[0] + (r[0] + 0.5 * r[1]).powi(2) - r[2] * r[2] + 0.3 * draw()).collect();
        Dataset::from_rows(y, &rows).unwrap()
    }

    fn brute_force_hris(d: &Dataset<f64>, fit: &PhdFit<f64>, j: usize) -> Vec<f64> {
        let mj = moments_unchecked(&d.without(j).unwrap(), false).unwrap();
        let hj = weighted_moment(&mj, fit.variant).sandwich(&mj.s_inv);
        let sif = SymMatrix::symmetrize((fit.h.as_matrix() - hj.as_matrix()).scale((d.n() - 1) as f64));
        ris_from_sif(fit, &sif)
    }

    #[test]
    fn hris_matches_refit() {
        let d = data(40, 3, 1);
        let m = compute_moments(&d).unwrap();
        for v in PhdVariant::ALL {
            let fit = fit_from_moments(&m, v, 2).unwrap();
            let closed = hris(&d, &fit, &m).unwrap();
            for (j, row) in closed.iter().enumerate() {
                let row = row.as_ref().unwrap();
                let bf = brute_force_hris(&d, &fit, j);
                for (a, b) in row.iter().zip(&bf) {
                    assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "{v} j={j}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn eris_routes_agree() {
        let d = data(60, 4, 2);
        let m = compute_moments(&d).unwrap();
        for v in PhdVariant::ALL {
            let fit = fit_from_moments(&m, v, 2).unwrap();
            let a = eris(&d, &fit, &m).unwrap();
            let b = eris_via_influence_function(&d, &fit, &m).unwrap();
            for (ra, rb) in a.iter().zip(&b) {
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn eris_zero_at_the_centre() {
        let base = data(30, 3, 3);
        // A row at the mean of the others leaves both sample means unchanged.
        let m0 = compute_moments(&base).unwrap();
        let mut rows: Vec<Vec<f64>> = (0..base.n()).map(|i| base.row(i).to_vec()).collect();
        rows.push(m0.xbar.clone());
        let mut y = base.y().to_vec();
        y.push(m0.ybar);
        let d = Dataset::from_rows(y, &rows).unwrap();
        let m = compute_moments(&d).unwrap();
        let j = d.n() - 1;
        for v in PhdVariant::ALL {
            let fit = fit_from_moments(&m, v, 2).unwrap();
            let e = eris(&d, &fit, &m).unwrap();
            assert!(e[j].iter().all(|x| x.abs() < 1e-12), "{v}: {:?}", e[j]);
        }
    }

    #[test]
    fn duplicate_rows_share_sris() {
        let base = data(50, 3, 4);
        let mut rows: Vec<Vec<f64>> = (0..base.n()).map(|i| base.row(i).to_vec()).collect();
        rows.push(rows[7].clone());
        let mut y = base.y().to_vec();
        y.push(y[7]);
        let d = Dataset::from_rows(y, &rows).unwrap();
        let fit = fit_phd_for(&d, PhdVariant::YBased);
        let s = sris(&d, &fit).unwrap();
        let a = &s[7].as_ref().unwrap().values;
        let b = &s[d.n() - 1].as_ref().unwrap().values;
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn replicated_design_is_symmetric() {
        let base = data(12, 3, 5);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..4 {
            for i in 0..base.n() {
                rows.push(base.row(i).to_vec());
                y.push(base.y()[i]);
            }
        }
        let d = Dataset::from_rows(y, &rows).unwrap();
        let fit = fit_phd_for(&d, PhdVariant::YBased);
        let s = sris(&d, &fit).unwrap();
        let full_span: f64 = s.iter().map(|r| r.as_ref().unwrap().values[0]).fold(0.0, f64::max);
        for i in 0..base.n() {
            let first = &s[i].as_ref().unwrap().values;
            for rep in 1..4 {
                let other = &s[i + rep * base.n()].as_ref().unwrap().values;
                for (a, b) in first.iter().zip(other) {
                    assert!((a - b).abs() <= 1e-9 * full_span.max(1.0));
                }
            }
        }
    }

    fn fit_phd_for(d: &Dataset<f64>, v: PhdVariant) -> PhdFit<f64> {
        crate::phd::fit_phd(d, v, 2).unwrap()
    }

    #[test]
    fn invariance_under_translation_and_rotation() {
        let d = data(45, 3, 6);
        let report = influence_report(&d, 2).unwrap();

        let shift = [1.5, -2.0, 0.25];
        let shifted_rows: Vec<Vec<f64>> = (0..d.n()).map(|i| d.row(i).iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let shifted = Dataset::from_rows(d.y().iter().map(|v| v + 3.0).collect(), &shifted_rows).unwrap();
        let rs = influence_report(&shifted, 2).unwrap();

        let (c, s) = (0.6f64, 0.8f64);
        let q = Matrix::from_rows(&[vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let rot_rows: Vec<Vec<f64>> = (0..d.n()).map(|i| q.matvec(d.row(i))).collect();
        let rotated = Dataset::from_rows(d.y().to_vec(), &rot_rows).unwrap();
        let rr = influence_report(&rotated, 2).unwrap();

        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
        for other in [&rs, &rr] {
            for (a, b) in report.records.iter().zip(&other.records) {
                assert_eq!(a.j, b.j);
                for v in PhdVariant::ALL {
                    let (x, y) = (a.variant(v), b.variant(v));
                    for (p, q) in x.sris.as_ref().unwrap().iter().zip(y.sris.as_ref().unwrap()) {
                        assert!(close(*p, *q));
                    }
                    for (p, q) in x.hris.as_ref().unwrap().iter().zip(y.hris.as_ref().unwrap()) {
                        assert!(close(*p, *q));
                    }
                    for (p, q) in x.eris.iter().zip(&y.eris) {
                        assert!(close(*p, *q));
                    }
                }
                assert!(close(a.md, b.md));
            }
        }
    }

    #[test]
    fn report_ordering_and_ranges() {
        let d = data(50, 4, 7);
        let rep = influence_report(&d, 2).unwrap();
        assert_eq!(rep.records.len(), 50);
        let avgs: Vec<f64> = rep.records.iter().map(|r| r.y.sris_avg.unwrap()).collect();
        assert!(avgs.windows(2).all(|w| w[0] <= w[1]));
        for r in &rep.records {
            for v in PhdVariant::ALL {
                let x = r.variant(v);
                assert!(x.eris.iter().chain(x.sris.as_ref().unwrap()).chain(x.hris.as_ref().unwrap()).all(|a| a.is_finite() && *a >= 0.0));
            }
        }
        assert_eq!(rep.correlations.rows.len(), 6);
        for row in &rep.correlations.rows {
            assert!(row.directions.iter().chain([&row.average]).all(|c| c.is_some_and(|c| (-1.0..=1.0).contains(&c))));
        }
    }

    #[test]
    fn independent_noise_smoke() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let y: Vec<f64> = (0..60).map(|_| StandardNormal.sample(&mut rng)).collect();
        let d = Dataset::from_rows(y, &rows).unwrap();
        let rep = influence_report(&d, 1).unwrap();
        assert_eq!(rep.correlations.n_used, 60);
    }

    #[test]
    fn lone_distinct_row_is_flagged() {
        // Every row but the last lies in a 2-dimensional affine plane, so
        // dropping the last row leaves a singular covariance.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..12 {
            let a = i as f64;
            rows.push(vec![a, (a * 1.7).sin(), 0.0]);
            y.push(a.cos() + a * 0.1);
        }
        rows.push(vec![0.5, 0.5, 1.0]);
        y.push(0.3);
        let d = Dataset::from_rows(y, &rows).unwrap();
        let rep = influence_report(&d, 1).unwrap();
        let last = rep.records.last().unwrap();
        assert_eq!(last.j, 12);
        assert!(last.flags.iter().any(|f| f == "degenerate_leverage"));
        assert!(last.y.sris.is_none() && last.y.hris.is_none());
        assert_eq!(rep.correlations.n_used, 12);
    }

    #[test]
    fn degenerate_eigenvalue_rejected() {
        let d = data(30, 3, 9);
        let m = compute_moments(&d).unwrap();
        let mut fit = fit_from_moments(&m, PhdVariant::YBased, 1).unwrap();
        fit.lambda_hat[0] = 0.0;
        assert!(matches!(eris(&d, &fit, &m), Err(PhdError::DegenerateEigenvalue { direction: 0 })));
    }
}
