//! Log-contrasts and logratio regression.
//!
//! A regression on any full-rank set of logratios reduces to a single
//! log-contrast `Σ a_j log x_j` with `Σ a_j = 0`, obtained from the fitted
//! coefficients as `a = Pᵀ b`. The CLR design has rank J−1, so one CLR is
//! dropped before fitting and its coefficient reinstated as zero.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::composition::{CompositionMatrix, WeightAxis, WeightVector};
use crate::error::{Error, Result};
use crate::linalg::sorted_svd;
use crate::patterns::{clr_pattern, PatternKind, PatternMatrix};

/// Tolerance on `Σ a_j` of a log-contrast.
pub const CONTRAST_SUM_TOLERANCE: f64 = 1e-10;

/// Singular-value ratio below which a design is treated as rank deficient.
const DESIGN_RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LogContrast {
    pub a: Vec<f64>,
    pub intercept: f64,
}

impl LogContrast {
    /// `intercept + Σ a_j log x_j` for every sample.
    pub fn evaluate(&self, x: &CompositionMatrix) -> Vec<f64> {
        let l = x.log().values;
        (0..x.nrows())
            .map(|i| self.intercept + (0..self.a.len()).map(|j| self.a[j] * l[(i, j)]).sum::<f64>())
            .collect()
    }
}

/// Converts per-logratio coefficients into log-contrast coefficients `Pᵀ b`.
pub fn to_log_contrast(p: &PatternMatrix, coeffs: &[f64]) -> Result<LogContrast> {
    if !p.kind().is_linear() {
        return Err(Error::SlrNotLinear);
    }
    if coeffs.len() != p.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficients for {} logratios",
            coeffs.len(),
            p.nrows()
        )));
    }
    let a = p.coeffs().transpose() * DVector::from_column_slice(coeffs);
    let scale = coeffs.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    if a.sum().abs() > CONTRAST_SUM_TOLERANCE * scale {
        return Err(Error::InvalidPattern(format!("log-contrast sums to {}", a.sum())));
    }
    Ok(LogContrast {
        a: a.iter().copied().collect(),
        intercept: 0.0,
    })
}

/// Weighted least-squares fit with an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coeffs: Vec<f64>,
    pub r_squared: f64,
    /// Two-sided t-test p-values, one per coefficient.
    pub coef_p_values: Vec<f64>,
    /// Overall F-test p-value.
    pub model_p_value: f64,
    pub fitted: Vec<f64>,
}

/// Pre-factorised weighted design `D_w^{1/2} [1 X] = Q R`; reusable across
/// responses.
struct WeightedDesign {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    sqrt_w: DVector<f64>,
    design: DMatrix<f64>,
}

impl WeightedDesign {
    fn new(predictors: &DMatrix<f64>, w: &WeightVector) -> Result<Self> {
        let (n, k) = predictors.shape();
        w.expect_len(n, "samples")?;
        if n <= k + 1 {
            return Err(Error::TooFewSamples {
                samples: n,
                predictors: k,
            });
        }
        let design = predictors.clone().insert_column(0, 1.0);
        let sqrt_w = DVector::from_iterator(n, w.as_slice().iter().map(|v| v.sqrt()));
        let weighted = DMatrix::from_fn(n, k + 1, |i, j| sqrt_w[i] * design[(i, j)]);
        let sv = sorted_svd(&weighted).singular_values;
        let max = sv.max();
        if max == 0.0 || sv.min() <= DESIGN_RANK_TOLERANCE * max {
            return Err(Error::RankDeficient);
        }
        let qr = weighted.qr();
        Ok(WeightedDesign {
            q: qr.q(),
            r: qr.r(),
            sqrt_w,
            design,
        })
    }

    fn solve(&self, y: &[f64]) -> DVector<f64> {
        let b = DVector::from_fn(y.len(), |i, _| self.sqrt_w[i] * y[i]);
        self.r
            .solve_upper_triangular(&(self.q.transpose() * b))
            .expect("non-singular after rank check")
    }

    fn fit(&self, y: &[f64], w: &WeightVector) -> OlsFit {
        let n = y.len();
        let k = self.design.ncols() - 1;
        let beta = self.solve(y);
        let fitted = &self.design * &beta;
        let wv = w.as_slice();
        let ybar: f64 = y.iter().zip(wv).map(|(a, b)| a * b).sum();
        let sse: f64 = (0..n).map(|i| wv[i] * (y[i] - fitted[i]).powi(2)).sum();
        let sst: f64 = (0..n).map(|i| wv[i] * (y[i] - ybar).powi(2)).sum();
        let df = (n - k - 1) as f64;
        let degenerate = sst <= 1e-28 * (1.0 + ybar * ybar);

        let r_squared = if degenerate { 0.0 } else { (1.0 - sse / sst).clamp(0.0, 1.0) };
        let model_p_value = if degenerate {
            1.0
        } else if r_squared >= 1.0 {
            f64::MIN_POSITIVE
        } else {
            let f = (r_squared / k as f64) / ((1.0 - r_squared) / df);
            let dist = FisherSnedecor::new(k as f64, df).expect("positive degrees of freedom");
            clamp_p(dist.sf(f))
        };

        // (Xᵀ W X)⁻¹ = R⁻¹ R⁻ᵀ.
        let rinv = self
            .r
            .clone()
            .try_inverse()
            .expect("non-singular after rank check");
        let xtwx_inv = &rinv * rinv.transpose();
        let sigma2 = sse / df;
        let tdist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        let coef_p_values = (1..=k)
            .map(|j| {
                let se = (sigma2 * xtwx_inv[(j, j)]).sqrt();
                let b = beta[j];
                if degenerate || (se == 0.0 && b == 0.0) {
                    1.0
                } else if se == 0.0 {
                    f64::MIN_POSITIVE
                } else {
                    clamp_p(2.0 * tdist.sf((b / se).abs()))
                }
            })
            .collect();
        OlsFit {
            intercept: beta[0],
            coeffs: beta.iter().skip(1).copied().collect(),
            r_squared,
            coef_p_values,
            model_p_value,
            fitted: fitted.iter().copied().collect(),
        }
    }
}

fn clamp_p(p: f64) -> f64 {
    if p.is_nan() {
        1.0
    } else {
        p.clamp(f64::MIN_POSITIVE, 1.0)
    }
}

/// Weighted OLS of `response` on `predictors` (plus intercept).
pub fn fit_ols(response: &[f64], predictors: &DMatrix<f64>, row_weights: &WeightVector) -> Result<OlsFit> {
    if response.len() != predictors.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} responses for {} rows",
            response.len(),
            predictors.nrows()
        )));
    }
    if let Some(i) = response.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    Ok(WeightedDesign::new(predictors, row_weights)?.fit(response, row_weights))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// One coefficient per pattern row; a dropped CLR carries 0.
    pub coeffs: Vec<f64>,
    pub intercept: f64,
    pub r_squared: f64,
    /// One p-value per pattern row; a dropped CLR carries 1.
    pub coef_p_values: Vec<f64>,
    pub model_p_value: f64,
    pub fitted: Vec<f64>,
    pub contrast: LogContrast,
    pub dropped: Option<usize>,
}

/// Regresses `logy` on the logratios of `x` defined by `p`. A CLR pattern
/// has its last row dropped.
pub fn fit_logratio_model(
    logy: &[f64],
    x: &CompositionMatrix,
    p: &PatternMatrix,
    row_weights: &WeightVector,
) -> Result<FitResult> {
    let drop = (p.kind() == PatternKind::Clr).then(|| p.nrows() - 1);
    fit_logratio_model_dropping(logy, x, p, row_weights, drop)
}

/// As [`fit_logratio_model`], dropping pattern row `drop` (if any) before
/// fitting; any kind may drop a row but CLR must drop one.
pub fn fit_logratio_model_dropping(
    logy: &[f64],
    x: &CompositionMatrix,
    p: &PatternMatrix,
    row_weights: &WeightVector,
    drop: Option<usize>,
) -> Result<FitResult> {
    if !p.kind().is_linear() {
        return Err(Error::SlrNotLinear);
    }
    if p.nparts() != x.nparts() {
        return Err(Error::ShapeMismatch(format!("{} parts, pattern over {}", x.nparts(), p.nparts())));
    }
    if let Some(d) = drop {
        if d >= p.nrows() {
            return Err(Error::BadIndex { index: d, len: p.nrows() });
        }
    }
    let used = match drop {
        Some(d) => p.without_row(d),
        None => p.coeffs().clone(),
    };
    let predictors = &x.log().values * used.transpose();
    let fit = fit_ols(logy, &predictors, row_weights)?;

    let mut coeffs = fit.coeffs.clone();
    let mut pvals = fit.coef_p_values.clone();
    if let Some(d) = drop {
        coeffs.insert(d, 0.0);
        pvals.insert(d, 1.0);
    }
    let mut contrast = to_log_contrast(p, &coeffs)?;
    contrast.intercept = fit.intercept;
    Ok(FitResult {
        coeffs,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        coef_p_values: pvals,
        model_p_value: fit.model_p_value,
        fitted: fit.fitted,
        contrast,
        dropped: drop,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationResult {
    pub observed: LogContrast,
    /// One p-value per part for `|a_j|`.
    pub p_values: Vec<f64>,
    pub permutations: usize,
    pub seed: u64,
}

/// Smallest accepted permutation count.
pub const MIN_PERMUTATIONS: usize = 99;

/// Permutation test on the log-contrast coefficients of the CLR drop-one
/// model (uniform sample weights).
///
/// Replicate `b` shuffles the response with a ChaCha stream keyed by
/// `(seed, b)`, so the result does not depend on how replicates are
/// scheduled across threads. `p_j = (1 + #{b : |a_j^(b)| ≥ |a_j|}) / (1 + B)`.
pub fn permutation_test(
    logy: &[f64],
    x: &CompositionMatrix,
    c: &WeightVector,
    permutations: usize,
    seed: u64,
) -> Result<PermutationResult> {
    if permutations < MIN_PERMUTATIONS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_PERMUTATIONS} permutations are required, got {permutations}"
        )));
    }
    let j = x.nparts();
    let p = clr_pattern(x.col_labels(), c)?;
    let r = WeightVector::uniform(x.nrows(), WeightAxis::Samples);
    let observed = fit_logratio_model(logy, x, &p, &r)?.contrast;

    let used = p.without_row(j - 1);
    let design = WeightedDesign::new(&(&x.log().values * used.transpose()), &r)?;
    let contrast_of = |y: &[f64]| -> DVector<f64> {
        let beta = design.solve(y);
        used.transpose() * beta.rows(1, j - 1)
    };
    let threshold: Vec<f64> = observed.a.iter().map(|v| v.abs()).collect();

    let counts = (1..=permutations as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut y = logy.to_vec();
            y.shuffle(&mut rng);
            let a = contrast_of(&y);
            (0..j).map(|k| usize::from(a[k].abs() >= threshold[k])).collect::<Vec<_>>()
        })
        .reduce(
            || vec![0usize; j],
            |mut acc, v| {
                acc.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                acc
            },
        );
    let p_values = counts
        .iter()
        .map(|&n| (1 + n) as f64 / (1 + permutations) as f64)
        .collect();
    Ok(PermutationResult {
        observed,
        p_values,
        permutations,
        seed,
    })
}
