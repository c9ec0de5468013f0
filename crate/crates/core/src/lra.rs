//! Logratio analysis: weighted SVD of the double-centred log matrix.
//!
//! Steps, for row weights `r` and column weights `c`:
//!
//! 1. `Z = (I − 1rᵀ) log(X) (I − 1cᵀ)ᵀ`
//! 2. `S = D_r^{1/2} Z D_c^{1/2}`
//! 3. `S = U D_α Vᵀ`
//!
//! giving row principal coordinates `F = D_r^{-1/2} U D_α`, column standard
//! coordinates `Γ = D_c^{-1/2} V`, column contribution coordinates `Γ* = V`
//! and column principal coordinates `G = D_c^{-1/2} V D_α`.
//!
//! Each singular-vector pair is oriented so the largest-magnitude entry of
//! the `V` column is positive (lowest index on ties), which makes output
//! independent of the SVD backend.

use nalgebra::{DMatrix, DVector};

use crate::composition::{CompositionMatrix, LogMatrix, WeightVector};
use crate::error::{Error, Result};
use crate::linalg::{center_columns, center_rows, sorted_svd};

/// Axes with singular value below this fraction of the largest are dropped.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Absolute floor (relative to the magnitude of the logs) below which the
/// largest singular value itself is treated as zero.
const NOISE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct LraResult {
    pub singular_values: DVector<f64>,
    pub eigenvalues: DVector<f64>,
    /// F, I×K.
    pub row_principal: DMatrix<f64>,
    /// Γ, J×K.
    pub col_standard: DMatrix<f64>,
    /// Γ* = V, J×K.
    pub col_contribution: DMatrix<f64>,
    /// G, J×K.
    pub col_principal: DMatrix<f64>,
    pub explained_pct: DVector<f64>,
    pub row_weights: WeightVector,
    pub col_weights: WeightVector,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl LraResult {
    /// Number of retained axes.
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.sum()
    }
}

/// `(I − 1rᵀ) L (I − 1cᵀ)ᵀ`.
pub fn double_center(l: &LogMatrix, r: &WeightVector, c: &WeightVector) -> Result<DMatrix<f64>> {
    r.expect_len(l.values.nrows(), "samples")?;
    c.expect_len(l.values.ncols(), "parts")?;
    Ok(center_columns(&center_rows(&l.values, c.as_slice()), r.as_slice()))
}

pub fn lra_fit(x: &CompositionMatrix, r: &WeightVector, c: &WeightVector) -> Result<LraResult> {
    let l = x.log();
    let z = double_center(&l, r, c)?;
    let sr: Vec<f64> = r.as_slice().iter().map(|w| w.sqrt()).collect();
    let sc: Vec<f64> = c.as_slice().iter().map(|w| w.sqrt()).collect();
    let s = DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| sr[i] * z[(i, j)] * sc[j]);

    let svd = sorted_svd(&s);
    let alpha = &svd.singular_values;
    let floor = NOISE_FLOOR * l.values.amax().max(1.0);
    let k = match alpha.iter().next() {
        Some(&top) if top > floor => alpha.iter().take_while(|&&a| a > RANK_TOLERANCE * top).count(),
        _ => 0,
    };

    let mut u = svd.u.columns(0, k).into_owned();
    let mut v = svd.v.columns(0, k).into_owned();
    for axis in 0..k {
        let col = v.column(axis);
        let mut best = 0;
        for j in 1..col.len() {
            if col[j].abs() > col[best].abs() {
                best = j;
            }
        }
        if col[best] < 0.0 {
            v.column_mut(axis).neg_mut();
            u.column_mut(axis).neg_mut();
        }
    }
    let alpha = alpha.rows(0, k).into_owned();
    let eigenvalues = alpha.map(|a| a * a);
    let total = eigenvalues.sum();
    let explained_pct = if total > 0.0 {
        eigenvalues.map(|e| 100.0 * e / total)
    } else {
        DVector::zeros(0)
    };

    let row_principal = DMatrix::from_fn(u.nrows(), k, |i, a| u[(i, a)] * alpha[a] / sr[i]);
    let col_standard = DMatrix::from_fn(v.nrows(), k, |j, a| v[(j, a)] / sc[j]);
    let col_principal = DMatrix::from_fn(v.nrows(), k, |j, a| v[(j, a)] * alpha[a] / sc[j]);

    Ok(LraResult {
        singular_values: alpha,
        eigenvalues,
        row_principal,
        col_standard,
        col_contribution: v,
        col_principal,
        explained_pct,
        row_weights: r.clone(),
        col_weights: c.clone(),
        row_labels: x.row_labels().to_vec(),
        col_labels: x.col_labels().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiplotStyle {
    /// Rows principal, columns standard.
    Asymmetric,
    /// Rows principal, columns in contribution coordinates.
    Contribution,
    /// Rows and columns both principal (a symmetric map, not a true biplot).
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Biplot {
    pub rows: DMatrix<f64>,
    pub cols: DMatrix<f64>,
    pub axis_labels: [String; 2],
}

fn check_axis(res: &LraResult, axis: usize) -> Result<()> {
    if axis >= res.rank() {
        return Err(Error::AxisOutOfRange { axis, rank: res.rank() });
    }
    Ok(())
}

/// Two-dimensional display coordinates on the (0-based) axes `dims`.
pub fn biplot_coords(res: &LraResult, style: BiplotStyle, dims: (usize, usize)) -> Result<Biplot> {
    check_axis(res, dims.0)?;
    check_axis(res, dims.1)?;
    let cols = match style {
        BiplotStyle::Asymmetric => &res.col_standard,
        BiplotStyle::Contribution => &res.col_contribution,
        BiplotStyle::Symmetric => &res.col_principal,
    };
    let pick = |m: &DMatrix<f64>| DMatrix::from_fn(m.nrows(), 2, |i, a| m[(i, if a == 0 { dims.0 } else { dims.1 })]);
    let label = |a: usize| format!("Dim {} ({:.1}%)", a + 1, res.explained_pct[a]);
    Ok(Biplot {
        rows: pick(&res.row_principal),
        cols: pick(cols),
        axis_labels: [label(dims.0), label(dims.1)],
    })
}

/// The biplot direction of logratio `j/k`: `Γ_j − Γ_k` on the axes `dims`.
pub fn link_scores(res: &LraResult, pair: (usize, usize), dims: (usize, usize)) -> Result<[f64; 2]> {
    let j = res.col_standard.nrows();
    let (a, b) = pair;
    for idx in [a, b] {
        if idx >= j {
            return Err(Error::BadIndex { index: idx, len: j });
        }
    }
    if a == b {
        return Err(Error::InvalidParameter("link between a part and itself".into()));
    }
    check_axis(res, dims.0)?;
    check_axis(res, dims.1)?;
    let g = &res.col_standard;
    Ok([g[(a, dims.0)] - g[(b, dims.0)], g[(a, dims.1)] - g[(b, dims.1)]])
}

/// `Γ_j − Γ_k` over all retained axes.
pub fn link_vector(res: &LraResult, pair: (usize, usize)) -> Result<DVector<f64>> {
    let j = res.col_standard.nrows();
    let (a, b) = pair;
    if a >= j || b >= j {
        return Err(Error::BadIndex { index: a.max(b), len: j });
    }
    Ok((res.col_standard.row(a) - res.col_standard.row(b)).transpose())
}
