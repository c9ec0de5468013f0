//! Logratio distances, form matrices and total logratio variance.
//!
//! Every quantity can be computed over the J weighted CLRs or over the
//! J(J−1)/2 pairwise logratios with pair weights `c_j c_k`; the two routes
//! agree exactly. The CLR route is the default since it works on a J-column
//! matrix. Variances are mass-weighted without Bessel correction:
//! `WVar_r(v) = Σ r_i (v_i − Σ r v)²`.

use nalgebra::DMatrix;

use crate::composition::{CompositionMatrix, WeightAxis, WeightVector};
use crate::error::Result;
use crate::linalg::{center_columns, center_rows, weighted_variance};
use crate::patterns::lexicographic_pairs;

/// Which coordinate system a geometric quantity is computed through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    #[default]
    Clr,
    Lr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub values: DMatrix<f64>,
    pub labels: Vec<String>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a, b)]
    }
}

/// Weighted scalar products between centred samples (I×I).
#[derive(Debug, Clone, PartialEq)]
pub struct FormMatrix {
    pub values: DMatrix<f64>,
}

/// Weighted CLRs: `log x_ij − Σ_k c_k log x_ik`.
pub fn clr_values(x: &CompositionMatrix, c: &WeightVector) -> DMatrix<f64> {
    center_rows(&x.log().values, c.as_slice())
}

/// Pairwise logratios in lexicographic order, with their weights `c_j c_k`.
pub fn lr_values(x: &CompositionMatrix, c: &WeightVector) -> (DMatrix<f64>, Vec<f64>) {
    let l = x.log().values;
    let pairs = lexicographic_pairs(x.nparts());
    let z = DMatrix::from_fn(x.nrows(), pairs.len(), |i, p| l[(i, pairs[p].0)] - l[(i, pairs[p].1)]);
    let w = pairs.iter().map(|&(a, b)| c[a] * c[b]).collect();
    (z, w)
}

fn effective_weights(c: &WeightVector, weighted: bool) -> WeightVector {
    if weighted {
        c.clone()
    } else {
        WeightVector::uniform(c.len(), c.axis())
    }
}

/// Logratio distances between samples (rows).
///
/// With `weighted = false` the weights are replaced by `1/J`, giving the
/// unweighted distance.
pub fn logratio_distances(x: &CompositionMatrix, c: &WeightVector, weighted: bool) -> Result<DistanceMatrix> {
    logratio_distances_via(x, c, weighted, Route::Clr)
}

pub fn logratio_distances_via(
    x: &CompositionMatrix,
    c: &WeightVector,
    weighted: bool,
    route: Route,
) -> Result<DistanceMatrix> {
    c.expect_len(x.nparts(), "parts")?;
    let c = effective_weights(c, weighted);
    let (coords, w) = match route {
        Route::Clr => (clr_values(x, &c), c.as_slice().to_vec()),
        Route::Lr => lr_values(x, &c),
    };
    let n = x.nrows();
    let mut values = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a + 1..n {
            let d2: f64 = (0..coords.ncols())
                .map(|k| {
                    let diff = coords[(a, k)] - coords[(b, k)];
                    w[k] * diff * diff
                })
                .sum();
            let d = d2.sqrt();
            values[(a, b)] = d;
            values[(b, a)] = d;
        }
    }
    Ok(DistanceMatrix {
        values,
        labels: x.row_labels().to_vec(),
    })
}

/// Logratio distances between parts: the sample distances of the
/// transposed, re-closed table with sample weights `r`.
pub fn part_distances(x: &CompositionMatrix, r: &WeightVector, weighted: bool) -> Result<DistanceMatrix> {
    r.expect_len(x.nrows(), "samples")?;
    let t = x.transpose_closed();
    let r = WeightVector::new(r.as_slice().to_vec(), WeightAxis::Parts)?;
    logratio_distances(&t, &r, weighted)
}

/// Row-centred (by `r`) and weighted coordinates whose plain scalar
/// products give the form matrix: `(I − 1rᵀ) L Pᵀ D^{1/2}`.
fn centred_weighted(x: &CompositionMatrix, r: &WeightVector, c: &WeightVector, route: Route) -> DMatrix<f64> {
    let (coords, w) = match route {
        Route::Clr => (clr_values(x, c), c.as_slice().to_vec()),
        Route::Lr => lr_values(x, c),
    };
    let mut y = center_columns(&coords, r.as_slice());
    for (k, mut col) in y.column_iter_mut().enumerate() {
        col *= w[k].sqrt();
    }
    y
}

/// `Z D_c Zᵀ` (CLR route) or `Y D_cc Yᵀ` (LR route).
pub fn form_matrix(x: &CompositionMatrix, r: &WeightVector, c: &WeightVector, route: Route) -> Result<FormMatrix> {
    r.expect_len(x.nrows(), "samples")?;
    c.expect_len(x.nparts(), "parts")?;
    let y = centred_weighted(x, r, c, route);
    Ok(FormMatrix { values: &y * y.transpose() })
}

/// Total logratio variance `Σ_{j<k} c_j c_k WVar_r(ln(x_j/x_k))`,
/// computed as `Σ_j c_j WVar_r(CLR_j)`.
pub fn total_variance(x: &CompositionMatrix, r: &WeightVector, c: &WeightVector) -> Result<f64> {
    total_variance_via(x, r, c, Route::Clr)
}

pub fn total_variance_via(x: &CompositionMatrix, r: &WeightVector, c: &WeightVector, route: Route) -> Result<f64> {
    r.expect_len(x.nrows(), "samples")?;
    c.expect_len(x.nparts(), "parts")?;
    let (coords, w) = match route {
        Route::Clr => (clr_values(x, c), c.as_slice().to_vec()),
        Route::Lr => lr_values(x, c),
    };
    Ok(coords
        .column_iter()
        .zip(&w)
        .map(|(col, wk)| wk * weighted_variance(col.iter().copied(), r.as_slice()))
        .sum())
}
