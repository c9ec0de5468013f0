//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `a x = b` by partial-pivot LU.
pub fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    // nalgebra only fails on exact zero pivots; also reject near-singular systems.
    let u = lu.u();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if u.diagonal().iter().any(|d| d.abs() <= 1e-14 * scale) {
        return Err(Error::SingularSystem);
    }
    let x = lu.solve(b).ok_or(Error::SingularSystem)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(x)
}

/// Thin SVD with singular values sorted in descending order.
///
/// Computed with faer: nalgebra 0.35's SVD can lose five digits when two
/// singular values nearly coincide.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub fn sorted_svd(m: &DMatrix<f64>) -> SortedSvd {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return SortedSvd {
            u: DMatrix::zeros(r, 0),
            singular_values: DVector::zeros(0),
            v: DMatrix::zeros(c, 0),
        };
    }
    let svd = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)])
        .thin_svd()
        .expect("SVD of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    SortedSvd {
        u: DMatrix::from_fn(r, k, |i, j| u[(i, j)]),
        singular_values: DVector::from_fn(k, |j, _| s[j]),
        v: DMatrix::from_fn(c, k, |i, j| v[(i, j)]),
    }
}

/// Number of singular values above `rel_tol` times the largest.
#[cfg(test)]
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = sorted_svd(m).singular_values;
    let max = s.max();
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * max).count()
}

/// Mass-weighted variance `Σ r_i (v_i - Σ r v)^2`, no Bessel correction.
pub fn weighted_variance(values: impl Iterator<Item = f64> + Clone, weights: &[f64]) -> f64 {
    let mean: f64 = values.clone().zip(weights).map(|(v, w)| v * w).sum();
    values.zip(weights).map(|(v, w)| w * (v - mean) * (v - mean)).sum()
}

/// Subtracts the `weights`-weighted mean of every column.
pub fn center_columns(m: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean: f64 = col.iter().zip(weights).map(|(v, w)| v * w).sum();
        col.add_scalar_mut(-mean);
    }
    out
}

/// Subtracts the `weights`-weighted mean of every row.
pub fn center_rows(m: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let mean: f64 = row.iter().zip(weights).map(|(v, w)| v * w).sum();
        row.add_scalar_mut(-mean);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_and_detects_singularity() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let x = lu_solve(&a, &DVector::from_vec(vec![3.0, 5.0])).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(lu_solve(&s, &DVector::from_vec(vec![1.0, 1.0])), Err(Error::SingularSystem));
    }

    #[test]
    fn svd_accurate_with_clustered_singular_values() {
        let c = [0.33012265949935016, 0.3372046054421905, 0.3326727350584593];
        let m = DMatrix::from_fn(4, 3, |i, k| if i == 3 { c[k] } else { f64::from(u8::from(i == k)) - c[k] });
        let svd = sorted_svd(&m);
        let rebuilt = &svd.u * DMatrix::from_diagonal(&svd.singular_values) * svd.v.transpose();
        assert!((rebuilt - m).amax() < 1e-14);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 5.0, 0.0, 0.0]);
        let svd = sorted_svd(&m);
        assert_eq!(svd.singular_values.as_slice(), &[5.0, 1.0]);
        let rebuilt = &svd.u * DMatrix::from_diagonal(&svd.singular_values) * svd.v.transpose();
        assert!((rebuilt - m).amax() < 1e-14);
    }

    #[test]
    fn weighted_variance_population_convention() {
        let v = [0.0, 2.0];
        assert!((weighted_variance(v.iter().copied(), &[0.5, 0.5]) - 1.0).abs() < 1e-15);
    }
}
