//! The simplex data model: raw tables, closed compositions, weights and logs.
//!
//! A [`CompositionMatrix`] holds one composition per row. Every entry is
//! strictly positive and every row sums to one, so logratios are always
//! defined. Raw tables reach that state through [`close`], optionally after
//! an explicit [`replace_zeros`] step.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Rows already summing to one within this tolerance are accepted as closed.
pub const CLOSURE_TOLERANCE: f64 = 1e-10;

/// Tolerance on the sum of a [`WeightVector`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// A labelled numeric table as read from disk, before any validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub values: DMatrix<f64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl RawTable {
    pub fn new(values: DMatrix<f64>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        check_labels(&values, &row_labels, &col_labels)?;
        Ok(RawTable {
            values,
            row_labels,
            col_labels,
        })
    }

    /// Builds a table with generated labels `s1..sI` and `p1..pJ`.
    pub fn unlabelled(values: DMatrix<f64>) -> Self {
        let row_labels = (1..=values.nrows()).map(|i| format!("s{i}")).collect();
        let col_labels = (1..=values.ncols()).map(|j| format!("p{j}")).collect();
        RawTable {
            values,
            row_labels,
            col_labels,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let values = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Self::unlabelled(values)
    }
}

fn check_labels(values: &DMatrix<f64>, row_labels: &[String], col_labels: &[String]) -> Result<()> {
    if row_labels.len() != values.nrows() || col_labels.len() != values.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix with {} row labels and {} column labels",
            values.nrows(),
            values.ncols(),
            row_labels.len(),
            col_labels.len()
        )));
    }
    for labels in [row_labels, col_labels] {
        let mut seen = HashSet::new();
        for l in labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
    }
    Ok(())
}

/// I×J strictly positive matrix with unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionMatrix {
    values: DMatrix<f64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl CompositionMatrix {
    /// Validates an already-closed matrix.
    pub fn new(values: DMatrix<f64>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        check_labels(&values, &row_labels, &col_labels)?;
        check_shape(&values)?;
        check_positive(&values)?;
        for (i, row) in values.row_iter().enumerate() {
            let sum = row.sum();
            if (sum - 1.0).abs() > CLOSURE_TOLERANCE {
                return Err(Error::NotClosed { row: i, sum });
            }
        }
        Ok(CompositionMatrix {
            values,
            row_labels,
            col_labels,
        })
    }

    /// Convenience constructor from row slices; rows are closed.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        close(&RawTable::from_rows(rows), CLOSURE_TOLERANCE)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn nparts(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    /// Elementwise natural logarithm.
    pub fn log(&self) -> LogMatrix {
        LogMatrix {
            values: self.values.map(f64::ln),
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
        }
    }

    /// Transposes the table and re-closes it, so parts become the rows.
    pub fn transpose_closed(&self) -> CompositionMatrix {
        let raw = RawTable {
            values: self.values.transpose(),
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
        };
        close(&raw, 0.0).expect("transpose of a valid composition is closable")
    }

    /// Keeps the listed samples (rows) in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<CompositionMatrix> {
        if rows.len() < 2 {
            return Err(Error::FewerThanTwoSamples);
        }
        for &i in rows {
            if i >= self.nrows() {
                return Err(Error::BadIndex {
                    index: i,
                    len: self.nrows(),
                });
            }
        }
        let values = DMatrix::from_fn(rows.len(), self.nparts(), |r, j| self.values[(rows[r], j)]);
        CompositionMatrix::new(
            values,
            rows.iter().map(|&i| self.row_labels[i].clone()).collect(),
            self.col_labels.clone(),
        )
    }
}

fn check_shape(values: &DMatrix<f64>) -> Result<()> {
    if values.ncols() < 2 {
        return Err(Error::FewerThanTwoParts);
    }
    if values.nrows() < 2 {
        return Err(Error::FewerThanTwoSamples);
    }
    Ok(())
}

fn check_positive(values: &DMatrix<f64>) -> Result<()> {
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            let v = values[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if v <= 0.0 {
                return Err(Error::ZeroOrNegativeEntry { row: i, col: j, value: v });
            }
        }
    }
    Ok(())
}

/// Closes each row of a raw table to sum one.
///
/// Rows whose sum is already within `tolerance` of one are kept verbatim, so
/// a closed matrix read back from a CSV file is not perturbed. Zeros are
/// rejected: run [`replace_zeros`] first if the table contains them.
pub fn close(raw: &RawTable, tolerance: f64) -> Result<CompositionMatrix> {
    let values = &raw.values;
    check_labels(values, &raw.row_labels, &raw.col_labels)?;
    check_shape(values)?;
    for (i, row) in values.row_iter().enumerate() {
        if row.sum() <= 0.0 {
            return Err(Error::EmptyRow { row: i });
        }
    }
    check_positive(values)?;
    let mut closed = values.clone();
    for mut row in closed.row_iter_mut() {
        let sum = row.sum();
        if (sum - 1.0).abs() > tolerance {
            row /= sum;
        }
    }
    Ok(CompositionMatrix {
        values: closed,
        row_labels: raw.row_labels.clone(),
        col_labels: raw.col_labels.clone(),
    })
}

/// Multiplicative zero replacement.
///
/// Each zero in row `i` becomes `delta_fraction` times the smallest positive
/// entry of that row; the positive entries are shrunk proportionally so the
/// row sum is unchanged.
pub fn replace_zeros(raw: &RawTable, delta_fraction: f64) -> Result<RawTable> {
    if !(delta_fraction > 0.0 && delta_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta_fraction must lie in (0, 1), got {delta_fraction}"
        )));
    }
    let mut out = raw.values.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        if let Some(j) = row.iter().position(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::ZeroOrNegativeEntry {
                row: i,
                col: j,
                value: row[j],
            });
        }
        let min_positive = row.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        if !min_positive.is_finite() {
            return Err(Error::AllZeroRow { row: i });
        }
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if zeros == 0 {
            continue;
        }
        let total: f64 = row.sum();
        let imputed = delta_fraction * min_positive;
        let scale = (total - imputed * zeros as f64) / total;
        for v in row.iter_mut() {
            *v = if *v == 0.0 { imputed } else { *v * scale };
        }
    }
    Ok(RawTable {
        values: out,
        row_labels: raw.row_labels.clone(),
        col_labels: raw.col_labels.clone(),
    })
}

/// Keeps the listed parts (in the given order) and re-closes every row.
pub fn subcomposition(x: &CompositionMatrix, keep: &[usize]) -> Result<CompositionMatrix> {
    let mut seen = HashSet::new();
    for &j in keep {
        if j >= x.nparts() || !seen.insert(j) {
            return Err(Error::UnknownPart(j));
        }
    }
    if keep.len() < 2 {
        return Err(Error::FewerThanTwoParts);
    }
    let values = DMatrix::from_fn(x.nrows(), keep.len(), |i, k| x.values[(i, keep[k])]);
    let raw = RawTable {
        values,
        row_labels: x.row_labels.clone(),
        col_labels: keep.iter().map(|&j| x.col_labels[j].clone()).collect(),
    };
    close(&raw, CLOSURE_TOLERANCE)
}

/// Which axis of the data matrix a weight vector applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightAxis {
    Parts,
    Samples,
}

/// Strictly positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    axis: WeightAxis,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>, axis: WeightAxis) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {w} is not strictly positive")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        Ok(WeightVector { weights, axis })
    }

    /// Rescales arbitrary positive values to sum one.
    pub fn normalized(raw: &[f64], axis: WeightAxis) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        Self::new(raw.iter().map(|w| w / sum).collect(), axis)
    }

    pub fn uniform(n: usize, axis: WeightAxis) -> Self {
        assert!(n > 0, "uniform weights need at least one element");
        WeightVector {
            weights: vec![1.0 / n as f64; n],
            axis,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn axis(&self) -> WeightAxis {
        self.axis
    }

    pub(crate) fn expect_len(&self, n: usize, what: &str) -> Result<()> {
        if self.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {n} {what}",
                self.len()
            )));
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

/// Column means of the composition: the average proportion of every part.
pub fn marginal_weights(x: &CompositionMatrix) -> WeightVector {
    let means: Vec<f64> = x.values.column_iter().map(|c| c.mean()).collect();
    WeightVector::normalized(&means, WeightAxis::Parts).expect("column means of a composition are positive")
}

/// Natural logarithms of a composition.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMatrix {
    pub values: DMatrix<f64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(rows: &[Vec<f64>]) -> RawTable {
        RawTable::from_rows(rows)
    }

    #[test]
    fn close_proportional_rows() {
        let x = close(&raw(&[vec![60.0, 30.0, 10.0], vec![1.0, 1.0, 1.0]]), CLOSURE_TOLERANCE).unwrap();
        let expect = [0.6, 0.3, 0.1];
        for j in 0..3 {
            assert!((x.values()[(0, j)] - expect[j]).abs() < 1e-15);
            assert!((x.values()[(1, j)] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn close_budget_row_by_hand_division() {
        let row = [2757.0, 82178.0, 180960.0, 122427.0];
        let total = 2757.0 + 82178.0 + 180960.0 + 122427.0;
        assert_eq!(total, 388322.0);
        let x = close(&raw(&[row.to_vec(), vec![1.0; 4]]), CLOSURE_TOLERANCE).unwrap();
        for j in 0..4 {
            assert!((x.values()[(0, j)] - row[j] / 388322.0).abs() < 1e-15);
            assert_eq!(x.values()[(1, j)], 0.25);
        }
        assert!((x.values().row(0).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn close_rejects_zero_and_empty_rows() {
        let err = close(&raw(&[vec![1.0, 0.0], vec![1.0, 1.0]]), CLOSURE_TOLERANCE).unwrap_err();
        assert!(matches!(err, Error::ZeroOrNegativeEntry { row: 0, col: 1, .. }));
        let err = close(&raw(&[vec![1.0, 1.0], vec![0.0, 0.0]]), CLOSURE_TOLERANCE).unwrap_err();
        assert_eq!(err, Error::EmptyRow { row: 1 });
        let err = close(&raw(&[vec![2.0, -1.0], vec![1.0, 1.0]]), CLOSURE_TOLERANCE).unwrap_err();
        assert!(matches!(err, Error::ZeroOrNegativeEntry { .. }));
    }

    #[test]
    fn close_keeps_already_closed_rows() {
        let row = vec![0.3, 0.7 + 5e-11];
        let x = close(&raw(&[row.clone(), vec![0.5, 0.5]]), CLOSURE_TOLERANCE).unwrap();
        assert_eq!(x.values()[(0, 1)], row[1]);
    }

    #[test]
    fn replace_zeros_multiplicative() {
        let out = replace_zeros(&raw(&[vec![0.5, 0.5, 0.0]]), 0.5).unwrap();
        let expect = [0.375, 0.375, 0.25];
        for j in 0..3 {
            assert!((out.values[(0, j)] - expect[j]).abs() < 1e-15);
        }
        assert!((out.values.row(0).sum() - 1.0).abs() < 1e-15);

        let untouched = raw(&[vec![3.0, 2.0, 1.0]]);
        assert_eq!(replace_zeros(&untouched, 0.5).unwrap(), untouched);

        let err = replace_zeros(&raw(&[vec![0.0, 0.0, 0.0]]), 0.5).unwrap_err();
        assert_eq!(err, Error::AllZeroRow { row: 0 });
        assert!(replace_zeros(&untouched, 1.0).is_err());
    }

    #[test]
    fn subcomposition_reclose_and_coherence() {
        let x = CompositionMatrix::from_rows(&[vec![0.6, 0.3, 0.1], vec![0.2, 0.2, 0.6]]).unwrap();
        let s = subcomposition(&x, &[0, 1]).unwrap();
        assert!((s.values()[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.values()[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.values()[(0, 0)] / s.values()[(0, 1)] - 2.0).abs() < 1e-14);
        assert_eq!(subcomposition(&x, &[0, 1, 2]).unwrap(), x);
        assert_eq!(subcomposition(&x, &[0, 5]).unwrap_err(), Error::UnknownPart(5));
        assert_eq!(subcomposition(&x, &[1]).unwrap_err(), Error::FewerThanTwoParts);
    }

    #[test]
    fn marginal_weights_are_column_means() {
        let x = CompositionMatrix::from_rows(&[vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        let c = marginal_weights(&x);
        assert!((c[0] - 0.4).abs() < 1e-15 && (c[1] - 0.6).abs() < 1e-15);

        let p = vec![0.1, 0.2, 0.7];
        let x = CompositionMatrix::from_rows(&[p.clone(), p.clone(), p.clone()]).unwrap();
        let c = marginal_weights(&x);
        for j in 0..3 {
            assert!((c[j] - p[j]).abs() < 1e-15);
        }
        let x = CompositionMatrix::from_rows(&[vec![1.0; 4], vec![1.0; 4]]).unwrap();
        assert!(marginal_weights(&x).as_slice().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![0.5, 0.5], WeightAxis::Parts).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6], WeightAxis::Parts).is_err());
        assert!(WeightVector::new(vec![1.0, 0.0], WeightAxis::Parts).is_err());
        let w = WeightVector::normalized(&[1.0, 3.0], WeightAxis::Samples).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
    }

    #[test]
    fn labels_must_be_unique() {
        let values = DMatrix::from_element(2, 2, 0.5);
        let err = CompositionMatrix::new(values, vec!["a".into(), "a".into()], vec!["x".into(), "y".into()]).unwrap_err();
        assert_eq!(err, Error::DuplicateLabel("a".into()));
    }

    #[test]
    fn log_round_trip() {
        let x = CompositionMatrix::from_rows(&[vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap();
        let l = x.log();
        assert!((l.values[(0, 0)] + std::f64::consts::LN_2).abs() < 1e-15);
        let back = l.values.map(f64::exp);
        for (a, b) in back.iter().zip(x.values().iter()) {
            assert!(((a - b) / b).abs() < 1e-15);
        }
    }
}
