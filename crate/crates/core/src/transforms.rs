//! Forward logratio transforms and their inverses.
//!
//! Pairwise and summated logratio sets are inverted through a square
//! inversion system `Q x = e`: the pattern rows with every −1 replaced by
//! `−exp(y_k)`, plus a closing row of ones, against `e = (0, …, 0, 1)`.
//! Geometric-mean kinds (CLR, PLR, ILR) go through [`invert_linear`].

use nalgebra::{DMatrix, DVector};

use crate::composition::{CompositionMatrix, LogMatrix, WeightVector};
use crate::error::{Error, Result};
use crate::linalg::{lu_solve, sorted_svd};
use crate::patterns::{PatternKind, PatternMatrix};

/// Residual tolerance when checking that a logratio vector lies in the
/// range of its pattern.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;

/// Logratios of every sample, one column per pattern row.
#[derive(Debug, Clone, PartialEq)]
pub struct LogratioMatrix {
    pub values: DMatrix<f64>,
    pub pattern: PatternMatrix,
    pub row_labels: Vec<String>,
}

impl LogratioMatrix {
    pub fn col_labels(&self) -> Vec<String> {
        self.pattern.row_names()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }
}

pub fn log_transform(x: &CompositionMatrix) -> LogMatrix {
    x.log()
}

/// `L Pᵀ` for a linear pattern.
pub fn apply_pattern(l: &LogMatrix, p: &PatternMatrix) -> Result<LogratioMatrix> {
    if !p.kind().is_linear() {
        return Err(Error::SlrNotLinear);
    }
    if l.values.ncols() != p.nparts() {
        return Err(Error::ShapeMismatch(format!(
            "{} log columns, pattern over {} parts",
            l.values.ncols(),
            p.nparts()
        )));
    }
    Ok(LogratioMatrix {
        values: &l.values * p.coeffs().transpose(),
        pattern: p.clone(),
        row_labels: l.row_labels.clone(),
    })
}

/// Summated logratios `ln(Σ_num x / Σ_den x)`.
pub fn slr_transform(x: &CompositionMatrix, p: &PatternMatrix) -> Result<LogratioMatrix> {
    if p.kind() != PatternKind::Slr {
        return Err(Error::UnsupportedKind(p.kind().to_string()));
    }
    if x.nparts() != p.nparts() {
        return Err(Error::ShapeMismatch(format!(
            "{} parts, pattern over {}",
            x.nparts(),
            p.nparts()
        )));
    }
    let groups: Vec<_> = (0..p.nrows()).map(|k| p.row_groups(k)).collect();
    let xv = x.values();
    let values = DMatrix::from_fn(x.nrows(), p.nrows(), |i, k| {
        let (num, den) = &groups[k];
        let top: f64 = num.iter().map(|&j| xv[(i, j)]).sum();
        let bottom: f64 = den.iter().map(|&j| xv[(i, j)]).sum();
        (top / bottom).ln()
    });
    Ok(LogratioMatrix {
        values,
        pattern: p.clone(),
        row_labels: x.row_labels().to_vec(),
    })
}

/// The square system `Q x = e` that recovers a composition from J−1
/// pairwise or summated logratios.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionSystem {
    pub q: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

impl InversionSystem {
    /// Builds `Q` from a ±1 pattern (ALR, DAG or SLR) and logratios `y`.
    pub fn build(p: &PatternMatrix, y: &[f64]) -> Result<Self> {
        let j = p.nparts();
        if !matches!(p.kind(), PatternKind::Alr | PatternKind::Dag | PatternKind::Slr) {
            return Err(Error::UnsupportedKind(p.kind().to_string()));
        }
        if y.len() != j - 1 || p.nrows() != j - 1 {
            return Err(Error::ShapeMismatch(format!("{} logratios for {j} parts", y.len())));
        }
        let mut q = DMatrix::from_element(j, j, 1.0);
        for k in 0..j - 1 {
            let ey = y[k].exp();
            for col in 0..j {
                let v = p.coeffs()[(k, col)];
                q[(k, col)] = if v < 0.0 { -ey } else { v };
            }
        }
        let mut rhs = DVector::zeros(j);
        rhs[j - 1] = 1.0;
        Ok(InversionSystem { q, rhs })
    }

    pub fn solve(&self) -> Result<DVector<f64>> {
        lu_solve(&self.q, &self.rhs)
    }
}

fn check_finite(y: &[f64]) -> Result<()> {
    if let Some(k) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0, col: k });
    }
    Ok(())
}

/// ALR inverse by exponentiating, inserting 1 at the reference, and closing.
pub fn invert_alr(y: &[f64], reference: usize) -> Result<DVector<f64>> {
    check_finite(y)?;
    let j = y.len() + 1;
    if reference >= j {
        return Err(Error::BadIndex { index: reference, len: j });
    }
    let mut x = DVector::from_element(j, 1.0);
    let mut k = 0;
    for part in 0..j {
        if part != reference {
            x[part] = y[k].exp();
            k += 1;
        }
    }
    let s = x.sum();
    Ok(x / s)
}

/// ALR inverse through the linear system; agrees with [`invert_alr`].
pub fn invert_alr_system(y: &[f64], p: &PatternMatrix) -> Result<DVector<f64>> {
    if p.kind() != PatternKind::Alr {
        return Err(Error::UnsupportedKind(p.kind().to_string()));
    }
    check_finite(y)?;
    InversionSystem::build(p, y)?.solve()
}

/// Inverse of a spanning-tree set of pairwise logratios.
pub fn invert_dag(y: &[f64], p: &PatternMatrix) -> Result<DVector<f64>> {
    if !matches!(p.kind(), PatternKind::Dag | PatternKind::Alr) {
        return Err(Error::UnsupportedKind(p.kind().to_string()));
    }
    check_finite(y)?;
    InversionSystem::build(p, y)?.solve()
}

/// Inverse of a set of summated logratios.
///
/// Rejects (rather than repairs) a solution with a non-positive part: such a
/// `y` is not realisable by this pattern.
pub fn invert_slr(y: &[f64], p: &PatternMatrix) -> Result<DVector<f64>> {
    if p.kind() != PatternKind::Slr {
        return Err(Error::UnsupportedKind(p.kind().to_string()));
    }
    check_finite(y)?;
    let x = InversionSystem::build(p, y)?.solve()?;
    if let Some(j) = x.iter().position(|&v| v <= 0.0) {
        return Err(Error::NegativeSolution(j));
    }
    Ok(x)
}

/// General inverse of a full-rank linear contrast.
///
/// Solves `P l = y` together with `cᵀ l = 0` and returns `close(exp(l))`.
pub fn invert_linear(y: &[f64], p: &PatternMatrix, c: &WeightVector) -> Result<DVector<f64>> {
    if !matches!(
        p.kind(),
        PatternKind::Clr | PatternKind::Plr | PatternKind::Ilr | PatternKind::Alr | PatternKind::Dag
    ) {
        return Err(if p.kind() == PatternKind::Slr {
            Error::SlrNotLinear
        } else {
            Error::UnsupportedKind(p.kind().to_string())
        });
    }
    check_finite(y)?;
    let j = p.nparts();
    c.expect_len(j, "parts")?;
    if y.len() != p.nrows() {
        return Err(Error::ShapeMismatch(format!("{} logratios for {} rows", y.len(), p.nrows())));
    }
    let mut a = p.coeffs().clone().insert_row(p.nrows(), 0.0);
    for k in 0..j {
        a[(p.nrows(), k)] = c[k];
    }
    let mut b = DVector::zeros(p.nrows() + 1);
    b.rows_mut(0, y.len()).copy_from_slice(y);

    let l = if a.nrows() == j {
        lu_solve(&a, &b).map_err(|_| Error::RankDeficientPattern)?
    } else {
        // CLR: J+1 equations in J unknowns, consistent only when cᵀy = 0.
        let svd = sorted_svd(&a);
        let s = &svd.singular_values;
        if s.len() < j || s[j - 1] <= 1e-12 * s[0] {
            return Err(Error::RankDeficientPattern);
        }
        let ut_b = svd.u.transpose() * &b;
        let coef = DVector::from_fn(j, |k, _| ut_b[k] / s[k]);
        let l = &svd.v * coef;
        let residual = (&a * &l - &b).norm();
        let scale = b.norm().max(1.0);
        if residual > CONSISTENCY_TOLERANCE * scale {
            return Err(Error::InconsistentSystem(residual));
        }
        l
    };
    let x = l.map(f64::exp);
    let s = x.sum();
    Ok(x / s)
}
