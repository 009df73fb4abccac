//! Composite health-risk index from correlation-matrix PCA.
//!
//! Prevalence columns are standardized, the correlation matrix is
//! diagonalized, and the index is the explained-variance-weighted sum of
//! the leading component scores needed to reach a variance target. Each
//! retained component is oriented so its scores rise with the zone's mean
//! standardized prevalence.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, Matrix};
use crate::scalar::Scalar;

pub const DEFAULT_VARIANCE_TARGET: f64 = 0.75;

/// Prevalence columns used when none are named explicitly.
pub const DEFAULT_PREVALENCE_COLUMNS: [&str; 7] = [
    "diabetes",
    "obesity",
    "asthma",
    "depression",
    "hyperlipidemia",
    "hypertension",
    "heart_disease",
];

/// Column-standardized data (mean 0, sample standard deviation 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized<T> {
    pub columns: Vec<String>,
    pub data: Matrix<T>,
    pub means: Vec<T>,
    pub stds: Vec<T>,
}

pub fn standardize<T: Scalar>(columns: &[String], matrix: &Matrix<T>) -> Result<Standardized<T>> {
    if columns.len() != matrix.cols() {
        return Err(Error::LengthMismatch {
            what: "column names",
            got: columns.len(),
            expected: matrix.cols(),
        });
    }
    if matrix.rows() < 2 {
        return Err(Error::param("rows", format!("need at least 2, got {}", matrix.rows())));
    }
    let n = T::from_count(matrix.rows());
    let mut data = matrix.clone();
    let mut means = Vec::with_capacity(matrix.cols());
    let mut stds = Vec::with_capacity(matrix.cols());
    for (c, name) in columns.iter().enumerate() {
        let col = matrix.column(c);
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("column `{name}`")));
        }
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::ConstantColumn(name.clone()));
        }
        let mean = col.iter().copied().sum::<T>() / n;
        let ss: T = col.iter().map(|&v| (v - mean) * (v - mean)).sum();
        let std = (ss / (n - T::one())).sqrt();
        if !(std > T::zero()) {
            return Err(Error::ConstantColumn(name.clone()));
        }
        for r in 0..matrix.rows() {
            data[(r, c)] = (matrix[(r, c)] - mean) / std;
        }
        means.push(mean);
        stds.push(std);
    }
    Ok(Standardized {
        columns: columns.to_vec(),
        data,
        means,
        stds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<T> {
    pub columns: Vec<String>,
    pub means: Vec<T>,
    pub stds: Vec<T>,
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<T>,
    /// Eigenvectors as columns, in eigenvalue order.
    pub loadings: Matrix<T>,
    pub explained_ratio: Vec<T>,
    pub correlation: Matrix<T>,
}

impl<T: Scalar> PcaModel<T> {
    /// Loading of variable `var` on component `comp`.
    pub fn loading(&self, var: usize, comp: usize) -> T {
        self.loadings[(var, comp)]
    }
}

pub fn pca_fit<T: Scalar>(z: &Standardized<T>) -> Result<PcaModel<T>> {
    let data = &z.data;
    if data.rows() < 2 {
        return Err(Error::param("rows", format!("need at least 2, got {}", data.rows())));
    }
    if data.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("standardized matrix".into()));
    }
    let p = data.cols();
    let scale = T::from_count(data.rows() - 1);
    let mut corr = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let s: T = (0..data.rows()).map(|r| data[(r, i)] * data[(r, j)]).sum::<T>() / scale;
            corr[(i, j)] = s;
            corr[(j, i)] = s;
        }
    }
    let eig = jacobi_eigen(&corr, T::lit(1e-12))?;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eig.values[b]
            .partial_cmp(&eig.values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| eig.values[i].max(T::zero())).collect();
    let mut loadings = Matrix::zeros(p, p);
    for (c, &src) in order.iter().enumerate() {
        let mut v = eig.vectors.column(src);
        // The entry of largest magnitude is made non-negative; ties go to the
        // lowest index.
        let mut lead = 0;
        for k in 1..p {
            if v[k].abs() > v[lead].abs() {
                lead = k;
            }
        }
        if v[lead] < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for (r, x) in v.into_iter().enumerate() {
            loadings[(r, c)] = x;
        }
    }
    let total: T = eigenvalues.iter().copied().sum();
    let explained_ratio = eigenvalues.iter().map(|&l| l / total).collect();
    Ok(PcaModel {
        columns: z.columns.clone(),
        means: z.means.clone(),
        stds: z.stds.clone(),
        eigenvalues,
        loadings,
        explained_ratio,
        correlation: corr,
    })
}

/// Smallest prefix of components whose explained share reaches `target`,
/// with the share it captures.
pub fn retained_components<T: Scalar>(explained: &[T], target: T) -> Result<(usize, T)> {
    if !(target > T::zero() && target <= T::one()) {
        return Err(Error::param("variance_target", format!("must be in (0, 1], got {target}")));
    }
    if explained.is_empty() {
        return Err(Error::EmptyInput("explained variance ratios"));
    }
    let slack = T::epsilon() * T::lit(64.0);
    let mut cum = T::zero();
    for (i, &r) in explained.iter().enumerate() {
        cum += r;
        if cum >= target - slack {
            return Ok((i + 1, cum));
        }
    }
    Ok((explained.len(), cum))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskIndex<T> {
    pub scores: Vec<T>,
    pub retained_components: usize,
    pub captured_variance: T,
    /// +1 or -1 per retained component.
    pub orientation: Vec<i8>,
}

pub fn health_risk_index<T: Scalar>(
    model: &PcaModel<T>,
    z: &Standardized<T>,
    target: T,
) -> Result<RiskIndex<T>> {
    if model.columns != z.columns {
        return Err(Error::param("columns", "model and matrix columns differ"));
    }
    let (m, captured) = retained_components(&model.explained_ratio, target)?;
    let data = &z.data;
    let (rows, p) = (data.rows(), data.cols());
    let pf = T::from_count(p);
    let zone_mean: Vec<T> = (0..rows).map(|r| data.row(r).iter().copied().sum::<T>() / pf).collect();
    let mut scores = vec![T::zero(); rows];
    let mut orientation = Vec::with_capacity(m);
    for c in 0..m {
        let comp: Vec<T> = (0..rows)
            .map(|r| (0..p).map(|v| data[(r, v)] * model.loadings[(v, c)]).sum())
            .collect();
        let cov: T = comp.iter().zip(&zone_mean).map(|(a, b)| *a * *b).sum();
        let norm = (comp.iter().map(|a| *a * *a).sum::<T>()
            * zone_mean.iter().map(|b| *b * *b).sum::<T>())
        .sqrt();
        let sign = if cov < -(norm * T::lit(1e-9)) { -1i8 } else { 1 };
        orientation.push(sign);
        let w = model.explained_ratio[c] * T::lit(f64::from(sign));
        for (s, v) in scores.iter_mut().zip(&comp) {
            *s += w * *v;
        }
    }
    Ok(RiskIndex {
        scores,
        retained_components: m,
        captured_variance: captured,
        orientation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    fn cols(c: &[Vec<f64>]) -> Matrix<f64> {
        let rows: Vec<Vec<f64>> = (0..c[0].len()).map(|r| c.iter().map(|col| col[r]).collect()).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn standardize_two_values() {
        let s = standardize(&names(1), &cols(&[vec![1.0, 3.0]])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.data[(0, 0)] + h).abs() < 1e-15);
        assert!((s.data[(1, 0)] - h).abs() < 1e-15);
        assert_eq!(s.means, [2.0]);
        assert!((s.stds[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn standardize_is_idempotent() {
        let once = standardize(&names(1), &cols(&[vec![2.0, 9.0, 4.0, 1.5, 7.0]])).unwrap();
        let twice = standardize(&names(1), &once.data).unwrap();
        assert!(twice.data.max_abs_diff(&once.data) < 1e-12);
    }

    #[test]
    fn constant_column_is_named() {
        let err = standardize(&names(2), &cols(&[vec![1.0, 2.0, 3.0], vec![4.0, 4.0, 4.0]])).unwrap_err();
        assert_eq!(err, Error::ConstantColumn("v1".into()));
    }

    #[test]
    fn perfectly_correlated_pair() {
        let z = standardize(&names(2), &cols(&[vec![1.0, 2.0, 4.0], vec![3.0, 5.0, 9.0]])).unwrap();
        let m = pca_fit(&z).unwrap();
        assert!((m.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!(m.eigenvalues[1].abs() < 1e-12);
        assert!((m.explained_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_pair() {
        let z = standardize(&names(2), &cols(&[vec![1.0, -1.0, 1.0, -1.0], vec![1.0, 1.0, -1.0, -1.0]])).unwrap();
        let m = pca_fit(&z).unwrap();
        assert!((m.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((m.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_point_six() {
        // Sample correlation exactly 0.6 by construction.
        let u = vec![1.0, -1.0, 1.0, -1.0];
        let v = vec![1.0, 1.0, -1.0, -1.0];
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.6 * a + 0.8 * b).collect();
        let z = standardize(&names(2), &cols(&[u, w])).unwrap();
        let m = pca_fit(&z).unwrap();
        assert!((m.eigenvalues[0] - 1.6).abs() < 1e-9);
        assert!((m.eigenvalues[1] - 0.4).abs() < 1e-9);
    }

    #[test]
    fn retention_rule() {
        let (m, cap) = retained_components(&[0.5, 0.3, 0.2], 0.75).unwrap();
        assert_eq!(m, 2);
        assert!((cap - 0.8f64).abs() < 1e-15);
        assert_eq!(retained_components(&[0.5, 0.3, 0.2], 1.0).unwrap().0, 3);
        assert_eq!(retained_components(&[0.5, 0.3, 0.2], 0.5).unwrap().0, 1);
        assert!(retained_components(&[0.5, 0.5], 0.0).is_err());
        assert!(retained_components(&[0.5, 0.5], 1.2).is_err());
    }

    #[test]
    fn single_variable_index_is_the_standardized_column() {
        let z = standardize(&names(1), &cols(&[vec![3.0, 1.0, 4.0, 1.0, 5.0]])).unwrap();
        let m = pca_fit(&z).unwrap();
        let idx = health_risk_index(&m, &z, 0.75).unwrap();
        assert_eq!(idx.retained_components, 1);
        for (s, v) in idx.scores.iter().zip(z.data.column(0)) {
            assert!((s - v).abs() < 1e-15);
        }
    }

    #[test]
    fn index_rejects_mismatched_columns() {
        let z = standardize(&names(1), &cols(&[vec![3.0, 1.0, 4.0]])).unwrap();
        let m = pca_fit(&z).unwrap();
        let mut other = z.clone();
        other.columns = vec!["other".into()];
        assert!(health_risk_index(&m, &other, 0.75).is_err());
        assert!(health_risk_index(&m, &z, 0.0).is_err());
    }
}
