use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Inverse of a symmetric positive definite matrix, `None` when singular.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = m.clone().cholesky()?;
    let inv = chol.inverse();
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Moore-Penrose inverse of a symmetric matrix together with its numerical
/// rank and whether any eigenvalue is materially negative.
pub(crate) fn symmetric_pinv(m: &DMatrix<f64>) -> (DMatrix<f64>, usize, bool) {
    let n = m.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), 0, false);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = scale * 1e-10;
    let mut inv = DMatrix::zeros(n, n);
    let mut rank = 0;
    let mut negative = false;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -tol {
            negative = true;
        }
        if lambda.abs() > tol {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            inv += (v * v.transpose()) / lambda;
        }
    }
    (inv, rank, negative)
}

/// Finds a set of linearly dependent columns by sequential projection.
/// Returns the first column that is (numerically) spanned by its
/// predecessors, followed by the predecessors it depends on.
pub(crate) fn collinear_set(x: &DMatrix<f64>, names: &[String]) -> Option<Vec<String>> {
    let mut basis: Vec<usize> = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 {
            return Some(vec![names[j].clone()]);
        }
        if !basis.is_empty() {
            let b = x.select_columns(&basis);
            let coef = least_squares(&b, &col)?;
            let resid = &col - &b * &coef;
            if resid.norm() <= 1e-9 * norm {
                let scale = coef.amax().max(1e-300);
                let mut set = vec![names[j].clone()];
                set.extend(
                    basis
                        .iter()
                        .zip(coef.iter())
                        .filter(|(_, c)| c.abs() > 1e-8 * scale)
                        .map(|(&k, _)| names[k].clone()),
                );
                return Some(set);
            }
        }
        basis.push(j);
    }
    None
}

pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    x.clone().svd(true, true).solve(y, 1e-12).ok()
}

pub(crate) fn select(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub(crate) fn select_block(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_collinearity() {
        let x = DMatrix::from_row_slice(4, 3, &[1., 2., 3., 1., 0., 1., 1., 5., 6., 1., 1., 2.]);
        let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        assert_eq!(collinear_set(&x, &names), Some(vec!["c".into(), "a".into(), "b".into()]));
        let x = DMatrix::from_row_slice(3, 2, &[1., 0., 0., 1., 1., 1.]);
        assert_eq!(collinear_set(&x, &names[..2]), None);
    }

    #[test]
    fn pinv_of_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1., 1., 1., 1.]);
        let (p, rank, neg) = symmetric_pinv(&m);
        assert_eq!((rank, neg), (1, false));
        assert!((&m * &p * &m - &m).norm() < 1e-12);
    }
}
