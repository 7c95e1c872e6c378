//! Principal component analysis of 6-component wrench rows.

use super::EstimationError;

pub const DIM: usize = 6;
pub type Row = [f64; DIM];

const JACOBI_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Row,
    /// Orthonormal rows, largest variance first. The largest-magnitude
    /// entry of each row is positive.
    pub components: [Row; 2],
    pub explained_variance: [f64; 2],
    /// Variance-weighted squared loadings over both components, summing
    /// to one.
    pub loadings_importance: Row,
}

impl PcaModel {
    /// Wrench component indices ordered by decreasing importance.
    pub fn importance_ranking(&self) -> [usize; DIM] {
        let mut idx: [usize; DIM] = std::array::from_fn(|i| i);
        idx.sort_by(|&a, &b| {
            self.loadings_importance[b]
                .total_cmp(&self.loadings_importance[a])
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn back_project(&self, p: [f64; 2]) -> Row {
        std::array::from_fn(|c| self.mean[c] + p[0] * self.components[0][c] + p[1] * self.components[1][c])
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with matching unit eigenvectors
/// as rows.
pub fn symmetric_eigen(mut a: [[f64; DIM]; DIM]) -> ([f64; DIM], [Row; DIM]) {
    let mut v = [[0.0; DIM]; DIM];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..DIM)
            .flat_map(|p| (p + 1..DIM).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        let diag: f64 = (0..DIM).map(|i| a[i][i] * a[i][i]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for p in 0..DIM {
            for q in p + 1..DIM {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..DIM {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..DIM {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: [usize; DIM] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let values = order.map(|i| a[i][i]);
    let vectors = order.map(|i| std::array::from_fn(|k| v[k][i]));
    (values, vectors)
}

fn orient(mut row: Row) -> Row {
    let dominant = (0..DIM).fold(0, |best, i| if row[i].abs() > row[best].abs() { i } else { best });
    if row[dominant] < 0.0 {
        for x in row.iter_mut() {
            *x = -*x;
        }
    }
    row
}

/// Fits a two-component model using the population covariance of `rows`.
pub fn pca_fit(rows: &[Row]) -> Result<PcaModel, EstimationError> {
    if rows.len() < 2 {
        return Err(EstimationError::TooFewRows(rows.len()));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(EstimationError::Invalid("PCA rows must be finite".into()));
    }
    let n = rows.len() as f64;
    let mean: Row = std::array::from_fn(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n);
    let mut cov = [[0.0; DIM]; DIM];
    for r in rows {
        for i in 0..DIM {
            for j in 0..DIM {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        for x in row.iter_mut() {
            *x /= n;
        }
    }

    let (values, vectors) = symmetric_eigen(cov);
    let scale = rows.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if values[0] <= (1e-12 * scale).powi(2) {
        return Err(EstimationError::Degenerate);
    }
    let explained_variance = [values[0], values[1].max(0.0)];
    let components = [orient(vectors[0]), orient(vectors[1])];
    let mut importance: Row =
        std::array::from_fn(|c| (0..2).map(|k| explained_variance[k] * components[k][c].powi(2)).sum());
    let total: f64 = importance.iter().sum();
    for x in importance.iter_mut() {
        *x /= total;
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        loadings_importance: importance,
    })
}

pub fn pca_project(model: &PcaModel, v: &Row) -> [f64; 2] {
    std::array::from_fn(|k| (0..DIM).map(|c| (v[c] - model.mean[c]) * model.components[k][c]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix6, SymmetricEigen};

    fn sample_rows() -> Vec<Row> {
        (0..9)
            .map(|i| {
                let t = i as f64;
                [t.sin() * 3.0, 0.2 * t, (0.7 * t).cos(), 0.05 * t * t, -t, 1.0 + 0.1 * (2.0 * t).sin()]
            })
            .collect()
    }

    #[test]
    fn eigen_matches_reference_decomposition() {
        let rows = sample_rows();
        let model = pca_fit(&rows).unwrap();
        let n = rows.len() as f64;
        let mut m = Matrix6::zeros();
        for r in &rows {
            for i in 0..DIM {
                for j in 0..DIM {
                    m[(i, j)] += (r[i] - model.mean[i]) * (r[j] - model.mean[j]) / n;
                }
            }
        }
        let eig: SymmetricEigen<f64, nalgebra::U6> = SymmetricEigen::new(m);
        let mut idx: Vec<usize> = (0..DIM).collect();
        idx.sort_by(|&a, &b| f64::total_cmp(&eig.eigenvalues[b], &eig.eigenvalues[a]));
        for k in 0..2 {
            assert_abs_diff_eq!(model.explained_variance[k], eig.eigenvalues[idx[k]], epsilon = 1e-10);
            let reference: Vec<f64> = eig.eigenvectors.column(idx[k]).iter().copied().collect();
            let dot: f64 = (0..DIM).map(|c| reference[c] * model.components[k][c]).sum();
            assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn components_are_orthonormal_and_oriented() {
        let model = pca_fit(&sample_rows()).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let dot: f64 = (0..DIM).map(|c| model.components[a][c] * model.components[b][c]).sum();
                assert_abs_diff_eq!(dot, if a == b { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
            let row = model.components[a];
            let dominant = row.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(dominant > 0.0);
        }
        assert!(model.explained_variance[0] >= model.explained_variance[1]);
        assert_abs_diff_eq!(model.loadings_importance.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_axis_variance() {
        let rows: Vec<Row> = (0..5).map(|i| [1.0, 2.0, i as f64, 0.0, 0.0, 0.0]).collect();
        let model = pca_fit(&rows).unwrap();
        assert_abs_diff_eq!(model.components[0][2], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(model.loadings_importance[2], 1.0, epsilon = 1e-12);
        assert_eq!(model.importance_ranking()[0], 2);
    }

    #[test]
    fn duplicated_rows_give_the_same_model() {
        let rows = sample_rows();
        let doubled: Vec<Row> = rows.iter().chain(rows.iter()).copied().collect();
        let (a, b) = (pca_fit(&rows).unwrap(), pca_fit(&doubled).unwrap());
        for k in 0..2 {
            assert_abs_diff_eq!(a.explained_variance[k], b.explained_variance[k], epsilon = 1e-12);
            for c in 0..DIM {
                assert_abs_diff_eq!(a.components[k][c], b.components[k][c], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let model = pca_fit(&sample_rows()).unwrap();
        let p = pca_project(&model, &model.mean);
        assert_eq!(p, [0.0, 0.0]);
        let v: Row = std::array::from_fn(|c| model.mean[c] + model.components[0][c]);
        let p = pca_project(&model, &v);
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let row = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(pca_fit(&[row; 9]), Err(EstimationError::Degenerate));
        assert_eq!(pca_fit(&[row]), Err(EstimationError::TooFewRows(1)));
    }
}
