use nalgebra::{DMatrix, DVector};

use super::MetricsError;

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;
/// Eigenvalues this far below zero are treated as round-off and clamped.
const NEGATIVE_TOLERANCE: f64 = 1e-8;

/// Sample mean and unbiased (n - 1) covariance.
pub fn gaussian_fit(features: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>), MetricsError> {
    let n = features.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n, n));
    }
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(MetricsError::DimensionMismatch(dim, bad.len()));
    }
    let data = DMatrix::from_fn(n, dim, |i, j| features[i][j]);
    let mean = data.row_mean().transpose();
    let centered = DMatrix::from_fn(n, dim, |i, j| data[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    Ok((mean, cov))
}

fn symmetric_eigenvalues(m: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), MetricsError> {
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| MetricsError::Eigen("symmetric eigendecomposition did not converge".into()))?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

fn clamp_eigenvalue(lambda: f64, scale: f64) -> Result<f64, MetricsError> {
    if lambda >= 0.0 {
        Ok(lambda)
    } else if lambda > -NEGATIVE_TOLERANCE * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(MetricsError::Eigen(format!(
            "matrix is not positive semidefinite (eigenvalue {lambda})"
        )))
    }
}

/// `Tr((cov_a cov_b)^(1/2))`, via the symmetric product `S cov_b S` with `S = cov_a^(1/2)`,
/// which has the same eigenvalues as `cov_a cov_b`.
fn trace_sqrt_product(cov_a: &DMatrix<f64>, cov_b: &DMatrix<f64>) -> Result<f64, MetricsError> {
    let (values, vectors) = symmetric_eigenvalues(cov_a.clone())?;
    let scale = values.amax();
    let roots = values
        .iter()
        .map(|&l| clamp_eigenvalue(l, scale).map(f64::sqrt))
        .collect::<Result<Vec<_>, _>>()?;
    let sqrt_a = &vectors * DMatrix::from_diagonal(&DVector::from_vec(roots)) * vectors.transpose();
    let product = &sqrt_a * cov_b * &sqrt_a;
    let (values, _) = symmetric_eigenvalues(product)?;
    let scale = values.amax();
    values.iter().map(|&l| clamp_eigenvalue(l, scale).map(f64::sqrt)).sum()
}

/// Fréchet distance between Gaussian fits of two feature sets:
/// `|mu_a - mu_b|^2 + Tr(cov_a + cov_b - 2 (cov_a cov_b)^(1/2))`.
pub fn frechet_distance(feats_a: &[Vec<f64>], feats_b: &[Vec<f64>]) -> Result<f64, MetricsError> {
    if feats_a.len() < 2 || feats_b.len() < 2 {
        return Err(MetricsError::TooFewSamples(feats_a.len(), feats_b.len()));
    }
    let (mu_a, cov_a) = gaussian_fit(feats_a)?;
    let (mu_b, cov_b) = gaussian_fit(feats_b)?;
    if mu_a.len() != mu_b.len() {
        return Err(MetricsError::DimensionMismatch(mu_a.len(), mu_b.len()));
    }
    let mean_term = (&mu_a - &mu_b).norm_squared();
    let cross = trace_sqrt_product(&cov_a, &cov_b)?;
    let distance = mean_term + cov_a.trace() + cov_b.trace() - 2.0 * cross;
    Ok(distance.max(0.0))
}
