use nalgebra::{DMatrix, DVector};

use super::{digest_rows, gaussian_loglik, ModelFit, StatsError};

/// Relative threshold on the diagonal of R below which a column is
/// considered linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// Ordinary least squares via Householder QR, with ML variance `RSS / n`.
pub fn fit_ols(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<ModelFit, StatsError> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(StatsError::DimensionMismatch(format!(
            "design has {n} rows but response has {}",
            y.len()
        )));
    }
    if names.len() != p {
        return Err(StatsError::DimensionMismatch(format!(
            "{p} columns but {} names",
            names.len()
        )));
    }
    if n <= p || p == 0 {
        return Err(StatsError::DimensionMismatch(format!(
            "need more rows than columns (n = {n}, p = {p})"
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| r[(i, i)].abs() <= RANK_TOL * scale.max(1.0)) {
        return Err(StatsError::RankDeficient);
    }
    let qty = qr.q().transpose() * y;
    let betas = r
        .solve_upper_triangular(&qty)
        .ok_or(StatsError::RankDeficient)?;
    let resid = y - x * &betas;
    let rss = resid.norm_squared();
    let sigma2 = rss / n as f64;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(StatsError::RankDeficient)?;
    let cov = &r_inv * r_inv.transpose();
    let std_errors = (0..p).map(|i| (sigma2 * cov[(i, i)]).sqrt()).collect();

    Ok(ModelFit {
        names: names.to_vec(),
        betas: betas.iter().copied().collect(),
        std_errors,
        sigma2,
        sigma_b2: 0.0,
        lambda: 0.0,
        loglik: gaussian_loglik(n, sigma2, 0.0),
        n,
        p,
        n_groups: 1,
        flags: Vec::new(),
        rows_digest: digest_rows(y.as_slice()),
    })
}
