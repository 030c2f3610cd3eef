//! Random-intercept linear mixed model, fit by maximum likelihood.
//!
//! Model: `y = Xβ + Zb + ε`, `b ~ N(0, σ_b² I)`, `ε ~ N(0, σ² I)`, with `Z`
//! the group indicator matrix. Writing `λ = σ_b² / σ²` and
//! `H = I + λ ZZ'`, both `β` and `σ²` have closed forms for fixed `λ`:
//!
//! ```text
//! β(λ)  = (X'H⁻¹X)⁻¹ X'H⁻¹y
//! σ²(λ) = (y - Xβ)' H⁻¹ (y - Xβ) / n
//! ```
//!
//! leaving a one-dimensional search over `log10 λ`. `H` is block diagonal
//! with blocks `I + λ 11'`, whose inverse is `I - c 11'` with
//! `c = λ / (1 + λ n_g)` and whose log-determinant is `ln(1 + λ n_g)`, so
//! every quadratic form reduces to per-group sums computed once.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::frame::{build_design, AnalysisFrame, Design, FixedSpec, GroupBy};
use super::ols::fit_ols;
use super::{digest_rows, gaussian_loglik, ModelFit, StatsError, FLAG_CONVERGES_TO_OLS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmmOptions {
    /// Search interval for `log10 λ`.
    pub log10_lambda_min: f64,
    pub log10_lambda_max: f64,
    /// Coarse grid points used to bracket the optimum.
    pub grid_points: usize,
    /// Relative tolerance on `log10 λ` for the refinement.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for LmmOptions {
    fn default() -> Self {
        Self {
            log10_lambda_min: -8.0,
            log10_lambda_max: 8.0,
            grid_points: 65,
            rel_tol: 1e-8,
            max_iter: 200,
        }
    }
}

struct GroupStats {
    size: f64,
    /// X_g' 1
    x_sum: DVector<f64>,
    /// 1' y_g
    y_sum: f64,
}

struct Profile {
    n: usize,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    groups: Vec<GroupStats>,
}

struct ProfilePoint {
    loglik: f64,
    beta: DVector<f64>,
    sigma2: f64,
    /// (X'H⁻¹X)⁻¹
    a_inv: DMatrix<f64>,
}

impl Profile {
    fn new(design: &Design) -> Self {
        let (n, p) = design.x.shape();
        let n_groups = design.group_labels.len();
        let mut groups: Vec<GroupStats> = (0..n_groups)
            .map(|_| GroupStats {
                size: 0.0,
                x_sum: DVector::zeros(p),
                y_sum: 0.0,
            })
            .collect();
        for (i, &g) in design.groups.iter().enumerate() {
            let gs = &mut groups[g];
            gs.size += 1.0;
            gs.x_sum += design.x.row(i).transpose();
            gs.y_sum += design.y[i];
        }
        Self {
            n,
            xtx: design.x.transpose() * &design.x,
            xty: design.x.transpose() * &design.y,
            yty: design.y.norm_squared(),
            groups,
        }
    }

    fn eval(&self, lambda: f64) -> Option<ProfilePoint> {
        let mut a = self.xtx.clone();
        let mut b = self.xty.clone();
        let mut q = self.yty;
        let mut log_det = 0.0;
        for g in &self.groups {
            let c = lambda / (1.0 + lambda * g.size);
            a.ger(-c, &g.x_sum, &g.x_sum, 1.0);
            b.axpy(-c * g.y_sum, &g.x_sum, 1.0);
            q -= c * g.y_sum * g.y_sum;
            log_det += (lambda * g.size).ln_1p();
        }
        let chol = a.cholesky()?;
        let beta = chol.solve(&b);
        let rss = (q - b.dot(&beta)).max(0.0);
        let sigma2 = rss / self.n as f64;
        let loglik = gaussian_loglik(self.n, sigma2, log_det);
        loglik.is_finite().then(|| ProfilePoint {
            loglik,
            beta,
            sigma2,
            a_inv: chol.inverse(),
        })
    }

    fn neg_loglik(&self, log10_lambda: f64) -> f64 {
        self.eval(10f64.powf(log10_lambda))
            .map_or(f64::INFINITY, |p| -p.loglik)
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `f` on `[a, b]`.
fn golden_section(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, bool) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= rel_tol * mid.abs().max(1.0) {
            return (mid, true);
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    (0.5 * (a + b), false)
}

/// Fits a random-intercept model to a prepared design.
pub fn fit_random_intercept(design: &Design, opts: &LmmOptions) -> Result<ModelFit, StatsError> {
    let ols = fit_ols(&design.x, &design.y, &design.names).map_err(|e| match e {
        StatsError::RankDeficient => StatsError::SingularDesign("fixed-effect design is rank deficient".into()),
        other => other,
    })?;
    let n_groups = design.group_labels.len();
    if design.groups.len() != design.y.len() || design.groups.iter().any(|&g| g >= n_groups) {
        return Err(StatsError::DimensionMismatch("group index out of range".into()));
    }
    if n_groups < 2 {
        let mut fit = ols;
        fit.n_groups = n_groups;
        fit.flags.push(FLAG_CONVERGES_TO_OLS.to_string());
        return Ok(fit);
    }

    let profile = Profile::new(design);
    let f = |t: f64| profile.neg_loglik(t);
    let (lo, hi) = (opts.log10_lambda_min, opts.log10_lambda_max);
    let m = opts.grid_points.max(3);
    let step = (hi - lo) / (m - 1) as f64;
    let grid: Vec<f64> = (0..m).map(|i| f(lo + step * i as f64)).collect();
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let a = lo + step * best.saturating_sub(1) as f64;
    let b = lo + step * (best + 1).min(m - 1) as f64;
    let (t_hat, converged) = golden_section(f, a, b, opts.rel_tol, opts.max_iter);
    let point = profile.eval(10f64.powf(t_hat));
    let grad_norm = {
        let h = 1e-4;
        ((f(t_hat + h) - f(t_hat - h)) / (2.0 * h)).abs()
    };
    let point = match point {
        Some(p) if converged => p,
        _ => {
            return Err(StatsError::NonConvergence {
                best_log10_lambda: t_hat,
                grad_norm,
            })
        }
    };

    // A boundary optimum at λ → 0 is the least-squares fit.
    if point.loglik <= ols.loglik {
        let mut fit = ols;
        fit.n_groups = n_groups;
        return Ok(fit);
    }
    let lambda = 10f64.powf(t_hat);
    let p = design.x.ncols();
    Ok(ModelFit {
        names: design.names.clone(),
        betas: point.beta.iter().copied().collect(),
        std_errors: (0..p)
            .map(|i| (point.sigma2 * point.a_inv[(i, i)]).sqrt())
            .collect(),
        sigma2: point.sigma2,
        sigma_b2: lambda * point.sigma2,
        lambda,
        loglik: point.loglik,
        n: design.y.len(),
        p,
        n_groups,
        flags: Vec::new(),
        rows_digest: digest_rows(design.y.as_slice()),
    })
}

/// Builds the design from `frame` and fits a random intercept per `group_by` level.
pub fn fit_lmm(frame: &AnalysisFrame, fixed: &FixedSpec, group_by: GroupBy) -> Result<ModelFit, StatsError> {
    let design = build_design(frame, fixed, group_by)?;
    fit_random_intercept(&design, &LmmOptions::default())
}
