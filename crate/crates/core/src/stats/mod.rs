//! Analysis statistics: correlation, t-tests, least squares, random-intercept
//! mixed models fit by maximum likelihood, and likelihood-ratio tests.

mod dist;
mod frame;
mod inference;
mod lmm;
mod ols;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dist::{chi_square_sf, dist_cdf, t_two_sided_p, Distribution};
pub use frame::{build_design, AnalysisFrame, Design, FixedSpec, FrameRow, GroupBy, Predictor, SizeClass};
pub use inference::{lr_test, pearson, ttest_two_sample, PearsonResult, TestKind, TestResult, TtestVariant};
pub use lmm::{fit_lmm, fit_random_intercept, LmmOptions};
pub use ols::fit_ols;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("input vector is constant")]
    ConstantVector,
    #[error("invalid distribution parameters: {0}")]
    InvalidParams(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular mixed-model design: {0}")]
    SingularDesign(String),
    #[error("likelihood optimization did not converge (best log10 lambda {best_log10_lambda}, gradient norm {grad_norm:e})")]
    NonConvergence {
        best_log10_lambda: f64,
        grad_norm: f64,
    },
    #[error("reduced model is not nested in the full model")]
    NotNested,
    #[error("models were fit on different rows")]
    RowMismatch,
    #[error("analysis frame: {0}")]
    Frame(String),
}

/// Flag set when a mixed model degenerates to least squares because the
/// grouping has a single level.
pub const FLAG_CONVERGES_TO_OLS: &str = "converges-to-ols";

/// A fitted linear (mixed) model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub names: Vec<String>,
    pub betas: Vec<f64>,
    /// Wald standard errors from the ML covariance of the coefficients.
    pub std_errors: Vec<f64>,
    /// Residual variance (ML).
    pub sigma2: f64,
    /// Random-intercept variance; 0 for least squares.
    pub sigma_b2: f64,
    /// `sigma_b2 / sigma2`.
    pub lambda: f64,
    pub loglik: f64,
    pub n: usize,
    pub p: usize,
    pub n_groups: usize,
    #[serde(default)]
    pub flags: Vec<String>,
    /// Fingerprint of the response vector, used to check that two fits
    /// saw identical rows.
    pub rows_digest: u64,
}

impl ModelFit {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.betas[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.std_errors[i])
    }
}

/// FNV-1a over the bit patterns of `y`.
pub(crate) fn digest_rows(y: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in y {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

pub(crate) fn gaussian_loglik(n: usize, sigma2: f64, log_det_h: f64) -> f64 {
    let n = n as f64;
    let s2 = sigma2.max(f64::MIN_POSITIVE);
    -0.5 * (n * (2.0 * std::f64::consts::PI * s2).ln() + log_det_h + n)
}
