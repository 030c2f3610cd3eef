//! Distribution kernels for p-values.
//!
//! Thin wrappers over `statrs`, which evaluates these CDFs through the
//! regularized incomplete beta and gamma functions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Normal { mean: f64, sd: f64 },
    StudentT { df: f64 },
    ChiSquare { df: f64 },
}

impl Distribution {
    pub fn validate(&self) -> Result<(), StatsError> {
        let ok = match *self {
            Distribution::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            Distribution::StudentT { df } | Distribution::ChiSquare { df } => {
                df.is_finite() && df > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(StatsError::InvalidParams(format!("{self:?}")))
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64, StatsError> {
        self.validate()?;
        Ok(match *self {
            Distribution::Normal { mean, sd } => normal(mean, sd).cdf(x),
            Distribution::StudentT { df } => student(df).cdf(x),
            Distribution::ChiSquare { df } => {
                if x <= 0.0 {
                    0.0
                } else {
                    chi2(df).cdf(x)
                }
            }
        })
    }

    /// Upper tail `P(X > x)`, computed directly rather than as `1 - cdf`.
    pub fn sf(&self, x: f64) -> Result<f64, StatsError> {
        self.validate()?;
        Ok(match *self {
            Distribution::Normal { mean, sd } => normal(mean, sd).sf(x),
            Distribution::StudentT { df } => student(df).sf(x),
            Distribution::ChiSquare { df } => {
                if x <= 0.0 {
                    1.0
                } else {
                    chi2(df).sf(x)
                }
            }
        })
    }
}

// Parameters are validated before these are reached.
fn normal(mean: f64, sd: f64) -> Normal {
    Normal::new(mean, sd).expect("validated normal parameters")
}

fn student(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("validated t parameters")
}

fn chi2(df: f64) -> ChiSquared {
    ChiSquared::new(df).expect("validated chi-square parameters")
}

/// CDF of `dist` at `x`.
pub fn dist_cdf(dist: Distribution, x: f64) -> Result<f64, StatsError> {
    dist.cdf(x)
}

/// Two-sided Student-t p-value for statistic `t`.
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64, StatsError> {
    if t.is_infinite() {
        return Ok(0.0);
    }
    let p = 2.0 * Distribution::StudentT { df }.sf(t.abs())?;
    Ok(p.clamp(0.0, 1.0))
}

/// Chi-square upper tail.
pub fn chi_square_sf(x: f64, df: f64) -> Result<f64, StatsError> {
    Distribution::ChiSquare { df }.sf(x).map(|p| p.clamp(0.0, 1.0))
}
