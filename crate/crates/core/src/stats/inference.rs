//! Correlation, two-sample t-tests and likelihood-ratio tests.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dist::{chi_square_sf, t_two_sided_p};
use super::{ModelFit, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Pearson,
    Ttest,
    Lr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub kind: TestKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub r: f64,
    pub n: usize,
    /// `r · sqrt((n - 2) / (1 - r²))`, infinite when `|r| = 1`.
    pub t: f64,
    pub p_value: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Pearson product-moment correlation with a two-sided t-test on `n - 2` df.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<PearsonResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints { need: 3, got: n });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantVector);
    }
    let mut r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    // Exactly collinear data can land a few ulps short of ±1.
    if 1.0 - r.abs() <= 4.0 * f64::EPSILON {
        r = r.signum();
    }
    let df = (n - 2) as f64;
    let (t, p_value) = if r.abs() >= 1.0 {
        (f64::INFINITY.copysign(r), 0.0)
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        (t, t_two_sided_p(t, df)?)
    };
    Ok(PearsonResult { r, n, t, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TtestVariant {
    /// Student's test with pooled variance.
    #[default]
    Pooled,
    /// Welch's unequal-variance test with Satterthwaite df.
    Welch,
}

impl FromStr for TtestVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pooled" | "student" => Ok(TtestVariant::Pooled),
            "welch" => Ok(TtestVariant::Welch),
            other => Err(format!("unknown t-test variant `{other}` (expected pooled|welch)")),
        }
    }
}

impl fmt::Display for TtestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TtestVariant::Pooled => "pooled",
            TtestVariant::Welch => "welch",
        })
    }
}

fn sample_var(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Two-sided two-sample t-test; the statistic has the sign of `mean(a) - mean(b)`.
pub fn ttest_two_sample(
    a: &[f64],
    b: &[f64],
    variant: TtestVariant,
) -> Result<TestResult, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFewPoints { need: 2, got: s.len() });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_var(a, ma), sample_var(b, mb));
    let diff = ma - mb;
    let (se, df) = match variant {
        TtestVariant::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TtestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            ((qa + qb).sqrt(), df)
        }
    };
    let (statistic, p_value) = if se == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(diff), 0.0)
        }
    } else {
        let t = diff / se;
        (t, t_two_sided_p(t, df)?)
    };
    Ok(TestResult {
        statistic,
        df: if df.is_finite() { df } else { na + nb - 2.0 },
        p_value,
        kind: TestKind::Ttest,
    })
}

/// Likelihood-ratio test of a nested `reduced` fit against `full`.
pub fn lr_test(full: &ModelFit, reduced: &ModelFit) -> Result<TestResult, StatsError> {
    if full.n != reduced.n || full.rows_digest != reduced.rows_digest {
        return Err(StatsError::RowMismatch);
    }
    if reduced.p > full.p || !reduced.names.iter().all(|n| full.names.contains(n)) {
        return Err(StatsError::NotNested);
    }
    let lr = (2.0 * (full.loglik - reduced.loglik)).max(0.0);
    let df = (full.p - reduced.p) as f64;
    let p_value = if df == 0.0 || lr == 0.0 {
        1.0
    } else {
        chi_square_sf(lr, df)?
    };
    Ok(TestResult {
        statistic: lr,
        df,
        p_value,
        kind: TestKind::Lr,
    })
}
