//! Oracles shared by the integration tests.
#![allow(dead_code)]

use num::{BigInt, BigRational, ToPrimitive, Zero};

/// Quadrature and closed-form distribution oracles.
pub mod oracle {
    use std::f64::consts::PI;

    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }

    fn adaptive(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol * (left + right).abs() {
            return left + right + delta / 15.0;
        }
        adaptive(f, a, m, fa, flm, fm, left, tol, depth - 1) + adaptive(f, m, b, fm, frm, fb, right, tol, depth - 1)
    }

    /// Adaptive Simpson quadrature of `f` over `[a, b]`, split into 64
    /// panels first so narrow features are not missed. Integrands here are
    /// positive, so the error target is relative.
    pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let f: &dyn Fn(f64) -> f64 = &f;
        let panels = 64;
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let (x0, x1) = (a + h * i as f64, a + h * (i + 1) as f64);
                let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
                let whole = simpson(x0, x1, f0, fm, f1);
                adaptive(f, x0, x1, f0, fm, f1, whole, 1e-14, 25)
            })
            .sum()
    }

    /// `Γ(k / 2)` for a positive integer `k`, by exact recurrence.
    pub fn gamma_half(k: u32) -> f64 {
        let (mut g, mut x) = if k % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
        while x < k as f64 / 2.0 {
            g *= x;
            x += 1.0;
        }
        g
    }

    pub fn normal_cdf(mean: f64, sd: f64, x: f64) -> f64 {
        let z = (x - mean) / sd;
        let half = integrate(|u| (-0.5 * u * u).exp(), 0.0, z.abs()) / (2.0 * PI).sqrt();
        if z >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    /// Student-t upper tail `P(T > t)` for `t >= 0` via `t = √ν tan θ`,
    /// which turns the density into `cos^(ν-1) θ` on `(-π/2, π/2)`.
    pub fn t_upper(t: f64, df: f64) -> f64 {
        let theta = (t / df.sqrt()).atan();
        let g = |th: f64| th.cos().powf(df - 1.0);
        let tail = integrate(g, theta, PI / 2.0);
        let half = integrate(g, 0.0, PI / 2.0);
        0.5 * tail / half
    }

    pub fn t_cdf(t: f64, df: f64) -> f64 {
        if t >= 0.0 {
            1.0 - t_upper(t, df)
        } else {
            t_upper(-t, df)
        }
    }

    pub fn t_two_sided(t: f64, df: f64) -> f64 {
        2.0 * t_upper(t.abs(), df)
    }

    /// Chi-square CDF for integer `k` through `t = u²`, which removes the
    /// endpoint singularity at small `k`.
    pub fn chi2_cdf(x: f64, k: u32) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let kf = k as f64;
        let norm = 2f64.powf(kf / 2.0) * gamma_half(k);
        integrate(|u| 2.0 * u.powf(kf - 1.0) * (-0.5 * u * u).exp(), 0.0, x.sqrt()) / norm
    }

    /// Upper tail, integrated directly over `[√x, √x + 40]`.
    pub fn chi2_sf(x: f64, k: u32) -> f64 {
        let kf = k as f64;
        let norm = 2f64.powf(kf / 2.0) * gamma_half(k);
        let a = x.max(0.0).sqrt();
        integrate(|u| 2.0 * u.powf(kf - 1.0) * (-0.5 * u * u).exp(), a, a + 40.0) / norm
    }
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

pub fn exact_mean(xs: &[f64]) -> BigRational {
    let sum = xs.iter().map(|&v| rational(v)).fold(BigRational::zero(), |a, b| a + b);
    sum / BigRational::from_integer(BigInt::from(xs.len()))
}

/// Sum of squared deviations, exactly.
pub fn exact_ss(xs: &[f64]) -> BigRational {
    let m = exact_mean(xs);
    xs.iter()
        .map(|&v| {
            let d = rational(v) - &m;
            &d * &d
        })
        .fold(BigRational::zero(), |a, b| a + b)
}
