//! Distributional diagnostics: sample moments, the Anderson-Darling normality
//! test and QQ-plot coordinates.
//!
//! Skewness and excess kurtosis are the bias-uncorrected moment ratios
//! `m3 / m2^1.5` and `m4 / m2^2 - 3` with `m_k` the k-th central moment over
//! `n`. The reported `sd` uses `n - 1`.
//!
//! The Anderson-Darling test is the case with mean and variance estimated from
//! the sample. The statistic is size-corrected as
//! `A*² = A² (1 + 0.75/n + 2.25/n²)` and compared with 0.752, the 5% critical
//! value tabulated by Stephens (1974, JASA 69, Table 1A).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const AD_CRITICAL_5PCT: f64 = 0.752;
pub const AD_MIN_N: usize = 8;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF through `erfc`, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `ln Φ(x)`, finite for every finite `x`.
pub fn normal_log_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return normal_cdf(x).ln();
    }
    // Asymptotic Mills-ratio series; the first omitted term is below 2e-10 here.
    let z2 = x * x;
    let z4 = z2 * z2;
    -0.5 * z2 - (-x).ln() - LN_SQRT_2PI + (1.0 - 1.0 / z2 + 3.0 / z4 - 15.0 / (z4 * z2)).ln()
}

/// Standard normal quantile: Acklam's rational approximation (relative error
/// below 1.15e-9) polished by one Halley step against [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -normal_quantile_lower(1.0 - p);
    }
    normal_quantile_lower(p)
}

fn normal_quantile_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let err = normal_cdf(x) - p;
    let u = err * (LN_SQRT_2PI + 0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation with `n - 1` in the denominator.
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn moments(series: &[f64]) -> Result<Moments> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let scale = series.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m2 <= (1e-14 * scale).powi(2) * nf {
        return Err(Error::Degenerate);
    }
    let sd = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    Ok(Moments { n, mean, sd, skewness: m3 / m2.powf(1.5), excess_kurtosis: m4 / (m2 * m2) - 3.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndersonDarling {
    pub a2: f64,
    pub a2_star: f64,
    pub reject_5pct: bool,
}

/// Anderson-Darling test of normality with estimated mean and variance.
/// Ties are allowed; the CDF is evaluated at every order statistic.
pub fn anderson_darling(series: &[f64]) -> Result<AndersonDarling> {
    let n = series.len();
    if n < AD_MIN_N {
        return Err(Error::TooShort { needed: AD_MIN_N, got: n });
    }
    let m = moments(series)?;
    let mut z: Vec<f64> = series.iter().map(|x| (x - m.mean) / m.sd).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let s: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (normal_log_cdf(z[i]) + normal_log_cdf(-z[n - 1 - i])))
        .sum();
    let a2 = -nf - s / nf;
    let a2_star = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok(AndersonDarling { a2, a2_star, reject_5pct: a2_star > AD_CRITICAL_5PCT })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QqMode {
    /// Theoretical quantiles of the normal fitted by sample mean and sd.
    #[default]
    Standardized,
    /// Standard normal quantiles against the raw sample.
    Raw,
}

/// QQ pairs `(theoretical, sample)` at plotting positions `(i - 0.5) / n`.
pub fn qq_normal(series: &[f64], mode: QqMode) -> Result<Vec<(f64, f64)>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let (loc, scale) = match mode {
        QqMode::Standardized => {
            let m = moments(series)?;
            (m.mean, m.sd)
        }
        QqMode::Raw => (0.0, 1.0),
    };
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| (normal_quantile((i as f64 + 0.5) / n as f64) * scale + loc, x))
        .collect())
}

/// Full diagnostic report for one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ad_a2: f64,
    pub ad_a2_star: f64,
    pub reject_at_5pct: bool,
}

impl SeriesStats {
    pub fn compute(series: &[f64]) -> Result<Self> {
        let m = moments(series)?;
        let ad = anderson_darling(series)?;
        Ok(Self {
            n: m.n,
            mean: m.mean,
            sd: m.sd,
            skewness: m.skewness,
            excess_kurtosis: m.excess_kurtosis,
            ad_a2: ad.a2,
            ad_a2_star: ad.a2_star,
            reject_at_5pct: ad.reject_5pct,
        })
    }
}
