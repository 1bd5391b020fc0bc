//! Time-varying income elasticity of imports and the implied
//! balance-of-payments-constrained growth rate.
//!
//! Pipeline: HP-filter log imports and log output (λ = 1600), estimate
//!
//! ```text
//! m^T_t = eta * rer_t + pi_t * y^T_t + v_t,   v_t ~ N(0, r)
//! pi_t  = pi_{t-1} + w_t,                     w_t ~ N(0, q)
//! ```
//!
//! with `eta` carried as a constant second state, and report smoothed `pi_t`.
//! The real exchange rate enters unfiltered and there is no intercept. The
//! initial state is diffuse (`P0 = 1e6 I`) and the first two observations are
//! left out of the likelihood. When `(r, q)` are not supplied they are chosen
//! by maximum likelihood: a log-spaced grid followed by BFGS in `(ln r, ln q)`
//! with a finite-difference gradient and Armijo backtracking.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HP_LAMBDA: f64 = 1600.0;
pub const DIFFUSE_VARIANCE: f64 = 1e6;
/// Observations excluded from the likelihood while the diffuse prior washes out.
pub const LIKELIHOOD_SKIP: usize = 2;
pub const MIN_OBSERVATIONS: usize = 6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroRow {
    pub year: i32,
    pub y: f64,
    pub m: f64,
    pub z: f64,
    pub rer: f64,
}

/// Annual observations, all in natural logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroDataset {
    pub rows: Vec<MacroRow>,
}

impl MacroDataset {
    pub fn new(rows: Vec<MacroRow>) -> Result<Self> {
        let d = Self { rows };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if ![r.y, r.m, r.z, r.rer].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidDataset(format!("non-finite value in year {}", r.year)));
            }
            if i > 0 && r.year != self.rows[i - 1].year + 1 {
                return Err(Error::InvalidDataset(format!(
                    "years must increase by one without gaps ({} follows {})",
                    r.year,
                    self.rows[i - 1].year
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        self.rows.iter().map(|r| r.year).collect()
    }

    pub fn column(&self, f: impl Fn(&MacroRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpDecomposition {
    pub trend: Vec<f64>,
    pub cycle: Vec<f64>,
}

/// Bands `(diag, first off-diagonal, second off-diagonal)` of `I + lambda D'D`,
/// `D` the second-difference operator.
fn hp_bands(n: usize, lambda: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut d0 = vec![1.0; n];
    let mut d1 = vec![0.0; n.saturating_sub(1)];
    let mut d2 = vec![0.0; n.saturating_sub(2)];
    const ROW: [f64; 3] = [1.0, -2.0, 1.0];
    for k in 0..n.saturating_sub(2) {
        for a in 0..3 {
            d0[k + a] += lambda * ROW[a] * ROW[a];
            if a < 2 {
                d1[k + a] += lambda * ROW[a] * ROW[a + 1];
            }
        }
        d2[k] += lambda * ROW[0] * ROW[2];
    }
    (d0, d1, d2)
}

/// `(I + lambda D'D) x`, the left side of the HP normal equations.
pub fn hp_apply(x: &[f64], lambda: f64) -> Vec<f64> {
    let n = x.len();
    let (d0, d1, d2) = hp_bands(n, lambda);
    (0..n)
        .map(|i| {
            let mut v = d0[i] * x[i];
            if i >= 1 {
                v += d1[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += d1[i] * x[i + 1];
            }
            if i >= 2 {
                v += d2[i - 2] * x[i - 2];
            }
            if i + 2 < n {
                v += d2[i] * x[i + 2];
            }
            v
        })
        .collect()
}

/// Hodrick-Prescott decomposition by an `L D L'` factorisation of the
/// pentadiagonal normal equations.
pub fn hp_filter(series: &[f64], lambda: f64) -> Result<HpDecomposition> {
    let n = series.len();
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParam { name: "lambda", reason: format!("must be finite and >= 0, got {lambda}") });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if lambda == 0.0 {
        return Ok(HpDecomposition { trend: series.to_vec(), cycle: vec![0.0; n] });
    }
    if n < 4 {
        return Err(Error::TooShort { needed: 4, got: n });
    }
    let (a0, a1, a2) = hp_bands(n, lambda);
    let mut d = vec![0.0; n];
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for i in 0..n {
        let mut di = a0[i];
        if i >= 1 {
            di -= l1[i - 1] * l1[i - 1] * d[i - 1];
        }
        if i >= 2 {
            di -= l2[i - 2] * l2[i - 2] * d[i - 2];
        }
        d[i] = di;
        if i + 1 < n {
            let mut v = a1[i];
            if i >= 1 {
                v -= l2[i - 1] * l1[i - 1] * d[i - 1];
            }
            l1[i] = v / di;
        }
        if i + 2 < n {
            l2[i] = a2[i] / di;
        }
    }
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut v = series[i];
        if i >= 1 {
            v -= l1[i - 1] * x[i - 1];
        }
        if i >= 2 {
            v -= l2[i - 2] * x[i - 2];
        }
        x[i] = v;
    }
    for i in 0..n {
        x[i] /= d[i];
    }
    for i in (0..n).rev() {
        if i + 1 < n {
            x[i] -= l1[i] * x[i + 1];
        }
        if i + 2 < n {
            x[i] -= l2[i] * x[i + 2];
        }
    }
    let cycle = series.iter().zip(&x).map(|(s, t)| s - t).collect();
    Ok(HpDecomposition { trend: x, cycle })
}

/// Measurement and state noise variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    /// Measurement noise variance.
    pub r: f64,
    /// Variance of the elasticity's random-walk increments.
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub grid_best: Hyperparameters,
    pub grid_best_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after the grid and after each accepted quasi-Newton step.
    pub loglik_history: Vec<f64>,
    pub hit_bounds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvpEstimate {
    pub years: Vec<i32>,
    pub eta: f64,
    pub eta_se: f64,
    /// Smoothed elasticity.
    pub pi_t: Vec<f64>,
    pub pi_se: Vec<f64>,
    /// Filtered elasticity, for diagnostics.
    pub pi_filtered: Vec<f64>,
    pub hyper: Hyperparameters,
    pub log_likelihood: f64,
    pub search: Option<SearchReport>,
    /// Years at which the smoothed elasticity is not positive.
    pub nonpositive_pi_years: Vec<i32>,
    pub trade_multiplier: TradeMultiplier,
}

struct Prepared {
    m_trend: Vec<f64>,
    y_trend: Vec<f64>,
    rer: Vec<f64>,
}

struct FilterRun {
    a_filt: Vec<Vector2<f64>>,
    p_filt: Vec<Matrix2<f64>>,
    loglik: f64,
}

impl Prepared {
    fn regressor(&self, t: usize) -> Vector2<f64> {
        Vector2::new(self.y_trend[t], self.rer[t])
    }

    fn filter(&self, h: Hyperparameters, keep: bool) -> Result<FilterRun> {
        let n = self.m_trend.len();
        let qm = Matrix2::new(h.q, 0.0, 0.0, 0.0);
        let mut a = Vector2::zeros();
        let mut p = Matrix2::identity() * DIFFUSE_VARIANCE;
        let mut run = FilterRun { a_filt: Vec::new(), p_filt: Vec::new(), loglik: 0.0 };
        for t in 0..n {
            if t > 0 {
                p += qm;
            }
            let z = self.regressor(t);
            let pz = p * z;
            let f = z.dot(&pz) + h.r;
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::NonFinite);
            }
            let v = self.m_trend[t] - z.dot(&a);
            let k = pz / f;
            a += k * v;
            p -= k * pz.transpose();
            p = (p + p.transpose()) * 0.5;
            if t >= LIKELIHOOD_SKIP {
                run.loglik -= 0.5 * (LN_2PI + f.ln() + v * v / f);
            }
            if keep {
                run.a_filt.push(a);
                run.p_filt.push(p);
            }
        }
        if !run.loglik.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(run)
    }
}

fn check_conditioning(y_trend: &[f64], rer: &[f64]) -> Result<()> {
    let n = y_trend.len() as f64;
    let mean = y_trend.iter().sum::<f64>() / n;
    let var = y_trend.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 1e-12 * mean.abs().max(1.0).powi(2) {
        return Err(Error::IllConditioned(format!("trend output has near-zero variance ({var:.3e})")));
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (ny, nr) = (norm(y_trend), norm(rer));
    if nr == 0.0 {
        return Err(Error::IllConditioned("real exchange rate is identically zero".into()));
    }
    let c = y_trend.iter().zip(rer).map(|(a, b)| a * b).sum::<f64>() / (ny * nr);
    let g = Matrix2::new(1.0, c, c, 1.0);
    let eig = g.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= hi * 1e-12 {
        return Err(Error::IllConditioned(format!("regressors are collinear (condition number {:.3e})", hi / lo)));
    }
    Ok(())
}

/// Estimates the time-varying income elasticity and the implied trade
/// multiplier. `hyper = None` selects the variances by maximum likelihood.
pub fn kalman_tvp(data: &MacroDataset, hyper: Option<Hyperparameters>) -> Result<TvpEstimate> {
    data.validate()?;
    let n = data.len();
    if n < MIN_OBSERVATIONS {
        return Err(Error::TooShort { needed: MIN_OBSERVATIONS, got: n });
    }
    let prep = Prepared {
        m_trend: hp_filter(&data.column(|r| r.m), HP_LAMBDA)?.trend,
        y_trend: hp_filter(&data.column(|r| r.y), HP_LAMBDA)?.trend,
        rer: data.column(|r| r.rer),
    };
    check_conditioning(&prep.y_trend, &prep.rer)?;

    let (hyper, search) = match hyper {
        Some(h) => {
            if !(h.r > 0.0 && h.r.is_finite()) || !(h.q >= 0.0 && h.q.is_finite()) {
                return Err(Error::InvalidParam { name: "hyper", reason: format!("need r > 0 and q >= 0, got {h:?}") });
            }
            (h, None)
        }
        None => {
            let (h, report) = maximize_likelihood(&prep)?;
            (h, Some(report))
        }
    };

    let run = prep.filter(hyper, true)?;
    let qm = Matrix2::new(hyper.q, 0.0, 0.0, 0.0);
    let mut a_s = run.a_filt.clone();
    let mut p_s = run.p_filt.clone();
    for t in (0..n - 1).rev() {
        let p_pred = run.p_filt[t] + qm;
        let inv = p_pred.try_inverse().ok_or(Error::Degenerate)?;
        let j = run.p_filt[t] * inv;
        a_s[t] = run.a_filt[t] + j * (a_s[t + 1] - run.a_filt[t]);
        p_s[t] = run.p_filt[t] + j * (p_s[t + 1] - p_pred) * j.transpose();
    }

    let years = data.years();
    let pi_t: Vec<f64> = a_s.iter().map(|a| a[0]).collect();
    let pi_se = p_s.iter().map(|p| p[(0, 0)].max(0.0).sqrt()).collect();
    let nonpositive_pi_years = years.iter().zip(&pi_t).filter(|(_, &p)| p <= 0.0).map(|(&y, _)| y).collect();
    let trade_multiplier = trade_multiplier(&data.column(|r| r.z), &pi_t)?;
    Ok(TvpEstimate {
        years,
        eta: a_s[n - 1][1],
        eta_se: p_s[n - 1][(1, 1)].max(0.0).sqrt(),
        pi_filtered: run.a_filt.iter().map(|a| a[0]).collect(),
        pi_t,
        pi_se,
        hyper,
        log_likelihood: run.loglik,
        search,
        nonpositive_pi_years,
        trade_multiplier,
    })
}

/// Log-likelihood of the model for given variances, first two observations
/// excluded.
pub fn tvp_loglik(data: &MacroDataset, hyper: Hyperparameters) -> Result<f64> {
    data.validate()?;
    let prep = Prepared {
        m_trend: hp_filter(&data.column(|r| r.m), HP_LAMBDA)?.trend,
        y_trend: hp_filter(&data.column(|r| r.y), HP_LAMBDA)?.trend,
        rer: data.column(|r| r.rer),
    };
    Ok(prep.filter(hyper, false)?.loglik)
}

fn maximize_likelihood(prep: &Prepared) -> Result<(Hyperparameters, SearchReport)> {
    let n = prep.m_trend.len() as f64;
    let dm: Vec<f64> = prep.m_trend.windows(2).map(|w| w[1] - w[0]).collect();
    let base_r = (dm.iter().map(|d| d * d).sum::<f64>() / dm.len() as f64).max(1e-12);
    let y2 = prep.y_trend.iter().map(|v| v * v).sum::<f64>() / n;
    let base_q = base_r / y2.max(1e-12);
    let lo = Vector2::new(base_r.ln() - 30.0, base_q.ln() - 30.0);
    let hi = Vector2::new(base_r.ln() + 10.0, base_q.ln() + 10.0);

    let objective = |th: &Vector2<f64>| -> f64 {
        let h = Hyperparameters { r: th[0].exp(), q: th[1].exp() };
        prep.filter(h, false).map(|run| -run.loglik).unwrap_or(f64::INFINITY)
    };

    let mut best = (f64::INFINITY, Vector2::new(base_r.ln(), base_q.ln()));
    for i in 0..=10 {
        for j in 0..=10 {
            let th = Vector2::new(base_r.ln() - 16.0 + 2.0 * i as f64, base_q.ln() - 16.0 + 2.0 * j as f64);
            let f = objective(&th);
            if f < best.0 {
                best = (f, th);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::NonFinite);
    }
    let grid_best = Hyperparameters { r: best.1[0].exp(), q: best.1[1].exp() };
    let grid_best_loglik = -best.0;

    let clamp = |v: Vector2<f64>| Vector2::new(v[0].clamp(lo[0], hi[0]), v[1].clamp(lo[1], hi[1]));
    let gradient = |th: &Vector2<f64>| -> Vector2<f64> {
        let h = 1e-4;
        let mut g = Vector2::zeros();
        for k in 0..2 {
            let mut up = *th;
            let mut dn = *th;
            up[k] += h;
            dn[k] -= h;
            g[k] = (objective(&up) - objective(&dn)) / (2.0 * h);
        }
        g
    };
    // Gradient components pushing against an active bound are dropped.
    let projected = |th: &Vector2<f64>, g: &Vector2<f64>| -> Vector2<f64> {
        let mut pg = *g;
        for k in 0..2 {
            if (th[k] <= lo[k] && g[k] > 0.0) || (th[k] >= hi[k] && g[k] < 0.0) {
                pg[k] = 0.0;
            }
        }
        pg
    };

    let (mut f, mut th) = best;
    let mut g = gradient(&th);
    let mut hinv = Matrix2::identity();
    let mut history = vec![-f];
    let mut converged = false;
    let mut iterations = 0;
    const MAX_ITER: usize = 200;
    while iterations < MAX_ITER {
        let pg = projected(&th, &g);
        if pg.norm() < 1e-5 {
            converged = true;
            break;
        }
        let mut dir = -(hinv * pg);
        if dir.dot(&pg) >= 0.0 {
            hinv = Matrix2::identity();
            dir = -pg;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let cand = clamp(th + dir * step);
            let fc = objective(&cand);
            if fc.is_finite() && fc <= f + 1e-4 * pg.dot(&(cand - th)) && fc < f {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            converged = pg.norm() < 1e-3;
            break;
        };
        iterations += 1;
        let g_new = gradient(&cand);
        let s = cand - th;
        let yv = g_new - g;
        let sy = s.dot(&yv);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let id = Matrix2::identity();
            hinv = (id - s * yv.transpose() * rho) * hinv * (id - yv * s.transpose() * rho) + s * s.transpose() * rho;
        }
        let small_change = (f - fc).abs() <= 1e-12 * f.abs().max(1.0);
        th = cand;
        f = fc;
        g = g_new;
        history.push(-f);
        if small_change {
            converged = true;
            break;
        }
    }
    let hit_bounds = (0..2).any(|k| th[k] <= lo[k] || th[k] >= hi[k]);
    let h = Hyperparameters { r: th[0].exp(), q: th[1].exp() };
    Ok((h, SearchReport { grid_best, grid_best_loglik, iterations, converged, loglik_history: history, hit_bounds }))
}

/// Balance-of-payments-constrained growth `dz_t / pi_t` with `dz_t` the first
/// difference of the HP trend of log exports. Entry `k` refers to period
/// `k + 1` of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeMultiplier {
    pub dz: Vec<f64>,
    pub dy_bp: Vec<f64>,
    /// Entries whose elasticity is not positive; their values are not meaningful.
    pub flagged: Vec<usize>,
}

pub fn trade_multiplier(z: &[f64], pi_t: &[f64]) -> Result<TradeMultiplier> {
    if z.len() != pi_t.len() {
        return Err(Error::LengthMismatch { left: z.len(), right: pi_t.len() });
    }
    let trend = hp_filter(z, HP_LAMBDA)?.trend;
    let dz: Vec<f64> = trend.windows(2).map(|w| w[1] - w[0]).collect();
    let mut flagged = Vec::new();
    let dy_bp = dz
        .iter()
        .zip(&pi_t[1..])
        .enumerate()
        .map(|(k, (d, &p))| {
            if !(p > 0.0) {
                flagged.push(k);
            }
            d / p
        })
        .collect();
    Ok(TradeMultiplier { dz, dy_bp, flagged })
}
