//! Model parameters and the map state.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `w_f + w_c + w_e = 1`.
pub const SHARE_TOLERANCE: f64 = 1e-12;

/// Relative tolerance for `dy_bp == dz_ns / pi_elasticity`.
pub const TRADE_MULTIPLIER_TOLERANCE: f64 = 1e-9;

/// Full parameter vector of the model.
///
/// One step of the map is one day. `dy_bp` is the configured steady-state
/// growth rate; `dz_ns`, when given, must agree with `dy_bp * pi_elasticity`.
/// Fields missing from serialized input take their baseline values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Reaction of domestic speculators.
    pub mu: f64,
    /// Reaction of foreign speculators.
    pub rho: f64,
    /// Share of fundamentalists.
    pub w_f: f64,
    /// Share of chartists.
    pub w_c: f64,
    /// Share of trend-extrapolators.
    pub w_e: f64,
    /// Share of flexible firms.
    pub wflex: f64,
    /// Adjustment speed of flexible firms.
    pub beta: f64,
    /// Weight of past growth in the expected fundamental.
    pub omega: f64,
    /// Non-speculative share of the FX market.
    pub theta: f64,
    /// Income elasticity of demand for foreign assets.
    pub pi_elasticity: f64,
    /// Dynamic trade-multiplier, log growth per step.
    pub dy_bp: f64,
    /// Exogenous non-speculative FX supply growth per step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dz_ns: Option<f64>,
    /// Standard deviation of the shock to the expected fundamental.
    pub sigma: f64,
}

impl Default for ModelParams {
    /// Baseline calibration: `mu = rho = 4.5`, 90% fundamentalists and 10%
    /// chartists, `wflex = beta = 0.1`, `omega = 0.01`, `theta = 0.3`,
    /// `pi = 2`, `dy_bp = 3e-5`, `sigma = 0.02`.
    fn default() -> Self {
        Self {
            mu: 4.5,
            rho: 4.5,
            w_f: 0.9,
            w_c: 0.1,
            w_e: 0.0,
            wflex: 0.1,
            beta: 0.1,
            omega: 0.01,
            theta: 0.3,
            pi_elasticity: 2.0,
            dy_bp: 3e-5,
            dz_ns: None,
            sigma: 0.02,
        }
    }
}

fn open_unit(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam { name, reason: format!("{v} is not in (0, 1)") })
    }
}

fn closed_unit(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParam { name, reason: format!("{v} is not in [0, 1]") })
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam { name, reason: format!("{v} is negative or not finite") })
    }
}

impl ModelParams {
    /// Checks every bound and the share/trade-multiplier identities.
    pub fn validate(&self) -> Result<()> {
        non_negative("mu", self.mu)?;
        non_negative("rho", self.rho)?;
        closed_unit("w_f", self.w_f)?;
        closed_unit("w_c", self.w_c)?;
        closed_unit("w_e", self.w_e)?;
        let sum = self.w_f + self.w_c + self.w_e;
        if (sum - 1.0).abs() > SHARE_TOLERANCE {
            return Err(Error::SharesDoNotSumToOne { sum });
        }
        open_unit("wflex", self.wflex)?;
        open_unit("beta", self.beta)?;
        open_unit("omega", self.omega)?;
        open_unit("theta", self.theta)?;
        if !(self.pi_elasticity.is_finite() && self.pi_elasticity > 0.0) {
            return Err(Error::InvalidParam {
                name: "pi_elasticity",
                reason: format!("{} is not positive", self.pi_elasticity),
            });
        }
        if !self.dy_bp.is_finite() {
            return Err(Error::InvalidParam { name: "dy_bp", reason: "not finite".into() });
        }
        if let Some(dz) = self.dz_ns {
            let implied = dz / self.pi_elasticity;
            let scale = self.dy_bp.abs().max(implied.abs()).max(f64::MIN_POSITIVE);
            if !dz.is_finite() || (self.dy_bp - implied).abs() > TRADE_MULTIPLIER_TOLERANCE * scale {
                return Err(Error::InconsistentTradeMultiplier { dy_bp: self.dy_bp, implied });
            }
        }
        non_negative("sigma", self.sigma)?;
        if !(self.gamma() > 0.0) {
            return Err(Error::InvalidParam {
                name: "mu",
                reason: "mu + rho must be positive so that gamma > 0".into(),
            });
        }
        Ok(())
    }

    /// Total speculative reaction `mu + rho`.
    #[inline]
    pub fn reaction(&self) -> f64 {
        self.mu + self.rho
    }

    /// Speculative drain on output growth, `(1 - theta)(mu + rho) / (theta * pi)`.
    #[inline]
    pub fn gamma(&self) -> f64 {
        (1.0 - self.theta) * (self.mu + self.rho) / (self.theta * self.pi_elasticity)
    }

    /// Effective firm adjustment `wflex * beta`.
    #[inline]
    pub fn adjustment(&self) -> f64 {
        self.wflex * self.beta
    }

    /// Non-speculative FX supply growth; falls back to `dy_bp * pi` when unset.
    #[inline]
    pub fn non_speculative_supply_growth(&self) -> f64 {
        self.dz_ns.unwrap_or(self.dy_bp * self.pi_elasticity)
    }

    /// Whether the extrapolator lag matters (map is genuinely second order).
    #[inline]
    pub fn has_extrapolators(&self) -> bool {
        self.w_e > 0.0
    }

    /// Central equilibrium exchange rate `-omega * dy_bp`.
    #[inline]
    pub fn central_rate(&self) -> f64 {
        -self.omega * self.dy_bp
    }

    /// Returns a copy with `axis` set to `value` (shares renormalised as
    /// documented on [`Axis`]), validated.
    pub fn with(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut p = *self;
        axis.apply(&mut p, value);
        p.validate()?;
        Ok(p)
    }
}

/// A scalar parameter that sweeps and scans can vary.
///
/// Share axes keep the shares summing to one: moving `w_f` or `w_e` absorbs
/// the difference in `w_c`; moving `w_c` absorbs it in `w_f`.
/// `WflexBeta` sets `wflex = beta = sqrt(value)`, which only the product
/// enters the map through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Mu,
    Rho,
    WF,
    WC,
    WE,
    Wflex,
    Beta,
    WflexBeta,
    Omega,
    Theta,
    PiElasticity,
    DyBp,
    Sigma,
}

impl Axis {
    pub const ALL: [Axis; 13] = [
        Axis::Mu,
        Axis::Rho,
        Axis::WF,
        Axis::WC,
        Axis::WE,
        Axis::Wflex,
        Axis::Beta,
        Axis::WflexBeta,
        Axis::Omega,
        Axis::Theta,
        Axis::PiElasticity,
        Axis::DyBp,
        Axis::Sigma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Mu => "mu",
            Axis::Rho => "rho",
            Axis::WF => "w_f",
            Axis::WC => "w_c",
            Axis::WE => "w_e",
            Axis::Wflex => "wflex",
            Axis::Beta => "beta",
            Axis::WflexBeta => "wflex_beta",
            Axis::Omega => "omega",
            Axis::Theta => "theta",
            Axis::PiElasticity => "pi_elasticity",
            Axis::DyBp => "dy_bp",
            Axis::Sigma => "sigma",
        }
    }

    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            Axis::Mu => p.mu,
            Axis::Rho => p.rho,
            Axis::WF => p.w_f,
            Axis::WC => p.w_c,
            Axis::WE => p.w_e,
            Axis::Wflex => p.wflex,
            Axis::Beta => p.beta,
            Axis::WflexBeta => p.wflex * p.beta,
            Axis::Omega => p.omega,
            Axis::Theta => p.theta,
            Axis::PiElasticity => p.pi_elasticity,
            Axis::DyBp => p.dy_bp,
            Axis::Sigma => p.sigma,
        }
    }

    /// Sets the axis without validating.
    pub fn apply(self, p: &mut ModelParams, value: f64) {
        match self {
            Axis::Mu => p.mu = value,
            Axis::Rho => p.rho = value,
            Axis::WF => {
                p.w_f = value;
                p.w_c = 1.0 - p.w_f - p.w_e;
            }
            Axis::WC => {
                p.w_c = value;
                p.w_f = 1.0 - p.w_c - p.w_e;
            }
            Axis::WE => {
                p.w_e = value;
                p.w_c = 1.0 - p.w_f - p.w_e;
            }
            Axis::Wflex => p.wflex = value,
            Axis::Beta => p.beta = value,
            Axis::WflexBeta => {
                let r = value.sqrt();
                p.wflex = r;
                p.beta = r;
            }
            Axis::Omega => p.omega = value,
            Axis::Theta => p.theta = value,
            Axis::PiElasticity => p.pi_elasticity = value,
            Axis::DyBp => {
                p.dy_bp = value;
                if p.dz_ns.is_some() {
                    p.dz_ns = Some(value * p.pi_elasticity);
                }
            }
            Axis::Sigma => p.sigma = value,
        }
        // Exact cancellation noise can leave a share at -1e-17.
        for w in [&mut p.w_f, &mut p.w_c, &mut p.w_e] {
            if *w < 0.0 && *w > -SHARE_TOLERANCE {
                *w = 0.0;
            }
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match key.as_str() {
            "wf" => "w_f",
            "wc" => "w_c",
            "we" => "w_e",
            "pi" => "pi_elasticity",
            "w_flex" => "wflex",
            "wflexbeta" | "wflex*beta" => "wflex_beta",
            other => other,
        };
        Axis::ALL
            .iter()
            .copied()
            .find(|a| a.name() == alias)
            .ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

/// State of the map: `(e, dy, e_prev)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketState {
    /// Log exchange rate, domestic currency per USD.
    pub e: f64,
    /// Output growth this step.
    pub dy: f64,
    /// Previous log exchange rate.
    pub e_prev: f64,
}

impl MarketState {
    pub fn new(e: f64, dy: f64, e_prev: f64) -> Self {
        Self { e, dy, e_prev }
    }

    /// A state with no ongoing trend (`e_prev = e`).
    pub fn at_rest(e: f64, dy: f64) -> Self {
        Self { e, dy, e_prev: e }
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.dy.is_finite() && self.e_prev.is_finite()
    }

    /// Largest coordinate difference.
    pub fn distance(&self, other: &MarketState) -> f64 {
        (self.e - other.e)
            .abs()
            .max((self.dy - other.dy).abs())
            .max((self.e_prev - other.e_prev).abs())
    }
}
