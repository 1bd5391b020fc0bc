//! Trajectories of the deterministic skeleton and the stochastic map.
//!
//! Shocks are drawn from `ChaCha8Rng::seed_from_u64(seed)` through
//! `rand_distr::Normal` (ziggurat). A run is fully determined by
//! `(params, init, horizon, seed)`; with `sigma = 0` or no seed no draws are
//! made and the run equals the deterministic skeleton bit for bit.
//! Batches derive per-member seeds with [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::map::advance;
use crate::params::{MarketState, ModelParams};

pub const DEFAULT_E_MAX: f64 = 1e6;
pub const DEFAULT_YEAR_LENGTH: usize = 365;
pub const DEFAULT_BURN_IN: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: usize,
    /// A run stops once `|e|` exceeds this (log units).
    pub e_max: f64,
}

impl SimConfig {
    pub fn new(horizon: usize) -> Self {
        Self { horizon, e_max: DEFAULT_E_MAX }
    }
}

/// A simulated path. Index `t` of each series holds the state after step
/// `t + 1` and the shock that produced it; `init` is the state at time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub seed: Option<u64>,
    pub init: MarketState,
    pub e: Vec<f64>,
    pub dy: Vec<f64>,
    pub eps: Vec<f64>,
    /// Step at which the state left the admissible region; the offending
    /// state is not recorded.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// State after `t` steps (`t = 0` is the initial state).
    pub fn state(&self, t: usize) -> MarketState {
        match t {
            0 => self.init,
            1 => MarketState::new(self.e[0], self.dy[0], self.init.e),
            _ => MarketState::new(self.e[t - 1], self.dy[t - 1], self.e[t - 2]),
        }
    }

    /// The path after discarding the first `burn_in` steps.
    pub fn after(&self, burn_in: usize) -> Trajectory {
        let k = burn_in.min(self.len());
        Trajectory {
            params: self.params,
            seed: self.seed,
            init: self.state(k),
            e: self.e[k..].to_vec(),
            dy: self.dy[k..].to_vec(),
            eps: self.eps[k..].to_vec(),
            diverged_at: self.diverged_at.map(|d| d - k),
        }
    }
}

/// Runs the map for `horizon` steps with the default divergence threshold.
pub fn simulate(params: &ModelParams, init: MarketState, horizon: usize, seed: Option<u64>) -> Trajectory {
    simulate_with(params, init, &SimConfig::new(horizon), seed)
}

pub fn simulate_with(params: &ModelParams, init: MarketState, cfg: &SimConfig, seed: Option<u64>) -> Trajectory {
    let mut shocks = ShockSource::new(params.sigma, seed);
    let mut e = Vec::with_capacity(cfg.horizon);
    let mut dy = Vec::with_capacity(cfg.horizon);
    let mut eps = Vec::with_capacity(cfg.horizon);
    let mut state = init;
    let mut diverged_at = None;
    for t in 0..cfg.horizon {
        let shock = shocks.draw();
        let next = advance(&state, shock, params);
        if !next.is_finite() || next.e.abs() > cfg.e_max {
            diverged_at = Some(t);
            break;
        }
        e.push(next.e);
        dy.push(next.dy);
        eps.push(shock);
        state = next;
    }
    Trajectory { params: *params, seed, init, e, dy, eps, diverged_at }
}

struct ShockSource {
    inner: Option<(ChaCha8Rng, Normal<f64>)>,
}

impl ShockSource {
    fn new(sigma: f64, seed: Option<u64>) -> Self {
        let inner = match seed {
            Some(s) if sigma > 0.0 => {
                Some((ChaCha8Rng::seed_from_u64(s), Normal::new(0.0, sigma).expect("sigma is finite and positive")))
            }
            _ => None,
        };
        Self { inner }
    }

    #[inline]
    fn draw(&mut self) -> f64 {
        match &mut self.inner {
            Some((rng, normal)) => normal.sample(rng),
            None => 0.0,
        }
    }
}

/// Seed of batch member `index`: SplitMix64 of `base + (index + 1) * φ64`,
/// with φ64 = 0x9E3779B97F4A7C15.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregated {
    /// `exp(e_t - e_{t-1}) - 1` for every recorded step.
    pub fx_returns: Vec<f64>,
    /// Sum of `dy` over each complete year.
    pub annual_growth: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Daily FX returns and annual output growth of a trajectory.
pub fn aggregate(traj: &Trajectory, year_length: usize) -> Aggregated {
    let mut prev = traj.init.e;
    let fx_returns = traj
        .e
        .iter()
        .map(|&e| {
            let r = (e - prev).exp_m1();
            prev = e;
            r
        })
        .collect();
    let mut warnings = Vec::new();
    let annual_growth: Vec<f64> = if year_length == 0 {
        warnings.push("year_length is zero; no annual series".to_string());
        Vec::new()
    } else {
        traj.dy.chunks_exact(year_length).map(|w| w.iter().sum()).collect()
    };
    if year_length > 0 && annual_growth.is_empty() {
        warnings.push(format!(
            "trajectory of {} steps is shorter than one year of {} steps",
            traj.len(),
            year_length
        ));
    }
    Aggregated { fx_returns, annual_growth, warnings }
}
