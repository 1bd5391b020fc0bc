//! Numerical laboratory for a heterogeneous-agent model of the exchange rate
//! and output growth in an economy that needs foreign currency to grow.
//!
//! Speculators (fundamentalists, chartists and trend-extrapolators) trade
//! foreign exchange against a non-speculative sector whose demand follows
//! domestic activity. Firms adjust output growth towards the rate that
//! clears the FX market, which in steady state is the dynamic
//! trade-multiplier `dy_bp`.
//!
//! Module map:
//! - [`params`]: parameter vector and state.
//! - [`map`]: one-step transition, speculative trade, market-clearing growth.
//! - [`equilibria`]: closed-form fixed points, Jacobians, stability conditions.
//! - [`simulate`]: seeded trajectories and aggregation to returns/annual growth.
//! - [`bifurcation`]: one-parameter attractor sweeps and two-parameter region scans.
//! - [`basins`]: basin-of-attraction rasters.
//! - [`stats`]: moments, Anderson-Darling, QQ data.
//! - [`estimator`]: HP filter, time-varying Kalman estimation, trade multiplier series.
//! - [`io`]: CSV/JSON/RLE emission shared by the CLI.

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod basins;
pub mod bifurcation;
pub mod equilibria;
pub mod error;
pub mod estimator;
pub mod io;
pub mod map;
pub mod params;
pub mod simulate;
pub mod stats;

pub use basins::{basin_grid, classify_orbit, BasinClass, BasinGrid, BasinWindow, OrbitCaps};
pub use bifurcation::{boundary_scan, sweep, RegionGrid, RegionLabel, SweepProtocol, SweepResult};
pub use equilibria::{
    equilibria, jacobian_at, stability, Classification, ConditionSet, ConditionSurface,
    Equilibrium, EquilibriumLabel, EquilibriumSet,
};
pub use error::{Error, Result};
pub use estimator::{hp_filter, kalman_tvp, trade_multiplier, MacroDataset, TvpEstimate};
pub use map::{expected_fundamental, market_clearing_growth, speculative_trade, step};
pub use params::{Axis, MarketState, ModelParams};
pub use simulate::{aggregate, simulate, Aggregated, SimConfig, Trajectory};
pub use stats::{anderson_darling, moments, qq_normal, QqMode, SeriesStats};
