//! One function per subcommand. Each writes its artifacts into `out` and
//! returns their file names.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use fxdyn_core::equilibria::location;
use fxdyn_core::estimator::Hyperparameters;
use fxdyn_core::simulate::{simulate_with, SimConfig};
use fxdyn_core::{
    aggregate, basin_grid, boundary_scan, equilibria, io, kalman_tvp, qq_normal, sweep,
    BasinClass, EquilibriumLabel, MarketState, SeriesStats,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, Start, Transform};

/// Return volatility below which a run is reported as sitting on a fixed point.
const SETTLED_SD: f64 = 1e-12;

/// Numerical failure of a computation that must not diverge (exit code 2).
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "numerical failure: {}", self.0)
    }
}

impl std::error::Error for NumericalFailure {}

struct Outputs<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Self {
        Self { dir, names: Vec::new() }
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        self.names.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

pub fn equilibria_cmd(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let set = equilibria(&cfg.params);
    say!("{:<4} {:>24} {:>24} {:>14} {:>12}", "", "e", "dy", "class", "max|lambda|");
    for eq in &set.points {
        say!(
            "{:<4} {:>24e} {:>24e} {:>14} {:>12.6}",
            eq.label.to_string(),
            eq.e_bar,
            eq.dy_bar,
            format!("{:?}", eq.classification).to_lowercase(),
            eq.spectral_radius()
        );
    }
    for d in &set.diagnostics {
        say!("note: {d:?}");
    }
    let mut o = Outputs::new(out);
    o.json("equilibria.json", &set)?;
    Ok(o.names)
}

fn initial_state(cfg: &RunConfig) -> Result<MarketState> {
    let s = cfg.simulate.clone().unwrap_or_default();
    if let (Some(e), Some(dy)) = (s.e0, s.dy0) {
        return Ok(MarketState::at_rest(e + s.offset[0], dy + s.offset[1]));
    }
    let label = match s.start {
        Some(Start::P1) => EquilibriumLabel::P1,
        Some(Start::P2) => EquilibriumLabel::P2,
        Some(Start::P3) => EquilibriumLabel::P3,
        None if location(&cfg.params, EquilibriumLabel::P2).is_some() => EquilibriumLabel::P2,
        None => EquilibriumLabel::P1,
    };
    let (e, dy) = location(&cfg.params, label)
        .ok_or_else(|| anyhow!("start point {label} does not exist for these parameters"))?;
    Ok(MarketState::at_rest(e + s.offset[0], dy + s.offset[1]))
}

pub fn simulate_cmd(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let s = cfg.simulate.clone().unwrap_or_default();
    let init = initial_state(cfg)?;
    let full = simulate_with(
        &cfg.params,
        init,
        &SimConfig { horizon: s.burn_in + s.horizon, e_max: s.e_max },
        cfg.seed,
    );
    if full.len() < s.burn_in {
        eprintln!("warning: run diverged at step {} during the burn-in", full.diverged_at.unwrap_or(0));
    }
    let traj = full.after(s.burn_in);
    let agg = aggregate(&traj, s.year_length);

    let mut o = Outputs::new(out);
    io::write_trajectory_csv(&traj, o.file("trajectory.csv")?)?;
    io::write_returns_csv(&agg, o.file("returns.csv")?)?;
    io::write_annual_csv(&agg, o.file("annual.csv")?)?;

    let returns = SeriesStats::compute(&agg.fx_returns);
    let qq = qq_normal(&agg.fx_returns, s.qq_mode);
    if let Ok(pairs) = &qq {
        io::write_qq_csv(pairs, o.file("qq.csv")?)?;
    }
    let growth_mean = if agg.annual_growth.is_empty() {
        None
    } else {
        Some(agg.annual_growth.iter().sum::<f64>() / agg.annual_growth.len() as f64)
    };
    let report = json!({
        "steps_recorded": traj.len(),
        "diverged_at": full.diverged_at,
        "returns": match &returns {
            Ok(st) => serde_json::to_value(st)?,
            Err(e) => json!({ "error": e.to_string() }),
        },
        "qq_mode": s.qq_mode,
        "annual_growth": {
            "years": agg.annual_growth.len(),
            "mean": growth_mean,
            "year_length_times_dy_bp": s.year_length as f64 * cfg.params.dy_bp,
        },
        "settled_on_fixed_point": returns.as_ref().is_ok_and(|st| st.sd < SETTLED_SD),
        "warnings": agg.warnings,
    });
    o.json("stats.json", &report)?;

    match &returns {
        Ok(st) => say!(
            "returns: n={} sd={:.3e} skew={:.3} exkurt={:.3} A*2={:.3} reject_5pct={}",
            st.n, st.sd, st.skewness, st.excess_kurtosis, st.ad_a2_star, st.reject_at_5pct
        ),
        Err(e) => say!("returns: no diagnostics ({e})"),
    }
    if let Some(d) = full.diverged_at {
        say!("diverged at step {d}");
    }
    if let Ok(st) = &returns {
        if st.sd < SETTLED_SD {
            eprintln!("warning: returns are at rounding level (sd {:.1e}); the orbit has settled on a fixed point", st.sd);
        }
    }
    for w in &agg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(o.names)
}

pub fn sweep_cmd(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let mut o = Outputs::new(out);
    if let Some(sw) = &cfg.sweep {
        let res = sweep(&cfg.params, sw.axis, sw.range[0], sw.range[1], sw.n, &sw.protocol())?;
        io::write_sweep_csv(&res, o.file("sweep.csv")?)?;
        io::write_sweep_conditions_csv(&res, o.file("conditions.csv")?)?;
        let tol = fxdyn_core::bifurcation::CLUSTER_TOLERANCE;
        let at = |k: Option<usize>| k.map(|k| res.points[k].value);
        let summary = json!({
            "axis": sw.axis,
            "points": res.points.len(),
            "first_flip_condition_negative": at(res.first_flip_crossing()),
            "first_non_stationary": at(res.first_nonstationary(tol)),
            "cluster_tolerance": tol,
        });
        o.json("summary.json", &summary)?;
        say!(
            "sweep over {}: {} values; flip condition first negative at {:?}; first non-stationary value {:?}",
            sw.axis,
            res.points.len(),
            at(res.first_flip_crossing()),
            at(res.first_nonstationary(tol))
        );
    }
    if let Some(sc) = &cfg.scan {
        let grid = boundary_scan(
            &cfg.params,
            sc.axis1,
            (sc.range1[0], sc.range1[1]),
            sc.n1,
            sc.axis2,
            (sc.range2[0], sc.range2[1]),
            sc.n2,
        )?;
        io::write_region_csv(&grid, o.file("regions.csv")?)?;
        let counts: serde_json::Map<String, serde_json::Value> = fxdyn_core::RegionLabel::ALL
            .iter()
            .map(|l| (l.name().to_string(), json!(grid.cells.iter().filter(|c| c.label == *l).count())))
            .collect();
        let legend = json!({
            "codes": io::region_legend(),
            "axis1": sc.axis1,
            "axis2": sc.axis2,
            "layout": "one row per axis2 value, one column per axis1 value",
            "counts": counts,
        });
        o.json("legend.json", &legend)?;
        say!("scan {} x {}: {counts:?}", sc.axis1, sc.axis2);
    }
    Ok(o.names)
}

pub fn basins_cmd(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let b = cfg.basins.as_ref().ok_or_else(|| anyhow!("missing [basins] table"))?;
    let grid = basin_grid(&cfg.params, b.window(), b.nx, b.ny, &b.caps())?;
    let mut o = Outputs::new(out);
    io::write_basin_csv(&grid, o.file("basins.csv")?)?;
    if b.rle {
        let mut w = o.file("basins.rle")?;
        io::encode_rle(grid.nx, grid.ny, &grid.classes, &mut w)?;
        w.flush()?;
    }
    let counts: serde_json::Map<String, serde_json::Value> =
        BasinClass::ALL.iter().map(|c| (c.name().to_string(), json!(grid.count(*c)))).collect();
    let legend = json!({
        "codes": io::basin_legend(),
        "nx": grid.nx,
        "ny": grid.ny,
        "window": grid.window,
        "caps": grid.caps,
        "layout": "row j holds cell centres at increasing e for the j-th dy value, lowest dy first",
        "counts": counts,
    });
    o.json("legend.json", &legend)?;
    say!("basins {}x{}: {counts:?}", grid.nx, grid.ny);
    Ok(o.names)
}

pub fn stats_cmd(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let s = cfg.stats.as_ref().ok_or_else(|| anyhow!("missing [stats] table"))?;
    let file = File::open(&s.input).with_context(|| format!("cannot open {}", s.input.display()))?;
    let raw = io::read_column_csv(file, &s.column)?;
    let series: Vec<f64> = match s.transform {
        Transform::None => raw,
        Transform::Returns => raw.windows(2).map(|w| (w[1] - w[0]).exp_m1()).collect(),
        Transform::Diff => raw.windows(2).map(|w| w[1] - w[0]).collect(),
    };
    let st = SeriesStats::compute(&series)?;
    let pairs = qq_normal(&series, s.qq_mode)?;
    let mut o = Outputs::new(out);
    o.json("stats.json", &json!({ "column": s.column, "transform": s.transform, "qq_mode": s.qq_mode, "stats": st }))?;
    io::write_qq_csv(&pairs, o.file("qq.csv")?)?;
    say!(
        "n={} mean={:.6e} sd={:.6e} skew={:.4} exkurt={:.4} A2={:.4} A*2={:.4} reject_5pct={}",
        st.n, st.mean, st.sd, st.skewness, st.excess_kurtosis, st.ad_a2, st.ad_a2_star, st.reject_at_5pct
    );
    Ok(o.names)
}

pub fn estimate_cmd(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let e = cfg.estimate.as_ref().ok_or_else(|| anyhow!("missing [estimate] table"))?;
    let file = File::open(&e.input).with_context(|| format!("cannot open {}", e.input.display()))?;
    let data = io::read_macro_csv(file)?;
    let hyper = match (e.r, e.q) {
        (Some(r), Some(q)) => Some(Hyperparameters { r, q }),
        _ => None,
    };
    let est = kalman_tvp(&data, hyper).map_err(|err| match err {
        fxdyn_core::Error::IllConditioned(_) | fxdyn_core::Error::NonFinite | fxdyn_core::Error::Degenerate => {
            anyhow::Error::new(NumericalFailure(err.to_string()))
        }
        other => anyhow::Error::new(other),
    })?;
    let mut o = Outputs::new(out);
    io::write_tvp_csv(&est, o.file("tvp.csv")?)?;
    o.json("estimate.json", &est)?;
    say!(
        "eta={:.4} (se {:.4}); pi_t in [{:.4}, {:.4}]; r={:.3e} q={:.3e}; loglik={:.4}",
        est.eta,
        est.eta_se,
        est.pi_t.iter().copied().fold(f64::INFINITY, f64::min),
        est.pi_t.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        est.hyper.r,
        est.hyper.q,
        est.log_likelihood
    );
    if let Some(s) = &est.search {
        if !s.converged {
            eprintln!("warning: variance search did not converge; reporting best values found");
        }
        if s.hit_bounds {
            eprintln!("warning: variance search stopped at a search bound");
        }
    }
    if !est.nonpositive_pi_years.is_empty() {
        eprintln!("warning: non-positive elasticity in years {:?}", est.nonpositive_pi_years);
    }
    Ok(o.names)
}
