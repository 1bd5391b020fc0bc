//! Bifurcation-diagram data: post-transient attractor samples along one
//! parameter, and analytic stability regions over two parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{location, outer_conditions, EquilibriumLabel, BOUNDARY_TOLERANCE};
use crate::error::{Error, Result};
use crate::map::advance;
use crate::params::{Axis, MarketState, ModelParams};
use crate::simulate::DEFAULT_E_MAX;

/// Tolerance used to count distinct periodic points in a sample.
pub const CLUSTER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branches {
    /// Seed near both P2 and P3.
    Both,
    /// Seed near P2 only.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepProtocol {
    pub transient: usize,
    pub samples: usize,
    /// Offset `(de, ddy)` added to each seed equilibrium.
    pub offset: (f64, f64),
    pub branches: Branches,
    pub e_max: f64,
}

impl Default for SweepProtocol {
    fn default() -> Self {
        Self { transient: 2000, samples: 200, offset: (1e-3, 0.0), branches: Branches::Both, e_max: DEFAULT_E_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    /// Equilibrium the orbit was seeded near.
    pub seed: EquilibriumLabel,
    /// Post-transient `e` values; `None` iff the orbit diverged.
    pub samples: Option<Vec<f64>>,
    pub diverged: bool,
}

impl BranchSample {
    pub fn distinct(&self, tol: f64) -> Option<usize> {
        self.samples.as_deref().map(|s| distinct_values(s, tol))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// Empty when the parameter value is outside its admissible range.
    pub branches: Vec<BranchSample>,
    /// Flip condition at P2/P3, when they exist.
    pub flip: Option<f64>,
    /// Neimark-Sacker condition at P2/P3, when they exist.
    pub ns: Option<f64>,
    pub invalid: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Axis,
    pub protocol: SweepProtocol,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// First grid index whose flip condition is negative.
    pub fn first_flip_crossing(&self) -> Option<usize> {
        self.points.iter().position(|p| p.flip.is_some_and(|a| a < 0.0))
    }

    /// First grid index at which some branch stops collapsing to one value.
    pub fn first_nonstationary(&self, tol: f64) -> Option<usize> {
        self.points.iter().position(|p| {
            p.branches.iter().any(|b| b.diverged || b.distinct(tol).is_some_and(|n| n > 1))
        })
    }
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
}

/// Number of clusters in `values` when points closer than `tol` merge.
pub fn distinct_values(values: &[f64], tol: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    1 + v.windows(2).filter(|w| w[1] - w[0] > tol).count()
}

/// One-parameter attractor sweep of the deterministic skeleton.
///
/// For every grid value the map is iterated from P2 + offset and (with
/// [`Branches::Both`]) P3 + offset; when the outer equilibria do not exist
/// both orbits start from P1 + offset. After `transient` steps, `samples`
/// values of `e` are recorded. Grid cells run in parallel on the current
/// rayon pool; results are ordered by grid index.
pub fn sweep(
    params: &ModelParams,
    axis: Axis,
    lo: f64,
    hi: f64,
    n_points: usize,
    protocol: &SweepProtocol,
) -> Result<SweepResult> {
    if !(lo < hi) || n_points < 2 {
        return Err(Error::InvalidRequest(format!("sweep needs lo < hi and n >= 2 (got {lo}, {hi}, {n_points})")));
    }
    let values = linspace(lo, hi, n_points);
    let points = values.par_iter().map(|&v| sweep_point(params, axis, v, protocol)).collect();
    Ok(SweepResult { axis, protocol: *protocol, points })
}

fn sweep_point(base: &ModelParams, axis: Axis, value: f64, protocol: &SweepProtocol) -> SweepPoint {
    let p = match base.with(axis, value) {
        Ok(p) => p,
        Err(err) => {
            return SweepPoint { value, branches: Vec::new(), flip: None, ns: None, invalid: Some(err.to_string()) }
        }
    };
    let conds = outer_conditions(&p).ok();
    let labels: &[EquilibriumLabel] = match protocol.branches {
        Branches::Both => &[EquilibriumLabel::P2, EquilibriumLabel::P3],
        Branches::Single => &[EquilibriumLabel::P2],
    };
    let branches = labels
        .iter()
        .map(|&label| {
            let (e, dy) = location(&p, label)
                .or_else(|| location(&p, EquilibriumLabel::P1))
                .expect("P1 always exists");
            let init = MarketState::at_rest(e + protocol.offset.0, dy + protocol.offset.1);
            let samples = attractor_sample(&p, init, protocol);
            BranchSample { seed: label, diverged: samples.is_none(), samples }
        })
        .collect();
    SweepPoint { value, branches, flip: conds.map(|c| c.flip()), ns: conds.map(|c| c.ns()), invalid: None }
}

/// Post-transient `e` samples of the deterministic map, or `None` on divergence.
pub fn attractor_sample(params: &ModelParams, init: MarketState, protocol: &SweepProtocol) -> Option<Vec<f64>> {
    let mut s = init;
    let mut out = Vec::with_capacity(protocol.samples);
    for t in 0..protocol.transient + protocol.samples {
        s = advance(&s, 0.0, params);
        if !s.is_finite() || s.e.abs() > protocol.e_max {
            return None;
        }
        if t >= protocol.transient {
            out.push(s.e);
        }
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    Stable,
    FlipCrossed,
    NsCrossed,
    FoldCrossed,
    /// More than one condition violated.
    Multiple,
    /// P2/P3 do not exist for this cell.
    NoOuterEquilibria,
    /// Parameter values outside their admissible range.
    Invalid,
}

impl RegionLabel {
    pub fn code(self) -> u8 {
        match self {
            RegionLabel::Stable => 0,
            RegionLabel::FlipCrossed => 1,
            RegionLabel::NsCrossed => 2,
            RegionLabel::FoldCrossed => 3,
            RegionLabel::Multiple => 4,
            RegionLabel::NoOuterEquilibria => 5,
            RegionLabel::Invalid => 6,
        }
    }

    pub const ALL: [RegionLabel; 7] = [
        RegionLabel::Stable,
        RegionLabel::FlipCrossed,
        RegionLabel::NsCrossed,
        RegionLabel::FoldCrossed,
        RegionLabel::Multiple,
        RegionLabel::NoOuterEquilibria,
        RegionLabel::Invalid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionLabel::Stable => "stable",
            RegionLabel::FlipCrossed => "flip_crossed",
            RegionLabel::NsCrossed => "ns_crossed",
            RegionLabel::FoldCrossed => "fold_crossed",
            RegionLabel::Multiple => "multiple",
            RegionLabel::NoOuterEquilibria => "no_outer_equilibria",
            RegionLabel::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub flip: Option<f64>,
    pub ns: Option<f64>,
    pub fold: Option<f64>,
    pub label: RegionLabel,
}

/// Stability regions of P2/P3 over a two-parameter grid. Cells are stored
/// row-major with `axis2` indexing rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub axis1: Axis,
    pub axis2: Axis,
    pub values1: Vec<f64>,
    pub values2: Vec<f64>,
    pub cells: Vec<RegionCell>,
}

impl RegionGrid {
    pub fn cell(&self, i1: usize, i2: usize) -> &RegionCell {
        &self.cells[i2 * self.values1.len() + i1]
    }
}

/// Region label implied by the signs of the flip, Neimark-Sacker and fold
/// conditions.
pub fn region_label(flip: f64, ns: f64, fold: f64) -> RegionLabel {
    let violated = [flip, ns, fold].map(|v| v <= BOUNDARY_TOLERANCE);
    match violated {
        [false, false, false] => RegionLabel::Stable,
        [true, false, false] => RegionLabel::FlipCrossed,
        [false, true, false] => RegionLabel::NsCrossed,
        [false, false, true] => RegionLabel::FoldCrossed,
        _ => RegionLabel::Multiple,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn boundary_scan(
    params: &ModelParams,
    axis1: Axis,
    range1: (f64, f64),
    n1: usize,
    axis2: Axis,
    range2: (f64, f64),
    n2: usize,
) -> Result<RegionGrid> {
    if axis1 == axis2 {
        return Err(Error::InvalidRequest(format!("scan axes must differ (both {axis1})")));
    }
    if n1 < 2 || n2 < 2 || !(range1.0 < range1.1) || !(range2.0 < range2.1) {
        return Err(Error::InvalidRequest("scan needs increasing ranges and at least 2 points per axis".into()));
    }
    let values1 = linspace(range1.0, range1.1, n1);
    let values2 = linspace(range2.0, range2.1, n2);
    let cells = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let (i1, i2) = (k % n1, k / n1);
            let mut p = *params;
            axis1.apply(&mut p, values1[i1]);
            axis2.apply(&mut p, values2[i2]);
            scan_cell(&p)
        })
        .collect();
    Ok(RegionGrid { axis1, axis2, values1, values2, cells })
}

fn scan_cell(p: &ModelParams) -> RegionCell {
    let empty = |label| RegionCell { flip: None, ns: None, fold: None, label };
    if p.validate().is_err() {
        return empty(RegionLabel::Invalid);
    }
    match outer_conditions(p) {
        Ok(c) => RegionCell {
            flip: Some(c.flip()),
            ns: Some(c.ns()),
            fold: Some(c.fold()),
            label: region_label(c.flip(), c.ns(), c.fold()),
        },
        Err(_) => empty(RegionLabel::NoOuterEquilibria),
    }
}
