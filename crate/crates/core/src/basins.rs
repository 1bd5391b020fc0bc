//! Basins of attraction over a window of initial `(e, dy)`.
//!
//! Every cell centre is iterated under the deterministic map with
//! `e_prev = e` at time zero. An orbit is assigned to an equilibrium once it
//! stays within `eps_conv` of it (max norm over `e`, `dy`, `e_prev`) for
//! `dwell` consecutive states. P2 and P3 are targets only when they exist and
//! are locally stable; P1 is always a target since it is a fixed point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{equilibria, Classification, EquilibriumLabel};
use crate::error::{Error, Result};
use crate::map::advance;
use crate::params::{MarketState, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitCaps {
    pub t_max: usize,
    pub eps_conv: f64,
    pub e_max: f64,
    pub dwell: usize,
}

impl Default for OrbitCaps {
    fn default() -> Self {
        Self { t_max: 5000, eps_conv: 1e-6, e_max: 1e6, dwell: 10 }
    }
}

impl OrbitCaps {
    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 || self.dwell == 0 {
            return Err(Error::InvalidRequest("t_max and dwell must be positive".into()));
        }
        if !(self.eps_conv > 0.0) || !(self.e_max > 0.0) {
            return Err(Error::InvalidRequest("eps_conv and e_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasinClass {
    P1,
    P2,
    P3,
    Divergent,
    /// Bounded orbit that settled nowhere within `t_max` steps.
    Other,
}

impl BasinClass {
    pub const ALL: [BasinClass; 5] =
        [BasinClass::P2, BasinClass::P3, BasinClass::P1, BasinClass::Divergent, BasinClass::Other];

    pub fn code(self) -> u8 {
        match self {
            BasinClass::P2 => 0,
            BasinClass::P3 => 1,
            BasinClass::P1 => 2,
            BasinClass::Divergent => 3,
            BasinClass::Other => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            BasinClass::P1 => "p1",
            BasinClass::P2 => "p2",
            BasinClass::P3 => "p3",
            BasinClass::Divergent => "divergent",
            BasinClass::Other => "other",
        }
    }

    fn mirror(self) -> Self {
        match self {
            BasinClass::P2 => BasinClass::P3,
            BasinClass::P3 => BasinClass::P2,
            c => c,
        }
    }
}

/// Attracting targets of one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    points: Vec<(BasinClass, MarketState)>,
}

impl Targets {
    pub fn new(params: &ModelParams) -> Self {
        let set = equilibria(params);
        let mut points = Vec::with_capacity(3);
        let outer = [(EquilibriumLabel::P2, BasinClass::P2), (EquilibriumLabel::P3, BasinClass::P3)];
        let outer_stable =
            outer.iter().all(|(l, _)| set.get(*l).is_some_and(|eq| eq.classification == Classification::Stable));
        if outer_stable {
            for (l, c) in outer {
                points.push((c, set.get(l).expect("checked").state()));
            }
        }
        let p1 = set.get(EquilibriumLabel::P1).expect("P1 always exists");
        points.push((BasinClass::P1, p1.state()));
        Self { points }
    }

    fn nearest_within(&self, s: &MarketState, eps: f64) -> Option<BasinClass> {
        self.points.iter().find(|(_, p)| s.distance(p) <= eps).map(|(c, _)| *c)
    }
}

pub fn classify_orbit(params: &ModelParams, init: MarketState, caps: &OrbitCaps) -> BasinClass {
    classify_with(params, &Targets::new(params), init, caps)
}

fn classify_with(params: &ModelParams, targets: &Targets, init: MarketState, caps: &OrbitCaps) -> BasinClass {
    let mut s = init;
    let mut run: Option<(BasinClass, usize)> = None;
    for t in 0..=caps.t_max {
        if !s.is_finite() || s.e.abs() > caps.e_max {
            return BasinClass::Divergent;
        }
        run = match (targets.nearest_within(&s, caps.eps_conv), run) {
            (Some(c), Some((prev, k))) if c == prev => Some((c, k + 1)),
            (Some(c), _) => Some((c, 1)),
            (None, _) => None,
        };
        if let Some((c, k)) = run {
            if k >= caps.dwell {
                return c;
            }
        }
        if t < caps.t_max {
            s = advance(&s, 0.0, params);
        }
    }
    BasinClass::Other
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinWindow {
    pub e: (f64, f64),
    pub dy: (f64, f64),
}

impl BasinWindow {
    /// Window centred on P1 with the given half-widths.
    pub fn around_central(params: &ModelParams, e_half: f64, dy_half: f64) -> Self {
        let e1 = params.central_rate();
        Self { e: (e1 - e_half, e1 + e_half), dy: (params.dy_bp - dy_half, params.dy_bp + dy_half) }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.e) || !ok(self.dy) {
            return Err(Error::InvalidRequest(format!("basin window needs finite increasing ranges, got {self:?}")));
        }
        Ok(())
    }
}

/// Centre of cell `i` of `n` spanning `range`, written so that mirrored cells
/// are exact reflections about the window centre.
pub fn cell_center(range: (f64, f64), i: usize, n: usize) -> f64 {
    let mid = 0.5 * (range.0 + range.1);
    let half = 0.5 * (range.1 - range.0);
    mid + half * ((2 * i + 1) as f64 - n as f64) / n as f64
}

/// Class raster; `classes[j * nx + i]` holds column `i` (along `e`) of row
/// `j` (along `dy`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinGrid {
    pub params: ModelParams,
    pub window: BasinWindow,
    pub nx: usize,
    pub ny: usize,
    pub caps: OrbitCaps,
    pub classes: Vec<BasinClass>,
}

impl BasinGrid {
    pub fn class(&self, i: usize, j: usize) -> BasinClass {
        self.classes[j * self.nx + i]
    }

    pub fn row(&self, j: usize) -> &[BasinClass] {
        &self.classes[j * self.nx..(j + 1) * self.nx]
    }

    pub fn e_centers(&self) -> Vec<f64> {
        (0..self.nx).map(|i| cell_center(self.window.e, i, self.nx)).collect()
    }

    pub fn dy_centers(&self) -> Vec<f64> {
        (0..self.ny).map(|j| cell_center(self.window.dy, j, self.ny)).collect()
    }

    pub fn count(&self, class: BasinClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// Cells whose class differs from their point reflection through the
    /// window centre with P2 and P3 swapped.
    pub fn mirror_mismatches(&self) -> usize {
        let mut n = 0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.class(i, j).mirror() != self.class(self.nx - 1 - i, self.ny - 1 - j) {
                    n += 1;
                }
            }
        }
        n
    }
}

/// Adjacent cells of different class along a row.
pub fn transitions(row: &[BasinClass]) -> usize {
    row.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Switches between P2 and P3 along a row, skipping cells of other classes.
pub fn alternations(row: &[BasinClass]) -> usize {
    let mut last = None;
    let mut n = 0;
    for &c in row.iter().filter(|c| matches!(c, BasinClass::P2 | BasinClass::P3)) {
        if last.is_some_and(|l| l != c) {
            n += 1;
        }
        last = Some(c);
    }
    n
}

/// Classifies every cell centre on the current rayon pool. Results are
/// assembled in grid order and do not depend on the number of workers.
pub fn basin_grid(params: &ModelParams, window: BasinWindow, nx: usize, ny: usize, caps: &OrbitCaps) -> Result<BasinGrid> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidRequest(format!("basin grid needs nx, ny >= 2, got {nx}x{ny}")));
    }
    window.validate()?;
    caps.validate()?;
    let targets = Targets::new(params);
    let classes = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let e = cell_center(window.e, k % nx, nx);
            let dy = cell_center(window.dy, k / nx, ny);
            classify_with(params, &targets, MarketState::at_rest(e, dy), caps)
        })
        .collect();
    Ok(BasinGrid { params: *params, window, nx, ny, caps: *caps, classes })
}
