//! Fixed points of the map, their Jacobians and local stability.
//!
//! Without extrapolators the map is planar in `(e, dy)` and stability is
//! read from `1 + tr J + det J` (flip), `1 - tr J + det J` (fold) and
//! `1 - det J` (Neimark-Sacker). With extrapolators the lag `e_prev` is a
//! third coordinate; the characteristic polynomial is
//! `λ³ + aλ² + bλ + c` and the conditions are
//! `1+a+b+c` (fold), `1-a+b-c` (flip), `1-b+ac-c²` (Neimark-Sacker) and `3-b`.
//!
//! Besides the generic trace/determinant route, the closed forms of the
//! conditions at the outer equilibria are exposed ([`flip_condition`],
//! [`ns_condition`] and the extrapolator shifts) so that the two can be
//! checked against each other.

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Axis, MarketState, ModelParams};

/// Distance from zero below which a condition is treated as on the boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumLabel {
    P1,
    P2,
    P3,
}

impl std::fmt::Display for EquilibriumLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EquilibriumLabel::P1 => "P1",
            EquilibriumLabel::P2 => "P2",
            EquilibriumLabel::P3 => "P3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stable,
    Unstable,
    Saddle,
    BoundaryFlip,
    BoundaryNs,
    BoundaryFold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dim", rename_all = "snake_case")]
pub enum Jacobian {
    Planar { m: [[f64; 2]; 2] },
    Lagged { m: [[f64; 3]; 3] },
}

impl Jacobian {
    pub fn planar(&self) -> Option<Matrix2<f64>> {
        match self {
            Jacobian::Planar { m } => Some(Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])),
            Jacobian::Lagged { .. } => None,
        }
    }

    pub fn lagged(&self) -> Option<Matrix3<f64>> {
        match self {
            Jacobian::Lagged { m } => Some(Matrix3::from_fn(|r, c| m[r][c])),
            Jacobian::Planar { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Jacobian::Planar { .. } => 2,
            Jacobian::Lagged { .. } => 3,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        match self {
            Jacobian::Planar { m } => m[row][col],
            Jacobian::Lagged { m } => m[row][col],
        }
    }
}

/// Local stability conditions; an equilibrium is stable iff all are positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dim", rename_all = "snake_case")]
pub enum ConditionSet {
    Planar {
        /// `1 + tr J + det J`
        i: f64,
        /// `1 - tr J + det J`
        ii: f64,
        /// `1 - det J`
        iii: f64,
        /// Closed-form flip condition at P2/P3 (absent at P1).
        #[serde(rename = "A")]
        a: Option<f64>,
        /// Closed-form Neimark-Sacker condition at P2/P3 (absent at P1).
        #[serde(rename = "B")]
        b: Option<f64>,
    },
    Cubic {
        /// `1 + a + b + c`
        c1: f64,
        /// `1 - a + b - c`
        c2: f64,
        /// `1 - b + ac - c²`
        c3: f64,
        /// `3 - b`
        c4: f64,
        coef_a: f64,
        coef_b: f64,
        coef_c: f64,
    },
}

impl ConditionSet {
    /// Condition whose sign change means an eigenvalue crossing -1.
    pub fn flip(&self) -> f64 {
        match *self {
            ConditionSet::Planar { i, .. } => i,
            ConditionSet::Cubic { c2, .. } => c2,
        }
    }

    /// Condition whose sign change means an eigenvalue crossing +1.
    pub fn fold(&self) -> f64 {
        match *self {
            ConditionSet::Planar { ii, .. } => ii,
            ConditionSet::Cubic { c1, .. } => c1,
        }
    }

    /// Condition whose sign change means complex eigenvalues crossing the unit circle.
    pub fn ns(&self) -> f64 {
        match *self {
            ConditionSet::Planar { iii, .. } => iii,
            ConditionSet::Cubic { c3, .. } => c3,
        }
    }

    /// Auxiliary cubic condition `3 - b` (absent in the planar case).
    pub fn aux(&self) -> Option<f64> {
        match *self {
            ConditionSet::Planar { .. } => None,
            ConditionSet::Cubic { c4, .. } => Some(c4),
        }
    }

    fn all(&self) -> impl Iterator<Item = f64> {
        [Some(self.flip()), Some(self.fold()), Some(self.ns()), self.aux()].into_iter().flatten()
    }

    pub fn all_positive(&self) -> bool {
        self.all().all(|v| v > BOUNDARY_TOLERANCE)
    }

    pub fn min(&self) -> f64 {
        self.all().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub label: EquilibriumLabel,
    pub e_bar: f64,
    pub dy_bar: f64,
    pub jacobian: Jacobian,
    pub eigenvalues: Vec<Complex64>,
    pub conditions: ConditionSet,
    pub classification: Classification,
}

impl Equilibrium {
    pub fn state(&self) -> MarketState {
        MarketState::at_rest(self.e_bar, self.dy_bar)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    /// Chartists without fundamentalists: the outer equilibria are undefined.
    OuterEquilibriaUndefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub points: Vec<Equilibrium>,
    pub diagnostics: Vec<Diagnostic>,
}

impl EquilibriumSet {
    pub fn get(&self, label: EquilibriumLabel) -> Option<&Equilibrium> {
        self.points.iter().find(|p| p.label == label)
    }
}

/// `(w_c / w_f)^(1/2)`, the distance of P2/P3 from P1, when it exists.
pub fn outer_offset(params: &ModelParams) -> Option<f64> {
    (params.w_c > 0.0 && params.w_f > 0.0).then(|| (params.w_c / params.w_f).sqrt())
}

/// Location of an equilibrium, or `None` when it does not exist.
pub fn location(params: &ModelParams, label: EquilibriumLabel) -> Option<(f64, f64)> {
    let e1 = params.central_rate();
    match label {
        EquilibriumLabel::P1 => Some((e1, params.dy_bp)),
        EquilibriumLabel::P2 => outer_offset(params).map(|r| (e1 + r, params.dy_bp)),
        EquilibriumLabel::P3 => outer_offset(params).map(|r| (e1 - r, params.dy_bp)),
    }
}

/// All equilibria, fully classified.
pub fn equilibria(params: &ModelParams) -> EquilibriumSet {
    let mut diagnostics = Vec::new();
    if params.w_c > 0.0 && params.w_f == 0.0 {
        diagnostics.push(Diagnostic::OuterEquilibriaUndefined);
    }
    let points = [EquilibriumLabel::P1, EquilibriumLabel::P2, EquilibriumLabel::P3]
        .into_iter()
        .filter_map(|label| {
            let (e_bar, dy_bar) = location(params, label)?;
            Some(build(params, label, e_bar, dy_bar))
        })
        .collect();
    EquilibriumSet { points, diagnostics }
}

fn build(params: &ModelParams, label: EquilibriumLabel, e_bar: f64, dy_bar: f64) -> Equilibrium {
    let jacobian = jacobian_at(params, (e_bar, dy_bar));
    let eigenvalues = eigenvalues(&jacobian);
    let conditions = conditions_for(params, &jacobian, label != EquilibriumLabel::P1);
    let eq = Equilibrium {
        label,
        e_bar,
        dy_bar,
        jacobian,
        eigenvalues,
        conditions,
        classification: Classification::Unstable,
    };
    stability(params, eq)
}

/// Slope of the speculative trade in `e` and `dy` at a point, excluding
/// the extrapolator term: `(-3 w_f g² + w_c, Ω(-3 w_f g² + w_c))` with
/// `g = -e - Ω dy`.
fn trade_slopes(params: &ModelParams, e: f64, dy: f64) -> (f64, f64) {
    let g = -e - params.omega * dy;
    let de = -3.0 * params.w_f * g * g + params.w_c;
    (de, params.omega * de)
}

/// Analytic Jacobian at `point = (e, dy)`; 3×3 in `(e, dy, e_prev)` when
/// extrapolators are present, 2×2 in `(e, dy)` otherwise.
pub fn jacobian_at(params: &ModelParams, point: (f64, f64)) -> Jacobian {
    if params.has_extrapolators() {
        let m = lagged_jacobian(params, point);
        Jacobian::Lagged { m: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)])) }
    } else {
        let m = planar_jacobian(params, point);
        Jacobian::Planar { m: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]] }
    }
}

pub fn planar_jacobian(params: &ModelParams, (e, dy): (f64, f64)) -> Matrix2<f64> {
    let s = params.reaction();
    let kb = params.adjustment();
    let g = params.gamma();
    let (de, ddy) = trade_slopes(params, e, dy);
    Matrix2::new(1.0 + s * de, s * ddy, -kb * g * de, 1.0 - kb * g * ddy - kb)
}

/// 3×3 Jacobian in `(e, dy, e_prev)`; valid for any `w_e`, including zero.
///
/// The growth row sees the lagged rate through `-γ S`, so its last entry is
/// `+w_flex β γ w_e`, not `-w_flex β w_e`.
pub fn lagged_jacobian(params: &ModelParams, (e, dy): (f64, f64)) -> Matrix3<f64> {
    let s = params.reaction();
    let kb = params.adjustment();
    let g = params.gamma();
    let we = params.w_e;
    let (de, ddy) = trade_slopes(params, e, dy);
    let d_e = de + we;
    // nalgebra's `new` takes row-major arguments.
    Matrix3::new(
        1.0 + s * d_e,
        s * ddy,
        -s * we,
        -kb * g * d_e,
        1.0 - kb * g * ddy - kb,
        kb * g * we,
        1.0,
        0.0,
        0.0,
    )
}

/// Characteristic coefficients `(a, b, c)` of `λ³ + aλ² + bλ + c` for a
/// Jacobian with last row `(1, 0, 0)`, using the principal-minor formulas.
pub fn cubic_coefficients(j: &Matrix3<f64>) -> (f64, f64, f64) {
    let a = -j[(0, 0)] - j[(1, 1)];
    let b = -j[(0, 2)] + j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
    let c = -j[(0, 1)] * j[(1, 2)] + j[(0, 2)] * j[(1, 1)];
    (a, b, c)
}

fn cubic_conditions((a, b, c): (f64, f64, f64)) -> ConditionSet {
    ConditionSet::Cubic {
        c1: 1.0 + a + b + c,
        c2: 1.0 - a + b - c,
        c3: 1.0 - b + a * c - c * c,
        c4: 3.0 - b,
        coef_a: a,
        coef_b: b,
        coef_c: c,
    }
}

fn conditions_for(params: &ModelParams, jac: &Jacobian, outer: bool) -> ConditionSet {
    match jac {
        Jacobian::Planar { .. } => {
            let m = jac.planar().expect("planar");
            let tr = m.trace();
            let det = m.determinant();
            ConditionSet::Planar {
                i: 1.0 + tr + det,
                ii: 1.0 - tr + det,
                iii: 1.0 - det,
                a: outer.then(|| flip_condition(params)),
                b: outer.then(|| ns_condition(params)),
            }
        }
        Jacobian::Lagged { .. } => cubic_conditions(cubic_coefficients(&jac.lagged().expect("lagged"))),
    }
}

/// Eigenvalues of the Jacobian: closed form for 2×2, Schur for 3×3.
pub fn eigenvalues(jac: &Jacobian) -> Vec<Complex64> {
    match jac {
        Jacobian::Planar { .. } => {
            let m = jac.planar().expect("planar");
            let tr = m.trace();
            let det = m.determinant();
            let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
            let half = Complex64::new(tr / 2.0, 0.0);
            vec![half + disc, half - disc]
        }
        Jacobian::Lagged { .. } => {
            let m = jac.lagged().expect("lagged");
            match m.complex_eigenvalues().iter().copied().collect::<Vec<_>>() {
                v if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => v,
                _ => cubic_roots(cubic_coefficients(&m)),
            }
        }
    }
}

/// Roots of `λ³ + aλ² + bλ + c` by Durand-Kerner; used only when the Schur
/// iteration fails to converge.
fn cubic_roots((a, b, c): (f64, f64, f64)) -> Vec<Complex64> {
    let p = |z: Complex64| ((z + a) * z + b) * z + c;
    let mut r = [Complex64::new(0.4, 0.9), Complex64::new(0.4, 0.9).powu(2), Complex64::new(0.4, 0.9).powu(3)];
    for _ in 0..500 {
        let prev = r;
        for k in 0..3 {
            let mut denom = Complex64::new(1.0, 0.0);
            for m in 0..3 {
                if m != k {
                    denom *= r[k] - r[m];
                }
            }
            r[k] -= p(r[k]) / denom;
        }
        if (0..3).all(|k| (r[k] - prev[k]).norm() < 1e-15) {
            break;
        }
    }
    r.to_vec()
}

/// Fills in the classification of `eq` from its stability conditions.
///
/// A condition within [`BOUNDARY_TOLERANCE`] of zero, with none negative,
/// marks a bifurcation boundary. Otherwise the equilibrium is stable when
/// all conditions are positive, and saddle or unstable according to the
/// eigenvalue moduli.
pub fn stability(_params: &ModelParams, mut eq: Equilibrium) -> Equilibrium {
    eq.classification = classify(&eq.conditions, &eq.eigenvalues);
    eq
}

fn classify(cond: &ConditionSet, eigs: &[Complex64]) -> Classification {
    let tol = BOUNDARY_TOLERANCE;
    if cond.all_positive() {
        return Classification::Stable;
    }
    if cond.min() >= -tol {
        if cond.fold().abs() <= tol {
            return Classification::BoundaryFold;
        }
        if cond.flip().abs() <= tol {
            return Classification::BoundaryFlip;
        }
        return Classification::BoundaryNs;
    }
    let inside = eigs.iter().filter(|l| l.norm() < 1.0).count();
    let outside = eigs.iter().filter(|l| l.norm() > 1.0).count();
    if inside > 0 && outside > 0 {
        Classification::Saddle
    } else {
        Classification::Unstable
    }
}

/// Closed-form flip condition at P2/P3 without extrapolators:
/// `4 - 4(μ+ρ)w_c + 2[(μ+ρ+2γΩ)w_c - 1] w_flex β`.
pub fn flip_condition(p: &ModelParams) -> f64 {
    let s = p.reaction();
    4.0 - 4.0 * s * p.w_c + 2.0 * ((s + 2.0 * p.gamma() * p.omega) * p.w_c - 1.0) * p.adjustment()
}

/// Closed-form Neimark-Sacker condition at P2/P3 without extrapolators:
/// `(1 - 2γΩw_c) w_flex β + 2(μ+ρ)w_c(1 - w_flex β)`.
pub fn ns_condition(p: &ModelParams) -> f64 {
    let s = p.reaction();
    let kb = p.adjustment();
    (1.0 - 2.0 * p.gamma() * p.omega * p.w_c) * kb + 2.0 * s * p.w_c * (1.0 - kb)
}

/// Factor `1 - Ω w_e (1 + γ)` that the fold condition at P2/P3 acquires when
/// the growth row's lag entry is taken as `-w_flex β w_e`. Kept for
/// comparison only: the map's fold condition does not depend on `w_e`, see
/// [`fold_condition`].
pub fn fold_factor(p: &ModelParams) -> f64 {
    1.0 - p.omega * p.w_e * (1.0 + p.gamma())
}

/// Fold condition at P2/P3, `2(μ+ρ) w_c w_flex β`, for any `w_e`.
pub fn fold_condition(p: &ModelParams) -> f64 {
    2.0 * p.reaction() * p.w_c * p.adjustment()
}

/// Shift of the flip condition due to extrapolators, so that the cubic flip
/// condition at P2/P3 is `A + A₁`, with `A₁ = 2(μ+ρ) w_e (2 - w_flex β)`.
pub fn flip_shift(p: &ModelParams) -> f64 {
    2.0 * p.reaction() * p.w_e * (2.0 - p.adjustment())
}

/// Shift of the Neimark-Sacker condition due to extrapolators, so that the
/// cubic condition `1 - b + ac - c²` at P2/P3 is `B + B₁`, with
/// `B₁ = (μ+ρ) w_e [(1 - w_flex β)(2γΩ w_c w_flex β - 2(μ+ρ) w_c) - w_flex β (2 - w_flex β)]
///      + (μ+ρ)² w_flex β (1 - w_flex β) w_e²`.
pub fn ns_shift(p: &ModelParams) -> f64 {
    let s = p.reaction();
    let kb = p.adjustment();
    let we = p.w_e;
    let linear = (1.0 - kb) * (2.0 * p.gamma() * p.omega * p.w_c * kb - 2.0 * s * p.w_c) - kb * (2.0 - kb);
    s * we * linear + s * s * kb * (1.0 - kb) * we * we
}

/// Maps a value of one free parameter to the stability conditions at the
/// outer equilibria P2/P3 (both share the same conditions by symmetry).
#[derive(Debug, Clone, Copy)]
pub struct ConditionSurface {
    base: ModelParams,
    axis: Axis,
}

impl ConditionSurface {
    pub fn new(base: ModelParams, free: &str) -> Result<Self> {
        Ok(Self { base, axis: free.parse()? })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn params_at(&self, value: f64) -> Result<ModelParams> {
        self.base.with(self.axis, value)
    }

    /// Conditions at P2 with the free parameter set to `value`.
    pub fn eval(&self, value: f64) -> Result<ConditionSet> {
        let p = self.params_at(value)?;
        outer_conditions(&p)
    }
}

/// Stability conditions at P2/P3.
pub fn outer_conditions(p: &ModelParams) -> Result<ConditionSet> {
    let (e, dy) = location(p, EquilibriumLabel::P2).ok_or(Error::NoOuterEquilibria { w_f: p.w_f, w_c: p.w_c })?;
    Ok(conditions_for(p, &jacobian_at(p, (e, dy)), true))
}

/// Cubic conditions at P2/P3 from the 3×3 embedding, for any `w_e`
/// (with `w_e = 0` the extra eigenvalue is zero).
pub fn outer_cubic_conditions(p: &ModelParams) -> Result<ConditionSet> {
    let point = location(p, EquilibriumLabel::P2).ok_or(Error::NoOuterEquilibria { w_f: p.w_f, w_c: p.w_c })?;
    Ok(cubic_conditions(cubic_coefficients(&lagged_jacobian(p, point))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::advance;

    fn table1() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn single_equilibrium_without_chartists() {
        let p = ModelParams { w_f: 1.0, w_c: 0.0, ..table1() };
        let set = equilibria(&p);
        assert_eq!(set.points.len(), 1);
        let p1 = &set.points[0];
        assert_eq!(p1.label, EquilibriumLabel::P1);
        assert!((p1.e_bar + 3e-7).abs() < 1e-20);
        assert_eq!(p1.dy_bar, 3e-5);
    }

    #[test]
    fn outer_equilibria_positions() {
        let set = equilibria(&table1());
        assert_eq!(set.points.len(), 3);
        let e2 = set.get(EquilibriumLabel::P2).unwrap().e_bar;
        let e3 = set.get(EquilibriumLabel::P3).unwrap().e_bar;
        assert!((e2 - (-3e-7 + 0.333_333_333_333_333_3)).abs() < 1e-15);
        assert!((e3 - (-3e-7 - 0.333_333_333_333_333_3)).abs() < 1e-15);
        assert!((e2 + e3 - 2.0 * -3e-7).abs() < 1e-12);
    }

    #[test]
    fn extrapolators_without_chartists_give_p1_only() {
        let p = ModelParams { w_f: 0.9, w_c: 0.0, w_e: 0.1, ..table1() };
        let set = equilibria(&p);
        assert_eq!(set.points.len(), 1);
        assert_eq!(set.points[0].jacobian.dim(), 3);
    }

    #[test]
    fn pure_chartism_flags_missing_outer_points() {
        let p = ModelParams { w_f: 0.0, w_c: 1.0, ..table1() };
        let set = equilibria(&p);
        assert_eq!(set.points.len(), 1);
        assert_eq!(set.diagnostics, vec![Diagnostic::OuterEquilibriaUndefined]);
        // Unstable as hand-derived for this case: j11 = 1 + (μ+ρ) > 1.
        assert_ne!(set.points[0].classification, Classification::Stable);
        assert!(set.points[0].spectral_radius() > 1.0);
    }

    #[test]
    fn jacobian_entries_at_p1_and_outer_points() {
        let p = table1();
        let j = jacobian_at(&p, location(&p, EquilibriumLabel::P1).unwrap());
        assert!((j.entry(0, 0) - 1.9).abs() < 1e-12);
        assert!((j.entry(0, 1) - 0.009).abs() < 1e-12);
        assert!((j.entry(1, 0) + p.adjustment() * p.gamma() * p.w_c).abs() < 1e-12);

        let j = jacobian_at(&p, location(&p, EquilibriumLabel::P2).unwrap());
        let s = p.reaction();
        assert!((j.entry(0, 0) - (1.0 - 2.0 * s * p.w_c)).abs() < 1e-12);
        assert!((j.entry(0, 1) + 2.0 * s * p.omega * p.w_c).abs() < 1e-12);
        assert!((j.entry(1, 0) - 2.0 * p.adjustment() * p.gamma() * p.w_c).abs() < 1e-12);
        let j22 = 1.0 - p.adjustment() * (1.0 - 2.0 * p.gamma() * p.omega * p.w_c);
        assert!((j.entry(1, 1) - j22).abs() < 1e-12);
    }

    #[test]
    fn fundamentalists_only_p1_is_fold_boundary() {
        let p = ModelParams { w_f: 1.0, w_c: 0.0, ..table1() };
        let eq = &equilibria(&p).points[0];
        let ConditionSet::Planar { i, ii, iii, .. } = eq.conditions else { panic!() };
        assert!(i > 0.0 && iii > 0.0);
        assert!(ii.abs() < 1e-15);
        assert_eq!(eq.classification, Classification::BoundaryFold);
    }

    #[test]
    fn table1_classification() {
        let set = equilibria(&table1());
        assert_eq!(set.get(EquilibriumLabel::P1).unwrap().classification, Classification::Saddle);
        assert_eq!(set.get(EquilibriumLabel::P2).unwrap().classification, Classification::Stable);
        assert_eq!(set.get(EquilibriumLabel::P3).unwrap().classification, Classification::Stable);
    }

    #[test]
    fn ns_condition_value_panel_a() {
        assert!((ns_condition(&table1()) - 1.79179).abs() < 1e-12);
    }

    #[test]
    fn flip_condition_changes_sign_past_onset() {
        let p = table1();
        assert!(flip_condition(&ModelParams { mu: 5.5, ..p }) > 0.0);
        assert!(flip_condition(&ModelParams { mu: 5.502, ..p }) < 0.0);
        assert!(flip_condition(&ModelParams { mu: 6.0, ..p }) < 0.0);
    }

    #[test]
    fn surface_near_flip_root() {
        let surf = ConditionSurface::new(table1(), "mu").unwrap();
        assert!(surf.eval(5.501).unwrap().flip().abs() < 1e-3);
        assert!(ConditionSurface::new(table1(), "lambda").is_err());
    }

    #[test]
    fn surface_over_extrapolator_share_reduces_to_planar() {
        let base = ModelParams { w_f: 0.8, w_c: 0.2, ..table1() };
        let surf = ConditionSurface::new(base, "w_e").unwrap();
        let cubic = outer_cubic_conditions(&surf.params_at(0.0).unwrap()).unwrap();
        let planar = surf.eval(0.0).unwrap();
        let p = surf.params_at(0.0).unwrap();
        assert!((cubic.flip() - flip_condition(&p)).abs() < 1e-12);
        assert!((cubic.ns() - ns_condition(&p)).abs() < 1e-12);
        assert!((planar.flip() - flip_condition(&p)).abs() < 1e-12);
        assert!((planar.ns() - ns_condition(&p)).abs() < 1e-12);
    }

    #[test]
    fn fold_factor_value() {
        let p = ModelParams { omega: 0.01, w_f: 0.8, w_c: 0.1, w_e: 0.1, ..table1() };
        assert!((p.gamma() - 10.5).abs() < 1e-12);
        assert!((fold_factor(&p) - 0.9885).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_cubic_route_with_extrapolators() {
        for (mu, we) in [(4.0, 0.05), (8.0, 0.01), (12.0, 0.09), (0.5, 0.1)] {
            let p = ModelParams { mu, w_f: 0.8, w_c: 0.2 - we, w_e: we, ..table1() };
            let c = outer_conditions(&p).unwrap();
            let scale = 1.0 + flip_condition(&p).abs() + flip_shift(&p).abs();
            assert!((c.flip() - (flip_condition(&p) + flip_shift(&p))).abs() < 1e-12 * scale);
            assert!((c.ns() - (ns_condition(&p) + ns_shift(&p))).abs() < 1e-11 * (1.0 + ns_shift(&p).abs()));
            assert!((c.fold() - fold_condition(&p)).abs() < 1e-13);
        }
    }

    #[test]
    fn fixed_points_have_zero_residual() {
        for p in [
            table1(),
            ModelParams { mu: 3.5, w_f: 0.9, w_c: 0.0, w_e: 0.1, ..table1() },
            ModelParams { mu: 4.0, w_f: 0.85, w_c: 0.05, w_e: 0.1, ..table1() },
        ] {
            for eq in equilibria(&p).points {
                let s = eq.state();
                let next = advance(&s, 0.0, &p);
                assert!(next.distance(&s) < 1e-12, "{:?} {:?}", eq.label, next);
            }
        }
    }

    #[test]
    fn cubic_roots_fallback_agrees_with_schur() {
        let p = ModelParams { mu: 4.0, w_f: 0.85, w_c: 0.05, w_e: 0.1, ..table1() };
        let j = lagged_jacobian(&p, location(&p, EquilibriumLabel::P2).unwrap());
        let mut a: Vec<f64> = j.complex_eigenvalues().iter().map(|z| z.norm()).collect();
        let mut b: Vec<f64> = cubic_roots(cubic_coefficients(&j)).iter().map(|z| z.norm()).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
