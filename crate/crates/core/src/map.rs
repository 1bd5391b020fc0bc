//! One-step transition of the model.
//!
//! All functions are pure and do not validate `params`; callers that take
//! parameters from the outside go through [`ModelParams::validate`] first.

use crate::params::{MarketState, ModelParams};

/// Map output that left the representable range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub state: MarketState,
}

/// Expected fundamental `-omega * dy_prev + eps` (the PPP anchor is zero).
#[inline]
pub fn expected_fundamental(dy_prev: f64, eps: f64, params: &ModelParams) -> f64 {
    -params.omega * dy_prev + eps
}

/// Aggregate speculative excess demand for foreign currency:
/// `w_f (E[f] - e)^3 + w_c (e - E[f]) + w_e (e - e_prev)`.
#[inline]
pub fn speculative_trade(state: &MarketState, eps: f64, params: &ModelParams) -> f64 {
    let gap = state.e - expected_fundamental(state.dy, eps, params);
    -params.w_f * gap * gap * gap + params.w_c * gap + params.w_e * (state.e - state.e_prev)
}

/// Output growth that clears the FX market given current speculative trade.
pub fn market_clearing_growth(state: &MarketState, eps: f64, params: &ModelParams) -> f64 {
    let s = speculative_trade(state, eps, params);
    let pi = params.pi_elasticity;
    params.non_speculative_supply_growth() / pi
        - ((1.0 - params.theta) / params.theta) * (params.reaction() / pi) * s
}

/// Advances the map one step without checking the result.
///
/// Both equations see the same shock `eps`, since both are driven by the same
/// expected fundamental.
#[inline]
pub fn advance(state: &MarketState, eps: f64, params: &ModelParams) -> MarketState {
    let s = speculative_trade(state, eps, params);
    MarketState {
        e: state.e + params.reaction() * s,
        dy: state.dy + params.adjustment() * (params.dy_bp - params.gamma() * s - state.dy),
        e_prev: state.e,
    }
}

/// Advances the map one step, reporting non-finite output as a [`Divergence`].
#[inline]
pub fn step(state: &MarketState, eps: f64, params: &ModelParams) -> Result<MarketState, Divergence> {
    let next = advance(state, eps, params);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Divergence { state: next })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fundamentalists_only() -> ModelParams {
        ModelParams { w_f: 1.0, w_c: 0.0, w_e: 0.0, ..Default::default() }
    }

    #[test]
    fn expected_fundamental_examples() {
        let p = ModelParams::default();
        assert_eq!(expected_fundamental(0.0, 0.0, &p), 0.0);
        assert!((expected_fundamental(0.00003, 0.0, &p) + 3.0e-7).abs() < 1e-20);
        assert_eq!(expected_fundamental(0.0, 0.005, &p), 0.005);
    }

    #[test]
    fn no_trade_when_expectations_met() {
        let p = ModelParams { w_e: 0.05, w_c: 0.05, ..Default::default() };
        let ef = expected_fundamental(0.01, 0.002, &p);
        let s = MarketState::new(ef, 0.01, ef);
        assert_eq!(speculative_trade(&s, 0.002, &p), 0.0);
    }

    #[test]
    fn cubic_trade_hand_value() {
        let p = fundamentalists_only();
        let s = MarketState::at_rest(0.1, 0.0);
        assert!((speculative_trade(&s, 0.0, &p) + 0.001).abs() < 1e-15);
    }

    #[test]
    fn trade_vanishes_at_outer_offset() {
        let p = ModelParams::default();
        let ef = expected_fundamental(0.0, 0.0, &p);
        let s = MarketState::at_rest(ef + (1.0f64 / 9.0).sqrt(), 0.0);
        assert!(speculative_trade(&s, 0.0, &p).abs() < 1e-16);
    }

    #[test]
    fn step_hand_arithmetic() {
        let p = fundamentalists_only();
        assert!((p.gamma() - 10.5).abs() < 1e-12);
        let next = step(&MarketState::at_rest(0.1, 0.0), 0.0, &p).unwrap();
        assert!((next.e - 0.091).abs() < 1e-15);
        assert!((next.dy - 1.053e-4).abs() < 1e-16);
        assert_eq!(next.e_prev, 0.1);
    }

    #[test]
    fn market_clearing_examples() {
        let p = ModelParams::default();
        let ef = expected_fundamental(0.0, 0.0, &p);
        let rest = MarketState::at_rest(ef, 0.0);
        assert!((market_clearing_growth(&rest, 0.0, &p) - p.dy_bp).abs() < 1e-18);

        // S = -0.001 with fundamentalists only: (1-θ)/θ · (μ+ρ)/π · 0.001 = 0.0105.
        let p = fundamentalists_only();
        let g = market_clearing_growth(&MarketState::at_rest(0.1, 0.0), 0.0, &p);
        assert!((g - (p.dy_bp + 0.0105)).abs() < 1e-15);

        let p = ModelParams { mu: 0.0, rho: 0.0, ..Default::default() };
        let g = market_clearing_growth(&MarketState::at_rest(0.4, 0.2), 0.3, &p);
        assert!((g - p.dy_bp).abs() < 1e-18);
    }

    #[test]
    fn divergence_is_reported() {
        let p = ModelParams::default();
        let r = step(&MarketState::at_rest(1e120, 0.0), 0.0, &p);
        assert!(r.is_err());
    }

    fn arb_params() -> impl Strategy<Value = ModelParams> {
        (0.0..15.0f64, 0.1..10.0f64, 0.5..1.0f64, 0.0..1.0f64, 0.01..0.99f64, 0.01..0.99f64, 0.001..0.5f64, 0.05..0.95f64, 0.5..4.0f64)
            .prop_map(|(mu, rho, w_f, split, wflex, beta, omega, theta, pi)| {
                let rest = 1.0 - w_f;
                ModelParams {
                    mu,
                    rho,
                    w_f,
                    w_c: rest * split,
                    w_e: rest - rest * split,
                    wflex,
                    beta,
                    omega,
                    theta,
                    pi_elasticity: pi,
                    dy_bp: 3e-5,
                    dz_ns: None,
                    sigma: 0.0,
                }
            })
    }

    proptest! {
        #[test]
        fn growth_equation_matches_market_clearing(
            p in arb_params(), e in -1.0..1.0f64, dy in -0.01..0.01f64, lag in -1.0..1.0f64, eps in -0.05..0.05f64
        ) {
            let st = MarketState::new(e, dy, lag);
            let next = advance(&st, eps, &p);
            let lhs = next.dy - st.dy;
            let mc = market_clearing_growth(&st, eps, &p);
            let rhs = p.adjustment() * (mc - st.dy);
            let scale = p.adjustment() * (mc.abs() + st.dy.abs() + p.gamma() * speculative_trade(&st, eps, &p).abs()) + st.dy.abs();
            prop_assert!((lhs - rhs).abs() <= 1e-14 * scale.max(1e-300), "{lhs} vs {rhs}");
        }

        #[test]
        fn trade_is_odd_around_fundamental(p in arb_params(), u in -2.0..2.0f64, dy in -0.01..0.01f64) {
            let p = ModelParams { w_e: 0.0, w_c: 1.0 - p.w_f, ..p };
            let ef = expected_fundamental(dy, 0.0, &p);
            let up = MarketState::at_rest(ef + u, dy);
            let down = MarketState::at_rest(ef - u, dy);
            let a = speculative_trade(&up, 0.0, &p);
            let b = speculative_trade(&down, 0.0, &p);
            prop_assert!((a + b).abs() <= 1e-12 * (a.abs() + 1e-12));
        }

        #[test]
        fn lag_is_irrelevant_without_extrapolators(p in arb_params(), e in -1.0..1.0f64, dy in -0.01..0.01f64, l1 in -1.0..1.0f64, l2 in -1.0..1.0f64) {
            let p = ModelParams { w_e: 0.0, w_c: 1.0 - p.w_f, ..p };
            let a = advance(&MarketState::new(e, dy, l1), 0.0, &p);
            let b = advance(&MarketState::new(e, dy, l2), 0.0, &p);
            prop_assert_eq!(a.e, b.e);
            prop_assert_eq!(a.dy, b.dy);
        }
    }
}
