//! Fixtures shared by the criterion benchmarks in `benches/`.

use fxdyn_core::estimator::{hp_apply, hp_filter, MacroRow, HP_LAMBDA};
use fxdyn_core::MacroDataset;

/// Deterministic annual dataset of `n` years with a slowly drifting elasticity.
pub fn macro_fixture(n: usize) -> MacroDataset {
    let y: Vec<f64> = (0..n).map(|t| 25.0 + 0.03 * t as f64 + 0.02 * (0.4 * t as f64).sin()).collect();
    let rer: Vec<f64> = (0..n).map(|t| 0.1 * (0.15 * t as f64).cos() + 0.03 * (1.1 * t as f64).sin()).collect();
    let y_trend = hp_filter(&y, HP_LAMBDA).expect("fixture is long enough").trend;
    let target: Vec<f64> = (0..n)
        .map(|t| {
            let pi = 2.0 + 0.3 * (t as f64 / n as f64);
            1.1 * rer[t] + pi * y_trend[t] + 0.01 * (2.3 * t as f64).sin()
        })
        .collect();
    let m = hp_apply(&target, HP_LAMBDA);
    let rows = (0..n)
        .map(|t| MacroRow { year: 1950 + t as i32, y: y[t], m: m[t], z: 20.0 + 0.05 * t as f64, rer: rer[t] })
        .collect();
    MacroDataset::new(rows).expect("fixture is valid")
}
