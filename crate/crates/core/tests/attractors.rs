use fxdyn_core::basins::{alternations, cell_center};
use fxdyn_core::bifurcation::{attractor_sample, distinct_values, CLUSTER_TOLERANCE};
use fxdyn_core::{
    basin_grid, equilibria, sweep, Axis, BasinClass, BasinWindow, EquilibriumLabel, MarketState, ModelParams,
    OrbitCaps, SweepProtocol,
};

fn deterministic() -> ModelParams {
    ModelParams { sigma: 0.0, ..ModelParams::default() }
}

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

#[test]
fn basin_grid_does_not_depend_on_worker_count() {
    let p = deterministic();
    let window = BasinWindow::around_central(&p, 0.7, 0.5);
    let caps = OrbitCaps::default();
    let one = pool(1).install(|| basin_grid(&p, window, 40, 41, &caps).unwrap());
    let many = pool(6).install(|| basin_grid(&p, window, 40, 41, &caps).unwrap());
    assert_eq!(one.classes, many.classes);
}

#[test]
fn tripled_grid_agrees_on_shared_cell_centres() {
    let p = deterministic();
    let window = BasinWindow::around_central(&p, 0.7, 0.5);
    let caps = OrbitCaps::default();
    let (nx, ny) = (21, 21);
    let coarse = basin_grid(&p, window, nx, ny, &caps).unwrap();
    let fine = basin_grid(&p, window, 3 * nx, 3 * ny, &caps).unwrap();
    for j in 0..ny {
        for i in 0..nx {
            let (fi, fj) = (3 * i + 1, 3 * j + 1);
            assert!((cell_center(window.e, i, nx) - cell_center(window.e, fi, 3 * nx)).abs() < 1e-15);
            assert_eq!(coarse.class(i, j), fine.class(fi, fj), "cell ({i}, {j})");
        }
    }
    // Refinement can only reveal more structure along the central row.
    assert!(alternations(fine.row(3 * ny / 2)) >= alternations(coarse.row(ny / 2)));
}

#[test]
fn basins_are_point_symmetric_without_extrapolators() {
    let p = deterministic();
    let grid = basin_grid(&p, BasinWindow::around_central(&p, 0.7, 0.5), 61, 61, &OrbitCaps::default()).unwrap();
    assert_eq!(grid.mirror_mismatches(), 0);
    assert!(grid.count(BasinClass::P2) > 0 && grid.count(BasinClass::P2) == grid.count(BasinClass::P3));
}

#[test]
fn equilibria_attract_their_own_neighbourhood() {
    let p = deterministic();
    let grid = basin_grid(&p, BasinWindow::around_central(&p, 0.7, 0.5), 30, 31, &OrbitCaps::default()).unwrap();
    let set = equilibria(&p);
    for (label, class) in [(EquilibriumLabel::P2, BasinClass::P2), (EquilibriumLabel::P3, BasinClass::P3)] {
        let eq = set.get(label).unwrap();
        let i = grid.e_centers().iter().position(|&e| (e - eq.e_bar).abs() < 0.7 / 30.0).unwrap();
        let j = grid.dy_centers().iter().position(|&d| (d - eq.dy_bar).abs() < 0.5 / 31.0).unwrap();
        assert_eq!(grid.class(i, j), class);
    }
}

#[test]
fn period_doubles_past_flip_root() {
    let protocol = SweepProtocol { transient: 200_000, samples: 64, ..SweepProtocol::default() };
    let res = sweep(&deterministic(), Axis::Mu, 5.49, 5.52, 4, &protocol).unwrap();
    let periods: Vec<usize> = res
        .points
        .iter()
        .map(|pt| pt.branches.iter().filter_map(|b| b.distinct(CLUSTER_TOLERANCE)).max().unwrap())
        .collect();
    assert_eq!(periods, vec![1, 1, 2, 2]);
    assert_eq!(res.first_nonstationary(CLUSTER_TOLERANCE), Some(2));
    assert_eq!(res.first_flip_crossing(), Some(2));
}

#[test]
fn outer_branches_mirror_each_other() {
    let p = ModelParams { mu: 7.0, ..deterministic() };
    let protocol = SweepProtocol { transient: 5_000, samples: 32, offset: (0.0, 0.0), ..SweepProtocol::default() };
    let e1 = p.central_rate();
    let r = (p.w_c / p.w_f).sqrt();
    let up = attractor_sample(&p, MarketState::at_rest(e1 + r + 1e-3, p.dy_bp), &protocol).unwrap();
    let down = attractor_sample(&p, MarketState::at_rest(e1 - r - 1e-3, p.dy_bp), &protocol).unwrap();
    let mut a: Vec<f64> = up.iter().map(|e| e - e1).collect();
    let mut b: Vec<f64> = down.iter().map(|e| e1 - e).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    assert_eq!(distinct_values(&a, CLUSTER_TOLERANCE), distinct_values(&b, CLUSTER_TOLERANCE));
}

#[test]
fn extrapolators_outnumbering_chartists_explode() {
    // Chartists replaced by extrapolators at fixed fundamentalist share.
    let base = ModelParams { mu: 4.0, w_f: 0.8, w_c: 0.2, w_e: 0.0, ..deterministic() };
    let protocol = SweepProtocol { transient: 20_000, samples: 50, ..SweepProtocol::default() };
    let res = sweep(&base, Axis::WE, 0.05, 0.15, 3, &protocol).unwrap();
    let diverged: Vec<bool> = res.points.iter().map(|pt| pt.branches.iter().all(|b| b.diverged)).collect();
    assert_eq!(diverged, vec![false, false, true]);
}
