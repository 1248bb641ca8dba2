use apkrig::fdcore::{
    group_action, psi_to_warp, srsf_transform, warp_compose, warp_invert, warp_to_psi, Grid,
    SampledFunction, Site, WarpingFunction,
};
use apkrig::metrics::{amplitude_distance, dp_align, phase_distance};
use std::f64::consts::PI;

fn sine_warp(grid: Grid, a: f64) -> WarpingFunction {
    WarpingFunction::from_fn(grid, |t| t + a / PI * (PI * t).sin()).unwrap()
}

fn power_warp(grid: Grid, p: f64) -> WarpingFunction {
    WarpingFunction::from_fn(grid, |t| t.powf(p)).unwrap()
}

fn bimodal(grid: Grid) -> SampledFunction {
    SampledFunction::from_fn(grid, Site::default(), |t| {
        (-(t - 0.3f64).powi(2) / 0.02).exp() + 0.7 * (-(t - 0.7f64).powi(2) / 0.03).exp()
    })
    .unwrap()
}

#[test]
fn compose_with_inverse_is_identity() {
    let grid = Grid::default();
    for a in [-0.6, -0.2, 0.3, 0.6] {
        let g = sine_warp(grid, a);
        let inv = warp_invert(&g).unwrap();
        assert!(
            warp_compose(&g, &inv).unwrap().deviation_from_identity() < 1e-3,
            "a={a}"
        );
        assert!(
            warp_compose(&inv, &g).unwrap().deviation_from_identity() < 1e-3,
            "a={a}"
        );
    }
}

#[test]
fn double_inverse_returns_the_warp() {
    let grid = Grid::default();
    for a in [-0.5, 0.4] {
        let g = sine_warp(grid, a);
        let back = warp_invert(&warp_invert(&g).unwrap()).unwrap();
        assert!(back.max_abs_diff(&g) < 1e-3);
    }
    // The inverse of t² is √t; compare against the closed form on the grid.
    let sq = power_warp(grid, 2.0);
    let inv = warp_invert(&sq).unwrap();
    let exact = power_warp(grid, 0.5);
    assert!(inv.max_abs_diff(&exact) < 2e-2);
    assert!(inv.values()[10..]
        .iter()
        .zip(&exact.values()[10..])
        .all(|(a, b)| (a - b).abs() < 2e-3));
}

#[test]
fn psi_round_trip_on_smooth_warps() {
    let grid = Grid::default();
    for a in [-0.6, -0.1, 0.25, 0.6] {
        let g = sine_warp(grid, a);
        let back = psi_to_warp(&warp_to_psi(&g)).unwrap();
        assert!(
            back.max_abs_diff(&g) < 1e-3,
            "a={a}: {}",
            back.max_abs_diff(&g)
        );
        assert!(back.values().windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn group_action_preserves_norm() {
    let grid = Grid::new(1001).unwrap();
    let q = srsf_transform(&bimodal(grid)).unwrap();
    for a in [-0.5, 0.5] {
        let moved = group_action(&q, &sine_warp(grid, a)).unwrap();
        assert!((moved.norm() - q.norm()).abs() / q.norm() < 1e-3);
    }
}

#[test]
fn group_action_composes() {
    let grid = Grid::new(501).unwrap();
    let q = srsf_transform(&bimodal(grid)).unwrap();
    let (g1, g2) = (sine_warp(grid, 0.4), sine_warp(grid, -0.3));
    let twice = group_action(&group_action(&q, &g1).unwrap(), &g2).unwrap();
    let once = group_action(&q, &warp_compose(&g1, &g2).unwrap()).unwrap();
    assert!(twice.dist(&once) < 1e-2 * q.norm());
}

#[test]
fn dp_recovers_a_known_warp() {
    let grid = Grid::default();
    let q1 = srsf_transform(&bimodal(grid)).unwrap();
    for a in [-0.4, 0.3] {
        let g = sine_warp(grid, a);
        let q2 = group_action(&q1, &g).unwrap();
        let found = dp_align(&q1, &q2).unwrap();
        let expected = warp_invert(&g).unwrap();
        assert!(
            found.warp.max_abs_diff(&expected) < 0.02,
            "a={a}: {}",
            found.warp.max_abs_diff(&expected)
        );
    }
}

#[test]
fn amplitude_distance_ignores_warping() {
    let grid = Grid::default();
    let q = srsf_transform(&bimodal(grid)).unwrap();
    let other = srsf_transform(
        &SampledFunction::from_fn(grid, Site::default(), |t| {
            0.6 * (-(t - 0.4f64).powi(2) / 0.02).exp() + (-(t - 0.75f64).powi(2) / 0.03).exp()
        })
        .unwrap(),
    )
    .unwrap();
    for a in [-0.5, 0.2, 0.5] {
        let g = sine_warp(grid, a);
        let moved = group_action(&q, &g).unwrap();
        let d = amplitude_distance(&q, &moved).unwrap();
        assert!(d < 0.05 * q.norm());
        let both = amplitude_distance(&moved, &group_action(&other, &g).unwrap()).unwrap();
        let plain = amplitude_distance(&q, &other).unwrap();
        assert!((both - plain).abs() < 0.05);
    }
}

#[test]
fn chord_and_arc_agree() {
    let grid = Grid::default();
    let q1 = srsf_transform(&bimodal(grid)).unwrap();
    let q2 = group_action(&q1, &sine_warp(grid, 0.5)).unwrap();
    let d = phase_distance(&q1, &q2).unwrap();
    assert!(d.intrinsic > 0.05);
    assert!((d.extrinsic.powi(2) - (2.0 - 2.0 * d.intrinsic.cos())).abs() < 1e-6);
}
