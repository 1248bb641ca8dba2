use apkrig::clustering::{
    amplitude_dissimilarity_matrix, hierarchical_cluster, phase_dissimilarity_matrix,
    weight_by_variogram, Linkage, Weighting,
};
use apkrig::fdcore::{Grid, SampledFunction, Site};
use apkrig::SpatialDataset;
use nalgebra::DMatrix;
use std::f64::consts::PI;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

fn bump(grid: Grid, site: Site, scale: f64, shift: f64) -> SampledFunction {
    SampledFunction::from_fn(grid, site, |t| {
        shift
            + scale
                * ((-(t - 0.35f64).powi(2) / 0.02).exp()
                    + 0.6 * (-(t - 0.7f64).powi(2) / 0.03).exp())
    })
    .unwrap()
}

#[test]
fn weighted_entries_equal_the_hand_product() {
    // Collinear sites at 0, 1 and 3 give separations 1, 2 and 3; squared
    // distances lying on 2γ(h) make the exponential fit exact.
    let (scale, range) = (1.7, 1.3);
    let gamma = |h: f64| scale * (1.0 - (-h / range).exp());
    let xs = [0.0f64, 1.0, 3.0];
    let h = DMatrix::from_fn(3, 3, |i, j| (xs[i] - xs[j]).abs());
    let d = h.map(|v| (2.0 * gamma(v)).sqrt());
    let out = weight_by_variogram(labels(3), &d, &h, Weighting::Spatial).unwrap();
    let model = out.model.unwrap();
    assert!((model.scale - scale).abs() < 1e-6, "{model:?}");
    assert!((model.range - range).abs() < 1e-6, "{model:?}");
    for i in 0..3 {
        for j in 0..3 {
            let hand = if i == j {
                0.0
            } else {
                d[(i, j)] * gamma(h[(i, j)])
            };
            assert!((out.matrix.get(i, j) - hand).abs() < 1e-8, "({i},{j})");
        }
    }
}

#[test]
fn identical_functions_have_zero_amplitude_distance() {
    let grid = Grid::default();
    let sites = [
        Site::new(0.0, 0.0),
        Site::new(3.0, 1.0),
        Site::new(1.0, 2.0),
        Site::new(2.0, 4.0),
    ];
    let f = |s: Site| bump(grid, s, 1.0, 0.0);
    let other = SampledFunction::from_fn(grid, sites[2], |t| (2.0 * PI * t).sin()).unwrap();
    let fs = vec![
        f(sites[0]),
        f(sites[1]),
        other,
        bump(grid, sites[3], 2.0, 1.0),
    ];
    let data = SpatialDataset::new(labels(4), fs).unwrap();
    for w in [Weighting::None, Weighting::Spatial] {
        let m = amplitude_dissimilarity_matrix(&data, w).unwrap().matrix;
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert!(m.get(0, 2) > 0.0);
        for i in 0..4 {
            assert_eq!(m.get(i, i), 0.0);
        }
    }
}

#[test]
fn unwarped_data_has_near_zero_phase_distances() {
    let grid = Grid::default();
    let fs: Vec<SampledFunction> = (0..6)
        .map(|i| {
            let s = Site::new(i as f64, (i * i % 5) as f64);
            bump(grid, s, 0.5 + 0.3 * i as f64, i as f64 - 2.0)
        })
        .collect();
    let data = SpatialDataset::new(labels(6), fs).unwrap();
    let m = phase_dissimilarity_matrix(&data, 0.0, Weighting::None)
        .unwrap()
        .matrix;
    let worst = m.values().iter().cloned().fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
}

#[test]
fn identical_functions_have_zero_phase_distance() {
    let grid = Grid::default();
    let fs = vec![
        bump(grid, Site::new(0.0, 0.0), 1.0, 0.0),
        bump(grid, Site::new(5.0, 0.0), 1.0, 0.0),
        bump(grid, Site::new(0.0, 5.0), 1.0, 0.0),
    ];
    let data = SpatialDataset::new(labels(3), fs).unwrap();
    let m = phase_dissimilarity_matrix(&data, 0.0, Weighting::None)
        .unwrap()
        .matrix;
    assert!(m.values().iter().all(|&v| v < 1e-6), "{}", m.values());
}

#[test]
fn clustering_is_deterministic() {
    let d = DMatrix::from_fn(7, 7, |i, j| {
        if i == j {
            0.0
        } else {
            ((i * 3 + j * 3) % 5) as f64 + 1.0
        }
    });
    let m = apkrig::clustering::DissimilarityMatrix::new(labels(7), d).unwrap();
    for linkage in [Linkage::Average, Linkage::Complete, Linkage::Single] {
        let first = hierarchical_cluster(&m, 3, linkage).unwrap();
        for _ in 0..5 {
            assert_eq!(hierarchical_cluster(&m, 3, linkage).unwrap(), first);
        }
    }
}
