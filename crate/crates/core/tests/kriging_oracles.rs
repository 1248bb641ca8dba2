use apkrig::fdcore::{
    group_action, srsf_transform, warp_invert, warp_to_psi, Grid, PsiFunction, SampledFunction,
    Site, SrsfFunction, WarpingFunction,
};
use apkrig::kriging::{
    amplitude_krige, combine_prediction, ordinary_krige_functional, phase_krige, predict_apk,
    solve_positive_weights, solve_sum_one_weights, translation_krige, KrigingConfig,
};
use apkrig::metrics::amplitude_distance;
use apkrig::simgen::{derive_seed, gen_kriging_dataset, KrigingDesign, KrigingDesignParams};
use apkrig::variogram::{select_omega, site_distance_matrix, Binning};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn sine_warp(grid: Grid, a: f64) -> WarpingFunction {
    WarpingFunction::from_fn(grid, |t| t + a / PI * (PI * t).sin()).unwrap()
}

fn two_bumps(grid: Grid, second: f64) -> SampledFunction {
    SampledFunction::from_fn(grid, Site::default(), |t| {
        (-(t - 0.3f64).powi(2) / 0.02).exp() + second * (-(t - 0.7f64).powi(2) / 0.02).exp()
    })
    .unwrap()
}

fn objective(a: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = w.len();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| w[i] * a[(i, j)] * w[j])
        .sum()
}

/// Minimum of `wᵀAw` over `Σw = 1, w ≥ lower` by a coarse scan of the first
/// three coordinates followed by a fine scan around the coarse winner.
fn scan_minimum(a: &DMatrix<f64>, lower: f64) -> f64 {
    let search = |center: [f64; 3], half: f64, steps: i32| -> ([f64; 3], f64) {
        let mut best = (center, f64::INFINITY);
        let h = half / steps as f64;
        for i in -steps..=steps {
            for j in -steps..=steps {
                for k in -steps..=steps {
                    let w = [
                        center[0] + i as f64 * h,
                        center[1] + j as f64 * h,
                        center[2] + k as f64 * h,
                    ];
                    let last = 1.0 - w.iter().sum::<f64>();
                    let all = [w[0], w[1], w[2], last];
                    if all.iter().any(|&v| v < lower) {
                        continue;
                    }
                    let v = objective(a, &all);
                    if v < best.1 {
                        best = (w, v);
                    }
                }
            }
        }
        best
    };
    let (c1, _) = search([0.25; 3], 2.0, 100);
    let (c2, _) = search(c1, 0.04, 40);
    search(c2, 0.002, 40).1
}

fn random_pd(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
    b.transpose() * &b + DMatrix::identity(4, 4) * 0.2
}

#[test]
fn sum_one_weights_match_objective_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..4 {
        let a = random_pd(&mut rng);
        let w = solve_sum_one_weights(&a).unwrap();
        let solved = objective(&a, &w.values);
        let scanned = scan_minimum(&a, f64::NEG_INFINITY);
        assert!(solved <= scanned + 1e-12, "{solved} vs {scanned}");
        assert!(scanned - solved < 1e-4, "{solved} vs {scanned}");
    }
}

#[test]
fn positive_weights_match_objective_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let floor = 1e-6;
    let mut clamped = 0;
    for _ in 0..4 {
        // Negative off-diagonal mass pushes the unconstrained optimum outside
        // the positive orthant.
        let mut a = random_pd(&mut rng);
        a[(0, 1)] += 0.6;
        a[(1, 0)] += 0.6;
        a[(0, 0)] += 1.0;
        let w = solve_positive_weights(&a, floor).unwrap();
        assert!(w.values.iter().all(|&v| v >= floor * (1.0 - 1e-12)));
        let solved = objective(&a, &w.values);
        let scanned = scan_minimum(&a, floor);
        assert!(
            scanned - solved < 1e-4 && solved - scanned < 1e-4,
            "{solved} vs {scanned}"
        );
        clamped += usize::from(w.values.iter().any(|&v| v < 2.0 * floor));
    }
    assert!(clamped > 0, "no case hit the floor");
}

#[test]
fn mirrored_warps_krige_to_the_shared_amplitude() {
    let grid = Grid::default();
    let q = srsf_transform(&two_bumps(grid, 0.7)).unwrap();
    let g = sine_warp(grid, 0.4);
    let qs = vec![
        group_action(&q, &g)
            .unwrap()
            .with_site(Site::new(-1.0, 0.0)),
        group_action(&q, &warp_invert(&g).unwrap())
            .unwrap()
            .with_site(Site::new(1.0, 0.0)),
    ];
    let est = amplitude_krige(&qs, Site::new(0.0, 0.0), &KrigingConfig::default()).unwrap();
    assert!((est.weights.values[0] - 0.5).abs() < 1e-12);
    assert!(amplitude_distance(&est.estimate, &q).unwrap() < 0.05);
}

#[test]
fn symmetric_phases_krige_to_identity() {
    let grid = Grid::default();
    let g = sine_warp(grid, 0.3);
    let psis: Vec<PsiFunction> = [g.clone(), warp_invert(&g).unwrap()]
        .iter()
        .map(warp_to_psi)
        .collect();
    let sites = [Site::new(-1.0, 0.0), Site::new(1.0, 0.0)];
    let spatial = site_distance_matrix(&sites);
    let shape = DMatrix::zeros(2, 2);
    let config = KrigingConfig::default();
    let pred = phase_krige(&psis, &spatial, &shape, &[1.0, 1.0], &[0.0, 0.0], &config).unwrap();
    assert!((pred.weights.values[0] - 0.5).abs() < 1e-12);
    assert!(
        pred.warp.deviation_from_identity() < 0.02,
        "{}",
        pred.warp.deviation_from_identity()
    );
}

#[test]
fn translation_recovers_a_plane() {
    let sites: Vec<Site> = (0..5)
        .flat_map(|i| (0..5).map(move |j| Site::new(i as f64, j as f64)))
        .collect();
    let plane = |s: Site| 3.0 + 0.5 * s.x - 0.25 * s.y;
    let starts: Vec<f64> = sites.iter().map(|&s| plane(s)).collect();
    for target in [
        Site::new(2.3, 1.6),
        Site::new(1.5, 2.5),
        Site::new(3.2, 3.1),
    ] {
        let t = translation_krige(&starts, &sites, target, Binning::default()).unwrap();
        let exact = plane(target);
        assert!(
            (t.value - exact).abs() < 0.1 * exact.abs(),
            "{} vs {exact}",
            t.value
        );
    }
}

#[test]
fn decompose_and_recombine() {
    let grid = Grid::default();
    let f = SampledFunction::from_fn(grid, Site::default(), |t| {
        2.0 + (2.0 * PI * t).sin() + 0.5 * t
    })
    .unwrap();
    let g = sine_warp(grid, 0.35);
    let amplitude = group_action(&srsf_transform(&f).unwrap(), &g).unwrap();
    let back = combine_prediction(&amplitude, &g, f.values()[0]).unwrap();
    let err = back
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-2, "{err}");
}

#[test]
fn omega_selected_when_shape_explains_phase() {
    let grid = Grid::new(61).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 30;
    let sites: Vec<Site> = (0..n)
        .map(|_| Site::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
        .collect();
    let mix: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.5)).collect();
    let shapes: Vec<SrsfFunction> = mix
        .iter()
        .map(|&s| srsf_transform(&two_bumps(grid, s)).unwrap())
        .collect();
    let psis: Vec<PsiFunction> = mix
        .iter()
        .map(|&s| warp_to_psi(&sine_warp(grid, 0.6 * (s - 0.85))))
        .collect();
    let sel = select_omega(&sites, &shapes, &psis, &[0.0, 1.0, 10.0, 100.0, 1000.0]).unwrap();
    assert!(sel.omega > 0.0);
    let base = sel.candidates.iter().find(|c| c.omega == 0.0).unwrap();
    assert!(sel.model.fit_error <= 0.95 * base.model.fit_error);
}

#[test]
fn ordinary_kriging_flattens_peaks() {
    let config = KrigingConfig::default();
    let reps = 10;
    let mut flatter = 0;
    for r in 0..reps {
        let mut p = KrigingDesignParams::new(KrigingDesign::Bimodal, 1.0, derive_seed(21, r));
        p.noise_sd = 0.0;
        let data = gen_kriging_dataset(&p).unwrap().dataset;
        let target = data.functions()[12].site();
        let train = data.without(12).unwrap();
        let apk = predict_apk(
            &train,
            target,
            &KrigingConfig {
                seed: r,
                ..config.clone()
            },
            None,
        )
        .unwrap()
        .combined;
        let ok = ordinary_krige_functional(&train, target, config.binning())
            .unwrap()
            .function;
        let height = |f: &SampledFunction| {
            let v = f.values();
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        if height(&ok) < height(&apk) {
            flatter += 1;
        }
    }
    assert!(flatter * 10 >= reps * 8, "OK flatter in {flatter}/{reps}");
}
