use apkrig::fdcore::Site;
use apkrig::simgen::{
    bimodal_basis, bspline_basis, correlated_uniform, derive_seed, gen_cluster_dataset,
    gen_kriging_dataset, sample_gaussian_field, ClusterDesign, ClusterDesignParams, FieldSpec,
    KrigingDesign, KrigingDesignParams,
};
use nalgebra::{DMatrix, DVector};

const DRAWS: u64 = 2000;

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn field_correlation_matches_covariance() {
    let ell = 1.5;
    let h = ell * 2f64.ln();
    let sites = vec![Site::new(0.0, 0.0), Site::new(h, 0.0)];
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for r in 0..DRAWS {
        let spec = FieldSpec::new(sites.clone(), 2.0, ell, derive_seed(31, r)).unwrap();
        let v = sample_gaussian_field(&spec, &[1.0, -1.0]).unwrap();
        a.push(v[0]);
        b.push(v[1]);
    }
    let rho = correlation(&a, &b);
    assert!((rho - 0.5).abs() < 0.05, "{rho}");
}

#[test]
fn uniform_margins_pass_ks_check() {
    let sites = vec![
        Site::new(0.0, 0.0),
        Site::new(1.0, 0.5),
        Site::new(-1.0, 2.0),
    ];
    let bound = 1.5;
    let mut draws: Vec<f64> = (0..DRAWS)
        .map(|r| {
            let spec = FieldSpec::new(sites.clone(), 1.0, 2.0, derive_seed(32, r)).unwrap();
            let v = correlated_uniform(&spec, bound).unwrap();
            assert!(v.iter().all(|x| x.abs() <= bound));
            v[1]
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let ks = draws
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let cdf = (x + bound) / (2.0 * bound);
            (cdf - k as f64 / n)
                .abs()
                .max((cdf - (k + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.05, "{ks}");
}

#[test]
fn bspline_coefficients_are_uncorrelated_across_bases() {
    // Coefficients are recovered from the noise-free amplitudes by least
    // squares on the basis.
    let base = KrigingDesignParams::new(KrigingDesign::Bspline, 1.0, 0);
    let ts = base.grid.points();
    let rows: Vec<Vec<f64>> = ts.iter().map(|&t| bspline_basis(11, t)).collect();
    let x = DMatrix::from_fn(ts.len(), 11, |i, j| rows[i][j]);
    let xtx = (x.transpose() * &x).cholesky().unwrap();
    let site = 7;
    let mut coefs: Vec<Vec<f64>> = vec![Vec::new(); 11];
    for r in 0..DRAWS {
        let p = KrigingDesignParams {
            seed: derive_seed(33, r),
            noise_sd: 0.0,
            ..base.clone()
        };
        let sim = gen_kriging_dataset(&p).unwrap();
        let y = DVector::from_column_slice(sim.true_amplitudes[site].values());
        let c = xtx.solve(&(x.transpose() * y));
        for (j, v) in c.iter().enumerate() {
            coefs[j].push(*v);
        }
    }
    for (j, k) in [(0, 1), (2, 3), (4, 5), (5, 10)] {
        let rho = correlation(&coefs[j], &coefs[k]);
        assert!(rho.abs() < 0.05, "bases {j},{k}: {rho}");
    }
}

#[test]
fn noise_free_bimodal_is_the_warped_basis() {
    let p = KrigingDesignParams {
        sigma_a2: 0.0,
        noise_sd: 0.0,
        ..KrigingDesignParams::new(KrigingDesign::Bimodal, 1.0, 5)
    };
    let sim = gen_kriging_dataset(&p).unwrap();
    // Composition interpolates linearly: error at most h²/8 · max|f''|.
    let h = p.grid.step();
    let bound = h * h / 8.0 * 5.0 * (4.0 * std::f64::consts::PI).powi(2);
    for (f, g) in sim.dataset.functions().iter().zip(&sim.true_phases) {
        for (v, &gt) in f.values().iter().zip(g.values()) {
            let err = (v - 5.0 * bimodal_basis(gt)).abs();
            assert!(err <= bound, "{err} > {bound}");
        }
    }
}

#[test]
fn generators_are_deterministic() {
    let p = KrigingDesignParams::new(KrigingDesign::Bimodal, 1.0, 9);
    let (a, b) = (
        gen_kriging_dataset(&p).unwrap(),
        gen_kriging_dataset(&p).unwrap(),
    );
    for (f, g) in a.dataset.functions().iter().zip(b.dataset.functions()) {
        assert_eq!(f.values(), g.values());
        assert_eq!(f.site(), g.site());
    }
    let c = ClusterDesignParams::new(ClusterDesign::Disagree, 2.0, 0.5, 9);
    let (a, b) = (
        gen_cluster_dataset(&c).unwrap(),
        gen_cluster_dataset(&c).unwrap(),
    );
    for (f, g) in a.dataset.functions().iter().zip(b.dataset.functions()) {
        assert_eq!(f.values(), g.values());
        assert_eq!(f.site(), g.site());
    }
    assert_eq!(a.phase_partition, b.phase_partition);
}

#[test]
fn generated_data_is_valid() {
    for seed in 0..5 {
        for design in [KrigingDesign::Bimodal, KrigingDesign::Bspline] {
            let sim = gen_kriging_dataset(&KrigingDesignParams::new(design, 1.0, seed)).unwrap();
            assert!(sim
                .true_phases
                .iter()
                .all(|g| g.values().windows(2).all(|w| w[1] > w[0])));
            assert!(sim
                .dataset
                .functions()
                .iter()
                .all(|f| f.values().iter().all(|v| v.is_finite())));
        }
        for design in [ClusterDesign::Agree, ClusterDesign::Disagree] {
            let sim =
                gen_cluster_dataset(&ClusterDesignParams::new(design, 3.0, 1.0, seed)).unwrap();
            assert!(sim
                .true_phases
                .iter()
                .all(|g| g.values().windows(2).all(|w| w[1] > w[0])));
            assert!(sim
                .dataset
                .functions()
                .iter()
                .all(|f| f.values().iter().all(|v| v.is_finite())));
        }
    }
}

#[test]
fn cluster_design_partitions() {
    let agree =
        gen_cluster_dataset(&ClusterDesignParams::new(ClusterDesign::Agree, 1.0, 1.0, 2)).unwrap();
    assert_eq!(agree.amplitude_partition, agree.phase_partition);
    assert_eq!(agree.dataset.len(), 16);
    let disagree = gen_cluster_dataset(&ClusterDesignParams::new(
        ClusterDesign::Disagree,
        1.0,
        1.0,
        2,
    ))
    .unwrap();
    assert_eq!(disagree.dataset.len(), 30);
    assert!(disagree
        .dataset
        .sites()
        .iter()
        .all(|s| (0.0..=4.0).contains(&s.x) && (0.0..=4.0).contains(&s.y)));
}
