use std::fs;
use std::sync::Mutex;

use apkrig::fdcore::{Grid, SampledFunction, Site};
use apkrig::io::{load_dataset, save_dataset};
use apkrig::kriging::{loocv_with, Method};
use apkrig::plots::{prediction_plot, site_map, variogram_plot, PlotPoint};
use apkrig::preprocess::{detrend_spatial, smooth_dataset};
use apkrig::simgen::{gen_kriging_dataset, KrigingDesign, KrigingDesignParams};
use apkrig::variogram::{Bin, EmpiricalVariogram, VariogramModel};
use apkrig::{Covariates, Error, SpatialDataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

fn with_covariates(seed: u64) -> SpatialDataset {
    let data = gen_kriging_dataset(&KrigingDesignParams::new(KrigingDesign::Bimodal, 1.0, seed))
        .unwrap()
        .dataset;
    let rows = data
        .sites()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                40.0 + 0.1 * s.y,
                -120.0 + 0.13 * s.x + 0.01 * (i as f64).sin(),
            ]
        })
        .collect();
    data.with_covariates(Covariates {
        names: vec!["lat".into(), "lon".into()],
        rows,
    })
    .unwrap()
}

fn mean_sq_second_difference(v: &[f64]) -> f64 {
    let d: Vec<f64> = v.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64
}

fn read_points(path: &std::path::Path) -> Vec<PlotPoint> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["panel", "series", "x", "y"]
    );
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            PlotPoint {
                panel: r[0].to_string(),
                series: r[1].to_string(),
                x: r[2].parse().unwrap(),
                y: r[3].parse().unwrap(),
            }
        })
        .collect()
}

#[test]
fn save_then_load_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let data = with_covariates(3);
    save_dataset(&data, &path).unwrap();
    let back = load_dataset(&path, None).unwrap();
    assert_eq!(back.ids(), data.ids());
    assert_eq!(back.grid(), data.grid());
    assert_eq!(back.covariates(), data.covariates());
    for (a, b) in back.functions().iter().zip(data.functions()) {
        assert_eq!(a.site(), b.site());
        assert_eq!(a.values(), b.values());
    }
    let again = dir.path().join("again").join("data.csv");
    save_dataset(&back, &again).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ok = "site_id,x,y,t_0,t_1,t_2,t_3,t_4\na,0,0,1,2,3,4,5\nb,1,0,1,2,3,4,5\n";
    let path = dir.path().join("ok.csv");
    fs::write(&path, ok).unwrap();
    let data = load_dataset(&path, None).unwrap();
    assert_eq!((data.len(), data.grid().len()), (2, 5));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, ok.replace("b,1,0,1,2,3", "b,1,0,1,oops,3")).unwrap();
    match load_dataset(&bad, None) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    fs::write(&bad, ok.replace("b,1,0,1,2,3,4,5", "b,1,0,1,2,3")).unwrap();
    assert!(matches!(
        load_dataset(&bad, None),
        Err(Error::Parse { line: 3, .. })
    ));
    fs::write(&bad, ok.replace("b,1,0", "a,1,0")).unwrap();
    assert!(matches!(
        load_dataset(&bad, None),
        Err(Error::Validation(_))
    ));
}

#[test]
fn smoothing_removes_roughness() {
    let grid = Grid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let fs: Vec<SampledFunction> = (0..4)
        .map(|i| {
            let vals = grid
                .points()
                .iter()
                .map(|&t| (2.0 * PI * t).sin() + noise.sample(&mut rng))
                .collect();
            SampledFunction::new(grid, vals, Site::new(i as f64, 0.0)).unwrap()
        })
        .collect();
    let data = SpatialDataset::from_functions(fs).unwrap();
    let smoothed = smooth_dataset(&data, 1e-3).unwrap();
    assert_eq!(smoothed.sites(), data.sites());
    assert_eq!(smoothed.grid(), data.grid());
    for (a, b) in smoothed.functions().iter().zip(data.functions()) {
        let (after, before) = (
            mean_sq_second_difference(a.values()),
            mean_sq_second_difference(b.values()),
        );
        assert!(after <= 0.5 * before, "{after} vs {before}");
    }
    assert_eq!(smooth_dataset(&data, 0.0).unwrap(), data);
}

#[test]
fn detrended_residuals_are_orthogonal_to_covariates() {
    let data = with_covariates(4);
    let names = vec!["lat".to_string(), "lon".to_string()];
    let resid = detrend_spatial(&data, &names).unwrap();
    let cov = data.covariates().unwrap();
    let columns: Vec<Vec<f64>> = std::iter::once(vec![1.0; data.len()])
        .chain(names.iter().map(|n| cov.column(n).unwrap()))
        .collect();
    for k in 0..data.grid().len() {
        let r: Vec<f64> = resid.functions().iter().map(|f| f.values()[k]).collect();
        for col in &columns {
            let dot: f64 = col.iter().zip(&r).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-8, "node {k}: {dot}");
        }
    }
}

#[test]
fn exactly_linear_data_detrends_to_zero() {
    let grid = Grid::new(21).unwrap();
    let lat: Vec<f64> = (0..8).map(|i| 35.0 + 0.7 * i as f64).collect();
    let fs: Vec<SampledFunction> = lat
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            SampledFunction::from_fn(grid, Site::new(i as f64, (i % 3) as f64), |t| {
                2.0 + t + (0.5 - t) * l
            })
            .unwrap()
        })
        .collect();
    let data = SpatialDataset::from_functions(fs)
        .unwrap()
        .with_covariates(Covariates {
            names: vec!["lat".into()],
            rows: lat.iter().map(|&l| vec![l]).collect(),
        })
        .unwrap();
    let resid = detrend_spatial(&data, &["lat".to_string()]).unwrap();
    let worst = resid
        .functions()
        .iter()
        .flat_map(|f| f.values().iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");

    let centered = detrend_spatial(&data, &[]).unwrap();
    for k in 0..grid.len() {
        let mean: f64 = centered
            .functions()
            .iter()
            .map(|f| f.values()[k])
            .sum::<f64>()
            / 8.0;
        assert!(mean.abs() < 1e-12);
    }
}

#[test]
fn plot_csvs_reproduce_plotted_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let emp = EmpiricalVariogram {
        bins: (1..=7)
            .map(|k| Bin {
                lag: 0.3 * k as f64 + 1e-3 / 7.0,
                semivariance: 1.0 - (-(k as f64) / 3.0).exp(),
                pair_count: k,
            })
            .collect(),
    };
    let model = VariogramModel {
        scale: 1.0,
        range: 0.9,
        ..VariogramModel::flat()
    };
    let vpath = dir.path().join("variogram.svg");
    let points = variogram_plot(
        &vpath,
        &[("amplitude", &emp, &model), ("phase", &emp, &model)],
    )
    .unwrap();
    assert_eq!(read_points(&vpath.with_extension("csv")), points);
    let svg = fs::read_to_string(&vpath).unwrap();
    assert_eq!(svg.matches(r#"class="bin""#).count(), 2 * emp.bins.len());
    for b in &emp.bins {
        assert!(svg.contains(&format!(r#"data-x="{:e}""#, b.lag)));
    }

    let data = gen_kriging_dataset(&KrigingDesignParams::new(KrigingDesign::Bimodal, 1.0, 6))
        .unwrap()
        .dataset;
    let f = data.functions();
    let ppath = dir.path().join("pred.svg");
    let targets = [("a", &f[0], &f[1], &f[2]), ("b", &f[3], &f[4], &f[5])];
    let points = prediction_plot(&ppath, &targets).unwrap();
    assert_eq!(read_points(&ppath.with_extension("csv")), points);
    let svg = fs::read_to_string(&ppath).unwrap();
    assert_eq!(svg.matches(r#"class="curve""#).count(), 3 * targets.len());

    let mpath = dir.path().join("map.svg");
    let assignment: Vec<usize> = (0..data.len()).map(|i| 1 + i % 3).collect();
    let points = site_map(&mpath, &data.sites(), &[("amplitude", &assignment)]).unwrap();
    assert_eq!(read_points(&mpath.with_extension("csv")), points);
}

#[test]
fn loocv_never_shows_the_held_out_site() {
    let data = gen_kriging_dataset(&KrigingDesignParams::new(KrigingDesign::Bimodal, 1.0, 8))
        .unwrap()
        .dataset;
    let seen = Mutex::new(Vec::new());
    let report = loocv_with(&data, Method::Ok, |i, train, target| {
        assert_eq!(train.len(), data.len() - 1);
        assert_eq!(target, data.functions()[i].site());
        assert!(!train.ids().contains(&data.ids()[i]));
        assert!(!train.sites().contains(&target));
        seen.lock().unwrap().push(i);
        Ok(train.functions()[0].clone().with_site(target))
    })
    .unwrap();
    let mut seen = seen.into_inner().unwrap();
    seen.sort_unstable();
    assert_eq!(seen, (0..data.len()).collect::<Vec<_>>());
    assert_eq!(report.failed_folds(), 0);
    assert_eq!(report.folds.len(), data.len());
}
