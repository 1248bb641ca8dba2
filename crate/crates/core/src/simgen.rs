//! Seeded simulation designs and the Gaussian-field machinery behind them.
//!
//! Every generator is a pure function of its parameters and seed. Independent
//! random streams (amplitude coefficients, phases, noise, replicates) are
//! derived from the seed so that changing one design knob does not reshuffle
//! the others.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::clustering::Partition;
use crate::dataset::{Covariates, SpatialDataset};
use crate::error::{Error, Result};
use crate::fdcore::{
    srsf_inverse, srsf_transform, Grid, SampledFunction, Site, SrsfFunction, WarpingFunction,
};

/// Diagonal jitter for covariance factorization.
pub const COVARIANCE_JITTER: f64 = 1e-10;

/// Default correlation range `2√2`.
pub fn default_range() -> f64 {
    2.0 * std::f64::consts::SQRT_2
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of an independent sub-stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}

const STREAM_PHASE: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_LAYOUT: u64 = 3;
const STREAM_AMPLITUDE: u64 = 100;

// ---------------------------------------------------------------------------
// Gaussian fields
// ---------------------------------------------------------------------------

/// Exponential (Matérn ν = 1/2) covariance.
pub fn matern_covariance(h: f64, sigma2: f64, ell: f64) -> f64 {
    sigma2 * (-h / ell).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSpec {
    pub sites: Vec<Site>,
    pub sigma2: f64,
    pub ell: f64,
    pub seed: u64,
}

impl FieldSpec {
    pub fn new(sites: Vec<Site>, sigma2: f64, ell: f64, seed: u64) -> Result<Self> {
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "field variance {sigma2} must be nonnegative"
            )));
        }
        if !(ell > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "field range {ell} must be positive"
            )));
        }
        for i in 0..sites.len() {
            for j in 0..i {
                if sites[i] == sites[j] {
                    return Err(Error::InvalidArgument(format!(
                        "sites {j} and {i} coincide"
                    )));
                }
            }
        }
        Ok(FieldSpec {
            sites,
            sigma2,
            ell,
            seed,
        })
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.sites.len();
        DMatrix::from_fn(n, n, |i, j| {
            matern_covariance(
                self.sites[i].distance(&self.sites[j]),
                self.sigma2,
                self.ell,
            )
        })
    }
}

fn cholesky_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let jittered = cov + DMatrix::identity(n, n) * COVARIANCE_JITTER;
    jittered.cholesky().map(|c| c.l()).ok_or_else(|| {
        Error::DegenerateCovariance("covariance is not positive definite after jitter".into())
    })
}

fn field_from_rng(spec: &FieldSpec, mean: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = spec.sites.len();
    if mean.len() != n {
        return Err(Error::InvalidInput(format!(
            "mean has {} entries for {n} sites",
            mean.len()
        )));
    }
    if spec.sigma2 == 0.0 {
        return Ok(mean.to_vec());
    }
    let l = cholesky_factor(&spec.covariance())?;
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    let x = l * z;
    Ok(mean.iter().zip(x.iter()).map(|(m, v)| m + v).collect())
}

/// `mean + L z` with `L Lᵀ` the (jittered) covariance of `spec`.
pub fn sample_gaussian_field(spec: &FieldSpec, mean: &[f64]) -> Result<Vec<f64>> {
    field_from_rng(spec, mean, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

fn uniform_from_rng(spec: &FieldSpec, bound: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if !(bound > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "uniform bound {bound} must be positive"
        )));
    }
    let unit = FieldSpec {
        sigma2: 1.0,
        ..spec.clone()
    };
    let z = field_from_rng(&unit, &vec![0.0; spec.sites.len()], rng)?;
    let normal = Normal::standard();
    Ok(z.iter()
        .map(|&v| bound * (2.0 * normal.cdf(v) - 1.0))
        .collect())
}

/// Spatially correlated draws with uniform margins on `[−bound, bound]`
/// (Gaussian copula with the correlation structure of `spec`).
pub fn correlated_uniform(spec: &FieldSpec, bound: f64) -> Result<Vec<f64>> {
    uniform_from_rng(spec, bound, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

/// CDF of `Beta(1, e^b)`: `γ(t) = 1 − (1 − t)^{e^b}`.
///
/// For large `b` the closed form rounds to 1 before `t = 1`; a `1e-9` share
/// of the identity keeps the sampled warp strictly increasing.
pub fn beta_cdf_warp(grid: Grid, b: f64) -> Result<WarpingFunction> {
    if !b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta warp parameter must be finite, got {b}"
        )));
    }
    const MIX: f64 = 1e-9;
    let beta = b.exp();
    WarpingFunction::from_fn(grid, |t| {
        (1.0 - MIX) * (1.0 - (1.0 - t).powf(beta)) + MIX * t
    })
}

// ---------------------------------------------------------------------------
// Bases
// ---------------------------------------------------------------------------

/// The bimodal basis on `[0, 1]`.
pub fn bimodal_basis(t: f64) -> f64 {
    -(4.0 * std::f64::consts::PI * t).cos()
}

/// Cubic B-spline design mean.
pub const BSPLINE_MEANS: [f64; 11] = [1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 4.0, 3.0, 3.0, 2.0, 1.0];

/// Clamped uniform cubic B-spline basis with `count` functions, evaluated
/// at `t` (Cox–de Boor recursion).
pub fn bspline_basis(count: usize, t: f64) -> Vec<f64> {
    const DEGREE: usize = 3;
    let inner = count - DEGREE;
    let mut knots = vec![0.0; DEGREE];
    knots.extend((0..=inner).map(|k| k as f64 / inner as f64));
    knots.extend(vec![1.0; DEGREE]);
    let t = t.clamp(0.0, 1.0);
    let m = knots.len() - 1;
    let mut b: Vec<f64> = (0..m)
        .map(|i| {
            let last = t == 1.0 && knots[i + 1] == 1.0 && knots[i] < 1.0;
            if (knots[i] <= t && t < knots[i + 1]) || last {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for p in 1..=DEGREE {
        for i in 0..m - p {
            let left = knots[i + p] - knots[i];
            let right = knots[i + p + 1] - knots[i + 1];
            let a = if left > 0.0 {
                (t - knots[i]) / left * b[i]
            } else {
                0.0
            };
            let c = if right > 0.0 {
                (knots[i + p + 1] - t) / right * b[i + 1]
            } else {
                0.0
            };
            b[i] = a + c;
        }
    }
    b.truncate(count);
    b
}

// ---------------------------------------------------------------------------
// Designs
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SimDataset {
    pub dataset: SpatialDataset,
    /// Noise-free functions before warping.
    pub true_amplitudes: Vec<SampledFunction>,
    pub true_phases: Vec<WarpingFunction>,
    pub amplitude_partition: Option<Partition>,
    pub phase_partition: Option<Partition>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrigingDesign {
    Bspline,
    Bimodal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Layout {
    /// Sites at `{−2, −1, 0, 1, 2}²`.
    Grid5x5,
    /// `n` uniform sites on `[−2, 2]²`.
    UniformRandom(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrigingDesignParams {
    pub design: KrigingDesign,
    pub bound: f64,
    pub ell1: f64,
    pub ell2: f64,
    pub sigma_a2: f64,
    pub noise_sd: f64,
    pub layout: Layout,
    pub grid: Grid,
    pub seed: u64,
}

impl KrigingDesignParams {
    pub fn new(design: KrigingDesign, bound: f64, seed: u64) -> Self {
        KrigingDesignParams {
            design,
            bound,
            ell1: default_range(),
            ell2: default_range(),
            sigma_a2: 1.0,
            noise_sd: 0.5,
            layout: Layout::Grid5x5,
            grid: Grid::default(),
            seed,
        }
    }
}

/// Square grid of `side²` sites spanning `[lo, hi]²`, row-major in y then x.
pub fn grid_sites(side: usize, lo: f64, hi: f64) -> Vec<Site> {
    let step = if side > 1 {
        (hi - lo) / (side - 1) as f64
    } else {
        0.0
    };
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            out.push(Site::new(lo + c as f64 * step, lo + r as f64 * step));
        }
    }
    out
}

fn uniform_sites(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<Site> {
    let u = Uniform::new(lo, hi).expect("valid range");
    (0..n)
        .map(|_| Site::new(u.sample(rng), u.sample(rng)))
        .collect()
}

fn noise_vector(len: usize, sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if sd == 0.0 {
        return vec![0.0; len];
    }
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect::<Vec<f64>>()
}

/// `(g + e) ∘ γ` for noise-free `g`, noise `e` and warp `γ`.
fn observe(
    amplitude: &SampledFunction,
    noise: &[f64],
    warp: &WarpingFunction,
) -> Result<SampledFunction> {
    let noisy: Vec<f64> = amplitude
        .values()
        .iter()
        .zip(noise)
        .map(|(a, e)| a + e)
        .collect();
    amplitude.with_values(noisy)?.compose(warp)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// The kriging benchmark: spatially correlated basis coefficients (one
/// independent field per basis function), correlated Beta-CDF phases and
/// white noise.
pub fn gen_kriging_dataset(p: &KrigingDesignParams) -> Result<SimDataset> {
    check_positive("B", p.bound)?;
    check_positive("ell1", p.ell1)?;
    check_positive("ell2", p.ell2)?;
    if !(p.sigma_a2 >= 0.0) || !(p.noise_sd >= 0.0) {
        return Err(Error::InvalidArgument(
            "variances must be nonnegative".into(),
        ));
    }
    let sites = match p.layout {
        Layout::Grid5x5 => grid_sites(5, -2.0, 2.0),
        Layout::UniformRandom(n) if n >= 2 => {
            uniform_sites(n, -2.0, 2.0, &mut stream_rng(p.seed, STREAM_LAYOUT))
        }
        Layout::UniformRandom(n) => {
            return Err(Error::InvalidArgument(format!(
                "random layout needs at least 2 sites, got {n}"
            )))
        }
    };
    let n = sites.len();
    let grid = p.grid;
    let ts = grid.points();

    let means: Vec<f64> = match p.design {
        KrigingDesign::Bimodal => vec![5.0],
        KrigingDesign::Bspline => BSPLINE_MEANS.to_vec(),
    };
    let basis: Vec<Vec<f64>> = match p.design {
        KrigingDesign::Bimodal => vec![ts.iter().map(|&t| bimodal_basis(t)).collect()],
        KrigingDesign::Bspline => {
            let rows: Vec<Vec<f64>> = ts
                .iter()
                .map(|&t| bspline_basis(BSPLINE_MEANS.len(), t))
                .collect();
            (0..BSPLINE_MEANS.len())
                .map(|j| rows.iter().map(|r| r[j]).collect())
                .collect()
        }
    };
    let amp_spec = FieldSpec::new(sites.clone(), p.sigma_a2, p.ell1, 0)?;
    let coefficients: Vec<Vec<f64>> = means
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            field_from_rng(
                &amp_spec,
                &vec![m; n],
                &mut stream_rng(p.seed, STREAM_AMPLITUDE + j as u64),
            )
        })
        .collect::<Result<_>>()?;

    let phase_spec = FieldSpec::new(sites.clone(), 1.0, p.ell2, 0)?;
    let b = uniform_from_rng(&phase_spec, p.bound, &mut stream_rng(p.seed, STREAM_PHASE))?;
    let mut noise_rng = stream_rng(p.seed, STREAM_NOISE);

    let mut amplitudes = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    for i in 0..n {
        let vals: Vec<f64> = (0..grid.len())
            .map(|k| {
                coefficients
                    .iter()
                    .zip(&basis)
                    .map(|(c, bj)| c[i] * bj[k])
                    .sum()
            })
            .collect();
        let amp = SampledFunction::new(grid, vals, sites[i])?;
        let warp = beta_cdf_warp(grid, b[i])?;
        let noise = noise_vector(grid.len(), p.noise_sd, &mut noise_rng);
        observed.push(observe(&amp, &noise, &warp)?);
        amplitudes.push(amp);
        phases.push(warp);
    }
    let mut dataset = SpatialDataset::from_functions(observed)?;
    dataset.meta.push(format!(
        "kriging design={:?} B={} ell1={} ell2={} sigma_a2={} noise_sd={} seed={}",
        p.design, p.bound, p.ell1, p.ell2, p.sigma_a2, p.noise_sd, p.seed
    ));
    Ok(SimDataset {
        dataset,
        true_amplitudes: amplitudes,
        true_phases: phases,
        amplitude_partition: None,
        phase_partition: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterDesign {
    /// 4×4 grid; amplitude and phase share the quadrant partition.
    Agree,
    /// 30 uniform sites; amplitude by quadrant, phase by the diagonals.
    Disagree,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterDesignParams {
    pub design: ClusterDesign,
    pub delta_a: f64,
    pub delta_b: f64,
    pub bound: f64,
    pub sigma_a2: f64,
    pub noise_sd: f64,
    pub ell: f64,
    pub grid: Grid,
    pub seed: u64,
}

impl ClusterDesignParams {
    pub fn new(design: ClusterDesign, delta_a: f64, delta_b: f64, seed: u64) -> Self {
        ClusterDesignParams {
            design,
            delta_a,
            delta_b,
            bound: 1.0,
            sigma_a2: 1.0,
            noise_sd: 0.5,
            ell: default_range(),
            grid: Grid::default(),
            seed,
        }
    }
}

fn quadrant(s: Site) -> usize {
    1 + usize::from(s.x >= 2.0) + 2 * usize::from(s.y >= 2.0)
}

fn diagonal_region(s: Site) -> usize {
    match (s.y > s.x, s.y > 4.0 - s.x) {
        (false, false) => 1,
        (false, true) => 2,
        (true, false) => 3,
        (true, true) => 4,
    }
}

/// The clustering benchmark: `f = (a μ + e) ∘ γ` with `μ(t) = −cos 2πt`,
/// cluster-shifted amplitudes `a = i δ_a + ε_a` and phases from
/// `b = i δ_b + ε_b`.
pub fn gen_cluster_dataset(p: &ClusterDesignParams) -> Result<SimDataset> {
    check_positive("B", p.bound)?;
    check_positive("ell", p.ell)?;
    if !(p.sigma_a2 >= 0.0)
        || !(p.noise_sd >= 0.0)
        || !p.delta_a.is_finite()
        || !p.delta_b.is_finite()
    {
        return Err(Error::InvalidArgument(
            "invalid cluster design parameters".into(),
        ));
    }
    let (sites, amp_cluster, phase_cluster): (Vec<Site>, Vec<usize>, Vec<usize>) = match p.design {
        ClusterDesign::Agree => {
            let sites = grid_sites(4, 0.5, 3.5);
            let q: Vec<usize> = sites.iter().map(|&s| quadrant(s)).collect();
            (sites, q.clone(), q)
        }
        ClusterDesign::Disagree => {
            let sites = uniform_sites(30, 0.0, 4.0, &mut stream_rng(p.seed, STREAM_LAYOUT));
            let q = sites.iter().map(|&s| quadrant(s)).collect();
            let d = sites.iter().map(|&s| diagonal_region(s)).collect();
            (sites, q, d)
        }
    };
    let n = sites.len();
    let grid = p.grid;
    let eps_a = field_from_rng(
        &FieldSpec::new(sites.clone(), p.sigma_a2, p.ell, 0)?,
        &vec![5.0; n],
        &mut stream_rng(p.seed, STREAM_AMPLITUDE),
    )?;
    let eps_b = uniform_from_rng(
        &FieldSpec::new(sites.clone(), 1.0, p.ell, 0)?,
        p.bound,
        &mut stream_rng(p.seed, STREAM_PHASE),
    )?;
    let mut noise_rng = stream_rng(p.seed, STREAM_NOISE);

    let mut amplitudes = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    for i in 0..n {
        let a = amp_cluster[i] as f64 * p.delta_a + eps_a[i];
        let b = phase_cluster[i] as f64 * p.delta_b + eps_b[i];
        let amp = SampledFunction::from_fn(grid, sites[i], |t| {
            -a * (2.0 * std::f64::consts::PI * t).cos()
        })?;
        let warp = beta_cdf_warp(grid, b)?;
        let noise = noise_vector(grid.len(), p.noise_sd, &mut noise_rng);
        observed.push(observe(&amp, &noise, &warp)?);
        amplitudes.push(amp);
        phases.push(warp);
    }
    let mut dataset = SpatialDataset::from_functions(observed)?;
    dataset.meta.push(format!(
        "cluster design={:?} delta_a={} delta_b={} B={} sigma_a2={} noise_sd={} ell={} seed={}",
        p.design, p.delta_a, p.delta_b, p.bound, p.sigma_a2, p.noise_sd, p.ell, p.seed
    ));
    let ids = dataset.ids().to_vec();
    Ok(SimDataset {
        amplitude_partition: Some(Partition::new(ids.clone(), &amp_cluster)?),
        phase_partition: Some(Partition::new(ids, &phase_cluster)?),
        dataset,
        true_amplitudes: amplitudes,
        true_phases: phases,
    })
}

/// Scale-only amplitude model observed on a square grid, plus the true
/// amplitude at an unobserved target.
#[derive(Clone, Debug)]
pub struct ScaleDataset {
    pub sim: SimDataset,
    pub target: Site,
    /// `c₀ μ_q` at the target.
    pub target_amplitude: SrsfFunction,
}

/// Observations `q_i = (c_i μ_q, γ_i)` with `log c` a Gaussian field and
/// independent random phases, on a `side × side` grid over `[−2, 2]²`.
pub fn gen_scale_dataset(side: usize, target: Site, grid: Grid, seed: u64) -> Result<ScaleDataset> {
    if side < 2 {
        return Err(Error::InvalidArgument(
            "scale design needs at least a 2x2 grid".into(),
        ));
    }
    let sites = grid_sites(side, -2.0, 2.0);
    if sites.contains(&target) {
        return Err(Error::InvalidArgument(
            "target coincides with an observed site".into(),
        ));
    }
    let n = sites.len();
    let mut all = sites.clone();
    all.push(target);
    let log_c = field_from_rng(
        &FieldSpec::new(all, 0.25, default_range(), 0)?,
        &vec![0.0; n + 1],
        &mut stream_rng(seed, STREAM_AMPLITUDE),
    )?;
    let mu = srsf_transform(&SampledFunction::from_fn(
        grid,
        Site::default(),
        bimodal_basis,
    )?)?;
    let mut rng = stream_rng(seed, STREAM_PHASE);
    let u = Uniform::new(-1.0, 1.0).expect("valid range");

    let mut amplitudes = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    for i in 0..n {
        let q = mu.scaled(log_c[i].exp()).with_site(sites[i]);
        let warp = beta_cdf_warp(grid, u.sample(&mut rng))?;
        let f = srsf_inverse(&crate::fdcore::group_action(&q, &warp)?)?.with_site(sites[i]);
        amplitudes.push(srsf_inverse(&q)?.with_site(sites[i]));
        phases.push(warp);
        observed.push(f);
    }
    let mut dataset = SpatialDataset::from_functions(observed)?;
    dataset
        .meta
        .push(format!("scale design side={side} seed={seed}"));
    Ok(ScaleDataset {
        sim: SimDataset {
            dataset,
            true_amplitudes: amplitudes,
            true_phases: phases,
            amplitude_partition: None,
            phase_partition: None,
        },
        target,
        target_amplitude: mu.scaled(log_c[n].exp()).with_site(target),
    })
}

/// A 24-site daily ozone-like dataset: a smooth afternoon peak whose height
/// is spatially correlated and whose timing varies through correlated
/// phases.
pub fn ozone_like(seed: u64) -> Result<SimDataset> {
    let grid = Grid::new(49)?;
    let sites = uniform_sites(24, 0.0, 10.0, &mut stream_rng(seed, STREAM_LAYOUT));
    let n = sites.len();
    let heights = field_from_rng(
        &FieldSpec::new(sites.clone(), 64.0, 4.0, 0)?,
        &vec![40.0; n],
        &mut stream_rng(seed, STREAM_AMPLITUDE),
    )?;
    let b = uniform_from_rng(
        &FieldSpec::new(sites.clone(), 1.0, 4.0, 0)?,
        1.0,
        &mut stream_rng(seed, STREAM_PHASE),
    )?;
    let mut noise_rng = stream_rng(seed, STREAM_NOISE);
    let mut amplitudes = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    for i in 0..n {
        let h = heights[i];
        let amp = SampledFunction::from_fn(grid, sites[i], |t| {
            15.0 + h * (-(t - 0.55).powi(2) / (2.0 * 0.12f64.powi(2))).exp()
        })?;
        let warp = beta_cdf_warp(grid, b[i])?;
        let noise = noise_vector(grid.len(), 0.5, &mut noise_rng);
        observed.push(observe(&amp, &noise, &warp)?);
        amplitudes.push(amp);
        phases.push(warp);
    }
    let mut dataset = SpatialDataset::from_functions(observed)?;
    dataset
        .meta
        .push(format!("ozone-like synthetic seed={seed}"));
    Ok(SimDataset {
        dataset,
        true_amplitudes: amplitudes,
        true_phases: phases,
        amplitude_partition: None,
        phase_partition: None,
    })
}

/// A 35-site annual temperature-like dataset with a latitude and longitude
/// trend, shipped with `lat`/`lon` covariates.
pub fn weather_like(seed: u64) -> Result<SimDataset> {
    let grid = Grid::new(73)?;
    let mut rng = stream_rng(seed, STREAM_LAYOUT);
    let lon = Uniform::new(-124.0, -114.0).expect("valid range");
    let lat = Uniform::new(42.0, 49.0).expect("valid range");
    let sites: Vec<Site> = (0..35)
        .map(|_| Site::new(lon.sample(&mut rng), lat.sample(&mut rng)))
        .collect();
    let n = sites.len();
    let swing = field_from_rng(
        &FieldSpec::new(sites.clone(), 4.0, 3.0, 0)?,
        &vec![9.0; n],
        &mut stream_rng(seed, STREAM_AMPLITUDE),
    )?;
    let b = uniform_from_rng(
        &FieldSpec::new(sites.clone(), 1.0, 3.0, 0)?,
        0.7,
        &mut stream_rng(seed, STREAM_PHASE),
    )?;
    let mut noise_rng = stream_rng(seed, STREAM_NOISE);
    let mut amplitudes = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    for i in 0..n {
        let s = sites[i];
        let level = 10.0 - 0.9 * (s.y - 45.0) + 0.3 * (s.x + 119.0);
        let a = swing[i];
        let amp = SampledFunction::from_fn(grid, s, |t| {
            level - a * (2.0 * std::f64::consts::PI * t).cos()
        })?;
        let warp = beta_cdf_warp(grid, b[i])?;
        let noise = noise_vector(grid.len(), 0.3, &mut noise_rng);
        observed.push(observe(&amp, &noise, &warp)?);
        amplitudes.push(amp);
        phases.push(warp);
    }
    let covariates = Covariates {
        names: vec!["lat".into(), "lon".into()],
        rows: sites.iter().map(|s| vec![s.y, s.x]).collect(),
    };
    let mut dataset = SpatialDataset::from_functions(observed)?.with_covariates(covariates)?;
    dataset
        .meta
        .push(format!("weather-like synthetic seed={seed}"));
    Ok(SimDataset {
        dataset,
        true_amplitudes: amplitudes,
        true_phases: phases,
        amplitude_partition: None,
        phase_partition: None,
    })
}
