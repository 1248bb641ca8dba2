//! Empirical trace-variograms, parametric Matérn (ν = 0.5) fitting and the
//! ω-weighted distance on the domain enlarged by function shape.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fdcore::{l2_dist_sq, Site, SrsfFunction};
use crate::metrics::shape_distance;

/// Default number of equal-width lag bins.
pub const DEFAULT_BINS: usize = 12;

/// Fitting error must drop by at least this fraction before a positive ω is
/// preferred over the purely spatial lag.
pub const OMEGA_MIN_IMPROVEMENT: f64 = 0.05;

/// `{0} ∪ {10^k : k = -1..4}`.
pub fn default_omega_candidates() -> Vec<f64> {
    vec![0.0, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0]
}

/// A site paired with the shape of its function.
#[derive(Clone, Copy, Debug)]
pub struct EnlargedPoint<'a> {
    pub site: Site,
    pub shape: &'a SrsfFunction,
}

/// `√(‖s₁ − s₂‖² + ω·d_sh(q₁, q₂)²)`.
pub fn enlarged_distance(
    y1: &EnlargedPoint<'_>,
    y2: &EnlargedPoint<'_>,
    omega: f64,
) -> Result<f64> {
    let spatial = y1.site.distance(&y2.site);
    if omega == 0.0 {
        return Ok(spatial);
    }
    let dsh = shape_distance(y1.shape, y2.shape)?;
    Ok(combine_enlarged(spatial, dsh, omega))
}

pub fn combine_enlarged(spatial: f64, shape_dist: f64, omega: f64) -> f64 {
    (spatial * spatial + omega * shape_dist * shape_dist).sqrt()
}

pub fn site_distance_matrix(sites: &[Site]) -> DMatrix<f64> {
    let n = sites.len();
    DMatrix::from_fn(n, n, |i, j| sites[i].distance(&sites[j]))
}

/// Elementwise enlarged distance from a spatial and a shape distance matrix.
pub fn enlarged_distance_matrix(
    spatial: &DMatrix<f64>,
    shape: &DMatrix<f64>,
    omega: f64,
) -> DMatrix<f64> {
    spatial.zip_map(shape, |s, d| combine_enlarged(s, d, omega))
}

/// Symmetric matrix of shape distances with a zero diagonal. Each pair is
/// aligned once, with the lower index as template.
pub fn shape_distance_matrix(shapes: &[SrsfFunction]) -> Result<DMatrix<f64>> {
    use rayon::prelude::*;
    let n = shapes.len();
    let normalized: Vec<SrsfFunction> = shapes
        .iter()
        .map(|q| q.normalized())
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| crate::metrics::amplitude_distance(&normalized[i], &normalized[j]))
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (&(i, j), d) in pairs.iter().zip(dists) {
        m[(i, j)] = d;
        m[(j, i)] = d;
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Empirical variogram
// ---------------------------------------------------------------------------

/// Where the largest lag bin ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cutoff {
    /// Half of the largest pairwise distance.
    HalfMax,
    /// The largest pairwise distance.
    Full,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Binning {
    pub bins: usize,
    pub cutoff: Cutoff,
}

impl Default for Binning {
    fn default() -> Self {
        Binning {
            bins: DEFAULT_BINS,
            cutoff: Cutoff::HalfMax,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bin {
    /// Mean pair distance in the bin.
    pub lag: f64,
    pub semivariance: f64,
    pub pair_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmpiricalVariogram {
    pub bins: Vec<Bin>,
}

impl EmpiricalVariogram {
    pub fn lags(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.lag).collect()
    }

    pub fn semivariances(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.semivariance).collect()
    }
}

/// Bins pairs `i < j` by `dist[(i, j)]`; each bin's semivariance is half the
/// mean of `sqdiff[(i, j)]` over its pairs. Empty bins are dropped.
pub fn empirical_variogram_from_pairs(
    dist: &DMatrix<f64>,
    sqdiff: &DMatrix<f64>,
    binning: Binning,
) -> Result<EmpiricalVariogram> {
    let n = dist.nrows();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if dist.ncols() != n || sqdiff.shape() != dist.shape() {
        return Err(Error::InvalidInput(
            "distance and value matrices must be square and equal-sized".into(),
        ));
    }
    if binning.bins == 0 {
        return Err(Error::InvalidArgument(
            "at least one lag bin is required".into(),
        ));
    }
    let mut max_dist: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            max_dist = max_dist.max(dist[(i, j)]);
        }
    }
    let cutoff = match binning.cutoff {
        Cutoff::HalfMax => 0.5 * max_dist,
        Cutoff::Full => max_dist,
        Cutoff::Fixed(c) => c,
    };
    let width = if cutoff > 0.0 {
        cutoff / binning.bins as f64
    } else {
        1.0
    };

    let mut lag_sum = vec![0.0; binning.bins];
    let mut sq_sum = vec![0.0; binning.bins];
    let mut count = vec![0usize; binning.bins];
    for i in 0..n {
        for j in i + 1..n {
            let h = dist[(i, j)];
            if h > cutoff {
                continue;
            }
            let b = ((h / width) as usize).min(binning.bins - 1);
            lag_sum[b] += h;
            sq_sum[b] += sqdiff[(i, j)];
            count[b] += 1;
        }
    }
    let bins = (0..binning.bins)
        .filter(|&b| count[b] > 0)
        .map(|b| Bin {
            lag: lag_sum[b] / count[b] as f64,
            semivariance: 0.5 * sq_sum[b] / count[b] as f64,
            pair_count: count[b],
        })
        .collect();
    Ok(EmpiricalVariogram { bins })
}

/// Trace-variogram of sampled value functions: pairs are compared by their
/// squared L² distance.
pub fn empirical_variogram(
    dist: &DMatrix<f64>,
    values: &[&[f64]],
    dt: f64,
    binning: Binning,
) -> Result<EmpiricalVariogram> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if dist.nrows() != n {
        return Err(Error::InvalidInput(format!(
            "{} value functions for a {}x{} distance matrix",
            n,
            dist.nrows(),
            dist.ncols()
        )));
    }
    let sq = pairwise_sq_dist(values, dt);
    empirical_variogram_from_pairs(dist, &sq, binning)
}

pub fn pairwise_sq_dist(values: &[&[f64]], dt: f64) -> DMatrix<f64> {
    let n = values.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = l2_dist_sq(values[i], values[j], dt);
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Matérn (ν = 0.5) model
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct VariogramModel {
    /// Partial sill σ².
    pub scale: f64,
    pub range: f64,
    pub nugget: f64,
    pub smoothness: f64,
    /// Sum of squared residuals over the bins.
    pub fit_error: f64,
    pub r2: f64,
    /// Set when the bins carried no usable structure and a flat model was
    /// returned.
    pub degenerate: bool,
}

impl VariogramModel {
    pub fn flat() -> Self {
        VariogramModel {
            scale: 0.0,
            range: 1.0,
            nugget: 0.0,
            smoothness: 0.5,
            fit_error: 0.0,
            r2: 0.0,
            degenerate: true,
        }
    }

    /// `nugget + σ²·(1 − exp(−h/ℓ))`, with value `nugget` at `h = 0`.
    pub fn evaluate(&self, h: f64) -> f64 {
        self.nugget + self.scale * (1.0 - (-h.max(0.0) / self.range).exp())
    }

    pub fn sill(&self) -> f64 {
        self.nugget + self.scale
    }

    /// Spatially structured share of the sill, `σ² / (nugget + σ²)`.
    pub fn signal_fraction(&self) -> f64 {
        let sill = self.sill();
        if sill > 0.0 {
            self.scale / sill
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FitOptions {
    pub estimate_nugget: bool,
}

/// Least-squares fit with the nugget fixed at zero.
pub fn fit_matern(emp: &EmpiricalVariogram) -> Result<VariogramModel> {
    fit_matern_with(emp, FitOptions::default())
}

/// Least-squares fit of `(σ², ℓ)` and optionally the nugget.
///
/// For a fixed range the model is linear in `(nugget, σ²)`, so those are
/// solved in closed form under nonnegativity; the range is found by a log-grid
/// scan followed by golden-section refinement.
pub fn fit_matern_with(emp: &EmpiricalVariogram, opts: FitOptions) -> Result<VariogramModel> {
    if emp.bins.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: emp.bins.len(),
        });
    }
    let h = emp.lags();
    let y = emp.semivariances();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let h_max = h.iter().cloned().fold(0.0, f64::max);
    let h_min = h
        .iter()
        .cloned()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);

    let spread = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - y.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread <= 1e-12 * mean.abs().max(1.0) || !h_min.is_finite() {
        let nugget = if opts.estimate_nugget {
            mean.max(0.0)
        } else {
            0.0
        };
        let fit_error: f64 = y.iter().map(|v| (v - nugget).powi(2)).sum();
        return Ok(VariogramModel {
            nugget,
            range: h_max.max(1e-12),
            fit_error,
            r2: if fit_error == 0.0 { 1.0 } else { 0.0 },
            ..VariogramModel::flat()
        });
    }

    let profile = |range: f64| -> (f64, f64, f64) {
        let g: Vec<f64> = h.iter().map(|&hv| 1.0 - (-hv / range).exp()).collect();
        let (nugget, scale) = linear_coefficients(&g, &y, opts.estimate_nugget);
        let sse = g
            .iter()
            .zip(&y)
            .map(|(gv, yv)| (nugget + scale * gv - yv).powi(2))
            .sum();
        (sse, nugget, scale)
    };

    // With a free nugget, ranges below the smallest lag would let the
    // partial sill stand in for the nugget.
    let lo = if opts.estimate_nugget {
        h_min.ln()
    } else {
        (h_min / 100.0).ln()
    };
    let hi = (h_max * 1000.0).ln();
    let steps = 240;
    let mut best_k: usize = 0;
    let mut best_sse = f64::INFINITY;
    for k in 0..=steps {
        let lr = lo + (hi - lo) * k as f64 / steps as f64;
        let sse = profile(lr.exp()).0;
        if sse < best_sse {
            best_sse = sse;
            best_k = k;
        }
    }
    let step = (hi - lo) / steps as f64;
    let a = lo + step * best_k.saturating_sub(1) as f64;
    let b = lo + step * (best_k + 1).min(steps) as f64;
    let log_range = golden_section(|lr| profile(lr.exp()).0, a, b, 1e-10);
    let (mut sse, mut nugget, mut scale) = profile(log_range.exp());
    let mut range = log_range.exp();
    if sse > best_sse {
        let lr = lo + step * best_k as f64;
        range = lr.exp();
        (sse, nugget, scale) = profile(range);
    }

    let r2 = if sst > 0.0 {
        (1.0 - sse / sst).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(VariogramModel {
        scale,
        range,
        nugget,
        smoothness: 0.5,
        fit_error: sse,
        r2,
        degenerate: scale == 0.0,
    })
}

/// Nonnegative least squares for `y ≈ nugget + scale·g`.
fn linear_coefficients(g: &[f64], y: &[f64], with_nugget: bool) -> (f64, f64) {
    let sgg: f64 = g.iter().map(|v| v * v).sum();
    let sgy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
    let scale_only = if sgg > 0.0 { (sgy / sgg).max(0.0) } else { 0.0 };
    if !with_nugget {
        return (0.0, scale_only);
    }
    let n = g.len() as f64;
    let sg: f64 = g.iter().sum();
    let sy: f64 = y.iter().sum();
    let det = n * sgg - sg * sg;
    let sse = |c0: f64, c1: f64| -> f64 {
        g.iter()
            .zip(y)
            .map(|(gv, yv)| (c0 + c1 * gv - yv).powi(2))
            .sum()
    };
    let mut candidates = vec![(0.0, scale_only), ((sy / n).max(0.0), 0.0)];
    if det.abs() > 1e-14 * n * sgg.max(1e-300) {
        let c0 = (sgg * sy - sg * sgy) / det;
        let c1 = (n * sgy - sg * sy) / det;
        if c0 >= 0.0 && c1 >= 0.0 {
            candidates.push((c0, c1));
        }
    }
    candidates
        .into_iter()
        .min_by(|a, b| sse(a.0, a.1).total_cmp(&sse(b.0, b.1)))
        .unwrap()
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

// ---------------------------------------------------------------------------
// ω selection
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct OmegaCandidate {
    pub omega: f64,
    pub empirical: EmpiricalVariogram,
    pub model: VariogramModel,
}

#[derive(Clone, Debug)]
pub struct OmegaSelection {
    pub omega: f64,
    pub model: VariogramModel,
    pub empirical: EmpiricalVariogram,
    pub candidates: Vec<OmegaCandidate>,
}

/// Chooses ω from precomputed pair quantities.
///
/// For each candidate the variogram of `sqdiff` over enlarged distances is
/// fitted. The candidate with the best `r2` wins, except that a positive ω is
/// only accepted when it lowers the fitting error by at least 5% relative to
/// ω = 0.
pub fn select_omega_from_pairs(
    spatial: &DMatrix<f64>,
    shape: &DMatrix<f64>,
    sqdiff: &DMatrix<f64>,
    candidates: &[f64],
    binning: Binning,
) -> Result<OmegaSelection> {
    if !candidates.contains(&0.0) {
        return Err(Error::InvalidArgument(
            "omega candidates must include 0".into(),
        ));
    }
    let mut fitted = Vec::new();
    for &omega in candidates {
        let dist = enlarged_distance_matrix(spatial, shape, omega);
        let emp = empirical_variogram_from_pairs(&dist, sqdiff, binning)?;
        match fit_matern(&emp) {
            Ok(model) => fitted.push(OmegaCandidate {
                omega,
                empirical: emp,
                model,
            }),
            Err(e) if omega == 0.0 => return Err(e),
            Err(_) => {}
        }
    }
    let base = fitted
        .iter()
        .find(|c| c.omega == 0.0)
        .expect("omega = 0 candidate was fitted")
        .clone();
    let mut best = &base;
    for c in &fitted {
        if c.model.r2 > best.model.r2 {
            best = c;
        }
    }
    let chosen = if best.omega > 0.0
        && best.model.fit_error <= (1.0 - OMEGA_MIN_IMPROVEMENT) * base.model.fit_error
    {
        best.clone()
    } else {
        base
    };
    Ok(OmegaSelection {
        omega: chosen.omega,
        model: chosen.model,
        empirical: chosen.empirical,
        candidates: fitted,
    })
}

/// ω selection for a phase variogram of ψ-representations.
pub fn select_omega(
    sites: &[Site],
    shapes: &[SrsfFunction],
    psi_values: &[crate::fdcore::PsiFunction],
    candidates: &[f64],
) -> Result<OmegaSelection> {
    let n = sites.len();
    if shapes.len() != n || psi_values.len() != n {
        return Err(Error::InvalidInput(
            "sites, shapes and phases differ in length".into(),
        ));
    }
    let spatial = site_distance_matrix(sites);
    let shape = shape_distance_matrix(shapes)?;
    let dt = psi_values.first().map(|p| p.grid().step()).unwrap_or(1.0);
    let vals: Vec<&[f64]> = psi_values.iter().map(|p| p.values()).collect();
    let sq = pairwise_sq_dist(&vals, dt);
    select_omega_from_pairs(&spatial, &shape, &sq, candidates, Binning::default())
}
