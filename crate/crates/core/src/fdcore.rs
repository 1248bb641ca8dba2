//! Functions on a shared uniform grid over `[0, 1]`, the square-root slope
//! transform (SRSF) and the algebra of the warping group.
//!
//! Derivatives use central differences at interior nodes and one-sided
//! differences at the two boundary nodes. Every integral and norm is a
//! trapezoidal sum.

use crate::error::{Error, Result};

/// Number of grid points used when nothing else is configured.
pub const DEFAULT_GRID_LEN: usize = 101;

/// Uniform grid `0 = t_0 < t_1 < ... < t_{T-1} = 1`.
///
/// A uniform grid is fully determined by its length, so it is passed by value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    len: usize,
}

impl Grid {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidInput(format!(
                "a grid needs at least 2 points, got {len}"
            )));
        }
        Ok(Grid { len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.len - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.len {
            1.0
        } else {
            k as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.point(k)).collect()
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.len).map(|k| f(self.point(k))).collect()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            len: DEFAULT_GRID_LEN,
        }
    }
}

/// A spatial location.
#[derive(Clone, Copy, Debug, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Site {
    pub x: f64,
    pub y: f64,
}

impl Site {
    pub fn new(x: f64, y: f64) -> Self {
        Site { x, y }
    }

    pub fn distance(&self, other: &Site) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

// ---------------------------------------------------------------------------
// Quadrature, differentiation and interpolation on a uniform grid
// ---------------------------------------------------------------------------

/// Trapezoidal integral of samples with spacing `dt`.
pub fn trapz(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Cumulative trapezoidal integral, starting at zero.
pub fn cumtrapz(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Cumulative integral from piecewise-cubic interpolation (fourth order),
/// starting at zero. Falls back to [`cumtrapz`] below four samples.
pub fn cumulative_integral(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n < 4 {
        return cumtrapz(values, dt);
    }
    let g = values;
    let h = dt / 24.0;
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..n - 1 {
        acc += if i == 0 {
            h * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3])
        } else if i == n - 2 {
            h * (g[n - 4] - 5.0 * g[n - 3] + 19.0 * g[n - 2] + 9.0 * g[n - 1])
        } else {
            h * (-g[i - 1] + 13.0 * g[i] + 13.0 * g[i + 1] - g[i + 2])
        };
        out.push(acc);
    }
    out
}

/// Numerical derivative: central differences inside, one-sided at the ends.
pub fn derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    out[0] = (values[1] - values[0]) / dt;
    out[n - 1] = (values[n - 1] - values[n - 2]) / dt;
    for k in 1..n - 1 {
        out[k] = (values[k + 1] - values[k - 1]) / (2.0 * dt);
    }
    out
}

/// Fourth-order central differences inside, second-order one-sided
/// differences next to the ends. Falls back to [`derivative`] below five
/// samples.
pub fn derivative_smooth(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n < 5 {
        return derivative(values, dt);
    }
    let v = values;
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt);
    out[1] = (v[2] - v[0]) / (2.0 * dt);
    out[n - 2] = (v[n - 1] - v[n - 3]) / (2.0 * dt);
    for k in 2..n - 2 {
        out[k] = (-v[k + 2] + 8.0 * v[k + 1] - 8.0 * v[k - 1] + v[k - 2]) / (12.0 * dt);
    }
    out
}

/// Linear interpolation of uniform-grid samples at `x`, clamped to `[0, 1]`.
pub fn interp(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let x = x.clamp(0.0, 1.0);
    let pos = x * (n - 1) as f64;
    let k = (pos.floor() as usize).min(n - 2);
    let frac = pos - k as f64;
    values[k] + frac * (values[k + 1] - values[k])
}

pub fn inner(a: &[f64], b: &[f64], dt: f64) -> f64 {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    trapz(&prod, dt)
}

pub fn l2_norm(values: &[f64], dt: f64) -> f64 {
    inner(values, values, dt).max(0.0).sqrt()
}

/// Squared L² distance between two sample vectors.
pub fn l2_dist_sq(a: &[f64], b: &[f64], dt: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    trapz(&d, dt)
}

fn check_len(grid: Grid, values: &[f64], what: &str) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "{what}: {} values for a grid of {}",
            values.len(),
            grid.len()
        )));
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what}: non-finite value at grid index {k}"
        )));
    }
    Ok(())
}

fn check_same_grid(a: Grid, b: Grid) -> Result<()> {
    if a != b {
        return Err(Error::InvalidInput(format!(
            "grid mismatch: {} vs {} points",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Function types
// ---------------------------------------------------------------------------

/// A real function sampled on the grid and attached to a site.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
    site: Site,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>, site: Site) -> Result<Self> {
        check_len(grid, &values, "sampled function")?;
        Ok(SampledFunction { grid, values, site })
    }

    pub fn from_fn(grid: Grid, site: Site, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.sample(f), site)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn site(&self) -> Site {
        self.site
    }

    pub fn with_site(mut self, site: Site) -> Self {
        self.site = site;
        self
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, values, self.site)
    }

    pub fn derivative(&self) -> Vec<f64> {
        derivative_smooth(&self.values, self.grid.step())
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values, self.grid.step())
    }

    pub fn dist_sq(&self, other: &SampledFunction) -> f64 {
        l2_dist_sq(&self.values, &other.values, self.grid.step())
    }

    /// `f ∘ γ` by linear interpolation.
    pub fn compose(&self, warp: &WarpingFunction) -> Result<SampledFunction> {
        check_same_grid(self.grid, warp.grid)?;
        let values = warp
            .values
            .iter()
            .map(|&g| interp(&self.values, g))
            .collect();
        SampledFunction::new(self.grid, values, self.site)
    }

    /// Linear resampling onto another uniform grid.
    pub fn resample(&self, grid: Grid) -> SampledFunction {
        let values = grid.sample(|t| interp(&self.values, t));
        SampledFunction {
            grid,
            values,
            site: self.site,
        }
    }
}

/// SRSF `q = sign(ḟ)·√|ḟ|` together with the starting value `f(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SrsfFunction {
    grid: Grid,
    values: Vec<f64>,
    start: f64,
    site: Site,
}

impl SrsfFunction {
    pub fn new(grid: Grid, values: Vec<f64>, start: f64, site: Site) -> Result<Self> {
        check_len(grid, &values, "srsf")?;
        if !start.is_finite() {
            return Err(Error::InvalidInput("srsf start value is not finite".into()));
        }
        Ok(SrsfFunction {
            grid,
            values,
            start,
            site,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn site(&self) -> Site {
        self.site
    }

    pub fn with_start(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    pub fn with_site(mut self, site: Site) -> Self {
        self.site = site;
        self
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values, self.grid.step())
    }

    pub fn dist(&self, other: &SrsfFunction) -> f64 {
        l2_dist_sq(&self.values, &other.values, self.grid.step()).sqrt()
    }

    pub fn scaled(&self, c: f64) -> SrsfFunction {
        SrsfFunction {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// `q / ‖q‖`; fails for a zero-norm SRSF.
    pub fn normalized(&self) -> Result<SrsfFunction> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::Degenerate("SRSF has zero norm".into()));
        }
        Ok(self.scaled(1.0 / n))
    }

    /// Weighted combination `Σ w_i q_i`; start and site are taken from the
    /// first element.
    pub fn weighted_sum(items: &[SrsfFunction], weights: &[f64]) -> Result<SrsfFunction> {
        let first = items
            .first()
            .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
        if items.len() != weights.len() {
            return Err(Error::InvalidInput(
                "weights and functions differ in length".into(),
            ));
        }
        let mut acc = vec![0.0; first.grid.len()];
        for (q, w) in items.iter().zip(weights) {
            check_same_grid(first.grid, q.grid)?;
            for (a, v) in acc.iter_mut().zip(&q.values) {
                *a += w * v;
            }
        }
        SrsfFunction::new(first.grid, acc, first.start, first.site)
    }
}

/// Boundary-preserving, strictly increasing map of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpingFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl WarpingFunction {
    /// Validates the warp invariants. Endpoints within 1e-9 of 0 and 1 are
    /// snapped to the exact values.
    pub fn new(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        check_len(grid, &values, "warping function")?;
        let n = values.len();
        if values[0].abs() > 1e-9 || (values[n - 1] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWarp(format!(
                "endpoints must be 0 and 1, got {} and {}",
                values[0],
                values[n - 1]
            )));
        }
        values[0] = 0.0;
        values[n - 1] = 1.0;
        if let Some(k) = values.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidWarp(format!(
                "not strictly increasing between grid indices {k} and {}",
                k + 1
            )));
        }
        Ok(WarpingFunction { grid, values })
    }

    pub fn identity(grid: Grid) -> Self {
        WarpingFunction {
            grid,
            values: grid.points(),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative(&self) -> Vec<f64> {
        derivative(&self.values, self.grid.step())
    }

    pub fn max_abs_diff(&self, other: &WarpingFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Maximum deviation from the identity warp.
    pub fn deviation_from_identity(&self) -> f64 {
        self.max_abs_diff(&WarpingFunction::identity(self.grid))
    }
}

/// `ψ = √γ̇`, a point on the positive orthant of the unit L² sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl PsiFunction {
    /// Wraps nonnegative samples and rescales them to unit norm.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        check_len(grid, &values, "psi")?;
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("psi values must be nonnegative".into()));
        }
        let norm = l2_norm(&values, grid.step());
        if !(norm > 0.0) {
            return Err(Error::Degenerate("psi has zero norm".into()));
        }
        Ok(PsiFunction {
            grid,
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn identity(grid: Grid) -> Self {
        PsiFunction {
            grid,
            values: vec![1.0; grid.len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values, self.grid.step())
    }

    pub fn inner(&self, other: &PsiFunction) -> f64 {
        inner(&self.values, &other.values, self.grid.step())
    }

    /// Extrinsic distance `‖ψ₁ − ψ₂‖`.
    pub fn extrinsic_dist(&self, other: &PsiFunction) -> f64 {
        l2_dist_sq(&self.values, &other.values, self.grid.step()).sqrt()
    }

    /// Arc length `arccos⟨ψ₁, ψ₂⟩` with the inner product clamped to `[-1, 1]`.
    pub fn intrinsic_dist(&self, other: &PsiFunction) -> f64 {
        self.inner(other).clamp(-1.0, 1.0).acos()
    }

    /// Projection of the positive combination `Σ w_i ψ_i` back to the sphere.
    pub fn project_combination(items: &[PsiFunction], weights: &[f64]) -> Result<PsiFunction> {
        let first = items
            .first()
            .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
        let mut acc = vec![0.0; first.grid.len()];
        for (p, w) in items.iter().zip(weights) {
            for (a, v) in acc.iter_mut().zip(&p.values) {
                *a += w * v;
            }
        }
        // Clean tiny negative rounding from non-positive weights.
        for a in acc.iter_mut() {
            if *a < 0.0 {
                *a = 0.0;
            }
        }
        PsiFunction::new(first.grid, acc)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Square-root slope transform; `sign(0)·0` is taken as 0.
pub fn srsf_transform(f: &SampledFunction) -> Result<SrsfFunction> {
    let d = f.derivative();
    if let Some(k) = d.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite derivative at grid index {k}"
        )));
    }
    let values = d
        .iter()
        .map(|&v| v.signum() * v.abs().sqrt())
        .map(|v| if v == 0.0 { 0.0 } else { v })
        .collect();
    SrsfFunction::new(f.grid, values, f.values[0], f.site)
}

/// `f(t) = f(0) + ∫₀ᵗ q|q|`.
pub fn srsf_inverse(q: &SrsfFunction) -> Result<SampledFunction> {
    let integrand: Vec<f64> = q.values.iter().map(|v| v * v.abs()).collect();
    let values = cumulative_integral(&integrand, q.grid.step())
        .into_iter()
        .map(|v| v + q.start)
        .collect();
    SampledFunction::new(q.grid, values, q.site)
}

/// Warping action `(q, γ) = (q ∘ γ)·√γ̇`.
pub fn group_action(q: &SrsfFunction, g: &WarpingFunction) -> Result<SrsfFunction> {
    check_same_grid(q.grid, g.grid)?;
    let gdot = g.derivative();
    if let Some(k) = gdot.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidWarp(format!(
            "non-positive slope at grid index {k}"
        )));
    }
    let values = g
        .values
        .iter()
        .zip(&gdot)
        .map(|(&gv, &gd)| interp(&q.values, gv) * gd.sqrt())
        .collect();
    SrsfFunction::new(q.grid, values, q.start, q.site)
}

/// Pointwise `g1(g2(t))`.
pub fn warp_compose(g1: &WarpingFunction, g2: &WarpingFunction) -> Result<WarpingFunction> {
    check_same_grid(g1.grid, g2.grid)?;
    let values = g2.values.iter().map(|&t| interp(&g1.values, t)).collect();
    WarpingFunction::new(g1.grid, values)
}

/// Numerical inverse: swap axes and re-interpolate onto the grid.
pub fn warp_invert(g: &WarpingFunction) -> Result<WarpingFunction> {
    let grid = g.grid;
    let n = grid.len();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let t = grid.point(k);
        while seg + 2 < n && g.values[seg + 1] < t {
            seg += 1;
        }
        let (y0, y1) = (g.values[seg], g.values[seg + 1]);
        let frac = ((t - y0) / (y1 - y0)).clamp(0.0, 1.0);
        out.push(grid.point(seg) + frac * grid.step());
    }
    out[0] = 0.0;
    out[n - 1] = 1.0;
    WarpingFunction::new(grid, out)
}

/// `ψ = √γ̇` renormalized to unit discrete norm.
pub fn warp_to_psi(g: &WarpingFunction) -> PsiFunction {
    let values: Vec<f64> = g
        .derivative()
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    // A valid warp always has positive central differences, so the norm is positive.
    PsiFunction::new(g.grid, values).expect("warp derivative has positive norm")
}

/// `γ(t) = ∫₀ᵗ ψ²`, endpoint rescaled so that `γ(1) = 1`.
pub fn psi_to_warp(p: &PsiFunction) -> Result<WarpingFunction> {
    let sq: Vec<f64> = p.values.iter().map(|v| v * v).collect();
    let cum = cumtrapz(&sq, p.grid.step());
    let total = *cum.last().unwrap_or(&0.0);
    if !(total > 0.0) {
        return Err(Error::InvalidWarp("psi integrates to zero".into()));
    }
    WarpingFunction::new(p.grid, cum.into_iter().map(|v| v / total).collect())
}
