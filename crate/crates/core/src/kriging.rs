//! Three-stage amplitude-phase kriging.
//!
//! 1. Amplitude: an iterative spatially weighted template. Every observation
//!    is aligned to the current template, the amplitude trace-variogram of
//!    the aligned SRSFs is fitted, and the kriging combination of the aligned
//!    SRSFs becomes the next template.
//! 2. Phase: observations are re-aligned (with a roughness penalty) to the
//!    amplitude prediction; their ψ-representations are kriged with positive
//!    weights over the shape-enlarged domain and projected back to the sphere.
//! 3. Translation: ordinary kriging of the starting values `f_i(0)`.
//!
//! The prediction is `Q⁻¹((q̃₀, γ̃₀⁻¹), T̃₀)`.
//!
//! The ordinary functional kriging baseline and the leave-one-out driver with
//! the E1–E5 error metrics live here as well, so both methods share one
//! harness.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::SpatialDataset;
use crate::error::{Error, Result};
use crate::fdcore::{
    group_action, l2_dist_sq, psi_to_warp, srsf_inverse, srsf_transform, warp_invert, warp_to_psi,
    PsiFunction, SampledFunction, Site, SrsfFunction, WarpingFunction,
};
use crate::metrics::{dp_align, penalized_align, phase_distances_of, shape_distance};
use crate::simgen::stream_rng;
use crate::variogram::{
    empirical_variogram_from_pairs, enlarged_distance_matrix, fit_matern, fit_matern_with,
    pairwise_sq_dist, select_omega_from_pairs, shape_distance_matrix, site_distance_matrix,
    Binning, Cutoff, EmpiricalVariogram, FitOptions, VariogramModel,
};

/// Diagonal jitter added when the Lagrange system is singular.
pub const RIDGE_JITTER: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct KrigingConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Candidate penalties for the phase alignment; a single entry skips the
    /// nested cross-validation.
    pub lambda_grid: Vec<f64>,
    pub omega_candidates: Vec<f64>,
    pub weight_floor: f64,
    pub seed: u64,
    pub cv_folds: usize,
    pub cv_repeats: usize,
    pub bins: usize,
}

impl Default for KrigingConfig {
    fn default() -> Self {
        KrigingConfig {
            max_iterations: 20,
            tolerance: 1e-6,
            lambda_grid: vec![0.0, 0.01, 0.1, 1.0, 10.0],
            omega_candidates: crate::variogram::default_omega_candidates(),
            weight_floor: 1e-6,
            seed: 0,
            cv_folds: 5,
            cv_repeats: 3,
            bins: crate::variogram::DEFAULT_BINS,
        }
    }
}

impl KrigingConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations must be positive".into(),
            ));
        }
        if !(self.weight_floor > 0.0) || (n > 0 && self.weight_floor >= 1.0 / n as f64) {
            return Err(Error::InvalidArgument(format!(
                "weight floor {} must lie in (0, 1/{n})",
                self.weight_floor
            )));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::InvalidArgument(
                "lambda grid must be non-empty and nonnegative".into(),
            ));
        }
        if !self.omega_candidates.contains(&0.0) {
            return Err(Error::InvalidArgument(
                "omega candidates must include 0".into(),
            ));
        }
        Ok(())
    }

    /// Variogram binning used by every kriging stage.
    pub fn binning(&self) -> Binning {
        Binning {
            bins: self.bins,
            cutoff: Cutoff::HalfMax,
        }
    }
}

// ---------------------------------------------------------------------------
// Weight systems
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexWeights {
    pub values: Vec<f64>,
    /// The Lagrange system needed diagonal jitter.
    pub regularized: bool,
    /// Every weight hit the positivity floor; uniform weights were returned.
    pub fallback_uniform: bool,
}

fn renormalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
    w
}

/// Solves `min xᵀ A x + 2 bᵀ x` subject to `Σ x = total` through the
/// Lagrange system. Returns `None` when the system is singular.
fn lagrange_solve(a: &DMatrix<f64>, b: &DVector<f64>, total: f64) -> Option<Vec<f64>> {
    let n = a.nrows();
    let mut sys = DMatrix::zeros(n + 1, n + 1);
    sys.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        sys[(i, n)] = 1.0;
        sys[(n, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    for i in 0..n {
        rhs[i] = -b[i];
    }
    rhs[n] = total;
    let sol = sys.lu().solve(&rhs)?;
    let x: Vec<f64> = sol.iter().take(n).cloned().collect();
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

fn equality_weights(a: &DMatrix<f64>, b: &DVector<f64>, total: f64) -> (Vec<f64>, bool) {
    if let Some(x) = lagrange_solve(a, b, total) {
        return (x, false);
    }
    let n = a.nrows();
    let jittered = a + DMatrix::identity(n, n) * RIDGE_JITTER;
    match lagrange_solve(&jittered, b, total) {
        Some(x) => (x, true),
        None => (vec![total / n as f64; n], true),
    }
}

/// Minimizer of `ηᵀ V η` over `Σ η = 1`. Weights may be negative.
pub fn solve_sum_one_weights(va: &DMatrix<f64>) -> Result<SimplexWeights> {
    let n = va.nrows();
    if n == 0 || va.ncols() != n {
        return Err(Error::InvalidInput(
            "weight matrix must be square and non-empty".into(),
        ));
    }
    if n == 1 {
        return Ok(SimplexWeights {
            values: vec![1.0],
            regularized: false,
            fallback_uniform: false,
        });
    }
    let sym = (va + va.transpose()) * 0.5;
    let (x, regularized) = equality_weights(&sym, &DVector::zeros(n), 1.0);
    Ok(SimplexWeights {
        values: renormalize(x),
        regularized,
        fallback_uniform: false,
    })
}

/// Minimizer of `ζᵀ V ζ` over `Σ ζ = 1` with every `ζ_i ≥ floor`.
///
/// Active-set clamping: weights below the floor are fixed at the floor and
/// the equality-constrained problem is re-solved over the remaining sites
/// until no free weight violates the bound.
pub fn solve_positive_weights(vp: &DMatrix<f64>, floor: f64) -> Result<SimplexWeights> {
    let n = vp.nrows();
    let start = solve_sum_one_weights(vp)?;
    if n == 1 || start.values.iter().all(|&w| w >= floor) {
        return Ok(start);
    }
    if !(floor > 0.0) || floor * n as f64 >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "weight floor {floor} is infeasible for {n} sites"
        )));
    }
    let sym = (vp + vp.transpose()) * 0.5;
    let mut clamped = vec![false; n];
    let mut weights = start.values.clone();
    let mut regularized = start.regularized;
    loop {
        let mut changed = false;
        for i in 0..n {
            if !clamped[i] && weights[i] < floor {
                clamped[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !clamped[i]).collect();
        if free.is_empty() {
            return Ok(SimplexWeights {
                values: vec![1.0 / n as f64; n],
                regularized,
                fallback_uniform: true,
            });
        }
        let fixed: Vec<usize> = (0..n).filter(|&i| clamped[i]).collect();
        let a = DMatrix::from_fn(free.len(), free.len(), |r, c| sym[(free[r], free[c])]);
        let b = DVector::from_fn(free.len(), |r, _| {
            fixed.iter().map(|&f| floor * sym[(free[r], f)]).sum()
        });
        let total = 1.0 - floor * fixed.len() as f64;
        let (x, reg) = equality_weights(&a, &b, total);
        regularized |= reg;
        weights = vec![floor; n];
        for (k, &i) in free.iter().enumerate() {
            weights[i] = x[k];
        }
    }
    Ok(SimplexWeights {
        values: renormalize(weights),
        regularized,
        fallback_uniform: false,
    })
}

/// `V(h_0j) + V(h_i0) − V(h_ij)`.
pub fn kriging_matrix(
    model: &VariogramModel,
    obs: &DMatrix<f64>,
    to_target: &[f64],
) -> DMatrix<f64> {
    let n = obs.nrows();
    let v0: Vec<f64> = to_target.iter().map(|&h| model.evaluate(h)).collect();
    DMatrix::from_fn(n, n, |i, j| v0[j] + v0[i] - model.evaluate(obs[(i, j)]))
}

/// Fits the variogram of `sqdiff` over `dist`, widening the cutoff and
/// finally falling back to a flat model when there are too few lag bins.
pub fn fit_pairs(
    dist: &DMatrix<f64>,
    sqdiff: &DMatrix<f64>,
    binning: Binning,
) -> Result<(EmpiricalVariogram, VariogramModel)> {
    let emp = empirical_variogram_from_pairs(dist, sqdiff, binning)?;
    if let Ok(m) = fit_matern(&emp) {
        return Ok((emp, m));
    }
    let wide = empirical_variogram_from_pairs(
        dist,
        sqdiff,
        Binning {
            cutoff: Cutoff::Full,
            ..binning
        },
    )?;
    match fit_matern(&wide) {
        Ok(m) => Ok((wide, m)),
        Err(Error::InsufficientData { .. }) => Ok((wide, VariogramModel::flat())),
        Err(e) => Err(e),
    }
}

fn nearest_index(sites: &[Site], target: Site) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, s) in sites.iter().enumerate() {
        let d = s.distance(&target);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

fn check_grid(qs: &[SrsfFunction]) -> Result<()> {
    if let Some(first) = qs.first() {
        if qs.iter().any(|q| q.grid() != first.grid()) {
            return Err(Error::InvalidInput(
                "observations are on different grids".into(),
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Amplitude kriging
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct AmplitudeKriging {
    pub estimate: SrsfFunction,
    pub weights: SimplexWeights,
    /// Warps aligning each observation to the final template.
    pub warps: Vec<WarpingFunction>,
    pub aligned: Vec<SrsfFunction>,
    pub empirical: EmpiricalVariogram,
    pub model: VariogramModel,
    pub iterations: usize,
    /// `‖q̂⁽ᵏ⁺¹⁾ − q̂⁽ᵏ⁾‖` at termination.
    pub final_change: f64,
    pub converged: bool,
}

/// Iterative amplitude kriging estimate at `target`.
pub fn amplitude_krige(
    qs: &[SrsfFunction],
    target: Site,
    config: &KrigingConfig,
) -> Result<AmplitudeKriging> {
    let n = qs.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    check_grid(qs)?;
    let sites: Vec<Site> = qs.iter().map(|q| q.site()).collect();
    let site_dist = site_distance_matrix(&sites);
    let to_target: Vec<f64> = sites.iter().map(|s| s.distance(&target)).collect();
    let dt = qs[0].grid().step();

    let mut template = qs[nearest_index(&sites, target)].clone();
    if n == 1 {
        let id = WarpingFunction::identity(qs[0].grid());
        return Ok(AmplitudeKriging {
            estimate: template.clone().with_site(target),
            weights: solve_sum_one_weights(&DMatrix::zeros(1, 1))?,
            warps: vec![id],
            aligned: vec![template],
            empirical: EmpiricalVariogram::default(),
            model: VariogramModel::flat(),
            iterations: 0,
            final_change: 0.0,
            converged: true,
        });
    }

    let mut iterations = 0;
    loop {
        iterations += 1;
        let alignments: Vec<_> = qs
            .par_iter()
            .map(|q| dp_align(&template, q))
            .collect::<Result<_>>()?;
        let aligned: Vec<SrsfFunction> = alignments.iter().map(|a| a.aligned.clone()).collect();
        let vals: Vec<&[f64]> = aligned.iter().map(|q| q.values()).collect();
        let sq = pairwise_sq_dist(&vals, dt);
        let (empirical, model) = fit_pairs(&site_dist, &sq, config.binning())?;
        let weights = solve_sum_one_weights(&kriging_matrix(&model, &site_dist, &to_target))?;
        let next = SrsfFunction::weighted_sum(&aligned, &weights.values)?.with_site(target);
        let change = next.dist(&template);
        template = next;
        let converged = change < config.tolerance;
        if converged || iterations >= config.max_iterations {
            return Ok(AmplitudeKriging {
                estimate: template,
                weights,
                warps: alignments.into_iter().map(|a| a.warp).collect(),
                aligned,
                empirical,
                model,
                iterations,
                final_change: change,
                converged,
            });
        }
    }
}

// ---------------------------------------------------------------------------
// Phase kriging
// ---------------------------------------------------------------------------

/// Phase variogram fitted on the enlarged domain, ready for prediction.
#[derive(Clone, Debug)]
pub struct PhaseModel {
    pub omega: f64,
    pub model: VariogramModel,
    pub empirical: EmpiricalVariogram,
    obs_dist: DMatrix<f64>,
}

impl PhaseModel {
    /// Selects ω and fits the phase variogram of `psis`.
    ///
    /// `spatial` and `shape` are the pairwise site and shape distances of the
    /// observations.
    pub fn fit(
        psis: &[PsiFunction],
        spatial: &DMatrix<f64>,
        shape: &DMatrix<f64>,
        config: &KrigingConfig,
    ) -> Result<Self> {
        let n = psis.len();
        if n == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if n == 1 {
            return Ok(PhaseModel {
                omega: 0.0,
                model: VariogramModel::flat(),
                empirical: EmpiricalVariogram::default(),
                obs_dist: spatial.clone(),
            });
        }
        let dt = psis[0].grid().step();
        let vals: Vec<&[f64]> = psis.iter().map(|p| p.values()).collect();
        let sq = pairwise_sq_dist(&vals, dt);
        let (omega, empirical, model) = match select_omega_from_pairs(
            spatial,
            shape,
            &sq,
            &config.omega_candidates,
            config.binning(),
        ) {
            Ok(sel) => (sel.omega, sel.empirical, sel.model),
            Err(Error::InsufficientData { .. }) => {
                let (emp, m) = fit_pairs(spatial, &sq, config.binning())?;
                (0.0, emp, m)
            }
            Err(e) => return Err(e),
        };
        Ok(PhaseModel {
            omega,
            model,
            empirical,
            obs_dist: enlarged_distance_matrix(spatial, shape, omega),
        })
    }

    /// Predicts the target phase from its site and shape distances to the
    /// observations.
    pub fn predict(
        &self,
        psis: &[PsiFunction],
        spatial_to_target: &[f64],
        shape_to_target: &[f64],
        config: &KrigingConfig,
    ) -> Result<PhaseKriging> {
        let to_target: Vec<f64> = spatial_to_target
            .iter()
            .zip(shape_to_target)
            .map(|(&s, &d)| crate::variogram::combine_enlarged(s, d, self.omega))
            .collect();
        let weights = solve_positive_weights(
            &kriging_matrix(&self.model, &self.obs_dist, &to_target),
            config.weight_floor,
        )?;
        let psi = PsiFunction::project_combination(psis, &weights.values)?;
        let warp = psi_to_warp(&psi)?;
        Ok(PhaseKriging {
            warp,
            psi,
            weights,
            omega: self.omega,
            model: self.model,
        })
    }
}

#[derive(Clone, Debug)]
pub struct PhaseKriging {
    pub warp: WarpingFunction,
    /// `Π(ψ̃₀)`, unit norm.
    pub psi: PsiFunction,
    pub weights: SimplexWeights,
    pub omega: f64,
    pub model: VariogramModel,
}

/// Phase kriging of `psis` at a target described by its distances.
pub fn phase_krige(
    psis: &[PsiFunction],
    spatial: &DMatrix<f64>,
    shape: &DMatrix<f64>,
    spatial_to_target: &[f64],
    shape_to_target: &[f64],
    config: &KrigingConfig,
) -> Result<PhaseKriging> {
    PhaseModel::fit(psis, spatial, shape, config)?.predict(
        psis,
        spatial_to_target,
        shape_to_target,
        config,
    )
}

/// ψ-representations of the warps aligning each observation to `template`.
pub fn relative_phases(
    qs: &[SrsfFunction],
    template: &SrsfFunction,
    lambda: f64,
) -> Result<Vec<PsiFunction>> {
    qs.par_iter()
        .map(|q| penalized_align(template, q, lambda).map(|a| warp_to_psi(&a.warp)))
        .collect()
}

/// Nested K-fold cross-validation of the alignment penalty: each fold's
/// phases are kriged from the other folds and scored by squared extrinsic
/// distance. Ties go to the earlier grid entry.
pub fn select_lambda(
    qs: &[SrsfFunction],
    template: &SrsfFunction,
    spatial: &DMatrix<f64>,
    shape: &DMatrix<f64>,
    config: &KrigingConfig,
) -> Result<(f64, Vec<f64>)> {
    let n = qs.len();
    if config.lambda_grid.len() == 1 || n < 3 {
        return Ok((config.lambda_grid[0], vec![]));
    }
    let folds = config.cv_folds.clamp(2, n);
    let mut splits: Vec<Vec<usize>> = Vec::new();
    for r in 0..config.cv_repeats.max(1) {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream_rng(config.seed, 0x1a3b_0000 + r as u64));
        for f in 0..folds {
            splits.push(
                order
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| k % folds == f)
                    .map(|(_, &i)| i)
                    .collect(),
            );
        }
    }

    let mut losses = Vec::with_capacity(config.lambda_grid.len());
    for &lambda in &config.lambda_grid {
        let psis = relative_phases(qs, template, lambda)?;
        let fold_losses: Vec<f64> = splits
            .par_iter()
            .map(|held| -> Result<f64> {
                let train: Vec<usize> = (0..n).filter(|i| !held.contains(i)).collect();
                let sub = |m: &DMatrix<f64>| {
                    DMatrix::from_fn(train.len(), train.len(), |r, c| m[(train[r], train[c])])
                };
                let train_psis: Vec<PsiFunction> = train.iter().map(|&i| psis[i].clone()).collect();
                let model = PhaseModel::fit(&train_psis, &sub(spatial), &sub(shape), config)?;
                let mut loss = 0.0;
                for &j in held {
                    let sp: Vec<f64> = train.iter().map(|&i| spatial[(i, j)]).collect();
                    let sh: Vec<f64> = train.iter().map(|&i| shape[(i, j)]).collect();
                    let pred = model.predict(&train_psis, &sp, &sh, config)?;
                    loss += pred.psi.extrinsic_dist(&psis[j]).powi(2);
                }
                Ok(loss)
            })
            .collect::<Result<_>>()?;
        losses.push(fold_losses.iter().sum::<f64>() / config.cv_repeats.max(1) as f64);
    }
    let mut best = 0;
    for k in 1..losses.len() {
        if losses[k] < losses[best] {
            best = k;
        }
    }
    Ok((config.lambda_grid[best], losses))
}

// ---------------------------------------------------------------------------
// Translation and combination
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TranslationKriging {
    pub value: f64,
    pub weights: SimplexWeights,
    pub model: VariogramModel,
}

/// Scalar ordinary kriging of the starting values.
pub fn translation_krige(
    starts: &[f64],
    sites: &[Site],
    target: Site,
    binning: Binning,
) -> Result<TranslationKriging> {
    let n = starts.len();
    if n == 0 || sites.len() != n {
        return Err(Error::InvalidInput(
            "starts and sites must be non-empty and equal-length".into(),
        ));
    }
    let first = starts[0];
    if starts.iter().all(|&s| s == first) {
        return Ok(TranslationKriging {
            value: first,
            weights: SimplexWeights {
                values: vec![1.0 / n as f64; n],
                regularized: false,
                fallback_uniform: false,
            },
            model: VariogramModel::flat(),
        });
    }
    let dist = site_distance_matrix(sites);
    let sq = DMatrix::from_fn(n, n, |i, j| (starts[i] - starts[j]).powi(2));
    let model = if n > 1 {
        fit_pairs(&dist, &sq, binning)?.1
    } else {
        VariogramModel::flat()
    };
    let to_target: Vec<f64> = sites.iter().map(|s| s.distance(&target)).collect();
    let weights = solve_sum_one_weights(&kriging_matrix(&model, &dist, &to_target))?;
    let value = weights.values.iter().zip(starts).map(|(w, s)| w * s).sum();
    Ok(TranslationKriging {
        value,
        weights,
        model,
    })
}

/// `f₀* = Q⁻¹((q̃₀, γ̃₀⁻¹), T̃₀)`.
pub fn combine_prediction(
    amplitude: &SrsfFunction,
    phase: &WarpingFunction,
    translation: f64,
) -> Result<SampledFunction> {
    let q = group_action(amplitude, &warp_invert(phase)?)?.with_start(translation);
    srsf_inverse(&q)
}

// ---------------------------------------------------------------------------
// Full predictors
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ApkPrediction {
    pub amplitude: AmplitudeKriging,
    pub phase: PhaseKriging,
    pub translation: TranslationKriging,
    pub lambda: f64,
    pub lambda_losses: Vec<f64>,
    pub combined: SampledFunction,
}

/// Amplitude-phase kriging at `target`.
///
/// `shape` optionally supplies the pairwise shape distances of the
/// observations so repeated predictions on one dataset share the alignments.
pub fn predict_apk(
    data: &SpatialDataset,
    target: Site,
    config: &KrigingConfig,
    shape: Option<&DMatrix<f64>>,
) -> Result<ApkPrediction> {
    config.validate(data.len())?;
    let qs = data.srsfs()?;
    let sites = data.sites();
    let amplitude = amplitude_krige(&qs, target, config)?;
    let spatial = site_distance_matrix(&sites);
    let shape = match shape {
        Some(m) => m.clone(),
        None => shape_distance_matrix(&qs)?,
    };
    let q0 = &amplitude.estimate;
    let shape_to_target: Vec<f64> = if q0.norm() > 0.0 {
        qs.par_iter()
            .map(|q| shape_distance(q0, q))
            .collect::<Result<_>>()?
    } else {
        vec![0.0; qs.len()]
    };
    let spatial_to_target: Vec<f64> = sites.iter().map(|s| s.distance(&target)).collect();

    let (lambda, lambda_losses) = select_lambda(&qs, q0, &spatial, &shape, config)?;
    let psis = relative_phases(&qs, q0, lambda)?;
    let phase = phase_krige(
        &psis,
        &spatial,
        &shape,
        &spatial_to_target,
        &shape_to_target,
        config,
    )?;

    let starts: Vec<f64> = qs.iter().map(|q| q.start()).collect();
    let translation = translation_krige(&starts, &sites, target, config.binning())?;
    let combined = combine_prediction(q0, &phase.warp, translation.value)?.with_site(target);
    Ok(ApkPrediction {
        amplitude,
        phase,
        translation,
        lambda,
        lambda_losses,
        combined,
    })
}

#[derive(Clone, Debug)]
pub struct OkPrediction {
    pub function: SampledFunction,
    pub weights: SimplexWeights,
    pub empirical: EmpiricalVariogram,
    pub model: VariogramModel,
}

/// Ordinary functional kriging on the raw functions.
pub fn ordinary_krige_functional(
    data: &SpatialDataset,
    target: Site,
    binning: Binning,
) -> Result<OkPrediction> {
    let n = data.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let sites = data.sites();
    let dist = site_distance_matrix(&sites);
    let vals: Vec<&[f64]> = data.functions().iter().map(|f| f.values()).collect();
    let (empirical, model) = if n > 1 {
        fit_pairs(&dist, &pairwise_sq_dist(&vals, data.grid().step()), binning)?
    } else {
        (EmpiricalVariogram::default(), VariogramModel::flat())
    };
    let to_target: Vec<f64> = sites.iter().map(|s| s.distance(&target)).collect();
    let weights = solve_sum_one_weights(&kriging_matrix(&model, &dist, &to_target))?;
    let mut acc = vec![0.0; data.grid().len()];
    for (f, w) in data.functions().iter().zip(&weights.values) {
        for (a, v) in acc.iter_mut().zip(f.values()) {
            *a += w * v;
        }
    }
    Ok(OkPrediction {
        function: SampledFunction::new(data.grid(), acc, target)?,
        weights,
        empirical,
        model,
    })
}

// ---------------------------------------------------------------------------
// Trace-variogram decomposition
// ---------------------------------------------------------------------------

/// A fitted variogram with its empirical bins.
#[derive(Clone, Debug)]
pub struct FittedVariogram {
    pub empirical: EmpiricalVariogram,
    pub model: VariogramModel,
}

/// The raw trace-variogram and its amplitude and phase components.
#[derive(Clone, Debug)]
pub struct TraceVariograms {
    pub raw: FittedVariogram,
    pub amplitude: FittedVariogram,
    pub phase: FittedVariogram,
    /// Mean of the aligned SRSFs used as the common template.
    pub template: SrsfFunction,
}

fn fit_with(
    dist: &DMatrix<f64>,
    sq: &DMatrix<f64>,
    binning: Binning,
    opts: FitOptions,
) -> Result<FittedVariogram> {
    let empirical = empirical_variogram_from_pairs(dist, sq, binning)?;
    let model = fit_matern_with(&empirical, opts)?;
    Ok(FittedVariogram { empirical, model })
}

/// Fits the raw trace-variogram of the functions, the amplitude
/// trace-variogram of the SRSFs aligned to a common template, and the phase
/// trace-variogram of the aligning warps' ψ-representations.
///
/// The template is the iterated mean of the aligned SRSFs, started from
/// their plain mean.
pub fn trace_variograms(
    data: &SpatialDataset,
    binning: Binning,
    opts: FitOptions,
    iterations: usize,
) -> Result<TraceVariograms> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let qs = data.srsfs()?;
    let dt = data.grid().step();
    let dist = site_distance_matrix(&data.sites());
    let uniform = vec![1.0 / n as f64; n];
    let mut template = SrsfFunction::weighted_sum(&qs, &uniform)?;
    let mut alignments = Vec::new();
    for _ in 0..iterations.max(1) {
        alignments = qs
            .par_iter()
            .map(|q| dp_align(&template, q))
            .collect::<Result<Vec<_>>>()?;
        let aligned: Vec<SrsfFunction> = alignments.iter().map(|a| a.aligned.clone()).collect();
        template = SrsfFunction::weighted_sum(&aligned, &uniform)?;
    }
    let raw_vals: Vec<&[f64]> = data.functions().iter().map(|f| f.values()).collect();
    let amp_vals: Vec<&[f64]> = alignments.iter().map(|a| a.aligned.values()).collect();
    let psis: Vec<PsiFunction> = alignments.iter().map(|a| warp_to_psi(&a.warp)).collect();
    let psi_vals: Vec<&[f64]> = psis.iter().map(|p| p.values()).collect();
    Ok(TraceVariograms {
        raw: fit_with(&dist, &pairwise_sq_dist(&raw_vals, dt), binning, opts)?,
        amplitude: fit_with(&dist, &pairwise_sq_dist(&amp_vals, dt), binning, opts)?,
        phase: fit_with(&dist, &pairwise_sq_dist(&psi_vals, dt), binning, opts)?,
        template,
    })
}

// ---------------------------------------------------------------------------
// Leave-one-out cross-validation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Amplitude-phase kriging.
    Apk,
    /// Ordinary functional kriging.
    Ok,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Apk => "apk",
            Method::Ok => "ok",
        }
    }
}

/// The five prediction error metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct ErrorMetrics {
    /// `‖f* ∘ γ − f‖²` after aligning the prediction to the truth.
    pub e1: f64,
    /// The same on first derivatives.
    pub e2: f64,
    /// Squared amplitude distance.
    pub e3: f64,
    /// Squared intrinsic phase distance.
    pub e4: f64,
    /// Raw squared L² distance.
    pub e5: f64,
}

impl ErrorMetrics {
    pub fn as_array(&self) -> [f64; 5] {
        [self.e1, self.e2, self.e3, self.e4, self.e5]
    }

    pub fn mean(items: &[ErrorMetrics]) -> ErrorMetrics {
        let n = items.len().max(1) as f64;
        let mut m = ErrorMetrics::default();
        for e in items {
            m.e1 += e.e1 / n;
            m.e2 += e.e2 / n;
            m.e3 += e.e3 / n;
            m.e4 += e.e4 / n;
            m.e5 += e.e5 / n;
        }
        m
    }
}

/// Scores `prediction` against `truth`. The prediction is aligned to the
/// truth once and that alignment feeds E1–E4.
pub fn prediction_errors(
    prediction: &SampledFunction,
    truth: &SampledFunction,
) -> Result<ErrorMetrics> {
    let q_pred = srsf_transform(prediction)?;
    let q_true = srsf_transform(truth)?;
    let al = dp_align(&q_true, &q_pred)?;
    let aligned = prediction.compose(&al.warp)?;
    let dt = truth.grid().step();
    Ok(ErrorMetrics {
        e1: aligned.dist_sq(truth),
        e2: l2_dist_sq(&aligned.derivative(), &truth.derivative(), dt),
        e3: al.cost * al.cost,
        e4: phase_distances_of(&al.warp).intrinsic.powi(2),
        e5: prediction.dist_sq(truth),
    })
}

#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub index: usize,
    pub prediction: Option<SampledFunction>,
    pub metrics: std::result::Result<ErrorMetrics, String>,
}

#[derive(Clone, Debug)]
pub struct LoocvReport {
    pub method: Method,
    pub folds: Vec<FoldOutcome>,
    /// Mean over the folds that succeeded.
    pub mean: ErrorMetrics,
}

impl LoocvReport {
    pub fn failed_folds(&self) -> usize {
        self.folds.iter().filter(|f| f.metrics.is_err()).count()
    }
}

/// Leave-one-out driver over an arbitrary predictor. The predictor only ever
/// sees the training subset and the held-out site.
pub fn loocv_with<P>(data: &SpatialDataset, method: Method, predictor: P) -> Result<LoocvReport>
where
    P: Fn(usize, &SpatialDataset, Site) -> Result<SampledFunction> + Sync,
{
    let n = data.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let folds: Vec<FoldOutcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let truth = &data.functions()[i];
            let result = data
                .without(i)
                .and_then(|train| predictor(i, &train, truth.site()))
                .and_then(|pred| prediction_errors(&pred, truth).map(|m| (pred, m)));
            match result {
                Ok((pred, m)) => FoldOutcome {
                    index: i,
                    prediction: Some(pred),
                    metrics: Ok(m),
                },
                Err(e) => FoldOutcome {
                    index: i,
                    prediction: None,
                    metrics: Err(e.to_string()),
                },
            }
        })
        .collect();
    let ok: Vec<ErrorMetrics> = folds
        .iter()
        .filter_map(|f| f.metrics.as_ref().ok().copied())
        .collect();
    Ok(LoocvReport {
        method,
        mean: ErrorMetrics::mean(&ok),
        folds,
    })
}

/// Leave-one-out cross-validation of one method.
pub fn loocv_metrics(
    data: &SpatialDataset,
    config: &KrigingConfig,
    method: Method,
) -> Result<LoocvReport> {
    config.validate(data.len())?;
    match method {
        Method::Ok => loocv_with(data, method, |_, train, site| {
            Ok(ordinary_krige_functional(train, site, config.binning())?.function)
        }),
        Method::Apk => {
            let shape = shape_distance_matrix(&data.srsfs()?)?;
            loocv_with(data, method, |i, train, site| {
                let keep: Vec<usize> = (0..data.len()).filter(|&k| k != i).collect();
                let sub =
                    DMatrix::from_fn(keep.len(), keep.len(), |r, c| shape[(keep[r], keep[c])]);
                let fold_config = KrigingConfig {
                    seed: crate::simgen::derive_seed(config.seed, i as u64),
                    ..config.clone()
                };
                Ok(predict_apk(train, site, &fold_config, Some(&sub))?.combined)
            })
        }
    }
}
