//! Multi-replicate simulation studies: kriging error tables and clustering
//! rand indices.
//!
//! Replicates run in parallel, each on its own derived seed. Observed
//! functions are pre-smoothed with the second-difference smoother before
//! any method sees them; the smoothed functions also serve as the truth
//! when scoring.

use rayon::prelude::*;

use crate::clustering::{
    amplitude_from_pairwise, hierarchical_cluster, l2_dissimilarity_matrix, pairwise_distances,
    phase_from_pairwise, rand_index, Linkage, Weighting,
};
use crate::dataset::SpatialDataset;
use crate::error::{Error, Result};
use crate::kriging::{loocv_metrics, ErrorMetrics, KrigingConfig, Method};
use crate::preprocess::smooth_dataset;
use crate::simgen::{
    derive_seed, gen_cluster_dataset, gen_kriging_dataset, ClusterDesignParams,
    KrigingDesignParams, SimDataset,
};

/// Default pre-smoothing for simulated data.
pub const DEFAULT_SIM_IOTA: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct KrigingStudyParams {
    /// Design template; its seed is replaced per replicate.
    pub design: KrigingDesignParams,
    pub replicates: usize,
    pub seed: u64,
    pub iota: f64,
    pub config: KrigingConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrigingReplicate {
    pub replicate: usize,
    pub seed: u64,
    pub apk: ErrorMetrics,
    pub ok: ErrorMetrics,
    pub failed_folds: usize,
}

/// LOOCV of both methods on one generated dataset.
pub fn kriging_replicate(
    data: &SpatialDataset,
    config: &KrigingConfig,
    iota: f64,
) -> Result<(ErrorMetrics, ErrorMetrics, usize)> {
    let smoothed = smooth_dataset(data, iota)?;
    let apk = loocv_metrics(&smoothed, config, Method::Apk)?;
    let ok = loocv_metrics(&smoothed, config, Method::Ok)?;
    Ok((apk.mean, ok.mean, apk.failed_folds() + ok.failed_folds()))
}

pub fn kriging_study(p: &KrigingStudyParams) -> Result<Vec<KrigingReplicate>> {
    (0..p.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(p.seed, r as u64);
            let design = KrigingDesignParams {
                seed,
                ..p.design.clone()
            };
            let sim = gen_kriging_dataset(&design)?;
            let config = KrigingConfig {
                seed,
                ..p.config.clone()
            };
            let (apk, ok, failed_folds) = kriging_replicate(&sim.dataset, &config, p.iota)?;
            Ok(KrigingReplicate {
                replicate: r,
                seed,
                apk,
                ok,
                failed_folds,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ClusterStudyParams {
    pub design: ClusterDesignParams,
    pub replicates: usize,
    pub seed: u64,
    pub iota: f64,
    pub k: usize,
    pub linkage: Linkage,
    /// Enlarged-domain weight for the phase dissimilarity.
    pub omega: f64,
}

/// Rand indices of one clustering replicate against the true partitions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterScores {
    /// Amplitude clustering against the true amplitude partition.
    pub amplitude: f64,
    /// Phase clustering against the true phase partition.
    pub phase: f64,
    /// L² clustering against the true amplitude partition.
    pub l2_amplitude: f64,
    /// L² clustering against the true phase partition.
    pub l2_phase: f64,
}

/// Clusters a simulated dataset with spatially weighted amplitude, phase and
/// L² dissimilarities and scores each partition.
pub fn cluster_replicate(sim: &SimDataset, p: &ClusterStudyParams) -> Result<ClusterScores> {
    let (Some(amp_truth), Some(phase_truth)) = (&sim.amplitude_partition, &sim.phase_partition)
    else {
        return Err(Error::InvalidInput("dataset has no true partitions".into()));
    };
    let data = smooth_dataset(&sim.dataset, p.iota)?;
    let pd = pairwise_distances(&data.srsfs()?)?;
    let amp = amplitude_from_pairwise(&data, &pd, Weighting::Spatial)?;
    let phase = phase_from_pairwise(&data, &pd, p.omega, Weighting::Spatial)?;
    let l2 = l2_dissimilarity_matrix(&data, Weighting::Spatial)?;
    let amp_part = hierarchical_cluster(&amp.matrix, p.k, p.linkage)?;
    let phase_part = hierarchical_cluster(&phase.matrix, p.k, p.linkage)?;
    let l2_part = hierarchical_cluster(&l2.matrix, p.k, p.linkage)?;
    Ok(ClusterScores {
        amplitude: rand_index(&amp_part, amp_truth)?,
        phase: rand_index(&phase_part, phase_truth)?,
        l2_amplitude: rand_index(&l2_part, amp_truth)?,
        l2_phase: rand_index(&l2_part, phase_truth)?,
    })
}

pub fn cluster_study(p: &ClusterStudyParams) -> Result<Vec<ClusterScores>> {
    (0..p.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(p.seed, r as u64);
            let sim = gen_cluster_dataset(&ClusterDesignParams {
                seed,
                ..p.design.clone()
            })?;
            cluster_replicate(&sim, p)
        })
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
