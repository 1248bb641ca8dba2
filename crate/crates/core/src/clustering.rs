//! Spatially weighted dissimilarities and agglomerative clustering.
//!
//! Each pairwise distance is multiplied by a fitted variogram evaluated at
//! the pair's (spatial or enlarged) separation, so that nearby sites with
//! different functions are pulled apart less than distant ones.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dataset::SpatialDataset;
use crate::error::{Error, Result};
use crate::fdcore::SrsfFunction;
use crate::kriging::fit_pairs;
use crate::metrics::{dp_align, phase_distances_of};
use crate::variogram::{
    enlarged_distance_matrix, pairwise_sq_dist, shape_distance_matrix, site_distance_matrix,
    Binning, EmpiricalVariogram, VariogramModel,
};

/// Largest tolerated `|d_ij − d_ji|`, relative to the largest entry.
pub const ASYMMETRY_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct DissimilarityMatrix {
    labels: Vec<String>,
    values: DMatrix<f64>,
}

impl DissimilarityMatrix {
    /// Validates and symmetrizes by averaging `d_ij` and `d_ji`.
    pub fn new(labels: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "{n} labels for a {}x{} matrix",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "dissimilarities must be finite and nonnegative".into(),
            ));
        }
        let scale = values.iter().cloned().fold(0.0, f64::max);
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "nonzero diagonal entry at {i}"
                )));
            }
            for j in 0..i {
                if (values[(i, j)] - values[(j, i)]).abs() > ASYMMETRY_TOLERANCE * scale {
                    return Err(Error::InvalidInput(format!(
                        "entries ({i},{j}) and ({j},{i}) disagree"
                    )));
                }
            }
        }
        let values = (&values + values.transpose()) * 0.5;
        Ok(DissimilarityMatrix { labels, values })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn scaled(&self, c: f64) -> DissimilarityMatrix {
        DissimilarityMatrix {
            labels: self.labels.clone(),
            values: &self.values * c,
        }
    }
}

/// Whether dissimilarities are multiplied by a fitted variogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    Spatial,
    /// Plain distances, as in clustering without spatial information.
    None,
}

/// A weighted matrix together with the variogram that weighted it.
#[derive(Clone, Debug)]
pub struct WeightedDissimilarity {
    pub matrix: DissimilarityMatrix,
    pub empirical: Option<EmpiricalVariogram>,
    pub model: Option<VariogramModel>,
}

/// Pairwise amplitude and intrinsic phase distances. Each pair is aligned
/// both ways and the two results averaged, so the matrices do not depend on
/// site order.
#[derive(Clone, Debug)]
pub struct PairwiseDistances {
    pub amplitude: DMatrix<f64>,
    pub phase: DMatrix<f64>,
}

pub fn pairwise_distances(qs: &[SrsfFunction]) -> Result<PairwiseDistances> {
    let n = qs.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let out: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let ij = dp_align(&qs[i], &qs[j])?;
            let ji = dp_align(&qs[j], &qs[i])?;
            Ok((
                0.5 * (ij.cost + ji.cost),
                0.5 * (phase_distances_of(&ij.warp).intrinsic
                    + phase_distances_of(&ji.warp).intrinsic),
            ))
        })
        .collect::<Result<_>>()?;
    let mut amplitude = DMatrix::zeros(n, n);
    let mut phase = DMatrix::zeros(n, n);
    for (&(i, j), (a, p)) in pairs.iter().zip(out) {
        amplitude[(i, j)] = a;
        amplitude[(j, i)] = a;
        phase[(i, j)] = p;
        phase[(j, i)] = p;
    }
    Ok(PairwiseDistances { amplitude, phase })
}

/// Multiplies `d_ij` by `V(h_ij)` for a variogram fitted to `d²` over `h`.
pub fn weight_by_variogram(
    labels: Vec<String>,
    d: &DMatrix<f64>,
    h: &DMatrix<f64>,
    weighting: Weighting,
) -> Result<WeightedDissimilarity> {
    let n = d.nrows();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if weighting == Weighting::None {
        return Ok(WeightedDissimilarity {
            matrix: DissimilarityMatrix::new(labels, d.clone())?,
            empirical: None,
            model: None,
        });
    }
    let sq = d.map(|v| v * v);
    let (empirical, model) = fit_pairs(h, &sq, Binning::default())?;
    let weighted = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            d[(i, j)] * model.evaluate(h[(i, j)])
        }
    });
    Ok(WeightedDissimilarity {
        matrix: DissimilarityMatrix::new(labels, weighted)?,
        empirical: Some(empirical),
        model: Some(model),
    })
}

/// `d_a(q_i, q_j) · V_a(‖s_i − s_j‖)`.
pub fn amplitude_dissimilarity_matrix(
    data: &SpatialDataset,
    weighting: Weighting,
) -> Result<WeightedDissimilarity> {
    let pd = pairwise_distances(&data.srsfs()?)?;
    amplitude_from_pairwise(data, &pd, weighting)
}

pub fn amplitude_from_pairwise(
    data: &SpatialDataset,
    pd: &PairwiseDistances,
    weighting: Weighting,
) -> Result<WeightedDissimilarity> {
    let h = site_distance_matrix(&data.sites());
    weight_by_variogram(data.ids().to_vec(), &pd.amplitude, &h, weighting)
}

/// `d_p(q_i, q_j) · V_p(‖y_i − y_j‖_ω)` over the enlarged domain.
pub fn phase_dissimilarity_matrix(
    data: &SpatialDataset,
    omega: f64,
    weighting: Weighting,
) -> Result<WeightedDissimilarity> {
    let pd = pairwise_distances(&data.srsfs()?)?;
    phase_from_pairwise(data, &pd, omega, weighting)
}

pub fn phase_from_pairwise(
    data: &SpatialDataset,
    pd: &PairwiseDistances,
    omega: f64,
    weighting: Weighting,
) -> Result<WeightedDissimilarity> {
    if !(omega >= 0.0) {
        return Err(Error::InvalidArgument("omega must be nonnegative".into()));
    }
    let spatial = site_distance_matrix(&data.sites());
    let h = if omega > 0.0 {
        enlarged_distance_matrix(&spatial, &shape_distance_matrix(&data.srsfs()?)?, omega)
    } else {
        spatial
    };
    weight_by_variogram(data.ids().to_vec(), &pd.phase, &h, weighting)
}

/// `‖f_i − f_j‖`, optionally weighted by the raw trace-variogram.
pub fn l2_dissimilarity_matrix(
    data: &SpatialDataset,
    weighting: Weighting,
) -> Result<WeightedDissimilarity> {
    let vals: Vec<&[f64]> = data.functions().iter().map(|f| f.values()).collect();
    let d = pairwise_sq_dist(&vals, data.grid().step()).map(f64::sqrt);
    let h = site_distance_matrix(&data.sites());
    weight_by_variogram(data.ids().to_vec(), &d, &h, weighting)
}

// ---------------------------------------------------------------------------
// Partitions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<String>,
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Cluster labels are renumbered `1..=k` by first appearance.
    pub fn new(labels: Vec<String>, raw: &[usize]) -> Result<Self> {
        if labels.len() != raw.len() {
            return Err(Error::InvalidInput(
                "one cluster label per site is required".into(),
            ));
        }
        let mut map: HashMap<usize, usize> = HashMap::new();
        let assignment: Vec<usize> = raw
            .iter()
            .map(|r| {
                let next = map.len() + 1;
                *map.entry(*r).or_insert(next)
            })
            .collect();
        Ok(Partition {
            k: map.len(),
            labels,
            assignment,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_of(&self, label: &str) -> Option<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|k| self.assignment[k])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linkage {
    Average,
    Complete,
    Single,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            _ => Err(Error::InvalidArgument(format!("unknown linkage {s}"))),
        }
    }
}

/// Agglomerative clustering cut at `k` clusters.
///
/// Cluster-to-cluster dissimilarities are recomputed from the original
/// entries at every step, and ties go to the pair whose smallest members
/// come first.
pub fn hierarchical_cluster(
    d: &DissimilarityMatrix,
    k: usize,
    linkage: Linkage,
) -> Result<Partition> {
    let n = d.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot cut {n} sites into {k} clusters"
        )));
    }
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let between = |a: &[usize], b: &[usize]| -> f64 {
        match linkage {
            Linkage::Average => {
                let s: f64 = a
                    .iter()
                    .flat_map(|&i| b.iter().map(move |&j| (i, j)))
                    .map(|(i, j)| d.get(i, j))
                    .sum();
                s / (a.len() * b.len()) as f64
            }
            Linkage::Complete => a
                .iter()
                .flat_map(|&i| b.iter().map(move |&j| d.get(i, j)))
                .fold(f64::NEG_INFINITY, f64::max),
            Linkage::Single => a
                .iter()
                .flat_map(|&i| b.iter().map(move |&j| d.get(i, j)))
                .fold(f64::INFINITY, f64::min),
        }
    };
    while clusters.len() > k {
        let mut best = (0, 1);
        let mut best_d = f64::INFINITY;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let v = between(&clusters[a], &clusters[b]);
                if v < best_d {
                    best_d = v;
                    best = (a, b);
                }
            }
        }
        let merged = clusters.remove(best.1);
        clusters[best.0].extend(merged);
        clusters[best.0].sort_unstable();
    }
    let mut raw = vec![0; n];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            raw[i] = c + 1;
        }
    }
    Partition::new(d.labels().to_vec(), &raw)
}

/// Fraction of unordered site pairs on which the partitions agree.
pub fn rand_index(p1: &Partition, p2: &Partition) -> Result<f64> {
    let n = p1.len();
    let mut other = Vec::with_capacity(n);
    for label in p1.labels() {
        other.push(p2.cluster_of(label).ok_or_else(|| {
            Error::InvalidArgument(format!("site {label} missing from the second partition"))
        })?);
    }
    if p2.len() != n {
        return Err(Error::InvalidArgument(
            "partitions cover different sites".into(),
        ));
    }
    if n < 2 {
        return Ok(1.0);
    }
    let a = p1.assignment();
    let mut agree = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (other[i] == other[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}
