//! Pairwise elastic alignment by dynamic programming, and the amplitude,
//! shape and phase distances built on it.
//!
//! The search space is the set of monotone paths on the `T × T` grid lattice
//! from `(0, 0)` to `(T-1, T-1)` whose steps `(di, dj)` are coprime with
//! `1 ≤ di, dj ≤ N`. With the default `N = 6` that is 23 step directions and
//! slopes between 1/6 and 6. A path node `(i, j)` means `γ(t_i) = t_j`; the
//! warp is linear between nodes.
//!
//! A segment from `(i, j)` to `(k, l)` with slope `m` contributes the
//! trapezoidal sum over the nodes `i..=k` of `(q₁(t) − √m·q₂(γ(t)))²` plus,
//! for the penalized objective, `λ·(√m − 1)²·(t_k − t_i)`.

use crate::error::{Error, Result};
use crate::fdcore::{
    group_action, interp, warp_to_psi, PsiFunction, SrsfFunction, WarpingFunction,
};

/// Default bound on the step size in either lattice direction.
pub const DEFAULT_NEIGHBORHOOD: usize = 6;

/// Optimal warp for aligning `q2` to `q1` and the aligned SRSF.
#[derive(Clone, Debug)]
pub struct AlignmentResult {
    pub warp: WarpingFunction,
    pub aligned: SrsfFunction,
    /// `‖q₁ − (q₂, γ*)‖` for [`dp_align`]; the squared penalized objective for
    /// [`penalized_align`].
    pub cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseDistances {
    pub intrinsic: f64,
    pub extrinsic: f64,
}

/// Precomputed interpolation taps of one lattice step.
#[derive(Clone, Debug)]
struct Stencil {
    di: usize,
    dj: usize,
    root: f64,
    /// `(integer offset, fraction, trapezoid weight)` per node.
    taps: Vec<(usize, f64, f64)>,
    penalty: f64,
}

/// Dynamic-programming aligner with a fixed step neighborhood.
#[derive(Clone, Debug)]
pub struct Aligner {
    steps: Vec<(usize, usize)>,
    lambda: f64,
    penalized: bool,
}

impl Default for Aligner {
    fn default() -> Self {
        Aligner::new(DEFAULT_NEIGHBORHOOD)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Coprime steps `(di, dj)` with both components in `1..=n`, ordered so the
/// steps nearest the diagonal come first.
pub fn lattice_steps(n: usize) -> Vec<(usize, usize)> {
    let mut steps: Vec<(usize, usize)> = (1..=n)
        .flat_map(|a| (1..=n).map(move |b| (a, b)))
        .filter(|&(a, b)| gcd(a, b) == 1)
        .collect();
    steps.sort_by_key(|&(a, b)| (a.abs_diff(b), a + b, a));
    steps
}

impl Aligner {
    pub fn new(neighborhood: usize) -> Self {
        Aligner {
            steps: lattice_steps(neighborhood.max(1)),
            lambda: 0.0,
            penalized: false,
        }
    }

    /// Adds the `λ‖ψ − ψ_id‖²` roughness penalty to the objective.
    pub fn with_penalty(mut self, lambda: f64) -> Self {
        self.lambda = lambda.max(0.0);
        self.penalized = true;
        self
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    /// Whether [`Aligner::align`] reports the penalized objective.
    pub fn penalized(&self) -> bool {
        self.penalized
    }

    /// Squared objective of one lattice segment.
    pub fn segment_cost(
        &self,
        q1: &[f64],
        q2: &[f64],
        from: (usize, usize),
        to: (usize, usize),
    ) -> f64 {
        let (i, j) = from;
        let (k, l) = to;
        let n = q1.len();
        let dt = 1.0 / (n - 1) as f64;
        let slope = (l - j) as f64 / (k - i) as f64;
        let root = slope.sqrt();
        let mut acc = 0.0;
        for u in i..=k {
            let pos = (j as f64 + slope * (u - i) as f64) * dt;
            let r = q1[u] - root * interp(q2, pos);
            let w = if u == i || u == k { 0.5 } else { 1.0 };
            acc += w * r * r;
        }
        acc *= dt;
        if self.lambda > 0.0 {
            acc += self.lambda * (root - 1.0).powi(2) * (k - i) as f64 * dt;
        }
        acc
    }

    fn stencils(&self, n: usize) -> Vec<Stencil> {
        let dt = 1.0 / (n - 1) as f64;
        self.steps
            .iter()
            .map(|&(di, dj)| {
                let slope = dj as f64 / di as f64;
                let root = slope.sqrt();
                let taps = (0..=di)
                    .map(|u| {
                        let off = slope * u as f64;
                        let io = off.floor() as usize;
                        let w = if u == 0 || u == di { 0.5 } else { 1.0 };
                        (io, off - io as f64, w)
                    })
                    .collect();
                let penalty = if self.lambda > 0.0 {
                    self.lambda * (root - 1.0).powi(2) * di as f64 * dt
                } else {
                    0.0
                };
                Stencil {
                    di,
                    dj,
                    root,
                    taps,
                    penalty,
                }
            })
            .collect()
    }

    /// DP-optimal lattice path; returns the warp samples and the squared
    /// objective.
    fn solve(&self, q1: &[f64], q2: &[f64]) -> (Vec<f64>, f64) {
        let n = q1.len();
        let dt = 1.0 / (n - 1) as f64;
        let stencils = self.stencils(n);
        let idx = |i: usize, j: usize| i * n + j;
        let mut energy = vec![f64::INFINITY; n * n];
        let mut pred = vec![u8::MAX; n * n];
        energy[0] = 0.0;
        for k in 1..n {
            for l in 1..n {
                let mut best = f64::INFINITY;
                let mut best_step = u8::MAX;
                for (s, st) in stencils.iter().enumerate() {
                    if st.di > k || st.dj > l {
                        continue;
                    }
                    let (i, j) = (k - st.di, l - st.dj);
                    let base = energy[idx(i, j)];
                    if !(base < best) {
                        continue;
                    }
                    let mut acc = 0.0;
                    for (u, &(io, frac, w)) in st.taps.iter().enumerate() {
                        let a = q2[j + io];
                        let v = if frac > 0.0 {
                            a + frac * (q2[j + io + 1] - a)
                        } else {
                            a
                        };
                        let r = q1[i + u] - st.root * v;
                        acc += w * r * r;
                    }
                    let e = base + acc * dt + st.penalty;
                    if e < best {
                        best = e;
                        best_step = s as u8;
                    }
                }
                energy[idx(k, l)] = best;
                pred[idx(k, l)] = best_step;
            }
        }

        let mut path = vec![(n - 1, n - 1)];
        let (mut k, mut l) = (n - 1, n - 1);
        while k > 0 || l > 0 {
            let (di, dj) = self.steps[pred[idx(k, l)] as usize];
            k -= di;
            l -= dj;
            path.push((k, l));
        }
        path.reverse();
        (path_to_warp(&path, n), energy[idx(n - 1, n - 1)])
    }

    /// Aligns `q2` to `q1`.
    pub fn align(&self, q1: &SrsfFunction, q2: &SrsfFunction) -> Result<AlignmentResult> {
        if q1.grid() != q2.grid() {
            return Err(Error::InvalidInput(
                "alignment inputs are on different grids".into(),
            ));
        }
        let (values, objective) = self.solve(q1.values(), q2.values());
        let warp = WarpingFunction::new(q1.grid(), values)?;
        let aligned = group_action(q2, &warp)?;
        let cost = if self.penalized {
            objective
        } else {
            objective.max(0.0).sqrt()
        };
        Ok(AlignmentResult {
            warp,
            aligned,
            cost,
        })
    }
}

/// Linear interpolation of lattice path nodes onto every grid index.
pub fn path_to_warp(path: &[(usize, usize)], n: usize) -> Vec<f64> {
    let dt = 1.0 / (n - 1) as f64;
    let mut values = vec![0.0; n];
    for w in path.windows(2) {
        let ((i, j), (k, l)) = (w[0], w[1]);
        let slope = (l - j) as f64 / (k - i) as f64;
        for u in i..=k {
            values[u] = (j as f64 + slope * (u - i) as f64) * dt;
        }
    }
    values[n - 1] = 1.0;
    values
}

/// Optimal warp of `q2` onto `q1` under the L² objective.
pub fn dp_align(q1: &SrsfFunction, q2: &SrsfFunction) -> Result<AlignmentResult> {
    Aligner::default().align(q1, q2)
}

/// Alignment under `‖q₁ − (q₂, γ)‖² + λ‖ψ − ψ_id‖²`.
pub fn penalized_align(
    q1: &SrsfFunction,
    q2: &SrsfFunction,
    lambda: f64,
) -> Result<AlignmentResult> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    Aligner::default().with_penalty(lambda).align(q1, q2)
}

pub fn amplitude_distance(q1: &SrsfFunction, q2: &SrsfFunction) -> Result<f64> {
    Ok(dp_align(q1, q2)?.cost)
}

/// Amplitude distance between the unit-normalized inputs.
pub fn shape_distance(q1: &SrsfFunction, q2: &SrsfFunction) -> Result<f64> {
    amplitude_distance(&q1.normalized()?, &q2.normalized()?)
}

/// Phase distances of the relative warp obtained from an existing alignment.
pub fn phase_distances_of(warp: &WarpingFunction) -> PhaseDistances {
    let psi = warp_to_psi(warp);
    let id = PsiFunction::identity(warp.grid());
    PhaseDistances {
        intrinsic: psi.intrinsic_dist(&id),
        extrinsic: psi.extrinsic_dist(&id),
    }
}

/// Aligns `q2` to `q1` and measures the relative phase against the identity.
pub fn phase_distance(q1: &SrsfFunction, q2: &SrsfFunction) -> Result<PhaseDistances> {
    Ok(phase_distances_of(&dp_align(q1, q2)?.warp))
}
