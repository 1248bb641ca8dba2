//! The DP aligner against exhaustive enumeration of every lattice path.

use apkrig::fdcore::{Grid, Site, SrsfFunction};
use apkrig::metrics::Aligner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum total segment cost over all monotone lattice paths, found by
/// depth-first enumeration without memoization.
fn exhaustive(aligner: &Aligner, q1: &[f64], q2: &[f64]) -> (f64, usize) {
    fn walk(
        a: &Aligner,
        q1: &[f64],
        q2: &[f64],
        at: (usize, usize),
        acc: f64,
        best: &mut f64,
        paths: &mut usize,
    ) {
        let last = q1.len() - 1;
        if at == (last, last) {
            *paths += 1;
            if acc < *best {
                *best = acc;
            }
            return;
        }
        for &(di, dj) in a.steps() {
            let to = (at.0 + di, at.1 + dj);
            if to.0 <= last && to.1 <= last {
                let c = a.segment_cost(q1, q2, at, to);
                walk(a, q1, q2, to, acc + c, best, paths);
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut paths = 0;
    walk(aligner, q1, q2, (0, 0), 0.0, &mut best, &mut paths);
    (best, paths)
}

fn random_srsf(grid: Grid, rng: &mut ChaCha8Rng) -> SrsfFunction {
    let values = (0..grid.len())
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    SrsfFunction::new(grid, values, 0.0, Site::default()).unwrap()
}

fn check(aligner: &Aligner, sizes: &[usize], cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &t in sizes {
        let grid = Grid::new(t).unwrap();
        for _ in 0..cases {
            let q1 = random_srsf(grid, &mut rng);
            let q2 = random_srsf(grid, &mut rng);
            let (best, paths) = exhaustive(aligner, q1.values(), q2.values());
            assert!(paths > 1);
            let dp = aligner.align(&q1, &q2).unwrap();
            let objective = if aligner.penalized() {
                dp.cost
            } else {
                dp.cost * dp.cost
            };
            assert!(
                (objective - best).abs() <= 1e-10 * best.max(1.0),
                "T={t}: dp {objective} vs exhaustive {best} over {paths} paths"
            );
        }
    }
}

#[test]
fn dp_matches_exhaustive_search() {
    check(&Aligner::default(), &[4, 7, 10, 13, 16], 3, 11);
}

#[test]
fn penalized_dp_matches_exhaustive_search() {
    check(
        &Aligner::default().with_penalty(0.3),
        &[5, 9, 12, 16],
        2,
        12,
    );
}

#[test]
fn small_neighborhood_matches_exhaustive_search() {
    check(&Aligner::new(2), &[6, 11, 16], 3, 13);
}
