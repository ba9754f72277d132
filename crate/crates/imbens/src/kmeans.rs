//! Minimal deterministic Lloyd's k-means used by the k-means SMOTE sampler.

use rand::Rng;

use crate::rng::RandomSeed;

const MAX_ITER: usize = 100;
const REL_TOL: f64 = 1e-4;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster `features` (row-major, `n_features` wide) into `k` groups and
/// return each row's cluster id.
///
/// k-means++-style seeded initialization, Lloyd iterations capped at 100 or a
/// relative inertia improvement below 1e-4, whichever comes first. Empty
/// clusters keep their previous center. Assignment ties go to the lower
/// cluster id, so the result is fully deterministic given the seed.
pub(crate) fn lloyd_kmeans(
    features: &[f64],
    n_features: usize,
    k: usize,
    seed: RandomSeed,
) -> Vec<usize> {
    let n = features.len() / n_features;
    debug_assert!(k >= 1 && k <= n);
    let row = |i: usize| &features[i * n_features..(i + 1) * n_features];
    let mut rng = seed.rng();

    // k-means++ init: first center uniform, the rest sampled with probability
    // proportional to squared distance from the nearest chosen center.
    let mut centers: Vec<f64> = Vec::with_capacity(k * n_features);
    let first = rng.gen_range(0..n);
    centers.extend_from_slice(row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    chosen = i;
                    break;
                }
                r -= d;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.extend_from_slice(row(next));
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(row(i), row(next)));
        }
    }

    let mut assignment = vec![0usize; n];
    let mut prev_inertia = f64::INFINITY;
    for _ in 0..MAX_ITER {
        // Assignment step.
        let mut inertia = 0.0;
        for i in 0..n {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(row(i), &centers[c * n_features..(c + 1) * n_features]);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assignment[i] = best;
            inertia += best_d;
        }
        // Update step.
        let mut sums = vec![0.0f64; k * n_features];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            for (j, v) in row(i).iter().enumerate() {
                sums[c * n_features + j] += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..n_features {
                    centers[c * n_features + j] = sums[c * n_features + j] / counts[c] as f64;
                }
            }
        }
        if prev_inertia.is_finite() && prev_inertia - inertia <= REL_TOL * prev_inertia {
            break;
        }
        prev_inertia = inertia;
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_far_blobs() {
        // Two tight blobs 100 apart: any reasonable clustering nails them.
        let mut features = Vec::new();
        for i in 0..10 {
            features.extend_from_slice(&[i as f64 * 0.01, 0.0]);
        }
        for i in 0..10 {
            features.extend_from_slice(&[100.0 + i as f64 * 0.01, 0.0]);
        }
        let assignment = lloyd_kmeans(&features, 2, 2, RandomSeed(1));
        let first = &assignment[..10];
        let second = &assignment[10..];
        assert!(first.iter().all(|&c| c == first[0]));
        assert!(second.iter().all(|&c| c == second[0]));
        assert_ne!(first[0], second[0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let features: Vec<f64> = (0..60).map(|i| ((i * 37) % 17) as f64).collect();
        let a = lloyd_kmeans(&features, 3, 4, RandomSeed(9));
        let b = lloyd_kmeans(&features, 3, 4, RandomSeed(9));
        assert_eq!(a, b);
    }

    #[test]
    fn k_equals_one_puts_everything_together() {
        let features: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let assignment = lloyd_kmeans(&features, 1, 1, RandomSeed(0));
        assert!(assignment.iter().all(|&c| c == 0));
    }
}
