//! Spherical k-means used to train IVF coarse centroids.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::{dot, norm, ZERO_NORM};

const MAX_ITERS: usize = 12;

/// Index of the centroid with the highest dot product; ties go to the lower index.
pub(crate) fn nearest(centroids: &[f32], dim: usize, v: &[f32]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (c, row) in centroids.chunks_exact(dim).enumerate() {
        let s = dot(row, v);
        if s > best_score {
            best_score = s;
            best = c;
        }
    }
    best
}

/// Trains `k` unit-norm centroids over the rows of `data`. Returns a flat
/// `k * dim` buffer. Deterministic for a given seed.
pub(crate) fn train(data: &[f32], dim: usize, k: usize, seed: u64) -> Vec<f32> {
    let n = data.len() / dim;
    debug_assert!(k >= 1 && k <= n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut centroids: Vec<f32> = order[..k]
        .iter()
        .flat_map(|&i| data[i * dim..(i + 1) * dim].iter().copied())
        .collect();

    let mut assign = vec![usize::MAX; n];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (i, row) in data.chunks_exact(dim).enumerate() {
            let c = nearest(&centroids, dim, row);
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (i, row) in data.chunks_exact(dim).enumerate() {
            let c = assign[i];
            counts[c] += 1;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row) {
                *s += *x as f64;
            }
        }
        for c in 0..k {
            // empty clusters keep their previous centroid
            if counts[c] == 0 {
                continue;
            }
            let sum = &sums[c * dim..(c + 1) * dim];
            let n2: f64 = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n2 < ZERO_NORM {
                continue;
            }
            for (dst, s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(sum) {
                *dst = (s / n2) as f32;
            }
        }
    }
    for row in centroids.chunks_exact_mut(dim) {
        let n2 = norm(row);
        if n2 >= ZERO_NORM {
            row.iter_mut().for_each(|v| *v = (*v as f64 / n2) as f32);
        }
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_obvious_clusters() {
        let mut data = Vec::new();
        for i in 0..20 {
            let eps = i as f32 * 0.001;
            data.extend_from_slice(&[1.0, eps, 0.0]);
            data.extend_from_slice(&[0.0, eps, 1.0]);
        }
        let c = train(&data, 3, 2, 7);
        let a = nearest(&c, 3, &[1.0, 0.0, 0.0]);
        let b = nearest(&c, 3, &[0.0, 0.0, 1.0]);
        assert_ne!(a, b);
    }

    #[test]
    fn deterministic_for_seed() {
        let data: Vec<f32> = (0..300).map(|i| ((i * 37 % 101) as f32).sin()).collect();
        assert_eq!(train(&data, 3, 5, 11), train(&data, 3, 5, 11));
    }
}
