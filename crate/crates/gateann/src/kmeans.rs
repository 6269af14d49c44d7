//! Seeded, deterministic Lloyd k-means with k-means++ initialization.
//!
//! Used for PQ codebook training (per chunk, k = 256) and for spatially
//! correlated label assignment. Single-threaded on purpose: identical inputs
//! give identical clusterings on every run.

use crate::distance::l2_f32_fast;
use crate::rng::Rng64;

pub struct KMeansResult {
    /// k x dim centroids, row-major.
    pub centroids: Vec<f32>,
    /// Assignment of each input point to a centroid.
    pub assignments: Vec<u32>,
    /// Mean squared quantization error after each iteration (index 0 is the
    /// error of the initial centroids before any Lloyd update).
    pub history: Vec<f64>,
}

/// Cluster `n` points of dimension `dim` (flat row-major `points`) into `k`
/// centroids with `iters` Lloyd iterations.
///
/// Ties in assignment go to the lowest centroid index. Clusters that empty
/// out are reseeded with the point farthest from the centroid of the largest
/// cluster.
pub fn kmeans(points: &[f32], n: usize, dim: usize, k: usize, iters: usize, seed: u64) -> KMeansResult {
    assert!(n >= 1 && dim >= 1);
    assert_eq!(points.len(), n * dim);
    assert!(k >= 1 && k <= n, "k must be in [1, n]");

    let mut rng = Rng64::new(seed);
    let mut centroids = init_plus_plus(points, n, dim, k, &mut rng);
    let mut assignments = vec![0u32; n];
    let mut history = Vec::with_capacity(iters + 1);

    // Initial assignment + error of the starting centroids.
    history.push(assign(points, n, dim, &centroids, k, &mut assignments));

    for _ in 0..iters {
        update_centroids(points, n, dim, k, &assignments, &mut centroids);
        fix_empty_clusters(points, n, dim, k, &mut assignments, &mut centroids);
        history.push(assign(points, n, dim, &centroids, k, &mut assignments));
    }

    KMeansResult { centroids, assignments, history }
}

/// Centroids of `init_random` without any Lloyd iterations; exposed so tests
/// can compare trained quantization error against an unoptimized baseline.
pub fn random_init_error(points: &[f32], n: usize, dim: usize, k: usize, seed: u64) -> f64 {
    let mut rng = Rng64::new(seed);
    let idx = rng.sample_indices(n, k);
    let mut centroids = Vec::with_capacity(k * dim);
    for i in idx {
        centroids.extend_from_slice(&points[i * dim..(i + 1) * dim]);
    }
    let mut assignments = vec![0u32; n];
    assign(points, n, dim, &centroids, k, &mut assignments)
}

fn init_plus_plus(points: &[f32], n: usize, dim: usize, k: usize, rng: &mut Rng64) -> Vec<f32> {
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.below(n as u64) as usize;
    centroids.extend_from_slice(&points[first * dim..(first + 1) * dim]);

    // d2[i] = squared distance to the nearest chosen centroid so far.
    let mut d2: Vec<f64> = (0..n)
        .map(|i| l2_f32_fast(&points[i * dim..(i + 1) * dim], &centroids[..dim]) as f64)
        .collect();

    while centroids.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.next_f64() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining points coincide with chosen centroids.
            rng.below(n as u64) as usize
        };
        let c0 = centroids.len();
        centroids.extend_from_slice(&points[pick * dim..(pick + 1) * dim]);
        let newc = &centroids[c0..c0 + dim];
        for i in 0..n {
            let d = l2_f32_fast(&points[i * dim..(i + 1) * dim], newc) as f64;
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// Assign each point to its nearest centroid (lowest index on ties) and
/// return the mean squared error.
fn assign(points: &[f32], n: usize, dim: usize, centroids: &[f32], k: usize, out: &mut [u32]) -> f64 {
    let mut total = 0.0f64;
    for i in 0..n {
        let p = &points[i * dim..(i + 1) * dim];
        let mut best = 0u32;
        let mut best_d = f32::INFINITY;
        for c in 0..k {
            let d = l2_f32_fast(p, &centroids[c * dim..(c + 1) * dim]);
            if d < best_d {
                best_d = d;
                best = c as u32;
            }
        }
        out[i] = best;
        total += best_d as f64;
    }
    total / n as f64
}

fn update_centroids(points: &[f32], n: usize, dim: usize, k: usize, assignments: &[u32], centroids: &mut [f32]) {
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0u64; k];
    for i in 0..n {
        let c = assignments[i] as usize;
        counts[c] += 1;
        let p = &points[i * dim..(i + 1) * dim];
        let s = &mut sums[c * dim..(c + 1) * dim];
        for (acc, &x) in s.iter_mut().zip(p) {
            *acc += x as f64;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue; // handled by fix_empty_clusters
        }
        let inv = 1.0 / counts[c] as f64;
        for d in 0..dim {
            centroids[c * dim + d] = (sums[c * dim + d] * inv) as f32;
        }
    }
}

fn fix_empty_clusters(points: &[f32], n: usize, dim: usize, k: usize, assignments: &mut [u32], centroids: &mut [f32]) {
    loop {
        let mut counts = vec![0u64; k];
        for &a in assignments.iter() {
            counts[a as usize] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        // Largest cluster donates its farthest point (lowest index on ties).
        let largest = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        let lc = &centroids[largest * dim..(largest + 1) * dim];
        let mut far = usize::MAX;
        let mut far_d = -1.0f32;
        for i in 0..n {
            if assignments[i] as usize != largest {
                continue;
            }
            let d = l2_f32_fast(&points[i * dim..(i + 1) * dim], lc);
            if d > far_d {
                far_d = d;
                far = i;
            }
        }
        if far == usize::MAX {
            return; // largest cluster empty too: k > distinct points, give up
        }
        centroids[empty * dim..(empty + 1) * dim]
            .copy_from_slice(&points[far * dim..(far + 1) * dim]);
        assignments[far] = empty as u32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;

    fn random_points(n: usize, dim: usize, seed: u64) -> Vec<f32> {
        let mut rng = Rng64::new(seed);
        (0..n * dim).map(|_| rng.next_f64() as f32 * 10.0).collect()
    }

    #[test]
    fn deterministic() {
        let pts = random_points(300, 4, 1);
        let a = kmeans(&pts, 300, 4, 8, 5, 99);
        let b = kmeans(&pts, 300, 4, 8, 5, 99);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.assignments, b.assignments);
    }

    #[test]
    fn error_non_increasing() {
        let pts = random_points(500, 6, 2);
        let r = kmeans(&pts, 500, 6, 16, 10, 3);
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "error increased: {:?}", w);
        }
    }

    #[test]
    fn exact_cover_when_k_matches_distinct_points() {
        // 4 distinct points repeated; k=4 must reach zero error.
        let base = [0.0f32, 0.0, 10.0, 0.0, 0.0, 10.0, 10.0, 10.0];
        let mut pts = Vec::new();
        for rep in 0..25 {
            let _ = rep;
            pts.extend_from_slice(&base);
        }
        let r = kmeans(&pts, 100, 2, 4, 10, 7);
        assert!(r.history.last().unwrap() < &1e-12);
    }

    #[test]
    fn trained_beats_random_init() {
        let pts = random_points(1000, 8, 5);
        let trained = kmeans(&pts, 1000, 8, 32, 12, 11);
        let baseline = random_init_error(&pts, 1000, 8, 32, 11);
        assert!(
            *trained.history.last().unwrap() <= baseline,
            "trained {} > random-init {}",
            trained.history.last().unwrap(),
            baseline
        );
    }
}
