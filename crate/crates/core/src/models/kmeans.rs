use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::squared_distance;
use crate::error::{Error, Result};

pub const MAX_KMEANS_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    /// Cluster of each input point.
    pub assignment: Vec<usize>,
    pub iterations: usize,
}

/// Lloyd's algorithm started from `k` distinct data points drawn with `seed`.
///
/// An empty cluster is re-seeded at the point farthest from its own
/// centroid. Stops when assignments no longer change or after
/// [`MAX_KMEANS_ITERATIONS`] updates.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeans> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::CountTooLarge { requested: k, available: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pick.swap(i, j);
    }
    let mut centroids: Vec<Vec<f64>> = pick[..k].iter().map(|&i| points[i].clone()).collect();
    let mut assignment = assign(points, &centroids);
    let mut iterations = 0;
    while iterations < MAX_KMEANS_ITERATIONS {
        iterations += 1;
        update(points, &assignment, &mut centroids);
        let next = assign(points, &centroids);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Ok(KMeans { centroids, assignment, iterations })
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centroids).0).collect()
}

fn update(points: &[Vec<f64>], assignment: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let k = centroids.len();
    let mut sums = alloc::vec![alloc::vec![0.0; dim]; k];
    let mut counts = alloc::vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            let far = points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, nearest(p, centroids).1))
                .fold((0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
            centroids[c] = points[far.0].clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn separates_two_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(vec![i as f64 * 0.01, 0.0]);
            pts.push(vec![5.0 + i as f64 * 0.01, 1.0]);
        }
        let km = kmeans(&pts, 2, 7).unwrap();
        let a = km.assignment[0];
        assert!(km.assignment.iter().step_by(2).all(|&c| c == a));
        assert!(km.assignment.iter().skip(1).step_by(2).all(|&c| c != a));
        assert_eq!(km, kmeans(&pts, 2, 7).unwrap());
    }

    #[test]
    fn k_equals_n_keeps_every_point() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let km = kmeans(&pts, 5, 1).unwrap();
        let mut c: Vec<f64> = km.centroids.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(kmeans(&pts, 6, 1).is_err());
    }

    #[test]
    fn duplicate_points_reseed_empty_clusters() {
        let mut pts = vec![vec![0.0]; 4];
        pts.push(vec![10.0]);
        let km = kmeans(&pts, 2, 3).unwrap();
        let mut c: Vec<f64> = km.centroids.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.0, 10.0]);
    }
}
