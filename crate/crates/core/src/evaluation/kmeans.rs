//! Lloyd's k-means with k-means++ seeding and independent restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::pca::Embedding;

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_ITERATIONS: usize = 300;
const SHIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    /// Row-major `n_clusters x dim`.
    pub centroids: Vec<f64>,
    pub n_clusters: usize,
    pub inertia: f64,
    /// Inertia after every assignment step of the selected run.
    pub inertia_history: Vec<f64>,
    /// How often an empty cluster was moved to the farthest point.
    pub reseeds: usize,
    /// Clusters left without members at the end (flagged, not an error).
    pub empty_clusters: Vec<usize>,
    pub restart: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid per point (ties to the lower index) and the total
/// squared distance.
fn assign(
    points: &Embedding,
    centroids: &[f64],
    c: usize,
    labels: &mut [usize],
    dists: &mut [f64],
) -> f64 {
    let dim = points.dim;
    for i in 0..points.n {
        let p = points.point(i);
        let mut best = (f64::INFINITY, 0);
        for k in 0..c {
            let d = sq_dist(p, &centroids[k * dim..(k + 1) * dim]);
            if d < best.0 {
                best = (d, k);
            }
        }
        labels[i] = best.1;
        dists[i] = best.0;
    }
    dists.iter().sum()
}

fn plus_plus(points: &Embedding, c: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dim = points.dim;
    let mut centroids = Vec::with_capacity(c * dim);
    let first = rng.random_range(0..points.n);
    centroids.extend_from_slice(points.point(first));
    let mut nearest: Vec<f64> = (0..points.n)
        .map(|i| sq_dist(points.point(i), points.point(first)))
        .collect();
    for _ in 1..c {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.n)
        };
        let new = points.point(pick).to_vec();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.point(i), &new));
        }
        centroids.extend(new);
    }
    centroids
}

fn single_run(points: &Embedding, c: usize, seed: u64, restart: usize) -> ClusteringResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let dim = points.dim;
    let mut centroids = plus_plus(points, c, &mut rng);
    let mut labels = vec![0; points.n];
    let mut dists = vec![0.0; points.n];
    let mut history = Vec::new();
    let mut reseeds = 0;

    for _ in 0..MAX_ITERATIONS {
        history.push(assign(points, &centroids, c, &mut labels, &mut dists));
        let mut sums = vec![0.0; c * dim];
        let mut counts = vec![0usize; c];
        for i in 0..points.n {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i] * dim..].iter_mut().zip(points.point(i)) {
                *s += v;
            }
        }
        let mut updated = centroids.clone();
        for k in 0..c {
            if counts[k] > 0 {
                for t in 0..dim {
                    updated[k * dim + t] = sums[k * dim + t] / counts[k] as f64;
                }
            } else {
                let (far, _) =
                    dists
                        .iter()
                        .enumerate()
                        .fold(
                            (0, f64::NEG_INFINITY),
                            |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
                        );
                updated[k * dim..(k + 1) * dim].copy_from_slice(points.point(far));
                dists[far] = 0.0;
                reseeds += 1;
            }
        }
        let shift = (0..c)
            .map(|k| {
                sq_dist(
                    &centroids[k * dim..(k + 1) * dim],
                    &updated[k * dim..(k + 1) * dim],
                )
                .sqrt()
            })
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }
    let inertia = assign(points, &centroids, c, &mut labels, &mut dists);
    history.push(inertia);
    let mut counts = vec![0usize; c];
    labels.iter().for_each(|&l| counts[l] += 1);
    ClusteringResult {
        labels,
        centroids,
        n_clusters: c,
        inertia,
        inertia_history: history,
        reseeds,
        empty_clusters: (0..c).filter(|&k| counts[k] == 0).collect(),
        restart,
    }
}

/// Best-inertia clustering over `restarts` seeded runs (ties go to the
/// earlier restart).
pub fn kmeans(
    points: &Embedding,
    c: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusteringResult> {
    if c == 0 || c > points.n {
        return Err(Error::param(
            "c",
            format!(
                "cluster count {c} must be between 1 and the number of points {}",
                points.n
            ),
        ));
    }
    if restarts == 0 {
        return Err(Error::param("restarts", "must be at least 1"));
    }
    let runs: Vec<ClusteringResult> = (0..restarts)
        .into_par_iter()
        .map(|r| single_run(points, c, seed, r))
        .collect();
    let mut best = None::<ClusteringResult>;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[[f64; 2]]) -> Embedding {
        Embedding::new(rows.len(), 2, rows.iter().flatten().copied().collect()).unwrap()
    }

    #[test]
    fn every_point_its_own_cluster() {
        let p = pts(&[[0.0, 0.0], [1.0, 0.0], [5.0, 5.0], [2.0, 9.0]]);
        let r = kmeans(&p, 4, 1, 3).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut labels = r.labels.clone();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn identical_points_flag_empty_cluster() {
        let p = pts(&[[1.0, 1.0]; 5]);
        let r = kmeans(&p, 2, 9, 2).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert!(r.reseeds > 0);
        assert_eq!(r.empty_clusters, vec![1]);
    }

    #[test]
    fn rejects_bad_cluster_count() {
        let p = pts(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(kmeans(&p, 3, 0, 1).is_err());
        assert!(kmeans(&p, 0, 0, 1).is_err());
        assert!(kmeans(&p, 1, 0, 0).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let p = pts(&[
            [0.0, 0.0],
            [0.3, 0.1],
            [4.0, 4.0],
            [4.2, 3.9],
            [9.0, 0.0],
            [8.8, 0.2],
        ]);
        assert_eq!(kmeans(&p, 3, 5, 4).unwrap(), kmeans(&p, 3, 5, 4).unwrap());
    }
}
