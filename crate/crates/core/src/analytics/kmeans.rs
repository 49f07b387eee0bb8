use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LakeError, Result};

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub seed: u64,
    pub iterations: usize,
    /// Inertia after every assignment step, last entry = `inertia`.
    pub inertia_history: Vec<f64>,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map_or(0, Vec::len);
    if points.iter().any(|p| p.len() != dim) {
        return Err(LakeError::invalid("points have different dimensions"));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(LakeError::invalid("points contain non-finite values"));
    }
    Ok(dim)
}

fn distinct_count(points: &[Vec<f64>], at_least: usize) -> usize {
    let mut seen: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !seen.contains(&p) {
            seen.push(p);
            if seen.len() >= at_least {
                break;
            }
        }
    }
    seen.len()
}

/// Nearest centroid, lowest index on ties.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, l) in points.iter().zip(labels.iter_mut()) {
        let (j, d) = nearest(p, centroids);
        *l = j;
        inertia += d;
    }
    inertia
}

/// Seeded k-means++ seeding.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, d) in d2.iter().enumerate() {
            if *d <= 0.0 {
                continue;
            }
            pick = Some(i);
            if target < *d {
                break;
            }
            target -= d;
        }
        // at least one point is off every chosen centroid while distinct >= k
        let c = points[pick.expect("a point with positive distance exists")].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm from a seeded k-means++ start. Stops when no centroid
/// moves by `tol` or more, or after `max_iter` updates; a final assignment
/// step leaves every point on its nearest centroid. An emptied cluster is
/// reseeded with the point farthest from its current centroid.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<ClusterAssignment> {
    let dim = check_points(points)?;
    if k == 0 {
        return Err(LakeError::invalid("k must be at least 1"));
    }
    let distinct = distinct_count(points, k);
    if distinct < k {
        return Err(LakeError::invalid(format!(
            "k={k} exceeds the number of distinct points ({distinct})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut labels = vec![0usize; points.len()];
    let mut history = vec![assign(points, &centroids, &mut labels)];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &n), old)| {
                if n == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / n as f64).collect()
                }
            })
            .collect();
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let (far, _) = points
                .iter()
                .zip(&labels)
                .enumerate()
                .map(|(i, (p, &l))| (i, sq_dist(p, &next[l])))
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            next[j] = points[far].clone();
            counts[labels[far]] -= 1;
            labels[far] = j;
            counts[j] = 1;
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        history.push(assign(points, &centroids, &mut labels));
        if shift < tol {
            break;
        }
    }
    Ok(ClusterAssignment {
        k,
        inertia: *history.last().expect("history starts non-empty"),
        labels,
        centroids,
        seed,
        iterations,
        inertia_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[&[f64]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn separated_1d() {
        let p = pts(&[&[0.0], &[0.1], &[10.0], &[10.1]]);
        let r = kmeans(&p, 2, 7, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
        assert!((r.inertia - 0.01).abs() < 1e-9);
    }

    #[test]
    fn k_equals_distinct_points() {
        let p = pts(&[&[0.0, 1.0], &[2.0, 2.0], &[2.0, 2.0], &[5.0, -1.0]]);
        let r = kmeans(&p, 3, 1, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert!(kmeans(&p, 4, 1, DEFAULT_MAX_ITER, DEFAULT_TOL).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let p: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i * 37 % 11) as f64, (i * 13 % 7) as f64])
            .collect();
        assert_eq!(
            kmeans(&p, 3, 5, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap(),
            kmeans(&p, 3, 5, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap()
        );
    }

    proptest! {
        #[test]
        fn lloyd_properties(raw in prop::collection::vec((-50i32..50, -50i32..50), 30), k in 1usize..6, seed in 0u64..1000) {
            let p: Vec<Vec<f64>> = raw.iter().map(|(x, y)| vec![*x as f64 / 3.0, *y as f64 / 7.0]).collect();
            let r = kmeans(&p, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
            for w in r.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", r.inertia_history);
            }
            let mut inertia = 0.0;
            for (pt, &l) in p.iter().zip(&r.labels) {
                prop_assert!(l < k);
                let own = sq_dist(pt, &r.centroids[l]);
                let best = r.centroids.iter().map(|c| sq_dist(pt, c)).fold(f64::INFINITY, f64::min);
                prop_assert!(own <= best + 1e-12);
                inertia += own;
            }
            prop_assert!((inertia - r.inertia).abs() <= 1e-9 * inertia.max(1.0));
            prop_assert!(r.inertia <= r.inertia_history[0] + 1e-9);
        }
    }
}
