use serde::{Deserialize, Serialize};

use super::kmeans::check_points;
use crate::error::{LakeError, Result};

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    pub coordinates: Vec<[f64; 2]>,
    pub components: [Vec<f64>; 2],
    pub explained_variance: [f64; 2],
    pub mean: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Makes the largest-magnitude loading positive (first index on ties).
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Dominant eigenvector of a symmetric PSD matrix by power iteration.
fn power_iteration(m: &[Vec<f64>], start: &[f64]) -> Vec<f64> {
    let mut v = start.to_vec();
    normalize(&mut v);
    for _ in 0..POWER_MAX_ITER {
        let mut next = mat_vec(m, &v);
        if normalize(&mut next) == 0.0 {
            return v;
        }
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < POWER_TOL {
            break;
        }
    }
    v
}

/// Unit vector orthogonal to `u`, built from the basis vector on which `u`
/// has the smallest loading.
fn orthogonal_to(u: &[f64]) -> Vec<f64> {
    let mut j = 0;
    for i in 1..u.len() {
        if u[i].abs() < u[j].abs() {
            j = i;
        }
    }
    let mut e = vec![0.0; u.len()];
    e[j] = 1.0;
    let p = dot(&e, u);
    e.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
    normalize(&mut e);
    e
}

/// Two-component PCA of the sample covariance, via power iteration with
/// deflation. Components are orthonormal, variances non-increasing, and
/// each component's largest-magnitude loading is positive.
pub fn pca2d(points: &[Vec<f64>]) -> Result<Projection2D> {
    let dim = check_points(points)?;
    if points.len() < 2 {
        return Err(LakeError::invalid("PCA needs at least 2 points"));
    }
    if dim < 2 {
        return Err(LakeError::invalid("PCA needs at least 2 dimensions"));
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        mean.iter_mut().zip(p).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let centered: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; dim]; dim];
    for c in &centered {
        for i in 0..dim {
            for j in i..dim {
                cov[i][j] += c[i] * c[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    let trace: f64 = (0..dim).map(|i| cov[i][i]).sum();
    let scale = trace.max(f64::MIN_POSITIVE);
    let (mut c1, mut c2);
    if trace <= 1e-300 {
        c1 = vec![0.0; dim];
        c1[0] = 1.0;
        c2 = vec![0.0; dim];
        c2[1] = 1.0;
    } else {
        let start: Vec<f64> = (0..dim).map(|i| 1.0 + 0.1 * i as f64).collect();
        c1 = power_iteration(&cov, &start);
        let l1 = dot(&c1, &mat_vec(&cov, &c1));
        let deflated: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| cov[i][j] - l1 * c1[i] * c1[j]).collect())
            .collect();
        let start2 = orthogonal_to(&c1);
        c2 = power_iteration(&deflated, &start2);
        // re-orthogonalize against c1; fall back when deflation left nothing
        let p = dot(&c2, &c1);
        c2.iter_mut().zip(&c1).for_each(|(x, y)| *x -= p * y);
        if normalize(&mut c2) < 1e-6 {
            c2 = orthogonal_to(&c1);
        }
        let p = dot(&c2, &c1);
        c2.iter_mut().zip(&c1).for_each(|(x, y)| *x -= p * y);
        normalize(&mut c2);
    }
    fix_sign(&mut c1);
    fix_sign(&mut c2);
    let rayleigh = |v: &[f64]| (dot(v, &mat_vec(&cov, v)) / scale).max(0.0) * scale;
    let (mut v1, mut v2) = (rayleigh(&c1), rayleigh(&c2));
    if v2 > v1 {
        std::mem::swap(&mut c1, &mut c2);
        std::mem::swap(&mut v1, &mut v2);
    }
    let coordinates = centered.iter().map(|c| [dot(c, &c1), dot(c, &c2)]).collect();
    Ok(Projection2D {
        coordinates,
        components: [c1, c2],
        explained_variance: [v1, v2],
        mean,
    })
}
