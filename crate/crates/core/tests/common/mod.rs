//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use gaussurf::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn gaussian(sigma: f64, r: f64) -> f64 {
    (-r * r / (2.0 * sigma * sigma)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
}

pub fn dist(a: &Point3, b: &Point3) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

/// Dense kernel matrix, row-major; entries beyond `cutoff` are zero.
pub fn dense_matrix(sites: &[Point3], sigma: f64, cutoff: f64) -> Vec<Vec<f64>> {
    sites
        .iter()
        .map(|a| {
            sites
                .iter()
                .map(|b| {
                    let r = dist(a, b);
                    if r <= cutoff {
                        gaussian(sigma, r)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// `Σ_j φ(|q - c_j|) w_j`, untruncated.
pub fn dense_eval(centers: &[Point3], weights: &[f64], sigma: f64, queries: &[Point3]) -> Vec<f64> {
    queries
        .iter()
        .map(|q| centers.iter().zip(weights).map(|(c, w)| gaussian(sigma, dist(q, c)) * w).sum())
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        let pivot = a[k][k];
        assert!(pivot != 0.0, "singular matrix");
        let (top, rest) = a.split_at_mut(k + 1);
        let row_k = &top[k];
        for (off, row) in rest.iter_mut().enumerate() {
            let f = row[k] / pivot;
            if f != 0.0 {
                for j in k..n {
                    row[j] -= f * row_k[j];
                }
                b[k + 1 + off] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn rel_err_2(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b)
}

pub fn rel_err_inf(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm_inf(&d) / norm_inf(b)
}

pub fn random_points(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point3::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi), rng.gen_range(lo..hi)))
        .collect()
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Largest distance from any sample point to its nearest data point.
pub fn brute_fill(points: &[Point3], sample: &[Point3]) -> f64 {
    sample
        .iter()
        .map(|s| points.iter().map(|p| dist(s, p)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Nearest-neighbor distance of every point to the others.
pub fn brute_nn(points: &[Point3]) -> Vec<f64> {
    (0..points.len())
        .map(|i| {
            (0..points.len())
                .filter(|&j| j != i)
                .map(|j| dist(&points[i], &points[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}
