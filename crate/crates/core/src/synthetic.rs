//! Seeded synthetic data: sphere and half-sphere clouds, subsampling, and
//! dense reference samples of known domains for fill-distance estimates.

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, UnitVector3};

/// Initial dart-throwing radius as a fraction of the hexagonal-packing
/// spacing for the requested count.
const DART_RADIUS_FRACTION: f64 = 0.8;
/// Consecutive rejections, per requested point, before the radius shrinks.
const DART_PATIENCE: usize = 30;
const DART_SHRINK: f64 = 0.97;

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Halton points with bases (2, 3) for indices `1..=count`, at z = 0.
pub fn halton_points_2d(count: usize) -> Vec<Point3> {
    (1..=count as u64)
        .map(|i| Point3::new(halton(i, 2), halton(i, 3), 0.0))
        .collect()
}

/// `n × n` lattice on the unit square at z = 0.
pub fn unit_square_grid(n: usize) -> Vec<Point3> {
    let step = 1.0 / (n.max(2) - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push(Point3::new(i as f64 * step, j as f64 * step, 0.0));
        }
    }
    out
}

/// `count` points of a spherical Fibonacci lattice on the unit sphere; a
/// near-uniform surrogate for the continuous surface.
pub fn sphere_reference_sample(count: usize) -> Vec<Point3> {
    fibonacci(count, -1.0)
}

/// Fibonacci lattice restricted to the closed upper hemisphere.
pub fn cap_reference_sample(count: usize) -> Vec<Point3> {
    fibonacci(count, 0.0)
}

fn fibonacci(count: usize, z_min: f64) -> Vec<Point3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let span = 1.0 - z_min;
    (0..count)
        .map(|i| {
            let z = if count == 1 {
                1.0
            } else {
                1.0 - span * i as f64 / (count - 1) as f64
            };
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Point3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

fn random_direction(rng: &mut ChaCha8Rng, upper: bool) -> Point3 {
    loop {
        let p = Point3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n = p.norm();
        if n > 1e-9 {
            let mut u = p * (1.0 / n);
            if upper {
                u.z = u.z.abs();
            }
            return u;
        }
    }
}

/// Poisson-disk rejection sampling: uniform random directions are accepted
/// only when no accepted point lies within the current radius. The radius
/// starts near the densest feasible spacing and shrinks whenever the
/// surface stays saturated for too long, so exactly `n` points come out.
fn scattered(n: usize, seed: u64, upper: bool) -> Result<PointCloud> {
    if n < 4 {
        return Err(Error::invalid(format!("need at least 4 points, got {n}")));
    }
    let area = if upper { 2.0 } else { 4.0 } * std::f64::consts::PI;
    let spacing = (2.0 * area / (3f64.sqrt() * n as f64)).sqrt();
    let mut radius = DART_RADIUS_FRACTION * spacing;
    // Cells never shrink, so a ±1 cell search stays exhaustive as the
    // radius decreases.
    let cell = radius;
    let key = |p: &Point3| [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64];
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let patience = DART_PATIENCE * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Point3> = Vec::with_capacity(n);
    let mut misses = 0;
    while points.len() < n {
        let c = random_direction(&mut rng, upper);
        let k = key(&c);
        let r2 = radius * radius;
        let mut free = true;
        'search: for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(ids) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if ids.iter().any(|&i| points[i].dist2(&c) < r2) {
                            free = false;
                            break 'search;
                        }
                    }
                }
            }
        }
        if free {
            grid.entry(k).or_default().push(points.len());
            points.push(c);
            misses = 0;
        } else {
            misses += 1;
            if misses >= patience {
                radius *= DART_SHRINK;
                misses = 0;
            }
        }
    }
    let normals = points
        .iter()
        .map(|p| UnitVector3::from_point(*p))
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(points, normals)
}

/// `n` scattered points on the unit sphere with outward normals.
pub fn make_sphere_cloud(n: usize, seed: u64) -> Result<PointCloud> {
    scattered(n, seed, false)
}

/// `n` scattered points on the upper unit hemisphere (z ≥ 0).
pub fn make_semisphere_cloud(n: usize, seed: u64) -> Result<PointCloud> {
    scattered(n, seed, true)
}

/// Uniform subsample without replacement, original order preserved.
pub fn subsample(cloud: &PointCloud, fraction: f64, seed: u64) -> Result<PointCloud> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "subsample fraction must be in (0, 1], got {fraction}"
        )));
    }
    let keep = (fraction * cloud.len() as f64).round() as usize;
    if keep == 0 {
        return Err(Error::Empty("subsample"));
    }
    if keep == cloud.len() {
        return Ok(cloud.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = index::sample(&mut rng, cloud.len(), keep).into_vec();
    ids.sort_unstable();
    cloud.select(&ids)
}

/// Uniform random points in an axis-aligned box.
pub fn random_points_in_box(count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            Point3::new(
                rng.gen_range(lo..hi),
                rng.gen_range(lo..hi),
                rng.gen_range(lo..hi),
            )
        })
        .collect()
}
