//! Scattered-data density measures and the Gaussian width heuristics built
//! on them.
//!
//! * separation distance `q`: half the smallest pairwise distance;
//! * fill distance `h`: the largest distance from a domain point to the data,
//!   estimated over a caller-supplied discrete domain sample;
//! * `h_max`: the largest nearest-neighbor distance within the data.
//!
//! Width candidates are `2q`, `h·√2`, and `2·h_max` (fill distance estimated
//! as `h_max·√2`, then scaled by `√2`). The `h_max` route assumes the data
//! come from a single connected surface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, SpatialIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub separation_q: f64,
    pub fill_h: Option<f64>,
    pub h_max: f64,
    pub sigma_from_q: f64,
    pub sigma_from_h: Option<f64>,
    pub sigma_from_hmax: f64,
}

impl DensityReport {
    /// Preferred width: the fill-distance candidate when a reference domain
    /// was supplied, otherwise the `h_max` candidate.
    pub fn recommended_sigma(&self) -> f64 {
        self.sigma_from_h.unwrap_or(self.sigma_from_hmax)
    }
}

fn require_two(points: &[Point3]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    Ok(())
}

/// Distance from each point to its nearest other point.
pub fn nearest_neighbor_distances(points: &[Point3]) -> Result<Vec<f64>> {
    require_two(points)?;
    let index = SpatialIndex::with_auto_cell(points)?;
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| index.nearest_neighbor(p, Some(i)).map(|(_, d)| d))
        .collect()
}

pub fn separation_distance(points: &[Point3]) -> Result<f64> {
    let nn = nearest_neighbor_distances(points)?;
    let min = nn.into_iter().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        return Err(Error::Degenerate("point set contains duplicates".into()));
    }
    Ok(0.5 * min)
}

pub fn h_max(points: &[Point3]) -> Result<f64> {
    let nn = nearest_neighbor_distances(points)?;
    Ok(nn.into_iter().fold(0.0, f64::max))
}

/// Largest distance from a domain-sample point to its nearest data point.
pub fn fill_distance(points: &[Point3], domain_sample: &[Point3]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("data points"));
    }
    if domain_sample.is_empty() {
        return Err(Error::Empty("domain sample"));
    }
    let index = SpatialIndex::with_auto_cell(points)?;
    let dists = domain_sample
        .par_iter()
        .map(|q| index.nearest_neighbor(q, None).map(|(_, d)| d))
        .collect::<Result<Vec<_>>>()?;
    Ok(dists.into_iter().fold(0.0, f64::max))
}

pub fn recommend_sigma(points: &[Point3], domain_sample: Option<&[Point3]>) -> Result<DensityReport> {
    let nn = nearest_neighbor_distances(points)?;
    let min = nn.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        return Err(Error::Degenerate("point set contains duplicates".into()));
    }
    let separation_q = 0.5 * min;
    let h_max = nn.iter().copied().fold(0.0, f64::max);
    let fill_h = domain_sample
        .map(|d| fill_distance(points, d))
        .transpose()?;
    Ok(DensityReport {
        separation_q,
        fill_h,
        h_max,
        sigma_from_q: 2.0 * separation_q,
        sigma_from_h: fill_h.map(|h| h * std::f64::consts::SQRT_2),
        sigma_from_hmax: 2.0 * h_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points() {
        let pts = [Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0)];
        assert_eq!(separation_distance(&pts).unwrap(), 0.5);
        assert_eq!(h_max(&pts).unwrap(), 1.0);
        let r = recommend_sigma(&pts, None).unwrap();
        assert_eq!(r.sigma_from_q, 1.0);
        assert_eq!(r.sigma_from_hmax, 2.0);
        assert!(r.fill_h.is_none() && r.sigma_from_h.is_none());
    }

    #[test]
    fn collinear_h_max() {
        let pts = [
            Point3::ORIGIN,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(3.0, 0.0, 0.0),
        ];
        assert_eq!(h_max(&pts).unwrap(), 2.0);
    }

    #[test]
    fn fill_distance_of_self_is_zero() {
        let pts = [
            Point3::ORIGIN,
            Point3::new(1.0, 0.5, 0.0),
            Point3::new(0.3, 0.2, 0.9),
        ];
        assert_eq!(fill_distance(&pts, &pts).unwrap(), 0.0);
    }

    #[test]
    fn too_few_points() {
        assert!(separation_distance(&[Point3::ORIGIN]).is_err());
        assert!(h_max(&[]).is_err());
        assert!(fill_distance(&[], &[Point3::ORIGIN]).is_err());
        assert!(fill_distance(&[Point3::ORIGIN], &[]).is_err());
    }

    #[test]
    fn duplicates_have_no_separation() {
        let pts = [Point3::ORIGIN, Point3::ORIGIN];
        assert!(matches!(separation_distance(&pts), Err(Error::Degenerate(_))));
    }
}
