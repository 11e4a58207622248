//! Truncated Gaussian kernel, the matrix-free interpolation operator, and
//! the interpolant evaluator.
//!
//! Only the Gaussian is implemented. Other radial functions (inverse
//! multiquadric, Matérn, ...) would slot in behind `GaussianKernel`'s role
//! but are not provided.
//!
//! Truncation uses the symmetric predicate `|x_i - x_j| <= cutoff`, so the
//! implied matrix stays symmetric. Each output entry is accumulated by a
//! single task in a fixed neighbor order (cells in lexicographic key order,
//! ids ascending within a cell; plain ascending id when the cutoff covers the
//! whole point set), which makes results bitwise reproducible for any thread
//! count.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Point3, SpatialIndex};

/// Default truncation radius in units of σ.
pub const DEFAULT_CUTOFF_SIGMAS: f64 = 6.0;

/// Query tile used by `Interpolant::evaluate`.
const QUERY_TILE: usize = 256;
/// Center block used when the cutoff covers every center.
const CENTER_BLOCK: usize = 1024;
const ROW_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    sigma: f64,
    cutoff_radius: f64,
}

impl GaussianKernel {
    /// Kernel of width `sigma` truncated at `6·sigma`.
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_cutoff(sigma, DEFAULT_CUTOFF_SIGMAS * sigma)
    }

    /// `cutoff_radius` may be `f64::INFINITY` for the untruncated kernel.
    pub fn with_cutoff(sigma: f64, cutoff_radius: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if !(cutoff_radius > 0.0) {
            return Err(Error::invalid(format!(
                "cutoff radius must be positive, got {cutoff_radius}"
            )));
        }
        Ok(GaussianKernel {
            sigma,
            cutoff_radius,
        })
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    /// `1 / (sqrt(2π)·σ)`, the value at zero distance.
    #[inline]
    pub fn peak(&self) -> f64 {
        1.0 / ((2.0 * PI).sqrt() * self.sigma)
    }

    #[inline]
    fn exponent_scale(&self) -> f64 {
        1.0 / (2.0 * self.sigma * self.sigma)
    }

    #[inline]
    fn cutoff2(&self) -> f64 {
        self.cutoff_radius * self.cutoff_radius
    }

    /// Kernel value at squared distance `d2`; zero beyond the cutoff.
    #[inline]
    pub fn value_sq(&self, d2: f64) -> f64 {
        if d2 > self.cutoff2() {
            0.0
        } else {
            self.peak() * (-d2 * self.exponent_scale()).exp()
        }
    }

    pub fn phi(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("distance must be non-negative, got {r}")));
        }
        if r > self.cutoff_radius {
            return Ok(0.0);
        }
        Ok(self.value_sq(r * r))
    }
}

/// Neighbor lookup shared by the operator and the evaluator.
#[derive(Debug, Clone)]
enum Neighborhood {
    /// Cutoff covers the whole point set: scan every point in id order.
    All,
    Grid(SpatialIndex),
}

impl Neighborhood {
    fn build(points: &[Point3], cutoff: f64) -> Result<Self> {
        let diag = BoundingBox::from_points(points)?.diagonal();
        if cutoff >= diag || !cutoff.is_finite() {
            Ok(Neighborhood::All)
        } else {
            Ok(Neighborhood::Grid(SpatialIndex::build(points, cutoff)?))
        }
    }

    /// Values of `v` (indexed by point id) laid out in the scan order used
    /// by `accumulate`.
    fn reorder(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Neighborhood::All => v.to_vec(),
            Neighborhood::Grid(index) => index.order().iter().map(|&i| v[i as usize]).collect(),
        }
    }

    /// `Σ_j exp(-|p - x_j|² / 2σ²) · w_j` over points within the cutoff,
    /// without the kernel's peak factor.
    #[inline]
    fn accumulate(
        &self,
        points: &[Point3],
        weights: &[f64],
        p: &Point3,
        kernel: &GaussianKernel,
    ) -> f64 {
        let cutoff2 = kernel.cutoff2();
        let scale = kernel.exponent_scale();
        let mut acc = 0.0;
        match self {
            Neighborhood::All => {
                for (x, w) in points.iter().zip(weights) {
                    let d2 = x.dist2(p);
                    if d2 <= cutoff2 {
                        acc += (-d2 * scale).exp() * w;
                    }
                }
            }
            Neighborhood::Grid(index) => {
                let sorted = index.sorted_points();
                index.for_each_candidate_range(p, kernel.cutoff_radius, |s, e| {
                    for (x, w) in sorted[s..e].iter().zip(&weights[s..e]) {
                        let d2 = x.dist2(p);
                        if d2 <= cutoff2 {
                            acc += (-d2 * scale).exp() * w;
                        }
                    }
                });
            }
        }
        acc
    }
}

/// Matrix-free interpolation operator `A` with `A_ij = φ(|x_i - x_j|)`.
#[derive(Debug, Clone)]
pub struct RbfOperator {
    kernel: GaussianKernel,
    sites: Vec<Point3>,
    neighborhood: Neighborhood,
}

impl RbfOperator {
    pub fn new(kernel: GaussianKernel, sites: Vec<Point3>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Empty("operator sites"));
        }
        let neighborhood = Neighborhood::build(&sites, kernel.cutoff_radius)?;
        Ok(RbfOperator {
            kernel,
            sites,
            neighborhood,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn kernel(&self) -> &GaussianKernel {
        &self.kernel
    }

    pub fn sites(&self) -> &[Point3] {
        &self.sites
    }

    /// Entry `(i, j)` of the implied truncated matrix.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.kernel.value_sq(self.sites[i].dist2(&self.sites[j]))
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `out = A v`, parallel over rows.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.len();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        if out.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: out.len(),
            });
        }
        let weights = self.neighborhood.reorder(v);
        let points: &[Point3] = match &self.neighborhood {
            Neighborhood::All => &self.sites,
            Neighborhood::Grid(index) => index.sorted_points(),
        };
        let peak = self.kernel.peak();
        out.par_chunks_mut(ROW_CHUNK)
            .enumerate()
            .for_each(|(c, rows)| {
                let base = c * ROW_CHUNK;
                for (k, slot) in rows.iter_mut().enumerate() {
                    let p = &self.sites[base + k];
                    *slot = peak * self.neighborhood.accumulate(points, &weights, p, &self.kernel);
                }
            });
        Ok(())
    }
}

/// Solved interpolant `P(x) = Σ_j c_j φ(|x - x_j|)`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    kernel: GaussianKernel,
    centers: Vec<Point3>,
    coefficients: Vec<f64>,
    neighborhood: Neighborhood,
    sorted_coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolantSummary {
    pub sites: usize,
    pub sigma: f64,
    pub cutoff_radius: f64,
}

impl Interpolant {
    pub fn new(kernel: GaussianKernel, centers: Vec<Point3>, coefficients: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Empty("interpolant centers"));
        }
        if centers.len() != coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: coefficients.len(),
            });
        }
        let neighborhood = Neighborhood::build(&centers, kernel.cutoff_radius)?;
        let sorted_coefficients = neighborhood.reorder(&coefficients);
        Ok(Interpolant {
            kernel,
            centers,
            coefficients,
            neighborhood,
            sorted_coefficients,
        })
    }

    pub fn kernel(&self) -> &GaussianKernel {
        &self.kernel
    }

    pub fn centers(&self) -> &[Point3] {
        &self.centers
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn summary(&self) -> InterpolantSummary {
        InterpolantSummary {
            sites: self.centers.len(),
            sigma: self.kernel.sigma(),
            cutoff_radius: self.kernel.cutoff_radius(),
        }
    }

    fn scan_points(&self) -> &[Point3] {
        match &self.neighborhood {
            Neighborhood::All => &self.centers,
            Neighborhood::Grid(index) => index.sorted_points(),
        }
    }

    pub fn evaluate_at(&self, p: &Point3) -> f64 {
        self.kernel.peak()
            * self
                .neighborhood
                .accumulate(self.scan_points(), &self.sorted_coefficients, p, &self.kernel)
    }

    /// Values at every query point, tiled across threads.
    pub fn evaluate(&self, queries: &[Point3]) -> Vec<f64> {
        let mut out = vec![0.0; queries.len()];
        let peak = self.kernel.peak();
        out.par_chunks_mut(QUERY_TILE)
            .zip(queries.par_chunks(QUERY_TILE))
            .for_each(|(dst, tile)| match &self.neighborhood {
                Neighborhood::All => self.evaluate_tile_blocked(tile, dst),
                Neighborhood::Grid(_) => {
                    for (slot, q) in dst.iter_mut().zip(tile) {
                        *slot = self.evaluate_at(q);
                    }
                }
            });
        if matches!(self.neighborhood, Neighborhood::All) {
            out.iter_mut().for_each(|v| *v *= peak);
        }
        out
    }

    /// Untruncated-style tile: sweep centers in blocks so one block stays
    /// cache-resident across the whole query tile. Per-query accumulation
    /// order remains ascending center id.
    fn evaluate_tile_blocked(&self, tile: &[Point3], dst: &mut [f64]) {
        let cutoff2 = self.kernel.cutoff2();
        let scale = self.kernel.exponent_scale();
        dst.fill(0.0);
        for (xs, cs) in self
            .centers
            .chunks(CENTER_BLOCK)
            .zip(self.coefficients.chunks(CENTER_BLOCK))
        {
            for (acc, q) in dst.iter_mut().zip(tile) {
                let mut a = *acc;
                for (x, c) in xs.iter().zip(cs) {
                    let d2 = x.dist2(q);
                    if d2 <= cutoff2 {
                        a += (-d2 * scale).exp() * c;
                    }
                }
                *acc = a;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_closed_forms() {
        let k = GaussianKernel::new(1.0).unwrap();
        assert!((k.phi(0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(k.phi(7.0).unwrap(), 0.0);
        assert!(k.phi(-1.0).is_err());

        let k = GaussianKernel::new(0.157).unwrap();
        let expected = 0.398_942_280_401_432_7 / 0.157 * (-0.5f64).exp();
        assert!((k.phi(0.157).unwrap() - expected).abs() < 1e-12);
        assert!((k.phi(0.157).unwrap() - 1.541_214_805_854_416).abs() < 1e-12);
    }

    #[test]
    fn cutoff_tail_is_small() {
        let k = GaussianKernel::new(0.3).unwrap();
        let ratio = k.phi(k.cutoff_radius()).unwrap() / k.phi(0.0).unwrap();
        assert!(ratio <= (-18.0f64).exp() * (1.0 + 1e-12));
        assert!(ratio <= 1.6e-8);
    }

    #[test]
    fn invalid_kernels() {
        assert!(GaussianKernel::new(0.0).is_err());
        assert!(GaussianKernel::new(f64::NAN).is_err());
        assert!(GaussianKernel::with_cutoff(1.0, 0.0).is_err());
        assert!(GaussianKernel::with_cutoff(1.0, f64::INFINITY).is_ok());
    }

    #[test]
    fn single_site_apply() {
        let k = GaussianKernel::new(0.5).unwrap();
        let op = RbfOperator::new(k, vec![Point3::ORIGIN]).unwrap();
        assert_eq!(op.apply(&[1.0]).unwrap(), vec![k.peak()]);
        assert!(op.apply(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn far_sites_decouple() {
        let k = GaussianKernel::new(0.1).unwrap();
        let op = RbfOperator::new(k, vec![Point3::ORIGIN, Point3::new(5.0, 0.0, 0.0)]).unwrap();
        assert_eq!(op.apply(&[1.0, 1.0]).unwrap(), vec![k.peak(), k.peak()]);
    }

    #[test]
    fn empty_queries() {
        let k = GaussianKernel::new(0.5).unwrap();
        let interp = Interpolant::new(k, vec![Point3::ORIGIN], vec![1.0]).unwrap();
        assert!(interp.evaluate(&[]).is_empty());
        assert!(Interpolant::new(k, vec![Point3::ORIGIN], vec![]).is_err());
    }
}
