//! Off-surface augmentation: each oriented sample contributes itself (target
//! 0) plus one site pushed outward along its normal (target +1) and one pushed
//! inward (target -1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Point3, SpatialIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetConfig {
    /// Offset as a fraction of the bounding-box diagonal.
    pub delta_fraction: f64,
    /// Absolute offset in world units; overrides `delta_fraction`.
    pub explicit_delta: Option<f64>,
}

impl Default for OffsetConfig {
    fn default() -> Self {
        OffsetConfig {
            delta_fraction: 0.01,
            explicit_delta: None,
        }
    }
}

impl OffsetConfig {
    pub fn with_delta(delta: f64) -> Self {
        OffsetConfig {
            explicit_delta: Some(delta),
            ..Default::default()
        }
    }

    pub fn resolve(&self, cloud: &PointCloud) -> Result<f64> {
        let delta = match self.explicit_delta {
            Some(d) => d,
            None => self.delta_fraction * cloud.bbox().diagonal(),
        };
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!(
                "offset distance resolves to {delta}, must be positive"
            )));
        }
        Ok(delta)
    }
}

/// The 3N interpolation sites, ordered on-surface, outside, inside.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedDataset {
    sites: Vec<Point3>,
    values: Vec<f64>,
    delta: f64,
}

impl ExtendedDataset {
    pub fn sites(&self) -> &[Point3] {
        &self.sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta_used(&self) -> f64 {
        self.delta
    }

    /// Number of input samples (one third of the site count).
    pub fn base_len(&self) -> usize {
        self.sites.len() / 3
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Point3>, Vec<f64>) {
        (self.sites, self.values)
    }
}

pub fn extend(cloud: &PointCloud, cfg: &OffsetConfig) -> Result<ExtendedDataset> {
    let delta = cfg.resolve(cloud)?;
    let n = cloud.len();
    let mut sites = Vec::with_capacity(3 * n);
    sites.extend_from_slice(cloud.points());
    sites.extend(
        cloud
            .points()
            .iter()
            .zip(cloud.normals())
            .map(|(p, nrm)| *p + nrm.as_point() * delta),
    );
    sites.extend(
        cloud
            .points()
            .iter()
            .zip(cloud.normals())
            .map(|(p, nrm)| *p - nrm.as_point() * delta),
    );

    let mut values = vec![0.0; 3 * n];
    values[n..2 * n].fill(1.0);
    values[2 * n..].fill(-1.0);

    check_distinct(&sites, n)?;
    Ok(ExtendedDataset {
        sites,
        values,
        delta,
    })
}

/// Off-surface sites (ids ≥ n) must not land on any other site.
fn check_distinct(sites: &[Point3], n: usize) -> Result<()> {
    let bbox = crate::geometry::BoundingBox::from_points(sites)?;
    let diag = bbox.diagonal();
    let tol = crate::geometry::NEAR_DUPLICATE_FRACTION * diag;
    if diag == 0.0 {
        return Ok(());
    }
    let index = SpatialIndex::build(sites, (diag * 1e-6).max(tol))?;
    for (i, p) in sites.iter().enumerate().skip(n) {
        let mut clash = None;
        index.for_each_within(p, tol, |j, _| {
            if j != i && clash.is_none() {
                clash = Some(j);
            }
        });
        if let Some(j) = clash {
            return Err(Error::Collision(format!(
                "off-surface site {i} coincides with site {j}; offset too large or normals degenerate"
            )));
        }
    }
    Ok(())
}
