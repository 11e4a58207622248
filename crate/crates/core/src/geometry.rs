//! Spatial primitives and a uniform hash-grid index.
//!
//! Every query radius used in this crate is known before the index is built
//! (a kernel cutoff, a mask width, a nearest-neighbor scale), so a flat grid
//! whose cell size matches that radius answers range queries by visiting a
//! 3x3x3 block of cells.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Squared Euclidean distance. Symmetric bit-for-bit in its arguments.
    #[inline]
    pub fn dist2(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn dist(&self, other: &Point3) -> f64 {
        self.dist2(other).sqrt()
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn axis(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl Add for Point3 {
    type Output = Point3;
    #[inline]
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    #[inline]
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    #[inline]
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// A direction normalized at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector3 {
    nx: f64,
    ny: f64,
    nz: f64,
}

impl UnitVector3 {
    /// Normalizes `(x, y, z)`. Fails on zero-length or non-finite input.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::invalid(format!(
                "normal ({x}, {y}, {z}) cannot be normalized"
            )));
        }
        Ok(UnitVector3 {
            nx: x / n,
            ny: y / n,
            nz: z / n,
        })
    }

    pub fn from_point(p: Point3) -> Result<Self> {
        Self::new(p.x, p.y, p.z)
    }

    #[inline]
    pub fn nx(&self) -> f64 {
        self.nx
    }
    #[inline]
    pub fn ny(&self) -> f64 {
        self.ny
    }
    #[inline]
    pub fn nz(&self) -> f64 {
        self.nz
    }

    #[inline]
    pub fn as_point(&self) -> Point3 {
        Point3::new(self.nx, self.ny, self.nz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point3,
    pub max: Point3,
}

impl BoundingBox {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::invalid("bounding box corners must be finite"));
        }
        if min.x > max.x || min.y > max.y || min.z > max.z {
            return Err(Error::invalid("bounding box min exceeds max"));
        }
        Ok(BoundingBox { min, max })
    }

    pub fn from_points(points: &[Point3]) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("point list"))?;
        let mut min = *first;
        let mut max = *first;
        for p in &points[1..] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            min.z = min.z.min(p.z);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
            max.z = max.z.max(p.z);
        }
        Ok(BoundingBox { min, max })
    }

    #[inline]
    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Grows every side by `pad` world units.
    pub fn padded(&self, pad: f64) -> BoundingBox {
        let d = Point3::new(pad, pad, pad);
        BoundingBox {
            min: self.min - d,
            max: self.max + d,
        }
    }

    /// Distance from `p` to the box (zero inside).
    pub fn distance_to(&self, p: &Point3) -> f64 {
        let gap = |v: f64, lo: f64, hi: f64| {
            if v < lo {
                lo - v
            } else if v > hi {
                v - hi
            } else {
                0.0
            }
        };
        let dx = gap(p.x, self.min.x, self.max.x);
        let dy = gap(p.y, self.min.y, self.max.y);
        let dz = gap(p.z, self.min.z, self.max.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Oriented input samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Vec<UnitVector3>,
    bbox: BoundingBox,
}

/// Distinct points closer than this fraction of the bbox diagonal are rejected.
pub const NEAR_DUPLICATE_FRACTION: f64 = 1e-12;

impl PointCloud {
    /// Validates and ingests samples. Exact duplicate positions are dropped
    /// (the first occurrence wins); distinct points closer than
    /// `NEAR_DUPLICATE_FRACTION` of the bbox diagonal are rejected.
    pub fn new(points: Vec<Point3>, normals: Vec<UnitVector3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("point cloud"));
        }
        if points.len() != normals.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: normals.len(),
            });
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("point {i} is not finite")));
        }
        let bbox = BoundingBox::from_points(&points)?;
        let diag = bbox.diagonal();
        if diag == 0.0 {
            // all samples coincide
            return Ok(PointCloud {
                points: vec![points[0]],
                normals: vec![normals[0]],
                bbox,
            });
        }

        let tol = NEAR_DUPLICATE_FRACTION * diag;
        let index = SpatialIndex::build(&points, (diag * 1e-6).max(tol))?;
        let mut keep = vec![true; points.len()];
        for (i, p) in points.iter().enumerate() {
            if !keep[i] {
                continue;
            }
            let mut clash = None;
            index.for_each_within(p, tol, |j, _| {
                if j > i && keep[j] {
                    if points[j] == *p {
                        keep[j] = false;
                    } else if clash.is_none() {
                        clash = Some(j);
                    }
                }
            });
            if let Some(j) = clash {
                return Err(Error::Degenerate(format!(
                    "points {i} and {j} are distinct but closer than {tol:e}"
                )));
            }
        }

        let (points, normals) = points
            .into_iter()
            .zip(normals)
            .zip(&keep)
            .filter_map(|(pn, &k)| k.then_some(pn))
            .unzip();
        Ok(PointCloud {
            points,
            normals,
            bbox,
        })
    }

    /// Builds a cloud from raw normal components, normalizing each.
    pub fn from_raw(points: Vec<Point3>, normals: &[Point3]) -> Result<Self> {
        let normals = normals
            .iter()
            .map(|n| UnitVector3::from_point(*n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, normals)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn normals(&self) -> &[UnitVector3] {
        &self.normals
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Subset by index, preserving the given order.
    pub(crate) fn select(&self, ids: &[usize]) -> Result<Self> {
        let points = ids.iter().map(|&i| self.points[i]).collect();
        let normals = ids.iter().map(|&i| self.normals[i]).collect();
        Self::new(points, normals)
    }
}

type CellKey = [i64; 3];

/// Immutable uniform hash grid over a point set.
///
/// Points are stored sorted by cell (ascending id inside a cell), so the
/// members of one cell are contiguous in `sorted_points`.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cell_size: f64,
    inv_cell: f64,
    cells: HashMap<CellKey, (u32, u32)>,
    order: Vec<u32>,
    sorted_points: Vec<Point3>,
    key_min: CellKey,
    key_max: CellKey,
}

impl SpatialIndex {
    pub fn build(points: &[Point3], cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::invalid(format!(
                "cell size must be positive and finite, got {cell_size}"
            )));
        }
        if points.is_empty() {
            return Err(Error::Empty("point list"));
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::invalid("too many points for index"));
        }
        let inv_cell = 1.0 / cell_size;
        let key = |p: &Point3| -> CellKey {
            [
                (p.x * inv_cell).floor() as i64,
                (p.y * inv_cell).floor() as i64,
                (p.z * inv_cell).floor() as i64,
            ]
        };

        let mut keyed: Vec<(CellKey, u32)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (key(p), i as u32))
            .collect();
        keyed.sort_unstable();

        let mut cells = HashMap::new();
        let mut key_min = keyed[0].0;
        let mut key_max = keyed[0].0;
        let mut start = 0usize;
        for k in 1..=keyed.len() {
            if k == keyed.len() || keyed[k].0 != keyed[start].0 {
                let c = keyed[start].0;
                for a in 0..3 {
                    key_min[a] = key_min[a].min(c[a]);
                    key_max[a] = key_max[a].max(c[a]);
                }
                cells.insert(c, (start as u32, k as u32));
                start = k;
            }
        }
        let order: Vec<u32> = keyed.iter().map(|&(_, i)| i).collect();
        let sorted_points = order.iter().map(|&i| points[i as usize]).collect();
        Ok(SpatialIndex {
            cell_size,
            inv_cell,
            cells,
            order,
            sorted_points,
            key_min,
            key_max,
        })
    }

    /// Index with a cell size derived from the point count and extent,
    /// suited to nearest-neighbor queries on surface-like samples.
    pub fn with_auto_cell(points: &[Point3]) -> Result<Self> {
        let bbox = BoundingBox::from_points(points)?;
        let diag = bbox.diagonal();
        let cell = if diag > 0.0 {
            diag / (points.len() as f64).sqrt().max(1.0)
        } else {
            1.0
        };
        Self::build(points, cell)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.order.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    #[inline]
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn bucket_count(&self) -> usize {
        self.cells.len()
    }

    /// Ids sharing a bucket, ascending.
    pub fn buckets(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.cells
            .values()
            .map(move |&(s, e)| &self.order[s as usize..e as usize])
    }

    /// Point ids in cell-sorted storage order.
    pub(crate) fn order(&self) -> &[u32] {
        &self.order
    }

    pub(crate) fn sorted_points(&self) -> &[Point3] {
        &self.sorted_points
    }

    #[inline]
    fn key_of(&self, p: &Point3) -> CellKey {
        [
            (p.x * self.inv_cell).floor() as i64,
            (p.y * self.inv_cell).floor() as i64,
            (p.z * self.inv_cell).floor() as i64,
        ]
    }

    /// Visits contiguous storage ranges of every cell that may hold points
    /// within `radius` of `center`, in a fixed cell order.
    #[inline]
    pub(crate) fn for_each_candidate_range(
        &self,
        center: &Point3,
        radius: f64,
        mut f: impl FnMut(usize, usize),
    ) {
        let lo = self.key_of(&Point3::new(
            center.x - radius,
            center.y - radius,
            center.z - radius,
        ));
        let hi = self.key_of(&Point3::new(
            center.x + radius,
            center.y + radius,
            center.z + radius,
        ));
        let lo = [
            lo[0].max(self.key_min[0]),
            lo[1].max(self.key_min[1]),
            lo[2].max(self.key_min[2]),
        ];
        let hi = [
            hi[0].min(self.key_max[0]),
            hi[1].min(self.key_max[1]),
            hi[2].min(self.key_max[2]),
        ];
        if lo[0] > hi[0] || lo[1] > hi[1] || lo[2] > hi[2] {
            return;
        }
        let span = (hi[0] - lo[0] + 1) as f64 * (hi[1] - lo[1] + 1) as f64 * (hi[2] - lo[2] + 1) as f64;
        if span > 2.0 * self.cells.len() as f64 {
            // cheaper to sweep the whole store
            f(0, self.order.len());
            return;
        }
        for cx in lo[0]..=hi[0] {
            for cy in lo[1]..=hi[1] {
                for cz in lo[2]..=hi[2] {
                    if let Some(&(s, e)) = self.cells.get(&[cx, cy, cz]) {
                        f(s as usize, e as usize);
                    }
                }
            }
        }
    }

    /// Calls `f(id, dist2)` for every indexed point with distance ≤ `radius`.
    /// Visit order is deterministic: cells in lexicographic key order, ids
    /// ascending within a cell.
    #[inline]
    pub fn for_each_within(&self, center: &Point3, radius: f64, mut f: impl FnMut(usize, f64)) {
        let r2 = radius * radius;
        self.for_each_candidate_range(center, radius, |s, e| {
            for k in s..e {
                let d2 = self.sorted_points[k].dist2(center);
                if d2 <= r2 {
                    f(self.order[k] as usize, d2);
                }
            }
        });
    }

    /// Ids of all points within `radius` of `center` (inclusive).
    pub fn range_query(&self, center: &Point3, radius: f64) -> Result<Vec<usize>> {
        if !(radius >= 0.0) {
            return Err(Error::invalid(format!(
                "radius must be non-negative, got {radius}"
            )));
        }
        let mut out = Vec::new();
        self.for_each_within(center, radius, |id, _| out.push(id));
        Ok(out)
    }

    /// Whether any indexed point lies within `radius` of `center`.
    pub fn any_within(&self, center: &Point3, radius: f64) -> bool {
        let r2 = radius * radius;
        let mut found = false;
        self.for_each_candidate_range(center, radius, |s, e| {
            if !found {
                found = self.sorted_points[s..e].iter().any(|p| p.dist2(center) <= r2);
            }
        });
        found
    }

    /// Closest indexed point to `query`, optionally skipping one id. Ties go
    /// to the smallest id.
    pub fn nearest_neighbor(&self, query: &Point3, exclude: Option<usize>) -> Result<(usize, f64)> {
        let needed = if exclude.is_some() { 2 } else { 1 };
        if self.len() < needed {
            return Err(Error::Empty("index has too few points for this query"));
        }
        let (id, d2) = self.nearest_sq(query, exclude);
        Ok((id, d2.sqrt()))
    }

    fn nearest_sq(&self, query: &Point3, exclude: Option<usize>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        let consider = |k: usize, best: &mut (usize, f64)| {
            let id = self.order[k] as usize;
            if Some(id) == exclude {
                return;
            }
            let d2 = self.sorted_points[k].dist2(query);
            if d2 < best.1 || (d2 == best.1 && id < best.0) {
                *best = (id, d2);
            }
        };

        let q = self.key_of(query);
        // ring count beyond which every occupied cell has been covered
        let mut max_ring = 0i64;
        for a in 0..3 {
            max_ring = max_ring
                .max((q[a] - self.key_min[a]).abs())
                .max((self.key_max[a] - q[a]).abs());
        }
        let occupied = self.cells.len() as i64;

        let mut ring = 0i64;
        loop {
            let side = 2 * ring + 1;
            if side.saturating_mul(side).saturating_mul(side) > 8 * occupied + 64 {
                // the shell is larger than the occupied set: finish with a sweep
                for k in 0..self.order.len() {
                    consider(k, &mut best);
                }
                return best;
            }
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    let on_face = dx.abs() == ring || dy.abs() == ring;
                    let mut visit = |dz: i64| {
                        if let Some(&(s, e)) = self.cells.get(&[q[0] + dx, q[1] + dy, q[2] + dz]) {
                            for k in s as usize..e as usize {
                                consider(k, &mut best);
                            }
                        }
                    };
                    if on_face {
                        for dz in -ring..=ring {
                            visit(dz);
                        }
                    } else if ring > 0 {
                        visit(-ring);
                        visit(ring);
                    } else {
                        visit(0);
                    }
                }
            }
            // cells in ring+1 and beyond are at least ring*cell away
            let reach = ring as f64 * self.cell_size;
            if best.0 != usize::MAX && best.1 <= reach * reach {
                return best;
            }
            if ring >= max_ring {
                return best;
            }
            ring += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect()
    }

    fn brute_range(points: &[Point3], c: &Point3, r: f64) -> Vec<usize> {
        (0..points.len()).filter(|&i| points[i].dist(c) <= r).collect()
    }

    #[test]
    fn single_point_single_bucket() {
        let idx = SpatialIndex::build(&[Point3::ORIGIN], 1.0).unwrap();
        assert_eq!(idx.bucket_count(), 1);
        assert_eq!(idx.buckets().next().unwrap(), &[0]);
    }

    #[test]
    fn zero_radius_hits_the_point_itself() {
        let pts = random_points(50, 3);
        let idx = SpatialIndex::build(&pts, 0.1).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(idx.range_query(p, 0.0).unwrap(), vec![i]);
        }
    }

    #[test]
    fn two_point_range() {
        let pts = [Point3::ORIGIN, Point3::new(2.0, 0.0, 0.0)];
        let idx = SpatialIndex::build(&pts, 1.0).unwrap();
        assert_eq!(idx.range_query(&Point3::ORIGIN, 1.0).unwrap(), vec![0]);
    }

    #[test]
    fn huge_radius_returns_everything() {
        let pts = random_points(300, 9);
        let idx = SpatialIndex::build(&pts, 0.05).unwrap();
        let mut ids = idx.range_query(&Point3::new(0.5, 0.5, 0.5), 10.0).unwrap();
        ids.sort_unstable();
        assert_eq!(ids, (0..300).collect::<Vec<_>>());
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(SpatialIndex::build(&[Point3::ORIGIN], 0.0).is_err());
        assert!(SpatialIndex::build(&[Point3::ORIGIN], -1.0).is_err());
        assert!(SpatialIndex::build(&[], 1.0).is_err());
        let idx = SpatialIndex::build(&[Point3::ORIGIN], 1.0).unwrap();
        assert!(idx.range_query(&Point3::ORIGIN, -0.1).is_err());
        assert!(idx.nearest_neighbor(&Point3::ORIGIN, Some(0)).is_err());
    }

    #[test]
    fn range_matches_brute_force() {
        let pts = random_points(200, 1);
        let idx = SpatialIndex::build(&pts, 0.15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let c = Point3::new(rng.gen(), rng.gen(), rng.gen());
            let r: f64 = rng.gen_range(0.0..0.6);
            let mut got = idx.range_query(&c, r).unwrap();
            got.sort_unstable();
            assert_eq!(got, brute_range(&pts, &c, r));
        }
    }

    #[test]
    fn nearest_examples() {
        let pts = [Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0)];
        let idx = SpatialIndex::build(&pts, 0.3).unwrap();
        let (id, d) = idx.nearest_neighbor(&Point3::new(0.1, 0.0, 0.0), None).unwrap();
        assert_eq!(id, 0);
        assert!((d - 0.1).abs() < 1e-15);
        assert_eq!(idx.nearest_neighbor(&pts[1], None).unwrap(), (1, 0.0));
        assert_eq!(idx.nearest_neighbor(&pts[1], Some(1)).unwrap(), (0, 1.0));
    }

    #[test]
    fn nearest_tie_prefers_smaller_id() {
        let pts = [Point3::new(1.0, 0.0, 0.0), Point3::new(-1.0, 0.0, 0.0)];
        let idx = SpatialIndex::build(&pts, 0.25).unwrap();
        assert_eq!(idx.nearest_neighbor(&Point3::ORIGIN, None).unwrap().0, 0);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let pts = random_points(500, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for cell in [0.01, 0.08, 0.5, 3.0] {
            let idx = SpatialIndex::build(&pts, cell).unwrap();
            for _ in 0..100 {
                let q = Point3::new(
                    rng.gen_range(-0.5..1.5),
                    rng.gen_range(-0.5..1.5),
                    rng.gen_range(-0.5..1.5),
                );
                let (id, d) = idx.nearest_neighbor(&q, None).unwrap();
                let (bid, bd) = pts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, p.dist(&q)))
                    .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                assert_eq!((id, d), (bid, bd));
            }
        }
    }

    #[test]
    fn cloud_dedups_exact_and_rejects_near_duplicates() {
        let n = UnitVector3::new(0.0, 0.0, 1.0).unwrap();
        let pts = vec![
            Point3::ORIGIN,
            Point3::new(1.0, 0.0, 0.0),
            Point3::ORIGIN,
            Point3::new(0.0, 1.0, 0.0),
        ];
        let cloud = PointCloud::new(pts, vec![n; 4]).unwrap();
        assert_eq!(cloud.len(), 3);
        assert_eq!(cloud.points()[2], Point3::new(0.0, 1.0, 0.0));

        let pts = vec![Point3::ORIGIN, Point3::new(1e-15, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0)];
        assert!(matches!(
            PointCloud::new(pts, vec![n; 3]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn cloud_rejects_bad_input() {
        let n = UnitVector3::new(1.0, 0.0, 0.0).unwrap();
        assert!(PointCloud::new(vec![], vec![]).is_err());
        assert!(PointCloud::new(vec![Point3::ORIGIN], vec![n, n]).is_err());
        assert!(PointCloud::new(vec![Point3::new(f64::NAN, 0.0, 0.0)], vec![n]).is_err());
        assert!(UnitVector3::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn unit_vector_is_normalized() {
        let u = UnitVector3::new(3.0, 4.0, 12.0).unwrap();
        assert!((u.as_point().norm() - 1.0).abs() < 1e-15);
    }
}
