//! Masked evaluation grid and zero level-set extraction.
//!
//! The interpolant is only trusted in a thin shell around the data: grid
//! nodes farther than `mask_epsilon` from every input sample are masked and
//! carry `MASK_SENTINEL`, and cells touching a masked node emit nothing.

mod tables;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Point3, SpatialIndex};
use crate::kernel::Interpolant;

use tables::{EDGE_TABLE, TRI_TABLE};

/// Field value stored at masked nodes; above every attainable |P| target.
pub const MASK_SENTINEL: f64 = 2.0;

/// Default per-side padding of the evaluation box, as a fraction of the
/// data bounding-box diagonal.
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct EvalGrid {
    bbox: BoundingBox,
    resolution: [usize; 3],
    spacing: [f64; 3],
    mask_epsilon: f64,
    active: Vec<bool>,
}

impl EvalGrid {
    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn mask_epsilon(&self) -> f64 {
        self.mask_epsilon
    }

    pub fn node_count(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Linear node index, x fastest.
    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution[0] * (j + self.resolution[1] * k)
    }

    #[inline]
    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Point3 {
        Point3::new(
            self.bbox.min.x + i as f64 * self.spacing[0],
            self.bbox.min.y + j as f64 * self.spacing[1],
            self.bbox.min.z + k as f64 * self.spacing[2],
        )
    }

    fn position_of(&self, node: usize) -> Point3 {
        let nx = self.resolution[0];
        let ny = self.resolution[1];
        self.node_position(node % nx, (node / nx) % ny, node / (nx * ny))
    }

    #[inline]
    pub fn is_active(&self, node: usize) -> bool {
        self.active[node]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn masked_count(&self) -> usize {
        self.node_count() - self.active_count()
    }

    pub fn cell_diagonal(&self) -> f64 {
        Point3::from_array(self.spacing).norm()
    }
}

/// Grid over the data bounding box padded by `margin_fraction` of its
/// diagonal on every side.
pub fn build_grid(
    points: &[Point3],
    resolution: [usize; 3],
    mask_epsilon: f64,
    margin_fraction: f64,
) -> Result<EvalGrid> {
    let data_box = BoundingBox::from_points(points)?;
    let diag = data_box.diagonal();
    if !(diag > 0.0) {
        return Err(Error::Degenerate("data bounding box has zero extent".into()));
    }
    if !(margin_fraction >= 0.0) {
        return Err(Error::invalid("margin fraction must be non-negative"));
    }
    build_grid_in(points, data_box.padded(margin_fraction * diag), resolution, mask_epsilon)
}

/// Grid over an explicit box.
pub fn build_grid_in(
    points: &[Point3],
    bbox: BoundingBox,
    resolution: [usize; 3],
    mask_epsilon: f64,
) -> Result<EvalGrid> {
    if points.is_empty() {
        return Err(Error::Empty("grid data points"));
    }
    if resolution.iter().any(|&r| r < 2) {
        return Err(Error::invalid(format!(
            "grid resolution must be at least 2 per axis, got {resolution:?}"
        )));
    }
    if !(mask_epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "mask epsilon must be positive, got {mask_epsilon}"
        )));
    }
    let ext = bbox.extent();
    if !(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0) {
        return Err(Error::Degenerate(
            "evaluation box must have positive extent on every axis".into(),
        ));
    }
    let spacing = [
        ext.x / (resolution[0] - 1) as f64,
        ext.y / (resolution[1] - 1) as f64,
        ext.z / (resolution[2] - 1) as f64,
    ];
    let mut grid = EvalGrid {
        bbox,
        resolution,
        spacing,
        mask_epsilon,
        active: Vec::new(),
    };

    let cell = if mask_epsilon.is_finite() {
        mask_epsilon.min(bbox.diagonal())
    } else {
        bbox.diagonal()
    };
    let index = SpatialIndex::build(points, cell)?;
    let active = (0..grid.node_count())
        .into_par_iter()
        .map(|n| index.any_within(&grid.position_of(n), mask_epsilon))
        .collect();
    grid.active = active;
    Ok(grid)
}

/// Node values on an `EvalGrid`, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

/// Evaluates the interpolant at every unmasked node.
pub fn sample_field(interp: &Interpolant, grid: &EvalGrid) -> ScalarField {
    let nodes: Vec<usize> = (0..grid.node_count()).filter(|&n| grid.is_active(n)).collect();
    let queries: Vec<Point3> = nodes.iter().map(|&n| grid.position_of(n)).collect();
    let vals = interp.evaluate(&queries);
    let mut values = vec![MASK_SENTINEL; grid.node_count()];
    for (n, v) in nodes.into_iter().zip(vals) {
        values[n] = v;
    }
    ScalarField { values }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
}

impl SurfaceMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bbox(&self) -> Option<BoundingBox> {
        BoundingBox::from_points(&self.vertices).ok()
    }

    /// Number of connected components over shared vertices.
    pub fn connected_components(&self) -> usize {
        let n = self.vertices.len();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        for t in &self.triangles {
            for e in [(t[0], t[1]), (t[1], t[2])] {
                let a = find(&mut parent, e.0);
                let b = find(&mut parent, e.1);
                if a != b {
                    parent[a.max(b) as usize] = a.min(b);
                }
            }
        }
        let mut used = vec![false; n];
        for t in &self.triangles {
            for &v in t {
                used[v as usize] = true;
            }
        }
        (0..n as u32)
            .filter(|&v| used[v as usize] && find(&mut parent, v) == v)
            .count()
    }
}

// Bourke numbering: corner offsets and the corner pair of each edge.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];
const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [3, 2],
    [0, 3],
    [4, 5],
    [5, 6],
    [7, 6],
    [4, 7],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Grid edge identifier: origin node * 3 + axis.
type EdgeKey = u64;

struct Slab {
    triangles: Vec<[EdgeKey; 3]>,
    vertices: Vec<(EdgeKey, Point3)>,
}

/// Marching cubes on the zero level set. Cells with any masked corner are
/// skipped. Nodes with value < 0 count as inside. Triangles wind
/// counter-clockwise seen from the positive side.
///
/// An empty mesh (no sign change among unmasked cells) is returned as-is;
/// callers report it as a diagnostic.
pub fn extract_isosurface(field: &ScalarField, grid: &EvalGrid) -> Result<SurfaceMesh> {
    if field.values.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            got: field.values.len(),
        });
    }
    let [nx, ny, nz] = grid.resolution;
    let slabs: Vec<Slab> = (0..nz - 1)
        .into_par_iter()
        .map(|k| extract_slab(field, grid, k, nx, ny))
        .collect();

    let mut ids: HashMap<EdgeKey, u32> = HashMap::new();
    let mut mesh = SurfaceMesh::default();
    for slab in slabs {
        let local: HashMap<EdgeKey, Point3> = slab.vertices.into_iter().collect();
        for tri in slab.triangles {
            let mut t = [0u32; 3];
            for (slot, key) in t.iter_mut().zip(tri) {
                *slot = *ids.entry(key).or_insert_with(|| {
                    mesh.vertices.push(local[&key]);
                    (mesh.vertices.len() - 1) as u32
                });
            }
            mesh.triangles.push(t);
        }
    }
    Ok(mesh)
}

fn extract_slab(field: &ScalarField, grid: &EvalGrid, k: usize, nx: usize, ny: usize) -> Slab {
    let mut slab = Slab {
        triangles: Vec::new(),
        vertices: Vec::new(),
    };
    let mut seen: HashMap<EdgeKey, ()> = HashMap::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let mut nodes = [0usize; 8];
            let mut vals = [0.0f64; 8];
            let mut masked = false;
            let mut case = 0usize;
            for (c, off) in CORNERS.iter().enumerate() {
                let n = grid.node_index(i + off[0], j + off[1], k + off[2]);
                nodes[c] = n;
                vals[c] = field.values[n];
                masked |= !grid.is_active(n);
                if vals[c] < 0.0 {
                    case |= 1 << c;
                }
            }
            if masked || EDGE_TABLE[case] == 0 {
                continue;
            }
            let mut edge_keys = [0 as EdgeKey; 12];
            for (e, &[a, b]) in EDGES.iter().enumerate() {
                if EDGE_TABLE[case] & (1 << e) == 0 {
                    continue;
                }
                let axis = (0..3).find(|&d| CORNERS[a][d] != CORNERS[b][d]).unwrap();
                let key = nodes[a] as EdgeKey * 3 + axis as EdgeKey;
                edge_keys[e] = key;
                if seen.insert(key, ()).is_none() {
                    let (fa, fb) = (vals[a], vals[b]);
                    let t = fa / (fa - fb);
                    let pa = grid.position_of(nodes[a]);
                    let pb = grid.position_of(nodes[b]);
                    slab.vertices.push((key, pa + (pb - pa) * t));
                }
            }
            let row = &TRI_TABLE[case];
            for tri in row.chunks(3).take_while(|t| t[0] >= 0) {
                // table winding faces the inside; reverse to face outward
                slab.triangles.push([
                    edge_keys[tri[0] as usize],
                    edge_keys[tri[2] as usize],
                    edge_keys[tri[1] as usize],
                ]);
            }
        }
    }
    slab
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analytic_field(grid: &EvalGrid, f: impl Fn(Point3) -> f64) -> ScalarField {
        let [nx, ny, nz] = grid.resolution();
        let mut values = vec![0.0; grid.node_count()];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    values[grid.node_index(i, j, k)] = f(grid.node_position(i, j, k));
                }
            }
        }
        ScalarField { values }
    }

    fn cube_box(h: f64) -> BoundingBox {
        BoundingBox::new(Point3::new(-h, -h, -h), Point3::new(h, h, h)).unwrap()
    }

    fn corners(h: f64) -> Vec<Point3> {
        vec![Point3::new(-h, -h, -h), Point3::new(h, h, h)]
    }

    #[test]
    fn plane_through_origin() {
        let grid = build_grid_in(&corners(1.0), cube_box(1.0), [3, 3, 3], 100.0).unwrap();
        let field = analytic_field(&grid, |p| p.x);
        let mesh = extract_isosurface(&field, &grid).unwrap();
        assert!(!mesh.is_empty());
        for v in &mesh.vertices {
            assert!(v.x.abs() <= 1e-12);
        }
    }

    #[test]
    fn all_positive_is_empty() {
        let grid = build_grid_in(&corners(1.0), cube_box(1.0), [4, 4, 4], 100.0).unwrap();
        let field = analytic_field(&grid, |_| 1.0);
        assert!(extract_isosurface(&field, &grid).unwrap().is_empty());
    }

    #[test]
    fn sphere_vertices_near_unit_radius() {
        let grid = build_grid_in(&corners(1.5), cube_box(1.5), [64, 64, 64], 100.0).unwrap();
        let field = analytic_field(&grid, |p| p.norm() - 1.0);
        let mesh = extract_isosurface(&field, &grid).unwrap();
        let tol = 2.0 * grid.cell_diagonal();
        assert!(mesh.vertices.len() > 1000);
        for v in &mesh.vertices {
            assert!((v.norm() - 1.0).abs() <= tol);
        }
        assert_eq!(mesh.connected_components(), 1);
    }

    #[test]
    fn sphere_is_closed_and_outward() {
        let grid = build_grid_in(&corners(1.5), cube_box(1.5), [24, 24, 24], 100.0).unwrap();
        let field = analytic_field(&grid, |p| p.norm() - 1.0);
        let mesh = extract_isosurface(&field, &grid).unwrap();
        let mut edges: HashMap<(u32, u32), i32> = HashMap::new();
        let mut volume = 0.0;
        for t in &mesh.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
            let [a, b, c] = t.map(|v| mesh.vertices[v as usize]);
            // signed tetra volume against the origin
            volume += a.dot(&Point3::new(
                b.y * c.z - b.z * c.y,
                b.z * c.x - b.x * c.z,
                b.x * c.y - b.y * c.x,
            )) / 6.0;
        }
        assert!(edges.values().all(|&c| c == 2), "mesh is not watertight");
        let sphere = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((volume - sphere).abs() < 0.05 * sphere, "volume {volume}");
    }

    #[test]
    fn masked_cells_emit_nothing() {
        // data only near x = +1; the plane x = 0 lies in masked space
        let pts = vec![Point3::new(1.0, 0.0, 0.0)];
        let grid = build_grid_in(&pts, cube_box(1.0), [9, 9, 9], 0.3).unwrap();
        let field = analytic_field(&grid, |p| p.x);
        let mut f = field.clone();
        for n in 0..grid.node_count() {
            if !grid.is_active(n) {
                f.values[n] = MASK_SENTINEL;
            }
        }
        assert!(extract_isosurface(&f, &grid).unwrap().is_empty());
    }

    #[test]
    fn mask_extremes() {
        let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0)];
        let bbox = BoundingBox::new(Point3::ORIGIN, Point3::new(1.0, 1.0, 1.0)).unwrap();
        let grid = build_grid_in(&pts, bbox, [5, 5, 5], bbox.diagonal()).unwrap();
        assert_eq!(grid.masked_count(), 0);
        let grid = build_grid_in(&pts, bbox, [5, 5, 5], 1e-12).unwrap();
        assert_eq!(grid.active_count(), 2);
        assert!(grid.is_active(grid.node_index(0, 0, 0)));
        assert!(grid.is_active(grid.node_index(4, 4, 4)));
    }

    #[test]
    fn bad_grids() {
        let pts = corners(1.0);
        assert!(build_grid(&pts, [1, 4, 4], 1.0, 0.05).is_err());
        assert!(build_grid(&pts, [4, 4, 4], 0.0, 0.05).is_err());
        assert!(build_grid(&[Point3::ORIGIN], [4, 4, 4], 1.0, 0.05).is_err());
    }
}
