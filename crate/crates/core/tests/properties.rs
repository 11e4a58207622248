mod common;

use common::*;
use gaussurf::dataset::{extend, OffsetConfig};
use gaussurf::density::{h_max, nearest_neighbor_distances, separation_distance};
use gaussurf::io::{parse_ply, write_ply_cloud, PlyEncoding};
use gaussurf::kernel::{GaussianKernel, Interpolant, RbfOperator};
use gaussurf::pipeline::{reconstruct, ReconstructionConfig, SigmaSource};
use gaussurf::solver::{decompose, gmres_solve, SolverConfig};
use gaussurf::surface::{build_grid_in, extract_isosurface, ScalarField};
use gaussurf::synthetic::make_sphere_cloud;
use gaussurf::{BoundingBox, Point3, PointCloud, SpatialIndex};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn points(lo: usize, hi: usize) -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec(point(), lo..hi)
}

fn cloud(lo: usize, hi: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec((point(), point()), lo..hi)
        .prop_filter_map("degenerate cloud", |pairs| {
            let (pts, nrm): (Vec<Point3>, Vec<Point3>) = pairs.into_iter().unzip();
            if nrm.iter().any(|n| n.norm() < 1e-3) {
                return None;
            }
            PointCloud::from_raw(pts, &nrm).ok()
        })
}

fn cross(a: Point3, b: Point3) -> Point3 {
    Point3::new(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x)
}

fn linear_field(grid_res: usize, a: Point3, b: f64) -> (gaussurf::surface::EvalGrid, ScalarField) {
    let bbox = BoundingBox::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap();
    let anchor = [Point3::new(0.0, 0.0, 0.0)];
    let grid = build_grid_in(&anchor, bbox, [grid_res; 3], 10.0).unwrap();
    let values = (0..grid.node_count())
        .map(|n| {
            let i = n % grid_res;
            let j = (n / grid_res) % grid_res;
            let k = n / (grid_res * grid_res);
            a.dot(&grid.node_position(i, j, k)) + b
        })
        .collect();
    (grid, ScalarField { values })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn range_query_is_brute_force(pts in points(1, 120), q in point(), r in 0.0..1.5f64, cell in 0.05..1.0f64) {
        let index = SpatialIndex::build(&pts, cell).unwrap();
        let mut got = index.range_query(&q, r).unwrap();
        got.sort_unstable();
        let want: Vec<usize> = (0..pts.len()).filter(|&i| dist(&pts[i], &q) <= r).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn nearest_neighbor_is_minimal(pts in points(1, 120), q in point()) {
        let index = SpatialIndex::with_auto_cell(&pts).unwrap();
        let (id, d) = index.nearest_neighbor(&q, None).unwrap();
        prop_assert!(pts.iter().all(|p| dist(p, &q) >= d - 1e-12));
        prop_assert!((dist(&pts[id], &q) - d).abs() <= 1e-12);
    }

    #[test]
    fn full_radius_query_is_permutation(pts in points(1, 120), cell in 0.05..1.0f64) {
        let index = SpatialIndex::build(&pts, cell).unwrap();
        let mut got = index.range_query(&Point3::new(0.0, 0.0, 0.0), 10.0).unwrap();
        got.sort_unstable();
        prop_assert_eq!(got, (0..pts.len()).collect::<Vec<_>>());
    }

    #[test]
    fn extended_sites_follow_layout(c in cloud(2, 60)) {
        let ext = extend(&c, &OffsetConfig::default()).unwrap();
        let n = c.len();
        let d = ext.delta_used();
        prop_assert_eq!(ext.len(), 3 * n);
        prop_assert_eq!(&ext.sites()[..n], c.points());
        for i in 0..n {
            let normal = c.normals()[i].as_point();
            let out = ext.sites()[n + i] - c.points()[i];
            let inn = ext.sites()[2 * n + i] - c.points()[i];
            prop_assert!((out.norm() - d).abs() <= 1e-12 * (1.0 + d));
            prop_assert!((inn.norm() - d).abs() <= 1e-12 * (1.0 + d));
            prop_assert!(out.dot(&normal) > 0.0);
            prop_assert!(inn.dot(&normal) < 0.0);
        }
        let again = extend(&c, &OffsetConfig::with_delta(d)).unwrap();
        prop_assert_eq!(again.sites(), ext.sites());
        prop_assert_eq!(again.values(), ext.values());
    }

    #[test]
    fn density_matches_brute_force(pts in points(2, 80)) {
        let nn = brute_nn(&pts);
        prop_assume!(nn.iter().all(|&d| d > 0.0));
        let got = nearest_neighbor_distances(&pts).unwrap();
        for (g, w) in got.iter().zip(&nn) {
            prop_assert!((g - w).abs() <= 1e-12);
        }
        let min = nn.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((separation_distance(&pts).unwrap() - 0.5 * min).abs() <= 1e-12);
    }

    #[test]
    fn separation_never_grows_when_points_are_added(pts in points(2, 60), extra in point()) {
        prop_assume!(brute_nn(&pts).iter().all(|&d| d > 0.0));
        prop_assume!(pts.iter().all(|p| dist(p, &extra) > 0.0));
        let before = separation_distance(&pts).unwrap();
        let mut more = pts.clone();
        more.push(extra);
        prop_assert!(separation_distance(&more).unwrap() <= before);
    }

    #[test]
    fn density_scales_with_the_data(pts in points(2, 60), s in 0.1..10.0f64) {
        prop_assume!(brute_nn(&pts).iter().all(|&d| d > 1e-9));
        let scaled: Vec<Point3> = pts.iter().map(|p| *p * s).collect();
        let q = separation_distance(&pts).unwrap();
        let hm = h_max(&pts).unwrap();
        prop_assert!((separation_distance(&scaled).unwrap() - s * q).abs() <= 1e-12 * s * q.max(1.0));
        prop_assert!((h_max(&scaled).unwrap() - s * hm).abs() <= 1e-12 * s * hm.max(1.0));
    }

    #[test]
    fn operator_is_symmetric(pts in points(2, 80), sigma in 0.05..0.5f64, seed in 0u64..1000) {
        let n = pts.len();
        let op = RbfOperator::new(GaussianKernel::new(sigma).unwrap(), pts).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(op.entry(i, j), op.entry(j, i));
            }
        }
        let u = random_vector(n, seed);
        let v = random_vector(n, seed + 1);
        let uav: f64 = u.iter().zip(op.apply(&v).unwrap()).map(|(a, b)| a * b).sum();
        let vau: f64 = v.iter().zip(op.apply(&u).unwrap()).map(|(a, b)| a * b).sum();
        prop_assert!((uav - vau).abs() <= 1e-12 * (1.0 + uav.abs()));
    }

    #[test]
    fn evaluation_is_linear(centers in points(1, 60), queries in points(1, 30), a in -3.0..3.0f64, b in -3.0..3.0f64, seed in 0u64..1000) {
        let k = GaussianKernel::new(0.3).unwrap();
        let n = centers.len();
        let c1 = random_vector(n, seed);
        let c2 = random_vector(n, seed + 7);
        let mix: Vec<f64> = c1.iter().zip(&c2).map(|(x, y)| a * x + b * y).collect();
        let f1 = Interpolant::new(k, centers.clone(), c1).unwrap().evaluate(&queries);
        let f2 = Interpolant::new(k, centers.clone(), c2).unwrap().evaluate(&queries);
        let fm = Interpolant::new(k, centers, mix).unwrap().evaluate(&queries);
        for ((x, y), m) in f1.iter().zip(&f2).zip(&fm) {
            prop_assert!((a * x + b * y - m).abs() <= 1e-12 * (1.0 + m.abs()) * n as f64);
        }
    }

    #[test]
    fn ply_round_trip(c in cloud(1, 200), binary in any::<bool>()) {
        let enc = if binary { PlyEncoding::BinaryLittleEndian } else { PlyEncoding::Ascii };
        let mut buf = Vec::new();
        write_ply_cloud(&mut buf, &c, enc).unwrap();
        let back = parse_ply(&buf[..]).unwrap();
        prop_assert_eq!(back.points(), c.points());
        for (a, b) in back.normals().iter().zip(c.normals()) {
            prop_assert!((a.as_point() - b.as_point()).norm() <= 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn residual_estimate_never_rises_within_a_cycle(pts in points(20, 120), sigma in 0.05..0.4f64, restart in 2usize..15) {
        let k = GaussianKernel::new(sigma).unwrap();
        let op = RbfOperator::new(k, pts.clone()).unwrap();
        let b = random_vector(pts.len(), 3);
        let cfg = SolverConfig { restart_length: restart, max_outer_iterations: 60, ..Default::default() };
        let (_, report) = gmres_solve(&op, None, &b, &cfg).unwrap();
        for cycle in report.residual_history.chunks(restart) {
            for w in cycle.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn single_subdomain_preconditioner_solves_at_once(seed in 0u64..1000, sigma in 0.05..0.15f64) {
        let pts = random_points(150, 0.0, 1.0, seed);
        prop_assume!(brute_nn(&pts).iter().all(|&d| d > 0.02));
        let k = GaussianKernel::new(sigma).unwrap();
        let cfg = SolverConfig { subdomain_target_size: 1000, ..Default::default() };
        let dec = decompose(&pts, &k, &cfg).unwrap();
        prop_assert_eq!(dec.subdomains().len(), 1);
        prop_assume!(dec.max_shift() == 0.0);
        let op = RbfOperator::new(k, pts).unwrap();
        let b = random_vector(150, seed + 1);
        let (_, report) = gmres_solve(&op, Some(&dec), &b, &cfg).unwrap();
        prop_assert!(report.converged);
        prop_assert!(report.iterations <= 2);
    }

    #[test]
    fn isosurface_vertices_lie_on_the_zero_set(a in point(), b in -0.5..0.5f64, res in 3usize..12) {
        prop_assume!(a.norm() > 0.2);
        let (grid, field) = linear_field(res, a, b);
        let mesh = extract_isosurface(&field, &grid).unwrap();
        for v in &mesh.vertices {
            prop_assert!((a.dot(v) + b).abs() <= 1e-12);
        }
    }

    #[test]
    fn negated_field_flips_orientation(a in point(), b in -0.5..0.5f64, res in 3usize..12) {
        prop_assume!(a.norm() > 0.2);
        let (grid, field) = linear_field(res, a, b);
        let neg = ScalarField { values: field.values.iter().map(|v| -v).collect() };
        let m1 = extract_isosurface(&field, &grid).unwrap();
        let m2 = extract_isosurface(&neg, &grid).unwrap();
        prop_assert_eq!(m1.triangles.len(), m2.triangles.len());
        let sign = |m: &gaussurf::surface::SurfaceMesh| -> Vec<f64> {
            m.triangles
                .iter()
                .map(|t| {
                    let [p, q, r] = t.map(|i| m.vertices[i as usize]);
                    cross(q - p, r - p).dot(&a)
                })
                .filter(|s| s.abs() > 1e-14)
                .collect()
        };
        let s1 = sign(&m1);
        let s2 = sign(&m2);
        if let (Some(&f1), Some(&f2)) = (s1.first(), s2.first()) {
            prop_assert!(s1.iter().all(|s| s.signum() == f1.signum()));
            prop_assert!(s2.iter().all(|s| s.signum() == f2.signum()));
            prop_assert!(f1.signum() != f2.signum());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn pipeline_is_deterministic_and_honours_sigma(seed in 0u64..100, sigma in 0.25..0.5f64) {
        let cloud = make_sphere_cloud(90, seed).unwrap();
        let cfg = ReconstructionConfig {
            sigma: Some(sigma),
            grid_resolution: [16, 16, 16],
            ..Default::default()
        };
        let first = reconstruct(&cloud, &cfg).unwrap();
        let second = reconstruct(&cloud, &cfg).unwrap();
        prop_assert_eq!(first.sigma, sigma);
        prop_assert_eq!(first.sigma_source, SigmaSource::Explicit);
        prop_assert_eq!(first.interpolant.as_ref().unwrap().kernel().sigma(), sigma);
        prop_assert_eq!(first.mask_epsilon, 2.0 * sigma);
        prop_assert_eq!(&first.mesh, &second.mesh);
        prop_assert_eq!(&first.field, &second.field);
    }
}
