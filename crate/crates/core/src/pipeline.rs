//! End-to-end reconstruction: augment the samples, pick the Gaussian width,
//! solve for the coefficients, sample the field near the data, and extract
//! the zero level set.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::dataset::{extend, OffsetConfig};
use crate::density::{recommend_sigma, DensityReport};
use crate::error::{Error, Result, Stage};
use crate::geometry::{BoundingBox, Point3, PointCloud};
use crate::kernel::{GaussianKernel, Interpolant, InterpolantSummary, RbfOperator, DEFAULT_CUTOFF_SIGMAS};
use crate::solver::{decompose, gmres_solve, SolveReport, SolverConfig};
use crate::surface::{
    build_grid, build_grid_in, extract_isosurface, sample_field, EvalGrid, ScalarField, SurfaceMesh,
    DEFAULT_MARGIN_FRACTION,
};

/// Default mask width in units of σ.
pub const DEFAULT_MASK_SIGMAS: f64 = 2.0;

/// Interpolation-condition audit slack: max error ≤ this × tol × ‖b‖∞.
pub const AUDIT_FACTOR: f64 = 10.0;

/// A reconstruction of a sphere-like cloud whose vertex radial RMS exceeds
/// this fraction of the fitted radius gets a warning.
pub const RADIAL_WARNING_FRACTION: f64 = 1e-3;

/// Clouds whose own sphere-fit RMS residual is below this fraction of the
/// fitted radius count as sphere-like.
const SPHERE_LIKE_FRACTION: f64 = 1e-3;

/// Local diagonal shifts above this fraction of the kernel peak are reported.
const SHIFT_WARNING_FRACTION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    pub offset: OffsetConfig,
    /// Gaussian width; `None` uses the density recommendation.
    pub sigma: Option<f64>,
    pub cutoff_sigmas: f64,
    pub solver: SolverConfig,
    /// Apply the restricted Schwarz preconditioner.
    pub precondition: bool,
    pub grid_resolution: [usize; 3],
    /// Mask width; `None` means `DEFAULT_MASK_SIGMAS · σ`.
    pub mask_epsilon: Option<f64>,
    pub margin_fraction: f64,
    /// Evaluation box override; defaults to the padded data box.
    pub bounds: Option<BoundingBox>,
    /// Dense sample of the surface the data came from. When present, σ is
    /// derived from the fill distance against it.
    pub reference_domain: Option<Vec<Point3>>,
    /// Seed for the synthetic generators that feed this config.
    pub seed: u64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            offset: OffsetConfig::default(),
            sigma: None,
            cutoff_sigmas: DEFAULT_CUTOFF_SIGMAS,
            solver: SolverConfig::default(),
            precondition: true,
            grid_resolution: [64, 64, 64],
            mask_epsilon: None,
            margin_fraction: DEFAULT_MARGIN_FRACTION,
            bounds: None,
            reference_domain: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    Explicit,
    FillDistance,
    HMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub subdomains: usize,
    pub max_extended: usize,
    pub overlap_radius: f64,
    pub max_shift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationAudit {
    pub max_error: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereFit {
    pub center: Point3,
    pub radius: f64,
    /// RMS of `|p - center| - radius` over the fitted points.
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub triangles: usize,
    pub components: usize,
    pub active_nodes: usize,
    pub masked_nodes: usize,
    /// Largest |P| over mesh vertices.
    pub vertex_field_max_abs: f64,
    /// RMS of the vertices' radial deviation from the sphere fitted to the
    /// input cloud.
    pub radial_rms: Option<f64>,
    pub radial_max: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub density: DensityReport,
    pub sigma: f64,
    pub sigma_source: SigmaSource,
    pub delta: f64,
    pub mask_epsilon: f64,
    pub interpolant: Option<Interpolant>,
    pub decomposition: Option<DecompositionSummary>,
    pub solve: Option<SolveReport>,
    pub audit: Option<InterpolationAudit>,
    pub cloud_sphere_fit: Option<SphereFit>,
    pub grid: Option<EvalGrid>,
    pub field: Option<ScalarField>,
    pub mesh: Option<SurfaceMesh>,
    pub mesh_stats: Option<MeshStats>,
    pub warnings: Vec<String>,
}

impl RunArtifacts {
    pub fn converged(&self) -> bool {
        self.solve.as_ref().is_some_and(|s| s.converged)
    }

    /// A usable surface was produced.
    pub fn succeeded(&self) -> bool {
        self.mesh.as_ref().is_some_and(|m| !m.is_empty())
    }

    pub fn interpolant_summary(&self) -> Option<InterpolantSummary> {
        self.interpolant.as_ref().map(Interpolant::summary)
    }
}

/// Algebraic least-squares sphere through `points`.
pub fn fit_sphere(points: &[Point3]) -> Option<SphereFit> {
    if points.len() < 4 {
        return None;
    }
    // |p|² = 2 c·p + k with k = r² - |c|²
    let mut ata = Matrix4::<f64>::zeros();
    let mut atb = Vector4::<f64>::zeros();
    for p in points {
        let row = Vector4::new(2.0 * p.x, 2.0 * p.y, 2.0 * p.z, 1.0);
        ata += row * row.transpose();
        atb += row * p.dot(p);
    }
    let sol = ata.lu().solve(&atb)?;
    let center = Point3::new(sol[0], sol[1], sol[2]);
    let r2 = sol[3] + center.dot(&center);
    if !(r2 > 0.0) {
        return None;
    }
    let radius = r2.sqrt();
    let rms = (points
        .iter()
        .map(|p| (p.dist(&center) - radius).powi(2))
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    Some(SphereFit { center, radius, rms })
}

/// Radial RMS and max deviation of `points` from a sphere.
pub fn radial_errors(points: &[Point3], center: &Point3, radius: f64) -> (f64, f64) {
    if points.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for p in points {
        let e = (p.dist(center) - radius).abs();
        sum += e * e;
        max = max.max(e);
    }
    ((sum / points.len() as f64).sqrt(), max)
}

pub fn reconstruct(cloud: &PointCloud, cfg: &ReconstructionConfig) -> Result<RunArtifacts> {
    if !(cfg.cutoff_sigmas > 0.0) {
        return Err(Error::invalid("cutoff_sigmas must be positive"));
    }
    cfg.solver.validate()?;

    let ext = extend(cloud, &cfg.offset).map_err(|e| e.at(Stage::Extend))?;
    let density = recommend_sigma(cloud.points(), cfg.reference_domain.as_deref())
        .map_err(|e| e.at(Stage::Density))?;
    let (sigma, sigma_source) = match (cfg.sigma, density.sigma_from_h) {
        (Some(s), _) => (s, SigmaSource::Explicit),
        (None, Some(s)) => (s, SigmaSource::FillDistance),
        (None, None) => (density.sigma_from_hmax, SigmaSource::HMax),
    };
    let kernel = GaussianKernel::with_cutoff(sigma, cfg.cutoff_sigmas * sigma)
        .map_err(|e| e.at(Stage::Operator))?;
    let mask_epsilon = cfg.mask_epsilon.unwrap_or(DEFAULT_MASK_SIGMAS * sigma);

    let mut art = RunArtifacts {
        density,
        sigma,
        sigma_source,
        delta: ext.delta_used(),
        mask_epsilon,
        interpolant: None,
        decomposition: None,
        solve: None,
        audit: None,
        cloud_sphere_fit: fit_sphere(cloud.points()),
        grid: None,
        field: None,
        mesh: None,
        mesh_stats: None,
        warnings: Vec::new(),
    };

    let (sites, values) = ext.into_parts();
    let op = RbfOperator::new(kernel, sites.clone()).map_err(|e| e.at(Stage::Operator))?;
    let dec = if cfg.precondition {
        let dec = decompose(&sites, &kernel, &cfg.solver).map_err(|e| e.at(Stage::Decompose))?;
        art.decomposition = Some(DecompositionSummary {
            subdomains: dec.subdomains().len(),
            max_extended: dec
                .subdomains()
                .iter()
                .map(|s| s.extended_ids().len())
                .max()
                .unwrap_or(0),
            overlap_radius: dec.overlap_radius(),
            max_shift: dec.max_shift(),
        });
        if dec.max_shift() > SHIFT_WARNING_FRACTION * kernel.peak() {
            art.warnings.push(format!(
                "local matrices were not numerically positive definite; shifted by up to {:.3e}",
                dec.max_shift()
            ));
        }
        Some(dec)
    } else {
        None
    };

    let (coeffs, report) =
        gmres_solve(&op, dec.as_ref(), &values, &cfg.solver).map_err(|e| e.at(Stage::Solve))?;
    let converged = report.converged;
    art.solve = Some(report);
    let interp = Interpolant::new(kernel, sites, coeffs).map_err(|e| e.at(Stage::Solve))?;

    let b_inf = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let fitted = interp.evaluate(interp.centers());
    let max_error = fitted
        .iter()
        .zip(&values)
        .fold(0.0f64, |m, (f, y)| m.max((f - y).abs()));
    let bound = AUDIT_FACTOR * cfg.solver.rel_tolerance * b_inf;
    art.audit = Some(InterpolationAudit {
        max_error,
        bound,
        passed: max_error <= bound,
    });

    if !converged {
        let rel = art.solve.as_ref().map_or(f64::NAN, |s| s.final_relative_residual);
        art.warnings.push(format!(
            "solver did not converge (relative residual {rel:.3e}); no surface extracted"
        ));
        art.interpolant = Some(interp);
        return Ok(art);
    }
    if max_error > bound {
        art.warnings.push(format!(
            "interpolation conditions violated: max error {max_error:.3e} exceeds {bound:.3e}"
        ));
    }

    let grid = match cfg.bounds {
        Some(b) => build_grid_in(cloud.points(), b, cfg.grid_resolution, mask_epsilon),
        None => build_grid(cloud.points(), cfg.grid_resolution, mask_epsilon, cfg.margin_fraction),
    }
    .map_err(|e| e.at(Stage::Grid))?;
    let field = sample_field(&interp, &grid);
    let mesh = extract_isosurface(&field, &grid).map_err(|e| e.at(Stage::Extract))?;

    let vertex_vals = interp.evaluate(&mesh.vertices);
    let vertex_field_max_abs = vertex_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (radial_rms, radial_max) = match art.cloud_sphere_fit {
        Some(fit) if !mesh.vertices.is_empty() => {
            let (rms, max) = radial_errors(&mesh.vertices, &fit.center, fit.radius);
            (Some(rms), Some(max))
        }
        _ => (None, None),
    };
    if mesh.is_empty() {
        art.warnings.push(
            "no zero crossing inside the masked grid; sigma or epsilon is likely unsuitable".into(),
        );
    }
    if let (Some(fit), Some(rms)) = (art.cloud_sphere_fit, radial_rms) {
        if fit.rms <= SPHERE_LIKE_FRACTION * fit.radius && rms > RADIAL_WARNING_FRACTION * fit.radius {
            art.warnings.push(format!(
                "radial RMS {rms:.2e} exceeds {:.1}% of the fitted radius {:.4}; sigma is likely too small",
                RADIAL_WARNING_FRACTION * 100.0,
                fit.radius
            ));
        }
    }
    art.mesh_stats = Some(MeshStats {
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        components: mesh.connected_components(),
        active_nodes: grid.active_count(),
        masked_nodes: grid.masked_count(),
        vertex_field_max_abs,
        radial_rms,
        radial_max,
    });
    art.interpolant = Some(interp);
    art.grid = Some(grid);
    art.field = Some(field);
    art.mesh = Some(mesh);
    Ok(art)
}
