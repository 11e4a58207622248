//! Machine-readable run report.
//!
//! Every key is serialized on every run; keys belonging to stages that did
//! not run carry `null`.

use serde::{Deserialize, Serialize};

use crate::density::DensityReport;
use crate::kernel::InterpolantSummary;
use crate::pipeline::{
    DecompositionSummary, InterpolationAudit, MeshStats, ReconstructionConfig, RunArtifacts, SigmaSource,
    SphereFit,
};
use crate::solver::{SolveReport, SolverConfig};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    NotConverged,
    EmptyMesh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub sigma_requested: Option<f64>,
    pub delta_requested: Option<f64>,
    pub delta_fraction: f64,
    pub cutoff_sigmas: f64,
    pub mask_epsilon_requested: Option<f64>,
    pub grid_resolution: [usize; 3],
    pub margin_fraction: f64,
    pub bounds: Option<[f64; 6]>,
    pub precondition: bool,
    pub solver: SolverConfig,
    pub threads: usize,
}

impl ConfigSummary {
    pub fn new(cfg: &ReconstructionConfig, threads: usize) -> Self {
        ConfigSummary {
            sigma_requested: cfg.sigma,
            delta_requested: cfg.offset.explicit_delta,
            delta_fraction: cfg.offset.delta_fraction,
            cutoff_sigmas: cfg.cutoff_sigmas,
            mask_epsilon_requested: cfg.mask_epsilon,
            grid_resolution: cfg.grid_resolution,
            margin_fraction: cfg.margin_fraction,
            bounds: cfg.bounds.map(|b| {
                let (lo, hi) = (b.min, b.max);
                [lo.x, lo.y, lo.z, hi.x, hi.y, hi.z]
            }),
            precondition: cfg.precondition,
            solver: cfg.solver,
            threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub resolution: [usize; 3],
    pub bbox: [f64; 6],
    pub mask_epsilon: f64,
    pub active_nodes: usize,
    pub masked_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub status: RunStatus,
    pub input_points: usize,
    pub config: ConfigSummary,
    pub density: DensityReport,
    pub sigma: f64,
    pub sigma_source: SigmaSource,
    pub delta: f64,
    pub mask_epsilon: f64,
    pub interpolant: Option<InterpolantSummary>,
    pub decomposition: Option<DecompositionSummary>,
    pub solve: Option<SolveReport>,
    pub audit: Option<InterpolationAudit>,
    pub cloud_sphere_fit: Option<SphereFit>,
    pub grid: Option<GridSummary>,
    pub mesh: Option<MeshStats>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(art: &RunArtifacts, cfg: &ReconstructionConfig, input_points: usize, threads: usize) -> Self {
        let status = if !art.converged() {
            RunStatus::NotConverged
        } else if !art.succeeded() {
            RunStatus::EmptyMesh
        } else {
            RunStatus::Ok
        };
        RunReport {
            version: REPORT_VERSION,
            status,
            input_points,
            config: ConfigSummary::new(cfg, threads),
            density: art.density,
            sigma: art.sigma,
            sigma_source: art.sigma_source,
            delta: art.delta,
            mask_epsilon: art.mask_epsilon,
            interpolant: art.interpolant_summary(),
            decomposition: art.decomposition,
            solve: art.solve.clone(),
            audit: art.audit,
            cloud_sphere_fit: art.cloud_sphere_fit,
            grid: art.grid.as_ref().map(|g| {
                let (lo, hi) = (g.bbox().min, g.bbox().max);
                GridSummary {
                    resolution: g.resolution(),
                    bbox: [lo.x, lo.y, lo.z, hi.x, hi.y, hi.z],
                    mask_epsilon: g.mask_epsilon(),
                    active_nodes: g.active_count(),
                    masked_nodes: g.masked_count(),
                }
            }),
            mesh: art.mesh_stats.clone(),
            warnings: art.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Flat `key: value` rendering of a density report.
pub fn density_text(d: &DensityReport) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
    format!(
        "separation_q: {:.6}\nfill_h: {}\nh_max: {:.6}\nsigma_from_q: {:.6}\nsigma_from_h: {}\nsigma_from_hmax: {:.6}\nrecommended_sigma: {:.6}\n",
        d.separation_q,
        opt(d.fill_h),
        d.h_max,
        d.sigma_from_q,
        opt(d.sigma_from_h),
        d.sigma_from_hmax,
        d.recommended_sigma()
    )
}
