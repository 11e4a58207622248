//! Restricted additive Schwarz preconditioning and restarted GMRES.
//!
//! The site set is cut into boxes by recursive median bisection. Each box is
//! a subdomain core; its extended set adds every site within the overlap
//! radius of the core's box. Applying the preconditioner solves one dense
//! local system per subdomain and keeps only the core entries of each local
//! solution, so the cores' disjointness makes the write-back race-free.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Point3, SpatialIndex};
use crate::kernel::{GaussianKernel, RbfOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rel_tolerance: f64,
    /// Cap on the total number of Arnoldi steps across all restart cycles.
    pub max_outer_iterations: usize,
    pub restart_length: usize,
    pub subdomain_target_size: usize,
    pub overlap_radius_in_sigmas: f64,
    /// Run exactly this many iterations regardless of the residual
    /// (benchmark mode). Convergence is still reported honestly.
    pub fixed_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tolerance: 1e-6,
            max_outer_iterations: 500,
            restart_length: 30,
            subdomain_target_size: 1000,
            overlap_radius_in_sigmas: 3.0,
            fixed_iterations: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::invalid("rel_tolerance must be positive"));
        }
        if self.max_outer_iterations == 0 || self.restart_length == 0 {
            return Err(Error::invalid("iteration limits must be positive"));
        }
        if self.restart_length > self.max_outer_iterations {
            return Err(Error::invalid(
                "restart_length must not exceed max_outer_iterations",
            ));
        }
        if self.subdomain_target_size == 0 {
            return Err(Error::invalid("subdomain_target_size must be positive"));
        }
        if !(self.overlap_radius_in_sigmas >= 0.0) {
            return Err(Error::invalid("overlap_radius_in_sigmas must be non-negative"));
        }
        if self.fixed_iterations == Some(0) {
            return Err(Error::invalid("fixed_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
    pub restarts: usize,
    pub breakdown: bool,
    /// Relative residual estimate after each Arnoldi step.
    pub residual_history: Vec<f64>,
}

/// One overlapping subdomain with its factorized local matrix.
#[derive(Clone)]
pub struct Subdomain {
    core_ids: Vec<usize>,
    extended_ids: Vec<usize>,
    /// Position of each core id inside `extended_ids`.
    core_slots: Vec<usize>,
    core_box: BoundingBox,
    factor: Cholesky<f64, Dyn>,
    /// Diagonal shift that had to be added for the factorization to succeed.
    shift: f64,
}

impl std::fmt::Debug for Subdomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Subdomain")
            .field("core", &self.core_ids.len())
            .field("extended", &self.extended_ids.len())
            .field("shift", &self.shift)
            .finish()
    }
}

impl Subdomain {
    pub fn core_ids(&self) -> &[usize] {
        &self.core_ids
    }

    pub fn extended_ids(&self) -> &[usize] {
        &self.extended_ids
    }

    pub fn core_box(&self) -> &BoundingBox {
        &self.core_box
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn solve_local(&self, r: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_iterator(
            self.extended_ids.len(),
            self.extended_ids.iter().map(|&i| r[i]),
        );
        let x = self.factor.solve(&rhs);
        self.core_slots.iter().map(|&s| x[s]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    subdomains: Vec<Subdomain>,
    overlap_radius: f64,
    site_count: usize,
}

impl Decomposition {
    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn overlap_radius(&self) -> f64 {
        self.overlap_radius
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    /// Largest diagonal shift any local factorization needed.
    pub fn max_shift(&self) -> f64 {
        self.subdomains.iter().map(|s| s.shift).fold(0.0, f64::max)
    }
}

/// Splits `ids` by recursive median bisection along the longest axis of
/// their bounding box until every part holds at most `target` ids.
fn bisect(sites: &[Point3], mut ids: Vec<usize>, target: usize, out: &mut Vec<Vec<usize>>) {
    if ids.len() <= target {
        out.push(ids);
        return;
    }
    let pts: Vec<Point3> = ids.iter().map(|&i| sites[i]).collect();
    let bbox = BoundingBox::from_points(&pts).expect("non-empty");
    let ext = bbox.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    ids.sort_by(|&a, &b| {
        sites[a]
            .axis(axis)
            .total_cmp(&sites[b].axis(axis))
            .then(a.cmp(&b))
    });
    let right = ids.split_off(ids.len() / 2);
    bisect(sites, ids, target, out);
    bisect(sites, right, target, out);
}

fn local_matrix(sites: &[Point3], ids: &[usize], kernel: &GaussianKernel) -> DMatrix<f64> {
    let m = ids.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for c in 0..m {
        let xc = sites[ids[c]];
        for r in c..m {
            let v = kernel.value_sq(sites[ids[r]].dist2(&xc));
            a[(r, c)] = v;
            a[(c, r)] = v;
        }
    }
    a
}

/// Cholesky of the local matrix; on failure retries with a growing diagonal
/// shift (ill-conditioned wide kernels lose definiteness in floating point).
fn factorize(a: DMatrix<f64>, subdomain: usize) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(f) = Cholesky::new(a.clone()) {
        return Ok((f, 0.0));
    }
    let scale = a.diagonal().max();
    let mut shift = scale * 1e-14;
    while shift <= scale * 1e-2 {
        let mut shifted = a.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += shift;
        }
        if let Some(f) = Cholesky::new(shifted) {
            return Ok((f, shift));
        }
        shift *= 10.0;
    }
    Err(Error::Factorization { subdomain })
}

pub fn decompose(sites: &[Point3], kernel: &GaussianKernel, cfg: &SolverConfig) -> Result<Decomposition> {
    if sites.is_empty() {
        return Err(Error::Empty("decomposition sites"));
    }
    cfg.validate()?;
    let overlap_radius = cfg.overlap_radius_in_sigmas * kernel.sigma();

    let mut cores = Vec::new();
    bisect(sites, (0..sites.len()).collect(), cfg.subdomain_target_size, &mut cores);

    let index = if cores.len() > 1 {
        let diag = BoundingBox::from_points(sites)?.diagonal();
        let cell = if overlap_radius > 0.0 {
            overlap_radius
        } else {
            diag.max(1.0)
        };
        Some(SpatialIndex::build(sites, cell)?)
    } else {
        None
    };

    let subdomains = cores
        .into_par_iter()
        .enumerate()
        .map(|(k, mut core)| {
            core.sort_unstable();
            let pts: Vec<Point3> = core.iter().map(|&i| sites[i]).collect();
            let core_box = BoundingBox::from_points(&pts)?;
            let extended = match &index {
                None => core.clone(),
                Some(index) => {
                    let reach = 0.5 * core_box.diagonal() + overlap_radius;
                    let mut ext = Vec::new();
                    index.for_each_within(&core_box.center(), reach, |id, _| {
                        if core_box.distance_to(&sites[id]) <= overlap_radius {
                            ext.push(id);
                        }
                    });
                    ext.sort_unstable();
                    ext
                }
            };
            let core_slots = core
                .iter()
                .map(|id| extended.binary_search(id).expect("core inside extended set"))
                .collect();
            let (factor, shift) = factorize(local_matrix(sites, &extended, kernel), k)?;
            Ok(Subdomain {
                core_ids: core,
                extended_ids: extended,
                core_slots,
                core_box,
                factor,
                shift,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Decomposition {
        subdomains,
        overlap_radius,
        site_count: sites.len(),
    })
}

/// `z = M⁻¹ r`: independent local solves, core entries written back.
pub fn apply_rasm(dec: &Decomposition, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != dec.site_count {
        return Err(Error::DimensionMismatch {
            expected: dec.site_count,
            got: r.len(),
        });
    }
    let locals: Vec<Vec<f64>> = dec
        .subdomains
        .par_iter()
        .map(|s| s.solve_local(r))
        .collect();
    let mut z = vec![0.0; r.len()];
    for (s, vals) in dec.subdomains.iter().zip(locals) {
        for (&id, v) in s.core_ids.iter().zip(vals) {
            z[id] = v;
        }
    }
    Ok(z)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if a == 0.0 {
        (0.0, 1.0)
    } else {
        let h = a.hypot(b);
        (a / h, b / h)
    }
}

/// Right-preconditioned restarted GMRES for `A c = b`, starting from zero.
/// With `precond = None` the plain (unpreconditioned) iteration runs.
pub fn gmres_solve(
    op: &RbfOperator,
    precond: Option<&Decomposition>,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let n = op.len();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if let Some(dec) = precond {
        if dec.site_count != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: dec.site_count,
            });
        }
    }
    let start = Instant::now();
    let precondition = |v: &[f64]| -> Result<Vec<f64>> {
        match precond {
            Some(dec) => apply_rasm(dec, v),
            None => Ok(v.to_vec()),
        }
    };

    let budget = cfg.fixed_iterations.unwrap_or(cfg.max_outer_iterations);
    let stop_on_tolerance = cfg.fixed_iterations.is_none();
    let m = cfg.restart_length;

    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    let mut report = SolveReport {
        iterations: 0,
        final_relative_residual: 0.0,
        converged: true,
        wall_time: 0.0,
        restarts: 0,
        breakdown: false,
        residual_history: Vec::new(),
    };
    if b_norm == 0.0 {
        report.wall_time = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }

    let mut r = b.to_vec();
    let mut beta = b_norm;
    let mut w = vec![0.0; n];

    loop {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // column-major Hessenberg, column j has j + 2 entries
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut steps = 0;
        let mut cycle_done = false;

        while steps < m && report.iterations < budget {
            let j = steps;
            let z = precondition(&basis[j])?;
            op.apply_into(&z, &mut w)?;
            let w_norm0 = norm(&w);
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                axpy(-hij, v, &mut w);
            }
            let w_norm = norm(&w);
            col[j + 1] = w_norm;
            for i in 0..j {
                let (c, s) = (cs[i], sn[i]);
                let t = c * col[i] + s * col[i + 1];
                col[i + 1] = -s * col[i] + c * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            steps += 1;
            report.iterations += 1;
            let estimate = g[j + 1].abs() / b_norm;
            report.residual_history.push(estimate);

            if w_norm <= 1e-14 * w_norm0.max(f64::MIN_POSITIVE) {
                report.breakdown = true;
                cycle_done = true;
                break;
            }
            basis.push(w.iter().map(|v| v / w_norm).collect());
            if stop_on_tolerance && estimate <= cfg.rel_tolerance {
                break;
            }
        }

        // back substitution for the cycle's least-squares coefficients
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for (k, yk) in y.iter().enumerate().skip(i + 1) {
                acc -= h[k][i] * yk;
            }
            y[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut update);
        }
        let dx = precondition(&update)?;
        axpy(1.0, &dx, &mut x);

        op.apply_into(&x, &mut w)?;
        for ((ri, bi), ai) in r.iter_mut().zip(b).zip(&w) {
            *ri = bi - ai;
        }
        beta = norm(&r);
        let rel = beta / b_norm;
        report.final_relative_residual = rel;
        report.converged = rel <= cfg.rel_tolerance;

        let out_of_budget = report.iterations >= budget;
        if (report.converged && stop_on_tolerance) || out_of_budget || cycle_done || beta == 0.0 {
            break;
        }
        report.restarts += 1;
    }

    report.wall_time = start.elapsed().as_secs_f64();
    Ok((x, report))
}
