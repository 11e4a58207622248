//! Thread-scaling benchmark for the two expensive stages: solving for the
//! coefficients and evaluating the interpolant.
//!
//! Each cell runs inside a dedicated rayon pool of the requested size, so
//! the thread count is exact regardless of the global pool.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{extend, OffsetConfig};
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Point3};
use crate::kernel::{GaussianKernel, Interpolant, RbfOperator, DEFAULT_CUTOFF_SIGMAS};
use crate::solver::{decompose, gmres_solve, SolverConfig};
use crate::synthetic::make_sphere_cloud;

pub const CSV_HEADER: &str = "stage,n,m,threads,preconditioned,wall_seconds,iterations,error";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Site counts (rows of the interpolation system).
    pub sizes: Vec<usize>,
    /// Evaluation point counts.
    pub evals: Vec<usize>,
    pub threads: Vec<usize>,
    pub sigma: f64,
    pub cutoff_sigmas: f64,
    /// Exact GMRES step count per solve; `None` solves to tolerance.
    pub fixed_iterations: Option<usize>,
    /// Preconditioner settings to run for the solve stage.
    pub preconditioned: Vec<bool>,
    /// Each cell is timed this many times and the fastest run is kept.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![1323, 4686, 15625],
            evals: vec![15625, 125000],
            threads: vec![1, 2, 4],
            sigma: 0.157,
            cutoff_sigmas: DEFAULT_CUTOFF_SIGMAS,
            fixed_iterations: Some(50),
            preconditioned: vec![false, true],
            repeats: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchStage {
    Solve,
    Evaluate,
}

impl std::fmt::Display for BenchStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BenchStage::Solve => "solve",
            BenchStage::Evaluate => "evaluate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub stage: BenchStage,
    pub n: usize,
    pub m: Option<usize>,
    pub threads: usize,
    pub preconditioned: Option<bool>,
    pub wall_seconds: f64,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

impl BenchRecord {
    pub fn csv_line(&self) -> String {
        let opt = |v: Option<usize>| v.map_or_else(String::new, |x| x.to_string());
        format!(
            "{},{},{},{},{},{},{},{}",
            self.stage,
            self.n,
            opt(self.m),
            self.threads,
            self.preconditioned.map_or_else(String::new, |p| p.to_string()),
            if self.error.is_some() {
                String::new()
            } else {
                format!("{:.6}", self.wall_seconds)
            },
            opt(self.iterations),
            self.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        )
    }
}

pub fn write_csv<W: Write>(mut w: W, records: &[BenchRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

/// `n` interpolation sites with their target values: the extended set of a
/// scattered unit-sphere cloud of `ceil(n / 3)` points, truncated to `n`.
pub fn bench_sites(n: usize, seed: u64) -> Result<(Vec<Point3>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("site count must be positive"));
    }
    let cloud = make_sphere_cloud(n.div_ceil(3).max(4), seed)?;
    let (mut sites, mut values) = extend(&cloud, &OffsetConfig::default())?.into_parts();
    sites.truncate(n);
    values.truncate(n);
    Ok((sites, values))
}

/// `m` evaluation points in `bbox`: a regular lattice when `m` is a perfect
/// cube, seeded uniform points otherwise.
pub fn bench_queries(m: usize, bbox: &BoundingBox, seed: u64) -> Vec<Point3> {
    let k = (m as f64).cbrt().round() as usize;
    let e = bbox.extent();
    if k * k * k == m && k >= 2 {
        let step = |a: f64| a / (k - 1) as f64;
        let (sx, sy, sz) = (step(e.x), step(e.y), step(e.z));
        let mut out = Vec::with_capacity(m);
        for kk in 0..k {
            for j in 0..k {
                for i in 0..k {
                    out.push(
                        bbox.min + Point3::new(i as f64 * sx, j as f64 * sy, kk as f64 * sz),
                    );
                }
            }
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| {
            bbox.min
                + Point3::new(
                    rng.gen::<f64>() * e.x,
                    rng.gen::<f64>() * e.y,
                    rng.gen::<f64>() * e.z,
                )
        })
        .collect()
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        return Err(Error::invalid("thread count must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Wall time and iteration count of one solve (decomposition included when
/// preconditioned) on `threads` workers.
pub fn time_solve(
    sites: &[Point3],
    values: &[f64],
    kernel: GaussianKernel,
    cfg: &SolverConfig,
    precondition: bool,
    threads: usize,
) -> Result<(f64, usize)> {
    let op = RbfOperator::new(kernel, sites.to_vec())?;
    with_threads(threads, || {
        let start = Instant::now();
        let dec = if precondition {
            Some(decompose(sites, &kernel, cfg)?)
        } else {
            None
        };
        let (_, report) = gmres_solve(&op, dec.as_ref(), values, cfg)?;
        Ok((start.elapsed().as_secs_f64(), report.iterations))
    })
}

/// Wall time of evaluating `interp` at every query on `threads` workers.
pub fn time_evaluate(interp: &Interpolant, queries: &[Point3], threads: usize) -> Result<f64> {
    with_threads(threads, || {
        let start = Instant::now();
        let vals = interp.evaluate(queries);
        let elapsed = start.elapsed().as_secs_f64();
        std::hint::black_box(vals);
        Ok(elapsed)
    })
}

/// Seeded coefficients in `[-1, 1]` for evaluation timing.
pub fn random_coefficients(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn guarded<T>(f: impl FnOnce() -> Result<T>) -> std::result::Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into())),
    }
}

fn best_of<T>(repeats: usize, mut f: impl FnMut() -> Result<(f64, T)>) -> Result<(f64, T)> {
    let mut best = f()?;
    for _ in 1..repeats {
        let r = f()?;
        if r.0 < best.0 {
            best = r;
        }
    }
    Ok(best)
}

/// Runs every (stage, N, M, threads) cell. A failing cell yields a record
/// carrying the error and the sweep moves on. `on_record` sees each record
/// as soon as it is produced.
pub fn run(cfg: &BenchConfig, mut on_record: impl FnMut(&BenchRecord)) -> Result<Vec<BenchRecord>> {
    if cfg.sizes.is_empty() || cfg.threads.is_empty() {
        return Err(Error::invalid("bench needs at least one size and one thread count"));
    }
    let kernel = GaussianKernel::with_cutoff(cfg.sigma, cfg.cutoff_sigmas * cfg.sigma)?;
    let solver = SolverConfig {
        fixed_iterations: cfg.fixed_iterations,
        ..SolverConfig::default()
    };
    let repeats = cfg.repeats.max(1);
    let mut records = Vec::new();
    let mut push = |r: BenchRecord, records: &mut Vec<BenchRecord>| {
        on_record(&r);
        records.push(r);
    };

    for &n in &cfg.sizes {
        let problem = guarded(|| bench_sites(n, cfg.seed));
        for &pre in &cfg.preconditioned {
            for &t in &cfg.threads {
                let res = problem.clone().and_then(|(sites, values)| {
                    guarded(|| best_of(repeats, || time_solve(&sites, &values, kernel, &solver, pre, t)))
                });
                push(
                    BenchRecord {
                        stage: BenchStage::Solve,
                        n,
                        m: None,
                        threads: t,
                        preconditioned: Some(pre),
                        wall_seconds: res.as_ref().map_or(f64::NAN, |r| r.0),
                        iterations: res.as_ref().ok().map(|r| r.1),
                        error: res.err(),
                    },
                    &mut records,
                );
            }
        }
        let interp = problem.and_then(|(sites, _)| {
            guarded(|| Interpolant::new(kernel, sites.clone(), random_coefficients(sites.len(), cfg.seed)))
        });
        for &m in &cfg.evals {
            let queries = interp.as_ref().map_err(Clone::clone).and_then(|it| {
                guarded(|| {
                    let bbox = BoundingBox::from_points(it.centers())?;
                    Ok(bench_queries(m, &bbox.padded(0.05 * bbox.diagonal()), cfg.seed))
                })
            });
            for &t in &cfg.threads {
                let res = match (&interp, &queries) {
                    (Ok(it), Ok(q)) => guarded(|| best_of(repeats, || Ok((time_evaluate(it, q, t)?, ())))),
                    (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                };
                push(
                    BenchRecord {
                        stage: BenchStage::Evaluate,
                        n,
                        m: Some(m),
                        threads: t,
                        preconditioned: None,
                        wall_seconds: res.as_ref().map_or(f64::NAN, |r| r.0),
                        iterations: None,
                        error: res.err(),
                    },
                    &mut records,
                );
            }
        }
    }
    Ok(records)
}

/// Speedup of the `threads` record over the single-thread record of the
/// same cell, when both exist and succeeded.
pub fn speedup(
    records: &[BenchRecord],
    stage: BenchStage,
    n: usize,
    m: Option<usize>,
    preconditioned: Option<bool>,
    threads: usize,
) -> Option<f64> {
    let find = |t: usize| {
        records
            .iter()
            .find(|r| {
                r.stage == stage
                    && r.n == n
                    && r.m == m
                    && r.preconditioned == preconditioned
                    && r.threads == t
                    && r.error.is_none()
            })
            .map(|r| r.wall_seconds)
    };
    Some(find(1)? / find(threads)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sites_are_truncated_extension() {
        let (s, v) = bench_sites(100, 1).unwrap();
        assert_eq!(s.len(), 100);
        assert_eq!(v.len(), 100);
        assert!(v[..34].iter().all(|&y| y == 0.0));
        assert!(v[34..68].iter().all(|&y| y == 1.0));
        assert!(bench_sites(0, 1).is_err());
    }

    #[test]
    fn queries_lattice_and_random() {
        let b = BoundingBox::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 2.0, 3.0)).unwrap();
        let q = bench_queries(27, &b, 0);
        assert_eq!(q.len(), 27);
        assert_eq!(q[0], b.min);
        assert_eq!(q[26], b.max);
        let r = bench_queries(10, &b, 0);
        assert_eq!(r.len(), 10);
        assert!(r.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn small_sweep_produces_all_cells() {
        let cfg = BenchConfig {
            sizes: vec![90],
            evals: vec![64],
            threads: vec![1, 2],
            fixed_iterations: Some(5),
            ..Default::default()
        };
        let mut seen = 0;
        let recs = run(&cfg, |_| seen += 1).unwrap();
        assert_eq!(recs.len(), 2 * 2 + 2);
        assert_eq!(seen, recs.len());
        for r in &recs {
            assert!(r.error.is_none(), "{r:?}");
            assert!(r.wall_seconds > 0.0);
            match r.preconditioned {
                Some(false) => assert_eq!(r.iterations, Some(5)),
                Some(true) => assert!(r.iterations.unwrap() <= 5),
                None => assert_eq!(r.iterations, None),
            }
        }
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == 8));
        assert!(speedup(&recs, BenchStage::Evaluate, 90, Some(64), None, 2).is_some());
    }

    #[test]
    fn failing_cell_is_recorded() {
        let cfg = BenchConfig {
            sizes: vec![30],
            evals: vec![8],
            threads: vec![0],
            preconditioned: vec![false],
            fixed_iterations: Some(2),
            ..Default::default()
        };
        let recs = run(&cfg, |_| {}).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.error.is_some()));
        assert!(recs[0].csv_line().ends_with("thread count must be positive"));
    }
}
