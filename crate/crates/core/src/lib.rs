//! Implicit surface reconstruction from oriented point clouds.
//!
//! The zero level set of a Gaussian radial-basis interpolant is fitted to
//! the samples and to auxiliary points offset along the normals. The
//! interpolation system is solved matrix-free with restarted GMRES under a
//! restricted additive Schwarz preconditioner, and the surface is extracted
//! with marching cubes on a grid masked to a thin shell around the data.
//!
//! ```no_run
//! use gaussurf::{pipeline, synthetic};
//!
//! let cloud = synthetic::make_sphere_cloud(382, 7).unwrap();
//! let run = pipeline::reconstruct(&cloud, &Default::default()).unwrap();
//! println!("sigma = {}, triangles = {}", run.sigma, run.mesh.unwrap().triangles.len());
//! ```

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod density;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod pipeline;
pub mod report;
pub mod solver;
pub mod surface;
pub mod synthetic;

pub use error::{Error, Result, Stage};
pub use geometry::{BoundingBox, Point3, PointCloud, SpatialIndex, UnitVector3};
