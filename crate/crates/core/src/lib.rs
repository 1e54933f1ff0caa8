//! Multiple-valued functions on the unit disk: the metric space of unordered
//! point tuples, discrete Dirichlet minimization, and a multiple-valued
//! Plateau solver with wrapped boundary parameterizations.

pub mod analysis;
pub mod aq;
pub mod assignment;
pub mod error;
pub mod field;
pub mod lab;
pub mod linalg;
pub mod mesh;
pub mod perm;
pub mod plateau;
pub mod solver;
pub mod suites;

pub use aq::{metric_g, optimal_matching, separation, support_multiplicity, Matching, QValue};
pub use error::{Error, Result};
pub use field::QField;
pub use mesh::{build_disk_mesh, DiskMesh, Mobius};
