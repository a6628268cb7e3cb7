//! Numerical kernels shared by the solver: simplex projection, k-means,
//! truncated SVD and the simplex-constrained QP.

pub mod kmeans;
pub mod qp;
pub mod simplex;
pub mod svd;

pub use kmeans::{kmeans, KMeans};
pub use qp::{solve_simplex_qp, AlmOptions, AlmState, QpSolution, QuadraticForm, SimplexQp};
pub use simplex::{project_simplex, project_simplex_in_place, simplex_violation};
pub use svd::{truncated_svd, TruncatedSvd};
