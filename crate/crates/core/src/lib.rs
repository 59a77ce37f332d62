//! First-hit distributions of simple random walks on the square lattice
//! against a regular surface with compact support.
//!
//! The pipeline is: [`parse_surface`], [`assemble_system`] (factored once per
//! surface), [`solve_boundary`] over a target window, then
//! [`hit_distribution`] for any number of external starts. [`run_walks`] is an
//! independent Monte Carlo estimate of the same distribution.

pub mod coeffs;
pub mod kernel;
pub mod linsys;
pub mod mcsim;
pub mod quadrature;
pub mod surface;

pub use coeffs::{d_coeff, g_coeff, g_coeff_star, tilde_p, Side};
pub use kernel::{
    alpha, gamma, h_asymptotic, h_coeff, phi, Angle, HTable, KernelError, QuadratureSpec,
};
pub use linsys::{
    assemble_system, hit_distribution, solve_boundary, BoundarySolution, BoundarySystem,
    HitDistribution, SolveError, UnknownIndex, XWindow,
};
pub use mcsim::{
    audit_walks, compare, run_walks, CompareReport, CompareRow, McError, Runtime, WalkConfig,
    WalkTally,
};
pub use surface::{parse_surface, PointClass, PointKind, Surface, SurfaceError, Violation};
