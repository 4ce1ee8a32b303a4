//! Finite-difference machinery for backward parabolic equations and obstacle
//! problems in one and two space dimensions.

pub mod grid;
pub mod march;
pub mod march2d;
pub mod psor;
pub mod region;
pub mod surface;
pub mod tridiag;

pub use grid::{Grid1D, Grid2D};
pub use march::{
    assemble_step, march, MarchOutput, NodeCoefficients, ObstacleProblem, Scheme, SolveStats, StepSystem, UpperBoundary,
};
pub use march2d::{march_2d, MarchOutput2D, NodeCoefficients2D, ObstacleProblem2D};
pub use psor::{complementarity_residual, psor_step, ObstacleSense, PsorOutcome, PsorSettings};
pub use region::{extract_region, extract_region_2d, Region2D, RegionSet, RegionTolerance};
pub use surface::{Surface, Surface2D};
pub use tridiag::{thomas_solve, Tridiagonal};
