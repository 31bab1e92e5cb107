//! Dense LP and the convex subproblems of the scaling and enlarging steps.

mod convex;
mod scalar;
mod simplex;

pub use convex::{
    cutting_plane_maximize, find_feasible_input, maximize_gamma, minimize_max, ConstraintSet,
    ConvexProgram, GammaSolution, InputSet, MinimaxResult,
};
pub use scalar::{maximize_gamma_scalar, ScalarQuadratics};
pub use simplex::{solve_lp, LpProblem, LpSolution, LpStatus};
