//! Verification and reduction toolkit for diffusive Lotka-Volterra systems
//! of the form
//!
//! ```text
//! λ1·u_t = u_xx + u·(a1 + b1·u + c1·v)
//! λ2·v_t = v_xx + v·(a2 + b2·u + c2·v)
//! ```
//!
//! The crate machine-checks a catalog of reduction operators against their
//! determining equations, validates a catalog of closed-form solutions by
//! analytic residual evaluation, performs the operator-induced reductions to
//! ODE systems, and cross-checks everything against direct finite-difference
//! simulation.
//!
//! Layering (each module only depends on the ones above it):
//!
//! * [`symbolic`] — expression trees, parsing, differentiation, randomized
//!   identity testing. Everything analytic flows through this kernel.
//! * [`model`] — parameter sets, named system presets, grids, run configs.
//! * [`symmetry`] — reduction operators and their determining equations.
//! * [`solutions`] — closed-form solution families, ansätze, reduced ODEs.
//! * [`pde`] — method-of-lines solvers (explicit RK4, IMEX Crank-Nicolson),
//!   an RK4 ODE integrator, and the extinction boundary-value scenario.
//! * [`verify`] — residual reports, field comparison, asymptotics fits,
//!   reduction-consistency checks.
//! * [`cli`] — the `dlv` command-line front end.

pub mod cli;
pub mod model;
pub mod pde;
pub mod solutions;
pub mod symbolic;
pub mod symmetry;
pub mod verify;
