//! Method-of-lines integration of the reaction–diffusion pair.
//!
//! Space is discretized with central second differences on a uniform grid,
//! giving the semi-discrete system
//!
//! ```text
//! λ1 u̇_j = (u_{j-1} − 2u_j + u_{j+1})/dx² + u_j (a1 + b1 u_j + c1 v_j)
//! λ2 v̇_j = (v_{j-1} − 2v_j + v_{j+1})/dx² + v_j (a2 + b2 u_j + c2 v_j)
//! ```
//!
//! Two integrators are provided:
//!
//! * **IMEX Crank–Nicolson** ([`SchemeKind::ImexCn`]): the stiff diffusion
//!   term is treated with the trapezoidal rule (solved by the Thomas
//!   algorithm), the reaction explicitly. Unconditionally stable in the
//!   diffusion; the default micro-step `dt = 0.25·dx²` ties the O(dt)
//!   splitting error to the O(dx²) spatial error, so grid-refinement
//!   studies observe clean second order.
//! * **Explicit RK4** ([`SchemeKind::ExplicitRk4`]): classical four-stage
//!   Runge–Kutta on the full semi-discrete system. Subject to the
//!   parabolic stability bound `dt ≤ 0.5·min(λ1, λ2)·dx²`, which is
//!   enforced — a requested step beyond it is an error, not a warning.
//!
//! Between two output levels the step size divides the output interval
//! exactly, so trajectories land on the requested grid times bit-for-bit.
//! Solutions that leave `|u|, |v| ≤ 1e8` are declared blown up and the
//! trajectory is truncated at the level where integration stopped.
//!
//! The module also carries the RK4 integrator for the reduced ODE pairs
//! ([`integrate_reduced`]) and the extinction boundary-value scenario
//! ([`extinction_bvp`]) whose solution relaxes to the semi-trivial steady
//! state at a pinned exponential rate.

use crate::model::{BcSpec, DlvParams, GridField, GridSpec, ModelError, SchemeKind, SystemId};
use crate::solutions::{
    instantiate, ExactSolution, FamilyId, ReducedAnsatz, ReducedState, SolutionError,
};
use std::collections::BTreeMap;

/// Default IMEX micro-step as a multiple of `dx²` (splitting error is then
/// slaved to the spatial error).
pub const DEFAULT_PARABOLIC_DT_FACTOR: f64 = 0.25;
/// Default explicit micro-step as a fraction of the diffusive limit.
pub const RK4_CFL_FRACTION: f64 = 0.45;
/// Hard stability bound for the explicit scheme: `dt ≤ 0.5·λ_min·dx²`.
pub const RK4_CFL_LIMIT: f64 = 0.5;
/// Fields beyond this magnitude terminate the run as blown up.
pub const BLOW_UP_LIMIT: f64 = 1e8;

/// Errors from the numerical layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PdeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error("explicit scheme is unstable here: dt = {dt:.3e} exceeds {limit:.3e} (0.5·λ_min·dx²)")]
    CflViolated { dt: f64, limit: f64 },
    #[error("micro-step must be positive and finite, got {0}")]
    BadDt(f64),
    #[error("initial data length {got} does not match nx = {nx}")]
    BadInitialLength { got: usize, nx: usize },
    #[error("initial data must be finite")]
    NonFiniteInitial,
    #[error("time integration of diffusion requires lambda1 > 0 and lambda2 > 0")]
    NonPositiveLambda,
    #[error("boundary condition `from_exact` needs an exact solution attached")]
    MissingExact,
    #[error("extinction scenario precondition failed: {0}")]
    BvpPrecondition(String),
}

/// Resolved boundary handling for a run.
#[derive(Debug, Clone, Copy)]
pub enum BoundaryDriver<'a> {
    /// Re-evaluate an exact solution on the boundary at every micro-step.
    Exact(&'a ExactSolution),
    /// Pinned values `(u, v)` on each side.
    Constant { left: (f64, f64), right: (f64, f64) },
    /// Zero flux on both sides (reflected-ghost second-order stencil).
    Neumann,
}

impl<'a> BoundaryDriver<'a> {
    pub fn resolve(
        bc: &BcSpec,
        exact: Option<&'a ExactSolution>,
    ) -> Result<BoundaryDriver<'a>, PdeError> {
        match bc {
            BcSpec::FromExact => exact.map(BoundaryDriver::Exact).ok_or(PdeError::MissingExact),
            BcSpec::NeumannZero => Ok(BoundaryDriver::Neumann),
            BcSpec::Dirichlet { left, right } => Ok(BoundaryDriver::Constant {
                left: *left,
                right: *right,
            }),
        }
    }

    /// Boundary values at time `t`, or `None` for the zero-flux case.
    fn values(
        &self,
        t: f64,
        x0: f64,
        x1: f64,
    ) -> Result<Option<((f64, f64), (f64, f64))>, PdeError> {
        match self {
            BoundaryDriver::Exact(sol) => {
                let l = sol.eval(t, x0)?;
                let r = sol.eval(t, x1)?;
                Ok(Some((l, r)))
            }
            BoundaryDriver::Constant { left, right } => Ok(Some((*left, *right))),
            BoundaryDriver::Neumann => Ok(None),
        }
    }
}

/// A completed (or truncated) simulation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub field: GridField,
    /// Number of valid time levels stored in `field` (from level 0 up).
    pub levels_completed: usize,
    /// Time at which the fields left the admissible range, if they did.
    pub blow_up: Option<f64>,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.blow_up.is_none() && self.levels_completed == self.field.spec.nt
    }
}

/// Evaluate an exact solution at the initial time across the grid nodes.
pub fn initial_from_exact(
    sol: &ExactSolution,
    grid: &GridSpec,
) -> Result<(Vec<f64>, Vec<f64>), PdeError> {
    let mut u = Vec::with_capacity(grid.nx);
    let mut v = Vec::with_capacity(grid.nx);
    for j in 0..grid.nx {
        let (uj, vj) = sol.eval(grid.t0, grid.x(j))?;
        u.push(uj);
        v.push(vj);
    }
    Ok((u, v))
}

struct Workspace {
    reaction_u: Vec<f64>,
    reaction_v: Vec<f64>,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
    stage_u: Vec<f64>,
    stage_v: Vec<f64>,
    acc_u: Vec<f64>,
    acc_v: Vec<f64>,
    k_u: Vec<f64>,
    k_v: Vec<f64>,
}

impl Workspace {
    fn new(nx: usize) -> Workspace {
        let z = || vec![0.0; nx];
        Workspace {
            reaction_u: z(),
            reaction_v: z(),
            sub: z(),
            diag: z(),
            sup: z(),
            rhs: z(),
            scratch: z(),
            stage_u: z(),
            stage_v: z(),
            acc_u: z(),
            acc_v: z(),
            k_u: z(),
            k_v: z(),
        }
    }
}

/// Solve a tridiagonal system in place; `rhs` becomes the solution.
/// Standard Thomas forward elimination / back substitution.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    scratch[0] = sup[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * scratch[i - 1];
        scratch[i] = sup[i] / denom;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

fn reaction_u(p: &DlvParams, u: f64, v: f64) -> f64 {
    u * (p.a1 + p.b1 * u + p.c1 * v)
}

fn reaction_v(p: &DlvParams, u: f64, v: f64) -> f64 {
    v * (p.a2 + p.b2 * u + p.c2 * v)
}

struct Stepper<'a> {
    p: DlvParams,
    dx: f64,
    x0: f64,
    x1: f64,
    bc: BoundaryDriver<'a>,
}

impl Stepper<'_> {
    /// Crank–Nicolson diffusion / explicit reaction micro-step from `t`
    /// to `t + dt`, updating `u`, `v` in place.
    fn step_imex(
        &self,
        t: f64,
        dt: f64,
        u: &mut [f64],
        v: &mut [f64],
        ws: &mut Workspace,
    ) -> Result<(), PdeError> {
        let nx = u.len();
        for j in 0..nx {
            ws.reaction_u[j] = reaction_u(&self.p, u[j], v[j]);
            ws.reaction_v[j] = reaction_v(&self.p, u[j], v[j]);
        }
        let bounds = self.bc.values(t + dt, self.x0, self.x1)?;
        cn_field(
            self.p.lambda1,
            self.dx,
            dt,
            u,
            &ws.reaction_u,
            bounds.map(|(l, r)| (l.0, r.0)),
            &mut ws.sub,
            &mut ws.diag,
            &mut ws.sup,
            &mut ws.rhs,
            &mut ws.scratch,
        );
        cn_field(
            self.p.lambda2,
            self.dx,
            dt,
            v,
            &ws.reaction_v,
            bounds.map(|(l, r)| (l.1, r.1)),
            &mut ws.sub,
            &mut ws.diag,
            &mut ws.sup,
            &mut ws.rhs,
            &mut ws.scratch,
        );
        Ok(())
    }

    /// Semi-discrete right-hand side at time `t` into `(du, dv)`.
    fn rhs(
        &self,
        t: f64,
        u: &[f64],
        v: &[f64],
        du: &mut [f64],
        dv: &mut [f64],
    ) -> Result<(), PdeError> {
        let nx = u.len();
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        for j in 1..nx - 1 {
            let lap_u = (u[j - 1] - 2.0 * u[j] + u[j + 1]) * inv_dx2;
            let lap_v = (v[j - 1] - 2.0 * v[j] + v[j + 1]) * inv_dx2;
            du[j] = (lap_u + reaction_u(&self.p, u[j], v[j])) / self.p.lambda1;
            dv[j] = (lap_v + reaction_v(&self.p, u[j], v[j])) / self.p.lambda2;
        }
        match self.bc {
            BoundaryDriver::Exact(sol) => {
                let slot = [("t", t), ("x", self.x0)];
                du[0] = sol.u_t.eval(&slot).map_err(SolutionError::Eval)?;
                dv[0] = sol.v_t.eval(&slot).map_err(SolutionError::Eval)?;
                let slot = [("t", t), ("x", self.x1)];
                du[nx - 1] = sol.u_t.eval(&slot).map_err(SolutionError::Eval)?;
                dv[nx - 1] = sol.v_t.eval(&slot).map_err(SolutionError::Eval)?;
            }
            BoundaryDriver::Constant { .. } => {
                du[0] = 0.0;
                dv[0] = 0.0;
                du[nx - 1] = 0.0;
                dv[nx - 1] = 0.0;
            }
            BoundaryDriver::Neumann => {
                let lap_u = 2.0 * (u[1] - u[0]) * inv_dx2;
                let lap_v = 2.0 * (v[1] - v[0]) * inv_dx2;
                du[0] = (lap_u + reaction_u(&self.p, u[0], v[0])) / self.p.lambda1;
                dv[0] = (lap_v + reaction_v(&self.p, u[0], v[0])) / self.p.lambda2;
                let lap_u = 2.0 * (u[nx - 2] - u[nx - 1]) * inv_dx2;
                let lap_v = 2.0 * (v[nx - 2] - v[nx - 1]) * inv_dx2;
                du[nx - 1] =
                    (lap_u + reaction_u(&self.p, u[nx - 1], v[nx - 1])) / self.p.lambda1;
                dv[nx - 1] =
                    (lap_v + reaction_v(&self.p, u[nx - 1], v[nx - 1])) / self.p.lambda2;
            }
        }
        Ok(())
    }

    /// Classical RK4 micro-step; boundaries of prescribed-value drivers
    /// are snapped to their exact values at the end of the step.
    fn step_rk4(
        &self,
        t: f64,
        dt: f64,
        u: &mut [f64],
        v: &mut [f64],
        ws: &mut Workspace,
    ) -> Result<(), PdeError> {
        let nx = u.len();
        // Stage weights (c_i, accumulation weight) of the classical tableau.
        const STAGES: [(f64, f64); 4] = [(0.0, 1.0), (0.5, 2.0), (0.5, 2.0), (1.0, 1.0)];
        ws.acc_u.iter_mut().for_each(|x| *x = 0.0);
        ws.acc_v.iter_mut().for_each(|x| *x = 0.0);
        for (idx, (c, w)) in STAGES.iter().enumerate() {
            if idx == 0 {
                ws.stage_u.copy_from_slice(u);
                ws.stage_v.copy_from_slice(v);
            } else {
                let h = c * dt;
                for j in 0..nx {
                    ws.stage_u[j] = u[j] + h * ws.k_u[j];
                    ws.stage_v[j] = v[j] + h * ws.k_v[j];
                }
            }
            let (ku, kv, su, sv) = (&mut ws.k_u, &mut ws.k_v, &ws.stage_u, &ws.stage_v);
            self.rhs(t + c * dt, su, sv, ku, kv)?;
            for j in 0..nx {
                ws.acc_u[j] += w * ws.k_u[j];
                ws.acc_v[j] += w * ws.k_v[j];
            }
        }
        for j in 0..nx {
            u[j] += dt / 6.0 * ws.acc_u[j];
            v[j] += dt / 6.0 * ws.acc_v[j];
        }
        if let Some(((ul, vl), (ur, vr))) = self.bc.values(t + dt, self.x0, self.x1)? {
            u[0] = ul;
            v[0] = vl;
            u[nx - 1] = ur;
            v[nx - 1] = vr;
        }
        Ok(())
    }
}

/// One Crank–Nicolson field update. `bc_new` carries the prescribed
/// boundary values at the new time level, or `None` for zero flux.
#[allow(clippy::too_many_arguments)]
fn cn_field(
    lambda: f64,
    dx: f64,
    dt: f64,
    field: &mut [f64],
    reaction: &[f64],
    bc_new: Option<(f64, f64)>,
    sub: &mut [f64],
    diag: &mut [f64],
    sup: &mut [f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) {
    let nx = field.len();
    let r = dt / (2.0 * lambda * dx * dx);
    let explicit = |j: usize| {
        field[j]
            + r * (field[j - 1] - 2.0 * field[j] + field[j + 1])
            + dt / lambda * reaction[j]
    };
    match bc_new {
        Some((left, right)) => {
            // Interior unknowns only; boundary values enter the stencil.
            let n = nx - 2;
            for (i, j) in (1..nx - 1).enumerate() {
                sub[i] = -r;
                diag[i] = 1.0 + 2.0 * r;
                sup[i] = -r;
                rhs[i] = explicit(j);
            }
            rhs[0] += r * left;
            rhs[n - 1] += r * right;
            thomas(&sub[..n], &diag[..n], &sup[..n], &mut rhs[..n], &mut scratch[..n]);
            field[0] = left;
            field[nx - 1] = right;
            field[1..nx - 1].copy_from_slice(&rhs[..n]);
        }
        None => {
            // Reflected-ghost rows make the boundary nodes unknowns too.
            for j in 1..nx - 1 {
                sub[j] = -r;
                diag[j] = 1.0 + 2.0 * r;
                sup[j] = -r;
                rhs[j] = explicit(j);
            }
            diag[0] = 1.0 + 2.0 * r;
            sup[0] = -2.0 * r;
            sub[0] = 0.0;
            rhs[0] = field[0] + 2.0 * r * (field[1] - field[0]) + dt / lambda * reaction[0];
            diag[nx - 1] = 1.0 + 2.0 * r;
            sub[nx - 1] = -2.0 * r;
            sup[nx - 1] = 0.0;
            rhs[nx - 1] = field[nx - 1]
                + 2.0 * r * (field[nx - 2] - field[nx - 1])
                + dt / lambda * reaction[nx - 1];
            thomas(sub, diag, sup, rhs, scratch);
            field.copy_from_slice(rhs);
        }
    }
}

fn blow_up(u: &[f64], v: &[f64]) -> bool {
    u.iter()
        .chain(v.iter())
        .any(|x| !x.is_finite() || x.abs() > BLOW_UP_LIMIT)
}

/// Integrate the system over `grid`, starting from `(init_u, init_v)` at
/// the first time level. Output levels land exactly on the grid times;
/// the micro-step divides each output interval evenly.
pub fn simulate(
    system: &SystemId,
    grid: &GridSpec,
    init_u: &[f64],
    init_v: &[f64],
    bc: BoundaryDriver<'_>,
    scheme: SchemeKind,
    dt_override: Option<f64>,
) -> Result<Trajectory, PdeError> {
    grid.validate()?;
    let p = system.params();
    if p.lambda1 <= 0.0 || p.lambda2 <= 0.0 {
        return Err(PdeError::NonPositiveLambda);
    }
    if init_u.len() != grid.nx || init_v.len() != grid.nx {
        return Err(PdeError::BadInitialLength {
            got: init_u.len().min(init_v.len()),
            nx: grid.nx,
        });
    }
    if init_u.iter().chain(init_v.iter()).any(|x| !x.is_finite()) {
        return Err(PdeError::NonFiniteInitial);
    }
    let dx = grid.dx();
    let dt_out = grid.dt();
    let lambda_min = p.lambda1.min(p.lambda2);
    let dt_target = match dt_override {
        Some(dt) => {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(PdeError::BadDt(dt));
            }
            dt
        }
        None => match scheme {
            SchemeKind::ImexCn => DEFAULT_PARABOLIC_DT_FACTOR * dx * dx,
            SchemeKind::ExplicitRk4 => RK4_CFL_FRACTION * lambda_min * dx * dx,
        },
    };
    let substeps = (dt_out / dt_target).ceil().max(1.0) as usize;
    let dt = dt_out / substeps as f64;
    if scheme == SchemeKind::ExplicitRk4 {
        let limit = RK4_CFL_LIMIT * lambda_min * dx * dx;
        if dt > limit * (1.0 + 1e-12) {
            return Err(PdeError::CflViolated { dt, limit });
        }
    }

    let stepper = Stepper { p, dx, x0: grid.x0, x1: grid.x1, bc };
    let mut ws = Workspace::new(grid.nx);
    let mut field = GridField::zeros(*grid);
    let mut u = init_u.to_vec();
    let mut v = init_v.to_vec();
    field.u[..grid.nx].copy_from_slice(&u);
    field.v[..grid.nx].copy_from_slice(&v);
    let mut levels_completed = 1;
    let mut blew_up = None;

    'levels: for level in 1..grid.nt {
        let t_base = grid.t(level - 1);
        for s in 0..substeps {
            let t = t_base + dt * s as f64;
            match scheme {
                SchemeKind::ImexCn => stepper.step_imex(t, dt, &mut u, &mut v, &mut ws)?,
                SchemeKind::ExplicitRk4 => stepper.step_rk4(t, dt, &mut u, &mut v, &mut ws)?,
            }
            if blow_up(&u, &v) {
                blew_up = Some(t + dt);
                break 'levels;
            }
        }
        let base = level * grid.nx;
        field.u[base..base + grid.nx].copy_from_slice(&u);
        field.v[base..base + grid.nx].copy_from_slice(&v);
        levels_completed = level + 1;
    }

    Ok(Trajectory { field, levels_completed, blow_up: blew_up })
}

/// One sample of a reduced-ODE trajectory.
#[derive(Debug, Clone, Copy)]
pub struct OdeSample {
    pub omega: f64,
    pub state: ReducedState,
}

/// A reduced-ODE trajectory over the requested range.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub samples: Vec<OdeSample>,
    /// Value of the reduced variable at which the profile blew up, if any.
    pub blow_up: Option<f64>,
}

/// RK4 integration of a reduced ODE pair `(φ1'', φ2'') = f(φ1, φ1', φ2, φ2')`
/// from `range.0` to `range.1` with `n_out` equally spaced output samples
/// (endpoints included) and micro-steps no longer than `h_max`.
pub fn integrate_reduced(
    ansatz: &ReducedAnsatz,
    ics: ReducedState,
    range: (f64, f64),
    n_out: usize,
    h_max: f64,
) -> Result<OdeTrajectory, PdeError> {
    if !(h_max > 0.0 && h_max.is_finite()) {
        return Err(PdeError::BadDt(h_max));
    }
    if n_out < 2 || !(range.1 > range.0) {
        return Err(PdeError::Model(ModelError::BadGrid(
            "reduced-variable range needs at least two increasing samples",
        )));
    }
    let d_out = (range.1 - range.0) / (n_out - 1) as f64;
    let substeps = (d_out / h_max).ceil().max(1.0) as usize;
    let h = d_out / substeps as f64;
    let deriv = |s: &ReducedState| -> [f64; 4] {
        let (d1, d2) = ansatz.rhs(s);
        [s.dphi1, d1, s.dphi2, d2]
    };
    let mut y = ics;
    let mut samples = Vec::with_capacity(n_out);
    samples.push(OdeSample { omega: range.0, state: y });
    let mut blow = None;
    'outer: for i in 1..n_out {
        for s in 0..substeps {
            let w = range.0 + d_out * (i - 1) as f64 + h * s as f64;
            let k1 = deriv(&y);
            let k2 = deriv(&advance(&y, &k1, h / 2.0));
            let k3 = deriv(&advance(&y, &k2, h / 2.0));
            let k4 = deriv(&advance(&y, &k3, h));
            y = ReducedState {
                phi1: y.phi1 + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                dphi1: y.dphi1 + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                phi2: y.phi2 + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
                dphi2: y.dphi2 + h / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
            };
            let worst = y
                .phi1
                .abs()
                .max(y.dphi1.abs())
                .max(y.phi2.abs())
                .max(y.dphi2.abs());
            if !worst.is_finite() || worst > BLOW_UP_LIMIT {
                blow = Some(w + h);
                break 'outer;
            }
        }
        samples.push(OdeSample {
            omega: range.0 + d_out * i as f64,
            state: y,
        });
    }
    Ok(OdeTrajectory { samples, blow_up: blow })
}

fn advance(y: &ReducedState, k: &[f64; 4], h: f64) -> ReducedState {
    ReducedState {
        phi1: y.phi1 + h * k[0],
        dphi1: y.dphi1 + h * k[1],
        phi2: y.phi2 + h * k[2],
        dphi2: y.dphi2 + h * k[3],
    }
}

/// The extinction boundary-value scenario on the competition preset.
///
/// The domain length is pinned by the decaying sine mode: with
/// `ν = sqrt(−β·λ1)` the mode vanishes at `x = 0` and `x = π/ν`, so
/// Dirichlet data equal to the semi-trivial steady state `(a1/b, 0)` are
/// exactly compatible and the closed-form solution applies on the whole
/// strip. `V` then dies out like `e^{β t}` while `U` relaxes to `a1/b`.
#[derive(Debug, Clone)]
pub struct ExtinctionBvp {
    pub system: SystemId,
    pub grid: GridSpec,
    pub exact: ExactSolution,
    /// Semi-trivial steady state `(a1/b, 0)`.
    pub steady: (f64, f64),
    /// Exact exponential rate `β` of the decaying component.
    pub rate: f64,
}

/// Assemble the extinction scenario: competition preset, mode amplitude
/// `c2`, `nt × nx` output grid over `t ∈ [0, horizon]`.
pub fn extinction_bvp(
    system: &SystemId,
    c2: f64,
    horizon: f64,
    nt: usize,
    nx: usize,
) -> Result<ExtinctionBvp, PdeError> {
    let SystemId::Sys136 { a1, a2, b, c, .. } = *system else {
        return Err(PdeError::BvpPrecondition(format!(
            "needs the competition preset, got {}",
            system.name()
        )));
    };
    if !(a1 > 0.0 && a2 > 0.0 && b > 0.0 && c > 0.0) {
        return Err(PdeError::BvpPrecondition(
            "needs a1 > 0, a2 > 0, b > 0, c > 0".into(),
        ));
    }
    let p = system.params();
    let beta = p.beta()?;
    if !(beta < 0.0) {
        return Err(PdeError::BvpPrecondition(
            "needs (a1 - a2)/(lambda1 - lambda2) < 0".into(),
        ));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(PdeError::BvpPrecondition(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let nu = (-beta * p.lambda1).sqrt();
    let grid = GridSpec {
        t0: 0.0,
        t1: horizon,
        x0: 0.0,
        x1: std::f64::consts::PI / nu,
        nt,
        nx,
    };
    grid.validate()?;
    let constants: BTreeMap<String, f64> = [("C2".to_string(), c2)].into();
    let exact = instantiate(FamilyId::Eq134, system, &constants, (0.0, 0.0))?;
    Ok(ExtinctionBvp {
        system: *system,
        grid,
        exact,
        steady: (a1 / b, 0.0),
        rate: beta,
    })
}

impl ExtinctionBvp {
    /// Run the scenario: initial data from the closed form, steady-state
    /// Dirichlet boundaries.
    pub fn run(
        &self,
        scheme: SchemeKind,
        dt_override: Option<f64>,
    ) -> Result<Trajectory, PdeError> {
        let (init_u, init_v) = initial_from_exact(&self.exact, &self.grid)?;
        let bc = BoundaryDriver::Constant { left: self.steady, right: self.steady };
        simulate(
            &self.system,
            &self.grid,
            &init_u,
            &init_v,
            bc,
            scheme,
            dt_override,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::{build_ansatz, RowId};

    /// Zero-reaction parameter set for pure-diffusion sanity checks.
    fn diffusion_only(lambda1: f64, lambda2: f64) -> SystemId {
        SystemId::General(DlvParams {
            lambda1,
            lambda2,
            a1: 0.0,
            a2: 0.0,
            b1: 0.0,
            b2: 0.0,
            c1: 0.0,
            c2: 0.0,
        })
    }

    #[test]
    fn thomas_solves_a_dense_checked_system() {
        // A = [[2,1,0],[1,3,1],[0,1,2]], x = (1, -2, 3) → b = (0, -2, 4).
        let sub = [0.0, 1.0, 1.0];
        let diag = [2.0, 3.0, 2.0];
        let sup = [1.0, 1.0, 0.0];
        let mut rhs = [0.0, -2.0, 4.0];
        let mut scratch = [0.0; 3];
        thomas(&sub, &diag, &sup, &mut rhs, &mut scratch);
        assert!((rhs[0] - 1.0).abs() < 1e-14);
        assert!((rhs[1] + 2.0).abs() < 1e-14);
        assert!((rhs[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn heat_mode_decays_at_the_exact_rate() {
        // λ u_t = u_xx with u = sin(πx)·exp(−π²t/λ) on [0,1], pinned ends.
        let sys = diffusion_only(1.0, 2.0);
        let grid = GridSpec { t0: 0.0, t1: 0.1, x0: 0.0, x1: 1.0, nt: 6, nx: 101 };
        let pi = std::f64::consts::PI;
        let init_u: Vec<f64> = (0..grid.nx).map(|j| (pi * grid.x(j)).sin()).collect();
        let init_v = init_u.clone();
        let bc = BoundaryDriver::Constant { left: (0.0, 0.0), right: (0.0, 0.0) };
        for scheme in [SchemeKind::ImexCn, SchemeKind::ExplicitRk4] {
            let traj =
                simulate(&sys, &grid, &init_u, &init_v, bc, scheme, None).unwrap();
            assert!(traj.completed());
            let mut worst = 0.0_f64;
            for j in 0..grid.nx {
                let x = grid.x(j);
                let eu = (pi * x).sin() * (-pi * pi * 0.1).exp();
                let ev = (pi * x).sin() * (-pi * pi * 0.1 / 2.0).exp();
                worst = worst
                    .max((traj.field.u_at(5, j) - eu).abs())
                    .max((traj.field.v_at(5, j) - ev).abs());
            }
            assert!(worst < 5e-4, "{scheme:?}: sup error {worst:e}");
        }
    }

    #[test]
    fn zero_flux_walls_conserve_trapezoidal_mass() {
        let sys = diffusion_only(1.0, 3.0);
        let grid = GridSpec { t0: 0.0, t1: 0.2, x0: 0.0, x1: 1.0, nt: 5, nx: 81 };
        let pi = std::f64::consts::PI;
        // Flat-flux profile at both walls, so the stencil is compatible.
        let init_u: Vec<f64> = (0..grid.nx).map(|j| 1.0 + (pi * grid.x(j)).cos()).collect();
        let init_v: Vec<f64> = (0..grid.nx)
            .map(|j| 2.0 - (pi * grid.x(j)).cos())
            .collect();
        let mass = |row: &[f64]| -> f64 {
            let inner: f64 = row[1..row.len() - 1].iter().sum();
            inner + 0.5 * (row[0] + row[row.len() - 1])
        };
        let traj = simulate(
            &sys,
            &grid,
            &init_u,
            &init_v,
            BoundaryDriver::Neumann,
            SchemeKind::ImexCn,
            None,
        )
        .unwrap();
        let m0 = mass(&init_u);
        let m1 = mass(&traj.field.u[4 * grid.nx..5 * grid.nx]);
        assert!((m1 - m0).abs() < 1e-10 * m0.abs());
        // And the profile flattens toward its mean value 1.
        let mid = traj.field.u_at(4, grid.nx / 2);
        assert!((mid - 1.0).abs() < 0.1);
    }

    #[test]
    fn exact_driven_boundaries_track_a_closed_form() {
        let sys = SystemId::Sys38 { lambda1: 2.0, lambda2: 1.0, a1: 1.0, a2: 2.0 };
        let constants: BTreeMap<String, f64> =
            [("C1".to_string(), 0.5), ("C2".to_string(), 0.2)].into();
        let sol = instantiate(FamilyId::Eq107, &sys, &constants, (0.0, 0.0)).unwrap();
        let grid = GridSpec { t0: 0.0, t1: 0.5, x0: -1.0, x1: 1.0, nt: 11, nx: 81 };
        let (init_u, init_v) = initial_from_exact(&sol, &grid).unwrap();
        let traj = simulate(
            &sys,
            &grid,
            &init_u,
            &init_v,
            BoundaryDriver::Exact(&sol),
            SchemeKind::ImexCn,
            None,
        )
        .unwrap();
        assert!(traj.completed());
        let mut worst = 0.0_f64;
        for j in 0..grid.nx {
            let (eu, ev) = sol.eval(0.5, grid.x(j)).unwrap();
            worst = worst
                .max((traj.field.u_at(10, j) - eu).abs())
                .max((traj.field.v_at(10, j) - ev).abs());
        }
        assert!(worst < 5e-4, "sup error {worst:e}");
    }

    #[test]
    fn explicit_scheme_rejects_unstable_steps() {
        let sys = diffusion_only(1.0, 1.0);
        let grid = GridSpec { t0: 0.0, t1: 1.0, x0: 0.0, x1: 1.0, nt: 3, nx: 51 };
        let init = vec![0.0; grid.nx];
        let err = simulate(
            &sys,
            &grid,
            &init,
            &init,
            BoundaryDriver::Neumann,
            SchemeKind::ExplicitRk4,
            Some(0.01),
        )
        .unwrap_err();
        assert!(matches!(err, PdeError::CflViolated { .. }));
    }

    #[test]
    fn runaway_growth_is_cut_off() {
        let sys = SystemId::Sys38 { lambda1: 1.0, lambda2: 2.0, a1: 1.0, a2: 1.0 };
        let grid = GridSpec { t0: 0.0, t1: 1.0, x0: 0.0, x1: 1.0, nt: 6, nx: 11 };
        let init = vec![40.0; grid.nx];
        let traj = simulate(
            &sys,
            &grid,
            &init,
            &init,
            BoundaryDriver::Neumann,
            SchemeKind::ImexCn,
            None,
        )
        .unwrap();
        let t = traj.blow_up.expect("quadratic growth must blow up");
        assert!(t < 0.5, "blow-up at {t}");
        assert!(traj.levels_completed < grid.nt);
        assert!(!traj.completed());
    }

    #[test]
    fn reduced_integrator_reproduces_the_linear_mode() {
        // On the plateau φ1 ≡ −a1 the mode equation is φ2'' = βλ1 φ2 with
        // solution C1·e^{κω} + C2·e^{−κω}, κ = sqrt(βλ1).
        let sys = SystemId::Sys38 { lambda1: 2.0, lambda2: 1.0, a1: 2.0, a2: 1.0 };
        let p = sys.params();
        let kappa = (p.beta().unwrap() * p.lambda1).sqrt();
        let (c1, c2) = (0.3, 0.5);
        let ans = build_ansatz(RowId::Row2, &sys, &BTreeMap::new()).unwrap();
        let ics = ReducedState {
            phi1: -p.a1,
            dphi1: 0.0,
            phi2: c1 + c2,
            dphi2: kappa * (c1 - c2),
        };
        let traj = integrate_reduced(&ans, ics, (0.0, 1.0), 11, 1e-3).unwrap();
        assert!(traj.blow_up.is_none());
        let last = traj.samples.last().unwrap();
        let expect = c1 * kappa.exp() + c2 * (-kappa).exp();
        assert!((last.state.phi2 - expect).abs() < 1e-8);
        assert!((last.state.phi1 + p.a1).abs() < 1e-10);
    }

    #[test]
    fn extinction_scenario_is_wired_to_the_closed_form() {
        let sys = SystemId::Sys136 {
            lambda1: 11.0,
            lambda2: 1.0,
            a1: 1.0,
            a2: 2.0,
            b: 0.1,
            c: 0.1,
        };
        let bvp = extinction_bvp(&sys, 0.2, 5.0, 26, 61).unwrap();
        assert_eq!(bvp.rate, -0.1);
        assert_eq!(bvp.steady, (10.0, 0.0));
        let nu = 1.1_f64.sqrt();
        assert!((bvp.grid.x1 - std::f64::consts::PI / nu).abs() < 1e-14);
        let (u0, v0) = bvp.exact.eval(0.0, 0.0).unwrap();
        assert!((u0 - 10.0).abs() < 1e-12 && v0.abs() < 1e-12);

        let traj = bvp.run(SchemeKind::ImexCn, None).unwrap();
        assert!(traj.completed());
        // sup |V| over the final slice matches the exact decay within the
        // spatial discretization error.
        let last = bvp.grid.nt - 1;
        let sup_v = (0..bvp.grid.nx)
            .map(|j| traj.field.v_at(last, j).abs())
            .fold(0.0_f64, f64::max);
        let expect = 2.0 * (bvp.rate * 5.0).exp();
        assert!((sup_v - expect).abs() < 5e-3, "sup |V| = {sup_v}, exact {expect}");
        // U stays between the steady level and the initial dip.
        for j in 0..bvp.grid.nx {
            let u = traj.field.u_at(last, j);
            assert!(u <= 10.0 + 1e-9 && u >= 8.0);
        }
    }

    #[test]
    fn bvp_preconditions_are_enforced() {
        let wrong_host = SystemId::Sys38 { lambda1: 2.0, lambda2: 1.0, a1: 1.0, a2: 2.0 };
        assert!(matches!(
            extinction_bvp(&wrong_host, 0.2, 5.0, 11, 21),
            Err(PdeError::BvpPrecondition(_))
        ));
        // Growing mode (β > 0) is not an extinction scenario.
        let growing = SystemId::Sys136 {
            lambda1: 1.0,
            lambda2: 11.0,
            a1: 1.0,
            a2: 2.0,
            b: 0.1,
            c: 0.1,
        };
        assert!(matches!(
            extinction_bvp(&growing, 0.2, 5.0, 11, 21),
            Err(PdeError::BvpPrecondition(_))
        ));
    }

    #[test]
    fn from_exact_needs_an_attached_solution() {
        assert!(matches!(
            BoundaryDriver::resolve(&BcSpec::FromExact, None),
            Err(PdeError::MissingExact)
        ));
    }
}
