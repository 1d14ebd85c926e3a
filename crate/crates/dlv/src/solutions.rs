//! Closed-form exact solutions, reduction ansätze, and profile functions.
//!
//! Three layers, mirroring how the exact solutions are actually assembled:
//!
//! 1. **Profile functions** ([`PhiKind`]): six explicit solutions of the
//!    scalar ODEs `φ'' + φ² + mφ = 0` and its linearized companion, built
//!    from `tanh²`, `coth²`, `tan²`, `cosh³`, `sinh·cosh³` shapes.
//! 2. **Reduction rows** ([`RowId`], [`ReducedAnsatz`]): substitutions
//!    `(u, v) = F(t, ω, φ1, φ2)` that collapse the PDE system to a pair of
//!    second-order ODEs in `ω` (travelling-wave variable for the first row,
//!    plain `x` for the rest). [`ReducedAnsatz::rhs`] evaluates the reduced
//!    right-hand sides `(φ1'', φ2'')`.
//! 3. **Solution families** ([`FamilyId`], [`instantiate`]): eleven fully
//!    explicit `(u, v)` pairs obtained by feeding particular profiles into
//!    the rows. Each is stored symbolically together with all derivatives
//!    needed to evaluate the PDE residual pointwise.
//!
//! Every family records its host preset, its admissibility constraints
//! (checked at instantiation), its pole locus, and the cataloged operator
//! whose invariant surface it lies on ([`generating_operator`]).

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{GridField, GridSpec, SystemId};
use crate::symbolic::{
    cos, cosh, coth, exp, neg, num, pow, sin, sinh, tan, tanh, var, Expr, EvalError,
};
use crate::symmetry::{build_operator, map_to_competition, LinearOperator, OperatorId, SymmetryError};

/// Errors from solution construction and evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolutionError {
    #[error("unknown solution family `{0}`")]
    UnknownFamily(String),
    #[error("unknown reduction row `{0}`")]
    UnknownRow(String),
    #[error("family {family} is hosted on {expected}, got {got}")]
    WrongHost {
        family: &'static str,
        expected: &'static str,
        got: String,
    },
    #[error("row {row} is hosted on {expected}, got {got}")]
    WrongRowHost {
        row: &'static str,
        expected: &'static str,
        got: String,
    },
    #[error("constraint violated for {0}: {1}")]
    ConstraintViolated(&'static str, String),
    #[error("missing constant `{0}` for {1}")]
    MissingConstant(&'static str, &'static str),
    #[error("{1} does not use constant `{0}`")]
    ForeignConstant(String, &'static str),
    #[error("solution has a pole at (t, x) = ({t}, {x}); choose a window avoiding it")]
    PoleAt { t: f64, x: f64 },
    #[error("evaluation failed: {0}")]
    Eval(EvalError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// Identifiers of the closed-form solution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FamilyId {
    /// Exponential perturbation of `(−a1, 0)`, growing mode (`β > 0`).
    Eq106,
    /// Oscillatory-in-`x` perturbation, decaying mode (`β < 0`).
    Eq107,
    /// `tanh²` background plus a `cosh³` mode, rate ratio `λ1 = (9/5)λ2`.
    Eq116,
    /// `tanh²` background plus a `sinh·cosh³` mode, ratio `λ1 = (4/3)λ2`.
    Eq118,
    /// Singular `coth²` background plus a `sinh³` mode, ratio `9/5`.
    Eq119,
    /// Singular `coth²` background plus a `cosh·sinh³` mode, ratio `4/3`.
    Eq120,
    /// Periodic `tan²` background plus a `cos³` mode, ratio `9/5`.
    Eq121,
    /// `tanh²` pulse decaying at rate `a < 0` on the λ-scaled preset.
    Eq127,
    /// Singular `coth²` variant of the decaying pulse.
    Eq128,
    /// Periodic `tan²` variant, growing at rate `a > 0`.
    Eq129,
    /// Decaying sine mode around `(a1/b, 0)` on the competition preset.
    Eq134,
}

impl FamilyId {
    pub const ALL: [FamilyId; 11] = [
        FamilyId::Eq106,
        FamilyId::Eq107,
        FamilyId::Eq116,
        FamilyId::Eq118,
        FamilyId::Eq119,
        FamilyId::Eq120,
        FamilyId::Eq121,
        FamilyId::Eq127,
        FamilyId::Eq128,
        FamilyId::Eq129,
        FamilyId::Eq134,
    ];

    pub fn token(self) -> &'static str {
        match self {
            FamilyId::Eq106 => "eq106",
            FamilyId::Eq107 => "eq107",
            FamilyId::Eq116 => "eq116",
            FamilyId::Eq118 => "eq118",
            FamilyId::Eq119 => "eq119",
            FamilyId::Eq120 => "eq120",
            FamilyId::Eq121 => "eq121",
            FamilyId::Eq127 => "eq127",
            FamilyId::Eq128 => "eq128",
            FamilyId::Eq129 => "eq129",
            FamilyId::Eq134 => "eq134",
        }
    }

    pub fn parse(text: &str) -> Option<FamilyId> {
        FamilyId::ALL.into_iter().find(|id| id.token() == text)
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Catalog entry for one solution family.
#[derive(Debug, Clone, Copy)]
pub struct FamilyDescriptor {
    pub id: FamilyId,
    /// Host system preset name.
    pub host: &'static str,
    /// Cataloged operator whose invariant surface the family lies on
    /// (mapped through the sign substitution for the competition preset).
    pub generator: OperatorId,
    /// Extra constants the family needs, by key name.
    pub required_constants: &'static [&'static str],
    /// Human-readable admissibility constraints.
    pub constraints: &'static str,
    /// Human-readable pole locus (relative to the unshifted origin).
    pub poles: &'static str,
}

const CATALOG: [FamilyDescriptor; 11] = [
    FamilyDescriptor {
        id: FamilyId::Eq106,
        host: "sys38",
        generator: OperatorId::Op39,
        required_constants: &["C1", "C2"],
        constraints: "(a1 - a2)/(lambda1 - lambda2) > 0",
        poles: "none",
    },
    FamilyDescriptor {
        id: FamilyId::Eq107,
        host: "sys38",
        generator: OperatorId::Op39,
        required_constants: &["C1", "C2"],
        constraints: "(a1 - a2)/(lambda1 - lambda2) < 0",
        poles: "none",
    },
    FamilyDescriptor {
        id: FamilyId::Eq116,
        host: "sys38",
        generator: OperatorId::Op39,
        required_constants: &[],
        constraints: "lambda1 = (9/5) lambda2, a1 > a2",
        poles: "none",
    },
    FamilyDescriptor {
        id: FamilyId::Eq118,
        host: "sys38",
        generator: OperatorId::Op39,
        required_constants: &[],
        constraints: "lambda1 = (4/3) lambda2, a1 > a2",
        poles: "none",
    },
    FamilyDescriptor {
        id: FamilyId::Eq119,
        host: "sys38",
        generator: OperatorId::Op39,
        required_constants: &[],
        constraints: "lambda1 = (9/5) lambda2, a1 > a2",
        poles: "x = 0",
    },
    FamilyDescriptor {
        id: FamilyId::Eq120,
        host: "sys38",
        generator: OperatorId::Op39,
        required_constants: &[],
        constraints: "lambda1 = (4/3) lambda2, a1 > a2",
        poles: "x = 0",
    },
    FamilyDescriptor {
        id: FamilyId::Eq121,
        host: "sys38",
        generator: OperatorId::Op39,
        required_constants: &[],
        constraints: "lambda1 = (9/5) lambda2, a1 < a2",
        poles: "x = (2m+1)·pi/sqrt(a2 - a1)",
    },
    FamilyDescriptor {
        id: FamilyId::Eq127,
        host: "sys43",
        generator: OperatorId::Op44,
        required_constants: &["alpha"],
        constraints: "a < 0, alpha != 0",
        poles: "none",
    },
    FamilyDescriptor {
        id: FamilyId::Eq128,
        host: "sys43",
        generator: OperatorId::Op44,
        required_constants: &["alpha"],
        constraints: "a < 0, alpha != 0",
        poles: "x = 0",
    },
    FamilyDescriptor {
        id: FamilyId::Eq129,
        host: "sys43",
        generator: OperatorId::Op44,
        required_constants: &["alpha"],
        constraints: "a > 0, alpha != 0",
        poles: "x = (2m+1)·pi/sqrt(a·lambda2)",
    },
    FamilyDescriptor {
        id: FamilyId::Eq134,
        host: "sys136",
        generator: OperatorId::OpT3_2,
        required_constants: &["C2"],
        constraints: "(a1 - a2)/(lambda1 - lambda2) < 0, b != 0, c != 0",
        poles: "none",
    },
];

/// The full family catalog.
pub fn catalog() -> &'static [FamilyDescriptor] {
    &CATALOG
}

/// Catalog entry for one family id.
pub fn descriptor(id: FamilyId) -> &'static FamilyDescriptor {
    CATALOG
        .iter()
        .find(|d| d.id == id)
        .expect("catalog covers every family id")
}

/// Where a family's coefficients blow up, after the `(t0, x0)` shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoleLocus {
    None,
    /// A single pole at `x = at_x`.
    Single { at_x: f64 },
    /// Poles at `x = offset + m·period` for every integer `m`.
    Periodic { offset: f64, period: f64 },
}

impl PoleLocus {
    /// Distance from `x` to the nearest pole (`∞` if there are none).
    pub fn nearest_distance(&self, x: f64) -> f64 {
        match *self {
            PoleLocus::None => f64::INFINITY,
            PoleLocus::Single { at_x } => (x - at_x).abs(),
            PoleLocus::Periodic { offset, period } => {
                let m = ((x - offset) / period).round();
                (x - offset - m * period).abs()
            }
        }
    }
}

/// A closed-form solution instantiated with concrete parameters, stored
/// with every derivative needed for pointwise residual evaluation.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub id: FamilyId,
    pub system: SystemId,
    pub u: Expr,
    pub v: Expr,
    pub u_t: Expr,
    pub u_x: Expr,
    pub u_xx: Expr,
    pub v_t: Expr,
    pub v_x: Expr,
    pub v_xx: Expr,
    pub poles: PoleLocus,
    pub constants: BTreeMap<String, f64>,
    /// `(t0, x0)` translation applied at instantiation.
    pub shift: (f64, f64),
}

/// Pointwise values of a solution and its derivatives.
#[derive(Debug, Clone, Copy)]
pub struct SolutionJet {
    pub u: f64,
    pub v: f64,
    pub u_t: f64,
    pub u_x: f64,
    pub u_xx: f64,
    pub v_t: f64,
    pub v_x: f64,
    pub v_xx: f64,
}

impl ExactSolution {
    fn eval_expr(&self, e: &Expr, t: f64, x: f64) -> Result<f64, SolutionError> {
        e.eval(&[("t", t), ("x", x)]).map_err(|err| match err {
            EvalError::NonFinite(_) => SolutionError::PoleAt { t, x },
            other => SolutionError::Eval(other),
        })
    }

    /// Field values at one point.
    pub fn eval(&self, t: f64, x: f64) -> Result<(f64, f64), SolutionError> {
        Ok((self.eval_expr(&self.u, t, x)?, self.eval_expr(&self.v, t, x)?))
    }

    /// Field values and derivatives at one point.
    pub fn jet(&self, t: f64, x: f64) -> Result<SolutionJet, SolutionError> {
        Ok(SolutionJet {
            u: self.eval_expr(&self.u, t, x)?,
            v: self.eval_expr(&self.v, t, x)?,
            u_t: self.eval_expr(&self.u_t, t, x)?,
            u_x: self.eval_expr(&self.u_x, t, x)?,
            u_xx: self.eval_expr(&self.u_xx, t, x)?,
            v_t: self.eval_expr(&self.v_t, t, x)?,
            v_x: self.eval_expr(&self.v_x, t, x)?,
            v_xx: self.eval_expr(&self.v_xx, t, x)?,
        })
    }

    /// Field labels for output headers (`u, v` or `U, V`).
    pub fn labels(&self) -> (&'static str, &'static str) {
        self.system.field_semantics().labels()
    }

    /// Evaluate on a full space-time grid.
    pub fn eval_on_grid(&self, grid: &GridSpec) -> Result<GridField, SolutionError> {
        let mut field = GridField::zeros(*grid);
        for i in 0..grid.nt {
            for j in 0..grid.nx {
                let (t, x) = (grid.t(i), grid.x(j));
                let (u, v) = self.eval(t, x)?;
                let k = field.idx(i, j);
                field.u[k] = u;
                field.v[k] = v;
            }
        }
        Ok(field)
    }
}

fn shifted(name: &str, offset: f64) -> Expr {
    if offset == 0.0 {
        var(name)
    } else {
        var(name) - num(offset)
    }
}

fn require(
    family: &'static str,
    ok: bool,
    why: &str,
) -> Result<(), SolutionError> {
    if ok {
        Ok(())
    } else {
        Err(SolutionError::ConstraintViolated(family, why.to_string()))
    }
}

/// Relative check for the pinned diffusivity ratios (`9/5`, `4/3`); exact
/// up to one rounding of the quotient.
fn ratio_holds(lambda1: f64, lambda2: f64, ratio: f64) -> bool {
    (lambda1 - ratio * lambda2).abs() <= 1e-12 * lambda1.abs().max(1.0)
}

fn check_constants(
    id: FamilyId,
    constants: &BTreeMap<String, f64>,
) -> Result<(), SolutionError> {
    let desc = descriptor(id);
    for key in desc.required_constants {
        if !constants.contains_key(*key) {
            return Err(SolutionError::MissingConstant(key, id.token()));
        }
    }
    for key in constants.keys() {
        if !desc.required_constants.contains(&key.as_str()) {
            return Err(SolutionError::ForeignConstant(key.clone(), id.token()));
        }
    }
    Ok(())
}

/// Build a closed-form solution on its host system, translated by
/// `(t0, x0)`. Constraints are checked before anything is built.
pub fn instantiate(
    id: FamilyId,
    system: &SystemId,
    constants: &BTreeMap<String, f64>,
    shift: (f64, f64),
) -> Result<ExactSolution, SolutionError> {
    let desc = descriptor(id);
    if system.name() != desc.host {
        return Err(SolutionError::WrongHost {
            family: id.token(),
            expected: desc.host,
            got: system.name().to_string(),
        });
    }
    check_constants(id, constants)?;
    let p = system.params();
    let (t0, x0) = shift;
    let tt = || shifted("t", t0);
    let xx = || shifted("x", x0);
    let name = id.token();
    let get = |key: &str| constants[key];

    // β is defined for every host preset here (λ1 ≠ λ2 by construction).
    let delta = p.lambda1 - p.lambda2;
    let beta = (p.a1 - p.a2) / delta;

    let (u, v, poles) = match id {
        FamilyId::Eq106 | FamilyId::Eq107 => {
            if id == FamilyId::Eq106 {
                require(name, beta > 0.0, "(a1 - a2)/(lambda1 - lambda2) must be positive")?;
            } else {
                require(name, beta < 0.0, "(a1 - a2)/(lambda1 - lambda2) must be negative")?;
            }
            let (c1, c2) = (get("C1"), get("C2"));
            let spatial = if id == FamilyId::Eq106 {
                let mu = (beta * p.lambda1).sqrt();
                num(c1) * exp(num(mu) * xx()) + num(c2) * exp(num(-mu) * xx())
            } else {
                let nu = (-beta * p.lambda1).sqrt();
                num(c1) * cos(num(nu) * xx()) + num(c2) * sin(num(nu) * xx())
            };
            let mode = num(1.0 / (p.a2 - p.a1)) * spatial * exp(num(beta) * tt());
            let u = num(-p.a1) + mode.clone();
            let v = neg(mode);
            (u, v, PoleLocus::None)
        }
        FamilyId::Eq116 | FamilyId::Eq118 | FamilyId::Eq119 | FamilyId::Eq120 => {
            let ratio = match id {
                FamilyId::Eq116 | FamilyId::Eq119 => 9.0 / 5.0,
                _ => 4.0 / 3.0,
            };
            require(
                name,
                ratio_holds(p.lambda1, p.lambda2, ratio),
                "diffusivity ratio lambda1/lambda2 is pinned for this family",
            )?;
            require(name, p.a1 > p.a2, "needs a1 > a2")?;
            let k = 0.5 * (p.a1 - p.a2).sqrt();
            let arg = || num(k) * xx();
            // Background profile: tanh² for the regular families, coth²
            // for the singular ones.
            let (sq, poles) = match id {
                FamilyId::Eq116 | FamilyId::Eq118 => {
                    (pow(tanh(arg()), 2.0), PoleLocus::None)
                }
                _ => (pow(coth(arg()), 2.0), PoleLocus::Single { at_x: x0 }),
            };
            // Linearized mode paired with that background.
            let shape = match id {
                FamilyId::Eq116 => pow(cosh(arg()), 3.0),
                FamilyId::Eq118 => sinh(arg()) * pow(cosh(arg()), 3.0),
                FamilyId::Eq119 => pow(sinh(arg()), 3.0),
                _ => cosh(arg()) * pow(sinh(arg()), 3.0),
            };
            let mode = num(1.0 / (p.a1 - p.a2)) * exp(num(beta) * tt()) * shape;
            let u = num(0.5 * p.a1) - num(1.5 * p.a1) * sq.clone() - mode.clone();
            let v = num(-1.5 * p.a2) * (num(1.0) - sq) + mode;
            (u, v, poles)
        }
        FamilyId::Eq121 => {
            require(
                name,
                ratio_holds(p.lambda1, p.lambda2, 9.0 / 5.0),
                "diffusivity ratio lambda1/lambda2 is pinned for this family",
            )?;
            require(name, p.a1 < p.a2, "needs a1 < a2")?;
            let k = 0.5 * (p.a2 - p.a1).sqrt();
            let arg = || num(k) * xx();
            let sq = pow(tan(arg()), 2.0);
            let mode = num(1.0 / (p.a1 - p.a2)) * exp(num(beta) * tt()) * pow(cos(arg()), 3.0);
            let u = num(0.5 * p.a1) + num(1.5 * p.a1) * sq.clone() - mode.clone();
            let v = num(-1.5 * p.a2) * (num(1.0) + sq) + mode;
            let half_period = std::f64::consts::PI / (2.0 * k);
            (
                u,
                v,
                PoleLocus::Periodic { offset: x0 + half_period, period: 2.0 * half_period },
            )
        }
        FamilyId::Eq127 | FamilyId::Eq128 | FamilyId::Eq129 => {
            let a = p.a1 / p.lambda1;
            let alpha = get("alpha");
            require(name, alpha != 0.0, "alpha must be nonzero")?;
            if id == FamilyId::Eq129 {
                require(name, a > 0.0, "needs a > 0")?;
            } else {
                require(name, a < 0.0, "needs a < 0")?;
            }
            let kappa = 0.5 * (a.abs() * p.lambda2).sqrt();
            let arg = || num(kappa) * xx();
            let decay = exp(num(a) * tt());
            let (u, background, poles) = match id {
                FamilyId::Eq127 => {
                    let sq = pow(tanh(arg()), 2.0);
                    let u = num(alpha * a * p.lambda1 * p.lambda2)
                        * (num(-0.5) + num(1.5) * sq.clone())
                        * decay;
                    let bg = num(-1.5 * a * p.lambda2) * (num(1.0) - sq);
                    (u, bg, PoleLocus::None)
                }
                FamilyId::Eq128 => {
                    let sq = pow(coth(arg()), 2.0);
                    let u = num(alpha * a * p.lambda1 * p.lambda2)
                        * (num(-0.5) + num(1.5) * sq.clone())
                        * decay;
                    let bg = num(-1.5 * a * p.lambda2) * (num(1.0) - sq);
                    (u, bg, PoleLocus::Single { at_x: x0 })
                }
                _ => {
                    let sq = pow(tan(arg()), 2.0);
                    let u = num(-alpha * a * p.lambda1 * p.lambda2)
                        * (num(0.5) + num(1.5) * sq.clone())
                        * decay;
                    let bg = num(-1.5 * a * p.lambda2) * (num(1.0) + sq);
                    let half_period = std::f64::consts::PI / (2.0 * kappa);
                    (
                        u,
                        bg,
                        PoleLocus::Periodic {
                            offset: x0 + half_period,
                            period: 2.0 * half_period,
                        },
                    )
                }
            };
            let v = background - u.clone();
            (u, v, poles)
        }
        FamilyId::Eq134 => {
            let SystemId::Sys136 { a1, a2, b, c, .. } = *system else {
                unreachable!("host check above pins the competition preset")
            };
            require(name, beta < 0.0, "(a1 - a2)/(lambda1 - lambda2) must be negative")?;
            require(name, b != 0.0 && c != 0.0, "needs nonzero b and c")?;
            let c2 = get("C2");
            let nu = (-beta * p.lambda1).sqrt();
            let mode = num(c2) * sin(num(nu) * xx()) * exp(num(beta) * tt());
            let u = num(a1 / b) + num(1.0 / ((a1 - a2) * b)) * mode.clone();
            let v = num(1.0 / ((a2 - a1) * c)) * mode;
            (u, v, PoleLocus::None)
        }
    };

    Ok(ExactSolution {
        id,
        system: *system,
        u_t: u.diff("t"),
        u_x: u.diff("x"),
        u_xx: u.diff("x").diff("x"),
        v_t: v.diff("t"),
        v_x: v.diff("x"),
        v_xx: v.diff("x").diff("x"),
        u,
        v,
        poles,
        constants: constants.clone(),
        shift,
    })
}

/// The operator whose invariant surface `sol` lies on, with coefficients
/// translated by the same `(t0, x0)` shift as the solution; for the
/// competition preset the operator is carried through the sign
/// substitution `u = −b·U, v = −c·V`.
pub fn generating_operator(sol: &ExactSolution) -> Result<LinearOperator, SolutionError> {
    let desc = descriptor(sol.id);
    let mut op_constants = BTreeMap::new();
    if desc.generator == OperatorId::Op44 {
        op_constants.insert("alpha".to_string(), sol.constants["alpha"]);
    }
    let op = match sol.system {
        SystemId::Sys136 { lambda1, lambda2, a1, a2, b, c } => {
            let host = SystemId::Sys38 { lambda1, lambda2, a1, a2 };
            let inst = build_operator(desc.generator, &host, &op_constants)?;
            map_to_competition(&inst.operator, b, c)
        }
        _ => build_operator(desc.generator, &sol.system, &op_constants)?.operator,
    };
    let (t0, x0) = sol.shift;
    let translate = |e: &Expr| {
        let e = e.substitute("t", &shifted("t", t0));
        e.substitute("x", &shifted("x", x0))
    };
    Ok(LinearOperator {
        xi: translate(&op.xi),
        q1: translate(&op.q1),
        r1: translate(&op.r1),
        p1: translate(&op.p1),
        q2: translate(&op.q2),
        r2: translate(&op.r2),
        p2: translate(&op.p2),
    })
}

/// Identifiers of the ansatz→ODE reduction rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowId {
    /// Travelling wave in `u` with an exponentially seeded `v`.
    Row1,
    /// Constant mixing ansatz (both rates enter).
    Row2,
    /// One-sided transfer ansatz, `u` carried by the growing mode.
    Row3,
    /// One-sided transfer ansatz, `v` carried by the growing mode.
    Row4,
    /// Linear-in-time drift ansatz on the symmetric-rate preset.
    Row5,
    /// Time-weighted mixing ansatz on the symmetric-rate preset.
    Row6,
    /// λ-weighted mixing ansatz on the λ-scaled preset.
    Row7,
    /// One-sided transfer ansatz at rate `a`, `u` on the growing mode.
    Row8,
    /// One-sided transfer ansatz at rate `a`, `v` on the growing mode.
    Row9,
    /// Gauge-relaxed mixing ansatz (the `alpha` family).
    Row10,
}

impl RowId {
    pub const ALL: [RowId; 10] = [
        RowId::Row1,
        RowId::Row2,
        RowId::Row3,
        RowId::Row4,
        RowId::Row5,
        RowId::Row6,
        RowId::Row7,
        RowId::Row8,
        RowId::Row9,
        RowId::Row10,
    ];

    pub fn token(self) -> &'static str {
        match self {
            RowId::Row1 => "row1",
            RowId::Row2 => "row2",
            RowId::Row3 => "row3",
            RowId::Row4 => "row4",
            RowId::Row5 => "row5",
            RowId::Row6 => "row6",
            RowId::Row7 => "row7",
            RowId::Row8 => "row8",
            RowId::Row9 => "row9",
            RowId::Row10 => "row10",
        }
    }

    /// Accepts `rowN`, plain `N`, and the two named ansatz aliases.
    pub fn parse(text: &str) -> Option<RowId> {
        match text {
            "ansatz95" => return Some(RowId::Row2),
            "ansatz96" => return Some(RowId::Row5),
            _ => {}
        }
        let n = text.strip_prefix("row").unwrap_or(text);
        RowId::ALL
            .into_iter()
            .find(|row| row.token().strip_prefix("row") == Some(n))
    }

    pub fn host_name(self) -> &'static str {
        match self {
            RowId::Row1 => "sys36",
            RowId::Row2 | RowId::Row3 | RowId::Row4 => "sys38",
            RowId::Row5 | RowId::Row6 => "sys41",
            _ => "sys43",
        }
    }

    pub fn required_constants(self) -> &'static [&'static str] {
        match self {
            RowId::Row1 => &["C1", "C2", "C3", "C4"],
            RowId::Row10 => &["alpha"],
            _ => &[],
        }
    }

    /// The operator whose invariants this row parametrizes.
    pub fn operator(self) -> OperatorId {
        match self {
            RowId::Row1 => OperatorId::Op37,
            RowId::Row2 => OperatorId::Op39,
            RowId::Row3 => OperatorId::Op40,
            RowId::Row4 => OperatorId::Op40s,
            RowId::Row5 => OperatorId::Op39a,
            RowId::Row6 => OperatorId::Op42,
            RowId::Row7 => OperatorId::Op39b,
            RowId::Row8 => OperatorId::Op40a,
            RowId::Row9 => OperatorId::Op40b,
            RowId::Row10 => OperatorId::Op44,
        }
    }
}

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// State of the reduced ODE pair at one value of the reduced variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub phi1: f64,
    pub dphi1: f64,
    pub phi2: f64,
    pub dphi2: f64,
}

/// A reduction substitution `(u, v) = F(t, ω, φ1, φ2)` together with its
/// reduced right-hand sides.
///
/// `u` and `v` are expressions in the variables `t`, `w` (the reduced
/// spatial variable `ω = x − speed·t`), `phi1`, and `phi2`. For all rows
/// but the first, `speed = 0` and nothing depends on `w`.
#[derive(Debug, Clone)]
pub struct ReducedAnsatz {
    pub row: RowId,
    pub system: SystemId,
    pub u: Expr,
    pub v: Expr,
    /// Wave speed in `ω = x − speed·t`.
    pub speed: f64,
    pub constants: BTreeMap<String, f64>,
}

/// Build a reduction row on its host system.
pub fn build_ansatz(
    row: RowId,
    system: &SystemId,
    constants: &BTreeMap<String, f64>,
) -> Result<ReducedAnsatz, SolutionError> {
    if system.name() != row.host_name() {
        return Err(SolutionError::WrongRowHost {
            row: row.token(),
            expected: row.host_name(),
            got: system.name().to_string(),
        });
    }
    for key in row.required_constants() {
        if !constants.contains_key(*key) {
            return Err(SolutionError::MissingConstant(key, row.token()));
        }
    }
    for key in constants.keys() {
        if !row.required_constants().contains(&key.as_str()) {
            return Err(SolutionError::ForeignConstant(key.clone(), row.token()));
        }
    }
    let p = system.params();
    let delta = p.lambda1 - p.lambda2;
    let beta = (p.a1 - p.a2) / delta;
    let a = p.a1 / p.lambda1; // rate constant of the λ-scaled preset
    let (p1, p2) = (var("phi1"), var("phi2"));
    let t = var("t");
    let get = |key: &str| constants[key];

    let mut speed = 0.0;
    let (u, v) = match row {
        RowId::Row1 => {
            let (c1, c2, c3, c4) = (get("C1"), get("C2"), get("C3"), get("C4"));
            speed = c1;
            // Exponential gauge of the seeded component; the growth rate
            // balances the travelling-wave tilt against the u-kinetics.
            let gamma = 0.5 * delta * c1;
            let big_a =
                (p.lambda1 * p.lambda1 - p.lambda2 * p.lambda2) / (4.0 * p.lambda2) * c1 * c1
                    - p.a1 / p.lambda2;
            let growth = exp(num(p.a1 / p.lambda2) * t.clone());
            let kernel = exp(num(gamma) * var("w") + num(big_a) * t.clone());
            let u = p1.clone();
            let v = p2.clone() * exp(num(c2) * t)
                + kernel
                    * ((num(c3) + num(c4) * growth.clone()) * p1 + num(p.a1 * c4) * growth);
            (u, v)
        }
        RowId::Row2 => {
            let scale = num(1.0 / (p.a1 - p.a2));
            let mode = exp(num(beta) * t) * p2;
            let u = scale.clone()
                * (num(p.a1) * p1.clone() + num(p.a1 * p.a2) - mode.clone());
            let v = scale * (mode - num(p.a2) * p1 - num(p.a1 * p.a2));
            (u, v)
        }
        RowId::Row3 => {
            let mode = p2 * exp(num(beta) * t);
            (mode.clone(), p1 - mode)
        }
        RowId::Row4 => {
            let mode = p2 * exp(num(beta) * t);
            (p1 - mode.clone(), mode)
        }
        RowId::Row5 => {
            let a41 = p.a1; // symmetric-rate preset: a1 = a2
            let drift = num(a41 / delta) * (p1.clone() + num(a41)) * t;
            let u = p1 - p2.clone() - drift.clone();
            let v = p2 + drift;
            (u, v)
        }
        RowId::Row6 => {
            let scale = num(1.0 / delta);
            let u = scale.clone() * (num(p.lambda1) * p1.clone() - t.clone() * p2.clone());
            let v = scale * (t * p2 - num(p.lambda2) * p1);
            (u, v)
        }
        RowId::Row7 => {
            let scale = num(1.0 / (a * delta));
            let mode = exp(num(a) * t) * p2;
            let u = scale.clone()
                * (num(a * p.lambda1) * p1.clone() + num(a * a * p.lambda1 * p.lambda2)
                    - mode.clone());
            let v = scale
                * (mode - num(a * p.lambda2) * p1 - num(a * a * p.lambda1 * p.lambda2));
            (u, v)
        }
        RowId::Row8 => {
            let mode = exp(num(a) * t) * p2;
            (mode.clone(), p1 - mode)
        }
        RowId::Row9 => {
            let mode = exp(num(a) * t) * p2;
            (p1 - mode.clone(), mode)
        }
        RowId::Row10 => {
            let alpha = get("alpha");
            let gauge = num(1.0) - num(alpha * delta) * exp(num(a) * t);
            let scale = num(1.0 / delta);
            let u = scale.clone()
                * (num(p.lambda1) * p1.clone() + num(a * p.lambda1 * p.lambda2)
                    - p2.clone() * gauge.clone());
            let v = scale
                * (p2 * gauge - num(p.lambda2) * p1 - num(a * p.lambda1 * p.lambda2));
            (u, v)
        }
    };

    Ok(ReducedAnsatz {
        row,
        system: *system,
        u,
        v,
        speed,
        constants: constants.clone(),
    })
}

impl ReducedAnsatz {
    /// Right-hand sides `(φ1'', φ2'')` of the reduced ODE pair.
    pub fn rhs(&self, s: &ReducedState) -> (f64, f64) {
        let p = self.system.params();
        let delta = p.lambda1 - p.lambda2;
        // Coupling constant of the seeded mode on the unequal-rate preset.
        let k_rate = (p.a2 * p.lambda1 - p.a1 * p.lambda2) / delta;
        let a = p.a1 / p.lambda1;
        let (f1, f2) = (s.phi1, s.phi2);
        match self.row {
            RowId::Row1 => {
                let c1 = self.constants["C1"];
                let c2 = self.constants["C2"];
                (
                    -c1 * p.lambda1 * s.dphi1 - (p.a1 + f1) * f1,
                    -c1 * p.lambda2 * s.dphi2 - f2 * (f1 - c2 * p.lambda2),
                )
            }
            RowId::Row2 => (
                -(f1 * f1 + (p.a1 + p.a2) * f1 + p.a1 * p.a2),
                -(k_rate + f1) * f2,
            ),
            RowId::Row3 => (-(f1 * f1 + p.a2 * f1), -(k_rate + f1) * f2),
            RowId::Row4 => (-(f1 * f1 + p.a1 * f1), -(k_rate + f1) * f2),
            RowId::Row5 => {
                let a41 = p.a1;
                (
                    -(a41 + f1) * (a41 + f1),
                    -(f2 - a41 * p.lambda2 / delta) * (a41 + f1),
                )
            }
            RowId::Row6 => {
                let a41 = p.a1;
                (-f2 - f1 * (a41 + f1), -f2 * (a41 + f1))
            }
            RowId::Row7 | RowId::Row10 => {
                let mut d1 = -(f1 * f1
                    + a * (p.lambda1 + p.lambda2) * f1
                    + a * a * p.lambda1 * p.lambda2);
                if self.row == RowId::Row10 {
                    d1 += a * f2;
                }
                (d1, -f1 * f2)
            }
            RowId::Row8 => (-(f1 * f1 + a * p.lambda2 * f1), -f1 * f2),
            RowId::Row9 => (-(f1 * f1 + a * p.lambda1 * f1), -f1 * f2),
        }
    }

    /// Field values `(u, v)` for a profile state at `(t, x)`.
    pub fn fields(&self, t: f64, x: f64, s: &ReducedState) -> Result<(f64, f64), SolutionError> {
        let w = x - self.speed * t;
        let binds = [("t", t), ("w", w), ("phi1", s.phi1), ("phi2", s.phi2)];
        let u = self.u.eval(&binds).map_err(SolutionError::Eval)?;
        let v = self.v.eval(&binds).map_err(SolutionError::Eval)?;
        Ok((u, v))
    }
}

/// Identifiers of the explicit profile functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    /// `(3/2)(a1−a2)(1 − tanh²(kx))`, regular pulse (`a1 > a2`).
    Phi111,
    /// `(3/2)(a1−a2)(1 − coth²(kx))`, singular at `x = 0`.
    Phi112,
    /// `(3/2)(a1−a2)(1 + tan²(k'x))`, periodic poles (`a1 < a2`).
    Phi113,
    /// `cosh³(kx)`, seeded mode for the `9/5` diffusivity ratio.
    Phi115,
    /// `sinh(kx)·cosh³(kx)`, seeded mode for the `4/3` ratio.
    Phi117,
    /// `(3/2)(−aλ2)(1 − tanh²(κx))` on the λ-scaled preset (`a < 0`).
    Phi122,
}

impl PhiKind {
    pub const ALL: [PhiKind; 6] = [
        PhiKind::Phi111,
        PhiKind::Phi112,
        PhiKind::Phi113,
        PhiKind::Phi115,
        PhiKind::Phi117,
        PhiKind::Phi122,
    ];

    pub fn token(self) -> &'static str {
        match self {
            PhiKind::Phi111 => "phi111",
            PhiKind::Phi112 => "phi112",
            PhiKind::Phi113 => "phi113",
            PhiKind::Phi115 => "phi115",
            PhiKind::Phi117 => "phi117",
            PhiKind::Phi122 => "phi122",
        }
    }

    pub fn parse(text: &str) -> Option<PhiKind> {
        PhiKind::ALL.into_iter().find(|k| k.token() == text)
    }
}

impl fmt::Display for PhiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The profile as an expression in `x`, on a given parameter set.
pub fn phi_profile(kind: PhiKind, p: &crate::model::DlvParams) -> Result<Expr, SolutionError> {
    let name = kind.token();
    match kind {
        PhiKind::Phi111 | PhiKind::Phi112 | PhiKind::Phi115 | PhiKind::Phi117 => {
            require(name, p.a1 > p.a2, "needs a1 > a2")?;
            let k = 0.5 * (p.a1 - p.a2).sqrt();
            let arg = || num(k) * var("x");
            Ok(match kind {
                PhiKind::Phi111 => {
                    num(1.5 * (p.a1 - p.a2)) * (num(1.0) - pow(tanh(arg()), 2.0))
                }
                PhiKind::Phi112 => {
                    num(1.5 * (p.a1 - p.a2)) * (num(1.0) - pow(coth(arg()), 2.0))
                }
                PhiKind::Phi115 => pow(cosh(arg()), 3.0),
                _ => sinh(arg()) * pow(cosh(arg()), 3.0),
            })
        }
        PhiKind::Phi113 => {
            require(name, p.a1 < p.a2, "needs a1 < a2")?;
            let k = 0.5 * (p.a2 - p.a1).sqrt();
            Ok(num(1.5 * (p.a1 - p.a2)) * (num(1.0) + pow(tan(num(k) * var("x")), 2.0)))
        }
        PhiKind::Phi122 => {
            let a = p.a1 / p.lambda1;
            require(name, a < 0.0, "needs a < 0")?;
            let kappa = 0.5 * (-a * p.lambda2).sqrt();
            Ok(num(-1.5 * a * p.lambda2)
                * (num(1.0) - pow(tanh(num(kappa) * var("x")), 2.0)))
        }
    }
}

/// Residual of the profile's defining ODE, as an expression in `x`:
///
/// * the three background profiles against `φ'' + φ² + (a2 − a1)φ`,
/// * the two seeded modes against their variable-coefficient companion
///   `φ'' + φ(a1 − a2)·((λ1 − 3λ2)/(2(λ1 − λ2)) − (3/2)tanh²(kx))`
///   (which vanishes only under the pinned diffusivity ratio),
/// * the λ-scaled pulse against `φ'' + φ² + aλ2·φ`.
pub fn phi_ode_residual(
    kind: PhiKind,
    p: &crate::model::DlvParams,
) -> Result<Expr, SolutionError> {
    let phi = phi_profile(kind, p)?;
    let dd = phi.diff("x").diff("x");
    Ok(match kind {
        PhiKind::Phi111 | PhiKind::Phi112 | PhiKind::Phi113 => {
            dd + pow(phi.clone(), 2.0) + num(p.a2 - p.a1) * phi
        }
        PhiKind::Phi115 | PhiKind::Phi117 => {
            let k = 0.5 * (p.a1 - p.a2).sqrt();
            let bracket = num((p.lambda1 - 3.0 * p.lambda2) / (2.0 * (p.lambda1 - p.lambda2)))
                - num(1.5) * pow(tanh(num(k) * var("x")), 2.0);
            dd + phi * num(p.a1 - p.a2) * bracket
        }
        PhiKind::Phi122 => {
            let a = p.a1 / p.lambda1;
            dd + pow(phi.clone(), 2.0) + num(a * p.lambda2) * phi
        }
    })
}

/// Residual of the conserved first integral `(φ')² + (2/3)φ³ − (a1−a2)φ²`
/// (integration constant zero); defined for the three background profiles.
pub fn phi_first_integral_residual(
    kind: PhiKind,
    p: &crate::model::DlvParams,
) -> Result<Option<Expr>, SolutionError> {
    match kind {
        PhiKind::Phi111 | PhiKind::Phi112 | PhiKind::Phi113 => {
            let phi = phi_profile(kind, p)?;
            let d = phi.diff("x");
            Ok(Some(
                pow(d, 2.0) + num(2.0 / 3.0) * pow(phi.clone(), 3.0)
                    - num(p.a1 - p.a2) * pow(phi, 2.0),
            ))
        }
        _ => Ok(None),
    }
}
