//! Parameter sets, named system presets, grids, and scenario configuration.
//!
//! The family of systems handled by this crate is
//!
//! ```text
//! λ1·u_t = u_xx + u·(a1 + b1·u + c1·v)
//! λ2·v_t = v_xx + v·(a2 + b2·u + c2·v)
//! ```
//!
//! with `λ1 ≠ λ2` throughout (the equal-diffusivity case admits none of the
//! reductions this crate checks). Named presets pin the coefficient patterns
//! that admit the cataloged operators; [`SystemId::params`] expands a preset
//! to its full coefficient set, and [`DlvParams::violations`] checks the
//! structural requirements (coupled, nonlinear, positive λ).

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;

/// Full coefficient set of the reaction-diffusion system.
///
/// `lambda1`, `lambda2` scale the time derivatives (inverse diffusivities
/// after rescaling space); `a` are linear kinetic rates; `b`, `c` are the
/// interaction coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlvParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
}

/// A named structural violation of the model assumptions.
///
/// Violations are data, not errors: callers decide which ones are fatal
/// (`--allow-nonphysical` waives the λ-positivity ones, nothing waives
/// `Uncoupled`/`LinearSystem`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// `lambda1 <= 0`
    Lambda1NotPositive,
    /// `lambda2 <= 0`
    Lambda2NotPositive,
    /// `b2 = c1 = 0`: the equations do not talk to each other.
    Uncoupled,
    /// `b1 = b2 = c1 = c2 = 0`: no quadratic kinetics at all.
    LinearSystem,
}

impl Violation {
    /// λ-positivity is a modeling choice (negative λ flips parabolicity);
    /// the other violations break the structure the toolkit relies on.
    pub fn is_physicality(self) -> bool {
        matches!(self, Violation::Lambda1NotPositive | Violation::Lambda2NotPositive)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Violation::Lambda1NotPositive => "lambda1 must be positive",
            Violation::Lambda2NotPositive => "lambda2 must be positive",
            Violation::Uncoupled => "uncoupled (b2 and c1 both zero)",
            Violation::LinearSystem => "linear system (b1, b2, c1, c2 all zero)",
        };
        f.write_str(s)
    }
}

/// Errors from model-level construction and validation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("degenerate parameters: lambda1 = lambda2")]
    EqualLambdas,
    #[error("parameter violations: {}", format_violations(.0))]
    Violations(Vec<Violation>),
    #[error("unknown system id `{0}` (expected general, sys36, sys38, sys41, sys43 or sys136)")]
    UnknownSystem(String),
    #[error("missing parameter `{0}` for system `{1}`")]
    MissingParam(&'static str, &'static str),
    #[error("system `{1}` does not use parameter `{0}`")]
    ForeignParam(String, &'static str),
    #[error("invalid grid: {0}")]
    BadGrid(&'static str),
    #[error("invalid boundary condition `{0}`: expected `from_exact`, `neumann_zero` or `dirichlet:UL,VL,UR,VR`")]
    BadBc(String),
    #[error("unknown scheme `{0}` (expected imex_cn or explicit_rk4)")]
    BadScheme(String),
    #[error("config error: {0}")]
    BadConfig(String),
}

fn format_violations(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl DlvParams {
    /// Every violated structural invariant, by name. Empty means valid.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.lambda1 > 0.0) {
            out.push(Violation::Lambda1NotPositive);
        }
        if !(self.lambda2 > 0.0) {
            out.push(Violation::Lambda2NotPositive);
        }
        if self.b2 == 0.0 && self.c1 == 0.0 {
            out.push(Violation::Uncoupled);
        }
        if self.b1 == 0.0 && self.b2 == 0.0 && self.c1 == 0.0 && self.c2 == 0.0 {
            out.push(Violation::LinearSystem);
        }
        out
    }

    /// Validate, optionally waiving the λ-positivity requirement.
    pub fn validate(&self, allow_nonphysical: bool) -> Result<(), ModelError> {
        let vs: Vec<Violation> = self
            .violations()
            .into_iter()
            .filter(|v| !(allow_nonphysical && v.is_physicality()))
            .collect();
        if vs.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Violations(vs))
        }
    }

    /// `β = (a1 − a2)/(λ1 − λ2)`, the decay/growth rate that controls the
    /// exponential factors throughout the catalog.
    pub fn beta(&self) -> Result<f64, ModelError> {
        if self.lambda1 == self.lambda2 {
            return Err(ModelError::EqualLambdas);
        }
        Ok((self.a1 - self.a2) / (self.lambda1 - self.lambda2))
    }
}

/// Which letters label the two fields in human-facing output.
///
/// The competition preset is stored through the sign substitution
/// `u = −b·U`, `v = −c·V`; its natural variables are the population
/// densities `(U, V)`, everything else speaks `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSemantics {
    UV,
    CompetitionUV,
}

impl FieldSemantics {
    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            FieldSemantics::UV => ("u", "v"),
            FieldSemantics::CompetitionUV => ("U", "V"),
        }
    }
}

/// A system preset together with its free parameters.
///
/// Each variant expands deterministically to one [`DlvParams`]:
///
/// | id      | expansion |
/// |---------|-----------|
/// | sys36   | `b1 = 1`, `c1 = 0`, `a2 = 0`, `b2 = 1`, `c2 = 0` |
/// | sys38   | `b1 = b2 = c1 = c2 = 1` |
/// | sys41   | sys38 with `a1 = a2 = a` |
/// | sys43   | sys38 with `a1 = a·λ1`, `a2 = a·λ2` |
/// | sys136  | `b1 = b2 = −b`, `c1 = c2 = −c` (competition signs) |
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemId {
    General(DlvParams),
    Sys36 { lambda1: f64, lambda2: f64, a1: f64 },
    Sys38 { lambda1: f64, lambda2: f64, a1: f64, a2: f64 },
    Sys41 { lambda1: f64, lambda2: f64, a: f64 },
    Sys43 { lambda1: f64, lambda2: f64, a: f64 },
    Sys136 { lambda1: f64, lambda2: f64, a1: f64, a2: f64, b: f64, c: f64 },
}

impl SystemId {
    pub fn name(&self) -> &'static str {
        match self {
            SystemId::General(_) => "general",
            SystemId::Sys36 { .. } => "sys36",
            SystemId::Sys38 { .. } => "sys38",
            SystemId::Sys41 { .. } => "sys41",
            SystemId::Sys43 { .. } => "sys43",
            SystemId::Sys136 { .. } => "sys136",
        }
    }

    /// Expand to the full coefficient set. Deterministic and idempotent.
    pub fn params(&self) -> DlvParams {
        match *self {
            SystemId::General(p) => p,
            SystemId::Sys36 { lambda1, lambda2, a1 } => DlvParams {
                lambda1,
                lambda2,
                a1,
                a2: 0.0,
                b1: 1.0,
                b2: 1.0,
                c1: 0.0,
                c2: 0.0,
            },
            SystemId::Sys38 { lambda1, lambda2, a1, a2 } => DlvParams {
                lambda1,
                lambda2,
                a1,
                a2,
                b1: 1.0,
                b2: 1.0,
                c1: 1.0,
                c2: 1.0,
            },
            SystemId::Sys41 { lambda1, lambda2, a } => DlvParams {
                lambda1,
                lambda2,
                a1: a,
                a2: a,
                b1: 1.0,
                b2: 1.0,
                c1: 1.0,
                c2: 1.0,
            },
            SystemId::Sys43 { lambda1, lambda2, a } => DlvParams {
                lambda1,
                lambda2,
                a1: a * lambda1,
                a2: a * lambda2,
                b1: 1.0,
                b2: 1.0,
                c1: 1.0,
                c2: 1.0,
            },
            SystemId::Sys136 { lambda1, lambda2, a1, a2, b, c } => DlvParams {
                lambda1,
                lambda2,
                a1,
                a2,
                b1: -b,
                b2: -b,
                c1: -c,
                c2: -c,
            },
        }
    }

    pub fn field_semantics(&self) -> FieldSemantics {
        match self {
            SystemId::Sys136 { .. } => FieldSemantics::CompetitionUV,
            _ => FieldSemantics::UV,
        }
    }

    /// Build a preset from a name and a key→value table (config or flags).
    ///
    /// Unknown or missing keys are errors: a scenario that silently ignores
    /// a parameter is worse than one that refuses to run.
    pub fn from_table(name: &str, table: &BTreeMap<String, f64>) -> Result<SystemId, ModelError> {
        let get = |key: &'static str, sys: &'static str| -> Result<f64, ModelError> {
            table
                .get(key)
                .copied()
                .ok_or(ModelError::MissingParam(key, sys))
        };
        let allow = |keys: &[&str], sys: &'static str| -> Result<(), ModelError> {
            for k in table.keys() {
                if !keys.contains(&k.as_str()) {
                    return Err(ModelError::ForeignParam(k.clone(), sys));
                }
            }
            Ok(())
        };
        match name {
            "general" => {
                allow(
                    &["lambda1", "lambda2", "a1", "a2", "b1", "b2", "c1", "c2"],
                    "general",
                )?;
                Ok(SystemId::General(DlvParams {
                    lambda1: get("lambda1", "general")?,
                    lambda2: get("lambda2", "general")?,
                    a1: get("a1", "general")?,
                    a2: get("a2", "general")?,
                    b1: get("b1", "general")?,
                    b2: get("b2", "general")?,
                    c1: get("c1", "general")?,
                    c2: get("c2", "general")?,
                }))
            }
            "sys36" => {
                allow(&["lambda1", "lambda2", "a1"], "sys36")?;
                Ok(SystemId::Sys36 {
                    lambda1: get("lambda1", "sys36")?,
                    lambda2: get("lambda2", "sys36")?,
                    a1: get("a1", "sys36")?,
                })
            }
            "sys38" => {
                allow(&["lambda1", "lambda2", "a1", "a2"], "sys38")?;
                Ok(SystemId::Sys38 {
                    lambda1: get("lambda1", "sys38")?,
                    lambda2: get("lambda2", "sys38")?,
                    a1: get("a1", "sys38")?,
                    a2: get("a2", "sys38")?,
                })
            }
            "sys41" => {
                allow(&["lambda1", "lambda2", "a"], "sys41")?;
                Ok(SystemId::Sys41 {
                    lambda1: get("lambda1", "sys41")?,
                    lambda2: get("lambda2", "sys41")?,
                    a: get("a", "sys41")?,
                })
            }
            "sys43" => {
                allow(&["lambda1", "lambda2", "a"], "sys43")?;
                Ok(SystemId::Sys43 {
                    lambda1: get("lambda1", "sys43")?,
                    lambda2: get("lambda2", "sys43")?,
                    a: get("a", "sys43")?,
                })
            }
            "sys136" => {
                allow(&["lambda1", "lambda2", "a1", "a2", "b", "c"], "sys136")?;
                Ok(SystemId::Sys136 {
                    lambda1: get("lambda1", "sys136")?,
                    lambda2: get("lambda2", "sys136")?,
                    a1: get("a1", "sys136")?,
                    a2: get("a2", "sys136")?,
                    b: get("b", "sys136")?,
                    c: get("c", "sys136")?,
                })
            }
            other => Err(ModelError::UnknownSystem(other.to_string())),
        }
    }
}

/// A uniform space-time grid: `nt` time levels on `[t0, t1]` crossed with
/// `nx` space nodes on `[x0, x1]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct GridSpec {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
    pub nt: usize,
    pub nx: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.t1 > self.t0) {
            return Err(ModelError::BadGrid("t1 must exceed t0"));
        }
        if !(self.x1 > self.x0) {
            return Err(ModelError::BadGrid("x1 must exceed x0"));
        }
        if self.nt < 2 {
            return Err(ModelError::BadGrid("nt must be at least 2"));
        }
        if self.nx < 3 {
            return Err(ModelError::BadGrid("nx must be at least 3"));
        }
        if !(self.t0.is_finite() && self.t1.is_finite() && self.x0.is_finite() && self.x1.is_finite())
        {
            return Err(ModelError::BadGrid("bounds must be finite"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.nt - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + self.dt() * i as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + self.dx() * j as f64
    }
}

/// Discrete carrier of the two fields over a [`GridSpec`], row-major in
/// time: entry `(i, j)` is time level `i`, space node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl GridField {
    pub fn zeros(spec: GridSpec) -> GridField {
        let n = spec.nt * spec.nx;
        GridField {
            spec,
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.spec.nt && j < self.spec.nx);
        i * self.spec.nx + j
    }

    pub fn u_at(&self, i: usize, j: usize) -> f64 {
        self.u[self.idx(i, j)]
    }

    pub fn v_at(&self, i: usize, j: usize) -> f64 {
        self.v[self.idx(i, j)]
    }

    pub fn all_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

/// Boundary condition selector as written in config files.
#[derive(Debug, Clone, PartialEq)]
pub enum BcSpec {
    /// Evaluate the scenario's exact family on the boundary each step.
    FromExact,
    /// Homogeneous Neumann (zero flux) on both sides.
    NeumannZero,
    /// Constant Dirichlet data `(u_left, v_left)` / `(u_right, v_right)`.
    Dirichlet { left: (f64, f64), right: (f64, f64) },
}

impl BcSpec {
    pub fn parse(text: &str) -> Result<BcSpec, ModelError> {
        match text {
            "from_exact" => return Ok(BcSpec::FromExact),
            "neumann_zero" => return Ok(BcSpec::NeumannZero),
            _ => {}
        }
        if let Some(rest) = text.strip_prefix("dirichlet:") {
            let vals: Result<Vec<f64>, _> =
                rest.split(',').map(|s| s.trim().parse::<f64>()).collect();
            if let Ok(vals) = vals {
                if vals.len() == 4 {
                    return Ok(BcSpec::Dirichlet {
                        left: (vals[0], vals[1]),
                        right: (vals[2], vals[3]),
                    });
                }
            }
        }
        Err(ModelError::BadBc(text.to_string()))
    }
}

/// Time-stepping scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Crank-Nicolson diffusion, explicit reaction.
    ImexCn,
    /// Classical RK4 on the full semi-discrete system (CFL-limited).
    ExplicitRk4,
}

impl SchemeKind {
    pub fn parse(text: &str) -> Result<SchemeKind, ModelError> {
        match text {
            "imex_cn" => Ok(SchemeKind::ImexCn),
            "explicit_rk4" => Ok(SchemeKind::ExplicitRk4),
            other => Err(ModelError::BadScheme(other.to_string())),
        }
    }
}

/// Scenario configuration file contents.
///
/// All sections are optional at parse time; each command demands the ones
/// it needs. Keys: `system`, `params.{...}`, `grid.{t0,t1,x0,x1,nt,nx}`,
/// `family`, `family_params.{...}`, `bc`, `scheme`, plus optional `dt` and
/// `seed` overrides.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub grid: Option<GridSpec>,
    pub family: Option<String>,
    #[serde(default)]
    pub family_params: BTreeMap<String, f64>,
    pub bc: Option<String>,
    pub scheme: Option<String>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ModelError> {
        toml::from_str(text).map_err(|e| ModelError::BadConfig(e.to_string()))
    }

    pub fn system_id(&self) -> Result<SystemId, ModelError> {
        let name = self
            .system
            .as_deref()
            .ok_or_else(|| ModelError::BadConfig("missing `system` key".into()))?;
        SystemId::from_table(name, &self.params)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, ModelError> {
        let g = self
            .grid
            .ok_or_else(|| ModelError::BadConfig("missing `grid` section".into()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn bc_spec(&self) -> Result<BcSpec, ModelError> {
        match &self.bc {
            Some(text) => BcSpec::parse(text),
            None => Ok(BcSpec::FromExact),
        }
    }

    pub fn scheme_kind(&self) -> Result<SchemeKind, ModelError> {
        match &self.scheme {
            Some(text) => SchemeKind::parse(text),
            None => Ok(SchemeKind::ImexCn),
        }
    }
}
