//! Symbolic expression kernel.
//!
//! A small tree calculus over `f64` scalars: enough to transcribe every
//! closed-form solution and operator coefficient in the catalog, take exact
//! analytic derivatives, and evaluate with pole detection. Subtrees are
//! reference-counted so cloning during differentiation is cheap.
//!
//! Exponents are restricted to numeric constants (`x^2`, `w^(-1.5)`): the
//! catalog never needs symbolic exponents and the restriction keeps the
//! derivative rule exact. General powers are written through `exp`/`ln`-free
//! combinations (`cosh(k*x)^3` etc.), which is all the source material uses.
//!
//! Construction goes through smart constructors (`add`, `mul`, ...) or the
//! overloaded operators. They fold constants and drop identity elements
//! (`0 + e`, `1 * e`, `e^1`), so derivative output stays readable and cheap
//! to evaluate, but they perform no deeper rewriting: two expressions are
//! "the same" only up to these local folds, and identity checking is done
//! numerically (see [`identity_zero`]).

mod identity;
mod parse;

pub use identity::{identity_zero, IdentityError, IdentityOutcome, DEFAULT_POINTS, DEFAULT_REL_TOL};
pub use parse::ParseError;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Unary analytic functions understood by the kernel.
///
/// `coth` is accepted by the parser but immediately rewritten as
/// `cosh/sinh`, so it never appears as a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryFn {
    Exp,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Exp => "exp",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Sinh => "sinh",
            UnaryFn::Cosh => "cosh",
            UnaryFn::Tanh => "tanh",
            UnaryFn::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            UnaryFn::Exp => x.exp(),
            UnaryFn::Sin => x.sin(),
            UnaryFn::Cos => x.cos(),
            UnaryFn::Tan => x.tan(),
            UnaryFn::Sinh => x.sinh(),
            UnaryFn::Cosh => x.cosh(),
            UnaryFn::Tanh => x.tanh(),
            UnaryFn::Sqrt => x.sqrt(),
        }
    }
}

/// A scalar expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Arc<str>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    /// Numeric-exponent power `base^c`.
    Pow(Arc<Expr>, f64),
    Neg(Arc<Expr>),
    Unary(UnaryFn, Arc<Expr>),
}

/// Errors from [`Expr::eval`] and friends.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    /// A variable had no binding.
    #[error("unbound variable `{0}`")]
    Unbound(String),
    /// An intermediate value was NaN or infinite (pole, overflow, 0/0, ...).
    #[error("non-finite value while evaluating `{0}`")]
    NonFinite(String),
}

/// Numeric constant.
pub fn num(c: f64) -> Expr {
    Expr::Const(c)
}

/// Named variable.
pub fn var(name: &str) -> Expr {
    Expr::Var(Arc::from(name))
}

// Constant folds must never manufacture a non-finite literal: a fold that
// would overflow or produce NaN keeps the node instead, so the pole still
// surfaces as EvalError::NonFinite with its originating subexpression.
fn finite(c: f64) -> Option<Expr> {
    c.is_finite().then_some(Expr::Const(c))
}

/// Sum with identity/constant folding.
pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => {
            if let Some(e) = finite(x + y) {
                return e;
            }
        }
        (Expr::Const(x), _) if *x == 0.0 => return b,
        (_, Expr::Const(y)) if *y == 0.0 => return a,
        _ => {}
    }
    Expr::Add(Arc::new(a), Arc::new(b))
}

/// Difference with identity/constant folding.
pub fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => {
            if let Some(e) = finite(x - y) {
                return e;
            }
        }
        (_, Expr::Const(y)) if *y == 0.0 => return a,
        (Expr::Const(x), _) if *x == 0.0 => return neg(b),
        _ => {}
    }
    Expr::Sub(Arc::new(a), Arc::new(b))
}

/// Product with identity/zero/constant folding.
pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => {
            if let Some(e) = finite(x * y) {
                return e;
            }
        }
        (Expr::Const(x), _) if *x == 0.0 => return Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 0.0 => return Expr::Const(0.0),
        (Expr::Const(x), _) if *x == 1.0 => return b,
        (_, Expr::Const(y)) if *y == 1.0 => return a,
        _ => {}
    }
    Expr::Mul(Arc::new(a), Arc::new(b))
}

/// Quotient with identity/constant folding. `0/0` is left intact and
/// surfaces as [`EvalError::NonFinite`] at evaluation time.
pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => {
            if let Some(e) = finite(x / y) {
                return e;
            }
        }
        (Expr::Const(x), _) if *x == 0.0 => return Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 1.0 => return a,
        _ => {}
    }
    Expr::Div(Arc::new(a), Arc::new(b))
}

/// Negation with folding (`--e` collapses).
pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => inner.as_ref().clone(),
        _ => Expr::Neg(Arc::new(a)),
    }
}

/// Numeric-exponent power with folding (`e^0 = 1`, `e^1 = e`).
pub fn pow(base: Expr, exponent: f64) -> Expr {
    if exponent == 0.0 {
        return Expr::Const(1.0);
    }
    if exponent == 1.0 {
        return base;
    }
    if let Expr::Const(x) = base {
        if let Some(e) = finite(x.powf(exponent)) {
            return e;
        }
    }
    Expr::Pow(Arc::new(base), exponent)
}

/// Unary function application with constant folding.
pub fn unary(f: UnaryFn, a: Expr) -> Expr {
    if let Expr::Const(x) = a {
        if let Some(e) = finite(f.apply(x)) {
            return e;
        }
    }
    Expr::Unary(f, Arc::new(a))
}

pub fn exp(a: Expr) -> Expr {
    unary(UnaryFn::Exp, a)
}
pub fn sin(a: Expr) -> Expr {
    unary(UnaryFn::Sin, a)
}
pub fn cos(a: Expr) -> Expr {
    unary(UnaryFn::Cos, a)
}
pub fn tan(a: Expr) -> Expr {
    unary(UnaryFn::Tan, a)
}
pub fn sinh(a: Expr) -> Expr {
    unary(UnaryFn::Sinh, a)
}
pub fn cosh(a: Expr) -> Expr {
    unary(UnaryFn::Cosh, a)
}
pub fn tanh(a: Expr) -> Expr {
    unary(UnaryFn::Tanh, a)
}
pub fn sqrt(a: Expr) -> Expr {
    unary(UnaryFn::Sqrt, a)
}

/// `cosh(a)/sinh(a)`; provided because the catalog uses `coth` freely.
pub fn coth(a: Expr) -> Expr {
    div(cosh(a.clone()), sinh(a))
}

impl Expr {
    /// Exact partial derivative with respect to `name`.
    pub fn diff(&self, name: &str) -> Expr {
        match self {
            Expr::Const(_) => num(0.0),
            Expr::Var(v) => {
                if v.as_ref() == name {
                    num(1.0)
                } else {
                    num(0.0)
                }
            }
            Expr::Add(a, b) => add(a.diff(name), b.diff(name)),
            Expr::Sub(a, b) => sub(a.diff(name), b.diff(name)),
            Expr::Mul(a, b) => add(
                mul(a.diff(name), b.as_ref().clone()),
                mul(a.as_ref().clone(), b.diff(name)),
            ),
            Expr::Div(a, b) => {
                // (a/b)' = a'/b - a·b'/b²
                sub(
                    div(a.diff(name), b.as_ref().clone()),
                    div(
                        mul(a.as_ref().clone(), b.diff(name)),
                        pow(b.as_ref().clone(), 2.0),
                    ),
                )
            }
            Expr::Pow(base, c) => mul(
                mul(num(*c), pow(base.as_ref().clone(), c - 1.0)),
                base.diff(name),
            ),
            Expr::Neg(a) => neg(a.diff(name)),
            Expr::Unary(f, a) => {
                let inner = a.as_ref().clone();
                let outer = match f {
                    UnaryFn::Exp => exp(inner),
                    UnaryFn::Sin => cos(inner),
                    UnaryFn::Cos => neg(sin(inner)),
                    // tan' = 1 + tan²  (valid on every branch)
                    UnaryFn::Tan => add(num(1.0), pow(tan(inner), 2.0)),
                    UnaryFn::Sinh => cosh(inner),
                    UnaryFn::Cosh => sinh(inner),
                    UnaryFn::Tanh => sub(num(1.0), pow(tanh(inner), 2.0)),
                    UnaryFn::Sqrt => div(num(0.5), sqrt(inner)),
                };
                mul(outer, a.diff(name))
            }
        }
    }

    /// Evaluate under the given bindings.
    pub fn eval(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        self.eval_scaled(bindings).map(|(v, _)| v)
    }

    /// Evaluate and also report the largest intermediate magnitude seen.
    ///
    /// The scale is what the randomized identity test conditions its
    /// tolerance on: a residual of `1e-4` means nothing if the terms that
    /// cancelled were `1e14`.
    pub fn eval_scaled(&self, bindings: &[(&str, f64)]) -> Result<(f64, f64), EvalError> {
        let mut scale = 0.0_f64;
        let v = self.eval_inner(bindings, &mut scale)?;
        Ok((v, scale))
    }

    fn eval_inner(&self, bindings: &[(&str, f64)], scale: &mut f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(name) => bindings
                .iter()
                .find(|(n, _)| *n == name.as_ref())
                .map(|(_, v)| *v)
                .ok_or_else(|| EvalError::Unbound(name.to_string()))?,
            Expr::Add(a, b) => a.eval_inner(bindings, scale)? + b.eval_inner(bindings, scale)?,
            Expr::Sub(a, b) => a.eval_inner(bindings, scale)? - b.eval_inner(bindings, scale)?,
            Expr::Mul(a, b) => a.eval_inner(bindings, scale)? * b.eval_inner(bindings, scale)?,
            Expr::Div(a, b) => a.eval_inner(bindings, scale)? / b.eval_inner(bindings, scale)?,
            Expr::Pow(base, c) => base.eval_inner(bindings, scale)?.powf(*c),
            Expr::Neg(a) => -a.eval_inner(bindings, scale)?,
            Expr::Unary(f, a) => f.apply(a.eval_inner(bindings, scale)?),
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite(self.to_string()));
        }
        *scale = scale.max(v.abs());
        Ok(v)
    }

    /// Replace every occurrence of variable `name` by `replacement`.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => {
                if v.as_ref() == name {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            Expr::Add(a, b) => add(a.substitute(name, replacement), b.substitute(name, replacement)),
            Expr::Sub(a, b) => sub(a.substitute(name, replacement), b.substitute(name, replacement)),
            Expr::Mul(a, b) => mul(a.substitute(name, replacement), b.substitute(name, replacement)),
            Expr::Div(a, b) => div(a.substitute(name, replacement), b.substitute(name, replacement)),
            Expr::Pow(base, c) => pow(base.substitute(name, replacement), *c),
            Expr::Neg(a) => neg(a.substitute(name, replacement)),
            Expr::Unary(f, a) => unary(*f, a.substitute(name, replacement)),
        }
    }

    /// The set of free variables, sorted.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.to_string());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Unary(_, a) => a.collect_vars(out),
        }
    }

    /// `Some(c)` if the expression contains no variables.
    pub fn as_const(&self) -> Option<f64> {
        if let Expr::Const(c) = self {
            return Some(*c);
        }
        if self.vars().is_empty() {
            return self.eval(&[]).ok();
        }
        None
    }

    /// Parse from text, inferring variables from the identifiers present.
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse::parse(text, None)
    }

    /// Parse from text, rejecting identifiers outside `allowed`.
    pub fn parse_with_vars(text: &str, allowed: &[&str]) -> Result<Expr, ParseError> {
        parse::parse(text, Some(allowed))
    }

    /// Precedence for the printer: higher binds tighter.
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Neg(..) => 2,
            Expr::Mul(..) | Expr::Div(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 => 2, // prints with a leading minus
            _ => 5,
        }
    }
}

/// Print a subexpression, parenthesizing when its precedence is below `min`.
fn fmt_child(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c == c.trunc() && c.abs() < 1e15 {
        write!(f, "{c:.1}")
    } else {
        // Round-trippable shortest representation.
        write!(f, "{c}")
    }
}

impl fmt::Display for Expr {
    /// Minimal-parentheses rendering that re-parses to an identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Add(a, b) => {
                fmt_child(a, 1, f)?;
                write!(f, " + ")?;
                fmt_child(b, 2, f)
            }
            Expr::Sub(a, b) => {
                fmt_child(a, 1, f)?;
                write!(f, " - ")?;
                fmt_child(b, 2, f)
            }
            Expr::Mul(a, b) => {
                fmt_child(a, 3, f)?;
                write!(f, "*")?;
                fmt_child(b, 4, f)
            }
            Expr::Div(a, b) => {
                fmt_child(a, 3, f)?;
                write!(f, "/")?;
                fmt_child(b, 4, f)
            }
            Expr::Pow(base, c) => {
                fmt_child(base, 5, f)?;
                if *c >= 0.0 && *c == c.trunc() && c.abs() < 1e15 {
                    write!(f, "^{}", *c as i64)
                } else {
                    write!(f, "^(")?;
                    fmt_const(*c, f)?;
                    write!(f, ")")
                }
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                fmt_child(a, 2, f)
            }
            Expr::Unary(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mul(self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        num(c)
    }
}
