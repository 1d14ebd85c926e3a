//! Randomized zero-identity testing.
//!
//! The determining-equation and solution-residual checks all reduce to the
//! same question: is this expression identically zero on a region? We answer
//! it probabilistically: sample the variables uniformly from a box and
//! demand that every evaluation be zero *relative to the size of the
//! intermediates that produced it*. An expression that is not identically
//! zero is a nontrivial analytic function, so its zero set has measure zero
//! and random points expose it with overwhelming probability; conversely a
//! true identity can only fail here through rounding, which is exactly what
//! the intermediate-magnitude scaling absorbs.
//!
//! Points that land on poles (non-finite values) or in catastrophic-
//! cancellation territory (intermediates above [`POLE_SCALE`]) are redrawn a
//! few times and then skipped; if *every* point is skipped the test refuses
//! to conclude anything rather than passing vacuously.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EvalError, Expr};

/// Relative tolerance: a point passes iff `|value| <= tol * (1 + scale)`
/// where `scale` is the largest intermediate magnitude at that point.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Default number of sample points.
pub const DEFAULT_POINTS: usize = 64;

/// Intermediates above this are treated as a pole for testing purposes:
/// past ~1e12 a double retains fewer than 4 significant digits of any
/// O(1) cancellation, so the point carries no information.
pub const POLE_SCALE: f64 = 1e12;

/// How many times one sample slot is redrawn before being skipped.
const POLE_RETRIES: usize = 10;

/// The point that maximized `|value| / (1 + scale)`.
#[derive(Debug, Clone)]
pub struct Witness {
    pub bindings: Vec<(String, f64)>,
    pub value: f64,
    pub scale: f64,
}

/// Result of a randomized identity test that managed to sample the region.
#[derive(Debug, Clone)]
pub struct IdentityOutcome {
    /// Every used point satisfied the relative-tolerance bound.
    pub holds: bool,
    /// Largest `|value|` over used points.
    pub max_abs: f64,
    /// Largest `|value| / (1 + scale)` over used points.
    pub max_rel: f64,
    /// Points that produced a finite, well-scaled evaluation.
    pub points_used: usize,
    /// Points abandoned after repeated pole hits.
    pub points_skipped: usize,
    /// The worst point seen (present whenever `points_used > 0`).
    pub worst: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdentityError {
    /// A free variable of the expression has no sampling interval.
    #[error("no sampling interval for variable `{0}`")]
    MissingInterval(String),
    /// An interval is empty or not finite.
    #[error("invalid sampling interval for `{0}`")]
    BadInterval(String),
    /// Every sample point hit a pole; nothing can be concluded.
    #[error("all {0} sample points hit poles or lost precision; test is inconclusive")]
    Inconclusive(usize),
}

/// Test whether `expr` vanishes identically for variables drawn uniformly
/// from `intervals` (a slice of `(name, (lo, hi))`). Deterministic in
/// `seed`. Intervals for variables not appearing in `expr` are ignored.
pub fn identity_zero(
    expr: &Expr,
    intervals: &[(&str, (f64, f64))],
    points: usize,
    seed: u64,
) -> Result<IdentityOutcome, IdentityError> {
    let names: Vec<String> = expr.vars().into_iter().collect();
    let mut ranges = Vec::with_capacity(names.len());
    for n in &names {
        let (lo, hi) = intervals
            .iter()
            .find(|(name, _)| name == n)
            .map(|(_, r)| *r)
            .ok_or_else(|| IdentityError::MissingInterval(n.clone()))?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(IdentityError::BadInterval(n.clone()));
        }
        ranges.push((lo, hi));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = IdentityOutcome {
        holds: true,
        max_abs: 0.0,
        max_rel: 0.0,
        points_used: 0,
        points_skipped: 0,
        worst: None,
    };

    let mut bindings: Vec<(&str, f64)> = names.iter().map(|n| (n.as_str(), 0.0)).collect();
    for _ in 0..points.max(1) {
        let mut landed = false;
        for _attempt in 0..POLE_RETRIES {
            for (slot, range) in bindings.iter_mut().zip(&ranges) {
                slot.1 = rng.gen_range(range.0..range.1);
            }
            match expr.eval_scaled(&bindings) {
                Ok((_, scale)) if scale > POLE_SCALE => continue,
                Ok((value, scale)) => {
                    let rel = value.abs() / (1.0 + scale);
                    out.points_used += 1;
                    out.max_abs = out.max_abs.max(value.abs());
                    if rel > out.max_rel || out.worst.is_none() {
                        out.max_rel = out.max_rel.max(rel);
                        out.worst = Some(Witness {
                            bindings: bindings.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
                            value,
                            scale,
                        });
                    }
                    landed = true;
                    break;
                }
                Err(EvalError::NonFinite(_)) => continue,
                // Unbound cannot occur: intervals were checked above.
                Err(EvalError::Unbound(_)) => unreachable!("intervals cover all variables"),
            }
        }
        if !landed {
            out.points_skipped += 1;
        }
    }

    if out.points_used == 0 {
        return Err(IdentityError::Inconclusive(out.points_skipped));
    }
    out.holds = out.max_rel <= DEFAULT_REL_TOL;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{cos, coth, mul, num, pow, sin, sub, var};
    use super::*;

    const BOX_X: (&str, (f64, f64)) = ("x", (-2.0, 2.0));

    #[test]
    fn pythagorean_identity_holds() {
        let e = pow(sin(var("x")), 2.0) + pow(cos(var("x")), 2.0) - num(1.0);
        let out = identity_zero(&e, &[BOX_X], 64, 7).unwrap();
        assert!(out.holds, "max_rel = {}", out.max_rel);
        assert_eq!(out.points_used, 64);
        assert_eq!(out.points_skipped, 0);
    }

    #[test]
    fn non_identity_is_caught_with_witness() {
        let e = var("x"); // obviously not identically zero
        let out = identity_zero(&e, &[BOX_X], 64, 7).unwrap();
        assert!(!out.holds);
        let w = out.worst.expect("worst point is recorded");
        assert_eq!(w.bindings[0].0, "x");
        assert!(w.value.abs() > 1e-3);
    }

    #[test]
    fn poles_are_skipped_not_fatal() {
        // coth(x)·tanh(x) - 1 == 0 away from x = 0; samples near the pole
        // may be redrawn but the identity must still be confirmed.
        let x = var("x");
        let e = sub(
            mul(coth(x.clone()), super::super::tanh(x)),
            num(1.0),
        );
        let out = identity_zero(&e, &[("x", (-1e-3, 1e-3))], 64, 42).unwrap();
        assert!(out.holds, "max_rel = {}", out.max_rel);
        assert!(out.points_used > 0);
    }

    #[test]
    fn all_pole_region_is_inconclusive() {
        // 1/(x-x) is non-finite everywhere.
        let x = var("x");
        let e = num(1.0) / (x.clone() - x);
        let res = identity_zero(&e, &[BOX_X], 16, 3);
        assert!(matches!(res, Err(IdentityError::Inconclusive(16))));
    }

    #[test]
    fn missing_interval_is_reported() {
        let e = var("x") + var("y");
        let res = identity_zero(&e, &[BOX_X], 16, 3);
        assert!(matches!(res, Err(IdentityError::MissingInterval(n)) if n == "y"));
    }

    #[test]
    fn deterministic_in_seed() {
        let e = var("x") * var("t") - num(0.3);
        let boxes = [BOX_X, ("t", (0.1, 1.0))];
        let a = identity_zero(&e, &boxes, 32, 11).unwrap();
        let b = identity_zero(&e, &boxes, 32, 11).unwrap();
        assert_eq!(a.max_abs, b.max_abs);
        assert_eq!(a.max_rel, b.max_rel);
        let c = identity_zero(&e, &boxes, 32, 12).unwrap();
        assert_ne!(a.max_abs, c.max_abs);
    }

    #[test]
    fn cancellation_scale_loosens_tolerance_honestly() {
        // (1e9·x + 1) - 1e9·x - 1 is identically zero but each evaluation
        // loses ~9 digits; the scale-aware tolerance must still accept it.
        let x = var("x");
        let e = (num(1e9) * x.clone() + num(1.0)) - num(1e9) * x - num(1.0);
        let out = identity_zero(&e, &[BOX_X], 64, 5).unwrap();
        assert!(out.holds, "max_rel = {}", out.max_rel);
    }
}
