//! Closed bounded real intervals under the LU order, with the generalized
//! Hukuhara difference and the gH-product of a real vector with an interval
//! tuple.
//!
//! All operations here are closed-form and exact up to floating-point
//! rounding; tolerance policy belongs to the auditors, not to this module.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::Serialize;
use thiserror::Error;

/// Errors raised by interval construction and aggregation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("interval endpoints out of order: lo = {lo} > hi = {hi}")]
    OrderViolation { lo: f64, hi: f64 },
    #[error("interval endpoint is not finite: [{lo}, {hi}]")]
    NonFinite { lo: f64, hi: f64 },
    #[error("Hukuhara difference undefined: result [{lo}, {hi}] inverts")]
    HukuharaUndefined { lo: f64, hi: f64 },
    #[error("maximum element of an empty interval set")]
    EmptySet,
    #[error("length mismatch: vector has {vector} entries, interval tuple has {intervals}")]
    LengthMismatch { vector: usize, intervals: usize },
}

/// A closed bounded interval `[lo, hi]` with `lo <= hi` and both endpoints
/// finite. Construction rejects anything else, so every value of this type
/// is a genuine interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// The degenerate interval `[0, 0]`.
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    /// Builds `[lo, hi]`, rejecting non-finite endpoints and `lo > hi`.
    pub fn new(lo: f64, hi: f64) -> Result<Interval, IntervalError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(IntervalError::NonFinite { lo, hi });
        }
        if lo > hi {
            return Err(IntervalError::OrderViolation { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// The singleton interval `[x, x]`.
    pub fn singleton(x: f64) -> Result<Interval, IntervalError> {
        Interval::new(x, x)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Scalar multiple; a negative scalar swaps the endpoints.
    pub fn scale(&self, k: f64) -> Interval {
        if k >= 0.0 {
            Interval {
                lo: k * self.lo,
                hi: k * self.hi,
            }
        } else {
            Interval {
                lo: k * self.hi,
                hi: k * self.lo,
            }
        }
    }

    /// Hausdorff distance `max(|a.lo - b.lo|, |a.hi - b.hi|)`.
    pub fn hausdorff(&self, other: &Interval) -> f64 {
        f64::max((self.lo - other.lo).abs(), (self.hi - other.hi).abs())
    }

    /// Hukuhara difference: endpointwise subtraction, defined only when the
    /// result is still an interval.
    pub fn h_diff(&self, other: &Interval) -> Result<Interval, IntervalError> {
        let lo = self.lo - other.lo;
        let hi = self.hi - other.hi;
        if lo > hi {
            Err(IntervalError::HukuharaUndefined { lo, hi })
        } else {
            Ok(Interval { lo, hi })
        }
    }

    /// Generalized Hukuhara difference. Total: sorts the endpointwise
    /// differences, so `a gh- a = [0, 0]` exactly.
    pub fn gh_diff(&self, other: &Interval) -> Interval {
        let d_lo = self.lo - other.lo;
        let d_hi = self.hi - other.hi;
        Interval {
            lo: f64::min(d_lo, d_hi),
            hi: f64::max(d_lo, d_hi),
        }
    }

    /// LU order: `a.lo <= b.lo` and `a.hi <= b.hi`. A partial order.
    pub fn lu_leq(&self, other: &Interval) -> bool {
        self.lo <= other.lo && self.hi <= other.hi
    }

    /// Strict LU order: `lu_leq` plus inequality.
    pub fn lu_lt(&self, other: &Interval) -> bool {
        self.lu_leq(other) && (self.lo != other.lo || self.hi != other.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Endpointwise sum.
impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

/// Negation `[-hi, -lo]`.
impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

/// Minkowski difference `a + (-b) = [a.lo - b.hi, a.hi - b.lo]`.
impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        self + (-rhs)
    }
}

/// Interval with extended-real endpoints. Only produced by the set
/// aggregations below; `[+inf, +inf]` and `[-inf, -inf]` are the sentinel
/// results for empty sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtendedInterval {
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Display for ExtendedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// LU maximum element of a finite set, if one exists. The componentwise
/// upper envelope is the only candidate; it is the maximum exactly when it
/// is a member.
pub fn max_element(set: &[Interval]) -> Result<Option<Interval>, IntervalError> {
    if set.is_empty() {
        return Err(IntervalError::EmptySet);
    }
    let lo = set.iter().map(|i| i.lo).fold(f64::NEG_INFINITY, f64::max);
    let hi = set.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max);
    Ok(set.iter().find(|i| i.lo == lo && i.hi == hi).copied())
}

/// LU infimum (componentwise greatest lower bound). Empty set gives the
/// `[+inf, +inf]` sentinel.
pub fn inf_set(set: &[Interval]) -> ExtendedInterval {
    if set.is_empty() {
        return ExtendedInterval {
            lo: f64::INFINITY,
            hi: f64::INFINITY,
        };
    }
    ExtendedInterval {
        lo: set.iter().map(|i| i.lo).fold(f64::INFINITY, f64::min),
        hi: set.iter().map(|i| i.hi).fold(f64::INFINITY, f64::min),
    }
}

/// LU supremum (componentwise least upper bound). Empty set gives the
/// `[-inf, -inf]` sentinel.
pub fn sup_set(set: &[Interval]) -> ExtendedInterval {
    if set.is_empty() {
        return ExtendedInterval {
            lo: f64::NEG_INFINITY,
            hi: f64::NEG_INFINITY,
        };
    }
    ExtendedInterval {
        lo: set.iter().map(|i| i.lo).fold(f64::NEG_INFINITY, f64::max),
        hi: set.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max),
    }
}

/// gH-product of a real vector with a tuple of intervals: the weighted sum
/// over nonnegative coefficients, gH-minus the absolute-weighted sum over
/// negative ones. Zero coefficients count as nonnegative.
pub fn gh_product(v: &[f64], intervals: &[Interval]) -> Result<Interval, IntervalError> {
    if v.len() != intervals.len() {
        return Err(IntervalError::LengthMismatch {
            vector: v.len(),
            intervals: intervals.len(),
        });
    }
    let mut plus = Interval::ZERO;
    let mut minus = Interval::ZERO;
    for (&vi, ui) in v.iter().zip(intervals) {
        if vi >= 0.0 {
            plus = plus + ui.scale(vi);
        } else {
            minus = minus + ui.scale(-vi);
        }
    }
    Ok(plus.gh_diff(&minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn construction() {
        assert_eq!(iv(0.0, 1.0), Interval { lo: 0.0, hi: 1.0 });
        assert_eq!(iv(2.0, 2.0).width(), 0.0);
        assert!(matches!(
            Interval::new(1.0, 0.0),
            Err(IntervalError::OrderViolation { .. })
        ));
        assert!(matches!(
            Interval::new(f64::NAN, 0.0),
            Err(IntervalError::NonFinite { .. })
        ));
        assert!(matches!(
            Interval::new(0.0, f64::INFINITY),
            Err(IntervalError::NonFinite { .. })
        ));
    }

    #[test]
    fn arithmetic() {
        assert_eq!(iv(0.0, 1.0) + iv(2.0, 3.0), iv(2.0, 4.0));
        assert_eq!(iv(0.0, 0.0) + iv(-3.0, 5.0), iv(-3.0, 5.0));
        assert_eq!(iv(-1.0, 1.0) + iv(-1.0, 1.0), iv(-2.0, 2.0));

        assert_eq!(-iv(0.0, 1.0), iv(-1.0, 0.0));
        assert_eq!(-iv(0.0, 0.0), iv(0.0, 0.0));
        assert_eq!(-iv(-2.0, 3.0), iv(-3.0, 2.0));

        // U - U widens: the standard difference is not a group inverse.
        assert_eq!(iv(0.0, 1.0) - iv(0.0, 1.0), iv(-1.0, 1.0));
        assert_eq!(iv(3.0, 4.0) - iv(0.0, 0.0), iv(3.0, 4.0));
        assert_eq!(iv(2.0, 4.0) - iv(1.0, 1.0), iv(1.0, 3.0));

        assert_eq!(iv(1.0, 3.0).scale(2.0), iv(2.0, 6.0));
        assert_eq!(iv(-5.0, 9.0).scale(0.0), iv(0.0, 0.0));
        assert_eq!(iv(0.0, 1.0).scale(-1.0), iv(-1.0, 0.0));
    }

    #[test]
    fn hausdorff_distance() {
        assert_eq!(iv(0.0, 1.0).hausdorff(&iv(0.0, 1.0)), 0.0);
        assert_eq!(iv(0.0, 1.0).hausdorff(&iv(1.0, 3.0)), 2.0);
        assert_eq!(iv(-1.0, 0.0).hausdorff(&iv(0.0, 1.0)), 1.0);
    }

    #[test]
    fn hukuhara_difference() {
        assert_eq!(iv(0.0, 1.0).h_diff(&iv(0.0, 1.0)).unwrap(), iv(0.0, 0.0));
        assert!(matches!(
            iv(0.0, 4.0).h_diff(&iv(0.0, 8.0)),
            Err(IntervalError::HukuharaUndefined { .. })
        ));
        assert_eq!(iv(2.0, 5.0).h_diff(&iv(1.0, 2.0)).unwrap(), iv(1.0, 3.0));
    }

    #[test]
    fn gh_difference() {
        assert_eq!(iv(0.0, 1.0).gh_diff(&iv(0.0, 1.0)), iv(0.0, 0.0));
        assert_eq!(iv(0.0, 4.0).gh_diff(&iv(0.0, 8.0)), iv(-4.0, 0.0));
        assert_eq!(iv(3.0, 7.0).gh_diff(&iv(1.0, 2.0)), iv(2.0, 5.0));
    }

    #[test]
    fn lu_order() {
        assert!(iv(1.0, 2.0).lu_leq(&iv(2.0, 3.0)));
        assert!(iv(0.0, 1.0).lu_leq(&iv(0.0, 1.0)));
        assert!(!iv(-0.25, 0.75).lu_leq(&iv(-0.5, 0.5)));

        assert!(iv(1.0, 2.0).lu_lt(&iv(2.0, 3.0)));
        assert!(!iv(0.0, 1.0).lu_lt(&iv(0.0, 1.0)));
        assert!(iv(0.0, 1.0).lu_lt(&iv(0.0, 2.0)));
    }

    #[test]
    fn max_element_cases() {
        assert_eq!(
            max_element(&[iv(0.0, 1.0), iv(2.0, 3.0)]).unwrap(),
            Some(iv(2.0, 3.0))
        );
        assert_eq!(max_element(&[iv(0.0, 3.0), iv(1.0, 2.0)]).unwrap(), None);
        assert_eq!(max_element(&[iv(1.0, 1.0)]).unwrap(), Some(iv(1.0, 1.0)));
        assert!(matches!(max_element(&[]), Err(IntervalError::EmptySet)));
    }

    #[test]
    fn inf_sup_sets() {
        let set = [iv(0.0, 1.0), iv(2.0, 3.0)];
        assert_eq!(inf_set(&set), ExtendedInterval { lo: 0.0, hi: 1.0 });
        assert_eq!(sup_set(&set), ExtendedInterval { lo: 2.0, hi: 3.0 });

        // The componentwise envelope need not be a member.
        let crossed = [iv(0.0, 3.0), iv(1.0, 2.0)];
        assert_eq!(inf_set(&crossed), ExtendedInterval { lo: 0.0, hi: 2.0 });
        assert_eq!(sup_set(&crossed), ExtendedInterval { lo: 1.0, hi: 3.0 });

        assert_eq!(
            inf_set(&[]),
            ExtendedInterval {
                lo: f64::INFINITY,
                hi: f64::INFINITY
            }
        );
        assert_eq!(
            sup_set(&[]),
            ExtendedInterval {
                lo: f64::NEG_INFINITY,
                hi: f64::NEG_INFINITY
            }
        );
    }

    #[test]
    fn gh_product_cases() {
        let u = [iv(1.0, 2.0), iv(0.0, 3.0)];
        assert_eq!(gh_product(&[2.0, -1.0], &u).unwrap(), iv(1.0, 2.0));

        let w = [iv(0.0, 1.0), iv(0.0, 1.0)];
        assert_eq!(gh_product(&[1.0, -1.0], &w).unwrap(), iv(0.0, 0.0));

        let z = [iv(5.0, 6.0), iv(7.0, 8.0)];
        assert_eq!(gh_product(&[0.0, 0.0], &z).unwrap(), iv(0.0, 0.0));

        assert!(matches!(
            gh_product(&[1.0], &z),
            Err(IntervalError::LengthMismatch { .. })
        ));
    }

    fn arb_interval() -> impl Strategy<Value = Interval> {
        (-1e6f64..1e6, 0.0f64..1e6).prop_map(|(lo, w)| iv(lo, lo + w))
    }

    proptest! {
        #[test]
        fn gh_diff_self_is_zero(a in arb_interval()) {
            prop_assert_eq!(a.gh_diff(&a), Interval::ZERO);
        }

        // gh(a,b) LU-below zero exactly when a is LU-below b.
        #[test]
        fn gh_diff_order_equivalence(a in arb_interval(), b in arb_interval()) {
            prop_assert_eq!(a.gh_diff(&b).lu_leq(&Interval::ZERO), a.lu_leq(&b));
        }

        #[test]
        fn h_diff_agrees_with_gh_diff(a in arb_interval(), b in arb_interval()) {
            if let Ok(h) = a.h_diff(&b) {
                prop_assert_eq!(h, a.gh_diff(&b));
            }
        }

        #[test]
        fn sub_is_add_neg(a in arb_interval(), b in arb_interval()) {
            prop_assert_eq!(a - b, a + (-b));
        }

        #[test]
        fn scale_minus_one_is_neg(a in arb_interval()) {
            prop_assert_eq!(a.scale(-1.0), -a);
        }

        // Nonnegative combinations preserve the LU order.
        #[test]
        fn lu_order_preserved_by_nonneg_combinations(
            a in arb_interval(), c in arb_interval(),
            da in 0.0f64..1e3, dc in 0.0f64..1e3,
            n1 in 0.0f64..100.0, n2 in 0.0f64..100.0,
        ) {
            let b = a + Interval { lo: da, hi: da };
            let d = c + Interval { lo: dc, hi: dc };
            prop_assert!(a.lu_leq(&b) && c.lu_leq(&d));
            let lhs = a.scale(n1) + c.scale(n2);
            let rhs = b.scale(n1) + d.scale(n2);
            prop_assert!(lhs.lu_leq(&rhs));
        }

        #[test]
        fn lu_partial_order_laws(a in arb_interval(), b in arb_interval(), c in arb_interval()) {
            prop_assert!(a.lu_leq(&a));
            if a.lu_leq(&b) && b.lu_leq(&a) {
                prop_assert_eq!(a, b);
            }
            if a.lu_leq(&b) && b.lu_leq(&c) {
                prop_assert!(a.lu_leq(&c));
            }
        }

        // With no negative coefficients the gH-product is the plain
        // weighted sum.
        #[test]
        fn gh_product_nonneg_is_weighted_sum(
            us in proptest::collection::vec(arb_interval(), 1..6),
            vs in proptest::collection::vec(0.0f64..50.0, 6),
        ) {
            let v = &vs[..us.len()];
            let direct = us.iter().zip(v).fold(Interval::ZERO, |acc, (u, &k)| acc + u.scale(k));
            prop_assert_eq!(gh_product(v, &us).unwrap(), direct);
        }
    }
}
