//! Per-sample conjunction of a reference and a predicted membership.
//!
//! Three AND-operators generalize the Boolean AND to `[0, 1]`:
//!
//! * weak (minimum): the largest overlap the two memberships allow,
//! * strong (Łukasiewicz, `max(r + p - 1, 0)`): the smallest possible overlap,
//! * product: the expected overlap when both are mixed independently.
//!
//! For any `r, p` the values are ordered `strong <= product <= weak`, and on
//! `{0, 1}` all three coincide with the Boolean AND.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AndOperator {
    Strong,
    Product,
    Weak,
}

impl AndOperator {
    /// Worst, expected and best case, in that order.
    pub const ALL: [AndOperator; 3] = [AndOperator::Strong, AndOperator::Product, AndOperator::Weak];

    pub fn name(self) -> &'static str {
        match self {
            AndOperator::Strong => "strong",
            AndOperator::Product => "product",
            AndOperator::Weak => "weak",
        }
    }

    /// Conjunction without domain checks; callers guarantee `r, p` in `[0, 1]`.
    #[inline]
    pub fn apply(self, r: f64, p: f64) -> f64 {
        match self {
            AndOperator::Weak => r.min(p),
            // lo - (1 - hi): 1 - hi is exact whenever the result is positive,
            // so the only rounding is the final subtraction.
            AndOperator::Strong => {
                let (lo, hi) = if r <= p { (r, p) } else { (p, r) };
                (lo - (1.0 - hi)).max(0.0)
            }
            AndOperator::Product => r * p,
        }
    }
}

impl fmt::Display for AndOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AndOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strong" => Ok(AndOperator::Strong),
            "product" | "prod" => Ok(AndOperator::Product),
            "weak" => Ok(AndOperator::Weak),
            other => Err(Error::Config(format!("unknown operator `{other}`"))),
        }
    }
}

fn check(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(x))
    }
}

pub fn zf(op: AndOperator, r: f64, p: f64) -> Result<f64> {
    check(r)?;
    check(p)?;
    Ok(op.apply(r, p))
}

pub fn zf_weak(r: f64, p: f64) -> Result<f64> {
    zf(AndOperator::Weak, r, p)
}

pub fn zf_strong(r: f64, p: f64) -> Result<f64> {
    zf(AndOperator::Strong, r, p)
}

pub fn zf_product(r: f64, p: f64) -> Result<f64> {
    zf(AndOperator::Product, r, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weak_examples() {
        assert_eq!(zf_weak(0.5, 0.8).unwrap(), 0.5);
        assert_eq!(zf_weak(1.0, 0.37).unwrap(), 0.37);
        assert_eq!(zf_weak(0.0, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn strong_examples() {
        assert!((zf_strong(0.5, 0.8).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(zf_strong(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(zf_strong(0.4, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn product_examples() {
        assert_eq!(zf_product(0.5, 0.8).unwrap(), 0.4);
        assert_eq!(zf_product(1.0, 0.37).unwrap(), 0.37);
        assert_eq!(zf_product(0.25, 0.25).unwrap(), 0.0625);
    }

    #[test]
    fn crisp_reference_returns_prediction() {
        for p in [0.0, 0.1, 0.5, 0.9, 1.0] {
            for op in AndOperator::ALL {
                assert_eq!(zf(op, 1.0, p).unwrap(), p, "{op} at p={p}");
            }
        }
    }

    #[test]
    fn crisp_degeneration() {
        for op in AndOperator::ALL {
            assert_eq!(zf(op, 1.0, 0.0).unwrap(), 0.0);
            assert_eq!(zf(op, 0.0, 1.0).unwrap(), 0.0);
            assert_eq!(zf(op, 0.0, 0.0).unwrap(), 0.0);
            assert_eq!(zf(op, 1.0, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn parallelogram_at_three_quarters() {
        // For r = 0.75 the weak curve rises with slope 1 up to p = r, the
        // strong curve starts at p = 1 - r; both end at (1, r).
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let weak = zf_weak(0.75, p).unwrap();
            let strong = zf_strong(0.75, p).unwrap();
            assert_eq!(weak, p.min(0.75));
            assert!((strong - (p - 0.25).max(0.0)).abs() < 1e-15);
            let prod = zf_product(0.75, p).unwrap();
            assert!(strong <= prod && prod <= weak);
        }
    }

    #[test]
    fn domain_errors() {
        assert_eq!(zf_weak(1.5, 0.2), Err(Error::Domain(1.5)));
        assert_eq!(zf_strong(0.2, -0.1), Err(Error::Domain(-0.1)));
        assert!(zf_product(f64::NAN, 0.2).is_err());
    }

    #[test]
    fn names_round_trip() {
        for op in AndOperator::ALL {
            assert_eq!(op.name().parse::<AndOperator>().unwrap(), op);
        }
        assert!("hamacher".parse::<AndOperator>().is_err());
    }

    proptest! {
        #[test]
        fn ordering(r in 0.0f64..=1.0, p in 0.0f64..=1.0) {
            let s = zf_strong(r, p).unwrap();
            let m = zf_product(r, p).unwrap();
            let w = zf_weak(r, p).unwrap();
            prop_assert!(s <= m && m <= w);
        }

        #[test]
        fn commutative(r in 0.0f64..=1.0, p in 0.0f64..=1.0) {
            for op in AndOperator::ALL {
                prop_assert_eq!(op.apply(r, p), op.apply(p, r));
            }
        }

        #[test]
        fn weak_and_strong_are_point_symmetric(r in 0.0f64..=1.0, p in 0.0f64..=1.0) {
            let lhs = zf_strong(r, p).unwrap();
            let rhs = r - zf_weak(r, 1.0 - p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 2.0 * f64::EPSILON);
        }
    }
}
