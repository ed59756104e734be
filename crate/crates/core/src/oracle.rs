//! Brute-force reference implementations.
//!
//! Nothing here calls into [`crate::operators`], [`crate::measures`] or
//! [`crate::regression`]; the formulas are written out again, naively, so
//! that tests can check the real implementation against them.
//!
//! The overlap enumeration models a soft sample as `N` indivisible units of
//! which `a` belong to the class according to the reference and `b`
//! according to the prediction. Trying every placement of the units gives
//! the smallest, largest and average number of units on which both agree.

use crate::error::{Error, Result};
use crate::measures::{Flavor, Measure};
use crate::membership::MembershipMatrix;

/// Largest number of units [`overlap_counts`] enumerates.
pub const MAX_UNITS: usize = 16;

/// Above this many units the reference placement is fixed (by permutation
/// symmetry all placements are equivalent) and only predictions vary.
const FULL_ENUMERATION_UNITS: usize = 12;

/// A soft sample resolved into `units` crisp units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretizedSample {
    pub units: usize,
    pub reference: Vec<usize>,
    pub prediction: Vec<usize>,
}

impl DiscretizedSample {
    pub fn new(units: usize, reference: Vec<usize>, prediction: Vec<usize>) -> Result<Self> {
        if units == 0 {
            return Err(Error::Shape("need at least one unit".into()));
        }
        if reference.len() != prediction.len() {
            return Err(Error::LengthMismatch(reference.len(), prediction.len()));
        }
        if reference.iter().chain(&prediction).any(|&c| c > units) {
            return Err(Error::Shape(format!("class counts exceed {units} units")));
        }
        Ok(DiscretizedSample {
            units,
            reference,
            prediction,
        })
    }

    /// A sample with a single class of interest.
    pub fn single(units: usize, reference: usize, prediction: usize) -> Result<Self> {
        Self::new(units, vec![reference], vec![prediction])
    }

    pub fn reference_membership(&self, class: usize) -> f64 {
        self.reference[class] as f64 / self.units as f64
    }

    pub fn prediction_membership(&self, class: usize) -> f64 {
        self.prediction[class] as f64 / self.units as f64
    }
}

/// Integer tallies over all placements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapCounts {
    pub min: u32,
    pub max: u32,
    pub total: u64,
    pub placements: u64,
}

/// Every `k`-subset of `n` bits as a mask, in increasing order.
fn subsets(n: usize, k: usize) -> Vec<u32> {
    if k == 0 {
        return vec![0];
    }
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut mask: u32 = (1 << k) - 1;
    let limit: u32 = 1 << n;
    while mask < limit {
        out.push(mask);
        // Gosper's hack: next larger integer with the same popcount
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    out
}

pub fn overlap_counts(sample: &DiscretizedSample, class: usize) -> Result<OverlapCounts> {
    if sample.units > MAX_UNITS {
        return Err(Error::TooLarge {
            units: sample.units,
            limit: MAX_UNITS,
        });
    }
    if class >= sample.reference.len() {
        return Err(Error::UnknownClass(format!("#{class}")));
    }
    let n = sample.units;
    let a = sample.reference[class];
    let b = sample.prediction[class];
    let references = if n <= FULL_ENUMERATION_UNITS {
        subsets(n, a)
    } else {
        vec![if a == 0 { 0 } else { (1u32 << a) - 1 }]
    };
    let predictions = subsets(n, b);
    let mut counts = OverlapCounts {
        min: u32::MAX,
        max: 0,
        total: 0,
        placements: 0,
    };
    for &r in &references {
        for &p in &predictions {
            let both = (r & p).count_ones();
            counts.min = counts.min.min(both);
            counts.max = counts.max.max(both);
            counts.total += both as u64;
            counts.placements += 1;
        }
    }
    Ok(counts)
}

/// Smallest and largest fraction of units shared by reference and prediction.
pub fn overlap_extremes(sample: &DiscretizedSample, class: usize) -> Result<(f64, f64)> {
    let c = overlap_counts(sample, class)?;
    let n = sample.units as f64;
    Ok((c.min as f64 / n, c.max as f64 / n))
}

/// Average shared fraction over uniformly random placements.
pub fn overlap_expectation(sample: &DiscretizedSample, class: usize) -> Result<f64> {
    let c = overlap_counts(sample, class)?;
    Ok(c.total as f64 / (c.placements * sample.units as u64) as f64)
}

fn naive_and(flavor: Flavor, x: f64, y: f64) -> f64 {
    match flavor {
        Flavor::Weak => {
            if x < y {
                x
            } else {
                y
            }
        }
        Flavor::Strong => {
            let v = x + y - 1.0;
            if v > 0.0 {
                v
            } else {
                0.0
            }
        }
        Flavor::Product => x * y,
        Flavor::Mae | Flavor::Rmse => unreachable!("not a conjunction"),
    }
}

/// A measure computed literally from its definition: a diagonal element
/// of the (dummy-class) confusion matrix over the matching marginal, or
/// one minus a weighted residual mean.
pub fn measure_by_definition(
    reference: &MembershipMatrix,
    prediction: &MembershipMatrix,
    measure: Measure,
    class: usize,
    flavor: Flavor,
) -> Option<f64> {
    let n = reference.n_samples();
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    let mut squares = 0.0;
    for i in 0..n {
        let r = reference.get(i, class);
        let p = prediction.get(i, class);
        let (not_r, not_p) = (1.0 - r, 1.0 - p);
        let weight = match measure {
            Measure::Sens => r,
            Measure::Spec => not_r,
            Measure::Ppv => p,
            Measure::Npv => not_p,
        };
        denominator += weight;
        match flavor {
            Flavor::Mae => numerator += weight * (p - r).abs(),
            Flavor::Rmse => squares += weight * (p - r) * (p - r),
            _ => {
                // Z[G, G] for sens and ppv, Z[not G, not G] for spec and npv
                numerator += match measure {
                    Measure::Sens | Measure::Ppv => naive_and(flavor, r, p),
                    Measure::Spec | Measure::Npv => naive_and(flavor, not_r, not_p),
                };
            }
        }
    }
    if denominator <= 0.0 {
        return None;
    }
    Some(match flavor {
        Flavor::Mae => 1.0 - numerator / denominator,
        Flavor::Rmse => 1.0 - (squares / denominator).sqrt(),
        _ => numerator / denominator,
    })
}

/// Classical ratios from integer labels: `[sens, spec, ppv, npv]`.
pub fn crisp_ratios(reference: &[usize], prediction: &[usize], class: usize) -> [Option<f64>; 4] {
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for (&r, &p) in reference.iter().zip(prediction) {
        match (r == class, p == class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fneg += 1,
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    [
        ratio(tp, tp + fneg),
        ratio(tn, tn + fp),
        ratio(tp, tp + fp),
        ratio(tn, tn + fneg),
    ]
}
