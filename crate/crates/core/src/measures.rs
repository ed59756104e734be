//! Sensitivity, specificity and predictive values for soft data.
//!
//! All four ratios are the same function of two membership columns with
//! the arguments swapped or complemented:
//!
//! | measure | arguments          | denominator |
//! |---------|--------------------|-------------|
//! | sens    | `(r, p)`           | `Σ r`       |
//! | spec    | `(1 - r, 1 - p)`   | `Σ (1 - r)` |
//! | ppv     | `(p, r)`           | `Σ p`       |
//! | npv     | `(1 - p, 1 - r)`   | `Σ (1 - p)` |
//!
//! where the base function is `Σ zf(a, b) / Σ a`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::membership::MembershipMatrix;
use crate::operators::AndOperator;
use crate::sum::{self, Accumulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Sens,
    Spec,
    Ppv,
    Npv,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Sens, Measure::Spec, Measure::Ppv, Measure::Npv];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Sens => "sens",
            Measure::Spec => "spec",
            Measure::Ppv => "ppv",
            Measure::Npv => "npv",
        }
    }

    /// Arranges reference and prediction columns into the arguments of
    /// the base sensitivity: `(weights, partner)`.
    pub(crate) fn arguments(self, reference: &[f64], prediction: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let complement = |c: &[f64]| c.iter().map(|v| 1.0 - v).collect::<Vec<_>>();
        match self {
            Measure::Sens => (reference.to_vec(), prediction.to_vec()),
            Measure::Spec => (complement(reference), complement(prediction)),
            Measure::Ppv => (prediction.to_vec(), reference.to_vec()),
            Measure::Npv => (complement(prediction), complement(reference)),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sens" => Ok(Measure::Sens),
            "spec" => Ok(Measure::Spec),
            "ppv" => Ok(Measure::Ppv),
            "npv" => Ok(Measure::Npv),
            other => Err(Error::Config(format!("unknown measure `{other}`"))),
        }
    }
}

/// How a measure was estimated: by one of the conjunctions, or from the
/// weighted absolute / squared residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Strong,
    Product,
    Weak,
    Mae,
    Rmse,
}

impl From<AndOperator> for Flavor {
    fn from(op: AndOperator) -> Self {
        match op {
            AndOperator::Strong => Flavor::Strong,
            AndOperator::Product => Flavor::Product,
            AndOperator::Weak => Flavor::Weak,
        }
    }
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Strong => "strong",
            Flavor::Product => "product",
            Flavor::Weak => "weak",
            Flavor::Mae => "mae",
            Flavor::Rmse => "rmse",
        }
    }

    pub fn operator(self) -> Option<AndOperator> {
        match self {
            Flavor::Strong => Some(AndOperator::Strong),
            Flavor::Product => Some(AndOperator::Product),
            Flavor::Weak => Some(AndOperator::Weak),
            Flavor::Mae | Flavor::Rmse => None,
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mae" => Ok(Flavor::Mae),
            "rmse" => Ok(Flavor::Rmse),
            other => other.parse::<AndOperator>().map(Flavor::from),
        }
    }
}

/// Numerator and denominator of a ratio; undefined when the denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fraction {
    pub numerator: f64,
    pub denominator: f64,
}

impl Fraction {
    pub fn value(&self) -> Option<f64> {
        (self.denominator > 0.0).then(|| (self.numerator / self.denominator).clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub measure: Measure,
    pub class: String,
    pub flavor: Flavor,
    /// `None` when the denominator is zero.
    pub value: Option<f64>,
    pub denominator: f64,
}

impl MeasureResult {
    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }
}

fn check_columns(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if let Some(&bad) = a.iter().chain(b).find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(bad));
    }
    Ok(())
}

/// `Σ zf(r, p) / Σ r` over paired samples.
pub fn base_sens(reference: &[f64], prediction: &[f64], op: AndOperator) -> Result<Fraction> {
    check_columns(reference, prediction)?;
    let mut numerator = Accumulator::default();
    let mut denominator = Accumulator::default();
    for (&r, &p) in reference.iter().zip(prediction) {
        numerator.add(op.apply(r, p));
        denominator.add(r);
    }
    Ok(Fraction {
        numerator: numerator.value(),
        denominator: denominator.value(),
    })
}

/// One measure for one class, from memberships of the class in
/// `reference` and `prediction`.
pub fn measure_columns(measure: Measure, reference: &[f64], prediction: &[f64], op: AndOperator) -> Result<Fraction> {
    check_columns(reference, prediction)?;
    let (weights, partner) = measure.arguments(reference, prediction);
    base_sens(&weights, &partner, op)
}

pub fn measure(
    reference: &MembershipMatrix,
    prediction: &MembershipMatrix,
    measure: Measure,
    class: usize,
    op: AndOperator,
) -> Result<MeasureResult> {
    reference.same_layout(prediction)?;
    reference.check_class(class)?;
    let fraction = measure_columns(measure, &reference.column(class), &prediction.column(class), op)?;
    Ok(MeasureResult {
        measure,
        class: reference.class_names()[class].clone(),
        flavor: op.into(),
        value: fraction.value(),
        denominator: fraction.denominator,
    })
}

pub fn sens(r: &MembershipMatrix, p: &MembershipMatrix, class: usize, op: AndOperator) -> Result<MeasureResult> {
    measure(r, p, Measure::Sens, class, op)
}

pub fn spec(r: &MembershipMatrix, p: &MembershipMatrix, class: usize, op: AndOperator) -> Result<MeasureResult> {
    measure(r, p, Measure::Spec, class, op)
}

pub fn ppv(r: &MembershipMatrix, p: &MembershipMatrix, class: usize, op: AndOperator) -> Result<MeasureResult> {
    measure(r, p, Measure::Ppv, class, op)
}

pub fn npv(r: &MembershipMatrix, p: &MembershipMatrix, class: usize, op: AndOperator) -> Result<MeasureResult> {
    measure(r, p, Measure::Npv, class, op)
}

/// The value a perfect reproduction of the reference would reach.
///
/// With soft references only the weak operator attains 1.
pub fn ideal(reference: &MembershipMatrix, m: Measure, class: usize, op: AndOperator) -> Result<MeasureResult> {
    measure(reference, reference, m, class, op)
}

/// Any measure in any flavor: conjunction ratios or residual-based.
pub fn evaluate(
    reference: &MembershipMatrix,
    prediction: &MembershipMatrix,
    m: Measure,
    class: usize,
    flavor: Flavor,
) -> Result<MeasureResult> {
    match flavor {
        Flavor::Mae => {
            crate::regression::regression_measure(reference, prediction, m, class, crate::regression::ErrorKind::Mae)
        }
        Flavor::Rmse => {
            crate::regression::regression_measure(reference, prediction, m, class, crate::regression::ErrorKind::Rmse)
        }
        _ => measure(
            reference,
            prediction,
            m,
            class,
            flavor.operator().expect("conjunction flavor"),
        ),
    }
}

/// Denominator-weighted average over disjoint groups of samples.
///
/// Equals the measure computed on all samples at once. Groups with zero
/// denominator carry no weight.
pub fn weighted_average(results: &[MeasureResult]) -> Result<MeasureResult> {
    let first = results
        .first()
        .ok_or_else(|| Error::MixedMeasure("no results to average".into()))?;
    for r in &results[1..] {
        if (r.measure, r.flavor) != (first.measure, first.flavor) || r.class != first.class {
            return Err(Error::MixedMeasure(format!(
                "{} {} of {} vs {} {} of {}",
                first.flavor, first.measure, first.class, r.flavor, r.measure, r.class
            )));
        }
    }
    let denominator = sum::sum(results.iter().map(|r| r.denominator));
    let weighted = sum::sum(results.iter().filter_map(|r| r.value.map(|v| v * r.denominator)));
    let value = match first.flavor {
        Flavor::Rmse => {
            // Average the weighted squared residuals, not the roots.
            let mse = sum::sum(
                results
                    .iter()
                    .filter_map(|r| r.value.map(|v| (1.0 - v) * (1.0 - v) * r.denominator)),
            );
            (denominator > 0.0).then(|| 1.0 - (mse / denominator).sqrt())
        }
        _ => (denominator > 0.0).then(|| (weighted / denominator).clamp(0.0, 1.0)),
    };
    Ok(MeasureResult {
        measure: first.measure,
        class: first.class.clone(),
        flavor: first.flavor,
        value,
        denominator,
    })
}
