//! Residual-based measures.
//!
//! The product confusion matrix of the observed prediction is compared with
//! the one a perfect prediction would give. The per-class residuals
//! `p - r` are then summarized as a weighted mean absolute error (wMAE) or
//! a weighted root mean squared error (wRMSE). Sensitivity and specificity
//! weight the residuals by the reference memberships `r` and `1 - r`, the
//! predictive values by the predicted memberships `p` and `1 - p`. Each
//! measure is reported as `1 - error`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{Flavor, Measure, MeasureResult};
use crate::membership::{MembershipMatrix, World};
use crate::sum::{self, Accumulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Mae,
    Rmse,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Mae => "mae",
            ErrorKind::Rmse => "rmse",
        }
    }
}

impl From<ErrorKind> for Flavor {
    fn from(kind: ErrorKind) -> Self {
        match kind {
            ErrorKind::Mae => Flavor::Mae,
            ErrorKind::Rmse => Flavor::Rmse,
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ErrorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mae" => Ok(ErrorKind::Mae),
            "rmse" => Ok(ErrorKind::Rmse),
            other => Err(Error::Config(format!("unknown error measure `{other}`"))),
        }
    }
}

/// Difference between the observed and the ideal product confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix {
    deltas: Vec<f64>,
    abs_deltas: Vec<f64>,
    residuals: Vec<f64>,
    class_names: Vec<String>,
    n_samples: usize,
}

impl ResidualMatrix {
    pub fn new(reference: &MembershipMatrix, prediction: &MembershipMatrix) -> Result<Self> {
        reference.same_layout(prediction)?;
        let k = reference.n_classes();
        let mut deltas = vec![Accumulator::default(); k * k];
        let mut abs_deltas = vec![Accumulator::default(); k * k];
        let mut residuals = Vec::with_capacity(reference.n_samples() * k);
        for (r, p) in reference.rows().zip(prediction.rows()) {
            residuals.extend(p.iter().zip(r).map(|(p, r)| p - r));
            for i in 0..k {
                for j in 0..k {
                    // r_i p_j - r_i r_j
                    let d = r[i] * (p[j] - r[j]);
                    deltas[i * k + j].add(d);
                    abs_deltas[i * k + j].add(d.abs());
                }
            }
        }
        Ok(ResidualMatrix {
            deltas: deltas.iter().map(Accumulator::value).collect(),
            abs_deltas: abs_deltas.iter().map(Accumulator::value).collect(),
            residuals,
            class_names: reference.class_names().to_vec(),
            n_samples: reference.n_samples(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Summed signed residual for reference class `i`, predicted class `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.deltas[i * self.n_classes() + j]
    }

    /// Summed absolute per-sample residual for element `(i, j)`.
    pub fn abs_sum(&self, i: usize, j: usize) -> f64 {
        self.abs_deltas[i * self.n_classes() + j]
    }

    /// Per-sample residual `p - r` of one class.
    pub fn residual(&self, sample: usize, class: usize) -> f64 {
        self.residuals[sample * self.n_classes() + class]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.deltas
            .chunks(self.n_classes())
            .map(|row| sum::sum(row.iter().copied()))
            .collect()
    }
}

pub fn residual_matrix(reference: &MembershipMatrix, prediction: &MembershipMatrix) -> Result<ResidualMatrix> {
    ResidualMatrix::new(reference, prediction)
}

/// Weighted error summary of one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedError {
    pub mae: f64,
    pub rmse: f64,
    pub weight: f64,
}

/// Weighted MAE and RMSE of `prediction - reference`; `None` without weight.
pub fn weighted_error(weights: &[f64], reference: &[f64], prediction: &[f64]) -> Result<Option<WeightedError>> {
    if weights.len() != reference.len() || reference.len() != prediction.len() {
        return Err(Error::LengthMismatch(
            weights.len(),
            reference.len().max(prediction.len()),
        ));
    }
    let mut w = Accumulator::default();
    let mut abs = Accumulator::default();
    let mut sq = Accumulator::default();
    for ((&wi, &r), &p) in weights.iter().zip(reference).zip(prediction) {
        let d = p - r;
        w.add(wi);
        abs.add(wi * d.abs());
        sq.add(wi * d * d);
    }
    let weight = w.value();
    if weight <= 0.0 {
        return Ok(None);
    }
    Ok(Some(WeightedError {
        mae: (abs.value() / weight).max(0.0),
        rmse: (sq.value() / weight).max(0.0).sqrt(),
        weight,
    }))
}

fn residual_weights(measure: Measure, reference: &[f64], prediction: &[f64]) -> Vec<f64> {
    match measure {
        Measure::Sens => reference.to_vec(),
        Measure::Spec => reference.iter().map(|r| 1.0 - r).collect(),
        Measure::Ppv => prediction.to_vec(),
        Measure::Npv => prediction.iter().map(|p| 1.0 - p).collect(),
    }
}

/// `1 - wMAE` or `1 - wRMSE` of one class, weighted as `measure` requires.
pub fn regression_measure(
    reference: &MembershipMatrix,
    prediction: &MembershipMatrix,
    measure: Measure,
    class: usize,
    kind: ErrorKind,
) -> Result<MeasureResult> {
    reference.same_layout(prediction)?;
    reference.check_class(class)?;
    let r = reference.column(class);
    let p = prediction.column(class);
    let weights = residual_weights(measure, &r, &p);
    let err = weighted_error(&weights, &r, &p)?;
    Ok(MeasureResult {
        measure,
        class: reference.class_names()[class].clone(),
        flavor: kind.into(),
        value: err.map(|e| match kind {
            ErrorKind::Mae => 1.0 - e.mae,
            ErrorKind::Rmse => 1.0 - e.rmse,
        }),
        denominator: err.map_or(0.0, |e| e.weight),
    })
}

macro_rules! regression_shorthand {
    ($($name:ident => $measure:ident, $kind:ident;)*) => {
        $(
            pub fn $name(r: &MembershipMatrix, p: &MembershipMatrix, class: usize) -> Result<MeasureResult> {
                regression_measure(r, p, Measure::$measure, class, ErrorKind::$kind)
            }
        )*
    };
}

regression_shorthand! {
    sens_mae => Sens, Mae;
    spec_mae => Spec, Mae;
    ppv_mae => Ppv, Mae;
    npv_mae => Npv, Mae;
    sens_rmse => Sens, Rmse;
    spec_rmse => Spec, Rmse;
    ppv_rmse => Ppv, Rmse;
    npv_rmse => Npv, Rmse;
}

/// Range of wRMSE values compatible with a given wMAE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseBounds {
    pub min: f64,
    pub max: f64,
    /// False when `max` is the continuous relaxation (an upper bound) rather
    /// than the maximum over the actual samples.
    pub exact: bool,
}

/// Per-sample limits on `|p - r|`, with the residual weights.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviationCaps {
    /// Crisp reference with unboundedly many samples: every deviation may reach 1.
    Crisp,
    Soft {
        caps: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl DeviationCaps {
    /// Caps `max(r, 1 - r)` with sensitivity weights `r`.
    pub fn for_sensitivity(reference: &[f64]) -> Self {
        DeviationCaps::Soft {
            caps: deviation_caps(reference),
            weights: reference.to_vec(),
        }
    }

    /// Caps `max(r, 1 - r)` with specificity weights `1 - r`.
    pub fn for_specificity(reference: &[f64]) -> Self {
        DeviationCaps::Soft {
            caps: deviation_caps(reference),
            weights: reference.iter().map(|r| 1.0 - r).collect(),
        }
    }
}

/// Largest possible `|p - r|` for each reference membership.
pub fn deviation_caps(reference: &[f64]) -> Vec<f64> {
    reference.iter().map(|&r| r.max(1.0 - r)).collect()
}

/// Up to this many weighted samples the maximum is found by enumerating
/// the vertices of the feasible polytope.
const EXACT_LIMIT: usize = 20;

pub fn mae_rmse_bounds(wmae: f64, caps: &DeviationCaps) -> Result<RmseBounds> {
    match caps {
        DeviationCaps::Crisp => {
            if !(0.0..=1.0).contains(&wmae) {
                return Err(Error::InfeasibleMae { mae: wmae, max: 1.0 });
            }
            Ok(RmseBounds {
                min: wmae,
                max: wmae.sqrt(),
                exact: true,
            })
        }
        DeviationCaps::Soft { caps, weights } => soft_bounds(wmae, caps, weights),
    }
}

fn soft_bounds(wmae: f64, caps: &[f64], weights: &[f64]) -> Result<RmseBounds> {
    if caps.len() != weights.len() {
        return Err(Error::LengthMismatch(caps.len(), weights.len()));
    }
    let total = sum::sum(weights.iter().copied());
    if total.is_nan() || total <= 0.0 || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Config(
            "residual weights must be non-negative with positive sum".into(),
        ));
    }
    // (normalized weight, cap), dropping items that cannot carry deviation
    let mut items: Vec<(f64, f64)> = weights
        .iter()
        .zip(caps)
        .filter(|(&w, &c)| w > 0.0 && c > 0.0)
        .map(|(&w, &c)| (w / total, c.min(1.0)))
        .collect();
    let max_mae = sum::sum(items.iter().map(|(w, c)| w * c));
    let slack = 1e-12;
    if wmae.is_nan() || wmae < 0.0 || wmae > max_mae + slack {
        return Err(Error::InfeasibleMae {
            mae: wmae,
            max: max_mae,
        });
    }
    let wmae = wmae.min(max_mae);
    if wmae == 0.0 {
        return Ok(RmseBounds {
            min: 0.0,
            max: 0.0,
            exact: true,
        });
    }

    items.sort_by(|a, b| b.1.total_cmp(&a.1));
    let min = min_square(&items, wmae).sqrt();
    let (max_sq, exact) = if items.len() <= EXACT_LIMIT {
        (max_square_exact(&items, wmae), true)
    } else {
        (max_square_relaxed(&items, wmae), false)
    };
    Ok(RmseBounds {
        min,
        max: max_sq.sqrt().max(min),
        exact,
    })
}

/// Minimum of `Σ w d²` subject to `Σ w d = mae`, `0 <= d <= cap`: all
/// deviations equal to a common level, except those capped below it.
fn min_square(items: &[(f64, f64)], mae: f64) -> f64 {
    // items sorted by cap descending; walk from the smallest cap upwards
    let mut remaining_budget = mae;
    let mut remaining_weight = sum::sum(items.iter().map(|(w, _)| *w));
    let mut acc = Accumulator::default();
    for (idx, &(w, c)) in items.iter().enumerate().rev() {
        let level = remaining_budget / remaining_weight;
        if c <= level {
            acc.add(w * c * c);
            remaining_budget -= w * c;
            remaining_weight -= w;
        } else {
            // all remaining items sit at the common level
            let rest: f64 = sum::sum(items[..=idx].iter().map(|(w, _)| *w));
            acc.add(rest * level * level);
            return acc.value();
        }
    }
    acc.value()
}

/// Maximum of `Σ w d²` subject to `Σ w d = mae`, `0 <= d <= cap`.
///
/// A convex function over a box cut by a hyperplane peaks at a vertex:
/// every deviation at 0 or at its cap except at most one.
fn max_square_exact(items: &[(f64, f64)], mae: f64) -> f64 {
    let n = items.len();
    let tol = 1e-12;
    let mut best = 0.0f64;
    let mut at_cap = vec![false; n];

    #[allow(clippy::too_many_arguments)]
    fn visit(
        idx: usize,
        budget: f64,
        value: f64,
        items: &[(f64, f64)],
        at_cap: &mut Vec<bool>,
        mae: f64,
        tol: f64,
        best: &mut f64,
    ) {
        let rest = mae - budget;
        if idx == items.len() {
            if rest <= tol {
                *best = best.max(value);
                return;
            }
            // one free sample takes the remaining budget; a lighter sample
            // reaches a larger deviation and thus a larger square
            let free = items
                .iter()
                .zip(at_cap.iter())
                .filter(|((w, c), &capped)| !capped && w * c >= rest - tol)
                .map(|((w, _), _)| *w)
                .fold(f64::INFINITY, f64::min);
            if free.is_finite() {
                *best = best.max(value + rest * rest / free);
            }
            return;
        }
        let (w, c) = items[idx];
        if budget + w * c <= mae + tol {
            at_cap[idx] = true;
            visit(
                idx + 1,
                budget + w * c,
                value + w * c * c,
                items,
                at_cap,
                mae,
                tol,
                best,
            );
            at_cap[idx] = false;
        }
        visit(idx + 1, budget, value, items, at_cap, mae, tol, best);
    }

    visit(0, 0.0, 0.0, items, &mut at_cap, mae, tol, &mut best);
    best
}

/// Upper bound on the maximum: each unit of deviation budget spent on a
/// sample with cap `c` adds at most `c` to `Σ w d²`, so filling caps in
/// decreasing order and valuing the remainder at the next cap bounds it.
fn max_square_relaxed(items: &[(f64, f64)], mae: f64) -> f64 {
    let mut budget = mae;
    let mut acc = Accumulator::default();
    for &(w, c) in items {
        let full = w * c;
        if full <= budget {
            acc.add(full * c);
            budget -= full;
        } else {
            acc.add(budget * c);
            break;
        }
    }
    acc.value()
}

/// Largest possible inter-class error: each misclassification is one
/// under- and one overestimation in a closed world.
pub fn interclass_bound(world: World, n_classes: usize, kind: ErrorKind) -> f64 {
    let mae_bound = match world {
        World::Closed => 2.0,
        World::Open => n_classes as f64,
    };
    match kind {
        ErrorKind::Mae => mae_bound,
        ErrorKind::Rmse => mae_bound.sqrt(),
    }
}

/// Error summed over all classes: `Σ_g mean|p_g - r_g|` for MAE and
/// `sqrt(Σ_g mean (p_g - r_g)²)` for RMSE. With `normalize` the value is
/// divided by [`interclass_bound`] for the reference's world.
pub fn interclass_error(
    reference: &MembershipMatrix,
    prediction: &MembershipMatrix,
    kind: ErrorKind,
    normalize: bool,
) -> Result<f64> {
    reference.same_layout(prediction)?;
    let n = reference.n_samples() as f64;
    let k = reference.n_classes();
    let per_class = (0..k).map(|g| {
        let terms = reference.rows().zip(prediction.rows()).map(|(r, p)| {
            let d = p[g] - r[g];
            match kind {
                ErrorKind::Mae => d.abs(),
                ErrorKind::Rmse => d * d,
            }
        });
        sum::sum(terms) / n
    });
    let total = sum::sum(per_class);
    let value = match kind {
        ErrorKind::Mae => total,
        ErrorKind::Rmse => total.sqrt(),
    };
    Ok(if normalize {
        value / interclass_bound(reference.world(), k, kind)
    } else {
        value
    })
}
