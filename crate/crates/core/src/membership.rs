//! Class-membership matrices.
//!
//! A [`MembershipMatrix`] holds one row per sample and one column per class.
//! Entries are fractions in `[0, 1]`. In a closed world every row sums to 1;
//! in an open (one-class) world classes are independent and rows may sum to
//! anything, including more than 1 when a sample belongs to several classes.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum World {
    #[default]
    Closed,
    Open,
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            World::Closed => "closed",
            World::Open => "open",
        })
    }
}

impl std::str::FromStr for World {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(World::Closed),
            "open" => Ok(World::Open),
            other => Err(Error::Config(format!("unknown world mode `{other}`"))),
        }
    }
}

/// Numeric slack accepted by [`MembershipMatrix::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Entries within this distance outside `[0, 1]` are clamped.
    pub clamp: f64,
    /// Closed-world rows within this distance of 1 are renormalized.
    pub sum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { clamp: 1e-9, sum: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    values: Vec<f64>,
    n_samples: usize,
    class_names: Vec<String>,
    world: World,
}

impl MembershipMatrix {
    /// Validates raw rows and builds a matrix.
    ///
    /// Entries slightly outside `[0, 1]` are clamped; closed-world rows whose
    /// sum is within `tol.sum` of 1 are divided by their sum.
    pub fn validate(rows: &[Vec<f64>], class_names: Vec<String>, world: World, tol: Tolerances) -> Result<Self> {
        let n_classes = class_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_classes);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_classes {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {n_classes}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(values, class_names, world, tol)
    }

    /// Like [`validate`](Self::validate), from row-major storage.
    pub fn from_flat(mut values: Vec<f64>, class_names: Vec<String>, world: World, tol: Tolerances) -> Result<Self> {
        let n_classes = class_names.len();
        if n_classes < 2 {
            return Err(Error::Shape(format!("need at least 2 classes, got {n_classes}")));
        }
        let mut seen = HashSet::new();
        for name in &class_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Shape(format!("duplicate class name `{name}`")));
            }
        }
        if values.is_empty() || !values.len().is_multiple_of(n_classes) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of {n_classes} classes",
                values.len()
            )));
        }
        let n_samples = values.len() / n_classes;

        for (row, chunk) in values.chunks_mut(n_classes).enumerate() {
            for (column, v) in chunk.iter_mut().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row, column, value: *v });
                }
                if *v < -tol.clamp || *v > 1.0 + tol.clamp {
                    return Err(Error::OutOfRange { row, column, value: *v });
                }
                *v = v.clamp(0.0, 1.0);
            }
            if world == World::Closed {
                let total = sum::sum(chunk.iter().copied());
                if (total - 1.0).abs() > tol.sum {
                    return Err(Error::RowSumViolation {
                        row,
                        sample: None,
                        sum: total,
                    });
                }
                if total != 1.0 {
                    chunk.iter_mut().for_each(|v| *v /= total);
                }
            }
        }

        Ok(MembershipMatrix {
            values,
            n_samples,
            class_names,
            world,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn world(&self) -> World {
        self.world
    }

    pub fn get(&self, sample: usize, class: usize) -> f64 {
        self.values[sample * self.n_classes() + class]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        let k = self.n_classes();
        &self.values[sample * k..(sample + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks(self.n_classes())
    }

    pub fn column(&self, class: usize) -> Vec<f64> {
        self.rows().map(|row| row[class]).collect()
    }

    pub fn class_index(&self, name: &str) -> Result<usize> {
        self.class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownClass(name.to_string()))
    }

    pub(crate) fn check_class(&self, class: usize) -> Result<()> {
        if class < self.n_classes() {
            Ok(())
        } else {
            Err(Error::UnknownClass(format!("#{class}")))
        }
    }

    /// Memberships of the dummy class "not `class`", i.e. `1 - m[:, class]`.
    pub fn negate_class(&self, class: usize) -> Result<Vec<f64>> {
        self.check_class(class)?;
        Ok(self.rows().map(|row| 1.0 - row[class]).collect())
    }

    /// True if every entry of the row is exactly 0 or 1.
    pub fn is_crisp_row(&self, sample: usize) -> bool {
        self.row(sample).iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn is_crisp(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Per-class sum of memberships over all samples.
    pub fn class_totals(&self) -> Vec<f64> {
        (0..self.n_classes())
            .map(|g| sum::sum(self.rows().map(|row| row[g])))
            .collect()
    }

    pub fn same_layout(&self, other: &MembershipMatrix) -> Result<()> {
        if self.class_names != other.class_names {
            return Err(Error::ClassNameMismatch {
                left: self.class_names.clone(),
                right: other.class_names.clone(),
            });
        }
        if self.n_samples != other.n_samples {
            return Err(Error::ShapeMismatch {
                left: (self.n_samples, self.n_classes()),
                right: (other.n_samples, other.n_classes()),
            });
        }
        Ok(())
    }

    /// Appends the rows of `other` below the rows of `self`.
    pub fn stack(&self, other: &MembershipMatrix) -> Result<MembershipMatrix> {
        if self.class_names != other.class_names {
            return Err(Error::ClassNameMismatch {
                left: self.class_names.clone(),
                right: other.class_names.clone(),
            });
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(MembershipMatrix {
            values,
            n_samples: self.n_samples + other.n_samples,
            class_names: self.class_names.clone(),
            world: if self.world == other.world {
                self.world
            } else {
                World::Open
            },
        })
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, samples: &[usize]) -> Result<MembershipMatrix> {
        if samples.is_empty() {
            return Err(Error::Shape("selection is empty".into()));
        }
        let mut values = Vec::with_capacity(samples.len() * self.n_classes());
        for &i in samples {
            if i >= self.n_samples {
                return Err(Error::Shape(format!("row {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
        }
        Ok(MembershipMatrix {
            values,
            n_samples: samples.len(),
            class_names: self.class_names.clone(),
            world: self.world,
        })
    }

    /// Closes an open-world matrix by dividing each row by its sum.
    ///
    /// Rows summing to zero cannot be closed and are reported as
    /// [`Error::RowSumViolation`].
    pub fn close_world(&self) -> Result<MembershipMatrix> {
        let k = self.n_classes();
        let mut values = self.values.clone();
        for (row, chunk) in values.chunks_mut(k).enumerate() {
            let total = sum::sum(chunk.iter().copied());
            if total <= 0.0 {
                return Err(Error::RowSumViolation {
                    row,
                    sample: None,
                    sum: total,
                });
            }
            if total != 1.0 {
                chunk.iter_mut().for_each(|v| *v /= total);
            }
        }
        Ok(MembershipMatrix {
            values,
            n_samples: self.n_samples,
            class_names: self.class_names.clone(),
            world: World::Closed,
        })
    }

    pub fn harden(&self, rule: &HardeningRule) -> Result<MembershipMatrix> {
        let k = self.n_classes();
        let mut values = vec![0.0; self.values.len()];
        let world = match *rule {
            HardeningRule::WinnerTakesAll { tie_break } => {
                for (i, (row, out)) in self.rows().zip(values.chunks_mut(k)).enumerate() {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let winners: Vec<usize> = (0..k).filter(|&g| row[g] == max).collect();
                    if winners.len() > 1 && tie_break == TieBreak::Error {
                        return Err(Error::Tie {
                            row: i,
                            classes: winners,
                        });
                    }
                    out[winners[0]] = 1.0;
                }
                World::Closed
            }
            HardeningRule::Threshold { threshold } => {
                for (row, out) in self.rows().zip(values.chunks_mut(k)) {
                    for (o, &v) in out.iter_mut().zip(row) {
                        if v > threshold {
                            *o = 1.0;
                        }
                    }
                }
                World::Open
            }
        };
        Ok(MembershipMatrix {
            values,
            n_samples: self.n_samples,
            class_names: self.class_names.clone(),
            world,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
    Error,
}

/// Converts soft memberships into crisp ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HardeningRule {
    /// Full membership to the class with the largest value.
    WinnerTakesAll { tie_break: TieBreak },
    /// Membership to every class whose value is strictly above the threshold.
    Threshold { threshold: f64 },
}

impl HardeningRule {
    pub fn winner_takes_all() -> Self {
        HardeningRule::WinnerTakesAll {
            tie_break: TieBreak::LowestIndex,
        }
    }

    pub fn threshold(threshold: f64) -> Result<Self> {
        if threshold > 0.0 && threshold < 1.0 {
            Ok(HardeningRule::Threshold { threshold })
        } else {
            Err(Error::Config(format!(
                "hardening threshold {threshold} must lie in (0, 1)"
            )))
        }
    }

    /// The threshold `1 / n_classes`.
    pub fn reciprocal_threshold(n_classes: usize) -> Result<Self> {
        Self::threshold(1.0 / n_classes as f64)
    }
}

impl fmt::Display for HardeningRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HardeningRule::WinnerTakesAll { .. } => f.write_str("wta"),
            HardeningRule::Threshold { threshold } => write!(f, "threshold={threshold}"),
        }
    }
}

impl std::str::FromStr for HardeningRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "wta" {
            return Ok(HardeningRule::winner_takes_all());
        }
        if let Some(t) = s.strip_prefix("threshold=") {
            let threshold: f64 = t.parse().map_err(|_| Error::Config(format!("bad threshold `{t}`")))?;
            return HardeningRule::threshold(threshold);
        }
        Err(Error::Config(format!("unknown hardening rule `{s}`")))
    }
}

/// Reference-label encodings: a single class, a mixture of classes with
/// given fractions, or uncertainty between several classes.
pub mod encode {
    use crate::error::{Error, Result};

    pub fn crisp(class: usize, n_classes: usize) -> Result<Vec<f64>> {
        mixture(&[(class, 1.0)], n_classes)
    }

    /// Fractions are normalized to sum 1, e.g. area fractions of a section.
    pub fn mixture(parts: &[(usize, f64)], n_classes: usize) -> Result<Vec<f64>> {
        let mut row = vec![0.0; n_classes];
        for &(class, fraction) in parts {
            if class >= n_classes {
                return Err(Error::UnknownClass(format!("#{class}")));
            }
            if !(fraction.is_finite() && fraction >= 0.0) {
                return Err(Error::Domain(fraction));
            }
            row[class] += fraction;
        }
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::Config("mixture has no positive fraction".into()));
        }
        row.iter_mut().for_each(|v| *v /= total);
        Ok(row)
    }

    /// Equal shares among the candidate classes.
    pub fn uncertain(classes: &[usize], n_classes: usize) -> Result<Vec<f64>> {
        let parts: Vec<(usize, f64)> = classes.iter().map(|&c| (c, 1.0)).collect();
        mixture(&parts, n_classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| ((b'A' + i as u8) as char).to_string()).collect()
    }

    fn closed(rows: &[Vec<f64>]) -> Result<MembershipMatrix> {
        MembershipMatrix::validate(rows, names(rows[0].len()), World::Closed, Tolerances::default())
    }

    #[test]
    fn crisp_identity_accepted_unchanged() {
        let m = closed(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.row(0), &[1.0, 0.0]);
        assert_eq!(m.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn near_unit_row_is_renormalized() {
        let tol = Tolerances { clamp: 1e-9, sum: 1e-5 };
        let m = MembershipMatrix::validate(&[vec![0.5, 0.5000001]], names(2), World::Closed, tol).unwrap();
        assert!((m.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(m.get(0, 0) < m.get(0, 1));
    }

    #[test]
    fn short_row_is_rejected() {
        let tol = Tolerances { clamp: 1e-9, sum: 1e-5 };
        let err = MembershipMatrix::validate(&[vec![0.7, 0.2]], names(2), World::Closed, tol).unwrap_err();
        assert!(matches!(err, Error::RowSumViolation { row: 0, .. }));
    }

    #[test]
    fn open_world_allows_multiple_membership() {
        let m = MembershipMatrix::validate(
            &[vec![1.0, 1.0], vec![0.0, 0.0]],
            names(2),
            World::Open,
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(m.row(0), &[1.0, 1.0]);
    }

    #[test]
    fn clamps_float_noise_but_rejects_larger_excursions() {
        let m = closed(&[vec![1.0 + 1e-12, -1e-12]]).unwrap();
        assert_eq!(m.row(0), &[1.0, 0.0]);
        let err = closed(&[vec![1.1, -0.1]]).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }));
        let err = closed(&[vec![f64::NAN, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn shape_errors() {
        let tol = Tolerances::default();
        assert!(matches!(
            MembershipMatrix::validate(&[vec![1.0]], names(1), World::Open, tol),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            MembershipMatrix::validate(&[], names(2), World::Open, tol),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            MembershipMatrix::validate(&[vec![1.0, 0.0]], vec!["a".into(), "a".into()], World::Open, tol),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            MembershipMatrix::validate(&[vec![1.0, 0.0, 0.0]], names(2), World::Open, tol),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn negation_examples() {
        let m = MembershipMatrix::validate(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.3, 0.7], vec![0.5, 0.5]],
            names(2),
            World::Closed,
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(m.negate_class(0).unwrap(), vec![0.0, 1.0, 0.7, 0.5]);
        assert!(matches!(m.negate_class(2), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn negation_of_crisp_row_equals_other_classes() {
        let m = closed(&[vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(m.negate_class(1).unwrap(), vec![0.0]);
        assert_eq!(m.negate_class(0).unwrap(), vec![m.get(0, 1) + m.get(0, 2)]);
    }

    #[test]
    fn winner_takes_all() {
        let m = closed(&[vec![0.2, 0.5, 0.3], vec![0.4, 0.4, 0.2]]).unwrap();
        let h = m.harden(&HardeningRule::winner_takes_all()).unwrap();
        assert_eq!(h.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(h.row(1), &[1.0, 0.0, 0.0]);
        assert_eq!(h.world(), World::Closed);

        let strict = HardeningRule::WinnerTakesAll {
            tie_break: TieBreak::Error,
        };
        assert!(matches!(
            m.harden(&strict),
            Err(Error::Tie { row: 1, ref classes }) if classes == &vec![0, 1]
        ));
    }

    #[test]
    fn threshold_hardening() {
        let m = closed(&[vec![0.2, 0.5, 0.3]]).unwrap();
        let rule = HardeningRule::reciprocal_threshold(3).unwrap();
        let h = m.harden(&rule).unwrap();
        assert_eq!(h.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(h.world(), World::Open);
        assert!(HardeningRule::threshold(1.0).is_err());
        assert!(HardeningRule::threshold(0.0).is_err());
    }

    #[test]
    fn hardening_rules_parse() {
        assert_eq!(
            "wta".parse::<HardeningRule>().unwrap(),
            HardeningRule::winner_takes_all()
        );
        assert_eq!(
            "threshold=0.25".parse::<HardeningRule>().unwrap(),
            HardeningRule::Threshold { threshold: 0.25 }
        );
        assert!("threshold=x".parse::<HardeningRule>().is_err());
        assert!("argmax".parse::<HardeningRule>().is_err());
    }

    #[test]
    fn close_world_divides_by_row_sum() {
        let m = MembershipMatrix::validate(&[vec![0.2, 0.6]], names(2), World::Open, Tolerances::default()).unwrap();
        let c = m.close_world().unwrap();
        assert_eq!(c.world(), World::Closed);
        assert!((c.get(0, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn encodings() {
        assert_eq!(encode::crisp(1, 3).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(encode::uncertain(&[0, 2], 3).unwrap(), vec![0.5, 0.0, 0.5]);
        let mix = encode::mixture(&[(0, 0.1), (1, 0.9)], 3).unwrap();
        assert!((mix[0] - 0.1).abs() < 1e-15 && (mix[1] - 0.9).abs() < 1e-15);
        assert!(encode::crisp(3, 3).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn soft_rows(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
            prop::collection::vec(prop::collection::vec(0.001f64..1.0, k), 1..20).prop_map(|rows| {
                rows.into_iter()
                    .map(|r| {
                        let s: f64 = r.iter().sum();
                        r.into_iter().map(|v| v / s).collect()
                    })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn negation_is_an_involution(col in prop::collection::vec(0.0f64..=1.0, 1..30)) {
                for x in col {
                    // 1 - (1 - x) is exact for x in [0.5, 1]; below that it may round.
                    let back = 1.0 - (1.0 - x);
                    prop_assert!((back - x).abs() <= f64::EPSILON);
                    if x >= 0.5 {
                        prop_assert_eq!(back, x);
                    }
                }
            }

            #[test]
            fn hardening_yields_one_hot_rows(rows in soft_rows(3)) {
                let m = closed(&rows).unwrap();
                let rule = HardeningRule::winner_takes_all();
                let h = m.harden(&rule).unwrap();
                for row in h.rows() {
                    prop_assert_eq!(row.iter().sum::<f64>(), 1.0);
                    prop_assert!(row.iter().all(|&v| v == 0.0 || v == 1.0));
                }
                prop_assert_eq!(h.harden(&rule).unwrap(), h);
            }
        }
    }
}
