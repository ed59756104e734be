//! Threshold sweeps and statistics across cross-validation groups.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{self, Flavor, Measure};
use crate::membership::{HardeningRule, MembershipMatrix};
use crate::operators::AndOperator;
use crate::sum;

/// Values of the group-by columns, e.g. `["3", "7"]` for iteration 3, fold 7.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GroupKey(pub Vec<String>);

impl GroupKey {
    /// Label like `iteration=3,fold=7`, or `all` for the ungrouped case.
    pub fn label(&self, columns: &[String]) -> String {
        if self.0.is_empty() {
            return "all".to_string();
        }
        columns
            .iter()
            .zip(&self.0)
            .map(|(c, v)| format!("{c}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Numeric components compare as numbers, the rest lexically.
impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            let ord = match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
                _ => a.cmp(b),
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("all")
        } else {
            f.write_str(&self.0.join(","))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub key: GroupKey,
    pub sample_ids: Vec<String>,
    pub reference: MembershipMatrix,
    pub prediction: MembershipMatrix,
}

/// Reference and prediction per group, sorted by key.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedPredictions {
    columns: Vec<String>,
    groups: Vec<Group>,
}

impl GroupedPredictions {
    pub fn new(columns: Vec<String>, mut groups: Vec<Group>) -> Result<Self> {
        let first = groups.first().ok_or_else(|| Error::Shape("no groups".into()))?;
        let names = first.reference.class_names().to_vec();
        for g in &groups {
            g.reference
                .same_layout(&g.prediction)
                .map_err(|e| e.in_group(&g.key.to_string()))?;
            if g.reference.class_names() != names.as_slice() {
                return Err(Error::ClassNameMismatch {
                    left: names,
                    right: g.reference.class_names().to_vec(),
                });
            }
            if g.key.0.len() != columns.len() {
                return Err(Error::Schema(format!(
                    "group key {} does not match columns {columns:?}",
                    g.key
                )));
            }
            if g.sample_ids.len() != g.reference.n_samples() {
                return Err(Error::Shape(format!("group {}: sample ids do not match rows", g.key)));
            }
        }
        groups.sort_by(|a, b| a.key.cmp(&b.key));
        if let Some(w) = groups.windows(2).find(|w| w[0].key == w[1].key) {
            return Err(Error::Schema(format!("duplicate group key {}", w[0].key)));
        }
        Ok(GroupedPredictions { columns, groups })
    }

    /// A single group holding all samples.
    pub fn single(reference: MembershipMatrix, prediction: MembershipMatrix) -> Result<Self> {
        let sample_ids = (1..=reference.n_samples()).map(|i| i.to_string()).collect();
        Self::new(
            Vec::new(),
            vec![Group {
                key: GroupKey::default(),
                sample_ids,
                reference,
                prediction,
            }],
        )
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn class_names(&self) -> &[String] {
        self.groups[0].reference.class_names()
    }

    pub fn n_samples(&self) -> usize {
        self.groups.iter().map(|g| g.reference.n_samples()).sum()
    }

    pub fn label(&self, group: &Group) -> String {
        group.key.label(&self.columns)
    }

    /// Runs `f` on every group, in parallel when enabled; results keep group order.
    pub fn map<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&Group) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.groups.par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.groups.iter().map(f).collect()
        }
    }
}

/// What to do with reference rows that are soft in the swept class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoftRows {
    #[default]
    Reject,
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CurveOptions {
    pub soft_rows: SoftRows,
    /// Count `p >= t` as positive instead of `p > t`.
    pub inclusive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    /// `None` without negative reference samples.
    pub spec: Option<f64>,
    /// `None` without positive reference samples.
    pub sens: Option<f64>,
}

/// Predicted memberships of crisp positives and negatives, each sorted.
struct SplitScores {
    positives: Vec<f64>,
    negatives: Vec<f64>,
}

impl SplitScores {
    fn new(
        reference: &MembershipMatrix,
        prediction: &MembershipMatrix,
        class: usize,
        soft_rows: SoftRows,
    ) -> Result<Self> {
        reference.same_layout(prediction)?;
        reference.check_class(class)?;
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        let mut soft = 0;
        for (r, p) in reference.rows().zip(prediction.rows()) {
            match r[class] {
                1.0 => positives.push(p[class]),
                0.0 => negatives.push(p[class]),
                _ => soft += 1,
            }
        }
        if soft > 0 && soft_rows == SoftRows::Reject {
            return Err(Error::SoftReference {
                class: reference.class_names()[class].clone(),
                count: soft,
            });
        }
        positives.sort_by(f64::total_cmp);
        negatives.sort_by(f64::total_cmp);
        Ok(SplitScores { positives, negatives })
    }

    fn point(&self, threshold: f64, inclusive: bool) -> CurvePoint {
        let above = |sorted: &[f64]| {
            let below = if inclusive {
                sorted.partition_point(|&v| v < threshold)
            } else {
                sorted.partition_point(|&v| v <= threshold)
            };
            sorted.len() - below
        };
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let tp = above(&self.positives);
        let fp = above(&self.negatives);
        CurvePoint {
            threshold,
            sens: ratio(tp, self.positives.len()),
            spec: ratio(self.negatives.len() - fp, self.negatives.len()),
        }
    }
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Config("thresholds must lie in [0, 1]".into()));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("thresholds must be strictly increasing".into()));
    }
    Ok(())
}

/// Sensitivity and specificity of class `class` when the prediction is
/// hardened at each threshold.
///
/// Without explicit thresholds the sweep visits 0, every distinct predicted
/// membership of the class and 1, which traces the exact step curve.
pub fn spec_sens_curve(
    reference: &MembershipMatrix,
    prediction: &MembershipMatrix,
    class: usize,
    thresholds: Option<&[f64]>,
    options: CurveOptions,
) -> Result<Vec<CurvePoint>> {
    let scores = SplitScores::new(reference, prediction, class, options.soft_rows)?;
    let grid: Vec<f64> = match thresholds {
        Some(t) => {
            check_thresholds(t)?;
            t.to_vec()
        }
        None => {
            let mut t: Vec<f64> = scores
                .positives
                .iter()
                .chain(&scores.negatives)
                .copied()
                .chain([0.0, 1.0])
                .collect();
            t.sort_by(f64::total_cmp);
            t.dedup();
            t
        }
    };
    Ok(grid.into_iter().map(|t| scores.point(t, options.inclusive)).collect())
}

/// Mean, sample standard deviation and quartiles of per-group values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub n_groups: usize,
    pub n_defined: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub p25: Option<f64>,
    pub p50: Option<f64>,
    pub p75: Option<f64>,
}

impl Summary {
    /// Undefined values are excluded; the standard deviation needs two
    /// defined values.
    pub fn of(values: &[Option<f64>]) -> Summary {
        let mut defined: Vec<f64> = values.iter().flatten().copied().collect();
        let n = defined.len();
        if n == 0 {
            return Summary {
                n_groups: values.len(),
                ..Summary::default()
            };
        }
        let mean = sum::sum(defined.iter().copied()) / n as f64;
        let sd = (n > 1).then(|| {
            let ss = sum::sum(defined.iter().map(|v| (v - mean) * (v - mean)));
            (ss / (n - 1) as f64).sqrt()
        });
        defined.sort_by(f64::total_cmp);
        Summary {
            n_groups: values.len(),
            n_defined: n,
            mean: Some(mean),
            sd,
            p25: Some(quantile(&defined, 0.25)),
            p50: Some(quantile(&defined, 0.5)),
            p75: Some(quantile(&defined, 0.75)),
        }
    }

    pub fn variance(&self) -> Option<f64> {
        self.sd.map(|s| s * s)
    }
}

/// Linear interpolation between order statistics (Hyndman & Fan type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub class: String,
    pub measure: Measure,
    pub flavor: Flavor,
    #[serde(flatten)]
    pub summary: Summary,
}

/// Per-class statistics of one measure over all groups.
pub fn group_statistics(gp: &GroupedPredictions, measure: Measure, flavor: Flavor) -> Result<Vec<GroupSummary>> {
    if gp.len() < 2 {
        return Err(Error::TooFewGroups {
            needed: 2,
            got: gp.len(),
        });
    }
    let per_group: Vec<Result<Vec<Option<f64>>>> = gp.map(|g| {
        (0..g.reference.n_classes())
            .map(|c| Ok(measures::evaluate(&g.reference, &g.prediction, measure, c, flavor)?.value))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_group(&g.key.to_string()))
    });
    let per_group = per_group.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(gp
        .class_names()
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let values: Vec<Option<f64>> = per_group.iter().map(|v| v[c]).collect();
            GroupSummary {
                class: name.clone(),
                measure,
                flavor,
                summary: Summary::of(&values),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComparison {
    pub var_soft: f64,
    pub var_crisp: f64,
    /// `var_crisp / var_soft`; `None` when the soft variance is 0.
    pub inflation_ratio: Option<f64>,
    pub n_groups: usize,
}

/// Across-group variance of a product-operator measure with soft
/// predictions versus the same measure after hardening.
pub fn variance_comparison(
    gp: &GroupedPredictions,
    class: usize,
    measure: Measure,
    rule: &HardeningRule,
) -> Result<VarianceComparison> {
    if gp.len() < 2 {
        return Err(Error::TooFewGroups {
            needed: 2,
            got: gp.len(),
        });
    }
    let pairs = gp.map(|g| -> Result<(Option<f64>, Option<f64>)> {
        let hard = g.prediction.harden(rule)?;
        let soft = measures::measure(&g.reference, &g.prediction, measure, class, AndOperator::Product)?;
        let crisp = measures::measure(&g.reference, &hard, measure, class, AndOperator::Product)?;
        Ok((soft.value, crisp.value))
    });
    let pairs = pairs.into_iter().collect::<Result<Vec<_>>>()?;
    let soft: Vec<Option<f64>> = pairs.iter().map(|p| p.0).collect();
    let crisp: Vec<Option<f64>> = pairs.iter().map(|p| p.1).collect();
    let (s, c) = (Summary::of(&soft), Summary::of(&crisp));
    let (Some(var_soft), Some(var_crisp)) = (s.variance(), c.variance()) else {
        return Err(Error::TooFewGroups {
            needed: 2,
            got: s.n_defined.min(c.n_defined),
        });
    };
    Ok(VarianceComparison {
        var_soft,
        var_crisp,
        inflation_ratio: (var_soft > 0.0).then(|| var_crisp / var_soft),
        n_groups: gp.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub threshold: f64,
    pub sens: Summary,
    pub spec: Summary,
}

/// Quartile bands of threshold curves over groups, evaluated on a shared
/// threshold grid (vertical averaging).
pub fn curve_band(
    gp: &GroupedPredictions,
    class: usize,
    grid: &[f64],
    options: CurveOptions,
) -> Result<Vec<BandPoint>> {
    check_thresholds(grid)?;
    let curves = gp
        .map(|g| spec_sens_curve(&g.reference, &g.prediction, class, Some(grid), options))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &threshold)| {
            let sens: Vec<Option<f64>> = curves.iter().map(|c| c[i].sens).collect();
            let spec: Vec<Option<f64>> = curves.iter().map(|c| c[i].spec).collect();
            BandPoint {
                threshold,
                sens: Summary::of(&sens),
                spec: Summary::of(&spec),
            }
        })
        .collect())
}

/// `n + 1` evenly spaced thresholds from 0 to 1.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::membership::{Tolerances, World};

    fn two_class(col: &[f64]) -> MembershipMatrix {
        let rows: Vec<Vec<f64>> = col.iter().map(|&v| vec![v, 1.0 - v]).collect();
        MembershipMatrix::validate(
            &rows,
            vec!["a".into(), "b".into()],
            World::Closed,
            Tolerances::default(),
        )
        .unwrap()
    }

    fn group(key: &str, r: &[f64], p: &[f64]) -> Group {
        Group {
            key: GroupKey(vec![key.into()]),
            sample_ids: (0..r.len()).map(|i| i.to_string()).collect(),
            reference: two_class(r),
            prediction: two_class(p),
        }
    }

    #[test]
    fn extreme_thresholds() {
        let r = two_class(&[1.0, 1.0, 0.0, 0.0]);
        let p = two_class(&[0.9, 0.4, 0.6, 0.1]);
        let curve = spec_sens_curve(&r, &p, 0, Some(&[0.0, 1.0]), CurveOptions::default()).unwrap();
        assert_eq!((curve[0].sens, curve[0].spec), (Some(1.0), Some(0.0)));
        assert_eq!((curve[1].sens, curve[1].spec), (Some(0.0), Some(1.0)));
    }

    #[test]
    fn separable_predictions_reach_the_corner() {
        let r = two_class(&[1.0, 1.0, 0.0, 0.0]);
        let p = two_class(&[0.9, 0.7, 0.3, 0.1]);
        let curve = spec_sens_curve(&r, &p, 0, None, CurveOptions::default()).unwrap();
        assert!(curve.iter().any(|c| c.sens == Some(1.0) && c.spec == Some(1.0)));
        let t: Vec<f64> = curve.iter().map(|c| c.threshold).collect();
        assert_eq!(t, vec![0.0, 0.1, 0.3, 0.7, 0.9, 1.0]);
    }

    #[test]
    fn inclusive_ties() {
        let r = two_class(&[1.0, 0.0]);
        let p = two_class(&[0.5, 0.5]);
        let strict = spec_sens_curve(&r, &p, 0, Some(&[0.5]), CurveOptions::default()).unwrap();
        assert_eq!(strict[0].sens, Some(0.0));
        let inclusive = CurveOptions {
            inclusive: true,
            ..CurveOptions::default()
        };
        let incl = spec_sens_curve(&r, &p, 0, Some(&[0.5]), inclusive).unwrap();
        assert_eq!((incl[0].sens, incl[0].spec), (Some(1.0), Some(0.0)));
    }

    #[test]
    fn soft_reference_rows() {
        let r = two_class(&[1.0, 0.5, 0.0]);
        let p = two_class(&[0.9, 0.5, 0.2]);
        assert!(matches!(
            spec_sens_curve(&r, &p, 0, None, CurveOptions::default()),
            Err(Error::SoftReference { count: 1, .. })
        ));
        let exclude = CurveOptions {
            soft_rows: SoftRows::Exclude,
            ..CurveOptions::default()
        };
        let curve = spec_sens_curve(&r, &p, 0, Some(&[0.5]), exclude).unwrap();
        assert_eq!((curve[0].sens, curve[0].spec), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn threshold_validation() {
        let r = two_class(&[1.0, 0.0]);
        assert!(spec_sens_curve(&r, &r, 0, Some(&[0.5, 0.5]), CurveOptions::default()).is_err());
        assert!(spec_sens_curve(&r, &r, 0, Some(&[1.5]), CurveOptions::default()).is_err());
    }

    #[test]
    fn one_sided_reference() {
        let r = two_class(&[1.0, 1.0]);
        let p = two_class(&[0.4, 0.8]);
        let curve = spec_sens_curve(&r, &p, 0, Some(&[0.5]), CurveOptions::default()).unwrap();
        assert_eq!(curve[0].sens, Some(0.5));
        assert_eq!(curve[0].spec, None);
    }

    #[test]
    fn summaries() {
        let s = Summary::of(&[Some(0.3), Some(0.3), Some(0.3)]);
        assert_eq!(s.sd, Some(0.0));
        let s = Summary::of(&[Some(0.2), Some(0.6)]);
        assert!((s.mean.unwrap() - 0.4).abs() < 1e-15);
        assert!((s.sd.unwrap() - 0.4 / 2f64.sqrt()).abs() < 1e-15);
        let s = Summary::of(&[Some(0.2), None, Some(0.6)]);
        assert_eq!((s.n_groups, s.n_defined), (3, 2));
        let s = Summary::of(&[Some(0.5)]);
        assert_eq!(s.sd, None);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
    }

    #[test]
    fn group_keys_sort_naturally() {
        let mut keys: Vec<GroupKey> = ["10", "2", "1", "b", "a"]
            .iter()
            .map(|k| GroupKey(vec![k.to_string()]))
            .collect();
        keys.sort();
        let sorted: Vec<&str> = keys.iter().map(|k| k.0[0].as_str()).collect();
        assert_eq!(sorted, vec!["1", "2", "10", "a", "b"]);
        assert_eq!(GroupKey::default().label(&[]), "all");
        assert_eq!(
            GroupKey(vec!["1".into(), "3".into()]).label(&["it".into(), "fold".into()]),
            "it=1,fold=3"
        );
    }

    #[test]
    fn grouped_predictions_validation() {
        let gp = GroupedPredictions::new(
            vec!["it".into()],
            vec![group("2", &[1.0], &[0.5]), group("1", &[0.0], &[0.5])],
        )
        .unwrap();
        assert_eq!(gp.groups()[0].key.0[0], "1");
        assert!(GroupedPredictions::new(
            vec!["it".into()],
            vec![group("1", &[1.0], &[0.5]), group("1", &[0.0], &[0.5])]
        )
        .is_err());
    }

    #[test]
    fn statistics_over_identical_groups() {
        let gp = GroupedPredictions::new(
            vec!["it".into()],
            vec![
                group("1", &[1.0, 0.5], &[0.8, 0.6]),
                group("2", &[1.0, 0.5], &[0.8, 0.6]),
            ],
        )
        .unwrap();
        let stats = group_statistics(&gp, Measure::Sens, Flavor::Product).unwrap();
        assert_eq!(stats.len(), 2);
        assert_eq!(stats[0].summary.sd, Some(0.0));
        assert!((stats[0].summary.mean.unwrap() - 1.1 / 1.5).abs() < 1e-12);

        let v = variance_comparison(&gp, 0, Measure::Sens, &HardeningRule::winner_takes_all()).unwrap();
        assert_eq!((v.var_soft, v.var_crisp, v.inflation_ratio), (0.0, 0.0, None));
    }

    #[test]
    fn statistics_need_two_groups() {
        let gp = GroupedPredictions::new(vec!["it".into()], vec![group("1", &[1.0], &[0.8])]).unwrap();
        assert!(matches!(
            group_statistics(&gp, Measure::Sens, Flavor::Weak),
            Err(Error::TooFewGroups { .. })
        ));
        assert!(matches!(
            variance_comparison(&gp, 0, Measure::Sens, &HardeningRule::winner_takes_all()),
            Err(Error::TooFewGroups { .. })
        ));
    }

    #[test]
    fn crisp_predictions_do_not_inflate_variance() {
        let gp = GroupedPredictions::new(
            vec!["it".into()],
            vec![
                group("1", &[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]),
                group("2", &[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0]),
                group("3", &[1.0, 0.0, 1.0], &[0.0, 0.0, 1.0]),
            ],
        )
        .unwrap();
        let v = variance_comparison(&gp, 0, Measure::Sens, &HardeningRule::winner_takes_all()).unwrap();
        assert!(v.var_soft > 0.0);
        assert_eq!(v.inflation_ratio, Some(1.0));
    }

    #[test]
    fn bands_on_a_grid() {
        let gp = GroupedPredictions::new(
            vec!["it".into()],
            vec![
                group("1", &[1.0, 0.0], &[0.9, 0.2]),
                group("2", &[1.0, 0.0], &[0.4, 0.6]),
            ],
        )
        .unwrap();
        let band = curve_band(&gp, 0, &uniform_grid(2), CurveOptions::default()).unwrap();
        assert_eq!(band.len(), 3);
        assert_eq!(band[1].threshold, 0.5);
        assert_eq!(band[1].sens.p50, Some(0.5));
        assert_eq!(band[1].spec.mean, Some(0.5));
    }
}
