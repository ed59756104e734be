//! Batch evaluation of grouped predictions into an [`EvaluationReport`].

use crate::confusion::{ConfusionMatrix, MatrixKind};
use crate::curves::{self, CurveOptions, Group, GroupedPredictions, Summary};
use crate::error::{Error, Result};
use crate::measures::{self, Flavor, Measure, MeasureResult};
use crate::membership::{HardeningRule, Tolerances, World};
use crate::operators::AndOperator;
use crate::regression::{self, ErrorKind};
use crate::report::{
    BandRow, ConfusionRow, CurveRow, EvaluationReport, InterclassRow, Meta, PredictionKind, ResultRow, StatisticsRow,
    VarianceRow,
};

/// Thresholds for the quartile bands: 0, 0.01, ..., 1.
const BAND_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig {
    pub operators: Vec<AndOperator>,
    pub measures: Vec<Measure>,
    pub regression: Vec<ErrorKind>,
    /// Restrict to these classes; all classes when `None`.
    pub classes: Option<Vec<String>>,
    /// Also evaluate hardened predictions and compare variances.
    pub hardening: Option<HardeningRule>,
    pub curves: Option<CurveOptions>,
    pub interclass: bool,
    pub confusion: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            operators: AndOperator::ALL.to_vec(),
            measures: Measure::ALL.to_vec(),
            regression: Vec::new(),
            classes: None,
            hardening: None,
            curves: None,
            interclass: false,
            confusion: false,
        }
    }
}

impl EvaluationConfig {
    fn flavors(&self) -> Vec<Flavor> {
        let mut flavors: Vec<Flavor> = self.operators.iter().map(|&op| op.into()).collect();
        flavors.extend(self.regression.iter().map(|&k| Flavor::from(k)));
        flavors
    }
}

fn undefined_reason(measure: Measure, class: &str) -> String {
    match measure {
        Measure::Sens => format!("no reference membership in class {class}"),
        Measure::Spec => format!("no reference membership outside class {class}"),
        Measure::Ppv => format!("no predicted membership in class {class}"),
        Measure::Npv => format!("no predicted membership outside class {class}"),
    }
}

fn result_row(group: &str, prediction: PredictionKind, r: MeasureResult) -> ResultRow {
    let reason = r.value.is_none().then(|| undefined_reason(r.measure, &r.class));
    ResultRow {
        group: group.to_string(),
        prediction,
        defined: r.value.is_some(),
        class: r.class,
        measure: r.measure,
        flavor: r.flavor,
        value: r.value,
        denominator: r.denominator,
        reason,
    }
}

#[derive(Default)]
struct GroupOutput {
    results: Vec<ResultRow>,
    confusion: Vec<ConfusionRow>,
    interclass: Vec<InterclassRow>,
    curves: Vec<CurveRow>,
}

fn evaluate_group(
    gp: &GroupedPredictions,
    g: &Group,
    config: &EvaluationConfig,
    classes: &[usize],
) -> Result<GroupOutput> {
    let label = gp.label(g);
    let names = gp.class_names();
    let flavors = config.flavors();
    let mut out = GroupOutput::default();

    let mut predictions = vec![(PredictionKind::Soft, g.prediction.clone())];
    if let Some(rule) = &config.hardening {
        predictions.push((PredictionKind::Hardened, g.prediction.harden(rule)?));
    }
    for (kind, prediction) in &predictions {
        for &c in classes {
            for &m in &config.measures {
                for &f in &flavors {
                    let r = measures::evaluate(&g.reference, prediction, m, c, f)?;
                    out.results.push(result_row(&label, *kind, r));
                }
            }
        }
    }

    if config.confusion {
        for &op in &config.operators {
            let z = ConfusionMatrix::build(&g.reference, &g.prediction, op)?;
            for (i, row) in z.rows().enumerate() {
                for (j, &value) in row.iter().enumerate() {
                    out.confusion.push(ConfusionRow {
                        group: label.clone(),
                        matrix: MatrixKind::from(op),
                        reference: names[i].clone(),
                        predicted: names[j].clone(),
                        value,
                    });
                }
            }
        }
    }

    if config.interclass {
        for kind in [ErrorKind::Mae, ErrorKind::Rmse] {
            let value = regression::interclass_error(&g.reference, &g.prediction, kind, false)?;
            let bound = regression::interclass_bound(g.reference.world(), names.len(), kind);
            out.interclass.push(InterclassRow {
                group: label.clone(),
                error: kind,
                value,
                bound,
                normalized: value / bound,
            });
        }
    }

    if let Some(options) = config.curves {
        for &c in classes {
            for point in curves::spec_sens_curve(&g.reference, &g.prediction, c, None, options)? {
                out.curves.push(CurveRow {
                    group: label.clone(),
                    class: names[c].clone(),
                    threshold: point.threshold,
                    spec: point.spec,
                    sens: point.sens,
                });
            }
        }
    }
    Ok(out)
}

fn statistics(per_group: &[GroupOutput]) -> Vec<StatisticsRow> {
    let template = &per_group[0].results;
    (0..template.len())
        .map(|i| {
            let values: Vec<Option<f64>> = per_group.iter().map(|g| g.results[i].value).collect();
            let s = Summary::of(&values);
            let r = &template[i];
            StatisticsRow {
                prediction: r.prediction,
                class: r.class.clone(),
                measure: r.measure,
                flavor: r.flavor,
                n_groups: s.n_groups,
                n_defined: s.n_defined,
                mean: s.mean,
                sd: s.sd,
                p25: s.p25,
                p50: s.p50,
                p75: s.p75,
            }
        })
        .collect()
}

fn variance_rows(
    gp: &GroupedPredictions,
    config: &EvaluationConfig,
    rule: &HardeningRule,
    classes: &[usize],
) -> Result<Vec<VarianceRow>> {
    let mut rows = Vec::new();
    for &c in classes {
        for &m in &config.measures {
            let row = match curves::variance_comparison(gp, c, m, rule) {
                Ok(v) => VarianceRow {
                    class: gp.class_names()[c].clone(),
                    measure: m,
                    var_soft: Some(v.var_soft),
                    var_crisp: Some(v.var_crisp),
                    inflation_ratio: v.inflation_ratio,
                    n_groups: v.n_groups,
                },
                // too few groups with a defined value: report, don't fail
                Err(Error::TooFewGroups { .. }) => VarianceRow {
                    class: gp.class_names()[c].clone(),
                    measure: m,
                    var_soft: None,
                    var_crisp: None,
                    inflation_ratio: None,
                    n_groups: gp.len(),
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

fn band_rows(gp: &GroupedPredictions, options: CurveOptions, classes: &[usize]) -> Result<Vec<BandRow>> {
    let grid = curves::uniform_grid(BAND_STEPS);
    let mut rows = Vec::new();
    for &c in classes {
        for b in curves::curve_band(gp, c, &grid, options)? {
            rows.push(BandRow {
                class: gp.class_names()[c].clone(),
                threshold: b.threshold,
                n_groups: b.sens.n_groups,
                sens_p25: b.sens.p25,
                sens_p50: b.sens.p50,
                sens_p75: b.sens.p75,
                spec_p25: b.spec.p25,
                spec_p50: b.spec.p50,
                spec_p75: b.spec.p75,
            });
        }
    }
    Ok(rows)
}

/// Evaluate every group. Groups run in parallel when the `parallel`
/// feature is on; the report lists them in key order either way.
pub fn run_evaluation(gp: &GroupedPredictions, config: &EvaluationConfig) -> Result<EvaluationReport> {
    let names = gp.class_names();
    let classes: Vec<usize> = match &config.classes {
        None => (0..names.len()).collect(),
        Some(selected) => selected
            .iter()
            .map(|s| {
                names
                    .iter()
                    .position(|n| n == s)
                    .ok_or_else(|| Error::UnknownClass(s.clone()))
            })
            .collect::<Result<_>>()?,
    };
    let first = &gp.groups()[0].reference;
    let meta = Meta {
        tool: "softval".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        world: first.world(),
        tolerances: Tolerances::default(),
        operators: config.operators.clone(),
        measures: config.measures.clone(),
        regression: config.regression.clone(),
        classes: classes.iter().map(|&c| names[c].clone()).collect(),
        group_by: gp.columns().to_vec(),
        n_groups: gp.len(),
        n_samples: gp.n_samples(),
        dataset_digest: None,
        hardening: config.hardening.map(|h| h.to_string()),
        curves: config.curves,
        interclass: config.interclass,
        confusion: config.confusion,
    };

    let per_group = gp
        .map(|g| evaluate_group(gp, g, config, &classes).map_err(|e| e.in_group(&gp.label(g))))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let grouped = gp.len() >= 2;
    let statistics = if grouped { statistics(&per_group) } else { Vec::new() };
    let variance = match (&config.hardening, grouped) {
        (Some(rule), true) => variance_rows(gp, config, rule, &classes)?,
        _ => Vec::new(),
    };
    let curve_bands = match (config.curves, grouped) {
        (Some(options), true) => band_rows(gp, options, &classes)?,
        _ => Vec::new(),
    };

    let mut report = EvaluationReport {
        meta,
        results: Vec::new(),
        statistics,
        confusion: Vec::new(),
        interclass: Vec::new(),
        variance,
        curves: Vec::new(),
        curve_bands,
    };
    for g in per_group {
        report.results.extend(g.results);
        report.confusion.extend(g.confusion);
        report.interclass.extend(g.interclass);
        report.curves.extend(g.curves);
    }
    Ok(report)
}

/// Records the world and tolerances a dataset was loaded with.
pub fn describe_input(report: &mut EvaluationReport, world: World, tolerances: Tolerances, digest: Option<String>) {
    report.meta.world = world;
    report.meta.tolerances = tolerances;
    report.meta.dataset_digest = digest;
}
