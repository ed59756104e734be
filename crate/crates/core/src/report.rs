//! Evaluation reports and their JSON, CSV and text renderings.
//!
//! Reals are written with 17 significant digits in JSON and CSV, enough to
//! read every `f64` back bit for bit, and with 3 decimals in the text table.
//! Nothing time- or host-dependent goes into a report, so the same input and
//! configuration always produce the same bytes.

use std::fmt;
use std::io;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::{Map, Value};

use crate::confusion::MatrixKind;
use crate::curves::CurveOptions;
use crate::error::{Error, Result};
use crate::measures::{Flavor, Measure};
use crate::membership::{Tolerances, World};
use crate::operators::AndOperator;
use crate::regression::ErrorKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub world: World,
    pub tolerances: Tolerances,
    pub operators: Vec<AndOperator>,
    pub measures: Vec<Measure>,
    pub regression: Vec<ErrorKind>,
    pub classes: Vec<String>,
    pub group_by: Vec<String>,
    pub n_groups: usize,
    pub n_samples: usize,
    /// SHA-256 of the input file, when read from one.
    pub dataset_digest: Option<String>,
    pub hardening: Option<String>,
    pub curves: Option<CurveOptions>,
    pub interclass: bool,
    pub confusion: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionKind {
    Soft,
    Hardened,
}

impl fmt::Display for PredictionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictionKind::Soft => "soft",
            PredictionKind::Hardened => "hardened",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub group: String,
    pub prediction: PredictionKind,
    pub class: String,
    pub measure: Measure,
    pub flavor: Flavor,
    pub value: Option<f64>,
    pub denominator: f64,
    pub defined: bool,
    /// Why `value` is missing.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticsRow {
    pub prediction: PredictionKind,
    pub class: String,
    pub measure: Measure,
    pub flavor: Flavor,
    pub n_groups: usize,
    pub n_defined: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub p25: Option<f64>,
    pub p50: Option<f64>,
    pub p75: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRow {
    pub group: String,
    pub matrix: MatrixKind,
    pub reference: String,
    pub predicted: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterclassRow {
    pub group: String,
    pub error: ErrorKind,
    pub value: f64,
    pub bound: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub class: String,
    pub measure: Measure,
    pub var_soft: Option<f64>,
    pub var_crisp: Option<f64>,
    pub inflation_ratio: Option<f64>,
    pub n_groups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub group: String,
    pub class: String,
    pub threshold: f64,
    pub spec: Option<f64>,
    pub sens: Option<f64>,
}

/// Quartiles of the per-group curves at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub class: String,
    pub threshold: f64,
    pub n_groups: usize,
    pub sens_p25: Option<f64>,
    pub sens_p50: Option<f64>,
    pub sens_p75: Option<f64>,
    pub spec_p25: Option<f64>,
    pub spec_p50: Option<f64>,
    pub spec_p75: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub meta: Meta,
    pub results: Vec<ResultRow>,
    pub statistics: Vec<StatisticsRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub confusion: Vec<ConfusionRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interclass: Vec<InterclassRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variance: Vec<VarianceRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curve_bands: Vec<BandRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "table" | "text" => Ok(OutputFormat::Table),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

/// `printf("%.17g")`: shortest of fixed or exponent notation with 17
/// significant digits and trailing zeros removed.
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent notation");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if !(-4..17).contains(&exponent) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exponent.abs())
    } else {
        let decimals = (16 - exponent) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Wraps a JSON formatter so that floats go through [`format_real`].
struct RealFormatter<F>(F);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for RealFormatter<F> {
    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_real(value).as_bytes())
    }
}

fn to_json_with<T: Serialize, F: Formatter>(value: &T, formatter: F) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, RealFormatter(formatter));
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(out).expect("JSON is UTF-8"))
}

fn serde_error(e: impl fmt::Display) -> Error {
    Error::Schema(format!("malformed report: {e}"))
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = to_json_with(self, PrettyFormatter::with_indent(b"  "))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(serde_error)
    }

    /// Sections introduced by `# <name>` lines, each a CSV table with header.
    /// The `meta` section holds one `key,value` row per field with the value
    /// in compact JSON.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        let meta = serde_json::to_value(&self.meta).map_err(serde_error)?;
        let Value::Object(fields) = meta else {
            unreachable!("meta serializes to an object")
        };
        let mut rows = vec![vec!["key".to_string(), "value".to_string()]];
        for (key, value) in &fields {
            rows.push(vec![key.clone(), to_json_with(value, CompactFormatter)?]);
        }
        write_section(&mut out, "meta", rows)?;
        csv_section(&mut out, "results", &self.results, true)?;
        csv_section(&mut out, "statistics", &self.statistics, true)?;
        csv_section(&mut out, "confusion", &self.confusion, false)?;
        csv_section(&mut out, "interclass", &self.interclass, false)?;
        csv_section(&mut out, "variance", &self.variance, false)?;
        csv_section(&mut out, "curves", &self.curves, false)?;
        csv_section(&mut out, "curve_bands", &self.curve_bands, false)?;
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut sections: Vec<(String, String)> = Vec::new();
        for line in text.split_inclusive('\n') {
            if let Some(name) = line.strip_prefix("# ") {
                sections.push((name.trim().to_string(), String::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push_str(line);
            } else if !line.trim().is_empty() {
                return Err(Error::Schema("CSV report must start with a `# meta` section".into()));
            }
        }
        let body = |name: &str| sections.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_str());
        let mut fields = Map::new();
        let mut reader = csv::Reader::from_reader(body("meta").unwrap_or_default().as_bytes());
        for record in reader.records() {
            let record = record.map_err(serde_error)?;
            let value: Value = serde_json::from_str(&record[1]).map_err(serde_error)?;
            fields.insert(record[0].to_string(), value);
        }
        let meta: Meta = serde_json::from_value(Value::Object(fields)).map_err(serde_error)?;
        Ok(EvaluationReport {
            meta,
            results: read_rows(body("results"))?,
            statistics: read_rows(body("statistics"))?,
            confusion: read_rows(body("confusion"))?,
            interclass: read_rows(body("interclass"))?,
            variance: read_rows(body("variance"))?,
            curves: read_rows(body("curves"))?,
            curve_bands: read_rows(body("curve_bands"))?,
        })
    }

    pub fn to_table(&self) -> String {
        table::render(self)
    }

    pub fn emit(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Table => Ok(self.to_table()),
        }
    }
}

fn write_section(out: &mut String, name: &str, rows: Vec<Vec<String>>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        writer.write_record(&row).map_err(serde_error)?;
    }
    let bytes = writer.into_inner().map_err(serde_error)?;
    out.push_str("# ");
    out.push_str(name);
    out.push('\n');
    out.push_str(&String::from_utf8(bytes).expect("CSV is UTF-8"));
    Ok(())
}

fn cell(value: &Value) -> Result<String> {
    Ok(match value {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => format_real(n.as_f64().expect("f64")),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        nested => to_json_with(nested, CompactFormatter)?,
    })
}

fn csv_section<T: Serialize>(out: &mut String, name: &str, items: &[T], always: bool) -> Result<()> {
    if items.is_empty() && !always {
        return Ok(());
    }
    let mut rows = Vec::with_capacity(items.len() + 1);
    for item in items {
        let Value::Object(fields) = serde_json::to_value(item).map_err(serde_error)? else {
            unreachable!("rows serialize to objects")
        };
        if rows.is_empty() {
            rows.push(fields.keys().cloned().collect());
        }
        rows.push(fields.values().map(cell).collect::<Result<Vec<_>>>()?);
    }
    write_section(out, name, rows)
}

fn read_rows<T: DeserializeOwned>(body: Option<&str>) -> Result<Vec<T>> {
    let Some(body) = body.filter(|b| !b.trim().is_empty()) else {
        return Ok(Vec::new());
    };
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(serde_error)
}

mod table {
    use std::collections::BTreeMap;
    use std::fmt::Write;

    use super::EvaluationReport;
    use crate::measures::Flavor;

    fn fixed(v: Option<f64>) -> String {
        v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
    }

    /// Left-aligned text columns followed by right-aligned numeric ones.
    fn grid(out: &mut String, title: &str, header: &[&str], rows: &[Vec<String>], text_columns: usize) {
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: Vec<&str>| -> String {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, &w))| {
                    if i < text_columns {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let _ = writeln!(out, "\n{title}");
        let _ = writeln!(out, "{}", line(header.to_vec()));
        for row in rows {
            let _ = writeln!(out, "{}", line(row.iter().map(String::as_str).collect()));
        }
    }

    pub(super) fn render(report: &EvaluationReport) -> String {
        let meta = &report.meta;
        let mut out = String::new();
        let join = |items: Vec<String>| {
            if items.is_empty() {
                "-".to_string()
            } else {
                items.join(", ")
            }
        };
        let _ = writeln!(out, "{} {}", meta.tool, meta.version);
        let _ = writeln!(out, "dataset:    {}", meta.dataset_digest.as_deref().unwrap_or("-"));
        let _ = writeln!(out, "samples:    {} in {} group(s)", meta.n_samples, meta.n_groups);
        let _ = writeln!(out, "group by:   {}", join(meta.group_by.clone()));
        let _ = writeln!(out, "world:      {}", meta.world);
        let _ = writeln!(out, "classes:    {}", join(meta.classes.clone()));
        let _ = writeln!(
            out,
            "operators:  {}",
            join(meta.operators.iter().map(|o| o.to_string()).collect())
        );
        let _ = writeln!(
            out,
            "regression: {}",
            join(meta.regression.iter().map(|k| k.to_string()).collect())
        );
        let _ = writeln!(out, "hardening:  {}", meta.hardening.as_deref().unwrap_or("-"));

        if !report.results.is_empty() {
            let mut flavors: Vec<Flavor> = report.results.iter().map(|r| r.flavor).collect();
            flavors.sort();
            flavors.dedup();
            // (group, prediction, class, measure) in first-seen order
            let mut keys: Vec<(String, String, String, String)> = Vec::new();
            let mut cells: BTreeMap<(usize, Flavor), Option<f64>> = BTreeMap::new();
            for r in &report.results {
                let key = (
                    r.group.clone(),
                    r.prediction.to_string(),
                    r.class.clone(),
                    r.measure.to_string(),
                );
                let index = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
                    keys.push(key);
                    keys.len() - 1
                });
                cells.insert((index, r.flavor), r.value);
            }
            let rows: Vec<Vec<String>> = keys
                .into_iter()
                .enumerate()
                .map(|(i, (g, p, c, m))| {
                    let mut row = vec![g, p, c, m];
                    row.extend(flavors.iter().map(|f| fixed(cells.get(&(i, *f)).copied().flatten())));
                    row
                })
                .collect();
            let names: Vec<&str> = flavors.iter().map(|f| f.name()).collect();
            let mut header = vec!["group", "prediction", "class", "measure"];
            header.extend(&names);
            grid(&mut out, "results", &header, &rows, 4);
        }

        if !report.statistics.is_empty() {
            let rows: Vec<Vec<String>> = report
                .statistics
                .iter()
                .map(|s| {
                    vec![
                        s.prediction.to_string(),
                        s.class.clone(),
                        s.measure.to_string(),
                        s.flavor.to_string(),
                        format!("{}/{}", s.n_defined, s.n_groups),
                        fixed(s.mean),
                        fixed(s.sd),
                        fixed(s.p25),
                        fixed(s.p50),
                        fixed(s.p75),
                    ]
                })
                .collect();
            let header = [
                "prediction",
                "class",
                "measure",
                "flavor",
                "n",
                "mean",
                "sd",
                "p25",
                "p50",
                "p75",
            ];
            grid(&mut out, "statistics", &header, &rows, 4);
        }

        if !report.confusion.is_empty() {
            let mut kinds = Vec::new();
            let mut keys: Vec<(String, String, String)> = Vec::new();
            let mut cells = BTreeMap::new();
            for c in &report.confusion {
                if !kinds.contains(&c.matrix) {
                    kinds.push(c.matrix);
                }
                let key = (c.group.clone(), c.reference.clone(), c.predicted.clone());
                let index = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
                    keys.push(key);
                    keys.len() - 1
                });
                cells.insert((index, c.matrix.name()), c.value);
            }
            let rows: Vec<Vec<String>> = keys
                .into_iter()
                .enumerate()
                .map(|(i, (g, r, p))| {
                    let mut row = vec![g, r, p];
                    row.extend(kinds.iter().map(|k| fixed(cells.get(&(i, k.name())).copied())));
                    row
                })
                .collect();
            let mut header = vec!["group", "reference", "predicted"];
            header.extend(kinds.iter().map(|k| k.name()));
            grid(&mut out, "confusion", &header, &rows, 3);
        }

        if !report.interclass.is_empty() {
            let rows: Vec<Vec<String>> = report
                .interclass
                .iter()
                .map(|r| {
                    vec![
                        r.group.clone(),
                        r.error.to_string(),
                        fixed(Some(r.value)),
                        fixed(Some(r.bound)),
                        fixed(Some(r.normalized)),
                    ]
                })
                .collect();
            grid(
                &mut out,
                "interclass error",
                &["group", "error", "value", "bound", "normalized"],
                &rows,
                2,
            );
        }

        if !report.variance.is_empty() {
            let rows: Vec<Vec<String>> = report
                .variance
                .iter()
                .map(|v| {
                    vec![
                        v.class.clone(),
                        v.measure.to_string(),
                        fixed(v.var_soft),
                        fixed(v.var_crisp),
                        fixed(v.inflation_ratio),
                    ]
                })
                .collect();
            grid(
                &mut out,
                "variance (product vs hardened)",
                &["class", "measure", "soft", "hardened", "ratio"],
                &rows,
                2,
            );
        }

        if !report.curves.is_empty() {
            let _ = writeln!(
                out,
                "\ncurves: {} points, {} band rows (see the json or csv output)",
                report.curves.len(),
                report.curve_bands.len()
            );
        }
        out
    }
}
