//! `softval eval`: evaluate soft predictions from a CSV or JSON table.
//!
//! Exit codes: 0 on success, 2 for input, schema or usage errors, 3 when a
//! computation fails. Undefined measures are not errors; they appear as
//! `null` with a reason.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use softval::curves::{CurveOptions, SoftRows};
use softval::dataset::{self, InputFormat, LoadOptions};
use softval::evaluate::{self, EvaluationConfig};
use softval::regression::ErrorKind;
use softval::{AndOperator, Error, HardeningRule, Measure, OutputFormat, Tolerances, World};

const TOL_SUM_VAR: &str = "SOFTVAL_TOL_SUM";

#[derive(Parser)]
#[command(name = "softval", version, about = "Validation of soft classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute sensitivity, specificity and predictive values.
    Eval(EvalArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Table with `ref:<class>` and `pred:<class>` columns.
    #[arg(long = "ref-pred", value_name = "FILE")]
    ref_pred: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_name = "csv|json")]
    format: Option<String>,
    #[arg(long, default_value = "closed", value_name = "closed|open")]
    world: String,
    #[arg(long, default_value = "strong,product,weak")]
    operators: String,
    /// Comma-separated; an empty list reports metadata only.
    #[arg(long, default_value = "sens,spec,ppv,npv")]
    measures: String,
    /// Residual-based flavors to add, e.g. `mae,rmse`.
    #[arg(long, default_value = "")]
    regression: String,
    /// Columns whose values define groups (iterations, folds, ...).
    #[arg(long = "group-by", default_value = "")]
    group_by: String,
    /// Restrict to these classes.
    #[arg(long)]
    classes: Option<String>,
    /// Also evaluate hardened predictions: `wta` or `threshold=<t>`.
    #[arg(long)]
    harden: Option<String>,
    /// Emit specificity/sensitivity threshold curves.
    #[arg(long)]
    curves: bool,
    /// Skip soft reference rows in curves instead of failing.
    #[arg(long = "exclude-soft")]
    exclude_soft: bool,
    /// Count predictions equal to the threshold as positive.
    #[arg(long)]
    inclusive: bool,
    /// Report the error summed over all classes.
    #[arg(long)]
    interclass: bool,
    /// Report the confusion matrices.
    #[arg(long)]
    confusion: bool,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long = "out-format", default_value = "json", value_name = "json|csv|table")]
    out_format: String,
    /// Worker threads for per-group evaluation (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn list<T: FromStr<Err = Error>>(text: &str) -> Result<Vec<T>, Error> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(T::from_str)
        .collect()
}

fn names(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn tolerances() -> Result<Tolerances, Error> {
    let mut tolerances = Tolerances::default();
    if let Ok(text) = std::env::var(TOL_SUM_VAR) {
        tolerances.sum = text
            .trim()
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| Error::Config(format!("{TOL_SUM_VAR}=`{text}` is not a non-negative number")))?;
    }
    Ok(tolerances)
}

fn eval(args: &EvalArgs) -> Result<(), Error> {
    let world: World = args.world.parse()?;
    let tolerances = tolerances()?;
    let format = match &args.format {
        Some(f) => f.parse()?,
        None => InputFormat::from_path(&args.ref_pred),
    };
    let out_format: OutputFormat = args.out_format.parse()?;
    let config = EvaluationConfig {
        operators: list::<AndOperator>(&args.operators)?,
        measures: list::<Measure>(&args.measures)?,
        regression: list::<ErrorKind>(&args.regression)?,
        classes: args.classes.as_deref().map(names),
        hardening: args.harden.as_deref().map(HardeningRule::from_str).transpose()?,
        curves: args.curves.then_some(CurveOptions {
            soft_rows: if args.exclude_soft {
                SoftRows::Exclude
            } else {
                SoftRows::Reject
            },
            inclusive: args.inclusive,
        }),
        interclass: args.interclass,
        confusion: args.confusion,
    };
    let options = LoadOptions {
        world,
        tolerances,
        group_by: names(&args.group_by),
    };

    let bytes = std::fs::read(&args.ref_pred).map_err(|e| Error::Io(format!("{}: {e}", args.ref_pred.display())))?;
    let gp = dataset::parse_dataset(&bytes, format, &options)?;
    let run = || evaluate::run_evaluation(&gp, &config);
    let mut report = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    evaluate::describe_input(&mut report, world, tolerances, Some(dataset::digest(&bytes)));

    let text = report.emit(out_format)?;
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Eval(args) => eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("softval: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
