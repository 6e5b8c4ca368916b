//! `lccde` command-line interface: `train`, `evaluate` and `predict`.
//!
//! Exit codes: 0 success, 2 usage error, 3 input (data or model) error,
//! 4 training or model-writing error.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ensemble::{predict_batch, predict_batch_traced, train_lccde, LccdeModel};
use crate::error::LccdeError;
use crate::eval::{aggregate_metrics, confusion, per_class_metrics};
use crate::ingest::{read_can_hex_csv, read_numeric_csv, FeatureTable, IngestReport};
use crate::learners::BoosterConfig;
use crate::persist::{load_model_path, save_model_path};
use crate::types::Variant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_TRAIN: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "lccde", version, about = "Leader-class and confidence decision ensemble for intrusion detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-validate the three base learners, pick per-class leaders, and save the model.
    Train(TrainArgs),
    /// Report per-class and aggregate metrics of a saved model on labeled data.
    Evaluate(EvaluateArgs),
    /// Write one prediction per input row as CSV on standard output.
    Predict(PredictArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Headerless CAN trace: timestamp, CAN ID, DLC, data bytes, label.
    CanHex,
    /// Headered numeric table.
    NumericCsv,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    /// Label column (numeric-csv only).
    #[arg(long)]
    label_col: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Hyperparameter override, `KEY=VALUE` for all learners or
    /// `VARIANT.KEY=VALUE` for one (variants: goss_leafwise, depthwise, oblivious).
    #[arg(long = "set", value_name = "[VARIANT.]KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: DataArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: DataArgs,
    /// Add the arbitration branch and each base model's prediction.
    #[arg(long)]
    trace: bool,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn input_err(e: LccdeError) -> Failure {
    Failure::new(EXIT_INPUT, e.to_string())
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::new(EXIT_INPUT, format!("write failed: {e}"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, out, err),
        Command::Evaluate(a) => cmd_evaluate(a, out, err),
        Command::Predict(a) => cmd_predict(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read_table(input: &DataArgs, label_required: bool) -> Result<(FeatureTable, IngestReport), Failure> {
    let file = File::open(&input.data)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot open {}: {e}", input.data.display())))?;
    match input.format {
        Format::CanHex => read_can_hex_csv(file).map_err(input_err),
        Format::NumericCsv => {
            if label_required && input.label_col.is_none() {
                return Err(Failure::new(EXIT_USAGE, "--label-col is required with --format numeric-csv"));
            }
            read_numeric_csv(file, input.label_col.as_deref()).map_err(input_err)
        }
    }
}

fn report_ingest(err: &mut dyn Write, r: &IngestReport) {
    let _ = writeln!(
        err,
        "read {} rows: kept {}, dropped {} non-finite, {} malformed",
        r.rows_read, r.rows_kept, r.rows_dropped_nonfinite, r.rows_dropped_malformed
    );
}

fn apply_overrides(configs: &mut [BoosterConfig; 3], overrides: &[String]) -> CmdResult {
    for o in overrides {
        let (key, value) =
            o.split_once('=').ok_or_else(|| Failure::new(EXIT_USAGE, format!("override {o:?} is not KEY=VALUE")))?;
        let (targets, key): (Vec<Variant>, &str) = match key.split_once('.') {
            Some((variant, key)) => {
                let v = Variant::parse(variant)
                    .ok_or_else(|| Failure::new(EXIT_USAGE, format!("unknown variant {variant:?} in {o:?}")))?;
                (vec![v], key)
            }
            None => (Variant::ALL.to_vec(), key),
        };
        for v in targets {
            configs[v.index()].set(key, value).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
        }
    }
    for c in configs.iter() {
        c.validate().map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    }
    Ok(())
}

/// Leader table: one row per class with the per-model CV F1.
pub fn format_leader_table(m: &LccdeModel) -> String {
    let width = m.class_names.iter().map(String::len).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  {:<13}", "class", "leader");
    for v in Variant::ALL {
        s.push_str(&format!("  {:>17}", format!("F1[{}]", v.name())));
    }
    s.push('\n');
    for (c, name) in m.class_names.iter().enumerate() {
        s.push_str(&format!("{name:<width$}  {:<13}", m.leader_map.leader(c).name()));
        for v in Variant::ALL {
            s.push_str(&format!("  {:>17.6}", m.report.evidence.f1[v.index()][c]));
        }
        s.push('\n');
    }
    s.push_str("cv training seconds:");
    for v in Variant::ALL {
        s.push_str(&format!(" {}={:.3}", v.name(), m.report.evidence.fit_seconds[v.index()]));
    }
    s.push('\n');
    s
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mut configs = [0, 1, 2].map(|_| BoosterConfig::default().with_seed(a.seed));
    apply_overrides(&mut configs, &a.overrides)?;
    let (table, report) = read_table(&a.input, true)?;
    report_ingest(err, &report);
    if table.rows.is_empty() {
        return Err(input_err(LccdeError::NoUsableRows { rows_read: report.rows_read }));
    }
    let data = table.into_dataset().map_err(input_err)?;

    let model = train_lccde(&data, &configs, a.folds as usize, a.seed)
        .map_err(|e| Failure::new(EXIT_TRAIN, format!("training failed: {e}")))?;
    for w in &model.report.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    save_model_path(&model, &a.out)
        .map_err(|e| Failure::new(EXIT_TRAIN, format!("cannot write {}: {e}", a.out.display())))?;
    write!(out, "{}", format_leader_table(&model)).map_err(io_err)?;
    writeln!(out, "model written to {}", a.out.display()).map_err(io_err)?;
    Ok(())
}

fn load(path: &PathBuf) -> Result<LccdeModel, Failure> {
    load_model_path(path).map_err(|e| Failure::new(EXIT_INPUT, format!("cannot load model {}: {e}", path.display())))
}

fn check_width(model: &LccdeModel, table: &FeatureTable) -> CmdResult {
    let actual = table.feature_names.len();
    if !table.rows.is_empty() && actual != model.n_features() {
        return Err(input_err(LccdeError::DimensionMismatch { expected: model.n_features(), actual }));
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let model = load(&a.model)?;
    let (table, report) = read_table(&a.input, true)?;
    report_ingest(err, &report);
    check_width(&model, &table)?;
    let data = table.into_dataset_with_classes(&model.class_names).map_err(input_err)?;
    if data.n_rows() == 0 {
        return Err(input_err(LccdeError::NoUsableRows { rows_read: report.rows_read }));
    }

    let start = Instant::now();
    let preds = predict_batch(&model, &data.features).map_err(input_err)?;
    let seconds = start.elapsed().as_secs_f64();
    let y_pred: Vec<usize> = preds.iter().map(|p| p.class_id).collect();
    let cm = confusion(&data.labels, &y_pred, model.n_classes()).map_err(input_err)?;
    let per_class = per_class_metrics(&cm);
    let agg = aggregate_metrics(&cm).map_err(input_err)?;

    let width = model.class_names.iter().map(String::len).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  {:>9}  {:>9}  {:>9}  {:>8}\n", "class", "precision", "recall", "f1", "support");
    for (c, name) in model.class_names.iter().enumerate() {
        s.push_str(&format!(
            "{name:<width$}  {:>9.6}  {:>9.6}  {:>9.6}  {:>8}\n",
            per_class.precision[c], per_class.recall[c], per_class.f1[c], per_class.support[c]
        ));
    }
    s.push_str("\nconfusion matrix (rows: true, columns: predicted)\n");
    for row in &cm.counts {
        s.push_str(&row.iter().map(|v| format!("{v:>8}")).collect::<String>());
        s.push('\n');
    }
    s.push_str(&format!("\naccuracy           {:.6}\n", agg.accuracy));
    s.push_str(&format!("weighted precision {:.6}\n", agg.weighted_precision));
    s.push_str(&format!("weighted recall    {:.6}\n", agg.weighted_recall));
    s.push_str(&format!("weighted f1        {:.6}\n", agg.weighted_f1));
    s.push_str(&format!("macro f1           {:.6}\n", agg.macro_f1));
    s.push_str(&format!("prediction seconds {seconds:.3} ({} rows)\n", data.n_rows()));
    write!(out, "{s}").map_err(io_err)
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> CmdResult {
    let model = load(&a.model)?;
    let (table, _) = read_table(&a.input, false)?;
    check_width(&model, &table)?;

    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row".to_string(), "predicted_class".into(), "confidence".into()];
    if a.trace {
        header.push("branch".into());
        header.extend(Variant::ALL.iter().map(|v| format!("pred_{}", v.name())));
    }
    let csv_err = |e: csv::Error| Failure::new(EXIT_INPUT, format!("write failed: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    let results = predict_batch_traced(&model, &table.rows).map_err(input_err)?;
    for (i, (p, t)) in results.iter().enumerate() {
        let mut rec = vec![i.to_string(), model.class_names[p.class_id].clone(), format!("{:.6}", p.confidence)];
        if a.trace {
            rec.push(t.branch.name().to_string());
            rec.extend(t.base_classes.iter().map(|&c| model.class_names[c].clone()));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
