use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cfm_core::cfm::TraceRecord;
use cfm_core::data::{synth_generate, write_libfm, VIEWS_BLOCK};
use cfm_core::linsolve::CgConfig;
use cfm_core::metrics::{relative_mse, rmse};
use cfm_core::{hazan_fit, ridge_fit, CfmError, CfmModel, Dataset, StepRule, TrainConfig};
use log::info;

use crate::input::{load, load_side, load_split};
use crate::{ConvertArgs, EvaluateArgs, Metric, PredictArgs, StepArg, SynthArgs, TrainArgs};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

pub const TRACE_HEADER: [&str; 7] = ["iter", "objective", "alpha", "eig_value", "train_rmse", "test_rmse", "elapsed_s"];

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }

    pub fn context(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl From<CfmError> for CliError {
    fn from(e: CfmError) -> Self {
        let code = match e {
            CfmError::Contract(_) => EXIT_USAGE,
            CfmError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::data(format!("{}: {e}", path.display()))
}

fn check_output_path(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(CliError::usage(format!("output directory does not exist: {}", dir.display())))
        }
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Pads `ds` with empty trailing columns up to the model's dimension.
fn fit_to_model(ds: Dataset, model: &CfmModel) -> Result<Dataset, CliError> {
    let d = model.feature_dim();
    if ds.dim() > d {
        return Err(CliError::data(format!("dataset has {} features but the model was trained on {d}", ds.dim())));
    }
    if ds.dim() == d {
        return Ok(ds);
    }
    Ok(ds.widen(d)?)
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    for out in [&args.model, &args.trace].into_iter().flatten() {
        check_output_path(out)?;
    }
    if let Some(test) = &args.test {
        if !test.is_file() {
            return Err(CliError::data(format!("input file not found: {}", test.display())));
        }
    }
    let config = TrainConfig {
        eta: args.eta,
        lambda1: args.lambda1,
        max_outer_iters: args.iters,
        step_rule: match args.step {
            StepArg::Harmonic => StepRule::Harmonic,
            StepArg::LineSearch => StepRule::LineSearch,
        },
        cf_constant: args.cf,
        seed: args.seed,
        eval_every: args.eval_every,
        stop_gap: args.stop_gap,
        ..TrainConfig::default()
    };
    config.validate()?;

    let (mut train, mut test) = load_split(&args.data)?;
    if let Some(path) = &args.test {
        test = Some(load(path, args.data.format, args.data.dim)?);
    }
    if let Some(t) = &test {
        let d = train.dim().max(t.dim());
        if train.dim() < d {
            train = train.widen(d)?;
        }
        if t.dim() < d {
            test = Some(t.widen(d)?);
        }
    }
    info!(
        "training on n = {}, d = {}{}",
        train.n_samples(),
        train.dim(),
        test.as_ref().map_or(String::new(), |t| format!(", testing on n = {}", t.n_samples()))
    );

    let (model, trace) = hazan_fit(&train, &config, test.as_ref())?;

    if let Some(path) = &args.trace {
        write_trace(path, &trace.records)?;
    }
    if let Some(path) = &args.model {
        model.save(path).map_err(|e| CliError::from(e).context(path))?;
    }

    let last = trace.last().expect("at least one step is always recorded");
    println!("iterations\t{}", last.iter + 1);
    println!("objective\t{}", last.objective);
    println!("rank\t{}", last.rank);
    println!("train_rmse\t{}", last.train_rmse);
    if let Some(t) = last.test_rmse {
        println!("test_rmse\t{t}");
    }
    if args.baseline {
        let ridge = ridge_fit(&train, args.lambda1, &CgConfig::default())?;
        println!("ridge_train_rmse\t{}", rmse(&train.y, &ridge.predict(&train.x, &train.xsq)?));
        if let Some(t) = &test {
            println!("ridge_test_rmse\t{}", rmse(&t.y, &ridge.predict(&t.x, &t.xsq)?));
        }
    }
    Ok(())
}

fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.iter.to_string(),
            r.objective.to_string(),
            r.step_size.to_string(),
            r.top_eigenvalue.to_string(),
            r.train_rmse.to_string(),
            r.test_rmse.map_or(String::new(), |v| v.to_string()),
            r.elapsed_seconds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn load_model(path: &Path) -> Result<CfmModel, CliError> {
    if !path.is_file() {
        return Err(CliError::data(format!("model file not found: {}", path.display())));
    }
    CfmModel::load(path).map_err(|e| CliError::from(e).context(path))
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    if let Some(out) = &args.out {
        check_output_path(out)?;
    }
    let model = load_model(&args.model)?;
    let ds = fit_to_model(load_side(&args.data, args.side)?, &model)?;
    let preds = model.predict(&ds.x, &ds.xsq)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let write_all = |out: &mut dyn Write| -> io::Result<()> {
        for p in &preds {
            writeln!(out, "{p}")?;
        }
        out.flush()
    };
    write_all(&mut *out).map_err(|e| CliError::data(e.to_string()))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let ds = fit_to_model(load_side(&args.data, args.side)?, &model)?;
    if ds.n_samples() == 0 {
        return Err(CliError::data("evaluation set is empty"));
    }
    let preds = model.predict(&ds.x, &ds.xsq)?;
    match args.metric {
        Metric::Rmse => println!("rmse\t{}", rmse(&ds.y, &preds)),
        Metric::RelativeMse => {
            let views = ds.block_assignments(VIEWS_BLOCK)?;
            println!("relative_mse\t{}", relative_mse(&ds.y, &preds, &views)?);
        }
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    check_output_path(&args.out)?;
    let (ds, _) = synth_generate(args.d, args.n, args.seed)?;
    write_libfm(&ds, create(&args.out)?).map_err(|e| CliError::from(e).context(&args.out))
}

pub fn convert(args: &ConvertArgs) -> Result<(), CliError> {
    check_output_path(&args.out)?;
    let ds = load(&args.input, args.format, None)?;
    write_libfm(&ds, create(&args.out)?).map_err(|e| CliError::from(e).context(&args.out))?;
    info!("wrote {} samples with d = {}", ds.n_samples(), ds.dim());
    Ok(())
}
