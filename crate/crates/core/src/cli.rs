//! Command-line front end. Each subcommand wraps one library operation and
//! writes JSON, CSV or aligned text to `--out` or standard output.
//!
//! Exit codes: 0 success, 2 file or schema problem, 3 domain error,
//! 4 ill-posed or ambiguous result.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::decomposition::{extract_retardances, lu_chipman, AnalysisOptions};
use crate::error::{Error, Result};
use crate::fiber::{
    beat_length, calibrate, eigen_axis, noise_budget, propagate, required_analyzer,
    scrambling_ensemble, FiberModel,
};
use crate::fixture::generate_fixture;
use crate::io::{self, fmt_f64};
use crate::psg::{generated_states, PsgConfig};
use crate::report::analysis_report;
use crate::retrieval::{estimate_mueller_with, propagate_uncertainty, Weighting};

pub const DEFAULT_LAMBDA: f64 = 808e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    InverseVariance,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::InverseVariance => Weighting::InverseVariance,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fiberpol",
    version,
    about = "Polarization analysis for birefringent fibers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Wavelength in meters.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Fiber length in meters.
    #[arg(long, global = true)]
    pub length: Option<f64>,
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the six generator settings and the states they produce.
    Psg,
    /// Trace a state through a fiber model.
    Simulate {
        /// Model JSON, inline or as a file path.
        #[arg(long)]
        model: String,
        /// Input state: H, V, D, A, +, - or a JSON Stokes array.
        #[arg(long)]
        input: String,
        /// Sampling step in meters.
        #[arg(long)]
        dz: f64,
    },
    /// Output-state statistics over an ensemble of random fibers.
    Ensemble {
        #[arg(long)]
        model: String,
        /// Number of fibers.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "H")]
        input: String,
    },
    /// Least-squares Mueller matrix with uncertainties.
    Reconstruct {
        /// Measurement CSV (or JSON rows).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 400)]
        resamples: usize,
        #[arg(long, value_enum, default_value = "uniform")]
        weighting: WeightingArg,
    },
    /// Polar decomposition and retardances of one Mueller matrix.
    Decompose {
        /// Row-major 16-element JSON array, inline or as a file path.
        #[arg(long)]
        matrix: String,
    },
    /// Measurements to birefringence: the full analysis report.
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        /// Expected circular birefringence (RIU), used to pick the cycle count.
        #[arg(long)]
        prior_cb: f64,
        /// Expected linear birefringence (RIU).
        #[arg(long)]
        prior_lb: f64,
        #[arg(long, default_value_t = 400)]
        resamples: usize,
    },
    /// Which analyzer recovers a signal on the protected circle.
    Plan {
        #[arg(long)]
        model: String,
        /// Bright reference state used to calibrate the channel phase.
        #[arg(long)]
        calibrate: Option<String>,
    },
    /// Extra noise units for measuring several Stokes observables at once.
    Penalty {
        #[arg(long)]
        observables: u32,
    },
    /// Beat length λ / B_m.
    BeatLength {
        /// Modal index difference B_m.
        #[arg(long)]
        bm: f64,
    },
    /// Synthetic six-state measurement file from a fiber model.
    Fixture {
        #[arg(long)]
        model: String,
        /// Standard deviation of the additive Stokes noise.
        #[arg(long)]
        noise: f64,
        #[arg(long)]
        repeats: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Psg => "psg",
            Command::Simulate { .. } => "simulate",
            Command::Ensemble { .. } => "ensemble",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Decompose { .. } => "decompose",
            Command::Pipeline { .. } => "pipeline",
            Command::Plan { .. } => "plan",
            Command::Penalty { .. } => "penalty",
            Command::BeatLength { .. } => "beat-length",
            Command::Fixture { .. } => "fixture",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Psg => Format::Text,
            Command::Simulate { .. } | Command::Fixture { .. } => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// Tabular rendering shared by the CSV and text formats.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    fn text(&self) -> Vec<u8> {
        let n = self.header.len();
        let widths: Vec<usize> = (0..n)
            .map(|c| {
                std::iter::once(&self.header)
                    .chain(&self.rows)
                    .map(|r| r[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for r in std::iter::once(&self.header).chain(&self.rows) {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(v, w)| format!("{v:>w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out.into_bytes()
    }
}

/// What a subcommand produced, before formatting.
struct Output {
    json: Vec<u8>,
    table: Option<Table>,
    /// Preformatted CSV that overrides `table` (measurement files).
    csv: Option<Vec<u8>>,
    text: Option<String>,
}

impl Output {
    fn json(value: impl Serialize) -> Result<Self> {
        let mut json = serde_json::to_vec_pretty(&value)?;
        json.push(b'\n');
        Ok(Output {
            json,
            table: None,
            csv: None,
            text: None,
        })
    }

    fn render(self, format: Format, command: &str) -> Result<Vec<u8>> {
        let unsupported = || Error::Schema(format!("{command} cannot write {format:?} output"));
        match format {
            Format::Json => Ok(self.json),
            Format::Csv => match (self.csv, self.table) {
                (Some(bytes), _) => Ok(bytes),
                (None, Some(t)) => t.csv(),
                _ => Err(unsupported()),
            },
            Format::Text => match (self.text, self.table) {
                (Some(text), _) => Ok(text.into_bytes()),
                (None, Some(t)) => Ok(t.text()),
                _ => Err(unsupported()),
            },
        }
    }
}

fn need<T>(v: Option<T>, flag: &str, command: &str) -> Result<T> {
    v.ok_or_else(|| Error::Schema(format!("{command} requires --{flag}")))
}

fn check_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("input file {} not found", path.display()),
        )));
    }
    Ok(())
}

fn check_output(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("output directory {} does not exist", dir.display()),
            )))
        }
        _ => Ok(()),
    }
}

fn matrix_table(m: &[[f64; 4]; 4], sigma: &[[f64; 4]; 4]) -> Table {
    let mut t = Table::new(&[
        "row", "m0", "m1", "m2", "m3", "sigma0", "sigma1", "sigma2", "sigma3",
    ]);
    for i in 0..4 {
        let mut r = vec![i.to_string()];
        r.extend(m[i].iter().map(|v| fmt_f64(*v)));
        r.extend(sigma[i].iter().map(|v| fmt_f64(*v)));
        t.rows.push(r);
    }
    t
}

fn execute(cli: &Cli) -> Result<Output> {
    let name = cli.command.name();
    let lambda = cli.lambda.unwrap_or(DEFAULT_LAMBDA);
    if let Some(out) = &cli.out {
        check_output(out)?;
    }
    match &cli.command {
        Command::Psg => {
            let rows = generated_states(&PsgConfig::default());
            let mut t = Table::new(&["label", "ret1_waves", "ret2_waves", "s0", "s1", "s2", "s3"]);
            for r in &rows {
                let mut line = vec![r.label.to_string(), r.ret1.to_string(), r.ret2.to_string()];
                // −0 and roundoff-sized entries print as 0 in the table
                line.extend(
                    r.state
                        .to_array()
                        .map(|v| format!("{:.6}", if v.abs() < 1e-12 { 0.0 } else { v })),
                );
                t.rows.push(line);
            }
            Ok(Output {
                table: Some(t),
                ..Output::json(&rows)?
            })
        }
        Command::Simulate { model, input, dz } => {
            let model = io::parse_model(model)?;
            let s_in = io::parse_stokes(input)?;
            let l = need(cli.length, "length", name)?;
            let traj = propagate(&model, s_in, l, lambda, *dz)?;
            let mut csv = Vec::new();
            io::write_trajectory_csv(&mut csv, &traj)?;
            let mut t = Table::new(&["z", "s0", "s1", "s2", "s3"]);
            for p in &traj.points {
                let s = p.state;
                t.rows
                    .push([p.z, s.s0, s.s1, s.s2, s.s3].map(fmt_f64).to_vec());
            }
            Ok(Output {
                csv: Some(csv),
                table: Some(t),
                ..Output::json(&traj)?
            })
        }
        Command::Ensemble { model, n, input } => {
            let mut model = io::parse_model(model)?;
            let l = need(cli.length, "length", name)?;
            let seed = need(cli.seed, "seed", name)?;
            if let FiberModel::StandardRandom { seed: s, .. } = &mut model {
                *s = seed;
            }
            let s_in = io::parse_stokes(input)?;
            let stats = scrambling_ensemble(&model, l, lambda, s_in, *n)?;
            let text = format!(
                "fibers: {}\nmean: [{:.6}, {:.6}, {:.6}]\nresultant length: {:.6}\noctants: {:?}\n",
                stats.n_fibers,
                stats.mean[0],
                stats.mean[1],
                stats.mean[2],
                stats.resultant_length,
                stats.octants
            );
            Ok(Output {
                text: Some(text),
                ..Output::json(&stats)?
            })
        }
        Command::Reconstruct {
            input,
            resamples,
            weighting,
        } => {
            check_input(input)?;
            let seed = need(cli.seed, "seed", name)?;
            let set = io::load_measurements(input, lambda, cli.length.unwrap_or(1.0))?;
            let estimate = estimate_mueller_with(&set, (*weighting).into())?;
            let uncertainty = propagate_uncertainty(&set, *resamples, seed)?;
            let table = matrix_table(&estimate.m.rows(), &estimate.element_sigma);
            Ok(Output {
                table: Some(table),
                ..Output::json(json!({
                    "estimate": estimate,
                    "uncertainty": uncertainty,
                    "seed": seed,
                }))?
            })
        }
        Command::Decompose { matrix } => {
            let m = io::parse_mueller(matrix)?;
            let dec = lu_chipman(&m)?;
            let ret = extract_retardances(&dec.m_retard)?;
            Ok(Output::json(
                json!({ "decomposition": dec, "retardance": ret }),
            )?)
        }
        Command::Pipeline {
            input,
            prior_cb,
            prior_lb,
            resamples,
        } => {
            check_input(input)?;
            let l = need(cli.length, "length", name)?;
            let seed = need(cli.seed, "seed", name)?;
            let set = io::load_measurements(input, lambda, l)?;
            let opts = AnalysisOptions {
                resamples: *resamples,
                seed,
            };
            let input_name = input.file_name().map(|f| f.to_string_lossy().into_owned());
            let rep = analysis_report(&set, *prior_cb, *prior_lb, &opts, input_name)?;
            let text = format!(
                "circular: dn = {:.4e} +/- {:.2e} RIU (k = {}, wrapped {:.6} rad, unwrapped {:.6} rad)\n\
                 linear:   dn = {:.4e} +/- {:.2e} RIU (k = {}, wrapped {:.6} rad, unwrapped {:.6} rad)\n\
                 total retardance {:.6} rad, depolarization factor {:.6}, condition number {:.4}\n",
                rep.circular.delta_n,
                rep.circular.sigma,
                rep.circular.cycles_k,
                rep.circular.delta_wrapped,
                rep.circular.delta_unwrapped,
                rep.linear.delta_n,
                rep.linear.sigma,
                rep.linear.cycles_k,
                rep.linear.delta_wrapped,
                rep.linear.delta_unwrapped,
                rep.retardance.delta_total,
                rep.decomposition.depolarization_factor,
                rep.condition_number,
            );
            Ok(Output {
                text: Some(text),
                ..Output::json(&rep)?
            })
        }
        Command::Plan {
            model,
            calibrate: bright,
        } => {
            let model = io::parse_model(model)?;
            let axis = eigen_axis(&model).ok();
            let phi = match bright {
                Some(b) => {
                    let l = need(cli.length, "length", name)?;
                    Some(calibrate(&model, l, lambda, io::parse_stokes(b)?)?)
                }
                None => None,
            };
            let plan = required_analyzer(&model, axis.as_ref(), phi)?;
            Ok(Output::json(json!({
                "model": model,
                "eigen_axis": axis,
                "calibration_phase": phi,
                "plan": plan,
            }))?)
        }
        Command::Penalty { observables } => {
            let units = noise_budget(*observables)?;
            Ok(Output {
                text: Some(format!(
                    "{observables} observables: {units} extra noise units\n"
                )),
                ..Output::json(json!({ "observables": observables, "extra_noise_units": units }))?
            })
        }
        Command::BeatLength { bm } => {
            let lb = beat_length(lambda, *bm)?;
            Ok(Output {
                text: Some(format!("beat length: {lb} m\n")),
                ..Output::json(json!({ "lambda": lambda, "b_m": bm, "beat_length": lb }))?
            })
        }
        Command::Fixture {
            model,
            noise,
            repeats,
        } => {
            let model = io::parse_model(model)?;
            let l = need(cli.length, "length", name)?;
            let seed = need(cli.seed, "seed", name)?;
            let set = generate_fixture(&model, l, lambda, *noise, *repeats, seed)?;
            let mut csv = Vec::new();
            io::write_measurements_csv(&mut csv, &set)?;
            Ok(Output {
                csv: Some(csv),
                ..Output::json(io::to_rows(&set))?
            })
        }
    }
}

/// Run a parsed command, writing to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let format = cli.format.unwrap_or(cli.command.default_format());
    let bytes = execute(cli)?.render(format, cli.command.name())?;
    match &cli.out {
        Some(path) => fs::write(path, bytes)?,
        None => stdout.write_all(&bytes)?,
    }
    Ok(())
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return e.exit_code();
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "fiberpol {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
