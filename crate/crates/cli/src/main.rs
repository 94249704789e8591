use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gapcov::harness::{resolve_output_dir, run_experiment, write_result, ExperimentConfig};
use gapcov::io::{
    read_series_file, read_weights_file, write_covariance, write_file, write_lomb_scargle, write_matrix, write_spectrum,
};
use gapcov::{
    autocovariance_direct, autocovariance_fft, build_auto_matrix, build_cross_matrix, correct_covariance,
    corrected_variance, covariance_to_spectrum, crosscovariance_direct, crosscovariance_fft,
    interpolated_covariance_spectrum, lomb_scargle, lomb_scargle_offset_correct, CorrectionOptions, LagWindow, Result,
    SpectrumEstimate,
};

#[derive(Parser)]
#[command(
    name = "gapcov",
    version,
    about = "Covariance and spectra of signals with invalid samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Auto- or cross-covariance and spectrum of series files.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Second series; switches to cross estimation.
        #[arg(long)]
        input_y: Option<PathBuf>,
        /// Lag range `k1:k2` (or a single lag).
        #[arg(long, allow_hyphen_values = true)]
        window: LagWindow,
        /// Remove the mean-subtraction bias.
        #[arg(long)]
        correct: bool,
        /// Direct sums instead of FFTs.
        #[arg(long)]
        direct: bool,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long)]
        condition_threshold: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Dump the mapping matrix for a weight file.
    Matrix {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        weights_y: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        window: LagWindow,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo experiment from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one comparison method on a series.
    Baseline {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        window: LagWindow,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        /// Apply the Lomb-Scargle offset correction with this validity
        /// probability (use `--offset-correct` alone for `D/N`).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        offset_correct: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    SampleAndHold,
    LombScargle,
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    input: &Path,
    input_y: Option<&Path>,
    window: LagWindow,
    correct: bool,
    direct: bool,
    dt: f64,
    condition_threshold: Option<f64>,
    out: &Path,
) -> Result<()> {
    let x = read_series_file(input, dt)?;
    let y = input_y.map(|p| read_series_file(p, dt)).transpose()?;
    let mut options = CorrectionOptions::default();
    if let Some(t) = condition_threshold {
        options.condition_threshold = t;
    }
    let mut cov = match (&y, direct) {
        (None, false) => autocovariance_fft(&x, window)?,
        (None, true) => autocovariance_direct(&x, window)?,
        (Some(y), false) => crosscovariance_fft(&x, y, window)?,
        (Some(y), true) => crosscovariance_direct(&x, y, window)?,
    };
    let mut condition = None;
    if correct {
        let matrix = match &y {
            None => build_auto_matrix(x.weights(), window)?,
            Some(y) => build_cross_matrix(x.weights(), y.weights(), window)?,
        };
        let fixed = correct_covariance(&cov, &matrix, &options)?;
        condition = Some(fixed.condition);
        cov = fixed.estimate;
    }
    let spec = covariance_to_spectrum(&cov);
    std::fs::create_dir_all(out)?;
    write_file(out.join("covariance.csv"), |w| write_covariance(w, &cov, None))?;
    write_file(out.join("spectrum.csv"), |w| write_spectrum(w, &spec, None))?;
    let mut summary = serde_json::Map::new();
    if y.is_none() && correct {
        summary.insert("moments".into(), serde_json::to_value(corrected_variance(&x, &cov)?)?);
    }
    if let Some(c) = condition {
        summary.insert("condition".into(), c.into());
    }
    summary.insert("files".into(), serde_json::json!(["covariance.csv", "spectrum.csv"]));
    println!("{}", serde_json::Value::Object(summary));
    Ok(())
}

fn matrix(weights: &Path, weights_y: Option<&Path>, window: LagWindow, out: Option<&Path>) -> Result<()> {
    let wx = read_weights_file(weights)?;
    let m = match weights_y {
        None => build_auto_matrix(&wx, window)?,
        Some(p) => build_cross_matrix(&wx, &read_weights_file(p)?, window)?,
    };
    match out {
        Some(path) => write_file(path, |w| write_matrix(w, &m)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_matrix(&mut lock, &m)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn simulate(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let mut config = ExperimentConfig::from_file(config)?;
    if let Some(s) = seed {
        config.base_seed = s;
    }
    let dir = resolve_output_dir(&config, out);
    let result = run_experiment(&config)?;
    let files = write_result(&result, &dir)?;
    println!(
        "{}",
        serde_json::json!({ "output_dir": dir, "files": files, "wall_time_seconds": result.wall_time_seconds })
    );
    Ok(())
}

fn baseline(
    method: Method,
    input: &Path,
    window: LagWindow,
    dt: f64,
    alpha: Option<f64>,
    offset_correct: bool,
    out: &Path,
) -> Result<()> {
    let series = read_series_file(input, dt)?;
    std::fs::create_dir_all(out)?;
    match method {
        Method::SampleAndHold => {
            let (cov, spec) = interpolated_covariance_spectrum(&series, window)?;
            write_file(out.join("baseline_covariance.csv"), |w| {
                write_covariance(w, &cov, Some("sample_and_hold"))
            })?;
            write_file(out.join("baseline_spectrum.csv"), |w| {
                write_spectrum(w, &spec, Some("sample_and_hold"))
            })?;
        }
        Method::LombScargle => {
            let freqs: Vec<f64> = SpectrumEstimate::frequency_grid(window.len(), dt)
                .into_iter()
                .filter(|f| *f > 0.0)
                .collect();
            let mut ls = lomb_scargle(&series, &freqs)?;
            let mut name = "lomb_scargle_raw";
            if offset_correct || alpha.is_some() {
                ls = lomb_scargle_offset_correct(&ls, &series, alpha)?;
                name = "lomb_scargle_corrected";
            }
            write_file(out.join("baseline_spectrum.csv"), |w| write_lomb_scargle(w, &ls, name))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate {
            input,
            input_y,
            window,
            correct,
            direct,
            dt,
            condition_threshold,
            out,
        } => estimate(
            &input,
            input_y.as_deref(),
            window,
            correct,
            direct,
            dt,
            condition_threshold,
            &out,
        ),
        Command::Matrix {
            weights,
            weights_y,
            window,
            out,
        } => matrix(&weights, weights_y.as_deref(), window, out.as_deref()),
        Command::Simulate { config, seed, out } => simulate(&config, seed, out.as_deref()),
        Command::Baseline {
            method,
            input,
            window,
            dt,
            alpha,
            offset_correct,
            out,
        } => baseline(method, &input, window, dt, alpha, offset_correct, &out),
    }
}

fn fail(code: &str, message: &str) -> ExitCode {
    eprintln!("error code={code} message={}", message.replace('\n', " "));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail("usage", e.to_string().trim()),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.code(), &e.to_string()),
    }
}
