//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{load_csv, make_student_teacher, polynomial_target};
use crate::error::{Error, Result};
use crate::estimators::{gradient_descent, GdOptions, LearningRate};
use crate::experiments::{
    fit_polynomial, median_smallest_sv, median_test_mse, medians_by, run_polynomial_sweep, run_sweep,
    AblationKind, DatasetSource, EstimatorPolicy, SweepConfig, SweepOutcome,
    DEFAULT_SYNTHETIC_TEST_ROWS,
};
use crate::numfmt::sig12;
use crate::report::{render_line_svg, render_panel_svg, write_records_csv, Marker, PlotOptions, RunManifest, Series};

/// Runs with at least this fraction of successful cells exit 0.
pub const MIN_SUCCESS_FRACTION: f64 = 0.9;
/// Relative distance to the pseudoinverse solution accepted by `gdcheck`.
pub const GD_RELATIVE_TOLERANCE: f64 = 1e-6;
pub const THREADS_ENV: &str = "DESCENT_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "descent-lab", version, about = "Double descent experiments for ordinary linear regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the number of training points and record test error, spectrum
    /// and error decomposition per cell.
    Sweep(SweepArgs),
    /// Sweep the number of Legendre features for a fixed set of noisy samples.
    Polyfit(PolyfitArgs),
    /// Check that gradient descent from zero converges to the minimum-norm
    /// solution.
    Gdcheck(GdcheckArgs),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetArg {
    StudentTeacher,
    Csv { path: PathBuf },
}

impl FromStr for DatasetArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            None if s == "student-teacher" => Ok(DatasetArg::StudentTeacher),
            Some(("csv", path)) if !path.is_empty() => Ok(DatasetArg::Csv { path: path.into() }),
            _ => Err(format!("expected `student-teacher` or `csv:PATH`, got `{s}`")),
        }
    }
}

/// Comma-separated items, each `a`, `a:b` (inclusive) or `a:b:s` (stride s).
pub fn parse_int_list(s: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let parts: Vec<&str> = item.trim().split(':').collect();
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("`{t}` is not a non-negative integer"));
        match parts.as_slice() {
            [a] => out.push(num(a)?),
            [a, b] | [a, b, _] => {
                let (a, b) = (num(a)?, num(b)?);
                let step = if parts.len() == 3 { num(parts[2])? } else { 1 };
                if step == 0 {
                    return Err("stride must be >= 1".into());
                }
                if a > b {
                    return Err(format!("empty range `{item}`"));
                }
                out.extend((a..=b).step_by(step as usize));
            }
            _ => return Err(format!("bad range `{item}`")),
        }
    }
    Ok(out)
}

/// Training sizes or feature counts, parsed by [`parse_int_list`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Counts(pub Vec<usize>);

impl FromStr for Counts {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_int_list(s)?
            .into_iter()
            .map(|v| usize::try_from(v).map_err(|e| e.to_string()))
            .collect::<std::result::Result<_, _>>()
            .map(Counts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Seeds(pub Vec<u64>);

impl FromStr for Seeds {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_int_list(s).map(Seeds)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EtaArg {
    Auto,
    Fixed(f64),
}

impl FromStr for EtaArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(EtaArg::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(EtaArg::Fixed(v)),
            _ => Err(format!("expected `auto` or a positive number, got `{s}`")),
        }
    }
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number >= 0, got `{s}`")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// `student-teacher` or `csv:PATH`
    #[arg(long, default_value = "student-teacher")]
    pub dataset: DatasetArg,
    /// Target column of a CSV dataset.
    #[arg(long)]
    pub target_col: Option<String>,
    /// Keep CSV features unstandardized.
    #[arg(long)]
    pub raw_features: bool,
    /// Number of features of the synthetic dataset.
    #[arg(long, default_value_t = 32)]
    pub d: usize,
    #[arg(long, default_value_t = 0.25, value_parser = non_negative)]
    pub noise_sd: f64,
    /// Held-out rows of the synthetic dataset.
    #[arg(long, default_value_t = DEFAULT_SYNTHETIC_TEST_ROWS)]
    pub n_test: usize,
    /// Training sizes: `a:b` inclusive, `a:b:s` with stride, comma lists.
    /// Defaults to 2:3D (synthetic) or 40 log-spaced sizes (CSV).
    #[arg(long)]
    pub grid: Option<Counts>,
    #[arg(long, default_value = "0:29")]
    pub seeds: Seeds,
    /// `none`, `sv-cutoff[:τ]`, `test-projection[:τ]` or `linearized-targets`
    #[arg(long, default_value = "none")]
    pub ablation: AblationKind,
    /// `pinv`, `ridge:λ` or `ridge-rel:c` (λ = c·σ_max²)
    #[arg(long, default_value = "pinv")]
    pub estimator: EstimatorPolicy,
    /// Allow a grid that does not straddle D.
    #[arg(long)]
    pub allow_one_sided_grid: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PolyfitArgs {
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value = "1:200")]
    pub p_grid: Counts,
    #[arg(long, default_value_t = 0.5, value_parser = non_negative)]
    pub noise_sd: f64,
    #[arg(long, default_value = "0:19")]
    pub seeds: Seeds,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GdcheckArgs {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    #[arg(long, default_value_t = 50_000)]
    pub steps: usize,
    /// `auto` (1/σ_max²) or a fixed step size.
    #[arg(long, default_value = "auto")]
    pub eta: EtaArg,
    #[arg(long, default_value = "0:4")]
    pub seeds: Seeds,
    #[arg(long, default_value_t = 0.25, value_parser = non_negative)]
    pub noise_sd: f64,
    #[arg(long, default_value = "gdcheck")]
    pub out: PathBuf,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    let result = match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Polyfit(a) => cmd_polyfit(a),
        Command::Gdcheck(a) => cmd_gdcheck(a),
    };
    match result {
        Ok(code) => code,
        Err(Error::InvalidParameter(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    // a second initialization (tests running in-process) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn exit_for(outcome: &SweepOutcome) -> u8 {
    if outcome.success_fraction() >= MIN_SUCCESS_FRACTION {
        0
    } else {
        1
    }
}

fn log_spaced(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut v: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    v.dedup();
    v
}

/// Writes a chart; a chart with nothing to draw is skipped with a warning.
fn write_svg(path: &Path, svg: Result<String>) -> Result<Option<PathBuf>> {
    match svg {
        Ok(text) => {
            fs::write(path, text)?;
            Ok(Some(path.to_path_buf()))
        }
        Err(Error::EmptySeries(why)) => {
            eprintln!("warning: skipped {}: {why}", path.display());
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

#[derive(Serialize)]
struct Hashed<'a, T> {
    command: &'a str,
    args: &'a T,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<u8> {
    let (source, d) = match &args.dataset {
        DatasetArg::StudentTeacher => (
            DatasetSource::StudentTeacher {
                d: args.d,
                noise_sd: args.noise_sd,
                n_test: args.n_test,
            },
            args.d,
        ),
        DatasetArg::Csv { path } => {
            let target = args
                .target_col
                .clone()
                .ok_or_else(|| Error::InvalidParameter("--target-col is required with csv:PATH".into()))?;
            let ds = load_csv(path, &target, !args.raw_features)?;
            (
                DatasetSource::Csv {
                    path: path.clone(),
                    target_column: target,
                    standardize: !args.raw_features,
                },
                ds.n_features(),
            )
        }
    };
    let grid = match (&args.grid, &source) {
        (Some(g), _) => g.0.clone(),
        (None, DatasetSource::StudentTeacher { d, .. }) => (2..=3 * d).collect(),
        (None, DatasetSource::Csv { path, target_column, standardize }) => {
            let rows = load_csv(path, target_column, *standardize)?.n_rows();
            log_spaced(2, rows - rows / 5, 40)
        }
    };
    let config = SweepConfig {
        source,
        grid,
        seeds: args.seeds.0.clone(),
        ablation: args.ablation,
        estimator: args.estimator,
        allow_one_sided_grid: args.allow_one_sided_grid,
    };
    let outcome = run_sweep(&config)?;

    fs::create_dir_all(&args.out)?;
    let records = args.out.join("records.csv");
    write_records_csv(&records, &outcome.records)?;
    let mut outputs = vec![records];

    let marker = [Marker { x: d as f64, label: format!("n = D = {d}") }];
    let mse = median_test_mse(&outcome.records);
    outputs.extend(write_svg(
        &args.out.join("test_mse_vs_n.svg"),
        render_line_svg(
            &[Series::line(
                "median test MSE",
                mse.keys().map(|&n| n as f64).collect(),
                mse.values().copied().collect(),
            )],
            &marker,
            &PlotOptions {
                title: format!("Test MSE vs training size ({})", config.ablation),
                x_label: "number of training points n".into(),
                y_label: "test MSE".into(),
                log_y: true,
                ..PlotOptions::default()
            },
        ),
    )?);
    let sv = median_smallest_sv(&outcome.records);
    outputs.extend(write_svg(
        &args.out.join("smallest_sv_vs_n.svg"),
        render_line_svg(
            &[Series::line(
                "median smallest nonzero σ",
                sv.keys().map(|&n| n as f64).collect(),
                sv.values().copied().collect(),
            )],
            &marker,
            &PlotOptions {
                title: "Smallest nonzero singular value of training X".into(),
                x_label: "number of training points n".into(),
                y_label: "σ_min".into(),
                log_y: true,
                ..PlotOptions::default()
            },
        ),
    )?);

    let mut manifest = RunManifest::new("sweep", &Hashed { command: "sweep", args })?;
    outputs.push(args.out.join("manifest.json"));
    manifest.output_paths = outputs;
    manifest.cells_total = outcome.total_cells();
    manifest.cells_failed = outcome.failures.len();
    manifest.failures = outcome.failures.clone();
    manifest.write(args.out.join("manifest.json"))?;

    println!(
        "sweep: {} of {} cells succeeded; records in {}",
        outcome.records.len(),
        outcome.total_cells(),
        args.out.display()
    );
    for f in &outcome.failures {
        eprintln!("cell n_train = {}, seed = {} failed: {}", f.n_train, f.seed, f.error);
    }
    Ok(exit_for(&outcome))
}

fn closest(grid: &[usize], target: f64) -> usize {
    *grid
        .iter()
        .min_by(|a, b| (**a as f64 - target).abs().total_cmp(&(**b as f64 - target).abs()))
        .expect("non-empty grid")
}

pub fn cmd_polyfit(args: &PolyfitArgs) -> Result<u8> {
    let outcome = run_polynomial_sweep(&args.p_grid.0, args.n, &args.seeds.0, args.noise_sd)?;
    fs::create_dir_all(&args.out)?;
    let records = args.out.join("records.csv");
    write_records_csv(&records, &outcome.records)?;
    let mut outputs = vec![records];

    if !outcome.records.is_empty() {
        let mse = medians_by(&outcome.records, |r| r.d, |r| Some(r.test_mse));
        outputs.extend(write_svg(
            &args.out.join("test_mse_vs_p.svg"),
            render_line_svg(
                &[Series::line(
                    "median test MSE",
                    mse.keys().map(|&p| p as f64).collect(),
                    mse.values().copied().collect(),
                )],
                &[Marker { x: args.n as f64, label: format!("P = n = {}", args.n) }],
                &PlotOptions {
                    title: format!("Legendre regression, n = {}", args.n),
                    x_label: "number of features P".into(),
                    y_label: "test MSE".into(),
                    log_y: true,
                    ..PlotOptions::default()
                },
            ),
        )?);

        let mut chosen = vec![
            closest(&args.p_grid.0, args.n as f64 / 6.0),
            closest(&args.p_grid.0, args.n as f64),
            *args.p_grid.0.iter().max().expect("non-empty grid"),
        ];
        chosen.dedup();
        let seed = args.seeds.0[0];
        let curve_x: Vec<f64> = (0..=400).map(|i| -1.0 + i as f64 / 200.0).collect();
        let panels = chosen
            .iter()
            .map(|&p| {
                let fit = fit_polynomial(args.n, p, args.noise_sd, seed)?;
                let fitted = curve_x.iter().map(|&x| fit.predict(x)).collect::<Result<Vec<f64>>>()?;
                Ok((
                    vec![
                        Series::points("training points", fit.xs.clone(), fit.ys.clone()),
                        Series::line("2x + cos(25x)", curve_x.clone(), curve_x.iter().map(|&x| polynomial_target(x)).collect()),
                        Series::line(format!("fit, P = {p}"), curve_x.clone(), fitted),
                    ],
                    vec![],
                    PlotOptions {
                        title: format!("P = {p}, n = {}", args.n),
                        x_label: "x".into(),
                        y_label: "y".into(),
                        y_range: Some((-5.0, 5.0)),
                        ..PlotOptions::default()
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        outputs.extend(write_svg(&args.out.join("fits.svg"), render_panel_svg(&panels))?);
    }

    let mut manifest = RunManifest::new("polyfit", &Hashed { command: "polyfit", args })?;
    outputs.push(args.out.join("manifest.json"));
    manifest.output_paths = outputs;
    manifest.cells_total = outcome.total_cells();
    manifest.cells_failed = outcome.failures.len();
    manifest.failures = outcome.failures.clone();
    manifest.write(args.out.join("manifest.json"))?;

    println!(
        "polyfit: {} of {} cells succeeded; records in {}",
        outcome.records.len(),
        outcome.total_cells(),
        args.out.display()
    );
    for f in &outcome.failures {
        eprintln!("cell P = {}, seed = {} failed: {}", f.d, f.seed, f.error);
    }
    Ok(exit_for(&outcome))
}

pub fn cmd_gdcheck(args: &GdcheckArgs) -> Result<u8> {
    let opts = GdOptions {
        learning_rate: match args.eta {
            EtaArg::Auto => LearningRate::Auto,
            EtaArg::Fixed(v) => LearningRate::Fixed(v),
        },
        steps: args.steps,
        checkpoint_every: Some((args.steps / 500).max(1)),
    };
    let mut csv_text = String::from("seed,step,distance_to_pinv,relative_distance\n");
    let mut series = Vec::new();
    let mut all_ok = true;
    for &seed in &args.seeds.0 {
        let (ds, _) = make_student_teacher(args.n, args.d, args.noise_sd, seed)?;
        let trace = match gradient_descent(&ds.x, &ds.y, &opts) {
            Err(Error::Divergence { step, loss, .. }) => {
                eprintln!("seed {seed}: gradient descent diverged at step {step} (loss {loss:e})");
                return Ok(1);
            }
            other => other?,
        };
        let scale = crate::linalg::pseudoinverse_apply(&ds.x, &ds.y)?.norm().max(1.0);
        for &(step, dist) in &trace.distance_history {
            csv_text.push_str(&format!("{seed},{step},{},{}\n", sig12(dist), sig12(dist / scale)));
        }
        let rel = trace.distance_to_pinv / scale;
        let ok = rel <= GD_RELATIVE_TOLERANCE;
        all_ok &= ok;
        println!(
            "seed {seed}: eta = {}, steps = {}, relative distance to X⁺Y = {} [{}]",
            sig12(trace.learning_rate),
            trace.steps,
            sig12(rel),
            if ok { "ok" } else { "not converged" }
        );
        series.push(Series::line(
            format!("seed {seed}"),
            trace.distance_history.iter().map(|&(t, _)| t as f64).collect(),
            trace.distance_history.iter().map(|&(_, d)| (d / scale).max(1e-18)).collect(),
        ));
    }

    fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("gd_trajectory.csv");
    fs::write(&csv_path, csv_text)?;
    let mut outputs = vec![csv_path];
    if !series.is_empty() {
        outputs.extend(write_svg(
            &args.out.join("gd_distance.svg"),
            render_line_svg(
                &series,
                &[],
                &PlotOptions {
                    title: format!("Gradient descent from zero, n = {}, D = {}", args.n, args.d),
                    x_label: "step".into(),
                    y_label: "‖w − X⁺Y‖ / max(1, ‖X⁺Y‖)".into(),
                    log_y: true,
                    ..PlotOptions::default()
                },
            ),
        )?);
    }
    let mut manifest = RunManifest::new("gdcheck", &Hashed { command: "gdcheck", args })?;
    outputs.push(args.out.join("manifest.json"));
    manifest.output_paths = outputs;
    manifest.cells_total = args.seeds.0.len();
    manifest.write(args.out.join("manifest.json"))?;
    Ok(if all_ok { 0 } else { 1 })
}
