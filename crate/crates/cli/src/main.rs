//! `landau`: run, check and inspect regularized Landau-Coulomb simulations.
//!
//! Exit codes: 0 success, 1 a check or the scheme failed, 2 usage or
//! configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use landau_core::coefficients::CoefficientEngine;
use landau_core::functionals::DEFAULT_F_TOL;
use landau_core::io::{snapshot_file_name, SNAPSHOT_MAGIC};
use landau_core::solver::{initial_field, with_thread_pool};
use landau_core::*;

#[derive(Parser)]
#[command(name = "landau", version, about = "Regularized Landau-Coulomb velocity-space simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured problem and write the time series and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the estimate checks on a time series (and optional snapshots).
    Check {
        series: PathBuf,
        /// Directory of `.lcf` snapshots, or individual snapshot files.
        #[arg(long, num_args = 1..)]
        snapshots: Vec<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-2)]
        entropy_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        fisher_tol: f64,
        /// Records skipped before the Fisher monotonicity check.
        #[arg(long, default_value_t = 5)]
        fisher_skip: usize,
        /// Start of the Fisher envelope window.
        #[arg(long, default_value_t = 0.05)]
        tmin: f64,
    },
    /// FFT against direct-sum coefficients and single against double
    /// dissipation on a small grid.
    Oracle {
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long = "N", default_value_t = 8)]
        cells: usize,
        #[arg(long = "L", default_value_t = 4.0)]
        half_width: f64,
    },
    /// Sample the configured initial datum into a snapshot.
    Init {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print metadata of a snapshot or time-series file.
    Info { path: PathBuf },
}

enum Failure {
    Check(String),
    Usage(String),
}

impl From<LandauError> for Failure {
    fn from(e: LandauError) -> Self {
        match e {
            LandauError::PositivityLost { .. } | LandauError::NonFinite { .. } => Failure::Check(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = with_thread_pool(|| match cli.command {
        Command::Run { config, out } => run_cmd(&config, out.as_deref()),
        Command::Check { series, snapshots, report, entropy_tol, fisher_tol, fisher_skip, tmin } => {
            let opts = HarnessOptions { entropy_tol, fisher_tol, fisher_skip, envelope_t_min: tmin };
            check_cmd(&series, &snapshots, report.as_deref(), &opts)
        }
        Command::Oracle { n, cells, half_width } => oracle_cmd(n, cells, half_width),
        Command::Init { config, out } => init_cmd(&config, &out),
        Command::Info { path } => info_cmd(&path),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("landau: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("landau: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &Path) -> std::result::Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let config = RunConfig::parse(&text)?;
    config.validate()?;
    Ok(config)
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))
}

fn write_outputs(dir: &Path, config: &RunConfig, output: &RunOutput) -> landau_core::Result<()> {
    write_timeseries(dir.join("timeseries.csv"), &output.series)?;
    for (i, snap) in output.snapshots.iter().enumerate() {
        write_snapshot(dir.join(snapshot_file_name(i)), snap)?;
    }
    let path = dir.join("config.toml");
    fs::write(&path, config.to_toml()).map_err(|e| LandauError::io(&path, e))
}

fn run_cmd(config_path: &Path, out: Option<&Path>) -> Outcome {
    let config = load_config(config_path)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&config.output_dir));
    create_dir(&dir)?;
    let start = Instant::now();
    match run(&config) {
        Ok(output) => {
            write_outputs(&dir, &config, &output)?;
            let last = output.series.records.last().expect("a run records t = 0");
            println!(
                "steps={} records={} snapshots={} t={} mass={:e} entropy={:e} fisher={:e} elapsed={:.1}s",
                output.steps,
                output.series.records.len(),
                output.snapshots.len(),
                last.t,
                last.mass,
                last.entropy,
                last.fisher,
                start.elapsed().as_secs_f64()
            );
            println!("wrote {}", dir.display());
            Ok(())
        }
        Err(aborted) => {
            // keep what was produced; the run itself is the failure
            if !aborted.partial.series.records.is_empty() {
                write_outputs(&dir, &config, &aborted.partial)?;
            }
            Err(Failure::from(aborted.error))
        }
    }
}

fn snapshot_paths(inputs: &[PathBuf]) -> std::result::Result<Vec<PathBuf>, Failure> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries = fs::read_dir(input).map_err(|e| Failure::Usage(format!("{}: {e}", input.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "lcf"))
                .collect();
            found.sort();
            paths.extend(found);
        } else {
            paths.push(input.clone());
        }
    }
    Ok(paths)
}

fn check_cmd(series_path: &Path, snapshots: &[PathBuf], report_path: Option<&Path>, opts: &HarnessOptions) -> Outcome {
    let series = read_timeseries(series_path)?;
    let mut fields = Vec::new();
    for path in snapshot_paths(snapshots)? {
        let snap = read_snapshot(&path)?;
        fields.push((snap.t, snap.to_field()?));
    }
    fields.sort_by(|a, b| a.0.total_cmp(&b.0));
    let report = run_checks(&series, &fields, opts);
    let text = report.render();
    match report_path {
        Some(path) => {
            fs::write(path, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            print!("{}", text.lines().last().map(|l| format!("{l}\n")).unwrap_or_default());
        }
        None => print!("{text}"),
    }
    if report.failed() {
        Err(Failure::Check("one or more checks failed".into()))
    } else {
        Ok(())
    }
}

fn oracle_fields() -> Vec<InitialDatumSpec> {
    let g = |density, drift, temperature| GaussianComponent { density, drift, temperature };
    vec![
        InitialDatumSpec::Maxwellian,
        InitialDatumSpec::Gaussian(g(1.0, [0.4, -0.2, 0.1], 0.6)),
        InitialDatumSpec::GaussianMixture(vec![g(1.0, [1.0, 0.0, 0.0], 0.5), g(1.0, [-1.0, 0.0, 0.0], 0.5)]),
        InitialDatumSpec::GaussianMixture(vec![g(0.7, [0.3, 0.8, -0.5], 0.4), g(1.3, [-0.6, 0.1, 0.2], 0.9)]),
        InitialDatumSpec::GaussianMixture(vec![
            g(0.5, [0.9, 0.9, 0.0], 0.35),
            g(0.8, [-0.7, 0.2, 0.6], 0.55),
            g(1.1, [0.0, -0.8, -0.4], 0.75),
        ]),
        InitialDatumSpec::Gaussian(g(2.0, [0.0, 0.0, -0.7], 0.3)),
    ]
}

fn oracle_cmd(n: u32, cells: usize, half_width: f64) -> Outcome {
    let start = Instant::now();
    let grid = VelocityGrid::new(cells, half_width)?;
    let engine = CoefficientEngine::new(&grid, n)?;
    let mut worst_coeff = 0.0f64;
    let mut worst_diss: Option<f64> = None;
    for spec in oracle_fields() {
        let f = sample_datum(&spec, &grid)?;
        let fast = engine.compute(&f)?;
        let slow = direct_coefficients(&f, engine.kernels())?;
        worst_coeff = worst_coeff.max(fast.max_relative_discrepancy(&slow));
        if cells <= landau_core::functionals::DOUBLE_MAX_CELLS {
            let flux = engine.flux_coefficients(&f, DEFAULT_F_TOL)?;
            let single = dissipation_single(&f, &flux);
            let double = dissipation_double(&f, engine.kernels(), DEFAULT_F_TOL)?;
            let gap = (single - double).abs() / (double.abs() + 1e-12);
            worst_diss = Some(worst_diss.unwrap_or(0.0).max(gap));
        }
    }
    println!("fields={} N={cells} L={half_width} n={n}", oracle_fields().len());
    println!("max_relative_coefficient_discrepancy={worst_coeff:e}");
    match worst_diss {
        Some(gap) => println!("max_relative_dissipation_gap={gap:e}"),
        None => println!("max_relative_dissipation_gap=skipped (N > {})", landau_core::functionals::DOUBLE_MAX_CELLS),
    }
    println!("elapsed={:.2}s", start.elapsed().as_secs_f64());
    if worst_coeff > 1e-12 || worst_diss.is_some_and(|g| g > 0.05) {
        return Err(Failure::Check("oracle disagreement".into()));
    }
    Ok(())
}

fn init_cmd(config_path: &Path, out: &Path) -> Outcome {
    let config = load_config(config_path)?;
    let f = initial_field(&config)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_snapshot(out, &Snapshot::from_field(&f, config.n, 0.0))?;
    println!("N={} L={} n={} mass={:e} min={:e} max={:e}", config.cells, config.half_width, config.n, f.integral(), f.min(), f.max());
    Ok(())
}

fn info_cmd(path: &Path) -> Outcome {
    let bytes = fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(SNAPSHOT_MAGIC) {
        let snap = Snapshot::from_bytes(&bytes)?;
        let f = snap.to_field()?;
        let c = conserved_quantities(&f);
        println!("kind=snapshot N={} L={} n={} t={}", snap.cells, snap.half_width, snap.n, snap.t);
        println!(
            "mass={:e} momentum=[{:e}, {:e}, {:e}] energy={:e} entropy={:e} min={:e} max={:e}",
            c.mass,
            c.momentum[0],
            c.momentum[1],
            c.momentum[2],
            c.energy,
            entropy(&f),
            f.min(),
            f.max()
        );
        return Ok(());
    }
    let series = read_timeseries(path)?;
    let recs = &series.records;
    println!("kind=timeseries records={} k_list={:?}", recs.len(), series.k_list);
    if let (Some(first), Some(last)) = (recs.first(), recs.last()) {
        println!("t=[{}, {}] max_gap_ratio={:.3}", first.t, last.t, series.max_gap_ratio());
        println!(
            "mass_drift={:e} entropy {:e} -> {:e} fisher {:e} -> {:e}",
            (last.mass - first.mass) / first.mass,
            first.entropy,
            last.entropy,
            first.fisher,
            last.fisher
        );
    }
    for (key, value) in series.provenance.entries() {
        println!("{key} = {value}");
    }
    Ok(())
}
