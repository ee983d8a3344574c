use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use conjscan::assembly::Grid;
use conjscan::config::{check_run_settings, load_config, ProblemConfig, RunSettings};
use conjscan::crossing::{certify_conjugate_instant, DEFAULT_REGULARITY_TAU};
use conjscan::inertia::{morse_profile, DEFAULT_KERNEL_TAU};
use conjscan::scan::{build_scan_report, scan_conjugate_instants, ScanOptions, ScanReport};
use conjscan::{matrix_lab, report, shooting, Error, Problem};

const DEFAULT_N: usize = 2001;

#[derive(Parser)]
#[command(name = "conjscan", version, about = "Conjugate instants, Morse indices and bifurcation on shrinking domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Problem configuration file
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Grid nodes on [0, 1]
    #[arg(long)]
    n: Option<usize>,
    /// Uniform scan radii
    #[arg(long)]
    samples: Option<usize>,
    /// Bisection width for conjugate instants
    #[arg(long)]
    refine_tol: Option<f64>,
    /// Relative kernel threshold
    #[arg(long)]
    tau: Option<f64>,
    /// Directory for written reports
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check coefficients and nonlinearity against the problem invariants
    Validate(Common),
    /// Morse index at one radius with its per-mode breakdown
    Morse {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
    },
    /// Locate conjugate instants and write scan.csv and summary.json
    Scan(Common),
    /// Certify crossing forms, at one radius or at every scanned instant
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r0: Option<f64>,
    },
    /// Check that the Morse index equals the sum of multiplicities
    VerifySmale(Common),
    /// Morse-index jump formula on seeded random matrix paths
    MatrixLab {
        #[command(flatten)]
        common: Common,
        /// First seed of the batch
        #[arg(long)]
        seed: Option<u64>,
        /// Number of seeded paths
        #[arg(long)]
        count: Option<usize>,
        /// Comma-separated path dimensions, cycled over seeds
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
    /// Follow shooting zeros as the initial slope shrinks
    Bifurcate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated initial slopes
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s_schedule: Option<Vec<f64>>,
    },
}

enum Failure {
    Usage(String),
    Identity(Error),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_identity_violation() {
            Failure::Identity(e)
        } else {
            Failure::Run(e)
        }
    }
}

struct Loaded {
    problem: Problem,
    run: RunSettings,
}

fn merge(common: &Common, base: RunSettings) -> Result<RunSettings, Failure> {
    let run = RunSettings {
        n: common.n.or(base.n),
        samples: common.samples.or(base.samples),
        refine_tol: common.refine_tol.or(base.refine_tol),
        tau: common.tau.or(base.tau),
        output: common.output.clone().or(base.output),
        ..base
    };
    check_run_settings(&run)?;
    Ok(run)
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let path = common.problem.as_ref().ok_or_else(|| Failure::Usage("--problem <FILE> is required".into()))?;
    if !path.is_file() {
        return Err(Failure::Usage(format!("problem file {} not found", path.display())));
    }
    let ProblemConfig { problem, run } = load_config(path)?;
    problem.validate().into_result()?;
    let run = merge(common, run)?;
    Ok(Loaded { problem, run })
}

fn grid(run: &RunSettings) -> Result<Grid, Failure> {
    Ok(Grid::new(run.n.unwrap_or(DEFAULT_N))?)
}

fn scan_options(run: &RunSettings) -> ScanOptions {
    let d = ScanOptions::default();
    ScanOptions {
        r_samples: run.samples.unwrap_or(d.r_samples),
        refine_tol: run.refine_tol.unwrap_or(d.refine_tol),
        kernel_tau: run.tau.unwrap_or(d.kernel_tau),
        ..d
    }
}

fn output_dir(run: &RunSettings) -> Result<PathBuf, Failure> {
    let dir = run.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .map_err(|e| Failure::Run(Error::Config(format!("cannot create {}: {e}", dir.display()))))?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<fs::File, Failure> {
    let path = dir.join(name);
    fs::File::create(&path).map_err(|e| Failure::Run(Error::Config(format!("cannot write {}: {e}", path.display()))))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure::Run(Error::Config(format!("cannot write {}: {e}", path.display()))))
}

fn full_report(loaded: &Loaded) -> Result<ScanReport, Failure> {
    let grid = grid(&loaded.run)?;
    let opts = scan_options(&loaded.run);
    let scan = scan_conjugate_instants(&loaded.problem, &grid, &opts)?;
    Ok(build_scan_report(&loaded.problem, &grid, &scan, &opts)?)
}

fn write_scan_outputs(report: &ScanReport, run: &RunSettings) -> Result<(), Failure> {
    let dir = output_dir(run)?;
    report::write_scan_csv(report, create(&dir, "scan.csv")?)?;
    write_text(&dir, "summary.json", &(report::to_json(report)? + "\n"))?;
    print!("{}", report::scan_table(report));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate(common) => {
            let path = common.problem.as_ref().ok_or_else(|| Failure::Usage("--problem <FILE> is required".into()))?;
            if !path.is_file() {
                return Err(Failure::Usage(format!("problem file {} not found", path.display())));
            }
            let cfg = load_config(path)?;
            let validation = cfg.problem.validate();
            print!("{validation}");
            validation.into_result()?;
            Ok(())
        }
        Command::Morse { common, r } => {
            let loaded = load(&common)?;
            let grid = grid(&loaded.run)?;
            let profile = morse_profile(&loaded.problem, r, &grid)?;
            for (mode, count) in &profile.per_mode {
                match mode {
                    Some(m) => println!("nu = {:>3}  weight = {:>3}  negative = {count}", m.nu, m.multiplicity_weight),
                    None => println!("negative = {count}"),
                }
            }
            println!("morse index at r = {}: {}", report::fmt_real(r), profile.total);
            Ok(())
        }
        Command::Scan(common) => {
            let loaded = load(&common)?;
            let report = full_report(&loaded)?;
            write_scan_outputs(&report, &loaded.run)?;
            for c in &report.crossings {
                c.check()?;
            }
            Ok(())
        }
        Command::Certify { common, r0 } => {
            let loaded = load(&common)?;
            match r0 {
                Some(r0) => {
                    let grid = grid(&loaded.run)?;
                    let modes = morse_profile(&loaded.problem, 1.0, &grid)?
                        .per_mode
                        .into_iter()
                        .map(|(m, _)| m)
                        .collect::<Vec<_>>();
                    let c = certify_conjugate_instant(
                        &loaded.problem,
                        &modes,
                        r0,
                        &grid,
                        loaded.run.tau.unwrap_or(DEFAULT_KERNEL_TAU),
                        DEFAULT_REGULARITY_TAU,
                    )?;
                    println!("{}", report::to_json(&c)?);
                    c.check()?;
                    Ok(())
                }
                None => {
                    let report = full_report(&loaded)?;
                    write_scan_outputs(&report, &loaded.run)?;
                    for c in &report.crossings {
                        c.check()?;
                    }
                    Ok(())
                }
            }
        }
        Command::VerifySmale(common) => {
            let loaded = load(&common)?;
            let report = full_report(&loaded)?;
            write_scan_outputs(&report, &loaded.run)?;
            report.check()?;
            Ok(())
        }
        Command::MatrixLab { common, seed, count, dims } => {
            let base = match &common.problem {
                Some(_) => load(&common)?.run,
                None => merge(&common, RunSettings::default())?,
            };
            let run = RunSettings {
                seed: seed.or(base.seed),
                count: count.or(base.count),
                dims: dims.or(base.dims.clone()),
                ..base
            };
            check_run_settings(&run)?;
            let rows = matrix_lab::run_batch(
                run.seed.unwrap_or(0),
                run.count.unwrap_or(100),
                run.dims.as_deref().unwrap_or(&[4, 8, 16]),
            )?;
            let dir = output_dir(&run)?;
            report::write_lab_csv(&rows, create(&dir, "matrix_lab.csv")?)?;
            let held = rows.iter().filter(|r| r.holds).count();
            println!("{held}/{} paths satisfy the Morse-index jump formula", rows.len());
            match rows.iter().find(|r| !r.holds) {
                Some(r) => Err(Error::MorseJumpViolation { seed: r.seed, lhs: r.lhs, rhs: r.rhs }.into()),
                None => Ok(()),
            }
        }
        Command::Bifurcate { common, s_schedule } => {
            let loaded = load(&common)?;
            let run = RunSettings { s_schedule: s_schedule.or(loaded.run.s_schedule.clone()), ..loaded.run.clone() };
            check_run_settings(&run)?;
            let Problem::Interval(p) = &loaded.problem else {
                return Err(Failure::Run(Error::Config("bifurcate needs an interval problem".into())));
            };
            let report = full_report(&loaded)?;
            let schedule = run.s_schedule.clone().unwrap_or_else(|| shooting::DEFAULT_S_SCHEDULE.to_vec());
            let bif = shooting::verify_bifurcation_theorem(p, &report, &schedule)?;
            let dir = output_dir(&run)?;
            report::write_bifurcation_csv(&bif, create(&dir, "bifurcate.csv")?)?;
            for l in &bif.limits {
                println!(
                    "k = {}  limit r = {}  matched instant = {}",
                    l.k,
                    report::fmt_real(l.limit),
                    l.matched_instant.map_or("none".into(), report::fmt_real)
                );
            }
            println!("distinct limits: {}   morse index: {}", bif.distinct_limits, bif.morse_index);
            bif.check()?;
            Ok(())
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("CONJSCAN_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nUsage: conjscan <COMMAND> --problem <FILE> [OPTIONS]\nRun `conjscan --help` for the list of commands.");
            ExitCode::from(1)
        }
        Err(Failure::Identity(e)) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
