//! `pfde`: simulate, analyze, check and estimate spectra from a TOML config.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 configuration
//! error, 3 numerical blowup, 4 zero section not invariant, 5 other errors.

mod manifest;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pfde_core::config::{parse_config, RunConfig};
use pfde_core::harness::{run_suite, write_check_csv, Suite, SuiteOptions};
use pfde_core::pipeline::{analyze, AnalyzeOptions};
use pfde_core::solver::integrate;
use pfde_core::solver::io::{read_state, write_snapshots_csv, write_state, StateDump};
use pfde_core::spectrum::{
    principal_spectrum, write_spectrum_csv, KMode, KSampler, LyapunovParams,
};
use pfde_core::structure::{block_triangularize, interaction_matrix, write_matrix_csv};
use pfde_core::PfdeError;

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "pfde",
    version,
    about = "Delayed reaction-diffusion systems: simulation, spectra and persistence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KModeArg {
    ZeroSection,
    OmegaLimit,
}

impl From<KModeArg> for KMode {
    fn from(m: KModeArg) -> Self {
        match m {
            KModeArg::ZeroSection => KMode::ZeroSection,
            KModeArg::OmegaLimit => KMode::OmegaLimit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Quasimonotone,
    Monotone,
    Comparison,
    Linearization,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Quasimonotone => Suite::Quasimonotone,
            SuiteArg::Monotone => Suite::Monotone,
            SuiteArg::Comparison => Suite::Comparison,
            SuiteArg::Linearization => Suite::Linearization,
        }
    }
}

#[derive(clap::Args)]
struct SpectrumArgs {
    /// How the minimal set K is sampled.
    #[arg(long, value_enum, default_value = "zero-section")]
    k_mode: KModeArg,
    /// Horizon of each exponent estimate.
    #[arg(long, default_value_t = 50.0)]
    horizon: f64,
    /// Regression window.
    #[arg(long, default_value_t = 5.0)]
    window: f64,
    /// Driver angles per dimension in zero-section mode.
    #[arg(long, default_value_t = KSampler::DEFAULT_ANGLES_PER_DIM)]
    angles: usize,
    /// Transient skipped before omega-limit sampling.
    #[arg(long, default_value_t = KSampler::DEFAULT_T_SKIP)]
    t_skip: f64,
    /// Number of omega-limit samples, one delay apart.
    #[arg(long, default_value_t = 8)]
    samples: usize,
}

impl SpectrumArgs {
    fn options(&self, tol: f64) -> AnalyzeOptions {
        AnalyzeOptions {
            mode: self.k_mode.into(),
            tol,
            lyapunov: LyapunovParams {
                t_end: self.horizon,
                window: self.window,
                ..Default::default()
            },
            angles_per_dim: self.angles,
            t_skip: self.t_skip,
            omega_samples: self.samples,
            omega_spacing: 1.0,
        }
    }

    fn record(&self, m: &mut RunManifest) {
        m.set(
            "k_mode",
            self.k_mode.to_possible_value().expect("named").get_name(),
        );
        m.set("horizon", self.horizon);
        m.set("window", self.window);
        m.set("angles", self.angles);
        m.set("t_skip", self.t_skip);
        m.set("samples", self.samples);
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured problem and write snapshot CSV.
    Simulate {
        config: PathBuf,
        /// Final time, measured from the start of this run.
        #[arg(long = "T", visible_alias = "t-end")]
        t_end: f64,
        /// Snapshot times, comma separated; defaults to every unit time.
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        /// Continue from a state file written by an earlier run.
        #[arg(long)]
        restart: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Interaction matrix, block structure, block spectra and verdict.
    Analyze {
        config: PathBuf,
        #[command(flatten)]
        spectrum: SpectrumArgs,
        /// Spectrum lower bounds must exceed this to count as positive.
        #[arg(long, default_value_t = pfde_core::structure::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a property suite and write a pass/fail table.
    Check {
        config: PathBuf,
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the suite's number of cases.
        #[arg(long)]
        cases: Option<usize>,
        /// Override the suite's horizon.
        #[arg(long = "T", visible_alias = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Principal spectrum of every diagonal block.
    Spectrum {
        config: PathBuf,
        #[command(flatten)]
        spectrum: SpectrumArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Pfde(PfdeError),
    CheckFailed(String),
}

impl From<PfdeError> for Failure {
    fn from(e: PfdeError) -> Self {
        Failure::Pfde(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Pfde(e.into())
    }
}

fn exit_code(e: &PfdeError) -> u8 {
    match e {
        PfdeError::Config { .. }
        | PfdeError::UnknownCatalog(_)
        | PfdeError::MalformedCoefficients(_)
        | PfdeError::InvalidProblem(_)
        | PfdeError::ShapeMismatch(_)
        | PfdeError::OffGrid(_) => 2,
        PfdeError::NumericalBlowup { .. } => 3,
        PfdeError::ZeroSectionNotInvariant { .. } => 4,
        _ => 5,
    }
}

struct Loaded {
    config: RunConfig,
    manifest: RunManifest,
}

fn load(command: &str, path: &Path, seed: u64, out: &Path) -> Result<Loaded, Failure> {
    let bytes = fs::read(path).map_err(|e| PfdeError::Config {
        key: String::new(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| PfdeError::Config {
        key: String::new(),
        message: format!("{} is not UTF-8", path.display()),
    })?;
    let config = parse_config(&text)?;
    let manifest = RunManifest::new(command, path, &bytes, seed, out);
    Ok(Loaded { config, manifest })
}

/// CSV file whose first line carries the manifest hash.
fn csv(out: &Path, name: &str, hash: &str) -> Result<BufWriter<File>, Failure> {
    let mut w = BufWriter::new(File::create(out.join(name))?);
    writeln!(w, "# manifest_sha256={hash}")?;
    Ok(w)
}

fn write_manifest(out: &Path, m: &RunManifest) -> Result<(), Failure> {
    fs::write(out.join("manifest.toml"), m.to_toml())?;
    Ok(())
}

fn simulate(
    config: &Path,
    t_end: f64,
    snapshots: Option<Vec<f64>>,
    restart: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let Loaded {
        config: cfg,
        mut manifest,
    } = load("simulate", config, 0, out)?;
    let p = &cfg.problem;
    let (start, driver, phi) = match restart {
        Some(path) => {
            let dump = read_state(File::open(path)?)?;
            manifest.set("restart_sha256", manifest::sha256_hex(&fs::read(path)?));
            (dump.time, dump.driver, dump.segment)
        }
        None => (0.0, p.driver().clone(), cfg.initial.clone()),
    };
    let snaps =
        snapshots.unwrap_or_else(|| (0..=t_end.floor() as usize).map(|i| i as f64).collect());
    manifest.set("T", t_end);
    manifest.set("snapshots", format!("{snaps:?}"));
    fs::create_dir_all(out)?;
    write_manifest(out, &manifest)?;
    let hash = manifest.hash();
    let tr = match integrate(p, &driver, &phi, t_end, &snaps) {
        Ok(tr) => tr,
        Err(
            e @ PfdeError::NumericalBlowup {
                time,
                last_valid_time,
            },
        ) => {
            fs::write(
                out.join("report.toml"),
                format!(
                    "status = \"blowup\"\ntime = {}\nlast_valid_time = {}\n",
                    start + time,
                    start + last_valid_time
                ),
            )?;
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let mut w = csv(out, "trajectory.csv", &hash)?;
    write_snapshots_csv(&mut w, &tr, p.mesh(), start)?;
    w.flush()?;
    let dump = StateDump {
        time: start + tr.final_time(),
        driver: driver.advance(tr.final_time()),
        segment: tr.final_segment().clone(),
    };
    write_state(BufWriter::new(File::create(out.join("state.bin"))?), &dump)?;
    fs::write(
        out.join("report.toml"),
        format!("status = \"ok\"\nfinal_time = {}\n", dump.time),
    )?;
    Ok(())
}

fn analyze_cmd(config: &Path, args: &SpectrumArgs, tol: f64, out: &Path) -> Result<(), Failure> {
    let Loaded {
        config: cfg,
        mut manifest,
    } = load("analyze", config, 0, out)?;
    args.record(&mut manifest);
    manifest.set("tol", tol);
    fs::create_dir_all(out)?;
    write_manifest(out, &manifest)?;
    let hash = manifest.hash();
    let report = analyze(&cfg.problem, &cfg.initial, &args.options(tol))?;
    let mut doc = format!("manifest_sha256 = \"{hash}\"\n");
    doc.push_str(&report.to_toml()?);
    fs::write(out.join("report.toml"), doc)?;
    let mut w = csv(out, "matrix.csv", &hash)?;
    write_matrix_csv(&mut w, &report.matrix)?;
    w.flush()?;
    let mut w = csv(out, "spectrum.csv", &hash)?;
    write_spectrum_csv(&mut w, &report.spectra)?;
    w.flush()?;
    let v = &report.verdict;
    println!(
        "k = {}, I = {:?}, J = {:?}, uniformly_persistent = {}, strictly_persistent_at_zero = {}",
        report.blocks.k(),
        report.blocks.i_set,
        report.blocks.j_set,
        v.uniformly_persistent,
        v.strictly_persistent_at_zero
    );
    if let Some(r) = &v.inconclusive_reason {
        println!("inconclusive: {r}");
    }
    Ok(())
}

fn check_cmd(
    config: &Path,
    suite: Suite,
    seed: u64,
    cases: Option<usize>,
    t_end: Option<f64>,
    out: &Path,
) -> Result<(), Failure> {
    let Loaded {
        config: cfg,
        mut manifest,
    } = load("check", config, seed, out)?;
    manifest.set("suite", suite);
    if let Some(c) = cases {
        manifest.set("cases", c);
    }
    if let Some(t) = t_end {
        manifest.set("T", t);
    }
    fs::create_dir_all(out)?;
    write_manifest(out, &manifest)?;
    let opts = SuiteOptions {
        seed,
        cases,
        t_end,
        ..Default::default()
    };
    let rows = run_suite(&cfg.problem, suite, &opts)?;
    let mut w = csv(out, "report.csv", &manifest.hash())?;
    write_check_csv(&mut w, &rows)?;
    w.flush()?;
    let failed: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
    println!(
        "{suite}: {} of {} cases passed",
        rows.len() - failed.len(),
        rows.len()
    );
    if failed.is_empty() {
        return Ok(());
    }
    let mut msg = format!("{} {suite} case(s) failed", failed.len());
    for r in failed.iter().take(5) {
        msg.push_str(&format!(
            "\n  case {}: worst margin {}",
            r.case_id, r.worst_margin
        ));
        if let Some(d) = &r.detail {
            msg.push_str(&format!(" ({d})"));
        }
    }
    Err(Failure::CheckFailed(msg))
}

fn spectrum_cmd(config: &Path, args: &SpectrumArgs, out: &Path) -> Result<(), Failure> {
    let Loaded {
        config: cfg,
        mut manifest,
    } = load("spectrum", config, 0, out)?;
    args.record(&mut manifest);
    fs::create_dir_all(out)?;
    write_manifest(out, &manifest)?;
    let p = &cfg.problem;
    let opts = args.options(pfde_core::structure::DEFAULT_TOL);
    let sampler = match opts.mode {
        KMode::ZeroSection => KSampler::zero_section_grid(p, opts.angles_per_dim),
        KMode::OmegaLimit => KSampler::omega_limit(
            p,
            cfg.initial.clone(),
            opts.t_skip,
            opts.omega_samples,
            opts.omega_spacing,
        ),
    };
    let k = sampler.realize(p, opts.lyapunov.t_end)?;
    let blocks = block_triangularize(&interaction_matrix(p, &k)?);
    let spectra = blocks
        .blocks
        .iter()
        .enumerate()
        .map(|(j, members)| principal_spectrum(p, &k, j + 1, members, opts.lyapunov))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv(out, "spectrum.csv", &manifest.hash())?;
    write_spectrum_csv(&mut w, &spectra)?;
    w.flush()?;
    for s in &spectra {
        println!("block {}: [{}, {}]", s.block, s.lower, s.upper);
    }
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("PFDE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            // fails only if a pool already exists, which cannot happen here
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::Simulate {
            config,
            t_end,
            snapshots,
            restart,
            out,
        } => simulate(config, *t_end, snapshots.clone(), restart.as_deref(), out),
        Command::Analyze {
            config,
            spectrum,
            tol,
            out,
        } => analyze_cmd(config, spectrum, *tol, out),
        Command::Check {
            config,
            suite,
            seed,
            cases,
            t_end,
            out,
        } => check_cmd(config, (*suite).into(), *seed, *cases, *t_end, out),
        Command::Spectrum {
            config,
            spectrum,
            out,
        } => spectrum_cmd(config, spectrum, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::CheckFailed(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Pfde(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
