//! Command-line front end.
//!
//! Exit status: 0 success, 1 verification failure, 2 configuration or input
//! error, 3 solver error.

pub mod builtin;
pub mod config;
pub mod field_file;
pub mod suites;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::channel_solver::{energy_balance, solve_channel_bumpy, solve_channel_flat, ChannelGeometry, ChannelProblem, ChannelSolution};
use crate::dtn_operator::{dtn_apply, dtn_quadratic_form};
use crate::error::{Error, Result};
use crate::grid::{FieldGrid, Torus};
use crate::halfspace_solver::{solve_field, trace_energy, BoundaryTrace};
use crate::numerics::logspace;
use crate::spectral_core::{characteristic_roots, validate_root_relations, Frequency};
use builtin::Source;
use config::RunConfig;
use suites::{SuiteReport, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rotstokes", version, about = "Stokes-Coriolis spectral solvers and verification suites")]
pub struct Cli {
    /// TOML run configuration; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long)]
    pub n_h: Option<usize>,
    #[arg(long)]
    pub n_v: Option<usize>,
    /// boundary data: builtin:<zero|shear|mode|spiral> or a field file
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub data_amplitude: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Characteristic roots and relation residuals over a log sweep of |ξ|
    Roots {
        #[arg(long, default_value_t = 1e-3)]
        min: f64,
        #[arg(long, default_value_t = 1e3)]
        max: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Decaying half-space solution above periodic boundary data
    SolveHalfspace {
        #[command(flatten)]
        grid: GridArgs,
        /// heights x₃ ≥ 0, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 1.0, 2.0])]
        levels: Vec<f64>,
    },
    /// DtN traction of periodic boundary data, or the asymptotic rate table
    Dtn {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_parser = ["asymptotics"])]
        table: Option<String>,
    },
    /// Horizontal decay exponents of the named kernels
    Kernels {
        /// kernel names (default: all with a decay window)
        #[arg(long, value_delimiter = ',')]
        kernel: Vec<String>,
        #[arg(long, default_value_t = 1024)]
        n: usize,
    },
    /// Channel solve over a flat or bumpy bottom with the transparent top
    SolveChannel {
        #[command(flatten)]
        grid: GridArgs,
        /// bottom: builtin:<flat|cosine|ridge> or a field file with component omega
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        depth: Option<f64>,
        /// amplitude of the builtin bottom
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run verification suites and write report.txt and CSV tables
    Verify {
        #[arg(long, value_parser = suites::SUITES, conflicts_with = "all")]
        suite: Vec<String>,
        #[arg(long)]
        all: bool,
    },
}

/// Parses arguments (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Truncated { .. } | Error::Structure(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Configuration after the file and the global and command flags are merged.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(o) = &cli.out {
        c.output.dir = o.clone();
    }
    let grid = match &cli.command {
        Command::SolveHalfspace { grid, .. } | Command::Dtn { grid, .. } => Some(grid),
        Command::SolveChannel { grid, omega, depth, amplitude, tol } => {
            if let Some(o) = omega {
                c.domain.omega = o.clone();
            }
            if let Some(d) = depth {
                c.domain.depth = *d;
            }
            if let Some(a) = amplitude {
                c.domain.amplitude = *a;
            }
            if let Some(t) = tol {
                c.tolerances.solver = *t;
            }
            Some(grid)
        }
        _ => None,
    };
    if let Some(g) = grid {
        if let Some(p) = g.period {
            c.grid.period = p;
        }
        if let Some(n) = g.n_h {
            c.grid.n_h = n;
        }
        if let Some(n) = g.n_v {
            c.grid.n_v = n;
        }
        if let Some(d) = &g.data {
            c.boundary.data = d.clone();
        }
        if let Some(a) = g.data_amplitude {
            c.boundary.amplitude = a;
        }
    }
    c.validate()?;
    Ok(c)
}

fn execute(cli: &Cli) -> Result<i32> {
    let config = resolve(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &config))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn out_dir(config: &RunConfig) -> Result<&Path> {
    let d = config.output.dir.as_path();
    std::fs::create_dir_all(d).map_err(|e| io_err(d, e))?;
    Ok(d)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn torus(config: &RunConfig) -> Torus {
    Torus::new(config.grid.period, config.grid.n_h)
}

fn boundary_data(config: &RunConfig, t: &Torus) -> Result<[Vec<f64>; 3]> {
    match builtin::source(&config.boundary.data) {
        Source::Builtin(id) => builtin::boundary(id, t, config.boundary.amplitude),
        Source::File(p) => {
            let mut d = builtin::from_file(p, t, 3)?;
            let a = config.boundary.amplitude;
            Ok(std::array::from_fn(|c| std::mem::take(&mut d[c]).into_iter().map(|v| a * v).collect()))
        }
    }
}

fn bottom(config: &RunConfig, t: &Torus) -> Result<Vec<f64>> {
    match builtin::source(&config.domain.omega) {
        Source::Builtin(id) => builtin::omega(id, t, config.domain.depth, config.domain.amplitude),
        Source::File(p) => Ok(builtin::from_file(p, t, 1)?.remove(0)),
    }
}

fn single_level(t: Torus, names: &[&str], data: &[Vec<f64>]) -> FieldGrid {
    let mut f = FieldGrid::zeros(t, vec![0.0], names);
    for (c, d) in data.iter().enumerate() {
        f.data[c].copy_from_slice(d);
    }
    f
}

fn dispatch(command: &Command, config: &RunConfig) -> Result<i32> {
    match command {
        Command::Roots { min, max, count } => {
            if !(*min > 0.0 && max > min && *count >= 2) {
                return Err(Error::Config("roots needs 0 < min < max and count >= 2".into()));
            }
            let dir = out_dir(config)?;
            let mut t = Table::new("roots", &["modulus", "lambda1", "re_lambda2", "im_lambda2", "relation_residual"]);
            let mut worst = 0.0f64;
            for r in logspace(*min, *max, *count) {
                let xi = Frequency::new(r, 0.0);
                let roots = characteristic_roots(&xi);
                let res = validate_root_relations(&roots, &xi).max();
                worst = worst.max(res);
                let l = roots.lambda;
                t.push([r, l[0].re, l[1].re, l[1].im, res].iter().map(|x| format!("{x:.16e}")).collect());
            }
            write_text(&dir.join("roots.csv"), &t.to_csv())?;
            println!("roots: {count} frequencies, worst relation residual {worst:.3e}");
            Ok(EXIT_OK)
        }
        Command::SolveHalfspace { levels, .. } => {
            let t = torus(config);
            let trace = BoundaryTrace::from_velocity(t, boundary_data(config, &t)?)?;
            let field = solve_field(&trace, levels)?;
            let dir = out_dir(config)?;
            field_file::write(&dir.join("halfspace.scf"), &field)?;
            let energy = trace_energy(&trace)?;
            let report = format!(
                "solve-halfspace\ngrid {} x {}, period {:.16e}\nlevels {}\ndirichlet_energy {:.16e}\n",
                t.n,
                t.n,
                t.period,
                levels.len(),
                energy
            );
            write_text(&dir.join("halfspace_report.txt"), &report)?;
            print!("{report}");
            Ok(EXIT_OK)
        }
        Command::Dtn { table: Some(_), .. } => {
            let rates = suites::dtn_asymptotics()?;
            let table = suites::asymptotics_table(&rates);
            let dir = out_dir(config)?;
            write_text(&dir.join("dtn_asymptotics.csv"), &table.to_csv())?;
            println!("{:<32} {:>10} {:>12}  accept", "quantity", "predicted", "measured");
            for a in &rates {
                println!("{:<32} {:>10.4} {:>12.4}  {}", a.quantity, a.rate, a.measured, a.bound);
            }
            Ok(if rates.iter().all(|a| a.bound.holds(a.measured)) { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Dtn { table: None, .. } => {
            let t = torus(config);
            let trace = BoundaryTrace::from_velocity(t, boundary_data(config, &t)?)?;
            let traction = dtn_apply(&trace)?;
            let dir = out_dir(config)?;
            field_file::write(&dir.join("dtn.scf"), &single_level(t, &["t1", "t2", "t3"], &traction))?;
            let (form, energy) = (dtn_quadratic_form(&trace)?, trace_energy(&trace)?);
            let report = format!(
                "dtn\ngrid {} x {}, period {:.16e}\nquadratic_form {form:.16e}\ndirichlet_energy {energy:.16e}\nrelative_gap {:.6e}\n",
                t.n,
                t.n,
                t.period,
                if energy > 0.0 { (form - energy).abs() / energy } else { form.abs() }
            );
            write_text(&dir.join("dtn_report.txt"), &report)?;
            print!("{report}");
            Ok(EXIT_OK)
        }
        Command::Kernels { kernel, n } => {
            if !n.is_power_of_two() || *n < 64 {
                return Err(Error::Config(format!("--n = {n} must be a power of two, at least 64")));
            }
            let names = if kernel.is_empty() { suites::kernel_names() } else { kernel.clone() };
            let fits = suites::kernel_exponents(&names, *n)?;
            let mut csv = String::from("kernel,x3,exponent\n");
            for (name, x3, e) in &fits {
                csv.push_str(&format!("{name},{x3:.9e},{e:.9e}\n"));
                println!("{name:<8} x3 = {x3:<4} exponent {e:.4}");
            }
            write_text(&out_dir(config)?.join("kernels.csv"), &csv)?;
            Ok(EXIT_OK)
        }
        Command::SolveChannel { .. } => solve_channel(config),
        Command::Verify { suite, all } => {
            if !all && suite.is_empty() {
                return Err(Error::Config("verify needs --suite <name> or --all".into()));
            }
            let names: Vec<&str> = if *all { suites::SUITES.to_vec() } else { suite.iter().map(String::as_str).collect() };
            let reports = verify(&names, config.seed, out_dir(config)?)?;
            let total: usize = reports.iter().map(|r| r.checks.len()).sum();
            let failed: Vec<String> =
                reports.iter().flat_map(|r| r.checks.iter().filter(|c| !c.pass).map(move |c| format!("{}/{}", r.name, c.name))).collect();
            for r in &reports {
                for (stage, secs) in &r.timings {
                    eprintln!("{}: {stage} took {secs:.2} s", r.name);
                }
            }
            println!("verify: {}/{total} checks passed", total - failed.len());
            for f in &failed {
                println!("  FAIL {f}");
            }
            Ok(if failed.is_empty() { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

/// Runs the named suites in order and writes their outputs into `dir`.
pub fn verify(names: &[&str], seed: u64, dir: &Path) -> Result<Vec<SuiteReport>> {
    let reports = names.iter().map(|n| suites::run_suite(n, seed)).collect::<Result<Vec<_>>>()?;
    suites::write_outputs(dir, seed, &reports)?;
    Ok(reports)
}

fn solve_channel(config: &RunConfig) -> Result<i32> {
    let t = torus(config);
    let geometry = ChannelGeometry::new(t, bottom(config, &t)?, config.grid.n_v)?;
    let problem = ChannelProblem::new(geometry.clone(), boundary_data(config, &t)?)?;
    let solution: ChannelSolution =
        if geometry.is_flat() { solve_channel_flat(&geometry, &problem.u0)? } else { solve_channel_bumpy(&problem, config.tolerances.solver)? };
    let dir = out_dir(config)?;
    let n2 = t.len();
    let mut vel = FieldGrid::zeros(t, solution.velocity.levels.clone(), &["u1", "u2", "u3", "x3"]);
    for (k, &s) in solution.velocity.levels.iter().enumerate() {
        for c in 0..3 {
            vel.level_slice_mut(c, k).copy_from_slice(solution.velocity.level_slice(c, k));
        }
        for (i, x) in vel.level_slice_mut(3, k).iter_mut().enumerate() {
            *x = geometry.height(i % n2, s);
        }
    }
    field_file::write(&dir.join("channel_velocity.scf"), &vel)?;
    field_file::write(&dir.join("channel_pressure.scf"), &solution.pressure)?;
    let d = &solution.diagnostics;
    let mut history = String::from("iteration,relative_residual\n");
    for (k, r) in d.history.iter().enumerate() {
        history.push_str(&format!("{k},{r:.9e}\n"));
    }
    write_text(&dir.join("channel_residuals.csv"), &history)?;
    let mut report = format!(
        "solve-channel\ngrid {} x {} x {}, period {:.16e}\nbottom {}, lipschitz {:.6e}\nsolver {}\n",
        t.n,
        t.n,
        geometry.n_v,
        t.period,
        config.domain.omega,
        geometry.lipschitz,
        if geometry.is_flat() { "flat (per-frequency exact)" } else { "mapped (GMRES)" }
    );
    report.push_str(&format!("compatibility_residual {:.6e}\n", problem.compatibility_residual()));
    report.push_str(&format!("iterations {}\nrelative_residual {:.6e}\n", d.iterations, d.relative_residual));
    if !geometry.is_flat() {
        let e = energy_balance(&solution, &problem.lift)?;
        report.push_str(&format!(
            "energy dirichlet {:.9e} dtn {:.9e} pressure_work {:.9e} source {:.9e}\nenergy_identity_gap {:.6e}\nenergy_inequality {}\n",
            e.dirichlet,
            e.dtn,
            e.pressure_work,
            e.source,
            e.identity_gap(),
            if e.inequality_holds(1e-8) { "holds" } else { "violated" }
        ));
    }
    for w in &d.warnings {
        report.push_str(&format!("warning {w}\n"));
    }
    write_text(&dir.join("channel_report.txt"), &report)?;
    print!("{report}");
    Ok(EXIT_OK)
}
