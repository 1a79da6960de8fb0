//! Command-line front end. Exit codes: 0 pass, 1 numerical or certificate
//! failure, 2 usage or configuration error.

mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use commands::{
    fiber_spectrum, manifold, num, nu_star, spectrum, sweep, verify, write_eigen_csv, write_sweep_csv, EigenRow, FiberReport,
    ManifoldReport, NuStarReport, SpectrumReport, SweepReport, SweepRowOut, VerifyReport, SCHEMA_VERSION,
};
pub use config::{parse_khat, GridSpec, RunConfig, CONFIG_ENV};

use crate::error::Error;
use crate::manifold::Flavor;
use crate::presets::Example;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vortex-spectra", version, about = "Spectra and invariant manifolds of linearized 2D Navier-Stokes about single-mode states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of one fiber, with classification, band and certificates.
    Spectrum(RunArgs),
    /// Critical viscosity of example1 (given alpha) or example3.
    NuStar(RunArgs),
    /// Rightmost eigenvalue along a viscosity grid, optionally with manifold sizes.
    Sweep(RunArgs),
    /// Invariant-manifold chart of a Galerkin truncation.
    Manifold(RunArgs),
    /// Acceptance suite A1..A13.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; defaults to $VORTEX_SPECTRA_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// example1, example2 or example3.
    #[arg(long)]
    pub example: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// start:stop:factor
    #[arg(long)]
    pub nu_grid: Option<String>,
    /// k1,k2
    #[arg(long, allow_hyphen_values = true)]
    pub khat: Option<String>,
    /// Maximal continued-fraction depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Galerkin truncation |k|_inf <= K.
    #[arg(long)]
    pub lattice: Option<usize>,
    #[arg(long)]
    pub ell: Option<u32>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fiber truncation of the matrix cross-check (0 skips it).
    #[arg(long)]
    pub oracle_n: Option<usize>,
    /// center-stable, unstable, stable, center or center-unstable.
    #[arg(long)]
    pub flavor: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add manifold sizes to the sweep.
    #[arg(long)]
    pub manifold_sweep: bool,
    /// Write the fiber matrix with N modes per side to fiber.mtx.
    #[arg(long)]
    pub dump_matrix: Option<usize>,
    /// Output directory for report.json and tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    /// Run a single criterion, e.g. A2.
    #[arg(long)]
    pub only: Option<String>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    /// The config file (or defaults) with every given flag applied on top.
    pub fn resolve(&self) -> crate::Result<RunConfig> {
        let mut c = RunConfig::base(self.config.as_deref())?;
        if let Some(e) = &self.example {
            c.example = Example::parse(e).ok_or_else(|| Error::Config(format!("unknown example `{e}`")))?;
        }
        if self.alpha.is_some() {
            c.alpha = self.alpha;
        }
        if let Some(nu) = self.nu {
            c.nu = Some(nu);
            c.nu_grid = None;
        }
        if let Some(g) = &self.nu_grid {
            c.nu_grid = Some(GridSpec::parse(g)?);
        }
        if let Some(k) = &self.khat {
            c.khat = Some(parse_khat(k)?);
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(depth, lattice, ell, tol, oracle_n, samples, seed);
        if let Some(f) = &self.flavor {
            c.flavor = Flavor::parse(f).ok_or_else(|| Error::Config(format!("unknown flavor `{f}`")))?;
        }
        c.manifold_sweep |= self.manifold_sweep;
        if self.dump_matrix.is_some() {
            c.dump_matrix = self.dump_matrix;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> crate::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce() -> String) {
    let mut out = std::io::stdout().lock();
    let text = if json { serde_json::to_string_pretty(value).expect("report serializes") } else { human() };
    let _ = writeln!(out, "{text}");
}

fn fmt_lambda(l: num_complex::Complex64) -> String {
    if l.im == 0.0 {
        num(l.re)
    } else {
        format!("{}{}{}i", num(l.re), if l.im < 0.0 { "-" } else { "+" }, num(l.im.abs()))
    }
}

fn human_spectrum(r: &SpectrumReport) -> String {
    let mut s = String::new();
    for f in &r.fibers {
        s += &format!("nu={} khat={} class={:?}", f.nu, f.khat, f.class.tag);
        if let Some(b) = f.band {
            s += &format!(" band=[{}i, {}i]", b.lo, b.hi);
        }
        s.push('\n');
        for row in &f.rows {
            let cert = match row.certified {
                Some(true) => "certified",
                Some(false) => "CERTIFICATE FAILED",
                None => "uncertified",
            };
            s += &format!("  {:<9} lambda={}  {cert}", row.kind, fmt_lambda(row.lambda));
            if let Some(g) = row.oracle_gap {
                s += &format!("  oracle gap {g:.1e}");
            }
            s.push('\n');
        }
        if let Some(e) = &f.error {
            s += &format!("  error: {e}\n");
        }
    }
    s += if r.pass { "PASS" } else { "FAIL" };
    s
}

fn run_spectrum(a: &RunArgs) -> crate::Result<bool> {
    let c = a.resolve()?;
    let r = spectrum(&c)?;
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), &r)?;
        write_eigen_csv(&dir.join("eigenvalues.csv"), &r.fibers)?;
    }
    emit(a.json, &r, || human_spectrum(&r));
    Ok(r.pass)
}

fn run_nu_star(a: &RunArgs) -> crate::Result<bool> {
    let c = a.resolve()?;
    let r = nu_star(&c)?;
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), &r)?;
    }
    emit(a.json, &r, || {
        let cert = r.certificate.map(|(lo, hi)| format!(" bracket ({lo}, {hi})")).unwrap_or_default();
        format!("nu_star={} width={:.1e}{cert} {}", r.nu_star, r.bracket_width, if r.pass { "PASS" } else { "FAIL" })
    });
    Ok(r.pass)
}

fn run_sweep(a: &RunArgs) -> crate::Result<bool> {
    let c = a.resolve()?;
    let r = sweep(&c)?;
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), &r)?;
        write_sweep_csv(&dir.join("sweep.csv"), &r.rows)?;
    }
    emit(a.json, &r, || {
        let mut s = String::from("nu,lambda,nu_inv_lambda,delta_cs,delta_s,flags\n");
        for row in &r.rows {
            let o = |v: Option<f64>| v.map(num).unwrap_or_default();
            s += &format!(
                "{},{},{},{},{},{}\n",
                num(row.nu),
                row.lambda.map(fmt_lambda).unwrap_or_default(),
                o(row.nu_inv_lambda),
                o(row.delta_cs),
                o(row.delta_s),
                row.flags.join(";")
            );
        }
        s += &format!("monotone={:?} {}", r.monotone, if r.pass { "PASS" } else { "FAIL" });
        s
    });
    Ok(r.pass)
}

fn run_manifold(a: &RunArgs) -> crate::Result<bool> {
    let c = a.resolve()?;
    let r = manifold(&c)?;
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), &r)?;
        if let Some(chart) = &r.chart {
            write_json(&dir.join("chart.json"), chart)?;
        }
    }
    emit(a.json, &r, || {
        format!(
            "dim={} m_u={} m_c={} m_s={} delta={:e} rate={} max contraction={:.2e} invariance={} {}",
            r.dim,
            r.m_u,
            r.m_c,
            r.m_s,
            r.delta,
            r.rate,
            r.max_contraction,
            r.invariance.as_ref().map(|i| format!("{:.2e}", i.residual)).unwrap_or_else(|| "n/a".into()),
            if r.pass { "PASS" } else { "FAIL" }
        )
    });
    Ok(r.pass)
}

fn run_verify(a: &VerifyArgs) -> crate::Result<bool> {
    let r = verify(a.only.as_deref()).map_err(|e| match e {
        Error::InvalidParameter(m) => Error::Config(m),
        e => e,
    })?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), &r)?;
    }
    emit(a.json, &r, || {
        let mut s: String = r.outcomes.iter().map(|o| o.line() + "\n").collect();
        s += &if r.pass { "all criteria pass".to_string() } else { format!("failing: {}", r.failing.join(", ")) };
        s
    });
    if !r.pass {
        eprintln!("failing criteria: {}", r.failing.join(", "));
    }
    Ok(r.pass)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Spectrum(a) => run_spectrum(a),
        Command::NuStar(a) => run_nu_star(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Manifold(a) => run_manifold(a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    }
}

/// Parses `std::env::args` and runs. Clap usage errors exit with 2.
pub fn main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            code
        }
    }
}
