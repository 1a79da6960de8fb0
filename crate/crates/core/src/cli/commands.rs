//! Subcommand bodies. Each returns a serializable report and whether every
//! certificate in it passed.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ndarray::Array1;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use crate::acceptance::{run_all, Outcome};
use crate::contfrac::{continuous_band, Band, CFParams, MatchingForm};
use crate::eigensolver::{
    decoupled_eigenvalue, default_real_bracket, diagonal_eigenvalues, find_complex_eigenvalue, find_nu_star,
    find_nu_star_example3, find_real_eigenvalue, isolate_eigenvalues, newton_with_form, EigenResult, Region,
};
use crate::error::{Error, Result};
use crate::lattice::{FiberClass, FiberSpec, FiberTag, LatticeVector};
use crate::manifold::{
    base_direction, build_galerkin, invariance_residual, manifold_graph, size_scaling_sweep, spectral_split, ChartParams,
    InvarianceReport, ManifoldChart, SplitConstants,
};
use crate::oracle::{eigen_all, fiber_matrix, write_matrix_market};
use crate::presets::{Certificate, Example};

pub const SCHEMA_VERSION: u32 = 1;

/// Modes per side listed for diagonal fibers.
const DIAGONAL_MODES: i64 = 5;
/// Smallest box edge when isolating complex eigenvalues.
const ISOLATE_SIZE: f64 = 1e-3;
/// Oracle distances above this are flagged.
const ORACLE_FLAG: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRow {
    pub nu: f64,
    pub khat: LatticeVector,
    /// `real`, `complex`, `decoupled` or `diagonal`.
    pub kind: String,
    pub lambda: Complex64,
    pub residual: Option<f64>,
    pub certificate: Option<Certificate>,
    /// `None` marks an uncertified value.
    pub certified: Option<bool>,
    pub oracle_gap: Option<f64>,
    pub flags: Vec<String>,
}

impl EigenRow {
    fn failed(&self) -> bool {
        self.certified == Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberReport {
    pub nu: f64,
    pub khat: LatticeVector,
    pub class: FiberClass,
    pub band: Option<Band>,
    pub rows: Vec<EigenRow>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: RunConfig,
    pub fibers: Vec<FiberReport>,
    pub pass: bool,
}

fn cf_params(cfg: &RunConfig) -> CFParams {
    CFParams { tol: cfg.tol, max_depth: cfg.depth, ..CFParams::default() }
}

fn eigen_row(nu: f64, khat: LatticeVector, kind: &str, r: &EigenResult) -> EigenRow {
    EigenRow {
        nu,
        khat,
        kind: kind.into(),
        lambda: r.lambda,
        residual: Some(r.residual),
        certificate: r.certificate.clone(),
        certified: r.certified(),
        oracle_gap: None,
        flags: Vec::new(),
    }
}

fn exact_row(nu: f64, khat: LatticeVector, kind: &str, lambda: f64) -> EigenRow {
    EigenRow {
        nu,
        khat,
        kind: kind.into(),
        lambda: Complex64::new(lambda, 0.0),
        residual: None,
        certificate: None,
        certified: None,
        oracle_gap: None,
        flags: vec!["exact".into()],
    }
}

/// Box searched for non-real eigenvalues: the half-disc's bounding rectangle,
/// upper half only for staggered fibers, kept off the band at ν = 0.
fn search_box(nu: f64, upper_only: bool) -> Region {
    let re_lo = if nu == 0.0 { 2e-3 } else { -nu };
    let im = if upper_only { (0.0, 0.25) } else { (-0.25, 0.25) };
    Region::Rectangle { re: (re_lo, 0.25 - nu), im }
}

/// Eigenvalues of one fiber found by the fiber's own method.
pub fn fiber_spectrum(fiber: &FiberSpec, params: &CFParams) -> Result<Vec<EigenRow>> {
    let (nu, khat) = (fiber.nu, fiber.khat);
    let class = fiber.classify();
    let mut rows = Vec::new();
    match class.tag {
        FiberTag::Diagonal => {
            for l in diagonal_eigenvalues(fiber, DIAGONAL_MODES)? {
                rows.push(exact_row(nu, khat, "diagonal", l));
            }
            return Ok(rows);
        }
        FiberTag::DecoupledAtZero => {
            if let Some(l) = decoupled_eigenvalue(fiber) {
                rows.push(exact_row(nu, khat, "decoupled", l));
            }
        }
        _ => {}
    }
    let form = MatchingForm::for_fiber(fiber)?;
    if let MatchingForm::ReducedHalfA0 { .. } = form {
        match find_real_eigenvalue(fiber, default_real_bracket(fiber), params) {
            Ok(r) => rows.push(eigen_row(nu, khat, "real", &r)),
            // no sign change: no positive real eigenvalue
            Err(Error::Bracketing { .. }) => {}
            Err(e) => return Err(e),
        }
        return Ok(rows);
    }
    let upper = matches!(form, MatchingForm::PlusMinusI { .. });
    let mut found: Vec<Complex64> = Vec::new();
    for (region, _) in isolate_eigenvalues(fiber, &search_box(nu, upper), form, params, ISOLATE_SIZE)? {
        let Region::Rectangle { re, im } = region else { continue };
        let seed = Complex64::new(0.5 * (re.0 + re.1), 0.5 * (im.0 + im.1));
        let r = match form {
            MatchingForm::Decoupled8Lambda { .. } | MatchingForm::GenericMch => {
                let mut r = newton_with_form(fiber, seed, form, params)?;
                r.certificate = find_complex_eigenvalue(fiber, r.lambda, params).ok().and_then(|c| c.certificate);
                r
            }
            _ => find_complex_eigenvalue(fiber, seed, params)?,
        };
        if found.iter().any(|l| (l - r.lambda).norm() <= 1e-8) {
            continue;
        }
        found.push(r.lambda);
        let kind = if r.lambda.im.abs() <= 1e-12 { "real" } else { "complex" };
        rows.push(eigen_row(nu, khat, kind, &r));
        if upper && r.lambda.im.abs() > 1e-12 {
            let mut c = r.clone();
            c.lambda = r.lambda.conj();
            rows.push(eigen_row(nu, khat, kind, &c));
        }
    }
    Ok(rows)
}

fn attach_oracle(fiber: &FiberSpec, n: usize, rows: &mut [EigenRow]) -> Result<()> {
    if n == 0 || rows.is_empty() {
        return Ok(());
    }
    let values = eigen_all(&fiber_matrix(fiber, n)?, 1e-9)?.values();
    for row in rows {
        let gap = values.iter().map(|v| (v - row.lambda).norm()).fold(f64::INFINITY, f64::min);
        row.oracle_gap = Some(gap);
        if gap > ORACLE_FLAG {
            row.flags.push("oracle-disagrees".into());
        }
    }
    Ok(())
}

fn fiber_report(cfg: &RunConfig, nu: f64) -> FiberReport {
    let khat = cfg.khat();
    let fiber = match cfg.example.fiber(cfg.alpha(), khat, nu) {
        Ok(f) => f,
        Err(e) => {
            let d = cfg.example.domain(cfg.alpha()).unwrap_or_else(|_| crate::lattice::DomainSpec::square());
            let class = crate::lattice::classify_fiber(khat, &cfg.example.state(), &d);
            return FiberReport { nu, khat, class, band: None, rows: vec![], error: Some(e.to_string()) };
        }
    };
    let class = fiber.classify();
    let band = if nu == 0.0 { continuous_band(&fiber).ok() } else { None };
    let result = fiber_spectrum(&fiber, &cf_params(cfg)).and_then(|mut rows| {
        if class.tag != FiberTag::Diagonal {
            attach_oracle(&fiber, cfg.oracle_n, &mut rows)?;
        }
        Ok(rows)
    });
    match result {
        Ok(rows) => FiberReport { nu, khat, class, band, rows, error: None },
        Err(e) => FiberReport { nu, khat, class, band, rows: vec![], error: Some(e.to_string()) },
    }
}

pub fn spectrum(cfg: &RunConfig) -> Result<SpectrumReport> {
    let nus = cfg.nus()?;
    let fibers: Vec<FiberReport> = nus.par_iter().map(|&nu| fiber_report(cfg, nu)).collect();
    let pass = fibers.iter().all(|f| f.error.is_none() && f.rows.iter().all(|r| !r.failed()));
    if let (Some(n), Some(dir)) = (cfg.dump_matrix, &cfg.out) {
        std::fs::create_dir_all(dir)?;
        for &nu in &nus {
            let f = cfg.example.fiber(cfg.alpha(), cfg.khat(), nu)?;
            let name = if nus.len() == 1 { "fiber.mtx".to_string() } else { format!("fiber_nu{nu}.mtx") };
            write_matrix_market(&fiber_matrix(&f, n)?, BufWriter::new(File::create(dir.join(name))?))?;
        }
    }
    Ok(SpectrumReport { schema_version: SCHEMA_VERSION, command: "spectrum", config: cfg.clone(), fibers, pass })
}

/// Shortest round-trip representation, exponent form outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_eigen_csv(path: &Path, fibers: &[FiberReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "nu", "khat1", "khat2", "kind", "lambda_re", "lambda_im", "residual", "cert_re_lo", "cert_re_hi", "cert_im_lo",
        "cert_im_hi", "certified", "oracle_gap", "flags",
    ])
    .map_err(csv_err)?;
    for f in fibers {
        for r in &f.rows {
            let c = r.certificate.as_ref();
            w.write_record([
                num(r.nu),
                r.khat.k1.to_string(),
                r.khat.k2.to_string(),
                r.kind.clone(),
                num(r.lambda.re),
                num(r.lambda.im),
                opt(r.residual),
                opt(c.map(|c| c.re.0)),
                opt(c.map(|c| c.re.1)),
                opt(c.map(|c| c.im.0)),
                opt(c.map(|c| c.im.1)),
                r.certified.map(|b| b.to_string()).unwrap_or_else(|| "uncertified".into()),
                opt(r.oracle_gap),
                r.flags.join(";"),
            ])
            .map_err(csv_err)?;
        }
        if let Some(e) = &f.error {
            w.write_record([
                num(f.nu),
                f.khat.k1.to_string(),
                f.khat.k2.to_string(),
                "error".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuStarReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub example: Example,
    pub alpha: Option<f64>,
    pub nu_star: f64,
    pub bracket_width: f64,
    pub residual: f64,
    pub certificate: Option<(f64, f64)>,
    pub certified: Option<bool>,
    pub pass: bool,
}

pub fn nu_star(cfg: &RunConfig) -> Result<NuStarReport> {
    let p = cf_params(cfg);
    let (r, alpha) = match cfg.example {
        Example::Example1 => {
            let a = cfg.alpha();
            if !(0.5..=0.95).contains(&a) {
                return Err(Error::Config(format!("the example1 threshold needs alpha in [0.5, 0.95], got {a}")));
            }
            (find_nu_star(a, &p)?, Some(a))
        }
        Example::Example3 => (find_nu_star_example3(&p)?, None),
        Example::Example2 => return Err(Error::Config("example2 has no critical-viscosity threshold".into())),
    };
    let certified = r.certified();
    Ok(NuStarReport {
        schema_version: SCHEMA_VERSION,
        command: "nu-star",
        example: cfg.example,
        alpha,
        nu_star: r.nu_star,
        bracket_width: r.bracket_width,
        residual: r.residual,
        certificate: r.certificate,
        certified,
        pass: certified != Some(false),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRowOut {
    pub nu: f64,
    pub lambda: Option<Complex64>,
    pub nu_inv_lambda: Option<f64>,
    pub delta_cs: Option<f64>,
    pub delta_s: Option<f64>,
    pub certified: Option<bool>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: RunConfig,
    pub rows: Vec<SweepRowOut>,
    /// `ν⁻¹ Re λ` strictly decreasing in ν, in grid order.
    pub monotone: Option<bool>,
    pub cs_over_sqrt_nu: Option<(f64, f64)>,
    pub s_over_nu: Option<(f64, f64)>,
    pub pass: bool,
}

pub fn sweep(cfg: &RunConfig) -> Result<SweepReport> {
    let nus = cfg.nus()?;
    if nus.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("viscosity grid must be strictly monotone".into()));
    }
    let fibers: Vec<FiberReport> = nus.par_iter().map(|&nu| fiber_report(&RunConfig { oracle_n: 0, ..cfg.clone() }, nu)).collect();
    let mut rows: Vec<SweepRowOut> = fibers
        .iter()
        .map(|f| {
            let top = f.rows.iter().max_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
            let mut flags: Vec<String> = f.error.iter().map(|e| format!("error: {e}")).collect();
            if let Some(t) = top {
                flags.extend(t.flags.iter().cloned());
            } else if f.error.is_none() {
                flags.push("no-eigenvalue".into());
            }
            SweepRowOut {
                nu: f.nu,
                lambda: top.map(|t| t.lambda),
                nu_inv_lambda: top.filter(|_| f.nu > 0.0).map(|t| t.lambda.re / f.nu),
                delta_cs: None,
                delta_s: None,
                certified: top.and_then(|t| t.certified),
                flags,
            }
        })
        .collect();
    let (mut cs, mut s) = (None, None);
    if cfg.manifold_sweep {
        let d = cfg.example.domain(cfg.alpha())?;
        match size_scaling_sweep(&cfg.example.state(), &d, cfg.lattice, cfg.ell, &nus) {
            Ok(t) => {
                for (row, sr) in rows.iter_mut().zip(&t.rows) {
                    row.delta_cs = Some(sr.delta_cs);
                    row.delta_s = Some(sr.delta_s);
                    if !sr.rates_in_window {
                        row.flags.push("rates-outside-window".into());
                    }
                }
                cs = Some(t.cs_over_sqrt_nu);
                s = Some(t.s_over_nu);
            }
            Err(e) => rows.iter_mut().for_each(|r| r.flags.push(format!("manifold error: {e}"))),
        }
    }
    let monotone = monotone_in_nu(&rows);
    let pass = rows.iter().all(|r| r.certified != Some(false) && !r.flags.iter().any(|f| f.contains("error")));
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        command: "sweep",
        config: cfg.clone(),
        rows,
        monotone,
        cs_over_sqrt_nu: cs,
        s_over_nu: s,
        pass,
    })
}

fn monotone_in_nu(rows: &[SweepRowOut]) -> Option<bool> {
    let mut pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.nu, r.nu_inv_lambda?))).collect();
    if pts.len() < 2 || pts.len() != rows.len() {
        return None;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(pts.windows(2).all(|w| w[1].1 < w[0].1))
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRowOut]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["nu", "lambda_re", "lambda_im", "nu_inv_lambda", "delta_cs", "delta_s", "certificates", "flags"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            num(r.nu),
            opt(r.lambda.map(|l| l.re)),
            opt(r.lambda.map(|l| l.im)),
            opt(r.nu_inv_lambda),
            opt(r.delta_cs),
            opt(r.delta_s),
            r.certified.map(|b| b.to_string()).unwrap_or_else(|| "uncertified".into()),
            r.flags.join(";"),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: RunConfig,
    pub dim: usize,
    pub m_u: usize,
    pub m_c: usize,
    pub m_s: usize,
    pub lambda_u1: Option<Complex64>,
    pub lambda_s1: Option<Complex64>,
    pub constants: SplitConstants,
    pub delta: f64,
    pub rate: f64,
    pub max_contraction: f64,
    pub invariance: Option<InvarianceReport>,
    pub pass: bool,
    #[serde(skip)]
    pub chart: Option<ManifoldChart>,
}

/// Contraction factor accepted as a clean fixed point.
const CONTRACTION_LIMIT: f64 = 0.6;
const INVARIANCE_LIMIT: f64 = 1e-6;

pub fn manifold(cfg: &RunConfig) -> Result<ManifoldReport> {
    let nus = cfg.nus()?;
    let [nu] = nus.as_slice() else {
        return Err(Error::Config("manifold takes a single --nu".into()));
    };
    let d = cfg.example.domain(cfg.alpha())?;
    let sys = build_galerkin(&cfg.example.state(), &d, *nu, cfg.lattice, cfg.ell)?;
    let split = spectral_split(&sys, None)?;
    let cp = ChartParams::new(cfg.flavor);
    let gp = cp.gamma_params(&split)?;
    let n = cfg.samples.max(1);
    let mut bases: Vec<Array1<f64>> = Vec::new();
    for i in 0..n {
        let dir = base_direction(&sys, &split, cfg.flavor, cfg.seed + i as u64)?;
        bases.push(dir * (gp.delta * 0.5 * (i + 1) as f64 / n as f64));
    }
    let chart = manifold_graph(&sys, &split, &bases, &cp)?;
    let max_contraction = chart.samples.iter().map(|s| s.contraction).fold(0.0, f64::max);
    let probe = base_direction(&sys, &split, cfg.flavor, cfg.seed)? * (gp.delta / 4.0);
    let invariance = invariance_residual(&chart, &sys, &split, &probe, 1.0).ok();
    let inv_ok = invariance.as_ref().is_some_and(|r| r.residual <= INVARIANCE_LIMIT);
    Ok(ManifoldReport {
        schema_version: SCHEMA_VERSION,
        command: "manifold",
        config: cfg.clone(),
        dim: sys.dim(),
        m_u: split.m_u,
        m_c: split.m_c,
        m_s: split.m_s,
        lambda_u1: split.lambda_u1,
        lambda_s1: split.lambda_s1,
        constants: split.constants,
        delta: gp.delta,
        rate: gp.rate,
        max_contraction,
        invariance,
        pass: max_contraction <= CONTRACTION_LIMIT && inv_ok,
        chart: Some(chart),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub outcomes: Vec<Outcome>,
    pub failing: Vec<String>,
    pub pass: bool,
}

pub fn verify(only: Option<&str>) -> Result<VerifyReport> {
    let outcomes = run_all(only)?;
    let failing: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id.clone()).collect();
    Ok(VerifyReport { schema_version: SCHEMA_VERSION, command: "verify", pass: failing.is_empty(), outcomes, failing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(example: Example, nu: f64) -> RunConfig {
        RunConfig { example, nu: Some(nu), oracle_n: 60, ..RunConfig::default() }
    }

    #[test]
    fn example2_decoupled_row() {
        let c = RunConfig { khat: Some(LatticeVector::new(-1, 1)), ..cfg(Example::Example2, 0.1) };
        let r = spectrum(&c).unwrap();
        let rows = &r.fibers[0].rows;
        assert!(rows.iter().any(|r| r.kind == "decoupled" && r.lambda.re == -0.2 && r.lambda.im == 0.0), "{rows:?}");
    }

    #[test]
    fn example1_real_row_is_certified() {
        let r = spectrum(&cfg(Example::Example1, 0.05)).unwrap();
        let rows = &r.fibers[0].rows;
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].certified, Some(true));
        assert!(rows[0].oracle_gap.unwrap() < 1e-6);
        assert!(r.pass);
    }

    #[test]
    fn example2_pair_is_found_by_isolation() {
        let r = spectrum(&cfg(Example::Example2, 0.05)).unwrap();
        let rows = &r.fibers[0].rows;
        assert!(rows.iter().any(|r| r.kind == "complex" && r.certified == Some(true)), "{rows:?}");
        assert!(rows.iter().any(|r| r.lambda.im < 0.0));
    }

    #[test]
    fn nu_star_rejects_example2() {
        assert!(matches!(nu_star(&cfg(Example::Example2, 0.1)), Err(Error::Config(_))));
    }

    #[test]
    fn monotone_flag() {
        let row = |nu: f64, v: f64| SweepRowOut {
            nu,
            lambda: None,
            nu_inv_lambda: Some(v),
            delta_cs: None,
            delta_s: None,
            certified: None,
            flags: vec![],
        };
        assert_eq!(monotone_in_nu(&[row(0.1, 1.0), row(0.01, 5.0)]), Some(true));
        assert_eq!(monotone_in_nu(&[row(0.1, 5.0), row(0.01, 1.0)]), Some(false));
        assert_eq!(monotone_in_nu(&[row(0.1, 1.0)]), None);
    }
}
