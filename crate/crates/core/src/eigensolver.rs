//! Eigenvalues as zeros of matching functions: monotone bisection on the real
//! axis, critical-viscosity solves, argument-principle counts, Newton
//! refinement and ν → 0 sweeps.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contfrac::{eval_tail, matching_fn, CFParams, MatchingForm, BAND_GUARD};
use crate::error::{Error, Result};
use crate::lattice::{fiber_coefficient, FiberSpec, FiberTag};
use crate::presets::{
    complex_pair_certificate, example1_nu_star_bounds, example3_thresholds, real_eigenvalue_certificate,
    require_example1_alpha, Certificate, Example,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bisection,
    Newton,
    Winding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: Complex64,
    /// `|F(λ)|` at the returned point.
    pub residual: f64,
    pub method: Method,
    pub certificate: Option<Certificate>,
    /// Final bracket width for bisection results.
    pub bracket_width: Option<f64>,
    pub iterations: usize,
}

impl EigenResult {
    /// `None` when no analytic bound is known.
    pub fn certified(&self) -> Option<bool> {
        self.certificate.as_ref().map(|c| {
            let l = if self.lambda.im < 0.0 { self.lambda.conj() } else { self.lambda };
            c.contains(l)
        })
    }
}

/// Bisection stops when the bracket is this narrow.
pub const BISECTION_WIDTH: f64 = 1e-12;
/// Newton stops when `|F| ≤` this.
pub const NEWTON_TOL: f64 = 1e-11;
pub const NEWTON_MAX_ITER: usize = 100;

fn reduced_shift(fiber: &FiberSpec) -> Result<i64> {
    match MatchingForm::for_fiber(fiber)? {
        MatchingForm::ReducedHalfA0 { shift } => Ok(shift),
        f => Err(Error::Precondition(format!("real-axis search needs an even-symmetric fiber, got {f:?}"))),
    }
}

/// Monotone real gauge `h(λ) = 1/(2aρ_s) + 1/((λ + ν|k_s|²)·T_{s+1}(λ))`.
///
/// Its zeros are the zeros of the reduced matching function; it equals
/// `−F(λ)/(λ + ν|k_s|²)` and is strictly decreasing on the positive axis for the
/// shear fibers.
pub fn real_gauge(fiber: &FiberSpec, lambda: f64, params: &CFParams) -> Result<f64> {
    let shift = reduced_shift(fiber)?;
    if fiber.nu == 0.0 && lambda.abs() < BAND_GUARD {
        return Err(Error::NearBand { distance: lambda.abs() });
    }
    let lam = Complex64::new(lambda, 0.0);
    let t = eval_tail(|n| fiber_coefficient(fiber, lam, n), shift + 1, 1, params)?.value.re;
    let d = lambda + fiber.nu * fiber.mode_norm2(shift);
    let c = 0.5 / (fiber.coupling() * fiber.rho(shift)?);
    Ok(c + 1.0 / (d * t))
}

fn bisect<F>(mut g: F, mut lo: f64, mut hi: f64, width: f64) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut glo = g(lo)?;
    let ghi = g(hi)?;
    if glo == 0.0 {
        return Ok((lo, 0.0, 0));
    }
    if ghi == 0.0 {
        return Ok((hi, 0.0, 0));
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::Bracketing { lo, hi });
    }
    let mut it = 0;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        it += 1;
        if gm == 0.0 {
            return Ok((mid, 0.0, it));
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), hi - lo, it))
}

/// Bracket used when the caller has none: `[0, bound + 0.1]` with a certificate,
/// `[0, 1]` without. At ν = 0 the lower end moves off the band.
pub fn default_real_bracket(fiber: &FiberSpec) -> (f64, f64) {
    let lo = if fiber.nu == 0.0 { 2.0 * BAND_GUARD } else { 0.0 };
    match real_eigenvalue_certificate(fiber) {
        Some(c) => (lo, c.re.1 + 0.1),
        None => (lo, 1.0),
    }
}

/// The unique positive real eigenvalue inside `bracket`, by bisection on the
/// monotone gauge down to a bracket of width `1e-12`.
pub fn find_real_eigenvalue(fiber: &FiberSpec, bracket: (f64, f64), params: &CFParams) -> Result<EigenResult> {
    let (lam, width, iterations) = bisect(|l| real_gauge(fiber, l, params), bracket.0, bracket.1, BISECTION_WIDTH)?;
    let form = MatchingForm::for_fiber(fiber)?;
    let residual = matching_fn(fiber, Complex64::new(lam, 0.0), form, params)?.norm();
    Ok(EigenResult {
        lambda: Complex64::new(lam, 0.0),
        residual,
        method: Method::Bisection,
        certificate: real_eigenvalue_certificate(fiber),
        bracket_width: Some(width),
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub nu_star: f64,
    pub bracket_width: f64,
    /// `|F(ν_*, 0)|`.
    pub residual: f64,
    pub certificate: Option<(f64, f64)>,
    pub iterations: usize,
}

impl ThresholdResult {
    pub fn certified(&self) -> Option<bool> {
        self.certificate.map(|(lo, hi)| lo < self.nu_star && self.nu_star < hi)
    }
}

/// Search interval for critical viscosities.
pub const NU_STAR_SEARCH: (f64, f64) = (1e-3, 10.0);

/// Viscosity at which the real eigenvalue of an even-symmetric fiber crosses
/// zero, by bisection on `ν ↦ h(0; ν)`.
pub fn find_nu_star_for(fiber: &FiberSpec, certificate: Option<(f64, f64)>, params: &CFParams) -> Result<ThresholdResult> {
    let g = |nu: f64| real_gauge(&fiber.with_nu(nu)?, 0.0, params);
    let (nu, width, iterations) = bisect(g, NU_STAR_SEARCH.0, NU_STAR_SEARCH.1, BISECTION_WIDTH)?;
    let at = fiber.with_nu(nu)?;
    let residual = matching_fn(&at, Complex64::new(0.0, 0.0), MatchingForm::for_fiber(&at)?, params)?.norm();
    Ok(ThresholdResult { nu_star: nu, bracket_width: width, residual, certificate, iterations })
}

/// Critical viscosity of the shear on the `α`-domain (`α ∈ [0.5, 0.95]`).
pub fn find_nu_star(alpha: f64, params: &CFParams) -> Result<ThresholdResult> {
    require_example1_alpha(alpha)?;
    let fiber = Example::Example1.fiber(alpha, Example::Example1.default_khat(), 0.1)?;
    find_nu_star_for(&fiber, example1_nu_star_bounds(alpha), params)
}

/// Critical viscosity of Example 3 on the fiber through (1,0).
pub fn find_nu_star_example3(params: &CFParams) -> Result<ThresholdResult> {
    let fiber = Example::Example3.fiber(1.0, Example::Example3.default_khat(), 0.1)?;
    find_nu_star_for(&fiber, Some(example3_thresholds().nu_star), params)
}

/// Closed contour in the λ-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Rectangle { re: (f64, f64), im: (f64, f64) },
    /// `{center + r e^{iθ} : r ≤ radius, θ ∈ [θ0, θ1]}`.
    Sector { center: Complex64, radius: f64, theta: (f64, f64) },
}

#[derive(Debug, Clone, Copy)]
enum Edge {
    Line(Complex64, Complex64),
    Arc { center: Complex64, radius: f64, t0: f64, t1: f64 },
}

impl Edge {
    fn at(&self, s: f64) -> Complex64 {
        match *self {
            Edge::Line(a, b) => a + (b - a) * s,
            Edge::Arc { center, radius, t0, t1 } => center + Complex64::from_polar(radius, t0 + (t1 - t0) * s),
        }
    }
}

impl Region {
    /// `{Re λ ≥ −ν, |λ + ν| ≤ 1/4}`.
    pub fn half_disc(nu: f64) -> Self {
        Region::Sector { center: Complex64::new(-nu, 0.0), radius: 0.25, theta: (-PI / 2.0, PI / 2.0) }
    }

    /// Upper half of [`Region::half_disc`].
    pub fn upper_half_disc(nu: f64) -> Self {
        Region::Sector { center: Complex64::new(-nu, 0.0), radius: 0.25, theta: (0.0, PI / 2.0) }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Rectangle { re, im } => re.0 < re.1 && im.0 < im.1,
            Region::Sector { radius, theta, .. } => radius > 0.0 && theta.0 < theta.1 && theta.1 - theta.0 <= 2.0 * PI,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("empty region {self:?}")))
        }
    }

    fn edges(&self) -> Vec<Edge> {
        match *self {
            Region::Rectangle { re, im } => {
                let c = [
                    Complex64::new(re.0, im.0),
                    Complex64::new(re.1, im.0),
                    Complex64::new(re.1, im.1),
                    Complex64::new(re.0, im.1),
                ];
                (0..4).map(|i| Edge::Line(c[i], c[(i + 1) % 4])).collect()
            }
            Region::Sector { center, radius, theta } => {
                let arc = Edge::Arc { center, radius, t0: theta.0, t1: theta.1 };
                if theta.1 - theta.0 >= 2.0 * PI - 1e-15 {
                    vec![arc]
                } else {
                    vec![
                        Edge::Line(center, center + Complex64::from_polar(radius, theta.0)),
                        arc,
                        Edge::Line(center + Complex64::from_polar(radius, theta.1), center),
                    ]
                }
            }
        }
    }

    /// Four sub-rectangles, split at a non-central point so that symmetric
    /// eigenvalues do not land on the cuts.
    pub fn split_2x2(&self) -> Option<[Region; 4]> {
        match *self {
            Region::Rectangle { re, im } => {
                let xm = re.0 + 0.4771 * (re.1 - re.0);
                let ym = im.0 + 0.5229 * (im.1 - im.0);
                Some([
                    Region::Rectangle { re: (re.0, xm), im: (im.0, ym) },
                    Region::Rectangle { re: (xm, re.1), im: (im.0, ym) },
                    Region::Rectangle { re: (re.0, xm), im: (ym, im.1) },
                    Region::Rectangle { re: (xm, re.1), im: (ym, im.1) },
                ])
            }
            Region::Sector { .. } => None,
        }
    }
}

const BASE_SAMPLES: usize = 64;
const MAX_BASE_SAMPLES: usize = 4096;
const MAX_BISECTIONS: u32 = 24;

fn arg_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

/// Accumulated argument of `f` along `[s0, s1]` of an edge, bisecting
/// sub-intervals whose argument jump exceeds π/2.
fn edge_arg<F>(f: &F, edge: &Edge, s0: f64, v0: Complex64, s1: f64, v1: Complex64, level: u32) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let d = arg_step(v0, v1);
    if d.abs() <= PI / 2.0 {
        return Ok(d);
    }
    if level >= MAX_BISECTIONS {
        if d.abs() > PI * (1.0 - 1e-9) {
            return Err(Error::Resolution { jump: d.abs() });
        }
        return Ok(d);
    }
    let sm = 0.5 * (s0 + s1);
    let vm = nonzero(f(edge.at(sm))?)?;
    Ok(edge_arg(f, edge, s0, v0, sm, vm, level + 1)? + edge_arg(f, edge, sm, vm, s1, v1, level + 1)?)
}

fn nonzero(v: Complex64) -> Result<Complex64> {
    if v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite() {
        Err(Error::Resolution { jump: PI })
    } else {
        Ok(v)
    }
}

/// Winding number of `f` around `region`'s boundary.
pub fn winding_number<F>(f: F, region: &Region) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    region.validate()?;
    let edges = region.edges();
    let mut samples = BASE_SAMPLES;
    loop {
        let mut total = 0.0;
        for e in &edges {
            let mut prev_s = 0.0;
            let mut prev_v = nonzero(f(e.at(0.0))?)?;
            for i in 1..=samples {
                let s = i as f64 / samples as f64;
                let v = nonzero(f(e.at(s))?)?;
                total += edge_arg(&f, e, prev_s, prev_v, s, v, 0)?;
                prev_s = s;
                prev_v = v;
            }
        }
        let n = (total / (2.0 * PI)).round();
        if (total - 2.0 * PI * n).abs() <= 0.1 {
            return Ok(n as i64);
        }
        if samples >= MAX_BASE_SAMPLES {
            return Err(Error::Resolution { jump: (total - 2.0 * PI * n).abs() });
        }
        samples *= 2;
    }
}

/// Zeros minus poles of the given matching form inside `region`.
pub fn count_with_form(fiber: &FiberSpec, region: &Region, form: MatchingForm, params: &CFParams) -> Result<i64> {
    winding_number(|l| matching_fn(fiber, l, form, params), region)
}

/// Eigenvalue count inside `region` using the fiber's own matching form.
///
/// For staggered fibers the `sign = +1` branch is used, which sees the upper
/// half plane member of each conjugate pair only.
pub fn count_eigenvalues_in_region(fiber: &FiberSpec, region: &Region, params: &CFParams) -> Result<usize> {
    let n = count_with_form(fiber, region, MatchingForm::for_fiber(fiber)?, params)?;
    usize::try_from(n).map_err(|_| Error::Precondition(format!("net winding {n} is negative: the form has poles inside")))
}

/// Minimal boxes with a nonzero count. A count above 1 is a multiplicity.
pub fn isolate_eigenvalues(
    fiber: &FiberSpec,
    region: &Region,
    form: MatchingForm,
    params: &CFParams,
    min_size: f64,
) -> Result<Vec<(Region, i64)>> {
    let n = count_with_form(fiber, region, form, params)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let small = match *region {
        Region::Rectangle { re, im } => (re.1 - re.0).max(im.1 - im.0) <= min_size,
        Region::Sector { .. } => true,
    };
    if small {
        return Ok(vec![(*region, n)]);
    }
    let mut out = Vec::new();
    for sub in region.split_2x2().expect("rectangle") {
        out.extend(isolate_eigenvalues(fiber, &sub, form, params, min_size)?);
    }
    Ok(out)
}

/// Newton on `F(λ)` with a central-difference derivative.
pub fn newton_with_form(fiber: &FiberSpec, seed: Complex64, form: MatchingForm, params: &CFParams) -> Result<EigenResult> {
    let f = |l: Complex64| matching_fn(fiber, l, form, params);
    let mut lam = seed;
    let mut val = f(lam)?;
    for it in 0..NEWTON_MAX_ITER {
        if val.norm() <= NEWTON_TOL {
            return Ok(EigenResult {
                lambda: lam,
                residual: val.norm(),
                method: Method::Newton,
                certificate: None,
                bracket_width: None,
                iterations: it,
            });
        }
        let h = 1e-7 * lam.norm().max(1.0);
        let d = (f(lam + h)? - f(lam - h)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.re.is_finite() {
            break;
        }
        let step = val / d;
        // damped step: accept the first trial that does not increase |F|
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..12 {
            let cand = lam - step * t;
            if let Ok(v) = f(cand) {
                if v.norm() < val.norm() {
                    next = Some((cand, v));
                    break;
                }
            }
            t *= 0.5;
        }
        match next {
            Some((l, v)) => {
                lam = l;
                val = v;
            }
            None => break,
        }
    }
    Err(Error::SeedDivergence { seed_re: seed.re, seed_im: seed.im, iterations: NEWTON_MAX_ITER })
}

/// Complex eigenvalue near `seed` using the fiber's matching form.
///
/// Staggered fibers use the branch whose zeros lie in the seed's half plane.
pub fn find_complex_eigenvalue(fiber: &FiberSpec, seed: Complex64, params: &CFParams) -> Result<EigenResult> {
    let form = match MatchingForm::for_fiber(fiber)? {
        MatchingForm::PlusMinusI { shift, .. } => {
            MatchingForm::PlusMinusI { sign: if seed.im >= 0.0 { 1 } else { -1 }, shift }
        }
        f => f,
    };
    let mut r = newton_with_form(fiber, seed, form, params)?;
    r.certificate = if r.lambda.im.abs() > 1e-12 {
        complex_pair_certificate(fiber)
    } else {
        real_eigenvalue_certificate(fiber)
    };
    Ok(r)
}

/// `−ν|k_d|²`, the eigenvalue carried by the resonant mode of a split fiber.
pub fn decoupled_eigenvalue(fiber: &FiberSpec) -> Option<f64> {
    let class = fiber.classify();
    if class.tag != FiberTag::DecoupledAtZero {
        return None;
    }
    class.resonant_at.map(|d| -fiber.nu * fiber.mode_norm2(d))
}

/// `−ν|k̂+np|²` for `n ∈ [−n_max, n_max]`, the spectrum of a diagonal fiber.
pub fn diagonal_eigenvalues(fiber: &FiberSpec, n_max: i64) -> Result<Vec<f64>> {
    if fiber.classify().tag != FiberTag::Diagonal {
        return Err(Error::Precondition("fiber is not diagonal".into()));
    }
    Ok((-n_max..=n_max).map(|n| -fiber.nu * fiber.mode_norm2(n)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu: f64,
    pub lambda: Option<f64>,
    pub nu_inv_lambda: Option<f64>,
    pub certificate: Option<Certificate>,
    pub certified: Option<bool>,
    /// `|λ(ν) − λ₀|`.
    pub gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub lambda0: Option<f64>,
    pub lambda0_certificate: Option<Certificate>,
    pub rows: Vec<SweepRow>,
    /// `ν⁻¹λ(ν)` strictly decreasing in ν with margin `1e-10`; `None` for fewer than two rows.
    pub monotone: Option<bool>,
    /// `|λ(ν) − λ₀|` decreasing along the grid.
    pub gap_decreasing: Option<bool>,
}

/// Margin required between adjacent `ν⁻¹λ` values.
pub const MONOTONE_MARGIN: f64 = 1e-10;

/// λ(ν) along a strictly decreasing viscosity grid, with the ν = 0 limit.
pub fn zero_visc_limit_sweep(fiber: &FiberSpec, nu_grid: &[f64], params: &CFParams) -> Result<SweepTable> {
    if nu_grid.is_empty() {
        return Err(Error::InvalidParameter("empty viscosity grid".into()));
    }
    if nu_grid.iter().any(|&v| !(v > 0.0 && v.is_finite())) || nu_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("viscosity grid must be positive and strictly decreasing".into()));
    }
    let f0 = fiber.with_nu(0.0)?;
    let (lambda0, lambda0_certificate) = match find_real_eigenvalue(&f0, default_real_bracket(&f0), params) {
        Ok(r) => (Some(r.lambda.re), r.certificate),
        Err(_) => (None, real_eigenvalue_certificate(&f0)),
    };
    let rows: Vec<SweepRow> = nu_grid
        .par_iter()
        .map(|&nu| {
            let f = match fiber.with_nu(nu) {
                Ok(f) => f,
                Err(e) => return error_row(nu, e),
            };
            match find_real_eigenvalue(&f, default_real_bracket(&f), params) {
                Ok(r) => SweepRow {
                    nu,
                    lambda: Some(r.lambda.re),
                    nu_inv_lambda: Some(r.lambda.re / nu),
                    certified: r.certified(),
                    certificate: r.certificate,
                    gap: lambda0.map(|l0| (r.lambda.re - l0).abs()),
                    error: None,
                },
                Err(e) => error_row(nu, e),
            }
        })
        .collect();
    let (monotone, gap_decreasing) = if rows.len() < 2 {
        (None, None)
    } else {
        let mono = rows.windows(2).all(|w| match (w[0].nu_inv_lambda, w[1].nu_inv_lambda) {
            (Some(a), Some(b)) => b - a >= MONOTONE_MARGIN,
            _ => false,
        });
        let gaps = rows.windows(2).all(|w| match (w[0].gap, w[1].gap) {
            (Some(a), Some(b)) => b < a,
            _ => false,
        });
        (Some(mono), Some(gaps))
    };
    Ok(SweepTable { lambda0, lambda0_certificate, rows, monotone, gap_decreasing })
}

fn error_row(nu: f64, e: Error) -> SweepRow {
    SweepRow {
        nu,
        lambda: None,
        nu_inv_lambda: None,
        certificate: None,
        certified: None,
        gap: None,
        error: Some(e.to_string()),
    }
}
