//! Desk-scale acceptance suite A1–A13, shared by `vortex-spectra verify` and
//! the `acceptance` test target.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contfrac::{CFParams, MatchingForm};
use crate::eigensolver::{
    count_eigenvalues_in_region, default_real_bracket, find_complex_eigenvalue, find_nu_star, find_nu_star_example3,
    find_real_eigenvalue, newton_with_form, zero_visc_limit_sweep, Region,
};
use crate::error::{Error, Result};
use crate::lattice::{fiber_coefficient, LatticeVector};
use crate::manifold::{
    base_direction, build_galerkin, delta_from_constants, gamma_map_iterate, halving_ratios, invariance_residual,
    manifold_graph, size_scaling_sweep, spectral_split, ChartParams, Flavor,
};
use crate::oracle::{band_convergence, eigen_all, fiber_matrix, full_matrix, parabola_check, quadruplet_check};
use crate::presets::{example1_lambda_bounds, example2_pair_bounds, example2_seed, Example};

pub const IDS: [&str; 13] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10", "A11", "A12", "A13"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    pub runtime_limit: Option<f64>,
}

impl Outcome {
    /// `A1 PASS  title  (0.42 s)  detail`
    pub fn line(&self) -> String {
        format!(
            "{:<4} {}  {}  ({:.2} s)  {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.detail
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

fn spec(id: &str) -> Option<(&'static str, Option<f64>, Check)> {
    Some(match id {
        "A1" => ("Example 1 eigenvalue bracket and oracle agreement", Some(10.0), a1 as Check),
        "A2" => ("critical viscosity brackets", Some(10.0), a2),
        "A3" => ("monotonicity of lambda/nu", None, a3),
        "A4" => ("zero-viscosity limit", Some(30.0), a4),
        "A5" => ("Example 2 Rouche count and pair window", Some(30.0), a5),
        "A6" => ("decoupled eigenvalue -2nu", None, a6),
        "A7" => ("Example 3 brackets", Some(20.0), a7),
        "A8" => ("parabolic region", Some(60.0), a8),
        "A9" => ("band convergence", None, a9),
        "A10" => ("quadruplet symmetry at nu = 0", None, a10),
        "A11" => ("manifold contraction, invariance, tangency", None, a11),
        "A12" => ("manifold size scaling", Some(300.0), a12),
        "A13" => ("cross-form consistency", None, a13),
        _ => return None,
    })
}

/// Runs one criterion; a numerical error counts as a failure.
pub fn run_criterion(id: &str) -> Result<Outcome> {
    let (title, limit, check) =
        spec(id).ok_or_else(|| Error::InvalidParameter(format!("unknown criterion {id}; expected one of A1..A13")))?;
    let t0 = Instant::now();
    let (mut pass, mut detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let seconds = t0.elapsed().as_secs_f64();
    if let Some(l) = limit {
        if seconds >= l {
            pass = false;
            detail.push_str(&format!("; runtime {seconds:.1} s over the {l} s budget"));
        }
    }
    Ok(Outcome { id: id.into(), title: title.into(), pass, detail, seconds, runtime_limit: limit })
}

/// Runs every criterion, or only `only`.
pub fn run_all(only: Option<&str>) -> Result<Vec<Outcome>> {
    match only {
        Some(id) => Ok(vec![run_criterion(id)?]),
        None => IDS.iter().map(|id| run_criterion(id)).collect(),
    }
}

fn nearest_gap(values: &[Complex64], target: Complex64) -> f64 {
    values.iter().map(|v| (v - target).norm()).fold(f64::INFINITY, f64::min)
}

fn a1() -> Result<(bool, String)> {
    let p = CFParams::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for nu in [0.1, 0.05, 0.01] {
        let f = Example::Example1.fiber(0.7, Example::Example1.default_khat(), nu)?;
        let r = find_real_eigenvalue(&f, default_real_bracket(&f), &p)?;
        let cert = example1_lambda_bounds(0.7, nu).ok_or_else(|| Error::Precondition("no bounds".into()))?;
        let inside = cert.contains(r.lambda);
        let rep = eigen_all(&fiber_matrix(&f, 200)?, 1e-9)?;
        let gap = nearest_gap(&rep.values(), r.lambda);
        pass &= inside && gap <= 1e-7;
        parts.push(format!("nu={nu}: lambda={:.10} inside={inside} oracle gap={gap:.1e}", r.lambda.re));
    }
    Ok((pass, parts.join("; ")))
}

fn a2() -> Result<(bool, String)> {
    let p = CFParams::default();
    let r5 = find_nu_star(0.5, &p)?;
    let r95 = find_nu_star(0.95, &p)?;
    let ok5 = 0.244029 < r5.nu_star && r5.nu_star < 0.244949;
    let ok95 = 0.0329 < r95.nu_star && r95.nu_star < 0.058;
    let width = r5.bracket_width.max(r95.bracket_width);
    Ok((
        ok5 && ok95 && width <= 1e-9,
        format!("nu*(0.5)={:.9} nu*(0.95)={:.9} width={width:.1e}", r5.nu_star, r95.nu_star),
    ))
}

fn a3() -> Result<(bool, String)> {
    let p = CFParams::default();
    let ns = find_nu_star(0.7, &p)?.nu_star;
    let grid: Vec<f64> = [0.2, 0.1, 0.05, 0.02, 0.01, 0.005].iter().map(|c| c * ns).collect();
    let f = Example::Example1.fiber(0.7, Example::Example1.default_khat(), grid[0])?;
    let t = zero_visc_limit_sweep(&f, &grid, &p)?;
    let vals: Vec<String> = t.rows.iter().map(|r| format!("{:.6}", r.nu_inv_lambda.unwrap_or(f64::NAN))).collect();
    Ok((t.monotone == Some(true), format!("nu*(0.7)={ns:.6}; lambda/nu = [{}]", vals.join(", "))))
}

fn a4() -> Result<(bool, String)> {
    let p = CFParams::default();
    let grid = [1e-1, 1e-2, 1e-3, 1e-4];
    let f = Example::Example1.fiber(0.7, Example::Example1.default_khat(), grid[0])?;
    let t = zero_visc_limit_sweep(&f, &grid, &p)?;
    let l0 = t.lambda0.unwrap_or(f64::NAN);
    let last = t.rows.last().and_then(|r| r.gap).unwrap_or(f64::NAN);
    let ok = t.gap_decreasing == Some(true) && last < 1e-3 && 0.1146 < l0 && l0 < 0.1448;
    Ok((ok, format!("lambda0={l0:.10}; gap at 1e-4 = {last:.2e}; decreasing={:?}", t.gap_decreasing)))
}

fn a5() -> Result<(bool, String)> {
    let p = CFParams::default();
    let nu = 0.05;
    let f = Example::Example2.fiber(1.0, Example::Example2.default_khat(), nu)?;
    let count = count_eigenvalues_in_region(&f, &Region::upper_half_disc(nu), &p)?;
    let r = find_complex_eigenvalue(&f, example2_seed(nu), &p)?;
    let inside = example2_pair_bounds(nu).contains(r.lambda);
    Ok((count == 1 && inside, format!("count={count}; lambda={:.10}{:+.10}i inside={inside}", r.lambda.re, r.lambda.im)))
}

fn a6() -> Result<(bool, String)> {
    let nu = 0.1;
    let f = Example::Example2.fiber(1.0, LatticeVector::new(-1, 1), nu)?;
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for n in [1, 5, 50, 200] {
        let op = fiber_matrix(&f, n)?;
        let scale = op.matrix.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        let g = nearest_gap(&eigen_all(&op, 1e-10)?.values(), Complex64::new(-2.0 * nu, 0.0));
        pass &= g <= 1e-13 * scale;
        worst = worst.max(g / scale);
    }
    Ok((pass, format!("max relative distance to -2nu over N in {{1,5,50,200}}: {worst:.1e}")))
}

fn a7() -> Result<(bool, String)> {
    let p = CFParams::default();
    let ns = find_nu_star_example3(&p)?.nu_star;
    let f0 = Example::Example3.fiber(1.0, Example::Example3.default_khat(), 0.0)?;
    let l0 = find_real_eigenvalue(&f0, default_real_bracket(&f0), &p)?.lambda.re;
    let ok_ns = 0.051499 < ns && ns < 0.055133;
    let ok_l0 = 0.115157 < l0 && l0 < 0.123272;
    Ok((ok_ns && ok_l0, format!("nu*={ns:.9} in (0.051499, 0.055133): {ok_ns}; lambda0={l0:.9} in (0.115157, 0.123272): {ok_l0}")))
}

fn a8() -> Result<(bool, String)> {
    let st = Example::Example1.state();
    let d = Example::Example1.domain(0.7)?;
    let rep = eigen_all(&full_matrix(&st, &d, 0.1, 12, 3)?, 1e-9)?;
    let fit = parabola_check(&rep)?;
    Ok((fit.pass && fit.a > 0.0 && fit.b > 0.0, format!("dimension {}; a={:.6} b={:.6}", rep.dimension, fit.a, fit.b)))
}

fn a9() -> Result<(bool, String)> {
    let f = Example::Example1.fiber(0.7, LatticeVector::new(-2, 0), 0.0)?;
    let t = band_convergence(&f, &[50, 100, 200, 400])?;
    let d: Vec<String> = t.rows.iter().map(|r| format!("{:.3e}", r.1)).collect();
    Ok((t.non_increasing == Some(true), format!("band ±{:.3}i; distances [{}]", t.band.hi, d.join(", "))))
}

fn a10() -> Result<(bool, String)> {
    let f = Example::Example2.fiber(1.0, Example::Example2.default_khat(), 0.0)?;
    let rep = eigen_all(&fiber_matrix(&f, 300)?, 1e-9)?;
    let ok = quadruplet_check(&rep, 1e-6)?;
    Ok((ok, format!("{} eigenvalues at N=300", rep.dimension)))
}

fn a11() -> Result<(bool, String)> {
    let d = Example::Example1.domain(0.7)?;
    let sys = build_galerkin(&Example::Example1.state(), &d, 0.05, 8, 3)?;
    let split = spectral_split(&sys, None)?;
    let delta = delta_from_constants(&split, split.mu_u / 2.0)?;
    let cp = ChartParams::new(Flavor::CenterStable);
    let gp = cp.gamma_params(&split)?;
    let dir = base_direction(&sys, &split, Flavor::CenterStable, 11)?;
    let fp = gamma_map_iterate(&sys, &split, &(&dir * (delta / 2.0)), &gp)?;
    let chart = manifold_graph(&sys, &split, &[&dir * (delta / 2.0)], &cp)?;
    let inv = invariance_residual(&chart, &sys, &split, &(&dir * (delta / 4.0)), 1.0)?;
    let r = halving_ratios(&sys, &split, &(&dir * delta), &[1.0, 0.5, 0.25, 0.125], &gp)?;
    let plateau = (r[2] - r[3]).abs() <= 0.2 * r[2].max(r[3]);
    let ok = fp.contraction <= 0.6 && inv.residual <= 1e-6 && plateau;
    Ok((
        ok,
        format!(
            "delta={delta:.3e}; contraction={:.2e}; invariance residual={:.2e}; ratios {:.4e}/{:.4e}",
            fp.contraction, inv.residual, r[2], r[3]
        ),
    ))
}

fn a12() -> Result<(bool, String)> {
    let d = Example::Example1.domain(0.7)?;
    let t = size_scaling_sweep(&Example::Example1.state(), &d, 8, 3, &[1e-1, 1e-2, 1e-3, 1e-4])?;
    let band = |(lo, hi): (f64, f64)| hi / lo;
    Ok((
        t.within_band(4.0),
        format!(
            "delta_cs/sqrt(nu) in [{:.3e}, {:.3e}] (factor {:.2}); delta_s/nu in [{:.3e}, {:.3e}] (factor {:.2})",
            t.cs_over_sqrt_nu.0,
            t.cs_over_sqrt_nu.1,
            band(t.cs_over_sqrt_nu),
            t.s_over_nu.0,
            t.s_over_nu.1,
            band(t.s_over_nu)
        ),
    ))
}

fn a13() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 1000 {
        let ex = [Example::Example1, Example::Example2, Example::Example3][rng.random_range(0..3)];
        let alpha = if ex == Example::Example1 { rng.random_range(0.5..0.95) } else { 1.0 };
        let khat = LatticeVector::new(rng.random_range(-6..=6), rng.random_range(-6..=6));
        let nu = rng.random_range(0.0..0.5);
        let lambda = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = rng.random_range(-40..=40);
        let Ok(f) = ex.fiber(alpha, khat, nu) else { continue };
        let Ok(generic) = fiber_coefficient(&f, lambda, n) else { continue };
        let closed = ex.closed_form_coefficient(alpha, khat, lambda, nu, n);
        worst = worst.max((generic - closed).norm() / closed.norm().max(f64::MIN_POSITIVE));
        done += 1;
    }
    let p = CFParams::default();
    let f = Example::Example1.fiber(0.7, Example::Example1.default_khat(), 0.05)?;
    let reduced = find_real_eigenvalue(&f, default_real_bracket(&f), &p)?.lambda;
    let generic = newton_with_form(&f, reduced + 0.01, MatchingForm::GenericMch, &p)?.lambda;
    let diff = (generic - reduced).norm();
    Ok((worst <= 1e-13 && diff <= 1e-10, format!("max relative a_n mismatch {worst:.1e} over 1000 samples; generic vs reduced root {diff:.1e}")))
}
