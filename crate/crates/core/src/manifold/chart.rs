//! Manifold charts, invariance checks and the ν-scaling sweep.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::galerkin::{build_galerkin, GalerkinSystem};
use super::gamma::{gamma_map_iterate, GammaParams};
use super::ode::{dopri5, OdeOptions};
use super::split::{spectral_split, SpectralSplitting, SplitConstants, Subspace, SubspaceSet};
use super::{cutoff_chi, Flavor};
use crate::error::{Error, Result};
use crate::lattice::{DomainSpec, LatticeVector, SingleModeState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartParams {
    pub flavor: Flavor,
    /// `None` takes δ from the measured constants.
    pub delta: Option<f64>,
    /// `None` takes the flavor's default weight rate.
    pub rate: Option<f64>,
    pub tol: f64,
    pub nodes_per_efold: f64,
}

impl ChartParams {
    pub fn new(flavor: Flavor) -> Self {
        Self { flavor, delta: None, rate: None, tol: 1e-12, nodes_per_efold: 16.0 }
    }

    /// Resolves δ and the weight rate against a splitting.
    pub fn gamma_params(&self, split: &SpectralSplitting) -> Result<GammaParams> {
        let rate = self.rate.unwrap_or_else(|| split.default_rate(self.flavor));
        let delta = match self.delta {
            Some(d) => d,
            None => split.delta_for(self.flavor, rate)?,
        };
        let mut g = GammaParams::new(self.flavor, delta, rate);
        g.tol = self.tol;
        g.nodes_per_efold = self.nodes_per_efold;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSample {
    pub base: Vec<f64>,
    pub graph: Vec<f64>,
    pub base_norm: f64,
    pub graph_norm: f64,
    pub iterations: usize,
    pub contraction: f64,
}

/// Sampled graph `h: E^base → E^graph` of an invariant manifold of the
/// cut-off truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldChart {
    pub flavor: Flavor,
    pub delta: f64,
    pub rate: f64,
    pub nu: f64,
    pub ell: u32,
    /// Dimension of the base subspace.
    pub base_dim: usize,
    /// Even coordinates: one half-lattice mode per vector entry.
    pub modes: Vec<LatticeVector>,
    pub samples: Vec<ChartSample>,
    pub constants: SplitConstants,
    pub mu_u: f64,
    pub beta: f64,
    pub eps: f64,
    pub params: GammaParams,
}

fn base_dim(split: &SpectralSplitting, flavor: Flavor) -> usize {
    let b = flavor.base();
    [(Subspace::Unstable, split.m_u), (Subspace::Center, split.m_c), (Subspace::Stable, split.m_s)]
        .iter()
        .filter(|(z, _)| b.contains(*z))
        .map(|(_, m)| m)
        .sum()
}

fn complement(set: SubspaceSet) -> SubspaceSet {
    let zs: Vec<Subspace> =
        [Subspace::Unstable, Subspace::Center, Subspace::Stable].into_iter().filter(|z| !set.contains(*z)).collect();
    SubspaceSet::of(&zs)
}

/// Graph value `h(base)` with explicit parameters.
fn graph_value(sys: &GalerkinSystem, split: &SpectralSplitting, base: &Array1<f64>, params: &GammaParams) -> Result<(Array1<f64>, usize, f64)> {
    let fp = gamma_map_iterate(sys, split, base, params)?;
    let x0 = fp.initial(split);
    Ok((split.project(complement(params.flavor.base()), &x0), fp.iterations, fp.contraction))
}

/// Computes the graph over each base sample. Samples must lie in the base
/// subspace and within δ.
pub fn manifold_graph(
    sys: &GalerkinSystem,
    split: &SpectralSplitting,
    base_samples: &[Array1<f64>],
    params: &ChartParams,
) -> Result<ManifoldChart> {
    let gp = params.gamma_params(split)?;
    let ell = sys.ell as i32;
    let base = params.flavor.base();
    for b in base_samples {
        let pb = split.project(base, b);
        let off = sys.norm(&(b - &pb), ell);
        if off > 1e-10 * sys.norm(b, ell).max(1e-300) {
            return Err(Error::Precondition(format!("base sample leaves the {} base subspace by {off:e}", params.flavor.name())));
        }
    }
    let samples = base_samples
        .par_iter()
        .map(|b| {
            let (g, iterations, contraction) = graph_value(sys, split, b, &gp)?;
            Ok(ChartSample {
                base: b.to_vec(),
                base_norm: sys.norm(b, ell),
                graph_norm: sys.norm(&g, ell),
                graph: g.to_vec(),
                iterations,
                contraction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ManifoldChart {
        flavor: params.flavor,
        delta: gp.delta,
        rate: gp.rate,
        nu: sys.nu,
        ell: sys.ell,
        base_dim: base_dim(split, params.flavor),
        modes: sys.modes.clone(),
        samples,
        constants: split.constants,
        mu_u: split.mu_u,
        beta: split.beta,
        eps: split.eps,
        params: gp,
    })
}

impl ManifoldChart {
    /// Evaluates the graph at a new base point with the chart's parameters.
    pub fn graph_at(&self, sys: &GalerkinSystem, split: &SpectralSplitting, base: &Array1<f64>) -> Result<Array1<f64>> {
        Ok(graph_value(sys, split, base, &self.params)?.0)
    }

    /// Largest contraction factor over the samples.
    pub fn contraction(&self) -> f64 {
        self.samples.iter().map(|s| s.contraction).fold(0.0, f64::max)
    }
}

/// Seeded random unit vector (`H^ℓ` norm one) in the flavor's base subspace,
/// with coefficients decaying like `|k|^{−ℓ−1}`.
pub fn base_direction(sys: &GalerkinSystem, split: &SpectralSplitting, flavor: Flavor, seed: u64) -> Result<Array1<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = sys.ell as i32;
    let raw = Array1::from_iter(sys.norm2.iter().map(|n| rng.random_range(-1.0..1.0) * n.sqrt().powi(-l - 1)));
    let x = split.project(flavor.base(), &raw);
    let n = sys.norm(&x, l);
    if !(n > 0.0) {
        return Err(Error::Precondition(format!("{} base subspace is empty", flavor.name())));
    }
    Ok(x / n)
}

/// `‖h(s·x)‖_ℓ / s²` for each scale.
pub fn halving_ratios(
    sys: &GalerkinSystem,
    split: &SpectralSplitting,
    direction: &Array1<f64>,
    scales: &[f64],
    params: &GammaParams,
) -> Result<Vec<f64>> {
    scales
        .par_iter()
        .map(|s| {
            let (g, _, _) = graph_value(sys, split, &(direction * *s), params)?;
            Ok(sys.norm(&g, sys.ell as i32) / (s * s))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    /// Largest `‖x^graph(t) − h(x^base(t))‖_ℓ` over the checkpoints.
    pub residual: f64,
    /// `residual` relative to the largest graph value seen.
    pub relative: f64,
    pub checkpoints: Vec<f64>,
    /// First checkpoint at which the trajectory left the `3δ` ball.
    pub exit_time: Option<f64>,
}

/// Integrates the cut-off truncation from the chart point over `base` for
/// time `t_check` (backward for flavors living on negative times) and
/// compares the trajectory against the chart.
pub fn invariance_residual(
    chart: &ManifoldChart,
    sys: &GalerkinSystem,
    split: &SpectralSplitting,
    base: &Array1<f64>,
    t_check: f64,
) -> Result<InvarianceReport> {
    if !(t_check > 0.0) {
        return Err(Error::InvalidParameter(format!("t_check = {t_check}")));
    }
    let ell = sys.ell as i32;
    let delta = chart.delta;
    let dir = if chart.flavor.sides().1 { 1.0 } else { -1.0 };
    let checkpoints: Vec<f64> = (1..=4).map(|i| dir * t_check * i as f64 / 4.0).collect();
    if sys.norm(base, ell) == 0.0 {
        return Ok(InvarianceReport { residual: 0.0, relative: 0.0, checkpoints, exit_time: None });
    }
    let x0 = base + &chart.graph_at(sys, split, base)?;
    let field = |_t: f64, x: &Array1<f64>| {
        let chi = cutoff_chi(sys.norm(x, ell) / delta);
        let mut v = sys.lin_even.dot(x);
        if chi > 0.0 {
            v.scaled_add(chi, &sys.nonlinear(x));
        }
        v
    };
    let scale = sys.norm(&x0, 0).max(1e-300);
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-15 * scale, ..Default::default() };
    let sol = dopri5(field, 0.0, &x0, &checkpoints, &opts)?;
    let bset = chart.flavor.base();
    let gset = complement(bset);
    let mut residual: f64 = 0.0;
    let mut biggest: f64 = 0.0;
    let mut exit_time = None;
    for (t, x) in sol.times.iter().zip(&sol.states) {
        if sys.norm(x, ell) > 3.0 * delta {
            exit_time = Some(*t);
            break;
        }
        let b = split.project(bset, x);
        let g = split.project(gset, x);
        let pred = chart.graph_at(sys, split, &b)?;
        residual = residual.max(sys.norm(&(&g - &pred), ell));
        biggest = biggest.max(sys.norm(&pred, ell));
    }
    Ok(InvarianceReport { residual, relative: residual / biggest.max(1e-300), checkpoints, exit_time })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub nu: f64,
    pub m_u: usize,
    pub m_c: usize,
    pub lambda_u1_re: f64,
    pub lambda_s1_re: f64,
    pub mu_u: f64,
    pub beta: f64,
    pub eps: f64,
    pub delta_cs: f64,
    pub delta_u: f64,
    pub delta_s: f64,
    pub delta_c: f64,
    pub delta_cu: f64,
    /// `m ≥ 1` and the slowest stable rate within `[ν, 4ν]` (up to `1e-9`).
    pub rates_in_window: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub k_max: usize,
    pub ell: u32,
    pub rows: Vec<ScalingRow>,
    /// `(min, max)` of `δ_cs/√ν`.
    pub cs_over_sqrt_nu: (f64, f64),
    pub u_over_sqrt_nu: (f64, f64),
    pub s_over_nu: (f64, f64),
    pub c_over_nu: (f64, f64),
    pub cu_over_nu: (f64, f64),
}

fn extent(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

impl ScalingTable {
    /// `max/min ≤ factor` for both `δ_cs/√ν` and `δ_s/ν`.
    pub fn within_band(&self, factor: f64) -> bool {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi.is_finite() && hi / lo <= factor;
        ok(self.cs_over_sqrt_nu) && ok(self.s_over_nu)
    }
}

fn scaling_row(state: &SingleModeState, domain: &DomainSpec, k_max: usize, ell: u32, nu: f64) -> Result<ScalingRow> {
    let sys = build_galerkin(state, domain, nu, k_max, ell)?;
    let split = spectral_split(&sys, None)?;
    let d = |f: Flavor| split.delta_for(f, split.default_rate(f)).unwrap_or(f64::NAN);
    let s1 = split.lambda_s1.map_or(f64::NAN, |z| z.re);
    let tol = 1e-9;
    let mut note = None;
    if split.m_u == 0 {
        note = Some("no unstable eigenvalue".to_string());
    } else if !(s1 >= -4.0 * nu - tol && s1 <= -nu + tol) {
        note = Some(format!("slowest stable eigenvalue {s1:e} outside [-4nu, -nu]"));
    }
    Ok(ScalingRow {
        nu,
        m_u: split.m_u,
        m_c: split.m_c,
        lambda_u1_re: split.lambda_u1.map_or(f64::NAN, |z| z.re),
        lambda_s1_re: s1,
        mu_u: split.mu_u,
        beta: split.beta,
        eps: split.eps,
        delta_cs: d(Flavor::CenterStable),
        delta_u: d(Flavor::Unstable),
        delta_s: d(Flavor::Stable),
        delta_c: d(Flavor::Center),
        delta_cu: d(Flavor::CenterUnstable),
        rates_in_window: note.is_none(),
        note,
    })
}

/// δ for every flavor across a viscosity grid; rows keep the grid order.
pub fn size_scaling_sweep(
    state: &SingleModeState,
    domain: &DomainSpec,
    k_max: usize,
    ell: u32,
    nu_grid: &[f64],
) -> Result<ScalingTable> {
    if state.gamma.norm() == 0.0 {
        return Err(Error::Precondition("zero amplitude has no unstable eigenvalue".into()));
    }
    if nu_grid.is_empty() || nu_grid.iter().any(|n| !(*n > 0.0)) {
        return Err(Error::InvalidParameter("viscosity grid must be non-empty and positive".into()));
    }
    let rows = nu_grid
        .par_iter()
        .map(|nu| scaling_row(state, domain, k_max, ell, *nu))
        .collect::<Result<Vec<_>>>()?;
    let sq = |r: &ScalingRow| r.nu.sqrt();
    Ok(ScalingTable {
        k_max,
        ell,
        cs_over_sqrt_nu: extent(rows.iter().map(|r| r.delta_cs / sq(r))),
        u_over_sqrt_nu: extent(rows.iter().map(|r| r.delta_u / sq(r))),
        s_over_nu: extent(rows.iter().map(|r| r.delta_s / r.nu)),
        c_over_nu: extent(rows.iter().map(|r| r.delta_c / r.nu)),
        cu_over_nu: extent(rows.iter().map(|r| r.delta_cu / r.nu)),
        rows,
    })
}
