//! Discretized integral operator whose fixed points are trajectories on an
//! invariant manifold.

use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::galerkin::GalerkinSystem;
use super::split::{SpectralSplitting, Subspace};
use super::{cutoff_chi, Anchor, Flavor};
use crate::error::{Error, Result};

const MAX_NODES: usize = 400_000;
/// Decay (in e-foldings) after which a mode no longer sets the step size.
const ACTIVE_EFOLDS: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub flavor: Flavor,
    pub delta: f64,
    /// Exponential rate of the trajectory weight.
    pub rate: f64,
    /// Stop once successive iterates differ by less than `tol` times the iterate norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Grid nodes per unit of `|λ|·t` for the fastest active mode.
    pub nodes_per_efold: f64,
    /// Horizon; `None` means `20/rate`.
    pub horizon: Option<f64>,
    /// Abort when an iterate ratio exceeds this.
    pub max_factor: f64,
}

impl GammaParams {
    pub fn new(flavor: Flavor, delta: f64, rate: f64) -> Self {
        Self { flavor, delta, rate, tol: 1e-12, max_iter: 60, nodes_per_efold: 16.0, horizon: None, max_factor: 0.9 }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(20.0 / self.rate)
    }
}

/// Time grid and weight of the trajectory norm
/// `‖Ω‖ = sup_j e^{−σ|t_j|} Σ_z ‖Ω^z(t_j)‖_ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpace {
    pub times: Vec<f64>,
    /// Index of `t = 0`.
    pub origin: usize,
    /// Signed exponent `σ`; positive tolerates growth, negative demands decay.
    pub sigma: f64,
}

impl TrajectorySpace {
    pub fn weight(&self, j: usize) -> f64 {
        (-self.sigma * self.times[j].abs()).exp()
    }
}

fn side(split: &SpectralSplitting, horizon: f64, npe: f64, rate: f64) -> Result<Vec<f64>> {
    let lam = split.eigenvalues();
    let mut out = Vec::new();
    let mut t = 0.0;
    while t < horizon {
        let fastest = lam
            .iter()
            .filter(|z| z.re >= 0.0 || -z.re * t <= ACTIVE_EFOLDS)
            .map(|z| z.norm())
            .fold(rate.abs(), f64::max);
        let h = (1.0 / (npe * fastest)).min(horizon - t);
        t = if horizon - t - h < 1e-9 * horizon { horizon } else { t + h };
        out.push(t);
        if out.len() > MAX_NODES {
            return Err(Error::Resolution { jump: f64::NAN });
        }
    }
    Ok(out)
}

/// Grid for the flavor's time interval, finest where the fast modes are alive.
pub fn time_grid(split: &SpectralSplitting, flavor: Flavor, rate: f64, horizon: f64, nodes_per_efold: f64) -> Result<TrajectorySpace> {
    if !(rate > 0.0 && horizon > 0.0 && nodes_per_efold >= 1.0) {
        return Err(Error::InvalidParameter(format!("rate {rate}, horizon {horizon}, nodes {nodes_per_efold}")));
    }
    let pos = side(split, horizon, nodes_per_efold, rate)?;
    let (neg, posi) = flavor.sides();
    let mut times = Vec::new();
    if neg {
        times.extend(pos.iter().rev().map(|t| -t));
    }
    let origin = times.len();
    times.push(0.0);
    if posi {
        times.extend(pos.iter().copied());
    }
    Ok(TrajectorySpace { times, origin, sigma: flavor.weight_sign() * rate })
}

/// `(φ₁(z), φ₂(z))` with `φ₁ = (e^z−1)/z`, `φ₂ = (e^z−1−z)/z²`.
fn phi12(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.25 {
        // φ_k(z) = Σ z^n/(n+k)!
        let (mut p1, mut p2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut zn = Complex64::new(1.0, 0.0);
        let mut f1 = 1.0; // (n+1)!
        let mut f2 = 2.0; // (n+2)!
        for n in 0..16 {
            p1 += zn / f1;
            p2 += zn / f2;
            zn *= z;
            f1 *= (n + 2) as f64;
            f2 *= (n + 3) as f64;
        }
        (p1, p2)
    } else {
        let e = z.exp();
        let p1 = (e - 1.0) / z;
        (p1, (p1 - 1.0) / z)
    }
}

/// Converged trajectory in eigen-coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub space: TrajectorySpace,
    pub coords: Vec<Vec<Complex64>>,
    /// Weighted distance between successive iterates.
    pub distances: Vec<f64>,
    /// Largest ratio of successive distances above the rounding floor.
    pub contraction: f64,
    pub iterations: usize,
}

impl FixedPoint {
    pub fn state(&self, split: &SpectralSplitting, j: usize) -> Array1<f64> {
        split.from_eig(&self.coords[j])
    }

    /// `Ω(0)`.
    pub fn initial(&self, split: &SpectralSplitting) -> Array1<f64> {
        self.state(split, self.space.origin)
    }
}

struct Sweep {
    anchors: Vec<Anchor>,
    lambda: Vec<Complex64>,
}

impl Sweep {
    fn step(&self, i: usize, h: f64, ya: Complex64, ga: Complex64, gb: Complex64) -> Complex64 {
        let z = self.lambda[i] * h;
        let (p1, p2) = phi12(z);
        z.exp() * ya + h * (p1 * ga + p2 * (gb - ga))
    }

    /// One application of the operator given the nonlinearity samples `g`.
    fn apply(&self, space: &TrajectorySpace, b: &[Complex64], g: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let m = space.times.len();
        let d = self.lambda.len();
        let t = &space.times;
        let zero = Complex64::new(0.0, 0.0);
        let mut y = vec![vec![zero; d]; m];
        for i in 0..d {
            match self.anchors[i] {
                Anchor::Zero => {
                    y[space.origin][i] = b[i];
                    for j in space.origin + 1..m {
                        y[j][i] = self.step(i, t[j] - t[j - 1], y[j - 1][i], g[j - 1][i], g[j][i]);
                    }
                    for j in (0..space.origin).rev() {
                        y[j][i] = self.step(i, t[j] - t[j + 1], y[j + 1][i], g[j + 1][i], g[j][i]);
                    }
                }
                Anchor::PlusInf => {
                    for j in (0..m - 1).rev() {
                        y[j][i] = self.step(i, t[j] - t[j + 1], y[j + 1][i], g[j + 1][i], g[j][i]);
                    }
                }
                Anchor::MinusInf => {
                    for j in 1..m {
                        y[j][i] = self.step(i, t[j] - t[j - 1], y[j - 1][i], g[j - 1][i], g[j][i]);
                    }
                }
            }
        }
        y
    }
}

fn weighted_distance(split: &SpectralSplitting, space: &TrajectorySpace, a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    let classes = split.classes();
    let ell = split.ell() as i32;
    let zero = Complex64::new(0.0, 0.0);
    let mut best: f64 = 0.0;
    let norm_of = |j: usize| {
        let mut total = 0.0;
        for z in [Subspace::Unstable, Subspace::Center, Subspace::Stable] {
            let diff: Vec<Complex64> =
                (0..classes.len()).map(|i| if classes[i] == z { a[j][i] - b[j][i] } else { zero }).collect();
            if diff.iter().any(|c| *c != zero) {
                total += split.norm(&split.from_eig(&diff), ell);
            }
        }
        total
    };
    for j in 0..space.times.len() {
        best = best.max(space.weight(j) * norm_of(j));
    }
    best
}

/// Iterates the operator from the linear flow of the boundary data until
/// successive iterates agree to `tol` in the weighted norm.
pub fn gamma_map_iterate(
    sys: &GalerkinSystem,
    split: &SpectralSplitting,
    boundary: &Array1<f64>,
    params: &GammaParams,
) -> Result<FixedPoint> {
    if !(params.delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {}", params.delta)));
    }
    let base = params.flavor.base();
    let ell = sys.ell as i32;
    let b_norm = sys.norm(boundary, ell);
    if b_norm > params.delta * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("boundary norm {b_norm:e} exceeds delta {:e}", params.delta)));
    }
    let space = time_grid(split, params.flavor, params.rate, params.horizon(), params.nodes_per_efold)?;
    let classes = split.classes();
    let anchors = params.flavor.anchors();
    let sweep = Sweep {
        anchors: classes
            .iter()
            .map(|c| match c {
                Subspace::Unstable => anchors[0],
                Subspace::Center => anchors[1],
                Subspace::Stable => anchors[2],
            })
            .collect(),
        lambda: split.eigenvalues(),
    };
    let zero = Complex64::new(0.0, 0.0);
    let b_eig: Vec<Complex64> = split
        .to_eig(boundary)
        .into_iter()
        .enumerate()
        .map(|(i, z)| if base.contains(classes[i]) && sweep.anchors[i] == Anchor::Zero { z } else { zero })
        .collect();
    let m = space.times.len();
    let d = split.dim();
    let mut g = vec![vec![zero; d]; m];
    let mut y = sweep.apply(&space, &b_eig, &g);
    let mut distances = Vec::new();
    let mut contraction: f64 = 0.0;
    for iter in 1..=params.max_iter {
        for j in 0..m {
            let x = split.from_eig(&y[j]);
            let chi = cutoff_chi(sys.norm(&x, ell) / params.delta);
            g[j] = if chi == 0.0 { vec![zero; d] } else { split.to_eig(&(sys.nonlinear(&x) * chi)) };
        }
        let next = sweep.apply(&space, &b_eig, &g);
        let dist = weighted_distance(split, &space, &next, &y);
        let scale = weighted_distance(split, &space, &next, &vec![vec![zero; d]; m]);
        y = next;
        let floor = 1e-13 * scale;
        if let Some(prev) = distances.last().copied() {
            if prev > floor && dist > floor {
                let ratio: f64 = dist / prev;
                contraction = contraction.max(ratio);
                if ratio > params.max_factor {
                    return Err(Error::DeltaTooLarge { factor: ratio });
                }
            }
        }
        distances.push(dist);
        if dist <= params.tol * scale || scale == 0.0 {
            return Ok(FixedPoint { space, coords: y, distances, contraction, iterations: iter });
        }
    }
    Err(Error::NoConvergence { depth: params.max_iter, residual: distances.last().copied().unwrap_or(f64::NAN) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_series_matches_closed_form() {
        for z in [Complex64::new(0.2, 0.1), Complex64::new(-0.24, 0.0), Complex64::new(0.0, 0.249)] {
            let (a1, a2) = phi12(z);
            let e = z.exp();
            let b1 = (e - 1.0) / z;
            let b2 = (e - 1.0 - z) / (z * z);
            assert!((a1 - b1).norm() < 1e-12 && (a2 - b2).norm() < 1e-11);
        }
        let (p1, p2) = phi12(Complex64::new(0.0, 0.0));
        assert_eq!((p1.re, p2.re), (1.0, 0.5));
    }

    #[test]
    fn step_is_exact_for_linear_forcing() {
        // y' = λy + (1 + t), y(0) = 2
        let lam = Complex64::new(-0.7, 0.3);
        let sweep = Sweep { anchors: vec![Anchor::Zero], lambda: vec![lam] };
        let h = 0.9;
        let y = sweep.step(0, h, Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0 + h, 0.0));
        // exact: y = c e^{λt} − (1+t)/λ − 1/λ²
        let c = 2.0 + 1.0 / lam + 1.0 / (lam * lam);
        let exact = c * (lam * h).exp() - (1.0 + h) / lam - 1.0 / (lam * lam);
        assert!((y - exact).norm() < 1e-13);
    }
}
