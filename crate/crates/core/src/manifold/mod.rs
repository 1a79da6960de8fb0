//! Invariant manifolds of Galerkin truncations by the contraction-mapping
//! construction.
//!
//! The nonlinearity is localized by [`cutoff_chi`], the linear part is split
//! by [`spectral_split`], and trajectories are fixed points of the integral
//! operator iterated by [`gamma_map_iterate`]. Everything lives on the even
//! real subspace `ω_k = ω_{−k}`, which is invariant when the amplitude is real.

mod chart;
mod galerkin;
mod gamma;
mod ode;
mod split;

use serde::{Deserialize, Serialize};

pub use chart::{
    base_direction, halving_ratios, invariance_residual, manifold_graph, size_scaling_sweep, ChartParams, ChartSample, InvarianceReport,
    ManifoldChart, ScalingRow, ScalingTable,
};
pub use galerkin::{build_galerkin, in_half_lattice, GalerkinSystem, QuadEntry};
pub use gamma::{gamma_map_iterate, time_grid, FixedPoint, GammaParams, TrajectorySpace};
pub use ode::{dopri5, OdeOptions, OdeSolution};
pub use split::{
    default_eps, delta_formula, delta_from_constants, spectral_split, SpectralBlock, SpectralSplitting, SplitConstants,
    Subspace, SubspaceSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    CenterStable,
    Unstable,
    Stable,
    Center,
    CenterUnstable,
}

/// How a component of the trajectory is pinned down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// Initial value prescribed at `t = 0`.
    Zero,
    /// Integral from `+∞`.
    PlusInf,
    /// Integral from `−∞`.
    MinusInf,
}

impl Flavor {
    pub const ALL: [Flavor; 5] =
        [Flavor::CenterStable, Flavor::Unstable, Flavor::Stable, Flavor::Center, Flavor::CenterUnstable];

    pub fn name(self) -> &'static str {
        match self {
            Flavor::CenterStable => "center-stable",
            Flavor::Unstable => "unstable",
            Flavor::Stable => "stable",
            Flavor::Center => "center",
            Flavor::CenterUnstable => "center-unstable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Anchoring of the unstable, center and stable components.
    pub fn anchors(self) -> [Anchor; 3] {
        use Anchor::*;
        match self {
            Flavor::CenterStable => [PlusInf, Zero, Zero],
            Flavor::Stable => [PlusInf, PlusInf, Zero],
            Flavor::Unstable => [Zero, MinusInf, MinusInf],
            Flavor::CenterUnstable => [Zero, Zero, MinusInf],
            Flavor::Center => [PlusInf, Zero, MinusInf],
        }
    }

    /// Subspaces whose values at `t = 0` parametrize the manifold.
    pub fn base(self) -> SubspaceSet {
        let a = self.anchors();
        let zs = [Subspace::Unstable, Subspace::Center, Subspace::Stable];
        SubspaceSet::of(&zs.iter().zip(a).filter(|(_, a)| *a == Anchor::Zero).map(|(z, _)| *z).collect::<Vec<_>>())
    }

    /// Time interval covered by trajectories: `(has negative times, has positive times)`.
    pub fn sides(self) -> (bool, bool) {
        match self {
            Flavor::CenterStable | Flavor::Stable => (false, true),
            Flavor::Unstable | Flavor::CenterUnstable => (true, false),
            Flavor::Center => (true, true),
        }
    }

    /// Signed weight exponent: the trajectory norm is `sup e^{−σ(t)} ‖Ω(t)‖`
    /// with `σ(t) = rate·|t|` for growth-tolerant flavors and `−rate·|t|`
    /// for decaying ones.
    pub fn weight_sign(self) -> f64 {
        match self {
            Flavor::CenterStable | Flavor::CenterUnstable | Flavor::Center => 1.0,
            Flavor::Stable | Flavor::Unstable => -1.0,
        }
    }
}

const CHI_STEEPNESS: f64 = 0.8;

fn glue(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (CHI_STEEPNESS * (1.0 / s - 1.0 / (1.0 - s))).exp())
    }
}

/// Smooth cut-off: 1 on `[0,1]`, 0 on `[3,∞)`, non-increasing, `sup|χ′| < 1`.
pub fn cutoff_chi(r: f64) -> f64 {
    1.0 - glue((r - 1.0) / 2.0)
}

/// `χ′(r)`.
pub fn cutoff_chi_derivative(r: f64) -> f64 {
    let s = (r - 1.0) / 2.0;
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let g = glue(s);
    let dphase = CHI_STEEPNESS * (-1.0 / (s * s) - 1.0 / ((1.0 - s) * (1.0 - s)));
    // g = 1/(1+e^φ) so g′ = −g(1−g)φ′, and dr = 2 ds
    g * (1.0 - g) * dphase / 2.0
}
