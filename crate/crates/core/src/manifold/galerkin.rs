//! Galerkin truncation `∂ₜΩ = LΩ + N(Ω)` restricted to the even real subspace
//! `ω_k = ω_{−k} ∈ ℝ`.

use std::collections::{BTreeMap, HashMap};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{interaction_coeff, DomainSpec, LatticeVector, SingleModeState};
use crate::oracle::{full_matrix, lattice_modes, TruncatedOperator};

/// One convolution entry `A(q, r)` contributing to mode `k = q + r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadEntry {
    pub k: LatticeVector,
    pub q: LatticeVector,
    pub r: LatticeVector,
    pub coeff: f64,
}

/// Half lattice `{k1 > 0} ∪ {k1 = 0, k2 > 0}`.
pub fn in_half_lattice(k: &LatticeVector) -> bool {
    k.k1 > 0 || (k.k1 == 0 && k.k2 > 0)
}

fn fold(k: &LatticeVector) -> LatticeVector {
    if in_half_lattice(k) {
        *k
    } else {
        -*k
    }
}

#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub k_max: usize,
    pub domain: DomainSpec,
    pub nu: f64,
    pub ell: u32,
    pub state: SingleModeState,
    /// Full-lattice linear operator.
    pub linear: TruncatedOperator,
    /// Every ordered pair `(q, r)` with `q`, `r`, `q + r` in the truncation.
    pub quadratic: Vec<QuadEntry>,
    /// Coordinates of the even subspace (half-lattice modes).
    pub modes: Vec<LatticeVector>,
    /// Linear operator on even coordinates.
    pub lin_even: Array2<f64>,
    /// `|k|²` per even coordinate.
    pub norm2: Vec<f64>,
    terms: Vec<(u32, u32, u32, f64)>,
}

/// Builds the truncation on `{0 < |k|∞ ≤ K}`. The amplitude must be real so
/// that the even subspace is invariant.
pub fn build_galerkin(state: &SingleModeState, domain: &DomainSpec, nu: f64, k_max: usize, ell: u32) -> Result<GalerkinSystem> {
    if state.gamma.im != 0.0 {
        return Err(Error::Precondition("the even real subspace needs a real amplitude".into()));
    }
    if ell < 1 {
        return Err(Error::InvalidParameter("Sobolev index must be >= 1".into()));
    }
    let linear = full_matrix(state, domain, nu, k_max, ell)?;
    let full = lattice_modes(k_max);
    let kk = k_max as i64;
    let inside = |v: &LatticeVector| !v.is_zero() && v.sup_norm() <= kk;

    let mut quadratic = Vec::new();
    for k in &full {
        for q in &full {
            let r = *k - *q;
            if inside(&r) {
                quadratic.push(QuadEntry { k: *k, q: *q, r, coeff: interaction_coeff(*q, r, domain)? });
            }
        }
    }

    let modes: Vec<LatticeVector> = full.iter().copied().filter(in_half_lattice).collect();
    let idx: HashMap<LatticeVector, u32> = modes.iter().enumerate().map(|(i, k)| (*k, i as u32)).collect();
    let dim = modes.len();

    let mut lin_even = Array2::<f64>::zeros((dim, dim));
    for (a, k) in linear.mode_map.iter().enumerate() {
        let Some(&i) = idx.get(k) else { continue };
        for (b, c) in linear.mode_map.iter().enumerate() {
            let v = linear.matrix[[a, b]];
            if v != 0.0 {
                lin_even[[i as usize, idx[&fold(c)] as usize]] += v;
            }
        }
    }

    let mut acc: BTreeMap<(u32, u32, u32), f64> = BTreeMap::new();
    for e in &quadratic {
        if e.coeff == 0.0 {
            continue;
        }
        let Some(&i) = idx.get(&e.k) else { continue };
        let (a, b) = (idx[&fold(&e.q)], idx[&fold(&e.r)]);
        *acc.entry((i, a.min(b), a.max(b))).or_insert(0.0) += e.coeff;
    }
    let terms = acc.into_iter().filter(|(_, c)| *c != 0.0).map(|((i, a, b), c)| (i, a, b, c)).collect();
    let norm2 = modes.iter().map(|k| domain.norm2(k)).collect();
    Ok(GalerkinSystem { k_max, domain: *domain, nu, ell, state: *state, linear, quadratic, modes, lin_even, norm2, terms })
}

impl GalerkinSystem {
    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    /// `N(x)_k = Σ_{q+r=k} A(q,r) x_q x_r` on even coordinates.
    pub fn nonlinear(&self, x: &Array1<f64>) -> Array1<f64> {
        let mut out = Array1::<f64>::zeros(self.dim());
        for &(i, a, b, c) in &self.terms {
            out[i as usize] += c * x[a as usize] * x[b as usize];
        }
        out
    }

    /// `Lx + N(x)`.
    pub fn vector_field(&self, x: &Array1<f64>) -> Array1<f64> {
        self.lin_even.dot(x) + self.nonlinear(x)
    }

    /// `H^s` norm of the full field, `(Σ_{k} |k|^{2s} |ω_k|²)^{1/2}`.
    pub fn norm(&self, x: &Array1<f64>, s: i32) -> f64 {
        x.iter()
            .zip(&self.norm2)
            .map(|(v, n)| 2.0 * n.powi(s) * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Weights `√2 |k|^s` turning the `H^s` norm into a Euclidean norm.
    pub fn weights(&self, s: i32) -> Vec<f64> {
        self.norm2.iter().map(|n| (2.0 * n.powi(s)).sqrt()).collect()
    }

    /// Full-lattice nonlinear term, for cross-checks of the even reduction.
    pub fn nonlinear_full(&self, omega: &HashMap<LatticeVector, f64>) -> HashMap<LatticeVector, f64> {
        let mut out = HashMap::new();
        for e in &self.quadratic {
            let v = e.coeff * omega.get(&e.q).copied().unwrap_or(0.0) * omega.get(&e.r).copied().unwrap_or(0.0);
            *out.entry(e.k).or_insert(0.0) += v;
        }
        out
    }

    /// `C_B` with `‖B(u,v)‖_{ℓ−1} ≤ C_B ‖u‖_ℓ ‖v‖_ℓ` for the symmetric
    /// convolution `B`, from Cauchy–Schwarz on each output mode.
    pub fn bilinear_bound(&self) -> f64 {
        let l = self.ell as i32;
        let mut per_k: HashMap<LatticeVector, f64> = HashMap::new();
        for e in &self.quadratic {
            let nq = self.domain.norm2(&e.q).powi(l);
            let nr = self.domain.norm2(&e.r).powi(l);
            *per_k.entry(e.k).or_insert(0.0) += e.coeff * e.coeff / (nq * nr);
        }
        per_k
            .iter()
            .map(|(k, s)| self.domain.norm2(k).powi(l - 1) * s)
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Lipschitz constant of the cut-off nonlinearity per unit δ:
    /// `‖N_δ(x) − N_δ(y)‖_{ℓ−1} ≤ C_N δ ‖x − y‖_ℓ` with `C_N = (9 sup|χ′| + 6) C_B ≤ 15 C_B`.
    pub fn cutoff_lipschitz(&self) -> f64 {
        15.0 * self.bilinear_bound()
    }

    /// Even coordinates as a full-lattice field.
    pub fn to_full(&self, x: &Array1<f64>) -> HashMap<LatticeVector, f64> {
        let mut out = HashMap::new();
        for (k, v) in self.modes.iter().zip(x.iter()) {
            out.insert(*k, *v);
            out.insert(-*k, *v);
        }
        out
    }
}
