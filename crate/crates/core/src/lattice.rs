//! Lattice vectors, the rectangular-torus metric, single-mode steady states and
//! the per-fiber recurrence coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer Fourier index `(k1, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVector {
    pub k1: i64,
    pub k2: i64,
}

impl LatticeVector {
    pub const fn new(k1: i64, k2: i64) -> Self {
        Self { k1, k2 }
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }

    /// Integer determinant `q1 r2 - q2 r1`.
    pub fn det(&self, other: &LatticeVector) -> i128 {
        self.k1 as i128 * other.k2 as i128 - self.k2 as i128 * other.k1 as i128
    }

    pub fn sup_norm(&self) -> i64 {
        self.k1.abs().max(self.k2.abs())
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

impl Add for LatticeVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.k1 + o.k1, self.k2 + o.k2)
    }
}

impl Sub for LatticeVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.k1 - o.k1, self.k2 - o.k2)
    }
}

impl Neg for LatticeVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.k1, -self.k2)
    }
}

impl Mul<LatticeVector> for i64 {
    type Output = LatticeVector;
    fn mul(self, v: LatticeVector) -> LatticeVector {
        LatticeVector::new(self * v.k1, self * v.k2)
    }
}

/// Periodic domain `[0, 2π/α] × [0, 2π]`. Physical wavevector of `k` is `(α k1, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub aspect: f64,
}

impl DomainSpec {
    pub fn new(aspect: f64) -> Result<Self> {
        if !(aspect.is_finite() && aspect > 0.0) {
            return Err(Error::InvalidParameter(format!("aspect ratio must be positive, got {aspect}")));
        }
        Ok(Self { aspect })
    }

    pub fn square() -> Self {
        Self { aspect: 1.0 }
    }

    fn a2(&self) -> f64 {
        self.aspect * self.aspect
    }

    /// `|k|² = (α k1)² + k2²`. Squares are taken in 128-bit integers.
    pub fn norm2(&self, k: &LatticeVector) -> f64 {
        let s1 = (k.k1 as i128 * k.k1 as i128) as f64;
        let s2 = (k.k2 as i128 * k.k2 as i128) as f64;
        self.a2() * s1 + s2
    }

    /// `|k|² - |q|²` with the integer parts differenced exactly before scaling.
    pub fn norm2_diff(&self, k: &LatticeVector, q: &LatticeVector) -> f64 {
        let d1 = k.k1 as i128 * k.k1 as i128 - q.k1 as i128 * q.k1 as i128;
        let d2 = k.k2 as i128 * k.k2 as i128 - q.k2 as i128 * q.k2 as i128;
        self.a2() * d1 as f64 + d2 as f64
    }

    /// Determinant of the physical wavevectors, `α (q1 r2 - q2 r1)`.
    pub fn det(&self, q: &LatticeVector, r: &LatticeVector) -> f64 {
        self.aspect * q.det(r) as f64
    }

    /// Inner product of the physical wavevectors.
    pub fn dot(&self, q: &LatticeVector, r: &LatticeVector) -> f64 {
        let d1 = (q.k1 as i128 * r.k1 as i128) as f64;
        let d2 = (q.k2 as i128 * r.k2 as i128) as f64;
        self.a2() * d1 + d2
    }
}

/// Kinetic-form interaction coefficient `A(q,r) = ½(|r|⁻² − |q|⁻²) det[q r]`
/// in the domain metric.
pub fn interaction_coeff(q: LatticeVector, r: LatticeVector, domain: &DomainSpec) -> Result<f64> {
    if q.is_zero() || r.is_zero() {
        return Err(Error::ZeroMode);
    }
    let nq = domain.norm2(&q);
    let nr = domain.norm2(&r);
    // (|q|² - |r|²) / (|q|²|r|²), differenced exactly
    let bracket = domain.norm2_diff(&q, &r) / (nq * nr);
    Ok(0.5 * bracket * domain.det(&q, &r))
}

/// Steady state `Ω_* = Γ e^{ip·x} + c.c.` (forced by `f = |p|² Ω_*`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleModeState {
    pub p: LatticeVector,
    pub gamma: Complex64,
}

impl SingleModeState {
    /// A zero amplitude is accepted so that the pure-Laplacian reference
    /// problem can be built; fiber recurrences refuse it.
    pub fn new(p: LatticeVector, gamma: Complex64) -> Result<Self> {
        if p.is_zero() {
            return Err(Error::ZeroMode);
        }
        if !(gamma.re.is_finite() && gamma.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        Ok(Self { p, gamma })
    }

    /// Fourier amplitude of the forcing at `p`.
    pub fn forcing(&self, domain: &DomainSpec) -> Complex64 {
        self.gamma * domain.norm2(&self.p)
    }

    pub fn phase(&self) -> f64 {
        self.gamma.arg()
    }
}

/// One invariant line `{k̂ + np}` of the linearized operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub khat: LatticeVector,
    pub state: SingleModeState,
    pub domain: DomainSpec,
    pub nu: f64,
}

impl FiberSpec {
    pub fn new(khat: LatticeVector, state: SingleModeState, domain: DomainSpec, nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::InvalidParameter(format!("viscosity must be >= 0, got {nu}")));
        }
        Ok(Self { khat, state, domain, nu })
    }

    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        Self::new(self.khat, self.state, self.domain, nu)
    }

    pub fn mode(&self, n: i64) -> LatticeVector {
        self.khat + n * self.state.p
    }

    pub fn mode_norm2(&self, n: i64) -> f64 {
        self.domain.norm2(&self.mode(n))
    }

    pub fn p_norm2(&self) -> f64 {
        self.domain.norm2(&self.state.p)
    }

    /// `a = ½|Γ| det[p k̂]` with physical wavevectors.
    pub fn coupling(&self) -> f64 {
        0.5 * self.state.gamma.norm() * self.domain.det(&self.state.p, &self.khat)
    }

    /// Whether mode `n` sits on the circle `|k| = |p|`.
    pub fn is_resonant(&self, n: i64) -> bool {
        let k = self.mode(n);
        let d = self.domain.norm2_diff(&k, &self.state.p);
        d.abs() <= 1e-14 * (self.domain.norm2(&k) + self.p_norm2())
    }

    /// `ρ_n = |p|⁻² − |k̂+np|⁻²`.
    pub fn rho(&self, n: i64) -> Result<f64> {
        let k = self.mode(n);
        if k.is_zero() {
            return Err(Error::ZeroMode);
        }
        if self.is_resonant(n) {
            return Ok(0.0);
        }
        let nk = self.domain.norm2(&k);
        Ok(self.domain.norm2_diff(&k, &self.state.p) / (nk * self.p_norm2()))
    }

    /// Limit `ã = lim a_n / (λ-dependence)` at ν = 0, i.e. `ã(λ) = |p|² λ / a`.
    pub fn atilde(&self, lambda: Complex64) -> Result<Complex64> {
        let a = self.coupling();
        if a == 0.0 {
            return Err(Error::Precondition("diagonal fiber has no recurrence".into()));
        }
        Ok(lambda * (self.p_norm2() / a))
    }
}

/// Recurrence coefficient `a_n = (a ρ_n)⁻¹ (λ + ν|k̂+np|²)`.
pub fn fiber_coefficient(fiber: &FiberSpec, lambda: Complex64, n: i64) -> Result<Complex64> {
    let a = fiber.coupling();
    if a == 0.0 {
        return Err(Error::Precondition("diagonal fiber has no recurrence".into()));
    }
    let rho = fiber.rho(n)?;
    if rho == 0.0 {
        return Err(Error::SingularFiber { n });
    }
    let nk = fiber.mode_norm2(n);
    Ok((lambda + fiber.nu * nk) / (a * rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberTag {
    OutsideDisc,
    Diagonal,
    DecoupledAtZero,
    ReducedSymmetric,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryKind {
    /// `a'_{-n} = a'_n`
    Even,
    /// `a'_{-(n+1)} = a'_n`
    Staggered,
}

/// Coefficient symmetry, stated for the shifted base point `k̂' = k̂ + shift·p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symmetry {
    pub kind: SymmetryKind,
    pub shift: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberClass {
    pub tag: FiberTag,
    pub symmetry: Option<Symmetry>,
    /// Index of the resonant mode for `DecoupledAtZero`.
    pub resonant_at: Option<i64>,
}

/// Case structure of a fiber. Priority: Diagonal, DecoupledAtZero,
/// OutsideDisc, ReducedSymmetric, General.
pub fn classify_fiber(khat: LatticeVector, state: &SingleModeState, domain: &DomainSpec) -> FiberClass {
    let p = state.p;
    if p.det(&khat) == 0 {
        return FiberClass { tag: FiberTag::Diagonal, symmetry: None, resonant_at: None };
    }
    let pp = domain.norm2(&p);
    let c = -domain.dot(&khat, &p) / pp;

    let t = 2.0 * c;
    let symmetry = if (t - t.round()).abs() <= 1e-9 {
        let t = t.round() as i64;
        if t.rem_euclid(2) == 0 {
            Some(Symmetry { kind: SymmetryKind::Even, shift: t / 2 })
        } else {
            Some(Symmetry { kind: SymmetryKind::Staggered, shift: (t + 1) / 2 })
        }
    } else {
        None
    };

    // |k_n|² ≥ |p|²(n - c)², so only |n - c| ≤ 1 can reach the disc.
    let lo = c.floor() as i64 - 2;
    let hi = c.ceil() as i64 + 2;
    let fiber = FiberSpec { khat, state: *state, domain: *domain, nu: 0.0 };
    let mut resonant_at = None;
    let mut inside = false;
    for n in lo..=hi {
        if fiber.is_resonant(n) {
            resonant_at.get_or_insert(n);
        } else if domain.norm2_diff(&fiber.mode(n), &p) < 0.0 {
            inside = true;
        }
    }
    let tag = if resonant_at.is_some() {
        FiberTag::DecoupledAtZero
    } else if !inside {
        FiberTag::OutsideDisc
    } else if symmetry.is_some() {
        FiberTag::ReducedSymmetric
    } else {
        FiberTag::General
    };
    FiberClass { tag, symmetry, resonant_at }
}

impl FiberSpec {
    pub fn classify(&self) -> FiberClass {
        classify_fiber(self.khat, &self.state, &self.domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq() -> DomainSpec {
        DomainSpec::square()
    }

    #[test]
    fn interaction_examples() {
        let v = LatticeVector::new;
        assert_eq!(interaction_coeff(v(1, 0), v(0, 1), &sq()).unwrap(), 0.0);
        assert!((interaction_coeff(v(1, 1), v(1, 0), &sq()).unwrap() + 0.25).abs() < 1e-16);
        assert_eq!(interaction_coeff(v(2, 0), v(2, 0), &sq()).unwrap(), 0.0);
        assert_eq!(interaction_coeff(v(0, 0), v(1, 0), &sq()), Err(Error::ZeroMode));
    }

    #[test]
    fn interaction_uses_physical_metric() {
        // q=(1,0), r=(0,1), α=0.5: |q|²=0.25, |r|²=1, det = 0.5
        let d = DomainSpec::new(0.5).unwrap();
        let a = interaction_coeff(LatticeVector::new(1, 0), LatticeVector::new(0, 1), &d).unwrap();
        assert!((a - 0.5 * (1.0 - 4.0) * 0.5).abs() < 1e-15);
    }

    #[test]
    fn shear_coefficient_example() {
        let state = SingleModeState::new(LatticeVector::new(0, 1), Complex64::new(0.5, 0.0)).unwrap();
        let f = FiberSpec::new(LatticeVector::new(-1, 0), state, DomainSpec::new(0.5).unwrap(), 0.244).unwrap();
        let a0 = fiber_coefficient(&f, Complex64::new(0.0, 0.0), 0).unwrap();
        assert!((a0.re + 8.0 / 3.0 * 0.061).abs() < 1e-14);
        assert!((a0.re + 0.16267).abs() < 1e-5);
    }

    #[test]
    fn resonant_mode_is_reported() {
        let state = SingleModeState::new(LatticeVector::new(1, 1), Complex64::new(0.5, 0.0)).unwrap();
        let f = FiberSpec::new(LatticeVector::new(-1, 1), state, sq(), 0.1).unwrap();
        assert_eq!(fiber_coefficient(&f, Complex64::new(0.1, 0.0), 0), Err(Error::SingularFiber { n: 0 }));
    }

    #[test]
    fn classification_examples() {
        let ex1 = SingleModeState::new(LatticeVector::new(0, 1), Complex64::new(0.5, 0.0)).unwrap();
        let ex2 = SingleModeState::new(LatticeVector::new(1, 1), Complex64::new(0.5, 0.0)).unwrap();
        let d07 = DomainSpec::new(0.7).unwrap();
        assert_eq!(classify_fiber(LatticeVector::new(0, 1), &ex1, &d07).tag, FiberTag::Diagonal);
        let c = classify_fiber(LatticeVector::new(-1, 1), &ex2, &sq());
        assert_eq!(c.tag, FiberTag::DecoupledAtZero);
        assert_eq!(c.resonant_at, Some(0));
        assert_eq!(classify_fiber(LatticeVector::new(-2, 0), &ex1, &d07).tag, FiberTag::OutsideDisc);
        let c = classify_fiber(LatticeVector::new(-1, 0), &ex1, &d07);
        assert_eq!(c.tag, FiberTag::ReducedSymmetric);
        assert_eq!(c.symmetry, Some(Symmetry { kind: SymmetryKind::Even, shift: 0 }));
        let c = classify_fiber(LatticeVector::new(0, 1), &ex2, &sq());
        assert_eq!(c.tag, FiberTag::ReducedSymmetric);
        assert_eq!(c.symmetry, Some(Symmetry { kind: SymmetryKind::Staggered, shift: 0 }));
        // (-1,3) contains (-1,0) at n = -3, which is inside the unit disc
        assert_eq!(classify_fiber(LatticeVector::new(-1, 3), &ex1, &d07).tag, FiberTag::ReducedSymmetric);
    }
}
