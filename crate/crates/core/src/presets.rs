//! The three named steady states, their closed-form recurrence coefficients and
//! the analytic eigenvalue bounds available for them.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DomainSpec, FiberSpec, LatticeVector, SingleModeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    /// Shear `cos x₂` on `[0, 2π/α] × [0, 2π]`.
    Example1,
    /// `cos(x₁ + x₂)` on the square torus.
    Example2,
    /// `-(√2/π) cos 2x₂` on the square torus.
    Example3,
}

impl Example {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "example1" | "1" => Some(Example::Example1),
            "example2" | "2" => Some(Example::Example2),
            "example3" | "3" => Some(Example::Example3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Example::Example1 => "example1",
            Example::Example2 => "example2",
            Example::Example3 => "example3",
        }
    }

    pub fn state(self) -> SingleModeState {
        let (p, g) = match self {
            Example::Example1 => (LatticeVector::new(0, 1), 0.5),
            Example::Example2 => (LatticeVector::new(1, 1), 0.5),
            Example::Example3 => (LatticeVector::new(0, 2), -1.0 / (SQRT_2 * PI)),
        };
        SingleModeState { p, gamma: Complex64::new(g, 0.0) }
    }

    /// Only Example 1 uses a non-square domain.
    pub fn domain(self, alpha: f64) -> Result<DomainSpec> {
        match self {
            Example::Example1 => DomainSpec::new(alpha),
            _ => Ok(DomainSpec::square()),
        }
    }

    /// Fiber carrying the growing mode (real for 1 and 3, complex for 2).
    pub fn default_khat(self) -> LatticeVector {
        match self {
            Example::Example1 => LatticeVector::new(-1, 0),
            Example::Example2 => LatticeVector::new(0, 1),
            Example::Example3 => LatticeVector::new(1, 0),
        }
    }

    pub fn fiber(self, alpha: f64, khat: LatticeVector, nu: f64) -> Result<FiberSpec> {
        FiberSpec::new(khat, self.state(), self.domain(alpha)?, nu)
    }

    /// Closed-form `a_n` written out per example, independent of the generic
    /// kinetic-form route.
    pub fn closed_form_coefficient(
        self,
        alpha: f64,
        khat: LatticeVector,
        lambda: Complex64,
        nu: f64,
        n: i64,
    ) -> Complex64 {
        let (k1, k2) = (khat.k1 as f64, khat.k2 as f64);
        let n = n as f64;
        match self {
            Example::Example1 => {
                let s = (alpha * k1).powi(2) + (k2 + n).powi(2);
                (lambda + nu * s) * (-4.0 / (alpha * k1) * s / (s - 1.0))
            }
            Example::Example2 => {
                let s = (k1 + n).powi(2) + (k2 + n).powi(2);
                (lambda + nu * s) * (8.0 / (k2 - k1) * s / (s - 2.0))
            }
            Example::Example3 => {
                let s = k1 * k1 + (k2 + 2.0 * n).powi(2);
                (lambda + nu * s) * (-4.0 * SQRT_2 * PI * s / (k1 * (s - 4.0)))
            }
        }
    }
}

/// Open rectangle in the complex plane an eigenvalue is known to lie in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub source: String,
}

impl Certificate {
    fn real(lo: f64, hi: f64, source: &str) -> Self {
        Self { re: (lo, hi), im: (0.0, 0.0), source: source.into() }
    }

    /// Strict containment. A degenerate imaginary window `(0, 0)` means "real".
    pub fn contains(&self, lambda: Complex64) -> bool {
        let re_ok = self.re.0 < lambda.re && lambda.re < self.re.1;
        let im_ok = if self.im == (0.0, 0.0) {
            lambda.im.abs() <= 1e-12
        } else {
            self.im.0 < lambda.im && lambda.im < self.im.1
        };
        re_ok && im_ok
    }

    pub fn contains_real(&self, x: f64) -> bool {
        self.re.0 < x && x < self.re.1
    }
}

/// Upper end of the aspect-ratio range where the shear bounds hold.
pub fn alpha1() -> f64 {
    ((59.0f64 / 12.0).sqrt() - 1.5).sqrt()
}

/// Bounds on the positive shear eigenvalue λ(ν), valid for `α ∈ (1/2, α₁)`.
pub fn example1_lambda_bounds(alpha: f64, nu: f64) -> Option<Certificate> {
    if !(alpha > 0.5 && alpha < alpha1()) {
        return None;
    }
    let a2 = alpha * alpha;
    let hi_sq = a2 * (1.0 - a2) / (8.0 * (a2 + 1.0));
    let lo_sq = hi_sq - a2 * a2 * (a2 + 3.0) / (16.0 * (a2 + 1.0) * (a2 + 4.0));
    Some(Certificate::real(
        lo_sq.sqrt() - nu * (a2 + 1.0),
        hi_sq.sqrt() - nu * a2,
        "example1 lambda(nu)",
    ))
}

/// Bounds on the shear critical viscosity, `α ∈ [1/2, 0.95]`.
pub fn example1_nu_star_bounds(alpha: f64) -> Option<(f64, f64)> {
    if !(0.5..=0.95).contains(&alpha) {
        return None;
    }
    let a2 = alpha * alpha;
    let lo = (32.0 - 3.0 * a2.powi(3) - 17.0 * a2 * a2 - 16.0 * a2).sqrt() / (4.0 * (a2 + 1.0) * (a2 + 4.0));
    let hi = ((1.0 - a2) / 2.0).sqrt() / (2.0 * (a2 + 1.0));
    Some((lo, hi))
}

/// Window for the complex pair on the fiber through (0,1) of Example 2.
pub fn example2_pair_bounds(nu: f64) -> Certificate {
    let r = (3.0f64 / 5.0).sqrt();
    let re = if nu > 0.0 {
        (-nu, 0.25 * (3.0 / 20.0 + (8.0 * nu).powi(2)).sqrt() - 2.0 * nu)
    } else {
        (0.0, r / 16.0)
    };
    Certificate { re, im: ((1.0 - r) / 8.0, (1.0 + r) / 8.0), source: "example2 pair".into() }
}

/// Closed-form root of the quadratic model used to seed Newton for Example 2.
pub fn example2_seed(nu: f64) -> Complex64 {
    let inner = Complex64::new(1.4 + 16.0 * (8.0 * nu).powi(2), 64.0 * nu);
    Complex64::new(-3.0 * nu, 1.0 / 16.0) + inner.sqrt() / 16.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example3Brackets {
    pub nu_star: (f64, f64),
    pub lambda0: (f64, f64),
}

impl Example3Brackets {
    pub fn lambda_bounds(&self, nu: f64) -> Certificate {
        Certificate::real(self.lambda0.0 - 5.0 * nu, self.lambda0.1 - nu, "example3 lambda(nu)")
    }
}

/// Certified brackets for the real growing mode of Example 3 (fiber through (1,0)).
pub fn example3_thresholds() -> Example3Brackets {
    Example3Brackets {
        nu_star: ((89.0f64 / 34.0).sqrt() / (10.0 * PI), 3.0f64.sqrt() / (10.0 * PI)),
        lambda0: ((89.0f64 / 680.0).sqrt() / PI, (3.0f64 / 20.0).sqrt() / PI),
    }
}

/// Window for the complex pair on the fiber through (1,1) of Example 3.
pub fn example3_pair_bounds(nu: f64) -> Certificate {
    let d = 2.0 * 10.0f64.sqrt() * PI;
    let (s5, s3) = (5.0f64.sqrt(), 3.0f64.sqrt());
    let re_hi = (3.0f64 / 40.0).sqrt() / PI;
    let re = if nu > 0.0 { (-2.0 * nu, re_hi) } else { (0.0, re_hi) };
    Certificate { re, im: ((s5 - s3) / d, (s5 + s3) / d), source: "example3 pair".into() }
}

/// Which named example, if any, a fiber belongs to.
pub fn identify(fiber: &FiberSpec) -> Option<Example> {
    [Example::Example1, Example::Example2, Example::Example3]
        .into_iter()
        .find(|e| e.state() == fiber.state && (*e == Example::Example1 || fiber.domain.aspect == 1.0))
}

/// Analytic bound for the real growing eigenvalue, when one is known.
pub fn real_eigenvalue_certificate(fiber: &FiberSpec) -> Option<Certificate> {
    let k = fiber.khat;
    match identify(fiber)? {
        Example::Example1 if k.k1.abs() == 1 => example1_lambda_bounds(fiber.domain.aspect, fiber.nu),
        Example::Example3 if k.k1.abs() == 1 && k.k2.rem_euclid(2) == 0 => {
            Some(example3_thresholds().lambda_bounds(fiber.nu))
        }
        _ => None,
    }
}

/// Analytic window for a complex pair in the upper half plane, when one is known.
pub fn complex_pair_certificate(fiber: &FiberSpec) -> Option<Certificate> {
    let k = fiber.khat;
    match identify(fiber)? {
        Example::Example2 if (k.k2 - k.k1).abs() == 1 => Some(example2_pair_bounds(fiber.nu)),
        Example::Example3 if k.k1.abs() == 1 && k.k2.rem_euclid(2) == 1 => Some(example3_pair_bounds(fiber.nu)),
        _ => None,
    }
}

pub fn require_example1_alpha(alpha: f64) -> Result<()> {
    if (0.5..=0.95).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("alpha must lie in [0.5, 0.95], got {alpha}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_formulas_by_hand() {
        let c = example1_lambda_bounds(0.7, 0.01).unwrap();
        assert!((c.re.0 - 0.0997).abs() < 1e-4 && (c.re.1 - 0.1399).abs() < 1e-4);
        let c = example1_lambda_bounds(0.7, 0.0).unwrap();
        assert!((c.re.0 - 0.1146).abs() < 1e-4 && (c.re.1 - 0.1448).abs() < 1e-4);
        let (lo, hi) = example1_nu_star_bounds(0.5).unwrap();
        assert!((lo - 0.244029).abs() < 1e-6 && (hi - 0.244949).abs() < 1e-6);
        let (lo, hi) = example1_nu_star_bounds(0.95).unwrap();
        assert!((lo - 0.0329).abs() < 1e-4 && (hi - 0.058).abs() < 1e-4);
        assert!((alpha1() - 0.8469).abs() < 1e-4);
        assert!(example1_lambda_bounds(0.9, 0.01).is_none());
    }

    #[test]
    fn example3_brackets_by_hand() {
        let b = example3_thresholds();
        assert!((b.nu_star.0 - 0.051499).abs() < 1e-6 && (b.nu_star.1 - 0.055133).abs() < 1e-6);
        assert!((b.lambda0.0 - 0.115157).abs() < 1e-6);
        // (1/π)√(3/20) = 0.1232809; the six-digit figure 0.123272 often quoted is a slip
        assert!((b.lambda0.1 - 0.1232809).abs() < 1e-7);
    }

    #[test]
    fn example2_window_and_seed() {
        let c = example2_pair_bounds(0.05);
        assert!((c.im.0 - 0.0281754).abs() < 1e-7 && (c.im.1 - 0.2218246).abs() < 1e-7);
        let s = example2_seed(0.01);
        assert!((s.re - 0.04825).abs() < 1e-5 && (s.im - 0.07847).abs() < 1e-5);
    }
}
