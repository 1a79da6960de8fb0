//! Continued fractions of the fiber recurrence `a_n z_n + z_{n-1} - z_{n+1} = 0`,
//! its characteristic roots, the ν = 0 band and the matching functions whose
//! zeros are point eigenvalues.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::DD;
use crate::error::{Error, Result};
use crate::lattice::{fiber_coefficient, FiberSpec, FiberTag, SymmetryKind};

/// Minimum distance from the ν = 0 band at which evaluation is allowed.
pub const BAND_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CFParams {
    pub tol: f64,
    pub max_depth: usize,
    pub min_depth: usize,
    /// Evaluate real continued fractions in double-double arithmetic.
    pub compensated: bool,
}

impl Default for CFParams {
    fn default() -> Self {
        Self { tol: 1e-13, max_depth: 10_000, min_depth: 40, compensated: false }
    }
}

impl CFParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParameter(format!("tol must be in (0,1), got {}", self.tol)));
        }
        if self.min_depth == 0 || self.min_depth >= self.max_depth {
            return Err(Error::InvalidParameter("need 0 < min_depth < max_depth".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CFValue {
    pub value: Complex64,
    pub depth: usize,
    pub residual: f64,
}

/// Keeps a bottom-up recursion away from an exact zero denominator.
fn guard(t: Complex64) -> Complex64 {
    if t.norm() < 1e-300 {
        Complex64::new(1e-300, 0.0)
    } else {
        t
    }
}

/// `c_0 + 1/(c_1 + 1/(… + 1/(c_{d-1} + seed)))` over a coefficient slice.
fn fold(coefs: &[Complex64], depth: usize, seed: Complex64) -> Complex64 {
    let mut t = coefs[depth - 1] + seed;
    for c in coefs[..depth - 1].iter().rev() {
        t = *c + guard(t).inv();
    }
    t
}

fn fold_dd(coefs: &[Complex64], depth: usize, seed: f64) -> f64 {
    let mut t = DD::from_f64(coefs[depth - 1].re).add_f64(seed);
    for c in coefs[..depth - 1].iter().rev() {
        let d = if t.hi.abs() < 1e-300 { DD::from_f64(1e-300) } else { t };
        t = d.recip().add_f64(c.re);
    }
    t.to_f64()
}

/// Evaluates `T = c(s) + 1/(c(s+σ) + 1/(c(s+2σ) + …))` for `σ = ±1`.
///
/// Depth doubles from `min_depth` until two successive depths and two tail
/// seeds (0 and `1/c_D`) agree within `tol·max(1,|T|)`.
pub fn eval_tail<F>(coef: F, start: i64, step: i64, params: &CFParams) -> Result<CFValue>
where
    F: Fn(i64) -> Result<Complex64>,
{
    params.validate()?;
    let mut coefs: Vec<Complex64> = Vec::with_capacity(2 * params.min_depth + 1);
    let mut depth = params.min_depth;
    let mut prev: Option<Complex64> = None;
    let mut last_residual = f64::INFINITY;
    loop {
        while coefs.len() <= depth {
            let i = coefs.len() as i64;
            coefs.push(coef(start + step * i)?);
        }
        let real = params.compensated && coefs[..=depth].iter().all(|c| c.im == 0.0);
        let (v0, v1) = if real {
            let seed = 1.0 / coefs[depth].re;
            let seed = if seed.is_finite() { seed } else { 0.0 };
            (
                Complex64::new(fold_dd(&coefs, depth, 0.0), 0.0),
                Complex64::new(fold_dd(&coefs, depth, seed), 0.0),
            )
        } else {
            let seed = guard(coefs[depth]).inv();
            (fold(&coefs, depth, Complex64::new(0.0, 0.0)), fold(&coefs, depth, seed))
        };
        if !(v0.re.is_finite() && v0.im.is_finite()) {
            return Err(Error::NoConvergence { depth, residual: f64::NAN });
        }
        let scale = v0.norm().max(1.0);
        let seed_gap = (v0 - v1).norm();
        let residual = prev.map_or(f64::INFINITY, |p| (v0 - p).norm());
        last_residual = residual.max(seed_gap).min(last_residual.max(seed_gap));
        if seed_gap <= params.tol * scale && residual <= params.tol * scale {
            return Ok(CFValue { value: v0, depth, residual: residual.max(seed_gap) });
        }
        if depth >= params.max_depth {
            return Err(Error::NoConvergence { depth, residual: last_residual });
        }
        prev = Some(v0);
        depth = (2 * depth).min(params.max_depth);
    }
}

/// Fixed-depth version of [`eval_tail`] with tail seed 0.
pub fn eval_tail_depth<F>(coef: F, start: i64, step: i64, depth: usize) -> Result<Complex64>
where
    F: Fn(i64) -> Result<Complex64>,
{
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be >= 1".into()));
    }
    let coefs = (0..depth as i64).map(|i| coef(start + step * i)).collect::<Result<Vec<_>>>()?;
    Ok(fold(&coefs, depth, Complex64::new(0.0, 0.0)))
}

/// `w_n^{(1)} = c_{n-1} + 1/(c_{n-2} + …)` for an arbitrary coefficient source.
pub fn forward_with<F>(coef: F, n: i64, params: &CFParams) -> Result<CFValue>
where
    F: Fn(i64) -> Result<Complex64>,
{
    eval_tail(coef, n - 1, -1, params)
}

/// `w_n^{(2)} = −1/(c_n + 1/(c_{n+1} + …))` for an arbitrary coefficient source.
pub fn backward_with<F>(coef: F, n: i64, params: &CFParams) -> Result<CFValue>
where
    F: Fn(i64) -> Result<Complex64>,
{
    let t = eval_tail(coef, n, 1, params)?;
    let value = -guard(t.value).inv();
    let residual = t.residual / t.value.norm_sqr().max(1e-300);
    Ok(CFValue { value, depth: t.depth, residual })
}

/// Distance from `λ` to the segment `[−ib, ib]`.
pub fn segment_distance(lambda: Complex64, b: f64) -> f64 {
    let y = lambda.im.clamp(-b, b);
    Complex64::new(lambda.re, lambda.im - y).norm()
}

/// Refuses ν = 0 evaluations too close to the continuous band.
pub fn check_band_distance(fiber: &FiberSpec, lambda: Complex64) -> Result<()> {
    if fiber.nu > 0.0 || fiber.coupling() == 0.0 {
        return Ok(());
    }
    let b = continuous_band(fiber)?.hi;
    let d = segment_distance(lambda, b);
    if d < BAND_GUARD {
        return Err(Error::NearBand { distance: d });
    }
    Ok(())
}

fn fiber_coef(fiber: &FiberSpec, lambda: Complex64) -> impl Fn(i64) -> Result<Complex64> + '_ {
    move |n| fiber_coefficient(fiber, lambda, n)
}

pub fn eval_cf_forward(fiber: &FiberSpec, lambda: Complex64, n: i64, params: &CFParams) -> Result<CFValue> {
    check_band_distance(fiber, lambda)?;
    forward_with(fiber_coef(fiber, lambda), n, params)
}

pub fn eval_cf_backward(fiber: &FiberSpec, lambda: Complex64, n: i64, params: &CFParams) -> Result<CFValue> {
    check_band_distance(fiber, lambda)?;
    backward_with(fiber_coef(fiber, lambda), n, params)
}

/// Roots of `w² − ã w − 1 = 0`, larger modulus first. Equal moduli are
/// ordered by real part, then imaginary part, both descending.
pub fn char_roots(atilde: Complex64) -> (Complex64, Complex64) {
    let disc = (atilde * atilde + 4.0).sqrt();
    let r1 = (atilde + disc) * 0.5;
    let r2 = (atilde - disc) * 0.5;
    // the root without cancellation, the other by Vieta
    let big = if r1.norm() >= r2.norm() { r1 } else { r2 };
    let small = -big.inv();
    let (nb, ns) = (big.norm(), small.norm());
    if (nb - ns).abs() <= 4.0 * f64::EPSILON * nb {
        let key = |w: &Complex64| (w.re, w.im);
        let (x, y) = if key(&big) >= key(&small) { (big, small) } else { (small, big) };
        // exact ties on the unit circle: snap to the ordering convention
        if (x.re - y.re).abs() < 1e-15 && x.im < y.im {
            return (y, x);
        }
        return (x, y);
    }
    (big, small)
}

/// Segment `[lo·i, hi·i]` on the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

/// The ν = 0 band `{it : |ã(it)| ≤ 2}` with `ã = |p|²λ/a`.
pub fn continuous_band(fiber: &FiberSpec) -> Result<Band> {
    if fiber.nu != 0.0 {
        return Err(Error::Precondition("bands exist only at nu = 0".into()));
    }
    let a = fiber.coupling();
    if a == 0.0 {
        return Err(Error::Precondition("diagonal fiber has no band".into()));
    }
    let b = 2.0 * a.abs() / fiber.p_norm2();
    Ok(Band { lo: -b, hi: b })
}

/// Forms of the matching condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchingForm {
    /// `w_1^{(1)} − w_1^{(2)}`.
    GenericMch,
    /// `−b_0/2 − 1/(b_1 + 1/(b_2 + …))` with `b_n = a_{n+shift}`, for `b_{−n} = b_n`.
    ReducedHalfA0 { shift: i64 },
    /// `b_0 + 1/(b_1 + …) + sign·i` with `b_n = a_{n+shift}`, for `b_{−(n+1)} = b_n`.
    /// Upper half-plane eigenvalues are zeros of the `sign = +1` branch.
    PlusMinusI { sign: i8, shift: i64 },
    /// `a_{d+1} + 1/(a_{d+2} + …)` for a fiber split by the resonant mode `d`;
    /// equals `8(λ+4ν) + 1/(a_2 + …)` for the split fiber of Example 2.
    Decoupled8Lambda { at: i64 },
}

impl MatchingForm {
    /// The form matching a fiber's class.
    pub fn for_fiber(fiber: &FiberSpec) -> Result<Self> {
        let class = fiber.classify();
        match class.tag {
            FiberTag::Diagonal => Err(Error::Precondition("diagonal fiber has no matching function".into())),
            FiberTag::DecoupledAtZero => Ok(MatchingForm::Decoupled8Lambda { at: class.resonant_at.unwrap_or(0) }),
            FiberTag::ReducedSymmetric => match class.symmetry {
                Some(s) if s.kind == SymmetryKind::Even => Ok(MatchingForm::ReducedHalfA0 { shift: s.shift }),
                Some(s) => Ok(MatchingForm::PlusMinusI { sign: 1, shift: s.shift }),
                None => Ok(MatchingForm::GenericMch),
            },
            FiberTag::OutsideDisc | FiberTag::General => Ok(MatchingForm::GenericMch),
        }
    }

    fn check(&self, fiber: &FiberSpec) -> Result<()> {
        let class = fiber.classify();
        let ok = match *self {
            MatchingForm::GenericMch => class.tag != FiberTag::Diagonal,
            MatchingForm::ReducedHalfA0 { shift } => class
                .symmetry
                .is_some_and(|s| s.kind == SymmetryKind::Even && s.shift == shift),
            MatchingForm::PlusMinusI { sign, shift } => {
                (sign == 1 || sign == -1)
                    && class.symmetry.is_some_and(|s| s.kind == SymmetryKind::Staggered && s.shift == shift)
            }
            MatchingForm::Decoupled8Lambda { at } => fiber.is_resonant(at) && class.tag != FiberTag::Diagonal,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("matching form {self:?} does not fit fiber class {:?}", class.tag)))
        }
    }
}

/// Either an adaptive or a fixed-depth evaluation of a tail.
enum Depth {
    Adaptive(CFParams),
    Fixed(usize),
}

fn tail(fiber: &FiberSpec, lambda: Complex64, start: i64, step: i64, depth: &Depth) -> Result<Complex64> {
    match depth {
        Depth::Adaptive(p) => Ok(eval_tail(fiber_coef(fiber, lambda), start, step, p)?.value),
        Depth::Fixed(d) => eval_tail_depth(fiber_coef(fiber, lambda), start, step, *d),
    }
}

fn matching(fiber: &FiberSpec, lambda: Complex64, form: MatchingForm, depth: Depth) -> Result<Complex64> {
    form.check(fiber)?;
    check_band_distance(fiber, lambda)?;
    let a = |n| fiber_coefficient(fiber, lambda, n);
    match form {
        MatchingForm::GenericMch => {
            let w1 = tail(fiber, lambda, 0, -1, &depth)?;
            let t = tail(fiber, lambda, 1, 1, &depth)?;
            Ok(w1 + guard(t).inv())
        }
        MatchingForm::ReducedHalfA0 { shift } => {
            let t = tail(fiber, lambda, shift + 1, 1, &depth)?;
            Ok(-a(shift)? * 0.5 - guard(t).inv())
        }
        MatchingForm::PlusMinusI { sign, shift } => {
            let t = tail(fiber, lambda, shift + 1, 1, &depth)?;
            Ok(a(shift)? + guard(t).inv() + Complex64::new(0.0, sign as f64))
        }
        MatchingForm::Decoupled8Lambda { at } => {
            let t = tail(fiber, lambda, at + 2, 1, &depth)?;
            Ok(a(at + 1)? + guard(t).inv())
        }
    }
}

/// `F(ν, λ)` for the given form.
pub fn matching_fn(fiber: &FiberSpec, lambda: Complex64, form: MatchingForm, params: &CFParams) -> Result<Complex64> {
    matching(fiber, lambda, form, Depth::Adaptive(*params))
}

/// `F_N(ν, λ)`: every tail truncated after `depth` coefficients.
pub fn matching_fn_truncated(fiber: &FiberSpec, lambda: Complex64, form: MatchingForm, depth: usize) -> Result<Complex64> {
    matching(fiber, lambda, form, Depth::Fixed(depth))
}
