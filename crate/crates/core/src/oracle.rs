//! Truncated matrices of the linearized operator and dense eigen-extraction,
//! used as an independent check of the continued-fraction route.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use ndarray::{Array1, Array2};
use ndarray_linalg::Eig;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contfrac::{continuous_band, segment_distance, Band};
use crate::error::{Error, Result};
use crate::lattice::{classify_fiber, interaction_coeff, DomainSpec, FiberClass, FiberSpec, FiberTag, LatticeVector, SingleModeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    FiberTridiagonal,
    FullLatticeDense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberRecord {
    pub khat: LatticeVector,
    pub class: FiberClass,
}

/// Real matrix of the truncated linear operator.
///
/// For a real amplitude `Γ` the matrix acts on the Fourier coefficients
/// directly. For complex `Γ = |Γ|e^{iγ}` it acts on `u_k = e^{-i n(k) γ} ω_k`,
/// where `n(k)` is the position of `k` along its fiber; this similarity makes
/// every coupling real.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub kind: OperatorKind,
    pub matrix: Array2<f64>,
    pub mode_map: Vec<LatticeVector>,
    pub nu: f64,
    pub ell: Option<u32>,
    pub phase_normalized: bool,
    pub fibers: Vec<FiberRecord>,
    pub bands: Vec<Band>,
}

impl TruncatedOperator {
    pub fn dimension(&self) -> usize {
        self.mode_map.len()
    }

    pub fn index_of(&self, k: &LatticeVector) -> Option<usize> {
        self.mode_map.iter().position(|m| m == k)
    }
}

fn effective_gamma(state: &SingleModeState) -> (f64, bool) {
    if state.gamma.im == 0.0 {
        (state.gamma.re, false)
    } else {
        (state.gamma.norm(), true)
    }
}

fn coupling(q: LatticeVector, r: LatticeVector, domain: &DomainSpec) -> f64 {
    if q.is_zero() || r.is_zero() {
        0.0
    } else {
        interaction_coeff(q, r, domain).expect("nonzero modes")
    }
}

/// `(2N+1)×(2N+1)` tridiagonal matrix over `n ∈ [−N, N]` with hard truncation.
///
/// A zero mode on a diagonal fiber is kept as an inert row so that the
/// spectrum reads `−ν|k̂+np|²` over the full index range.
pub fn fiber_matrix(fiber: &FiberSpec, n: usize) -> Result<TruncatedOperator> {
    if n == 0 {
        return Err(Error::InvalidParameter("fiber truncation N must be >= 1".into()));
    }
    let n = n as i64;
    let dim = (2 * n + 1) as usize;
    let (g, phase) = effective_gamma(&fiber.state);
    let p = fiber.state.p;
    let mut m = Array2::<f64>::zeros((dim, dim));
    let mut modes = Vec::with_capacity(dim);
    for i in 0..dim {
        let j = i as i64 - n;
        let k = fiber.mode(j);
        modes.push(k);
        m[[i, i]] = -fiber.nu * fiber.mode_norm2(j);
        if i > 0 {
            m[[i, i - 1]] = coupling(p, fiber.mode(j - 1), &fiber.domain) * g;
        }
        if i + 1 < dim {
            m[[i, i + 1]] = coupling(-p, fiber.mode(j + 1), &fiber.domain) * g;
        }
    }
    let class = fiber.classify();
    let bands = if fiber.nu == 0.0 && class.tag != FiberTag::Diagonal {
        vec![continuous_band(fiber)?]
    } else {
        Vec::new()
    };
    Ok(TruncatedOperator {
        kind: OperatorKind::FiberTridiagonal,
        matrix: m,
        mode_map: modes,
        nu: fiber.nu,
        ell: None,
        phase_normalized: phase,
        fibers: vec![FiberRecord { khat: fiber.khat, class }],
        bands,
    })
}

/// Position of `k` along its fiber: `⌊k·p / p·p⌋` in integer arithmetic.
pub fn fiber_level(k: &LatticeVector, p: &LatticeVector) -> i64 {
    let dot = k.k1 as i128 * p.k1 as i128 + k.k2 as i128 * p.k2 as i128;
    let pp = p.k1 as i128 * p.k1 as i128 + p.k2 as i128 * p.k2 as i128;
    dot.div_euclid(pp) as i64
}

/// Representative of the fiber through `k` (the member at level 0).
pub fn fiber_representative(k: &LatticeVector, p: &LatticeVector) -> LatticeVector {
    *k - fiber_level(k, p) * *p
}

/// Modes `{k : 0 < |k|∞ ≤ K}` in lexicographic order.
pub fn lattice_modes(k_max: usize) -> Vec<LatticeVector> {
    let k = k_max as i64;
    let mut out = Vec::with_capacity((2 * k_max + 1).pow(2) - 1);
    for k1 in -k..=k {
        for k2 in -k..=k {
            if k1 != 0 || k2 != 0 {
                out.push(LatticeVector::new(k1, k2));
            }
        }
    }
    out
}

/// Dense operator on `{k : 0 < |k|∞ ≤ K}`. `ell` is carried as metadata.
pub fn full_matrix(state: &SingleModeState, domain: &DomainSpec, nu: f64, k_max: usize, ell: u32) -> Result<TruncatedOperator> {
    let p = state.p;
    if (k_max as i64) < p.sup_norm() + 1 {
        return Err(Error::Precondition(format!("need K >= |p|_inf + 1 = {}", p.sup_norm() + 1)));
    }
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::InvalidParameter(format!("viscosity must be >= 0, got {nu}")));
    }
    let modes = lattice_modes(k_max);
    let index: HashMap<LatticeVector, usize> = modes.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let (g, phase) = effective_gamma(state);
    let dim = modes.len();
    let mut m = Array2::<f64>::zeros((dim, dim));
    let mut reps = BTreeMap::new();
    for (i, k) in modes.iter().enumerate() {
        m[[i, i]] = -nu * domain.norm2(k);
        if let Some(&j) = index.get(&(*k - p)) {
            m[[i, j]] += coupling(p, *k - p, domain) * g;
        }
        if let Some(&j) = index.get(&(*k + p)) {
            m[[i, j]] += coupling(-p, *k + p, domain) * g;
        }
        let rep = fiber_representative(k, &p);
        reps.entry(rep).or_insert_with(|| classify_fiber(rep, state, domain));
    }
    let fibers = reps.into_iter().map(|(khat, class)| FiberRecord { khat, class }).collect();
    Ok(TruncatedOperator {
        kind: OperatorKind::FullLatticeDense,
        matrix: m,
        mode_map: modes,
        nu,
        ell: Some(ell),
        phase_normalized: phase,
        fibers,
        bands: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parabola {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub dimension: usize,
    pub nu: f64,
    /// Sorted by real part, then imaginary part, both descending.
    pub eigenvalues: Vec<Eigenvalue>,
    pub bands: Vec<Band>,
    pub classification: Vec<FiberRecord>,
    pub parabola: Option<Parabola>,
    /// Largest `‖(M−λ)v‖ / (‖M‖‖v‖)` over all eigenpairs.
    pub max_residual: f64,
}

impl SpectrumReport {
    /// Eigenvalues repeated by multiplicity.
    pub fn values(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity))
            .collect()
    }

    pub fn rightmost(&self) -> Option<Complex64> {
        self.eigenvalues.first().map(|e| e.value)
    }
}

fn cmp_desc(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

/// All eigenvalues of the operator, each verified by its residual.
pub fn eigen_all(op: &TruncatedOperator, tol: f64) -> Result<SpectrumReport> {
    let dim = op.dimension();
    if dim == 0 || dim > 4000 {
        return Err(Error::Precondition(format!("dimension {dim} outside 1..=4000")));
    }
    let (vals, vecs) = op.matrix.eig()?;
    let norm = op.matrix.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mc = op.matrix.mapv(|x| Complex64::new(x, 0.0));
    let mut max_residual: f64 = 0.0;
    for (i, lam) in vals.iter().enumerate() {
        let v: Array1<Complex64> = vecs.column(i).to_owned();
        let r = mc.dot(&v) - &v * *lam;
        let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let rel = rn / (norm * vn);
        if !(rel <= tol) {
            return Err(Error::Linalg(format!("eigenpair {i} not converged: residual {rel:e} > {tol:e}")));
        }
        max_residual = max_residual.max(rel);
    }
    let mut sorted: Vec<Complex64> = vals.to_vec();
    sorted.sort_by(cmp_desc);
    let merge = 1e-12 * norm.max(1.0);
    let mut eigenvalues: Vec<Eigenvalue> = Vec::new();
    for v in sorted {
        match eigenvalues.last_mut() {
            Some(e) if (e.value - v).norm() <= merge => e.multiplicity += 1,
            _ => eigenvalues.push(Eigenvalue { value: v, multiplicity: 1 }),
        }
    }
    Ok(SpectrumReport {
        dimension: dim,
        nu: op.nu,
        eigenvalues,
        bands: op.bands.clone(),
        classification: op.fibers.clone(),
        parabola: None,
        max_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaFit {
    pub a: f64,
    pub b: f64,
    pub pass: bool,
}

pub const PARABOLA_MIN_B: f64 = 1e-6;
const PARABOLA_BINS: usize = 20;

/// Fits `λ_r ≤ a − b λ_i²` over the report: least squares on the upper
/// envelope gives `b`, then `a` is raised to cover every eigenvalue and
/// inflated by 5%.
pub fn parabola_check(report: &SpectrumReport) -> Result<ParabolaFit> {
    if !(report.nu > 0.0) {
        return Err(Error::Precondition("parabolic region needs nu > 0".into()));
    }
    let vals = report.values();
    let imax = vals.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let mut env: Vec<Option<(f64, f64)>> = vec![None; PARABOLA_BINS];
    if imax > 0.0 {
        for z in &vals {
            let bin = ((z.im.abs() / imax) * (PARABOLA_BINS as f64 - 1e-9)) as usize;
            let pt = (z.im * z.im, z.re);
            env[bin] = Some(match env[bin] {
                Some(old) if old.1 >= pt.1 => old,
                _ => pt,
            });
        }
    }
    let pts: Vec<(f64, f64)> = env.into_iter().flatten().collect();
    let b0 = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 { -sxy / sxx } else { 0.0 }
    } else {
        0.0
    };
    let b = b0.max(PARABOLA_MIN_B);
    let a_raw = vals.iter().map(|z| z.re + b * z.im * z.im).fold(f64::NEG_INFINITY, f64::max);
    let a = if a_raw > 0.0 { 1.05 * a_raw } else { 1e-12 };
    let holds = vals.iter().all(|z| z.re <= a - b * z.im * z.im);
    Ok(ParabolaFit { a, b, pass: holds && a > 0.0 && a.is_finite() && b >= PARABOLA_MIN_B })
}

/// Hausdorff distance between a finite set and the segment `[−ib, ib]`.
pub fn hausdorff_to_segment(points: &[Complex64], b: f64) -> f64 {
    if points.is_empty() {
        return f64::INFINITY;
    }
    let d1 = points.iter().map(|z| segment_distance(*z, b)).fold(0.0, f64::max);
    let mut ys: Vec<f64> = vec![-b, b];
    let mut sorted: Vec<Complex64> = points.to_vec();
    sorted.sort_by(|x, y| x.im.total_cmp(&y.im));
    for w in sorted.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q.im > p.im {
            let y = (q.re * q.re - p.re * p.re + q.im * q.im - p.im * p.im) / (2.0 * (q.im - p.im));
            ys.push(y.clamp(-b, b));
        }
    }
    let grid = 2000;
    ys.extend((0..=grid).map(|i| -b + 2.0 * b * i as f64 / grid as f64));
    let d2 = ys
        .iter()
        .map(|&y| {
            let s = Complex64::new(0.0, y);
            points.iter().map(|z| (z - s).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    d1.max(d2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConvergence {
    pub band: Band,
    pub rows: Vec<(usize, f64)>,
    /// `None` for a single truncation level.
    pub non_increasing: Option<bool>,
}

/// Distance from truncated-matrix eigenvalues to the ν = 0 band for each `N`.
pub fn band_convergence(fiber: &FiberSpec, n_list: &[usize]) -> Result<BandConvergence> {
    if fiber.nu != 0.0 {
        return Err(Error::Precondition("band convergence needs nu = 0".into()));
    }
    if fiber.classify().tag != FiberTag::OutsideDisc {
        return Err(Error::Precondition("band convergence needs an OutsideDisc fiber".into()));
    }
    let band = continuous_band(fiber)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let rep = eigen_all(&fiber_matrix(fiber, n)?, 1e-8)?;
        rows.push((n, hausdorff_to_segment(&rep.values(), band.hi)));
    }
    let non_increasing = if rows.len() < 2 {
        None
    } else {
        Some(rows.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12)))
    };
    Ok(BandConvergence { band, rows, non_increasing })
}

/// Every eigenvalue with `|Re λ| > tol` has `λ̄`, `−λ`, `−λ̄` within `tol`.
pub fn quadruplet_check_values(values: &[Complex64], tol: f64) -> bool {
    let near = |t: Complex64| values.iter().any(|z| (z - t).norm() <= tol);
    values
        .iter()
        .filter(|z| z.re.abs() > tol)
        .all(|z| near(z.conj()) && near(-z) && near(-z.conj()))
}

pub fn quadruplet_check(report: &SpectrumReport, tol: f64) -> Result<bool> {
    if report.nu != 0.0 {
        return Err(Error::Precondition("quadruplet symmetry holds at nu = 0 only".into()));
    }
    Ok(quadruplet_check_values(&report.values(), tol))
}

/// Coordinate-format Matrix Market dump of the nonzero entries.
pub fn write_matrix_market<W: Write>(op: &TruncatedOperator, mut w: W) -> Result<()> {
    let dim = op.dimension();
    let nz: Vec<(usize, usize, f64)> = op
        .matrix
        .indexed_iter()
        .filter(|(_, v)| **v != 0.0)
        .map(|((i, j), v)| (i, j, *v))
        .collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "% kind {:?}, nu {:?}, phase normalized {}", op.kind, op.nu, op.phase_normalized)?;
    for (i, k) in op.mode_map.iter().enumerate() {
        writeln!(w, "% mode {} {} {}", i + 1, k.k1, k.k2)?;
    }
    writeln!(w, "{dim} {dim} {}", nz.len())?;
    for (i, j, v) in nz {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Example;

    #[test]
    fn diagonal_fiber_is_diagonal() {
        let f = Example::Example1.fiber(0.7, LatticeVector::new(0, 1), 0.1).unwrap();
        let op = fiber_matrix(&f, 5).unwrap();
        for ((i, j), v) in op.matrix.indexed_iter() {
            if i != j {
                assert_eq!(*v, 0.0);
            }
        }
        let rep = eigen_all(&op, 1e-12).unwrap();
        let mut got: Vec<f64> = rep.values().iter().map(|z| z.re).collect();
        got.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = (-5i64..=5).map(|n| -0.1 * ((n + 1) * (n + 1)) as f64).collect();
        want.sort_by(f64::total_cmp);
        assert_eq!(got, want);
    }

    #[test]
    fn rotation_generator() {
        let op = TruncatedOperator {
            kind: OperatorKind::FullLatticeDense,
            matrix: ndarray::arr2(&[[0.0, 1.0], [-1.0, 0.0]]),
            mode_map: vec![LatticeVector::new(1, 0), LatticeVector::new(0, 1)],
            nu: 0.0,
            ell: None,
            phase_normalized: false,
            fibers: vec![],
            bands: vec![],
        };
        let rep = eigen_all(&op, 1e-12).unwrap();
        let v = rep.values();
        assert!((v[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn laplacian_dimension_and_values() {
        let state = SingleModeState::new(LatticeVector::new(0, 1), Complex64::new(0.0, 0.0)).unwrap();
        let op = full_matrix(&state, &DomainSpec::square(), 1.0, 3, 3).unwrap();
        assert_eq!(op.dimension(), 48);
        let rep = eigen_all(&op, 1e-12).unwrap();
        let fit = parabola_check(&rep).unwrap();
        assert!(fit.pass);
        assert_eq!(fit.a, 1e-12);
        assert!(full_matrix(&state, &DomainSpec::square(), 1.0, 1, 3).is_err());
        let s2 = Example::Example3.state();
        assert!(full_matrix(&s2, &DomainSpec::square(), 1.0, 2, 3).is_err());
    }

    #[test]
    fn parabola_two_point_case() {
        let rep = SpectrumReport {
            dimension: 3,
            nu: 0.1,
            eigenvalues: vec![
                Eigenvalue { value: Complex64::new(1.0, 10.0), multiplicity: 1 },
                Eigenvalue { value: Complex64::new(1.0, -10.0), multiplicity: 1 },
                Eigenvalue { value: Complex64::new(-50.0, 0.0), multiplicity: 1 },
            ],
            bands: vec![],
            classification: vec![],
            parabola: None,
            max_residual: 0.0,
        };
        let fit = parabola_check(&rep).unwrap();
        assert!(fit.pass && fit.a >= 1.0 + 100.0 * fit.b);
        let mut r0 = rep.clone();
        r0.nu = 0.0;
        assert!(parabola_check(&r0).is_err());
    }

    #[test]
    fn quadruplets() {
        let q = [
            Complex64::new(0.1, 0.2),
            Complex64::new(0.1, -0.2),
            Complex64::new(-0.1, 0.2),
            Complex64::new(-0.1, -0.2),
        ];
        assert!(quadruplet_check_values(&q, 1e-12));
        assert!(!quadruplet_check_values(&q[..1], 1e-12));
    }

    #[test]
    fn matrix_market_header() {
        let f = Example::Example1.fiber(0.7, LatticeVector::new(-1, 0), 0.1).unwrap();
        let op = fiber_matrix(&f, 2).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&op, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general"));
        assert!(s.contains("\n5 5 13\n"));
    }

    #[test]
    fn hausdorff_simple() {
        let pts = [Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0)];
        assert!((hausdorff_to_segment(&pts, 1.0) - 1.0).abs() < 1e-12);
    }
}
