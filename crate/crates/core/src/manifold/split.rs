//! Unstable/center/stable splitting of the even Galerkin operator, measured
//! semigroup constants and δ selection.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::galerkin::GalerkinSystem;
use super::Flavor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    Unstable,
    Center,
    Stable,
}

/// Set of subspaces as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SubspaceSet(u8);

impl SubspaceSet {
    pub const NONE: Self = Self(0);
    pub const ALL: Self = Self(7);

    pub fn of(zs: &[Subspace]) -> Self {
        Self(zs.iter().fold(0, |m, z| m | Self::bit(*z)))
    }

    fn bit(z: Subspace) -> u8 {
        match z {
            Subspace::Unstable => 1,
            Subspace::Center => 2,
            Subspace::Stable => 4,
        }
    }

    pub fn contains(self, z: Subspace) -> bool {
        self.0 & Self::bit(z) != 0
    }
}

/// One invariant block of the even operator, diagonalized.
#[derive(Debug, Clone)]
pub struct SpectralBlock {
    /// Even coordinates spanned by the block.
    pub idx: Vec<usize>,
    pub lambda: Vec<Complex64>,
    pub class: Vec<Subspace>,
    /// Right eigenvectors as columns.
    pub v: Array2<Complex64>,
    /// `v⁻¹`; its rows are the left eigenvectors.
    pub w: Array2<Complex64>,
}

/// Operator-norm constants measured on the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitConstants {
    /// `sup_{t≤0} ‖e^{tL}P^u‖_{ℓ→ℓ} e^{−μ_u t}`
    pub c_u: f64,
    /// as `c_u`, from `H^{ℓ−1}` to `H^ℓ`
    pub c_u_shift: f64,
    /// `sup_{t≥0} ‖e^{tL}P^s‖_{ℓ→ℓ} e^{βt}`
    pub c_s: f64,
    /// `sup_{t>0} ‖e^{tL}P^s‖_{ℓ−1→ℓ} (βt)^{1/2} e^{βt}`
    pub c_sm: f64,
    /// as `c_sm`, from `H^ℓ` to `H^{ℓ+1}`
    pub c_sm_up: f64,
    /// `sup_t ‖e^{tL}P^c‖_{ℓ−1→ℓ} e^{−ε|t|}`
    pub c_c: f64,
    /// `‖B(u,v)‖_{ℓ−1} ≤ C_B ‖u‖_ℓ ‖v‖_ℓ`
    pub c_b: f64,
    /// Lipschitz constant of the cut-off nonlinearity per unit δ.
    pub c_n: f64,
    /// `max ‖v‖_{ℓ+1}/‖v‖_ℓ` over unstable and center eigenvectors.
    pub bdd: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralSplitting {
    pub eps: f64,
    pub blocks: Vec<SpectralBlock>,
    pub m_u: usize,
    pub m_c: usize,
    pub m_s: usize,
    /// Unstable eigenvalue with the smallest real part.
    pub lambda_u1: Option<Complex64>,
    /// Stable eigenvalue with the largest real part.
    pub lambda_s1: Option<Complex64>,
    pub mu_u: f64,
    pub beta: f64,
    pub constants: SplitConstants,
    /// Largest `|λ|`.
    pub spectral_radius: f64,
    dim: usize,
    ell: i32,
    norm2: Vec<f64>,
}

fn components(a: &Array2<f64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for ((i, j), v) in a.indexed_iter() {
        if *v != 0.0 && i != j {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            parent[ri.max(rj)] = ri.min(rj);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_of[r] == usize::MAX {
            root_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_of[r]].push(i);
    }
    groups
}

fn classify(re: f64, eps: f64) -> Subspace {
    if re > eps {
        Subspace::Unstable
    } else if re < -eps {
        Subspace::Stable
    } else {
        Subspace::Center
    }
}

/// Default splitting threshold: a tenth of the smallest nonzero gap `|Re λ|`.
pub fn default_eps(values: &[Complex64]) -> f64 {
    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let floor = 1e-10 * scale;
    let mu0 = values.iter().filter(|z| z.re > floor).map(|z| z.re).fold(f64::INFINITY, f64::min);
    let beta0 = values.iter().filter(|z| z.re < -floor).map(|z| -z.re).fold(f64::INFINITY, f64::min);
    let g = mu0.min(beta0);
    if g.is_finite() {
        g / 10.0
    } else {
        floor
    }
}

/// Splits the even truncation. `eps = None` uses [`default_eps`].
pub fn spectral_split(sys: &GalerkinSystem, eps: Option<f64>) -> Result<SpectralSplitting> {
    let groups = components(&sys.lin_even);
    let mut blocks = Vec::with_capacity(groups.len());
    for idx in groups {
        let n = idx.len();
        let sub = Array2::from_shape_fn((n, n), |(i, j)| sys.lin_even[[idx[i], idx[j]]]);
        let (vals, vecs) = sub.eig()?;
        let w = vecs.inv()?;
        // conditioning of the eigenbasis
        let vn = vecs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(vn * wn < 1e10) {
            return Err(Error::DegenerateSplitting(format!("eigenbasis condition {:e}", vn * wn)));
        }
        blocks.push(SpectralBlock { idx, lambda: vals.to_vec(), class: Vec::new(), v: vecs, w });
    }
    let all: Vec<Complex64> = blocks.iter().flat_map(|b| b.lambda.iter().copied()).collect();
    let eps = match eps {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::InvalidParameter(format!("eps = {e}"))),
        None => default_eps(&all),
    };
    for z in &all {
        if (z.re.abs() - eps).abs() < eps / 2.0 {
            return Err(Error::Classification { re: z.re, eps });
        }
    }
    for b in &mut blocks {
        b.class = b.lambda.iter().map(|z| classify(z.re, eps)).collect();
    }
    let count = |s: Subspace| blocks.iter().flat_map(|b| b.class.iter()).filter(|c| **c == s).count();
    let (m_u, m_c, m_s) = (count(Subspace::Unstable), count(Subspace::Center), count(Subspace::Stable));
    let pick = |s: Subspace, better: fn(f64, f64) -> bool| {
        let mut best: Option<Complex64> = None;
        for b in &blocks {
            for (z, c) in b.lambda.iter().zip(&b.class) {
                if *c == s && best.is_none_or(|x| better(z.re, x.re) || (z.re == x.re && z.im > x.im)) {
                    best = Some(*z);
                }
            }
        }
        best
    };
    let lambda_u1 = pick(Subspace::Unstable, |a, b| a < b);
    let lambda_s1 = pick(Subspace::Stable, |a, b| a > b);
    let mu_u = lambda_u1.map_or(0.0, |z| z.re - eps);
    let beta = lambda_s1.map_or(0.0, |z| -z.re - eps);
    let spectral_radius = all.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut split = SpectralSplitting {
        eps,
        blocks,
        m_u,
        m_c,
        m_s,
        lambda_u1,
        lambda_s1,
        mu_u,
        beta,
        constants: SplitConstants::default(),
        spectral_radius,
        dim: sys.dim(),
        ell: sys.ell as i32,
        norm2: sys.norm2.clone(),
    };
    split.constants = split.measure_constants(sys);
    Ok(split)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

impl SpectralSplitting {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ell(&self) -> u32 {
        self.ell as u32
    }

    /// `H^s` norm of even coordinates.
    pub fn norm(&self, x: &Array1<f64>, s: i32) -> f64 {
        x.iter().zip(&self.norm2).map(|(v, n)| 2.0 * n.powi(s) * v * v).sum::<f64>().sqrt()
    }

    fn weight(&self, i: usize, s: i32) -> f64 {
        (2.0 * self.norm2[i].powi(s)).sqrt()
    }

    /// All eigenvalues in block order.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.blocks.iter().flat_map(|b| b.lambda.iter().copied()).collect()
    }

    /// Subspace label per eigen-coordinate, in block order.
    pub fn classes(&self) -> Vec<Subspace> {
        self.blocks.iter().flat_map(|b| b.class.iter().copied()).collect()
    }

    /// Eigen-coordinates `Wx`.
    pub fn to_eig(&self, x: &Array1<f64>) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.dim);
        for b in &self.blocks {
            for row in b.w.rows() {
                out.push(row.iter().zip(&b.idx).map(|(w, i)| w * x[*i]).sum());
            }
        }
        out
    }

    /// `Re(V y)`.
    pub fn from_eig(&self, y: &[Complex64]) -> Array1<f64> {
        let mut out = Array1::zeros(self.dim);
        let mut off = 0;
        for b in &self.blocks {
            let n = b.idx.len();
            for (r, i) in b.idx.iter().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    s += b.v[[r, c]] * y[off + c];
                }
                out[*i] = s.re;
            }
            off += n;
        }
        out
    }

    /// Spectral projection onto the subspaces in `set`.
    pub fn project(&self, set: SubspaceSet, x: &Array1<f64>) -> Array1<f64> {
        self.propagate(set, 0.0, x)
    }

    /// `e^{tL} P x` with `P` the projection onto `set`.
    pub fn propagate(&self, set: SubspaceSet, t: f64, x: &Array1<f64>) -> Array1<f64> {
        let classes = self.classes();
        let lam = self.eigenvalues();
        let y: Vec<Complex64> = self
            .to_eig(x)
            .into_iter()
            .enumerate()
            .map(|(i, z)| if set.contains(classes[i]) { z * (lam[i] * t).exp() } else { Complex64::new(0.0, 0.0) })
            .collect();
        self.from_eig(&y)
    }

    /// Dense matrix of `P` on the even coordinates.
    pub fn projection_matrix(&self, set: SubspaceSet) -> Array2<f64> {
        let mut p = Array2::zeros((self.dim, self.dim));
        for b in &self.blocks {
            let m = self.block_operator(b, set, 0.0, 0, 0);
            for (r, i) in b.idx.iter().enumerate() {
                for (c, j) in b.idx.iter().enumerate() {
                    p[[*i, *j]] = m[[r, c]];
                }
            }
        }
        p
    }

    /// `D_to Re(V e^{tΛ} 1_set W) D_from⁻¹` restricted to one block.
    fn block_operator(&self, b: &SpectralBlock, set: SubspaceSet, t: f64, s_from: i32, s_to: i32) -> Array2<f64> {
        let n = b.idx.len();
        let f: Vec<Complex64> = b
            .lambda
            .iter()
            .zip(&b.class)
            .map(|(l, c)| if set.contains(*c) { (l * t).exp() } else { Complex64::new(0.0, 0.0) })
            .collect();
        Array2::from_shape_fn((n, n), |(r, c)| {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..n {
                s += b.v[[r, k]] * f[k] * b.w[[k, c]];
            }
            s.re * self.weight(b.idx[r], s_to) / self.weight(b.idx[c], s_from)
        })
    }

    /// `‖e^{tL}P‖` from `H^{s_from}` to `H^{s_to}`; blocks are orthogonal in
    /// every `H^s`, so the norm is the largest block norm.
    pub fn semigroup_norm(&self, set: SubspaceSet, t: f64, s_from: i32, s_to: i32) -> Result<f64> {
        let mut best: f64 = 0.0;
        for b in &self.blocks {
            if !b.class.iter().any(|c| set.contains(*c)) {
                continue;
            }
            let m = self.block_operator(b, set, t, s_from, s_to);
            let (_, s, _) = m.svd(false, false)?;
            best = best.max(s.iter().copied().fold(0.0, f64::max));
        }
        Ok(best)
    }

    fn measure_constants(&self, sys: &GalerkinSystem) -> SplitConstants {
        let l = self.ell;
        let rho = self.spectral_radius.max(1e-12);
        let t_min = 1e-3 / rho;
        let mut c = SplitConstants { c_b: sys.bilinear_bound(), c_n: sys.cutoff_lipschitz(), ..Default::default() };
        let sup = |set: SubspaceSet, ts: &[f64], s_from: i32, s_to: i32, w: &dyn Fn(f64) -> f64| {
            let mut best: f64 = 0.0;
            for &t in ts {
                if let Ok(n) = self.semigroup_norm(set, t, s_from, s_to) {
                    best = best.max(n * w(t));
                }
            }
            best
        };
        let u = SubspaceSet::of(&[Subspace::Unstable]);
        let s = SubspaceSet::of(&[Subspace::Stable]);
        let cc = SubspaceSet::of(&[Subspace::Center]);
        if self.m_u > 0 {
            let mut ts: Vec<f64> = log_grid(t_min, 40.0 / self.mu_u.max(1e-12), 240).iter().map(|t| -t).collect();
            ts.push(0.0);
            let mu = self.mu_u;
            c.c_u = sup(u, &ts, l, l, &|t| (-mu * t).exp());
            c.c_u_shift = sup(u, &ts, l - 1, l, &|t| (-mu * t).exp());
        }
        if self.m_s > 0 {
            let beta = self.beta;
            let t_max = 30.0 / self.eps.min(beta).max(1e-12);
            let mut ts = log_grid(t_min, t_max, 320);
            ts.push(0.0);
            c.c_s = sup(s, &ts, l, l, &|t| (beta * t).exp());
            c.c_sm = sup(s, &ts, l - 1, l, &|t| (beta * t).sqrt() * (beta * t).exp());
            c.c_sm_up = sup(s, &ts, l, l + 1, &|t| (beta * t).sqrt() * (beta * t).exp());
        }
        if self.m_c > 0 {
            let eps = self.eps;
            let pos = log_grid(t_min, 30.0 / eps, 200);
            let mut ts: Vec<f64> = pos.iter().flat_map(|t| [*t, -*t]).collect();
            ts.push(0.0);
            c.c_c = sup(cc, &ts, l - 1, l, &|t| (-eps * t.abs()).exp());
        }
        let mut bdd: f64 = 0.0;
        for b in &self.blocks {
            for (k, cl) in b.class.iter().enumerate() {
                if *cl == Subspace::Stable {
                    continue;
                }
                let (mut hi, mut lo) = (0.0, 0.0);
                for (r, i) in b.idx.iter().enumerate() {
                    let a = b.v[[r, k]].norm_sqr();
                    hi += a * self.weight(*i, l + 1).powi(2);
                    lo += a * self.weight(*i, l).powi(2);
                }
                bdd = bdd.max((hi / lo).sqrt());
            }
        }
        c.bdd = bdd;
        c
    }

    /// Exponential rate of the trajectory weight for each flavor.
    pub fn default_rate(&self, flavor: Flavor) -> f64 {
        match flavor {
            Flavor::CenterStable => self.mu_u / 2.0,
            Flavor::Unstable => self.mu_u / 2.0,
            Flavor::Stable | Flavor::CenterUnstable => self.beta / 2.0,
            Flavor::Center => self.mu_u.min(self.beta) / 2.0,
        }
    }

    /// δ for any flavor: each present component's contraction bound is at most 1/6.
    pub fn delta_for(&self, flavor: Flavor, rate: f64) -> Result<f64> {
        let c = &self.constants;
        let (mu, beta, eps) = (self.mu_u, self.beta, self.eps);
        let cn = c.c_n;
        let sq = |x: f64| x.max(0.0).sqrt();
        let spi = std::f64::consts::PI.sqrt();
        // rate terms per component: unstable, center, stable
        let (tu, tc, ts) = match flavor {
            Flavor::CenterStable => (mu - rate, rate - eps, sq(beta) * sq(beta + rate) / spi),
            Flavor::Stable => (mu + rate, rate - eps, sq(beta) * sq(beta - rate) / spi),
            Flavor::Unstable => (mu - rate, rate - eps, sq(beta) * sq(beta + rate) / spi),
            Flavor::CenterUnstable => (mu + rate, rate - eps, sq(beta) * sq(beta - rate) / spi),
            Flavor::Center => (mu - rate, rate - eps, sq(beta) * sq(beta - rate) / spi),
        };
        let mut d = f64::INFINITY;
        if self.m_u > 0 {
            d = d.min(tu / (6.0 * cn * c.c_u_shift));
        }
        if self.m_c > 0 {
            d = d.min(tc / (6.0 * cn * c.c_c));
        }
        if self.m_s > 0 {
            d = d.min(ts / (6.0 * cn * c.c_sm));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::DegenerateSplitting(format!("delta = {d} for {flavor:?}")));
        }
        Ok(d)
    }
}

/// `min{(μ_u−γ)/(6C₁), (γ−ε)/(6C₂), √β/(6C₃)}`.
pub fn delta_formula(mu_u: f64, gamma: f64, eps: f64, beta: f64, c1: f64, c2: f64, c3: f64) -> f64 {
    ((mu_u - gamma) / (6.0 * c1)).min((gamma - eps) / (6.0 * c2)).min(beta.sqrt() / (6.0 * c3))
}

/// Center-stable δ from the measured constants, with
/// `C₁ = C_N c_u`, `C₂ = C_N c_c`, `C₃ = C_N c_sm √(π/(β+γ))`.
pub fn delta_from_constants(split: &SpectralSplitting, gamma: f64) -> Result<f64> {
    if !(gamma > split.mu_u / 4.0 && gamma < split.mu_u) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside (mu_u/4, mu_u) = ({}, {})", split.mu_u / 4.0, split.mu_u)));
    }
    split.delta_for(Flavor::CenterStable, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{DomainSpec, LatticeVector, SingleModeState};
    use crate::manifold::galerkin::build_galerkin;
    use crate::presets::Example;

    fn ex1(nu: f64, k: usize) -> (GalerkinSystem, SpectralSplitting) {
        let d = Example::Example1.domain(0.7).unwrap();
        let g = build_galerkin(&Example::Example1.state(), &d, nu, k, 3).unwrap();
        let s = spectral_split(&g, None).unwrap();
        (g, s)
    }

    #[test]
    fn plug_in_value() {
        assert!((delta_formula(1.0, 0.5, 0.0, 1.0, 1.0, 1.0, 1.0) - 1.0 / 12.0).abs() < 1e-15);
        // δ ∝ √β once that term is the smallest
        let a = delta_formula(1.0, 0.5, 0.0, 1e-4, 1.0, 1.0, 1.0);
        let b = delta_formula(1.0, 0.5, 0.0, 4e-4, 1.0, 1.0, 1.0);
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn example1_has_one_unstable_direction() {
        let (_, s) = ex1(0.05, 8);
        assert_eq!((s.m_u, s.m_c), (1, 0));
        assert!(s.lambda_u1.unwrap().im == 0.0 || s.lambda_u1.unwrap().im.abs() < 1e-12);
        let r = crate::presets::example1_lambda_bounds(0.7, 0.05).unwrap();
        assert!(r.contains_real(s.lambda_u1.unwrap().re));
        let d = delta_from_constants(&s, s.mu_u / 2.0).unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn projections_are_complementary() {
        let (_, s) = ex1(0.05, 4);
        let pu = s.projection_matrix(SubspaceSet::of(&[Subspace::Unstable]));
        let pc = s.projection_matrix(SubspaceSet::of(&[Subspace::Center]));
        let ps = s.projection_matrix(SubspaceSet::of(&[Subspace::Stable]));
        let n = s.dim();
        let id = Array2::<f64>::eye(n);
        let sum = &pu + &pc + &ps;
        assert!((&sum - &id).iter().all(|v| v.abs() < 1e-12));
        for (a, b) in [(&pu, &ps), (&ps, &pu), (&pu, &pc)] {
            assert!(a.dot(b).iter().all(|v| v.abs() < 1e-12));
        }
        assert!((pu.dot(&pu) - &pu).iter().all(|v| v.abs() < 1e-12));
        assert!((ps.dot(&ps) - &ps).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn pure_laplacian_is_trivial() {
        let st = SingleModeState::new(LatticeVector::new(0, 1), Complex64::new(0.0, 0.0)).unwrap();
        let g = build_galerkin(&st, &DomainSpec::square(), 0.1, 3, 3).unwrap();
        let s = spectral_split(&g, None).unwrap();
        assert_eq!((s.m_u, s.m_c), (0, 0));
        assert!((s.constants.c_s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn straddling_threshold_is_rejected() {
        let (g, s) = ex1(0.05, 4);
        let re = s.lambda_s1.unwrap().re.abs();
        assert!(matches!(spectral_split(&g, Some(re)), Err(Error::Classification { .. })));
    }
}
