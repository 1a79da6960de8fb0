use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortex_spectra::lattice::{DomainSpec, LatticeVector, SingleModeState};
use vortex_spectra::manifold::*;
use vortex_spectra::presets::{example1_lambda_bounds, Example};
use vortex_spectra::Error;

fn ex1(nu: f64, k: usize) -> (GalerkinSystem, SpectralSplitting) {
    let d = Example::Example1.domain(0.7).unwrap();
    let g = build_galerkin(&Example::Example1.state(), &d, nu, k, 3).unwrap();
    let s = spectral_split(&g, None).unwrap();
    (g, s)
}

const SCALES: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

fn plateau(r: &[f64]) -> bool {
    let (a, b) = (r[2], r[3]);
    (a - b).abs() <= 0.2 * a.max(b)
}

fn random_vec(rng: &mut ChaCha8Rng, g: &GalerkinSystem, radius: f64) -> Array1<f64> {
    let x = Array1::from_iter(g.norm2.iter().map(|n| rng.random_range(-1.0..1.0) / n.powi(2)));
    let scale = rng.random_range(0.0..radius) / g.norm(&x, 3);
    x * scale
}

#[test]
fn nonlinearity_is_quadratic_and_mean_free() {
    let (g, _) = ex1(0.05, 3);
    let x = Array1::from_iter((0..g.dim()).map(|i| (i as f64 + 1.0).recip()));
    // DN(0) = 0: N(hx)/h → 0 linearly in h
    let n1 = g.norm(&g.nonlinear(&(&x * 1e-3)), 2) / 1e-3;
    let n2 = g.norm(&g.nonlinear(&(&x * 1e-4)), 2) / 1e-4;
    assert!((n1 / n2 - 10.0).abs() < 1e-9);
    // mean-zero: no entry of the table targets k = 0
    assert!(g.quadratic.iter().all(|e| !e.k.is_zero()));
}

#[test]
fn zero_boundary_gives_zero_trajectory() {
    let (g, s) = ex1(0.05, 4);
    let gp = ChartParams::new(Flavor::CenterStable).gamma_params(&s).unwrap();
    let fp = gamma_map_iterate(&g, &s, &Array1::zeros(g.dim()), &gp).unwrap();
    assert!(fp.coords.iter().flatten().all(|z| z.norm() == 0.0));
    let chart = manifold_graph(&g, &s, &[Array1::zeros(g.dim())], &ChartParams::new(Flavor::CenterStable)).unwrap();
    assert!(chart.samples[0].graph.iter().all(|v| *v == 0.0));
    let r = invariance_residual(&chart, &g, &s, &Array1::zeros(g.dim()), 1.0).unwrap();
    assert_eq!(r.residual, 0.0);
}

#[test]
fn center_stable_chart_at_k8() {
    let (g, s) = ex1(0.05, 8);
    assert_eq!((s.m_u, s.m_c), (1, 0));
    let cp = ChartParams::new(Flavor::CenterStable);
    let gp = cp.gamma_params(&s).unwrap();
    let delta = delta_from_constants(&s, s.mu_u / 2.0).unwrap();
    assert_eq!(gp.delta, delta);
    let dir = base_direction(&g, &s, Flavor::CenterStable, 11).unwrap();
    let b = &dir * (delta / 2.0);
    let fp = gamma_map_iterate(&g, &s, &b, &gp).unwrap();
    for w in fp.distances.windows(2) {
        assert!(w[1] <= 0.5 * w[0] || w[1] < 1e-13 * fp.distances[0]);
    }
    assert!(fp.contraction <= 0.5);
    // Ω^u(0) equals the chart value
    let chart = manifold_graph(&g, &s, &[b.clone()], &cp).unwrap();
    let pu = s.project(SubspaceSet::of(&[Subspace::Unstable]), &fp.initial(&s));
    let h = Array1::from(chart.samples[0].graph.clone());
    assert!(g.norm(&(&pu - &h), 3) <= 1e-14 * g.norm(&h, 3).max(1e-300));
    let r = halving_ratios(&g, &s, &(&dir * delta), &SCALES, &gp).unwrap();
    assert!(plateau(&r), "{r:?}");
    let inv = invariance_residual(&chart, &g, &s, &(&dir * (delta / 4.0)), 1.0).unwrap();
    assert!(inv.residual <= 1e-6 && inv.exit_time.is_none(), "{inv:?}");
}

#[test]
fn unstable_chart_is_one_dimensional_and_backward_invariant() {
    let (g, s) = ex1(0.05, 8);
    let cp = ChartParams::new(Flavor::Unstable);
    let dir = base_direction(&g, &s, Flavor::Unstable, 5).unwrap();
    let gp = cp.gamma_params(&s).unwrap();
    let chart = manifold_graph(&g, &s, &[&dir * (gp.delta / 2.0)], &cp).unwrap();
    assert_eq!(chart.base_dim, 1);
    let inv = invariance_residual(&chart, &g, &s, &(&dir * (gp.delta / 4.0)), 1.0).unwrap();
    assert!(inv.checkpoints.iter().all(|t| *t < 0.0));
    assert!(inv.residual <= 1e-6, "{inv:?}");
}

#[test]
fn tangency_for_every_flavor() {
    let (g, s) = ex1(0.05, 4);
    for f in Flavor::ALL {
        let gp = ChartParams::new(f).gamma_params(&s).unwrap();
        match base_direction(&g, &s, f, 3) {
            Ok(dir) => {
                let r = halving_ratios(&g, &s, &(&dir * gp.delta), &SCALES, &gp).unwrap();
                assert!(plateau(&r), "{f:?} {r:?}");
            }
            // no center directions: the center manifold is the origin
            Err(Error::Precondition(_)) => assert_eq!((f, s.m_c), (Flavor::Center, 0)),
            Err(e) => panic!("{f:?}: {e}"),
        }
    }
}

#[test]
fn contraction_stays_below_bound_for_smaller_delta() {
    let (g, s) = ex1(0.05, 4);
    let gp0 = ChartParams::new(Flavor::CenterStable).gamma_params(&s).unwrap();
    let dir = base_direction(&g, &s, Flavor::CenterStable, 9).unwrap();
    for m in [1.0, 0.5, 0.1] {
        let mut gp = gp0;
        gp.delta *= m;
        let fp = gamma_map_iterate(&g, &s, &(&dir * (gp.delta / 2.0)), &gp).unwrap();
        assert!(fp.contraction <= 0.6);
    }
    // far outside the admissible radius the iteration refuses
    let mut gp = gp0;
    gp.delta *= 1e6;
    let r = gamma_map_iterate(&g, &s, &(&dir * (gp.delta / 2.0)), &gp);
    assert!(matches!(r, Err(Error::DeltaTooLarge { .. })), "{r:?}");
}

#[test]
fn boundary_outside_delta_is_rejected() {
    let (g, s) = ex1(0.05, 4);
    let gp = ChartParams::new(Flavor::CenterStable).gamma_params(&s).unwrap();
    let dir = base_direction(&g, &s, Flavor::CenterStable, 1).unwrap();
    assert!(gamma_map_iterate(&g, &s, &(&dir * (2.0 * gp.delta)), &gp).is_err());
}

#[test]
fn semigroup_bounds_on_random_vectors() {
    let (g, s) = ex1(0.05, 8);
    // frozen from the measurement at (ν, K, ℓ) = (0.05, 8, 3)
    let frozen = [(s.constants.c_s, 6.957918256862), (s.constants.c_sm_up, 8.321392633143098), (s.constants.c_u, 6.957918256861999)];
    for (got, want) in frozen {
        assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
    }
    let st = SubspaceSet::of(&[Subspace::Stable]);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let x = random_vec(&mut rng, &g, 1.0);
        let nx = g.norm(&x, 3);
        for j in 0..40 {
            let t = 0.01 * 1.3f64.powi(j);
            let y = s.propagate(st, t, &x);
            assert!(g.norm(&y, 3) <= s.constants.c_s * (-s.beta * t).exp() * nx * (1.0 + 1e-9));
            let bound = s.constants.c_sm_up * (s.beta * t).powf(-0.5) * (-s.beta * t).exp() * nx;
            assert!(g.norm(&y, 4) <= bound * (1.0 + 1e-9));
        }
    }
}

#[test]
fn cutoff_nonlinearity_is_lipschitz_in_the_3delta_ball() {
    let (g, s) = ex1(0.05, 6);
    let cn = s.constants.c_n;
    let cb = s.constants.c_b;
    let delta = 1e-3;
    let nd = |x: &Array1<f64>| g.nonlinear(x) * cutoff_chi(g.norm(x, 3) / delta);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_lip: f64 = 0.0;
    let mut worst_alg: f64 = 0.0;
    for _ in 0..300 {
        let x = random_vec(&mut rng, &g, 3.0 * delta);
        let y = random_vec(&mut rng, &g, 3.0 * delta);
        let dxy = g.norm(&(&x - &y), 3);
        let lhs = g.norm(&(nd(&x) - nd(&y)), 2);
        worst_lip = worst_lip.max(lhs / (delta * dxy));
        let alg = g.norm(&(g.nonlinear(&x) - g.nonlinear(&y)), 2);
        worst_alg = worst_alg.max(alg / ((g.norm(&x, 3) + g.norm(&y, 3)) * dxy));
    }
    assert!(worst_lip <= cn, "{worst_lip} > {cn}");
    assert!(worst_alg <= cb, "{worst_alg} > {cb}");
}

#[test]
fn slowest_rates_lie_in_their_windows() {
    for nu in [0.05, 0.01] {
        let (_, s) = ex1(nu, 8);
        let u1 = s.lambda_u1.unwrap().re;
        assert!(example1_lambda_bounds(0.7, nu).unwrap().contains_real(u1));
        let s1 = s.lambda_s1.unwrap().re;
        assert!(s1 >= -4.0 * nu - 1e-12 && s1 <= -nu + 1e-12, "{s1}");
    }
}

#[test]
fn zero_amplitude_sweep_is_refused() {
    let st = SingleModeState::new(LatticeVector::new(0, 1), num_complex::Complex64::new(0.0, 0.0)).unwrap();
    let r = size_scaling_sweep(&st, &DomainSpec::new(0.7).unwrap(), 4, 3, &[1e-2]);
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn two_point_center_stable_scaling() {
    let d = Example::Example1.domain(0.7).unwrap();
    let t = size_scaling_sweep(&Example::Example1.state(), &d, 8, 3, &[1e-2, 1e-3]).unwrap();
    let ratio = t.rows[0].delta_cs / t.rows[1].delta_cs;
    let s10 = 10f64.sqrt();
    assert!(ratio >= 0.5 * s10 && ratio <= 2.0 * s10, "delta_cs(1e-2)/delta_cs(1e-3) = {ratio}");
}
