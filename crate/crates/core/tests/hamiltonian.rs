use isodyn::hamiltonian::poisson::{functional_gradient, poisson_bracket, sampled_flow};
use isodyn::hamiltonian::*;
use isodyn::lagrangian::{energy_momentum, four_momentum, Variant};
use isodyn::lattice::random::random_bandlimited;
use isodyn::lattice::sum::pairwise_sum;
use isodyn::lattice::{inner_divergence, AlgebraField, LatticeSpec};
use isodyn::IsoError;
use proptest::prelude::*;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn tiny() -> LatticeSpec {
    LatticeSpec { n1: 4, n2: 4, n3: 5, k_inner: 4, ..LatticeSpec::desk() }
}

fn state(spec: &LatticeSpec, seed: u64, max_mode: usize, amp: f64) -> AxialState {
    let f = |s| random_bandlimited(s, spec, max_mode, amp).unwrap();
    AxialState::new(vec![f(seed), f(seed + 1)], vec![f(seed + 2), f(seed + 3)]).unwrap()
}

fn rel(a: &AlgebraField, b: &AlgebraField) -> f64 {
    a.sub(b).norm() / b.norm()
}

#[test]
fn vacuum_is_static() {
    let spec = LatticeSpec::small();
    let mut s = AxialState::vacuum(&spec);
    assert_eq!(hamiltonian(&s).unwrap(), 0.0);
    let (da, dpi) = time_derivatives(&s).unwrap();
    assert!(da.iter().chain(&dpi).all(|f| f.norm() == 0.0));
    assert_eq!(solve_a0(&s).norm(), 0.0);
    assert_eq!(gauss_residual(&s).unwrap().norm(), 0.0);
    for scheme in [Scheme::Rk4, Scheme::Midpoint] {
        step(&mut s, scheme).unwrap();
        assert_eq!(s, {
            let mut v = AxialState::vacuum(&spec);
            v.t = s.t;
            v
        });
    }
}

#[test]
fn a0_on_a_dirichlet_eigenmode() {
    let spec = LatticeSpec { lambda: 1.3, ..LatticeSpec::small() };
    let s_amp = [0.7, -0.4];
    // divergence-free inner profile s(X) = (sin X², 0) ... scaled per component
    let prof = |m: usize, x: [f64; 3], xi: &[f64]| {
        let inner = if m == 0 { xi[1].sin() } else { xi[0].cos() };
        s_amp[m] * inner * (std::f64::consts::PI * x[2] / spec.l3).sin()
    };
    let src = AlgebraField::from_fn(&spec, prof);
    let a0 = solve_gauss(&src);
    let h = spec.h3();
    let fd = 4.0 / (h * h) * (std::f64::consts::PI * h / (2.0 * spec.l3)).sin().powi(2);
    let want_fd = src.scaled(-1.0 / (spec.lambda * fd));
    assert!(rel(&a0, &want_fd) < 1e-12, "{}", rel(&a0, &want_fd));
    let want = src.scaled(-(spec.l3 / std::f64::consts::PI).powi(2) / spec.lambda);
    // continuum answer differs by the FD eigenvalue ratio only
    let ratio = fd * (spec.l3 / std::f64::consts::PI).powi(2);
    assert!((rel(&a0, &want) - (1.0 / ratio - 1.0).abs()).abs() < 1e-10);
}

/// Dense Gaussian elimination on one Dirichlet column.
fn dense_poisson(rhs: &[f64], h: f64) -> Vec<f64> {
    let m = rhs.len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        a[i][i] = -2.0 / (h * h);
        if i > 0 {
            a[i][i - 1] = 1.0 / (h * h);
        }
        if i + 1 < m {
            a[i][i + 1] = 1.0 / (h * h);
        }
        a[i][m] = rhs[i];
    }
    for c in 0..m {
        let p = (c..m).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        for r in 0..m {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=m {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..m).map(|i| a[i][m] / a[i][i]).collect()
}

#[test]
fn abelian_a0_matches_dense_poisson() {
    let spec = LatticeSpec { lambda: 0.8, ..LatticeSpec::small() };
    // X-independent fields: only inner zero modes, divergence-free trivially
    let wave = |c: f64, k: f64| {
        move |m: usize, x: [f64; 3], _: &[f64]| {
            (c + m as f64) * (k * x[0] + x[1]).cos() * (x[2] / 2.0).sin() * (x[2] * 0.7).cos()
        }
    };
    let pi1 = AlgebraField::from_fn(&spec, wave(0.5, 1.0));
    let pi2 = AlgebraField::from_fn(&spec, wave(-0.2, 2.0));
    let mut s = AxialState::new(vec![AlgebraField::zeros(&spec), AlgebraField::zeros(&spec)], vec![pi1.clone(), pi2.clone()]).unwrap();
    s.refresh();
    let a0 = s.a0().unwrap();
    // independent source: analytic x-derivatives of the wave profiles
    let dsrc = |m: usize, x: [f64; 3]| {
        let p = |c: f64, k: f64, dk: f64| -(c + m as f64) * dk * (k * x[0] + x[1]).sin() * (x[2] / 2.0).sin() * (x[2] * 0.7).cos();
        p(0.5, 1.0, 1.0) + p(-0.2, 2.0, 1.0)
    };
    let h = spec.h3();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i1 in 0..spec.n1 {
        for i2 in [0, 3] {
            for m in 0..2 {
                let rhs: Vec<f64> = (1..spec.n3 - 1)
                    .map(|i3| {
                        let (x, _) = spec.coords(spec.index(i1, i2, i3, 0));
                        dsrc(m, x) / spec.lambda
                    })
                    .collect();
                let u = dense_poisson(&rhs, h);
                for (k, i3) in (1..spec.n3 - 1).enumerate() {
                    for q in 0..spec.inner_len() {
                        let got = a0.comps[m].values[spec.index(i1, i2, i3, q)];
                        worst = worst.max((got - u[k]).abs());
                        scale = scale.max(u[k].abs());
                    }
                }
            }
        }
    }
    assert!(scale > 0.1 && worst / scale < 1e-10, "{worst} {scale}");
}

#[test]
fn gauss_residual_after_refresh_and_with_zero_a0() {
    let spec = LatticeSpec::small();
    let s = state(&spec, 7, 2, 0.4);
    let r = gauss_residual(&s).unwrap().norm();
    assert!(r / gauss_scale(&s) < 1e-10);
    let zero = AlgebraField::zeros(&spec);
    let r0 = gauss_residual_with(&s, &zero);
    // with A₀ = 0 the residual is the projected source itself
    let mut lam_a0 = s.a0().unwrap().clone();
    lam_a0.scale(spec.lambda);
    let mut lap = AlgebraField::zeros(&spec);
    for (o, c) in lap.comps.iter_mut().zip(&lam_a0.comps) {
        isodyn::lattice::deriv::apply_x3(&spec, isodyn::lattice::deriv::Stencil3::Laplacian, &c.values, &mut o.values, 1.0, false);
    }
    assert!(rel(&r0, &lap) < 1e-12);
    assert!((r0.norm() - gauss_scale(&s)).abs() / gauss_scale(&s) < 1e-12);
    // the covariant form differs by a symmetric-strain term; it is reported, not zero
    let cov = gauss_residual_covariant(&s).unwrap().norm();
    assert!(cov.is_finite() && cov > 0.0);
}

#[test]
fn stale_cache_is_a_contract_violation() {
    let spec = LatticeSpec::small();
    let mut s = state(&spec, 3, 2, 0.3);
    s.field_mut(Slot::Pi(0)).scale(2.0);
    assert!(matches!(hamiltonian(&s), Err(IsoError::Contract(_))));
    assert!(matches!(time_derivatives(&s), Err(IsoError::Contract(_))));
    s.refresh();
    assert!(hamiltonian(&s).unwrap() > 0.0);
}

#[test]
fn h_equals_theta00_and_density_sum() {
    for (seed, lam) in [(1, 1.0), (5, 0.6), (9, 2.5)] {
        let spec = LatticeSpec { lambda: lam, ..LatticeSpec::small() };
        let s = state(&spec, seed, 3, 0.5);
        let h = hamiltonian(&s).unwrap();
        let th = energy_momentum(&axial_field_strength(&s).unwrap(), Variant::Improved, None).unwrap();
        let p0 = four_momentum(&th)[0];
        assert!((h - p0).abs() / h < 1e-10, "{h} {p0}");
        let dens = hamiltonian_density(&s).unwrap();
        let hd = pairwise_sum(&dens) * spec.cell_volume();
        assert!((h - hd).abs() / h < 1e-10);
    }
}

#[test]
fn time_derivatives_stay_in_the_algebra() {
    let spec = LatticeSpec::small();
    let s = state(&spec, 21, 3, 0.5);
    let (da, dpi) = time_derivatives(&s).unwrap();
    for f in da.iter().chain(&dpi) {
        assert!(inner_divergence(f).norm() / f.norm() < 1e-12);
        assert_eq!(f.comps[0].max_boundary_abs(), 0.0);
    }
}

#[test]
fn flow_matches_poisson_bracket_oracle_at_one_site() {
    let spec = LatticeSpec { lambda: 1.4, ..LatticeSpec::small() };
    let s = state(&spec, 31, 2, 0.4);
    let flows = sampled_flow(&s, &[(5, 1, 3)], 1e-6).unwrap();
    assert!(flows[0].rel_error() < 1e-6, "{}", flows[0].rel_error());
    assert!(sampled_flow(&s, &[(0, 0, 0)], 1e-6).is_err());
}

fn linear_functional(slot: Slot, profile: AlgebraField) -> impl Fn(&AxialState) -> isodyn::Result<f64> {
    move |s: &AxialState| {
        let spec = s.spec();
        let w = spec.inner_weight() * spec.cell_volume();
        Ok(w * pairwise_sum(&s.field(slot).dot_density(&profile)))
    }
}

#[test]
fn full_poisson_bracket_on_a_tiny_lattice() {
    let spec = LatticeSpec { lambda: 1.5, ..tiny() };
    let s = state(&spec, 41, 1, 0.4);
    let h = |st: &AxialState| hamiltonian(st);
    let hh = poisson_bracket(&s, h, h, 1e-6).unwrap();
    assert!(hh.abs() < 1e-9, "{hh}");
    let phi = random_bandlimited(77, &spec, 1, 1.0).unwrap();
    let chi = random_bandlimited(78, &spec, 1, 1.0).unwrap();
    let f = linear_functional(Slot::A(0), phi.clone());
    let g = linear_functional(Slot::Pi(0), chi.clone());
    let g2 = linear_functional(Slot::Pi(1), chi.clone());
    let w = spec.inner_weight() * spec.cell_volume();
    let overlap = w * pairwise_sum(&phi.dot_density(&chi));
    let fg = poisson_bracket(&s, &f, &g, 1e-3).unwrap();
    assert!((fg - overlap / spec.lambda).abs() < 1e-9 * overlap.abs().max(1.0), "{fg} {}", overlap / spec.lambda);
    assert!(poisson_bracket(&s, &f, &g2, 1e-3).unwrap().abs() < 1e-9);
    let gf = poisson_bracket(&s, &g, &f, 1e-3).unwrap();
    assert!((fg + gf).abs() < 1e-9);
    let fh = poisson_bracket(&s, &f, h, 1e-6).unwrap();
    let hf = poisson_bracket(&s, h, &f, 1e-6).unwrap();
    assert!((fh + hf).abs() < 1e-9);
    // {F, H} = ∫ φ·∂₀A₁
    let (da, _) = time_derivatives(&s).unwrap();
    let want = w * pairwise_sum(&phi.dot_density(&da[0]));
    assert!((fh - want).abs() / want.abs() < 1e-6, "{fh} {want}");
}

#[test]
fn gradient_of_a_linear_functional_is_its_profile() {
    let spec = tiny();
    let s = state(&spec, 51, 1, 0.3);
    let phi = random_bandlimited(52, &spec, 1, 1.0).unwrap();
    let g = functional_gradient(&s, linear_functional(Slot::Pi(1), phi.clone()), 1e-3).unwrap();
    assert!(rel(&g[3], &phi) < 1e-10);
    assert!(g[0].norm() == 0.0 && g[1].norm() == 0.0 && g[2].norm() == 0.0);
}

#[test]
fn rk4_local_error_is_fifth_order() {
    let base = LatticeSpec::small();
    let s0 = state(&base, 61, 2, 0.3);
    let err = |dt: f64| {
        let mut one = s0.clone();
        let mut two = s0.clone();
        set_dt(&mut one, dt);
        step(&mut one, Scheme::Rk4).unwrap();
        set_dt(&mut two, dt / 2.0);
        step(&mut two, Scheme::Rk4).unwrap();
        step(&mut two, Scheme::Rk4).unwrap();
        one.a()[0].sub(&two.a()[0]).norm() + one.pi()[0].sub(&two.pi()[0]).norm()
    };
    let ratio = err(0.02) / err(0.01);
    assert!(ratio > 25.0 && ratio < 40.0, "{ratio}");
}

fn set_dt(s: &mut AxialState, dt: f64) {
    let spec = LatticeSpec { dt, ..*s.spec() };
    let a: Vec<AlgebraField> = s.a().iter().map(|f| f.clone().with_spec(&spec)).collect();
    let pi: Vec<AlgebraField> = s.pi().iter().map(|f| f.clone().with_spec(&spec)).collect();
    let t = s.t;
    *s = AxialState::new(a, pi).unwrap();
    s.t = t;
}

#[test]
fn midpoint_energy_error_is_second_order_and_nonconvergence_is_reported() {
    let drift = |dt: f64, steps: usize| {
        let spec = LatticeSpec { dt, ..LatticeSpec::small() };
        let mut s = state(&spec, 71, 2, 0.3);
        let h0 = hamiltonian(&s).unwrap();
        for _ in 0..steps {
            let info = step(&mut s, Scheme::Midpoint).unwrap();
            assert!(info.iterations >= 1 && info.iterations <= MIDPOINT_MAX_ITER);
        }
        (hamiltonian(&s).unwrap() - h0).abs() / h0
    };
    let coarse = drift(8e-3, 2);
    let fine = drift(4e-3, 4);
    assert!(coarse < 1e-4 && (coarse / fine - 4.0).abs() < 1.0, "{coarse} {fine}");
    let mut bad = state(&LatticeSpec { dt: 5.0, ..LatticeSpec::small() }, 71, 3, 2.0);
    match step(&mut bad, Scheme::Midpoint) {
        Err(IsoError::Integration { iterations, .. }) => assert_eq!(iterations, MIDPOINT_MAX_ITER),
        other => panic!("expected integration error, got {other:?}"),
    }
}

#[test]
fn rk4_conserves_energy_over_a_short_run() {
    let spec = LatticeSpec::small();
    let mut s = state(&spec, 81, 3, 0.25);
    let h0 = hamiltonian(&s).unwrap();
    for _ in 0..20 {
        step(&mut s, Scheme::Rk4).unwrap();
    }
    assert!((hamiltonian(&s).unwrap() - h0).abs() / h0 < 1e-9);
    assert!((s.t - 0.02).abs() < 1e-15);
    let rec = diagnostics(&s, StepInfo::default()).unwrap();
    assert!(rec.gauss_residual_l2 < 1e-10 && rec.divfree_leak < 1e-12);
    assert!((rec.h - rec.p[0]).abs() / rec.h < 1e-10);
}

#[test]
fn nonlinearity_ratio_grows_with_amplitude() {
    let spec = LatticeSpec::small();
    let lo = nonlinearity_ratio(&state(&spec, 91, 2, 0.01)).unwrap();
    let hi = nonlinearity_ratio(&state(&spec, 91, 2, 0.1)).unwrap();
    assert!(lo < hi && (hi / lo - 10.0).abs() < 0.5, "{lo} {hi}");
    assert_eq!(nonlinearity_ratio(&AxialState::vacuum(&spec)).unwrap(), 0.0);
}

#[test]
fn shapes_are_checked() {
    let a = AlgebraField::zeros(&LatticeSpec::small());
    let b = AlgebraField::zeros(&tiny());
    assert!(AxialState::new(vec![a.clone(), b], vec![a.clone(), a.clone()]).is_err());
    assert!(AxialState::new(vec![a.clone()], vec![a.clone(), a]).is_err());
    let _ = TAU;
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn hamiltonian_is_nonnegative(seed in 0u64..1000, amp in 0.0f64..1.0) {
        let s = state(&tiny(), seed, 1, amp);
        prop_assert!(hamiltonian(&s).unwrap() >= 0.0);
    }
}
