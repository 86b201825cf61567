use std::f64::consts::PI;

use isodyn::algebra::{gauge_move, gauge_vary_scalar, lie_bracket, pullback_vector, GaugeParameter, VolumePreservingMap};
use isodyn::lagrangian::{
    action_density, bianchi_residual, bianchi_scale, covariant_derivative_scalar, covariant_derivative_vector,
    energy_momentum, eom_residual, field_strength, four_momentum, lagrangian, noether_current, FieldStrength,
    GaugeConfig, Placement, Variant,
};
use isodyn::lattice::{d_spatial, inner_divergence, random_bandlimited, rel_diff};
use isodyn::{AlgebraField, IsoError, LatticeSpec, ScalarField};

fn grid() -> LatticeSpec {
    LatticeSpec { n1: 8, n2: 8, n3: 5, k_inner: 16, ..LatticeSpec::desk() }
}

fn rnd(seed: u64, spec: &LatticeSpec, m: usize) -> AlgebraField {
    random_bandlimited(seed, spec, m, 1.0).unwrap()
}

fn random_config(seed: u64, spec: &LatticeSpec, m: usize, with_dot: bool) -> GaugeConfig {
    let a = (0..4).map(|mu| rnd(seed + mu, spec, m)).collect();
    let dot = with_dot.then(|| (0..4).map(|mu| rnd(seed + 10 + mu, spec, m)).collect());
    GaugeConfig::new(a, dot).unwrap()
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn field_strength_reductions() {
    let spec = grid();
    for c in field_strength(&GaugeConfig::zeros(&spec)).comps {
        assert_eq!(c.norm(), 0.0);
    }

    // X-independent: only the abelian curl survives
    let a1 = AlgebraField::from_fn(&spec, |m, x, _| [0.4, -0.3][m] * x[1].sin());
    let a2 = AlgebraField::from_fn(&spec, |m, x, _| [1.0, 0.5][m] * (2.0 * x[0]).cos());
    let z = AlgebraField::zeros(&spec);
    let a = GaugeConfig::new(vec![z.clone(), a1, a2, z], None).unwrap();
    let f = field_strength(&a);
    let want = AlgebraField::from_fn(&spec, |m, x, _| {
        [1.0, 0.5][m] * -2.0 * (2.0 * x[0]).sin() - [0.4, -0.3][m] * x[1].cos()
    });
    let (i12, _) = FieldStrength::slot(1, 2).unwrap();
    assert!(rel_diff(&f.comps[i12], &want) < 1e-13);
}

#[test]
fn field_strength_nonabelian_example() {
    let spec = grid();
    let g = |x: [f64; 3]| 1.0 + 0.5 * x[0].cos();
    let h = |x: [f64; 3]| (x[1]).sin() + 0.25;
    let a1 = AlgebraField::from_fn(&spec, |m, x, xx| if m == 0 { xx[1].sin() * g(x) } else { 0.0 });
    let a2 = AlgebraField::from_fn(&spec, |m, x, xx| if m == 1 { xx[0].sin() * h(x) } else { 0.0 });
    let z = AlgebraField::zeros(&spec);
    let a = GaugeConfig::new(vec![z.clone(), a1.clone(), a2.clone(), z], None).unwrap();
    let f = field_strength(&a);
    let (i12, _) = FieldStrength::slot(1, 2).unwrap();

    // g depends on x¹ and h on x², so ∂₁A₂ = ∂₂A₁ = 0 and only the bracket remains
    let want = AlgebraField::from_fn(&spec, |m, x, xx| {
        if m == 0 {
            -h(x) * g(x) * xx[0].sin() * xx[1].cos()
        } else {
            g(x) * h(x) * xx[0].cos() * xx[1].sin()
        }
    });
    assert!(rel_diff(&f.comps[i12], &want) < 1e-12);
    let br = lie_bracket(&a1, &a2).unwrap();
    assert!(rel_diff(&f.comps[i12], &br) < 1e-13);
}

#[test]
fn covariant_scalar_derivative() {
    let spec = grid();
    let psi = ScalarField::from_fn(&spec, |x, xx| x[0].sin() * (x[2] * 0.5).sin() * (xx[0] + xx[1]).cos());
    let zero = GaugeConfig::zeros(&spec);
    for mu in 1..4 {
        let d = covariant_derivative_scalar(&psi, &zero, mu, None).unwrap();
        assert_eq!(d, d_spatial(&psi, mu));
    }
    let a = random_config(1, &spec, 2, false);
    let flat = ScalarField::from_fn(&spec, |x, _| x[1].cos() * (x[2] * 0.5).sin());
    let d = covariant_derivative_scalar(&flat, &a, 2, None).unwrap();
    let plain = d_spatial(&flat, 2);
    let err: Vec<f64> = d.values.iter().zip(&plain.values).map(|(p, q)| p - q).collect();
    assert!(max_abs(&err) < 1e-13);

    assert!(matches!(covariant_derivative_scalar(&psi, &a, 0, None), Err(IsoError::Contract(_))));
    let dot = ScalarField::from_fn(&spec, |_, xx| xx[0].cos());
    let d0 = covariant_derivative_scalar(&psi, &zero, 0, Some(&dot)).unwrap();
    assert_eq!(d0, dot);
}

#[test]
fn covariant_scalar_derivative_is_covariant() {
    // E uniform along x³ so that the x³ stencil obeys the Leibniz rule
    let spec = grid();
    let a = random_config(20, &spec, 1, false);
    let psi = random_bandlimited(30, &spec, 1, 1.0).unwrap().comps[0].clone();
    let e = GaugeParameter::new(rnd(31, &spec, 1).uniform_in_x3(2));
    let dpsi = gauge_vary_scalar(&psi, &e).unwrap();
    let eps = [1e-2, 1e-3, 1e-4];
    for mu in 1..4 {
        let base = covariant_derivative_scalar(&psi, &a, mu, None).unwrap();
        let want = gauge_vary_scalar(&base, &e).unwrap();
        let mut res = Vec::new();
        for &ep in &eps {
            let moved = gauge_move(&a, &e, ep).unwrap();
            let mut p = psi.clone();
            for (v, d) in p.values.iter_mut().zip(&dpsi.values) {
                *v += ep * d;
            }
            let dm = covariant_derivative_scalar(&p, &moved, mu, None).unwrap();
            let r: f64 = dm
                .values
                .iter()
                .zip(&base.values)
                .zip(&want.values)
                .map(|((x, y), w)| (x - y - ep * w).powi(2))
                .sum::<f64>()
                .sqrt();
            res.push(r);
        }
        let slope = loglog_slope(&eps, &res);
        assert!(slope >= 1.9, "mu {mu}: slope {slope} {res:?}");
    }
}

#[test]
fn covariant_vector_derivative() {
    let spec = grid();
    let a = random_config(40, &spec, 2, false);
    let v = rnd(45, &spec, 2);
    let zero = GaugeConfig::zeros(&spec);
    for mu in 1..4 {
        let d = covariant_derivative_vector(&v, &zero, mu, None).unwrap();
        assert_eq!(d, isodyn::algebra::d_mu(&v, mu, None));
    }
    // v = A₁ against a configuration holding only A₁
    let mut only = GaugeConfig::zeros(&spec);
    only.a[1] = a.a[1].clone();
    let d = covariant_derivative_vector(&a.a[1], &only, 1, None).unwrap();
    assert!(rel_diff(&d, &isodyn::algebra::d_mu(&a.a[1], 1, None)) < 1e-15);

    for mu in 1..4 {
        let d = covariant_derivative_vector(&v, &a, mu, None).unwrap();
        assert!(inner_divergence(&d).norm() <= 1e-10 * d.norm());
    }
    assert!(matches!(covariant_derivative_vector(&v, &a, 0, None), Err(IsoError::Contract(_))));
}

#[test]
fn action_density_signs() {
    let spec = LatticeSpec { lambda: 1.3, ..grid() };
    let lam: f64 = 1.3;
    let c = [0.7, -0.2];
    let c2 = c[0] * c[0] + c[1] * c[1];
    let vol = (lam * spec.l_inner).powi(2);
    let field = AlgebraField::from_fn(&spec, |m, _, _| c[m]);

    assert!(action_density(&FieldStrength::zeros(&spec)).iter().all(|v| *v == 0.0));

    let mut f = FieldStrength::zeros(&spec);
    f.set(1, 2, field.clone(), Placement::Node);
    let want = -(lam * lam / 4.0) * 2.0 * c2 * vol;
    for v in action_density(&f) {
        assert!((v - want).abs() < 1e-12 * want.abs());
    }
    // (21) ordering stores the same component
    let mut g = FieldStrength::zeros(&spec);
    g.set(2, 1, field.scaled(-1.0), Placement::Node);
    assert_eq!(action_density(&g), action_density(&f));

    let mut f = FieldStrength::zeros(&spec);
    f.set(0, 1, field, Placement::Node);
    for v in action_density(&f) {
        assert!((v + want).abs() < 1e-12 * want.abs());
    }
}

#[test]
fn eom_on_an_abelian_plane_wave() {
    // A₂ = α cos(x¹ − t): a discrete solution because ∂₁ is exact on the mode
    let spec = grid();
    let alpha = [0.3, -0.8];
    let z = AlgebraField::zeros(&spec);
    let a2 = AlgebraField::from_fn(&spec, |m, x, _| alpha[m] * x[0].cos());
    let a2_dot = AlgebraField::from_fn(&spec, |m, x, _| alpha[m] * x[0].sin());
    let a = GaugeConfig::new(vec![z.clone(), z.clone(), a2, z.clone()], Some(vec![z.clone(), z.clone(), a2_dot, z.clone()])).unwrap();
    let f = field_strength(&a);
    // ∂₀F₀ν from the exact solution: F₀₂ = α sin(x¹ − t)
    let d0f02 = AlgebraField::from_fn(&spec, |m, x, _| -alpha[m] * x[0].cos());
    let d0f = vec![z.clone(), z.clone(), d0f02, z.clone()];
    let r = eom_residual(&a, &f, Some(&d0f));
    for rn in &r {
        assert!(rn.norm() <= 1e-10 * f.comps[1].norm(), "{}", rn.norm());
    }
    for rn in eom_residual(&GaugeConfig::zeros(&spec), &FieldStrength::zeros(&spec), None) {
        assert_eq!(rn.norm(), 0.0);
    }
}

#[test]
fn eom_splits_into_divergence_and_current() {
    let spec = grid();
    let a = random_config(50, &spec, 2, false);
    let f = field_strength(&a);
    let r = eom_residual(&a, &f, None);
    let j = noether_current(&a, &f);
    let lin = eom_residual(&GaugeConfig { a: vec![AlgebraField::zeros(&spec); 4], a_dot: None }, &f, None);
    for nu in 0..4 {
        let back = r[nu].sub(&lin[nu]);
        assert!(rel_diff(&back, &j[nu]) <= 1e-12, "nu {nu}");
    }
}

#[test]
fn noether_current_properties() {
    let spec = grid();
    let zero = GaugeConfig::zeros(&spec);
    for j in noether_current(&zero, &FieldStrength::zeros(&spec)) {
        assert_eq!(j.norm(), 0.0);
    }
    let flat = GaugeConfig::new(
        (0..4).map(|mu| AlgebraField::from_fn(&spec, |m, x, _| ((mu + m) as f64 + x[0]).sin() * (x[2] * 0.5).sin())).collect(),
        None,
    )
    .unwrap();
    for j in noether_current(&flat, &field_strength(&flat)) {
        assert!(j.comps.iter().all(|c| max_abs(&c.values) < 1e-13));
    }
    let a = random_config(60, &spec, 2, false);
    for j in noether_current(&a, &field_strength(&a)) {
        assert!(inner_divergence(&j).norm() <= 1e-10 * j.norm());
    }
}

#[test]
fn bianchi_identity() {
    let spec = grid();
    for (_, b) in bianchi_residual(&GaugeConfig::zeros(&spec), &FieldStrength::zeros(&spec)) {
        assert_eq!(b.norm(), 0.0);
    }

    // abelian: X-independent fields with time derivatives
    let flat = GaugeConfig::new(
        (0..4).map(|mu| AlgebraField::from_fn(&spec, |m, x, _| ((mu + 2 * m) as f64 + x[0] - x[1]).sin() * (x[2] * 0.5).sin())).collect(),
        Some((0..4).map(|mu| AlgebraField::from_fn(&spec, |m, x, _| ((mu * m) as f64 + 2.0 * x[1]).cos() * (x[2] * 0.5).sin())).collect()),
    )
    .unwrap();
    let f = field_strength(&flat);
    for (t, b) in bianchi_residual(&flat, &f) {
        assert!(b.norm() <= 1e-10 * bianchi_scale(&flat, &f, t), "{t:?}");
    }

    // nonabelian: the periodic triple (0, 1, 2) is exact up to roundoff
    for seed in [70, 80, 90] {
        let a = random_config(seed, &spec, 1, true);
        let f = field_strength(&a);
        for (t, b) in bianchi_residual(&a, &f) {
            let rel = b.norm() / bianchi_scale(&a, &f, t);
            if t == (0, 1, 2) {
                assert!(rel <= 1e-9, "{t:?}: {rel:e}");
            } else {
                // x³ finite differences break the Leibniz rule at O(h²)
                assert!(rel < 0.5, "{t:?}: {rel:e}");
            }
        }
    }
}

#[test]
fn energy_momentum_examples() {
    let spec = LatticeSpec { lambda: 0.8, ..grid() };
    let t = energy_momentum(&FieldStrength::zeros(&spec), Variant::Improved, None).unwrap();
    assert_eq!(four_momentum(&t), [0.0; 4]);

    let c = [0.5, 1.5];
    let mut f = FieldStrength::zeros(&spec);
    f.set(0, 1, AlgebraField::from_fn(&spec, |m, _, _| c[m]), Placement::Node);
    let t = energy_momentum(&f, Variant::Improved, None).unwrap();
    let want = 0.8f64.powi(2) * (c[0] * c[0] + c[1] * c[1]) / 2.0 * (0.8 * 2.0 * PI).powi(2);
    for v in &t.theta[0][0] {
        assert!((v - want).abs() < 1e-12 * want);
    }

    assert!(matches!(energy_momentum(&f, Variant::Canonical, None), Err(IsoError::Contract(_))));
}

#[test]
fn improved_tensor_is_invariant_under_isometric_catalog_maps() {
    let spec = grid();
    let a = random_config(100, &spec, 2, true);
    let f = field_strength(&a);
    let base = energy_momentum(&f, Variant::Improved, None).unwrap();
    for name in ["shift:0.4,1.3", "rot:1,2"] {
        let map = VolumePreservingMap::parse(name).unwrap();
        let moved = FieldStrength {
            comps: f.comps.iter().map(|c| pullback_vector(c, &map).unwrap()).collect(),
            placement: f.placement.clone(),
        };
        let t = energy_momentum(&moved, Variant::Improved, None).unwrap();
        for mu in 0..4 {
            for nu in 0..4 {
                let s = max_abs(&base.theta[mu][nu]).max(1e-300);
                let d: Vec<f64> = t.theta[mu][nu].iter().zip(&base.theta[mu][nu]).map(|(x, y)| x - y).collect();
                assert!(max_abs(&d) <= 1e-8 * s, "{name} ({mu},{nu})");
            }
        }
    }
}

#[test]
fn action_is_invariant_to_second_order_under_translations() {
    // Local inner translations E^N(x) are Killing for δ_MN; uniform along x³.
    let spec = grid();
    let a = random_config(110, &spec, 1, true);
    let e = AlgebraField::from_fn(&spec, |m, x, _| [0.7, -0.4][m] * (x[0] + m as f64).sin() + 0.3 * x[1].cos());
    let e = GaugeParameter::new(e);
    let s0 = lagrangian(&field_strength(&a));
    let eps = [1e-2, 1e-3, 1e-4];
    let ds: Vec<f64> = eps.iter().map(|&ep| lagrangian(&field_strength(&gauge_move(&a, &e, ep).unwrap())) - s0).collect();
    let slope = loglog_slope(&eps, &ds);
    assert!(slope >= 1.9, "slope {slope} {ds:?}");
}

#[test]
fn action_has_a_strain_term_under_generic_parameters() {
    // δS = Λ² ∫ F^M F^N ∂_N E^M at first order; nonzero unless E is Killing.
    let spec = grid();
    let a = random_config(120, &spec, 1, true);
    let e = GaugeParameter::new(rnd(130, &spec, 1).uniform_in_x3(2));
    let s0 = lagrangian(&field_strength(&a));
    let eps = [1e-2, 1e-3, 1e-4];
    let ds: Vec<f64> = eps.iter().map(|&ep| lagrangian(&field_strength(&gauge_move(&a, &e, ep).unwrap())) - s0).collect();
    let slope = loglog_slope(&eps, &ds);
    assert!((slope - 1.0).abs() < 0.1, "slope {slope} {ds:?}");
}
