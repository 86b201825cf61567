//! Axial-gauge (A₃ = 0) constrained Hamiltonian dynamics.
//!
//! Canonical pairs are (A_i, Π_i) for i = 1, 2. A₀ is eliminated through the
//! Gauss law, solved column by column along x³. The right-hand side is the
//! exact Hamiltonian flow of the discrete energy, so energy conservation is
//! limited only by the integrator.

pub mod poisson;

use crate::algebra::{bracket_acc, bracket_adjoint_acc, InnerCurl};
use crate::error::{IsoError, Result};
use crate::lagrangian::{bianchi_residual, energy_momentum, four_momentum, FieldStrength, GaugeConfig, Placement, Variant};
use crate::lattice::deriv::{apply_spectral, apply_x3, solve_laplacian_x3, Axis, Stencil3};
use crate::lattice::project::{inner_divergence, inner_integral_slice, project_packed};
use crate::lattice::sum::pairwise_sum;
use crate::lattice::{AlgebraField, LatticeSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct AxialState {
    a: Vec<AlgebraField>,
    pi: Vec<AlgebraField>,
    a0: AlgebraField,
    fresh: bool,
    pub t: f64,
}

impl AxialState {
    pub fn new(a: Vec<AlgebraField>, pi: Vec<AlgebraField>) -> Result<Self> {
        if a.len() != 2 || pi.len() != 2 {
            return Err(IsoError::Shape("axial state needs A_1, A_2, Π_1, Π_2".into()));
        }
        for f in a.iter().chain(&pi) {
            a[0].check_same(f)?;
        }
        let a0 = AlgebraField::zeros(a[0].spec());
        let mut s = AxialState { a, pi, a0, fresh: false, t: 0.0 };
        s.refresh();
        Ok(s)
    }

    pub fn vacuum(spec: &LatticeSpec) -> Self {
        let z = AlgebraField::zeros(spec);
        AxialState { a: vec![z.clone(), z.clone()], pi: vec![z.clone(), z.clone()], a0: z, fresh: true, t: 0.0 }
    }

    pub fn spec(&self) -> &LatticeSpec {
        self.a[0].spec()
    }

    pub fn a(&self) -> &[AlgebraField] {
        &self.a
    }

    pub fn pi(&self) -> &[AlgebraField] {
        &self.pi
    }

    /// Resolved A₀; errors if the cache is stale.
    pub fn a0(&self) -> Result<&AlgebraField> {
        if !self.fresh {
            return Err(IsoError::Contract("A0 cache is stale; call refresh()".into()));
        }
        Ok(&self.a0)
    }

    pub fn is_fresh(&self) -> bool {
        self.fresh
    }

    /// Replaces the canonical fields and marks A₀ stale.
    pub fn set_fields(&mut self, a: Vec<AlgebraField>, pi: Vec<AlgebraField>) -> Result<()> {
        if a.len() != 2 || pi.len() != 2 {
            return Err(IsoError::Shape("axial state needs A_1, A_2, Π_1, Π_2".into()));
        }
        for f in a.iter().chain(&pi) {
            self.a[0].check_same(f)?;
        }
        self.a = a;
        self.pi = pi;
        self.fresh = false;
        Ok(())
    }

    pub fn refresh(&mut self) {
        if !self.fresh {
            self.a0 = solve_a0_fields(&self.a, &self.pi);
            self.fresh = true;
        }
    }

    /// Mutable access to one canonical field; marks A₀ stale.
    pub fn field_mut(&mut self, slot: Slot) -> &mut AlgebraField {
        self.fresh = false;
        match slot {
            Slot::A(i) => &mut self.a[i],
            Slot::Pi(i) => &mut self.pi[i],
        }
    }

    pub fn field(&self, slot: Slot) -> &AlgebraField {
        match slot {
            Slot::A(i) => &self.a[i],
            Slot::Pi(i) => &self.pi[i],
        }
    }

    /// Gauge configuration (A₀, A₁, A₂, 0) with velocities from Π.
    pub fn gauge_config(&self) -> Result<GaugeConfig> {
        let a0 = self.a0()?.clone();
        let spec = *self.spec();
        let (da, _) = rhs(&self.a, &self.pi, &a0, None, false);
        let z = AlgebraField::zeros(&spec);
        GaugeConfig::new(
            vec![a0, self.a[0].clone(), self.a[1].clone(), z.clone()],
            Some(vec![z.clone(), da[0].clone(), da[1].clone(), z]),
        )
    }
}

/// Canonical field selector; index i is 0-based (x¹ → 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    A(usize),
    Pi(usize),
}

fn spatial_axis(i: usize) -> Axis {
    if i == 0 {
        Axis::X1
    } else {
        Axis::X2
    }
}

/// `out += s ∂_i v` componentwise (i is 0-based).
fn acc_d(v: &AlgebraField, i: usize, s: f64, out: &mut AlgebraField) {
    let spec = *v.spec();
    for (o, c) in out.comps.iter_mut().zip(&v.comps) {
        apply_spectral(&spec, spatial_axis(i), &c.values, &mut o.values, s, true);
    }
}

fn acc_x3(v: &AlgebraField, st: Stencil3, s: f64, out: &mut AlgebraField) {
    let spec = *v.spec();
    for (o, c) in out.comps.iter_mut().zip(&v.comps) {
        apply_x3(&spec, st, &c.values, &mut o.values, s, true);
    }
}

/// Σ_i (∂_iΠ_i − ad†_{A_i} Π_i), unprojected: the Gauss source before
/// the x³ solve.
fn gauss_source(a: &[AlgebraField], pi: &[AlgebraField], curls: &[InnerCurl]) -> AlgebraField {
    let spec = *a[0].spec();
    let mut g = AlgebraField::zeros(&spec);
    for i in 0..2 {
        acc_d(&pi[i], i, 1.0, &mut g);
        bracket_adjoint_acc(&a[i], &curls[i], -1.0, &mut g);
    }
    g
}

fn curls(pi: &[AlgebraField]) -> Vec<InnerCurl> {
    pi.iter().map(InnerCurl::of).collect()
}

/// Λ Δ₃ A₀ = P g with Dirichlet planes.
fn solve_from_source(mut g: AlgebraField) -> AlgebraField {
    let spec = *g.spec();
    project_packed(&mut g, None);
    let mut a0 = AlgebraField::zeros(&spec);
    for (o, c) in a0.comps.iter_mut().zip(&g.comps) {
        solve_laplacian_x3(&spec, &c.values, &mut o.values);
        for v in o.values.iter_mut() {
            *v /= spec.lambda;
        }
    }
    a0
}

fn solve_a0_fields(a: &[AlgebraField], pi: &[AlgebraField]) -> AlgebraField {
    solve_from_source(gauss_source(a, pi, &curls(pi)))
}

/// A₀ from Λ ∂₃² A₀ = Σ_i 𝒟_i Π_i with homogeneous Dirichlet planes.
pub fn solve_a0(state: &AxialState) -> AlgebraField {
    solve_a0_fields(&state.a, &state.pi)
}

/// Solves Λ Δ₃ u = P s with u = 0 on the x³ planes.
pub fn solve_gauss(source: &AlgebraField) -> AlgebraField {
    solve_from_source(source.clone())
}

/// F₁₂ = ∂₁A₂ − ∂₂A₁ + [A₁, A₂].
pub fn f12(a: &[AlgebraField]) -> AlgebraField {
    let mut f = AlgebraField::zeros(a[0].spec());
    acc_d(&a[1], 0, 1.0, &mut f);
    acc_d(&a[0], 1, -1.0, &mut f);
    bracket_acc(&a[0], &a[1], 1.0, &mut f);
    f
}

fn forward3(v: &AlgebraField) -> AlgebraField {
    let mut o = AlgebraField::zeros(v.spec());
    acc_x3(v, Stencil3::Forward, 1.0, &mut o);
    o
}

/// Right-hand side given A₀. Returns (∂₀A_i, ∂₀Π_i).
fn rhs(
    a: &[AlgebraField],
    pi: &[AlgebraField],
    a0: &AlgebraField,
    pi_curls: Option<&[InnerCurl]>,
    with_pi: bool,
) -> (Vec<AlgebraField>, Vec<AlgebraField>) {
    let spec = *a0.spec();
    let lam = spec.lambda;
    let mut da = Vec::with_capacity(2);
    for i in 0..2 {
        // Π_i/Λ + ∂_iA₀ + [A_i, A₀]
        let mut d = pi[i].scaled(1.0 / lam);
        acc_d(a0, i, 1.0, &mut d);
        bracket_acc(&a[i], a0, 1.0, &mut d);
        da.push(d);
    }
    if !with_pi {
        return (da, Vec::new());
    }
    let owned;
    let pc = match pi_curls {
        Some(c) => c,
        None => {
            owned = curls(pi);
            &owned
        }
    };
    let f = f12(a);
    let cf = InnerCurl::of(&f);
    let mut dpi = Vec::with_capacity(2);
    for i in 0..2 {
        let j = 1 - i;
        // i = 0: Λ(Δ₃A₁ − ∂₂F₁₂ + ad†_{A₂}F₁₂) + ad†_{A₀}Π₁
        // i = 1: Λ(Δ₃A₂ + ∂₁F₁₂ − ad†_{A₁}F₁₂) + ad†_{A₀}Π₂
        let sgn = if i == 0 { 1.0 } else { -1.0 };
        let mut d = AlgebraField::zeros(&spec);
        acc_x3(&a[i], Stencil3::Laplacian, lam, &mut d);
        acc_d(&f, j, -sgn * lam, &mut d);
        bracket_adjoint_acc(&a[j], &cf, sgn * lam, &mut d);
        bracket_adjoint_acc(a0, &pc[i], 1.0, &mut d);
        dpi.push(d);
    }
    let (p0, p1) = dpi.split_at_mut(1);
    project_packed(&mut p0[0], Some(&mut p1[0]));
    for d in dpi.iter_mut() {
        d.enforce_dirichlet();
    }
    (da, dpi)
}

/// (∂₀A_i, ∂₀Π_i) for a state with a fresh A₀ cache.
pub fn time_derivatives(state: &AxialState) -> Result<(Vec<AlgebraField>, Vec<AlgebraField>)> {
    let a0 = state.a0()?;
    Ok(rhs(&state.a, &state.pi, a0, None, true))
}

/// ‖N‖/‖L‖ where the right-hand side splits into a part L linear in the
/// fields and the remainder N, with L taken from a scaled-down copy.
pub fn nonlinearity_ratio(state: &AxialState) -> Result<f64> {
    const EPS: f64 = 1e-4;
    let y: Fields = state.a.iter().chain(&state.pi).cloned().collect();
    let (full, _) = eval(&y);
    let small: Fields = y.iter().map(|f| f.scaled(EPS)).collect();
    let (lin, _) = eval(&small);
    let lin: Fields = lin.iter().map(|f| f.scaled(1.0 / EPS)).collect();
    let diff: Fields = full.iter().zip(&lin).map(|(a, b)| a.sub(b)).collect();
    let l = norm_all(&lin);
    if l == 0.0 {
        return Ok(0.0);
    }
    Ok(norm_all(&diff) / l)
}

/// Σ_{k=1..3} (∂_kΠ_k − ad†_{A_k}Π_k) with Π₃ = −Λ∂₃A₀, A₃ = 0, at interior nodes.
pub fn gauss_residual(state: &AxialState) -> Result<AlgebraField> {
    Ok(gauss_residual_with(state, state.a0()?))
}

/// Gauss residual for an arbitrary A₀.
pub fn gauss_residual_with(state: &AxialState, a0: &AlgebraField) -> AlgebraField {
    let mut g = gauss_source(&state.a, &state.pi, &curls(&state.pi));
    project_packed(&mut g, None);
    acc_x3(a0, Stencil3::Laplacian, -state.spec().lambda, &mut g);
    g.enforce_dirichlet();
    g
}

/// Gauss law in the covariant form Σ_k (∂_kΠ_k + A_k·∇Π_k − Π_k·∇A_k),
/// reported for comparison with the Euler-Lagrange form used by the solver.
pub fn gauss_residual_covariant(state: &AxialState) -> Result<AlgebraField> {
    let a0 = state.a0()?;
    let spec = *state.spec();
    let mut g = AlgebraField::zeros(&spec);
    for i in 0..2 {
        acc_d(&state.pi[i], i, 1.0, &mut g);
        bracket_acc(&state.a[i], &state.pi[i], 1.0, &mut g);
    }
    acc_x3(a0, Stencil3::Laplacian, -spec.lambda, &mut g);
    g.enforce_dirichlet();
    Ok(g)
}

/// Norm of the Gauss source, the scale for relative residuals.
pub fn gauss_scale(state: &AxialState) -> f64 {
    let mut g = gauss_source(&state.a, &state.pi, &curls(&state.pi));
    project_packed(&mut g, None);
    g.enforce_dirichlet();
    g.norm()
}

/// Per-site energy contributions (weights included) for given fields.
/// Link terms are split evenly between their two end nodes.
pub fn energy_contributions(a: &[AlgebraField], pi: &[AlgebraField], a0: &AlgebraField) -> Vec<f64> {
    let spec = *a0.spec();
    let n = spec.len();
    let lam2 = spec.lambda * spec.lambda;
    let w = spec.inner_weight() * spec.cell_volume();
    let f = f12(a);
    let mut node = vec![0.0; n];
    for i in 0..2 {
        for c in &pi[i].comps {
            for (o, v) in node.iter_mut().zip(&c.values) {
                *o += 0.5 * v * v;
            }
        }
    }
    for c in &f.comps {
        for (o, v) in node.iter_mut().zip(&c.values) {
            *o += 0.5 * lam2 * v * v;
        }
    }
    let mut link = vec![0.0; n];
    for v in [forward3(&a[0]), forward3(&a[1]), forward3(a0)] {
        for c in &v.comps {
            for (o, x) in link.iter_mut().zip(&c.values) {
                *o += 0.5 * lam2 * x * x;
            }
        }
    }
    let link_nodes = crate::lagrangian::link_products_to_nodes(&spec, &link);
    node.iter().zip(&link_nodes).map(|(x, y)| w * (x + y)).collect()
}

/// H ≥ 0 with A₀ from the Gauss law.
pub fn hamiltonian(state: &AxialState) -> Result<f64> {
    let a0 = state.a0()?;
    Ok(pairwise_sum(&energy_contributions(&state.a, &state.pi, a0)))
}

/// Hamiltonian density in the Legendre form
/// ΛΠ·𝒟A₀ + ½Π² + (Λ²/2)F₁₂² + (Λ²/2)(∂₃A_i)² − (Λ²/2)(∂₃A₀)², inner-integrated
/// per spatial site. Its spatial sum equals H.
pub fn hamiltonian_density(state: &AxialState) -> Result<Vec<f64>> {
    let a0 = state.a0()?;
    let spec = *state.spec();
    let n = spec.len();
    let lam = spec.lambda;
    let lam2 = lam * lam;
    let f = f12(&state.a);
    let mut node = vec![0.0; n];
    for i in 0..2 {
        let mut cov = AlgebraField::zeros(&spec);
        acc_d(a0, i, 1.0, &mut cov);
        bracket_acc(&state.a[i], a0, 1.0, &mut cov);
        let p = state.pi[i].dot_density(&cov);
        let q = state.pi[i].dot_density(&state.pi[i]);
        for k in 0..n {
            node[k] += lam * p[k] + 0.5 * q[k];
        }
    }
    let ff = f.dot_density(&f);
    for k in 0..n {
        node[k] += 0.5 * lam2 * ff[k];
    }
    let mut link = vec![0.0; n];
    for (v, s) in [(forward3(&state.a[0]), 1.0), (forward3(&state.a[1]), 1.0), (forward3(a0), -1.0)] {
        let p = v.dot_density(&v);
        for k in 0..n {
            link[k] += s * 0.5 * lam2 * p[k];
        }
    }
    let ln = crate::lagrangian::link_products_to_nodes(&spec, &link);
    let dens: Vec<f64> = node.iter().zip(&ln).map(|(x, y)| x + y).collect();
    Ok(inner_integral_slice(&spec, &dens))
}

/// Field strength of an axial state: F_0i = Π_i/Λ, F_12 at nodes and the
/// x³ components F_03 = −∂₃A₀, F_i3 = −∂₃A_i on links.
pub fn axial_field_strength(state: &AxialState) -> Result<FieldStrength> {
    let a0 = state.a0()?;
    let spec = *state.spec();
    let lam = spec.lambda;
    let mut f = FieldStrength::zeros(&spec);
    f.set(0, 1, state.pi[0].scaled(1.0 / lam), Placement::Node);
    f.set(0, 2, state.pi[1].scaled(1.0 / lam), Placement::Node);
    f.set(0, 3, forward3(a0).scaled(-1.0), Placement::Link3);
    f.set(1, 2, f12(&state.a), Placement::Node);
    f.set(1, 3, forward3(&state.a[0]).scaled(-1.0), Placement::Link3);
    f.set(2, 3, forward3(&state.a[1]).scaled(-1.0), Placement::Link3);
    Ok(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    Midpoint,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rk4" => Ok(Scheme::Rk4),
            "midpoint" => Ok(Scheme::Midpoint),
            _ => Err(format!("unknown scheme '{s}' (rk4|midpoint)")),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Rk4 => "rk4",
            Scheme::Midpoint => "midpoint",
        })
    }
}

pub const MIDPOINT_TOL: f64 = 1e-12;
pub const MIDPOINT_MAX_ITER: usize = 50;

type Fields = Vec<AlgebraField>;

fn eval(y: &[AlgebraField]) -> (Fields, AlgebraField) {
    let (a, pi) = y.split_at(2);
    let c = curls(pi);
    let a0 = solve_from_source(gauss_source(a, pi, &c));
    let (da, dpi) = rhs(a, pi, &a0, Some(&c), true);
    (da.into_iter().chain(dpi).collect(), a0)
}

fn combine(y: &[AlgebraField], s: f64, k: &[AlgebraField]) -> Fields {
    y.iter()
        .zip(k)
        .map(|(a, b)| {
            let mut o = a.clone();
            o.axpy(s, b);
            o
        })
        .collect()
}

fn norm_all(y: &[AlgebraField]) -> f64 {
    y.iter().map(|f| f.norm().powi(2)).sum::<f64>().sqrt()
}

/// Outcome of one step: number of A₀ solves performed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepInfo {
    pub a0_solves: usize,
    pub iterations: usize,
}

/// Advances (A, Π) by `spec.dt`, re-solving A₀ at every stage. A₀ is
/// refreshed for the new state.
pub fn step(state: &mut AxialState, scheme: Scheme) -> Result<StepInfo> {
    let dt = state.spec().dt;
    let y: Fields = state.a.iter().chain(&state.pi).cloned().collect();
    let (y1, info) = match scheme {
        Scheme::Rk4 => {
            let (k1, _) = eval(&y);
            let (k2, _) = eval(&combine(&y, 0.5 * dt, &k1));
            let (k3, _) = eval(&combine(&y, 0.5 * dt, &k2));
            let (k4, _) = eval(&combine(&y, dt, &k3));
            let mut out = y.clone();
            for (idx, o) in out.iter_mut().enumerate() {
                // pairwise grouping (k1 + k4) + 2(k2 + k3) keeps the sum order fixed
                let n = o.comps[0].values.len();
                for m in 0..o.dim() {
                    let (a1, a2, a3, a4) = (
                        &k1[idx].comps[m].values,
                        &k2[idx].comps[m].values,
                        &k3[idx].comps[m].values,
                        &k4[idx].comps[m].values,
                    );
                    let v = &mut o.comps[m].values;
                    for q in 0..n {
                        v[q] += dt / 6.0 * ((a1[q] + a4[q]) + 2.0 * (a2[q] + a3[q]));
                    }
                }
            }
            (out, StepInfo { a0_solves: 4, iterations: 0 })
        }
        Scheme::Midpoint => {
            let (k, _) = eval(&y);
            let mut y1 = combine(&y, dt, &k);
            let mut iters = 0;
            let mut last;
            loop {
                iters += 1;
                let mid: Fields = y
                    .iter()
                    .zip(&y1)
                    .map(|(a, b)| {
                        let mut m = a.clone();
                        m.axpy(1.0, b);
                        m.scale(0.5);
                        m
                    })
                    .collect();
                let (k, _) = eval(&mid);
                let next = combine(&y, dt, &k);
                let diff: Fields = next.iter().zip(&y1).map(|(a, b)| a.sub(b)).collect();
                let scale = norm_all(&next).max(f64::MIN_POSITIVE);
                last = norm_all(&diff) / scale;
                y1 = next;
                if last <= MIDPOINT_TOL || norm_all(&diff) == 0.0 {
                    break;
                }
                if iters >= MIDPOINT_MAX_ITER {
                    return Err(IsoError::Integration { iterations: iters, last_update: last });
                }
            }
            (y1, StepInfo { a0_solves: iters + 1, iterations: iters })
        }
    };
    let mut it = y1.into_iter();
    let a = vec![it.next().unwrap(), it.next().unwrap()];
    let pi = vec![it.next().unwrap(), it.next().unwrap()];
    state.a = a;
    state.pi = pi;
    state.fresh = false;
    state.refresh();
    state.t += dt;
    Ok(info)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub h: f64,
    pub gauss_residual_l2: f64,
    pub bianchi_l2: f64,
    pub divfree_leak: f64,
    pub p: [f64; 4],
    pub charges: Option<Vec<f64>>,
    pub a0_iterations: usize,
}

/// Relative divergence of the stored fields, worst case.
pub fn divfree_leak(state: &AxialState) -> f64 {
    state
        .a
        .iter()
        .chain(&state.pi)
        .map(|f| {
            let n = f.norm();
            if n > 0.0 {
                inner_divergence(f).norm() / n
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Relative L² of the Bianchi residual over all four index triples.
pub fn bianchi_relative(cfg: &GaugeConfig) -> f64 {
    let f = crate::lagrangian::field_strength(cfg);
    let mut num = 0.0;
    let mut den = 0.0;
    for (tri, b) in bianchi_residual(cfg, &f) {
        num += b.norm().powi(2);
        den += crate::lagrangian::bianchi_scale(cfg, &f, tri).powi(2);
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

pub fn diagnostics(state: &AxialState, info: StepInfo) -> Result<DiagnosticsRecord> {
    let h = hamiltonian(state)?;
    let g = gauss_residual(state)?.norm();
    let scale = gauss_scale(state);
    let gauss = if scale > 0.0 { g / scale } else { g };
    let cfg = state.gauge_config()?;
    let bianchi = bianchi_relative(&cfg);
    let theta = energy_momentum(&axial_field_strength(state)?, Variant::Improved, None)?;
    Ok(DiagnosticsRecord {
        t: state.t,
        h,
        gauss_residual_l2: gauss,
        bianchi_l2: bianchi,
        divfree_leak: divfree_leak(state),
        p: four_momentum(&theta),
        charges: None,
        a0_iterations: info.a0_solves,
    })
}
