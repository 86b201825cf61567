//! Minimally coupled scalar matter evolved on a frozen gauge background.
//!
//! The x³ derivative lives on links: `D₃ψ = (ψ[k+1] − ψ[k])/h + avg(A₃·∇ψ)`,
//! so the free operator along x³ is the 3-point Laplacian.

use std::fmt;
use std::str::FromStr;

use crate::error::{IsoError, Result};
use crate::lagrangian::GaugeConfig;
use crate::lattice::deriv::{apply_spectral, apply_x3, Axis, Stencil3};
use crate::lattice::ops::zero_boundary;
use crate::lattice::project::total_integral;
use crate::lattice::{check_shape, AlgebraField, LatticeSpec, ScalarField};

/// Overall sign of the matter Lagrangian. `AsPrinted` keeps
/// `+½ ∂^μψ ∂_μψ + ½ m²ψ²`; `Conventional` negates it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignConvention {
    #[default]
    AsPrinted,
    Conventional,
}

impl SignConvention {
    pub fn sign(self) -> f64 {
        match self {
            SignConvention::AsPrinted => 1.0,
            SignConvention::Conventional => -1.0,
        }
    }
}

impl FromStr for SignConvention {
    type Err = IsoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(SignConvention::AsPrinted),
            "conventional" => Ok(SignConvention::Conventional),
            _ => Err(IsoError::Domain(format!("unknown sign convention '{s}' (as-printed|conventional)"))),
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignConvention::AsPrinted => "as-printed",
            SignConvention::Conventional => "conventional",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatterState {
    pub psi: ScalarField,
    /// ∂₀ψ.
    pub dpsi: ScalarField,
    pub mass: f64,
    pub sign_convention: SignConvention,
    pub t: f64,
}

impl MatterState {
    /// Boundary planes are zeroed.
    pub fn new(mut psi: ScalarField, mut dpsi: ScalarField, mass: f64, sign_convention: SignConvention) -> Result<Self> {
        check_shape(&psi.spec, &dpsi.spec)?;
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(IsoError::Domain(format!("mass must be >= 0, got {mass}")));
        }
        psi.enforce_dirichlet();
        dpsi.enforce_dirichlet();
        Ok(MatterState { psi, dpsi, mass, sign_convention, t: 0.0 })
    }

    pub fn vacuum(spec: &LatticeSpec, mass: f64, sign_convention: SignConvention) -> Result<Self> {
        Self::new(ScalarField::zeros(spec), ScalarField::zeros(spec), mass, sign_convention)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.psi.spec
    }
}

/// Covariant difference operators for one background.
struct Ops<'a> {
    spec: LatticeSpec,
    a: Option<&'a GaugeConfig>,
    tmp: Vec<f64>,
}

impl<'a> Ops<'a> {
    fn new(spec: &LatticeSpec, a: Option<&'a GaugeConfig>) -> Result<Self> {
        if let Some(g) = a {
            check_shape(spec, g.spec())?;
        }
        Ok(Ops { spec: *spec, a, tmp: vec![0.0; spec.len()] })
    }

    fn field(&self, mu: usize) -> Option<&'a AlgebraField> {
        self.a.map(|g| &g.a[mu])
    }

    /// out += s · A_μ^N ∇_N f.
    fn adv(&mut self, mu: usize, f: &[f64], out: &mut [f64], s: f64) {
        let Some(a) = self.field(mu) else { return };
        for (n, an) in a.comps.iter().enumerate() {
            apply_spectral(&self.spec, Axis::Inner(n), f, &mut self.tmp, 1.0, false);
            for ((o, x), y) in out.iter_mut().zip(&an.values).zip(&self.tmp) {
                *o += s * x * y;
            }
        }
    }

    /// out += s · ∇_N(A_μ^N f), the negative adjoint of `adv`.
    fn flux(&mut self, mu: usize, f: &[f64], out: &mut [f64], s: f64) {
        let Some(a) = self.field(mu) else { return };
        for (n, an) in a.comps.iter().enumerate() {
            for ((t, x), y) in self.tmp.iter_mut().zip(&an.values).zip(f) {
                *t = x * y;
            }
            apply_spectral(&self.spec, Axis::Inner(n), &self.tmp, out, s, true);
        }
    }

    /// D_iψ at nodes for i = 1, 2.
    fn d_node(&mut self, i: usize, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        apply_spectral(&self.spec, Axis::spatial(i), psi, &mut out, 1.0, false);
        self.adv(i, psi, &mut out, 1.0);
        out
    }

    /// out += s · D_iᵀ g.
    fn d_node_t(&mut self, i: usize, g: &[f64], out: &mut [f64], s: f64) {
        apply_spectral(&self.spec, Axis::spatial(i), g, out, -s, true);
        self.flux(i, g, out, -s);
    }

    /// D₃ψ on links; the last plane is unused and zero.
    fn d_link(&mut self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        apply_x3(&self.spec, Stencil3::Forward, psi, &mut out, 1.0, false);
        if self.a.is_some() {
            let mut g = vec![0.0; psi.len()];
            self.adv(3, psi, &mut g, 1.0);
            let (k, n3) = (self.spec.inner_len(), self.spec.n3);
            for col in 0..self.spec.n1 * self.spec.n2 {
                let base = col * n3 * k;
                for i3 in 0..n3.saturating_sub(1) {
                    for q in 0..k {
                        let o = base + i3 * k + q;
                        out[o] += 0.5 * (g[o] + g[o + k]);
                    }
                }
            }
        }
        out
    }

    /// out += s · D₃ᵀ l for a link array `l`.
    fn d_link_t(&mut self, l: &[f64], out: &mut [f64], s: f64) {
        let (k, n3) = (self.spec.inner_len(), self.spec.n3);
        let h = self.spec.h3();
        let mut avg = vec![0.0; l.len()];
        for col in 0..self.spec.n1 * self.spec.n2 {
            let base = col * n3 * k;
            for i3 in 0..n3 {
                for q in 0..k {
                    let o = base + i3 * k + q;
                    let below = if i3 > 0 { l[o - k] } else { 0.0 };
                    let here = if i3 + 1 < n3 { l[o] } else { 0.0 };
                    out[o] += s * (below - here) / h;
                    avg[o] = 0.5 * (below + here);
                }
            }
        }
        if self.a.is_some() {
            self.flux(3, &avg, out, -s);
        }
    }

    /// D₀ψ = ψ̇ + A₀·∇ψ.
    fn chi(&mut self, psi: &[f64], dpsi: &[f64]) -> Vec<f64> {
        let mut c = dpsi.to_vec();
        self.adv(0, psi, &mut c, 1.0);
        c
    }

    /// Σ_i D_iᵀD_iψ + m²ψ.
    fn stiffness(&mut self, psi: &[f64], mass: f64) -> Vec<f64> {
        let mut out: Vec<f64> = psi.iter().map(|v| mass * mass * v).collect();
        for i in 1..3 {
            let d = self.d_node(i, psi);
            self.d_node_t(i, &d, &mut out, 1.0);
        }
        let l = self.d_link(psi);
        self.d_link_t(&l, &mut out, 1.0);
        out
    }

    /// (ψ̇, χ̇) with χ̇ = A₀-transport of χ minus the stiffness.
    fn rhs(&mut self, psi: &[f64], chi: &[f64], mass: f64) -> (Vec<f64>, Vec<f64>) {
        let mut dpsi = chi.to_vec();
        self.adv(0, psi, &mut dpsi, -1.0);
        let mut dchi: Vec<f64> = self.stiffness(psi, mass).into_iter().map(|v| -v).collect();
        self.flux(0, chi, &mut dchi, -1.0);
        zero_boundary(&self.spec, &mut dpsi);
        zero_boundary(&self.spec, &mut dchi);
        (dpsi, dchi)
    }
}

/// Per-site Lagrangian density before inner integration, link terms split to
/// nodes so the site sum is exact.
fn lagrangian_density(ms: &MatterState, a: Option<&GaugeConfig>) -> Result<Vec<f64>> {
    let spec = *ms.spec();
    let mut ops = Ops::new(&spec, a)?;
    let s = ms.sign_convention.sign();
    let psi = &ms.psi.values;
    let chi = ops.chi(psi, &ms.dpsi.values);
    let d1 = ops.d_node(1, psi);
    let d2 = ops.d_node(2, psi);
    let l3 = ops.d_link(psi);
    let l2: Vec<f64> = l3.iter().map(|v| v * v).collect();
    let n3 = crate::lagrangian::link_products_to_nodes(&spec, &l2);
    let m2 = ms.mass * ms.mass;
    Ok((0..spec.len())
        .map(|i| s * 0.5 * (-chi[i] * chi[i] + d1[i] * d1[i] + d2[i] * d2[i] + n3[i] + m2 * psi[i] * psi[i]))
        .collect())
}

/// L_M on the current slice: ∫d³x ∫Λ^D d^DX [½ D^μψ D_μψ + ½ m²ψ²] times the
/// convention sign. `a = None` uses plain derivatives.
pub fn matter_action(ms: &MatterState, a: Option<&GaugeConfig>) -> Result<f64> {
    let d = lagrangian_density(ms, a)?;
    Ok(total_integral(ms.spec(), &d))
}

/// π ψ̇ − L with π = −s D₀ψ; conserved on a static background.
pub fn matter_energy(ms: &MatterState, a: Option<&GaugeConfig>) -> Result<f64> {
    let spec = *ms.spec();
    let mut ops = Ops::new(&spec, a)?;
    let s = ms.sign_convention.sign();
    let chi = ops.chi(&ms.psi.values, &ms.dpsi.values);
    let l = lagrangian_density(ms, a)?;
    let d: Vec<f64> = (0..spec.len()).map(|i| -s * chi[i] * ms.dpsi.values[i] - l[i]).collect();
    Ok(total_integral(&spec, &d))
}

/// Canonical momentum π = ∂L/∂ψ̇ = −s D₀ψ.
pub fn matter_momentum(ms: &MatterState, a: Option<&GaugeConfig>) -> Result<ScalarField> {
    let spec = *ms.spec();
    let mut ops = Ops::new(&spec, a)?;
    let s = ms.sign_convention.sign();
    let chi = ops.chi(&ms.psi.values, &ms.dpsi.values);
    ScalarField::from_values(&spec, chi.into_iter().map(|v| -s * v).collect())
}

/// J^ν_N = ∂L/∂(∂_νψ) · ∇_Nψ for ν = 0..3, before inner integration.
/// The x³ momentum is averaged from links onto nodes.
pub fn matter_noether(ms: &MatterState, a: Option<&GaugeConfig>) -> Result<Vec<AlgebraField>> {
    let spec = *ms.spec();
    let mut ops = Ops::new(&spec, a)?;
    let s = ms.sign_convention.sign();
    let psi = &ms.psi.values;
    let chi = ops.chi(psi, &ms.dpsi.values);
    let l3 = ops.d_link(psi);
    let (k, n3) = (spec.inner_len(), spec.n3);
    let mut p3 = vec![0.0; spec.len()];
    for col in 0..spec.n1 * spec.n2 {
        for i3 in 1..n3.saturating_sub(1) {
            for q in 0..k {
                let o = (col * n3 + i3) * k + q;
                p3[o] = 0.5 * (l3[o - k] + l3[o]);
            }
        }
    }
    let momenta = [
        chi.iter().map(|v| -s * v).collect::<Vec<_>>(),
        ops.d_node(1, psi).into_iter().map(|v| s * v).collect(),
        ops.d_node(2, psi).into_iter().map(|v| s * v).collect(),
        p3.into_iter().map(|v| s * v).collect(),
    ];
    let grads: Vec<Vec<f64>> = (0..spec.d_inner)
        .map(|n| {
            let mut g = vec![0.0; spec.len()];
            apply_spectral(&spec, Axis::Inner(n), psi, &mut g, 1.0, false);
            g
        })
        .collect();
    momenta
        .iter()
        .map(|p| {
            let comps = grads
                .iter()
                .map(|g| ScalarField::from_values(&spec, p.iter().zip(g).map(|(x, y)| x * y).collect()))
                .collect::<Result<Vec<_>>>()?;
            AlgebraField::from_comps(comps)
        })
        .collect()
}

/// Q_N = Σ_x ∫Λ^D d^DX J⁰_N × cell volume.
pub fn charges(ms: &MatterState, a: Option<&GaugeConfig>) -> Result<Vec<f64>> {
    let j = matter_noether(ms, a)?;
    Ok(j[0].comps.iter().map(|c| total_integral(ms.spec(), &c.values)).collect())
}

/// One rk4 step of the matter field equation on the frozen background `a`.
pub fn matter_step(ms: &MatterState, a: Option<&GaugeConfig>, dt: f64) -> Result<MatterState> {
    let spec = *ms.spec();
    let mut ops = Ops::new(&spec, a)?;
    let m = ms.mass;
    let psi = ms.psi.values.clone();
    let chi = ops.chi(&psi, &ms.dpsi.values);
    let stage = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> { base.iter().zip(k).map(|(x, y)| x + h * y).collect() };

    let (k1p, k1c) = ops.rhs(&psi, &chi, m);
    let (k2p, k2c) = ops.rhs(&stage(&psi, &k1p, 0.5 * dt), &stage(&chi, &k1c, 0.5 * dt), m);
    let (k3p, k3c) = ops.rhs(&stage(&psi, &k2p, 0.5 * dt), &stage(&chi, &k2c, 0.5 * dt), m);
    let (k4p, k4c) = ops.rhs(&stage(&psi, &k3p, dt), &stage(&chi, &k3c, dt), m);
    let combine = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..y.len()).map(|i| y[i] + dt / 6.0 * ((a[i] + d[i]) + 2.0 * (b[i] + c[i]))).collect()
    };
    let new_psi = combine(&psi, &k1p, &k2p, &k3p, &k4p);
    let new_chi = combine(&chi, &k1c, &k2c, &k3c, &k4c);
    let mut dpsi = new_chi;
    ops.adv(0, &new_psi, &mut dpsi, -1.0);
    zero_boundary(&spec, &mut dpsi);
    Ok(MatterState {
        psi: ScalarField::from_values(&spec, new_psi)?,
        dpsi: ScalarField::from_values(&spec, dpsi)?,
        mass: m,
        sign_convention: ms.sign_convention,
        t: ms.t + dt,
    })
}

/// ω² = k₁² + k₂² + (4/h₃²) sin²(p π h₃ / (2 l₃)) + m² for the free lattice
/// operator on the mode `e^{i(k₁x¹ + k₂x²)} sin(p π x³ / l₃)`.
pub fn dispersion(spec: &LatticeSpec, k1: f64, k2: f64, p: usize, mass: f64) -> f64 {
    let h = spec.h3();
    let s = (p as f64 * std::f64::consts::PI * h / (2.0 * spec.l3)).sin();
    (k1 * k1 + k2 * k2 + 4.0 / (h * h) * s * s + mass * mass).sqrt()
}
