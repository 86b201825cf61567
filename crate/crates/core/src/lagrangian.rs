//! Field strength, covariant derivatives, the Λ-regularized action, field
//! equations, Bianchi identities, Noether currents and energy-momentum.

use crate::algebra::{bracket_acc, d_mu};
use crate::error::{IsoError, Result};
use crate::lattice::deriv::{apply_spectral, Axis};
use crate::lattice::project::inner_integral_slice;
use crate::lattice::sum::pairwise_sum;
use crate::lattice::{AlgebraField, LatticeSpec, ScalarField};

/// η = diag(−1, 1, 1, 1).
pub const ETA: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

/// A_μ^M for μ = 0..3, with optional time derivatives ∂₀A_μ.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeConfig {
    pub a: Vec<AlgebraField>,
    pub a_dot: Option<Vec<AlgebraField>>,
}

impl GaugeConfig {
    pub fn zeros(spec: &LatticeSpec) -> Self {
        GaugeConfig { a: (0..4).map(|_| AlgebraField::zeros(spec)).collect(), a_dot: None }
    }

    pub fn new(a: Vec<AlgebraField>, a_dot: Option<Vec<AlgebraField>>) -> Result<Self> {
        if a.len() != 4 || a_dot.as_ref().is_some_and(|d| d.len() != 4) {
            return Err(IsoError::Shape("gauge config needs four components".into()));
        }
        for f in a.iter().chain(a_dot.iter().flatten()) {
            a[0].check_same(f)?;
        }
        Ok(GaugeConfig { a, a_dot })
    }

    pub fn spec(&self) -> &LatticeSpec {
        self.a[0].spec()
    }

    fn dot(&self, mu: usize) -> Option<&AlgebraField> {
        self.a_dot.as_ref().map(|d| &d[mu])
    }
}

/// Where a component lives along x³.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    Node,
    /// Value at plane k belongs to the link (k, k+1); the last plane is unused.
    Link3,
}

/// F_μν for μ < ν in the order of [`FieldStrength::PAIRS`].
#[derive(Clone, Debug, PartialEq)]
pub struct FieldStrength {
    pub comps: Vec<AlgebraField>,
    pub placement: Vec<Placement>,
}

impl FieldStrength {
    pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

    pub fn zeros(spec: &LatticeSpec) -> Self {
        FieldStrength { comps: (0..6).map(|_| AlgebraField::zeros(spec)).collect(), placement: vec![Placement::Node; 6] }
    }

    pub fn spec(&self) -> &LatticeSpec {
        self.comps[0].spec()
    }

    /// Storage slot and sign of F_μν.
    pub fn slot(mu: usize, nu: usize) -> Option<(usize, f64)> {
        if mu == nu {
            return None;
        }
        let (a, b, s) = if mu < nu { (mu, nu, 1.0) } else { (nu, mu, -1.0) };
        Self::PAIRS.iter().position(|&p| p == (a, b)).map(|i| (i, s))
    }

    pub fn set(&mut self, mu: usize, nu: usize, v: AlgebraField, placement: Placement) {
        let (i, s) = Self::slot(mu, nu).expect("diagonal component");
        self.comps[i] = if s > 0.0 { v } else { v.scaled(-1.0) };
        self.placement[i] = placement;
    }

    /// F_μν at nodes; link values are averaged onto nodes.
    pub fn node(&self, mu: usize, nu: usize) -> AlgebraField {
        let Some((i, s)) = Self::slot(mu, nu) else {
            return AlgebraField::zeros(self.spec());
        };
        let mut v = match self.placement[i] {
            Placement::Node => self.comps[i].clone(),
            Placement::Link3 => links_to_nodes(&self.comps[i]),
        };
        if s < 0.0 {
            v.scale(-1.0);
        }
        v
    }

    /// Σ_M F_αβ^M F_γδ^M per site at nodes. Two link-valued factors are
    /// multiplied on links and the products averaged onto nodes.
    pub fn pair_density(&self, ab: (usize, usize), cd: (usize, usize)) -> Vec<f64> {
        let n = self.spec().len();
        let (Some((i, si)), Some((j, sj))) = (Self::slot(ab.0, ab.1), Self::slot(cd.0, cd.1)) else {
            return vec![0.0; n];
        };
        let sign = si * sj;
        if self.placement[i] == Placement::Link3 && self.placement[j] == Placement::Link3 {
            let mut lp = self.comps[i].dot_density(&self.comps[j]);
            for v in lp.iter_mut() {
                *v *= sign;
            }
            return link_products_to_nodes(self.spec(), &lp);
        }
        self.node(ab.0, ab.1).dot_density(&self.node(cd.0, cd.1))
    }
}

/// Centered node values (f[k−1/2] + f[k+1/2]) / 2; zero on boundary planes.
pub fn links_to_nodes(v: &AlgebraField) -> AlgebraField {
    let spec = *v.spec();
    let k = spec.inner_len();
    let n3 = spec.n3;
    let mut out = AlgebraField::zeros(&spec);
    for (o, c) in out.comps.iter_mut().zip(&v.comps) {
        for col in 0..spec.n1 * spec.n2 {
            let base = col * n3 * k;
            for i3 in 1..n3.saturating_sub(1) {
                for q in 0..k {
                    let idx = base + i3 * k + q;
                    o.values[idx] = 0.5 * (c.values[idx - k] + c.values[idx]);
                }
            }
        }
    }
    out
}

/// Node density from a link density: half of each adjacent link, so the
/// node sum equals the link sum.
pub fn link_products_to_nodes(spec: &LatticeSpec, lp: &[f64]) -> Vec<f64> {
    let k = spec.inner_len();
    let n3 = spec.n3;
    let mut out = vec![0.0; lp.len()];
    for col in 0..spec.n1 * spec.n2 {
        let base = col * n3 * k;
        for i3 in 0..n3 {
            for q in 0..k {
                let idx = base + i3 * k + q;
                let below = if i3 > 0 { lp[idx - k] } else { 0.0 };
                let above = if i3 + 1 < n3 { lp[idx] } else { 0.0 };
                out[idx] = 0.5 * (below + above);
            }
        }
    }
    out
}

/// F_μν = ∂_μA_ν − ∂_νA_μ + [A_μ, A_ν] for one ordered pair.
pub fn field_strength_component(a: &GaugeConfig, mu: usize, nu: usize) -> AlgebraField {
    let mut f = d_mu(&a.a[nu], mu, a.dot(nu));
    f.axpy(-1.0, &d_mu(&a.a[mu], nu, a.dot(mu)));
    bracket_acc(&a.a[mu], &a.a[nu], 1.0, &mut f);
    f
}

/// All six components at nodes. Time derivatives come from `a.a_dot`
/// (static when absent).
pub fn field_strength(a: &GaugeConfig) -> FieldStrength {
    let mut f = FieldStrength::zeros(a.spec());
    for (i, &(mu, nu)) in FieldStrength::PAIRS.iter().enumerate() {
        f.comps[i] = field_strength_component(a, mu, nu);
    }
    f
}

fn need_time(mu: usize, has: bool) -> Result<()> {
    if mu == 0 && !has {
        return Err(IsoError::Contract("μ = 0 requires a supplied time derivative".into()));
    }
    if mu > 3 {
        return Err(IsoError::Contract(format!("spacetime index {mu} out of range")));
    }
    Ok(())
}

/// D_μψ = ∂_μψ + A_μ^M ∇_M ψ; μ = 0 needs `psi_dot`.
pub fn covariant_derivative_scalar(
    psi: &ScalarField,
    a: &GaugeConfig,
    mu: usize,
    psi_dot: Option<&ScalarField>,
) -> Result<ScalarField> {
    need_time(mu, psi_dot.is_some())?;
    let spec = psi.spec;
    let mut out = match mu {
        0 => psi_dot.unwrap().clone(),
        1 | 2 => crate::lattice::d_spatial(psi, mu),
        _ => crate::lattice::d_spatial(psi, 3),
    };
    let mut g = vec![0.0; spec.len()];
    for (m, am) in a.a[mu].comps.iter().enumerate() {
        apply_spectral(&spec, Axis::Inner(m), &psi.values, &mut g, 1.0, false);
        for i in 0..spec.len() {
            out.values[i] += am.values[i] * g[i];
        }
    }
    Ok(out)
}

/// (𝒟_μ v)^M = ∂_μ v^M + A_μ^L ∇_L v^M − v^N ∇_N A_μ^M; μ = 0 needs `v_dot`.
pub fn covariant_derivative_vector(
    v: &AlgebraField,
    a: &GaugeConfig,
    mu: usize,
    v_dot: Option<&AlgebraField>,
) -> Result<AlgebraField> {
    need_time(mu, v_dot.is_some())?;
    let mut out = d_mu(v, mu, v_dot);
    bracket_acc(&a.a[mu], v, 1.0, &mut out);
    Ok(out)
}

/// Σ_{ρσ} F_ρσ · F^ρσ per site.
fn invariant_density(f: &FieldStrength) -> Vec<f64> {
    let n = f.spec().len();
    let mut s = vec![0.0; n];
    for &(r, q) in FieldStrength::PAIRS.iter() {
        let w = 2.0 * ETA[r] * ETA[q];
        let p = f.pair_density((r, q), (r, q));
        for i in 0..n {
            s[i] += w * p[i];
        }
    }
    s
}

/// Inner-integrated −(Λ²/4) F_μν·F^μν at every spatial site.
pub fn action_density(f: &FieldStrength) -> Vec<f64> {
    let spec = f.spec();
    let lam2 = spec.lambda * spec.lambda;
    let mut s = invariant_density(f);
    for v in s.iter_mut() {
        *v *= -0.25 * lam2;
    }
    inner_integral_slice(spec, &s)
}

/// Spatial integral of the action density on one time slice.
pub fn lagrangian(f: &FieldStrength) -> f64 {
    f.spec().cell_volume() * pairwise_sum(&action_density(f))
}

/// Σ over slices of the Lagrangian × dt.
pub fn action(slices: &[FieldStrength]) -> f64 {
    let parts: Vec<f64> = slices.iter().map(|f| lagrangian(f) * f.spec().dt).collect();
    pairwise_sum(&parts)
}

/// 𝒥_ν = A^{μN} ∇_N F_μν − F_μν^N ∇_N A^μ for ν = 0..3.
pub fn noether_current(a: &GaugeConfig, f: &FieldStrength) -> Vec<AlgebraField> {
    (0..4)
        .map(|nu| {
            let mut j = AlgebraField::zeros(a.spec());
            for mu in 0..4 {
                if mu != nu {
                    bracket_acc(&a.a[mu], &f.node(mu, nu), ETA[mu], &mut j);
                }
            }
            j
        })
        .collect()
}

/// R_ν = ∂^μ F_μν + 𝒥_ν. `d0f[ν]` supplies ∂₀F_0ν (static when absent).
pub fn eom_residual(a: &GaugeConfig, f: &FieldStrength, d0f: Option<&[AlgebraField]>) -> Vec<AlgebraField> {
    let mut r = noether_current(a, f);
    for (nu, rn) in r.iter_mut().enumerate() {
        for mu in 0..4 {
            if mu == nu {
                continue;
            }
            let d = if mu == 0 {
                match d0f {
                    Some(d) => d[nu].clone(),
                    None => continue,
                }
            } else {
                d_mu(&f.node(mu, nu), mu, None)
            };
            rn.axpy(ETA[mu], &d);
        }
    }
    r
}

/// ∂₀F_ij = ∂_iȦ_j − ∂_jȦ_i + [Ȧ_i, A_j] + [A_i, Ȧ_j] (zero when static).
pub fn time_derivative_strength(a: &GaugeConfig, i: usize, j: usize) -> AlgebraField {
    let spec = a.spec();
    let Some(dot) = a.a_dot.as_ref() else {
        return AlgebraField::zeros(spec);
    };
    let mut out = d_mu(&dot[j], i, None);
    out.axpy(-1.0, &d_mu(&dot[i], j, None));
    bracket_acc(&dot[i], &a.a[j], 1.0, &mut out);
    bracket_acc(&a.a[i], &dot[j], 1.0, &mut out);
    out
}

pub const TRIPLES: [(usize, usize, usize); 4] = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];

/// 𝒟_ρF_μν + 𝒟_μF_νρ + 𝒟_νF_ρμ for the four index triples in [`TRIPLES`].
pub fn bianchi_residual(a: &GaugeConfig, f: &FieldStrength) -> Vec<((usize, usize, usize), AlgebraField)> {
    TRIPLES
        .iter()
        .map(|&(r, m, n)| {
            let mut b = AlgebraField::zeros(a.spec());
            for (x, y, z) in [(r, m, n), (m, n, r), (n, r, m)] {
                let fyz = f.node(y, z);
                let d = if x == 0 {
                    time_derivative_strength(a, y, z)
                } else {
                    d_mu(&fyz, x, None)
                };
                b.axpy(1.0, &d);
                bracket_acc(&a.a[x], &fyz, 1.0, &mut b);
            }
            ((r, m, n), b)
        })
        .collect()
}

/// Bianchi terms summed in absolute value, used as the relative scale.
pub fn bianchi_scale(a: &GaugeConfig, f: &FieldStrength, triple: (usize, usize, usize)) -> f64 {
    let (r, m, n) = triple;
    let mut s = 0.0;
    for (x, y, z) in [(r, m, n), (m, n, r), (n, r, m)] {
        let fyz = f.node(y, z);
        let d = if x == 0 { time_derivative_strength(a, y, z) } else { d_mu(&fyz, x, None) };
        let mut c = AlgebraField::zeros(a.spec());
        bracket_acc(&a.a[x], &fyz, 1.0, &mut c);
        s += d.norm() + c.norm();
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Canonical,
    Improved,
}

/// θ[μ][ν] = Θ^μ_ν per spatial site (inner space integrated out).
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyMomentum {
    pub theta: Vec<Vec<Vec<f64>>>,
    pub variant: Variant,
    pub spec: LatticeSpec,
}

/// Improved: Λ² [¼ δ^μ_ν F·F − F^{μρ}·F_νρ]. Canonical replaces F_νρ by ∂_νA_ρ
/// and needs `a`.
pub fn energy_momentum(f: &FieldStrength, variant: Variant, a: Option<&GaugeConfig>) -> Result<EnergyMomentum> {
    let spec = *f.spec();
    let n = spec.len();
    let lam2 = spec.lambda * spec.lambda;
    let s = invariant_density(f);
    let grads: Option<Vec<Vec<AlgebraField>>> = match variant {
        Variant::Improved => None,
        Variant::Canonical => {
            let a = a.ok_or_else(|| IsoError::Contract("canonical tensor needs the gauge configuration".into()))?;
            Some(
                (0..4)
                    .map(|nu| (0..4).map(|rho| d_mu(&a.a[rho], nu, a.dot(rho))).collect())
                    .collect(),
            )
        }
    };
    let mut theta = vec![vec![Vec::new(); 4]; 4];
    for mu in 0..4 {
        for nu in 0..4 {
            let mut d = vec![0.0; n];
            if mu == nu {
                for i in 0..n {
                    d[i] = 0.25 * s[i];
                }
            }
            for rho in 0..4 {
                if rho == mu {
                    continue;
                }
                let w = -ETA[mu] * ETA[rho];
                let p = match &grads {
                    None => {
                        if rho == nu {
                            continue;
                        }
                        f.pair_density((mu, rho), (nu, rho))
                    }
                    Some(g) => f.node(mu, rho).dot_density(&g[nu][rho]),
                };
                for i in 0..n {
                    d[i] += w * p[i];
                }
            }
            for v in d.iter_mut() {
                *v *= lam2;
            }
            theta[mu][nu] = inner_integral_slice(&spec, &d);
        }
    }
    Ok(EnergyMomentum { theta, variant, spec })
}

/// p_μ = Σ_x Θ⁰_μ × cell volume.
pub fn four_momentum(t: &EnergyMomentum) -> [f64; 4] {
    let dv = t.spec.cell_volume();
    let mut p = [0.0; 4];
    for (mu, v) in p.iter_mut().enumerate() {
        *v = dv * pairwise_sum(&t.theta[0][mu]);
    }
    p
}
