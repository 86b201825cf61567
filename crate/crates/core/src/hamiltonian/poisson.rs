//! Numerical Poisson brackets by central differences of functionals.
//!
//! Convention: ∂₀O = {O, H}, with
//! {F, G} = Λ⁻¹ Σ_x w⁻¹ (∂F/∂A·P∂G/∂Π − ∂F/∂Π·P∂G/∂A)
//! where w is the site weight and P the transverse projector.

use super::{energy_contributions, solve_a0_fields, AxialState, Slot};
use crate::error::{IsoError, Result};
use crate::lattice::project::project_packed;
use crate::lattice::sum::pairwise_sum;
use crate::lattice::{AlgebraField, LatticeSpec};

pub const SLOTS: [Slot; 4] = [Slot::A(0), Slot::A(1), Slot::Pi(0), Slot::Pi(1)];

fn rms(state: &AxialState) -> f64 {
    let n: f64 = SLOTS.iter().map(|s| state.field(*s).norm().powi(2)).sum();
    let count = 4 * state.spec().len() * state.spec().d_inner;
    (n / count as f64).sqrt()
}

/// Gradient of a functional with respect to every canonical field value,
/// projected and divided by the site weight. Boundary planes are left at 0.
pub fn functional_gradient<F>(state: &AxialState, f: F, eps: f64) -> Result<Vec<AlgebraField>>
where
    F: Fn(&AxialState) -> Result<f64>,
{
    let spec = *state.spec();
    let w = spec.inner_weight() * spec.cell_volume();
    let mut work = state.clone();
    let mut out = Vec::with_capacity(4);
    for slot in SLOTS {
        let mut g = AlgebraField::zeros(&spec);
        for m in 0..spec.d_inner {
            for idx in 0..spec.len() {
                let (_, _, i3, _) = spec.split(idx);
                if spec.is_boundary(i3) {
                    continue;
                }
                let orig = work.field(slot).comps[m].values[idx];
                work.field_mut(slot).comps[m].values[idx] = orig + eps;
                work.refresh();
                let fp = f(&work)?;
                work.field_mut(slot).comps[m].values[idx] = orig - eps;
                work.refresh();
                let fm = f(&work)?;
                work.field_mut(slot).comps[m].values[idx] = orig;
                g.comps[m].values[idx] = (fp - fm) / (2.0 * eps * w);
            }
        }
        project_packed(&mut g, None);
        g.enforce_dirichlet();
        out.push(g);
    }
    Ok(out)
}

/// {F, G} with both gradients taken numerically. Cost is O(size²); meant for
/// tiny lattices.
pub fn poisson_bracket<F, G>(state: &AxialState, f: F, g: G, eps: f64) -> Result<f64>
where
    F: Fn(&AxialState) -> Result<f64>,
    G: Fn(&AxialState) -> Result<f64>,
{
    let spec = *state.spec();
    let w = spec.inner_weight() * spec.cell_volume();
    let gf = functional_gradient(state, f, eps)?;
    let gg = functional_gradient(state, g, eps)?;
    let mut terms = Vec::new();
    for i in 0..2 {
        let a = gf[i].dot_density(&gg[2 + i]);
        let b = gf[2 + i].dot_density(&gg[i]);
        terms.extend(a.iter().zip(&b).map(|(x, y)| w * (x - y)));
    }
    Ok(pairwise_sum(&terms) / spec.lambda)
}

fn energy_of(a: &[AlgebraField], pi: &[AlgebraField]) -> Vec<f64> {
    let a0 = solve_a0_fields(a, pi);
    energy_contributions(a, pi, &a0)
}

/// Numerical and analytic flow at one spatial site, indexed
/// `[slot][component][inner index]` in [`SLOTS`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFlow {
    pub site: (usize, usize, usize),
    pub numerical: Vec<Vec<Vec<f64>>>,
    pub analytic: Vec<Vec<Vec<f64>>>,
}

impl SampledFlow {
    pub fn rel_error(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.numerical.iter().flatten().flatten().zip(self.analytic.iter().flatten().flatten()) {
            num += (a - b) * (a - b);
            den += b * b;
        }
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        }
    }
}

/// Poisson-bracket oracle {φ, H} at chosen interior spatial sites: every inner
/// value of every canonical field is perturbed by ±ε·rms, H differences are
/// accumulated site by site, and the resulting gradient is projected over
/// the inner space.
pub fn sampled_flow(state: &AxialState, sites: &[(usize, usize, usize)], eps_rel: f64) -> Result<Vec<SampledFlow>> {
    let a0 = state.a0()?;
    let spec: LatticeSpec = *state.spec();
    let scale = rms(state);
    if scale == 0.0 {
        return Err(IsoError::Domain("flow oracle needs a nonzero state".into()));
    }
    let eps = eps_rel * scale;
    let w = spec.inner_weight() * spec.cell_volume();
    let k = spec.inner_len();
    let d = spec.d_inner;
    let (da, dpi) = super::rhs(state.a(), state.pi(), a0, None, true);
    let mut out = Vec::with_capacity(sites.len());
    for &(i1, i2, i3) in sites {
        if spec.is_boundary(i3) || i1 >= spec.n1 || i2 >= spec.n2 || i3 >= spec.n3 {
            return Err(IsoError::Domain(format!("site ({i1},{i2},{i3}) is not an interior node")));
        }
        let base = spec.index(i1, i2, i3, 0);
        let mut a: Vec<AlgebraField> = state.a().to_vec();
        let mut pi: Vec<AlgebraField> = state.pi().to_vec();
        let mut grads = Vec::with_capacity(4);
        for slot in SLOTS {
            let mut g = AlgebraField::zeros(&spec);
            for m in 0..d {
                for q in 0..k {
                    let idx = base + q;
                    let orig = *value(&mut a, &mut pi, slot, m, idx);
                    *value(&mut a, &mut pi, slot, m, idx) = orig + eps;
                    let ep = energy_of(&a, &pi);
                    *value(&mut a, &mut pi, slot, m, idx) = orig - eps;
                    let em = energy_of(&a, &pi);
                    *value(&mut a, &mut pi, slot, m, idx) = orig;
                    let diff: Vec<f64> = ep.iter().zip(&em).map(|(x, y)| x - y).collect();
                    g.comps[m].values[idx] = pairwise_sum(&diff) / (2.0 * eps * w * spec.lambda);
                }
            }
            project_packed(&mut g, None);
            grads.push(g);
        }
        let pick = |f: &AlgebraField, s: f64| -> Vec<Vec<f64>> {
            f.comps.iter().map(|c| c.values[base..base + k].iter().map(|v| s * v).collect()).collect()
        };
        // ∂₀A = ∂H/∂Π, ∂₀Π = −∂H/∂A
        let numerical = vec![pick(&grads[2], 1.0), pick(&grads[3], 1.0), pick(&grads[0], -1.0), pick(&grads[1], -1.0)];
        let analytic = vec![pick(&da[0], 1.0), pick(&da[1], 1.0), pick(&dpi[0], 1.0), pick(&dpi[1], 1.0)];
        out.push(SampledFlow { site: (i1, i2, i3), numerical, analytic });
    }
    Ok(out)
}

fn value<'a>(a: &'a mut [AlgebraField], pi: &'a mut [AlgebraField], slot: Slot, m: usize, idx: usize) -> &'a mut f64 {
    match slot {
        Slot::A(i) => &mut a[i].comps[m].values[idx],
        Slot::Pi(i) => &mut pi[i].comps[m].values[idx],
    }
}
