//! Inner divergence, transverse projection and the inner measure.

use rustfft::num_complex::Complex64;

use super::deriv::{apply_spectral, Axis};
use std::sync::Arc;

use rustfft::Fft;

use super::fft::{mode, plan};
use super::sum::pairwise_sum;
use super::{AlgebraField, LatticeSpec, ScalarField};

/// ∇_M f^M, spectrally.
pub fn inner_divergence(f: &AlgebraField) -> ScalarField {
    let spec = *f.spec();
    let mut out = ScalarField::zeros(&spec);
    for (m, c) in f.comps.iter().enumerate() {
        apply_spectral(&spec, Axis::Inner(m), &c.values, &mut out.values, 1.0, true);
    }
    out
}

/// Wavevectors of the inner modes; Nyquist components are zero.
pub fn inner_wavevectors(spec: &LatticeSpec) -> Vec<Vec<f64>> {
    let k = spec.k_inner;
    let scale = 2.0 * std::f64::consts::PI / spec.l_inner;
    (0..spec.inner_len())
        .map(|idx| {
            spec.inner_multi(idx)
                .into_iter()
                .map(|j| mode(j, k).map_or(0.0, |m| m as f64 * scale))
                .collect()
        })
        .collect()
}

/// Per-site inner transforms of real fields packed two to a complex block.
struct InnerBlocks {
    k: usize,
    d: usize,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl InnerBlocks {
    fn new(spec: &LatticeSpec) -> Self {
        let k = spec.k_inner;
        let d = spec.d_inner;
        let len = spec.inner_len();
        let fwd = plan(k, false);
        let inv = plan(k, true);
        let sl = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        InnerBlocks { k, d, len, fwd, inv, scratch: vec![Complex64::new(0.0, 0.0); sl], tmp: vec![Complex64::new(0.0, 0.0); len] }
    }

    /// Unnormalized D-dimensional transform of one block.
    fn transform(&mut self, block: &mut [Complex64], inverse: bool) {
        let (k, len) = (self.k, self.len);
        if k == 1 {
            return;
        }
        let p = if inverse { &self.inv } else { &self.fwd };
        for axis in 0..self.d {
            let inner = k.pow((self.d - 1 - axis) as u32);
            if inner == 1 {
                p.process_with_scratch(block, &mut self.scratch);
                continue;
            }
            let outer = len / (k * inner);
            for o in 0..outer {
                let b = &mut block[o * k * inner..(o + 1) * k * inner];
                let t = &mut self.tmp[..k * inner];
                for i in 0..k {
                    for r in 0..inner {
                        t[r * k + i] = b[i * inner + r];
                    }
                }
                p.process_with_scratch(t, &mut self.scratch);
                for i in 0..k {
                    for r in 0..inner {
                        b[i * inner + r] = t[r * k + i];
                    }
                }
            }
        }
    }
}

/// Applies δ − k kᵀ/|k|² per inner mode to `re + i·im` in place, one spatial
/// site at a time. The projector is real, so both parts are projected
/// independently.
pub fn project_packed(re: &mut AlgebraField, mut im: Option<&mut AlgebraField>) {
    let spec = *re.spec();
    let d = spec.d_inner;
    let kl = spec.inner_len();
    let kv: Vec<f64> = inner_wavevectors(&spec).into_iter().flatten().collect();
    let inv_k2: Vec<f64> = kv
        .chunks(d)
        .map(|v| {
            let k2: f64 = v.iter().map(|x| x * x).sum();
            if k2 > 0.0 {
                1.0 / k2
            } else {
                0.0
            }
        })
        .collect();
    let mut blocks = InnerBlocks::new(&spec);
    let zero = Complex64::new(0.0, 0.0);
    let mut z = vec![zero; d * kl];
    let norm = 1.0 / kl as f64;
    for s in 0..spec.spatial_len() {
        let off = s * kl;
        for (m, zb) in z.chunks_exact_mut(kl).enumerate() {
            let r = &re.comps[m].values[off..off + kl];
            match im.as_deref() {
                Some(i) => {
                    for ((o, x), y) in zb.iter_mut().zip(r).zip(&i.comps[m].values[off..off + kl]) {
                        *o = Complex64::new(*x, *y);
                    }
                }
                None => {
                    for (o, x) in zb.iter_mut().zip(r) {
                        *o = Complex64::new(*x, 0.0);
                    }
                }
            }
            blocks.transform(zb, false);
        }
        for q in 0..kl {
            if inv_k2[q] == 0.0 {
                continue;
            }
            let kq = &kv[q * d..(q + 1) * d];
            let mut kz = zero;
            for m in 0..d {
                kz += z[m * kl + q] * kq[m];
            }
            let c = kz * inv_k2[q];
            for m in 0..d {
                z[m * kl + q] -= c * kq[m];
            }
        }
        for (m, zb) in z.chunks_exact_mut(kl).enumerate() {
            blocks.transform(zb, true);
            for (o, v) in re.comps[m].values[off..off + kl].iter_mut().zip(zb.iter()) {
                *o = v.re * norm;
            }
            if let Some(i) = im.as_deref_mut() {
                for (o, v) in i.comps[m].values[off..off + kl].iter_mut().zip(zb.iter()) {
                    *o = v.im * norm;
                }
            }
        }
    }
}

/// Transverse part of `f` per inner Fourier mode; the zero mode passes through.
pub fn divfree_project(f: &AlgebraField) -> AlgebraField {
    let mut out = f.clone();
    project_packed(&mut out, None);
    out
}

/// Λ^D ΔX^D Σ_X f(x, X) for every spatial site.
pub fn inner_integral(f: &ScalarField) -> Vec<f64> {
    inner_integral_slice(&f.spec, &f.values)
}

pub fn inner_integral_slice(spec: &LatticeSpec, v: &[f64]) -> Vec<f64> {
    let k = spec.inner_len();
    let w = spec.inner_weight();
    v.chunks(k).map(|c| w * pairwise_sum(c)).collect()
}

/// Σ_x inner_integral(f)(x) × cell volume.
pub fn total_integral(spec: &LatticeSpec, v: &[f64]) -> f64 {
    spec.cell_volume() * spec.inner_weight() * pairwise_sum(v)
}
