//! Deterministic band-limited random algebra fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use super::fft::fft_trailing;
use super::project::project_packed;
use super::{AlgebraField, LatticeSpec};
use crate::error::{IsoError, Result};

fn mode_limit(n: usize, max_mode: usize) -> usize {
    if n == 1 {
        0
    } else {
        max_mode
    }
}

fn bin(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}

/// Random field with Fourier support `|m| <= max_mode` on x¹, x² and every
/// inner axis, a sine profile in x³ vanishing on both planes, projected to
/// the algebra and scaled to RMS `amplitude`.
pub fn random_bandlimited(seed: u64, spec: &LatticeSpec, max_mode: usize, amplitude: f64) -> Result<AlgebraField> {
    spec.validate()?;
    for (name, n) in [("n1", spec.n1), ("n2", spec.n2), ("k_inner", spec.k_inner)] {
        if n > 1 && 2 * max_mode >= n {
            return Err(IsoError::Domain(format!("max_mode {max_mode} not below Nyquist of {name} = {n}")));
        }
    }
    if spec.n3 < 3 {
        return Err(IsoError::Domain("n3 must be >= 3 for a nonzero interior".into()));
    }
    let mut out = AlgebraField::zeros(spec);
    if amplitude == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.d_inner;
    let kl = spec.inner_len();
    let plane_dims: Vec<usize> = {
        let mut v = vec![spec.n1, spec.n2];
        v.extend(std::iter::repeat(spec.k_inner).take(d));
        v
    };
    let plane_len = spec.n1 * spec.n2 * kl;
    let p_max = max_mode.max(1).min(spec.n3 - 2);
    let m1 = mode_limit(spec.n1, max_mode) as i64;
    let m2 = mode_limit(spec.n2, max_mode) as i64;
    let mi = mode_limit(spec.k_inner, max_mode) as i64;
    let inner_modes: Vec<Vec<i64>> = {
        let mut all = vec![vec![]];
        for _ in 0..d {
            all = all
                .into_iter()
                .flat_map(|v| {
                    (-mi..=mi).map(move |m| {
                        let mut w = v.clone();
                        w.push(m);
                        w
                    })
                })
                .collect();
        }
        all
    };
    let l3 = spec.l3;
    let h3 = spec.h3();
    let pi = std::f64::consts::PI;
    for comp in out.comps.iter_mut() {
        for p in 1..=p_max {
            let mut buf = vec![Complex64::new(0.0, 0.0); plane_len];
            for a in -m1..=m1 {
                for b in -m2..=m2 {
                    for im in &inner_modes {
                        let re: f64 = rng.gen_range(-1.0..1.0);
                        let imv: f64 = rng.gen_range(-1.0..1.0);
                        let mut q = 0;
                        for &m in im {
                            q = q * spec.k_inner + bin(m, spec.k_inner);
                        }
                        let idx = (bin(a, spec.n1) * spec.n2 + bin(b, spec.n2)) * kl + q;
                        buf[idx] += Complex64::new(re, imv);
                    }
                }
            }
            fft_trailing(&mut buf, &plane_dims, plane_dims.len(), true);
            for i3 in 1..spec.n3 - 1 {
                let x3 = i3 as f64 * h3;
                let prof = (pi * x3 / l3).sin() * (p as f64 * pi * x3 / l3).sin();
                for col in 0..spec.n1 * spec.n2 {
                    let dst = (col * spec.n3 + i3) * kl;
                    let src = col * kl;
                    for q in 0..kl {
                        comp.values[dst + q] += prof * buf[src + q].re;
                    }
                }
            }
        }
    }
    project_packed(&mut out, None);
    out.enforce_dirichlet();
    let rms = out.norm() / ((d * spec.len()) as f64).sqrt();
    if rms > 0.0 {
        out.scale(amplitude / rms);
    }
    Ok(out)
}
