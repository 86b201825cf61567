//! Derivative stencils: dense spectral differentiation on periodic axes,
//! second-order differences on x³.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::kernels::matmul_axis;
use super::ops::axis_split;
use super::{LatticeSpec, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
    X3,
    Inner(usize),
}

impl Axis {
    /// Spacetime axis for μ = 1, 2, 3.
    pub fn spatial(mu: usize) -> Axis {
        match mu {
            1 => Axis::X1,
            2 => Axis::X2,
            3 => Axis::X3,
            _ => panic!("spatial axis index {mu} out of range"),
        }
    }

    pub fn storage(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
            Axis::X3 => 2,
            Axis::Inner(n) => 3 + n,
        }
    }
}

type Key = (usize, u64);

fn cache() -> &'static Mutex<HashMap<Key, Arc<Vec<f64>>>> {
    static C: OnceLock<Mutex<HashMap<Key, Arc<Vec<f64>>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Transposed spectral differentiation matrix for `n` points on period `l`
/// (entry `[j * n + i]` is dF_i/df_j). The Nyquist mode is dropped, so the
/// matrix is exactly antisymmetric.
pub fn spectral_matrix_t(n: usize, l: f64) -> Arc<Vec<f64>> {
    let key = (n, l.to_bits());
    if let Some(m) = cache().lock().unwrap().get(&key) {
        return m.clone();
    }
    let mut m = vec![0.0; n * n];
    if n > 1 {
        let pi = std::f64::consts::PI;
        for i in 0..n {
            for j in 0..i {
                let d = i - j;
                let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                let v = if n % 2 == 0 {
                    (pi / l) * sign / (pi * d as f64 / n as f64).tan()
                } else {
                    (pi / l) * sign / (pi * d as f64 / n as f64).sin()
                };
                // row i, column j holds v; row j, column i holds -v
                m[j * n + i] = v;
                m[i * n + j] = -v;
            }
        }
    }
    let m = Arc::new(m);
    cache().lock().unwrap().insert(key, m.clone());
    m
}

/// `dst (+)= coef * D_axis src` for a periodic storage axis.
pub fn apply_spectral(spec: &LatticeSpec, axis: Axis, src: &[f64], dst: &mut [f64], coef: f64, accumulate: bool) {
    let dims = spec.dims();
    let a = axis.storage();
    assert!(a != 2, "x3 is not spectral");
    let period = match axis {
        Axis::X1 => spec.l1,
        Axis::X2 => spec.l2,
        _ => spec.l_inner,
    };
    let mt = spectral_matrix_t(dims[a], period);
    let (outer, n, inner) = axis_split(&dims, a);
    if !accumulate {
        dst.fill(0.0);
    }
    if n == 1 {
        return;
    }
    let scaled;
    let m: &[f64] = if coef == 1.0 {
        &mt
    } else {
        scaled = mt.iter().map(|v| coef * v).collect::<Vec<_>>();
        &scaled
    };
    matmul_axis(m, outer, n, inner, src, dst);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil3 {
    /// (f[k+1] − f[k−1]) / 2h at interior nodes.
    Centered,
    /// (f[k+1] − f[k]) / h stored at k, for the link (k, k+1).
    Forward,
    /// (f[k+1] − 2f[k] + f[k−1]) / h² at interior nodes.
    Laplacian,
}

/// `dst (+)= coef * S src` along x³. Outputs vanish on boundary planes
/// (the forward stencil leaves only the last plane empty).
pub fn apply_x3(spec: &LatticeSpec, st: Stencil3, src: &[f64], dst: &mut [f64], coef: f64, accumulate: bool) {
    let k = spec.inner_len();
    let n3 = spec.n3;
    let h = spec.h3();
    if !accumulate {
        dst.fill(0.0);
    }
    for col in 0..spec.n1 * spec.n2 {
        let base = col * n3 * k;
        let at = |i3: usize| base + i3 * k;
        match st {
            Stencil3::Centered => {
                let c = coef / (2.0 * h);
                for i3 in 1..n3.saturating_sub(1) {
                    let (p, m, o) = (at(i3 + 1), at(i3 - 1), at(i3));
                    for r in 0..k {
                        dst[o + r] += c * (src[p + r] - src[m + r]);
                    }
                }
            }
            Stencil3::Forward => {
                let c = coef / h;
                for i3 in 0..n3.saturating_sub(1) {
                    let (p, o) = (at(i3 + 1), at(i3));
                    for r in 0..k {
                        dst[o + r] += c * (src[p + r] - src[o + r]);
                    }
                }
            }
            Stencil3::Laplacian => {
                let c = coef / (h * h);
                for i3 in 1..n3.saturating_sub(1) {
                    let (p, m, o) = (at(i3 + 1), at(i3 - 1), at(i3));
                    for r in 0..k {
                        dst[o + r] += c * (src[p + r] - 2.0 * src[o + r] + src[m + r]);
                    }
                }
            }
        }
    }
}

/// Solves the Dirichlet 3-point Laplacian `Δ₃ u = r` on every
/// (x¹, x², X) column. Boundary planes of `r` are ignored and `u` vanishes there.
pub fn solve_laplacian_x3(spec: &LatticeSpec, r: &[f64], u: &mut [f64]) {
    let k = spec.inner_len();
    let n3 = spec.n3;
    u.fill(0.0);
    if n3 < 3 {
        return;
    }
    let m = n3 - 2;
    let h2 = spec.h3() * spec.h3();
    // Thomas coefficients for tridiag(1, -2, 1), shared by all columns.
    let mut cp = vec![0.0; m];
    let mut inv = vec![0.0; m];
    let mut denom: f64 = -2.0;
    assert!(denom != 0.0, "singular tridiagonal system");
    inv[0] = 1.0 / denom;
    cp[0] = inv[0];
    for i in 1..m {
        denom = -2.0 - cp[i - 1];
        assert!(denom.abs() > 1e-300, "singular tridiagonal system");
        inv[i] = 1.0 / denom;
        cp[i] = inv[i];
    }
    for col in 0..spec.n1 * spec.n2 {
        let base = col * n3 * k;
        let at = |i: usize| base + (i + 1) * k;
        // forward sweep: u holds d'
        for q in 0..k {
            u[at(0) + q] = r[at(0) + q] * h2 * inv[0];
        }
        for i in 1..m {
            let (o, p) = (at(i), at(i - 1));
            for q in 0..k {
                u[o + q] = (r[o + q] * h2 - u[p + q]) * inv[i];
            }
        }
        for i in (0..m - 1).rev() {
            let (o, n) = (at(i), at(i + 1));
            for q in 0..k {
                u[o + q] -= cp[i] * u[n + q];
            }
        }
    }
}

pub fn d_spatial(f: &ScalarField, mu: usize) -> ScalarField {
    let mut out = ScalarField::zeros(&f.spec);
    match mu {
        1 | 2 => apply_spectral(&f.spec, Axis::spatial(mu), &f.values, &mut out.values, 1.0, false),
        3 => apply_x3(&f.spec, Stencil3::Centered, &f.values, &mut out.values, 1.0, false),
        _ => panic!("spatial derivative index {mu} out of range"),
    }
    out
}

pub fn d_inner(f: &ScalarField, n: usize) -> ScalarField {
    let mut out = ScalarField::zeros(&f.spec);
    apply_spectral(&f.spec, Axis::Inner(n), &f.values, &mut out.values, 1.0, false);
    out
}
