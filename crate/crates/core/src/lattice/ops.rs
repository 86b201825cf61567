//! Low-level slice kernels shared by the field modules.

use super::LatticeSpec;

/// `(outer, n, inner)` strides of a storage axis.
pub fn axis_split(dims: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    (outer, dims[axis], inner)
}

pub fn zero_boundary(spec: &LatticeSpec, v: &mut [f64]) {
    let k = spec.inner_len();
    let n3 = spec.n3;
    for col in 0..spec.n1 * spec.n2 {
        let base = col * n3 * k;
        v[base..base + k].fill(0.0);
        if n3 > 1 {
            v[base + (n3 - 1) * k..base + n3 * k].fill(0.0);
        }
    }
}

/// `out[i] += a * x[i] * y[i]`.
#[inline]
pub fn acc_prod(out: &mut [f64], a: f64, x: &[f64], y: &[f64]) {
    for ((o, p), q) in out.iter_mut().zip(x).zip(y) {
        *o += a * p * q;
    }
}

/// `out[i] += a * x[i]`.
#[inline]
pub fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, p) in out.iter_mut().zip(x) {
        *o += a * p;
    }
}
