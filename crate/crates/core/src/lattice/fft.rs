//! Cached FFT plans and multi-axis transforms on flat complex buffers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::ops::axis_split;

type Plans = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

fn plans() -> &'static Mutex<Plans> {
    static P: OnceLock<Mutex<Plans>> = OnceLock::new();
    P.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut map = plans().lock().unwrap();
    map.entry((n, inverse))
        .or_insert_with(|| {
            let mut p = FftPlanner::new();
            if inverse {
                p.plan_fft_inverse(n)
            } else {
                p.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Unnormalized transform along one storage axis.
pub fn fft_axis(buf: &mut [Complex64], dims: &[usize], axis: usize, inverse: bool) {
    let (outer, n, inner) = axis_split(dims, axis);
    if n == 1 {
        return;
    }
    let p = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); p.get_inplace_scratch_len()];
    if inner == 1 {
        p.process_with_scratch(buf, &mut scratch);
        return;
    }
    // transpose each (n × inner) block, transform rows, transpose back
    let mut tmp = vec![Complex64::new(0.0, 0.0); n * inner];
    for o in 0..outer {
        let block = &mut buf[o * n * inner..(o + 1) * n * inner];
        for i in 0..n {
            for r in 0..inner {
                tmp[r * n + i] = block[i * inner + r];
            }
        }
        p.process_with_scratch(&mut tmp, &mut scratch);
        for i in 0..n {
            for r in 0..inner {
                block[i * inner + r] = tmp[r * n + i];
            }
        }
    }
}

/// Transform over the trailing `count` axes, normalizing on the inverse.
pub fn fft_trailing(buf: &mut [Complex64], dims: &[usize], count: usize, inverse: bool) {
    let first = dims.len() - count;
    for a in first..dims.len() {
        fft_axis(buf, dims, a, inverse);
    }
    if inverse {
        let norm: usize = dims[first..].iter().product();
        let s = 1.0 / norm as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }
}

/// Signed integer mode of FFT bin `j` on `n` points; the Nyquist bin maps to
/// `None` since it carries no derivative.
pub fn mode(j: usize, n: usize) -> Option<i64> {
    if n % 2 == 0 && j == n / 2 && n > 1 {
        None
    } else if j <= n / 2 {
        Some(j as i64)
    } else {
        Some(j as i64 - n as i64)
    }
}

/// Signed mode including Nyquist (reported as `n/2`).
pub fn mode_full(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}
