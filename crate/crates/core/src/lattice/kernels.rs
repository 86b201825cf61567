//! Small dense matrices applied along one axis of a flat buffer.
//!
//! `dst[o, i, r] += Σ_j m[i][j] src[o, j, r]` where the buffer is viewed as
//! `(outer, n, inner)` and `mt[j * n + i] = m[i][j]`. AVX2/FMA paths are
//! chosen at run time; the portable path gives the same values up to rounding.

#[cfg(target_arch = "x86_64")]
fn has_fma() -> bool {
    use std::sync::OnceLock;
    static F: OnceLock<bool> = OnceLock::new();
    *F.get_or_init(|| is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma"))
}

/// Below this many values per call the work stays on the calling thread.
const PAR_MIN: usize = 1 << 15;

/// Lines are independent, so the split over threads never changes a value.
pub fn matmul_axis(mt: &[f64], outer: usize, n: usize, inner: usize, src: &[f64], dst: &mut [f64]) {
    debug_assert_eq!(mt.len(), n * n);
    debug_assert!(src.len() >= outer * n * inner && dst.len() >= outer * n * inner);
    let line = n * inner;
    let threads = rayon::current_num_threads();
    if threads > 1 && outer > 1 && outer * line >= PAR_MIN {
        use rayon::prelude::*;
        let per = outer.div_ceil(4 * threads).max(1);
        src[..outer * line]
            .par_chunks(per * line)
            .zip(dst[..outer * line].par_chunks_mut(per * line))
            .for_each(|(s, d)| matmul_serial(mt, s.len() / line, n, inner, s, d));
        return;
    }
    matmul_serial(mt, outer, n, inner, src, dst);
}

fn matmul_serial(mt: &[f64], outer: usize, n: usize, inner: usize, src: &[f64], dst: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if has_fma() {
        if inner == 1 {
            macro_rules! lines {
                ($($k:literal),*) => {
                    match n {
                        $($k => {
                            // SAFETY: CPU support checked above
                            unsafe { avx::lines::<$k>(mt, outer, src, dst) };
                            return;
                        })*
                        _ => {}
                    }
                };
            }
            lines!(2, 4, 8, 16, 32, 64);
        } else if inner % 4 == 0 && n % 8 == 0 {
            // SAFETY: CPU support checked above; shapes as asserted
            unsafe { avx::strided(mt, outer, n, inner, src, dst) };
            return;
        }
    }
    portable(mt, outer, n, inner, src, dst);
}

fn portable(mt: &[f64], outer: usize, n: usize, inner: usize, src: &[f64], dst: &mut [f64]) {
    if inner == 1 {
        let mut row = vec![0.0; n];
        for o in 0..outer {
            row.fill(0.0);
            for (j, sj) in src[o * n..(o + 1) * n].iter().enumerate() {
                for (r, c) in row.iter_mut().zip(&mt[j * n..(j + 1) * n]) {
                    *r += c * sj;
                }
            }
            for (d, r) in dst[o * n..(o + 1) * n].iter_mut().zip(&row) {
                *d += r;
            }
        }
        return;
    }
    const C: usize = 32;
    let mut acc = vec![0.0; n * C];
    for o in 0..outer {
        let base = o * n * inner;
        let mut c0 = 0;
        while c0 < inner {
            let w = C.min(inner - c0);
            acc.fill(0.0);
            for j in 0..n {
                let s = &src[base + j * inner + c0..base + j * inner + c0 + w];
                for i in 0..n {
                    let c = mt[j * n + i];
                    if c == 0.0 {
                        continue;
                    }
                    for (a, v) in acc[i * C..i * C + w].iter_mut().zip(s) {
                        *a += c * v;
                    }
                }
            }
            for i in 0..n {
                let d = &mut dst[base + i * inner + c0..base + i * inner + c0 + w];
                for (x, a) in d.iter_mut().zip(&acc[i * C..i * C + w]) {
                    *x += a;
                }
            }
            c0 += w;
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx {
    use std::arch::x86_64::*;

    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn lines<const N: usize>(mt: &[f64], outer: usize, src: &[f64], dst: &mut [f64]) {
        let mut m = [[0.0f64; N]; N];
        for j in 0..N {
            m[j].copy_from_slice(&mt[j * N..(j + 1) * N]);
        }
        for (s, d) in src[..outer * N].chunks_exact(N).zip(dst[..outer * N].chunks_exact_mut(N)) {
            let mut acc = [0.0f64; N];
            for j in 0..N {
                let v = s[j];
                for i in 0..N {
                    acc[i] = m[j][i].mul_add(v, acc[i]);
                }
            }
            for i in 0..N {
                d[i] += acc[i];
            }
        }
    }

    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn strided(mt: &[f64], outer: usize, n: usize, inner: usize, src: &[f64], dst: &mut [f64]) {
        let sp = src.as_ptr();
        let dp = dst.as_mut_ptr();
        for o in 0..outer {
            let base = o * n * inner;
            for c0 in (0..inner).step_by(4) {
                for g in (0..n).step_by(8) {
                    let mut acc = [_mm256_setzero_pd(); 8];
                    for j in 0..n {
                        let s = _mm256_loadu_pd(sp.add(base + j * inner + c0));
                        let row = &mt[j * n + g..j * n + g + 8];
                        for ii in 0..8 {
                            acc[ii] = _mm256_fmadd_pd(_mm256_set1_pd(row[ii]), s, acc[ii]);
                        }
                    }
                    for (ii, a) in acc.iter().enumerate() {
                        let p = dp.add(base + (g + ii) * inner + c0);
                        _mm256_storeu_pd(p, _mm256_add_pd(_mm256_loadu_pd(p), *a));
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(mt: &[f64], outer: usize, n: usize, inner: usize, src: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for o in 0..outer {
            for i in 0..n {
                for r in 0..inner {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += mt[j * n + i] * src[(o * n + j) * inner + r];
                    }
                    out[(o * n + i) * inner + r] = s;
                }
            }
        }
        out
    }

    #[test]
    fn all_paths_match_reference() {
        for &(outer, n, inner) in &[(3, 16, 1), (5, 8, 12), (2, 16, 20), (4, 6, 3), (3, 5, 1), (2, 8, 1)] {
            let mt: Vec<f64> = (0..n * n).map(|i| ((i * 7 % 13) as f64 - 6.0) * 0.1).collect();
            let src: Vec<f64> = (0..outer * n * inner).map(|i| (i as f64 * 0.37).sin()).collect();
            let want = reference(&mt, outer, n, inner, &src);
            let mut got = vec![0.0; src.len()];
            matmul_axis(&mt, outer, n, inner, &src, &mut got);
            let mut port = vec![0.0; src.len()];
            portable(&mt, outer, n, inner, &src, &mut port);
            for ((a, b), c) in got.iter().zip(&want).zip(&port) {
                assert!((a - b).abs() < 1e-12 && (c - b).abs() < 1e-12);
            }
        }
    }
}
