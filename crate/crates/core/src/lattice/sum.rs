//! Pairwise reductions. Block size is fixed so results are reproducible.

const BLOCK: usize = 64;

pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= BLOCK {
        let mut s = 0.0;
        for v in x {
            s += v;
        }
        return s;
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n`.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= BLOCK {
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            return s;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), &|i| a[i] * b[i])
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_integers() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&x), 499500.0);
        assert_eq!(pairwise_sum_by(1000, &|i| x[i]), 499500.0);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
