//! Grid geometry, field storage, derivatives, inner integration and the
//! divergence-free projection.
//!
//! Flat layout is row-major over `[n1, n2, n3, k, .., k]` with `D` inner axes.
//! Axes x¹, x² and all inner axes are periodic. Axis x³ has Dirichlet planes
//! at index 0 and `n3 - 1`.

pub mod deriv;
pub mod fft;
pub mod kernels;
pub mod ops;
pub mod project;
pub mod random;
pub mod snapshot;
pub mod sum;

use crate::error::{IsoError, Result};

pub use deriv::{d_inner, d_spatial, Axis};
pub use project::{divfree_project, inner_divergence, inner_integral};
pub use random::random_bandlimited;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSpec {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub d_inner: usize,
    pub k_inner: usize,
    pub l_inner: f64,
    pub lambda: f64,
    pub dt: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self::desk()
    }
}

impl LatticeSpec {
    /// 16×16×17 spatial, D = 2, 16² inner, all extents 2π, Λ = 1.
    pub fn desk() -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        LatticeSpec {
            n1: 16,
            n2: 16,
            n3: 17,
            l1: tau,
            l2: tau,
            l3: tau,
            d_inner: 2,
            k_inner: 16,
            l_inner: tau,
            lambda: 1.0,
            dt: 1e-3,
        }
    }

    /// Small grid used by the Poisson-bracket oracle: 8×8×9 × 8².
    pub fn small() -> Self {
        LatticeSpec { n1: 8, n2: 8, n3: 9, k_inner: 8, ..Self::desk() }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(IsoError::Spec(m));
        for (name, n) in [("n1", self.n1), ("n2", self.n2), ("n3", self.n3), ("k_inner", self.k_inner)] {
            if n < 1 {
                return err(format!("{name} must be >= 1"));
            }
        }
        for (name, n) in [("n1", self.n1), ("n2", self.n2), ("k_inner", self.k_inner)] {
            if !n.is_power_of_two() {
                return err(format!("{name} = {n} must be a power of two (periodic axis)"));
            }
        }
        if self.d_inner < 1 {
            return err("d_inner must satisfy D >= 1".into());
        }
        for (name, v) in [("l1", self.l1), ("l2", self.l2), ("l3", self.l3), ("l_inner", self.l_inner)] {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("{name} must be positive"));
            }
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return err("lambda must be > 0".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return err("dt must be > 0".into());
        }
        if self.k_inner.checked_pow(self.d_inner as u32).is_none() || self.len_checked().is_none() {
            return err("grid too large".into());
        }
        Ok(())
    }

    fn len_checked(&self) -> Option<usize> {
        self.k_inner
            .checked_pow(self.d_inner as u32)?
            .checked_mul(self.n1)?
            .checked_mul(self.n2)?
            .checked_mul(self.n3)
    }

    pub fn inner_len(&self) -> usize {
        self.k_inner.pow(self.d_inner as u32)
    }

    pub fn spatial_len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn len(&self) -> usize {
        self.spatial_len() * self.inner_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        self.l2 / self.n2 as f64
    }

    /// x³ spacing; the grid includes both boundary planes.
    pub fn h3(&self) -> f64 {
        if self.n3 > 1 {
            self.l3 / (self.n3 - 1) as f64
        } else {
            self.l3
        }
    }

    pub fn dx_inner(&self) -> f64 {
        self.l_inner / self.k_inner as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h1() * self.h2() * self.h3()
    }

    /// Λ^D ΔX^D.
    pub fn inner_weight(&self) -> f64 {
        (self.lambda * self.dx_inner()).powi(self.d_inner as i32)
    }

    /// Grid dimensions in storage order.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.n1, self.n2, self.n3];
        d.extend(std::iter::repeat(self.k_inner).take(self.d_inner));
        d
    }

    /// Same grid counts and inner dimension.
    pub fn same_shape(&self, o: &LatticeSpec) -> bool {
        self.n1 == o.n1 && self.n2 == o.n2 && self.n3 == o.n3 && self.d_inner == o.d_inner && self.k_inner == o.k_inner
    }

    pub fn index(&self, i1: usize, i2: usize, i3: usize, inner: usize) -> usize {
        ((i1 * self.n2 + i2) * self.n3 + i3) * self.inner_len() + inner
    }

    /// Splits a flat index into `(i1, i2, i3, inner)`.
    pub fn split(&self, idx: usize) -> (usize, usize, usize, usize) {
        let k = self.inner_len();
        let inner = idx % k;
        let s = idx / k;
        let i3 = s % self.n3;
        let s = s / self.n3;
        (s / self.n2, s % self.n2, i3, inner)
    }

    /// Inner multi-index, most significant axis first.
    pub fn inner_multi(&self, mut inner: usize) -> Vec<usize> {
        let mut m = vec![0; self.d_inner];
        for a in (0..self.d_inner).rev() {
            m[a] = inner % self.k_inner;
            inner /= self.k_inner;
        }
        m
    }

    pub fn coords(&self, idx: usize) -> ([f64; 3], Vec<f64>) {
        let (i1, i2, i3, inner) = self.split(idx);
        let x = [i1 as f64 * self.h1(), i2 as f64 * self.h2(), i3 as f64 * self.h3()];
        let dx = self.dx_inner();
        let xx = self.inner_multi(inner).into_iter().map(|m| m as f64 * dx).collect();
        (x, xx)
    }

    /// True when `i3` is a Dirichlet boundary plane.
    pub fn is_boundary(&self, i3: usize) -> bool {
        i3 == 0 || i3 + 1 >= self.n3
    }
}

fn shape_err(a: &LatticeSpec, b: &LatticeSpec) -> IsoError {
    IsoError::Shape(format!(
        "{}x{}x{} D={} k={} vs {}x{}x{} D={} k={}",
        a.n1, a.n2, a.n3, a.d_inner, a.k_inner, b.n1, b.n2, b.n3, b.d_inner, b.k_inner
    ))
}

pub fn check_shape(a: &LatticeSpec, b: &LatticeSpec) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(shape_err(a, b))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub spec: LatticeSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: &LatticeSpec) -> Self {
        ScalarField { spec: *spec, values: vec![0.0; spec.len()] }
    }

    pub fn from_values(spec: &LatticeSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(IsoError::Shape(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        Ok(ScalarField { spec: *spec, values })
    }

    /// Samples `f(x, X)` on the grid.
    pub fn from_fn<F: Fn([f64; 3], &[f64]) -> f64>(spec: &LatticeSpec, f: F) -> Self {
        let mut out = Self::zeros(spec);
        for (idx, v) in out.values.iter_mut().enumerate() {
            let (x, xx) = spec.coords(idx);
            *v = f(x, &xx);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        sum::norm2(&self.values)
    }

    /// Zeroes both x³ boundary planes.
    pub fn enforce_dirichlet(&mut self) {
        ops::zero_boundary(&self.spec, &mut self.values);
    }

    pub fn max_boundary_abs(&self) -> f64 {
        let s = &self.spec;
        let mut m: f64 = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let (_, _, i3, _) = s.split(idx);
            if s.is_boundary(i3) {
                m = m.max(v.abs());
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraField {
    pub comps: Vec<ScalarField>,
}

impl AlgebraField {
    pub fn zeros(spec: &LatticeSpec) -> Self {
        AlgebraField { comps: (0..spec.d_inner).map(|_| ScalarField::zeros(spec)).collect() }
    }

    pub fn from_comps(comps: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = comps.first() else {
            return Err(IsoError::Shape("algebra field needs D >= 1 components".into()));
        };
        let spec = first.spec;
        if comps.len() != spec.d_inner {
            return Err(IsoError::Shape(format!("expected {} components, got {}", spec.d_inner, comps.len())));
        }
        for c in &comps {
            check_shape(&spec, &c.spec)?;
        }
        Ok(AlgebraField { comps })
    }

    /// Samples component functions `f(M, x, X)`.
    pub fn from_fn<F: Fn(usize, [f64; 3], &[f64]) -> f64>(spec: &LatticeSpec, f: F) -> Self {
        AlgebraField { comps: (0..spec.d_inner).map(|m| ScalarField::from_fn(spec, |x, xx| f(m, x, xx))).collect() }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.comps[0].spec
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn norm(&self) -> f64 {
        let parts: Vec<f64> = self.comps.iter().map(|c| sum::dot(&c.values, &c.values)).collect();
        sum::pairwise_sum(&parts).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.comps {
            for v in &mut c.values {
                *v *= s;
            }
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &AlgebraField) {
        for (c, o) in self.comps.iter_mut().zip(&other.comps) {
            for (v, w) in c.values.iter_mut().zip(&o.values) {
                *v += s * w;
            }
        }
    }

    pub fn add(&self, other: &AlgebraField) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &AlgebraField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn enforce_dirichlet(&mut self) {
        for c in &mut self.comps {
            c.enforce_dirichlet();
        }
    }

    pub fn check_same(&self, other: &AlgebraField) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(IsoError::Shape("component count differs".into()));
        }
        check_shape(self.spec(), other.spec())
    }

    /// Inner dot product `Σ_M a^M b^M` per site.
    pub fn dot_density(&self, other: &AlgebraField) -> Vec<f64> {
        let n = self.spec().len();
        let mut out = vec![0.0; n];
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for i in 0..n {
                out[i] += a.values[i] * b.values[i];
            }
        }
        out
    }

    /// Copies x³ plane `plane` onto every plane, boundaries included.
    pub fn uniform_in_x3(&self, plane: usize) -> Self {
        let spec = *self.spec();
        let k = spec.inner_len();
        let n3 = spec.n3;
        let mut out = self.clone();
        for (o, c) in out.comps.iter_mut().zip(&self.comps) {
            for col in 0..spec.n1 * spec.n2 {
                let src = &c.values[(col * n3 + plane) * k..(col * n3 + plane + 1) * k];
                for i3 in 0..n3 {
                    o.values[(col * n3 + i3) * k..(col * n3 + i3 + 1) * k].copy_from_slice(src);
                }
            }
        }
        out
    }

    pub fn with_spec(mut self, spec: &LatticeSpec) -> Self {
        for c in &mut self.comps {
            c.spec = *spec;
        }
        self
    }
}

/// `‖a − b‖ / ‖b‖`, or the absolute difference when `b` vanishes.
pub fn rel_diff(a: &AlgebraField, b: &AlgebraField) -> f64 {
    let d = a.sub(b).norm();
    let s = b.norm();
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

/// Ω_D = 2 π^{D/2} / ((2π)^D Γ(D/2)).
pub fn omega_d(d: i64) -> Result<f64> {
    if d <= 0 {
        return Err(IsoError::Domain(format!("omega_d needs d >= 1, got {d}")));
    }
    let pi = std::f64::consts::PI;
    let df = d as f64;
    Ok(2.0 * pi.powf(df / 2.0) / ((2.0 * pi).powf(df) * gamma_half(d as u64)))
}

/// Γ(n/2) for n ≥ 1 by the recurrence from Γ(1) = 1 and Γ(1/2) = √π.
fn gamma_half(n: u64) -> f64 {
    let (mut g, mut x) = if n % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while 2.0 * x < n as f64 {
        g *= x;
        x += 1.0;
    }
    g
}
