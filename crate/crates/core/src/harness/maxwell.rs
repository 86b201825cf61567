//! Stand-alone abelian axial-gauge Maxwell solver used as an oracle for
//! X-independent data.
//!
//! Each of the D inner components is an independent Maxwell field on the
//! spatial grid. Derivatives along x¹, x² go through FFTs, the x³ Gauss law
//! is solved in the sine eigenbasis of the Dirichlet Laplacian. Nothing here
//! calls the main derivative or solver code.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{IsoError, Result};
use crate::hamiltonian::AxialState;
use crate::lattice::LatticeSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct MaxwellState {
    pub spec: LatticeSpec,
    /// `[A_1, A_2, Π_1, Π_2]`, each `D × n1 × n2 × n3`, x³ fastest.
    pub fields: [Vec<f64>; 4],
    pub t: f64,
}

struct Ops {
    spec: LatticeSpec,
    d: usize,
    fft: [(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>); 2],
    basis: Vec<Vec<f64>>,
    eig: Vec<f64>,
}

impl Ops {
    fn new(spec: &LatticeSpec) -> Self {
        let mut p = FftPlanner::new();
        let mut pair = |n| (p.plan_fft_forward(n), p.plan_fft_inverse(n));
        let fft = [pair(spec.n1), pair(spec.n2)];
        let m = spec.n3 - 1;
        let h = spec.l3 / m as f64;
        let basis = (1..m).map(|q| (0..spec.n3).map(|k| (q as f64 * PI * k as f64 / m as f64).sin()).collect()).collect();
        let eig = (1..m).map(|q| -4.0 / (h * h) * (q as f64 * PI / (2.0 * m as f64)).sin().powi(2)).collect();
        Ops { spec: *spec, d: spec.d_inner, fft, basis, eig }
    }

    fn idx(&self, c: usize, i1: usize, i2: usize, i3: usize) -> usize {
        ((c * self.spec.n1 + i1) * self.spec.n2 + i2) * self.spec.n3 + i3
    }

    /// ∂ along x¹ (axis 0) or x² (axis 1), Nyquist mode dropped.
    fn deriv(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let s = &self.spec;
        let (n, l) = if axis == 0 { (s.n1, s.l1) } else { (s.n2, s.l2) };
        let mut out = vec![0.0; f.len()];
        if n == 1 {
            return out;
        }
        let (fwd, inv) = &self.fft[axis];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let (o1, o2) = if axis == 0 { (s.n2, s.n3) } else { (s.n1, s.n3) };
        for c in 0..self.d {
            for a in 0..o1 {
                for b in 0..o2 {
                    let at = |j: usize| if axis == 0 { self.idx(c, j, a, b) } else { self.idx(c, a, j, b) };
                    for (j, v) in buf.iter_mut().enumerate() {
                        *v = Complex64::new(f[at(j)], 0.0);
                    }
                    fwd.process(&mut buf);
                    for (j, v) in buf.iter_mut().enumerate() {
                        let m = if 2 * j < n { j as i64 } else { j as i64 - n as i64 };
                        let k = if 2 * j == n { 0.0 } else { 2.0 * PI * m as f64 / l };
                        *v *= Complex64::new(0.0, k / n as f64);
                    }
                    inv.process(&mut buf);
                    for (j, v) in buf.iter().enumerate() {
                        out[at(j)] = v.re;
                    }
                }
            }
        }
        out
    }

    fn lap3(&self, f: &[f64]) -> Vec<f64> {
        let n3 = self.spec.n3;
        let h = self.spec.l3 / (n3 - 1) as f64;
        let mut out = vec![0.0; f.len()];
        for col in 0..f.len() / n3 {
            let o = col * n3;
            for k in 1..n3 - 1 {
                out[o + k] = (f[o + k + 1] - 2.0 * f[o + k] + f[o + k - 1]) / (h * h);
            }
        }
        out
    }

    /// u with Λ Δ₃ u = g at interior nodes, u = 0 on both planes.
    fn solve3(&self, g: &[f64]) -> Vec<f64> {
        let n3 = self.spec.n3;
        let m = (n3 - 1) as f64;
        let mut out = vec![0.0; g.len()];
        for col in 0..g.len() / n3 {
            let o = col * n3;
            for (s, e) in self.basis.iter().zip(&self.eig) {
                let c: f64 = (1..n3 - 1).map(|k| g[o + k] * s[k]).sum::<f64>() * 2.0 / m;
                let c = c / (e * self.spec.lambda);
                for k in 1..n3 - 1 {
                    out[o + k] += c * s[k];
                }
            }
        }
        out
    }

    fn dirichlet(&self, f: &mut [f64]) {
        let n3 = self.spec.n3;
        for col in 0..f.len() / n3 {
            f[col * n3] = 0.0;
            f[col * n3 + n3 - 1] = 0.0;
        }
    }

    fn a0(&self, y: &[Vec<f64>; 4]) -> Vec<f64> {
        let g: Vec<f64> = self.deriv(&y[2], 0).iter().zip(self.deriv(&y[3], 1)).map(|(a, b)| a + b).collect();
        self.solve3(&g)
    }

    fn rhs(&self, y: &[Vec<f64>; 4]) -> [Vec<f64>; 4] {
        let lam = self.spec.lambda;
        let a0 = self.a0(y);
        let da: Vec<Vec<f64>> = (0..2)
            .map(|i| y[2 + i].iter().zip(self.deriv(&a0, i)).map(|(p, d)| p / lam + d).collect())
            .collect();
        let f12: Vec<f64> = self.deriv(&y[1], 0).iter().zip(self.deriv(&y[0], 1)).map(|(a, b)| a - b).collect();
        let mut dp1: Vec<f64> =
            self.lap3(&y[0]).iter().zip(self.deriv(&f12, 1)).map(|(l, d)| lam * (l - d)).collect();
        let mut dp2: Vec<f64> =
            self.lap3(&y[1]).iter().zip(self.deriv(&f12, 0)).map(|(l, d)| lam * (l + d)).collect();
        self.dirichlet(&mut dp1);
        self.dirichlet(&mut dp2);
        let mut it = da.into_iter();
        [it.next().unwrap(), it.next().unwrap(), dp1, dp2]
    }
}

fn axpy(y: &[Vec<f64>; 4], s: f64, k: &[Vec<f64>; 4]) -> [Vec<f64>; 4] {
    std::array::from_fn(|i| y[i].iter().zip(&k[i]).map(|(a, b)| a + s * b).collect())
}

impl MaxwellState {
    /// Copies the X = 0 inner site of each component; errors unless the
    /// state is X-independent.
    pub fn from_axial(state: &AxialState) -> Result<Self> {
        let spec = *state.spec();
        let ops = Ops::new(&spec);
        let k = spec.inner_len();
        let srcs = [&state.a()[0], &state.a()[1], &state.pi()[0], &state.pi()[1]];
        let mut fields: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; spec.d_inner * spec.spatial_len()]);
        for (dst, src) in fields.iter_mut().zip(srcs) {
            for (c, comp) in src.comps.iter().enumerate() {
                for i1 in 0..spec.n1 {
                    for i2 in 0..spec.n2 {
                        for i3 in 0..spec.n3 {
                            let base = spec.index(i1, i2, i3, 0);
                            let v = comp.values[base];
                            if comp.values[base..base + k].iter().any(|w| *w != v) {
                                return Err(IsoError::Domain("oracle needs X-independent fields".into()));
                            }
                            dst[ops.idx(c, i1, i2, i3)] = v;
                        }
                    }
                }
            }
        }
        Ok(MaxwellState { spec, fields, t: state.t })
    }

    /// One rk4 step of size `spec.dt`, A₀ re-solved at each stage.
    pub fn step(&mut self) {
        self.evolve(1);
    }

    /// Runs `steps` steps with one set of transforms.
    pub fn evolve(&mut self, steps: usize) {
        let ops = Ops::new(&self.spec);
        let dt = self.spec.dt;
        for _ in 0..steps {
            let y = &self.fields;
            let k1 = ops.rhs(y);
            let k2 = ops.rhs(&axpy(y, 0.5 * dt, &k1));
            let k3 = ops.rhs(&axpy(y, 0.5 * dt, &k2));
            let k4 = ops.rhs(&axpy(y, dt, &k3));
            for i in 0..4 {
                for q in 0..self.fields[i].len() {
                    self.fields[i][q] += dt / 6.0 * ((k1[i][q] + k4[i][q]) + 2.0 * (k2[i][q] + k3[i][q]));
                }
            }
            self.t += dt;
        }
    }

    /// Resolved A₀ for the current fields.
    pub fn a0(&self) -> Vec<f64> {
        Ops::new(&self.spec).a0(&self.fields)
    }

    /// Relative L² distance to an axial state, every inner site compared
    /// with the single oracle value.
    pub fn rel_diff(&self, state: &AxialState) -> Result<f64> {
        let spec = *state.spec();
        if !spec.same_shape(&self.spec) {
            return Err(IsoError::Shape("oracle and state grids differ".into()));
        }
        let ops = Ops::new(&spec);
        let k = spec.inner_len();
        let srcs = [&state.a()[0], &state.a()[1], &state.pi()[0], &state.pi()[1]];
        let (mut num, mut den) = (0.0, 0.0);
        for (mine, src) in self.fields.iter().zip(srcs) {
            for (c, comp) in src.comps.iter().enumerate() {
                for i1 in 0..spec.n1 {
                    for i2 in 0..spec.n2 {
                        for i3 in 0..spec.n3 {
                            let x = mine[ops.idx(c, i1, i2, i3)];
                            let base = spec.index(i1, i2, i3, 0);
                            for y in &comp.values[base..base + k] {
                                num += (x - y) * (x - y);
                                den += x * x;
                            }
                        }
                    }
                }
            }
        }
        Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
    }
}
