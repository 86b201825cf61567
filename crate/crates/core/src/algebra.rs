//! Lie algebra of divergence-free inner vector fields and its action on fields.

use rustfft::num_complex::Complex64;

use crate::error::{IsoError, Result};
use crate::lagrangian::{FieldStrength, GaugeConfig};
use crate::lattice::deriv::{apply_spectral, apply_x3, Axis, Stencil3};
use crate::lattice::fft::mode;
use crate::lattice::{check_shape, AlgebraField, LatticeSpec, ScalarField};

/// Local or global gauge parameter. `eps_dot` is ∂₀E when time dependent.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeParameter {
    pub eps: AlgebraField,
    pub eps_dot: Option<AlgebraField>,
}

impl GaugeParameter {
    pub fn new(eps: AlgebraField) -> Self {
        GaugeParameter { eps, eps_dot: None }
    }
}

/// `out^M += s · [a, b]^M` with the flux form ∇_N(a^N b^M − b^N a^M).
pub fn bracket_acc(a: &AlgebraField, b: &AlgebraField, s: f64, out: &mut AlgebraField) {
    let spec = *a.spec();
    let d = a.dim();
    let n = spec.len();
    let mut t = vec![0.0; n];
    for p in 0..d {
        for q in p + 1..d {
            let (ap, aq, bp, bq) = (&a.comps[p].values, &a.comps[q].values, &b.comps[p].values, &b.comps[q].values);
            for i in 0..n {
                t[i] = ap[i] * bq[i] - bp[i] * aq[i];
            }
            // T^{pq} feeds component q through ∇_p and component p through −∇_q
            apply_spectral(&spec, Axis::Inner(p), &t, &mut out.comps[q].values, s, true);
            apply_spectral(&spec, Axis::Inner(q), &t, &mut out.comps[p].values, -s, true);
        }
    }
}

/// [e, f]^N = e^M ∇_M f^N − f^M ∇_M e^N.
pub fn lie_bracket(e: &AlgebraField, f: &AlgebraField) -> Result<AlgebraField> {
    e.check_same(f)?;
    let mut out = AlgebraField::zeros(e.spec());
    bracket_acc(e, f, 1.0, &mut out);
    Ok(out)
}

/// Inner gradient ∇_N v^M, indexed `[N][M]`.
pub fn inner_gradient(v: &AlgebraField) -> Vec<Vec<Vec<f64>>> {
    let spec = *v.spec();
    (0..v.dim())
        .map(|nn| {
            v.comps
                .iter()
                .map(|c| {
                    let mut o = vec![0.0; spec.len()];
                    apply_spectral(&spec, Axis::Inner(nn), &c.values, &mut o, 1.0, false);
                    o
                })
                .collect()
        })
        .collect()
}

/// Antisymmetric part of the inner gradient, ω^{NK} = ∇_N v^K − ∇_K v^N for N < K.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerCurl {
    pub d: usize,
    pub comps: Vec<Vec<f64>>,
}

impl InnerCurl {
    pub fn of(v: &AlgebraField) -> Self {
        let spec = *v.spec();
        let d = v.dim();
        let mut comps = Vec::with_capacity(d * (d - 1) / 2);
        for nn in 0..d {
            for kk in nn + 1..d {
                let mut o = vec![0.0; spec.len()];
                apply_spectral(&spec, Axis::Inner(nn), &v.comps[kk].values, &mut o, 1.0, true);
                apply_spectral(&spec, Axis::Inner(kk), &v.comps[nn].values, &mut o, -1.0, true);
                comps.push(o);
            }
        }
        InnerCurl { d, comps }
    }

    /// Slot of (N, K) with N < K.
    fn slot(&self, nn: usize, kk: usize) -> usize {
        nn * (2 * self.d - nn - 1) / 2 + (kk - nn - 1)
    }
}

/// `out += s · g` with Σ g·v = Σ w·[b, v] for every v; the result is not
/// projected. `curl_w` is the inner curl of w.
pub fn bracket_adjoint_acc(b: &AlgebraField, curl_w: &InnerCurl, s: f64, out: &mut AlgebraField) {
    let d = b.dim();
    for kk in 0..d {
        let o = &mut out.comps[kk].values;
        for nn in 0..d {
            if nn == kk {
                continue;
            }
            // b^N (∇_K w^N − ∇_N w^K)
            let (c, sign) = if kk < nn { (&curl_w.comps[curl_w.slot(kk, nn)], s) } else { (&curl_w.comps[curl_w.slot(nn, kk)], -s) };
            let bn = &b.comps[nn].values;
            for ((o, x), y) in o.iter_mut().zip(bn).zip(c) {
                *o += sign * x * y;
            }
        }
    }
}

/// δψ = −E^N ∇_N ψ.
pub fn gauge_vary_scalar(psi: &ScalarField, e: &GaugeParameter) -> Result<ScalarField> {
    check_shape(&psi.spec, e.eps.spec())?;
    let spec = psi.spec;
    let mut out = ScalarField::zeros(&spec);
    let mut g = vec![0.0; spec.len()];
    for (nn, en) in e.eps.comps.iter().enumerate() {
        apply_spectral(&spec, Axis::Inner(nn), &psi.values, &mut g, 1.0, false);
        for i in 0..spec.len() {
            out.values[i] -= en.values[i] * g[i];
        }
    }
    Ok(out)
}

/// ∂_μ of an algebra field with the gauge-field stencils; μ = 0 uses `dot`.
pub fn d_mu(v: &AlgebraField, mu: usize, dot: Option<&AlgebraField>) -> AlgebraField {
    let spec = *v.spec();
    match mu {
        0 => dot.cloned().unwrap_or_else(|| AlgebraField::zeros(&spec)),
        1 | 2 => {
            let mut out = AlgebraField::zeros(&spec);
            for (o, c) in out.comps.iter_mut().zip(&v.comps) {
                apply_spectral(&spec, Axis::spatial(mu), &c.values, &mut o.values, 1.0, false);
            }
            out
        }
        3 => {
            let mut out = AlgebraField::zeros(&spec);
            for (o, c) in out.comps.iter_mut().zip(&v.comps) {
                apply_x3(&spec, Stencil3::Centered, &c.values, &mut o.values, 1.0, false);
            }
            out
        }
        _ => panic!("spacetime index {mu} out of range"),
    }
}

/// δA_μ = ∂_μE + [A_μ, E] for μ = 0..3.
pub fn gauge_vary_gauge(a: &GaugeConfig, e: &GaugeParameter) -> Result<Vec<AlgebraField>> {
    check_shape(a.spec(), e.eps.spec())?;
    Ok((0..4)
        .map(|mu| {
            let mut out = d_mu(&e.eps, mu, e.eps_dot.as_ref());
            bracket_acc(&a.a[mu], &e.eps, 1.0, &mut out);
            out
        })
        .collect())
}

/// A + ε δA, with ∂₀A moved by ε ∂₀δA_μ = ε(∂_μĖ + [Ȧ_μ, E] + [A_μ, Ė]).
/// ∂₀Ė is taken as zero.
pub fn gauge_move(a: &GaugeConfig, e: &GaugeParameter, eps: f64) -> Result<GaugeConfig> {
    let da = gauge_vary_gauge(a, e)?;
    let moved: Vec<AlgebraField> = a
        .a
        .iter()
        .zip(&da)
        .map(|(x, d)| {
            let mut y = x.clone();
            y.axpy(eps, d);
            y
        })
        .collect();
    let dot = match &a.a_dot {
        None if e.eps_dot.is_none() => None,
        _ => {
            let spec = *a.spec();
            let zeros: Vec<AlgebraField> = (0..4).map(|_| AlgebraField::zeros(&spec)).collect();
            let ad = a.a_dot.as_ref().unwrap_or(&zeros);
            Some(
                (0..4)
                    .map(|mu| {
                        let mut y = ad[mu].clone();
                        bracket_acc(&ad[mu], &e.eps, eps, &mut y);
                        if let Some(ed) = &e.eps_dot {
                            if mu > 0 {
                                y.axpy(eps, &d_mu(ed, mu, None));
                            }
                            bracket_acc(&a.a[mu], ed, eps, &mut y);
                        }
                        y
                    })
                    .collect(),
            )
        }
    };
    GaugeConfig::new(moved, dot)
}

/// δF_μν = [F_μν, E] for the six stored pairs, at node placement.
pub fn gauge_vary_strength(f: &FieldStrength, e: &GaugeParameter) -> Result<Vec<AlgebraField>> {
    check_shape(f.spec(), e.eps.spec())?;
    Ok(FieldStrength::PAIRS
        .iter()
        .map(|&(mu, nu)| {
            let fv = f.node(mu, nu);
            let mut out = AlgebraField::zeros(f.spec());
            bracket_acc(&fv, &e.eps, 1.0, &mut out);
            out
        })
        .collect())
}

/// Trigonometric polynomial Σ c · {sin, cos}(m · 2π X / L).
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigTerm {
    pub coef: f64,
    pub cosine: bool,
    pub mode: u32,
}

impl TrigPoly {
    pub fn eval(&self, x: f64, period: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI / period;
        self.terms
            .iter()
            .map(|t| {
                let a = t.mode as f64 * w * x;
                t.coef * if t.cosine { a.cos() } else { a.sin() }
            })
            .sum()
    }

    pub fn deriv(&self, x: f64, period: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI / period;
        self.terms
            .iter()
            .map(|t| {
                let k = t.mode as f64 * w;
                let a = k * x;
                t.coef * k * if t.cosine { -a.sin() } else { a.cos() }
            })
            .sum()
    }

    pub fn negated(&self) -> Self {
        TrigPoly { terms: self.terms.iter().map(|t| TrigTerm { coef: -t.coef, ..t.clone() }).collect() }
    }

    /// Parses `sin`, `0.5*cos2`, `sin+0.25*sin3`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || IsoError::UnsupportedMap(format!("bad trigonometric polynomial '{s}'"));
        let mut terms = Vec::new();
        for raw in s.split('+') {
            let raw = raw.trim();
            let (coef, body) = match raw.split_once('*') {
                Some((c, b)) => (c.trim().parse::<f64>().map_err(|_| bad())?, b.trim()),
                None => (1.0, raw),
            };
            let (cosine, rest) = if let Some(r) = body.strip_prefix("sin") {
                (false, r)
            } else if let Some(r) = body.strip_prefix("cos") {
                (true, r)
            } else {
                return Err(bad());
            };
            let mode = if rest.is_empty() { 1 } else { rest.parse::<u32>().map_err(|_| bad())? };
            terms.push(TrigTerm { coef, cosine, mode });
        }
        Ok(TrigPoly { terms })
    }

    pub fn render(&self) -> String {
        self.terms
            .iter()
            .map(|t| format!("{:?}*{}{}", t.coef, if t.cosine { "cos" } else { "sin" }, t.mode))
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Exact unimodular maps of the inner torus. Axes are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum VolumePreservingMap {
    Identity,
    /// X' = X + c.
    Shift(Vec<f64>),
    /// X'^target = X^target + f(X^source).
    Shear { target: usize, source: usize, f: TrigPoly },
    /// X'^a = −X^b, X'^b = X^a.
    QuarterTurn { a: usize, b: usize },
}

impl VolumePreservingMap {
    /// Grammar (1-based axes): `identity`, `shift:c1,c2,..`, `shear:a,b:<poly>`,
    /// `rot:a,b`. `<poly>` is a `+`-separated list of `[coef*]sin[m]` / `[coef*]cos[m]`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || IsoError::UnsupportedMap(format!("unknown map '{s}'"));
        let s = s.trim();
        if s == "identity" {
            return Ok(Self::Identity);
        }
        let (tag, rest) = s.split_once(':').ok_or_else(bad)?;
        let axes = |t: &str| -> Result<(usize, usize)> {
            let (a, b) = t.split_once(',').ok_or_else(bad)?;
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a == 0 || b == 0 || a == b {
                return Err(bad());
            }
            Ok((a - 1, b - 1))
        };
        match tag {
            "shift" => Ok(Self::Shift(
                rest.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?,
            )),
            "shear" => {
                let (ax, poly) = rest.split_once(':').ok_or_else(bad)?;
                let (target, source) = axes(ax)?;
                Ok(Self::Shear { target, source, f: TrigPoly::parse(poly)? })
            }
            "rot" => {
                let (a, b) = axes(rest)?;
                Ok(Self::QuarterTurn { a, b })
            }
            _ => Err(bad()),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Shift(c) => format!("shift:{}", c.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")),
            Self::Shear { target, source, f } => format!("shear:{},{}:{}", target + 1, source + 1, f.render()),
            Self::QuarterTurn { a, b } => format!("rot:{},{}", a + 1, b + 1),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            Self::Identity => Self::Identity,
            Self::Shift(c) => Self::Shift(c.iter().map(|v| -v).collect()),
            Self::Shear { target, source, f } => Self::Shear { target: *target, source: *source, f: f.negated() },
            Self::QuarterTurn { a, b } => Self::QuarterTurn { a: *b, b: *a },
        }
    }

    /// Errors unless the map acts on axes of this inner torus.
    pub fn check_fits(&self, spec: &LatticeSpec) -> Result<()> {
        let d = spec.d_inner;
        let ok = match self {
            Self::Identity => true,
            Self::Shift(c) => c.len() == d,
            Self::Shear { target, source, .. } => *target < d && *source < d && target != source,
            Self::QuarterTurn { a, b } => *a < d && *b < d && a != b,
        };
        if ok {
            Ok(())
        } else {
            Err(IsoError::UnsupportedMap(format!("{} does not fit D = {d}", self.render())))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PullbackKind {
    Scalar,
    Vector,
}

pub enum Pulled {
    Scalar(ScalarField),
    Vector(AlgebraField),
}

/// Per-line shift `g(Y) = f(Y − s)` along inner axis `axis`, where the shift
/// may depend on the site through `shift(flat_index_of_line_start)`.
fn shift_lines<S: Fn(usize) -> f64>(spec: &LatticeSpec, v: &[f64], axis: usize, shift: S) -> Vec<f64> {
    let dims = spec.dims();
    let a = 3 + axis;
    let k = spec.k_inner;
    let stride: usize = dims[a + 1..].iter().product();
    let dx = spec.dx_inner();
    let w = 2.0 * std::f64::consts::PI / spec.l_inner;
    let mut out = vec![0.0; v.len()];
    let block = stride * k;
    let mut line = vec![Complex64::new(0.0, 0.0); k];
    let fwd = crate::lattice::fft::plan(k, false);
    let inv = crate::lattice::fft::plan(k, true);
    for base in (0..v.len()).step_by(block) {
        for r in 0..stride {
            let start = base + r;
            let s = shift(start);
            let cells = s / dx;
            if (cells - cells.round()).abs() < 1e-12 {
                let c = (cells.round() as i64).rem_euclid(k as i64) as usize;
                for i in 0..k {
                    out[start + ((i + c) % k) * stride] = v[start + i * stride];
                }
                continue;
            }
            for i in 0..k {
                line[i] = Complex64::new(v[start + i * stride], 0.0);
            }
            fwd.process(&mut line);
            for (j, c) in line.iter_mut().enumerate() {
                *c *= match mode(j, k) {
                    Some(m) => Complex64::from_polar(1.0, -(m as f64) * w * s),
                    None => Complex64::new(((k / 2) as f64 * w * s).cos(), 0.0),
                };
            }
            inv.process(&mut line);
            for i in 0..k {
                out[start + i * stride] = line[i].re / k as f64;
            }
        }
    }
    out
}

fn pull_scalar_values(spec: &LatticeSpec, v: &[f64], map: &VolumePreservingMap) -> Vec<f64> {
    match map {
        VolumePreservingMap::Identity => v.to_vec(),
        VolumePreservingMap::Shift(c) => {
            let mut out = v.to_vec();
            for (ax, &s) in c.iter().enumerate() {
                if s != 0.0 {
                    out = shift_lines(spec, &out, ax, |_| s);
                }
            }
            out
        }
        VolumePreservingMap::Shear { target, source, f } => {
            let dx = spec.dx_inner();
            let l = spec.l_inner;
            let spec_c = *spec;
            let src = *source;
            shift_lines(spec, v, *target, move |idx| {
                let inner = idx % spec_c.inner_len();
                let y = spec_c.inner_multi(inner)[src] as f64 * dx;
                f.eval(y, l)
            })
        }
        VolumePreservingMap::QuarterTurn { a, b } => {
            // ψ'(Y) = ψ(X) with X^a = Y^b, X^b = −Y^a
            let k = spec.k_inner;
            let kl = spec.inner_len();
            let mut perm = vec![0usize; kl];
            for (q, p) in perm.iter_mut().enumerate() {
                let y = spec.inner_multi(q);
                let mut x = y.clone();
                x[*a] = y[*b];
                x[*b] = (k - y[*a]) % k;
                *p = x.iter().fold(0, |acc, &m| acc * k + m);
            }
            let mut out = vec![0.0; v.len()];
            for (chunk_o, chunk_i) in out.chunks_mut(kl).zip(v.chunks(kl)) {
                for q in 0..kl {
                    chunk_o[q] = chunk_i[perm[q]];
                }
            }
            out
        }
    }
}

pub fn pullback_scalar(psi: &ScalarField, map: &VolumePreservingMap) -> Result<ScalarField> {
    map.check_fits(&psi.spec)?;
    Ok(ScalarField { spec: psi.spec, values: pull_scalar_values(&psi.spec, &psi.values, map) })
}

/// V'^N(X') = V^M(X) ∂X'^N/∂X^M.
pub fn pullback_vector(v: &AlgebraField, map: &VolumePreservingMap) -> Result<AlgebraField> {
    let spec = *v.spec();
    map.check_fits(&spec)?;
    let moved: Vec<Vec<f64>> = v.comps.iter().map(|c| pull_scalar_values(&spec, &c.values, map)).collect();
    let mut out = AlgebraField::zeros(&spec);
    match map {
        VolumePreservingMap::Identity | VolumePreservingMap::Shift(_) => {
            for (o, m) in out.comps.iter_mut().zip(moved) {
                o.values = m;
            }
        }
        VolumePreservingMap::Shear { target, source, f } => {
            let dx = spec.dx_inner();
            let kl = spec.inner_len();
            for (n, o) in out.comps.iter_mut().enumerate() {
                o.values = moved[n].clone();
                if n == *target {
                    for (i, val) in o.values.iter_mut().enumerate() {
                        let y = spec.inner_multi(i % kl)[*source] as f64 * dx;
                        *val += f.deriv(y, spec.l_inner) * moved[*source][i];
                    }
                }
            }
        }
        VolumePreservingMap::QuarterTurn { a, b } => {
            for (n, o) in out.comps.iter_mut().enumerate() {
                o.values = if n == *a {
                    moved[*b].iter().map(|x| -x).collect()
                } else if n == *b {
                    moved[*a].clone()
                } else {
                    moved[n].clone()
                };
            }
        }
    }
    Ok(out)
}

pub fn pullback(field: Pulled, map: &VolumePreservingMap) -> Result<Pulled> {
    Ok(match field {
        Pulled::Scalar(s) => Pulled::Scalar(pullback_scalar(&s, map)?),
        Pulled::Vector(v) => Pulled::Vector(pullback_vector(&v, map)?),
    })
}

/// X → ρX on the lattice: `l_inner → ρ l_inner`, components × ρ.
pub fn scale_spec(spec: &LatticeSpec, rho: f64) -> Result<LatticeSpec> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(IsoError::Domain(format!("scale parameter must be positive, got {rho}")));
    }
    Ok(LatticeSpec { l_inner: spec.l_inner * rho, ..*spec })
}

pub fn scale_field(v: &AlgebraField, rho: f64) -> Result<AlgebraField> {
    let spec = scale_spec(v.spec(), rho)?;
    Ok(v.scaled(rho).with_spec(&spec))
}

/// Rescales a gauge configuration including supplied time derivatives.
pub fn scale_transform(a: &GaugeConfig, rho: f64) -> Result<GaugeConfig> {
    Ok(GaugeConfig {
        a: a.a.iter().map(|f| scale_field(f, rho)).collect::<Result<_>>()?,
        a_dot: match &a.a_dot {
            Some(d) => Some(d.iter().map(|f| scale_field(f, rho)).collect::<Result<_>>()?),
            None => None,
        },
    })
}

/// Cyclic shift of the inner lattice by whole cells along `axis`.
pub fn roll_inner(v: &[f64], spec: &LatticeSpec, axis: usize, cells: i64) -> Vec<f64> {
    shift_lines(spec, v, axis, |_| cells as f64 * spec.dx_inner())
}
