//! `simulate`: initial data, the evolution loop, CSV rows and snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{InitKind, RunConfig};
use super::HarnessError;
use crate::error::IsoError;
use crate::hamiltonian::{diagnostics, nonlinearity_ratio, step, AxialState, DiagnosticsRecord, StepInfo};
use crate::lattice::snapshot::Snapshot;
use crate::lattice::{random_bandlimited, AlgebraField, LatticeSpec, ScalarField};
use crate::matter::{charges, matter_step, MatterState};

/// Seeds for the four canonical fields and the two matter fields.
fn sub_seed(seed: u64, i: u64) -> u64 {
    seed.wrapping_mul(16).wrapping_add(i)
}

fn precondition(e: IsoError) -> HarnessError {
    HarnessError::Precondition(e.to_string())
}

/// Standing abelian wave A₂^M = α u_M cos(k x¹) sin(π x³/l₃), Π = 0,
/// with u_M = 1/(M+1).
pub fn abelian_wave(spec: &LatticeSpec, k: usize, amplitude: f64) -> AlgebraField {
    let l3 = spec.l3;
    let k = k as f64 * 2.0 * std::f64::consts::PI / spec.l1;
    AlgebraField::from_fn(spec, |m, x, _| {
        amplitude / (m + 1) as f64 * (k * x[0]).cos() * (std::f64::consts::PI * x[2] / l3).sin()
    })
}

pub fn initial_state(cfg: &RunConfig) -> Result<AxialState, HarnessError> {
    let spec = &cfg.lattice;
    let init = &cfg.init;
    match init.kind {
        InitKind::Vacuum => Ok(AxialState::vacuum(spec)),
        InitKind::RandomBandlimited => {
            let f = |i| random_bandlimited(sub_seed(init.seed, i), spec, init.max_mode, init.amplitude);
            let a = vec![f(0).map_err(precondition)?, f(1).map_err(precondition)?];
            let pi = vec![f(2).map_err(precondition)?, f(3).map_err(precondition)?];
            AxialState::new(a, pi).map_err(precondition)
        }
        InitKind::AbelianWave => {
            if 2 * init.max_mode >= spec.n1 {
                return Err(HarnessError::Precondition(format!(
                    "wave number {} not below Nyquist of n1 = {}",
                    init.max_mode, spec.n1
                )));
            }
            let z = AlgebraField::zeros(spec);
            AxialState::new(vec![z.clone(), abelian_wave(spec, init.max_mode, init.amplitude)], vec![z.clone(), z])
                .map_err(precondition)
        }
    }
}

pub fn initial_matter(cfg: &RunConfig) -> Result<Option<MatterState>, HarnessError> {
    let m = &cfg.matter;
    if !m.enabled {
        return Ok(None);
    }
    let spec = &cfg.lattice;
    let (psi, dpsi) = match cfg.init.kind {
        InitKind::Vacuum => (ScalarField::zeros(spec), ScalarField::zeros(spec)),
        _ => {
            let f = |i| {
                random_bandlimited(sub_seed(cfg.init.seed, i), spec, cfg.init.max_mode, cfg.init.amplitude)
                    .map(|v| v.comps[0].clone())
            };
            (f(4).map_err(precondition)?, f(5).map_err(precondition)?)
        }
    };
    MatterState::new(psi, dpsi, m.mass, m.sign_convention).map(Some).map_err(precondition)
}

/// Column names in output order.
pub fn columns(charges: Option<usize>) -> Vec<String> {
    let mut c: Vec<String> = ["step", "t", "H", "gauss_l2", "bianchi_l2", "divfree_leak", "p0", "p1", "p2", "p3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(d) = charges {
        c.extend((1..=d).map(|n| format!("Q_{n}")));
    }
    c.push("wall_ms".into());
    c
}

/// Writes `# key = value` lines for the full config and any extras, then
/// the header row.
pub fn write_header<W: Write>(w: &mut W, cfg: &RunConfig, extra: &[(&str, String)]) -> std::io::Result<()> {
    for (k, v) in cfg.entries() {
        writeln!(w, "# {k} = {v}")?;
    }
    for (k, v) in extra {
        writeln!(w, "# {k} = {v}")?;
    }
    let d = cfg.matter.enabled.then_some(cfg.lattice.d_inner);
    writeln!(w, "{}", columns(d).join(","))
}

pub fn write_row<W: Write>(w: &mut W, step: usize, r: &DiagnosticsRecord, wall_ms: f64) -> std::io::Result<()> {
    write!(w, "{step},{:e},{:e},{:e},{:e},{:e}", r.t, r.h, r.gauss_residual_l2, r.bianchi_l2, r.divfree_leak)?;
    for p in r.p {
        write!(w, ",{p:e}")?;
    }
    if let Some(q) = &r.charges {
        for v in q {
            write!(w, ",{v:e}")?;
        }
    }
    writeln!(w, ",{wall_ms:.3}")
}

pub fn snapshot_of(state: &AxialState) -> Result<Snapshot, IsoError> {
    let a0 = state.a0()?.clone();
    Ok(Snapshot {
        spec: *state.spec(),
        t: state.t,
        fields: vec![
            ("A1".into(), state.a()[0].clone()),
            ("A2".into(), state.a()[1].clone()),
            ("Pi1".into(), state.pi()[0].clone()),
            ("Pi2".into(), state.pi()[1].clone()),
            ("A0".into(), a0),
        ],
    })
}

/// Rebuilds the canonical state from a snapshot written by `snapshot_of`.
pub fn state_from_snapshot(s: &Snapshot) -> Result<AxialState, IsoError> {
    let get = |n: &str| s.field(n).cloned().ok_or_else(|| IsoError::Snapshot(format!("missing field {n}")));
    let mut st = AxialState::new(vec![get("A1")?, get("A2")?], vec![get("Pi1")?, get("Pi2")?])?;
    st.t = s.t;
    Ok(st)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateOutcome {
    pub rows: Vec<(usize, DiagnosticsRecord)>,
    pub snapshots: Vec<PathBuf>,
    pub nonlinearity_ratio: f64,
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io(format!("{}: {e}", path.display()))
}

fn record(state: &AxialState, ms: Option<&MatterState>, info: StepInfo) -> Result<DiagnosticsRecord, IsoError> {
    let mut r = diagnostics(state, info)?;
    if let Some(ms) = ms {
        r.charges = Some(charges(ms, Some(&state.gauge_config()?))?);
    }
    Ok(r)
}

fn finite(r: &DiagnosticsRecord) -> bool {
    [r.h, r.gauss_residual_l2, r.bianchi_l2, r.divfree_leak].iter().chain(&r.p).all(|v| v.is_finite())
        && r.charges.as_ref().is_none_or(|q| q.iter().all(|v| v.is_finite()))
}

/// Runs the configured evolution, writing the CSV and snapshots. The matter
/// field, when enabled, evolves on the gauge field frozen at the start of
/// each step.
pub fn run_simulate(cfg: &RunConfig) -> Result<SimulateOutcome, HarnessError> {
    let mut state = initial_state(cfg)?;
    let mut ms = initial_matter(cfg)?;
    let ratio = nonlinearity_ratio(&state).map_err(precondition)?;
    let csv = &cfg.output.csv_path;
    if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    let snap_dir = &cfg.output.snapshot_dir;
    let mut w = BufWriter::new(File::create(csv).map_err(io(csv))?);
    write_header(&mut w, cfg, &[("nonlinearity_ratio", format!("{ratio:e}"))]).map_err(io(csv))?;

    let start = Instant::now();
    let wall = |s: &Instant| if cfg.output.wall_clock { s.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut last_good = state.clone();
    let fail = |step: usize, source: IsoError, good: &AxialState| -> HarnessError {
        let path = snap_dir.join("last_good.snap");
        let saved = std::fs::create_dir_all(snap_dir)
            .map_err(IsoError::from)
            .and_then(|_| snapshot_of(good))
            .and_then(|s| s.save(&path))
            .is_ok();
        HarnessError::Runtime { step, source, last_good: saved.then_some(path) }
    };

    let r0 = record(&state, ms.as_ref(), StepInfo::default()).map_err(|e| fail(0, e, &state))?;
    write_row(&mut w, 0, &r0, wall(&start)).map_err(io(csv))?;
    rows.push((0, r0));
    for n in 1..=cfg.run.steps {
        let bg = match &ms {
            Some(_) => Some(state.gauge_config().map_err(|e| fail(n, e, &last_good))?),
            None => None,
        };
        let info = step(&mut state, cfg.run.scheme).map_err(|e| fail(n, e, &state))?;
        if let Some(m) = ms.as_mut() {
            *m = matter_step(m, bg.as_ref(), cfg.lattice.dt).map_err(|e| fail(n, e, &last_good))?;
        }
        if n % cfg.run.diagnostics_every == 0 || n == cfg.run.steps {
            let r = record(&state, ms.as_ref(), info).map_err(|e| fail(n, e, &last_good))?;
            if !finite(&r) {
                return Err(fail(n, IsoError::Domain("non-finite diagnostics".into()), &last_good));
            }
            write_row(&mut w, n, &r, wall(&start)).map_err(io(csv))?;
            rows.push((n, r));
            last_good = state.clone();
        }
        if cfg.run.snapshot_every > 0 && n % cfg.run.snapshot_every == 0 {
            std::fs::create_dir_all(snap_dir).map_err(io(snap_dir))?;
            let path = snap_dir.join(format!("step_{n:08}.snap"));
            snapshot_of(&state).and_then(|s| s.save(&path)).map_err(|e| fail(n, e, &last_good))?;
            snapshots.push(path);
        }
    }
    w.flush().map_err(io(csv))?;
    Ok(SimulateOutcome { rows, snapshots, nonlinearity_ratio: ratio })
}
