use std::path::Path;

use isodyn::algebra::VolumePreservingMap;
use isodyn::hamiltonian::{hamiltonian, step, Scheme};
use isodyn::harness::checks::{abelian_random, run_checks, run_suite, Bound, Check};
use isodyn::harness::config::{ConfigErrorKind, InitKind, KEYS};
use isodyn::harness::maxwell::MaxwellState;
use isodyn::harness::plot::{read_series, render_svg};
use isodyn::harness::simulate::{columns, initial_state, snapshot_of, state_from_snapshot};
use isodyn::harness::{parse_config, parse_threads, run_simulate, HarnessError, RunConfig, EXIT_CONFIG, EXIT_RUNTIME};
use isodyn::lattice::snapshot::Snapshot;
use isodyn::matter::SignConvention;
use isodyn::LatticeSpec;
use proptest::prelude::*;

fn small(dir: &Path, extra: &str) -> RunConfig {
    let mode = if extra.contains("init.max_mode") { "" } else { "init.max_mode = 1\n" };
    let text = format!(
        "lattice.n1 = 8\nlattice.n2 = 8\nlattice.n3 = 9\nlattice.k_inner = 8\n{mode}\
         output.csv_path = \"{}\"\noutput.snapshot_dir = \"{}\"\n{extra}",
        dir.join("run.csv").display(),
        dir.join("snaps").display()
    );
    parse_config(&text).unwrap()
}

#[test]
fn empty_input_gives_defaults() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.lattice, LatticeSpec::desk());
    assert_eq!(cfg.init.kind, InitKind::RandomBandlimited);
    assert_eq!(cfg.run.scheme, Scheme::Rk4);
    assert_eq!(cfg.matter.sign_convention, SignConvention::AsPrinted);
    assert_eq!(parse_config("# only a comment\n\n   \n").unwrap(), cfg);
}

#[test]
fn constraint_errors_name_the_key_and_line() {
    let e = parse_config("lattice.d_inner = 0").unwrap_err();
    assert_eq!(e.0.len(), 1);
    let err = &e.0[0];
    assert_eq!((err.line, err.key.as_str(), &err.kind), (1, "lattice.d_inner", &ConfigErrorKind::Constraint));
    assert!(err.message.contains("D >= 1"), "{}", err.message);
    assert!(e.to_string().starts_with("line 1: lattice.d_inner:"));

    let e = parse_config("init.seed = 3\nlattice.n1 = 12\n").unwrap_err();
    assert_eq!((e.0[0].line, e.0[0].key.as_str()), (2, "lattice.n1"));
    let e = parse_config("matter.mass = -1").unwrap_err();
    assert_eq!(e.0[0].key, "matter.mass");
    let e = parse_config("check.transform = rot:1,3").unwrap_err();
    assert_eq!(e.0[0].key, "check.transform");
    let e = parse_config("run.diagnostics_every = 0").unwrap_err();
    assert_eq!(e.0[0].kind, ConfigErrorKind::Constraint);
}

#[test]
fn every_problem_is_reported_with_its_line() {
    let text = "lattice.n1 = 8\nbogus.key = 1\nlattice.n2 = eight\nno equals sign\nlattice.n1 = 4\nrun.scheme = euler\nmatter.enabled = yes\n";
    let e = parse_config(text).unwrap_err();
    let got: Vec<(usize, ConfigErrorKind)> = e.0.iter().map(|x| (x.line, x.kind.clone())).collect();
    assert_eq!(
        got,
        vec![
            (2, ConfigErrorKind::UnknownKey),
            (3, ConfigErrorKind::Type),
            (4, ConfigErrorKind::Syntax),
            (5, ConfigErrorKind::Duplicate),
            (6, ConfigErrorKind::Type),
            (7, ConfigErrorKind::Type),
        ]
    );
}

#[test]
fn values_parse_with_quotes_and_spacing() {
    let cfg = parse_config(
        "  init.kind=abelian_wave\nmatter.sign_convention = \"conventional\"\ncheck.transform = \"shear:1,2:0.5*sin1\"\noutput.csv_path = \"a b/c.csv\"\nrun.scheme = midpoint\n",
    )
    .unwrap();
    assert_eq!(cfg.init.kind, InitKind::AbelianWave);
    assert_eq!(cfg.matter.sign_convention, SignConvention::Conventional);
    assert!(matches!(cfg.check.transform, VolumePreservingMap::Shear { target: 0, source: 1, .. }));
    assert_eq!(cfg.output.csv_path, Path::new("a b/c.csv"));
    assert_eq!(cfg.run.scheme, Scheme::Midpoint);
}

#[test]
fn serialization_lists_every_key_once() {
    let text = RunConfig::default().serialize();
    assert_eq!(text.lines().count(), KEYS.len());
    for (line, key) in text.lines().zip(KEYS) {
        assert!(line.starts_with(&format!("{key} = ")));
    }
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        (0u32..4, 0u32..4, 3usize..20, 1usize..4, 0u32..4),
        (0.1f64..20.0, 0.1f64..10.0, 1e-5f64..1e-1, 0.1f64..10.0),
        (0usize..3, any::<u64>(), 0.0f64..2.0, 1usize..4),
        (0usize..5000, any::<bool>(), 1usize..50, 0usize..50),
        (any::<bool>(), 0.0f64..5.0, any::<bool>(), "[a-z0-9_/]{1,12}", any::<bool>(), 0usize..3),
    )
        .prop_map(|(g, r, i, run, o)| {
            let mut c = RunConfig::default();
            c.lattice.n1 = 1 << g.0;
            c.lattice.n2 = 1 << g.1;
            c.lattice.n3 = g.2;
            c.lattice.d_inner = g.3;
            c.lattice.k_inner = 1 << g.4;
            c.lattice.l1 = r.0;
            c.lattice.l_inner = r.1;
            c.lattice.dt = r.2;
            c.lattice.lambda = r.3;
            c.init.kind = [InitKind::Vacuum, InitKind::RandomBandlimited, InitKind::AbelianWave][i.0];
            c.init.seed = i.1;
            c.init.amplitude = i.2;
            c.init.max_mode = i.3;
            c.run.steps = run.0;
            c.run.scheme = if run.1 { Scheme::Rk4 } else { Scheme::Midpoint };
            c.run.diagnostics_every = run.2;
            c.run.snapshot_every = run.3;
            c.matter.enabled = o.0;
            c.matter.mass = o.1;
            c.matter.sign_convention = if o.2 { SignConvention::AsPrinted } else { SignConvention::Conventional };
            c.output.csv_path = format!("{}.csv", o.3).into();
            c.output.wall_clock = o.4;
            c.check.transform = match o.5 {
                0 => VolumePreservingMap::Identity,
                1 => VolumePreservingMap::Shift(vec![0.25; g.3]),
                _ => VolumePreservingMap::QuarterTurn { a: 0, b: g.3 - 1 },
            };
            if g.3 < 2 && o.5 == 2 {
                c.check.transform = VolumePreservingMap::Identity;
            }
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_then_parse_round_trips(cfg in arb_config()) {
        let text = cfg.serialize();
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn garbage_lines_never_panic(lines in proptest::collection::vec("[ -~]{0,30}", 0..6)) {
        let _ = parse_config(&lines.join("\n"));
    }
}

#[test]
fn csv_header_echoes_defaults_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "run.steps = 3\nrun.diagnostics_every = 2\n");
    let out = run_simulate(&cfg).unwrap();
    assert_eq!(out.rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![0, 2, 3]);
    let text = std::fs::read_to_string(&cfg.output.csv_path).unwrap();
    for (k, v) in cfg.entries() {
        assert!(text.contains(&format!("# {k} = {v}\n")), "{k}");
    }
    assert!(text.contains("# lattice.lambda = 1.0\n"));
    assert!(text.contains("# nonlinearity_ratio = "));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "step,t,H,gauss_l2,bianchi_l2,divfree_leak,p0,p1,p2,p3,wall_ms");
    assert_eq!(columns(Some(2)).join(","), "step,t,H,gauss_l2,bianchi_l2,divfree_leak,p0,p1,p2,p3,Q_1,Q_2,wall_ms");
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').count() == 11 && r.ends_with(",0.000")));
}

#[test]
fn vacuum_run_stays_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "init.kind = vacuum\nrun.steps = 100\nrun.diagnostics_every = 25\nmatter.enabled = true\n");
    let out = run_simulate(&cfg).unwrap();
    assert_eq!(out.rows.len(), 5);
    for (_, r) in &out.rows {
        assert_eq!(r.h, 0.0);
        for v in [r.gauss_residual_l2, r.bianchi_l2, r.divfree_leak].iter().chain(&r.p).chain(r.charges.as_ref().unwrap()) {
            assert!(v.abs() <= 1e-14);
        }
    }
    assert_eq!(out.nonlinearity_ratio, 0.0);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "run.steps = 6\nrun.diagnostics_every = 2\nmatter.enabled = true\ninit.seed = 17\n");
    run_simulate(&cfg).unwrap();
    let a = std::fs::read(&cfg.output.csv_path).unwrap();
    run_simulate(&cfg).unwrap();
    assert_eq!(a, std::fs::read(&cfg.output.csv_path).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains(",Q_1,Q_2,wall_ms"));
}

#[test]
fn abelian_wave_keeps_its_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "init.kind = abelian_wave\ninit.amplitude = 0.7\nrun.steps = 200\nrun.diagnostics_every = 50\n");
    let out = run_simulate(&cfg).unwrap();
    let h0 = out.rows[0].1.h;
    assert!(h0 > 0.0);
    for (_, r) in &out.rows {
        assert!((r.h - h0).abs() <= 1e-8 * h0);
    }
}

#[test]
fn snapshots_restore_the_state_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "run.steps = 4\nrun.snapshot_every = 2\n");
    let out = run_simulate(&cfg).unwrap();
    assert_eq!(out.snapshots.len(), 2);
    assert!(out.snapshots[1].ends_with("step_00000004.snap"));

    let mut s = initial_state(&cfg).unwrap();
    for _ in 0..4 {
        step(&mut s, Scheme::Rk4).unwrap();
    }
    let back = state_from_snapshot(&Snapshot::load(&out.snapshots[1]).unwrap()).unwrap();
    assert_eq!(back.a(), s.a());
    assert_eq!(back.pi(), s.pi());
    assert_eq!(back.t, s.t);
    assert_eq!(back.a0().unwrap(), s.a0().unwrap());
    assert_eq!(snapshot_of(&back).unwrap(), snapshot_of(&s).unwrap());
}

#[test]
fn integrator_failure_leaves_a_last_good_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "lattice.dt = 5\nrun.scheme = midpoint\ninit.amplitude = 2\ninit.max_mode = 3\nrun.steps = 3\n");
    match run_simulate(&cfg) {
        Err(e @ HarnessError::Runtime { .. }) => {
            assert_eq!(e.exit_code(), EXIT_RUNTIME);
            let HarnessError::Runtime { step, last_good, .. } = &e else { unreachable!() };
            assert_eq!(*step, 1);
            let p = last_good.as_ref().unwrap();
            let snap = Snapshot::load(p).unwrap();
            assert_eq!(snap.t, 0.0);
            assert!(e.to_string().contains("last_good.snap"));
        }
        other => panic!("expected a runtime failure, got {other:?}"),
    }
}

#[test]
fn nyquist_is_a_precondition_not_a_crash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "init.max_mode = 4\n");
    let e = run_simulate(&cfg).unwrap_err();
    assert!(matches!(e, HarnessError::Precondition(_)));
    assert_eq!(e.exit_code(), EXIT_CONFIG);
    for name in ["closure", "bianchi", "energy"] {
        let r = run_suite(name, &cfg).unwrap();
        assert!(!r.passed());
        assert!(r.precondition.as_ref().unwrap().contains("max_mode 4"), "{:?}", r.precondition);
        assert!(r.render().contains("PRECONDITION FAILED"));
    }
}

#[test]
fn only_filter_runs_one_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "");
    let rep = run_checks(&cfg, Some("scale")).unwrap();
    assert_eq!(rep.suites.len(), 1);
    assert_eq!(rep.suites[0].name, "scale");
    assert!(rep.passed());
    assert!(rep.render().contains("all 1 suites passed"));
    let e = run_checks(&cfg, Some("nope")).unwrap_err();
    assert_eq!(e.exit_code(), EXIT_CONFIG);
}

#[test]
fn check_bounds() {
    assert!(Check::new("a", 1e-11, Bound::AtMost, 1e-10).passed());
    assert!(!Check::new("a", f64::NAN, Bound::AtMost, 1e-10).passed());
    assert!(Check::new("a", 2.0, Bound::AtLeast, 1.9).passed());
    assert!(!Check::new("a", 1.5, Bound::Below, 1.5).passed());
    assert!(Check::new("a", 3e-3, Bound::AtMost, 1e-6).render().starts_with("[FAIL] a = 3.000e-3"));
}

#[test]
fn maxwell_oracle_matches_the_standing_wave_frequency() {
    let spec = LatticeSpec { n1: 8, n2: 4, n3: 9, k_inner: 4, dt: 1e-3, lambda: 1.3, ..LatticeSpec::desk() };
    let cfg = RunConfig {
        lattice: spec,
        init: isodyn::harness::config::InitConfig { kind: InitKind::AbelianWave, seed: 0, amplitude: 0.5, max_mode: 2 },
        ..RunConfig::default()
    };
    let s = initial_state(&cfg).unwrap();
    let mut m = MaxwellState::from_axial(&s).unwrap();
    let a2 = m.fields[1].clone();
    m.evolve(300);
    let h = spec.h3();
    let omega = (4.0 + 4.0 / (h * h) * (std::f64::consts::PI * h / (2.0 * spec.l3)).sin().powi(2)).sqrt();
    let c = (omega * m.t).cos();
    let err: f64 = m.fields[1].iter().zip(&a2).map(|(x, y)| (x - c * y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = a2.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(err <= 1e-9 * norm, "{}", err / norm);
    assert!(m.a0().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn maxwell_oracle_tracks_the_full_system() {
    let spec = LatticeSpec { n1: 8, n2: 8, n3: 9, k_inner: 4, ..LatticeSpec::desk() };
    let mut s = abelian_random(5, &spec, 2, 0.5).unwrap();
    let mut m = MaxwellState::from_axial(&s).unwrap();
    let h0 = hamiltonian(&s).unwrap();
    for _ in 0..50 {
        step(&mut s, Scheme::Rk4).unwrap();
        m.step();
    }
    assert!(m.rel_diff(&s).unwrap() <= 1e-12);
    assert!((hamiltonian(&s).unwrap() - h0).abs() <= 1e-10 * h0);

    let nonabelian = isodyn::harness::checks::random_axial(1, &spec, 1, 0.5).unwrap();
    assert!(MaxwellState::from_axial(&nonabelian).is_err());
}

#[test]
fn plot_reads_columns_and_writes_svg() {
    let csv = "# a = 1\nstep,t,H,wall_ms\n0,0e0,1e0,0.000\n1,1e-3,2e0,0.000\n2,2e-3,1.5e0,0.000\n";
    let s = read_series(csv, "H").unwrap();
    assert_eq!(s.points, vec![(0.0, 1.0), (1e-3, 2.0), (2e-3, 1.5)]);
    assert_eq!(s.x_name, "t");
    let svg = render_svg(&s);
    assert!(svg.starts_with("<svg ") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert!(matches!(read_series(csv, "Q_1"), Err(HarnessError::Input(_))));
    assert!(matches!(read_series("step,t\n0,x\n", "t"), Err(HarnessError::Input(_))));
    let flat = read_series("t,H\n0,1\n1,1\n", "H").unwrap();
    assert!(!render_svg(&flat).contains("NaN"));
}

#[test]
fn thread_counts() {
    assert_eq!(parse_threads("4").unwrap(), 4);
    assert_eq!(parse_threads(" 1 ").unwrap(), 1);
    assert!(parse_threads("0").is_err());
    assert!(parse_threads("many").is_err());
}
