use std::io::Write;

use fadingrx::harness::{
    read_csv, render_svg, run_experiment, write_csv, ExperimentConfig, FadingKind, Receiver, TestScale,
};
use fadingrx::Error;

fn small(kind: FadingKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        train_size: 2_000,
        test_size: 20_000,
        snr_grid_db: vec![5.0, 12.5],
        schemes: Receiver::ALL.to_vec(),
        rounds: 2,
        local_epochs: 2,
        ..Default::default()
    };
    cfg.fading.kind = kind;
    cfg
}

#[test]
fn small_sweep_has_every_row() {
    for kind in [FadingKind::Iid, FadingKind::NonIid] {
        let cfg = small(kind);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), cfg.schemes.len() * cfg.snr_grid_db.len());
        for r in &report.rows {
            assert!(r.ber > 0.0 && r.ber < 0.5, "{} {}: {}", r.scheme, r.snr_db, r.ber);
            assert_eq!(r.bit_errors as f64 / r.total_bits as f64, r.ber);
        }
        // BER falls with SNR for the model-based receivers
        for s in ["MAP", "MD", "MinDist"] {
            assert!(report.row(s, 12.5).unwrap().ber < report.row(s, 5.0).unwrap().ber, "{s}");
        }
        // learned rows carry an overhead entry each
        assert_eq!(report.overhead.len(), 3);
    }
}

#[test]
fn nl_counts_every_user_model() {
    let cfg = small(FadingKind::Iid);
    let report = run_experiment(&ExperimentConfig { schemes: vec![Receiver::Nl, Receiver::Map], ..cfg.clone() }).unwrap();
    let nl = report.row("NL", 5.0).unwrap();
    let map = report.row("MAP", 5.0).unwrap();
    assert_eq!(nl.total_bits, map.total_bits * cfg.users as u64);
}

#[test]
fn same_seed_same_counts() {
    let cfg = ExperimentConfig { test_scale: TestScale::PerSymbol, ..small(FadingKind::NonIid) };
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    let counts = |r: &fadingrx::BerReport| r.rows.iter().map(|x| x.bit_errors).collect::<Vec<_>>();
    assert_eq!(counts(&a), counts(&b));
    let c = run_experiment(&ExperimentConfig { master_seed: 2, ..cfg }).unwrap();
    assert_ne!(counts(&a), counts(&c));
}

#[test]
fn csv_round_trip_and_plot() {
    let report = run_experiment(&ExperimentConfig {
        schemes: vec![Receiver::Map, Receiver::MinDist],
        ..small(FadingKind::Iid)
    })
    .unwrap();
    let mut buf = Vec::new();
    write_csv(&report, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("scheme,snr_db,bit_errors,total_bits,ber,wall_time_s\n"));
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), report.rows.len());
    for (a, b) in back.iter().zip(&report.rows) {
        assert_eq!((a.scheme.as_str(), a.snr_db, a.bit_errors, a.total_bits), (b.scheme.as_str(), b.snr_db, b.bit_errors, b.total_bits));
    }
    let svg = render_svg(&report).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
}

#[test]
fn config_file_then_overrides() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "seed = 9\nusers = 2\n[fed]\nrounds = 3\n[fading]\nkind = \"non-iid\"").unwrap();
    let cfg = ExperimentConfig::resolve(Some(f.path()), &["fed.rounds=4".into(), "snr.grid_db=[10]".into()]).unwrap();
    assert_eq!(cfg.master_seed, 9);
    assert_eq!(cfg.users, 2);
    assert_eq!(cfg.rounds, 4);
    assert_eq!(cfg.fading.kind, FadingKind::NonIid);
    assert_eq!(cfg.snr_grid_db, vec![10.0]);
    // printed config parses back to the same thing
    let mut g = tempfile::NamedTempFile::new().unwrap();
    g.write_all(cfg.to_toml().as_bytes()).unwrap();
    assert_eq!(ExperimentConfig::resolve(Some(g.path()), &[]).unwrap(), cfg);
}

#[test]
fn bad_config_names_the_key() {
    for (o, key) in [
        ("data.test_size=10", "data.test_size"),
        ("fading.lo=2", "fading.lo"),
        ("fading.sigma=-1", "fading.sigma"),
        ("no.such.key=1", "no.such.key"),
        ("modulation.order=8", "modulation.order"),
    ] {
        match ExperimentConfig::resolve(None, &[o.to_string()]) {
            Err(Error::Config { key: k, .. }) => assert!(k.contains(key) || key.contains(&k), "{o}: {k}"),
            other => panic!("{o}: {other:?}"),
        }
    }
}
