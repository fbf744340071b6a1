//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line
//! with the numbers behind the verdict, then asserts it.
//!
//! Run with `cargo test -p fadingrx --test acceptance -- --nocapture
//! --test-threads=1` for readable output.

use std::sync::OnceLock;

use fadingrx::channel::{apply_channel, derotate_features, draw_fading, Constellation, FadingSpec};
use fadingrx::detectors::{map_detect, rayleigh_map_metric, LikelihoodModel, NumericMap, QuadratureConfig};
use fadingrx::fed::{
    aggregate_deltas, comm_overhead, fed_round, fedrec_train, noncollab_train, FedConfig, FedUser, Scheme,
};
use fadingrx::harness::{
    ber_evaluate, map_detector, run_experiment, test_stream, BerReport, ExperimentConfig, FadingKind, Receiver, TestScale,
};
use fadingrx::nn::{grad, init_params, local_train, loss, ModelParams, Sample, TrainConfig, DEFAULT_LAYER_DIMS};
use fadingrx::{PilotDataset, Purpose, SeedTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: [f64; 4] = [5.0, 7.5, 10.0, 12.5];
const MAP_IID: [f64; 4] = [0.0557, 0.0439, 0.0357, 0.0302];
const FEDREC_IID: [f64; 4] = [0.0561, 0.0444, 0.0361, 0.0308];
const FEDREC_NONIID: [f64; 4] = [0.0649, 0.0530, 0.0439, 0.0382];
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn verdict(n: u32, ok: bool, detail: &str) {
    println!("criterion {n}: {} | {detail}", if ok { "PASS" } else { "FAIL" });
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want) / want
}

#[test]
fn criterion_1_overhead_table() {
    let mut cells = Vec::new();
    let cl = comm_overhead(Scheme::Cl, 5, 48, 5, 20_000);
    cells.push(("CL UL", cl.ul_words, 40_000));
    cells.push(("CL DL", cl.dl_words, 48));
    for (u, ul) in [(1, 240), (2, 480), (5, 1200)] {
        let f = comm_overhead(Scheme::FedRec, u, 48, 5, 20_000);
        cells.push(("FedRec UL", f.ul_words, ul));
        cells.push(("FedRec DL", f.dl_words, 240));
    }
    let ok = cells.iter().all(|(_, got, want)| got == want);
    let detail: Vec<String> = cells.iter().map(|(k, g, w)| format!("{k} {g}/{w}")).collect();
    verdict(1, ok, &detail.join(", "));
    assert!(ok);
}

/// Gray-label BER and SER/log2 M of the known-scale MAP receiver on 10⁶
/// symbols per point.
fn map_iid_sweep(offset_db: f64) -> Vec<(f64, f64)> {
    let cfg = ExperimentConfig {
        snr_offset_db: offset_db,
        ..Default::default()
    };
    let seeds = SeedTree::new(cfg.master_seed);
    let stream = test_stream(&cfg, &seeds).unwrap();
    GRID.iter()
        .map(|&snr| {
            let c = Constellation::for_snr(16, snr + offset_db).unwrap();
            let n = ber_evaluate(map_detector(&cfg, &c).unwrap().as_ref(), &stream, &c).unwrap();
            (n.ber(), n.ser() / 4.0)
        })
        .collect()
}

#[test]
fn criterion_2_map_iid_reproduction() {
    let fmt = |v: &[(f64, f64)], band: f64| -> (bool, String) {
        let mut ok = true;
        let mut parts = Vec::new();
        for (i, (ber, ser4)) in v.iter().enumerate() {
            let r = rel(*ber, MAP_IID[i]);
            ok &= r.abs() <= band;
            parts.push(format!("{}dB ber {ber:.5} ({:+.1}%) ser/4 {ser4:.5}", GRID[i], 100.0 * r));
        }
        (ok, parts.join("; "))
    };
    let first = map_iid_sweep(0.0);
    let (ok_first, d_first) = fmt(&first, 0.10);
    if ok_first {
        verdict(2, true, &format!("within 10%: {d_first}"));
        return;
    }
    println!("criterion 2: default normalization misses the 10% band: {d_first}");
    // One recalibration: halve the noise variance, i.e. +3.01 dB.
    let offset = 10.0 * 2f64.log10();
    let second = map_iid_sweep(offset);
    let (ok_second, d_second) = fmt(&second, 0.05);
    verdict(2, ok_second, &format!("recalibrated by {offset:+.2} dB, 5% band: {d_second}"));
    assert!(ok_second, "MAP iid BER outside the band after recalibration");
}

#[test]
fn criterion_3_closed_form_vs_quadrature() {
    let q = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut all_ok = true;
    let mut parts = Vec::new();
    for sigma in [0.5, 1.0, 1.5] {
        let spec = FadingSpec::rayleigh(sigma).unwrap();
        let numeric = NumericMap::new(spec, &q).unwrap();
        let cons: Vec<Constellation> = GRID.iter().map(|&s| Constellation::qam16(s).unwrap()).collect();
        let (mut agree, mut counted, mut worst) = (0u32, 0u32, 0.0f64);
        for i in 0..100_000 {
            let c = &cons[i % cons.len()];
            let h = draw_fading(&mut rng, &spec);
            let m = rng.random_range(0..16);
            let f = derotate_features(apply_channel(c.points()[m], &h, &mut rng), h.phase);
            let a = rayleigh_map_metric(&f, c, sigma).unwrap();
            let b = numeric.metric(&f, c).unwrap();
            let d: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
            let spread = d.iter().cloned().fold(f64::MIN, f64::max) - d.iter().cloned().fold(f64::MAX, f64::min);
            worst = worst.max(spread);
            // ties: top two closed-form values within 1e-9
            let mut sorted = a.values.clone();
            sorted.sort_by(|x, y| y.total_cmp(x));
            if sorted[0] - sorted[1] < 1e-9 {
                continue;
            }
            counted += 1;
            agree += (map_detect(&a) == map_detect(&b)) as u32;
        }
        let rate = agree as f64 / counted as f64;
        let ok = rate >= 0.9999 && worst < 1e-6;
        all_ok &= ok;
        parts.push(format!("sigma {sigma}: agreement {rate:.6} of {counted}, max spread {worst:.2e}"));
    }
    verdict(3, all_ok, &parts.join("; "));
    assert!(all_ok);
}

#[test]
#[allow(clippy::needless_range_loop)]
fn criterion_4_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let mut p = ModelParams::zeros(&DEFAULT_LAYER_DIMS).unwrap();
        p.flat.iter_mut().for_each(|v| *v = rng.random_range(-1.5..1.5));
        let batch: Vec<Sample> = (0..1 + trial % 25)
            .map(|_| (rng.random_range(0..16), [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)]))
            .collect();
        let g = grad(&p, &batch).unwrap();
        let h = 1e-5;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..p.len() {
            let (mut a, mut b) = (p.clone(), p.clone());
            a.flat[i] += h;
            b.flat[i] -= h;
            let fd = (loss(&a, &batch).unwrap() - loss(&b, &batch).unwrap()) / (2.0 * h);
            num += (g[i] - fd).powi(2);
            den += g[i] * g[i];
        }
        worst = worst.max(num.sqrt() / den.sqrt().max(1e-12));
    }
    let ok = worst < 1e-4;
    verdict(4, ok, &format!("max relative error over 100 instances {worst:.2e}"));
    assert!(ok);
}

struct SeedRuns {
    iid: Vec<BerReport>,
    non_iid: Vec<BerReport>,
}

fn seed_runs() -> &'static SeedRuns {
    static RUNS: OnceLock<SeedRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let run = |kind: FadingKind, seed: u64| {
            let mut cfg = ExperimentConfig {
                master_seed: seed,
                schemes: vec![Receiver::Map, Receiver::Md, Receiver::FedRec, Receiver::Cl, Receiver::Nl],
                ..Default::default()
            };
            cfg.fading.kind = kind;
            // Fresh scale per test symbol, so the test population follows the
            // prior the MAP receiver integrates over.
            cfg.test_scale = TestScale::PerSymbol;
            run_experiment(&cfg).unwrap()
        };
        SeedRuns {
            iid: SEEDS.iter().map(|&s| run(FadingKind::Iid, s)).collect(),
            non_iid: SEEDS.iter().map(|&s| run(FadingKind::NonIid, s)).collect(),
        }
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn criterion_5_fedrec_reproduction() {
    let runs = seed_runs();
    let mut band_ok = true;
    let mut parts = Vec::new();
    for (label, reports, table) in [("iid", &runs.iid, FEDREC_IID), ("non-iid", &runs.non_iid, FEDREC_NONIID)] {
        for (i, &snr) in GRID.iter().enumerate() {
            let m = median(reports.iter().map(|r| r.row("FedRec", snr).unwrap().ber).collect());
            let r = rel(m, table[i]);
            band_ok &= r.abs() <= 0.15;
            parts.push(format!("{label} {snr}dB median {m:.5} ({:+.1}%)", 100.0 * r));
        }
    }
    let wins: Vec<bool> = runs
        .non_iid
        .iter()
        .map(|r| GRID.iter().all(|&s| r.row("FedRec", s).unwrap().ber <= r.row("NL", s).unwrap().ber))
        .collect();
    let n_wins = wins.iter().filter(|&&w| w).count();
    let order_ok = n_wins >= 4;
    println!(
        "criterion 5 (ordering FedRec <= NL, non-iid): {} | {n_wins}/5 seeds at every point",
        if order_ok { "PASS" } else { "FAIL" }
    );
    println!(
        "criterion 5 (15% band on FedRec medians): {} | {}",
        if band_ok { "PASS" } else { "FAIL" },
        parts.join("; ")
    );
    verdict(5, band_ok && order_ok, "band and ordering both required");
    assert!(order_ok, "FedRec <= NL ordering held in only {n_wins}/5 seeds");
    assert!(band_ok, "FedRec medians outside the 15% band");
}

#[test]
fn criterion_6_map_dominance() {
    let runs = seed_runs();
    let mut violations = Vec::new();
    let mut worst_margin = f64::NEG_INFINITY;
    for (label, reports) in [("iid", &runs.iid), ("non-iid", &runs.non_iid)] {
        for (k, r) in reports.iter().enumerate() {
            for &snr in &GRID {
                let map = r.row("MAP", snr).unwrap();
                let md = r.row("MD", snr).unwrap();
                let se = (map.std_error().powi(2) + md.std_error().powi(2)).sqrt();
                let margin = (map.ber - md.ber) / se;
                worst_margin = worst_margin.max(margin);
                if margin > 3.0 {
                    violations.push(format!("{label} seed {} {snr}dB: MAP {:.5} MD {:.5}", SEEDS[k], map.ber, md.ber));
                }
            }
        }
    }
    let ok = violations.is_empty();
    verdict(
        6,
        ok,
        &format!(
            "40 points, largest (MAP - MD)/SE {worst_margin:+.2}{}",
            if ok { String::new() } else { format!("; {}", violations.join("; ")) }
        ),
    );
    assert!(ok);
}

fn small_datasets(users: usize, n: usize, seed: u64) -> Vec<PilotDataset> {
    let c = Constellation::qam16(10.0).unwrap();
    (0..users)
        .map(|u| {
            fadingrx::channel::gen_dataset(u, 1.0, n, &c, &mut ChaCha8Rng::seed_from_u64(seed * 100 + u as u64))
                .unwrap()
        })
        .collect()
}

#[test]
fn criterion_7_federated_identities() {
    let seeds = SeedTree::new(77);
    // U = 1 FedRec against local training with the same total epochs
    let d1 = small_datasets(1, 400, 1);
    let cfg = FedConfig::default();
    let fed = fedrec_train(&d1, &cfg, &seeds).unwrap();
    let total = TrainConfig {
        epochs: cfg.rounds * cfg.local_epochs_per_round,
        ..cfg.train
    };
    let nl = noncollab_train(&d1, &total, &DEFAULT_LAYER_DIMS, &seeds).unwrap();
    let bit_identical = fed.params.flat == nl[0].flat;

    // identical users against a single user
    let theta = init_params(&mut seeds.rng(Purpose::Init, 0, 0), &DEFAULT_LAYER_DIMS).unwrap();
    let tc = TrainConfig { shuffle_seed: 5, ..Default::default() };
    let mut users: Vec<FedUser> = (0..5).map(|_| FedUser::new(d1[0].samples(), &tc, theta.len()).unwrap()).collect();
    let (avg, _) = fed_round(&theta, &mut users, 5, 0).unwrap();
    let single = local_train(&theta, &d1[0].samples(), &TrainConfig { epochs: 5, ..tc }).unwrap();
    let identical_gap = avg.flat.iter().zip(&single.flat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // delta averaging against end-point averaging
    let d5 = small_datasets(5, 200, 2);
    let mut users: Vec<FedUser> = d5
        .iter()
        .enumerate()
        .map(|(u, d)| FedUser::new(d.samples(), &TrainConfig { shuffle_seed: u as u64, ..tc }, theta.len()).unwrap())
        .collect();
    let (via_ends, _) = fed_round(&theta, &mut users, 5, 0).unwrap();
    let ends: Vec<ModelParams> = d5
        .iter()
        .enumerate()
        .map(|(u, d)| local_train(&theta, &d.samples(), &TrainConfig { shuffle_seed: u as u64, epochs: 5, ..tc }).unwrap())
        .collect();
    let deltas: Vec<Vec<f64>> =
        ends.iter().map(|p| p.flat.iter().zip(&theta.flat).map(|(a, b)| a - b).collect()).collect();
    let via_deltas = aggregate_deltas(&theta, &deltas).unwrap();
    let delta_gap = via_ends.flat.iter().zip(&via_deltas.flat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let ok = bit_identical && identical_gap <= 1e-12 && delta_gap <= 1e-12;
    verdict(
        7,
        ok,
        &format!(
            "U=1 bit-identical {bit_identical}; identical users gap {identical_gap:.1e}; delta vs end point gap {delta_gap:.1e}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_worker_count_determinism() {
    let base = ExperimentConfig {
        master_seed: 8,
        schemes: Receiver::ALL.to_vec(),
        ..Default::default()
    };
    let a = run_experiment(&ExperimentConfig { workers: 1, ..base.clone() }).unwrap();
    let b = run_experiment(&ExperimentConfig { workers: 3, ..base }).unwrap();
    let same = a.rows.len() == b.rows.len()
        && a
            .rows
            .iter()
            .zip(&b.rows)
            .all(|(x, y)| x.scheme == y.scheme && x.snr_db == y.snr_db && x.bit_errors == y.bit_errors);
    verdict(8, same, &format!("{} rows compared, workers 1 vs 3", a.rows.len()));
    assert!(same);
}
