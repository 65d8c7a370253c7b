//! Acceptance gate. Each test prints one `PASS`/`FAIL` line and then asserts.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use muxphoton::app::fig3::{avglin_panel, FIG3C_LAMBDAS};
use muxphoton::app::{find_crossing, optimize};
use muxphoton::bell::{self, BellState};
use muxphoton::control::{phase_schedule, select_last, HeraldFrame, LastPhotonLut, Phase};
use muxphoton::efficiency::{
    bin_success, detection_efficiency, occupied_bins, order_statistic_weights, total_efficiency,
};
use muxphoton::model::{PairDistribution, MAX_PAIRS};
use muxphoton::montecarlo::estimate_eta;
use muxphoton::{Detection, SchemeConfig, Selection, SourceParams, Topology};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};

const N_MAX: usize = 128;

const HEADLINE_ETA: f64 = 0.27;
const HEADLINE_ETA_TOL: f64 = 0.02;
const HEADLINE_N: usize = 31;
const HEADLINE_N_TOL: usize = 4;
const HEADLINE_RUNTIME: Duration = Duration::from_secs(1);

const HIGH_SWITCH_ETA_SW: f64 = 0.98;
const HIGH_SWITCH_ETA: f64 = 0.59;
const HIGH_SWITCH_ETA_TOL: f64 = 0.03;
const HIGH_SWITCH_N: usize = 63;
const HIGH_SWITCH_N_TOL: usize = 8;

const ARRAY_DETECTION: f64 = 0.24;
const ARRAY_DETECTION_TOL: f64 = 0.005;

const CROSSING: f64 = 0.95;
const CROSSING_TOL: f64 = 0.02;
const CROSSING_BRACKET: (f64, f64) = (0.85, 0.99);
const CROSSING_SEARCH_TOL: f64 = 1e-6;

const MC_TRIALS: u64 = 1_000_000;
const MC_SIGMAS: f64 = 3.0;
const MC_SEED: u64 = 20_150_901;
const MC_RUNTIME: Duration = Duration::from_secs(300);

const BELL_TOL: f64 = 1e-10;

const PMF_NORM_TOL: f64 = 1e-9;
const WEIGHT_NORM_TOL: f64 = 1e-12;
const CLOSED_FORM_TOL: f64 = 1e-12;
const PROPERTY_CASES: u32 = 256;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id:02} {}: {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn binary(n: usize, detection: Detection) -> SchemeConfig {
    SchemeConfig::new(n, Topology::BinaryDelay, detection).unwrap()
}

fn within_n(n: usize, target: usize, tol: usize) -> bool {
    n.abs_diff(target) <= tol
}

#[test]
fn criterion_01_headline_maximum() {
    let start = Instant::now();
    let best = optimize(
        &SourceParams::default(),
        &binary(1, Detection::SingleDetector),
        1,
        N_MAX,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let pass = (best.eta_max - HEADLINE_ETA).abs() <= HEADLINE_ETA_TOL
        && within_n(best.n_bins, HEADLINE_N, HEADLINE_N_TOL)
        && elapsed < HEADLINE_RUNTIME;
    report(
        1,
        "headline maximum",
        pass,
        &format!(
            "eta_max = {:.4} at N* = {} in {:?} (want {HEADLINE_ETA} ± {HEADLINE_ETA_TOL} at {HEADLINE_N} ± {HEADLINE_N_TOL}, < {HEADLINE_RUNTIME:?})",
            best.eta_max, best.n_bins, elapsed
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_high_switch_maximum() {
    let best = optimize(
        &SourceParams::default().with_eta_sw(HIGH_SWITCH_ETA_SW),
        &binary(1, Detection::SingleDetector),
        1,
        N_MAX,
    )
    .unwrap();
    let pass = (best.eta_max - HIGH_SWITCH_ETA).abs() <= HIGH_SWITCH_ETA_TOL
        && within_n(best.n_bins, HIGH_SWITCH_N, HIGH_SWITCH_N_TOL);
    report(
        2,
        "high-switch maximum",
        pass,
        &format!(
            "eta_max = {:.4} at N* = {} (want {HIGH_SWITCH_ETA} ± {HIGH_SWITCH_ETA_TOL} at {HIGH_SWITCH_N} ± {HIGH_SWITCH_N_TOL})",
            best.eta_max, best.n_bins
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_array_detection_efficiency() {
    let eta = detection_efficiency(&SourceParams::default(), Detection::DetectorArray);
    // printed constants: 0.85 · 0.8 · (7·0.87⁴ + 18·0.87⁵)/25 · 0.84² · 24/25
    let literal = 0.85 * 0.8 * (7.0 * 0.87f64.powi(4) + 18.0 * 0.87f64.powi(5)) / 25.0
        * 0.84
        * 0.84
        * 24.0
        / 25.0;
    let pass = (eta - ARRAY_DETECTION).abs() <= ARRAY_DETECTION_TOL && (eta - literal).abs() < 1e-15;
    report(
        3,
        "array detection efficiency",
        pass,
        &format!("{eta:.6} (want {ARRAY_DETECTION} ± {ARRAY_DETECTION_TOL}, literal {literal:.6})"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_crossing_point() {
    let x = find_crossing(
        &SourceParams::default(),
        &binary(1, Detection::SingleDetector),
        CROSSING_BRACKET.0,
        CROSSING_BRACKET.1,
        CROSSING_SEARCH_TOL,
    )
    .unwrap();
    let pass = (x - CROSSING).abs() <= CROSSING_TOL;
    report(
        4,
        "protocol crossing",
        pass,
        &format!("eta_sw = {x:.5} (want {CROSSING} ± {CROSSING_TOL})"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_monte_carlo_agreement() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut count = 0;
    for n in [4, 8, 16, 32, 63] {
        for topology in [Topology::BinaryDelay, Topology::SingleDelayLine] {
            for detection in [Detection::SingleDetector, Detection::DetectorArray] {
                for lambda in [0.02, 0.1] {
                    let params = SourceParams::default().with_lambda(lambda);
                    let scheme = SchemeConfig::new(n, topology, detection).unwrap();
                    let eta = total_efficiency(&params, &scheme).unwrap().eta_total;
                    let est = estimate_eta(&params, &scheme, MC_TRIALS, MC_SEED + count).unwrap();
                    let z = (est.eta_hat - eta).abs() / est.std_err;
                    worst = worst.max(z);
                    if z > MC_SIGMAS {
                        failures.push(format!("{scheme:?} lambda={lambda}: z={z:.2}"));
                    }
                    count += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && count == 40 && elapsed < MC_RUNTIME;
    report(
        5,
        "monte carlo agreement",
        pass,
        &format!(
            "{count} configs × {MC_TRIALS} trials, worst |z| = {worst:.2}, {elapsed:?} {failures:?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_bell_factors() {
    let hbs = bell::hbs_herald_probability().unwrap();
    let hbs_ok = (hbs.success_probability - 3.0 / 16.0).abs() <= BELL_TOL;
    let hbs_fidelity_ok = hbs
        .outcomes
        .iter()
        .all(|o| (o.fidelity - 1.0).abs() <= BELL_TOL);
    let states_ok = hbs.outcomes.iter().all(|o| {
        let same = o.pattern == [1, 0, 1, 0] || o.pattern == [0, 1, 0, 1];
        o.bell_state == if same { BellState::PhiPlus } else { BellState::PsiPlus }
    });
    let two = bell::two_source_probability().unwrap();
    let two_ok = (two.coincidence - 0.5).abs() <= BELL_TOL
        && (two.singlet_fidelity - 1.0).abs() <= BELL_TOL;
    let pass = hbs_ok && hbs_fidelity_ok && states_ok && two_ok;
    report(
        6,
        "bell factors",
        pass,
        &format!(
            "four-source {} = {:.12} (want 3/16), heralded fidelities ok: {}, states ok: {}; two-source {:.12} (want 1/2), singlet fidelity {:.12}",
            bell::to_rational(hbs.success_probability, 1 << 20).unwrap(),
            hbs.success_probability,
            hbs_fidelity_ok,
            states_ok,
            two.coincidence,
            two.singlet_fidelity
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_control_logic() {
    let expected: [[u8; 4]; 8] = [
        [1, 0, 0, 1],
        [1, 0, 1, 0],
        [1, 1, 1, 1],
        [1, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
        [0, 1, 1, 1],
        [0, 1, 0, 0],
    ];
    let schedule = phase_schedule(8).unwrap();
    let mut schedule_matches = 0;
    for (r, want) in expected.iter().enumerate() {
        let row = schedule.row(r + 1).unwrap();
        for (got, &w) in row.iter().zip(want) {
            if *got == Phase::from_bit(w == 1) {
                schedule_matches += 1;
            }
        }
    }
    let schedule_ok = schedule_matches == 32 && schedule.switch_count() == 4;

    let lut_rows = [
        ("10000000", "10000000"),
        ("x1000000", "01000000"),
        ("xx100000", "00100000"),
        ("xxx10000", "00010000"),
        ("xxxx1000", "00001000"),
        ("xxxxx100", "00000100"),
        ("xxxxxx10", "00000010"),
        ("xxxxxxx1", "00000001"),
    ];
    let lut = LastPhotonLut::new(8);
    let mut rows_ok = 0;
    for (row, (input, output)) in lut.rows().iter().zip(lut_rows) {
        let mut ok = row.pattern() == input && row.output.to_string() == output;
        // every frame covered by the pattern must select the row's output
        for word in 0u32..256 {
            let frame: String = (0..8).map(|i| if word >> (7 - i) & 1 == 1 { '1' } else { '0' }).collect();
            let covered = frame.chars().zip(input.chars()).all(|(f, p)| p == 'x' || p == f);
            if covered {
                ok &= select_last(&frame.parse().unwrap()).output.to_string() == output;
            }
        }
        rows_ok += usize::from(ok);
    }

    let mut exhaustive_ok = 0;
    for word in 0u32..256 {
        let bits: Vec<bool> = (0..8).map(|i| word >> (7 - i) & 1 == 1).collect();
        let highest = bits.iter().rposition(|&b| b).map(|i| i + 1);
        let sel = select_last(&HeraldFrame::new(bits));
        let output_ok = match highest {
            Some(r) => sel.output == HeraldFrame::one_hot(8, r),
            None => !sel.output.any(),
        };
        exhaustive_ok += usize::from(sel.bin == highest && output_ok);
    }
    let pass = schedule_ok && rows_ok == 8 && exhaustive_ok == 256;
    report(
        7,
        "control logic",
        pass,
        &format!("schedule {schedule_matches}/32 entries, lookup rows {rows_ok}/8, frames {exhaustive_ok}/256"),
    );
    assert!(pass);
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn efficiency_params() -> impl Strategy<Value = SourceParams> {
    (
        0.001f64..1.0,
        0.5f64..=1.0,
        0.5f64..=1.0,
        0.5f64..=1.0,
        0.3f64..=1.0,
        0.3f64..=1.0,
        0.5f64..=1.0,
        0.0f64..0.2,
        prop_oneof![Just(PairDistribution::Poisson), Just(PairDistribution::ThermalApprox)],
    )
        .prop_map(|(lambda, f, c, sw, ds, da, conv, alpha, dist)| SourceParams {
            lambda,
            eta_f: f,
            eta_c: c,
            eta_sw: sw,
            eta_det_single: ds,
            eta_det_array: da,
            eta_conv: conv,
            alpha_inc: alpha,
            pair_dist: dist,
            ..SourceParams::default()
        })
}

fn schemes() -> impl Strategy<Value = SchemeConfig> {
    (
        1usize..=64,
        prop_oneof![Just(Topology::BinaryDelay), Just(Topology::SingleDelayLine)],
        prop_oneof![Just(Detection::SingleDetector), Just(Detection::DetectorArray)],
    )
        .prop_map(|(n, t, d)| SchemeConfig::new(n, t, d).unwrap())
}

#[derive(Debug, Clone, Copy)]
enum Knob {
    F,
    C,
    Sw,
    DetSingle,
    DetArray,
    Conv,
}

fn knob_set(p: &SourceParams, knob: Knob, v: f64) -> SourceParams {
    let mut p = p.clone();
    match knob {
        Knob::F => p.eta_f = v,
        Knob::C => p.eta_c = v,
        Knob::Sw => p.eta_sw = v,
        Knob::DetSingle => p.eta_det_single = v,
        Knob::DetArray => p.eta_det_array = v,
        Knob::Conv => p.eta_conv = v,
    }
    p
}

#[test]
fn criterion_08_property_suite() {
    let mut failures = Vec::new();

    let r = run_property(
        "pmf normalization",
        (0.0f64..=1.5, prop_oneof![Just(PairDistribution::Poisson), Just(PairDistribution::ThermalApprox)]),
        |(lambda, dist)| {
            let table = dist.pmf_table(lambda);
            prop_assert_eq!(table.len(), MAX_PAIRS + 1);
            let sum: f64 = table.iter().sum();
            prop_assert!((sum - 1.0).abs() <= PMF_NORM_TOL, "sum = {}", sum);
            Ok(())
        },
    );
    failures.extend(r.err());

    let r = run_property(
        "order-statistic weight normalization",
        (1usize..=512, 0.0f64..=1.0),
        |(n, frac)| {
            let k = ((n as f64 * frac).ceil() as usize).clamp(1, n);
            let w = order_statistic_weights(n, k).unwrap();
            let sum: f64 = w.iter().sum();
            prop_assert!((sum - 1.0).abs() <= WEIGHT_NORM_TOL, "sum = {}", sum);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            Ok(())
        },
    );
    failures.extend(r.err());

    let r = run_property(
        "bin success is a probability",
        (efficiency_params(), schemes(), any::<bool>()),
        |(p, s, last)| {
            let s = if last { s.with_selection_override(Selection::LastPhoton) } else { s };
            let total: f64 = (1..=s.n_bins)
                .map(|r| {
                    let b = bin_success(&p, &s, r).unwrap();
                    assert!((0.0..=1.0).contains(&b), "B({r}) = {b}");
                    b
                })
                .sum();
            prop_assert!(total <= 1.0 + 1e-12, "sum B = {}", total);
            let eta = total_efficiency(&p, &s).unwrap().eta_total;
            prop_assert!((eta - total).abs() < 1e-12);
            Ok(())
        },
    );
    failures.extend(r.err());

    let knobs = prop_oneof![
        Just(Knob::F),
        Just(Knob::C),
        Just(Knob::Sw),
        Just(Knob::DetSingle),
        Just(Knob::DetArray),
        Just(Knob::Conv),
    ];
    let r = run_property(
        "efficiency monotone in every efficiency parameter",
        (efficiency_params(), schemes(), knobs, 0.0f64..=1.0, 0.0f64..=1.0),
        |(p, s, knob, a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let eta_lo = total_efficiency(&knob_set(&p, knob, lo), &s).unwrap().eta_total;
            let eta_hi = total_efficiency(&knob_set(&p, knob, hi), &s).unwrap().eta_total;
            prop_assert!(
                eta_hi >= eta_lo - 1e-12,
                "{:?}: eta({}) = {} > eta({}) = {} for {:?} {:?}",
                knob, lo, eta_lo, hi, eta_hi, s, p
            );
            Ok(())
        },
    );
    failures.extend(r.err());

    let r = run_property(
        "ideal closed form",
        (0.0f64..=1.0, 1usize..=128),
        |(lambda, n)| {
            let p = SourceParams::ideal(lambda);
            let s = binary(n, Detection::SingleDetector);
            let eta = total_efficiency(&p, &s).unwrap().eta_total;
            let closed = if lambda == 0.0 {
                0.0
            } else {
                lambda * (-lambda).exp() * (1.0 - (-lambda * n as f64).exp()) / (1.0 - (-lambda).exp())
            };
            prop_assert!((eta - closed).abs() <= CLOSED_FORM_TOL, "{} vs {}", eta, closed);
            Ok(())
        },
    );
    failures.extend(r.err());

    let pass = failures.is_empty();
    report(
        8,
        "property suite",
        pass,
        &if pass {
            format!("5 properties × {PROPERTY_CASES} cases")
        } else {
            failures.join("; ")
        },
    );
    assert!(pass);
}

#[test]
fn criterion_09_mean_transmission_shape() {
    let rows = avglin_panel(&SourceParams::default()).unwrap();
    let control: Vec<f64> = rows.iter().map(|(_, v)| v[3]).collect();
    let decreasing = control.windows(2).all(|w| w[1] < w[0]);

    let dominates = rows
        .iter()
        .filter(|(n, _)| *n >= 20)
        .all(|(_, v)| v[2] > v[3]);

    // a column rises exactly where the number of occupied bins grows
    let mut step_mismatches = Vec::new();
    for (col, &lambda) in FIG3C_LAMBDAS.iter().enumerate() {
        for w in rows.windows(2) {
            let (n, a) = (&w[0].0, w[0].1[col]);
            let b = w[1].1[col];
            let grows = occupied_bins(lambda, n + 1) > occupied_bins(lambda, *n);
            if (b > a) != grows {
                step_mismatches.push(format!("lambda={lambda} N={n}->{}", n + 1));
            }
        }
    }
    let pass = decreasing && dominates && step_mismatches.is_empty();
    report(
        9,
        "mean transmission shape",
        pass,
        &format!(
            "control decreasing: {decreasing}, lambda=0.1 above control for N>=20: {dominates}, step mismatches: {step_mismatches:?}"
        ),
    );
    assert!(pass);
}

fn run_cli(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_muxphoton"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn criterion_10_reproducibility() {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("run.cfg");
    std::fs::write(
        &config,
        "lambda = 0.1\nn_bins = 16\ndetection = array\nseed = 7\ntrials = 200000\n",
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    let mut files = Vec::new();
    for dir in [&a, &b] {
        for cmd in ["fig3", "mc", "sweep", "schedule"] {
            let args: Vec<&str> = if cmd == "schedule" {
                vec![cmd, "--config", cfg]
            } else {
                vec![cmd, "--config", cfg, "--seed", "7"]
            };
            let out = run_cli(&args, dir);
            assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    let mut identical = true;
    for name in ["fig3a.csv", "fig3b.csv", "fig3c.csv", "fig3.json", "mc.csv", "sweep.csv", "schedule.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        identical &= x == y && !x.is_empty();
        files.push(name);
    }
    // a different seed must change the Monte Carlo output
    let c = root.path().join("c");
    assert!(run_cli(&["mc", "--config", cfg, "--seed", "8"], &c).status.success());
    let seed_matters = std::fs::read(c.join("mc.csv")).unwrap() != std::fs::read(a.join("mc.csv")).unwrap();
    let pass = identical && seed_matters;
    report(
        10,
        "reproducibility",
        pass,
        &format!("{} files byte-identical: {identical}, new seed changes mc.csv: {seed_matters}", files.len()),
    );
    assert!(pass);
}
