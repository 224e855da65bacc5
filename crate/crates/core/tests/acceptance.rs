//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use ealm::classify::{classify_3qubit, fixture, orbit_vote, EntanglementClass, ThreeQubitNets};
use ealm::io::{dataset_to_string, model_to_string};
use ealm::nn::{ah_count, build_quadric_net, deep_width_ok, deep_width_ok3, NeuralNet};
use ealm::sampling::{build_dataset, sample_rank_sum, substream, Recipe, SplitSizes};
use ealm::tensor::{hyperdet222, multilinear_rank, MultilinearRank};
use ealm::training::{
    find_experiment, report_csv_row, run_experiment, run_experiment_with, ExperimentOutcome,
    TrainConfig,
};
use ealm::{QuditState, Shape};

use common::{max_gradient_error, GRAD_CASES};

const SEED: u64 = 1;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kets(terms: &[&str]) -> QuditState {
    let t: Vec<(&str, f64)> = terms.iter().map(|k| (*k, 1.0)).collect();
    QuditState::from_kets(Shape::new(2, 3).unwrap(), &t).unwrap()
}

fn oracle_exactness() -> Check {
    let cases = [
        (kets(&["000"]), vec![1, 1, 1]),
        (kets(&["000", "011"]), vec![1, 2, 2]),
        (kets(&["001", "010", "100"]), vec![2, 2, 2]),
        (kets(&["000", "111"]), vec![2, 2, 2]),
    ];
    let mut got = Vec::new();
    for (st, want) in &cases {
        let r = multilinear_rank(st).map_err(|e| e.to_string())?;
        if r != MultilinearRank(want.clone()) {
            return Err(format!("expected {want:?}, got {r}"));
        }
        got.push(r.to_string());
    }
    Ok(got.join(" "))
}

fn hyperdeterminants() -> Check {
    let w = hyperdet222(&kets(&["001", "010", "100"])).unwrap();
    let bisep = hyperdet222(&kets(&["000", "011"])).unwrap();
    let ghz = hyperdet222(&kets(&["000", "111"]).normalized().unwrap()).unwrap();
    ensure(
        w.abs() <= 1e-12 && bisep.abs() <= 1e-12 && (ghz - 0.25).abs() <= 1e-12,
        format!("W {w:e}, biseparable {bisep:e}, GHZ/√2 {ghz}"),
    )
}

fn typical_rank() -> Check {
    let shape = Shape::new(2, 3).unwrap();
    let n = 100_000;
    let (mut pos, mut neg) = (0usize, 0usize);
    for i in 0..n {
        let d = hyperdet222(&sample_rank_sum(shape, 3, &mut substream(SEED, 3, i))).unwrap();
        if d > 0.0 {
            pos += 1;
        } else if d < 0.0 {
            neg += 1;
        }
    }
    let (p, q) = (100.0 * pos as f64 / n as f64, 100.0 * neg as f64 / n as f64);
    ensure(
        (p - 86.6).abs() <= 1.5 && (q - 13.4).abs() <= 1.5,
        format!("Δ>0 {p:.2}%, Δ<0 {q:.2}%"),
    )
}

fn gradients() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for case in GRAD_CASES {
        let err = max_gradient_error(case, SEED, 100);
        ok &= err < 1e-5;
        parts.push(format!("{case:?} {err:.1e}"));
    }
    ensure(ok, parts.join(", "))
}

fn quadric_circle() -> Check {
    let net = build_quadric_net(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0], 3)
        .map_err(|e| e.to_string())?;
    let mut rng = substream(SEED, 5, 0);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (x, y): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let v = net.forward(&[x, y]).unwrap()[0];
        worst = worst.max((v - (x * x + y * y - 1.0)).abs());
    }
    ensure(worst <= 1e-10, format!("max error {worst:.1e}"))
}

fn train_row(name: &str, sizes: SplitSizes, epochs: usize, batch: usize) -> ExperimentOutcome {
    let exp = find_experiment(name).unwrap();
    let cfg = TrainConfig {
        epochs,
        batch_size: batch,
        seed: SEED,
        ..TrainConfig::default()
    };
    run_experiment_with(exp, sizes, &cfg).unwrap()
}

fn accuracy_floor(outcome: &ExperimentOutcome, floor: f64) -> Check {
    let acc = outcome.report.test_acc.unwrap();
    ensure(acc >= floor, format!("test accuracy {:.2}% (floor {:.0}%)", 100.0 * acc, 100.0 * floor))
}

#[derive(Default)]
struct Nets {
    separable: Option<NeuralNet>,
    degenerate: Option<NeuralNet>,
    rank: Option<NeuralNet>,
}

fn orbit_case_studies(nets: &Nets) -> Check {
    let (Some(sep), Some(deg), Some(rank)) = (&nets.separable, &nets.degenerate, &nets.rank) else {
        return Err("networks from criteria 7-9 unavailable".into());
    };
    let three = ThreeQubitNets {
        separable: sep,
        degenerate: deg,
        rank,
    };
    let mut ok = true;
    let mut parts = Vec::new();
    let expected = [
        ("Sep3", EntanglementClass::Separable),
        ("Bisep3", EntanglementClass::BiSeparable),
        ("W3", EntanglementClass::W),
        ("GHZ3", EntanglementClass::Ghz),
    ];
    for (i, (name, want)) in expected.iter().enumerate() {
        let got = classify_3qubit(&fixture(name).unwrap(), three, 1000, &mut substream(SEED, 10, i as u64))
            .unwrap();
        ok &= got == *want;
        parts.push(format!("{name}→{got}"));
    }

    let deg5 = train_row("table5-2^5", SplitSizes::new(150_000, 20_000, 20_000), 30, 128);
    parts.push(format!("2^5 net test {:.2}%", 100.0 * deg5.report.test_acc.unwrap()));
    let expected5 = [("Phi1", 0), ("Phi2", 0), ("Phi3", 0), ("Phi4", 0), ("delta1", 1), ("delta2", 1)];
    for (i, (name, want)) in expected5.iter().enumerate() {
        let h = orbit_vote(&deg5.net, &fixture(name).unwrap(), 10_000, &mut substream(SEED, 11, i as u64))
            .unwrap();
        ok &= h.majority_class == *want;
        parts.push(format!("{name}→{} ({}/{})", h.majority_class, h.class_counts[h.majority_class], h.num_votes));
    }
    ensure(ok, parts.join(", "))
}

fn calculators() -> Check {
    let t = ah_count(4, 8).map_err(|e| e.to_string())?;
    let boundary = !deep_width_ok(41, 8, 1, 4, 8) && deep_width_ok(42, 8, 1, 4, 8);
    let equality = deep_width_ok(3, 1, 1, 2, 2) && !deep_width_ok(0, 8, 1, 4, 8);
    let consistent = (1..60).all(|p| deep_width_ok(p, 8, 1, 4, 8) == (p >= t));
    let layered = (1..60).all(|p| deep_width_ok3(p, 1, 1, 4, 1, 1, 8) == deep_width_ok(p, 8, 4, 1, 8));
    ensure(
        t == 42 && boundary && equality && consistent && layered,
        format!("ah_count(4,8) = {t}"),
    )
}

fn determinism() -> Check {
    let shape = Shape::new(2, 3).unwrap();
    let sizes = SplitSizes::new(2000, 400, 400);
    let gen = || {
        let (a, b, c) = build_dataset(Recipe::DegenerateVsNondegenerate, shape, sizes, 7).unwrap();
        [a, b, c].iter().map(dataset_to_string).collect::<Vec<_>>()
    };
    if gen() != gen() {
        return Err("datasets differ".into());
    }
    let exp = find_experiment("table4-2x2x2").unwrap();
    let cfg = TrainConfig { epochs: 3, seed: 7, ..TrainConfig::default() };
    let fit = || {
        let o = run_experiment_with(exp, sizes, &cfg).unwrap();
        (model_to_string(&o.net), report_csv_row(exp, &o.report))
    };
    if fit() != fit() {
        return Err("models or reports differ".into());
    }
    let a = run_experiment("table3-2x2", 0.02, 7).unwrap();
    let b = run_experiment("table3-2x2", 0.02, 7).unwrap();
    ensure(a == b, "datasets, models and reports byte-identical".into())
}

fn main() -> ExitCode {
    let mut nets = Nets::default();
    let mut failures = 0;
    let mut run = |id: usize, title: &str, limit: Duration, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {limit:?}")),
            Err(d) => (false, d),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {}: {title} ({:.1}s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    };
    let secs = Duration::from_secs;
    let mins = |m: u64| Duration::from_secs(60 * m);

    run(1, "oracle exactness", secs(1), &mut oracle_exactness);
    run(2, "hyperdeterminant values", secs(1), &mut hyperdeterminants);
    run(3, "typical-rank Monte Carlo", secs(30), &mut typical_rank);
    run(4, "gradient correctness", secs(30), &mut gradients);
    run(5, "exact quadric construction", secs(5), &mut quadric_circle);
    run(6, "table 3 row 2x2, relu", mins(10), &mut || {
        accuracy_floor(&train_row("table3-2x2", SplitSizes::new(50_000, 10_000, 10_000), 30, 128), 0.96)
    });
    run(7, "table 2 row 2x2x2, hybrid", mins(10), &mut || {
        let o = train_row("table2-2x2x2", SplitSizes::new(56_200, 12_800, 32_000), 30, 128);
        let r = accuracy_floor(&o, 0.90);
        nets.separable = Some(o.net);
        r
    });
    run(8, "table 4 degeneracy 2x2x2, hybrid", mins(15), &mut || {
        let o = train_row("table4-2x2x2", SplitSizes::new(100_000, 25_600, 32_000), 100, 32);
        let r = accuracy_floor(&o, 0.88);
        nets.degenerate = Some(o.net);
        r
    });
    run(9, "table 6 rank 2x2x2, hybrid", mins(20), &mut || {
        let o = train_row("table6-2x2x2", SplitSizes::new(100_000, 25_600, 32_000), 60, 128);
        let r = accuracy_floor(&o, 0.85);
        nets.rank = Some(o.net);
        r
    });
    run(10, "orbit-vote case studies", mins(120), &mut || orbit_case_studies(&nets));
    run(11, "architecture calculators", secs(1), &mut calculators);
    run(12, "determinism", mins(10), &mut determinism);

    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
