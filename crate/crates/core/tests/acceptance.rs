//! One line per acceptance criterion. Runs without the libtest harness so the
//! report is always printed; exits non-zero if any criterion fails outside the
//! documented table errata.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use aspis::adversary::{AttackMode, AttackScenario, DistortionSpec, Selection};
use aspis::aggregation::AggregationRule;
use aspis::analysis::{brute_force_cmax, emit_tables, report, StrategySpace, TableAttack, TableGrid};
use aspis::assignment::{assign_aspis, assign_baseline, assign_detox, SchemeKind, TaskAssignment};
use aspis::combinatorics::binomial;
use aspis::detection::{maximum_cliques, EqualityMode};
use aspis::exec::Execution;
use aspis::harness::{
    bench_cliques, detection_latency, simulate_iteration, synthetic_task, train, Detector, GradientModel, LatencyConfig, LatencyReport,
    Protocol, RunConfig, TaskKind,
};

const TABLE_RUNTIME: Duration = Duration::from_secs(1);
const ORACLE_RUNTIME: Duration = Duration::from_secs(300);
const RANDOM_STRATEGIES: usize = 10_000;
const SIM_SEEDS: u64 = 20;
const DETECTION_TRIALS: u64 = 100;
const LATENCY_SEEDS: u64 = 100;
const LATENCY_BOUND: usize = 5;
const LATENCY_FRACTION: f64 = 0.95;
const RECOVERY_ITERATIONS: usize = 200;
const FD_STEP: f64 = 1e-6;
const FD_TOLERANCE: f64 = 1e-5;
const FD_PROBES: usize = 50;
const CLIQUE_BOUND_MS: f64 = 1000.0;
const QUALITATIVE_SEEDS: u64 = 20;

struct Line {
    pass: bool,
    /// Failure that is expected and explained (table errata).
    known: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Line {
    Line { pass: ok, known: false, detail: detail.into() }
}

type Outcome = Result<Line, String>;

/// Reference distortion tables, cells as printed: (K, q, ATT-2, ATT-1, baseline,
/// DETOX optimal, DETOX weak), as printed.
const REFERENCE: &[(usize, usize, &str, &str, &str, &str, &str)] = &[
    (15, 2, "0.004", "0.002", "0.133", "0.2", "0"),
    (15, 3, "0.022", "0.002", "0.2", "0.2", "0"),
    (15, 4, "0.062", "0.009", "0.267", "0.4", "0"),
    (15, 5, "0.132", "0.022", "0.333", "0.4", "0"),
    (15, 6, "0.242", "0.044", "0.4", "0.6", "0.2"),
    (15, 7, "0.4", "0.077", "0.467", "0.6", "0.4"),
    (21, 2, "0.002", "0.001", "0.095", "0.143", "0"),
    (21, 3, "0.008", "0.001", "0.143", "0.143", "0"),
    (21, 4, "0.021", "0.003", "0.19", "0.286", "0"),
    (21, 5, "0.045", "0.008", "0.238", "0.286", "0"),
    (21, 6, "0.083", "0.015", "0.286", "0.429", "0"),
    (21, 7, "0.137", "0.026", "0.333", "0.429", "0"),
    (21, 8, "0.211", "0.042", "0.381", "0.571", "0.143"),
    (21, 9, "0.307", "0.063", "0.429", "0.571", "0.286"),
    (21, 10, "0.429", "0.09", "0.476", "0.714", "0.429"),
    (24, 2, "0.001", "0", "0.083", "0.125", "0"),
    (24, 3, "0.005", "0", "0.125", "0.125", "0"),
    (24, 4, "0.014", "0.002", "0.167", "0.25", "0"),
    (24, 5, "0.03", "0.005", "0.208", "0.25", "0"),
    (24, 6, "0.054", "0.01", "0.25", "0.375", "0"),
    (24, 7, "0.09", "0.017", "0.292", "0.375", "0"),
    (24, 8, "0.138", "0.028", "0.333", "0.5", "0"),
    (24, 9, "0.202", "0.042", "0.375", "0.5", "0.125"),
    (24, 10, "0.282", "0.059", "0.417", "0.625", "0.25"),
    (24, 11, "0.38", "0.082", "0.458", "0.625", "0.375"),
];

/// Printed cells where `C(2, 3) = 0` files gives epsilon 0 but the table shows
/// a non-zero value.
const ERRATA: &[(usize, usize, &str)] = &[(15, 2, "ATT-1"), (21, 2, "ATT-1")];

fn thousandths(text: &str) -> u64 {
    (text.parse::<f64>().expect("reference cell") * 1000.0).round() as u64
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rows = BTreeMap::new();
    for k in [15, 21, 24] {
        let qs: Vec<usize> = REFERENCE.iter().filter(|c| c.0 == k).map(|c| c.1).collect();
        for row in emit_tables(&TableGrid { workers: k, r: 3, qs }).map_err(|e| e.to_string())? {
            rows.insert((row.workers, row.q, row.scheme, row.attack), row.epsilon);
        }
    }
    let elapsed = start.elapsed();
    let mut mismatches = Vec::new();
    let mut cells = 0;
    for &(k, q, att2, att1, base, dopt, dweak) in REFERENCE {
        let expected = [
            (SchemeKind::Aspis, TableAttack::Att2, att2),
            (SchemeKind::Aspis, TableAttack::Att1, att1),
            (SchemeKind::Baseline, TableAttack::Optimal, base),
            (SchemeKind::Baseline, TableAttack::Weak, base),
            (SchemeKind::Detox, TableAttack::Optimal, dopt),
            (SchemeKind::Detox, TableAttack::Weak, dweak),
        ];
        for (scheme, attack, printed) in expected {
            cells += 1;
            let ours = rows[&(k, q, scheme.name().to_string(), attack.label().to_string())];
            if (ours * 1000.0).round() as u64 != thousandths(printed) {
                mismatches.push((k, q, attack.label(), printed, ours));
            }
        }
    }
    let detail = format!(
        "{}/{cells} cells match, {:.1} ms (bound {} ms){}",
        cells - mismatches.len(),
        elapsed.as_secs_f64() * 1e3,
        TABLE_RUNTIME.as_millis(),
        mismatches.iter().map(|(k, q, a, p, o)| format!("; K={k} q={q} {a}: printed {p}, computed {o}")).collect::<String>()
    );
    let only_errata = mismatches.len() == ERRATA.len() && mismatches.iter().all(|(k, q, a, _, _)| ERRATA.contains(&(*k, *q, *a)));
    if elapsed > TABLE_RUNTIME {
        return Ok(check(false, detail));
    }
    Ok(Line { pass: mismatches.is_empty(), known: only_errata, detail })
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut configs = 0;
    for k in 7..=10usize {
        for q in 2..k.div_ceil(2) {
            let expected = binomial(2 * q as u64, 3) / 2;
            let common = brute_force_cmax(k, 3, q, StrategySpace::CommonD, Execution::Parallel).map_err(|e| e.to_string())?;
            if common != expected {
                return Ok(check(false, format!("K={k} q={q}: common-D max {common}, closed form {expected}")));
            }
            let space = StrategySpace::RandomPerAdversary { samples: RANDOM_STRATEGIES, seed: (k * 100 + q) as u64 };
            let random = brute_force_cmax(k, 3, q, space, Execution::Parallel).map_err(|e| e.to_string())?;
            if random > expected {
                return Ok(check(false, format!("K={k} q={q}: random strategy reached {random} > {expected}")));
            }
            configs += 1;
        }
    }
    let elapsed = start.elapsed();
    Ok(check(
        elapsed <= ORACLE_RUNTIME,
        format!("{configs} configurations, common-D scan equals C(2q,3)/2, {RANDOM_STRATEGIES} random strategies each never exceed it, {:.1} s", elapsed.as_secs_f64()),
    ))
}

fn protocol(rule: AggregationRule) -> Protocol {
    Protocol { rule, equality: EqualityMode::Exact, exec: Execution::Parallel }
}

fn criterion_3() -> Outcome {
    let (k, r) = (15, 3);
    let aspis = assign_aspis(k, r).map_err(|e| e.to_string())?;
    let detox = assign_detox(k, r).map_err(|e| e.to_string())?;
    let baseline = assign_baseline(k).map_err(|e| e.to_string())?;
    let median = protocol(AggregationRule::MajorityThenMedian);
    let mut runs = 0;
    let mut mismatches = Vec::new();
    for q in 2..=7 {
        let reversed = DistortionSpec::default();
        let cases: [(&TaskAssignment, AttackScenario, Detector, TableAttack, SchemeKind); 6] = [
            (&aspis, AttackScenario::new(AttackMode::Att2, q, reversed), Detector::Clique { q }, TableAttack::Att2, SchemeKind::Aspis),
            (&aspis, AttackScenario::new(AttackMode::Att1, q, reversed), Detector::Clique { q }, TableAttack::Att1, SchemeKind::Aspis),
            (&baseline, AttackScenario::new(AttackMode::Att1, q, reversed), Detector::Off, TableAttack::Optimal, SchemeKind::Baseline),
            (&baseline, AttackScenario::new(AttackMode::Att1, q, reversed), Detector::Off, TableAttack::Weak, SchemeKind::Baseline),
            (
                &detox,
                AttackScenario::new(AttackMode::Att1, q, reversed).with_selection(Selection::DetoxOptimal),
                Detector::Off,
                TableAttack::Optimal,
                SchemeKind::Detox,
            ),
            (
                &detox,
                AttackScenario::new(AttackMode::Att1, q, reversed).with_selection(Selection::DetoxWeak),
                Detector::Off,
                TableAttack::Weak,
                SchemeKind::Detox,
            ),
        ];
        for (assignment, scenario, detector, attack, scheme) in cases {
            let expected = report(scheme, attack, k, r, q).map_err(|e| e.to_string())?.c as usize;
            for seed in 0..SIM_SEEDS {
                let mut det = detector.clone();
                let it = simulate_iteration(assignment, &scenario, &median, &mut det, 4, 0, seed).map_err(|e| e.to_string())?;
                runs += 1;
                if it.distorted != expected {
                    mismatches.push(format!("{} {} q={q} seed={seed}: {} vs {expected}", scheme.name(), attack.label(), it.distorted));
                }
            }
        }
    }
    Ok(check(mismatches.is_empty(), format!("{runs} simulated iterations, {} mismatches{}", mismatches.len(), mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default())))
}

fn criterion_4_5(mode: AttackMode) -> Outcome {
    let assignment = assign_aspis(15, 3).map_err(|e| e.to_string())?;
    let median = protocol(AggregationRule::MajorityThenMedian);
    let mut good = 0;
    let mut total = 0;
    for q in 2..=7 {
        let scenario = AttackScenario::new(mode, q, DistortionSpec::default());
        for seed in 0..DETECTION_TRIALS {
            let mut det = Detector::Clique { q };
            let it = simulate_iteration(&assignment, &scenario, &median, &mut det, 4, 0, seed).map_err(|e| e.to_string())?;
            let outcome = it.step.detection.as_ref().expect("clique detection ran");
            total += 1;
            let ok = match mode {
                AttackMode::Att1 => outcome.is_identified() && outcome.adversaries == it.adversaries,
                _ => {
                    let graph = it.step.graph.as_ref().expect("graph built");
                    !outcome.is_identified() && maximum_cliques(graph.adjacency()).len() >= 2
                }
            };
            good += usize::from(ok);
        }
    }
    let what = match mode {
        AttackMode::Att1 => "identified with exact adversary set",
        _ => "ambiguous with >= 2 maximum cliques",
    };
    Ok(check(good == total, format!("{good}/{total} trials {what}")))
}

fn criterion_6() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for q in [2, 4] {
        let mut all = LatencyReport::default();
        for seed in 0..LATENCY_SEEDS {
            all.merge(detection_latency(&LatencyConfig { q, ..Default::default() }, seed).map_err(|e| e.to_string())?);
        }
        let frac = all.fraction_within(LATENCY_BOUND, true);
        ok &= frac >= LATENCY_FRACTION;
        let show = |h: BTreeMap<Option<usize>, usize>| {
            h.iter().map(|(k, v)| format!("{}:{v}", k.map_or("never".to_string(), |l| l.to_string()))).collect::<Vec<_>>().join(" ")
        };
        details.push(format!(
            "q={q}: {:.1}% of windows within {LATENCY_BOUND} [{}]; mid-window redraws {:.1}% [{}]",
            frac * 100.0,
            show(all.histogram(true)),
            all.fraction_within(LATENCY_BOUND, false) * 100.0,
            show(all.histogram(false)),
        ));
    }
    Ok(check(ok, details.join("; ")))
}

fn recovery_config(q: usize) -> RunConfig {
    let mut cfg = RunConfig { iterations: RECOVERY_ITERATIONS, seed: 7, ..RunConfig::default() };
    cfg.attack = if q == 0 { AttackScenario::none() } else { AttackScenario::new(AttackMode::Att1, q, DistortionSpec::default()) };
    cfg
}

fn criterion_7() -> Outcome {
    let clean = train(&recovery_config(0)).map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    let mut ok = true;
    for q in [1, 2] {
        let attacked = train(&recovery_config(q)).map_err(|e| e.to_string())?;
        let same_losses = clean.records.iter().zip(&attacked.records).all(|(a, b)| a.loss.to_bits() == b.loss.to_bits() && a.epsilon == b.epsilon);
        let same_model = clean.model_json() == attacked.model_json();
        let flagged = attacked.records.iter().all(|r| r.detected == r.adversaries);
        ok &= same_losses && same_model && flagged && attacked.records.len() == RECOVERY_ITERATIONS;
        details.push(format!("q={q}: loss/epsilon columns identical {same_losses}, final model identical {same_model}, adversaries detected every iteration {flagged}"));
    }
    Ok(check(ok, format!("{RECOVERY_ITERATIONS} iterations, K=7 r=3; {}", details.join("; "))))
}

fn criterion_8() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut worst: f64 = 0.0;
    for kind in [TaskKind::Logistic, TaskKind::LeastSquares, TaskKind::Mlp { hidden: 5 }] {
        let task = synthetic_task(kind, 64, 4, 3).map_err(|e| e.to_string())?;
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..FD_PROBES {
            let w: Vec<f64> = (0..task.dim()).map(|_| g.gen_range(-1.0..1.0)).collect();
            let s = g.gen_range(0..task.samples());
            let analytic = task.file_gradient(&w, &[s]);
            for (i, a) in analytic.iter().enumerate() {
                let (mut up, mut down) = (w.clone(), w.clone());
                up[i] += FD_STEP;
                down[i] -= FD_STEP;
                let numeric = (task.sample_loss(&up, s) - task.sample_loss(&down, s)) / (2.0 * FD_STEP);
                worst = worst.max((numeric - a).abs());
            }
        }
    }
    Ok(check(worst <= FD_TOLERANCE, format!("max abs difference {worst:.2e} over {FD_PROBES} probes per task kind (tolerance {FD_TOLERANCE:e})")))
}

fn criterion_9() -> Outcome {
    let mut slowest: f64 = 0.0;
    let mut cases = Vec::new();
    for attack in [AttackMode::Att1, AttackMode::Att2] {
        for q in [5, 15, 25, 35, 45] {
            let t = bench_cliques(100, 5, q, attack, 1).map_err(|e| e.to_string())?;
            slowest = slowest.max(t.milliseconds);
            cases.push(format!("{} q={q}: {:.3} ms", attack.name(), t.milliseconds));
        }
    }
    let small = bench_cliques(7, 3, 3, AttackMode::Att2, 0).map_err(|e| e.to_string())?;
    Ok(check(
        slowest <= CLIQUE_BOUND_MS && small.maximum_cliques == 2,
        format!("slowest {slowest:.3} ms (bound {CLIQUE_BOUND_MS} ms), K=7 q=3 ATT-2 maximum cliques {}; {}", small.maximum_cliques, cases.join(", ")),
    ))
}

fn criterion_10() -> Outcome {
    let mut wins = 0;
    let mut gaps = Vec::new();
    for seed in 0..QUALITATIVE_SEEDS {
        let mut cfg = RunConfig { workers: 15, batch_size: 910, iterations: 60, seed, ..RunConfig::default() };
        cfg.task.samples = 2000;
        cfg.attack = AttackScenario::new(AttackMode::Att2, 4, DistortionSpec::Reversed { scale: 10.0 });
        let robust = train(&cfg).map_err(|e| e.to_string())?;
        cfg.aggregation = Some(AggregationRule::Mean);
        let plain = train(&cfg).map_err(|e| e.to_string())?;
        wins += usize::from(robust.final_loss < plain.final_loss);
        gaps.push(plain.final_loss - robust.final_loss);
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(check(
        wins as u64 == QUALITATIVE_SEEDS,
        format!(
            "image-classification accuracy curves not reproducible at desk scale; substitute: majority+median beats plain mean on final loss in {wins}/{QUALITATIVE_SEEDS} seeds (K=15 ATT-2 q=4, smallest gap {min_gap:.4})"
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("table reproduction", criterion_1),
        ("closed-form oracle", criterion_2),
        ("end-to-end distorted counts", criterion_3),
        ("detection soundness ATT-1", || criterion_4_5(AttackMode::Att1)),
        ("detection ambiguity ATT-2", || criterion_4_5(AttackMode::Att2)),
        ("windowed detection latency", criterion_6),
        ("exact recovery", criterion_7),
        ("gradient correctness", criterion_8),
        ("clique enumeration time", criterion_9),
        ("accuracy claims (substituted)", criterion_10),
    ];
    let mut unexpected = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let line = run().unwrap_or_else(|e| check(false, format!("error: {e}")));
        let verdict = match (line.pass, line.known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known errata)",
            (false, false) => "FAIL",
        };
        if !line.pass && !line.known {
            unexpected += 1;
        }
        println!("criterion {:>2} {verdict:<19} {name} [{:.1} s]: {}", i + 1, start.elapsed().as_secs_f64(), line.detail);
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
