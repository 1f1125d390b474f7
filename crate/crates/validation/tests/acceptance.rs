//! Acceptance criteria A1-A10, one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::Instant;

use irsa_core::combin::hypergeometric_pmf;
use irsa_core::energy::{analytic_energy_report, conditional_split_pmf, gamma_of, AnalyticOptions};
use irsa_core::frame::{build_frame, users_at_load};
use irsa_core::mc::{run_point, run_sweep, run_trials, trial_rng};
use irsa_core::sic::{peel, run_standard, run_two_step};
use irsa_core::stopset::{builtin_table, compare, enumerate, EnumerationBounds};
use irsa_core::{DegreeDistribution, Exact, FrameConfig, FrameGraph, LoadPointStats, Report, Scheme, SweepSpec};
use irsa_validation::random_order_decode;
use rand::Rng;

type Check = Result<String, String>;

const N: usize = 200;
const TRIALS: u64 = 10_000;
const SEED: u64 = 2024;

fn cubic() -> DegreeDistribution {
    DegreeDistribution::point_mass(3)
}

fn base() -> FrameConfig {
    FrameConfig::new(N, 0, N, cubic()).unwrap()
}

fn q(num: usize, den: usize) -> Exact {
    Exact::new(num.into(), den.into())
}

fn tenths() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn sweep(loads: Vec<f64>, schemes: Vec<Scheme>, trials: u64) -> Vec<LoadPointStats> {
    run_sweep(&SweepSpec {
        base: base(),
        loads,
        trials,
        seed: SEED,
        schemes,
        workers: 0,
    })
    .expect("sweep runs")
}

fn verdict(failures: Vec<String>, summary: String) -> Check {
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(failures.join("; "))
    }
}

fn a1_gamma() -> Check {
    let expected = [(100, "[0.1231, 0.3769, 0.3769, 0.1231]"), (150, "[0.0149, 0.1399, 0.4254, 0.4198]")];
    let mut failures = Vec::new();
    let mut seen = Vec::new();
    for (alpha, want) in expected {
        let alpha_arg = alpha.to_string();
        let mut out = Vec::new();
        let code = irsa_cli::run(
            ["irsa", "gamma", "--lambda", "0,0,0,1", "--n", "200", "--alpha", &alpha_arg],
            &mut out,
        );
        let text = String::from_utf8_lossy(&out).trim().to_string();
        if code != 0 || !text.ends_with(&format!("gamma={want}")) {
            failures.push(format!("alpha={alpha}: got {text:?}"));
        }
        seen.push(text);
    }
    verdict(failures, seen.join(" | "))
}

fn a2_standard_energy() -> Check {
    let stats = sweep(tenths(), vec![Scheme::Standard], TRIALS);
    let failures: Vec<String> = stats
        .iter()
        .filter(|s| !(s.energy_mean() == 3.0 && s.energy_is_constant() && s.energy_ci95() == 0.0))
        .map(|s| format!("G={}: E={} ci={}", s.load, s.energy_mean(), s.energy_ci95()))
        .collect();
    verdict(failures, format!("E = 3 with zero variance at G = 0.1..0.9 ({TRIALS} frames each)"))
}

fn a3_savings() -> Check {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (alpha, limit) in [(100, 2.01), (150, 2.26)] {
        let s = run_point(&base(), 0.1, TRIALS, SEED, Scheme::TwoStep { alpha }, 0).map_err(|e| e.to_string())?;
        let (e, ci) = (s.energy_mean(), s.energy_ci95());
        summary.push(format!("alpha={alpha}: E={e:.4}±{ci:.4} (limit {limit})"));
        if e > limit || ci >= 0.01 {
            failures.push(format!("alpha={alpha} is over {limit}"));
        }
    }
    if !failures.is_empty() {
        // every user without a first-part replica must send all three, so
        // E >= E[T] + 3 Γ_0
        let g0 = gamma_of(&cubic(), N, 150).unwrap().prob(0);
        failures.push(format!("floor for alpha=150 is 2.25 + 3*{g0:.4} = {:.4}", 2.25 + 3.0 * g0));
        failures.insert(0, summary.join(", "));
    }
    verdict(failures, summary.join(", "))
}

struct TwoStepGrid {
    alpha100: Vec<LoadPointStats>,
    alpha150: Vec<LoadPointStats>,
}

fn two_step_grid() -> TwoStepGrid {
    let stats = sweep(tenths(), vec![Scheme::TwoStep { alpha: 100 }, Scheme::TwoStep { alpha: 150 }], TRIALS);
    let (a, b) = stats.split_at(9);
    TwoStepGrid {
        alpha100: a.to_vec(),
        alpha150: b.to_vec(),
    }
}

fn a4_crossover(grid: &TwoStepGrid) -> Check {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (a, b) in grid.alpha100.iter().zip(&grid.alpha150).take(4) {
        summary.push(format!("G={}: {:.4} < {:.4}", a.load, a.energy_mean(), b.energy_mean()));
        if a.energy_mean() + a.energy_ci95() >= b.energy_mean() - b.energy_ci95() {
            failures.push(format!(
                "G={}: {:.4}±{:.4} vs {:.4}±{:.4}",
                a.load,
                a.energy_mean(),
                a.energy_ci95(),
                b.energy_mean(),
                b.energy_ci95()
            ));
        }
    }
    verdict(failures, summary.join(", "))
}

fn a5_first_part(grid: &TwoStepGrid) -> Check {
    // 18 simultaneous intervals: Bonferroni-adjusted normal quantile
    let widen = 2.99 / irsa_core::mc::Z95;
    let mut failures = Vec::new();
    for (alpha, stats) in [(100, &grid.alpha100), (150, &grid.alpha150)] {
        let exact = gamma_of(&DegreeDistribution::<Exact>::point_mass(3), N, alpha).unwrap().mean_first_part();
        if exact != q(3 * alpha, N) {
            failures.push(format!("alpha={alpha}: analytic E[T] = {exact}"));
        }
        let target = 3.0 * alpha as f64 / N as f64;
        for s in stats.iter() {
            if (s.energy_first() - target).abs() > widen * s.energy_first_ci95() {
                failures.push(format!(
                    "alpha={alpha} G={}: {:.5}±{:.5}",
                    s.load,
                    s.energy_first(),
                    s.energy_first_ci95()
                ));
            }
        }
    }
    let spread = |v: &[LoadPointStats]| {
        let f: Vec<f64> = v.iter().map(|s| s.energy_first()).collect();
        (f.iter().cloned().fold(f64::MAX, f64::min), f.iter().cloned().fold(f64::MIN, f64::max))
    };
    let (lo1, hi1) = spread(&grid.alpha100);
    let (lo2, hi2) = spread(&grid.alpha150);
    verdict(
        failures,
        format!("alpha=100 in [{lo1:.4}, {hi1:.4}], alpha=150 in [{lo2:.4}, {hi2:.4}]; analytic 3/2 and 9/4 exactly"),
    )
}

fn a6_tightness(grid: &TwoStepGrid) -> Check {
    let catalog = builtin_table();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (alpha, stats) in [(100, &grid.alpha100), (150, &grid.alpha150)] {
        let config = base().with_alpha(alpha).unwrap();
        for s in stats.iter().take(4) {
            let r: Report = analytic_energy_report(&config, &s.load, &catalog, AnalyticOptions::default())
                .map_err(|e| e.to_string())?;
            let rel = (r.energy - s.energy_mean()).abs() / s.energy_mean();
            worst = worst.max(rel);
            if rel >= 0.05 {
                failures.push(format!("alpha={alpha} G={}: analytic {:.4} sim {:.4}", s.load, r.energy, s.energy_mean()));
            }
        }
    }
    verdict(failures, format!("worst relative gap {:.2}% (denominator form)", 100.0 * worst))
}

fn a7_throughput() -> Check {
    let mut failures = Vec::new();
    let mut frames = 0u64;
    for (i, g) in tenths().into_iter().enumerate() {
        let config = base().with_users(users_at_load(N, g).unwrap());
        for trial in 0..TRIALS {
            let graph = build_frame(&config, &mut trial_rng(SEED, i as u64, trial));
            let mut standard = run_standard(&graph).decoded;
            standard.sort_unstable();
            for alpha in [100, 150] {
                let out = run_two_step(&graph, alpha, 1.0).map_err(|e| e.to_string())?;
                let mut two = out.final_decoded().to_vec();
                two.sort_unstable();
                if two != standard && failures.len() < 5 {
                    failures.push(format!("G={g} alpha={alpha} trial {trial}"));
                }
            }
            frames += 1;
        }
    }
    verdict(failures, format!("{frames} paired frames, identical decoded sets for alpha=100 and 150"))
}

fn a8_eta_peak() -> Check {
    let loads: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
    let schemes = vec![Scheme::Standard, Scheme::TwoStep { alpha: 100 }, Scheme::TwoStep { alpha: 150 }];
    let stats = sweep(loads.clone(), schemes.clone(), 4_000);
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (k, scheme) in schemes.iter().enumerate() {
        let row = &stats[k * loads.len()..(k + 1) * loads.len()];
        let best = row.iter().max_by(|a, b| a.eta().total_cmp(&b.eta())).unwrap();
        summary.push(format!("{}@{}: G*={:.2} eta={:.4}", scheme.name(), scheme.alpha(N), best.load, best.eta()));
        if !(0.7 - 1e-9..=0.8 + 1e-9).contains(&best.load) {
            failures.push(format!("{scheme:?} peaks at G={}", best.load));
        }
        if k > 0 {
            for (two, std) in row.iter().zip(&stats[..loads.len()]) {
                if two.eta() <= std.eta() {
                    failures.push(format!("{scheme:?} G={}: {} <= {}", two.load, two.eta(), std.eta()));
                }
            }
        }
    }
    verdict(failures, summary.join(", "))
}

fn a9_table() -> Check {
    let start = Instant::now();
    let found = enumerate(EnumerationBounds::TABLE).map_err(|e| e.to_string())?;
    let diff = compare(&found, &builtin_table());
    let failures: Vec<String> = diff
        .rows
        .iter()
        .filter(|r| r.status != irsa_core::stopset::DiffStatus::Matched)
        .map(|r| format!("{:?} {:?}: {:?}", r.label, r.set.profile(), r.status))
        .collect();
    verdict(
        failures,
        format!("{} of 22 rows matched with c, {} sets enumerated in {:.1?}", diff.matched(), found.len(), start.elapsed()),
    )
}

fn a10_properties() -> Check {
    let mut failures = Vec::new();

    // confluence
    let mut rng = trial_rng(SEED, u64::MAX, 0);
    for case in 0..10_000 {
        let n = rng.gen_range(2..=10);
        let users = rng.gen_range(1..=8);
        let placements: Vec<Vec<u32>> = (0..users)
            .map(|_| {
                let r = rng.gen_range(1..=3.min(n));
                let mut slots = rand::seq::index::sample(&mut rng, n, r).into_iter().map(|s| s as u32).collect::<Vec<_>>();
                slots.sort_unstable();
                slots
            })
            .collect();
        let graph = FrameGraph::new(n, placements).unwrap();
        let mut fast = peel(&graph, n, usize::MAX).decoded;
        fast.sort_unstable();
        if random_order_decode(&graph, &mut rng) != fast {
            failures.push(format!("confluence case {case}"));
            break;
        }
    }

    // product form, mass and first-part mean on a grid
    let lambda = DegreeDistribution::<Exact>::point_mass(3);
    'grid: for n in [8usize, 13, 50, 101, 200, 400] {
        for alpha in (3..=n).step_by((n / 20).max(1)) {
            for r in 2..=4usize.min(n) {
                let pmf = conditional_split_pmf::<Exact>(r, n, alpha).unwrap();
                for (t, p) in pmf.iter().enumerate() {
                    if *p != hypergeometric_pmf::<Exact>(t as u64, n as u64, r as u64, alpha as u64) {
                        failures.push(format!("product form n={n} alpha={alpha} r={r} t={t}"));
                        break 'grid;
                    }
                }
            }
            let g = gamma_of(&lambda, n, alpha).unwrap();
            if g.mean_first_part() != q(3 * alpha, n) {
                failures.push(format!("E[T] n={n} alpha={alpha}"));
                break 'grid;
            }
        }
    }

    // merge associativity and pooling
    let config = base().with_users(users_at_load(N, 0.3).unwrap()).with_alpha(100).unwrap();
    let scheme = Scheme::TwoStep { alpha: 100 };
    let part = |r: std::ops::Range<u64>| run_trials(&config, 0.3, scheme, SEED, 0, r).unwrap();
    let (a, b, c) = (part(0..700), part(700..1900), part(1900..3000));
    let left = a.merge(&b).unwrap().merge(&c).unwrap();
    let right = a.merge(&b.merge(&c).unwrap()).unwrap();
    let whole = part(0..3000);
    if left != right || left != whole || left.energy_mean().to_bits() != whole.energy_mean().to_bits() {
        failures.push("merge is not exact".into());
    }

    // worker count
    let spec = |workers| SweepSpec {
        base: base(),
        loads: vec![0.2, 0.6],
        trials: 1_000,
        seed: SEED,
        schemes: vec![Scheme::Standard, scheme],
        workers,
    };
    if run_sweep(&spec(1)).unwrap() != run_sweep(&spec(3)).unwrap() {
        failures.push("results depend on worker count".into());
    }

    verdict(
        failures,
        "confluence (10^4 frames), product form, E[T] identity, exact merge, worker determinism".into(),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, check: Check, start: Instant| {
        let secs = start.elapsed().as_secs_f64();
        match check {
            Ok(detail) => println!("{id} PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    };

    let t = Instant::now();
    report("A1", "gamma reproduction", a1_gamma(), t);
    let t = Instant::now();
    report("A2", "standard energy", a2_standard_energy(), t);
    let t = Instant::now();
    report("A3", "two-step savings", a3_savings(), t);
    let t = Instant::now();
    let grid = two_step_grid();
    report("A4", "crossover", a4_crossover(&grid), t);
    let t = Instant::now();
    report("A5", "first-part energy", a5_first_part(&grid), t);
    let t = Instant::now();
    report("A6", "analytic tightness", a6_tightness(&grid), t);
    let t = Instant::now();
    report("A7", "throughput preservation", a7_throughput(), t);
    let t = Instant::now();
    report("A8", "eta peak", a8_eta_peak(), t);
    let t = Instant::now();
    report("A9", "stopping-set table", a9_table(), t);
    let t = Instant::now();
    report("A10", "property suites", a10_properties(), t);

    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
