//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the criteria execute in order and
//! the timing ones never share the machine with other work.

use std::process::ExitCode;

use nusfft::interpolation::{shape_cache, shape_probability, shape_frequencies, weights_2d, ShapeId};
use nusfft::oracle::{full_dft, l2_error, optimal_b_term};
use nusfft::pursuit::recover;
use nusfft::rng::substream;
use nusfft::signal::AvailabilityMask;
use nusfft::{NormMode, PursuitConfig, SampledSignal};
use nusfft_cli::bench::{correlation, run_sweep, CellSummary, ExperimentSpec, TableId};
use nusfft_cli::dense_signal;
use nusfft_cli::lemmas::{run_suite, LemmaParams};
use nusfft_cli::workload::{run_one, Workload};

const SEED: u64 = 20_031;

struct Verdict {
    pass: bool,
    detail: String,
}

fn cell(rows: &[CellSummary], pred: impl Fn(&CellSummary) -> bool) -> &CellSummary {
    rows.iter().find(|r| pred(r)).expect("cell present in sweep")
}

fn exact_recovery() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for b in [1usize, 2, 4] {
        let workload = Workload { n: 1 << 12, b, p: 0.7, sigma: 0.0, band: None };
        let mut cfg = PursuitConfig::new(b, 0.1, 0.01, NormMode::Greedy);
        cfg.stop_relative = 1e-16;
        let mut good = 0;
        let mut slowest: f64 = 0.0;
        for i in 0..20 {
            if let Ok(o) = run_one(&workload, &cfg, SEED + b as u64, i) {
                slowest = slowest.max(o.time_total.as_secs_f64());
                if o.success && o.max_coefficient_error <= 1e-6 {
                    good += 1;
                }
            }
        }
        pass &= good >= 18 && slowest < 5.0;
        parts.push(format!("B={b}: {good}/20 (slowest {slowest:.3}s)"));
    }
    Verdict { pass, detail: parts.join(", ") }
}

fn availability_table() -> Verdict {
    let mut spec = ExperimentSpec::preset(TableId::Availability);
    spec.seed = SEED;
    let mut interp = ExperimentSpec { modes: vec![NormMode::Interpolated], ps: vec![0.8, 0.4, 0.1, 0.01], ..spec.clone() };
    interp.timing = false;
    let greedy = ExperimentSpec { modes: vec![NormMode::Greedy], ps: vec![0.8, 0.4, 0.3, 0.2, 0.1], ..interp.clone() };
    let rows: Vec<CellSummary> = run_sweep(&interp).into_iter().chain(run_sweep(&greedy)).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &rows {
        let need_ok = match (r.cell.mode, r.cell.p) {
            (NormMode::Interpolated, 0.01) => r.successes >= 9,
            (NormMode::Interpolated, _) => r.successes == 10,
            (NormMode::Greedy, p) if p >= 0.4 => r.successes == 10,
            (NormMode::Greedy, _) => r.successes == 0,
        };
        pass &= need_ok;
        parts.push(format!("{} p={}: {}/10", r.cell.mode, r.cell.p, r.successes));
    }
    Verdict { pass, detail: parts.join(", ") }
}

fn noise_table() -> Verdict {
    let mut spec = ExperimentSpec::preset(TableId::Noise);
    spec.seed = SEED;
    spec.sigmas = vec![0.5, 1.0, 2.5];
    spec.timing = false;
    let rows = run_sweep(&spec);
    let low = cell(&rows, |r| r.cell.sigma == 0.5);
    let mid = cell(&rows, |r| r.cell.sigma == 1.0);
    let high = cell(&rows, |r| r.cell.sigma == 2.5);
    let checks = [
        low.successes >= 9,
        low.relative_error_pct <= 4.0,
        mid.successes >= 7,
        (1..=6).contains(&high.successes),
    ];
    Verdict {
        pass: checks.iter().all(|&c| c),
        detail: format!(
            "sigma=0.5: {}/10 err {:.2}%, sigma=1.0: {}/10, sigma=2.5: {}/10 (needs 1..=6)",
            low.successes, low.relative_error_pct, mid.successes, high.successes
        ),
    }
}

/// Median over seeds of the best-of-`repeats` compute time of each cell.
/// Cells are visited round-robin per seed so background load spreads
/// evenly instead of landing on one cell.
fn interleaved_medians(spec: &ExperimentSpec, cells: &[(u64, usize)], repeats: usize) -> Vec<(f64, usize)> {
    let mut times = vec![Vec::with_capacity(spec.runs); cells.len()];
    let mut successes = vec![0; cells.len()];
    for i in 0..spec.runs as u64 {
        for (k, &(n, b)) in cells.iter().enumerate() {
            let workload = Workload { n, b, p: spec.ps[0], sigma: spec.sigmas[0], band: spec.band };
            let cfg = spec.pursuit_config(b, NormMode::Greedy);
            // repeats of a seeded run do identical work
            let runs: Vec<_> = (0..repeats)
                .map(|_| run_one(&workload, &cfg, spec.seed + k as u64, i).expect("run completes"))
                .collect();
            successes[k] += runs[0].success as usize;
            times[k].push(runs.iter().map(|o| o.time_wo_sampling.as_secs_f64()).fold(f64::INFINITY, f64::min));
        }
    }
    times
        .into_iter()
        .zip(successes)
        .map(|(mut t, s)| {
            t.sort_by(f64::total_cmp);
            (t[t.len() / 2], s)
        })
        .collect()
}

fn scaling_in_n() -> Verdict {
    let mut spec = ExperimentSpec::preset(TableId::Scaling);
    spec.seed = SEED;
    let cells: Vec<(u64, usize)> = spec.ns.iter().map(|&n| (n, spec.bs[0])).collect();
    let t: Vec<f64> = interleaved_medians(&spec, &cells, 3).into_iter().map(|(t, _)| t).collect();
    let ln_n: Vec<f64> = spec.ns.iter().map(|&n| (n as f64).ln()).collect();
    let growth = t[t.len() - 1] / t[0];
    let r = correlation(&ln_n, &t);
    let series: Vec<String> = spec
        .ns
        .iter()
        .zip(&t)
        .map(|(n, t)| format!("2^{}:{:.2}ms", n.trailing_zeros(), 1e3 * t))
        .collect();
    Verdict {
        pass: growth <= 4.0 && r >= 0.8,
        detail: format!("growth x{growth:.2}, corr(t, ln n) {r:.3} [{}]", series.join(" ")),
    }
}

fn scaling_in_b() -> Verdict {
    let mut spec = ExperimentSpec::preset(TableId::Modes);
    spec.seed = SEED;
    let cells: Vec<(u64, usize)> = spec.bs.iter().map(|&b| (spec.ns[0], b)).collect();
    let rows = interleaved_medians(&spec, &cells, 3);
    let t: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let increasing = t.windows(2).all(|w| w[1] > w[0]);
    let ratio = t[t.len() - 1] / t[0];
    let series: Vec<String> = spec
        .bs
        .iter()
        .zip(&rows)
        .map(|(b, (t, s))| format!("B={b}:{:.2}ms ({s}/{})", 1e3 * t, spec.runs))
        .collect();
    Verdict {
        pass: increasing && ratio > 8.0,
        detail: format!("t16/t2 = {ratio:.1}, increasing: {increasing} [{}]", series.join(" ")),
    }
}

fn near_optimality() -> Verdict {
    let (n, b, eps) = (1024u64, 4usize, 0.1);
    let mut good = 0;
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let s = dense_signal(n, b, 1.0, &mut substream(SEED, 2 * i)).expect("signal");
        let data = SampledSignal::from_full(&s, AvailabilityMask::full(n).unwrap()).unwrap();
        let mut cfg = PursuitConfig::new(b, eps, 0.01, NormMode::Greedy);
        // the dense tail keeps the residual above the stopping threshold
        cfg.iteration_cap = Some(200);
        let Ok(report) = recover(&data, &cfg, &mut substream(SEED, 2 * i + 1)) else {
            continue;
        };
        let opt = optimal_b_term(&full_dft(&s).unwrap(), b);
        let ratio = l2_error(&s, &report.representation).unwrap() / l2_error(&s, &opt).unwrap();
        worst = worst.max(ratio);
        if ratio <= 1.0 + eps {
            good += 1;
        }
    }
    Verdict {
        pass: good >= 45,
        detail: format!("{good}/50 within (1+eps) of optimal, worst ratio {worst:.3}"),
    }
}

fn lemma_suite() -> Verdict {
    let params = LemmaParams { seed: SEED, ..LemmaParams::default() };
    let checks = run_suite(&params).expect("lemma suite runs");
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    Verdict {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} checks hold", checks.len())
        } else {
            format!("violated: {}", failed.join("; "))
        },
    }
}

fn appendix_checks() -> Verdict {
    let mut notes = Vec::new();
    let cross = weights_2d(&[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)], (0.0, 0.0)).unwrap();
    let cross_ok = cross.weights.iter().all(|w| (w - 0.25).abs() < 1e-12);
    notes.push(format!("cross {:?}", cross.weights));

    let diag = weights_2d(&[(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (1.0, -1.0)], (0.0, 0.0)).unwrap();
    let mut sorted = diag.weights.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let diag_ok = sorted.iter().zip([0.5, 0.5, 0.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-12)
        && shape_cache().len() == 9;

    let mut worst_shift: f64 = 0.0;
    let mut rng = substream(SEED, 99);
    for _ in 0..200 {
        use rand::Rng;
        let pts: Vec<(f64, f64)> = [(1, 1), (-1, 1), (-1, -1), (1, -1)]
            .iter()
            .map(|&(sx, sy)| ((sx * rng.random_range(1..6)) as f64, (sy * rng.random_range(1..6)) as f64))
            .collect();
        let (dx, dy) = (rng.random_range(-40..40) as f64, rng.random_range(-40..40) as f64);
        let moved: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x + dx, y + dy)).collect();
        let a = weights_2d(&pts, (0.0, 0.0)).unwrap();
        let b = weights_2d(&moved, (dx, dy)).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            worst_shift = worst_shift.max((x - y).abs());
        }
    }
    notes.push(format!("shift deviation {worst_shift:.1e}"));

    // formula against reference percentages, then Monte Carlo
    let table = [(0.9, 65.0, 29.0), (0.8, 41.0, 39.0), (0.7, 24.0, 37.0), (0.6, 13.0, 29.0), (0.5, 6.0, 19.0)];
    let mut formula_ok = (shape_probability(0.9, ShapeId::Cross).unwrap() - 0.6561).abs() < 1e-15;
    let mut mc_gap: f64 = 0.0;
    for (i, &(p, c, d)) in table.iter().enumerate() {
        let cross = 100.0 * shape_probability(p, ShapeId::Cross).unwrap();
        let diagonal = 100.0 * shape_probability(p, ShapeId::Diagonal).unwrap();
        formula_ok &= (cross - c).abs() < 1.0 && (diagonal - d).abs() < 1.0;
        let (cm, dm) = shape_frequencies(p, 100_000, &mut substream(SEED, 200 + i as u64)).unwrap();
        mc_gap = mc_gap.max((100.0 * cm - cross).abs()).max((100.0 * dm - diagonal).abs());
    }
    notes.push(format!("Monte-Carlo gap {mc_gap:.2} points"));
    Verdict {
        pass: cross_ok && diag_ok && worst_shift < 1e-12 && formula_ok && mc_gap <= 2.0,
        detail: notes.join(", "),
    }
}

fn main() -> ExitCode {
    // keep libtest-style flags such as --list from running the suite
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 8] = [
        ("exact sparse recovery", exact_recovery),
        ("success vs availability", availability_table),
        ("success vs noise", noise_table),
        ("sublinear scaling in n", scaling_in_n),
        ("super-linear scaling in B", scaling_in_b),
        ("near-optimal B-term error", near_optimality),
        ("estimator lemma suite", lemma_suite),
        ("2D interpolation weights", appendix_checks),
    ];
    // optional criterion numbers to run a subset: `-- 4 5`
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all = true;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = std::time::Instant::now();
        let v = check();
        all &= v.pass;
        println!(
            "criterion {} {:<28} {}  {} ({:.1}s)",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
