//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! The long-running criteria execute the full presets over ten seeds; expect
//! this target to take the better part of an hour on a single core.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use alpharank_ig::alpharank::{alpha_rank, build_transition_single_pop};
use alpharank_ig::belief::KernelSpec;
use alpharank_ig::experiment::{preset, run, run_seed, write_record, ExperimentConfig, RunRecord};
use alpharank_ig::games::{good_bad_game, GameEnv, ObservationModel};
use alpharank_ig::samplers::{RgUcb, Selection};
use alpharank_ig::theory::{binary_entropy, entropy, entropy_upper_bound, regret_exponent_g, TheoryParams};
use alpharank_ig::PayoffMatrix;
use common::*;
use rand::Rng;

type Outcome = (bool, String);

const RED: [usize; 2] = [1, 4];

fn red_share(r: &RunRecord) -> f64 {
    let total: u64 = r.counts.iter().sum();
    RED.iter().map(|&e| r.counts[e]).sum::<u64>() as f64 / total.max(1) as f64
}

fn full_runs(game: &str, sampler: &str) -> Vec<RunRecord> {
    let cfg = preset(game, sampler).unwrap();
    run(&cfg).unwrap()
}

fn check_records(label: &str, recs: &[RunRecord]) {
    for r in recs {
        assert!(r.error.is_none(), "{label} seed {} failed: {:?}", r.seed, r.error);
    }
}

fn c1() -> Outcome {
    let env = good_bad_game(2, 2, 0.55).unwrap();
    let r = alpha_rank(env.ground_truth(), 1e-8).unwrap();
    let d = r.l1_distance(&[0.0, 1.0, 0.0, 0.0]);
    (d < 1e-4, format!("rank {:?}, L1 to (0,1,0,0) = {d:.2e}", r.probabilities()))
}

fn c2() -> Outcome {
    let e = 1e-6;
    let c = build_transition_single_pop(good_bad_game(2, 2, 0.55).unwrap().ground_truth(), e).unwrap();
    let expected = [
        [(2.0 - e) / 3.0, (1.0 - e) / 3.0, e / 3.0, e / 3.0],
        [e / 3.0, 1.0 - e, e / 3.0, e / 3.0],
        [(1.0 - e) / 3.0, (1.0 - e) / 3.0, (1.0 + 4.0 * e) / 6.0, 1.0 / 6.0],
        [(1.0 - e) / 3.0, (1.0 - e) / 3.0, 1.0 / 6.0, (1.0 + 4.0 * e) / 6.0],
    ];
    let mut worst = 0.0f64;
    for (i, row) in expected.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((c.get(i, j) - v).abs());
        }
    }
    // a (G2, G1) value of (1−ε)/3 would leave row G2 summing to 4/3 − 2ε/3
    let alt_row: f64 = (1.0 - e) / 3.0 + (1.0 - e) + 2.0 * e / 3.0;
    let alt_not_stochastic = (alt_row - 1.0).abs() > 0.3;
    (
        worst < 1e-12 && alt_not_stochastic,
        format!("max entrywise error {worst:.2e} (G2,G1 checked as ε/3; (1−ε)/3 would give row sum {alt_row:.6})"),
    )
}

fn c3(ig: &[RunRecord]) -> Outcome {
    let wass = full_runs("2g2b", "alpha_wass");
    let ucb = full_runs("2g2b", "rg_ucb");
    check_records("alpha_wass", &wass);
    check_records("rg_ucb", &ucb);
    let mut ig_wins = 0;
    let mut wass_wins = 0;
    let mut rows = Vec::new();
    for ((a, w), u) in ig.iter().zip(&wass).zip(&ucb) {
        let (sa, sw, su) = (red_share(a), red_share(w), red_share(u));
        ig_wins += usize::from(sa > su);
        wass_wins += usize::from(sw > su);
        rows.push(format!("s{}:{sa:.3}/{sw:.3}/{su:.3}", a.seed));
    }
    (
        ig_wins >= 7 && wass_wins >= 7,
        format!(
            "red share > RG-UCB in {ig_wins}/10 (IG), {wass_wins}/10 (Wass); ig/wass/ucb per seed {}",
            rows.join(" ")
        ),
    )
}

/// Trailing moving average.
fn smooth(v: &[f64], window: usize) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            v[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

fn mean_curve(recs: &[RunRecord], f: impl Fn(&alpharank_ig::experiment::EvalPoint) -> f64) -> Vec<f64> {
    let n = recs[0].points.len();
    (0..n).map(|i| recs.iter().map(|r| f(&r.points[i])).sum::<f64>() / recs.len() as f64).collect()
}

fn c4(ig: &[RunRecord]) -> Outcome {
    let jm = mean_curve(ig, |p| p.jm);
    let first_zero = jm.iter().position(|&v| v == 0.0);
    let stays = first_zero.is_some_and(|i| jm[i..].iter().all(|&v| v == 0.0));
    let mut ok = stays;
    let mut detail = match first_zero {
        Some(i) => format!("mean J^M first 0 at {} queries, stays 0: {stays}", ig[0].points[i].queries),
        None => format!("mean J^M never 0 (final {:.2})", jm.last().unwrap()),
    };
    for (name, curve) in [("J^B", mean_curve(ig, |p| p.jb)), ("J^F", mean_curve(ig, |p| p.jf))] {
        let s = smooth(&curve, 5);
        let rises = s.windows(2).filter(|w| w[1] > w[0] + 1e-9).count();
        let max_rise = s.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        let end = *s.last().unwrap();
        ok &= rises == 0 && end < 0.1;
        let picks: Vec<String> = s.iter().step_by(10).map(|v| format!("{v:.3}")).collect();
        detail += &format!(
            "; {name} smoothed final {end:.4}, {rises} rises (max {max_rise:.4}), every 10th [{}]",
            picks.join(",")
        );
    }
    (ok, detail)
}

fn c5() -> Outcome {
    let m = PayoffMatrix::new(2, vec![0.5, 0.8, 0.2, 0.5]).unwrap();
    let env = GameEnv::new(m, ObservationModel::Bernoulli).unwrap();
    let mut correct = 0;
    let mut capped = 0;
    let mut queries = 0u64;
    for seed in 0..200u64 {
        let mut ucb = RgUcb::new(2, 0.1, (0.0, 1.0)).unwrap();
        let mut rng = alpharank_ig::rng::substream(seed, &[0xacc5]);
        let mut done = false;
        for _ in 0..1_000_000u64 {
            match ucb.step() {
                Selection::Entry(e) => {
                    let o = env.observe(e, &mut rng).unwrap();
                    ucb.add(e, o);
                    queries += 1;
                }
                Selection::Done => {
                    done = true;
                    break;
                }
            }
        }
        capped += usize::from(!done);
        correct += usize::from(done && ucb.mean(1) > ucb.mean(2));
    }
    (
        correct >= 180 && capped == 0,
        format!("{correct}/200 correct, {capped} hit the query cap, mean {:.1} queries", queries as f64 / 200.0),
    )
}

fn c6() -> Outcome {
    let mut r = rng(600);
    let mut worst = [0.0f64; 3];
    for k in 0..100 {
        let n = if k % 10 == 0 { 65 + k } else { r.gen_range(2..30) };
        let c = random_chain(&mut r, n);
        let ours = solver_stationary(&c);
        let oracle = svd_stationary(&c);
        worst[0] = worst[0].max(ours.l1_distance(&oracle));
    }
    for _ in 0..50 {
        let dim = r.gen_range(2..6);
        let pool: Vec<Vec<f64>> = (0..5).map(|_| random_simplex(&mut r, dim)).collect();
        let a: Vec<Vec<f64>> = (0..6).map(|_| pool[r.gen_range(0..5)].clone()).collect();
        let b: Vec<Vec<f64>> = (0..6).map(|_| random_simplex(&mut r, dim)).collect();
        worst[1] = worst[1].max((wass(&a, &b) - brute_force_assignment(&a, &b)).abs());
    }
    for _ in 0..1000 {
        let mu0 = r.gen_range(-1.0..1.0);
        let var0 = r.gen_range(0.1..2.0);
        let noise = r.gen_range(0.1..2.0);
        let obs: Vec<f64> = (0..r.gen_range(1..40)).map(|_| r.gen_range(-1.0..2.0)).collect();
        let mut b = independent(mu0, var0, 4, noise);
        for &o in &obs {
            b = b.condition(1, o).unwrap();
        }
        let (m, v) = conjugate(mu0, var0, noise, &obs);
        worst[2] = worst[2].max((b.mean()[1] - m).abs()).max((b.covariance()[(1, 1)] - v).abs());
    }
    (
        worst[0] < 1e-8 && worst[1] < 1e-9 && worst[2] < 1e-10,
        format!(
            "max errors: stationary L1 {:.2e}, transport {:.2e}, conditioning {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn c7() -> Outcome {
    let mut r = rng(700);
    let mut bound_ok = true;
    for _ in 0..1000 {
        let n = r.gen_range(2..12);
        let p = random_simplex(&mut r, n);
        let h = entropy(&p);
        bound_ok &= p.iter().all(|&pi| h <= entropy_upper_bound(pi, n).unwrap() + 1e-12);
    }
    let degenerate = (entropy(&[1.0, 0.0, 0.0]) - entropy_upper_bound(1.0, 3).unwrap()).abs() < 1e-15;
    let binary = (entropy(&[0.5, 0.5]) - entropy_upper_bound(0.5, 2).unwrap()).abs() < 1e-15
        && (binary_entropy(0.5).unwrap() - 2f64.ln()).abs() < 1e-15;

    let params = TheoryParams::default();
    let raw = |t: u64| {
        let b = regret_exponent_g(&params, t).unwrap();
        (t as f64).ln() + b.g
    };
    // log(T e^g) on a grid running well past the peak
    let grid: Vec<u64> = (0..=40).map(|k| (1e9 * 10f64.powf(k as f64 * 0.1)) as u64).collect();
    let decreasing = grid.windows(2).all(|w| raw(w[1]) < raw(w[0]));
    let at_1e6 = raw(1_000_000).exp();
    let small = at_1e6 < 1e-6;
    (
        bound_ok && degenerate && binary && decreasing && small,
        format!(
            "entropy bound on 1000 draws: {bound_ok}, tight at degenerate: {degenerate}, tight at uniform binary: {binary}; \
             T·e^g decreasing on [1e9, 1e13]: {decreasing}; T·e^g at T=1e6 = {at_1e6:.3e} (target < 1e-6)"
        ),
    )
}

fn c8() -> Outcome {
    let mut r = rng(800);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let s = 2 + k % 8;
        let mut m = random_matrix(&mut r, s);
        // inject ties in a few relevant comparisons
        for i in 0..s {
            for j in i + 1..s {
                if r.gen::<f64>() < 0.15 {
                    let v = m.get(i, j);
                    m.set(j, i, v);
                }
            }
        }
        let other = same_pattern(&mut r, &m);
        let a = alpha_rank(&m, 1e-6).unwrap();
        let b = alpha_rank(&other, 1e-6).unwrap();
        worst = worst.max(a.l1_distance(b.probabilities()));
    }
    (worst < 1e-8, format!("max L1 over 200 pairs {worst:.2e}"))
}

/// Queries at the first eval point after which J^M stays 0, or `budget + 1`.
fn queries_to_zero(r: &RunRecord, budget: u64) -> u64 {
    let last_bad = r.points.iter().rposition(|p| p.jm != 0.0);
    match last_bad {
        None => r.points[0].queries,
        Some(i) if i + 1 < r.points.len() => r.points[i + 1].queries,
        Some(_) => budget + 1,
    }
}

fn median(mut v: Vec<u64>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        0.5 * (v[n / 2 - 1] as f64 + v[n / 2] as f64)
    }
}

fn c9() -> Outcome {
    let structured = preset("3g5b_prior", "alpha_ig_bins").unwrap();
    let mut plain = structured.clone();
    plain.belief.as_mut().unwrap().kernel = KernelSpec::Independent { mean: 0.5, variance: 1.0 };
    plain.name = Some("3g5b_prior-alpha_ig_bins-independent".into());
    let a = run(&structured).unwrap();
    let b = run(&plain).unwrap();
    check_records("structured", &a);
    check_records("independent", &b);
    let qa: Vec<u64> = a.iter().map(|r| queries_to_zero(r, structured.budget)).collect();
    let qb: Vec<u64> = b.iter().map(|r| queries_to_zero(r, plain.budget)).collect();
    let (ma, mb) = (median(qa.clone()), median(qb.clone()));
    (
        ma < mb,
        format!("median queries to J^M=0: block kernel {ma}, independent {mb} (unsolved = budget+1); per seed {qa:?} vs {qb:?}"),
    )
}

fn c10() -> Outcome {
    let mut identical = true;
    let mut checked = Vec::new();
    for (game, sampler) in [("2g2b", "alpha_ig_bins"), ("2g2b", "alpha_wass"), ("gauss4", "alpha_ig_nsb"), ("3g5b", "rg_ucb")] {
        let mut cfg: ExperimentConfig = preset(game, sampler).unwrap();
        cfg.budget = 20 * cfg.n_r;
        cfg.eval_points = 5;
        cfg.eval_samples = 200;
        let bytes = |cfg: &ExperimentConfig| {
            let dir = tempfile::tempdir().unwrap();
            write_record(dir.path(), cfg, &run_seed(cfg, 4)).unwrap();
            std::fs::read(dir.path().join("seed_4.csv")).unwrap()
        };
        identical &= bytes(&cfg) == bytes(&cfg);
        checked.push(format!("{game}/{sampler}"));
    }
    (identical, format!("metric CSVs byte-identical across reruns for {}", checked.join(", ")))
}

fn report(n: usize, f: &mut dyn FnMut() -> Outcome) -> bool {
    let start = Instant::now();
    let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!(
        "criterion {n}: {} {detail} [{:.1}s]",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    ok
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, bool)> = Vec::new();
    let mut check = |n: usize, f: &mut dyn FnMut() -> Outcome| results.push((n, report(n, f)));
    check(1, &mut c1);
    check(2, &mut c2);
    check(6, &mut c6);
    check(7, &mut c7);
    check(8, &mut c8);
    check(10, &mut c10);
    check(5, &mut c5);
    if std::env::var_os("ALPHARANK_ACCEPT_FAST").is_none() {
        let ig = catch_unwind(|| {
            let recs = full_runs("2g2b", "alpha_ig_bins");
            check_records("alpha_ig_bins", &recs);
            recs
        });
        match ig {
            Ok(ig) => {
                check(3, &mut || c3(&ig));
                check(4, &mut || c4(&ig));
            }
            Err(_) => {
                check(3, &mut || (false, "alpha_ig_bins runs failed".into()));
                check(4, &mut || (false, "alpha_ig_bins runs failed".into()));
            }
        }
        check(9, &mut c9);
    }
    results.sort_unstable();
    let failed: Vec<String> = results.iter().filter(|r| !r.1).map(|r| r.0.to_string()).collect();
    println!(
        "acceptance: {}/{} PASS; failing: [{}]",
        results.len() - failed.len(),
        results.len(),
        failed.join(", ")
    );
    // Report-only by default so a workspace test run still reaches the other suites.
    if !failed.is_empty() && std::env::var_os("ALPHARANK_ACCEPT_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
