//! Acceptance criteria, one test each. Every test prints a single
//! `criterion k ... PASS|FAIL` line before asserting.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use skotrim_core::grafts::{verify_main1, Main1Status};
use skotrim_core::stochastic::{
    pn_statistics, sample_walk, stream_rng, verify_teo1, PnConfig, RandomWalkConfig, Teo1Config, WalkMode,
};
use skotrim_core::{
    event_times_direct, h_cut, local_time_compensator, local_time_window_estimate, reflect_one_sided_high,
    reflect_one_sided_low, reflect_two_sided, Boundary, PlPath, PlaneTree,
};

const TOL: f64 = 1e-9;

fn report(k: u32, name: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) -> bool {
    let ok = pass && elapsed < limit;
    println!(
        "criterion {k} {name}: {} ({detail}; {:.2}s, limit {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn w_path() -> PlPath {
    PlPath::new([(0.0, 0.0), (1.0, 3.0), (2.0, 1.0), (3.0, 4.0), (4.0, 0.0)]).unwrap()
}

/// Largest distance between two breakpoint lists of equal length.
fn points_gap(p: &PlPath, expected: &[(f64, f64)]) -> f64 {
    let got: Vec<_> = p.canonical().points().collect();
    if got.len() != expected.len() {
        return f64::INFINITY;
    }
    got.iter()
        .zip(expected)
        .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
        .fold(0.0, f64::max)
}

fn vec_gap(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_1_worked_example() {
    let start = Instant::now();
    let f = w_path();
    let h = 2.0;
    let d = h_cut(&f, h).unwrap();
    let lambda = [
        (0.0, 0.0),
        (2.0 / 3.0, 2.0),
        (1.0, 2.0),
        (2.0, 0.0),
        (8.0 / 3.0, 2.0),
        (3.0, 2.0),
        (3.5, 0.0),
        (4.0, 0.0),
    ];
    let cut = [
        (0.0, 0.0),
        (2.0 / 3.0, 0.0),
        (1.0, 1.0),
        (8.0 / 3.0, 1.0),
        (3.0, 2.0),
        (3.5, 2.0),
        (4.0, 0.0),
    ];
    let trimmed = PlaneTree::from_contour(&skotrim_core::Excursion::new(f).unwrap())
        .trim(h)
        .map_or(0.0, |t| t.total_branch_length());
    let gaps = [
        points_gap(&d.reflection.lambda, &lambda),
        points_gap(&d.cut, &cut),
        vec_gap(&d.t, &[2.0, 3.5]),
        vec_gap(&d.s, &[0.0, 2.0]),
        vec_gap(&d.x, &[1.0, 1.0]),
        vec_gap(&d.y, &[0.0, 0.0]),
        (d.n() as f64 - 2.0).abs(),
        (trimmed - 2.0).abs(),
    ];
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let ok = report(
        1,
        "worked_example",
        worst <= 1e-12,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("max deviation {worst:.2e}"),
    );
    assert!(ok, "deviations {gaps:?}");
}

#[test]
fn criterion_2_main1_suite() {
    let start = Instant::now();
    let corpus = common::lattice_corpus(1000, 2024);
    let hs = [0.5, 1.0, 2.0];
    let results: Vec<(Main1Status, f64)> = corpus
        .par_iter()
        .flat_map_iter(|e| hs.iter().map(move |&h| (verify_main1(e, h, TOL).unwrap().status, h)))
        .collect();
    let empty = results.iter().filter(|r| r.0 == Main1Status::Empty).count();
    let bad = results.iter().filter(|r| r.0 == Main1Status::Mismatch).count();
    let ok = report(
        2,
        "main1_suite",
        bad == 0,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{} cases, {} non-empty, {bad} mismatches", results.len(), results.len() - empty),
    );
    assert!(ok);
}

/// `f - r` for a random displacement `r` with `r(0) = 0` and values in a
/// band `[m, m + h]` containing 0, so that `osc(f - g) <= h`.
fn feasible_candidate<R: Rng>(f: &PlPath, lambda: &PlPath, h: f64, rng: &mut R) -> PlPath {
    let mut times = f.merged_times(lambda);
    let extra: Vec<f64> = (0..times.len() / 4).map(|_| rng.random_range(0.0..f.end_time())).collect();
    times.extend(extra);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let kind = rng.random_range(0..4);
    let m = if kind == 0 { 0.0 } else { -rng.random_range(0.0..=h) };
    let scale = h * [0.02, 0.2, 1.0][rng.random_range(0..3)];
    let r: Vec<f64> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i == 0 {
                return 0.0;
            }
            let v = match kind {
                0 | 1 => lambda.evaluate(t).unwrap() + if kind == 1 { m } else { 0.0 },
                2 => m + rng.random_range(0.0..=h),
                _ => f.evaluate(t).unwrap(),
            };
            let noise = if rng.random_bool(0.5) { rng.random_range(-scale..=scale) } else { 0.0 };
            (v + noise).clamp(m, m + h)
        })
        .collect();
    let g = times.iter().zip(&r).map(|(&t, &rv)| f.evaluate(t).unwrap() - rv);
    PlPath::from_vecs(times.clone(), g.collect()).unwrap()
}

#[test]
fn criterion_3_variational_property() {
    let start = Instant::now();
    let corpus = common::lattice_corpus(1000, 2024);
    let hs = [0.5, 1.0, 2.0];
    let (osc_bad, tv_bad, candidates) = corpus
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let f = e.path();
            let end = f.end_time();
            let mut rng = stream_rng(77, i as u64);
            let (mut osc_bad, mut tv_bad, mut count) = (0usize, 0usize, 0usize);
            for &h in &hs {
                let d = h_cut(f, h).unwrap();
                if f.sub(&d.cut).oscillation(0.0, end).unwrap() > h + TOL {
                    osc_bad += 1;
                }
                let best = d.cut.total_variation(0.0, end).unwrap();
                for _ in 0..100 {
                    let g = feasible_candidate(f, &d.reflection.lambda, h, &mut rng);
                    debug_assert!(f.sub(&g).oscillation(0.0, end).unwrap() <= h + TOL);
                    if g.total_variation(0.0, end).unwrap() < best - TOL {
                        tv_bad += 1;
                    }
                    count += 1;
                }
            }
            (osc_bad, tv_bad, count)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let ok = report(
        3,
        "variational_property",
        osc_bad == 0 && tv_bad == 0,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{osc_bad} oscillation and {tv_bad} variation violations over {candidates} candidates"),
    );
    assert!(ok);
}

#[derive(Default, Debug)]
struct LemmaFailures {
    restart: usize,
    one_sided: usize,
    events: usize,
    monotone: usize,
    invariance: usize,
    branch_length: usize,
}

#[test]
fn criterion_4_deterministic_lemmas() {
    let start = Instant::now();
    let paths = common::random_paths(600, 99);
    let mut fails = LemmaFailures::default();
    for (i, f) in paths.iter().enumerate() {
        let mut rng = stream_rng(5, i as u64);
        let h = rng.random_range(0.25..3.0);
        let end = f.end_time();

        let lam = reflect_two_sided(f, h).unwrap().lambda;
        let t = rng.random_range(0.0..end);
        let again = reflect_two_sided(&f.restart(t).unwrap().map_values(|v| v + lam.evaluate(t).unwrap()), h)
            .unwrap()
            .lambda;
        if common::max_diff_on(&lam, &again, t, end + 1.0) > TOL {
            fails.restart += 1;
        }

        let high = reflect_one_sided_high(f, h).unwrap();
        let low = reflect_one_sided_low(f);
        let until_high = common::first_exit(&high, |v| v >= 0.0);
        let until_low = common::first_exit(&low, |v| v <= h);
        if common::max_diff_on(&lam, &high, 0.0, until_high) > TOL
            || common::max_diff_on(&lam, &low, 0.0, until_low) > TOL
        {
            fails.one_sided += 1;
        }

        let d = h_cut(f, h).unwrap();
        let direct = event_times_direct(f, h).unwrap();
        let agree = direct.tau.len() == d.n()
            && (0..d.n()).all(|n| {
                (direct.tau[n] - d.t[n]).abs() <= TOL
                    && (direct.theta[n] - d.hit[n]).abs() <= TOL
                    && (direct.sigma[n] - d.s[n]).abs() <= TOL
            });
        if !agree {
            fails.events += 1;
        }
        let mut prev = 0.0;
        for n in 0..d.n() {
            if !common::is_monotone(&d.cut, prev, d.s[n], -1.0) || !common::is_monotone(&d.cut, d.s[n], d.t[n], 1.0) {
                fails.monotone += 1;
                break;
            }
            prev = d.t[n];
        }

        let ch = reflect_two_sided(f, h).unwrap().ch;
        let ch_low = reflect_two_sided(&low, h).unwrap().ch;
        if ch.max_abs_diff(&ch_low) > TOL {
            fails.invariance += 1;
        }
    }

    let corpus = common::lattice_corpus(600, 31);
    for (i, e) in corpus.iter().enumerate() {
        let h = [0.5, 1.0, 2.0][i % 3];
        let local_time = local_time_compensator(e.path(), h, Boundary::High).unwrap().end_value();
        let length = PlaneTree::from_contour(e).trim(h).map_or(0.0, |t| t.total_branch_length());
        if (length - local_time).abs() > TOL {
            fails.branch_length += 1;
        }
    }

    let total = fails.restart + fails.one_sided + fails.events + fails.monotone + fails.invariance + fails.branch_length;
    let ok = report(
        4,
        "deterministic_lemmas",
        total == 0,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{} paths, {} excursions, failures {fails:?}", paths.len(), corpus.len()),
    );
    assert!(ok);
}

#[test]
fn criterion_5_pn_statistics() {
    let start = Instant::now();
    let cfg = PnConfig::new(1.0, 10_000, 10_000, 5);
    let r = pn_statistics(&cfg).unwrap();
    for c in &r.checks {
        println!(
            "  {:<32} statistic {:>12.6} expected {:>10.6} tolerance {:>10.3e} {}{}",
            c.test,
            c.statistic,
            c.expected,
            c.tolerance,
            if c.pass { "ok" } else { "FAILED" },
            c.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
        );
    }
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.test.as_str()).collect();
    let ok = report(
        5,
        "pn_statistics",
        r.summary.pass,
        start.elapsed(),
        Duration::from_secs(300),
        &format!("x mean {:.4}, mean N {:.4}, failed checks {failed:?}", r.x_mean, r.n_mean),
    );
    assert!(ok);
}

#[test]
fn criterion_6_teo1() {
    let start = Instant::now();
    let det_bad = (0..500)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = stream_rng(606, i as u64);
            let n = rng.random_range(200..2000);
            let w = sample_walk(&RandomWalkConfig::new(n, 606, WalkMode::FreeWalk), &mut rng).unwrap();
            let cfg = Teo1Config {
                t: rng.random_range(0.05..=1.0),
                theta: 1.0,
                h: [0.25, 0.5, 1.0][i % 3],
                replicates: 1,
                seed: i as u64,
            };
            let r = verify_teo1(&w, &cfg).unwrap();
            !r.checks[..2].iter().all(|c| c.pass)
        })
        .count();

    let mut passes = 0;
    let mut trivial = 0;
    for i in 0..20u64 {
        let mut rng = stream_rng(616, i);
        let w = sample_walk(&RandomWalkConfig::new(10_000, 616, WalkMode::FreeWalk), &mut rng).unwrap();
        let cfg = Teo1Config {
            t: 1.0,
            theta: 1.0,
            h: 1.0,
            replicates: 10_000,
            seed: 1000 + i,
        };
        let r = verify_teo1(&w, &cfg).unwrap();
        let mc = &r.checks[2];
        if mc.pass {
            passes += 1;
        }
        if r.trivial {
            trivial += 1;
        }
    }
    let ok = report(
        6,
        "teo1",
        det_bad == 0 && passes >= 19,
        start.elapsed(),
        Duration::from_secs(300),
        &format!("deterministic failures {det_bad}/500, stochastic passes {passes}/20 ({trivial} trivial)"),
    );
    assert!(ok);
}

#[test]
fn criterion_7_local_time_window() {
    let start = Instant::now();
    let h = 0.5;
    let eps = [0.2, 0.1, 0.05];
    let errors: Vec<[f64; 3]> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(707, i);
            let w = sample_walk(&RandomWalkConfig::new(100_000, 707, WalkMode::FreeWalk), &mut rng).unwrap();
            let exact = local_time_compensator(&w, h, Boundary::High).unwrap().evaluate(1.0).unwrap();
            eps.map(|e| (local_time_window_estimate(&w, h, Boundary::High, 1.0, e).unwrap() - exact).abs())
        })
        .collect();
    let medians: Vec<f64> = (0..3)
        .map(|k| {
            let mut col: Vec<f64> = errors.iter().map(|e| e[k]).collect();
            col.sort_by(f64::total_cmp);
            0.5 * (col[49] + col[50])
        })
        .collect();
    let ok = report(
        7,
        "local_time_window",
        medians[0] > medians[1] && medians[1] > medians[2],
        start.elapsed(),
        Duration::from_secs(60),
        &format!("median errors {medians:.4?} at eps {eps:?}"),
    );
    assert!(ok);
}
