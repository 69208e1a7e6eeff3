//! Checks against independent oracles: a fine-grid clamp recursion for the
//! reflection, quadrature for occupation windows, lattice path counting for
//! excursion heights, and law-level comparisons for the samplers.

mod common;

use rayon::prelude::*;
use skotrim_core::stochastic::{
    couple_and_extend, ks_two_sample, sample_excursion_conditioned, sample_walk, stream_rng, RandomWalkConfig,
    WalkMode,
};
use skotrim_core::{h_cut, local_time_window_estimate, reflect_two_sided, Boundary, PlPath};

const TOL: f64 = 1e-9;

fn w_path() -> PlPath {
    PlPath::new([(0.0, 0.0), (1.0, 3.0), (2.0, 1.0), (3.0, 4.0), (4.0, 0.0)]).unwrap()
}

/// Uniform grid of `per_unit` points per unit time merged with the
/// breakpoints of `f`; `f` is monotone between consecutive grid points.
fn grid(f: &PlPath, per_unit: usize) -> Vec<f64> {
    let end = f.end_time();
    let m = (end * per_unit as f64).ceil() as usize;
    let mut ts: Vec<f64> = (0..=m).map(|k| end * k as f64 / m as f64).collect();
    ts.extend_from_slice(f.times());
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// `x_{k+1} = clamp(x_k + Δf, 0, h)`, exact at the grid points when `f`
/// is monotone between them.
fn clamp_recursion(f: &PlPath, h: f64, ts: &[f64]) -> Vec<f64> {
    let mut x = f.evaluate(0.0).unwrap().clamp(0.0, h);
    let mut out = vec![x];
    for w in ts.windows(2) {
        x = (x + f.evaluate(w[1]).unwrap() - f.evaluate(w[0]).unwrap()).clamp(0.0, h);
        out.push(x);
    }
    out
}

#[test]
fn reflection_matches_clamp_recursion_on_worked_example() {
    let f = w_path();
    let ts = grid(&f, 3000);
    let oracle = clamp_recursion(&f, 2.0, &ts);
    let r = reflect_two_sided(&f, 2.0).unwrap();
    let d = h_cut(&f, 2.0).unwrap();
    for (&t, &x) in ts.iter().zip(&oracle) {
        assert!((r.lambda.evaluate(t).unwrap() - x).abs() <= 1e-12, "lambda at {t}");
        let cut = f.evaluate(t).unwrap() - x;
        assert!((d.cut.evaluate(t).unwrap() - cut).abs() <= 1e-12, "cut at {t}");
    }
}

#[test]
fn reflection_matches_clamp_recursion_on_random_paths() {
    for (i, f) in common::random_paths(200, 8).iter().enumerate() {
        let h = [0.3, 1.0, 2.5][i % 3];
        let ts = grid(f, 50);
        let oracle = clamp_recursion(f, h, &ts);
        let lambda = reflect_two_sided(f, h).unwrap().lambda;
        for (&t, &x) in ts.iter().zip(&oracle) {
            assert!((lambda.evaluate(t).unwrap() - x).abs() <= TOL, "path {i} at {t}");
        }
    }
}

#[test]
fn window_estimate_on_worked_example() {
    // midpoint quadrature of the band indicator over the clamp oracle
    let f = w_path();
    let (h, eps) = (2.0, 0.1);
    let steps = 400_000;
    let dt = 4.0 / steps as f64;
    let ts: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let lam = clamp_recursion(&f, h, &ts);
    let inside = lam
        .windows(2)
        .filter(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (h - eps..=h).contains(&mid)
        })
        .count();
    let quadrature = inside as f64 * dt / (2.0 * eps);
    let estimate = local_time_window_estimate(&f, h, Boundary::High, 4.0, eps).unwrap();
    assert!((estimate - quadrature).abs() < 1e-4, "{estimate} vs {quadrature}");
    assert!((estimate - 4.041_666_666_666_667).abs() < 1e-12);
}

/// `P(max > x)` for the standard Brownian excursion.
fn excursion_height_tail(x: f64) -> f64 {
    (1..=50)
        .map(|k| {
            let a = 2.0 * (k * k) as f64 * x * x;
            2.0 * (2.0 * a - 1.0) * (-a).exp()
        })
        .sum()
}

/// Fraction of strictly positive `n`-step lattice excursions whose height
/// reaches `level`, by transfer-matrix counting (halved each step to stay
/// in range).
fn lattice_height_tail(n: usize, level: usize) -> f64 {
    let count = |cap: usize| {
        // heights 1..=cap, start and end at 1 after n - 2 steps
        let mut v = vec![0.0f64; cap + 2];
        v[1] = 1.0;
        for _ in 0..n - 2 {
            let mut next = vec![0.0; cap + 2];
            for k in 1..=cap {
                next[k] = 0.5 * (v[k - 1] + v[k + 1]);
            }
            next[0] = 0.0;
            v = next;
        }
        v[1]
    };
    1.0 - count(level - 1) / count(n / 2 + 1)
}

#[test]
fn excursion_height_tail_matches_lattice_count() {
    let n = 10_000;
    let draws = 4000;
    let cfg = RandomWalkConfig::new(n, 3, WalkMode::BridgeExcursion);
    let hits = (0..draws as u64)
        .into_par_iter()
        .filter(|&r| {
            let e = sample_excursion_conditioned(&cfg, 0.0, &mut stream_rng(3, r)).unwrap();
            e.height() >= 1.0 - 1e-12
        })
        .count();
    let empirical = hits as f64 / draws as f64;
    let exact = lattice_height_tail(n, 100);
    let se = (exact * (1.0 - exact) / draws as f64).sqrt();
    assert!((empirical - exact).abs() < 3.5 * se, "{empirical} vs {exact}");
    // the continuum value is about 0.822; the lattice sits within O(n^-1/2)
    assert!((exact - excursion_height_tail(1.0)).abs() < 0.02, "{exact}");
}

#[test]
fn coupling_preserves_graft_data() {
    let n = 2000;
    let cfg = RandomWalkConfig::new(n, 41, WalkMode::BridgeExcursion);
    let ext = RandomWalkConfig::new(n, 41, WalkMode::FreeWalk);
    for r in 0..200u64 {
        let mut rng = stream_rng(41, r);
        let e = sample_excursion_conditioned(&cfg, 0.5, &mut rng).unwrap();
        let w = couple_and_extend(&e, &ext, &mut rng).unwrap();
        assert_eq!(common::max_diff_on(e.path(), &w, 0.0, e.support_end()), 0.0);
        let (a, b) = (h_cut(e.path(), 0.5).unwrap(), h_cut(&w, 0.5).unwrap());
        assert!(b.n() >= a.n());
        for i in 0..a.n() {
            assert!((a.x[i] - b.x[i]).abs() <= TOL && (a.y[i] - b.y[i]).abs() <= TOL);
            assert!((a.t[i] - b.t[i]).abs() <= TOL && (a.s[i] - b.s[i]).abs() <= TOL);
        }
    }
}

#[test]
fn stopping_index_is_read_from_the_extension() {
    let n = 1000;
    let h = 0.5;
    let cfg = RandomWalkConfig::new(n, 42, WalkMode::BridgeExcursion);
    let mut ties = 0;
    for r in 0..300u64 {
        let mut rng = stream_rng(42, r);
        let e = sample_excursion_conditioned(&cfg, h, &mut rng).unwrap();
        let big_n = h_cut(e.path(), h).unwrap().n();
        // extend until the cycle after the last one of e is complete
        let mut len = n;
        let d = loop {
            let ext = RandomWalkConfig::new(len, 42, WalkMode::FreeWalk);
            let d = h_cut(&couple_and_extend(&e, &ext, &mut rng).unwrap(), h).unwrap();
            if d.n() > big_n {
                break d;
            }
            len *= 2;
        };
        let mut sum = 0.0;
        for i in 0..big_n {
            sum += d.x[i] - d.y[i + 1];
            if i + 1 < big_n {
                assert!(sum > -TOL, "partial sum {i} of replicate {r} went negative: {sum}");
            } else {
                assert!(sum <= TOL, "replicate {r}: final partial sum {sum}");
                if sum > -TOL {
                    ties += 1;
                }
            }
        }
    }
    println!("stopping index: {ties} of 300 replicates end on a tie");
}

#[test]
fn reflection_and_sawtooth_share_marginals() {
    // Λ(w)(1) for one batch of walks, λ(w'(1)) for an independent batch
    let (n, h) = (2500, 0.5);
    let cfg = RandomWalkConfig::new(n, 9, WalkMode::FreeWalk);
    let skorokhod: Vec<f64> = (0..1000u64)
        .into_par_iter()
        .map(|r| {
            let w = sample_walk(&cfg, &mut stream_rng(9, r)).unwrap();
            reflect_two_sided(&w, h).unwrap().lambda.evaluate(1.0).unwrap()
        })
        .collect();
    let zigzag: Vec<f64> = (0..1000u64)
        .into_par_iter()
        .map(|r| {
            let w = sample_walk(&cfg, &mut stream_rng(10, r)).unwrap();
            w.sawtooth_reflect(h).unwrap().evaluate(1.0).unwrap()
        })
        .collect();
    let ks = ks_two_sample(&skorokhod, &zigzag);
    assert!(ks.p_value > 0.01, "{ks:?}");
}
