#![allow(dead_code)]

use rand::Rng;
use skotrim_core::stochastic::{lattice_positive_excursion, stream_rng};
use skotrim_core::{Excursion, PlPath};

/// Random lattice excursions with at most 400 breakpoints: strictly
/// positive excursions, Dyck paths touching 0 in between, and positive
/// excursions rescaled by `1/√n` (so values are not exactly representable).
pub fn lattice_corpus(count: usize, seed: u64) -> Vec<Excursion> {
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let steps = 2 * rng.random_range(1..=199usize);
            let heights = lattice_positive_excursion(&mut rng, steps).unwrap();
            let (heights, scale) = match i % 3 {
                0 => (heights, 1.0),
                1 => {
                    let inner = heights[1..heights.len() - 1].iter().map(|v| v - 1).collect();
                    (inner, 1.0)
                }
                _ => (heights, 4.0 / (steps as f64).sqrt()),
            };
            let pts = heights.iter().enumerate().map(|(k, &v)| (k as f64, v as f64 * scale));
            Excursion::new(PlPath::new(pts).unwrap()).unwrap()
        })
        .collect()
}

/// Random piecewise-linear paths started at 0, with irregular times and
/// both signs.
pub fn random_paths(count: usize, seed: u64) -> Vec<PlPath> {
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let len = rng.random_range(2..60usize);
            let mut t = 0.0;
            let mut pts = vec![(0.0, 0.0)];
            for _ in 1..len {
                t += rng.random_range(0.05..1.5);
                let v = if rng.random_bool(0.3) {
                    rng.random_range(-4..=4) as f64
                } else {
                    rng.random_range(-4.0..4.0)
                };
                pts.push((t, v));
            }
            PlPath::new(pts).unwrap()
        })
        .collect()
}

/// Largest `|a - b|` over merged breakpoints lying in `[from, to]`.
pub fn max_diff_on(a: &PlPath, b: &PlPath, from: f64, to: f64) -> f64 {
    let mut times = a.merged_times(b);
    times.push(from);
    times.push(to);
    times
        .into_iter()
        .filter(|&t| t >= from && t <= to)
        .map(|t| (a.evaluate(t).unwrap() - b.evaluate(t).unwrap()).abs())
        .fold(0.0, f64::max)
}

/// Supremum of the times up to which `p` satisfies `ok`, solving for the
/// exit point on the first offending segment.
pub fn first_exit(p: &PlPath, ok: impl Fn(f64) -> bool) -> f64 {
    let (ts, vs) = (p.times(), p.values());
    for i in 1..p.len() {
        if !ok(vs[i]) {
            // bisection on the offending segment
            let (mut a, mut b) = (ts[i - 1], ts[i]);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if ok(p.evaluate(m).unwrap()) {
                    a = m;
                } else {
                    b = m;
                }
            }
            return a;
        }
    }
    p.end_time() + 1.0
}

/// Whether `p` moves only in direction `sign` on `[a, b]`.
pub fn is_monotone(p: &PlPath, a: f64, b: f64, sign: f64) -> bool {
    let mut pts: Vec<f64> = p.times().iter().copied().filter(|&t| t > a && t < b).collect();
    pts.insert(0, a);
    pts.push(b);
    pts.windows(2)
        .all(|w| sign * (p.evaluate(w[1]).unwrap() - p.evaluate(w[0]).unwrap()) >= -1e-9)
}
