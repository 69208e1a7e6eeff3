use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::path::{Excursion, PlPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkMode {
    BridgeExcursion,
    FreeWalk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// Time step `1/n`, space step `1/√n`.
    Donsker,
    /// Unit steps in time and space.
    Lattice,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkConfig {
    pub steps: usize,
    pub seed: u64,
    pub mode: WalkMode,
    pub scaling: Scaling,
    /// Cap on rejection-sampling attempts.
    pub max_attempts: usize,
}

impl RandomWalkConfig {
    pub const DEFAULT_ATTEMPTS: usize = 10_000;

    pub fn new(steps: usize, seed: u64, mode: WalkMode) -> Self {
        RandomWalkConfig {
            steps,
            seed,
            mode,
            scaling: Scaling::Donsker,
            max_attempts: Self::DEFAULT_ATTEMPTS,
        }
    }

    pub fn lattice(mut self) -> Self {
        self.scaling = Scaling::Lattice;
        self
    }

    pub fn time_step(&self) -> f64 {
        match self.scaling {
            Scaling::Donsker => 1.0 / self.steps as f64,
            Scaling::Lattice => 1.0,
        }
    }

    pub fn space_step(&self) -> f64 {
        match self.scaling {
            Scaling::Donsker => 1.0 / (self.steps as f64).sqrt(),
            Scaling::Lattice => 1.0,
        }
    }

    fn check(&self) -> Result<()> {
        if self.steps == 0 {
            return domain("number of steps must be at least 1");
        }
        Ok(())
    }

    /// Lattice level a walk must reach to have height at least `h`.
    fn level_for(&self, h: f64) -> i64 {
        ((h / self.space_step()) - 1e-9).ceil().max(0.0) as i64
    }

    /// The scaled linear interpolation of integer heights.
    pub fn path_from_heights(&self, heights: &[i64]) -> PlPath {
        let (dt, dx) = (self.time_step(), self.space_step());
        let times = (0..heights.len()).map(|k| k as f64 * dt).collect();
        let values = heights.iter().map(|&v| v as f64 * dx).collect();
        PlPath::from_vecs(times, values).expect("lattice times are increasing").canonical()
    }

    /// One draw according to `mode`: an unconditioned positive excursion
    /// or a free walk.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PlPath> {
        match self.mode {
            WalkMode::BridgeExcursion => Ok(sample_excursion_conditioned(self, 0.0, rng)?.into_path()),
            WalkMode::FreeWalk => sample_walk(self, rng),
        }
    }
}

fn free_heights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<i64> {
    let mut heights = Vec::with_capacity(n + 1);
    heights.push(0);
    let mut x = 0i64;
    let mut bits = 0u64;
    for k in 0..n {
        if k % 64 == 0 {
            bits = rng.random();
        }
        x += if bits & 1 == 1 { 1 } else { -1 };
        bits >>= 1;
        heights.push(x);
    }
    heights
}

/// A simple random walk with `cfg.steps` steps, started at 0.
pub fn sample_walk<R: Rng + ?Sized>(cfg: &RandomWalkConfig, rng: &mut R) -> Result<PlPath> {
    cfg.check()?;
    Ok(cfg.path_from_heights(&free_heights(rng, cfg.steps)))
}

/// Integer heights of a uniform strictly positive excursion with `n`
/// steps: an up-step, a uniform Dyck path of length `n - 2` lifted by one,
/// and a down-step. The Dyck path is the cycle-lemma rotation of a
/// shuffled sequence of `m` ups and `m + 1` downs.
pub fn lattice_positive_excursion<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Vec<i64>> {
    if n < 2 || !n.is_multiple_of(2) {
        return domain(format!("positive excursions need an even number of steps >= 2, got {n}"));
    }
    let m = (n - 2) / 2;
    let mut steps: Vec<i64> = std::iter::repeat_n(1, m).chain(std::iter::repeat_n(-1, m + 1)).collect();
    steps.shuffle(rng);
    let (mut sum, mut low, mut start) = (0i64, 0i64, 0usize);
    for (k, &s) in steps.iter().enumerate() {
        sum += s;
        if sum < low {
            low = sum;
            start = k + 1;
        }
    }
    let len = steps.len();
    let mut heights = Vec::with_capacity(n + 1);
    heights.push(0);
    heights.push(1);
    let mut x = 1i64;
    for j in 0..len - 1 {
        x += steps[(start + j) % len];
        heights.push(x);
    }
    heights.push(0);
    debug_assert_eq!(x, 1);
    Ok(heights)
}

/// A positive excursion of `cfg.steps` steps, resampled until its height
/// is at least `h`.
pub fn sample_excursion_conditioned<R: Rng + ?Sized>(cfg: &RandomWalkConfig, h: f64, rng: &mut R) -> Result<Excursion> {
    cfg.check()?;
    if !(h >= 0.0) || !h.is_finite() {
        return domain(format!("height threshold must be non-negative, got {h}"));
    }
    let need = cfg.level_for(h);
    if need > (cfg.steps / 2) as i64 {
        return domain(format!(
            "an excursion of {} steps cannot reach height {h}",
            cfg.steps
        ));
    }
    for _ in 0..cfg.max_attempts {
        let heights = lattice_positive_excursion(rng, cfg.steps)?;
        if heights.iter().copied().max().unwrap_or(0) >= need {
            return Excursion::new(cfg.path_from_heights(&heights));
        }
    }
    Err(Error::Budget {
        attempts: cfg.max_attempts,
        msg: format!("no excursion of {} steps reached height {h}", cfg.steps),
    })
}

/// An excursion of random length drawn from the excursion measure of the
/// simple walk conditioned to reach height `h`: a walk from 1 conditioned
/// to hit the level before 0 (up-probability `(x+1)/2x`), then a free walk
/// from the level back to 0. `cfg.steps` only sets the scaling. Draws
/// longer than `max_len` steps are rejected, which slightly thins the
/// tail of the length distribution.
pub fn sample_excursion_measure<R: Rng + ?Sized>(
    cfg: &RandomWalkConfig,
    h: f64,
    max_len: usize,
    rng: &mut R,
) -> Result<Excursion> {
    cfg.check()?;
    if !(h > 0.0) || !h.is_finite() {
        return domain(format!("height threshold must be positive, got {h}"));
    }
    let top = cfg.level_for(h).max(1);
    for _ in 0..cfg.max_attempts {
        let mut heights = vec![0i64, 1];
        let mut x = 1i64;
        while x < top {
            let up = (x + 1) as f64 / (2 * x) as f64;
            x += if rng.random_bool(up) { 1 } else { -1 };
            heights.push(x);
        }
        let mut bits = 0u64;
        let mut k = 0usize;
        while x > 0 && heights.len() <= max_len {
            if k.is_multiple_of(64) {
                bits = rng.random();
            }
            k += 1;
            x += if bits & 1 == 1 { 1 } else { -1 };
            bits >>= 1;
            heights.push(x);
        }
        if x == 0 {
            return Excursion::new(cfg.path_from_heights(&heights));
        }
    }
    Err(Error::Budget {
        attempts: cfg.max_attempts,
        msg: format!("every excursion exceeded {max_len} steps"),
    })
}

/// Pastes a fresh walk of `cfg.steps` steps after the end of `e`'s support.
pub fn couple_and_extend<R: Rng + ?Sized>(e: &Excursion, cfg: &RandomWalkConfig, rng: &mut R) -> Result<PlPath> {
    let w = sample_walk(cfg, rng)?;
    e.paste(&w)
}
