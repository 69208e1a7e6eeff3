use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{domain, Result};
use crate::grafts::{build_from_grafts, GraftSequence};
use crate::realtree::PlaneTree;

#[derive(Clone, Debug)]
pub struct BinaryTreeSample {
    pub tree: PlaneTree,
    pub grafts: GraftSequence,
    /// Set when the stopping index exceeded the cap; the tree then holds
    /// only the first `cap` branches.
    pub truncated: bool,
}

fn exp_law(alpha: f64) -> Result<Exp<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("mean branch length must be positive, got {alpha}"));
    }
    Ok(Exp::new(1.0 / alpha).expect("positive rate"))
}

/// Draws i.i.d. exponential `X̃_1, Ỹ_2, X̃_2, …` of mean `alpha`, stops at
/// the first `n` with `Σ_{i≤n} (X̃_i - Ỹ_{i+1}) < 0` and grafts the first
/// `n` branches.
pub fn sample_binary_tree<R: Rng + ?Sized>(alpha: f64, cap: usize, rng: &mut R) -> Result<BinaryTreeSample> {
    let law = exp_law(alpha)?;
    let mut pairs = vec![(law.sample(rng), 0.0)];
    let mut sum = pairs[0].0;
    let mut truncated = false;
    loop {
        let y = law.sample(rng);
        sum -= y;
        if sum < 0.0 {
            break;
        }
        if pairs.len() >= cap {
            truncated = true;
            break;
        }
        let x = law.sample(rng);
        sum += x;
        pairs.push((x, y));
    }
    let grafts = GraftSequence::new(pairs)?;
    Ok(BinaryTreeSample {
        tree: build_from_grafts(&grafts),
        grafts,
        truncated,
    })
}

/// The stopping index alone, without building the tree. Returns
/// `(index, truncated)`.
pub fn binary_tree_stopping_index<R: Rng + ?Sized>(alpha: f64, cap: usize, rng: &mut R) -> Result<(usize, bool)> {
    let law = exp_law(alpha)?;
    let mut sum = law.sample(rng);
    for n in 1..=cap {
        sum -= law.sample(rng);
        if sum < 0.0 {
            return Ok((n, false));
        }
        sum += law.sample(rng);
    }
    Ok((cap, true))
}

/// `P(Ñ = n)` for `n = 1..=k`: the increments `X̃_i - Ỹ_{i+1}` are
/// symmetric and continuous, so `P(Ñ > n) = C(2n, n) / 4^n`.
pub fn stopping_index_pmf(k: usize) -> Vec<f64> {
    let mut survival = vec![1.0];
    for n in 1..=k {
        let prev = survival[n - 1];
        survival.push(prev * (2 * n - 1) as f64 / (2 * n) as f64);
    }
    (1..=k).map(|n| survival[n - 1] - survival[n]).collect()
}
