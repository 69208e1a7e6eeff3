//! Random-walk carriers for the probabilistic statements: conditioned
//! excursions, the excursion/walk coupling, binary reference trees,
//! exponential and N-law statistics, and Poisson-marked trees with their
//! sticky paths.
//!
//! Every replicate draws from its own ChaCha stream (`seed`, `stream`), so
//! results do not depend on thread count or scheduling.

mod binary;
mod ks;
mod marking;
mod pn;
mod walks;

pub use binary::{binary_tree_stopping_index, sample_binary_tree, stopping_index_pmf, BinaryTreeSample};
pub use ks::{kolmogorov_survival, ks_exponential, ks_two_sample, KsResult};
pub use marking::{build_marked_sample, max_sticky_over_marks, truncated_excursion, verify_teo1, Mark, MarkedTreeSample, Teo1Config, Teo1Report};
pub use pn::{pn_statistics, ExcursionLaw, NBin, PnConfig, PnReport};
pub use walks::{
    couple_and_extend, lattice_positive_excursion, sample_excursion_conditioned, sample_excursion_measure, sample_walk,
    RandomWalkConfig, Scaling, WalkMode,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// The RNG for replicate `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One line of a verification report.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub test: String,
    pub statistic: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes when `|statistic - expected| <= tolerance`.
    pub fn within(test: &str, statistic: f64, expected: f64, tolerance: f64) -> Check {
        Check {
            test: test.into(),
            statistic,
            expected,
            tolerance,
            pass: (statistic - expected).abs() <= tolerance,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }
}

/// Headline summary of a list of checks: `statistic` is the number of
/// failed checks, expected 0.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Summary {
    pub test: String,
    pub statistic: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Summary {
    pub fn of(test: &str, checks: &[Check]) -> Summary {
        let failed = checks.iter().filter(|c| !c.pass).count();
        Summary {
            test: test.into(),
            statistic: failed as f64,
            expected: 0.0,
            tolerance: 0.0,
            pass: failed == 0,
        }
    }
}

pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}
