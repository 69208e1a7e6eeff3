//! Rebuilding the trimmed tree from graft data `(X_n, Y_n)`, and the
//! three-way check that trimming, cutting and grafting give the same tree.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::Excursion;
use crate::realtree::{profiles_equal, PlaneTree, EDGE_EPS};
use crate::skorokhod::h_cut;

/// Slack allowed when a graft distance exceeds the height of the leaf it
/// is measured from.
pub const GRAFT_TOL: f64 = 1e-9;

/// Branch lengths `X_n` and graft distances `Y_n`, `n = 1..=N`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GraftSequence {
    pairs: Vec<(f64, f64)>,
}

impl GraftSequence {
    /// Validates `Y_1 = 0`, `X_n ≥ 0`, `Y_n ≥ 0` and that each graft point
    /// lies on the ancestral line of the previous leaf. Indices in errors
    /// are 1-based.
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |index: usize, msg: String| Err(Error::Graft { index, msg });
        if pairs.is_empty() {
            return bad(0, "graft sequence is empty".into());
        }
        let mut leaf = 0.0;
        for (i, &(x, y)) in pairs.iter().enumerate() {
            let n = i + 1;
            if !(x.is_finite() && x >= 0.0) {
                return bad(n, format!("branch length X must be finite and non-negative, got {x}"));
            }
            if !(y.is_finite() && y >= 0.0) {
                return bad(n, format!("graft distance Y must be finite and non-negative, got {y}"));
            }
            if n == 1 && y != 0.0 {
                return bad(n, format!("first graft distance must be 0, got {y}"));
            }
            if y > leaf + GRAFT_TOL {
                return bad(n, format!("graft distance {y} exceeds the height {leaf} of the previous leaf"));
            }
            leaf = (leaf - y).max(0.0) + x;
        }
        Ok(GraftSequence { pairs })
    }

    pub fn from_xy(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Graft {
                index: x.len().min(y.len()) + 1,
                msg: format!("X has {} entries but Y has {}", x.len(), y.len()),
            });
        }
        GraftSequence::new(x.iter().copied().zip(y.iter().copied()).collect())
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn x(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn y(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.pairs.iter().map(|p| p.0).sum()
    }

    /// `Σ_{i≤n} (X_i - Y_{i+1})` for `n = 1..N-1`: the heights of the
    /// successive graft points.
    pub fn graft_heights(&self) -> Vec<f64> {
        let mut acc = 0.0;
        (1..self.pairs.len())
            .map(|n| {
                acc += self.pairs[n - 1].0 - self.pairs[n].1;
                acc
            })
            .collect()
    }
}

/// Starts from a root branch of length `X_1`; each later branch `X_n` is
/// grafted `Y_n` below the previous leaf, as the rightmost child of the
/// graft point.
pub fn build_from_grafts(g: &GraftSequence) -> PlaneTree {
    let mut tree = PlaneTree::single_point();
    let mut leaf = tree.root();
    for (i, &(x, y)) in g.pairs().iter().enumerate() {
        let mut at = leaf;
        if i > 0 {
            let mut rest = y;
            while rest > EDGE_EPS && at != tree.root() {
                let e = tree.edge(at);
                if rest < e - EDGE_EPS {
                    at = tree.split_edge(at, rest);
                    break;
                }
                rest -= e;
                at = tree.parent(at).unwrap();
            }
        }
        leaf = tree.add_child(at, x);
    }
    tree.canonical()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Main1Status {
    /// All three trees agree.
    Ok,
    /// The trimming is empty (`sup f < h`).
    Empty,
    Mismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairwiseAgreement {
    pub trim_vs_cut: bool,
    pub trim_vs_grafts: bool,
    pub cut_vs_grafts: bool,
}

/// Outcome of comparing `trim(tree(f), h)`, `tree(f_h)` and the grafted
/// tree. `branch_lengths` lists their total lengths in that order.
#[derive(Clone, Debug, Serialize)]
pub struct Main1Report {
    pub status: Main1Status,
    pub h: f64,
    pub branch_lengths: [f64; 3],
    pub profiles_equal: bool,
    pub pairwise: PairwiseAgreement,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "X")]
    pub x: Vec<f64>,
    #[serde(rename = "Y")]
    pub y: Vec<f64>,
}

impl Main1Report {
    pub fn passed(&self) -> bool {
        self.status != Main1Status::Mismatch
    }
}

pub fn verify_main1(f: &Excursion, h: f64, tol: f64) -> Result<Main1Report> {
    let cut = h_cut(f.path(), h)?;
    let full = PlaneTree::from_contour(f);
    let Some(trimmed) = full.trim(h) else {
        return Ok(Main1Report {
            status: Main1Status::Empty,
            h,
            branch_lengths: [0.0; 3],
            profiles_equal: true,
            pairwise: PairwiseAgreement {
                trim_vs_cut: true,
                trim_vs_grafts: true,
                cut_vs_grafts: true,
            },
            n: cut.n(),
            x: cut.x,
            y: cut.y,
        });
    };
    let from_cut = PlaneTree::from_contour(&Excursion::new(cut.cut.clone())?);
    let grafted = build_from_grafts(&GraftSequence::from_xy(&cut.x, &cut.y)?);

    let profiles = [trimmed.leaf_profile(), from_cut.leaf_profile(), grafted.leaf_profile()];
    let pairwise = PairwiseAgreement {
        trim_vs_cut: profiles_equal(&profiles[0], &profiles[1], tol),
        trim_vs_grafts: profiles_equal(&profiles[0], &profiles[2], tol),
        cut_vs_grafts: profiles_equal(&profiles[1], &profiles[2], tol),
    };
    let branch_lengths = [
        trimmed.total_branch_length(),
        from_cut.total_branch_length(),
        grafted.total_branch_length(),
    ];
    let profiles_ok = pairwise.trim_vs_cut && pairwise.trim_vs_grafts && pairwise.cut_vs_grafts;
    let lengths_ok = branch_lengths.iter().all(|&b| (b - branch_lengths[0]).abs() <= tol);
    Ok(Main1Report {
        status: if profiles_ok && lengths_ok {
            Main1Status::Ok
        } else {
            Main1Status::Mismatch
        },
        h,
        branch_lengths,
        profiles_equal: profiles_ok,
        pairwise,
        n: cut.n(),
        x: cut.x,
        y: cut.y,
    })
}
