//! Real trees coded by excursions, as finite rooted plane trees with edge
//! lengths, plus leaf-height/MRCA profiles for comparing them up to
//! root-preserving isometry.
//!
//! Every traversal is iterative: contour trees of long random walks are
//! deep enough to overflow the stack under recursion.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::path::{Excursion, PlPath, PathBuilder};

/// Edges this short are contracted when a tree is put in canonical form.
pub const EDGE_EPS: f64 = 1e-12;

/// Slack in `trim`'s "reaches height h" test.
const TRIM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
struct Node {
    parent: Option<usize>,
    children: Vec<usize>,
    edge: f64,
}

/// A rooted plane tree with edge lengths. Node 0 is the root and has no
/// edge. Children are ordered left to right.
///
/// Trees produced by this crate's public constructors are canonical: every
/// non-root node has zero or at least two children, and every edge is
/// longer than [`EDGE_EPS`].
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneTree {
    nodes: Vec<Node>,
}

impl Default for PlaneTree {
    fn default() -> Self {
        Self::single_point()
    }
}

impl PlaneTree {
    pub fn single_point() -> Self {
        PlaneTree {
            nodes: vec![Node {
                parent: None,
                children: Vec::new(),
                edge: 0.0,
            }],
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Appends a new rightmost child of `parent` with the given edge length.
    pub fn add_child(&mut self, parent: usize, edge: f64) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            parent: Some(parent),
            children: Vec::new(),
            edge,
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Inserts a node on the edge above `child`, `below` units under it.
    pub(crate) fn split_edge(&mut self, child: usize, below: f64) -> usize {
        let parent = self.nodes[child].parent.expect("root has no edge");
        let id = self.nodes.len();
        let upper = self.nodes[child].edge - below;
        self.nodes.push(Node {
            parent: Some(parent),
            children: vec![child],
            edge: upper,
        });
        let slot = self.nodes[parent].children.iter().position(|&c| c == child).unwrap();
        self.nodes[parent].children[slot] = id;
        self.nodes[child].parent = Some(id);
        self.nodes[child].edge = below;
        id
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.nodes[v].parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.nodes[v].children
    }

    /// Length of the edge from `v` to its parent (0 for the root).
    pub fn edge(&self, v: usize) -> f64 {
        self.nodes[v].edge
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.nodes[v].children.is_empty()
    }

    /// Nodes in depth-first order, children visited left to right.
    pub fn preorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(self.nodes[v].children.iter().rev());
        }
        order
    }

    /// Distance of every node from the root.
    pub fn heights(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.nodes.len()];
        for v in self.preorder() {
            if let Some(p) = self.nodes[v].parent {
                h[v] = h[p] + self.nodes[v].edge;
            }
        }
        h
    }

    /// Leaves in depth-first order. A single-point tree has its root as
    /// only leaf.
    pub fn leaves(&self) -> Vec<usize> {
        self.preorder().into_iter().filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn height(&self) -> f64 {
        self.heights().into_iter().fold(0.0, f64::max)
    }

    pub fn total_branch_length(&self) -> f64 {
        self.nodes.iter().map(|n| n.edge).sum()
    }

    /// For each node, the greatest distance from it down to a descendant.
    pub fn max_above(&self) -> Vec<f64> {
        let mut up = vec![0.0_f64; self.nodes.len()];
        for v in self.preorder().into_iter().rev() {
            if let Some(p) = self.nodes[v].parent {
                up[p] = up[p].max(up[v] + self.nodes[v].edge);
            }
        }
        up
    }

    /// Merges chains of single-child nodes into one edge, contracts edges of
    /// length at most [`EDGE_EPS`] and drops zero-length leaves. Node ids
    /// of the result follow depth-first order.
    pub fn canonical(&self) -> PlaneTree {
        // Arena of partial subtrees: (edge above, child entries).
        let mut arena: Vec<(f64, Vec<usize>)> = Vec::with_capacity(self.nodes.len());
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for v in self.preorder().into_iter().rev() {
            let mut list = Vec::with_capacity(self.nodes[v].children.len());
            for &c in &self.nodes[v].children {
                let sub = std::mem::take(&mut lists[c]);
                let edge = self.nodes[c].edge;
                let id = if sub.len() == 1 {
                    arena[sub[0]].0 += edge;
                    sub[0]
                } else {
                    arena.push((edge, sub));
                    arena.len() - 1
                };
                if arena[id].0 <= EDGE_EPS {
                    let e = arena[id].0;
                    for k in std::mem::take(&mut arena[id].1) {
                        arena[k].0 += e;
                        list.push(k);
                    }
                } else {
                    list.push(id);
                }
            }
            lists[v] = list;
        }

        let mut out = PlaneTree::single_point();
        let mut stack: Vec<(usize, usize)> = lists[0].iter().rev().map(|&k| (k, 0)).collect();
        while let Some((k, parent)) = stack.pop() {
            let id = out.add_child(parent, arena[k].0);
            stack.extend(arena[k].1.iter().rev().map(|&c| (c, id)));
        }
        out
    }

    pub fn is_canonical(&self) -> bool {
        self.nodes.iter().enumerate().skip(1).all(|(_, n)| n.edge > EDGE_EPS && n.children.len() != 1)
    }

    /// Plane-tree equality with edge lengths compared within `tol`.
    pub fn approx_eq(&self, other: &PlaneTree, tol: f64) -> bool {
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            let (na, nb) = (&self.nodes[a], &other.nodes[b]);
            if na.children.len() != nb.children.len() || (na.edge - nb.edge).abs() > tol {
                return false;
            }
            stack.extend(na.children.iter().copied().zip(nb.children.iter().copied()));
        }
        true
    }

    /// The unit-speed depth-first contour, an excursion of duration twice
    /// the total branch length.
    pub fn to_contour(&self) -> Excursion {
        let mut out = PathBuilder::with_capacity(0.0, 0.0, 2 * self.nodes.len());
        let (mut t, mut h) = (0.0, 0.0);
        let mut stack = vec![(0usize, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&c) = self.nodes[v].children.get(*next) {
                *next += 1;
                let e = self.nodes[c].edge;
                t += e;
                h += e;
                out.push(t, h);
                stack.push((c, 0));
            } else {
                stack.pop();
                if v != 0 {
                    let e = self.nodes[v].edge;
                    t += e;
                    h = (h - e).max(0.0);
                    out.push(t, if stack.len() == 1 { 0.0 } else { h });
                }
            }
        }
        Excursion::new(out.finish().canonical()).expect("contour of a tree is an excursion")
    }

    /// The tree coded by an excursion.
    pub fn from_contour(e: &Excursion) -> PlaneTree {
        ContourTree::build(e.path()).tree.canonical()
    }

    /// The h-trimming: the set of points with a descendant at distance at
    /// least `h`. `None` when the tree has height below `h`.
    pub fn trim(&self, h: f64) -> Option<PlaneTree> {
        let up = self.max_above();
        if up[0] < h - TRIM_TOL {
            return None;
        }
        let mut out = PlaneTree::single_point();
        let mut map = vec![usize::MAX; self.nodes.len()];
        map[0] = 0;
        for v in self.preorder().into_iter().skip(1) {
            let p = self.nodes[v].parent.unwrap();
            if map[p] == usize::MAX {
                continue;
            }
            let edge = self.nodes[v].edge;
            if up[v] >= h - TRIM_TOL {
                map[v] = out.add_child(map[p], edge);
            } else if up[v] + edge >= h - TRIM_TOL {
                out.add_child(map[p], (edge + up[v] - h).max(0.0));
            }
        }
        Some(out.canonical())
    }

    pub fn leaf_profile(&self) -> LeafProfile {
        let heights = self.heights();
        let mut leaf_heights = Vec::new();
        let mut adjacent = Vec::new();
        let mut low_since_leaf = f64::INFINITY;
        let mut stack = vec![(0usize, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&c) = self.nodes[v].children.get(*next) {
                *next += 1;
                stack.push((c, 0));
            } else {
                if self.nodes[v].children.is_empty() {
                    if !leaf_heights.is_empty() {
                        adjacent.push(low_since_leaf);
                    }
                    leaf_heights.push(heights[v]);
                }
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    low_since_leaf = if self.nodes[v].children.is_empty() {
                        heights[p]
                    } else {
                        low_since_leaf.min(heights[p])
                    };
                }
            }
        }
        LeafProfile::from_adjacent(leaf_heights, &adjacent)
    }

    pub fn to_json(&self) -> TreeJson {
        let mut built: Vec<Option<TreeJson>> = (0..self.nodes.len()).map(|_| None).collect();
        for v in self.preorder().into_iter().rev() {
            let children = self.nodes[v].children.iter().map(|&c| built[c].take().unwrap()).collect();
            built[v] = Some(TreeJson {
                edge: self.nodes[v].edge,
                children,
            });
        }
        built[0].take().unwrap()
    }

    /// Serializes without recursion: `{"edge": e, "children": [...]}`.
    pub fn to_json_string(&self) -> String {
        let mut s = String::with_capacity(32 * self.nodes.len());
        let mut stack = vec![(0usize, 0usize)];
        let num = |x: f64| serde_json::to_string(&x).unwrap();
        s.push_str(&format!("{{\"edge\":{},\"children\":[", num(0.0)));
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&c) = self.nodes[v].children.get(*next) {
                if *next > 0 {
                    s.push(',');
                }
                *next += 1;
                s.push_str(&format!("{{\"edge\":{},\"children\":[", num(self.nodes[c].edge)));
                stack.push((c, 0));
            } else {
                s.push_str("]}");
                stack.pop();
            }
        }
        s
    }

    pub fn from_json_str(text: &str) -> Result<PlaneTree> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let root = TreeJson::deserialize(&mut de)?;
        de.end()?;
        PlaneTree::from_json(root)
    }

    /// Converts a nested tree description. The root's edge is ignored;
    /// negative or non-finite edges are rejected.
    pub fn from_json(mut root: TreeJson) -> Result<PlaneTree> {
        let mut out = PlaneTree::single_point();
        let top = std::mem::take(&mut root.children);
        let mut stack: Vec<(TreeJson, usize)> = top.into_iter().rev().map(|c| (c, 0)).collect();
        while let Some((mut node, parent)) = stack.pop() {
            if !(node.edge >= 0.0) || !node.edge.is_finite() {
                return domain(format!("edge lengths must be finite and non-negative, got {}", node.edge));
            }
            let id = out.add_child(parent, node.edge);
            let kids = std::mem::take(&mut node.children);
            stack.extend(kids.into_iter().rev().map(|c| (c, id)));
        }
        Ok(out)
    }
}

/// Nested JSON form of a plane tree.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TreeJson {
    pub edge: f64,
    #[serde(default)]
    pub children: Vec<TreeJson>,
}

impl Drop for TreeJson {
    // Flatten before dropping so deep trees do not recurse.
    fn drop(&mut self) {
        let mut pending = std::mem::take(&mut self.children);
        while let Some(mut n) = pending.pop() {
            pending.append(&mut n.children);
        }
    }
}

/// A raw (non-canonical) contour tree that remembers which node each
/// breakpoint of the coding path maps to.
pub(crate) struct ContourTree {
    pub tree: PlaneTree,
    pub heights: Vec<f64>,
    pub node_at: Vec<usize>,
}

impl ContourTree {
    pub fn build(f: &PlPath) -> ContourTree {
        let vs = f.values();
        let mut tree = PlaneTree::single_point();
        let mut heights = vec![0.0];
        let mut node_at = Vec::with_capacity(vs.len());
        node_at.push(0);
        let mut stack = vec![0usize];
        for &v in &vs[1..] {
            let cur = *stack.last().unwrap();
            let hc = heights[cur];
            if v > hc + EDGE_EPS {
                let id = tree.add_child(cur, v - hc);
                heights.push(v);
                stack.push(id);
                node_at.push(id);
            } else if v < hc - EDGE_EPS && stack.len() > 1 {
                let mut popped = cur;
                while stack.len() > 1 && heights[*stack.last().unwrap()] > v + EDGE_EPS {
                    popped = stack.pop().unwrap();
                }
                let top = *stack.last().unwrap();
                if heights[top] >= v - EDGE_EPS {
                    node_at.push(top);
                } else {
                    let id = tree.split_edge(popped, heights[popped] - v);
                    heights.push(v);
                    stack.push(id);
                    node_at.push(id);
                }
            } else {
                node_at.push(cur);
            }
        }
        ContourTree { tree, heights, node_at }
    }
}

/// `d_f(s, t) = f(s) + f(t) - 2 inf_{[s∧t, s∨t]} f`.
pub fn tree_distance(f: &PlPath, s: f64, t: f64) -> Result<f64> {
    let (a, b) = (s.min(t), s.max(t));
    let low = f.inf_on(a, b)?.0;
    Ok(f.evaluate(s)? + f.evaluate(t)? - 2.0 * low)
}

/// Height of the most recent common ancestor of `p_f(s)` and `p_f(t)`.
pub fn mrca_height(f: &PlPath, s: f64, t: f64) -> Result<f64> {
    Ok(f.inf_on(s.min(t), s.max(t))?.0)
}

/// Whether `p_f(s)` lies on the segment from the root to `p_f(t)`.
pub fn is_ancestor(f: &PlPath, s: f64, t: f64, tol: f64) -> Result<bool> {
    Ok((mrca_height(f, s, t)? - f.evaluate(s)?).abs() <= tol)
}

/// Leaf heights in depth-first order together with the heights of their
/// pairwise most recent common ancestors. Two trees are isometric as rooted
/// trees exactly when their reduced profiles agree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafProfile {
    heights: Vec<f64>,
    mrca: Vec<Vec<f64>>,
}

impl LeafProfile {
    /// Builds the full matrix from the MRCA heights of consecutive leaves.
    pub fn from_adjacent(heights: Vec<f64>, adjacent: &[f64]) -> LeafProfile {
        let n = heights.len();
        assert_eq!(adjacent.len(), n.saturating_sub(1));
        let mut mrca = vec![vec![0.0; n]; n];
        for i in 0..n {
            mrca[i][i] = heights[i];
            let mut low = f64::INFINITY;
            for j in i + 1..n {
                low = low.min(adjacent[j - 1]);
                mrca[i][j] = low;
                mrca[j][i] = low;
            }
        }
        LeafProfile { heights, mrca }
    }

    /// The profile of the points `p_f(τ_1), …, p_f(τ_k)` of the tree coded
    /// by `f`, for increasing times `τ_i`.
    pub fn from_path(f: &PlPath, times: &[f64]) -> Result<LeafProfile> {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return domain("leaf times must be non-decreasing");
        }
        let heights = times.iter().map(|&t| f.evaluate(t)).collect::<Result<Vec<_>>>()?;
        let adjacent = times
            .windows(2)
            .map(|w| f.inf_on(w[0], w[1]).map(|x| x.0))
            .collect::<Result<Vec<_>>>()?;
        Ok(LeafProfile::from_adjacent(heights, &adjacent))
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn mrca(&self, i: usize, j: usize) -> f64 {
        self.mrca[i][j]
    }

    /// Drops points that lie on the ancestral line of another point: `i`
    /// goes if some `j` has `mrca(i, j) = h_i` and is strictly higher, or
    /// is the same point listed earlier.
    pub fn reduced(&self, tol: f64) -> LeafProfile {
        let n = self.len();
        let keep: Vec<usize> = (0..n)
            .filter(|&i| {
                let hi = self.heights[i];
                !(0..n).any(|j| {
                    j != i
                        && (self.mrca[i][j] - hi).abs() <= tol
                        && (self.heights[j] > hi + tol || ((self.heights[j] - hi).abs() <= tol && j < i))
                })
            })
            .collect();
        LeafProfile {
            heights: keep.iter().map(|&i| self.heights[i]).collect(),
            mrca: keep.iter().map(|&i| keep.iter().map(|&j| self.mrca[i][j]).collect()).collect(),
        }
    }
}

/// Compares reduced profiles entrywise within `tol`.
pub fn profiles_equal(a: &LeafProfile, b: &LeafProfile, tol: f64) -> bool {
    let (a, b) = (a.reduced(tol), b.reduced(tol));
    a.len() == b.len()
        && a.heights.iter().zip(&b.heights).all(|(x, y)| (x - y).abs() <= tol)
        && a.mrca
            .iter()
            .flatten()
            .zip(b.mrca.iter().flatten())
            .all(|(x, y)| (x - y).abs() <= tol)
}
