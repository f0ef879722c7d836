use std::ops::Range;

use super::Geometry;
use crate::{Error, Result};

pub type ClusterId = usize;

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BBox {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a [f64; 3]>) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        Self { min, max }
    }

    pub fn diam(&self) -> f64 {
        (0..3).map(|k| (self.max[k] - self.min[k]).powi(2)).sum::<f64>().sqrt()
    }

    /// Euclidean distance between the two boxes (0 when they intersect).
    pub fn dist(&self, other: &BBox) -> f64 {
        (0..3)
            .map(|k| {
                let gap = (other.min[k] - self.max[k]).max(self.min[k] - other.max[k]).max(0.0);
                gap * gap
            })
            .sum::<f64>()
            .sqrt()
    }

    fn longest_axis(&self) -> usize {
        let ext = |k: usize| self.max[k] - self.min[k];
        (0..3).fold(0, |best, k| if ext(k) > ext(best) { k } else { best })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterNode {
    /// Half-open range into the permuted index order.
    pub range: Range<usize>,
    pub bbox: BBox,
    pub level: usize,
    pub parent: Option<ClusterId>,
    pub children: Vec<ClusterId>,
}

impl ClusterNode {
    pub fn size(&self) -> usize {
        self.range.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Hierarchical partition of the index set. Nodes are stored in preorder,
/// the root has id 0.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterTree {
    nodes: Vec<ClusterNode>,
    /// `perm[i]` is the original index at permuted position `i`.
    perm: Vec<usize>,
    leaves: Vec<ClusterId>,
    /// For every node, the range of positions in `leaves` below it.
    leaf_spans: Vec<Range<usize>>,
}

impl ClusterTree {
    /// Assembles a tree from preorder nodes and a permutation, validating
    /// the partition properties.
    pub fn from_parts(nodes: Vec<ClusterNode>, perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidPartition("permutation is not a bijection".into()));
            }
        }
        let root = nodes.first().ok_or_else(|| Error::InvalidPartition("empty tree".into()))?;
        if root.range != (0..n) || root.parent.is_some() {
            return Err(Error::InvalidPartition("root must cover the full index set".into()));
        }
        for (id, node) in nodes.iter().enumerate() {
            if node.children.is_empty() {
                continue;
            }
            let mut next = node.range.start;
            for &c in &node.children {
                let child = nodes.get(c).ok_or_else(|| Error::InvalidPartition(format!("child {c} missing")))?;
                if c <= id || child.parent != Some(id) || child.range.start != next || child.level != node.level + 1 {
                    return Err(Error::InvalidPartition(format!("inconsistent child {c} of {id}")));
                }
                next = child.range.end;
            }
            if next != node.range.end {
                return Err(Error::InvalidPartition(format!("children of {id} do not cover it")));
            }
        }
        let mut tree = Self { nodes, perm, leaves: Vec::new(), leaf_spans: Vec::new() };
        tree.index_leaves();
        Ok(tree)
    }

    fn index_leaves(&mut self) {
        let mut leaves = Vec::new();
        let mut spans = vec![0..0; self.nodes.len()];
        fn walk(nodes: &[ClusterNode], id: ClusterId, leaves: &mut Vec<ClusterId>, spans: &mut [Range<usize>]) {
            let start = leaves.len();
            if nodes[id].is_leaf() {
                leaves.push(id);
            }
            for &c in &nodes[id].children {
                walk(nodes, c, leaves, spans);
            }
            spans[id] = start..leaves.len();
        }
        walk(&self.nodes, 0, &mut leaves, &mut spans);
        self.leaves = leaves;
        self.leaf_spans = spans;
    }

    pub fn root(&self) -> ClusterId {
        0
    }

    pub fn node(&self, id: ClusterId) -> &ClusterNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[ClusterNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of indices.
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Leaf clusters in index order.
    pub fn leaves(&self) -> &[ClusterId] {
        &self.leaves
    }

    /// Positions in [`Self::leaves`] of the leaves below `id`.
    pub fn leaf_span(&self, id: ClusterId) -> Range<usize> {
        self.leaf_spans[id].clone()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|c| c.level).max().unwrap_or(0)
    }

    /// Returns `[root, ..., id]`.
    pub fn ancestors_and_self(&self, id: ClusterId) -> Vec<ClusterId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Reorders a vector from original to permuted index order.
    pub fn to_permuted(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&p| x[p]).collect()
    }

    /// Reorders a vector from permuted to original index order.
    pub fn from_permuted(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = x[i];
        }
        out
    }
}

struct Builder<'a> {
    geom: &'a Geometry,
    n_min: usize,
    nodes: Vec<ClusterNode>,
}

impl Builder<'_> {
    fn build(&mut self, idx: &mut [usize], offset: usize, level: usize, parent: Option<ClusterId>) -> ClusterId {
        let bbox = BBox::from_points(idx.iter().map(|&i| &self.geom.points[i]));
        let id = self.nodes.len();
        self.nodes.push(ClusterNode { range: offset..offset + idx.len(), bbox, level, parent, children: Vec::new() });
        if idx.len() <= self.n_min.max(1) {
            return id;
        }
        let axis = bbox.longest_axis();
        let mid = idx.len() / 2;
        let pts = &self.geom.points;
        idx.select_nth_unstable_by(mid, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b)));
        let (left, right) = idx.split_at_mut(mid);
        let c0 = self.build(left, offset, level + 1, Some(id));
        let c1 = self.build(right, offset + mid, level + 1, Some(id));
        self.nodes[id].children = vec![c0, c1];
        id
    }
}

/// Binary cluster tree by cardinality-balanced bisection along the longest
/// bounding-box axis. Every leaf holds at most `n_min` indices.
pub fn build_cluster_tree(geom: &Geometry, n_min: usize) -> Result<ClusterTree> {
    if geom.is_empty() {
        return Err(Error::InvalidParameter("empty geometry".into()));
    }
    if n_min == 0 {
        return Err(Error::InvalidParameter("n_min must be positive".into()));
    }
    let mut perm: Vec<usize> = (0..geom.len()).collect();
    let mut b = Builder { geom, n_min, nodes: Vec::new() };
    b.build(&mut perm, 0, 0, None);
    ClusterTree::from_parts(b.nodes, perm)
}

/// One-level clustering with `p` leaves of (nearly) equal size, as used by
/// the BLR format. Leaves are contiguous pieces of the bisection ordering,
/// so each is geometrically compact.
pub fn flat_clustering(geom: &Geometry, p: usize) -> Result<ClusterTree> {
    let n = geom.len();
    if p == 0 || p > n {
        return Err(Error::InvalidParameter(format!("cannot split {n} indices into {p} clusters")));
    }
    let order = build_cluster_tree(geom, 1)?.perm;
    let points_of = |r: Range<usize>| BBox::from_points(order[r].iter().map(|&i| &geom.points[i]));
    let mut nodes = vec![ClusterNode { range: 0..n, bbox: points_of(0..n), level: 0, parent: None, children: Vec::new() }];
    if p > 1 {
        let (base, extra) = (n / p, n % p);
        let mut start = 0;
        for k in 0..p {
            let end = start + base + usize::from(k < extra);
            nodes.push(ClusterNode { range: start..end, bbox: points_of(start..end), level: 1, parent: Some(0), children: Vec::new() });
            nodes[0].children.push(k + 1);
            start = end;
        }
    }
    ClusterTree::from_parts(nodes, order)
}
