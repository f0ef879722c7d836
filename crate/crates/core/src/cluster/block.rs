use super::{Admissibility, ClusterId, ClusterTree};

pub type BlockId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Admissible,
    Inadmissible,
    Inner,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockNode {
    pub row: ClusterId,
    pub col: ClusterId,
    pub kind: BlockKind,
    pub children: Vec<BlockId>,
}

impl BlockNode {
    pub fn is_leaf(&self) -> bool {
        self.kind != BlockKind::Inner
    }
}

/// Block tree over `I × I` together with the leaf lists per block row and
/// block column.
///
/// Leaves are numbered `0..leaves().len()` in preorder; payloads of matrix
/// containers are indexed by that leaf number. Row and column lists are
/// sorted by the start of the opposite cluster range, which fixes the
/// accumulation order inside a block row.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTree {
    nodes: Vec<BlockNode>,
    leaves: Vec<BlockId>,
    row_lists: Vec<Vec<usize>>,
    col_lists: Vec<Vec<usize>>,
}

impl BlockTree {
    pub(crate) fn from_nodes(nodes: Vec<BlockNode>, tree: &ClusterTree) -> Self {
        let leaves: Vec<BlockId> = nodes.iter().enumerate().filter(|(_, b)| b.is_leaf()).map(|(i, _)| i).collect();
        let mut row_lists = vec![Vec::new(); tree.len()];
        let mut col_lists = vec![Vec::new(); tree.len()];
        for (li, &b) in leaves.iter().enumerate() {
            row_lists[nodes[b].row].push(li);
            col_lists[nodes[b].col].push(li);
        }
        for list in &mut row_lists {
            list.sort_by_key(|&li| tree.node(nodes[leaves[li]].col).range.start);
        }
        for list in &mut col_lists {
            list.sort_by_key(|&li| tree.node(nodes[leaves[li]].row).range.start);
        }
        Self { nodes, leaves, row_lists, col_lists }
    }

    pub fn root(&self) -> BlockId {
        0
    }

    pub fn node(&self, id: BlockId) -> &BlockNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[BlockNode] {
        &self.nodes
    }

    /// Block ids of the leaves, indexed by leaf number.
    pub fn leaves(&self) -> &[BlockId] {
        &self.leaves
    }

    pub fn leaf(&self, leaf: usize) -> &BlockNode {
        &self.nodes[self.leaves[leaf]]
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf numbers of the block row of cluster `t`.
    pub fn row_list(&self, t: ClusterId) -> &[usize] {
        &self.row_lists[t]
    }

    /// Leaf numbers of the block column of cluster `s`.
    pub fn col_list(&self, s: ClusterId) -> &[usize] {
        &self.col_lists[s]
    }

    pub fn count(&self, kind: BlockKind) -> usize {
        self.nodes.iter().filter(|b| b.kind == kind).count()
    }
}

/// Recursive block partition starting at `(root, root)`: a pair becomes an
/// admissible leaf when the predicate holds, an inadmissible leaf when either
/// cluster is a leaf, and is otherwise split into the product of the
/// children.
pub fn build_block_tree(tree: &ClusterTree, adm: &dyn Admissibility) -> BlockTree {
    let mut nodes = Vec::new();
    fn build(tree: &ClusterTree, adm: &dyn Admissibility, t: ClusterId, s: ClusterId, nodes: &mut Vec<BlockNode>) -> BlockId {
        let (tn, sn) = (tree.node(t), tree.node(s));
        let id = nodes.len();
        let kind = if adm.is_admissible(tn, sn) {
            BlockKind::Admissible
        } else if tn.is_leaf() || sn.is_leaf() {
            BlockKind::Inadmissible
        } else {
            BlockKind::Inner
        };
        nodes.push(BlockNode { row: t, col: s, kind, children: Vec::new() });
        if kind == BlockKind::Inner {
            let mut children = Vec::with_capacity(tn.children.len() * sn.children.len());
            for &tc in &tn.children {
                for &sc in &sn.children {
                    children.push(build(tree, adm, tc, sc, nodes));
                }
            }
            nodes[id].children = children;
        }
        id
    }
    build(tree, adm, tree.root(), tree.root(), &mut nodes);
    BlockTree::from_nodes(nodes, tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::*;

    fn coverage(tree: &ClusterTree, bt: &BlockTree) -> Vec<u8> {
        let n = tree.n();
        let mut hit = vec![0u8; n * n];
        for &b in bt.leaves() {
            let node = bt.node(b);
            for i in tree.node(node.row).range.clone() {
                for j in tree.node(node.col).range.clone() {
                    hit[i * n + j] += 1;
                }
            }
        }
        hit
    }

    #[test]
    fn leaf_roots() {
        let g = make_sphere_geometry(0).unwrap();
        let tree = build_cluster_tree(&g, 32).unwrap();
        let bt = build_block_tree(&tree, &StandardAdmissibility { eta: 2.0 });
        assert_eq!(bt.nodes().len(), 1);
        assert_eq!(bt.node(0).kind, BlockKind::Inadmissible);

        let all = |_: &ClusterNode, _: &ClusterNode| true;
        let g = make_sphere_geometry(3).unwrap();
        let tree = build_cluster_tree(&g, 32).unwrap();
        let bt = build_block_tree(&tree, &all);
        assert_eq!(bt.nodes().len(), 1);
        assert_eq!(bt.node(0).kind, BlockKind::Admissible);
    }

    #[test]
    fn standard_tiles_exactly_once() {
        let g = make_sphere_geometry(3).unwrap();
        let tree = build_cluster_tree(&g, 32).unwrap();
        let bt = build_block_tree(&tree, &StandardAdmissibility { eta: 2.0 });
        assert!(coverage(&tree, &bt).iter().all(|&h| h == 1));
        assert!(bt.count(BlockKind::Admissible) > 0);
        for b in bt.nodes() {
            assert_eq!(tree.node(b.row).level, tree.node(b.col).level);
            if b.kind == BlockKind::Inner {
                assert_eq!(b.children.len(), 4);
            }
        }
    }

    #[test]
    fn hodlr_diagonal_dense() {
        let g = make_sphere_geometry(2).unwrap();
        let tree = build_cluster_tree(&g, 40).unwrap();
        assert_eq!(tree.depth(), 3);
        let bt = build_block_tree(&tree, &WeakAdmissibility);
        for &b in bt.leaves() {
            let node = bt.node(b);
            let same = tree.node(node.row).range == tree.node(node.col).range;
            assert_eq!(node.kind == BlockKind::Inadmissible, same);
        }
        assert_eq!(bt.count(BlockKind::Inadmissible), tree.leaves().len());
        assert!(coverage(&tree, &bt).iter().all(|&h| h == 1));
    }

    #[test]
    fn row_lists_sorted() {
        let g = make_sphere_geometry(3).unwrap();
        let tree = build_cluster_tree(&g, 32).unwrap();
        let bt = build_block_tree(&tree, &StandardAdmissibility { eta: 2.0 });
        let mut total = 0;
        for t in 0..tree.len() {
            let starts: Vec<usize> = bt.row_list(t).iter().map(|&l| tree.node(bt.leaf(l).col).range.start).collect();
            assert!(starts.windows(2).all(|w| w[0] < w[1]));
            total += starts.len();
        }
        assert_eq!(total, bt.n_leaves());
    }

    #[test]
    fn monotone_in_eta() {
        let g = make_sphere_geometry(3).unwrap();
        let tree = build_cluster_tree(&g, 32).unwrap();
        for a in tree.nodes().iter().step_by(7) {
            for b in tree.nodes().iter().step_by(5) {
                if admissible_standard(a, b, 1.0) {
                    assert!(admissible_standard(a, b, 2.0));
                }
            }
        }
    }
}
