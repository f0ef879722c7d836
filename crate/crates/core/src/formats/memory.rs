use super::{AnyMatrix, BasisKind, BasisLeaf, BasisMatrix, ClusterBasis, HLeaf, HMatrix};
use crate::cluster::{BlockTree, ClusterTree};

/// Bytes charged per cluster node: range, bounding box, level, parent.
pub const CLUSTER_NODE_BYTES: usize = 2 * 8 + 6 * 8 + 8 + 8;
/// Bytes charged per block node: row, column, kind and child link.
pub const BLOCK_NODE_BYTES: usize = 4 * 8;

/// Storage of a matrix by category, in bytes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MemoryBreakdown {
    pub dense: usize,
    /// Low-rank factors (H) or coupling matrices (UH, H²).
    pub lowrank: usize,
    /// Explicit cluster bases.
    pub bases: usize,
    /// Transfer matrices of nested bases.
    pub transfer: usize,
    /// Trees, index permutation and retained singular values.
    pub structure: usize,
}

impl MemoryBreakdown {
    /// Payload bytes, everything except structure.
    pub fn payload(&self) -> usize {
        self.dense + self.lowrank + self.bases + self.transfer
    }

    pub fn total(&self) -> usize {
        self.payload() + self.structure
    }
}

fn structure(tree: &ClusterTree, blocks: &BlockTree) -> usize {
    tree.len() * CLUSTER_NODE_BYTES + 8 * tree.n() + blocks.nodes().len() * BLOCK_NODE_BYTES
}

/// Byte accounting of a matrix container.
pub trait Footprint {
    /// `compressed = true` reports the bytes actually stored (buffer headers
    /// and packed payloads); `false` reports 8 bytes per value.
    fn footprint(&self, compressed: bool) -> MemoryBreakdown;
}

pub fn memory_footprint(m: &dyn Footprint, compressed: bool) -> MemoryBreakdown {
    m.footprint(compressed)
}

/// Uncompressed over compressed payload bytes.
pub fn compression_ratio(m: &dyn Footprint) -> f64 {
    m.footprint(false).payload() as f64 / m.footprint(true).payload() as f64
}

macro_rules! bytes {
    ($m:expr, $compressed:expr) => {
        if $compressed {
            $m.stored_bytes()
        } else {
            $m.plain_bytes()
        }
    };
}

impl Footprint for HMatrix {
    fn footprint(&self, compressed: bool) -> MemoryBreakdown {
        let mut out = MemoryBreakdown { structure: structure(&self.tree, &self.blocks), ..Default::default() };
        for leaf in &self.leaves {
            match leaf {
                HLeaf::Dense(d) => out.dense += bytes!(d, compressed),
                HLeaf::LowRank(lr) => {
                    out.lowrank += bytes!(lr.u, compressed) + bytes!(lr.v, compressed);
                    // σ is read by the product only in the VALR layout
                    if compressed && !lr.sigma_in_u {
                        out.lowrank += 8 * lr.rank();
                    } else {
                        out.structure += 8 * lr.rank();
                    }
                }
            }
        }
        out
    }
}

fn add_bases(out: &mut MemoryBreakdown, bases: &[ClusterBasis], compressed: bool) {
    for b in bases {
        if let Some(w) = &b.explicit {
            out.bases += bytes!(w, compressed);
        }
        for e in &b.transfer {
            out.transfer += bytes!(e, compressed);
        }
        out.structure += 8 * b.sigma.len();
    }
}

impl<K: BasisKind> Footprint for BasisMatrix<K> {
    fn footprint(&self, compressed: bool) -> MemoryBreakdown {
        let mut out = MemoryBreakdown { structure: structure(&self.tree, &self.blocks), ..Default::default() };
        add_bases(&mut out, &self.row_bases, compressed);
        add_bases(&mut out, &self.col_bases, compressed);
        for leaf in &self.leaves {
            match leaf {
                BasisLeaf::Dense(d) => out.dense += bytes!(d, compressed),
                BasisLeaf::Coupling(s) => out.lowrank += bytes!(s, compressed),
            }
        }
        out
    }
}

impl Footprint for AnyMatrix {
    fn footprint(&self, compressed: bool) -> MemoryBreakdown {
        match self {
            AnyMatrix::H(m) => m.footprint(compressed),
            AnyMatrix::Uniform(m) => m.footprint(compressed),
            AnyMatrix::H2(m) => m.footprint(compressed),
        }
    }
}
