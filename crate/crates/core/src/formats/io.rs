//! Matrix container files.
//!
//! All integers are little-endian u64 unless noted, floats are f64.
//!
//! ```text
//! magic     b"HMZC"
//! version   u32 (= 1)
//! format    u8: 0 H, 1 uniform-H, 2 H²
//! n         u64
//! eps       f64
//! scheme    u8: 0 none, 1 AFLP, 2 FPX
//! valr      u8
//! cluster tree:
//!   count, then per node in preorder: start, end, level,
//!   parent (u64::MAX for the root), bbox min[3], max[3], #children, ids
//!   permutation: n entries
//! block tree:
//!   count, then per node: row, col, kind (u8: 0 admissible,
//!   1 inadmissible, 2 inner), #children, ids
//! H leaves:     count, then per leaf u8 tag (0 dense, 1 low-rank) and
//!               the matrix, or U, V, σ array and u8 "σ folded into U"
//! shared bases: row bases then column bases, each count, then per
//!               cluster rank, u8 explicit flag [matrix], #transfer,
//!               transfer matrices, σ array
//! basis leaves: count, then per leaf u8 tag (0 dense, 1 coupling), matrix
//! ```
//!
//! A matrix is `rows`, `cols`, u8 layout (0 one array, 1 one array per
//! column) followed by the value buffers in the codec layout of
//! [`crate::zfp`]. Arrays of σ values are a count followed by the values.

use std::path::Path;
use std::sync::Arc;

use super::{BasisKind, BasisLeaf, BasisMatrix, ClusterBasis, Compression, H2Matrix, HLeaf, HMatrix, LowRankPayload, UniformHMatrix};
use crate::bytes::{ByteReader, ByteWriter};
use crate::cluster::{BBox, BlockKind, BlockNode, BlockTree, ClusterNode, ClusterTree};
use crate::zfp::{Codec, StoredMatrix};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"HMZC";
const VERSION: u32 = 1;

/// Any of the three container formats.
#[derive(Clone, Debug)]
pub enum AnyMatrix {
    H(HMatrix),
    Uniform(UniformHMatrix),
    H2(H2Matrix),
}

impl AnyMatrix {
    pub fn tag(&self) -> u8 {
        match self {
            AnyMatrix::H(_) => 0,
            AnyMatrix::Uniform(_) => 1,
            AnyMatrix::H2(_) => 2,
        }
    }

    pub fn tree(&self) -> &Arc<ClusterTree> {
        match self {
            AnyMatrix::H(m) => m.tree(),
            AnyMatrix::Uniform(m) => m.tree(),
            AnyMatrix::H2(m) => m.tree(),
        }
    }

    pub fn n(&self) -> usize {
        self.tree().n()
    }

    pub fn eps(&self) -> f64 {
        match self {
            AnyMatrix::H(m) => m.eps(),
            AnyMatrix::Uniform(m) => m.eps(),
            AnyMatrix::H2(m) => m.eps(),
        }
    }

    pub fn compression(&self) -> Option<Compression> {
        match self {
            AnyMatrix::H(m) => m.compression(),
            AnyMatrix::Uniform(m) => m.compression(),
            AnyMatrix::H2(m) => m.compression(),
        }
    }

    pub fn compress(&self, c: Compression, parallel: bool) -> Result<Self> {
        Ok(match self {
            AnyMatrix::H(m) => AnyMatrix::H(m.compress(c, parallel)?),
            AnyMatrix::Uniform(m) => AnyMatrix::Uniform(m.compress(c, parallel)?),
            AnyMatrix::H2(m) => AnyMatrix::H2(m.compress(c, parallel)?),
        })
    }

    /// Dense matrix in permuted order. Only sensible for small `n`.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        match self {
            AnyMatrix::H(m) => m.to_dense(),
            AnyMatrix::Uniform(m) => m.to_dense(),
            AnyMatrix::H2(m) => m.to_dense(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u8(self.tag());
        let (tree, blocks, eps, compression) = match self {
            AnyMatrix::H(m) => (&m.tree, &m.blocks, m.eps, m.compression),
            AnyMatrix::Uniform(m) => (&m.tree, &m.blocks, m.eps, m.compression),
            AnyMatrix::H2(m) => (&m.tree, &m.blocks, m.eps, m.compression),
        };
        w.usize(tree.n());
        w.f64(eps);
        match compression {
            None => {
                w.u8(0);
                w.u8(0);
            }
            Some(c) => {
                w.u8(if c.codec == Codec::Aflp { 1 } else { 2 });
                w.u8(c.valr as u8);
            }
        }
        write_tree(&mut w, tree);
        write_blocks(&mut w, blocks);
        match self {
            AnyMatrix::H(m) => write_h_leaves(&mut w, &m.leaves),
            AnyMatrix::Uniform(m) => write_basis_matrix(&mut w, m),
            AnyMatrix::H2(m) => write_basis_matrix(&mut w, m),
        }
        w.buf
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(buf);
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let tag = r.u8()?;
        let n = r.usize()?;
        let eps = r.f64()?;
        let scheme = r.u8()?;
        let valr = r.u8()? != 0;
        let compression = match scheme {
            0 => None,
            1 => Some(Compression { codec: Codec::Aflp, valr }),
            2 => Some(Compression { codec: Codec::Fpx, valr }),
            s => return Err(Error::Format(format!("unknown scheme {s}"))),
        };
        let tree = Arc::new(read_tree(&mut r)?);
        if tree.n() != n {
            return Err(Error::Format("index count does not match the tree".into()));
        }
        let blocks = Arc::new(read_blocks(&mut r, &tree)?);
        let out = match tag {
            0 => AnyMatrix::H(HMatrix::from_parts(tree, blocks, read_h_leaves(&mut r)?, eps, compression)?),
            1 => AnyMatrix::Uniform(read_basis_matrix(&mut r, tree, blocks, eps, compression)?),
            2 => AnyMatrix::H2(read_basis_matrix(&mut r, tree, blocks, eps, compression)?),
            t => return Err(Error::Format(format!("unknown format tag {t}"))),
        };
        if r.remaining() != 0 {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn write_ids(w: &mut ByteWriter, ids: &[usize]) {
    w.usize(ids.len());
    for &i in ids {
        w.usize(i);
    }
}

fn read_ids(r: &mut ByteReader<'_>) -> Result<Vec<usize>> {
    let k = r.usize()?;
    if k > r.remaining() / 8 {
        return Err(Error::Format("id list exceeds data".into()));
    }
    (0..k).map(|_| r.usize()).collect()
}

fn write_tree(w: &mut ByteWriter, tree: &ClusterTree) {
    w.usize(tree.len());
    for node in tree.nodes() {
        w.usize(node.range.start);
        w.usize(node.range.end);
        w.usize(node.level);
        w.u64(node.parent.map_or(u64::MAX, |p| p as u64));
        for v in node.bbox.min.iter().chain(&node.bbox.max) {
            w.f64(*v);
        }
        write_ids(w, &node.children);
    }
    for &p in tree.perm() {
        w.usize(p);
    }
}

fn read_tree(r: &mut ByteReader<'_>) -> Result<ClusterTree> {
    let count = r.usize()?;
    let mut nodes = Vec::with_capacity(count.min(r.remaining() / 64));
    for _ in 0..count {
        let start = r.usize()?;
        let end = r.usize()?;
        let level = r.usize()?;
        let parent = match r.u64()? {
            u64::MAX => None,
            p => Some(p as usize),
        };
        let mut b = [0.0; 6];
        for v in &mut b {
            *v = r.f64()?;
        }
        let children = read_ids(r)?;
        if start > end {
            return Err(Error::Format("inverted cluster range".into()));
        }
        nodes.push(ClusterNode {
            range: start..end,
            bbox: BBox::new([b[0], b[1], b[2]], [b[3], b[4], b[5]]),
            level,
            parent,
            children,
        });
    }
    let n = nodes.first().map_or(0, |root| root.range.end);
    let perm = (0..n).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
    ClusterTree::from_parts(nodes, perm)
}

fn write_blocks(w: &mut ByteWriter, blocks: &BlockTree) {
    w.usize(blocks.nodes().len());
    for b in blocks.nodes() {
        w.usize(b.row);
        w.usize(b.col);
        w.u8(match b.kind {
            BlockKind::Admissible => 0,
            BlockKind::Inadmissible => 1,
            BlockKind::Inner => 2,
        });
        write_ids(w, &b.children);
    }
}

fn read_blocks(r: &mut ByteReader<'_>, tree: &ClusterTree) -> Result<BlockTree> {
    let count = r.usize()?;
    let mut nodes = Vec::with_capacity(count.min(r.remaining() / 25));
    for id in 0..count {
        let row = r.usize()?;
        let col = r.usize()?;
        let kind = match r.u8()? {
            0 => BlockKind::Admissible,
            1 => BlockKind::Inadmissible,
            2 => BlockKind::Inner,
            k => return Err(Error::Format(format!("unknown block kind {k}"))),
        };
        let children = read_ids(r)?;
        let bad_child = children.iter().any(|&c| c <= id || c >= count);
        if row >= tree.len() || col >= tree.len() || bad_child || (kind == BlockKind::Inner) == children.is_empty() {
            return Err(Error::Format(format!("inconsistent block node {id}")));
        }
        nodes.push(BlockNode { row, col, kind, children });
    }
    if count == 0 {
        return Err(Error::Format("empty block tree".into()));
    }
    Ok(BlockTree::from_nodes(nodes, tree))
}

fn write_h_leaves(w: &mut ByteWriter, leaves: &[HLeaf]) {
    w.usize(leaves.len());
    for leaf in leaves {
        match leaf {
            HLeaf::Dense(d) => {
                w.u8(0);
                d.write(w);
            }
            HLeaf::LowRank(lr) => {
                w.u8(1);
                lr.u.write(w);
                lr.v.write(w);
                w.f64s(&lr.sigma);
                w.u8(lr.sigma_in_u as u8);
            }
        }
    }
}

fn read_h_leaves(r: &mut ByteReader<'_>) -> Result<Vec<HLeaf>> {
    let count = r.usize()?;
    let mut out = Vec::with_capacity(count.min(r.remaining()));
    for _ in 0..count {
        out.push(match r.u8()? {
            0 => HLeaf::Dense(StoredMatrix::read(r)?),
            1 => {
                let u = StoredMatrix::read(r)?;
                let v = StoredMatrix::read(r)?;
                let sigma = r.f64s()?;
                let sigma_in_u = r.u8()? != 0;
                HLeaf::LowRank(LowRankPayload { u, v, sigma, sigma_in_u })
            }
            t => return Err(Error::Format(format!("unknown leaf tag {t}"))),
        });
    }
    Ok(out)
}

fn write_bases(w: &mut ByteWriter, bases: &[ClusterBasis]) {
    w.usize(bases.len());
    for b in bases {
        w.usize(b.rank);
        match &b.explicit {
            Some(m) => {
                w.u8(1);
                m.write(w);
            }
            None => w.u8(0),
        }
        w.usize(b.transfer.len());
        for e in &b.transfer {
            e.write(w);
        }
        w.f64s(&b.sigma);
    }
}

fn read_bases(r: &mut ByteReader<'_>) -> Result<Vec<ClusterBasis>> {
    let count = r.usize()?;
    let mut out = Vec::with_capacity(count.min(r.remaining()));
    for _ in 0..count {
        let rank = r.usize()?;
        let explicit = match r.u8()? {
            0 => None,
            _ => Some(StoredMatrix::read(r)?),
        };
        let nt = r.usize()?;
        if nt > r.remaining() {
            return Err(Error::Format("transfer list exceeds data".into()));
        }
        let transfer = (0..nt).map(|_| StoredMatrix::read(r)).collect::<Result<Vec<_>>>()?;
        let sigma = r.f64s()?;
        out.push(ClusterBasis { rank, explicit, transfer, sigma });
    }
    Ok(out)
}

fn write_basis_matrix<K: BasisKind>(w: &mut ByteWriter, m: &BasisMatrix<K>) {
    write_bases(w, &m.row_bases);
    write_bases(w, &m.col_bases);
    w.usize(m.leaves.len());
    for leaf in &m.leaves {
        let (tag, s) = match leaf {
            BasisLeaf::Dense(d) => (0, d),
            BasisLeaf::Coupling(s) => (1, s),
        };
        w.u8(tag);
        s.write(w);
    }
}

fn read_basis_matrix<K: BasisKind>(
    r: &mut ByteReader<'_>,
    tree: Arc<ClusterTree>,
    blocks: Arc<BlockTree>,
    eps: f64,
    compression: Option<Compression>,
) -> Result<BasisMatrix<K>> {
    let rows = read_bases(r)?;
    let cols = read_bases(r)?;
    let count = r.usize()?;
    let mut leaves = Vec::with_capacity(count.min(r.remaining()));
    for _ in 0..count {
        leaves.push(match r.u8()? {
            0 => BasisLeaf::Dense(StoredMatrix::read(r)?),
            1 => BasisLeaf::Coupling(StoredMatrix::read(r)?),
            t => return Err(Error::Format(format!("unknown leaf tag {t}"))),
        });
    }
    BasisMatrix::from_parts(tree, blocks, rows, cols, leaves, eps, compression)
}
