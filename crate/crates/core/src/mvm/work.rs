//! Software flop and byte counts of one product.
//!
//! Bytes touched are the stored payload bytes read plus 8 bytes per vector
//! entry read (`x`, coefficients) and 16 per entry updated (`y`,
//! accumulators).

use crate::formats::{AnyMatrix, BasisKind, BasisLeaf, BasisMatrix, HLeaf, HMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Work {
    pub flops: f64,
    pub bytes: f64,
}

impl Work {
    /// Flops per byte touched.
    pub fn intensity(&self) -> f64 {
        if self.bytes > 0.0 {
            self.flops / self.bytes
        } else {
            0.0
        }
    }

    fn gemv(&mut self, rows: usize, cols: usize, payload: usize) {
        self.flops += 2.0 * (rows * cols) as f64;
        self.bytes += (payload + 8 * cols + 16 * rows) as f64;
    }
}

pub trait MvmCost {
    fn mvm_work(&self) -> Work;
}

impl MvmCost for HMatrix {
    fn mvm_work(&self) -> Work {
        let mut w = Work::default();
        for leaf in self.leaves() {
            match leaf {
                HLeaf::Dense(d) => w.gemv(d.nrows(), d.ncols(), d.stored_bytes()),
                HLeaf::LowRank(lr) => {
                    let k = lr.rank();
                    w.gemv(k, lr.v.nrows(), lr.v.stored_bytes());
                    if !lr.sigma_in_u {
                        w.flops += k as f64;
                        w.bytes += (8 * k) as f64;
                    }
                    w.gemv(lr.u.nrows(), k, lr.u.stored_bytes());
                }
            }
        }
        w
    }
}

impl<K: BasisKind> MvmCost for BasisMatrix<K> {
    fn mvm_work(&self) -> Work {
        let mut w = Work::default();
        for (row, col) in self.row_bases().iter().zip(self.col_bases()) {
            // forward with the column basis, backward with the row basis
            if let Some(x) = &col.explicit {
                w.gemv(col.rank, x.nrows(), x.stored_bytes());
            }
            for e in &col.transfer {
                w.gemv(col.rank, e.nrows(), e.stored_bytes());
            }
            if let Some(u) = &row.explicit {
                w.gemv(u.nrows(), row.rank, u.stored_bytes());
            }
            for e in &row.transfer {
                w.gemv(e.nrows(), row.rank, e.stored_bytes());
            }
        }
        for leaf in self.leaves() {
            match leaf {
                BasisLeaf::Dense(d) => w.gemv(d.nrows(), d.ncols(), d.stored_bytes()),
                BasisLeaf::Coupling(s) => w.gemv(s.nrows(), s.ncols(), s.stored_bytes()),
            }
        }
        w
    }
}

impl MvmCost for AnyMatrix {
    fn mvm_work(&self) -> Work {
        match self {
            AnyMatrix::H(m) => m.mvm_work(),
            AnyMatrix::Uniform(m) => m.mvm_work(),
            AnyMatrix::H2(m) => m.mvm_work(),
        }
    }
}
