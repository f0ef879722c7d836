use std::fmt;
use std::str::FromStr;

use super::*;
use crate::formats::AnyMatrix;
use crate::{Error, Result};

/// Product routine selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Seq,
    Chunks,
    ClusterLists,
    ThreadLocal,
    Adjoint,
    Uniform,
    UniformMutex,
    Nested,
    NestedMutex,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Seq,
        Variant::Chunks,
        Variant::ClusterLists,
        Variant::ThreadLocal,
        Variant::Adjoint,
        Variant::Uniform,
        Variant::UniformMutex,
        Variant::Nested,
        Variant::NestedMutex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Seq => "seq",
            Variant::Chunks => "chunks",
            Variant::ClusterLists => "cluster-lists",
            Variant::ThreadLocal => "thread-local",
            Variant::Adjoint => "adjoint",
            Variant::Uniform => "uni",
            Variant::UniformMutex => "uni-mutex",
            Variant::Nested => "h2",
            Variant::NestedMutex => "h2-mutex",
        }
    }

    /// Container format tag (see [`AnyMatrix::tag`]) the routine runs on.
    pub fn format_tag(self) -> u8 {
        match self {
            Variant::Uniform | Variant::UniformMutex => 1,
            Variant::Nested | Variant::NestedMutex => 2,
            _ => 0,
        }
    }

    /// Routines for a container format.
    pub fn for_format(tag: u8) -> Vec<Variant> {
        Self::ALL.into_iter().filter(|v| v.format_tag() == tag).collect()
    }

    /// The deterministic root-to-leaf routine of a format.
    pub fn deterministic(tag: u8) -> Variant {
        match tag {
            1 => Variant::Uniform,
            2 => Variant::Nested,
            _ => Variant::ClusterLists,
        }
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, Variant::Seq | Variant::ClusterLists | Variant::Adjoint | Variant::Uniform | Variant::Nested)
    }

    /// `y += α·M·x` (`Mᵀ` for [`Variant::Adjoint`]).
    pub fn apply(self, alpha: f64, m: &AnyMatrix, x: &[f64], y: &mut [f64], parallel: bool) -> Result<()> {
        match (self, m) {
            (Variant::Seq, AnyMatrix::H(h)) => hmvm_seq(alpha, h, x, y),
            (Variant::Chunks, AnyMatrix::H(h)) => hmvm_chunks(alpha, h, x, y, parallel),
            (Variant::ClusterLists, AnyMatrix::H(h)) => hmvm_cluster_lists(alpha, h, x, y, parallel),
            (Variant::ThreadLocal, AnyMatrix::H(h)) => hmvm_thread_local(alpha, h, x, y, parallel),
            (Variant::Adjoint, AnyMatrix::H(h)) => hmvm_adjoint(alpha, h, x, y, parallel),
            (Variant::Uniform, AnyMatrix::Uniform(u)) => uni_mvm(alpha, u, x, y, parallel),
            (Variant::UniformMutex, AnyMatrix::Uniform(u)) => uni_mvm_mutex(alpha, u, x, y, parallel),
            (Variant::Nested, AnyMatrix::H2(h2)) => h2_mvm(alpha, h2, x, y, parallel),
            (Variant::NestedMutex, AnyMatrix::H2(h2)) => h2_mvm_mutex(alpha, h2, x, y, parallel),
            _ => Err(Error::InvalidParameter(format!("variant {self} does not apply to format tag {}", m.tag()))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| Error::InvalidParameter(format!("unknown variant {s:?}")))
    }
}
