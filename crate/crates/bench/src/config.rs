use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hmat::cluster::{DEFAULT_ETA, DEFAULT_N_MIN, MAX_REFINEMENT};
use hmat::formats::Compression;
use hmat::mvm::Variant;
use hmat::zfp::Codec;
use serde::{Serialize, Serializer};

use crate::{BenchError, Result};

/// Matrix format of a campaign. `hodlr` and `blr` are H-matrices over the
/// weak-admissibility block structures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatKind {
    H,
    Uh,
    H2,
    Hodlr,
    Blr,
}

impl FormatKind {
    pub const ALL: [FormatKind; 5] = [FormatKind::H, FormatKind::Uh, FormatKind::H2, FormatKind::Hodlr, FormatKind::Blr];

    pub fn name(self) -> &'static str {
        match self {
            FormatKind::H => "h",
            FormatKind::Uh => "uh",
            FormatKind::H2 => "h2",
            FormatKind::Hodlr => "hodlr",
            FormatKind::Blr => "blr",
        }
    }

    /// Container tag of the matrix this format produces.
    pub fn container_tag(self) -> u8 {
        match self {
            FormatKind::Uh => 1,
            FormatKind::H2 => 2,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    None,
    Aflp,
    Fpx,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::None, Scheme::Aflp, Scheme::Fpx];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::Aflp => "aflp",
            Scheme::Fpx => "fpx",
        }
    }

    pub fn codec(self) -> Option<Codec> {
        match self {
            Scheme::None => None,
            Scheme::Aflp => Some(Codec::Aflp),
            Scheme::Fpx => Some(Codec::Fpx),
        }
    }
}

macro_rules! named_enum {
    ($t:ty) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = BenchError;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .into_iter()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| BenchError::Config(format!("unknown {} {s:?}", stringify!($t))))
            }
        }
    };
}

named_enum!(FormatKind);
named_enum!(Scheme);

fn variant_name<S: Serializer>(v: &Option<Variant>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(v.map_or("all", Variant::name))
}

/// One campaign configuration. Every field is echoed into each report row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchConfig {
    pub refinement: usize,
    pub format: FormatKind,
    pub eps: f64,
    pub eta: f64,
    pub n_min: usize,
    pub blr_p: usize,
    pub scheme: Scheme,
    pub valr: bool,
    /// `None` runs every routine of the format.
    #[serde(serialize_with = "variant_name")]
    pub variant: Option<Variant>,
    /// Worker count, 0 for all cores.
    pub threads: usize,
    pub reps: usize,
    pub seed: u64,
    /// Accuracy of the uncompressed H reference in `verify`.
    pub ref_eps: f64,
    /// Point-weight file used instead of the sphere.
    pub geometry: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            refinement: 3,
            format: FormatKind::H,
            eps: 1e-6,
            eta: DEFAULT_ETA,
            n_min: DEFAULT_N_MIN,
            blr_p: 16,
            scheme: Scheme::None,
            valr: false,
            variant: None,
            threads: 0,
            reps: 5,
            seed: 42,
            ref_eps: 1e-6,
            geometry: None,
        }
    }
}

impl BenchConfig {
    /// Sphere refinement for `n = 20·4^r` unknowns.
    pub fn refinement_for(n: usize) -> Result<usize> {
        (0..=MAX_REFINEMENT)
            .find(|&r| 20 * 4usize.pow(r as u32) == n)
            .ok_or_else(|| BenchError::Config(format!("n = {n} is not 20·4^r for r ≤ {MAX_REFINEMENT}")))
    }

    pub fn compression(&self) -> Option<Compression> {
        self.scheme.codec().map(|codec| Compression { codec, valr: self.valr })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.geometry.is_none() && self.refinement > MAX_REFINEMENT {
            return bad(format!("refinement {} exceeds {MAX_REFINEMENT}", self.refinement));
        }
        for (name, v) in [("eps", self.eps), ("ref-eps", self.ref_eps)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if self.n_min == 0 || self.blr_p == 0 {
            return bad("nmin and blr-p must be positive".into());
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.valr && self.scheme == Scheme::None {
            return bad("valr needs a compression scheme".into());
        }
        if let Some(v) = self.variant {
            if v.format_tag() != self.format.container_tag() {
                return bad(format!("variant {v} does not run on format {}", self.format));
            }
        }
        Ok(())
    }

    /// Routines a campaign runs.
    pub fn variants(&self) -> Vec<Variant> {
        match self.variant {
            Some(v) => vec![v],
            None => Variant::for_format(self.format.container_tag()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in FormatKind::ALL {
            assert_eq!(f.name().parse::<FormatKind>().unwrap(), f);
        }
        for s in Scheme::ALL {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert!("H".parse::<FormatKind>().is_err());
        assert!("zfp".parse::<Scheme>().is_err());
    }

    #[test]
    fn variants_follow_format() {
        let c = BenchConfig { format: FormatKind::Hodlr, ..BenchConfig::default() };
        assert_eq!(c.variants(), Variant::for_format(0));
        let c = BenchConfig { format: FormatKind::H2, variant: Some(Variant::NestedMutex), ..BenchConfig::default() };
        assert_eq!(c.variants(), vec![Variant::NestedMutex]);
        c.validate().unwrap();
    }

    #[test]
    fn refinement_from_unknowns() {
        assert_eq!(BenchConfig::refinement_for(20).unwrap(), 0);
        assert_eq!(BenchConfig::refinement_for(20480).unwrap(), 5);
        assert!(BenchConfig::refinement_for(0).is_err());
    }
}
