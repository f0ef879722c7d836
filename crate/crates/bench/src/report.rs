//! Report rows. JSON nests the sections, CSV flattens one row per timed
//! routine (one row when nothing was timed). Both carry the same values.

use std::io::Write;

use serde::Serialize;

use crate::config::BenchConfig;
use crate::{BenchError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureInfo {
    pub n: usize,
    pub clusters: usize,
    pub depth: usize,
    pub leaf_clusters: usize,
    pub dense_blocks: usize,
    pub lowrank_blocks: usize,
}

/// Bytes of the matrix as stored, plus the uncompressed baseline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemoryInfo {
    pub dense: usize,
    pub lowrank: usize,
    pub bases: usize,
    pub transfer: usize,
    pub structure: usize,
    pub total: usize,
    pub payload: usize,
    pub uncompressed_payload: usize,
    pub uncompressed_total: usize,
    pub per_dof: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorInfo {
    /// `frobenius` (dense evaluation) or `probe` (randomized estimate).
    pub metric: String,
    /// Relative error against the uncompressed H-matrix at `ref_eps`.
    pub reference: f64,
    /// Relative Frobenius error against the brute-force matrix, small n only.
    pub dense: Option<f64>,
    /// Largest relative Frobenius error of a single leaf block, small n only.
    pub blockwise: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MvmTiming {
    pub variant: String,
    pub reps: usize,
    pub min_s: f64,
    pub median_s: f64,
    /// Median of the uncompressed same-format run over this one.
    pub speedup: f64,
    pub flops: f64,
    pub bytes: f64,
    pub intensity: f64,
    /// Sum of the entries of `y`.
    pub checksum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub command: String,
    pub config: BenchConfig,
    pub structure: StructureInfo,
    pub build_s: f64,
    pub compress_s: f64,
    pub memory: MemoryInfo,
    pub compression_ratio: f64,
    pub error: Option<ErrorInfo>,
    pub mvm: Vec<MvmTiming>,
}

impl BenchReport {
    /// Every numeric field is finite.
    pub fn check_finite(&self) -> Result<()> {
        let mut values = vec![
            ("eps", self.config.eps),
            ("eta", self.config.eta),
            ("ref_eps", self.config.ref_eps),
            ("build_s", self.build_s),
            ("compress_s", self.compress_s),
            ("per_dof", self.memory.per_dof),
            ("compression_ratio", self.compression_ratio),
        ];
        if let Some(e) = &self.error {
            values.push(("error.reference", e.reference));
            values.extend(e.dense.map(|v| ("error.dense", v)));
            values.extend(e.blockwise.map(|v| ("error.blockwise", v)));
        }
        for t in &self.mvm {
            values.extend([
                ("min_s", t.min_s),
                ("median_s", t.median_s),
                ("speedup", t.speedup),
                ("flops", t.flops),
                ("bytes", t.bytes),
                ("intensity", t.intensity),
                ("checksum", t.checksum),
            ]);
        }
        match values.into_iter().find(|(_, v)| !v.is_finite()) {
            Some((name, v)) => Err(BenchError::Report(format!("field {name} is not finite ({v})"))),
            None => Ok(()),
        }
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let timings: Vec<Option<&MvmTiming>> = if self.mvm.is_empty() { vec![None] } else { self.mvm.iter().map(Some).collect() };
        timings.into_iter().map(|t| CsvRow::new(self, t)).collect()
    }
}

/// Flat CSV rendering of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    pub command: String,
    pub refinement: usize,
    pub format: String,
    pub eps: f64,
    pub eta: f64,
    pub n_min: usize,
    pub blr_p: usize,
    pub scheme: String,
    pub valr: bool,
    pub variant: String,
    pub threads: usize,
    pub reps: usize,
    pub seed: u64,
    pub ref_eps: f64,
    pub geometry: String,
    pub n: usize,
    pub clusters: usize,
    pub depth: usize,
    pub leaf_clusters: usize,
    pub dense_blocks: usize,
    pub lowrank_blocks: usize,
    pub build_s: f64,
    pub compress_s: f64,
    pub mem_dense: usize,
    pub mem_lowrank: usize,
    pub mem_bases: usize,
    pub mem_transfer: usize,
    pub mem_structure: usize,
    pub mem_total: usize,
    pub mem_payload: usize,
    pub mem_uncompressed_payload: usize,
    pub mem_uncompressed_total: usize,
    pub mem_per_dof: f64,
    pub compression_ratio: f64,
    pub error_metric: Option<String>,
    pub error_reference: Option<f64>,
    pub error_dense: Option<f64>,
    pub error_blockwise: Option<f64>,
    pub mvm_variant: Option<String>,
    pub mvm_reps: Option<usize>,
    pub mvm_min_s: Option<f64>,
    pub mvm_median_s: Option<f64>,
    pub mvm_speedup: Option<f64>,
    pub mvm_flops: Option<f64>,
    pub mvm_bytes: Option<f64>,
    pub mvm_intensity: Option<f64>,
    pub mvm_checksum: Option<f64>,
}

impl CsvRow {
    fn new(r: &BenchReport, t: Option<&MvmTiming>) -> Self {
        let c = &r.config;
        let (s, m) = (&r.structure, &r.memory);
        Self {
            command: r.command.clone(),
            refinement: c.refinement,
            format: c.format.to_string(),
            eps: c.eps,
            eta: c.eta,
            n_min: c.n_min,
            blr_p: c.blr_p,
            scheme: c.scheme.to_string(),
            valr: c.valr,
            variant: c.variant.map_or("all".into(), |v| v.to_string()),
            threads: c.threads,
            reps: c.reps,
            seed: c.seed,
            ref_eps: c.ref_eps,
            geometry: c.geometry.as_ref().map_or(String::new(), |p| p.display().to_string()),
            n: s.n,
            clusters: s.clusters,
            depth: s.depth,
            leaf_clusters: s.leaf_clusters,
            dense_blocks: s.dense_blocks,
            lowrank_blocks: s.lowrank_blocks,
            build_s: r.build_s,
            compress_s: r.compress_s,
            mem_dense: m.dense,
            mem_lowrank: m.lowrank,
            mem_bases: m.bases,
            mem_transfer: m.transfer,
            mem_structure: m.structure,
            mem_total: m.total,
            mem_payload: m.payload,
            mem_uncompressed_payload: m.uncompressed_payload,
            mem_uncompressed_total: m.uncompressed_total,
            mem_per_dof: m.per_dof,
            compression_ratio: r.compression_ratio,
            error_metric: r.error.as_ref().map(|e| e.metric.clone()),
            error_reference: r.error.as_ref().map(|e| e.reference),
            error_dense: r.error.as_ref().and_then(|e| e.dense),
            error_blockwise: r.error.as_ref().and_then(|e| e.blockwise),
            mvm_variant: t.map(|t| t.variant.clone()),
            mvm_reps: t.map(|t| t.reps),
            mvm_min_s: t.map(|t| t.min_s),
            mvm_median_s: t.map(|t| t.median_s),
            mvm_speedup: t.map(|t| t.speedup),
            mvm_flops: t.map(|t| t.flops),
            mvm_bytes: t.map(|t| t.bytes),
            mvm_intensity: t.map(|t| t.intensity),
            mvm_checksum: t.map(|t| t.checksum),
        }
    }
}

pub fn write_csv<W: Write>(reports: &[BenchReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        r.check_finite()?;
        for row in r.csv_rows() {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_json(reports: &[BenchReport]) -> Result<String> {
    for r in reports {
        r.check_finite()?;
    }
    Ok(serde_json::to_string_pretty(reports)?)
}
