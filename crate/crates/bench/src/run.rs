use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use hmat::cluster::{
    build_block_tree, build_cluster_tree, flat_clustering, make_sphere_geometry, BlockKind, BlockTree, ClusterTree, Geometry, StandardAdmissibility,
    WeakAdmissibility,
};
use hmat::formats::{build_h2, build_hmatrix, build_uniform, AnyMatrix, Footprint};
use hmat::kernel::{permuted_full, SlpKernel};
use hmat::mvm::{MvmCost, Variant};
use hmat::par::with_threads;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{BenchConfig, FormatKind};
use crate::estimate::{blockwise_error, frobenius_error, probe_error, random_vector, PROBES};
use crate::report::{BenchReport, ErrorInfo, MemoryInfo, MvmTiming, StructureInfo};
use crate::{BenchError, Result};

/// Largest `n` verified against the brute-force matrix.
pub const DENSE_LIMIT: usize = 2048;

/// A built matrix with its source problem.
pub struct Built {
    pub geometry: Geometry,
    pub tree: Arc<ClusterTree>,
    pub blocks: Arc<BlockTree>,
    /// The uncompressed matrix.
    pub plain: AnyMatrix,
    /// The compressed matrix when the configuration asks for a scheme.
    pub compressed: Option<AnyMatrix>,
    pub build_s: f64,
    pub compress_s: f64,
}

impl Built {
    /// The matrix the campaign runs on.
    pub fn matrix(&self) -> &AnyMatrix {
        self.compressed.as_ref().unwrap_or(&self.plain)
    }
}

fn parallel(config: &BenchConfig) -> bool {
    config.threads != 1
}

fn geometry(config: &BenchConfig) -> Result<Geometry> {
    Ok(match &config.geometry {
        Some(path) => Geometry::load(path)?,
        None => make_sphere_geometry(config.refinement)?,
    })
}

fn partition(config: &BenchConfig, geom: &Geometry) -> Result<(Arc<ClusterTree>, Arc<BlockTree>)> {
    let tree = match config.format {
        FormatKind::Blr => flat_clustering(geom, config.blr_p)?,
        _ => build_cluster_tree(geom, config.n_min)?,
    };
    let blocks = match config.format {
        FormatKind::Hodlr | FormatKind::Blr => build_block_tree(&tree, &WeakAdmissibility),
        _ => build_block_tree(&tree, &StandardAdmissibility { eta: config.eta }),
    };
    Ok((Arc::new(tree), Arc::new(blocks)))
}

/// Geometry, trees, the requested format and its optional compression.
pub fn build(config: &BenchConfig) -> Result<Built> {
    config.validate()?;
    let par = parallel(config);
    with_threads(config.threads, || {
        let geometry = geometry(config)?;
        let (tree, blocks) = partition(config, &geometry)?;
        let start = Instant::now();
        let h = build_hmatrix(&SlpKernel::new(&geometry), tree.clone(), blocks.clone(), config.eps, par)?;
        let plain = match config.format {
            FormatKind::H | FormatKind::Hodlr | FormatKind::Blr => AnyMatrix::H(h),
            FormatKind::Uh => AnyMatrix::Uniform(build_uniform(&h, config.eps, par)?),
            FormatKind::H2 => {
                let u = build_uniform(&h, config.eps, par)?;
                drop(h);
                AnyMatrix::H2(build_h2(&u, config.eps, par)?)
            }
        };
        let build_s = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let compressed = config.compression().map(|c| plain.compress(c, par)).transpose()?;
        let compress_s = if compressed.is_some() { start.elapsed().as_secs_f64() } else { 0.0 };
        Ok(Built { geometry, tree, blocks, plain, compressed, build_s, compress_s })
    })
}

fn structure_info(b: &Built) -> StructureInfo {
    StructureInfo {
        n: b.tree.n(),
        clusters: b.tree.len(),
        depth: b.tree.depth(),
        leaf_clusters: b.tree.leaves().len(),
        dense_blocks: b.blocks.count(BlockKind::Inadmissible),
        lowrank_blocks: b.blocks.count(BlockKind::Admissible),
    }
}

fn memory_info(m: &AnyMatrix) -> MemoryInfo {
    let stored = m.footprint(true);
    let plain = m.footprint(false);
    MemoryInfo {
        dense: stored.dense,
        lowrank: stored.lowrank,
        bases: stored.bases,
        transfer: stored.transfer,
        structure: stored.structure,
        total: stored.total(),
        payload: stored.payload(),
        uncompressed_payload: plain.payload(),
        uncompressed_total: plain.total(),
        per_dof: stored.total() as f64 / m.n() as f64,
    }
}

fn report(command: &str, config: &BenchConfig, b: &Built) -> BenchReport {
    let memory = memory_info(b.matrix());
    BenchReport {
        command: command.into(),
        config: config.clone(),
        structure: structure_info(b),
        build_s: b.build_s,
        compress_s: b.compress_s,
        compression_ratio: memory.uncompressed_payload as f64 / memory.payload as f64,
        memory,
        error: None,
        mvm: Vec::new(),
    }
}

/// Builds, optionally saves the container file, and reports memory.
pub fn cmd_build(config: &BenchConfig, save: Option<&Path>) -> Result<BenchReport> {
    let b = build(config)?;
    if let Some(path) = save {
        b.matrix().save(path)?;
    }
    Ok(report("build", config, &b))
}

/// Error of the configured matrix against the uncompressed H-matrix at
/// `ref_eps` and, for `n ≤ DENSE_LIMIT`, against the brute-force matrix.
pub fn cmd_verify(config: &BenchConfig) -> Result<BenchReport> {
    let b = build(config)?;
    let mut out = report("verify", config, &b);
    let par = parallel(config);
    let m = b.matrix();
    let same_reference = config.ref_eps == config.eps && b.plain.tag() == 0;
    let error = with_threads(config.threads, || -> Result<ErrorInfo> {
        let kernel = SlpKernel::new(&b.geometry);
        let rebuilt;
        let reference = if same_reference {
            &b.plain
        } else {
            rebuilt = AnyMatrix::H(build_hmatrix(&kernel, b.tree.clone(), b.blocks.clone(), config.ref_eps, par)?);
            &rebuilt
        };
        if m.n() <= DENSE_LIMIT {
            let exact = permuted_full(&kernel, &b.tree);
            Ok(ErrorInfo {
                metric: "frobenius".into(),
                reference: frobenius_error(m, &reference.to_dense()),
                dense: Some(frobenius_error(m, &exact)),
                blockwise: Some(blockwise_error(m, &kernel)),
            })
        } else {
            Ok(ErrorInfo { metric: "probe".into(), reference: probe_error(m, reference, PROBES, config.seed, par)?, dense: None, blockwise: None })
        }
    })?;
    out.error = Some(error);
    Ok(out)
}

fn median(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

/// One warmup, then `reps` timed products into a zeroed `y`. Returns the
/// sorted times and the last `y`.
fn time_variant(v: Variant, m: &AnyMatrix, x: &[f64], reps: usize, parallel: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut y = vec![0.0; x.len()];
    v.apply(1.0, m, x, &mut y, parallel)?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        y.fill(0.0);
        let start = Instant::now();
        v.apply(1.0, m, x, &mut y, parallel)?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok((times, y))
}

/// Times every configured routine; compressed runs are compared with the
/// uncompressed matrix of the same format.
pub fn cmd_bench_mvm(config: &BenchConfig) -> Result<BenchReport> {
    let b = build(config)?;
    let mut out = report("bench-mvm", config, &b);
    let par = parallel(config);
    let m = b.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = random_vector(m.n(), &mut rng);
    let work = m.mvm_work();
    out.mvm = with_threads(config.threads, || {
        config
            .variants()
            .into_iter()
            .map(|v| {
                let (times, y) = time_variant(v, m, &x, config.reps, par)?;
                let med = median(&times);
                let speedup = match &b.compressed {
                    Some(_) => median(&time_variant(v, &b.plain, &x, config.reps, par)?.0) / med,
                    None => 1.0,
                };
                Ok(MvmTiming {
                    variant: v.to_string(),
                    reps: config.reps,
                    min_s: times[0],
                    median_s: med,
                    speedup,
                    flops: work.flops,
                    bytes: work.bytes,
                    intensity: work.intensity(),
                    checksum: y.iter().sum(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Values are sphere refinements.
    N,
    Eps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Campaign {
    Build,
    Verify,
    BenchMvm,
}

/// Runs `campaign` once per axis value, one report each.
pub fn cmd_sweep(template: &BenchConfig, axis: Axis, values: &[f64], campaign: Campaign) -> Result<Vec<BenchReport>> {
    values
        .iter()
        .map(|&v| {
            let mut c = template.clone();
            match axis {
                Axis::N => {
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(BenchError::Config(format!("refinement {v} is not a non-negative integer")));
                    }
                    c.refinement = v as usize;
                }
                Axis::Eps => {
                    if c.ref_eps == c.eps {
                        c.ref_eps = v;
                    }
                    c.eps = v;
                }
            }
            match campaign {
                Campaign::Build => cmd_build(&c, None),
                Campaign::Verify => cmd_verify(&c),
                Campaign::BenchMvm => cmd_bench_mvm(&c),
            }
        })
        .collect()
}
