use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Largest supported icosahedron refinement (20·4⁸ = 1,310,720 triangles).
pub const MAX_REFINEMENT: usize = 8;

/// Triangle centroids and areas of a triangulated surface.
///
/// Centroids are the collocation points of the model problem, areas the
/// quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl Geometry {
    pub fn new(points: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), actual: weights.len() });
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Binary layout: `n` as u64, then `n` records of four f64 (x, y, z,
    /// weight), all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        for (p, w) in self.points.iter().zip(&self.weights) {
            for v in [p[0], p[1], p[2], *w] {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            let mut rec = [0.0; 4];
            for v in &mut rec {
                input.read_exact(&mut word)?;
                *v = f64::from_le_bytes(word);
            }
            points.push([rec[0], rec[1], rec[2]]);
            weights.push(rec[3]);
        }
        Ok(Self { points, weights })
    }

    /// Text layout: first line `n`, then one `x y z weight` line per point.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.len())?;
        for (p, w) in self.points.iter().zip(&self.weights) {
            writeln!(out, "{:e} {:e} {:e} {:e}", p[0], p[1], p[2], w)?;
        }
        Ok(())
    }

    pub fn read_text<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty geometry file".into()))??;
        let n: usize = header.trim().parse().map_err(|_| Error::Format(format!("bad count {header:?}")))?;
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines.next().ok_or_else(|| Error::Format("truncated geometry file".into()))??;
            let rec: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Format(format!("bad number {s:?}"))))
                .collect::<Result<_>>()?;
            if rec.len() != 4 {
                return Err(Error::Format(format!("expected 4 fields, got {}", rec.len())));
            }
            points.push([rec[0], rec[1], rec[2]]);
            weights.push(rec[3]);
        }
        Ok(Self { points, weights })
    }

    /// Writes text when the extension is `.txt`, binary otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(std::fs::File::create(path)?);
        if is_text(path) {
            self.write_text(file)
        } else {
            self.write_binary(file)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = BufReader::new(std::fs::File::open(path)?);
        if is_text(path) {
            Self::read_text(file)
        } else {
            Self::read_binary(file)
        }
    }
}

fn is_text(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "txt")
}

type Tri = [[f64; 3]; 3];

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / r, p[1] / r, p[2] / r]
}

fn midpoint(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    normalize([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0])
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn icosahedron() -> Vec<Tri> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let v: Vec<[f64; 3]> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    const FACES: [[usize; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    FACES.iter().map(|f| [v[f[0]], v[f[1]], v[f[2]]]).collect()
}

/// Triangulates the unit sphere by `refinement` rounds of 4-fold
/// subdivision of an inscribed icosahedron, giving `20·4^refinement`
/// triangles.
pub fn make_sphere_geometry(refinement: usize) -> Result<Geometry> {
    if refinement > MAX_REFINEMENT {
        return Err(Error::GeometryTooLarge(refinement));
    }
    let mut tris = icosahedron();
    for _ in 0..refinement {
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let (ab, bc, ca) = (midpoint(a, b), midpoint(b, c), midpoint(c, a));
            next.push([a, ab, ca]);
            next.push([ab, b, bc]);
            next.push([ca, bc, c]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    let mut points = Vec::with_capacity(tris.len());
    let mut weights = Vec::with_capacity(tris.len());
    for [a, b, c] in tris {
        points.push([
            (a[0] + b[0] + c[0]) / 3.0,
            (a[1] + b[1] + c[1]) / 3.0,
            (a[2] + b[2] + c[2]) / 3.0,
        ]);
        let n = cross(sub(b, a), sub(c, a));
        weights.push(0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt());
    }
    Ok(Geometry { points, weights })
}
