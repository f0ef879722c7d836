use super::Kernel;
use crate::cluster::Geometry;

/// Distance regularization constant ρ of the one-point rule.
pub const REGULARIZATION: f64 = 0.5;

/// One-point centroid quadrature of the single layer potential Galerkin
/// entry, `wᵢ·wⱼ / max(‖cᵢ − cⱼ‖, ρ·(√wᵢ + √wⱼ))`.
///
/// The 1/(4π) factor is omitted; all error measures are relative.
#[inline]
pub fn slp_entry(geom: &Geometry, i: usize, j: usize) -> f64 {
    let (ci, cj) = (geom.points[i], geom.points[j]);
    let (wi, wj) = (geom.weights[i], geom.weights[j]);
    let d = ((ci[0] - cj[0]).powi(2) + (ci[1] - cj[1]).powi(2) + (ci[2] - cj[2]).powi(2)).sqrt();
    wi * wj / d.max(REGULARIZATION * (wi.sqrt() + wj.sqrt()))
}

pub struct SlpKernel<'a> {
    geom: &'a Geometry,
}

impl<'a> SlpKernel<'a> {
    pub fn new(geom: &'a Geometry) -> Self {
        Self { geom }
    }
}

impl Kernel for SlpKernel<'_> {
    fn n(&self) -> usize {
        self.geom.len()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        slp_entry(self.geom, i, j)
    }
}
