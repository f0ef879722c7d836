use super::ClusterNode;

/// Decides whether the block `t × s` is stored in low-rank form.
pub trait Admissibility: Sync {
    fn is_admissible(&self, t: &ClusterNode, s: &ClusterNode) -> bool;
}

impl<F> Admissibility for F
where
    F: Fn(&ClusterNode, &ClusterNode) -> bool + Sync,
{
    fn is_admissible(&self, t: &ClusterNode, s: &ClusterNode) -> bool {
        self(t, s)
    }
}

/// `min(diam t, diam s) ≤ η · dist(t, s)` on bounding boxes.
#[derive(Clone, Copy, Debug)]
pub struct StandardAdmissibility {
    pub eta: f64,
}

impl Admissibility for StandardAdmissibility {
    fn is_admissible(&self, t: &ClusterNode, s: &ClusterNode) -> bool {
        admissible_standard(t, s, self.eta)
    }
}

/// Every off-diagonal block is admissible (HODLR / BLR).
#[derive(Clone, Copy, Debug)]
pub struct WeakAdmissibility;

impl Admissibility for WeakAdmissibility {
    fn is_admissible(&self, t: &ClusterNode, s: &ClusterNode) -> bool {
        admissible_weak(t, s)
    }
}

pub fn admissible_standard(t: &ClusterNode, s: &ClusterNode, eta: f64) -> bool {
    let dist = t.bbox.dist(&s.bbox);
    dist > 0.0 && t.bbox.diam().min(s.bbox.diam()) <= eta * dist
}

pub fn admissible_weak(t: &ClusterNode, s: &ClusterNode) -> bool {
    t.range != s.range
}
