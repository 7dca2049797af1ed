//! Sphere-embedding edge selector.
//!
//! Each predicate embedding is mapped to a sphere (center, radius) by a pair
//! of small networks. The probability that `p` entails `q` is the fraction of
//! `p`'s diameter along the line between the centers that lies inside `q`'s
//! sphere; a sigmoid-smoothed version of the same margin ranks candidate
//! edges and is used as the training score.

pub mod audit;
pub mod head;
pub mod topk;
pub mod train;

use alloc::vec::Vec;

pub use audit::{check_triple, theorem_audit, AuditReport, TripleOutcome};
pub use head::{head_gradient, head_loss, FPlus, GradExample, HeadDims, SphereHead, RADIUS_FLOOR};
pub use topk::{merge_top, select_shard, select_top_edges, ScoredEdge};
pub use train::{train_head, LabeledVectors, SelectorTrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sphere radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("training data needs both positive and negative pairs")]
    DegenerateData,
    #[error("invalid selector config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateSphere {
    center: Vec<f64>,
    radius: f64,
}

impl PredicateSphere {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, SelectorError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(SelectorError::InvalidRadius(radius));
        }
        Ok(PredicateSphere { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

pub fn center_distance(a: &PredicateSphere, b: &PredicateSphere) -> f64 {
    let sq: f64 = a.center.iter().zip(&b.center).map(|(x, y)| (x - y) * (x - y)).sum();
    libm::sqrt(sq)
}

/// The interpolating middle branch of [`overlap_prob`], valid for
/// `d - r_p < r_q < d + r_p`.
pub fn overlap_middle(r_p: f64, r_q: f64, d: f64) -> f64 {
    (r_p + r_q - d) / (2.0 * r_p)
}

/// Overlap probability from radii and center distance. Branches are taken
/// on the margin `r_q - d` so that this and [`score_from`] see the same
/// quantity.
pub fn overlap_from(r_p: f64, r_q: f64, d: f64) -> f64 {
    let margin = r_q - d;
    if margin <= -r_p {
        0.0
    } else if margin >= r_p {
        1.0
    } else {
        (r_p + margin) / (2.0 * r_p)
    }
}

/// Probability that the premise sphere `sp` entails the hypothesis `sq`.
pub fn overlap_prob(sp: &PredicateSphere, sq: &PredicateSphere) -> f64 {
    overlap_from(sp.radius, sq.radius, center_distance(sp, sq))
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub fn score_from(r_p: f64, r_q: f64, d: f64) -> f64 {
    sigmoid(2.0 * (r_q - d) / r_p)
}

/// Smoothed, strictly increasing counterpart of [`overlap_prob`].
pub fn selector_score(sp: &PredicateSphere, sq: &PredicateSphere) -> f64 {
    score_from(sp.radius, sq.radius, center_distance(sp, sq))
}
