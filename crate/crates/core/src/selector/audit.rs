//! Soft-transitivity audit for the overlap probability: whenever
//! Pr(a→b) > ε and Pr(b→c) > ε, Pr(a→c) must exceed ε − (1−ε)·r_b/r_a.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{overlap_prob, PredicateSphere};

/// Numerical slack granted to the lower bound.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleOutcome {
    /// One of the two premises is at or below the threshold.
    NotQualifying,
    Holds,
    Violated,
}

pub fn check_triple(a: &PredicateSphere, b: &PredicateSphere, c: &PredicateSphere, eps: f64) -> TripleOutcome {
    if overlap_prob(a, b) <= eps || overlap_prob(b, c) <= eps {
        return TripleOutcome::NotQualifying;
    }
    let bound = eps - (1.0 - eps) * b.radius() / a.radius();
    if overlap_prob(a, c) <= bound - AUDIT_SLACK {
        TripleOutcome::Violated
    } else {
        TripleOutcome::Holds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AuditReport {
    pub examined: usize,
    pub qualifying: usize,
    pub violations: usize,
}

/// Checks ordered triples of distinct spheres: every triple when there are
/// at most `trials` of them, otherwise `trials` seeded random draws.
pub fn theorem_audit(spheres: &[PredicateSphere], eps: f64, trials: usize, seed: u64) -> AuditReport {
    let n = spheres.len();
    let mut report = AuditReport::default();
    let mut tally = |i: usize, j: usize, k: usize| {
        report.examined += 1;
        match check_triple(&spheres[i], &spheres[j], &spheres[k], eps) {
            TripleOutcome::NotQualifying => {}
            TripleOutcome::Holds => report.qualifying += 1,
            TripleOutcome::Violated => {
                report.qualifying += 1;
                report.violations += 1;
            }
        }
    };
    if n < 3 || trials == 0 {
        return report;
    }
    let all = n.checked_mul(n - 1).and_then(|x| x.checked_mul(n - 2));
    if all.is_some_and(|all| all <= trials) {
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                for k in (0..n).filter(|&k| k != i && k != j) {
                    tally(i, j, k);
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..trials {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let mut k = rng.random_range(0..n - 2);
            for taken in [i.min(j), i.max(j)] {
                if k >= taken {
                    k += 1;
                }
            }
            tally(i, j, k);
        }
    }
    report
}
