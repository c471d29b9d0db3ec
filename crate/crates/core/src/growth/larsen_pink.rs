use super::{log_ratio, GROUP_DIM};
use crate::chunk::ChunkMap;
use crate::net::{restrict_near, DeltaNet, Target};

/// Default slack on exponent comparisons.
pub const DIAGNOSTIC_SLACK: f64 = 0.15;

#[derive(Clone, Debug)]
pub struct LarsenPinkReport {
    /// `N(A ∩ M^(delta), delta)`.
    pub lhs: usize,
    pub n_a: usize,
    /// `log(lhs) / log(n_a)`.
    pub rhs_exponent: f64,
    /// `1 - 1/d`.
    pub bound: f64,
    pub slack: f64,
    pub within_bound: bool,
    pub chunk_dim: usize,
}

/// Measures how much of `A` concentrates near the chunk `M`.
pub fn larsen_pink_diag(a: &DeltaNet, m: &ChunkMap, slack: f64) -> LarsenPinkReport {
    let delta = a.delta();
    let near = restrict_near(a, &Target::Chunk(m.clone()), delta);
    let lhs = near.covering_number(delta).n_cover;
    let n_a = a.covering_number(delta).n_cover;
    let rhs_exponent = log_ratio(lhs, n_a);
    let bound = 1.0 - 1.0 / GROUP_DIM as f64;
    LarsenPinkReport {
        lhs,
        n_a,
        rhs_exponent,
        bound,
        slack,
        within_bound: rhs_exponent <= bound + slack,
        chunk_dim: m.chunk_dim(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunk::conjugacy_chunk;
    use crate::group::{exp_unchecked, GroupElement, GroupTag, LieVector};
    use crate::net::build_net;
    use crate::subspace::Subspace;
    use nalgebra::DVector;

    #[test]
    fn identity_alone() {
        let tag = GroupTag::Su2;
        let a = build_net(&[GroupElement::identity(tag)], 0.01).unwrap();
        let a0 = exp_unchecked(&LieVector::new(tag, [0.3, 0.0, 0.0]));
        let r = larsen_pink_diag(&a, &conjugacy_chunk(&a0).unwrap(), DIAGNOSTIC_SLACK);
        assert_eq!(r.lhs, 1);
        assert_eq!(r.rhs_exponent, 0.0);
        assert!(r.within_bound);
    }

    #[test]
    fn set_on_the_chunk_violates_the_bound() {
        let tag = GroupTag::Sl2r;
        let delta = 2f64.powi(-6);
        let mut pts = Vec::new();
        for i in -8..=8 {
            for j in -8..=8 {
                pts.push(exp_unchecked(&LieVector::new(tag, [0.0, 0.6 * delta * i as f64, 0.6 * delta * j as f64])));
            }
        }
        let a = build_net(&pts, delta).unwrap();
        let plane = Subspace::span(3, &[DVector::from_row_slice(&[0.0, 1.0, 0.0]), DVector::from_row_slice(&[0.0, 0.0, 1.0])]);
        let m = ChunkMap::linear(tag, plane, 0.4).unwrap();
        let r = larsen_pink_diag(&a, &m, DIAGNOSTIC_SLACK);
        assert_eq!(r.lhs, r.n_a);
        assert!((r.rhs_exponent - 1.0).abs() < 1e-12);
        assert!(!r.within_bound);
    }
}
