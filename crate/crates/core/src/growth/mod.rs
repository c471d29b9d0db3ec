//! The growth pipeline: rich tori, the Larsen–Pink diagnostic, diagonal
//! segments and their lifts, commutator ladders, ball filling and the
//! multi-scale certificates.

mod certificate;
mod larsen_pink;
mod segment;
mod torus;

pub use certificate::{
    ball_fill, commutator_ladder, deepest_dip, full_segment, multiscale_certificate, scale_descent, BallFill,
    DescentStep, DescentTrace, DescentVerdict, GrowthCertificate, LadderStep, Segment,
};
pub use larsen_pink::{larsen_pink_diag, LarsenPinkReport, DIAGNOSTIC_SLACK};
pub use segment::{
    detect_segment, diagonal_inputs, lift_segment, segment_frontier, Combo, DiagonalInputs, FrontierPoint,
    LiftedPoint, SegmentSample, SegmentWitness, DEFAULT_COMBO_BUDGET,
};
pub use torus::{
    pulled_back, rich_torus, torus_distance, torus_fiber_check, FiberOptions, FiberReport, RichTorusResult,
    REGULAR_SCORE_MIN,
};

/// Dimension of the groups handled here.
pub const GROUP_DIM: usize = 3;

/// `log(count) / log(base)`, with `0` when either side is degenerate.
pub(crate) fn log_ratio(count: usize, base: usize) -> f64 {
    if count <= 1 || base <= 1 {
        0.0
    } else {
        (count as f64).ln() / (base as f64).ln()
    }
}
