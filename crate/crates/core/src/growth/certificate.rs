//! Commutator ladders, ball filling, multi-scale certificates and the scale
//! descent loop.

use super::GROUP_DIM;
use crate::error::{Error, Result};
use crate::escape::{escape_word, DEFAULT_BEAM_WIDTH};
use crate::group::{adjoint, exp_unchecked, log_unchecked, GroupElement, LieVector, R_INJ};
use crate::net::{build_net, cover_count, product_set, scale_profile, DeltaNet};
use crate::subspace::{graded_separations, Subspace};
use nalgebra::{DVector, Matrix3};

/// Escape scores below this mean `A` cannot move the ladder.
const PIVOT_SCORE_MIN: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LadderStep {
    pub element: GroupElement,
    /// `d(a_k, 1)`.
    pub distance: f64,
    /// Word in `A` used to conjugate `a_k` (empty for the last step).
    pub pivot: Vec<usize>,
    pub pivot_score: f64,
}

fn log_norm(g: &GroupElement) -> f64 {
    log_unchecked(g).map(|v| v.norm()).unwrap_or(f64::INFINITY)
}

/// Kernel of `Ad a - 1`.
fn centralizer_algebra(a: &GroupElement) -> Subspace {
    let m = adjoint(a) - Matrix3::identity();
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let scale = svd.singular_values.max().max(1.0);
    let kernel: Vec<DVector<f64>> = (0..3)
        .filter(|&i| svd.singular_values[i] <= 1e-10 * scale)
        .map(|i| DVector::from_iterator(3, vt.row(i).iter().copied()))
        .collect();
    Subspace::span(3, &kernel)
}

/// `a_{k+1} = [a_0, x_k a_k x_k^-1]`, with `x_k` a word in `A` pushing
/// `log a_k` away from the centralizer algebra of `a_0`.
pub fn commutator_ladder(a: &DeltaNet, a0: &GroupElement, k_max: usize, max_len: usize) -> Result<Vec<LadderStep>> {
    let tag = a.tag();
    let step = |g: GroupElement| LadderStep {
        distance: log_norm(&g),
        element: g,
        pivot: Vec::new(),
        pivot_score: 0.0,
    };
    if log_norm(a0) == 0.0 {
        return Ok((0..=k_max).map(|_| step(GroupElement::identity(tag))).collect());
    }
    let w = centralizer_algebra(a0);
    let mut ladder = vec![step(*a0)];
    for _ in 0..k_max {
        let ak = ladder.last().expect("nonempty").element;
        let x = log_unchecked(&ak)?;
        let esc = escape_word(a, &x, &w, max_len, DEFAULT_BEAM_WIDTH);
        if esc.score < PIVOT_SCORE_MIN {
            return Err(Error::PivotFailure { score: esc.score });
        }
        let last = ladder.last_mut().expect("nonempty");
        last.pivot = esc.word.clone();
        last.pivot_score = esc.score;
        let next = a0.commutator(&esc.element.conjugate(&ak));
        ladder.push(step(next));
    }
    Ok(ladder)
}

/// A direction with sampled times.
#[derive(Clone, Debug)]
pub struct Segment {
    pub direction: LieVector,
    pub times: Vec<f64>,
}

/// Times `0, delta/2, ...` up to `delta^(1 - tau)`.
pub fn full_segment(direction: LieVector, tau: f64, delta: f64) -> Segment {
    let top = delta.powf(1.0 - tau);
    let n = (top / (delta / 2.0)).ceil() as usize;
    let times = (0..=n).map(|k| top * k as f64 / n.max(1) as f64).collect();
    Segment { direction, times }
}

#[derive(Clone, Debug)]
pub struct BallFill {
    pub count: usize,
    /// `delta^(-k tau)` for `k` segments.
    pub expected: f64,
    pub dimension_drop: bool,
    pub min_separation: f64,
}

/// Covering number at `delta` of `{e^{t1 X1} e^{t2 X2} ...}` over the
/// sampled times; with `filter`, only products within `delta` of it count.
pub fn ball_fill(segments: &[Segment], tau: f64, delta: f64, filter: Option<&DeltaNet>) -> Result<BallFill> {
    let Some(first) = segments.first() else {
        return Err(Error::FrameDegenerate { separation: 0.0 });
    };
    let tag = first.direction.tag;
    let frame: Vec<DVector<f64>> = segments
        .iter()
        .map(|s| DVector::from_column_slice(s.direction.coords.as_slice()))
        .collect();
    let min_separation = graded_separations(&frame).into_iter().fold(f64::INFINITY, f64::min);
    if !(min_separation >= 1e-6) {
        return Err(Error::FrameDegenerate {
            separation: min_separation,
        });
    }
    let mut points = vec![GroupElement::identity(tag)];
    for seg in segments {
        let factors: Vec<GroupElement> = seg.times.iter().map(|&t| exp_unchecked(&(t * seg.direction))).collect();
        points = points.iter().flat_map(|p| factors.iter().map(move |f| *p * *f)).collect();
    }
    if let Some(net) = filter {
        points.retain(|p| net.find_near(p, delta).is_some());
    }
    let count = if points.is_empty() {
        0
    } else {
        build_net(&points, delta)?.covering_number(delta).n_cover
    };
    Ok(BallFill {
        count,
        expected: delta.powf(-(segments.len() as f64) * tau),
        dimension_drop: segments.len() < GROUP_DIM,
        min_separation,
    })
}

#[derive(Clone, Debug)]
pub struct GrowthCertificate {
    /// `delta_0 = delta, delta_k = delta^((1 - tau)^k)`.
    pub scales: Vec<f64>,
    /// `N(A ∩ B_{delta_k}, delta_{k-1})` for `k = 1..=K`.
    pub counts: Vec<usize>,
    pub product: u128,
    /// `log(product) / log(1/delta)`.
    pub exponent: f64,
    /// `d (1 - (1 - tau)^K)`.
    pub target: f64,
}

pub fn multiscale_certificate(a: &DeltaNet, tau: f64, k: usize) -> Result<GrowthCertificate> {
    let delta = a.delta();
    let scales: Vec<f64> = (0..=k).map(|i| delta.powf((1.0 - tau).powi(i as i32))).collect();
    let top = *scales.last().expect("nonempty");
    if top > R_INJ {
        return Err(Error::ScaleUnderflow { top });
    }
    let counts: Vec<usize> = (1..=k)
        .map(|i| {
            let inside: Vec<[f64; 3]> = a
                .coords()
                .iter()
                .filter(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() <= scales[i])
                .copied()
                .collect();
            cover_count(a.tag(), inside, scales[i - 1])
        })
        .collect();
    let product = counts.iter().fold(1u128, |acc, &c| acc * c as u128);
    let exponent = if product == 0 {
        f64::NEG_INFINITY
    } else {
        (product as f64).ln() / (1.0 / delta).ln()
    };
    Ok(GrowthCertificate {
        scales,
        counts,
        product,
        exponent,
        target: GROUP_DIM as f64 * (1.0 - (1.0 - tau).powi(k as i32)),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum DescentVerdict {
    Growth,
    /// No scale satisfies the dip condition.
    NoDip,
    /// The iteration bound `K = ceil(theta / eps3)` was passed.
    Exhausted,
}

#[derive(Clone, Debug)]
pub struct DescentStep {
    pub rho: f64,
    pub n_a: usize,
    pub n_aaa: usize,
    pub tripling: f64,
    /// `rho^(-eps3)`.
    pub threshold: f64,
    pub growth: bool,
    /// `delta^((eps3/theta)^k)`.
    pub scale_bound: f64,
    pub within_bound: bool,
    /// Whether `N(A, r) >= r^-kappa rho^eps3` at every profile scale `r >= rho`.
    pub lower_profile_ok: bool,
}

#[derive(Clone, Debug)]
pub struct DescentTrace {
    pub steps: Vec<DescentStep>,
    pub verdict: DescentVerdict,
    pub max_steps: usize,
}

/// Among scales `r > rho_k`, the one maximising `r^(-theta + k eps3) rho_k^eps3 / N(A, r)`
/// subject to that ratio being at least 1.
pub fn deepest_dip(
    scales: &[(f64, usize)],
    rho_k: f64,
    k: usize,
    theta: f64,
    eps3: f64,
) -> Option<(f64, usize)> {
    let mut best: Option<(f64, f64, usize)> = None;
    for &(r, n) in scales {
        if r <= rho_k * (1.0 + 1e-12) || n == 0 {
            continue;
        }
        let allowed = r.powf(-theta + k as f64 * eps3) * rho_k.powf(eps3);
        let ratio = allowed / n as f64;
        if ratio >= 1.0 && best.is_none_or(|b| ratio > b.0) {
            best = Some((ratio, r, n));
        }
    }
    best.map(|(_, r, n)| (r, n))
}

/// The scale descent: test tripling at `rho_k`; without growth move to the
/// deepest dip of the profile above `rho_k`.
///
/// Tripling at `rho_k` is measured on `A` coarsened to `rho_k`.
pub fn scale_descent(a: &DeltaNet, theta: f64, kappa: f64, eps3: f64) -> Result<DescentTrace> {
    let delta = a.delta();
    let profile = scale_profile(a, delta);
    let mut scales: Vec<(f64, usize)> = profile.rhos.iter().copied().zip(profile.raw_counts.iter().copied()).collect();
    if scales.last().is_none_or(|&(r, _)| r > delta * (1.0 + 1e-12)) {
        scales.push((delta, a.covering_number(delta).n_cover));
    }
    let max_steps = (theta / eps3).ceil() as usize;
    let mut steps = Vec::new();
    let mut rho = delta;
    for k in 0..=max_steps {
        let coarse = if rho > delta { a.coarsen(rho) } else { a.clone() };
        let n_a = coarse.len();
        let aaa = product_set(&coarse, &coarse, Some(&coarse))?;
        let n_aaa = aaa.covering_number(rho).n_cover;
        let tripling = n_aaa as f64 / n_a.max(1) as f64;
        let threshold = rho.powf(-eps3);
        let scale_bound = delta.powf((eps3 / theta).powi(k as i32));
        let lower_profile_ok = scales
            .iter()
            .filter(|&&(r, _)| r >= rho * (1.0 - 1e-12))
            .all(|&(r, n)| n as f64 >= r.powf(-kappa) * rho.powf(eps3));
        let growth = tripling >= threshold;
        steps.push(DescentStep {
            rho,
            n_a,
            n_aaa,
            tripling,
            threshold,
            growth,
            scale_bound,
            within_bound: rho <= scale_bound * (1.0 + 1e-12),
            lower_profile_ok,
        });
        if growth {
            return Ok(DescentTrace {
                steps,
                verdict: DescentVerdict::Growth,
                max_steps,
            });
        }
        match deepest_dip(&scales, rho, k, theta, eps3) {
            Some((r, _)) => rho = r,
            None => {
                return Ok(DescentTrace {
                    steps,
                    verdict: DescentVerdict::NoDip,
                    max_steps,
                })
            }
        }
    }
    Ok(DescentTrace {
        steps,
        verdict: DescentVerdict::Exhausted,
        max_steps,
    })
}
