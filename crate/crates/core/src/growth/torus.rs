//! Rich tori: pigeonholing a conjugation orbit, and the fiber implication
//! `d(x a x^-1, a) <= 2 delta  =>  x is close to the centralizer torus`.

use super::log_ratio;
use crate::error::{Error, Result};
use crate::escape::{away_score, find_regular, EscapeResult, DEFAULT_BEAM_WIDTH};
use crate::group::{
    chart_distortion, dist, exp_unchecked, log_unchecked, root_data, torus_through, GroupElement,
    LieVector, Torus,
};
use crate::net::{build_net_from_coords, restrict_near, DeltaNet, Target};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;

/// Below this `find_regular` score the set counts as having no regular word.
pub const REGULAR_SCORE_MIN: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct RichTorusResult {
    pub torus: Torus,
    pub regular_witness: EscapeResult,
    /// Character gap of the regular element.
    pub gap: f64,
    /// Neighbourhood radius `2 delta / gap`.
    pub rho_t: f64,
    /// The pivot `x0`, first element of the heaviest bucket.
    pub pivot: GroupElement,
    pub bucket_size: usize,
    /// `N(x0^-1 A ∩ T^(rho_t), delta)`.
    pub near_count: usize,
    pub n_a: usize,
    /// `log_delta(near_count)`.
    pub threshold_exponent: f64,
    /// `log(near_count) / log(N(A, delta))`.
    pub torus_exponent: f64,
    pub away_score: f64,
    /// Whether `away_score >= delta^eps`.
    pub away_ok: bool,
}

/// The net `x0^-1 A` at the resolution of `a`, dropping points that leave
/// the extended chart.
pub fn pulled_back(a: &DeltaNet, x0: &GroupElement) -> Result<DeltaNet> {
    let inv = x0.inverse();
    let coords: Vec<[f64; 3]> = a
        .points()
        .par_iter()
        .filter_map(|x| log_unchecked(&(inv * *x)).ok())
        .filter(|v| v.norm() <= crate::group::R_EXT)
        .map(|v| [v.coords[0], v.coords[1], v.coords[2]])
        .collect();
    build_net_from_coords(a.tag(), coords, a.delta())
}

/// Extracts a torus capturing many elements of `A^-1 A`.
///
/// The conjugates `x a x^-1` are bucketed into grid cells of chart diameter
/// at most `2 delta`, so the heaviest bucket's elements all satisfy
/// `d(x a x^-1, x0 a x0^-1) <= 2 delta`.
pub fn rich_torus(a: &DeltaNet, eps: f64) -> Result<RichTorusResult> {
    let delta = a.delta();
    let witness = find_regular(a, 2, DEFAULT_BEAM_WIDTH);
    if witness.score < REGULAR_SCORE_MIN {
        return Err(Error::NoRegularElement { score: witness.score });
    }
    let reg = witness.element;
    let gap = root_data(&reg)?.gap;
    let torus = torus_through(&reg)?;

    let points = a.points();
    let conj: Vec<Option<Vector3<f64>>> = points
        .par_iter()
        .map(|x| log_unchecked(&x.conjugate(&reg)).ok().map(|v| v.coords))
        .collect();
    let radius = conj.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let kappa = chart_distortion(a.tag(), radius, 2.0 * delta);
    let side = 2.0 * delta / (3f64.sqrt() * kappa);
    let mut buckets: HashMap<[i64; 3], (usize, usize)> = HashMap::new();
    for (i, v) in conj.iter().enumerate() {
        let Some(v) = v else { continue };
        let key = [
            (v[0] / side).floor() as i64,
            (v[1] / side).floor() as i64,
            (v[2] / side).floor() as i64,
        ];
        buckets.entry(key).or_insert((0, i)).0 += 1;
    }
    let (_, &(bucket_size, first)) = buckets
        .iter()
        .max_by(|x, y| x.1 .0.cmp(&y.1 .0).then(y.0.cmp(x.0)))
        .ok_or(Error::NoRegularElement { score: witness.score })?;
    let pivot = points[first];

    let rho_t = 2.0 * delta / gap;
    let near = restrict_near(&pulled_back(a, &pivot)?, &Target::Torus(torus), rho_t);
    let near_count = near.covering_number(delta).n_cover;
    let n_a = a.covering_number(delta).n_cover;
    let away = away_score(a).score;
    Ok(RichTorusResult {
        torus,
        regular_witness: witness,
        gap,
        rho_t,
        pivot,
        bucket_size,
        near_count,
        n_a,
        threshold_exponent: (near_count as f64).ln() / delta.ln(),
        torus_exponent: log_ratio(near_count, n_a),
        away_score: away,
        away_ok: away >= delta.powf(eps),
    })
}

/// Exact chart distance `min_t |log(exp(-t tau) x)|` from `x` to the
/// one-parameter group of `torus`.
pub fn torus_distance(x: &GroupElement, torus: &Torus) -> f64 {
    let tau = torus.direction;
    let Ok(lx) = log_unchecked(x) else {
        return f64::INFINITY;
    };
    let f = |t: f64| {
        log_unchecked(&(exp_unchecked(&(-t * tau)) * *x))
            .map(|v| v.norm())
            .unwrap_or(f64::INFINITY)
    };
    let t0 = lx.dot(&tau);
    let w = lx.norm() + 1e-12;
    // Coarse scan, then golden section around the best grid point.
    let n = 40;
    let grid: Vec<f64> = (0..=n).map(|k| t0 - w + 2.0 * w * k as f64 / n as f64).collect();
    let (k_best, _) = grid
        .iter()
        .map(|&t| f(t))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    let h = 2.0 * w / n as f64;
    let (mut lo, mut hi) = (grid[k_best] - h, grid[k_best] + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2).min(f(0.0)).min(lx.norm())
}

#[derive(Clone, Copy, Debug)]
pub struct FiberOptions {
    /// Constant in the asserted bound `2 delta kappa / gap`.
    pub kappa: f64,
    /// Gap used in the bound; the true character gap when `None`.
    pub gap: Option<f64>,
    pub seed: u64,
}

impl Default for FiberOptions {
    fn default() -> Self {
        FiberOptions {
            kappa: 1.2,
            gap: None,
            seed: 0x7f1b_e7c4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FiberReport {
    pub samples: usize,
    pub draws: usize,
    pub violations: usize,
    /// Largest `d(x, T) * gap / (2 delta)` seen, with the true gap.
    pub measured_kappa: f64,
    /// True character gap of `a`.
    pub true_gap: f64,
    /// Gap used in the asserted bound.
    pub gap: f64,
    pub bound: f64,
}

/// Samples `x` with `d(x a x^-1, a) <= 2 delta` and counts those with
/// `d(x, T) > 2 delta kappa / gap`.
///
/// Proposals are `x = exp(t tau) exp(Z)` with `Z` uniform in a disc of the
/// complement of the torus direction, wide enough to contain the whole
/// accepted region.
pub fn torus_fiber_check(a: &GroupElement, delta: f64, n_samples: usize, opts: &FiberOptions) -> Result<FiberReport> {
    let tag = a.tag();
    let rd = root_data(a)?;
    let true_gap = rd.gap;
    let gap = opts.gap.unwrap_or(true_gap);
    let bound = 2.0 * delta * opts.kappa / gap;
    let torus = torus_through(a)?;
    let tau = torus.direction.coords;
    let helper = if tau[0].abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (helper - tau * tau.dot(&helper)).normalize();
    let e2 = tau.cross(&e1);
    let disc = 2.0 * 2.0 * delta / true_gap;

    let chunk = 4096;
    let mut samples = 0usize;
    let mut draws = 0usize;
    let mut violations = 0usize;
    let mut measured = 0.0f64;
    let mut batch = 0u64;
    while samples < n_samples {
        let results: Vec<Option<f64>> = (0..chunk)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(batch * chunk as u64 + i as u64);
                let t: f64 = rng.random_range(-0.1..0.1);
                let r = rng.random::<f64>().sqrt();
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                let (u, v) = (r * phi.cos(), r * phi.sin());
                let z = LieVector::from_vector(tag, (e1 * u + e2 * v) * disc);
                let x = exp_unchecked(&(t * torus.direction)) * exp_unchecked(&z);
                let moved = dist(&x.conjugate(a), a).ok()?;
                (moved <= 2.0 * delta).then(|| torus_distance(&x, &torus))
            })
            .collect();
        for r in results {
            draws += 1;
            if let Some(d) = r {
                if samples >= n_samples {
                    break;
                }
                samples += 1;
                measured = measured.max(d * true_gap / (2.0 * delta));
                if d > bound {
                    violations += 1;
                }
            }
        }
        batch += 1;
    }
    Ok(FiberReport {
        samples,
        draws,
        violations,
        measured_kappa: measured,
        true_gap,
        gap,
        bound,
    })
}
