//! Segments in iterated sum-product sets of near-diagonal matrices, and
//! their lifts to group words.

use crate::error::{Error, Result};
use crate::group::{adjoint, dist, exp_unchecked, root_data, GroupElement, LieVector, C64};
use crate::net::DeltaNet;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use std::cmp::Ordering;

/// Default cap on the number of signed combinations.
pub const DEFAULT_COMBO_BUDGET: usize = 1_000_000;

/// Directions tried per search.
const MAX_DIRECTIONS: usize = 256;

/// Samples recorded per witness.
const MAX_SAMPLES: usize = 1024;

/// `sum(plus) - sum(minus)`, each term a product of inputs given by a
/// multiset of indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Combo {
    pub plus: Vec<Vec<usize>>,
    pub minus: Vec<Vec<usize>>,
    pub value: DVector<C64>,
}

impl Combo {
    pub fn terms(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    /// Recomputes the value from the diagonals of `b`.
    pub fn evaluate(&self, b: &[DMatrix<C64>]) -> Option<DVector<C64>> {
        let n = b.first()?.nrows();
        let term = |t: &Vec<usize>| -> Option<DVector<C64>> {
            let mut v = DVector::from_element(n, C64::new(1.0, 0.0));
            for &i in t {
                v.component_mul_assign(&b.get(i)?.diagonal());
            }
            Some(v)
        };
        let mut total = DVector::zeros(n);
        for t in &self.plus {
            total += term(t)?;
        }
        for t in &self.minus {
            total -= term(t)?;
        }
        Some(total)
    }
}

#[derive(Clone, Debug)]
pub struct SegmentSample {
    pub t: f64,
    pub combo: Combo,
}

#[derive(Clone, Debug)]
pub struct SegmentWitness {
    /// Unit diagonal direction.
    pub eta: DVector<C64>,
    pub length: f64,
    pub slack: f64,
    pub s: usize,
    pub samples: Vec<SegmentSample>,
    /// Input index to element index of the originating net.
    pub source: Vec<usize>,
    /// Basis in which the inputs are near diagonal, when they come from a
    /// group.
    pub frame: Option<Matrix3<C64>>,
}

impl SegmentWitness {
    pub fn attach(mut self, inputs: &DiagonalInputs) -> Self {
        self.source = inputs.source.clone();
        self.frame = Some(inputs.frame);
        self
    }

    /// Rechecks every sample against the inputs.
    pub fn verify(&self, b: &[DMatrix<C64>]) -> bool {
        let tol = self.slack * (1.0 + 1e-9) + 1e-15;
        let ends = match (self.samples.first(), self.samples.last()) {
            (Some(f), Some(l)) => f.t == 0.0 && (l.t - self.length).abs() <= 1e-12 * self.length.max(1.0),
            _ => false,
        };
        ends && self.samples.iter().all(|s| {
            (0.0..=self.length * (1.0 + 1e-12)).contains(&s.t)
                && s.combo.evaluate(b).is_some_and(|v| (v - self.eta.map(|e| e * s.t)).norm() <= tol)
        })
    }
}

/// All multisets of size `1..=s` over `0..n`, by size then lexicographically.
fn multisets(n: usize, s: usize, include_empty: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if include_empty {
        out.push(Vec::new());
    }
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..s {
        let mut next = Vec::new();
        for m in &layer {
            let start = m.last().copied().unwrap_or(0);
            for i in start..n {
                let mut m2 = m.clone();
                m2.push(i);
                next.push(m2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn multiset_count(n: usize, s: usize) -> f64 {
    // Multisets of size 0..=s over n symbols: C(n + s, s).
    (1..=s).fold(1.0, |acc, k| acc * (n + k) as f64 / k as f64)
}

fn hermitian(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Searches `sB^s - sB^s` (sums of at most `s` products of at most `s`
/// inputs, minus the same) for a direction `eta` such that every point of
/// `[0, delta^alpha] eta` lies within `delta^(alpha + beta)` of a combination.
/// Only the diagonals of the inputs are used.
pub fn detect_segment(
    b: &[DMatrix<C64>],
    s: usize,
    alpha: f64,
    beta: f64,
    delta: f64,
    budget: usize,
) -> Result<Option<SegmentWitness>> {
    if b.is_empty() || s == 0 {
        return Ok(None);
    }
    let n = b[0].nrows();
    let diags: Vec<DVector<C64>> = b.iter().map(|m| m.diagonal()).collect();
    let n_products = multiset_count(b.len(), s) - 1.0;
    let n_sums = multiset_count(n_products as usize, s);
    if n_products > budget as f64 || n_sums * n_sums > budget as f64 {
        return Err(Error::CombinatorialBudgetExceeded { budget });
    }
    let products: Vec<(Vec<usize>, DVector<C64>)> = multisets(b.len(), s, false)
        .into_iter()
        .map(|m| {
            let mut v = DVector::from_element(n, C64::new(1.0, 0.0));
            for &i in &m {
                v.component_mul_assign(&diags[i]);
            }
            (m, v)
        })
        .collect();
    let sums: Vec<(Vec<usize>, DVector<C64>)> = multisets(products.len(), s, true)
        .into_iter()
        .map(|m| {
            let v = m.iter().fold(DVector::zeros(n), |acc, &i| acc + &products[i].1);
            (m, v)
        })
        .collect();
    let length = delta.powf(alpha);
    let slack = delta.powf(alpha + beta);
    let pair_count = sums.len() * sums.len();
    let pair = |k: usize| (k / sums.len(), k % sums.len());
    let value = |k: usize| {
        let (i, j) = pair(k);
        &sums[i].1 - &sums[j].1
    };
    let terms = |k: usize| {
        let (i, j) = pair(k);
        sums[i].0.len() + sums[j].0.len()
    };

    // Candidate directions: simple combinations of length close to the target.
    let mut cands: Vec<(usize, usize, f64, usize)> = (0..pair_count)
        .filter_map(|k| {
            let norm = value(k).norm();
            let minus = sums[pair(k).1].0.len();
            (norm > 1e-300).then(|| (terms(k), minus, (norm - length).abs(), k))
        })
        .collect();
    cands.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.total_cmp(&y.2))
            .then(x.3.cmp(&y.3))
    });
    let mut dirs: Vec<DVector<C64>> = Vec::new();
    for &(_, _, _, k) in &cands {
        if dirs.len() >= MAX_DIRECTIONS {
            break;
        }
        let v = value(k);
        let eta = &v / C64::new(v.norm(), 0.0);
        if dirs.iter().all(|d| hermitian(d, &eta).norm() < 1.0 - 1e-9) {
            dirs.push(eta);
        }
    }

    let values: Vec<DVector<C64>> = (0..pair_count).map(value).collect();
    for eta in dirs {
        // Interval of t covered by each combination near the line.
        let mut intervals: Vec<(f64, f64, usize)> = Vec::new();
        for (k, v) in values.iter().enumerate() {
            let t = hermitian(&eta, v).re;
            let perp2 = (v.norm_squared() - t * t).max(0.0);
            if perp2 < slack * slack {
                let h = (slack * slack - perp2).sqrt();
                if t + h >= 0.0 && t - h <= length {
                    intervals.push((t - h, t + h, k));
                }
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut reach = 0.0;
        let mut covered = false;
        for &(lo, hi, _) in &intervals {
            if lo > reach {
                break;
            }
            reach = f64::max(reach, hi);
            if reach >= length {
                covered = true;
                break;
            }
        }
        if !covered {
            continue;
        }
        let m = ((length / slack).ceil() as usize).clamp(1, MAX_SAMPLES - 1);
        let ts: Vec<f64> = (0..=m).map(|j| length * j as f64 / m as f64).collect();
        let mut best: Vec<Option<(usize, f64, usize)>> = vec![None; ts.len()];
        for &(lo, hi, k) in &intervals {
            let j0 = ((lo.max(0.0) / length) * m as f64).floor() as usize;
            let j1 = (((hi.min(length) / length) * m as f64).ceil() as usize).min(m);
            for j in j0..=j1 {
                let d = (values[k].clone() - eta.map(|e| e * ts[j])).norm();
                if d > slack {
                    continue;
                }
                let key = (terms(k), d, k);
                let replace = match best[j] {
                    None => true,
                    Some(b) => key.0.cmp(&b.0).then(key.1.total_cmp(&b.1)).then(key.2.cmp(&b.2)) == Ordering::Less,
                };
                if replace {
                    best[j] = Some(key);
                }
            }
        }
        // Interval coverage guarantees a realizer for every sample, up to
        // rounding at interval ends; skip the direction if one is missing.
        if best.iter().any(|b| b.is_none()) {
            continue;
        }
        let to_terms = |m: &Vec<usize>| m.iter().map(|&i| products[i].0.clone()).collect::<Vec<_>>();
        let samples = ts
            .iter()
            .zip(&best)
            .map(|(&t, b)| {
                let k = b.expect("checked above").2;
                let (i, j) = pair(k);
                SegmentSample {
                    t,
                    combo: Combo {
                        plus: to_terms(&sums[i].0),
                        minus: to_terms(&sums[j].0),
                        value: values[k].clone(),
                    },
                }
            })
            .collect();
        return Ok(Some(SegmentWitness {
            eta,
            length,
            slack,
            s,
            samples,
            source: (0..b.len()).collect(),
            frame: None,
        }));
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontierPoint {
    pub alpha: f64,
    /// Largest `beta` on the grid with a witness.
    pub beta: Option<f64>,
}

/// For each `alpha`, the largest `beta` in `betas` for which a segment is
/// found.
pub fn segment_frontier(
    b: &[DMatrix<C64>],
    s: usize,
    alphas: &[f64],
    betas: &[f64],
    delta: f64,
    budget: usize,
) -> Result<Vec<FrontierPoint>> {
    let mut sorted = betas.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let mut out = Vec::new();
    for &alpha in alphas {
        let mut beta = None;
        for &bt in &sorted {
            if detect_segment(b, s, alpha, bt, delta, budget)?.is_some() {
                beta = Some(bt);
                break;
            }
        }
        out.push(FrontierPoint { alpha, beta });
    }
    Ok(out)
}

/// `Ad x` in the eigenbasis of `Ad a` for the elements `x` of `A` whose
/// image is within `tol` of diagonal.
#[derive(Clone, Debug)]
pub struct DiagonalInputs {
    pub matrices: Vec<DMatrix<C64>>,
    pub source: Vec<usize>,
    /// Columns: torus direction, then the two root vectors.
    pub frame: Matrix3<C64>,
}

pub fn diagonal_inputs(a: &DeltaNet, regular: &GroupElement, tol: f64) -> Result<DiagonalInputs> {
    let rd = root_data(regular)?;
    let t = rd.torus_direction.coords.map(|x| C64::new(x, 0.0));
    let frame = Matrix3::from_columns(&[t, rd.root_vectors[0], rd.root_vectors[1]]);
    let inv = frame
        .try_inverse()
        .ok_or(Error::SingularElement { gap: rd.gap })?;
    let mut matrices = Vec::new();
    let mut source = Vec::new();
    for i in 0..a.len() {
        let ad = adjoint(&a.point(i)).map(|x| C64::new(x, 0.0));
        let m = inv * ad * frame;
        let off: f64 = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| m[(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm = m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if off <= tol && norm <= 2.0 * 3f64.sqrt() {
            matrices.push(DMatrix::from_iterator(3, 3, m.iter().copied()));
            source.push(i);
        }
    }
    Ok(DiagonalInputs { matrices, source, frame })
}

#[derive(Clone, Debug)]
pub struct LiftedPoint {
    pub t: f64,
    pub element: GroupElement,
    /// Distance to `exp(u t Re(P diag(eta) P^-1 X))`.
    pub residual: f64,
    /// Distance to `exp(u sum ± (Ad x_w) X)`.
    pub combination_residual: f64,
}

/// Builds, for each sample, the word `prod x_w e^{±uX} x_w^-1` over the
/// witness terms, where `x_w` multiplies the elements of a term.
pub fn lift_segment(a: &DeltaNet, witness: &SegmentWitness, x: &LieVector, u: f64) -> Result<Vec<LiftedPoint>> {
    let tag = a.tag();
    let frame = witness
        .frame
        .ok_or_else(|| Error::InvalidArgument("witness has no group frame".into()))?;
    if witness.eta.len() != 3 {
        return Err(Error::InvalidArgument("lifting needs 3-dimensional diagonals".into()));
    }
    let inv = frame
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular frame".into()))?;
    let eta = Matrix3::from_diagonal(&Vector3::new(witness.eta[0], witness.eta[1], witness.eta[2]));
    let xc = x.coords.map(|v| C64::new(v, 0.0));
    let direction = (frame * eta * inv * xc).map(|z| z.re);

    let element_of = |term: &Vec<usize>| -> Result<GroupElement> {
        term.iter().try_fold(GroupElement::identity(tag), |acc, &i| {
            let idx = *witness.source.get(i).ok_or(Error::WitnessStale {
                index: i,
                available: witness.source.len(),
            })?;
            if idx >= a.len() {
                return Err(Error::WitnessStale {
                    index: idx,
                    available: a.len(),
                });
            }
            Ok(acc * a.point(idx))
        })
    };
    let step = exp_unchecked(&(u * *x));
    let step_inv = step.inverse();

    let mut out = Vec::with_capacity(witness.samples.len());
    for sample in &witness.samples {
        let mut product = GroupElement::identity(tag);
        let mut linear = Vector3::zeros();
        for (terms, sign) in [(&sample.combo.plus, 1.0), (&sample.combo.minus, -1.0)] {
            for term in terms {
                let xw = element_of(term)?;
                let g = if sign > 0.0 { step } else { step_inv };
                product = product * (xw * g * xw.inverse());
                linear += sign * adjoint(&xw) * x.coords;
            }
        }
        let target = exp_unchecked(&LieVector::from_vector(tag, direction * (u * sample.t)));
        let combined = exp_unchecked(&LieVector::from_vector(tag, linear * u));
        out.push(LiftedPoint {
            t: sample.t,
            element: product,
            residual: dist(&product, &target)?,
            combination_residual: dist(&product, &combined)?,
        });
    }
    Ok(out)
}
