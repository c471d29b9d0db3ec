//! Escaping from subgroups and subspaces by explicit search.

use crate::error::{Error, Result};
use crate::group::{adjoint, distance_to_singular, GroupElement, GroupTag, LieVector};
use crate::net::DeltaNet;
use crate::subspace::Subspace;
use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Angular resolution of the coarse candidate grid, in degrees.
pub const GRID_STEP_DEG: f64 = 2.0;
/// Angular resolution reached by local refinement, in degrees.
pub const REFINED_STEP_DEG: f64 = 0.01;
pub const DEFAULT_BEAM_WIDTH: usize = 32;
const REFINED_CANDIDATES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubgroupKind {
    TorusLine,
    NilpotentLine,
    BorelPlane,
    Other,
}

impl SubgroupKind {
    pub fn name(self) -> &'static str {
        match self {
            SubgroupKind::TorusLine => "torus_line",
            SubgroupKind::NilpotentLine => "nilpotent_line",
            SubgroupKind::BorelPlane => "borel_plane",
            SubgroupKind::Other => "other",
        }
    }
}

/// A connected subgroup, given by its Lie algebra.
#[derive(Clone, Debug)]
pub struct SubgroupCandidate {
    pub subalgebra: Subspace,
    pub kind: SubgroupKind,
}

impl SubgroupCandidate {
    /// Largest `||[X, Y]||` over basis pairs, measured off the subalgebra.
    pub fn closure_defect(&self, tag: GroupTag) -> f64 {
        let vs = self.subalgebra.vectors();
        let mut worst: f64 = 0.0;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                let x = LieVector::new(tag, [vs[i][0], vs[i][1], vs[i][2]]);
                let y = LieVector::new(tag, [vs[j][0], vs[j][1], vs[j][2]]);
                let b = x.bracket(&y).coords;
                worst = worst.max(self.subalgebra.distance_to(&DVector::from_column_slice(b.as_slice())));
            }
        }
        worst
    }
}

#[derive(Clone, Debug)]
pub struct AwayScore {
    /// Upper bound on `min_H max_{a in A} d(a, H)`.
    pub score: f64,
    pub witness: SubgroupCandidate,
    pub resolution_deg: f64,
}

fn line_direction(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Unit normal of the Borel plane with boundary parameter `phi`.
fn borel_normal(phi: f64) -> Vector3<f64> {
    Vector3::new((2.0 * phi).sin(), phi.sin().powi(2), -phi.cos().powi(2)).normalize()
}

fn line_score(points: &[Vector3<f64>], u: &Vector3<f64>) -> f64 {
    points
        .iter()
        .map(|x| (x.norm_squared() - u.dot(x).powi(2)).max(0.0).sqrt())
        .fold(0.0, f64::max)
}

fn plane_score(points: &[Vector3<f64>], n: &Vector3<f64>) -> f64 {
    points.iter().map(|x| n.dot(x).abs()).fold(0.0, f64::max)
}

/// Pattern search over `dims` angles starting from `start` (radians).
fn refine(start: Vec<f64>, f: &dyn Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let mut x = start;
    let mut best = f(&x);
    let mut step = GRID_STEP_DEG.to_radians();
    while step >= REFINED_STEP_DEG.to_radians() * (1.0 - 1e-9) {
        let mut moved = false;
        for k in 0..x.len() {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += sgn * step;
                let v = f(&y);
                if v < best {
                    best = v;
                    x = y;
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    (best, x)
}

fn refine_best(grid: Vec<(f64, Vec<f64>)>, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> (f64, Vec<f64>) {
    let mut grid = grid;
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    grid.truncate(REFINED_CANDIDATES);
    grid.into_par_iter()
        .map(|(_, x)| refine(x, f))
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("nonempty candidate grid")
}

/// Scores `A` against every proper connected subgroup through the identity,
/// measuring `d(a, H)` as the distance of `log a` to the subalgebra.
/// Candidates: all lines, and for SL(2,R) the Borel planes.
pub fn away_score(a: &DeltaNet) -> AwayScore {
    let tag = a.tag();
    let points: Vec<Vector3<f64>> = a.coords().iter().map(|c| Vector3::from(*c)).collect();
    let step = GRID_STEP_DEG.to_radians();
    let n_theta = (90.0 / GRID_STEP_DEG).round() as usize;
    let n_phi = (360.0 / GRID_STEP_DEG).round() as usize;
    let line_grid: Vec<(f64, Vec<f64>)> = (0..=n_theta)
        .flat_map(|i| (0..n_phi).map(move |j| vec![i as f64 * step, j as f64 * step]))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| (line_score(&points, &line_direction(x[0], x[1])), x))
        .collect();
    let line_f = |x: &[f64]| line_score(&points, &line_direction(x[0], x[1]));
    let (line_best, lx) = refine_best(line_grid, &line_f);
    let u = line_direction(lx[0], lx[1]);
    let mut best = (
        line_best,
        SubgroupCandidate {
            subalgebra: Subspace::span(3, &[DVector::from_column_slice(u.as_slice())]),
            kind: line_kind(tag, &u),
        },
    );
    if tag == GroupTag::Sl2r {
        let n_borel = (180.0 / GRID_STEP_DEG).round() as usize;
        let plane_grid: Vec<(f64, Vec<f64>)> = (0..n_borel)
            .into_par_iter()
            .map(|j| {
                let phi = j as f64 * step;
                (plane_score(&points, &borel_normal(phi)), vec![phi])
            })
            .collect();
        let plane_f = |x: &[f64]| plane_score(&points, &borel_normal(x[0]));
        let (plane_best, px) = refine_best(plane_grid, &plane_f);
        if plane_best < best.0 {
            let n = borel_normal(px[0] % PI);
            best = (
                plane_best,
                SubgroupCandidate {
                    subalgebra: Subspace::span(3, &[DVector::from_column_slice(n.as_slice())]).orthogonal_complement(),
                    kind: SubgroupKind::BorelPlane,
                },
            );
        }
    }
    AwayScore {
        score: best.0,
        witness: best.1,
        resolution_deg: REFINED_STEP_DEG,
    }
}

fn line_kind(tag: GroupTag, u: &Vector3<f64>) -> SubgroupKind {
    match tag {
        GroupTag::Su2 => SubgroupKind::TorusLine,
        GroupTag::Sl2r => {
            let q = LieVector::from_vector(tag, *u).square_scalar();
            if q.abs() <= 1e-3 {
                SubgroupKind::NilpotentLine
            } else {
                SubgroupKind::TorusLine
            }
        }
    }
}

fn gram_determinant(vs: &[Vector3<f64>]) -> f64 {
    let k = vs.len();
    DMatrix::from_fn(k, k, |i, j| vs[i].dot(&vs[j])).determinant()
}

/// At most three elements of `A` with linearly independent logarithms.
///
/// `a_1` is the point farthest from the identity; each next element is the
/// point farthest from the span of the logs chosen so far, accepted while
/// that distance is at least `rho^c_exponent`.
pub fn extract_dtuple(a: &DeltaNet, rho: f64, c_exponent: f64) -> Result<Vec<GroupElement>> {
    let away = away_score(a);
    if away.score < rho {
        return Err(Error::NotAway { score: away.score, rho });
    }
    let threshold = rho.powf(c_exponent);
    let points: Vec<Vector3<f64>> = a.coords().iter().map(|c| Vector3::from(*c)).collect();
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < 3 {
        let span = Subspace::span(
            3,
            &chosen
                .iter()
                .map(|&i| DVector::from_column_slice(points[i].as_slice()))
                .collect::<Vec<_>>(),
        );
        let (idx, far) = points
            .iter()
            .enumerate()
            .map(|(i, x)| (i, span.distance_to(&DVector::from_column_slice(x.as_slice()))))
            .fold((usize::MAX, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if idx == usize::MAX || far < threshold {
            break;
        }
        chosen.push(idx);
    }
    let logs: Vec<Vector3<f64>> = chosen.iter().map(|&i| points[i]).collect();
    if chosen.is_empty() || gram_determinant(&logs) <= 0.0 {
        return Err(Error::NotAway { score: away.score, rho });
    }
    Ok(chosen.iter().map(|&i| a.point(i)).collect())
}

pub fn gram_of_logs(elements: &[GroupElement]) -> f64 {
    let logs: Vec<Vector3<f64>> = elements
        .iter()
        .map(|g| crate::group::log_unchecked(g).map(|x| x.coords).unwrap_or_else(|_| Vector3::zeros()))
        .collect();
    gram_determinant(&logs)
}

/// A word in the elements of `A` and its score.
#[derive(Clone, Debug)]
pub struct EscapeResult {
    /// Indices into `A`, in product order.
    pub word: Vec<usize>,
    pub element: GroupElement,
    pub score: f64,
    pub word_len: usize,
}

impl EscapeResult {
    pub fn recompute_element(&self, a: &DeltaNet) -> GroupElement {
        self.word
            .iter()
            .fold(GroupElement::identity(a.tag()), |acc, &i| acc * a.point(i))
    }
}

fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1))
}

/// Top expansions of each word, shared by the runs at different widths.
/// Prepending letter `i` to a fixed word orders words by `i`, so ranking by
/// (score desc, letter asc) matches the global tie-break.
struct ExpansionCache<'a> {
    elements: &'a [GroupElement],
    keep: usize,
    score: &'a (dyn Fn(&GroupElement) -> f64 + Sync),
    table: HashMap<Vec<usize>, Vec<(f64, usize)>>,
}

impl ExpansionCache<'_> {
    fn top(&mut self, word: &[usize], g: &GroupElement) -> &[(f64, usize)] {
        if !self.table.contains_key(word) {
            let score = self.score;
            let mut all: Vec<(f64, usize)> = self
                .elements
                .par_iter()
                .enumerate()
                .map(|(i, a)| (score(&(*a * *g)), i))
                .collect();
            all.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            all.truncate(self.keep);
            self.table.insert(word.to_vec(), all);
        }
        &self.table[word]
    }
}

/// Beam search over words of length `<= max_len`. Words grow by a new
/// letter on the left; ties are broken by lexicographic word order.
fn beam_once(
    cache: &mut ExpansionCache<'_>,
    max_len: usize,
    width: usize,
) -> Option<(f64, Vec<usize>, GroupElement)> {
    let elements = cache.elements;
    let mut beam: Vec<(Vec<usize>, GroupElement)> = vec![(Vec::new(), GroupElement::identity(elements[0].tag()))];
    let mut best: Option<(f64, Vec<usize>, GroupElement)> = None;
    for _ in 0..max_len {
        let mut next: Vec<(f64, Vec<usize>, GroupElement)> = Vec::new();
        for (w, g) in &beam {
            for &(s, i) in cache.top(w, g).iter().take(width) {
                let mut word = Vec::with_capacity(w.len() + 1);
                word.push(i);
                word.extend_from_slice(w);
                next.push((s, word, elements[i] * *g));
            }
        }
        next.sort_by(|x, y| y.0.total_cmp(&x.0).then_with(|| x.1.cmp(&y.1)));
        next.truncate(width);
        if let Some(top) = next.first() {
            let improves = match &best {
                None => true,
                Some(b) => better(&(top.0, top.1.clone()), &(b.0, b.1.clone())) == Ordering::Less,
            };
            if improves {
                best = Some(top.clone());
            }
        }
        beam = next.into_iter().map(|(_, w, e)| (w, e)).collect();
    }
    best
}

/// Best word over beam widths `1..=width`, so scores never decrease with
/// the width or the length.
fn beam_search(
    a: &DeltaNet,
    max_len: usize,
    width: usize,
    score: &(dyn Fn(&GroupElement) -> f64 + Sync),
) -> EscapeResult {
    let identity = GroupElement::identity(a.tag());
    let mut best = (score(&identity), Vec::new(), identity);
    if a.is_empty() || max_len == 0 {
        return finish(best);
    }
    let elements = a.points();
    let width = width.max(1);
    let mut cache = ExpansionCache {
        elements: &elements,
        keep: width,
        score,
        table: HashMap::new(),
    };
    for w in 1..=width {
        if let Some(cand) = beam_once(&mut cache, max_len, w) {
            if better(&(cand.0, cand.1.clone()), &(best.0, best.1.clone())) == Ordering::Less {
                best = cand;
            }
        }
        if w >= elements.len().saturating_pow(max_len.min(8) as u32) {
            break;
        }
    }
    finish(best)
}

fn finish((score, word, element): (f64, Vec<usize>, GroupElement)) -> EscapeResult {
    EscapeResult {
        word_len: word.len(),
        word,
        element,
        score,
    }
}

/// A word `a` maximizing `d((Ad a) v, W)`.
pub fn escape_word(a: &DeltaNet, v: &LieVector, w: &Subspace, max_len: usize, width: usize) -> EscapeResult {
    let v = v.coords;
    let score = move |g: &GroupElement| {
        let image = adjoint(g) * v;
        w.distance_to(&DVector::from_column_slice(image.as_slice()))
    };
    beam_search(a, max_len, width, &score)
}

/// A word maximizing the distance to the singular set.
pub fn find_regular(a: &DeltaNet, max_len: usize, width: usize) -> EscapeResult {
    beam_search(a, max_len, width, &distance_to_singular)
}
