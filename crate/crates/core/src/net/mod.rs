//! δ-nets, covering numbers and product sets.

mod grid;
pub mod io;

use crate::chunk::ChunkMap;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupTag, LieVector, Torus, R_EXT};
use crate::subspace::Subspace;
use grid::{chart_dist, coords_of, element, greedy_select, norm, DynamicGrid, SortedGrid};
use nalgebra::DVector;
use rayon::prelude::*;

pub(crate) use grid::Coord;

/// A δ-separated set of group elements, stored by log coordinates in
/// lexicographic cell order.
#[derive(Clone, Debug)]
pub struct DeltaNet {
    tag: GroupTag,
    delta: f64,
    coords: Vec<Coord>,
    grid: SortedGrid,
}

impl DeltaNet {
    /// Wraps points that are already `delta`-separated and in cell order.
    fn from_selected(tag: GroupTag, delta: f64, coords: Vec<Coord>, grid: SortedGrid) -> Self {
        DeltaNet {
            tag,
            delta,
            coords,
            grid,
        }
    }

    /// Indexes points known to be `delta`-separated, restoring cell order.
    pub(crate) fn from_separated(tag: GroupTag, delta: f64, mut coords: Vec<Coord>) -> Self {
        let probe = SortedGrid::new(tag, delta, grid::max_norm(&coords));
        grid::sort_by_cells(&mut coords, probe.cell);
        let grid = SortedGrid::build(tag, delta, &coords);
        DeltaNet::from_selected(tag, delta, coords, grid)
    }

    pub fn empty(tag: GroupTag, delta: f64) -> Self {
        DeltaNet {
            tag,
            delta,
            coords: Vec::new(),
            grid: SortedGrid::new(tag, delta, 0.0),
        }
    }

    pub fn tag(&self) -> GroupTag {
        self.tag
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Log coordinates of the points, in net order.
    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> GroupElement {
        element(self.tag, &self.coords[i])
    }

    pub fn points(&self) -> Vec<GroupElement> {
        self.coords.iter().map(|c| element(self.tag, c)).collect()
    }

    pub fn log_vector(&self, i: usize) -> LieVector {
        LieVector::new(self.tag, self.coords[i])
    }

    /// Largest log norm among the points.
    pub fn radius(&self) -> f64 {
        grid::max_norm(&self.coords)
    }

    /// Index of a point within chart distance `r` of `x`, if any.
    pub fn find_near(&self, x: &GroupElement, r: f64) -> Option<usize> {
        let c = coords_of(x)?;
        self.grid.find_within(&self.coords, &c, r)
    }

    pub fn count_near(&self, x: &GroupElement, r: f64) -> usize {
        match coords_of(x) {
            Some(c) => self.grid.count_within(&self.coords, &c, r),
            None => 0,
        }
    }

    /// Smallest chart distance between two points (infinite below two points).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.coords.iter().enumerate() {
            for q in &self.coords[i + 1..] {
                best = best.min(chart_dist(self.tag, p, q));
            }
        }
        best
    }

    /// `A ∪ A^-1 ∪ {1}` thinned at the same scale.
    pub fn symmetric_closure(&self) -> Result<DeltaNet> {
        let mut pts: Vec<Coord> = vec![[0.0; 3]];
        pts.extend_from_slice(&self.coords);
        pts.extend(self.coords.iter().map(|c| [-c[0], -c[1], -c[2]]));
        build_net_from_coords(self.tag, pts, self.delta)
    }

    /// The same points thinned at a coarser scale.
    pub fn coarsen(&self, delta: f64) -> DeltaNet {
        let (coords, grid) = greedy_select(self.tag, self.coords.clone(), delta);
        DeltaNet::from_selected(self.tag, delta, coords, grid)
    }

    pub fn covering_number(&self, rho: f64) -> CoverCounts {
        covering_number(self.tag, &self.coords, rho)
    }

    fn subset(&self, keep: &[bool]) -> DeltaNet {
        let coords: Vec<Coord> = self
            .coords
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(c, _)| *c)
            .collect();
        DeltaNet::from_separated(self.tag, self.delta, coords)
    }
}

/// Greedy δ-net of `points`: δ-separated, and every input lies within δ of
/// a kept point. Points must have a logarithm of norm at most `R_EXT`.
pub fn build_net(points: &[GroupElement], delta: f64) -> Result<DeltaNet> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidArgument("build_net needs a group tag; use DeltaNet::empty".into()));
    };
    let tag = first.tag();
    let mut coords = Vec::with_capacity(points.len());
    for p in points {
        if p.tag() != tag {
            return Err(Error::TagMismatch);
        }
        let c = coords_of(p).ok_or(Error::OutsideChart { norm: f64::INFINITY })?;
        coords.push(c);
    }
    build_net_from_coords(tag, coords, delta)
}

/// [`build_net`] on log coordinates.
pub fn build_net_from_coords(tag: GroupTag, coords: Vec<[f64; 3]>, delta: f64) -> Result<DeltaNet> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("net scale {delta} must be positive")));
    }
    for c in &coords {
        let n = norm(c);
        if !(n <= R_EXT) {
            return Err(Error::OutsideChart { norm: n });
        }
    }
    let (coords, grid) = greedy_select(tag, coords, delta);
    Ok(DeltaNet::from_selected(tag, delta, coords, grid))
}

/// Greedy cover size at `rho` and the size of a maximal packing at `2 rho`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoverCounts {
    pub n_cover: usize,
    pub n_packing: usize,
}

/// Separation factor for packings. The chart distance of SL(2,R) violates
/// the triangle inequality by up to 0.3%, so packings there are taken at
/// `2 rho * 1.005` to keep the sandwich `packing <= cover` exact.
pub fn packing_slack(tag: GroupTag) -> f64 {
    match tag {
        GroupTag::Sl2r => 1.005,
        GroupTag::Su2 => 1.0,
    }
}

pub fn covering_number(tag: GroupTag, points: &[[f64; 3]], rho: f64) -> CoverCounts {
    if points.is_empty() {
        return CoverCounts { n_cover: 0, n_packing: 0 };
    }
    let (cover, _) = greedy_select(tag, points.to_vec(), rho);
    let (packing, _) = greedy_select(tag, points.to_vec(), 2.0 * rho * packing_slack(tag));
    CoverCounts {
        n_cover: cover.len(),
        n_packing: packing.len(),
    }
}

/// Greedy cover size alone, consuming the points.
pub(crate) fn cover_count(tag: GroupTag, points: Vec<[f64; 3]>, rho: f64) -> usize {
    if points.is_empty() {
        return 0;
    }
    greedy_select(tag, points, rho).0.len()
}

/// Number of products handled per parallel block.
const PRODUCT_BLOCK: usize = 1 << 16;

/// Left-multiplies every point of `right` by every element of `left` and
/// inserts the products greedily at scale `delta`, in generation order.
fn stream_products(tag: GroupTag, left: &[Coord], right: &[Coord], delta: f64) -> Result<Vec<Coord>> {
    let right_el: Vec<GroupElement> = right.iter().map(|c| element(tag, c)).collect();
    let rows = (PRODUCT_BLOCK / right.len().max(1)).max(1);
    let mut dyn_grid = DynamicGrid::new(tag, delta, 0.5);
    for block in left.chunks(rows) {
        // Points covered by the grid as it stood before this block stay
        // covered, so only the survivors need sequential insertion.
        let frozen = &dyn_grid;
        let products: Vec<Result<Vec<(Coord, GroupElement)>>> = block
            .par_iter()
            .map(|a| {
                let ga = element(tag, a);
                let mut kept = Vec::new();
                for b in &right_el {
                    let g = ga * *b;
                    let c = coords_of(&g).ok_or(Error::ChartOverflow { norm: f64::INFINITY })?;
                    let n = norm(&c);
                    if n > R_EXT {
                        return Err(Error::ChartOverflow { norm: n });
                    }
                    if !frozen.covers(&c, &g) {
                        kept.push((c, g));
                    }
                }
                Ok(kept)
            })
            .collect();
        for row in products {
            for (c, g) in row? {
                dyn_grid.insert_if_far(c, g, R_EXT);
            }
        }
    }
    Ok(dyn_grid.points)
}

/// `AB` or `ABC`, thinned at `A.delta`; the intermediate `AB` is thinned too.
/// Products must stay within log norm `R_EXT`.
pub fn product_set(a: &DeltaNet, b: &DeltaNet, c: Option<&DeltaNet>) -> Result<DeltaNet> {
    if a.tag != b.tag || c.is_some_and(|c| c.tag != a.tag) {
        return Err(Error::TagMismatch);
    }
    let delta = a.delta;
    let mut prod = stream_products(a.tag, &a.coords, &b.coords, delta)?;
    if let Some(c) = c {
        prod = stream_products(a.tag, &prod, &c.coords, delta)?;
    }
    Ok(DeltaNet::from_separated(a.tag, delta, prod))
}

/// Sets that `restrict_near` can measure distance to.
#[derive(Clone, Debug)]
pub enum Target {
    /// Distance of `log x` to the line of the torus direction.
    Torus(Torus),
    /// Distance of `log x` to a linear subspace of the algebra.
    Subspace(Subspace),
    Chunk(ChunkMap),
}

impl Target {
    pub fn distance(&self, tag: GroupTag, c: &[f64; 3]) -> f64 {
        match self {
            Target::Torus(t) => t.chart_distance(&LieVector::new(tag, *c)),
            Target::Subspace(s) => s.distance_to(&DVector::from_row_slice(c)),
            Target::Chunk(m) => m.chart_distance(&element(tag, c)),
        }
    }
}

/// The points of `a` within `rho` of `target`.
pub fn restrict_near(a: &DeltaNet, target: &Target, rho: f64) -> DeltaNet {
    let keep: Vec<bool> = a
        .coords
        .par_iter()
        .map(|c| target.distance(a.tag, c) <= rho)
        .collect();
    if keep.iter().all(|&k| k) {
        return a.clone();
    }
    a.subset(&keep)
}

/// Greedy cover counts at dyadic scales.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleProfile {
    /// Decreasing scales `1/2, 1/4, ...` down to `rho_min`.
    pub rhos: Vec<f64>,
    /// Monotone envelope: `counts[k] = min(raw[k], counts[k + 1])`.
    pub counts: Vec<usize>,
    pub raw_counts: Vec<usize>,
    /// `log2(counts[k + 1] / counts[k])`.
    pub slopes: Vec<f64>,
}

pub fn scale_profile(a: &DeltaNet, rho_min: f64) -> ScaleProfile {
    let mut rhos = Vec::new();
    let mut rho = 0.5;
    while rho >= rho_min * (1.0 - 1e-12) {
        rhos.push(rho);
        rho /= 2.0;
    }
    let raw_counts: Vec<usize> = rhos.iter().map(|&r| a.covering_number(r).n_cover).collect();
    let mut counts = raw_counts.clone();
    for k in (0..counts.len().saturating_sub(1)).rev() {
        counts[k] = counts[k].min(counts[k + 1]);
    }
    let slopes = counts
        .windows(2)
        .map(|w| if w[0] == 0 { 0.0 } else { (w[1] as f64 / w[0] as f64).log2() })
        .collect();
    ScaleProfile {
        rhos,
        counts,
        raw_counts,
        slopes,
    }
}

/// Cover counts of the iterated products of a symmetric set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuzsaReport {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub n4: usize,
    /// `N(A^4) >= N(A^3) N(A) / N(A^2)` fails.
    pub four_term_violated: bool,
    /// `N(A^3) / N(A)`, the tripling ratio.
    pub tripling: f64,
}

/// Diagnostic only: greedy counts need not satisfy the inequality exactly.
pub fn ruzsa_report(a: &DeltaNet) -> Result<RuzsaReport> {
    let s = a.symmetric_closure()?;
    let s2 = product_set(&s, &s, None)?;
    let s3 = product_set(&s2, &s, None)?;
    let s4 = product_set(&s3, &s, None)?;
    let (n1, n2, n3, n4) = (s.len(), s2.len(), s3.len(), s4.len());
    Ok(RuzsaReport {
        n1,
        n2,
        n3,
        n4,
        four_term_violated: (n4 as f64) * (n2 as f64) < (n3 as f64) * (n1 as f64),
        tripling: n3 as f64 / n1 as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{dist, exp_unchecked, sample_ball, torus_through};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_points(tag: GroupTag, n: usize, r: f64, seed: u64) -> Vec<GroupElement> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| exp_unchecked(&sample_ball(&mut rng, tag, r))).collect()
    }

    fn segment(tag: GroupTag, dir: [f64; 3], len: f64, step: f64) -> Vec<GroupElement> {
        let d = LieVector::new(tag, dir).normalized();
        let n = (len / step).round() as usize;
        (0..=n).map(|i| exp_unchecked(&((i as f64 * step) * d))).collect()
    }

    #[test]
    fn trivial_nets() {
        let tag = GroupTag::Sl2r;
        let e = GroupElement::identity(tag);
        assert_eq!(build_net(&[e], 0.1).unwrap().len(), 1);
        let g = exp_unchecked(&LieVector::new(tag, [0.05, 0.0, 0.0]));
        assert_eq!(build_net(&[e, g], 0.1).unwrap().len(), 1);
    }

    #[test]
    fn rejects_points_outside_chart() {
        let g = exp_unchecked(&LieVector::new(GroupTag::Su2, [0.0, 0.0, 1.6]));
        assert!(matches!(build_net(&[g], 0.1), Err(Error::OutsideChart { .. })));
    }

    #[test]
    fn random_net_is_separated_and_covers() {
        for tag in [GroupTag::Sl2r, GroupTag::Su2] {
            let pts = random_points(tag, 1000, 0.1, 11);
            let net = build_net(&pts, 0.02).unwrap();
            let elems = net.points();
            for i in 0..elems.len() {
                for j in i + 1..elems.len() {
                    assert!(dist(&elems[i], &elems[j]).unwrap() > 0.02);
                }
            }
            for p in &pts {
                assert!(elems.iter().any(|q| dist(q, p).unwrap() <= 0.02 + 1e-12));
            }
        }
    }

    #[test]
    fn grid_queries_match_brute_force() {
        let tag = GroupTag::Sl2r;
        let pts = random_points(tag, 3000, 0.45, 12);
        let net = build_net(&pts, 0.01).unwrap();
        let elems = net.points();
        for q in random_points(tag, 100, 0.45, 13) {
            for r in [0.01, 0.03] {
                let brute = elems.iter().filter(|p| dist(&q, p).unwrap() <= r).count();
                assert_eq!(net.count_near(&q, r), brute);
            }
        }
    }

    #[test]
    fn thinning_is_idempotent() {
        let pts = random_points(GroupTag::Su2, 800, 0.2, 3);
        let net = build_net(&pts, 0.03).unwrap();
        let again = build_net(&net.points(), 0.03).unwrap();
        assert_eq!(again.len(), net.len());
        for (a, b) in net.coords().iter().zip(again.coords()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covering_trivial_cases() {
        assert_eq!(
            covering_number(GroupTag::Su2, &[], 0.1),
            CoverCounts { n_cover: 0, n_packing: 0 }
        );
        let far: Vec<[f64; 3]> = (0..5).map(|i| [0.0, 0.0, -0.4 + 0.2 * i as f64]).collect();
        assert_eq!(
            covering_number(GroupTag::Su2, &far, 0.05),
            CoverCounts { n_cover: 5, n_packing: 5 }
        );
    }

    #[test]
    fn segment_cover_matches_one_dimensional_count() {
        let tag = GroupTag::Sl2r;
        let len = 0.4;
        let net = build_net(&segment(tag, [1.0, 0.0, 0.0], len, 1e-3), 2e-3).unwrap();
        for rho in [0.01, 0.02, 0.05] {
            let c = net.covering_number(rho);
            let n = c.n_cover as f64;
            assert!(n >= len / (2.0 * rho) && n <= 3.0 * len / rho, "rho {rho}: {n}");
            assert!(c.n_packing <= c.n_cover);
        }
    }

    #[test]
    fn product_trivial_cases() {
        let tag = GroupTag::Sl2r;
        let e = build_net(&[GroupElement::identity(tag)], 0.01).unwrap();
        let p = product_set(&e, &e, Some(&e)).unwrap();
        assert_eq!(p.len(), 1);
        let g = exp_unchecked(&LieVector::new(tag, [0.05, 0.02, -0.01]));
        let a = build_net(&[GroupElement::identity(tag), g], 0.01).unwrap();
        let aaa = product_set(&a, &a, Some(&a)).unwrap();
        let mut gk = GroupElement::identity(tag);
        for _ in 0..4 {
            assert!(aaa.find_near(&gk, 0.01 + 1e-12).is_some());
            gk = gk * g;
        }
    }

    #[test]
    fn torus_segment_triples_additively() {
        let tag = GroupTag::Sl2r;
        let delta = 1e-3;
        let a = build_net(&segment(tag, [1.0, 0.0, 0.0], 0.1, delta * 1.5), delta).unwrap();
        let aaa = product_set(&a, &a, Some(&a)).unwrap();
        let ratio = aaa.len() as f64 / a.len() as f64;
        assert!((2.5..=4.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn product_overflow_is_reported() {
        let tag = GroupTag::Su2;
        let g = exp_unchecked(&LieVector::new(tag, [0.0, 0.0, 1.4]));
        let a = build_net(&[g], 0.01).unwrap();
        assert!(matches!(product_set(&a, &a, None), Err(Error::ChartOverflow { .. })));
    }

    #[test]
    fn restrict_near_cases() {
        let tag = GroupTag::Sl2r;
        let delta = 2f64.powi(-8);
        let pts = random_points(tag, 4000, 0.12, 21);
        let net = build_net(&pts, delta).unwrap();
        let all = restrict_near(&net, &Target::Subspace(Subspace::full(3)), 0.0);
        assert_eq!(all.len(), net.len());

        let a = GroupElement::sl2r(0.3f64.exp(), 0.0, 0.0, (-0.3f64).exp()).unwrap();
        let torus = torus_through(&a).unwrap();
        let tnet = build_net(&segment(tag, [1.0, 0.0, 0.0], 0.4, delta), delta).unwrap();
        let same = restrict_near(&tnet, &Target::Torus(torus), delta);
        assert_eq!(same.len(), tnet.len());

        let near = restrict_near(&net, &Target::Torus(torus), 2.0 * delta);
        // Chart distance from the torus, minimized over the whole subgroup.
        let brute = net
            .points()
            .iter()
            .filter(|x| {
                (-4000..=4000).any(|k| {
                    let t = exp_unchecked(&LieVector::new(tag, [k as f64 * 1e-4, 0.0, 0.0]));
                    dist(&t, x).unwrap() <= 2.0 * delta
                })
            })
            .count();
        let got = near.len() as f64;
        assert!(got <= 2.0 * brute as f64 && brute as f64 <= 2.0 * got, "{got} vs {brute}");
    }

    #[test]
    fn profile_slopes() {
        let tag = GroupTag::Su2;
        let single = build_net(&[GroupElement::identity(tag)], 0.01).unwrap();
        let p = scale_profile(&single, 0.01);
        assert!(p.counts.iter().all(|&c| c == 1));
        assert!(p.slopes.iter().all(|&s| s == 0.0));

        let seg = build_net(&segment(tag, [0.0, 1.0, 0.0], 0.9, 5e-4), 1e-3).unwrap();
        let p = scale_profile(&seg, 2e-3);
        // Middle scales: drop the two coarsest and the finest halving.
        for s in &p.slopes[2..p.slopes.len() - 1] {
            assert!((s - 1.0).abs() <= 0.2, "{:?}", p.slopes);
        }
    }

    #[test]
    fn ball_net_profile_is_three_dimensional() {
        let tag = GroupTag::Su2;
        let delta = 0.01;
        // Lattice at spacing just above the Euclidean-to-chart distortion.
        let kappa = crate::group::chart_distortion(tag, 0.3, delta) * 1.001;
        let h = kappa * delta;
        let n = (0.3 / h).ceil() as i64;
        let mut coords = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let c = [i as f64 * h, j as f64 * h, k as f64 * h];
                    if norm(&c) <= 0.3 {
                        coords.push(c);
                    }
                }
            }
        }
        let net = build_net_from_coords(tag, coords, delta).unwrap();
        let p = scale_profile(&net, 2.0 * h);
        let mid = &p.slopes[2..p.slopes.len() - 1];
        assert!(!mid.is_empty());
        for s in mid {
            assert!((s - 3.0).abs() <= 0.4, "{:?}", p.slopes);
        }
    }

    #[test]
    fn ruzsa_report_on_small_set() {
        let pts = random_points(GroupTag::Su2, 30, 0.1, 5);
        let a = build_net(&pts, 0.02).unwrap();
        let r = ruzsa_report(&a).unwrap();
        assert!(r.n1 <= r.n2 && r.n2 <= r.n3 && r.n3 <= r.n4, "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn sandwich_and_monotonicity(seed in any::<u64>(), su2 in any::<bool>()) {
            let tag = if su2 { GroupTag::Su2 } else { GroupTag::Sl2r };
            let pts = random_points(tag, 400, 0.2, seed);
            let net = build_net(&pts, 0.01).unwrap();
            let mut prev = usize::MAX;
            for rho in [0.01, 0.02, 0.04, 0.08] {
                let c = net.covering_number(rho);
                prop_assert!(c.n_packing <= c.n_cover);
                prop_assert!(c.n_cover <= net.len());
                prop_assert!(c.n_packing <= prev);
                prev = c.n_cover;
            }
        }
    }
}
