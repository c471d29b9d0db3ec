//! Uniform grids over log-chart coordinates.
//!
//! Chart distance and Euclidean distance of log coordinates agree up to the
//! factor `chart_distortion`, so a query of chart radius `r` only needs the
//! cells within Euclidean radius `kappa * r`.

use crate::group::{chart_distortion, exp_unchecked, log_coords, GroupElement, GroupTag, LieVector};
use std::cmp::Ordering;
use std::collections::HashMap;

pub(crate) type Coord = [f64; 3];

pub(crate) fn norm(c: &Coord) -> f64 {
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

fn euclid(a: &Coord, b: &Coord) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    norm(&d)
}

pub(crate) fn element(tag: GroupTag, c: &Coord) -> GroupElement {
    exp_unchecked(&LieVector::new(tag, *c))
}

pub(crate) fn coords_of(g: &GroupElement) -> Option<Coord> {
    log_coords(g.tag(), g.matrix()).map(|v| [v[0], v[1], v[2]])
}

/// Chart distance from the point whose inverse is `query_inv` to `y`.
fn chart_dist_from(tag: GroupTag, query_inv: &GroupElement, y: &Coord) -> f64 {
    match coords_of(&(*query_inv * element(tag, y))) {
        Some(c) => norm(&c),
        None => f64::INFINITY,
    }
}

pub(crate) fn chart_dist(tag: GroupTag, x: &Coord, y: &Coord) -> f64 {
    chart_dist_from(tag, &element(tag, x).inverse(), y)
}

pub(crate) fn cell_of(c: &Coord, cell: f64) -> [i64; 3] {
    [
        (c[0] / cell).floor() as i64,
        (c[1] / cell).floor() as i64,
        (c[2] / cell).floor() as i64,
    ]
}

fn cmp_coords(a: &Coord, b: &Coord) -> Ordering {
    a[0].total_cmp(&b[0])
        .then(a[1].total_cmp(&b[1]))
        .then(a[2].total_cmp(&b[2]))
}

/// Lexicographic order on grid cells, ties broken by coordinates.
pub(crate) fn sort_by_cells(points: &mut [Coord], cell: f64) {
    let key = |c: &Coord| cell_of(c, cell);
    let sorted = points.windows(2).all(|w| {
        key(&w[0]).cmp(&key(&w[1])).then_with(|| cmp_coords(&w[0], &w[1])) != Ordering::Greater
    });
    if !sorted {
        points.sort_by(|a, b| key(a).cmp(&key(b)).then_with(|| cmp_coords(a, b)));
    }
}

pub(crate) fn max_norm(points: &[Coord]) -> f64 {
    points.iter().map(norm).fold(0.0, f64::max)
}

/// Index over points stored in lexicographic cell order: each `(i, j)`
/// column is a contiguous range sorted by `k`.
#[derive(Clone, Debug)]
pub(crate) struct SortedGrid {
    tag: GroupTag,
    pub cell: f64,
    radius: f64,
    columns: HashMap<(i64, i64), (usize, usize)>,
}

impl SortedGrid {
    /// Grid with cells sized for queries of chart radius `r` among points
    /// whose logs have norm at most `radius`.
    pub fn new(tag: GroupTag, r: f64, radius: f64) -> Self {
        SortedGrid {
            tag,
            cell: (chart_distortion(tag, radius, r) * r).max(1e-300),
            radius,
            columns: HashMap::new(),
        }
    }

    pub fn build(tag: GroupTag, r: f64, points: &[Coord]) -> Self {
        let mut g = SortedGrid::new(tag, r, max_norm(points));
        for i in 0..points.len() {
            g.push(points, i);
        }
        g
    }

    /// Registers `points[idx]`, which must follow every registered point in
    /// cell order.
    pub fn push(&mut self, points: &[Coord], idx: usize) {
        let c = cell_of(&points[idx], self.cell);
        let e = self.columns.entry((c[0], c[1])).or_insert((idx, idx));
        debug_assert_eq!(e.1, idx, "points pushed out of cell order");
        e.1 = idx + 1;
    }

    /// First registered point within chart distance `r` of `q`.
    pub fn find_within(&self, points: &[Coord], q: &Coord, r: f64) -> Option<usize> {
        let mut found = None;
        self.visit(points, q, r, |i| {
            found = Some(i);
            false
        });
        found
    }

    pub fn count_within(&self, points: &[Coord], q: &Coord, r: f64) -> usize {
        let mut n = 0;
        self.visit(points, q, r, |_| {
            n += 1;
            true
        });
        n
    }

    /// Calls `f` on registered points within chart distance `r` of `q` until
    /// it returns false.
    fn visit(&self, points: &[Coord], q: &Coord, r: f64, mut f: impl FnMut(usize) -> bool) {
        let radius = self.radius.max(norm(q));
        let eu = chart_distortion(self.tag, radius, r) * r * (1.0 + 1e-12);
        let lo = cell_of(&[q[0] - eu, q[1] - eu, q[2] - eu], self.cell);
        let hi = cell_of(&[q[0] + eu, q[1] + eu, q[2] + eu], self.cell);
        let q_inv = element(self.tag, q).inverse();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                let Some(&(s, e)) = self.columns.get(&(i, j)) else {
                    continue;
                };
                let col = &points[s..e];
                let start = col.partition_point(|p| ((p[2] / self.cell).floor() as i64) < lo[2]);
                for (off, p) in col[start..].iter().enumerate() {
                    if ((p[2] / self.cell).floor() as i64) > hi[2] {
                        break;
                    }
                    if euclid(p, q) <= eu && chart_dist_from(self.tag, &q_inv, p) <= r && !f(s + start + off) {
                        return;
                    }
                }
            }
        }
    }
}

/// Greedy selection in cell order: a point is kept unless it lies within
/// chart distance `r` (closed) of a point kept earlier. Returns the kept
/// points in cell order and their index.
pub(crate) fn greedy_select(tag: GroupTag, mut points: Vec<Coord>, r: f64) -> (Vec<Coord>, SortedGrid) {
    let radius = max_norm(&points);
    let mut grid = SortedGrid::new(tag, r, radius);
    sort_by_cells(&mut points, grid.cell);
    let mut kept = 0usize;
    for i in 0..points.len() {
        let p = points[i];
        let accepted = &points[..kept];
        // Neighbouring inputs are usually covered by the most recent center.
        if kept > 0 && chart_dist(tag, &accepted[kept - 1], &p) <= r {
            continue;
        }
        if grid.find_within(accepted, &p, r).is_some() {
            continue;
        }
        points[kept] = p;
        grid.push(&points, kept);
        kept += 1;
    }
    points.truncate(kept);
    points.shrink_to_fit();
    (points, grid)
}

/// Hash grid for insertion in arbitrary order; rebuckets when a point beyond
/// the current radius arrives.
pub(crate) struct DynamicGrid {
    tag: GroupTag,
    r: f64,
    radius: f64,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
    pub points: Vec<Coord>,
    elements: Vec<GroupElement>,
}

impl DynamicGrid {
    pub fn new(tag: GroupTag, r: f64, radius: f64) -> Self {
        DynamicGrid {
            tag,
            r,
            radius,
            cell: chart_distortion(tag, radius, r) * r,
            cells: HashMap::new(),
            points: Vec::new(),
            elements: Vec::new(),
        }
    }

    fn rebucket(&mut self, radius: f64) {
        self.radius = radius;
        self.cell = chart_distortion(self.tag, radius, self.r) * self.r;
        self.cells.clear();
        for (i, p) in self.points.iter().enumerate() {
            self.cells.entry(cell_of(p, self.cell)).or_default().push(i as u32);
        }
    }

    /// Inserts `p` unless a stored point lies within `r`; `cap` bounds the
    /// radius used for rebucketing.
    pub fn insert_if_far(&mut self, p: Coord, g: GroupElement, cap: f64) -> bool {
        let n = norm(&p);
        if n > self.radius {
            self.rebucket(n.max(1.05 * self.radius).min(cap.max(n)));
        }
        if self.covers(&p, &g) {
            return false;
        }
        self.cells.entry(cell_of(&p, self.cell)).or_default().push(self.points.len() as u32);
        self.points.push(p);
        self.elements.push(g);
        true
    }

    /// Whether a stored point lies within `r` of `p` (whose element is `g`).
    /// Points beyond the current radius are never covered.
    pub fn covers(&self, p: &Coord, g: &GroupElement) -> bool {
        if norm(p) > self.radius {
            return false;
        }
        let eu = chart_distortion(self.tag, self.radius, self.r) * self.r * (1.0 + 1e-12);
        let lo = cell_of(&[p[0] - eu, p[1] - eu, p[2] - eu], self.cell);
        let hi = cell_of(&[p[0] + eu, p[1] + eu, p[2] + eu], self.cell);
        let q_inv = g.inverse();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let Some(ids) = self.cells.get(&[i, j, k]) else {
                        continue;
                    };
                    for &id in ids {
                        let y = &self.points[id as usize];
                        if euclid(y, p) <= eu {
                            let d = coords_of(&(q_inv * self.elements[id as usize])).map_or(f64::INFINITY, |c| norm(&c));
                            if d <= self.r {
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }
}
