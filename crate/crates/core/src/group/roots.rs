use super::{log_unchecked, GroupElement, GroupTag, LieVector, C64, REGULARITY_TOL};
use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};

/// Root-space decomposition of `Ad a` for a regular `a`.
#[derive(Clone, Debug)]
pub struct RootData {
    pub torus_direction: LieVector,
    /// Complex eigenvectors of `Ad a`, one per root, unit length.
    pub root_vectors: [Vector3<C64>; 2],
    /// `chi_alpha(a)` and `chi_{-alpha}(a)`.
    pub characters: [C64; 2],
    /// `min |chi - 1|` over the roots.
    pub gap: f64,
}

impl RootData {
    /// `V diag(1, chi, chi^-1) V^-1`, which should equal `Ad a`.
    pub fn reconstruct(&self) -> Option<Matrix3<C64>> {
        let t = self.torus_direction.coords.map(|x| C64::new(x, 0.0));
        let v = Matrix3::from_columns(&[t, self.root_vectors[0], self.root_vectors[1]]);
        let d = Matrix3::from_diagonal(&Vector3::new(
            C64::new(1.0, 0.0),
            self.characters[0],
            self.characters[1],
        ));
        Some(v * d * v.try_inverse()?)
    }
}

/// Half the nonzero eigenvalues of `ad X`: `sqrt(q)` as a complex number.
fn half_root(x: &LieVector) -> C64 {
    let q = x.square_scalar();
    if q >= 0.0 {
        C64::new(q.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-q).sqrt())
    }
}

/// `min |e^{±2w} - 1|`, evaluated without cancellation.
fn gap_of(w: C64) -> f64 {
    if w.im == 0.0 {
        let r = 2.0 * w.re.abs();
        (-r).exp_m1().abs().min(r.exp_m1().abs())
    } else {
        2.0 * w.im.sin().abs()
    }
}

/// Gap from the trace alone, for elements with no logarithm.
fn gap_from_trace(tag: GroupTag, tr: f64) -> f64 {
    match tag {
        GroupTag::Su2 => (4.0 - tr * tr).max(0.0).sqrt(),
        GroupTag::Sl2r => {
            if tr.abs() < 2.0 {
                (4.0 - tr * tr).sqrt()
            } else {
                let t = tr.abs();
                let mu = (t + (t * t - 4.0).sqrt()) / 2.0;
                1.0 - mu.powi(-2)
            }
        }
    }
}

/// Surrogate for `d(a, S)` where `S` is the set of singular elements: the
/// character gap `min |chi - 1|`, zero exactly on `S`.
pub fn distance_to_singular(a: &GroupElement) -> f64 {
    match log_unchecked(a) {
        Ok(x) => gap_of(half_root(&x)),
        Err(_) => gap_from_trace(a.tag(), a.trace()),
    }
}

/// Null vector of a rank-two complex 3x3 matrix via the best row cross product.
fn null_vector(m: &Matrix3<C64>) -> Vector3<C64> {
    let rows: Vec<Vector3<C64>> = (0..3).map(|i| m.row(i).transpose()).collect();
    let cross = |a: &Vector3<C64>, b: &Vector3<C64>| {
        Vector3::new(
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        )
    };
    let mut best = Vector3::zeros();
    let mut best_norm = -1.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(&rows[i], &rows[j]);
        let n = c.norm();
        if n > best_norm {
            best_norm = n;
            best = c;
        }
    }
    best / C64::new(best_norm, 0.0)
}

/// Eigen-decomposition of `Ad a` over the complex numbers.
///
/// The characters are read off `ad(log a)`, whose nonzero eigenvalues are
/// `±2 sqrt(-det log a)`; root vectors are the matching eigenvectors.
pub fn root_data(a: &GroupElement) -> Result<RootData> {
    let x = log_unchecked(a)?;
    let w = half_root(&x);
    let gap = gap_of(w);
    if gap < REGULARITY_TOL {
        return Err(Error::SingularElement { gap });
    }
    let adx = super::ad(&x).map(|v| C64::new(v, 0.0));
    let mut root_vectors = [Vector3::zeros(); 2];
    for (k, lambda) in [w * 2.0, -w * 2.0].into_iter().enumerate() {
        let shifted = adx - Matrix3::identity() * lambda;
        root_vectors[k] = null_vector(&shifted);
    }
    Ok(RootData {
        torus_direction: x.normalized(),
        root_vectors,
        characters: [(w * 2.0).exp(), (-w * 2.0).exp()],
        gap,
    })
}

/// A one-parameter torus `exp(R t)` through a regular element.
#[derive(Clone, Copy, Debug)]
pub struct Torus {
    pub base: GroupElement,
    pub direction: LieVector,
}

impl Torus {
    /// Distance of `log x` to the line `R t` in log coordinates.
    pub fn chart_distance(&self, x: &LieVector) -> f64 {
        let t = &self.direction.coords;
        (x.coords - t * t.dot(&x.coords)).norm()
    }

    pub fn point(&self, s: f64) -> GroupElement {
        super::exp_unchecked(&(s * self.direction))
    }
}

/// The centralizer torus of a regular element.
pub fn torus_through(a: &GroupElement) -> Result<Torus> {
    let data = root_data(a)?;
    Ok(Torus {
        base: *a,
        direction: data.torus_direction,
    })
}
