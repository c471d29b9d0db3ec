//! Quantitative linear algebra on subspaces: Grassmannian distance, the
//! angle pivot, graded frames and square-angle normalization.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

const RANK_TOL: f64 = 1e-12;

/// A linear subspace of `R^n` stored as an orthonormal column frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: DMatrix::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: DMatrix::identity(ambient, ambient),
        }
    }

    /// The span of arbitrary vectors; numerically dependent ones are dropped.
    pub fn span(ambient: usize, vectors: &[DVector<f64>]) -> Self {
        if vectors.is_empty() {
            return Self::zero(ambient);
        }
        let m = DMatrix::from_columns(vectors);
        let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if scale == 0.0 {
            return Self::zero(ambient);
        }
        let svd = m.svd(true, false);
        let u = svd.u.expect("left singular vectors");
        let cols: Vec<DVector<f64>> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > RANK_TOL * scale * (vectors.len() as f64).sqrt())
            .map(|(i, _)| u.column(i).into_owned())
            .collect();
        Self::from_orthonormal(ambient, &cols)
    }

    /// Wraps columns that are already orthonormal.
    pub fn from_orthonormal(ambient: usize, cols: &[DVector<f64>]) -> Self {
        if cols.is_empty() {
            return Self::zero(ambient);
        }
        Subspace {
            ambient,
            basis: DMatrix::from_columns(cols),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        (0..self.dim()).map(|i| self.basis.column(i).into_owned()).collect()
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.dim() == 0 {
            return DVector::zeros(self.ambient);
        }
        &self.basis * (self.basis.transpose() * x)
    }

    /// `d(x, W)`; for the zero subspace this is `||x||`.
    pub fn distance_to(&self, x: &DVector<f64>) -> f64 {
        (x - self.project(x)).norm()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.distance_to(x) <= tol
    }

    pub fn orthogonal_complement(&self) -> Subspace {
        let n = self.ambient;
        let p = DMatrix::identity(n, n) - &self.basis * self.basis.transpose();
        let eig = SymmetricEigen::new(p);
        let cols: Vec<DVector<f64>> = (0..n)
            .filter(|&i| eig.eigenvalues[i] > 0.5)
            .map(|i| eig.eigenvectors.column(i).into_owned())
            .collect();
        Self::from_orthonormal(n, &cols)
    }

    /// Largest deviation of the frame from orthonormality.
    pub fn frame_error(&self) -> f64 {
        let k = self.dim();
        (self.basis.transpose() * &self.basis - DMatrix::identity(k, k)).amax()
    }
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return vec![];
    }
    m.singular_values().iter().copied().collect()
}

/// `max over unit u in W of d(u, W2)`, the sine of the largest principal angle.
pub fn subspace_distance(w: &Subspace, w2: &Subspace) -> Result<f64> {
    if w.dim() == 0 {
        return Err(Error::ZeroSubspace);
    }
    if w.ambient != w2.ambient {
        return Err(Error::InvalidArgument("ambient dimensions differ".into()));
    }
    let q1 = &w.basis;
    let resid = if w2.dim() == 0 {
        q1.clone()
    } else {
        q1 - &w2.basis * (w2.basis.transpose() * q1)
    };
    Ok(singular_values(&resid).into_iter().fold(0.0, f64::max))
}

/// Hyperplane of `W1` cut out by the direction in which `W1` leaves `W2`.
///
/// Returns `(W0, alpha)` with `alpha = d(W1, W2)`. Any `x` within `r` of both
/// subspaces lies within `3r / alpha` of `W0`.
pub fn angle_pivot(w1: &Subspace, w2: &Subspace) -> Result<(Subspace, f64)> {
    if w1.dim() != w2.dim() || w1.dim() == 0 {
        return Err(Error::InvalidArgument(
            "angle pivot needs equal nonzero dimensions".into(),
        ));
    }
    let q1 = &w1.basis;
    let resid = q1 - &w2.basis * (w2.basis.transpose() * q1);
    let svd = resid.clone().svd(false, true);
    let (imax, alpha) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, -1.0), |b, (i, s)| if s > b.1 { (i, s) } else { b });
    if alpha <= 1e-12 {
        return Err(Error::EqualSubspaces { distance: alpha });
    }
    let v_t = svd.v_t.expect("right singular vectors");
    let c = v_t.row(imax).transpose();
    let p = &resid * c;
    let f = &p / p.norm();
    // W0 = W1 ∩ ker f, i.e. the image under q1 of the complement of q1^T f.
    let g = q1.transpose() * &f;
    let inner = Subspace::span(g.len(), &[g]).orthogonal_complement();
    let cols: Vec<DVector<f64>> = inner.vectors().iter().map(|c| q1 * c).collect();
    Ok((Subspace::from_orthonormal(w1.ambient, &cols), alpha))
}

/// Extremal singular values of the frame map `(t_i) -> sum t_i u_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameBoundCertificate {
    pub rho: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub paper_bound_ok: bool,
}

/// Distances `d(u_i, span(u_1..u_{i-1}))` for a list of vectors.
pub fn graded_separations(u: &[DVector<f64>]) -> Vec<f64> {
    let mut frame: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::with_capacity(u.len());
    for v in u {
        let mut r = v.clone();
        // Two passes of Gram-Schmidt keep the residual accurate.
        for _ in 0..2 {
            for q in &frame {
                r -= q * q.dot(&r);
            }
        }
        let d = r.norm();
        out.push(d);
        if d > 0.0 {
            frame.push(r / d);
        }
    }
    out
}

/// Certificate for a graded family of unit vectors with separation `rho`.
///
/// The bound is taken with `d` equal to the number of vectors.
pub fn graded_frame_bound(u: &[DVector<f64>], rho: f64) -> Result<FrameBoundCertificate> {
    if u.is_empty() {
        return Err(Error::InvalidArgument("empty frame".into()));
    }
    for (i, v) in u.iter().enumerate() {
        if (v.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("vector {i} is not unit")));
        }
    }
    for (i, d) in graded_separations(u).into_iter().enumerate() {
        if d < rho * (1.0 - 1e-12) {
            return Err(Error::SeparationViolated { index: i });
        }
    }
    let theta = DMatrix::from_columns(u);
    let sv = singular_values(&theta);
    let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let d = u.len() as f64;
    Ok(FrameBoundCertificate {
        rho,
        sigma_min,
        sigma_max,
        paper_bound_ok: sigma_min >= rho.powf(2.0 * d) && sigma_max <= d.sqrt(),
    })
}

/// A linear automorphism fixing the hyperplane `F0` and sending a vector of
/// `F1` onto the unit normal of `F0`.
#[derive(Clone, Debug)]
pub struct SquareAngleNormalizer {
    pub map: DMatrix<f64>,
    /// `min(d(F1, F0), 1/2)`.
    pub rho: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl SquareAngleNormalizer {
    pub fn distortion(&self) -> f64 {
        self.sigma_max.max(1.0 / self.sigma_min)
    }

    /// The bound `rho^{-8d}` that the distortion must respect.
    pub fn paper_bound(&self) -> f64 {
        self.rho.powf(-8.0 * self.map.nrows() as f64)
    }
}

pub fn square_angle_normalizer(f0: &Subspace, f1: &Subspace) -> Result<SquareAngleNormalizer> {
    let n = f0.ambient;
    if f0.dim() + 1 != n || f1.ambient != n {
        return Err(Error::InvalidArgument("F0 must be a hyperplane".into()));
    }
    if f1.dim() == 0 || f1.dim() >= n {
        return Err(Error::InvalidArgument("F1 must be a proper nonzero subspace".into()));
    }
    let normal = f0.orthogonal_complement().basis.column(0).into_owned();
    let proj = f1.project(&normal);
    let beta = proj.norm();
    if beta < 1e-12 {
        return Err(Error::NotTransverse { distance: beta });
    }
    let v = &proj / beta;
    let p = &v - &normal * beta;
    let image_of_normal = (&normal - &p) / beta;
    let map = DMatrix::identity(n, n) + (image_of_normal - &normal) * normal.transpose();
    let sv = singular_values(&map);
    Ok(SquareAngleNormalizer {
        sigma_min: sv.iter().copied().fold(f64::INFINITY, f64::min),
        sigma_max: sv.iter().copied().fold(0.0, f64::max),
        rho: beta.min(0.5),
        map,
    })
}
