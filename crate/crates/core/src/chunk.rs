//! Maps of bounded complexity and submanifold chunks.
//!
//! A map `f: B_rho -> R^d` has complexity `1/rho` when `f(0) = 0`, `f'(0)` is
//! `1/rho`-bi-Lipschitz and `f'` is `1/rho`-Lipschitz on `B_rho`. Audits
//! check these three conditions on random samples.

use crate::error::{Error, Result};
use crate::group::{
    adjoint, distance_to_singular, exp_unchecked, log_coords, root_data, GroupElement, GroupTag,
    LieVector, REGULARITY_TOL,
};
use crate::subspace::{square_angle_normalizer, subspace_distance, Subspace};
use crate::testkit::random_unit;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

type EvalFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Relative slack granted to sampled audit quantities.
pub const AUDIT_SLACK: f64 = 0.05;
pub const DEFAULT_AUDIT_SEED: u64 = 0x5eed_a0d1;
pub const DEFAULT_AUDIT_SAMPLES: usize = 400;

/// A smooth self-map of `R^dim` defined on the ball of radius `domain_radius`.
#[derive(Clone)]
pub struct SmoothMap {
    dim: usize,
    domain_radius: f64,
    eval: EvalFn,
    jacobian: Option<JacobianFn>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("dim", &self.dim)
            .field("domain_radius", &self.domain_radius)
            .field("closed_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl SmoothMap {
    pub fn new<F>(dim: usize, domain_radius: f64, eval: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        SmoothMap {
            dim,
            domain_radius,
            eval: Arc::new(eval),
            jacobian: None,
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn identity(dim: usize, domain_radius: f64) -> Self {
        Self::linear(DMatrix::identity(dim, dim), domain_radius)
    }

    pub fn linear(a: DMatrix<f64>, domain_radius: f64) -> Self {
        let dim = a.nrows();
        let a2 = a.clone();
        SmoothMap::new(dim, domain_radius, move |x| &a * x).with_jacobian(move |_| a2.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.eval)(x)
    }

    pub fn has_closed_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.jacobian {
            Some(j) => j(x),
            None => self.fd_jacobian(x),
        }
    }

    /// Central differences with step `1e-6 * domain_radius`.
    pub fn fd_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let h = 1e-6 * self.domain_radius;
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let col = (self.eval(&xp) - self.eval(&xm)) / (2.0 * h);
            out.set_column(j, &col);
        }
        out
    }

    /// `self` restricted to a smaller ball.
    pub fn restricted(&self, radius: f64) -> SmoothMap {
        let mut out = self.clone();
        out.domain_radius = radius.min(self.domain_radius);
        out
    }
}

fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

fn extreme_singular_values(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.singular_values();
    (
        sv.iter().copied().fold(f64::INFINITY, f64::min),
        sv.iter().copied().fold(0.0, f64::max),
    )
}

fn sample_ball<R: Rng>(rng: &mut R, n: usize, r: f64) -> DVector<f64> {
    random_unit(rng, n) * (r * rng.random::<f64>().powf(1.0 / n as f64))
}

/// Outcome of a sampled complexity audit.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityAudit {
    pub rho: f64,
    /// Extremal singular values of `f'(0)`.
    pub f0_bilip: (f64, f64),
    /// Largest sampled `||f'(x) - f'(y)|| / ||x - y||`.
    pub deriv_lip: f64,
    /// `||f(0)||`.
    pub origin_residual: f64,
    pub samples: usize,
    pub seed: u64,
    pub slack: f64,
    pub verdict: bool,
}

/// Checks whether `f` has complexity `1/rho` on `B_rho`.
pub fn audit_complexity(f: &SmoothMap, rho: f64, n_samples: usize, seed: u64) -> Result<ComplexityAudit> {
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(Error::InvalidArgument(format!("audit radius {rho} outside (0, 1/2]")));
    }
    if n_samples < 100 {
        return Err(Error::InvalidArgument("an audit needs at least 100 samples".into()));
    }
    if f.domain_radius < rho * (1.0 - 1e-12) {
        return Err(Error::DomainTooSmall {
            radius: f.domain_radius,
            rho,
        });
    }
    let n = f.dim;
    let zero = DVector::zeros(n);
    let origin_residual = f.eval(&zero).norm();
    let j0 = f.jacobian(&zero);
    let f0_bilip = extreme_singular_values(&j0);
    let deriv_lip = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = sample_ball(&mut rng, n, rho);
            let y = match i % 3 {
                0 => zero.clone(),
                1 => sample_ball(&mut rng, n, rho),
                _ => {
                    let step = random_unit(&mut rng, n) * (1e-2 * rho);
                    let y = &x + step;
                    if y.norm() > rho {
                        &x - (&y - &x)
                    } else {
                        y
                    }
                }
            };
            let dx = (&x - &y).norm();
            if dx == 0.0 {
                return 0.0;
            }
            let dj = if i % 3 == 0 {
                f.jacobian(&x) - &j0
            } else {
                f.jacobian(&x) - f.jacobian(&y)
            };
            op_norm(&dj) / dx
        })
        .reduce(|| 0.0, f64::max);
    let s = 1.0 + AUDIT_SLACK;
    let verdict = origin_residual <= 1e-10
        && f0_bilip.0 * s >= rho
        && f0_bilip.1 <= s / rho
        && deriv_lip <= s / rho;
    Ok(ComplexityAudit {
        rho,
        f0_bilip,
        deriv_lip,
        origin_residual,
        samples: n_samples,
        seed,
        slack: AUDIT_SLACK,
        verdict,
    })
}

/// Solves `f(x) = y` by damped Newton iteration started from the linear guess.
pub fn newton_solve(f: &SmoothMap, y: &DVector<f64>) -> Result<DVector<f64>> {
    let n = f.dim;
    let j0 = f.jacobian(&DVector::zeros(n));
    let mut x = j0
        .clone()
        .lu()
        .solve(y)
        .ok_or(Error::NewtonDivergence { residual: f64::INFINITY })?;
    let tol = 1e-14 * y.norm().max(1e-3);
    let mut r = f.eval(&x) - y;
    for _ in 0..80 {
        let rn = r.norm();
        if rn <= tol {
            return Ok(x);
        }
        let Some(dx) = f.jacobian(&x).lu().solve(&r) else {
            return Err(Error::NewtonDivergence { residual: rn });
        };
        let mut lambda = 1.0;
        loop {
            let cand = &x - &dx * lambda;
            let rc = f.eval(&cand) - y;
            if rc.norm() < (1.0 - lambda / 4.0) * rn || lambda < 1e-6 {
                x = cand;
                r = rc;
                break;
            }
            lambda /= 2.0;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NewtonDivergence { residual: f64::INFINITY });
        }
    }
    let rn = r.norm();
    if rn <= 1e-11 {
        Ok(x)
    } else {
        Err(Error::NewtonDivergence { residual: rn })
    }
}

/// Inverse of a map of complexity `1/rho`, defined on `B_{rho^3}`.
///
/// The inverse is evaluated by Newton's method; points where the iteration
/// fails evaluate to NaN. Construction validates the iteration on sampled
/// images of `B_{rho^3}` and on `B_{rho^3 / 2}`.
pub fn invert_certified(f: &SmoothMap, rho: f64) -> Result<SmoothMap> {
    let audit = audit_complexity(f, rho, DEFAULT_AUDIT_SAMPLES, DEFAULT_AUDIT_SEED)?;
    if !audit.verdict {
        return Err(Error::AuditFailed { rho });
    }
    let r3 = rho.powi(3);
    let n = f.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_AUDIT_SEED ^ 0x1);
    for i in 0..64 {
        let y = if i % 2 == 0 {
            f.eval(&sample_ball(&mut rng, n, r3))
        } else {
            sample_ball(&mut rng, n, r3 / 2.0)
        };
        let x = newton_solve(f, &y)?;
        let residual = (f.eval(&x) - &y).norm();
        if residual > 1e-9 {
            return Err(Error::NewtonDivergence { residual });
        }
    }
    let fe = f.clone();
    let fj = f.clone();
    Ok(SmoothMap::new(n, r3, move |y| {
        newton_solve(&fe, y).unwrap_or_else(|_| DVector::from_element(y.len(), f64::NAN))
    })
    .with_jacobian(move |y| {
        let x = newton_solve(&fj, y).unwrap_or_else(|_| DVector::from_element(y.len(), f64::NAN));
        fj.jacobian(&x)
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(y.len(), y.len(), f64::NAN))
    }))
}

/// `f o g` on `B_{rho^5}`; both factors must audit at `rho`.
pub fn compose_certified(f: &SmoothMap, g: &SmoothMap, rho: f64) -> Result<SmoothMap> {
    if f.dim != g.dim {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    for m in [f, g] {
        let audit = audit_complexity(m, rho, DEFAULT_AUDIT_SAMPLES, DEFAULT_AUDIT_SEED)?;
        if !audit.verdict {
            return Err(Error::AuditFailed { rho });
        }
    }
    let r5 = rho.powi(5);
    let (fe, ge) = (f.clone(), g.clone());
    let (fj, gj) = (f.clone(), g.clone());
    let composite = SmoothMap::new(f.dim, r5, move |x| fe.eval(&ge.eval(x))).with_jacobian(move |x| {
        let gx = gj.eval(x);
        fj.jacobian(&gx) * gj.jacobian(x)
    });
    let audit = audit_complexity(&composite, r5, DEFAULT_AUDIT_SAMPLES, DEFAULT_AUDIT_SEED)?;
    if !audit.verdict {
        return Err(Error::AuditFailed { rho: r5 });
    }
    Ok(composite)
}

/// Minimizes `||psi(c) - y||` over `c` in the ball of radius `radius` of
/// `R^k`, by projected Gauss-Newton from `start`.
fn gauss_newton<P>(psi: &P, k: usize, y: &Vector3<f64>, start: DVector<f64>, radius: f64) -> (f64, DVector<f64>)
where
    P: Fn(&DVector<f64>) -> Vector3<f64>,
{
    let project = |c: DVector<f64>| {
        let n = c.norm();
        if n > radius {
            c * (radius / n)
        } else {
            c
        }
    };
    let mut c = project(start);
    let mut best = (psi(&c) - y).norm();
    let h = 1e-7 * radius.max(1e-6);
    for _ in 0..30 {
        let base = psi(&c);
        let mut jac = DMatrix::zeros(3, k);
        for j in 0..k {
            let mut cp = c.clone();
            let mut cm = c.clone();
            cp[j] += h;
            cm[j] -= h;
            let col = (psi(&cp) - psi(&cm)) / (2.0 * h);
            for i in 0..3 {
                jac[(i, j)] = col[i];
            }
        }
        let r = DVector::from_iterator(3, (y - base).iter().copied());
        let Ok(step) = jac.svd(true, true).solve(&r, 1e-12) else {
            break;
        };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-4 {
            let cand = project(&c + &step * lambda);
            let val = (psi(&cand) - y).norm();
            if val < best {
                best = val;
                c = cand;
                improved = true;
                break;
            }
            lambda /= 2.0;
        }
        if !improved || step.norm() * lambda < 1e-15 {
            break;
        }
    }
    (best, c)
}

/// Distance from `y` to `psi(B_radius ∩ R^k)`: Gauss-Newton from the linear
/// guess, with a deterministic multi-start fallback when the first solve is
/// pinned to the boundary or fails to fit.
fn parametrized_distance<P>(psi: &P, k: usize, y: &Vector3<f64>, linear: &DMatrix<f64>, radius: f64) -> f64
where
    P: Fn(&DVector<f64>) -> Vector3<f64>,
{
    if k == 0 {
        return (psi(&DVector::zeros(0)) - y).norm();
    }
    let rhs = DVector::from_iterator(3, y.iter().copied());
    let start = linear
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(k));
    let (mut best, c) = gauss_newton(psi, k, y, start, radius);
    let on_boundary = c.norm() > radius * (1.0 - 1e-9);
    if on_boundary || best > 0.5 * y.norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xfa11_bac4);
        for _ in 0..32 {
            let s = sample_ball(&mut rng, k, radius);
            let (val, _) = gauss_newton(psi, k, y, s, radius);
            best = best.min(val);
        }
    }
    best
}

/// A submanifold chunk `base * exp(f(B_rho ∩ S))` for a linear subspace `S`.
#[derive(Clone, Debug)]
pub struct ChunkMap {
    pub base: GroupElement,
    pub map: SmoothMap,
    /// The linear subspace `S` whose image is the chunk.
    pub source: Subspace,
    /// `f'(0) S`.
    pub tangent: Subspace,
    pub rho: f64,
}

fn to_lie(tag: GroupTag, v: &DVector<f64>) -> LieVector {
    LieVector::new(tag, [v[0], v[1], v[2]])
}

fn dvec(v: &Vector3<f64>) -> DVector<f64> {
    DVector::from_iterator(3, v.iter().copied())
}

fn log_or_nan(g: &GroupElement) -> Vector3<f64> {
    log_coords(g.tag(), g.matrix()).unwrap_or_else(|| Vector3::from_element(f64::NAN))
}

impl ChunkMap {
    pub fn new(base: GroupElement, map: SmoothMap, source: Subspace, rho: f64) -> Result<Self> {
        if map.dim() != 3 || source.ambient_dim() != 3 {
            return Err(Error::InvalidArgument("chunks live in a 3-dimensional algebra".into()));
        }
        let j0 = map.jacobian(&DVector::zeros(3));
        let images: Vec<DVector<f64>> = source.vectors().iter().map(|v| &j0 * v).collect();
        let tangent = Subspace::span(3, &images);
        Ok(ChunkMap {
            base,
            map,
            source,
            tangent,
            rho,
        })
    }

    /// The chunk `exp(S ∩ B_rho)` of a linear subspace through the identity.
    pub fn linear(tag: GroupTag, source: Subspace, rho: f64) -> Result<Self> {
        Self::new(GroupElement::identity(tag), SmoothMap::identity(3, rho), source, rho)
    }

    pub fn tag(&self) -> GroupTag {
        self.base.tag()
    }

    pub fn chunk_dim(&self) -> usize {
        self.source.dim()
    }

    pub fn complexity_claim(&self) -> f64 {
        1.0 / self.rho
    }

    /// Log coordinates (relative to `base`) of the point with source
    /// coefficients `c`.
    pub fn local_point(&self, c: &DVector<f64>) -> Vector3<f64> {
        let s = self.source.basis() * c;
        let v = self.map.eval(&s);
        Vector3::new(v[0], v[1], v[2])
    }

    pub fn point(&self, c: &DVector<f64>) -> GroupElement {
        self.base * exp_unchecked(&LieVector::from_vector(self.tag(), self.local_point(c)))
    }

    /// Chart distance from `x` to the chunk, measured in log coordinates
    /// around `base`.
    pub fn chart_distance(&self, x: &GroupElement) -> f64 {
        let y = log_or_nan(&(self.base.inverse() * *x));
        if !y.iter().all(|v| v.is_finite()) {
            return f64::INFINITY;
        }
        let j0 = self.map.jacobian(&DVector::zeros(3)) * self.source.basis();
        parametrized_distance(&|c| self.local_point(c), self.chunk_dim(), &y, &j0, self.rho)
    }

    /// The translated chunk `b^-1 M` for `b` on `M`, with complexity
    /// parameter `rho^c_exponent`.
    pub fn translate(&self, b: &GroupElement, c_exponent: f64) -> Result<ChunkMap> {
        let tag = self.tag();
        let target = log_or_nan(&(self.base.inverse() * *b));
        let sb = newton_solve(&self.map, &dvec(&target))?;
        let residual = self.source.distance_to(&sb);
        if residual > 1e-8 {
            return Err(Error::BasePointOff { distance: residual });
        }
        let shift = exp_unchecked(&to_lie(tag, &self.map.eval(&sb))).inverse();
        let map = self.map.clone();
        let rho = self.rho.powf(c_exponent);
        let translated = SmoothMap::new(3, rho, move |s| {
            let p = exp_unchecked(&to_lie(tag, &map.eval(&(&sb + s))));
            dvec(&log_or_nan(&(shift * p)))
        });
        ChunkMap::new(GroupElement::identity(tag), translated, self.source.clone(), rho)
    }
}

/// The chunk `a^-1 C_a` through the identity, where `C_a` is the conjugacy
/// class of a regular `a`.
///
/// With `g' = range(Ad a^-1 - 1)` and `t` the torus direction, every `v` is
/// split (obliquely) as `X + t` and mapped to `e^t e^{(Ad a^-1) X} e^{-X}`.
/// The chunk is the image of `g'`.
pub fn conjugacy_chunk(a: &GroupElement) -> Result<ChunkMap> {
    let gap = distance_to_singular(a);
    if gap < REGULARITY_TOL {
        return Err(Error::SingularElement { gap });
    }
    let tag = a.tag();
    let rd = root_data(a)?;
    let ad_inv = adjoint(&a.inverse());
    let shifted = ad_inv - Matrix3::identity();
    let svd = shifted.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let g1 = u.column(order[0]).into_owned();
    let g2 = u.column(order[1]).into_owned();
    let t = rd.torus_direction.coords;
    let frame = Matrix3::from_columns(&[g1, g2, t]);
    let coeffs = frame
        .try_inverse()
        .ok_or(Error::SingularElement { gap })?;
    let split = move |v: &DVector<f64>| {
        let c = coeffs * Vector3::new(v[0], v[1], v[2]);
        (g1 * c[0] + g2 * c[1], t * c[2])
    };
    let j0 = t * coeffs.row(2) + shifted * (g1 * coeffs.row(0) + g2 * coeffs.row(1));
    let j0d = DMatrix::from_iterator(3, 3, j0.iter().copied());
    let sv = j0d.singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let rho = 0.5 * smin.min(1.0 / smax).min(0.5);
    let map = SmoothMap::new(3, rho, move |v| {
        let (x, tt) = split(v);
        let x = LieVector::from_vector(tag, x);
        let p = exp_unchecked(&LieVector::from_vector(tag, tt))
            * exp_unchecked(&LieVector::apply(&ad_inv, &x))
            * exp_unchecked(&-x);
        dvec(&log_or_nan(&p))
    });
    let source = Subspace::span(3, &[dvec(&g1), dvec(&g2)]);
    ChunkMap::new(GroupElement::identity(tag), map, source, rho)
}

/// Knobs for [`intersect_transverse`].
#[derive(Clone, Copy, Debug)]
pub struct IntersectOptions {
    /// Locality exponent: base points must lie in `B(1, rho^c)` and sampled
    /// points in `B(a, rho^c)`.
    pub locality_exponent: f64,
    /// Exponent of the distance comparison constant `rho^-C`.
    pub comparison_exponent: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for IntersectOptions {
    fn default() -> Self {
        IntersectOptions {
            locality_exponent: 2.0,
            comparison_exponent: 250.0 * 3.0,
            samples: 1000,
            seed: 0x1e7e_25ec,
        }
    }
}

/// The intersection chunk with its sampled distance comparison.
#[derive(Clone, Debug)]
pub struct Intersection {
    pub chunk: ChunkMap,
    /// Largest sampled `d(x, M ∩ gN) / max(d(x, M), d(x, gN))`.
    pub measured_constant: f64,
    /// `ln` of the allowed constant `rho^-C`.
    pub log_bound: f64,
    pub violations: usize,
}

/// `a^-1 (M ∩ gN)` as a chunk through `a`, for a hypersurface `M` and a
/// chunk `N` meeting it transversally.
pub fn intersect_transverse(
    m: &ChunkMap,
    n: &ChunkMap,
    g: &GroupElement,
    a: &GroupElement,
    opts: IntersectOptions,
) -> Result<Intersection> {
    let tag = m.tag();
    if m.chunk_dim() != 2 {
        return Err(Error::InvalidArgument("M must be a hypersurface chunk".into()));
    }
    let rho = m.rho.min(n.rho).min(0.5);
    let local = rho.powf(opts.locality_exponent);
    let ai = a.inverse();
    let mut geo = FlatteningData {
        tag,
        m: m.clone(),
        n: n.clone(),
        lm: ai * m.base,
        ln: ai * *g * n.base,
        cm: DVector::zeros(m.chunk_dim()),
        cn: DVector::zeros(n.chunk_dim()),
        theta: Matrix3::identity(),
        normal: Vector3::zeros(),
        kernel: DMatrix::zeros(n.chunk_dim(), 0),
        lift: DVector::zeros(n.chunk_dim()),
    };
    let origin = Vector3::zeros();
    let (dm, cm) = gauss_newton(&|c| geo.psi_m(c), m.chunk_dim(), &origin, geo.cm.clone(), m.rho);
    let (dn, cn) = gauss_newton(&|c| geo.psi_n(c), n.chunk_dim(), &origin, geo.cn.clone(), n.rho);
    let off = dm.max(dn);
    if off > local {
        return Err(Error::BasePointOff { distance: off });
    }
    geo.cm = cm;
    geo.cn = cn;
    let jm = fd_jacobian3(&|c| geo.pm(c), m.chunk_dim());
    let jn = fd_jacobian3(&|c| geo.pn(c), n.chunk_dim());
    let tm = column_span(&jm);
    let tn = column_span(&jn);
    subspace_distance(&tn, &tm)?;
    let theta = square_angle_normalizer(&tm, &tn)?;
    geo.theta = Matrix3::from_iterator(theta.map.iter().copied());
    let nv = tm.orthogonal_complement().vectors()[0].clone();
    geo.normal = Vector3::new(nv[0], nv[1], nv[2]);
    let jn_theta = DMatrix::from_iterator(3, 3, geo.theta.iter().copied()) * &jn;
    let nrow = (DVector::from_iterator(3, geo.normal.iter().copied()).transpose() * &jn_theta).transpose();
    let s = nrow.norm_squared();
    if s < 1e-24 {
        return Err(Error::NotTransverse { distance: s.sqrt() });
    }
    geo.lift = &nrow / s;
    geo.kernel = Subspace::span(n.chunk_dim(), &[nrow]).orthogonal_complement().basis().clone();
    let kdim = geo.kernel.ncols();
    let geo = Arc::new(geo);

    let z0 = geo.on_intersection(&DVector::zeros(kdim));
    let shift = exp_unchecked(&LieVector::from_vector(tag, z0)).inverse();
    let tangent_p = fd_jacobian3(&|w| geo.on_intersection(w), kdim);
    let normals = column_span(&tangent_p).orthogonal_complement().basis().clone();
    let g2 = Arc::clone(&geo);
    let map = SmoothMap::new(3, local, move |v| {
        let w = v.rows(0, kdim).into_owned();
        let z = v.rows(kdim, 3 - kdim).into_owned();
        let p = g2.on_intersection(&w) + &normals * z;
        let g = shift * exp_unchecked(&LieVector::new(tag, [p[0], p[1], p[2]]));
        dvec(&log_or_nan(&g))
    });
    let source = Subspace::span(
        3,
        &(0..kdim)
            .map(|i| {
                let mut v = DVector::zeros(3);
                v[i] = 1.0;
                v
            })
            .collect::<Vec<_>>(),
    );
    let chunk = ChunkMap::new(*a * shift.inverse(), map, source, local)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let ma = ChunkMap { base: ai * m.base, ..m.clone() };
    let na = ChunkMap { base: ai * *g * n.base, ..n.clone() };
    let pa = ChunkMap { base: ai * chunk.base, ..chunk.clone() };
    let log_bound = -opts.comparison_exponent * rho.ln();
    let mut measured: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..opts.samples {
        let x = exp_unchecked(&crate::group::sample_ball(&mut rng, tag, local));
        let dp = pa.chart_distance(&x);
        let dmax = ma.chart_distance(&x).max(na.chart_distance(&x));
        let ratio = if dmax > 0.0 {
            dp / dmax
        } else if dp <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        measured = measured.max(ratio);
        if ratio > 0.0 && !(ratio.ln() <= log_bound) {
            violations += 1;
        }
    }
    Ok(Intersection {
        chunk,
        measured_constant: measured,
        log_bound,
        violations,
    })
}

fn fd_jacobian3(p: &dyn Fn(&DVector<f64>) -> Vector3<f64>, k: usize) -> DMatrix<f64> {
    let h = 1e-7;
    let mut jac = DMatrix::zeros(3, k);
    for j in 0..k {
        let mut e = DVector::zeros(k);
        e[j] = h;
        let col = (p(&e) - p(&-e.clone())) / (2.0 * h);
        for i in 0..3 {
            jac[(i, j)] = col[i];
        }
    }
    jac
}

fn column_span(m: &DMatrix<f64>) -> Subspace {
    Subspace::span(m.nrows(), &m.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
}

/// Everything needed to evaluate points of `a^-1 (M ∩ gN)`.
struct FlatteningData {
    tag: GroupTag,
    m: ChunkMap,
    n: ChunkMap,
    lm: GroupElement,
    ln: GroupElement,
    cm: DVector<f64>,
    cn: DVector<f64>,
    theta: Matrix3<f64>,
    normal: Vector3<f64>,
    kernel: DMatrix<f64>,
    lift: DVector<f64>,
}

impl FlatteningData {
    fn psi_m(&self, c: &DVector<f64>) -> Vector3<f64> {
        log_or_nan(&(self.lm * exp_unchecked(&LieVector::from_vector(self.tag, self.m.local_point(c)))))
    }

    fn psi_n(&self, c: &DVector<f64>) -> Vector3<f64> {
        log_or_nan(&(self.ln * exp_unchecked(&LieVector::from_vector(self.tag, self.n.local_point(c)))))
    }

    fn pm(&self, c: &DVector<f64>) -> Vector3<f64> {
        self.psi_m(&(&self.cm + c))
    }

    fn pn(&self, c: &DVector<f64>) -> Vector3<f64> {
        self.psi_n(&(&self.cn + c))
    }

    /// Normal height of the normalized `a^-1 M` over the point `p` of `T_M`.
    fn height(&self, p: &Vector3<f64>) -> f64 {
        let nu = self.normal;
        let target = p - nu * nu.dot(p);
        let f = |c: &DVector<f64>| {
            let z = self.theta * self.pm(c);
            z - nu * nu.dot(&z)
        };
        let (_, c) = gauss_newton(&f, 2, &target, DVector::zeros(2), 2.0 * self.m.rho);
        nu.dot(&(self.theta * self.pm(&c)))
    }

    /// Normal component of the flattened, normalized `a^-1 g N`.
    fn level(&self, s: &DVector<f64>) -> f64 {
        let z = self.theta * self.pn(s);
        self.normal.dot(&z) - self.height(&z)
    }

    /// The point of `a^-1 (M ∩ gN)` over kernel coordinates `w`, found by
    /// Newton's method along the lift direction.
    fn on_intersection(&self, w: &DVector<f64>) -> Vector3<f64> {
        let base = if self.kernel.ncols() == 0 {
            DVector::zeros(self.lift.len())
        } else {
            &self.kernel * w
        };
        let mut lam = 0.0;
        for _ in 0..40 {
            let s0 = &base + &self.lift * lam;
            let v = self.level(&s0);
            if v.abs() < 1e-15 {
                break;
            }
            let h = 1e-7;
            let dv = (self.level(&(&s0 + &self.lift * h)) - self.level(&(&s0 - &self.lift * h))) / (2.0 * h);
            if dv.abs() < 1e-14 {
                break;
            }
            lam -= v / dv;
        }
        self.pn(&(&base + &self.lift * lam))
    }
}
