//! Random generators shared by unit tests, property tests and the acceptance
//! suite.

use crate::chunk::SmoothMap;
use crate::subspace::Subspace;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-9 {
            return v / norm;
        }
    }
}

/// A uniformly distributed `k`-dimensional subspace of `R^n`.
pub fn random_subspace<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Subspace {
    loop {
        let vs: Vec<_> = (0..k).map(|_| random_unit(rng, n)).collect();
        let s = Subspace::span(n, &vs);
        if s.dim() == k {
            return s;
        }
    }
}

/// Unit vector of `s` chosen at random (the zero vector for `s = {0}`).
fn unit_in<R: Rng + ?Sized>(rng: &mut R, s: &Subspace) -> DVector<f64> {
    if s.dim() == 0 {
        return DVector::zeros(s.ambient_dim());
    }
    s.basis() * random_unit(rng, s.dim())
}

/// `n` unit vectors in `R^n` whose graded separations are at least `rho`,
/// half of them exactly `rho` so the lemma is exercised near its edge.
pub fn graded_family<R: Rng + ?Sized>(rng: &mut R, n: usize, rho: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let prev = Subspace::span(n, &out);
        let inside = unit_in(rng, &prev);
        let outside = unit_in(rng, &prev.orthogonal_complement());
        let sin = if out.is_empty() {
            1.0
        } else if rng.random::<bool>() {
            rho
        } else {
            rng.random_range(rho..=1.0)
        };
        let cos = (1.0 - sin * sin).sqrt();
        let v = inside * cos + outside * sin;
        let norm = v.norm();
        out.push(v / norm);
    }
    out
}

/// Draws points within `r` of both `w1` and `w2` and counts those farther
/// than `3r / alpha` from `w0`. Returns `(accepted, violations)`.
///
/// Points are `y + e` with `y` in `w1` and `|e| <= r`; `y` is drawn from a box
/// aligned with the singular directions of `(I - P2)|w1`, which contains every
/// admissible `y`.
pub fn pivot_containment_trial<R: Rng + ?Sized>(
    rng: &mut R,
    w1: &Subspace,
    w2: &Subspace,
    w0: &Subspace,
    alpha: f64,
    r: f64,
    samples: usize,
) -> (usize, usize) {
    let n = w1.ambient_dim();
    let q1 = w1.basis();
    let resid: DMatrix<f64> = q1 - w2.basis() * (w2.basis().transpose() * q1);
    let svd = resid.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let half_widths: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| if s > 2.0 * r { 2.0 * r / s } else { 1.0 })
        .collect();
    let bound = 3.0 * r / alpha * (1.0 + 1e-12);
    let (mut accepted, mut violations, mut attempts) = (0, 0, 0usize);
    while accepted < samples && attempts < 1000 * samples {
        attempts += 1;
        let z = DVector::from_fn(half_widths.len(), |i, _| {
            rng.random_range(-half_widths[i]..=half_widths[i])
        });
        let c = v_t.transpose() * z;
        let y = q1 * c;
        let e = random_unit(rng, n) * (r * rng.random::<f64>().powf(1.0 / n as f64));
        let x = y + e;
        if w1.distance_to(&x) > r || w2.distance_to(&x) > r {
            continue;
        }
        accepted += 1;
        if w0.distance_to(&x) > bound {
            violations += 1;
        }
    }
    (accepted, violations)
}

/// `x -> A x + q(x)` with the singular values of `A` in `[rho, 1/rho]` and a
/// symmetric quadratic part whose derivative is `0.9/rho`-Lipschitz.
pub fn random_certified_map(seed: u64, n: usize, rho: f64) -> SmoothMap {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let u = random_frame(&mut rng, n);
    let v = random_frame(&mut rng, n);
    let s = DVector::from_fn(n, |_, _| rho * (1.0 / (rho * rho)).powf(rng.random::<f64>()));
    let a = &u * DMatrix::from_diagonal(&s) * v.transpose();
    let mut forms: Vec<DMatrix<f64>> = (0..n)
        .map(|_| {
            let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            (&m + m.transpose()) * 0.5
        })
        .collect();
    let total: f64 = forms.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt();
    let scale = 0.45 / rho * rng.random::<f64>() / total.max(1e-12);
    for b in &mut forms {
        *b *= scale;
    }
    let forms2 = forms.clone();
    let a2 = a.clone();
    SmoothMap::new(n, 0.5, move |x| {
        let mut y = &a * x;
        for (i, b) in forms.iter().enumerate() {
            y[i] += x.dot(&(b * x));
        }
        y
    })
    .with_jacobian(move |x| {
        let mut j = a2.clone();
        for (i, b) in forms2.iter().enumerate() {
            let g = (b * x) * 2.0;
            for k in 0..x.len() {
                j[(i, k)] += g[k];
            }
        }
        j
    })
}

fn random_frame<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    m.qr().q()
}
