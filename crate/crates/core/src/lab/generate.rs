//! Test-set families.

use super::config::{ExperimentConfig, GeneratorKind};
use crate::error::{Error, Result};
use crate::group::{chart_distortion, exp_unchecked, log_unchecked, sample_ball, sample_unit, GroupElement, GroupTag, LieVector};
use crate::net::{build_net, build_net_from_coords, DeltaNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Most points a generator may produce before thinning.
const MAX_RAW_POINTS: usize = 60_000_000;

/// One stream per generator so that kinds never share random numbers.
fn rng_for(cfg: &ExperimentConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    rng
}

pub fn generate_set(cfg: &ExperimentConfig) -> Result<DeltaNet> {
    cfg.validate()?;
    let delta = cfg.delta();
    match cfg.generator {
        GeneratorKind::BallNet => ball_net(cfg.group, cfg.radius, delta, &mut rng_for(cfg, 1)),
        GeneratorKind::TorusNet => line_net(cfg.group, 0, cfg.radius, delta),
        GeneratorKind::NilpotentNet => match cfg.group {
            GroupTag::Sl2r => line_net(cfg.group, 1, cfg.radius, delta),
            GroupTag::Su2 => Err(Error::BadGenerator("su2 has no one-parameter unipotent subgroup".into())),
        },
        GeneratorKind::WordBall => word_ball(cfg.group, cfg.word_length, cfg.radius, delta, &mut rng_for(cfg, 4)),
        GeneratorKind::CantorNet => cantor_net(cfg, &mut rng_for(cfg, 5)),
        GeneratorKind::PerturbedSubgroup => perturbed_torus(cfg.group, cfg.radius, cfg.noise, delta, &mut rng_for(cfg, 6)),
    }
}

/// Cubic lattice in log coordinates with a random offset, clipped to the
/// ball. The spacing exceeds `kappa delta`, so the points are already
/// `delta`-separated in the chart and need no thinning.
pub fn ball_net<R: Rng + ?Sized>(tag: GroupTag, radius: f64, delta: f64, rng: &mut R) -> Result<DeltaNet> {
    let s = chart_distortion(tag, radius, delta) * delta * 1.001;
    let m = (radius / s).ceil() as i64 + 1;
    let raw = ((2 * m + 1) as f64).powi(3) * 0.53;
    if raw > MAX_RAW_POINTS as f64 {
        return Err(Error::BadGenerator(format!("ball net needs about {raw:.0} points")));
    }
    let off: [f64; 3] = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
    let mut coords = Vec::with_capacity(raw as usize);
    for i in -m..=m {
        let x = (i as f64 + off[0]) * s;
        for j in -m..=m {
            let y = (j as f64 + off[1]) * s;
            if x * x + y * y > radius * radius {
                continue;
            }
            for k in -m..=m {
                let z = (k as f64 + off[2]) * s;
                if x * x + y * y + z * z <= radius * radius {
                    coords.push([x, y, z]);
                }
            }
        }
    }
    if coords.is_empty() {
        return Err(Error::BadGenerator("ball radius below the lattice spacing".into()));
    }
    Ok(DeltaNet::from_separated(tag, delta, coords))
}

/// `exp(t e_axis)` for `|t| <= radius` with spacing just above `delta`.
/// Axis 0 is a torus in both groups; axis 1 is unipotent in SL(2,R).
pub fn line_net(tag: GroupTag, axis: usize, radius: f64, delta: f64) -> Result<DeltaNet> {
    let s = delta * 1.001;
    let m = (radius / s).floor() as i64;
    let coords = (-m..=m)
        .map(|k| {
            let mut c = [0.0; 3];
            c[axis] = k as f64 * s;
            c
        })
        .collect();
    // Points on one one-parameter subgroup are |t - t'| apart exactly.
    Ok(DeltaNet::from_separated(tag, delta, coords))
}

/// All reduced words of length `<= len` in two random generators of log
/// size `radius / len` and their inverses.
pub fn word_ball<R: Rng + ?Sized>(tag: GroupTag, len: usize, radius: f64, delta: f64, rng: &mut R) -> Result<DeltaNet> {
    let step = radius / len as f64;
    let u1 = sample_unit(rng, tag);
    let u2 = sample_unit(rng, tag);
    if u1.coords.cross(&u2.coords).norm() < 0.1 {
        return Err(Error::BadGenerator("generator directions are nearly parallel".into()));
    }
    let g1 = exp_unchecked(&(step * u1));
    let g2 = exp_unchecked(&(step * u2));
    let letters = [g1, g1.inverse(), g2, g2.inverse()];
    let mut out = vec![GroupElement::identity(tag)];
    // Frontier of (element, last letter).
    let mut frontier: Vec<(GroupElement, usize)> = (0..4).map(|i| (letters[i], i)).collect();
    for depth in 1..=len {
        out.extend(frontier.iter().map(|(g, _)| *g));
        if depth == len {
            break;
        }
        let mut next = Vec::with_capacity(frontier.len() * 3);
        for (g, last) in &frontier {
            for (i, l) in letters.iter().enumerate() {
                if i == (last ^ 1) {
                    continue;
                }
                next.push((*g * *l, i));
            }
        }
        frontier = next;
    }
    build_net(&out, delta)
}

/// Self-similar set `sum_k (1 - r) r^(k-1) radius c_{i_k}` over digit
/// strings, with random unit centers, stopped once `r^depth radius < delta`.
pub fn cantor_net(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<DeltaNet> {
    let (tag, r, b, delta) = (cfg.group, cfg.cantor_ratio, cfg.cantor_branches, cfg.delta());
    let centers: Vec<LieVector> = (0..b).map(|_| sample_unit(rng, tag)).collect();
    let mut depth = 1;
    while r.powi(depth) * cfg.radius >= delta {
        depth += 1;
    }
    if (b as f64).powi(depth) > MAX_RAW_POINTS as f64 {
        return Err(Error::BadGenerator(format!("{b}^{depth} digit strings is too many")));
    }
    let mut pts = vec![LieVector::zero(tag)];
    for k in 0..depth {
        let w = (1.0 - r) * r.powi(k) * cfg.radius;
        pts = pts
            .iter()
            .flat_map(|p| centers.iter().map(move |c| *p + w * *c))
            .collect();
    }
    let elements: Vec<GroupElement> = pts.iter().map(exp_unchecked).collect();
    build_net(&elements, delta)
}

/// The torus line with each point moved by up to `noise * delta`.
pub fn perturbed_torus<R: Rng + ?Sized>(tag: GroupTag, radius: f64, noise: f64, delta: f64, rng: &mut R) -> Result<DeltaNet> {
    let s = delta * 1.001;
    let m = (radius / s).floor() as i64;
    let coords: Vec<[f64; 3]> = (-m..=m)
        .map(|k| {
            let e = sample_ball(rng, tag, noise * delta);
            let g = exp_unchecked(&LieVector::new(tag, [k as f64 * s, 0.0, 0.0])) * exp_unchecked(&e);
            let v = log_unchecked(&g).expect("small element has a logarithm");
            [v.coords[0], v.coords[1], v.coords[2]]
        })
        .collect();
    build_net_from_coords(tag, coords, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::escape::away_score;
    use crate::net::scale_profile;

    fn cfg(kind: GeneratorKind, delta_log2: i32) -> ExperimentConfig {
        ExperimentConfig {
            generator: kind,
            delta_log2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn generators_are_deterministic() {
        for kind in GeneratorKind::ALL {
            let c = cfg(kind, -6);
            let a = generate_set(&c).unwrap();
            let b = generate_set(&c).unwrap();
            assert_eq!(a.coords(), b.coords(), "{kind}");
            assert!(a.min_separation() > a.delta(), "{kind}");
        }
    }

    #[test]
    fn ball_net_profile_is_three_dimensional() {
        let a = generate_set(&cfg(GeneratorKind::BallNet, -8)).unwrap();
        let p = scale_profile(&a, a.delta());
        // Fine scales, well inside the ball.
        let fine: Vec<f64> = p.slopes.iter().rev().take(3).copied().collect();
        for s in &fine {
            assert!((s - 3.0).abs() < 0.6, "slopes {:?}", p.slopes);
        }
    }

    #[test]
    fn torus_net_is_a_line() {
        let a = generate_set(&cfg(GeneratorKind::TorusNet, -8)).unwrap();
        let p = scale_profile(&a, a.delta());
        for s in p.slopes.iter().rev().take(4) {
            assert!((s - 1.0).abs() < 0.3, "slopes {:?}", p.slopes);
        }
        assert!(away_score(&a).score <= 2.0 * a.delta());
    }

    #[test]
    fn word_ball_is_away_from_subgroups() {
        let a = generate_set(&cfg(GeneratorKind::WordBall, -8)).unwrap();
        assert!(away_score(&a).score >= 0.01);
    }

    #[test]
    fn su2_has_no_nilpotent_net() {
        let c = ExperimentConfig {
            group: GroupTag::Su2,
            ..cfg(GeneratorKind::NilpotentNet, -6)
        };
        assert!(matches!(generate_set(&c), Err(Error::BadGenerator(_))));
    }

    #[test]
    fn seeds_change_random_families() {
        let a = generate_set(&cfg(GeneratorKind::WordBall, -7)).unwrap();
        let b = generate_set(&ExperimentConfig { seed: 2, ..cfg(GeneratorKind::WordBall, -7) }).unwrap();
        assert_ne!(a.coords(), b.coords());
    }
}
