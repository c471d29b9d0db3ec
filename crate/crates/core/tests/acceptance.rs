//! Acceptance criteria. Each prints one PASS/FAIL line; the run exits
//! nonzero if a criterion outside `KNOWN_RED` fails, or if a known red one
//! starts passing without the list being updated.

use growthlab::chunk::{audit_complexity, conjugacy_chunk, invert_certified};
use growthlab::group::{ad, adjoint, exp_map, exp_unchecked, log_map, sample_ball, GroupElement, GroupTag, LieVector};
use growthlab::growth::{larsen_pink_diag, multiscale_certificate, torus_fiber_check, FiberOptions};
use growthlab::lab::{csv, generate_set, run_experiment, ExperimentConfig, GeneratorKind, Stage};
use growthlab::net::{covering_number, scale_profile, DeltaNet};
use growthlab::subspace::{angle_pivot, graded_frame_bound, square_angle_normalizer};
use growthlab::testkit::{graded_family, pivot_containment_trial, random_certified_map, random_subspace, random_unit};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// The literal fiber constant uses `e^0.6 - 1` where the geometry needs the
/// smaller root gap `1 - e^-0.6`; no sampler can meet it.
const KNOWN_RED: &[&str] = &["torus fiber"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn timed<F: FnOnce() -> (bool, String)>(name: &'static str, limit_s: u64, f: F) -> Outcome {
    let t = Instant::now();
    let (ok, detail) = f();
    let el = t.elapsed();
    let in_time = el <= Duration::from_secs(limit_s);
    Outcome {
        name,
        pass: ok && in_time,
        detail: format!("{detail}; {:.1}s of {limit_s}s", el.as_secs_f64()),
    }
}

fn ball_dvec<R: Rng>(rng: &mut R, n: usize, r: f64) -> DVector<f64> {
    random_unit(rng, n) * (r * rng.random::<f64>().powf(1.0 / n as f64))
}

fn cfg(kind: GeneratorKind, delta_log2: i32) -> ExperimentConfig {
    ExperimentConfig {
        generator: kind,
        delta_log2,
        ..ExperimentConfig::default()
    }
}

fn frame_bound() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut fails = 0;
    for i in 0..1000 {
        let n = 2 + i % 5;
        let rho = [0.5, 0.25, 0.1][i % 3];
        let u = graded_family(&mut rng, n, rho);
        let c = graded_frame_bound(&u, rho).expect("graded family");
        if c.sigma_min < rho.powi(2 * n as i32) {
            fails += 1;
        }
    }
    (fails == 0, format!("frames 1000, failures {fails}"))
}

fn pivot_containment() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut fails, mut accepted) = (0, 0);
    for i in 0..200 {
        let (n, k) = [(3, 2), (4, 2), (5, 3), (4, 3)][i % 4];
        let w1 = random_subspace(&mut rng, n, k);
        let w2 = random_subspace(&mut rng, n, k);
        let (w0, alpha) = angle_pivot(&w1, &w2).expect("distinct subspaces");
        let (acc, v) = pivot_containment_trial(&mut rng, &w1, &w2, &w0, alpha, 0.05, 10_000);
        accepted += acc;
        fails += v;
    }
    (fails == 0 && accepted == 200 * 10_000, format!("pairs 200, points {accepted}, failures {fails}"))
}

fn square_angle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut fails = 0;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let f0 = random_subspace(&mut rng, 3, 2);
        let k = rng.random_range(1..3);
        let f1 = random_subspace(&mut rng, 3, k);
        let t = square_angle_normalizer(&f0, &f1).expect("normalizer");
        worst = worst.max(t.distortion().ln() / t.paper_bound().ln());
        if t.distortion() > t.paper_bound() {
            fails += 1;
        }
    }
    (fails == 0, format!("pairs 1000, failures {fails}, worst log-ratio to bound {worst:.3}"))
}

fn exact_constants() -> (bool, String) {
    let parts = [
        timed("frame", 5, frame_bound),
        timed("pivot", 30, pivot_containment),
        timed("square angle", 5, square_angle),
    ];
    let ok = parts.iter().all(|p| p.pass);
    let detail: Vec<String> = parts.iter().map(|p| format!("{} [{}]", p.name, p.detail)).collect();
    (ok, detail.join(" | "))
}

fn quantitative_ift() -> (bool, String) {
    let (mut fails, mut worst_roundtrip, mut maps, mut rejected) = (0, 0.0f64, 0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for rho in [0.3, 0.2, 0.1] {
        let mut seed = (rho * 1e6) as u64;
        let mut found = 0;
        while found < 100 {
            seed += 1;
            let f = random_certified_map(seed, 3, rho);
            if !audit_complexity(&f, rho, 200, seed).expect("audit").verdict {
                rejected += 1;
                continue;
            }
            found += 1;
            let Ok(inv) = invert_certified(&f, rho) else {
                fails += 1;
                continue;
            };
            let r3 = rho.powi(3);
            for _ in 0..20 {
                let x = ball_dvec(&mut rng, 3, r3);
                let y = f.eval(&x);
                let back = inv.eval(&y);
                let rt = (&back - &x).norm();
                worst_roundtrip = worst_roundtrip.max(rt);
                let x2 = ball_dvec(&mut rng, 3, r3);
                let ratio = (f.eval(&x2) - &y).norm() / (&x2 - &x).norm();
                if !(rt <= 1e-9) || ratio > rho.powi(-3) || 1.0 / ratio > rho.powi(-3) {
                    fails += 1;
                }
            }
        }
        maps += found;
    }
    (
        fails == 0,
        format!("maps {maps} (rejected by audit {rejected}), failures {fails}, worst roundtrip {worst_roundtrip:.1e}"),
    )
}

fn group_core() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let (mut e_ad, mut e_log, mut e_hom) = (0.0f64, 0.0f64, 0.0f64);
    for tag in [GroupTag::Sl2r, GroupTag::Su2] {
        for _ in 0..1000 {
            let x = sample_ball(&mut rng, tag, 0.5);
            let g = exp_map(&x).expect("inside chart");
            e_ad = e_ad.max((adjoint(&g) - ad(&x).exp()).norm());
            e_log = e_log.max((log_map(&g).expect("log").coords - x.coords).norm());
            let h = exp_map(&sample_ball(&mut rng, tag, 0.5)).expect("inside chart");
            e_hom = e_hom.max((adjoint(&(g * h)) - adjoint(&g) * adjoint(&h)).norm());
        }
    }
    (
        e_ad <= 1e-10 && e_log <= 1e-10 && e_hom <= 1e-9,
        format!("Ad/exp {e_ad:.1e}, exp/log {e_log:.1e}, homomorphism {e_hom:.1e}"),
    )
}

fn diag03() -> GroupElement {
    exp_unchecked(&(0.3 * LieVector::basis(GroupTag::Sl2r, 0)))
}

fn torus_fiber() -> (bool, String) {
    let literal = FiberOptions {
        kappa: 1.2,
        gap: Some(0.6f64.exp() - 1.0),
        ..FiberOptions::default()
    };
    let r = torus_fiber_check(&diag03(), 2f64.powi(-10), 10_000, &literal).expect("fiber check");
    (
        r.violations == 0 && r.samples == 10_000,
        format!(
            "samples {}, violations {}, kappa needed with this gap {:.3}",
            r.samples,
            r.violations,
            r.measured_kappa * r.gap / r.true_gap
        ),
    )
}

fn torus_fiber_true_gap() -> (bool, String) {
    let r = torus_fiber_check(&diag03(), 2f64.powi(-10), 10_000, &FiberOptions::default()).expect("fiber check");
    (
        r.violations == 0 && r.measured_kappa <= 1.2,
        format!(
            "gap 1 - e^-0.6 = {:.4}, violations {}, measured kappa {:.3}",
            r.true_gap, r.violations, r.measured_kappa
        ),
    )
}

fn tripling_contrast(sets: &mut Vec<DeltaNet>) -> (bool, String) {
    let products = |kind| {
        let c = ExperimentConfig {
            stages: vec![Stage::Products],
            ..cfg(kind, -8)
        };
        run_experiment(&c).expect("experiment")
    };
    let torus = products(GeneratorKind::TorusNet);
    let word = products(GeneratorKind::WordBall);
    let (t, w) = (torus.tripling_ratio(), word.tripling_ratio());
    let exponent = (word.n_aaa.unwrap().n_cover as f64).ln() / (word.n_a.n_cover as f64).ln();
    let detail = format!("torus {t:.3}, word ball {w:.3} (ratio {:.1}, log N_AAA / log N_A {exponent:.3})", w / t);
    sets.extend([torus.set, word.set]);
    sets.extend(torus.triple);
    sets.extend(word.triple);
    (t <= 4.0 && w >= 2.0 * t, detail)
}

fn larsen_pink(sets: &mut Vec<DeltaNet>) -> (bool, String) {
    let c = cfg(GeneratorKind::BallNet, -8);
    let a = generate_set(&c).expect("ball");
    let g = exp_unchecked(&(c.lp_element * LieVector::basis(c.group, 0)));
    let chunk = conjugacy_chunk(&g).expect("regular");
    let r = larsen_pink_diag(&a, &chunk, c.slack);
    sets.push(a);
    (
        r.rhs_exponent <= r.bound + r.slack && r.lhs > 1,
        format!("N(A near chunk) {}, N(A) {}, exponent {:.3} vs {:.3}", r.lhs, r.n_a, r.rhs_exponent, r.bound + r.slack),
    )
}

fn multiscale() -> (bool, String) {
    let (tau, k, delta_log2) = (0.3, 3, -12);
    let top = 2f64.powf(delta_log2 as f64 * (1.0f64 - tau).powi(k as i32));
    let run = |kind| {
        let c = ExperimentConfig {
            radius: top,
            ..cfg(kind, delta_log2)
        };
        let a = generate_set(&c).expect("set");
        let cert = multiscale_certificate(&a, tau, k).expect("certificate");
        // The full ball is too large for a sandwich check at every scale;
        // check the coarse certificate scales instead.
        let sandwich = cert.scales[1..].iter().all(|&rho| {
            let cc = a.covering_number(rho);
            cc.n_packing <= cc.n_cover
        });
        (cert, sandwich)
    };
    let (ball, s1) = run(GeneratorKind::BallNet);
    let (torus, s2) = run(GeneratorKind::TorusNet);
    let one_dim = 1.0 - (1.0 - tau).powi(k as i32);
    let ball_ok = ball.exponent >= 0.8 * ball.target;
    let torus_ok = (torus.exponent - one_dim).abs() <= 0.3;
    (
        ball_ok && torus_ok && s1 && s2,
        format!(
            "ball {:.3} (needs {:.3}), torus {:.3} (needs {:.3} +- 0.3), counts {:?} / {:?}",
            ball.exponent,
            0.8 * ball.target,
            torus.exponent,
            one_dim,
            ball.counts,
            torus.counts
        ),
    )
}

fn covering_sandwich(sets: &mut Vec<DeltaNet>) -> (bool, String) {
    for kind in [GeneratorKind::CantorNet, GeneratorKind::PerturbedSubgroup, GeneratorKind::NilpotentNet] {
        sets.push(generate_set(&cfg(kind, -8)).expect("set"));
    }
    let su2 = ExperimentConfig {
        group: GroupTag::Su2,
        ..cfg(GeneratorKind::BallNet, -7)
    };
    sets.push(generate_set(&su2).expect("set"));
    let (mut checks, mut fails) = (0, 0);
    for a in sets.iter() {
        let p = scale_profile(a, a.delta());
        for &rho in &p.rhos {
            let c = covering_number(a.tag(), a.coords(), rho);
            checks += 1;
            if c.n_packing > c.n_cover {
                fails += 1;
            }
        }
    }
    (fails == 0, format!("sets {}, scales {checks}, failures {fails}", sets.len()))
}

fn determinism() -> (bool, String) {
    let configs = [
        ExperimentConfig {
            stages: Stage::ALL.to_vec(),
            ..cfg(GeneratorKind::WordBall, -7)
        },
        ExperimentConfig {
            group: GroupTag::Su2,
            seed: 77,
            ..cfg(GeneratorKind::CantorNet, -7)
        },
        cfg(GeneratorKind::PerturbedSubgroup, -7),
    ];
    let mut same = 0;
    for c in &configs {
        let a = csv(&[run_experiment(c).expect("run")]);
        let b = csv(&[run_experiment(c).expect("run")]);
        same += (a.as_bytes() == b.as_bytes()) as usize;
    }
    (same == configs.len(), format!("configs {}, identical {same}", configs.len()))
}

fn main() -> ExitCode {
    let mut sets = Vec::new();
    let outcomes = vec![
        timed("exact constants", 40, exact_constants),
        timed("quantitative inverse", 60, quantitative_ift),
        timed("group core", 5, group_core),
        timed("torus fiber", 30, torus_fiber),
        timed("torus fiber, character gap", 30, torus_fiber_true_gap),
        timed("tripling contrast", 120, || tripling_contrast(&mut sets)),
        timed("larsen-pink diagnostic", 120, || larsen_pink(&mut sets)),
        timed("multiscale certificate", 300, multiscale),
        timed("covering sandwich", 300, || covering_sandwich(&mut sets)),
        timed("determinism", 300, determinism),
    ];
    let mut unexpected = Vec::new();
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        let red = KNOWN_RED.contains(&o.name);
        if o.pass == red {
            unexpected.push(o.name);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("criteria off their recorded status: {unexpected:?}");
        ExitCode::FAILURE
    }
}
