use super::config::{ExperimentConfig, Stage};
use super::generate::generate_set;
use crate::chunk::conjugacy_chunk;
use crate::error::{Error, Result};
use crate::escape::away_score;
use crate::group::{exp_unchecked, LieVector};
use crate::growth::{
    larsen_pink_diag, multiscale_certificate, rich_torus, scale_descent, DescentTrace, GrowthCertificate,
    LarsenPinkReport, RichTorusResult,
};
use crate::net::{product_set, scale_profile, CoverCounts, DeltaNet};
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub experiment_id: String,
    pub set: DeltaNet,
    pub n_a: CoverCounts,
    pub triple: Option<DeltaNet>,
    pub n_aaa: Option<CoverCounts>,
    pub away_score: f64,
    pub sigma_est: f64,
    pub larsen_pink: Option<LarsenPinkReport>,
    pub rich_torus: Option<RichTorusResult>,
    pub certificate: Option<GrowthCertificate>,
    pub descent: Option<DescentTrace>,
    /// Stage name and reason for each stage that ran but gave no value.
    pub skipped: Vec<(Stage, String)>,
    pub wall_ms: u64,
}

impl ExperimentResult {
    pub fn tripling_ratio(&self) -> f64 {
        match self.n_aaa {
            Some(t) if self.n_a.n_cover > 0 => t.n_cover as f64 / self.n_a.n_cover as f64,
            _ => f64::NAN,
        }
    }

    pub fn lp_exponent(&self) -> f64 {
        self.larsen_pink.as_ref().map_or(f64::NAN, |r| r.rhs_exponent)
    }

    pub fn torus_exponent(&self) -> f64 {
        self.rich_torus.as_ref().map_or(f64::NAN, |r| r.torus_exponent)
    }
}

fn staged<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: stage.name().to_string(),
        source: Box::new(e),
    })
}

fn check_budget(stage: Stage, pairs: u128, budget: u64) -> Result<()> {
    if pairs > budget as u128 {
        return staged(
            stage,
            Err(Error::CombinatorialBudgetExceeded {
                budget: budget as usize,
            }),
        );
    }
    Ok(())
}

/// Least-squares slope of `log N(A, rho)` against `log(1/rho)` over the
/// middle two thirds of the dyadic scales.
pub fn sigma_estimate(a: &DeltaNet) -> f64 {
    let p = scale_profile(a, a.delta());
    let n = p.rhos.len();
    let (lo, hi) = (n / 6, n - n / 6);
    let pts: Vec<(f64, f64)> = (lo..hi)
        .filter(|&i| p.counts[i] > 0)
        .map(|i| (-p.rhos[i].ln(), (p.counts[i] as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Whether a stage failure is recorded as a missing value instead of an error.
fn soft_failure(e: &Error) -> bool {
    matches!(e, Error::NoRegularElement { .. } | Error::SingularElement { .. })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    cfg.validate()?;
    let a = generate_set(cfg)?;
    run_on_set(cfg, a, start)
}

/// Runs the configured stages on a given set.
pub fn run_on_set(cfg: &ExperimentConfig, a: DeltaNet, start: Instant) -> Result<ExperimentResult> {
    let n_a = a.covering_number(a.delta());
    let mut res = ExperimentResult {
        config: cfg.clone(),
        experiment_id: cfg.experiment_id(),
        n_a,
        triple: None,
        n_aaa: None,
        away_score: away_score(&a).score,
        sigma_est: sigma_estimate(&a),
        larsen_pink: None,
        rich_torus: None,
        certificate: None,
        descent: None,
        skipped: Vec::new(),
        wall_ms: 0,
        set: a,
    };
    let a = &res.set;
    for &stage in &cfg.stages {
        match stage {
            Stage::Products => {
                let n = a.len() as u128;
                check_budget(stage, n * n, cfg.max_products)?;
                let aa = staged(stage, product_set(a, a, None))?;
                check_budget(stage, aa.len() as u128 * n, cfg.max_products)?;
                let aaa = staged(stage, product_set(&aa, a, None))?;
                res.n_aaa = Some(aaa.covering_number(aaa.delta()));
                res.triple = Some(aaa);
            }
            Stage::LarsenPink => {
                let g = exp_unchecked(&(cfg.lp_element * LieVector::basis(cfg.group, 0)));
                let chunk = staged(stage, conjugacy_chunk(&g))?;
                res.larsen_pink = Some(larsen_pink_diag(a, &chunk, cfg.slack));
            }
            Stage::RichTorus => match rich_torus(a, cfg.away_eps) {
                Ok(r) => res.rich_torus = Some(r),
                Err(e) if soft_failure(&e) => res.skipped.push((stage, e.to_string())),
                Err(e) => return staged(stage, Err(e)),
            },
            Stage::Certificate => {
                res.certificate = Some(staged(stage, multiscale_certificate(a, cfg.tau, cfg.scales))?);
            }
            Stage::Descent => {
                res.descent = Some(staged(stage, scale_descent(a, cfg.theta, cfg.kappa, cfg.eps3))?);
            }
        }
    }
    if cfg.record_wall_time {
        res.wall_ms = start.elapsed().as_millis() as u64;
    }
    Ok(res)
}
