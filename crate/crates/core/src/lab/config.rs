use crate::error::{Error, Result};
use crate::group::{GroupTag, R_INJ};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    BallNet,
    TorusNet,
    NilpotentNet,
    WordBall,
    CantorNet,
    PerturbedSubgroup,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 6] = [
        GeneratorKind::BallNet,
        GeneratorKind::TorusNet,
        GeneratorKind::NilpotentNet,
        GeneratorKind::WordBall,
        GeneratorKind::CantorNet,
        GeneratorKind::PerturbedSubgroup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::BallNet => "ball_net",
            GeneratorKind::TorusNet => "torus_net",
            GeneratorKind::NilpotentNet => "nilpotent_net",
            GeneratorKind::WordBall => "word_ball",
            GeneratorKind::CantorNet => "cantor_net",
            GeneratorKind::PerturbedSubgroup => "perturbed_subgroup",
        }
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown generator `{s}`")))
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pipeline stages an experiment can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Products,
    LarsenPink,
    RichTorus,
    Certificate,
    Descent,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Products,
        Stage::LarsenPink,
        Stage::RichTorus,
        Stage::Certificate,
        Stage::Descent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Products => "products",
            Stage::LarsenPink => "larsen_pink",
            Stage::RichTorus => "rich_torus",
            Stage::Certificate => "certificate",
            Stage::Descent => "descent",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub group: GroupTag,
    pub generator: GeneratorKind,
    pub delta_log2: i32,
    pub seed: u64,
    /// Log radius of ball, torus and word sets.
    pub radius: f64,
    pub word_length: usize,
    pub cantor_ratio: f64,
    pub cantor_branches: usize,
    /// Perturbation size, in units of delta.
    pub noise: f64,
    /// Away threshold exponent: the set should be `delta^away_eps`-away.
    pub away_eps: f64,
    pub slack: f64,
    /// Log size of the regular element whose conjugacy chunk the
    /// Larsen–Pink stage uses.
    pub lp_element: f64,
    pub tau: f64,
    pub scales: usize,
    pub theta: f64,
    pub kappa: f64,
    pub eps3: f64,
    pub stages: Vec<Stage>,
    /// Cap on the number of group products one stage may form.
    pub max_products: u64,
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            group: GroupTag::Sl2r,
            generator: GeneratorKind::BallNet,
            delta_log2: -8,
            seed: 1,
            radius: R_INJ / 4.0,
            word_length: 6,
            cantor_ratio: 0.3,
            cantor_branches: 3,
            noise: 2.0,
            away_eps: 0.2,
            slack: 0.15,
            lp_element: 0.3,
            tau: 0.3,
            scales: 3,
            theta: 2.0,
            kappa: 0.5,
            eps3: 0.5,
            stages: vec![Stage::Products, Stage::LarsenPink, Stage::RichTorus],
            max_products: 400_000_000,
            record_wall_time: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    pub fn delta(&self) -> f64 {
        2f64.powi(self.delta_log2)
    }

    /// Sets one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "group" => self.group = GroupTag::parse(value).map_err(|e| Error::Config(e.to_string()))?,
            "generator" => self.generator = value.parse()?,
            "delta_log2" => self.delta_log2 = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "radius" => self.radius = parse(key, value)?,
            "word_length" => self.word_length = parse(key, value)?,
            "cantor_ratio" => self.cantor_ratio = parse(key, value)?,
            "cantor_branches" => self.cantor_branches = parse(key, value)?,
            "noise" => self.noise = parse(key, value)?,
            "away_eps" => self.away_eps = parse(key, value)?,
            "slack" => self.slack = parse(key, value)?,
            "lp_element" => self.lp_element = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "scales" => self.scales = parse(key, value)?,
            "theta" => self.theta = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "eps3" => self.eps3 = parse(key, value)?,
            "stages" => {
                self.stages = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
                self.stages.sort();
                self.stages.dedup();
            }
            "max_products" => self.max_products = parse(key, value)?,
            "record_wall_time" => self.record_wall_time = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a
    /// comment.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-14..=-4).contains(&self.delta_log2) {
            return Err(Error::Config(format!("delta_log2 {} outside [-14, -4]", self.delta_log2)));
        }
        for (name, v) in [
            ("away_eps", self.away_eps),
            ("slack", self.slack),
            ("tau", self.tau),
            ("eps3", self.eps3),
            ("cantor_ratio", self.cantor_ratio),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(self.radius > 0.0 && self.radius <= R_INJ) {
            return Err(Error::Config(format!("radius {} must lie in (0, {R_INJ}]", self.radius)));
        }
        if !(self.theta > 0.0 && self.theta < 3.0) {
            return Err(Error::Config(format!("theta {} must lie in (0, 3)", self.theta)));
        }
        if !(self.kappa > 0.0) || !(self.noise >= 0.0) || !(self.lp_element > 0.0) {
            return Err(Error::Config("kappa and lp_element must be positive, noise non-negative".into()));
        }
        if self.word_length == 0 || self.word_length > 12 {
            return Err(Error::Config(format!("word_length {} must lie in [1, 12]", self.word_length)));
        }
        if self.cantor_branches < 2 {
            return Err(Error::Config("cantor_branches must be at least 2".into()));
        }
        if self.scales == 0 {
            return Err(Error::Config("scales must be positive".into()));
        }
        Ok(())
    }

    /// Canonical `key = value` text; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        let stages: Vec<&str> = self.stages.iter().map(|s| s.name()).collect();
        let mut out = String::new();
        for (k, v) in [
            ("group", self.group.name().to_string()),
            ("generator", self.generator.name().to_string()),
            ("delta_log2", self.delta_log2.to_string()),
            ("seed", self.seed.to_string()),
            ("radius", self.radius.to_string()),
            ("word_length", self.word_length.to_string()),
            ("cantor_ratio", self.cantor_ratio.to_string()),
            ("cantor_branches", self.cantor_branches.to_string()),
            ("noise", self.noise.to_string()),
            ("away_eps", self.away_eps.to_string()),
            ("slack", self.slack.to_string()),
            ("lp_element", self.lp_element.to_string()),
            ("tau", self.tau.to_string()),
            ("scales", self.scales.to_string()),
            ("theta", self.theta.to_string()),
            ("kappa", self.kappa.to_string()),
            ("eps3", self.eps3.to_string()),
            ("stages", stages.join(",")),
            ("max_products", self.max_products.to_string()),
            ("record_wall_time", self.record_wall_time.to_string()),
        ] {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Stable identifier: FNV-1a of the canonical text.
    pub fn experiment_id(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_text().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
