use clap::{Args, Parser, Subcommand};
use growthlab::chunk::{audit_complexity, conjugacy_chunk};
use growthlab::escape::{away_score, find_regular, DEFAULT_BEAM_WIDTH};
use growthlab::group::{exp_unchecked, LieVector};
use growthlab::growth::{rich_torus, scale_descent, torus_fiber_check, FiberOptions};
use growthlab::lab::{self, ExperimentConfig};
use growthlab::net::io::{read_net, write_net};
use growthlab::net::DeltaNet;
use growthlab::{Error, Result};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "growthlab", version, about = "Product-set growth experiments in SL(2,R) and SU(2)")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// sl2r or su2.
    #[arg(long, global = true)]
    group: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    delta_log2: Option<i32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report files and nets.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra config entry, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Generator kind, e.g. ball_net or word_ball.
    #[arg(long, global = true)]
    generator: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a test set and write it as a net.
    Gen,
    /// Run the configured stages and write the reports.
    Grow {
        /// Comma-separated stages.
        #[arg(long)]
        stages: Option<String>,
    },
    /// Look for a regular element and measure how far the set is from subgroups.
    Escape {
        /// Use this net instead of generating one.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        max_len: usize,
        #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
        width: usize,
    },
    /// Rich torus of the set, and the conjugation fiber check.
    Torus {
        #[arg(long)]
        net: Option<PathBuf>,
        /// Fiber samples; 0 skips the check.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1.2)]
        kappa: f64,
        /// Use `e^(2t) - 1` in the bound instead of the character gap.
        #[arg(long)]
        literal_gap: bool,
        /// Log size `t` of the diagonal element.
        #[arg(long, default_value_t = 0.3)]
        log_size: f64,
    },
    /// Complexity audit of the conjugacy chunk of `exp(t e_0)`.
    Audit {
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Scale descent on the set.
    Descend {
        #[arg(long)]
        net: Option<PathBuf>,
    },
    /// Recompute reports from experiment directories and merge their CSV rows.
    Report { dirs: Vec<PathBuf> },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::parse_text(&fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(g) = &c.group {
        cfg.set("group", g)?;
    }
    if let Some(d) = c.delta_log2 {
        cfg.delta_log2 = d;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(g) = &c.generator {
        cfg.set("generator", g)?;
    }
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("`--set {kv}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_net(path: &Path) -> Result<DeltaNet> {
    read_net(BufReader::new(File::open(path)?))
}

fn set_for(cfg: &ExperimentConfig, net: &Option<PathBuf>) -> Result<DeltaNet> {
    match net {
        Some(p) => load_net(p),
        None => lab::generate_set(cfg),
    }
}

fn emit(out: &Option<PathBuf>, name: &str, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match cli.cmd {
        Cmd::Gen => {
            let cfg = load_config(c)?;
            let a = lab::generate_set(&cfg)?;
            if let Some(dir) = &c.out {
                fs::create_dir_all(dir)?;
                write_net(&a, BufWriter::new(File::create(dir.join("set.net"))?))?;
                fs::write(dir.join("config.txt"), cfg.to_text())?;
            }
            println!("experiment_id: {}", cfg.experiment_id());
            println!("generator: {}", cfg.generator);
            println!("set.size: {}", a.len());
            println!("set.min_separation: {}", a.min_separation());
        }
        Cmd::Grow { stages } => {
            let mut cfg = load_config(c)?;
            if let Some(s) = stages {
                cfg.set("stages", &s)?;
            }
            let r = lab::run_experiment(&cfg)?;
            print!("{}", lab::text_report(&r));
            if let Some(dir) = &c.out {
                lab::write_outputs(dir, &r)?;
            }
        }
        Cmd::Escape { net, max_len, width } => {
            let cfg = load_config(c)?;
            let a = set_for(&cfg, &net)?;
            let reg = find_regular(&a, max_len, width);
            let away = away_score(&a);
            let word: Vec<String> = reg.word.iter().map(|i| i.to_string()).collect();
            let text = format!(
                "regular.score: {}\nregular.word: {}\nregular.word_len: {}\naway.score: {}\naway.kind: {}\naway.resolution_deg: {}\n",
                reg.score,
                word.join(" "),
                reg.word_len,
                away.score,
                away.witness.kind.name(),
                away.resolution_deg
            );
            emit(&c.out, "escape.txt", &text)?;
        }
        Cmd::Torus {
            net,
            samples,
            kappa,
            literal_gap,
            log_size,
        } => {
            let cfg = load_config(c)?;
            let a = set_for(&cfg, &net)?;
            let mut text = String::new();
            match rich_torus(&a, cfg.away_eps) {
                Ok(t) => {
                    text += &format!(
                        "rich_torus.gap: {}\nrich_torus.rho: {}\nrich_torus.near_count: {}\nrich_torus.exponent: {}\nrich_torus.away_ok: {}\n",
                        t.gap, t.rho_t, t.near_count, t.torus_exponent, t.away_ok
                    );
                }
                Err(e @ Error::NoRegularElement { .. }) => text += &format!("rich_torus.status: {e}\n"),
                Err(e) => return Err(e),
            }
            if samples > 0 {
                let g = exp_unchecked(&(log_size * LieVector::basis(cfg.group, 0)));
                let opts = FiberOptions {
                    kappa,
                    gap: literal_gap.then(|| (2.0 * log_size).exp() - 1.0),
                    seed: cfg.seed,
                };
                let f = torus_fiber_check(&g, cfg.delta(), samples, &opts)?;
                text += &format!(
                    "fiber.samples: {}\nfiber.draws: {}\nfiber.violations: {}\nfiber.measured_kappa: {}\nfiber.true_gap: {}\nfiber.gap: {}\nfiber.bound: {}\n",
                    f.samples, f.draws, f.violations, f.measured_kappa, f.true_gap, f.gap, f.bound
                );
            }
            emit(&c.out, "torus.txt", &text)?;
        }
        Cmd::Audit { rho, samples } => {
            let cfg = load_config(c)?;
            let g = exp_unchecked(&(cfg.lp_element * LieVector::basis(cfg.group, 0)));
            let chunk = conjugacy_chunk(&g)?;
            let audit = audit_complexity(&chunk.map.restricted(rho), rho, samples, cfg.seed)?;
            let text = format!(
                "audit.rho: {}\naudit.bilip_min: {}\naudit.bilip_max: {}\naudit.deriv_lip: {}\naudit.origin_residual: {}\naudit.samples: {}\naudit.verdict: {}\n",
                audit.rho, audit.f0_bilip.0, audit.f0_bilip.1, audit.deriv_lip, audit.origin_residual, audit.samples, audit.verdict
            );
            emit(&c.out, "audit.txt", &text)?;
        }
        Cmd::Descend { net } => {
            let cfg = load_config(c)?;
            let a = set_for(&cfg, &net)?;
            let d = scale_descent(&a, cfg.theta, cfg.kappa, cfg.eps3)?;
            let mut text = format!("descent.verdict: {:?}\ndescent.max_steps: {}\n", d.verdict, d.max_steps);
            for (i, s) in d.steps.iter().enumerate() {
                text += &format!(
                    "descent.{i}.rho: {}\ndescent.{i}.n_a: {}\ndescent.{i}.n_aaa: {}\ndescent.{i}.tripling: {}\ndescent.{i}.threshold: {}\ndescent.{i}.growth: {}\n",
                    s.rho, s.n_a, s.n_aaa, s.tripling, s.threshold, s.growth
                );
            }
            emit(&c.out, "descent.txt", &text)?;
        }
        Cmd::Report { dirs } => {
            if dirs.is_empty() {
                return Err(Error::Config("report needs at least one experiment directory".into()));
            }
            let mut results = Vec::new();
            for d in &dirs {
                let cfg = ExperimentConfig::parse_text(&fs::read_to_string(d.join("config.txt"))?)?;
                let a = load_net(&d.join("set.net"))?;
                let mut r = lab::run_on_set(&cfg, a, Instant::now())?;
                r.wall_ms = 0;
                results.push(r);
            }
            emit(&c.out, "report.csv", &lab::csv(&results))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
