use super::experiment::ExperimentResult;
use crate::error::Result;
use crate::net::io::write_net;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

pub const CSV_HEADER: &str = "experiment_id,group,delta_log2,n_a_cover,n_a_pack,n_aaa_cover,n_aaa_pack,tripling_ratio,away_score,sigma_est,lp_exponent,torus_exponent,wall_ms";

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "NaN".to_string()
    }
}

fn opt_count(x: Option<usize>) -> String {
    x.map_or_else(|| "NaN".to_string(), |n| n.to_string())
}

pub fn csv_row(r: &ExperimentResult) -> String {
    [
        r.experiment_id.clone(),
        r.config.group.name().to_string(),
        r.config.delta_log2.to_string(),
        r.n_a.n_cover.to_string(),
        r.n_a.n_packing.to_string(),
        opt_count(r.n_aaa.map(|c| c.n_cover)),
        opt_count(r.n_aaa.map(|c| c.n_packing)),
        num(r.tripling_ratio()),
        num(r.away_score),
        num(r.sigma_est),
        num(r.lp_exponent()),
        num(r.torus_exponent()),
        r.wall_ms.to_string(),
    ]
    .join(",")
}

pub fn csv(results: &[ExperimentResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// `key: value` lines, one block per stage.
pub fn text_report(r: &ExperimentResult) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}: {v}");
    };
    kv("experiment_id", r.experiment_id.clone());
    kv("group", r.config.group.name().into());
    kv("generator", r.config.generator.name().into());
    kv("delta_log2", r.config.delta_log2.to_string());
    kv("seed", r.config.seed.to_string());
    kv("set.size", r.set.len().to_string());
    kv("set.n_cover", r.n_a.n_cover.to_string());
    kv("set.n_packing", r.n_a.n_packing.to_string());
    kv("set.away_score", num(r.away_score));
    kv("set.sigma_est", num(r.sigma_est));
    if let Some(t) = r.n_aaa {
        kv("products.n_cover", t.n_cover.to_string());
        kv("products.n_packing", t.n_packing.to_string());
        kv("products.tripling_ratio", num(r.tripling_ratio()));
    }
    if let Some(lp) = &r.larsen_pink {
        kv("larsen_pink.lhs", lp.lhs.to_string());
        kv("larsen_pink.exponent", num(lp.rhs_exponent));
        kv("larsen_pink.bound", num(lp.bound));
        kv("larsen_pink.slack", num(lp.slack));
        kv("larsen_pink.within_bound", lp.within_bound.to_string());
    }
    if let Some(t) = &r.rich_torus {
        kv("rich_torus.gap", num(t.gap));
        kv("rich_torus.rho", num(t.rho_t));
        kv("rich_torus.bucket_size", t.bucket_size.to_string());
        kv("rich_torus.near_count", t.near_count.to_string());
        kv("rich_torus.exponent", num(t.torus_exponent));
        kv("rich_torus.threshold_exponent", num(t.threshold_exponent));
        kv("rich_torus.away_ok", t.away_ok.to_string());
    }
    if let Some(c) = &r.certificate {
        let counts: Vec<String> = c.counts.iter().map(|n| n.to_string()).collect();
        kv("certificate.counts", counts.join(" "));
        kv("certificate.product", c.product.to_string());
        kv("certificate.exponent", num(c.exponent));
        kv("certificate.target", num(c.target));
    }
    if let Some(d) = &r.descent {
        kv("descent.verdict", format!("{:?}", d.verdict));
        kv("descent.steps", d.steps.len().to_string());
        kv("descent.max_steps", d.max_steps.to_string());
        for (i, st) in d.steps.iter().enumerate() {
            kv(&format!("descent.{i}.rho"), num(st.rho));
            kv(&format!("descent.{i}.tripling"), num(st.tripling));
            kv(&format!("descent.{i}.growth"), st.growth.to_string());
        }
    }
    for (stage, why) in &r.skipped {
        kv(&format!("{}.status", stage.name()), why.clone());
    }
    kv("wall_ms", r.wall_ms.to_string());
    s
}

/// Writes `report.csv`, `report.txt`, `config.txt` and the nets into `dir`.
pub fn write_outputs(dir: &Path, r: &ExperimentResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), csv(std::slice::from_ref(r)))?;
    fs::write(dir.join("report.txt"), text_report(r))?;
    fs::write(dir.join("config.txt"), r.config.to_text())?;
    write_net(&r.set, BufWriter::new(File::create(dir.join("set.net"))?))?;
    if let Some(t) = &r.triple {
        write_net(t, BufWriter::new(File::create(dir.join("triple.net"))?))?;
    }
    Ok(())
}
