//! Independent fits of every village file in a directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use crate::commands::fit::{fit_survey, ingest_options, SurveyOutcome};
use crate::config::{sha256_hex, RunConfig};
use crate::ingest::{ingest_reports, input_bytes, IngestOptions};
use crate::output::{csv_writer, summary_fields, SUMMARY_HEADER};

const ROSTER_SUFFIXES: [&str; 3] = [".nodes.csv", ".reporters.csv", ".mask.csv"];

/// A village: `<name>.csv`, with optional `<name>.nodes.csv`,
/// `<name>.reporters.csv` and `<name>.mask.csv` next to it.
#[derive(Debug, Clone)]
pub struct Village {
    pub name: String,
    pub reports: PathBuf,
    pub nodes: Option<PathBuf>,
    pub reporters: Option<PathBuf>,
    pub mask_file: Option<PathBuf>,
}

pub fn discover(dir: &Path) -> Result<Vec<Village>> {
    let mut villages = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let Some(file) = path.file_name().and_then(|s| s.to_str()) else {
            continue;
        };
        if !file.ends_with(".csv") || ROSTER_SUFFIXES.iter().any(|s| file.ends_with(s)) {
            continue;
        }
        let name = file.trim_end_matches(".csv").to_string();
        let sibling = |suffix: &str| {
            let p = dir.join(format!("{name}{suffix}"));
            p.exists().then_some(p)
        };
        villages.push(Village {
            nodes: sibling(ROSTER_SUFFIXES[0]),
            reporters: sibling(ROSTER_SUFFIXES[1]),
            mask_file: sibling(ROSTER_SUFFIXES[2]),
            reports: path,
            name,
        });
    }
    villages.sort_by(|a, b| a.name.cmp(&b.name));
    if villages.is_empty() {
        bail!("no report files in {}", dir.display());
    }
    Ok(villages)
}

fn fit_village(v: &Village, cfg: &RunConfig, out: &Path) -> Result<SurveyOutcome> {
    let opts = IngestOptions {
        nodes: v.nodes.as_deref().or(cfg.nodes.as_deref()),
        reporters: v.reporters.as_deref().or(cfg.reporters.as_deref()),
        mask_file: v.mask_file.as_deref().or(cfg.mask_file.as_deref()),
        ..ingest_options(cfg)
    };
    let survey = ingest_reports(&v.reports, &opts)?;
    let inputs: Vec<&Path> = std::iter::once(v.reports.as_path())
        .chain(
            [opts.nodes, opts.reporters, opts.mask_file]
                .into_iter()
                .flatten(),
        )
        .collect();
    let digest = sha256_hex(&input_bytes(&inputs)?);
    fit_survey(&survey, cfg, &out.join(&v.name), &digest)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Returns whether every fit converged.
pub fn run(cfg: &RunConfig) -> Result<bool> {
    let dir = cfg.input()?;
    let out = cfg.output()?;
    let villages = discover(dir)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()?;
    let results: Vec<Result<SurveyOutcome>> = pool.install(|| {
        villages
            .par_iter()
            .map(|v| fit_village(v, cfg, out).with_context(|| format!("village `{}`", v.name)))
            .collect()
    });
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut w = csv_writer(&out.join("batch_summary.csv"))?;
    let mut header = vec!["village"];
    header.extend(SUMMARY_HEADER);
    header.extend(["converged", "eta_mean"]);
    w.write_record(&header)?;
    let mut pooled: BTreeMap<(String, String), Vec<[f64; 5]>> = BTreeMap::new();
    for (v, o) in villages.iter().zip(&outcomes) {
        for row in &o.summaries {
            let layer = o.layers.iter().find(|l| l.tie_type == row.layer);
            let mut rec = vec![v.name.clone(), row.layer.clone(), row.method.clone()];
            rec.extend(summary_fields(&row.summary));
            rec.push(layer.map_or(String::new(), |l| l.converged.to_string()));
            rec.push(layer.map_or(String::new(), |l| l.eta_mean.to_string()));
            w.write_record(&rec)?;
            let s = &row.summary;
            pooled
                .entry((row.layer.clone(), row.method.clone()))
                .or_default()
                .push([
                    s.n_edges as f64,
                    s.mean_degree,
                    s.transitivity,
                    s.reciprocity,
                    s.density,
                ]);
        }
    }
    w.flush()?;

    let mut w = csv_writer(&out.join("batch_aggregate.csv"))?;
    w.write_record(["layer", "method", "metric", "mean", "std", "n_villages"])?;
    let names = [
        "n_edges",
        "mean_degree",
        "transitivity",
        "reciprocity",
        "density",
    ];
    for ((layer, method), rows) in &pooled {
        for (k, name) in names.iter().enumerate() {
            let xs: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let (mean, std) = mean_std(&xs);
            w.write_record([
                layer.as_str(),
                method.as_str(),
                name,
                mean.to_string().as_str(),
                std.to_string().as_str(),
                rows.len().to_string().as_str(),
            ])?;
        }
    }
    w.flush()?;
    Ok(outcomes.iter().all(SurveyOutcome::converged))
}
