use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use multirep::synth::{
    generate_ground_truth, generate_reports, planted_reciprocity_target, Scenario, SynthConfig,
};
use multirep::ReporterMask;
use serde::{Deserialize, Serialize};

use crate::ingest::{LabelMap, HEADER};
use crate::output::{csv_writer, write_json, write_labels, write_network, write_reporters};

/// Everything needed to regenerate a synthetic survey.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthRun {
    #[serde(flatten)]
    pub config: SynthConfig,
    /// Seed of the report draw; defaults to `seed + 1`.
    pub reports_seed: Option<u64>,
    /// Rewire the planted network to this reciprocity.
    pub reciprocity: Option<f64>,
    pub tie_type: String,
    pub output: Option<PathBuf>,
}

impl Default for SynthRun {
    fn default() -> Self {
        Self {
            config: SynthConfig::default(),
            reports_seed: None,
            reciprocity: None,
            tie_type: "synthetic".into(),
            output: None,
        }
    }
}

impl SynthRun {
    /// Starts from the standard settings of the chosen scenario (flag, then
    /// file, then the Gamma scenario) and overlays the file's keys.
    pub fn load(path: Option<&Path>, scenario: Option<Scenario>) -> Result<Self> {
        let table: toml::Table = match path {
            Some(p) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        let scenario = match (scenario, table.get("scenario")) {
            (Some(s), _) => s,
            (None, Some(v)) => v.clone().try_into().context("bad `scenario`")?,
            (None, None) => Scenario::GammaTheta,
        };
        let base = SynthRun {
            config: SynthConfig::for_scenario(scenario),
            ..SynthRun::default()
        };
        let mut merged = toml::Table::try_from(&base)?;
        merged.extend(table);
        merged.insert("scenario".into(), toml::Value::try_from(scenario)?);
        let run: SynthRun = merged
            .try_into()
            .context("invalid synthetic configuration")?;
        Ok(run)
    }

    pub fn reports_seed(&self) -> u64 {
        self.reports_seed
            .unwrap_or_else(|| self.config.seed.wrapping_add(1))
    }
}

/// Labels of synthetic nodes are their indices.
fn index_labels(n: usize) -> LabelMap {
    LabelMap::from_labels((0..n).map(|i| i.to_string())).expect("indices are distinct")
}

pub fn run(run: &SynthRun) -> Result<()> {
    let out = run
        .output
        .as_deref()
        .context("no output directory given (use --output)")?;
    let cfg = &run.config;
    let (truth, achieved) = match run.reciprocity {
        Some(target) => {
            let planted = planted_reciprocity_target(cfg, target)?;
            (planted.truth, Some(planted.achieved))
        }
        None => (generate_ground_truth(cfg)?, None),
    };
    let mask = ReporterMask::self_dyads(cfg.n_reporters);
    let x = generate_reports(&truth, &mask, run.reports_seed())?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let nodes = index_labels(cfg.n_nodes);
    let reporters = index_labels(cfg.n_reporters);

    let mut w = csv_writer(&out.join("reports.csv"))?;
    w.write_record(HEADER)?;
    for r in x.entries() {
        w.write_record([
            nodes.label(r.ego),
            nodes.label(r.alter),
            reporters.label(r.reporter),
            run.tie_type.as_str(),
            r.count.to_string().as_str(),
        ])?;
    }
    w.flush()?;

    write_network(&out.join("ground_truth.csv"), &truth.y, &nodes)?;
    let mut w = csv_writer(&out.join("theta_true.csv"))?;
    w.write_record(["reporter", "theta"])?;
    for (m, t) in truth.theta.iter().enumerate() {
        w.write_record([m.to_string(), t.to_string()])?;
    }
    w.flush()?;
    write_labels(&out.join("nodes.csv"), &nodes)?;
    let reporter_nodes: Vec<Option<&str>> = (0..cfg.n_reporters as u32)
        .map(|m| mask.reporter_node(m).map(|v| nodes.label(v)))
        .collect();
    write_reporters(&out.join("reporters.csv"), &reporters, &reporter_nodes)?;
    if let Some(c) = &truth.communities {
        let mut w = csv_writer(&out.join("communities.csv"))?;
        w.write_record(["node", "community"])?;
        for (v, c) in c.iter().enumerate() {
            w.write_record([v.to_string(), c.to_string()])?;
        }
        w.flush()?;
    }

    let sidecar = SynthRun {
        reports_seed: Some(run.reports_seed()),
        output: None,
        ..run.clone()
    };
    write_json(
        &out.join("synth_config.json"),
        &serde_json::json!({
            "run": sidecar,
            "lambda": truth.lambda,
            "eta": truth.eta,
            "achieved_reciprocity": achieved,
            "n_edges": truth.y.n_edges(),
            "n_reports": x.nnz(),
        }),
    )?;
    Ok(())
}
