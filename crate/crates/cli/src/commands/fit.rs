use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use multirep::eval::{intersection_baseline, network_summary_with, union_baseline, NetworkSummary};
use multirep::{fit, threshold_heuristic, two_step_fit, FitResult, Network, ReportTensor};
use serde::Serialize;
use serde_json::json;

use crate::config::{sha256_hex, RunConfig};
use crate::ingest::{ingest_reports, input_bytes, IngestOptions, Layer, Survey};
use crate::output::{
    csv_writer, layer_dir_name, summary_fields, write_json, write_labels, write_network,
    write_reporters, SUMMARY_HEADER,
};

#[derive(Debug, Clone, Serialize)]
pub struct LayerOutcome {
    pub tie_type: String,
    pub dir: String,
    pub converged: bool,
    pub iterations: usize,
    pub eta_mean: f64,
    pub n_reports: usize,
}

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub layer: String,
    pub method: String,
    pub summary: NetworkSummary,
}

#[derive(Debug, Clone)]
pub struct SurveyOutcome {
    pub layers: Vec<LayerOutcome>,
    pub summaries: Vec<SummaryRow>,
}

impl SurveyOutcome {
    pub fn converged(&self) -> bool {
        self.layers.iter().all(|l| l.converged)
    }
}

pub fn ingest_options(cfg: &RunConfig) -> IngestOptions<'_> {
    IngestOptions {
        rule: cfg.mask,
        nodes: cfg.nodes.as_deref(),
        reporters: cfg.reporters.as_deref(),
        mask_file: cfg.mask_file.as_deref(),
    }
}

/// Ingests `cfg.input`, fits every layer and writes all artifacts.
pub fn run(cfg: &RunConfig) -> Result<SurveyOutcome> {
    let input = cfg.input()?;
    let survey = ingest_reports(input, &ingest_options(cfg))?;
    let mut inputs = vec![input];
    inputs.extend(
        [&cfg.nodes, &cfg.reporters, &cfg.mask_file]
            .into_iter()
            .flatten()
            .map(|p| p.as_path()),
    );
    let digest = sha256_hex(&input_bytes(&inputs)?);
    fit_survey(&survey, cfg, cfg.output()?, &digest)
}

/// Networks that each reporter's own answers describe: "give" answers
/// (reporter is the ego) and "get" answers (reporter is the alter).
fn raw_layers(x: &ReportTensor) -> Option<[Network; 2]> {
    x.mask().reporter_node(0)?;
    let mut give = Vec::new();
    let mut get = Vec::new();
    for r in x.entries() {
        let v = x.mask().reporter_node(r.reporter)?;
        if v == r.ego {
            give.push((r.ego, r.alter));
        } else {
            get.push((r.ego, r.alter));
        }
    }
    let n = x.n_nodes();
    Some([
        Network::from_edges(n, give).ok()?,
        Network::from_edges(n, get).ok()?,
    ])
}

pub fn fit_survey(
    survey: &Survey,
    cfg: &RunConfig,
    out: &Path,
    input_digest: &str,
) -> Result<SurveyOutcome> {
    cfg.fit.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_labels(&out.join("nodes.csv"), &survey.nodes)?;
    let reporter_nodes: Vec<Option<&str>> = (0..survey.reporters.len() as u32)
        .map(|m| survey.mask.reporter_node(m).map(|v| survey.nodes.label(v)))
        .collect();
    write_reporters(
        &out.join("reporters.csv"),
        &survey.reporters,
        &reporter_nodes,
    )?;

    let empty;
    let layers: &[Layer] = if survey.layers.is_empty() {
        empty = [Layer {
            tie_type: String::new(),
            tensor: ReportTensor::empty(survey.nodes.len(), survey.mask.clone())?,
        }];
        &empty
    } else {
        &survey.layers
    };

    let mut outcomes = Vec::new();
    let mut summaries = Vec::new();
    let mut taken = Vec::new();
    for layer in layers {
        let name = layer_dir_name(&layer.tie_type, &taken);
        taken.push(name.clone());
        let dir = out.join(&name);
        fs::create_dir_all(&dir)?;
        let result = if cfg.two_step {
            two_step_fit(&layer.tensor, &cfg.hyper, &cfg.fit)
        } else {
            fit(&layer.tensor, &cfg.hyper, &cfg.fit)
        }
        .with_context(|| format!("fitting layer `{}`", layer.tie_type))?;
        write_layer(&dir, survey, layer, &result, cfg)?;

        let mode = cfg.emit.transitivity;
        let mut add = |method: &str, net: &Network| {
            summaries.push(SummaryRow {
                layer: layer.tie_type.clone(),
                method: method.to_string(),
                summary: network_summary_with(net, mode),
            })
        };
        if let Some(net) = &result.point_network {
            add("vimure", net);
        }
        add("union", &union_baseline(&layer.tensor));
        add("intersection", &intersection_baseline(&layer.tensor));
        if let Some([give, get]) = raw_layers(&layer.tensor) {
            add("give", &give);
            add("get", &get);
        }
        outcomes.push(LayerOutcome {
            tie_type: layer.tie_type.clone(),
            dir: name,
            converged: result.converged,
            iterations: result.n_iterations,
            eta_mean: result.eta_est,
            n_reports: layer.tensor.nnz(),
        });
    }

    if cfg.emit.summary {
        let mut w = csv_writer(&out.join("summary.csv"))?;
        w.write_record(SUMMARY_HEADER)?;
        for row in &summaries {
            let mut rec = vec![row.layer.clone(), row.method.clone()];
            rec.extend(summary_fields(&row.summary));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }

    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(
        &out.join("manifest.json"),
        &json!({
            "tool": "multirep",
            "version": env!("CARGO_PKG_VERSION"),
            "core_version": multirep::VERSION,
            "seed": cfg.fit.seed,
            "config_hash": cfg.config_hash(),
            "input_sha256": input_digest,
            "created_unix": created,
            "layers": outcomes,
            "config": cfg,
        }),
    )?;
    Ok(SurveyOutcome {
        layers: outcomes,
        summaries,
    })
}

fn write_theta(path: &Path, survey: &Survey, result: &FitResult) -> Result<()> {
    let s = &result.state;
    let mut w = csv_writer(path)?;
    w.write_record(["reporter", "shape", "rate", "mean"])?;
    for m in 0..s.n_reporters() {
        w.write_record([
            survey.reporters.label(m as u32).to_string(),
            s.gamma_shape[m].to_string(),
            s.gamma_rate[m].to_string(),
            (s.gamma_shape[m] / s.gamma_rate[m]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_layer(
    dir: &Path,
    survey: &Survey,
    layer: &Layer,
    result: &FitResult,
    cfg: &RunConfig,
) -> Result<()> {
    let s = &result.state;
    let threshold = cfg
        .fit
        .threshold
        .unwrap_or_else(|| threshold_heuristic(result.eta_est));
    write_json(
        &dir.join("eta.json"),
        &json!({
            "shape": s.nu_shape,
            "rate": s.nu_rate,
            "mean": s.eta_mean(),
            "threshold": threshold,
            "converged": result.converged,
            "iterations": result.n_iterations,
        }),
    )?;
    if cfg.emit.theta {
        write_theta(&dir.join("theta.csv"), survey, result)?;
        if let Some(first) = &result.first_step {
            write_theta(&dir.join("theta_first_step.csv"), survey, first)?;
        }
    }
    if cfg.emit.rho {
        let k = s.n_levels();
        let mut w = csv_writer(&dir.join("rho.csv"))?;
        w.write_record(["i", "j", "k", "probability"])?;
        let mut row = vec![0.0; k];
        let n = survey.nodes.len() as u32;
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                s.rho.row_into(i, j, &mut row);
                for (level, p) in row.iter().enumerate() {
                    w.write_record([
                        survey.nodes.label(i),
                        survey.nodes.label(j),
                        level.to_string().as_str(),
                        p.to_string().as_str(),
                    ])?;
                }
            }
        }
        w.flush()?;
    }
    if cfg.emit.elbo_trace {
        let mut w = csv_writer(&dir.join("elbo.csv"))?;
        w.write_record(["iteration", "elbo"])?;
        for (it, e) in result.elbo_iterations.iter().zip(&result.elbo_trace) {
            w.write_record([it.to_string(), e.to_string()])?;
        }
        w.flush()?;
    }
    if let Some(net) = &result.point_network {
        write_network(&dir.join("network_vimure.csv"), net, &survey.nodes)?;
    }
    if cfg.emit.baselines {
        write_network(
            &dir.join("network_union.csv"),
            &union_baseline(&layer.tensor),
            &survey.nodes,
        )?;
        write_network(
            &dir.join("network_intersection.csv"),
            &intersection_baseline(&layer.tensor),
            &survey.nodes,
        )?;
    }
    Ok(())
}
