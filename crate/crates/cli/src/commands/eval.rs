use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use multirep::eval::{f1_score, mse_theta, reciprocity, wasserstein_1d};
use multirep::Network;

use crate::output::read_edges;

#[derive(Debug, Clone, Default)]
pub struct EvalArgs {
    pub truth: PathBuf,
    /// `(name, path)` of each estimated network.
    pub estimates: Vec<(String, PathBuf)>,
    pub theta_true: Option<PathBuf>,
    /// `(name, path)` of each `theta.csv`.
    pub theta_estimates: Vec<(String, PathBuf)>,
    /// Constant columns prepended to every row, for stacking runs.
    pub tags: Vec<(String, String)>,
    pub output: Option<PathBuf>,
    pub append: bool,
}

/// One long-format row: which estimate, which metric, its value.
pub type MetricRow = (String, String, f64);

/// Reads a `reporter,<column>` table into label → value.
fn read_theta(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let head: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = ["theta", "mean"]
        .iter()
        .find_map(|c| head.iter().position(|h| h == c))
        .with_context(|| format!("{}: no `theta` or `mean` column", path.display()))?;
    let rep = head
        .iter()
        .position(|h| h == "reporter")
        .with_context(|| format!("{}: no `reporter` column", path.display()))?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v: f64 = rec[col]
            .parse()
            .with_context(|| format!("{}: row {}: bad value", path.display(), k + 1))?;
        out.push((rec[rep].to_string(), v));
    }
    Ok(out)
}

pub fn evaluate(args: &EvalArgs) -> Result<Vec<MetricRow>> {
    let mut labels = HashMap::new();
    let truth_edges = read_edges(&args.truth, &mut labels)?;
    let mut est_edges = Vec::new();
    for (name, path) in &args.estimates {
        est_edges.push((name.clone(), read_edges(path, &mut labels)?));
    }
    let n = labels.len();
    let truth = Network::from_edges(n, truth_edges)?;
    let mut rows = vec![
        ("truth".into(), "n_edges".into(), truth.n_edges() as f64),
        ("truth".into(), "reciprocity".into(), reciprocity(&truth)),
    ];
    for (name, edges) in est_edges {
        let net = Network::from_edges(n, edges)?;
        let s = f1_score(&net, &truth)?;
        for (metric, v) in [
            ("precision", s.precision),
            ("recall", s.recall),
            ("f1", s.f1),
            ("n_edges", net.n_edges() as f64),
            ("reciprocity", reciprocity(&net)),
        ] {
            rows.push((name.clone(), metric.into(), v));
        }
    }
    if !args.theta_estimates.is_empty() {
        let Some(true_path) = &args.theta_true else {
            bail!("--theta-estimate needs --theta-true");
        };
        let truth = read_theta(true_path)?;
        let by_label: HashMap<&str, f64> = truth.iter().map(|(l, v)| (l.as_str(), *v)).collect();
        let true_values: Vec<f64> = truth.iter().map(|(_, v)| *v).collect();
        for (name, path) in &args.theta_estimates {
            let est = read_theta(path)?;
            let mut paired_est = Vec::new();
            let mut paired_true = Vec::new();
            for (label, v) in &est {
                let t = by_label.get(label.as_str()).with_context(|| {
                    format!(
                        "{}: reporter `{label}` missing from the truth",
                        path.display()
                    )
                })?;
                paired_est.push(*v);
                paired_true.push(*t);
            }
            let est_values: Vec<f64> = est.iter().map(|(_, v)| *v).collect();
            rows.push((
                name.clone(),
                "mse_theta".into(),
                mse_theta(&paired_est, &paired_true)?,
            ));
            rows.push((
                name.clone(),
                "wasserstein_theta".into(),
                wasserstein_1d(&est_values, &true_values)?,
            ));
        }
    }
    Ok(rows)
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let rows = evaluate(args)?;
    let mut header: Vec<&str> = args.tags.iter().map(|(k, _)| k.as_str()).collect();
    header.extend(["estimate", "metric", "value"]);
    let records = rows.iter().map(|(e, m, v)| {
        let mut rec: Vec<String> = args.tags.iter().map(|(_, v)| v.clone()).collect();
        rec.extend([e.clone(), m.clone(), v.to_string()]);
        rec
    });
    match &args.output {
        Some(path) => {
            let fresh = !args.append || !path.exists() || std::fs::metadata(path)?.len() == 0;
            let file = OpenOptions::new()
                .create(true)
                .write(true)
                .append(args.append)
                .truncate(!args.append)
                .open(path)
                .with_context(|| format!("opening {}", path.display()))?;
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            if fresh {
                w.write_record(&header)?;
            }
            for rec in records {
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            w.write_record(&header)?;
            for rec in records {
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
