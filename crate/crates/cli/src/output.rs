//! Artifact writers and the readers that accept them back.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use multirep::eval::NetworkSummary;
use multirep::Network;
use serde::Serialize;

use crate::ingest::LabelMap;

pub fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["index", "label"])?;
    for (i, l) in labels.labels().iter().enumerate() {
        w.write_record([i.to_string().as_str(), l])?;
    }
    w.flush()?;
    Ok(())
}

/// Reporter roster with each reporter's node, when the design has one.
pub fn write_reporters(path: &Path, reporters: &LabelMap, nodes: &[Option<&str>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["index", "label", "node"])?;
    for (m, l) in reporters.labels().iter().enumerate() {
        let node = nodes.get(m).copied().flatten().unwrap_or("");
        w.write_record([m.to_string().as_str(), l, node])?;
    }
    w.flush()?;
    Ok(())
}

/// Edge list `i,j,y` with one row per present edge.
pub fn write_network(path: &Path, net: &Network, labels: &LabelMap) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["i", "j", "y"])?;
    for &(i, j) in net.edges() {
        w.write_record([labels.label(i), labels.label(j), "1"])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an `i,j,y` file; rows with `y = 0` are skipped. Unknown labels are
/// added to `labels`.
pub fn read_edges(path: &Path, labels: &mut HashMap<String, u32>) -> Result<Vec<(u32, u32)>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let head: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if head != ["i", "j", "y"] {
        bail!(
            "{}: expected header `i,j,y`, found `{}`",
            path.display(),
            head.join(",")
        );
    }
    let mut edges = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), k + 1))?;
        let y: i64 = rec[2]
            .trim()
            .parse()
            .with_context(|| format!("{}: row {}: bad y `{}`", path.display(), k + 1, &rec[2]))?;
        if y == 0 {
            continue;
        }
        let mut id = |s: &str| {
            let next = labels.len() as u32;
            *labels.entry(s.to_string()).or_insert(next)
        };
        let (i, j) = (id(&rec[0]), id(&rec[1]));
        edges.push((i, j));
    }
    Ok(edges)
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "layer",
    "method",
    "n_nodes",
    "n_edges",
    "mean_degree",
    "mean_degree_std",
    "transitivity",
    "reciprocity",
    "density",
];

pub fn summary_fields(s: &NetworkSummary) -> [String; 7] {
    [
        s.n_nodes.to_string(),
        s.n_edges.to_string(),
        s.mean_degree.to_string(),
        s.mean_degree_std.to_string(),
        s.transitivity.to_string(),
        s.reciprocity.to_string(),
        s.density.to_string(),
    ]
}

/// Directory-safe rendering of a tie type.
pub fn layer_dir_name(tie_type: &str, taken: &[String]) -> String {
    let mut base: String = tie_type
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if base.is_empty() {
        base = "layer".into();
    }
    let mut name = base.clone();
    let mut k = 2;
    while taken.contains(&name) {
        name = format!("{base}_{k}");
        k += 1;
    }
    name
}
