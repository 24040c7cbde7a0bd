//! Survey CSV ingestion: `ego,alter,reporter,tie_type[,weight]` rows into
//! one report tensor per tie type.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use multirep::{build_report_tensor, ReportRecord, ReportTensor, ReporterMask};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HEADER: [&str; 5] = ["ego", "alter", "reporter", "tie_type", "weight"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: header must be `ego,alter,reporter,tie_type[,weight]`, found `{found}`")]
    MalformedHeader { path: PathBuf, found: String },
    #[error("{path}: row {row}: weight {value} is negative")]
    NegativeWeight { path: PathBuf, row: u64, value: i64 },
    #[error("{path}: row {row}: weight `{value}` is not an integer")]
    BadWeight {
        path: PathBuf,
        row: u64,
        value: String,
    },
    #[error("{path}: row {row}: self-loop on `{label}`")]
    SelfLoop {
        path: PathBuf,
        row: u64,
        label: String,
    },
    #[error("{path}: row {row}: reporter `{reporter}` may not report {ego} -> {alter} under the {mask} mask")]
    MaskViolation {
        path: PathBuf,
        row: u64,
        ego: String,
        alter: String,
        reporter: String,
        mask: MaskRule,
    },
    #[error("{path}: row {row}: {what} `{label}` is not in the roster")]
    UnknownLabel {
        path: PathBuf,
        row: u64,
        what: &'static str,
        label: String,
    },
    #[error("{path}: {detail}")]
    BadRoster { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Core {
        path: PathBuf,
        source: multirep::Error,
    },
}

type Result<T> = std::result::Result<T, IngestError>;

/// Which triples a reporter was asked about.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MaskRule {
    /// Reporters are nodes and only report ties touching themselves.
    #[default]
    #[serde(rename = "self")]
    #[value(name = "self")]
    SelfDyads,
    /// Every reporter may report every pair.
    Full,
    /// Eligible triples listed in a separate `ego,alter,reporter` file.
    Custom,
}

impl std::fmt::Display for MaskRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MaskRule::SelfDyads => "self",
            MaskRule::Full => "full",
            MaskRule::Custom => "custom",
        })
    }
}

/// Dense indices for opaque labels, in first-appearance order unless seeded
/// from a roster.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<String>,
    index: HashMap<String, u32>,
    frozen: bool,
}

impl LabelMap {
    pub fn from_labels(
        labels: impl IntoIterator<Item = String>,
    ) -> std::result::Result<Self, String> {
        let mut map = Self::default();
        for label in labels {
            if map.index.contains_key(&label) {
                return Err(format!("duplicate label `{label}`"));
            }
            map.insert(&label);
        }
        map.frozen = true;
        Ok(map)
    }

    fn insert(&mut self, label: &str) -> u32 {
        let next = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), next);
        next
    }

    /// Index of `label`, adding it unless the map came from a roster.
    fn intern(&mut self, label: &str) -> Option<u32> {
        if let Some(&i) = self.index.get(label) {
            return Some(i);
        }
        if self.frozen {
            None
        } else {
            Some(self.insert(label))
        }
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn label(&self, i: u32) -> &str {
        &self.labels[i as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub tie_type: String,
    pub tensor: ReportTensor,
}

#[derive(Debug, Clone)]
pub struct Survey {
    pub nodes: LabelMap,
    pub reporters: LabelMap,
    pub mask: ReporterMask,
    pub rule: MaskRule,
    /// Tie types in first-appearance order.
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions<'a> {
    pub rule: MaskRule,
    pub nodes: Option<&'a Path>,
    pub reporters: Option<&'a Path>,
    pub mask_file: Option<&'a Path>,
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().flexible(false).from_reader(file))
}

fn headers(path: &Path, rdr: &mut csv::Reader<File>) -> Result<Vec<String>> {
    let h = rdr.headers().map_err(|source| IngestError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(h.iter()
        .enumerate()
        .map(|(k, s)| {
            if k == 0 {
                s.trim_start_matches('\u{feff}')
            } else {
                s
            }
            .to_string()
        })
        .collect())
}

/// Reads a roster: a CSV with a `label` column, one entry per row.
pub fn read_roster(path: &Path) -> Result<LabelMap> {
    let mut rdr = open(path)?;
    let head = headers(path, &mut rdr)?;
    let col = head
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| IngestError::BadRoster {
            path: path.to_path_buf(),
            detail: "no `label` column".into(),
        })?;
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|source| IngestError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        labels.push(rec[col].to_string());
    }
    LabelMap::from_labels(labels).map_err(|detail| IngestError::BadRoster {
        path: path.to_path_buf(),
        detail,
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(bytes)
}

/// Raw bytes of every input file, for hashing into manifests.
pub fn input_bytes(paths: &[&Path]) -> Result<Vec<u8>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_bytes(p)?);
        all.push(0);
    }
    Ok(all)
}

struct Row {
    row: u64,
    ego: u32,
    alter: u32,
    reporter: u32,
    weight: u64,
}

struct Labels {
    /// File currently being read, for error context.
    path: PathBuf,
    nodes: LabelMap,
    reporters: LabelMap,
    rule: MaskRule,
    /// Node of each reporter under the self-dyad rule.
    reporter_nodes: Vec<u32>,
}

impl Labels {
    fn node(&mut self, row: u64, what: &'static str, label: &str) -> Result<u32> {
        self.nodes
            .intern(label)
            .ok_or_else(|| IngestError::UnknownLabel {
                path: self.path.clone(),
                row,
                what,
                label: label.to_string(),
            })
    }

    fn reporter(&mut self, row: u64, label: &str) -> Result<u32> {
        let m = self
            .reporters
            .intern(label)
            .ok_or_else(|| IngestError::UnknownLabel {
                path: self.path.clone(),
                row,
                what: "reporter",
                label: label.to_string(),
            })?;
        self.sync_reporter_nodes(row)?;
        Ok(m)
    }

    /// Under the self-dyad rule every reporter label is also a node label.
    fn sync_reporter_nodes(&mut self, row: u64) -> Result<()> {
        if self.rule != MaskRule::SelfDyads {
            return Ok(());
        }
        while self.reporter_nodes.len() < self.reporters.len() {
            let next = self.reporter_nodes.len() as u32;
            let name = self.reporters.label(next).to_string();
            let v = self.node(row, "reporter node", &name)?;
            self.reporter_nodes.push(v);
        }
        Ok(())
    }
}

fn read_mask_file(path: &Path, labels: &mut Labels) -> Result<Vec<(u32, u32, u32)>> {
    let mut rdr = open(path)?;
    let head = headers(path, &mut rdr)?;
    if head != ["ego", "alter", "reporter"] {
        return Err(IngestError::MalformedHeader {
            path: path.to_path_buf(),
            found: head.join(","),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k as u64 + 1;
        let rec = rec.map_err(|source| IngestError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let i = labels.node(row, "ego", &rec[0])?;
        let j = labels.node(row, "alter", &rec[1])?;
        let m = labels.reporter(row, &rec[2])?;
        if i == j {
            return Err(IngestError::SelfLoop {
                path: path.to_path_buf(),
                row,
                label: rec[0].to_string(),
            });
        }
        out.push((i, j, m));
    }
    Ok(out)
}

/// Reads a survey export. Row numbers in errors count data rows from 1.
pub fn ingest_reports(path: &Path, opts: &IngestOptions<'_>) -> Result<Survey> {
    let nodes = match opts.nodes {
        Some(p) => read_roster(p)?,
        None => LabelMap::default(),
    };
    let reporters = match opts.reporters {
        Some(p) => read_roster(p)?,
        None => LabelMap::default(),
    };
    let mut labels = Labels {
        path: opts.reporters.unwrap_or(path).to_path_buf(),
        nodes,
        reporters,
        rule: opts.rule,
        reporter_nodes: Vec::new(),
    };
    labels.sync_reporter_nodes(0)?;
    let custom = match (opts.rule, opts.mask_file) {
        (MaskRule::Custom, Some(p)) => {
            labels.path = p.to_path_buf();
            Some(read_mask_file(p, &mut labels)?)
        }
        (MaskRule::Custom, None) => {
            return Err(IngestError::BadRoster {
                path: path.to_path_buf(),
                detail: "the custom mask rule needs a mask file".into(),
            })
        }
        _ => None,
    };

    labels.path = path.to_path_buf();
    let mut rdr = open(path)?;
    let head = headers(path, &mut rdr)?;
    let has_weight = if head == HEADER {
        true
    } else if head == HEADER[..4] {
        false
    } else {
        return Err(IngestError::MalformedHeader {
            path: path.to_path_buf(),
            found: head.join(","),
        });
    };

    let mut tie_types: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<Row>> = Vec::new();
    let mut type_index: HashMap<String, usize> = HashMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k as u64 + 1;
        let rec = rec.map_err(|source| IngestError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let ego = labels.node(row, "ego", &rec[0])?;
        let alter = labels.node(row, "alter", &rec[1])?;
        let reporter = labels.reporter(row, &rec[2])?;
        if ego == alter {
            return Err(IngestError::SelfLoop {
                path: path.to_path_buf(),
                row,
                label: rec[0].to_string(),
            });
        }
        let weight = if has_weight {
            parse_weight(path, row, &rec[4])?
        } else {
            1
        };
        let t = *type_index.entry(rec[3].to_string()).or_insert_with(|| {
            tie_types.push(rec[3].to_string());
            rows.push(Vec::new());
            tie_types.len() - 1
        });
        rows[t].push(Row {
            row,
            ego,
            alter,
            reporter,
            weight,
        });
    }

    let n_nodes = labels.nodes.len();
    let n_reporters = labels.reporters.len();
    let mask = match opts.rule {
        MaskRule::SelfDyads => ReporterMask::SelfDyads {
            reporter_nodes: labels.reporter_nodes.clone(),
        },
        MaskRule::Full => ReporterMask::FullRoster { n_reporters },
        MaskRule::Custom => ReporterMask::custom(n_reporters, custom.unwrap_or_default()),
    };

    let mut layers = Vec::with_capacity(tie_types.len());
    for (tie_type, rows) in tie_types.into_iter().zip(rows) {
        if let Some(r) = rows
            .iter()
            .find(|r| !mask.contains(r.ego, r.alter, r.reporter))
        {
            return Err(IngestError::MaskViolation {
                path: path.to_path_buf(),
                row: r.row,
                ego: labels.nodes.label(r.ego).to_string(),
                alter: labels.nodes.label(r.alter).to_string(),
                reporter: labels.reporters.label(r.reporter).to_string(),
                mask: opts.rule,
            });
        }
        let records = rows
            .iter()
            .map(|r| ReportRecord::new(r.ego.into(), r.alter.into(), r.reporter.into(), r.weight));
        let tensor = build_report_tensor(records, n_nodes, mask.clone()).map_err(|source| {
            IngestError::Core {
                path: path.to_path_buf(),
                source,
            }
        })?;
        layers.push(Layer { tie_type, tensor });
    }

    Ok(Survey {
        nodes: labels.nodes,
        reporters: labels.reporters,
        mask,
        rule: opts.rule,
        layers,
    })
}

fn parse_weight(path: &Path, row: u64, raw: &str) -> Result<u64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(1);
    }
    match raw.parse::<i64>() {
        Ok(v) if v < 0 => Err(IngestError::NegativeWeight {
            path: path.to_path_buf(),
            row,
            value: v,
        }),
        Ok(v) => Ok(v as u64),
        Err(_) => Err(IngestError::BadWeight {
            path: path.to_path_buf(),
            row,
            value: raw.to_string(),
        }),
    }
}
