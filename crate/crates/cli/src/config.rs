//! Run configuration: TOML file values, overridden field by field by flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use multirep::eval::TransitivityMode;
use multirep::{FitConfig, HyperParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::MaskRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitFlags {
    pub rho: bool,
    pub theta: bool,
    pub elbo_trace: bool,
    pub summary: bool,
    /// Union and intersection networks next to the point estimate.
    pub baselines: bool,
    pub transitivity: TransitivityMode,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self {
            rho: true,
            theta: true,
            elbo_trace: true,
            summary: true,
            baselines: true,
            transitivity: TransitivityMode::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Report CSV for `fit`, directory of report CSVs for `batch`.
    pub input: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    pub reporters: Option<PathBuf>,
    pub mask: MaskRule,
    pub mask_file: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub two_step: bool,
    /// Worker threads for `batch`; 0 lets the pool decide.
    pub jobs: usize,
    pub hyper: HyperParams,
    pub fit: FitConfig,
    pub emit: EmitFlags,
}

/// The fields that change what a fit computes; paths, output choices and
/// thread counts are left out.
#[derive(Serialize)]
struct Semantic<'a> {
    mask: MaskRule,
    two_step: bool,
    hyper: &'a HyperParams,
    fit: &'a FitConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// SHA-256 over the canonical JSON of the semantic fields.
    pub fn config_hash(&self) -> String {
        let sem = Semantic {
            mask: self.mask,
            two_step: self.two_step,
            hyper: &self.hyper,
            fit: &self.fit,
        };
        let json = serde_json::to_vec(&sem).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .context("no input given (use --input or `input` in the config file)")
    }

    pub fn output(&self) -> Result<&Path> {
        self.output
            .as_deref()
            .context("no output directory given (use --output or `output` in the config file)")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
