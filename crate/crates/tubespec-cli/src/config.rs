//! Problem configuration: operator, analysis parameters, output location.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tubespec_core::fourier::ProductFunction;
use tubespec_core::operator::OperatorSpec;
use tubespec_core::propagation::LocalWindow;

#[derive(Debug, Deserialize)]
pub struct ProblemConfig {
    /// Inline operator description; alternative to `operator_path`.
    pub operator: Option<OperatorSpec>,
    pub operator_path: Option<PathBuf>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Default output directory; `--out` overrides it.
    pub output: Option<PathBuf>,
    /// Decimal digits for witness-mode gap rendering.
    #[serde(default = "default_precision")]
    pub precision: u32,
    /// Seed for any randomized diagnostics (reports record it).
    #[serde(default)]
    pub seed: u64,
}

fn default_precision() -> u32 {
    50
}

#[derive(Debug, Default, Deserialize)]
pub struct AnalysisConfig {
    pub agh_scan: Option<AghScanConfig>,
    pub apriori: Option<AprioriConfig>,
    pub solve: Option<SolveConfig>,
    pub cluster: Option<ClusterConfig>,
    pub propagation: Option<PropagationConfig>,
    pub case_study: Option<CaseStudyConfig>,
}

#[derive(Debug, Deserialize)]
pub struct AghScanConfig {
    #[serde(default = "default_scan_radius")]
    pub radius: f64,
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    #[serde(default = "default_witness_q_cap")]
    pub witness_q_cap: u64,
}

fn default_scan_radius() -> f64 {
    50.0
}

fn default_rho_max() -> f64 {
    10.0
}

fn default_witness_q_cap() -> u64 {
    10_000_000
}

#[derive(Debug, Deserialize)]
pub struct AprioriConfig {
    pub lambda_max: u64,
    #[serde(default = "default_window_k")]
    pub k: u32,
}

fn default_window_k() -> u32 {
    8
}

#[derive(Debug, Deserialize)]
pub struct SolveConfig {
    pub f: Option<ProductFunction>,
    pub f_path: Option<PathBuf>,
    pub k: u32,
    pub radius: f64,
    #[serde(default)]
    pub force: bool,
}

#[derive(Debug, Deserialize)]
pub struct ClusterConfig {
    pub k: u32,
    pub radius: f64,
}

#[derive(Debug, Deserialize)]
pub struct PropagationConfig {
    pub u: Option<ProductFunction>,
    pub u_path: Option<PathBuf>,
    pub window: LocalWindow,
}

#[derive(Debug, Deserialize)]
pub struct CaseStudyConfig {
    pub which: CaseStudyKind,
    /// SU(2): maximal irrep label (half-integer, e.g. 20.0 or 19.5).
    pub l_max: Option<f64>,
    /// Circle: truncation radius of the coefficient recurrence.
    pub k_cut: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseStudyKind {
    Su2,
    S1,
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<ProblemConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("malformed config: {e}"))
    }

    /// The operator, resolving `operator_path` relative to the config file.
    pub fn operator(&self, config_dir: &Path) -> Result<OperatorSpec, String> {
        if let Some(op) = &self.operator {
            return Ok(op.clone());
        }
        if let Some(rel) = &self.operator_path {
            let path = config_dir.join(rel);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read operator {}: {e}", path.display()))?;
            return serde_json::from_str(&text).map_err(|e| format!("malformed operator: {e}"));
        }
        Err("config needs `operator` or `operator_path`".into())
    }
}

pub fn load_function(
    inline: &Option<ProductFunction>,
    path: &Option<PathBuf>,
    config_dir: &Path,
    what: &str,
) -> Result<ProductFunction, String> {
    if let Some(f) = inline {
        return Ok(f.clone());
    }
    if let Some(rel) = path {
        let p = config_dir.join(rel);
        let text = std::fs::read_to_string(&p)
            .map_err(|e| format!("cannot read {what} {}: {e}", p.display()))?;
        return serde_json::from_str(&text).map_err(|e| format!("malformed {what}: {e}"));
    }
    Err(format!("config needs `{what}` inline or a path"))
}
