//! Experiment drivers behind the `temclu` binary: configuration, output
//! headers, and one runner per experiment.

mod clustering;
mod continuity;
mod figures;
mod robustness;
mod verify;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::Layout;
use crate::diagram::Viewport;
use crate::divergence::{AxisFactor, Side};
use crate::error::{Result, TemError};
use crate::family::FamilyDescriptor;

pub use clustering::{
    clustering_grid, mean_std, CellStats, ClusteringResults, RunMetrics, RunRecord, METRICS,
};
pub use continuity::{continuity_table, ContinuityRow};
pub use figures::{ball_jobs, pentagon, voronoi_jobs};
pub use robustness::{right_sweep, robustness_trace, RightSweepRow, RobustnessTrace};
pub use verify::{verify_checks, CheckRow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Balls,
    Voronoi,
    Robustness,
    Clustering,
    Verify,
    Continuity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Balls => "balls",
            Experiment::Voronoi => "voronoi",
            Experiment::Robustness => "robustness",
            Experiment::Clustering => "clustering",
            Experiment::Verify => "verify",
            Experiment::Continuity => "continuity",
        }
    }

    fn default_t_list(self) -> Vec<f64> {
        match self {
            Experiment::Balls | Experiment::Robustness => vec![0.0, 1.0],
            Experiment::Voronoi | Experiment::Clustering => vec![0.0, 0.5, 1.0],
            Experiment::Verify => vec![0.0, 0.25, 0.5, 0.75, 1.0],
            Experiment::Continuity => vec![0.9, 0.99, 0.999, 0.9999],
        }
    }

    fn default_seeds(self) -> Vec<u64> {
        match self {
            Experiment::Robustness => (0..5).collect(),
            Experiment::Clustering => (0..50).collect(),
            _ => vec![0],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallsParams {
    pub centers: Vec<[f64; 2]>,
    pub radius_px: f64,
}

impl Default for BallsParams {
    fn default() -> Self {
        BallsParams {
            centers: vec![[-3.0, -3.0], [-1.2, -3.0], [-3.0, -1.2], [-1.2, -1.2]],
            radius_px: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoronoiParams {
    pub center: [f64; 2],
    pub radius: f64,
    /// Rotations, each by `72° / rotation_steps`.
    pub rotation_steps: usize,
}

impl Default for VoronoiParams {
    fn default() -> Self {
        VoronoiParams {
            center: [-2.05, -2.05],
            radius: 1.2,
            rotation_steps: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessParams {
    pub center: [f64; 2],
    pub cluster_size: usize,
    pub radius_px: f64,
    /// Temper of the ball the cluster is drawn from, shared by every t.
    pub generator_t: f64,
    /// Weight of the outlier relative to each cluster point.
    pub outlier_weight: f64,
    pub step_count: usize,
    pub step_size: f64,
    /// Right-minimizer contamination sweep.
    pub contamination: f64,
    pub magnitudes: Vec<f64>,
}

impl Default for RobustnessParams {
    fn default() -> Self {
        RobustnessParams {
            center: [-2.0, -2.0],
            cluster_size: 200,
            radius_px: 20.0,
            generator_t: 1.0,
            outlier_weight: 5000.0,
            step_count: 20,
            step_size: 0.25,
            contamination: 0.01,
            magnitudes: vec![10.0, 100.0, 1000.0, 10000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringParams {
    pub layouts: Vec<Layout>,
    pub generator_t: Vec<f64>,
    pub p_noise: Vec<f64>,
    pub k: usize,
    pub points_per_cluster: usize,
    pub imbalance: usize,
    pub radius_px: f64,
    pub side: Side,
    pub max_iters: usize,
    pub factor: AxisFactor,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        ClusteringParams {
            layouts: vec![Layout::Close3x3, Layout::Far3x3],
            generator_t: vec![0.0, 1.0],
            p_noise: vec![0.0, 0.1],
            k: 9,
            points_per_cluster: 200,
            imbalance: 20,
            radius_px: 12.0,
            side: Side::Left,
            max_iters: 100,
            factor: AxisFactor::PerAxis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub thetas_exponential: Vec<f64>,
    pub thetas_gaussian: Vec<f64>,
    /// Nested `(theta_hat, theta)` pairs, `theta_hat >= theta`.
    pub pairs: Vec<(f64, f64)>,
    pub tolerance: f64,
    pub divergence_tolerance: f64,
    pub cumulant_tolerance: f64,
    /// Added to every closed-form cumulant; nonzero only to test the harness.
    pub cumulant_offset: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            thetas_exponential: vec![-0.3, -0.7, -1.0, -2.5, -6.0],
            thetas_gaussian: vec![-0.25, -0.5, -1.0, -2.0, -5.0],
            pairs: vec![
                (-0.5, -0.8),
                (-1.0, -1.5),
                (-1.0, -1.0),
                (-2.0, -4.0),
                (-0.7, -3.0),
            ],
            tolerance: 1e-6,
            divergence_tolerance: 1e-5,
            cumulant_tolerance: 1e-8,
            cumulant_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuityParams {
    pub thetas_exponential: Vec<f64>,
    pub thetas_gaussian: Vec<f64>,
    pub final_tolerance: f64,
}

impl Default for ContinuityParams {
    fn default() -> Self {
        ContinuityParams {
            thetas_exponential: vec![-0.25, -0.5, -2.0, -3.0, -5.0],
            thetas_gaussian: vec![-0.25, -0.5, -1.0, -2.0, -4.0],
            final_tolerance: 1e-3,
        }
    }
}

/// Everything a run depends on. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Family kind for the figures, robustness and clustering. Its `t` is
    /// replaced by each entry of `t_list`.
    pub family: FamilyDescriptor,
    pub t_list: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub output_dir: PathBuf,
    pub viewport: Viewport,
    pub balls: BallsParams,
    pub voronoi: VoronoiParams,
    pub robustness: RobustnessParams,
    pub clustering: ClusteringParams,
    pub verify: VerifyParams,
    pub continuity: ContinuityParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: FamilyDescriptor::t_exponential(1.0),
            t_list: None,
            seeds: None,
            output_dir: PathBuf::from("out"),
            viewport: Viewport::default(),
            balls: BallsParams::default(),
            voronoi: VoronoiParams::default(),
            robustness: RobustnessParams::default(),
            clustering: ClusteringParams::default(),
            verify: VerifyParams::default(),
            continuity: ContinuityParams::default(),
        }
    }
}

/// Command-line overrides; they win over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub t_list: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| TemError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| TemError::Serialize {
            path: path.into(),
            message: e.to_string(),
        })
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(t) = &o.t_list {
            self.t_list = Some(t.clone());
        }
        if let Some(s) = &o.seeds {
            self.seeds = Some(s.clone());
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        self
    }

    /// Fills `t_list` and `seeds` with the experiment defaults and validates.
    pub fn resolve(mut self, exp: Experiment) -> Result<Self> {
        if self.t_list.is_none() {
            self.t_list = Some(exp.default_t_list());
        }
        if self.seeds.is_none() {
            self.seeds = Some(exp.default_seeds());
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(ts) = &self.t_list {
            if ts.is_empty() {
                return Err(TemError::Config("t_list is empty".into()));
            }
            if let Some(&t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(TemError::Config(format!("t = {t} outside [0, 1]")));
            }
        }
        if self.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            return Err(TemError::Config("seeds is empty".into()));
        }
        for &t in &self.clustering.generator_t {
            if !(0.0..=1.0).contains(&t) {
                return Err(TemError::Config(format!(
                    "generator t = {t} outside [0, 1]"
                )));
            }
        }
        if let Some(&p) = self
            .clustering
            .p_noise
            .iter()
            .find(|p| !(0.0..1.0).contains(*p))
        {
            return Err(TemError::Config(format!("p_noise = {p} outside [0, 1)")));
        }
        self.viewport.validate()
    }

    pub fn t_list(&self) -> &[f64] {
        self.t_list.as_deref().unwrap_or(&[])
    }

    pub fn seeds(&self) -> &[u64] {
        self.seeds.as_deref().unwrap_or(&[])
    }

    /// SHA-256 of the canonical JSON, with the output directory left out so
    /// identical runs into different directories agree byte for byte.
    pub fn hash(&self, exp: Experiment) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&(exp, &c)).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// The `#` line that opens every CSV of a run.
    pub fn csv_header(&self, exp: Experiment, notes: &str) -> String {
        let mut h = format!(
            "# temclu {VERSION} experiment={} config_sha256={}",
            exp.name(),
            self.hash(exp)
        );
        if !notes.is_empty() {
            h.push(' ');
            h.push_str(notes);
        }
        h
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub files: Vec<PathBuf>,
    /// Failed checks (verify, continuity) or failed runs (clustering).
    pub failures: usize,
    pub lines: Vec<String>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs one experiment on an already resolved configuration.
pub fn run(exp: Experiment, cfg: &ExperimentConfig) -> Result<RunSummary> {
    let cfg = cfg.clone().resolve(exp)?;
    match exp {
        Experiment::Balls => figures::run_balls(&cfg),
        Experiment::Voronoi => figures::run_voronoi(&cfg),
        Experiment::Robustness => robustness::run_robustness(&cfg),
        Experiment::Clustering => clustering::run_clustering(&cfg),
        Experiment::Verify => verify::run_verify(&cfg),
        Experiment::Continuity => continuity::run_continuity(&cfg),
    }
}

/// Float formatting used in every CSV: shortest round-trip form.
pub(crate) fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

pub(crate) fn t_tag(t: f64) -> String {
    format!("t{}", fmt_f(t).replace('.', "p"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults_and_overrides() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"t_list": [0.5], "clustering": {"k": 9}}"#).unwrap();
        assert_eq!(cfg.t_list, Some(vec![0.5]));
        assert_eq!(cfg.clustering, ClusteringParams::default());
        let o = Overrides {
            t_list: Some(vec![0.0, 1.0]),
            seeds: None,
            output_dir: Some("x".into()),
        };
        let r = cfg
            .with_overrides(&o)
            .resolve(Experiment::Clustering)
            .unwrap();
        assert_eq!(r.t_list(), &[0.0, 1.0]);
        assert_eq!(r.seeds().len(), 50);
        assert_eq!(r.output_dir, PathBuf::from("x"));
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"tlist": [0.5]}"#).is_err());
        let bad = ExperimentConfig {
            t_list: Some(vec![1.5]),
            ..ExperimentConfig::default()
        };
        assert!(bad.resolve(Experiment::Balls).is_err());
        let empty = ExperimentConfig {
            seeds: Some(vec![]),
            ..ExperimentConfig::default()
        };
        assert!(empty.resolve(Experiment::Balls).is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            output_dir: "elsewhere".into(),
            ..a.clone()
        };
        assert_eq!(a.hash(Experiment::Verify), b.hash(Experiment::Verify));
        assert_ne!(a.hash(Experiment::Verify), a.hash(Experiment::Balls));
        let c = ExperimentConfig {
            t_list: Some(vec![0.0]),
            ..a.clone()
        };
        assert_ne!(a.hash(Experiment::Verify), c.hash(Experiment::Verify));
        assert_eq!(a.hash(Experiment::Verify).len(), 64);
    }

    #[test]
    fn tags() {
        assert_eq!(t_tag(0.5), "t0p5");
        assert_eq!(t_tag(1.0), "t1p0");
    }
}
