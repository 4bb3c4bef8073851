use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::GradientMode;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic {
        users: usize,
        movies: usize,
        density: f64,
        min_rating: u32,
        max_rating: u32,
        seed: u64,
    },
    /// MovieLens-style ratings file.
    File { path: PathBuf },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            users: 500,
            movies: 100,
            density: 0.1,
            min_rating: 1,
            max_rating: 5,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Line,
    Complete,
    /// Erdős–Rényi graph with the given expected degree.
    ErdosRenyi {
        avg_degree: f64,
    },
    EdgeList {
        path: PathBuf,
    },
}

impl TopologySpec {
    pub fn label(&self) -> &'static str {
        match self {
            TopologySpec::Line => "line",
            TopologySpec::Complete => "complete",
            TopologySpec::ErdosRenyi { .. } => "er",
            TopologySpec::EdgeList { .. } => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Algorithm {
    /// Exact multilinear gradients fed straight into the consensus step.
    Continuous,
    /// Gradients averaged over rounds before the consensus step.
    Discrete {
        gradient_mode: GradientMode,
        #[serde(default = "one")]
        batch: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    /// At most `k` movies.
    Uniform,
    /// Movies split into `parts` contiguous blocks, at most `k` from each.
    Partition { parts: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One cell per (topology, T, k); no plots.
    Single,
    /// Plots final distance-to-average against T.
    Figure1,
    /// Plots average objective against k with the greedy curve.
    Figure2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub data: DataSource,
    pub nodes: usize,
    pub topologies: Vec<TopologySpec>,
    pub algorithm: Algorithm,
    pub body: BodySpec,
    pub ks: Vec<usize>,
    pub rounds: Vec<usize>,
    pub alpha: Option<f64>,
    pub phi: Option<f64>,
    pub seed: u64,
    pub stride: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Single,
            data: DataSource::default(),
            nodes: 20,
            topologies: vec![
                TopologySpec::Line,
                TopologySpec::ErdosRenyi { avg_degree: 5.0 },
                TopologySpec::Complete,
            ],
            algorithm: Algorithm::Discrete {
                gradient_mode: GradientMode::Exact,
                batch: 1,
            },
            body: BodySpec::Uniform,
            ks: vec![5],
            rounds: vec![50],
            alpha: None,
            phi: None,
            seed: 1,
            stride: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Sweep of the final consensus distance against T.
    pub fn figure1() -> Self {
        ExperimentConfig {
            mode: Mode::Figure1,
            rounds: vec![10, 50, 200, 1000],
            ..Self::default()
        }
    }

    /// Sweep of the objective against k for two horizons.
    pub fn figure2() -> Self {
        ExperimentConfig {
            mode: Mode::Figure2,
            ks: (1..=8).collect(),
            rounds: vec![50, 1000],
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Applies `key=value` overrides to `base` (a JSON object); dotted keys
    /// reach into nested objects and values that are not valid JSON are
    /// taken as strings.
    pub fn with_overrides(base: Value, overrides: &[String]) -> Result<Self> {
        let mut doc = base;
        for item in overrides {
            let (key, raw) = item.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("override {item:?} is not key=value"))
            })?;
            let value =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut slot = &mut doc;
            for part in key.split('.') {
                let obj = slot.as_object_mut().ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "override key {key:?} does not name an object field"
                    ))
                })?;
                slot = obj.entry(part.to_string()).or_insert(Value::Null);
            }
            *slot = value;
        }
        let cfg: Self = serde_json::from_value(doc)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.nodes == 0 {
            return bad("at least one node is required".into());
        }
        if self.topologies.is_empty() || self.ks.is_empty() || self.rounds.is_empty() {
            return bad("topologies, ks and rounds must be nonempty".into());
        }
        if self.rounds.contains(&0) {
            return bad("every T must be at least 1".into());
        }
        if self.ks.contains(&0) {
            return bad("every k must be at least 1".into());
        }
        if let DataSource::Synthetic { users, movies, .. } = &self.data {
            if let Some(k) = self.ks.iter().find(|&&k| k > *movies) {
                return bad(format!("k = {k} exceeds the {movies} movies"));
            }
            if *users < self.nodes {
                return bad(format!("{users} users cannot cover {} nodes", self.nodes));
            }
        }
        if let BodySpec::Partition { parts: 0 } = self.body {
            return bad("a partition needs at least one part".into());
        }
        if let Algorithm::Discrete { batch: 0, .. } = self.algorithm {
            return bad("batch size must be at least 1".into());
        }
        Ok(())
    }
}
