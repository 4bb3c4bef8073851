use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, BodySpec, DataSource, ExperimentConfig, Mode, TopologySpec};
use super::data::{generate_synthetic, load_ratings};
use super::plot;
use crate::baselines::centralized_greedy;
use crate::engine::{
    run_continuous_dcg, run_discrete_dcg, FacilityGradient, RunParameters, Trajectory,
};
use crate::metrics::{check_round_stats, round_slacks, theory_constants, LemmaCheck};
use crate::multilinear::FractionalPoint;
use crate::polytope::FeasibleBody;
use crate::rounding::pipage_round_exact;
use crate::setfn::{
    facility_location, partition_users, FacilityLocation, MeanOf, RatingsMatrix, SetFunction,
};
use crate::topology::{
    build_graph, er_probability_for_degree, load_edge_list, metropolis_weights, validate_weights,
    CommGraph, GraphKind, SpectralReport, WeightMatrix,
};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "t,dist_to_avg,mean_obj,lemma1_slack,lemma2_slack";

/// Users split over nodes, one facility-location objective per node, and
/// their average as the global objective.
pub struct Instance {
    pub ratings: RatingsMatrix,
    pub groups: Vec<Vec<usize>>,
    pub locals: Vec<FacilityLocation>,
    pub global: MeanOf<FacilityLocation>,
}

impl Instance {
    pub fn new(ratings: RatingsMatrix, nodes: usize, seed: u64) -> Result<Self> {
        let groups = partition_users(ratings.users(), nodes, seed)?.groups;
        let locals = groups
            .iter()
            .map(|g| facility_location(&ratings, g))
            .collect::<Result<Vec<_>>>()?;
        let global = MeanOf::new(locals.clone())?;
        Ok(Instance {
            ratings,
            groups,
            locals,
            global,
        })
    }

    /// Global objective `(1/n) sum_i F_i(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.global
            .multilinear_closed_form(x)
            .expect("facility objectives have a closed form")
            .0
    }
}

pub fn load_data(source: &DataSource) -> Result<RatingsMatrix> {
    match source {
        DataSource::Synthetic {
            users,
            movies,
            density,
            min_rating,
            max_rating,
            seed,
        } => generate_synthetic(*users, *movies, *density, (*min_rating, *max_rating), *seed),
        DataSource::File { path } => load_ratings(path),
    }
}

pub fn build_body(spec: &BodySpec, p: usize, k: usize) -> Result<FeasibleBody> {
    match spec {
        BodySpec::Uniform => Ok(FeasibleBody::uniform(p, k)),
        BodySpec::Partition { parts } => {
            let size = p.div_ceil(*parts).max(1);
            let blocks: Vec<Vec<usize>> = (0..p)
                .collect::<Vec<_>>()
                .chunks(size)
                .map(<[usize]>::to_vec)
                .collect();
            let caps = vec![k; blocks.len()];
            FeasibleBody::partition(p, blocks, caps)
        }
    }
}

pub fn build_topology(spec: &TopologySpec, n: usize, seed: u64) -> Result<CommGraph> {
    match spec {
        TopologySpec::Line => build_graph(&GraphKind::Line, n, seed),
        TopologySpec::Complete => build_graph(&GraphKind::Complete, n, seed),
        TopologySpec::ErdosRenyi { avg_degree } => build_graph(
            &GraphKind::ErdosRenyi {
                edge_prob: er_probability_for_degree(n, *avg_degree),
            },
            n,
            seed,
        ),
        TopologySpec::EdgeList { path } => {
            let g = load_edge_list(path)?;
            if g.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.n(),
                });
            }
            Ok(g)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub t: usize,
    pub dist_to_avg: f64,
    pub mean_obj: f64,
    pub lemma1_slack: f64,
    pub lemma2_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologySummary {
    pub label: String,
    pub edges: usize,
    pub average_degree: f64,
    pub attempts: usize,
    pub spectral: SpectralReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub key: String,
    pub topology: String,
    pub rounds: usize,
    pub k: usize,
    pub alpha: f64,
    pub phi: Option<f64>,
    pub rows: Vec<RoundRow>,
    pub final_distance_to_average: f64,
    /// Global objective at each node's final point.
    pub fractional_objectives: Vec<f64>,
    pub mean_fractional_objective: f64,
    /// Global objective of each node's pipage-rounded set.
    pub rounded_objectives: Vec<f64>,
    pub rounded_sets: Vec<Vec<usize>>,
    /// Mean of `rounded_objectives`; the plotted objective.
    pub mean_rounded_objective: f64,
    pub greedy_value: f64,
    pub greedy_set: Vec<usize>,
    pub feasible: bool,
    pub lemma_checks: Vec<LemmaCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub users: usize,
    pub movies: usize,
    pub ratings: usize,
    pub users_per_node: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub instance: InstanceSummary,
    pub topologies: Vec<TopologySummary>,
    /// Base of the logarithm applied to distances in plots.
    pub distance_log_base: u32,
    pub cells: Vec<CellRecord>,
    pub wall_time_ms: u64,
}

impl RunRecord {
    /// JSON without the wall-clock field, for reproducibility comparisons.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("wall_time_ms");
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn cell(&self, topology: &str, rounds: usize, k: usize) -> Option<&CellRecord> {
        self.cells
            .iter()
            .find(|c| c.topology == topology && c.rounds == rounds && c.k == k)
    }
}

pub fn cell_key(topology: &str, rounds: usize, k: usize) -> String {
    format!("{topology}_T{rounds:05}_k{k:02}")
}

struct Network {
    label: String,
    weights: WeightMatrix,
    summary: TopologySummary,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn run_cell(
    cfg: &ExperimentConfig,
    inst: &Instance,
    net: &Network,
    rounds: usize,
    k: usize,
) -> Result<CellRecord> {
    let p = inst.ratings.movies();
    let body = build_body(&cfg.body, p, k)?;
    let mut params = RunParameters::new(rounds).with_seed(cfg.seed);
    params.alpha = cfg.alpha;
    params.phi = cfg.phi;
    params.stride = cfg.stride;
    let traj: Trajectory = match &cfg.algorithm {
        Algorithm::Continuous => {
            let oracles: Vec<_> = inst.locals.iter().map(FacilityGradient).collect();
            run_continuous_dcg(&oracles, &body, &net.weights, &params)?
        }
        Algorithm::Discrete {
            gradient_mode,
            batch,
        } => {
            params.batch = *batch;
            run_discrete_dcg(&inst.locals, &body, &net.weights, &params, *gradient_mode)?
        }
    };
    let n = traj.nodes();
    let bounds = theory_constants(&inst.locals, &body, &net.summary.spectral);

    let rows = traj
        .snapshots
        .iter()
        .map(|snap| {
            let (dist, (s1, s2)) = match snap.round {
                0 => (0.0, (0.0, 0.0)),
                t => {
                    let stats = &traj.round_stats[t - 1];
                    (
                        stats.distance_to_average,
                        round_slacks(stats, &bounds, n, rounds),
                    )
                }
            };
            let objs: Vec<f64> = snap.nodes.iter().map(|s| inst.value(&s.x)).collect();
            RoundRow {
                t: snap.round,
                dist_to_avg: dist,
                mean_obj: mean(&objs),
                lemma1_slack: s1,
                lemma2_slack: s2,
            }
        })
        .collect::<Vec<_>>();

    let finals = traj.final_points();
    let fractional_objectives: Vec<f64> = finals.iter().map(|x| inst.value(x)).collect();
    let rounded = finals
        .iter()
        .map(|x| pipage_round_exact(&FractionalPoint::clamped(x), &body, &inst.global))
        .collect::<Result<Vec<_>>>()?;
    let greedy = centralized_greedy(&inst.global, &body)?;
    let rounded_objectives: Vec<f64> = rounded.iter().map(|r| r.value).collect();

    Ok(CellRecord {
        key: cell_key(&net.label, rounds, k),
        topology: net.label.clone(),
        rounds,
        k,
        alpha: traj.params.alpha(),
        phi: traj.discrete.then(|| traj.params.phi()),
        final_distance_to_average: traj
            .round_stats
            .last()
            .map_or(0.0, |s| s.distance_to_average),
        rows,
        mean_fractional_objective: mean(&fractional_objectives),
        fractional_objectives,
        mean_rounded_objective: mean(&rounded_objectives),
        rounded_objectives,
        rounded_sets: rounded.into_iter().map(|r| r.set).collect(),
        greedy_value: greedy.value,
        greedy_set: greedy.set,
        feasible: traj.all_feasible(),
        lemma_checks: check_round_stats(&traj, &bounds),
    })
}

/// Runs every (topology, T, k) cell of the configuration; cells run in
/// parallel and are reported in configuration order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let ratings = load_data(&cfg.data)?;
    if let Some(k) = cfg.ks.iter().find(|&&k| k > ratings.movies()) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the {} movies",
            ratings.movies()
        )));
    }
    let inst = Instance::new(ratings, cfg.nodes, cfg.seed)?;

    let networks = cfg
        .topologies
        .iter()
        .map(|spec| {
            let g = build_topology(spec, cfg.nodes, cfg.seed.wrapping_add(1))?;
            let weights = metropolis_weights(&g);
            let spectral = validate_weights(&weights, &g)?;
            Ok(Network {
                label: spec.label().to_string(),
                weights,
                summary: TopologySummary {
                    label: spec.label().to_string(),
                    edges: g.edges().len(),
                    average_degree: g.average_degree(),
                    attempts: g.attempts(),
                    spectral,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for net in &networks {
        for &t in &cfg.rounds {
            for &k in &cfg.ks {
                jobs.push((net, t, k));
            }
        }
    }
    let cells = jobs
        .into_par_iter()
        .map(|(net, t, k)| run_cell(cfg, &inst, net, t, k))
        .collect::<Result<Vec<_>>>()?;

    Ok(RunRecord {
        config: cfg.clone(),
        instance: InstanceSummary {
            users: inst.ratings.users(),
            movies: inst.ratings.movies(),
            ratings: inst.ratings.nnz(),
            users_per_node: inst.groups.iter().map(Vec::len).collect(),
        },
        topologies: networks.into_iter().map(|n| n.summary).collect(),
        distance_log_base: 10,
        cells,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

pub fn rounds_csv(cell: &CellRecord) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &cell.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.t, r.dist_to_avg, r.mean_obj, r.lemma1_slack, r.lemma2_slack
        ));
    }
    out
}

/// Writes `runrecord.json`, `<cell key>/rounds.csv` per cell and, in the
/// figure modes, the matching SVG plot.
pub fn write_outputs(record: &RunRecord, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("runrecord.json"),
        serde_json::to_string_pretty(record)?,
    )?;
    for cell in &record.cells {
        let cell_dir = dir.join(&cell.key);
        std::fs::create_dir_all(&cell_dir)?;
        std::fs::write(cell_dir.join("rounds.csv"), rounds_csv(cell))?;
    }
    match record.config.mode {
        Mode::Single => {}
        Mode::Figure1 => std::fs::write(dir.join("figure1.svg"), plot::distance_plot(record))?,
        Mode::Figure2 => std::fs::write(dir.join("figure2.svg"), plot::objective_plot(record))?,
    }
    Ok(())
}
