//! Synchronous message-passing simulator for decentralized continuous greedy.
//!
//! State index `t` means "after `t` rounds". Round `t` reads the committed
//! state `t - 1` of every node and writes state `t`:
//!
//! ```text
//! d_i(t) = (1 - a) * sum_j w_ij d_j(t-1) + a * grad_i(x_i(t-1))
//! v_i(t) = lmo(d_i(t))
//! x_i(t) = sum_j w_ij x_j(t-1) + v_i(t) / T
//! ```
//!
//! In discrete mode the gradient term is replaced by the running average
//! `g_i(t) = (1 - phi) g_i(t-1) + phi * estimate_i(x_i(t-1))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::multilinear::{multilinear_gradient, stochastic_gradient_with, stream_rng};
use crate::polytope::{self, FeasibleBody};
use crate::setfn::{FacilityLocation, SetFunction};
use crate::topology::{spectral_beta, Mixing, WeightMatrix};
use crate::{Error, Result, Scalar};

/// Cap on the number of stored snapshots under the default stride.
pub const DEFAULT_SNAPSHOTS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunParameters {
    pub rounds: usize,
    /// Defaults to `rounds^(-1/2)`.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Defaults to `rounds^(-2/3)`.
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to `max(1, rounds / 200)`.
    #[serde(default)]
    pub stride: Option<usize>,
}

fn default_batch() -> usize {
    1
}

impl RunParameters {
    pub fn new(rounds: usize) -> Self {
        RunParameters {
            rounds,
            alpha: None,
            phi: None,
            batch: 1,
            seed: 0,
            stride: None,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = Some(stride);
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
            .unwrap_or_else(|| (self.rounds as f64).sqrt().recip())
    }

    pub fn phi(&self) -> f64 {
        self.phi
            .unwrap_or_else(|| (self.rounds as f64).powf(-2.0 / 3.0))
    }

    pub fn snapshot_stride(&self) -> usize {
        self.stride
            .unwrap_or_else(|| (self.rounds / DEFAULT_SNAPSHOTS).max(1))
    }

    /// Copy with every default filled in.
    pub fn resolved(&self) -> Self {
        RunParameters {
            alpha: Some(self.alpha()),
            phi: Some(self.phi()),
            stride: Some(self.snapshot_stride()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [0, 1]"
                )))
            }
        };
        if self.rounds == 0 {
            return Err(Error::InvalidParameter(
                "at least one round is required".into(),
            ));
        }
        unit("alpha", self.alpha())?;
        unit("phi", self.phi())?;
        if self.batch == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be at least 1".into(),
            ));
        }
        if self.snapshot_stride() == 0 {
            return Err(Error::InvalidParameter(
                "snapshot stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeState<S = f64> {
    pub x: Vec<S>,
    pub d: Vec<S>,
    /// Running gradient average; discrete mode only.
    pub g: Option<Vec<S>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot<S = f64> {
    pub round: usize,
    pub nodes: Vec<NodeState<S>>,
}

/// Consensus statistics recorded after every round, whatever the stride.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    /// `|avg x(t) - avg x(t-1)|`
    pub average_step: f64,
    /// `(sum_i |x_i - avg x|^2)^(1/2)`
    pub x_spread: f64,
    /// `(1/n) sum_i |x_i - avg x|`
    pub distance_to_average: f64,
    /// `(sum_i |d_i - avg d|^2)^(1/2)`
    pub d_spread: f64,
    /// `(1/n) sum_i |d_i - avg d|`
    pub d_mean_deviation: f64,
    /// Every node inside the body at the run's membership tolerance.
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<S = f64> {
    /// Parameters with defaults resolved.
    pub params: RunParameters,
    pub body: FeasibleBody,
    pub beta: f64,
    pub discrete: bool,
    /// Rounds `0, stride, 2 stride, ...` plus the final round.
    pub snapshots: Vec<Snapshot<S>>,
    pub round_stats: Vec<RoundStats>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn nodes(&self) -> usize {
        self.final_state().len()
    }

    pub fn final_state(&self) -> &[NodeState<S>] {
        &self
            .snapshots
            .last()
            .expect("trajectory has a final snapshot")
            .nodes
    }

    pub fn final_points(&self) -> Vec<Vec<S>> {
        self.final_state().iter().map(|s| s.x.clone()).collect()
    }

    pub fn all_feasible(&self) -> bool {
        self.round_stats.iter().all(|r| r.feasible)
    }

    pub fn is_full(&self) -> bool {
        self.params.snapshot_stride() == 1
    }
}

/// `x -> grad F_i(x)` for one node.
pub trait GradientOracle<S = f64>: Sync {
    fn gradient(&self, x: &[S]) -> Result<Vec<S>>;
}

impl<S, F> GradientOracle<S> for F
where
    F: Fn(&[S]) -> Vec<S> + Sync,
{
    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        Ok(self(x))
    }
}

/// Exact multilinear gradient of a facility-location objective in any field.
#[derive(Clone, Copy, Debug)]
pub struct FacilityGradient<'a>(pub &'a FacilityLocation);

impl<S: Scalar> GradientOracle<S> for FacilityGradient<'_> {
    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        Ok(crate::multilinear::facility_multilinear(self.0, x).1)
    }
}

/// Exact multilinear gradient of any set function: the closed form when one
/// exists, enumeration otherwise.
#[derive(Clone, Copy, Debug)]
pub struct MultilinearGradient<F>(pub F);

impl<F: SetFunction> GradientOracle<f64> for MultilinearGradient<F> {
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        multilinear_gradient(&self.0, x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Unbiased single-set estimator averaged over the batch size.
    Sampled,
    /// Exact multilinear gradient.
    Exact,
}

fn check_mixing<S: Scalar>(mixing: &Mixing<S>) -> Result<f64> {
    let report = spectral_beta(&mixing.to_weights())?;
    if !report.assumption1_holds {
        return Err(Error::InvalidWeights(format!(
            "mixing matrix violates the consensus conditions (symmetric {}, row-stochastic {}, nonnegative {}, lambda_2 {})",
            report.symmetric, report.row_stochastic, report.nonnegative, report.lambda_2
        )));
    }
    Ok(report.beta)
}

fn mean_of<S: Scalar>(vs: &[Vec<S>]) -> Vec<f64> {
    let n = vs.len() as f64;
    let mut acc = vec![0.0; vs.first().map_or(0, |v| v.len())];
    for v in vs {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x.to_f64();
        }
    }
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

fn dist<S: Scalar>(a: &[S], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.to_f64() - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Per-node distances to the average, as `f64`.
pub fn deviations<S: Scalar>(vs: &[Vec<S>]) -> Vec<f64> {
    let avg = mean_of(vs);
    vs.iter().map(|v| dist(v, &avg)).collect()
}

/// Average of the node vectors, as `f64`.
pub fn average<S: Scalar>(vs: &[Vec<S>]) -> Vec<f64> {
    mean_of(vs)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Core<'a, S> {
    mixing: &'a Mixing<S>,
    body: &'a FeasibleBody,
    params: RunParameters,
    phi: Option<S>,
    tol: S,
    beta: f64,
}

impl<S: Scalar> Core<'_, S> {
    fn run<G>(&self, gradient: G) -> Result<Trajectory<S>>
    where
        G: Fn(usize, usize, &[S]) -> Result<Vec<S>> + Sync,
    {
        let n = self.mixing.n();
        let p = self.body.dim();
        let rounds = self.params.rounds;
        let stride = self.params.snapshot_stride();
        let alpha = S::from_f64(self.params.alpha());
        let keep = S::one() - alpha.clone();
        let step = S::from_ratio(1, rounds as i64);
        let one = S::one();

        let mut state: Vec<NodeState<S>> = (0..n)
            .map(|_| NodeState {
                x: vec![S::zero(); p],
                d: vec![S::zero(); p],
                g: self.phi.as_ref().map(|_| vec![S::zero(); p]),
            })
            .collect();
        let mut snapshots = vec![Snapshot {
            round: 0,
            nodes: state.clone(),
        }];
        let mut round_stats = Vec::with_capacity(rounds);
        let mut prev_avg = vec![0.0; p];

        for t in 1..=rounds {
            let xs: Vec<&[S]> = state.iter().map(|s| s.x.as_slice()).collect();
            let ds: Vec<&[S]> = state.iter().map(|s| s.d.as_slice()).collect();
            let next = (0..n)
                .into_par_iter()
                .map(|i| {
                    let grad = gradient(i, t, &state[i].x)?;
                    if grad.len() != p {
                        return Err(Error::DimensionMismatch {
                            expected: p,
                            found: grad.len(),
                        });
                    }
                    if grad.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite("gradient oracle"));
                    }
                    let (term, g) = match (&self.phi, &state[i].g) {
                        (Some(phi), Some(prev)) => {
                            let g: Vec<S> = if *phi == one {
                                grad
                            } else {
                                let rest = one.clone() - phi.clone();
                                prev.iter()
                                    .zip(grad)
                                    .map(|(a, b)| rest.clone() * a.clone() + phi.clone() * b)
                                    .collect()
                            };
                            (g.clone(), Some(g))
                        }
                        _ => (grad, None),
                    };
                    let d: Vec<S> = self
                        .mixing
                        .mix(i, &ds)
                        .into_iter()
                        .zip(term)
                        .map(|(m, a)| keep.clone() * m + alpha.clone() * a)
                        .collect();
                    let v = polytope::lmo(self.body, &d)?;
                    let x = self
                        .mixing
                        .mix(i, &xs)
                        .into_iter()
                        .zip(v)
                        .map(|(m, vj)| m + step.clone() * vj)
                        .collect();
                    Ok(NodeState { x, d, g })
                })
                .collect::<Result<Vec<_>>>()?;
            drop(xs);
            drop(ds);
            state = next;

            let x_now: Vec<Vec<S>> = state.iter().map(|s| s.x.clone()).collect();
            let d_now: Vec<Vec<S>> = state.iter().map(|s| s.d.clone()).collect();
            let avg = mean_of(&x_now);
            let x_dev = deviations(&x_now);
            let d_dev = deviations(&d_now);
            let step_vec: Vec<f64> = avg.iter().zip(&prev_avg).map(|(a, b)| a - b).collect();
            let feasible = x_now
                .iter()
                .map(|x| polytope::contains(self.body, x, self.tol.clone()))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .all(|ok| ok);
            round_stats.push(RoundStats {
                round: t,
                average_step: norm(&step_vec),
                x_spread: norm(&x_dev),
                distance_to_average: x_dev.iter().sum::<f64>() / n as f64,
                d_spread: norm(&d_dev),
                d_mean_deviation: d_dev.iter().sum::<f64>() / n as f64,
                feasible,
            });
            prev_avg = avg;
            if t % stride == 0 || t == rounds {
                snapshots.push(Snapshot {
                    round: t,
                    nodes: state.clone(),
                });
            }
        }

        Ok(Trajectory {
            params: self.params.resolved(),
            body: self.body.clone(),
            beta: self.beta,
            discrete: self.phi.is_some(),
            snapshots,
            round_stats,
        })
    }
}

fn check_setup<S: Scalar>(mixing: &Mixing<S>, nodes: usize, params: &RunParameters) -> Result<f64> {
    params.validate()?;
    if nodes != mixing.n() {
        return Err(Error::DimensionMismatch {
            expected: mixing.n(),
            found: nodes,
        });
    }
    check_mixing(mixing)
}

/// Continuous-mode run over any scalar field. `tol` is the membership
/// tolerance recorded in the round statistics.
pub fn run_continuous_in<S, O>(
    oracles: &[O],
    body: &FeasibleBody,
    mixing: &Mixing<S>,
    params: &RunParameters,
    tol: S,
) -> Result<Trajectory<S>>
where
    S: Scalar,
    O: GradientOracle<S>,
{
    let beta = check_setup(mixing, oracles.len(), params)?;
    let core = Core {
        mixing,
        body,
        params: params.clone(),
        phi: None,
        tol,
        beta,
    };
    core.run(|i, _, x| oracles[i].gradient(x))
}

/// Continuous decentralized greedy with one exact gradient oracle per node.
pub fn run_continuous_dcg<O: GradientOracle<f64>>(
    oracles: &[O],
    body: &FeasibleBody,
    w: &WeightMatrix,
    params: &RunParameters,
) -> Result<Trajectory> {
    run_continuous_in(
        oracles,
        body,
        &Mixing::from_weights(w),
        params,
        polytope::DEFAULT_TOL,
    )
}

/// Discrete decentralized greedy over one set function per node.
pub fn run_discrete_dcg<F: SetFunction>(
    functions: &[F],
    body: &FeasibleBody,
    w: &WeightMatrix,
    params: &RunParameters,
    mode: GradientMode,
) -> Result<Trajectory> {
    let mixing = Mixing::from_weights(w);
    let beta = check_setup(&mixing, functions.len(), params)?;
    if let Some(f) = functions.iter().find(|f| f.ground_size() != body.dim()) {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            found: f.ground_size(),
        });
    }
    let core = Core {
        mixing: &mixing,
        body,
        params: params.clone(),
        phi: Some(params.phi()),
        tol: polytope::DEFAULT_TOL,
        beta,
    };
    let (seed, batch) = (params.seed, params.batch);
    core.run(|i, t, x| match mode {
        GradientMode::Exact => multilinear_gradient(&functions[i], x),
        GradientMode::Sampled => {
            stochastic_gradient_with(&functions[i], x, batch, &mut stream_rng(seed, i, t))
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMetrics {
    pub round: usize,
    /// `(1/n) sum_i |x_i - avg x|`
    pub distance_to_average: f64,
    /// Per-node objective values, empty without a value oracle.
    pub objectives: Vec<f64>,
    pub mean_objective: Option<f64>,
    /// `(1/n) sum_i |d_i - avg d|`
    pub d_residual: f64,
}

/// Consensus and objective metrics for every stored snapshot. `value(i, x)`
/// evaluates node `i`'s objective at `x`.
pub fn snapshot_metrics(
    traj: &Trajectory,
    value: Option<&(dyn Fn(usize, &[f64]) -> f64 + Sync)>,
) -> Result<Vec<SnapshotMetrics>> {
    if traj.snapshots.is_empty() {
        return Err(Error::Empty("trajectory has no snapshots".into()));
    }
    Ok(traj
        .snapshots
        .iter()
        .map(|snap| {
            let xs: Vec<Vec<f64>> = snap.nodes.iter().map(|s| s.x.clone()).collect();
            let ds: Vec<Vec<f64>> = snap.nodes.iter().map(|s| s.d.clone()).collect();
            let n = xs.len() as f64;
            let objectives: Vec<f64> = match value {
                Some(f) => xs.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
                None => Vec::new(),
            };
            let mean_objective = value.map(|_| objectives.iter().sum::<f64>() / n);
            SnapshotMetrics {
                round: snap.round,
                distance_to_average: deviations(&xs).iter().sum::<f64>() / n,
                objectives,
                mean_objective,
                d_residual: deviations(&ds).iter().sum::<f64>() / n,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::{facility_location, RatingsMatrix};
    use crate::topology::{build_graph, metropolis_weights, GraphKind};

    fn weights(kind: GraphKind, n: usize) -> WeightMatrix {
        metropolis_weights(&build_graph(&kind, n, 3).unwrap())
    }

    fn instance(users: usize, p: usize, seed: u64) -> RatingsMatrix {
        let mut triples = Vec::new();
        let mut s = seed;
        for u in 0..users {
            for m in 0..p {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let r = (s >> 33) % 9;
                if r < 5 {
                    triples.push((u, m, r as f64 + 1.0));
                }
            }
        }
        RatingsMatrix::from_triples(users, p, triples).unwrap()
    }

    fn linear(c: Vec<f64>) -> impl Fn(&[f64]) -> Vec<f64> + Sync {
        move |_x: &[f64]| c.clone()
    }

    #[test]
    fn single_node_linear_objective() {
        let body = FeasibleBody::uniform(2, 1);
        let traj = run_continuous_dcg(
            &[linear(vec![1.0, 2.0])],
            &body,
            &WeightMatrix::identity(1),
            &RunParameters::new(10),
        )
        .unwrap();
        let x = &traj.final_state()[0].x;
        assert!(x[0] == 0.0 && (x[1] - 1.0).abs() < 1e-12);
        assert!(traj.all_feasible());
        assert!(traj
            .round_stats
            .iter()
            .all(|r| r.distance_to_average == 0.0));
    }

    #[test]
    fn identical_oracles_give_identical_nodes() {
        let traj = run_continuous_dcg(
            &[linear(vec![1.0, 3.0, 2.0]), linear(vec![1.0, 3.0, 2.0])],
            &FeasibleBody::uniform(3, 2),
            &weights(GraphKind::Complete, 2),
            &RunParameters::new(20).with_stride(1),
        )
        .unwrap();
        for snap in &traj.snapshots {
            assert_eq!(snap.nodes[0], snap.nodes[1]);
        }
    }

    #[test]
    fn snapshot_stride_policy() {
        let body = FeasibleBody::uniform(2, 1);
        let w = WeightMatrix::identity(1);
        let oracle = [linear(vec![1.0, 2.0])];
        let traj = run_continuous_dcg(&oracle, &body, &w, &RunParameters::new(1000)).unwrap();
        assert_eq!(traj.params.snapshot_stride(), 5);
        assert_eq!(traj.snapshots.len(), 201);
        assert_eq!(traj.snapshots.last().unwrap().round, 1000);
        assert_eq!(traj.round_stats.len(), 1000);
        let traj =
            run_continuous_dcg(&oracle, &body, &w, &RunParameters::new(10).with_stride(4)).unwrap();
        let rounds: Vec<usize> = traj.snapshots.iter().map(|s| s.round).collect();
        assert_eq!(rounds, vec![0, 4, 8, 10]);
    }

    #[test]
    fn first_sampled_average_is_deterministic() {
        let r = instance(6, 5, 1);
        let fs: Vec<_> = (0..2)
            .map(|i| facility_location(&r, &[i * 3, i * 3 + 1, i * 3 + 2]).unwrap())
            .collect();
        let params = RunParameters::new(30).with_stride(1).with_seed(9);
        let traj = run_discrete_dcg(
            &fs,
            &FeasibleBody::uniform(5, 2),
            &weights(GraphKind::Line, 2),
            &params,
            GradientMode::Sampled,
        )
        .unwrap();
        let phi = params.phi();
        for (i, f) in fs.iter().enumerate() {
            let g = traj.snapshots[1].nodes[i].g.as_ref().unwrap();
            let empty = crate::setfn::Subset::empty(5);
            for j in 0..5 {
                assert_eq!(g[j], phi * f.gain(&empty, j));
            }
        }
    }

    #[test]
    fn discrete_exact_with_unit_phi_matches_continuous() {
        let r = instance(12, 6, 2);
        let fs: Vec<_> = (0..4)
            .map(|i| facility_location(&r, &[3 * i, 3 * i + 1, 3 * i + 2]).unwrap())
            .collect();
        let body = FeasibleBody::uniform(6, 2);
        let w = weights(GraphKind::ErdosRenyi { edge_prob: 0.6 }, 4);
        let params = RunParameters::new(40).with_stride(1).with_phi(1.0);
        let disc = run_discrete_dcg(&fs, &body, &w, &params, GradientMode::Exact).unwrap();
        let oracles: Vec<_> = fs.iter().map(FacilityGradient).collect();
        let cont = run_continuous_dcg(&oracles, &body, &w, &params).unwrap();
        for (a, b) in disc.snapshots.iter().zip(&cont.snapshots) {
            for (na, nb) in a.nodes.iter().zip(&b.nodes) {
                assert_eq!(na.x, nb.x);
                assert_eq!(na.d, nb.d);
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let r = instance(30, 8, 3);
        let fs: Vec<_> = (0..5)
            .map(|i| facility_location(&r, &(6 * i..6 * i + 6).collect::<Vec<_>>()).unwrap())
            .collect();
        let body = FeasibleBody::uniform(8, 3);
        let w = weights(GraphKind::Line, 5);
        let params = RunParameters::new(25)
            .with_stride(1)
            .with_seed(4)
            .with_batch(3);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    run_discrete_dcg(&fs, &body, &w, &params, GradientMode::Sampled).unwrap()
                })
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let body = FeasibleBody::uniform(2, 1);
        let oracle = [linear(vec![1.0, 2.0]), linear(vec![1.0, 2.0])];
        let bad = WeightMatrix::from_rows(vec![vec![0.7, 0.2], vec![0.3, 0.7]]).unwrap();
        assert!(run_continuous_dcg(&oracle, &body, &bad, &RunParameters::new(5)).is_err());
        let disconnected = WeightMatrix::identity(2);
        assert!(matches!(
            run_continuous_dcg(&oracle, &body, &disconnected, &RunParameters::new(5)),
            Err(Error::InvalidWeights(_))
        ));
        let w = weights(GraphKind::Complete, 2);
        let nan = [linear(vec![f64::NAN, 1.0]), linear(vec![1.0, 1.0])];
        assert!(matches!(
            run_continuous_dcg(&nan, &body, &w, &RunParameters::new(5)),
            Err(Error::NonFinite(_))
        ));
        let short = [linear(vec![1.0]), linear(vec![1.0])];
        assert!(matches!(
            run_continuous_dcg(&short, &body, &w, &RunParameters::new(5)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(run_continuous_dcg(&oracle[..1], &body, &w, &RunParameters::new(5)).is_err());
        assert!(run_continuous_dcg(&oracle, &body, &w, &RunParameters::new(0)).is_err());
        assert!(
            run_continuous_dcg(&oracle, &body, &w, &RunParameters::new(5).with_alpha(1.5)).is_err()
        );
    }

    #[test]
    fn metrics_of_identical_states() {
        let traj = run_continuous_dcg(
            &[linear(vec![1.0, 2.0]), linear(vec![1.0, 2.0])],
            &FeasibleBody::uniform(2, 1),
            &weights(GraphKind::Complete, 2),
            &RunParameters::new(8).with_stride(1),
        )
        .unwrap();
        let value = |_: usize, x: &[f64]| x[0] + 2.0 * x[1];
        let m = snapshot_metrics(&traj, Some(&value)).unwrap();
        assert_eq!(m.len(), 9);
        assert!(m.iter().all(|r| r.distance_to_average == 0.0));
        assert!((m[8].mean_objective.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn defaults() {
        let p = RunParameters::new(1000);
        assert!((p.alpha() - 1000f64.sqrt().recip()).abs() < 1e-15);
        assert!((p.phi() - 0.01).abs() < 1e-12);
        assert_eq!(RunParameters::new(50).snapshot_stride(), 1);
    }
}
