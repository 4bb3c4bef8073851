//! Worst-case problem constants and per-round checks of the consensus and
//! gradient-tracking inequalities satisfied by every run.

use serde::{Deserialize, Serialize};

use crate::engine::{average, GradientOracle, RoundStats, Trajectory};
use crate::polytope::{diameter, FeasibleBody};
use crate::setfn::SetFunction;
use crate::topology::SpectralReport;
use crate::{Error, Result};

/// Relative slack allowed for floating-point noise when comparing a
/// left-hand side against its bound.
pub const CHECK_REL_TOL: f64 = 1e-9;
pub const CHECK_ABS_TOL: f64 = 1e-12;

/// Number of individual violations kept in a report.
const MAX_LISTED: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryBounds {
    /// Bound on every local gradient norm.
    pub gradient_bound: f64,
    /// Lipschitz constant of every local gradient.
    pub lipschitz: f64,
    pub diameter: f64,
    /// Bound on the estimator deviation.
    pub sigma: f64,
    /// `(sigma^2 + G^2)^(1/2)`
    pub k: f64,
    pub beta: f64,
    /// `1 + 2 / (1 - beta)^2`
    pub c: f64,
    /// Largest singleton value over all nodes.
    pub max_marginal: f64,
}

impl TheoryBounds {
    pub fn new(gradient_bound: f64, lipschitz: f64, sigma: f64, diameter: f64, beta: f64) -> Self {
        TheoryBounds {
            gradient_bound,
            lipschitz,
            diameter,
            sigma,
            k: sigma.hypot(gradient_bound),
            beta,
            c: 1.0 + 2.0 / (1.0 - beta).powi(2),
            max_marginal: f64::NAN,
        }
    }
}

/// `G = L = sigma = m_f * |V|^(1/2)`, where `m_f` is the largest singleton
/// value among the local objectives.
pub fn theory_constants<F: SetFunction>(
    functions: &[F],
    body: &FeasibleBody,
    spectral: &SpectralReport,
) -> TheoryBounds {
    let m_f = functions
        .iter()
        .map(|f| f.max_singleton())
        .fold(0.0, f64::max);
    let bound = m_f * (body.dim() as f64).sqrt();
    TheoryBounds {
        max_marginal: m_f,
        ..TheoryBounds::new(bound, bound, bound, diameter(body), spectral.beta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub round: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub rounds_checked: usize,
    /// Largest `lhs / rhs` over the run (0 when every bound is infinite).
    pub max_ratio: f64,
    pub worst_round: usize,
    pub violation_count: usize,
    /// The first few violations.
    pub violations: Vec<Violation>,
}

impl LemmaCheck {
    fn new(name: &str) -> Self {
        LemmaCheck {
            name: name.to_string(),
            rounds_checked: 0,
            max_ratio: 0.0,
            worst_round: 0,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, round: usize, lhs: f64, rhs: f64) {
        self.rounds_checked += 1;
        let ratio = slack_ratio(lhs, rhs);
        if ratio > self.max_ratio {
            self.max_ratio = ratio;
            self.worst_round = round;
        }
        if !(lhs <= rhs * (1.0 + CHECK_REL_TOL) + CHECK_ABS_TOL) {
            self.violation_count += 1;
            if self.violations.len() < MAX_LISTED {
                self.violations.push(Violation { round, lhs, rhs });
            }
        }
    }

    pub fn holds(&self) -> bool {
        self.violation_count == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub discrete: bool,
    pub bounds: TheoryBounds,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violation_count).sum()
    }

    pub fn holds(&self) -> bool {
        self.violations() == 0
    }

    pub fn check(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Names of the individual checks.
pub const AVERAGE_STEP: &str = "average_step";
pub const X_CONSENSUS: &str = "x_consensus";
pub const D_CONSENSUS: &str = "d_consensus";
pub const D_MEAN_CONSENSUS: &str = "d_mean_consensus";
pub const GRADIENT_TRACKING: &str = "gradient_tracking";

fn slack_ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs.is_infinite() {
        0.0
    } else if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn consensus_bound(beta: f64) -> f64 {
    if beta < 1.0 {
        1.0 - beta
    } else {
        0.0
    }
}

/// Right-hand side of the average-step bound: `D / T`.
pub fn average_step_bound(b: &TheoryBounds, rounds: usize) -> f64 {
    b.diameter / rounds as f64
}

/// Right-hand side of the x-consensus bound: `n^(1/2) D / (T (1 - beta))`.
pub fn x_consensus_bound(b: &TheoryBounds, n: usize, rounds: usize) -> f64 {
    (n as f64).sqrt() * b.diameter / (rounds as f64 * consensus_bound(b.beta))
}

/// `lhs / rhs` of the average-step and x-consensus bounds for one round.
pub fn round_slacks(stats: &RoundStats, b: &TheoryBounds, n: usize, rounds: usize) -> (f64, f64) {
    (
        slack_ratio(stats.average_step, average_step_bound(b, rounds)),
        slack_ratio(stats.x_spread, x_consensus_bound(b, n, rounds)),
    )
}

/// Average-step, x-consensus and d-consensus checks from the per-round
/// statistics alone; these are recorded every round whatever the stride.
/// Discrete runs use the mean d-consensus bound with `K` in place of `G`.
pub fn check_round_stats(traj: &Trajectory, bounds: &TheoryBounds) -> Vec<LemmaCheck> {
    let n = traj.nodes();
    let rounds = traj.params.rounds;
    let alpha = traj.params.alpha();
    let contraction = 1.0 - traj.beta.min(1.0) * (1.0 - alpha);

    let mut step = LemmaCheck::new(AVERAGE_STEP);
    let mut x_cons = LemmaCheck::new(X_CONSENSUS);
    let mut d_cons = LemmaCheck::new(if traj.discrete {
        D_MEAN_CONSENSUS
    } else {
        D_CONSENSUS
    });
    for stats in &traj.round_stats {
        step.record(
            stats.round,
            stats.average_step,
            average_step_bound(bounds, rounds),
        );
        x_cons.record(
            stats.round,
            stats.x_spread,
            x_consensus_bound(bounds, n, rounds),
        );
        if traj.discrete {
            d_cons.record(
                stats.round,
                stats.d_mean_deviation,
                alpha * bounds.k / contraction,
            );
        } else {
            let rhs = alpha * (n as f64).sqrt() * bounds.gradient_bound / contraction;
            d_cons.record(stats.round, stats.d_spread, rhs);
        }
    }
    vec![step, x_cons, d_cons]
}

/// Evaluates every applicable inequality at every round of a full-resolution
/// trajectory: the checks of [`check_round_stats`] and, for continuous runs
/// with the local gradient oracles supplied, gradient tracking
/// `|avg d(t) - (1/n) sum_i grad F_i(avg x(t-1))|`.
pub fn check_lemma_bounds(
    traj: &Trajectory,
    bounds: &TheoryBounds,
    gradients: Option<&[&dyn GradientOracle<f64>]>,
) -> Result<LemmaReport> {
    let stride = traj.params.snapshot_stride();
    if stride != 1 {
        return Err(Error::StridedTrajectory(stride));
    }
    let n = traj.nodes();
    let rounds = traj.params.rounds;
    let alpha = traj.params.alpha();
    let mut checks = check_round_stats(traj, bounds);

    if let (false, Some(oracles)) = (traj.discrete, gradients) {
        if oracles.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: oracles.len(),
            });
        }
        let mut tracking = LemmaCheck::new(GRADIENT_TRACKING);
        let (g, l, d) = (bounds.gradient_bound, bounds.lipschitz, bounds.diameter);
        let t_f = rounds as f64;
        for pair in traj.snapshots.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            let xs: Vec<Vec<f64>> = prev.nodes.iter().map(|s| s.x.clone()).collect();
            let ds: Vec<Vec<f64>> = cur.nodes.iter().map(|s| s.d.clone()).collect();
            let x_bar = average(&xs);
            let mut target = vec![0.0; x_bar.len()];
            for oracle in oracles {
                for (a, v) in target.iter_mut().zip(oracle.gradient(&x_bar)?) {
                    *a += v;
                }
            }
            let lhs = average(&ds)
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b / n as f64).powi(2))
                .sum::<f64>()
                .sqrt();
            let rhs = (1.0 - alpha).powi(cur.round as i32) * g
                + (1.0 - alpha) * l * d / (alpha * t_f)
                + l * d / (t_f * consensus_bound(traj.beta));
            tracking.record(cur.round, lhs, rhs);
        }
        checks.push(tracking);
    }

    Ok(LemmaReport {
        discrete: traj.discrete,
        bounds: bounds.clone(),
        checks,
    })
}
