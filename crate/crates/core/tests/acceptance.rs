//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dcg::baselines::{brute_force_optimum, continuous_greedy_path};
use dcg::engine::{
    run_continuous_dcg, run_continuous_in, run_discrete_dcg, FacilityGradient, GradientMode,
    GradientOracle, RunParameters,
};
use dcg::harness::{run_experiment, DataSource, ExperimentConfig, RunRecord, TopologySpec};
use dcg::metrics::{check_lemma_bounds, theory_constants};
use dcg::multilinear::{
    exact_gradient, exact_multilinear, facility_closed_form, stochastic_gradient_with,
    FractionalPoint,
};
use dcg::polytope::FeasibleBody;
use dcg::rounding::pipage_round_exact;
use dcg::setfn::{MeanOf, SetFunction};
use dcg::topology::{
    build_graph, er_probability_for_degree, metropolis_mixing, metropolis_weights,
    validate_weights, GraphKind,
};

const GREEDY_RATIO: f64 = 1.0 - 0.367_879_441_171_442_3; // 1 - 1/e

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Feasibility flags of every floating-point run, for the membership criterion.
#[derive(Default)]
struct Ledger {
    runs: usize,
    infeasible: usize,
}

impl Ledger {
    fn note(&mut self, feasible: bool) {
        self.runs += 1;
        self.infeasible += usize::from(!feasible);
    }

    fn note_record(&mut self, record: &RunRecord) {
        for cell in &record.cells {
            self.note(cell.feasible);
        }
    }
}

fn synthetic(users: usize, movies: usize, density: f64, seed: u64) -> DataSource {
    DataSource::Synthetic {
        users,
        movies,
        density,
        min_rating: 1,
        max_rating: 5,
        seed,
    }
}

fn approximation_at_desk_scale(ledger: &mut Ledger) -> Outcome {
    let cfg = ExperimentConfig {
        data: synthetic(200, 30, 0.1, 11),
        nodes: 10,
        topologies: vec![TopologySpec::ErdosRenyi { avg_degree: 5.0 }],
        ks: vec![5],
        rounds: vec![200],
        seed: 3,
        ..ExperimentConfig::default()
    };
    let record = run_experiment(&cfg).unwrap();
    ledger.note_record(&record);
    let cell = &record.cells[0];
    let target = 0.95 * GREEDY_RATIO * cell.greedy_value;
    let worst = cell
        .fractional_objectives
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    outcome(
        worst >= target,
        format!(
            "min node F(x_j) = {worst:.4}, threshold {target:.4} (greedy {:.4}, ratio {:.4})",
            cell.greedy_value,
            worst / cell.greedy_value
        ),
    )
}

fn exact_optimum_check(ledger: &mut Ledger) -> Outcome {
    let bound = GREEDY_RATIO - 0.05;
    let body = FeasibleBody::uniform(10, 3);
    let mut good = 0;
    let mut worst = f64::INFINITY;
    for seed in 0..20u64 {
        let r = common::ratings(20, 10, 0.3, 100 + seed);
        let locals = common::split(&r, 4);
        let global = MeanOf::new(locals.clone()).unwrap();
        let g = build_graph(
            &GraphKind::ErdosRenyi {
                edge_prob: er_probability_for_degree(4, 2.0),
            },
            4,
            seed,
        )
        .unwrap();
        let w = metropolis_weights(&g);
        let params = RunParameters::new(500).with_seed(seed);
        let traj = run_discrete_dcg(&locals, &body, &w, &params, GradientMode::Exact).unwrap();
        ledger.note(traj.all_feasible());
        let (_, opt) = brute_force_optimum(&global, &body).unwrap();
        let value = traj
            .final_points()
            .iter()
            .map(|x| {
                pipage_round_exact(&FractionalPoint::clamped(x), &body, &global)
                    .unwrap()
                    .value
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.min(value / opt);
        if value >= bound * opt {
            good += 1;
        }
    }
    outcome(
        good >= 18,
        format!("{good}/20 seeds with min-node f(S) >= {bound:.4} OPT; worst ratio {worst:.4}"),
    )
}

fn bound_suite(ledger: &mut Ledger) -> Outcome {
    let mut runs = 0;
    let mut violations = 0;
    let mut worst = (0.0f64, String::new());
    for &n in &[1usize, 5, 20] {
        for (label, kind) in [
            ("line", GraphKind::Line),
            (
                "er",
                GraphKind::ErdosRenyi {
                    edge_prob: er_probability_for_degree(n, 5.0).min(1.0),
                },
            ),
            ("complete", GraphKind::Complete),
        ] {
            for (rounds, k) in [(50usize, 3usize), (200, 5)] {
                let r = common::ratings(10 * n, 20, 0.2, (n * 31 + rounds) as u64);
                let locals = common::split(&r, n);
                let body = FeasibleBody::uniform(20, k);
                let g = build_graph(&kind, n, 5).unwrap();
                let w = metropolis_weights(&g);
                let spectral = validate_weights(&w, &g).unwrap();
                let oracles: Vec<_> = locals.iter().map(FacilityGradient).collect();
                let params = RunParameters::new(rounds).with_stride(1);
                let traj = run_continuous_dcg(&oracles, &body, &w, &params).unwrap();
                ledger.note(traj.all_feasible());
                let bounds = theory_constants(&locals, &body, &spectral);
                let dyn_oracles: Vec<&dyn GradientOracle<f64>> = oracles
                    .iter()
                    .map(|o| o as &dyn GradientOracle<f64>)
                    .collect();
                let report = check_lemma_bounds(&traj, &bounds, Some(&dyn_oracles)).unwrap();
                runs += 1;
                violations += report.violations();
                for c in &report.checks {
                    if c.max_ratio > worst.0 {
                        worst = (
                            c.max_ratio,
                            format!("{} (n={n}, {label}, T={rounds})", c.name),
                        );
                    }
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{runs} trajectories, {violations} violations; largest lhs/rhs {:.4} in {}",
            worst.0, worst.1
        ),
    )
}

fn rational_replay() -> (usize, usize) {
    let mut runs = 0;
    let mut infeasible = 0;
    for (n, kind, body) in [
        (3usize, GraphKind::Line, FeasibleBody::uniform(6, 2)),
        (4, GraphKind::Complete, FeasibleBody::uniform(5, 3)),
        (
            4,
            GraphKind::Line,
            FeasibleBody::partition(6, vec![vec![0, 1, 2], vec![3, 4, 5]], vec![1, 2]).unwrap(),
        ),
    ] {
        let r = common::ratings(3 * n, body.dim(), 0.5, n as u64 + 40);
        let locals = common::split(&r, n);
        let g = build_graph(&kind, n, 0).unwrap();
        let mixing = metropolis_mixing::<BigRational>(&g);
        let oracles: Vec<_> = locals.iter().map(FacilityGradient).collect();
        let params = RunParameters::new(16).with_stride(1);
        let zero = BigRational::from_integer(0.into());
        let traj = run_continuous_in(&oracles, &body, &mixing, &params, zero).unwrap();
        runs += traj.round_stats.len();
        infeasible += traj.round_stats.iter().filter(|s| !s.feasible).count();
    }
    (runs, infeasible)
}

fn membership(ledger: &Ledger) -> Outcome {
    let (rounds, infeasible) = rational_replay();
    outcome(
        ledger.infeasible == 0 && infeasible == 0,
        format!(
            "{} floating-point runs, {} with an iterate outside the body at 1e-9; exact replay: {infeasible} of {rounds} rounds outside at tolerance 0",
            ledger.runs, ledger.infeasible
        ),
    )
}

fn estimator_unbiasedness() -> Outcome {
    let r = common::ratings(30, 10, 0.4, 5);
    let f = common::whole(&r);
    let m_f = f.max_singleton();
    let draws = 100_000usize;
    let tol = 4.0 * m_f / (draws as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let exact = exact_gradient(&f, &FractionalPoint::new(x.clone()).unwrap()).unwrap();
        let mut acc = vec![0.0; 10];
        for _ in 0..draws {
            for (a, v) in acc
                .iter_mut()
                .zip(stochastic_gradient_with(&f, &x, 1, &mut rng).unwrap())
            {
                *a += v;
            }
        }
        for (a, e) in acc.iter().zip(&exact) {
            worst = worst.max((a / draws as f64 - e).abs());
        }
    }
    outcome(
        worst <= tol,
        format!("largest coordinate error {worst:.5} vs 4 m_f / sqrt(N) = {tol:.5}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let p = rng.random_range(1..=12);
        let users = rng.random_range(1..=6);
        let r = common::ratings(users, p, rng.random_range(0.2..1.0), case);
        if r.nnz() == 0 {
            continue;
        }
        let f = common::whole(&r);
        let x = FractionalPoint::new((0..p).map(|_| rng.random::<f64>()).collect()).unwrap();
        let (value, grad) = facility_closed_form(&f, &x).unwrap();
        worst = worst.max((value - exact_multilinear(&f, &x).unwrap()).abs());
        for (a, b) in grad.iter().zip(exact_gradient(&f, &x).unwrap()) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("largest difference {worst:.2e} over 100 pairs"),
    )
}

fn figure1(ledger: &mut Ledger) -> Outcome {
    let record = run_experiment(&ExperimentConfig::figure1()).unwrap();
    ledger.note_record(&record);
    let rounds = [10usize, 50, 200, 1000];
    let dist = |topo: &str, t: usize| record.cell(topo, t, 5).unwrap().final_distance_to_average;
    let ordered = rounds
        .iter()
        .all(|&t| dist("complete", t) <= dist("er", t) && dist("er", t) <= dist("line", t));
    let decreasing = ["line", "er", "complete"].iter().all(|topo| {
        rounds
            .windows(2)
            .all(|w| dist(topo, w[1]) < dist(topo, w[0]))
    });
    let table: Vec<String> = ["line", "er", "complete"]
        .iter()
        .map(|topo| {
            let vals: Vec<String> = rounds
                .iter()
                .map(|&t| format!("{:.2e}", dist(topo, t)))
                .collect();
            format!("{topo} [{}]", vals.join(", "))
        })
        .collect();
    outcome(
        ordered && decreasing,
        format!(
            "ordering {ordered}, decreasing {decreasing}; {}",
            table.join("; ")
        ),
    )
}

fn figure2(ledger: &mut Ledger) -> Outcome {
    let record = run_experiment(&ExperimentConfig::figure2()).unwrap();
    ledger.note_record(&record);
    let cell = |topo: &str, t: usize, k: usize| record.cell(topo, t, k).unwrap();
    let ks = 1..=8usize;
    let mut close = true;
    let mut worst = f64::INFINITY;
    for topo in ["er", "complete"] {
        for k in ks.clone() {
            let c = cell(topo, 1000, k);
            let ratio = c.mean_rounded_objective / c.greedy_value;
            worst = worst.min(ratio);
            close &= ratio >= 0.95;
        }
    }
    let not_below: Vec<usize> = ks
        .clone()
        .filter(|&k| {
            cell("line", 50, k).mean_rounded_objective >= cell("er", 50, k).mean_rounded_objective
        })
        .collect();
    let frac_worst = ["er", "complete"]
        .iter()
        .flat_map(|topo| ks.clone().map(move |k| (topo, k)))
        .map(|(topo, k)| {
            let c = cell(topo, 1000, k);
            c.mean_fractional_objective / c.greedy_value
        })
        .fold(f64::INFINITY, f64::min);
    let frac_not_below: Vec<usize> = ks
        .clone()
        .filter(|&k| {
            cell("line", 50, k).mean_fractional_objective
                >= cell("er", 50, k).mean_fractional_objective
        })
        .collect();
    outcome(
        close && not_below.is_empty(),
        format!(
            "rounded objective: worst ER/complete ratio to greedy at T=1000 {worst:.4}, k where line is not below ER at T=50 {not_below:?}; \
             fractional objective for reference: worst ratio {frac_worst:.4}, line not below ER at k {frac_not_below:?}"
        ),
    )
}

fn degeneracies() -> Outcome {
    let r = common::ratings(40, 12, 0.3, 9);
    let f = common::whole(&r);
    let body = FeasibleBody::uniform(12, 4);

    let single = RunParameters::new(60).with_stride(1).with_alpha(1.0);
    let traj = run_continuous_dcg(
        &[FacilityGradient(&f)],
        &body,
        &dcg::topology::WeightMatrix::identity(1),
        &single,
    )
    .unwrap();
    let path = continuous_greedy_path(&FacilityGradient(&f), &body, 60).unwrap();
    let single_node = traj.snapshots.iter().zip(&path).all(|(s, x)| {
        s.nodes[0]
            .x
            .iter()
            .map(|v| v.to_bits())
            .eq(x.iter().map(|v| v.to_bits()))
    });

    let locals = common::split(&r, 5);
    let w = metropolis_weights(&build_graph(&GraphKind::Line, 5, 0).unwrap());
    let params = RunParameters::new(80).with_stride(1).with_phi(1.0);
    let oracles: Vec<_> = locals.iter().map(FacilityGradient).collect();
    let cont = run_continuous_dcg(&oracles, &body, &w, &params).unwrap();
    let disc = run_discrete_dcg(&locals, &body, &w, &params, GradientMode::Exact).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let unit_phi = cont.snapshots.iter().zip(&disc.snapshots).all(|(a, b)| {
        a.nodes
            .iter()
            .zip(&b.nodes)
            .all(|(p, q)| bits(&p.x) == bits(&q.x) && bits(&p.d) == bits(&q.d))
    });

    let cfg = ExperimentConfig {
        data: synthetic(120, 25, 0.15, 2),
        nodes: 8,
        rounds: vec![40, 120],
        ks: vec![2, 4],
        algorithm: dcg::harness::Algorithm::Discrete {
            gradient_mode: GradientMode::Sampled,
            batch: 2,
        },
        ..ExperimentConfig::default()
    };
    let json_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap().deterministic_json().unwrap())
    };
    let one = json_with(1);
    let threads = one == json_with(4) && one == json_with(3);

    outcome(
        single_node && unit_phi && threads,
        format!("single node vs centralized {single_node}, unit phi vs continuous {unit_phi}, thread counts {threads}"),
    )
}

fn pipage_losslessness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for case in 0..50u64 {
        let p = rng.random_range(2..=10);
        let r = common::ratings(rng.random_range(2..=8), p, 0.5, 500 + case);
        let f = common::whole(&r);
        let body = if case % 2 == 0 {
            FeasibleBody::uniform(p, rng.random_range(1..=p))
        } else {
            let cut = p / 2;
            FeasibleBody::partition(p, vec![(0..cut).collect(), (cut..p).collect()], vec![1, 2])
                .unwrap()
        };
        let x = FractionalPoint::new(common::random_point(&body, &mut rng)).unwrap();
        let fractional = exact_multilinear(&f, &x).unwrap();
        let out = pipage_round_exact(&x, &body, &f).unwrap();
        let s = dcg::setfn::Subset::from_indices(p, out.set.iter().copied()).unwrap();
        let value = f.eval(&s);
        ok &= body.is_independent(&s) && value >= fractional - 1e-9;
        worst = worst.min(value - fractional);
    }
    outcome(
        ok,
        format!("smallest f(S) - F(x) over 50 points: {worst:.4}"),
    )
}

fn main() -> ExitCode {
    let mut ledger = Ledger::default();
    let mut all = true;
    let mut report = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        all &= o.pass;
        println!(
            "criterion {id:>2} [{}] {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    };
    report(1, "approximation at desk scale", &mut || {
        approximation_at_desk_scale(&mut ledger)
    });
    report(2, "exact optimum check", &mut || {
        exact_optimum_check(&mut ledger)
    });
    report(3, "consensus and tracking bounds", &mut || {
        bound_suite(&mut ledger)
    });
    report(5, "estimator unbiasedness", &mut estimator_unbiasedness);
    report(6, "oracle equivalence", &mut oracle_equivalence);
    report(7, "consensus distance ordering", &mut || {
        figure1(&mut ledger)
    });
    report(8, "objective against k", &mut || figure2(&mut ledger));
    report(9, "degeneracies and determinism", &mut degeneracies);
    report(10, "pipage losslessness", &mut pipage_losslessness);
    report(4, "feasibility of every iterate", &mut || {
        membership(&ledger)
    });
    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria fail");
        ExitCode::FAILURE
    }
}
