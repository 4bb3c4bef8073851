//! Centralized reference algorithms.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::engine::GradientOracle;
use crate::polytope::{self, independent_sets, FeasibleBody};
use crate::setfn::{SetFunction, Subset};
use crate::{Error, Result};

/// Largest ground set for [`brute_force_optimum`].
pub const BRUTE_FORCE_LIMIT: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub element: usize,
    pub gain: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyResult {
    /// Elements in the order they were picked.
    pub set: Vec<usize>,
    pub value: f64,
    pub trace: Vec<GreedyStep>,
}

/// Cap bookkeeping: each element's group and each group's remaining room.
struct Room {
    group_of: Vec<usize>,
    left: Vec<usize>,
}

impl Room {
    fn new(body: &FeasibleBody) -> Result<Self> {
        if !body.is_matroid() {
            return Err(Error::Unsupported(
                "greedy requires a matroid constraint".into(),
            ));
        }
        let mut group_of = vec![0; body.dim()];
        let mut left = Vec::new();
        for (g, (members, cap)) in body.cap_groups().into_iter().enumerate() {
            for e in members {
                group_of[e] = g;
            }
            left.push(cap);
        }
        Ok(Room { group_of, left })
    }

    fn fits(&self, e: usize) -> bool {
        self.left[self.group_of[e]] > 0
    }

    fn take(&mut self, e: usize) {
        self.left[self.group_of[e]] -= 1;
    }
}

fn check_dim(f: &dyn SetFunction, body: &FeasibleBody) -> Result<()> {
    if f.ground_size() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            found: f.ground_size(),
        });
    }
    Ok(())
}

struct Entry {
    gain: f64,
    element: usize,
    /// Size of the set the gain was computed against.
    stamp: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Max-heap on gain, lowest element first among equal gains.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then(other.element.cmp(&self.element))
    }
}

/// Lazy greedy: repeatedly adds the feasible element of largest marginal
/// gain (lowest index on ties) and stops once no feasible element has a
/// positive gain.
pub fn centralized_greedy(f: &dyn SetFunction, body: &FeasibleBody) -> Result<GreedyResult> {
    check_dim(f, body)?;
    let mut room = Room::new(body)?;
    let mut s = Subset::empty(body.dim());
    let mut value = f.eval(&s);
    let mut heap: BinaryHeap<Entry> = (0..body.dim())
        .map(|e| Entry {
            gain: f.gain(&s, e),
            element: e,
            stamp: 0,
        })
        .collect();
    let mut trace = Vec::new();
    while let Some(top) = heap.pop() {
        if !room.fits(top.element) {
            continue;
        }
        if top.stamp != s.len() {
            heap.push(Entry {
                gain: f.gain(&s, top.element),
                element: top.element,
                stamp: s.len(),
            });
            continue;
        }
        if top.gain <= 0.0 {
            break;
        }
        s.insert(top.element);
        room.take(top.element);
        value = f.eval(&s);
        trace.push(GreedyStep {
            element: top.element,
            gain: top.gain,
            value,
        });
    }
    Ok(GreedyResult {
        set: trace.iter().map(|t| t.element).collect(),
        value,
        trace,
    })
}

/// Greedy re-evaluating every feasible gain at every step.
pub fn plain_greedy(f: &dyn SetFunction, body: &FeasibleBody) -> Result<GreedyResult> {
    check_dim(f, body)?;
    let mut room = Room::new(body)?;
    let mut s = Subset::empty(body.dim());
    let mut value = f.eval(&s);
    let mut trace = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for e in (0..body.dim()).filter(|&e| !s.contains(e) && room.fits(e)) {
            let gain = f.gain(&s, e);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((e, gain));
            }
        }
        match best {
            Some((e, gain)) if gain > 0.0 => {
                s.insert(e);
                room.take(e);
                value = f.eval(&s);
                trace.push(GreedyStep {
                    element: e,
                    gain,
                    value,
                });
            }
            _ => break,
        }
    }
    Ok(GreedyResult {
        set: trace.iter().map(|t| t.element).collect(),
        value,
        trace,
    })
}

/// Best independent set by enumeration, lowest mask on ties.
pub fn brute_force_optimum(f: &dyn SetFunction, body: &FeasibleBody) -> Result<(Vec<usize>, f64)> {
    check_dim(f, body)?;
    if body.dim() > BRUTE_FORCE_LIMIT {
        return Err(Error::GroundSetTooLarge {
            size: body.dim(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for s in independent_sets(body)? {
        let v = f.eval(&s);
        if v > best.1 {
            best = (s.to_vec(), v);
        }
    }
    Ok(best)
}

/// Every iterate `x(0) = 0, ..., x(T)` of `x(t) = x(t-1) + lmo(grad F(x(t-1))) / T`.
pub fn continuous_greedy_path(
    oracle: &dyn GradientOracle<f64>,
    body: &FeasibleBody,
    rounds: usize,
) -> Result<Vec<Vec<f64>>> {
    if rounds == 0 {
        return Err(Error::InvalidParameter(
            "at least one round is required".into(),
        ));
    }
    let step = 1.0 / rounds as f64;
    let mut path = vec![vec![0.0; body.dim()]];
    for _ in 0..rounds {
        let x = path.last().expect("path starts at zero");
        let grad = oracle.gradient(x)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient oracle"));
        }
        let v = polytope::lmo(body, &grad)?;
        let next = x.iter().zip(v).map(|(a, b)| a + step * b).collect();
        path.push(next);
    }
    Ok(path)
}

/// Final iterate of [`continuous_greedy_path`].
pub fn centralized_continuous_greedy(
    oracle: &dyn GradientOracle<f64>,
    body: &FeasibleBody,
    rounds: usize,
) -> Result<Vec<f64>> {
    Ok(continuous_greedy_path(oracle, body, rounds)?
        .pop()
        .expect("path is nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::MultilinearGradient;
    use crate::multilinear::exact_multilinear;
    use crate::multilinear::FractionalPoint;
    use crate::setfn::{facility_location, RatingsMatrix, Tabulated};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn facility(users: usize, rows: &[&[f64]]) -> crate::setfn::FacilityLocation {
        let p = rows[0].len();
        let triples = rows
            .iter()
            .enumerate()
            .flat_map(|(u, r)| r.iter().enumerate().map(move |(m, &v)| (u, m, v)));
        facility_location(
            &RatingsMatrix::from_triples(users, p, triples).unwrap(),
            &(0..users).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    fn random_facility(seed: u64, p: usize) -> crate::setfn::FacilityLocation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = rng.random_range(1..=8);
        let mut triples = Vec::new();
        for u in 0..users {
            for m in 0..p {
                if rng.random::<f64>() < 0.5 {
                    triples.push((u, m, rng.random_range(1..=5) as f64));
                }
            }
        }
        facility_location(
            &RatingsMatrix::from_triples(users, p, triples).unwrap(),
            &(0..users).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn greedy_examples() {
        let f = facility(2, &[&[4.0, 0.0], &[0.0, 3.0]]);
        let out = centralized_greedy(&f, &FeasibleBody::uniform(2, 1)).unwrap();
        assert_eq!((out.set.clone(), out.value), (vec![0], 4.0));

        let f = facility(1, &[&[4.0, 2.0, 1.0]]);
        let out = centralized_greedy(&f, &FeasibleBody::uniform(3, 2)).unwrap();
        assert_eq!(out.set, vec![0]);
        assert_eq!(out.value, 4.0);
    }

    #[test]
    fn unlimited_cap_takes_every_useful_element() {
        let f = facility(2, &[&[4.0, 0.0, 0.0, 1.0], &[0.0, 3.0, 0.0, 0.0]]);
        let out = centralized_greedy(&f, &FeasibleBody::uniform(4, 9)).unwrap();
        let mut set = out.set.clone();
        set.sort_unstable();
        assert_eq!(set, vec![0, 1]);
        assert_eq!(out.value, 7.0);
    }

    #[test]
    fn greedy_respects_partition_caps() {
        let f = facility(1, &[&[5.0, 4.0, 1.0, 2.0]]);
        let f2 = facility(
            3,
            &[
                &[5.0, 4.0, 1.0, 2.0],
                &[1.0, 4.0, 0.0, 0.0],
                &[0.0, 0.0, 3.0, 3.0],
            ],
        );
        let body = FeasibleBody::partition(4, vec![vec![0, 1], vec![2, 3]], vec![1, 1]).unwrap();
        for f in [&f, &f2] {
            let out = centralized_greedy(f, &body).unwrap();
            assert!(body.is_independent(&Subset::from_indices(4, out.set.iter().copied()).unwrap()));
            assert_eq!(out, plain_greedy(f, &body).unwrap());
        }
    }

    #[test]
    fn continuous_greedy_linear() {
        let c = vec![3.0, 1.0, 2.0, 5.0];
        let oracle = move |_x: &[f64]| c.clone();
        let x = centralized_continuous_greedy(&oracle, &FeasibleBody::uniform(4, 2), 10).unwrap();
        assert!(x[1] == 0.0 && x[2] == 0.0);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_greedy_two_element() {
        // f(∅)=0, f({0})=f({1})=1, f({0,1})=1.5
        let f = Tabulated::new(2, vec![0.0, 1.0, 1.0, 1.5]).unwrap();
        let body = FeasibleBody::uniform(2, 1);
        let path = continuous_greedy_path(&MultilinearGradient(&f), &body, 100).unwrap();
        assert!(path
            .iter()
            .all(|x| polytope::contains(&body, x, 1e-9).unwrap()));
        let x = FractionalPoint::clamped(path.last().unwrap());
        assert!(exact_multilinear(&f, &x).unwrap() >= 1.0 - (-1f64).exp());
        assert_eq!(brute_force_optimum(&f, &body).unwrap().1, 1.0);
    }

    #[test]
    fn errors() {
        let f = facility(1, &[&[1.0, 2.0]]);
        assert!(centralized_greedy(&f, &FeasibleBody::uniform(3, 1)).is_err());
        assert!(centralized_greedy(&f, &FeasibleBody::boxed(vec![1.0, 1.0]).unwrap()).is_err());
        let big = random_facility(1, 13);
        assert!(matches!(
            brute_force_optimum(&big, &FeasibleBody::uniform(13, 2)),
            Err(Error::GroundSetTooLarge { .. })
        ));
        let nan = |_x: &[f64]| vec![f64::NAN, 0.0];
        assert!(centralized_continuous_greedy(&nan, &FeasibleBody::uniform(2, 1), 3).is_err());
    }

    #[test]
    fn greedy_guarantee_on_random_instances() {
        let bound = 1.0 - (-1f64).exp();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let p = rng.random_range(2..=12);
            let k = rng.random_range(1..=p);
            let f = random_facility(seed, p);
            let body = FeasibleBody::uniform(p, k);
            let greedy = centralized_greedy(&f, &body).unwrap();
            let (_, opt) = brute_force_optimum(&f, &body).unwrap();
            assert!(greedy.value >= bound * opt - 1e-9, "seed {seed}");
            assert_eq!(greedy, plain_greedy(&f, &body).unwrap(), "seed {seed}");
        }
    }

    proptest! {
        #[test]
        fn lazy_matches_plain(seed in any::<u64>(), p in 1usize..=15, k in 1usize..=6) {
            let f = random_facility(seed, p);
            let body = FeasibleBody::uniform(p, k);
            prop_assert_eq!(centralized_greedy(&f, &body).unwrap(), plain_greedy(&f, &body).unwrap());
        }
    }
}
