#![allow(dead_code)]

use dcg::harness::generate_synthetic;
use dcg::polytope::FeasibleBody;
use dcg::setfn::{facility_location, FacilityLocation, RatingsMatrix};
use rand::Rng;

pub fn ratings(users: usize, movies: usize, density: f64, seed: u64) -> RatingsMatrix {
    generate_synthetic(users, movies, density, (1, 5), seed).unwrap()
}

/// One facility objective over every user.
pub fn whole(r: &RatingsMatrix) -> FacilityLocation {
    facility_location(r, &(0..r.users()).collect::<Vec<_>>()).unwrap()
}

/// Contiguous blocks of users, one per node.
pub fn split(r: &RatingsMatrix, nodes: usize) -> Vec<FacilityLocation> {
    let per = r.users() / nodes;
    (0..nodes)
        .map(|i| {
            let end = if i + 1 == nodes {
                r.users()
            } else {
                (i + 1) * per
            };
            facility_location(r, &(i * per..end).collect::<Vec<_>>()).unwrap()
        })
        .collect()
}

/// Random point of a matroid polytope; each cap group is scaled into its cap
/// and some coordinates are zeroed.
pub fn random_point<R: Rng>(body: &FeasibleBody, rng: &mut R) -> Vec<f64> {
    let mut x = vec![0.0; body.dim()];
    for (group, cap) in body.cap_groups() {
        let raw: Vec<f64> = group
            .iter()
            .map(|_| {
                if rng.random::<f64>() < 0.2 {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            continue;
        }
        let scale = (cap as f64 / total).min(1.0) * rng.random::<f64>();
        for (&j, v) in group.iter().zip(raw) {
            x[j] = (v * scale).min(1.0);
        }
    }
    x
}
