//! Monotone submodular set functions on a finite ground set.
//!
//! The workhorse is [`FacilityLocation`]: every user contributes the best rating
//! among the chosen movies, `f(S) = sum_l max_{j in S} r_{l,j}`, with the max over
//! the empty set taken as 0.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::multilinear::facility_multilinear;
use crate::{Error, Result};

/// Largest ground set accepted by [`check_monotone_submodular`].
pub const EXHAUSTIVE_LIMIT: usize = 14;

/// Subset of `0..universe` stored as a multiword bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    universe: usize,
    words: Vec<u64>,
}

impl Subset {
    pub fn empty(universe: usize) -> Self {
        Subset {
            universe,
            words: vec![0; universe.div_ceil(64).max(1)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for e in 0..universe {
            s.insert(e);
        }
        s
    }

    pub fn from_indices(universe: usize, items: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty(universe);
        for e in items {
            if e >= universe {
                return Err(Error::OutOfRange {
                    index: e,
                    size: universe,
                });
            }
            s.insert(e);
        }
        Ok(s)
    }

    /// Low `universe` bits of `mask` (universe at most 64).
    pub fn from_mask(universe: usize, mask: u64) -> Self {
        debug_assert!(universe <= 64);
        let mut s = Self::empty(universe);
        s.words[0] = if universe == 64 {
            mask
        } else {
            mask & ((1u64 << universe) - 1)
        };
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn contains(&self, e: usize) -> bool {
        e < self.universe && self.words[e / 64] >> (e % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, e: usize) {
        self.words[e / 64] |= 1 << (e % 64);
    }

    #[inline]
    pub fn remove(&mut self, e: usize) {
        self.words[e / 64] &= !(1 << (e % 64));
    }

    pub fn with(&self, e: usize) -> Self {
        let mut s = self.clone();
        s.insert(e);
        s
    }

    pub fn without(&self, e: usize) -> Self {
        let mut s = self.clone();
        s.remove(e);
        s
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe).filter(|&e| self.contains(e))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn indicator(&self) -> Vec<f64> {
        (0..self.universe)
            .map(|e| if self.contains(e) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A nonnegative set function on `0..ground_size()`.
///
/// Implementors may assume subsets passed in have the right universe; the
/// free functions [`evaluate`] and [`marginal`] do the checking.
pub trait SetFunction: Send + Sync {
    fn ground_size(&self) -> usize;

    fn eval(&self, s: &Subset) -> f64;

    fn gain(&self, s: &Subset, e: usize) -> f64 {
        if s.contains(e) {
            0.0
        } else {
            self.eval(&s.with(e)) - self.eval(s)
        }
    }

    /// `f(S + i) - f(S - i)` for every element `i`.
    fn coordinate_marginals(&self, s: &Subset) -> Vec<f64> {
        (0..self.ground_size())
            .map(|i| self.eval(&s.with(i)) - self.eval(&s.without(i)))
            .collect()
    }

    /// `m_f = max_i f({i})`.
    fn max_singleton(&self) -> f64 {
        let p = self.ground_size();
        (0..p)
            .map(|i| self.eval(&Subset::from_indices(p, [i]).unwrap()))
            .fold(0.0, f64::max)
    }

    /// Exact multilinear value and gradient when a closed form exists.
    fn multilinear_closed_form(&self, _x: &[f64]) -> Option<(f64, Vec<f64>)> {
        None
    }
}

impl<T: SetFunction + ?Sized> SetFunction for &T {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn eval(&self, s: &Subset) -> f64 {
        (**self).eval(s)
    }
    fn gain(&self, s: &Subset, e: usize) -> f64 {
        (**self).gain(s, e)
    }
    fn coordinate_marginals(&self, s: &Subset) -> Vec<f64> {
        (**self).coordinate_marginals(s)
    }
    fn max_singleton(&self) -> f64 {
        (**self).max_singleton()
    }
    fn multilinear_closed_form(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        (**self).multilinear_closed_form(x)
    }
}

fn check_universe(f: &dyn SetFunction, s: &Subset) -> Result<()> {
    if s.universe() != f.ground_size() {
        return Err(Error::DimensionMismatch {
            expected: f.ground_size(),
            found: s.universe(),
        });
    }
    Ok(())
}

pub fn evaluate(f: &dyn SetFunction, s: &Subset) -> Result<f64> {
    check_universe(f, s)?;
    Ok(f.eval(s))
}

/// `f(S + e) - f(S)`, zero when `e` is already in `S`.
pub fn marginal(f: &dyn SetFunction, s: &Subset, e: usize) -> Result<f64> {
    check_universe(f, s)?;
    if e >= f.ground_size() {
        return Err(Error::OutOfRange {
            index: e,
            size: f.ground_size(),
        });
    }
    Ok(f.gain(s, e))
}

/// User-by-movie ratings; absent ratings are 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingsMatrix {
    users: usize,
    movies: usize,
    /// Per user, `(movie, rating)` sorted by movie, zero ratings dropped.
    rows: Vec<Vec<(usize, f64)>>,
}

impl RatingsMatrix {
    /// Later triples overwrite earlier ones for the same `(user, movie)`.
    pub fn from_triples(
        users: usize,
        movies: usize,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); users];
        for (u, m, r) in triples {
            if u >= users {
                return Err(Error::OutOfRange {
                    index: u,
                    size: users,
                });
            }
            if m >= movies {
                return Err(Error::OutOfRange {
                    index: m,
                    size: movies,
                });
            }
            if !r.is_finite() || r < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "rating {r} must be finite and nonnegative"
                )));
            }
            rows[u].insert(m, r);
        }
        let rows = rows
            .into_iter()
            .map(|row| row.into_iter().filter(|&(_, r)| r > 0.0).collect())
            .collect();
        Ok(RatingsMatrix {
            users,
            movies,
            rows,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn movies(&self) -> usize {
        self.movies
    }

    pub fn row(&self, user: usize) -> &[(usize, f64)] {
        &self.rows[user]
    }

    pub fn get(&self, user: usize, movie: usize) -> f64 {
        let row = &self.rows[user];
        row.binary_search_by_key(&movie, |&(m, _)| m)
            .map_or(0.0, |k| row[k].1)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// `f(S) = sum over users of max_{j in S} r_{l,j}`.
#[derive(Clone, Debug)]
pub struct FacilityLocation {
    movies: usize,
    users: Vec<usize>,
    /// Per user, nonzero `(movie, rating)` by rating descending, ties by movie.
    prefs: Vec<Vec<(usize, f64)>>,
    max_singleton: f64,
}

pub fn facility_location(ratings: &RatingsMatrix, users: &[usize]) -> Result<FacilityLocation> {
    if users.is_empty() {
        return Err(Error::Empty("facility-location user set".into()));
    }
    let mut column = vec![0.0; ratings.movies()];
    let mut prefs = Vec::with_capacity(users.len());
    for &u in users {
        if u >= ratings.users() {
            return Err(Error::OutOfRange {
                index: u,
                size: ratings.users(),
            });
        }
        let mut row = ratings.row(u).to_vec();
        for &(m, r) in &row {
            column[m] += r;
        }
        row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        prefs.push(row);
    }
    Ok(FacilityLocation {
        movies: ratings.movies(),
        users: users.to_vec(),
        prefs,
        max_singleton: column.into_iter().fold(0.0, f64::max),
    })
}

impl FacilityLocation {
    pub fn users(&self) -> &[usize] {
        &self.users
    }

    pub(crate) fn prefs(&self) -> &[Vec<(usize, f64)>] {
        &self.prefs
    }
}

impl SetFunction for FacilityLocation {
    fn ground_size(&self) -> usize {
        self.movies
    }

    fn eval(&self, s: &Subset) -> f64 {
        self.prefs
            .iter()
            .map(|row| {
                row.iter()
                    .find(|(m, _)| s.contains(*m))
                    .map_or(0.0, |&(_, r)| r)
            })
            .sum()
    }

    fn gain(&self, s: &Subset, e: usize) -> f64 {
        if s.contains(e) {
            return 0.0;
        }
        let mut total = 0.0;
        for row in &self.prefs {
            // a user gains only when e ranks above everything already in S
            let mut rating_e = None;
            let mut best_in_s = 0.0;
            for &(m, r) in row {
                if m == e {
                    rating_e = Some(r);
                } else if s.contains(m) {
                    best_in_s = r;
                    break;
                }
            }
            if let Some(r) = rating_e {
                total += r - best_in_s;
            }
        }
        total
    }

    fn coordinate_marginals(&self, s: &Subset) -> Vec<f64> {
        let mut out = vec![0.0; self.movies];
        for row in &self.prefs {
            let mut in_s = row.iter().enumerate().filter(|(_, (m, _))| s.contains(*m));
            let top = in_s.next();
            let a = top.map_or(0.0, |(_, &(_, r))| r);
            let b = in_s.next().map_or(0.0, |(_, &(_, r))| r);
            let end = top.map_or(row.len(), |(k, _)| k);
            for &(m, r) in &row[..end] {
                out[m] += r - a;
            }
            if let Some((_, &(m, _))) = top {
                out[m] += a - b;
            }
        }
        out
    }

    fn max_singleton(&self) -> f64 {
        self.max_singleton
    }

    fn multilinear_closed_form(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some(facility_multilinear(self, x))
    }
}

/// `(1/n) sum_i f_i`, the network-wide objective.
pub struct MeanOf<F> {
    parts: Vec<F>,
}

impl<F: SetFunction> MeanOf<F> {
    pub fn new(parts: Vec<F>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Empty("mean of no functions".into()))?;
        let p = first.ground_size();
        if let Some(bad) = parts.iter().find(|f| f.ground_size() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.ground_size(),
            });
        }
        Ok(MeanOf { parts })
    }

    pub fn parts(&self) -> &[F] {
        &self.parts
    }

    fn count(&self) -> f64 {
        self.parts.len() as f64
    }
}

impl<F: SetFunction> SetFunction for MeanOf<F> {
    fn ground_size(&self) -> usize {
        self.parts[0].ground_size()
    }

    fn eval(&self, s: &Subset) -> f64 {
        self.parts.iter().map(|f| f.eval(s)).sum::<f64>() / self.count()
    }

    fn coordinate_marginals(&self, s: &Subset) -> Vec<f64> {
        let mut acc = vec![0.0; self.ground_size()];
        for f in &self.parts {
            for (a, v) in acc.iter_mut().zip(f.coordinate_marginals(s)) {
                *a += v;
            }
        }
        acc.iter().map(|a| a / self.count()).collect()
    }

    fn multilinear_closed_form(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let mut value = 0.0;
        let mut grad = vec![0.0; self.ground_size()];
        for f in &self.parts {
            let (v, g) = f.multilinear_closed_form(x)?;
            value += v;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        let n = self.count();
        Some((value / n, grad.into_iter().map(|g| g / n).collect()))
    }
}

/// `f(S) = sum_{i in S} c_i`.
#[derive(Clone, Debug)]
pub struct Modular {
    pub weights: Vec<f64>,
}

impl SetFunction for Modular {
    fn ground_size(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, s: &Subset) -> f64 {
        s.iter().map(|i| self.weights[i]).sum()
    }

    fn multilinear_closed_form(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let v = self.weights.iter().zip(x).map(|(c, x)| c * x).sum();
        Some((v, self.weights.clone()))
    }
}

/// Explicit value table indexed by the subset bitmask (`p <= 20`).
#[derive(Clone, Debug)]
pub struct Tabulated {
    p: usize,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new(p: usize, values: Vec<f64>) -> Result<Self> {
        if p > 20 {
            return Err(Error::GroundSetTooLarge { size: p, limit: 20 });
        }
        if values.len() != 1 << p {
            return Err(Error::DimensionMismatch {
                expected: 1 << p,
                found: values.len(),
            });
        }
        Ok(Tabulated { p, values })
    }

    pub fn from_fn(p: usize, f: impl Fn(&Subset) -> f64) -> Result<Self> {
        if p > 20 {
            return Err(Error::GroundSetTooLarge { size: p, limit: 20 });
        }
        let values = (0..1u64 << p)
            .map(|m| f(&Subset::from_mask(p, m)))
            .collect();
        Tabulated::new(p, values)
    }

    /// Tabulates any set function.
    pub fn of(f: &dyn SetFunction) -> Result<Self> {
        Tabulated::from_fn(f.ground_size(), |s| f.eval(s))
    }

    pub fn value_at_mask(&self, mask: usize) -> f64 {
        self.values[mask]
    }
}

impl SetFunction for Tabulated {
    fn ground_size(&self) -> usize {
        self.p
    }

    fn eval(&self, s: &Subset) -> f64 {
        self.values[s.words[0] as usize]
    }
}

/// Users assigned to nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodePartition {
    /// `assignment[user] = node`.
    pub assignment: Vec<usize>,
    /// Users held by each node, ascending.
    pub groups: Vec<Vec<usize>>,
}

/// Random balanced split of `users` users over `nodes` nodes; the first
/// `users % nodes` chunks get one extra user.
pub fn partition_users(users: usize, nodes: usize, seed: u64) -> Result<NodePartition> {
    if nodes == 0 {
        return Err(Error::InvalidParameter(
            "node count must be positive".into(),
        ));
    }
    if users < nodes {
        return Err(Error::InvalidParameter(format!(
            "{users} users cannot cover {nodes} nodes"
        )));
    }
    let mut perm: Vec<usize> = (0..users).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (users / nodes, users % nodes);
    let mut assignment = vec![0; users];
    let mut groups = Vec::with_capacity(nodes);
    let mut start = 0;
    for node in 0..nodes {
        let len = base + usize::from(node < extra);
        let mut chunk = perm[start..start + len].to_vec();
        chunk.sort_unstable();
        for &u in &chunk {
            assignment[u] = node;
        }
        groups.push(chunk);
        start += len;
    }
    Ok(NodePartition { assignment, groups })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub monotone: bool,
    pub submodular: bool,
    /// `(A, B)` with `A ⊆ B` and `f(A) > f(B)`.
    pub monotone_witness: Option<(Vec<usize>, Vec<usize>)>,
    /// `(A, B)` with `f(A) + f(B) < f(A ∪ B) + f(A ∩ B)`.
    pub submodular_witness: Option<(Vec<usize>, Vec<usize>)>,
}

impl PropertyReport {
    pub fn passes(&self) -> bool {
        self.monotone && self.submodular
    }
}

/// Exhaustive check of monotonicity and submodularity, `|V| <= 14`.
/// Witnesses are the first violations in mask order.
pub fn check_monotone_submodular(f: &dyn SetFunction) -> Result<PropertyReport> {
    let p = f.ground_size();
    if p > EXHAUSTIVE_LIMIT {
        return Err(Error::GroundSetTooLarge {
            size: p,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let table = Tabulated::of(f)?;
    let v = |m: usize| table.value_at_mask(m);
    let scale = table.values.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let tol = 1e-9 * scale;
    let as_vec = |m: usize| Subset::from_mask(p, m as u64).to_vec();
    let full = 1usize << p;

    let mut monotone_witness = None;
    'mono: for b in 0..full {
        // walk the submasks of b
        let mut a = b;
        loop {
            if v(a) > v(b) + tol {
                monotone_witness = Some((as_vec(a), as_vec(b)));
                break 'mono;
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }

    let mut submodular_witness = None;
    'sub: for a in 0..full {
        for b in 0..full {
            if v(a) + v(b) + tol < v(a | b) + v(a & b) {
                submodular_witness = Some((as_vec(a), as_vec(b)));
                break 'sub;
            }
        }
    }

    Ok(PropertyReport {
        monotone: monotone_witness.is_none(),
        submodular: submodular_witness.is_none(),
        monotone_witness,
        submodular_witness,
    })
}
