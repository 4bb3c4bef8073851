//! Multilinear extension `F(x) = E[f(S)]`, where `S` contains each element `j`
//! independently with probability `x_j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::setfn::{FacilityLocation, SetFunction, Subset, Tabulated};
use crate::{Error, Result, Scalar};

/// Largest ground set for the `2^|V|` enumeration routines.
pub const ENUMERATION_LIMIT: usize = 20;

/// A point of `[0, 1]^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FractionalPoint(Vec<f64>);

impl FractionalPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some(bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "coordinate {bad} outside [0, 1]"
            )));
        }
        Ok(FractionalPoint(x))
    }

    pub fn zeros(p: usize) -> Self {
        FractionalPoint(vec![0.0; p])
    }

    /// Clamps coordinates into `[0, 1]`; for iterates that drift by rounding.
    pub fn clamped(x: &[f64]) -> Self {
        FractionalPoint(x.iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    pub fn indicator(s: &Subset) -> Self {
        FractionalPoint(s.indicator())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for FractionalPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_point(f: &dyn SetFunction, x: &FractionalPoint) -> Result<()> {
    if x.len() != f.ground_size() {
        return Err(Error::DimensionMismatch {
            expected: f.ground_size(),
            found: x.len(),
        });
    }
    Ok(())
}

fn enumerable(f: &dyn SetFunction) -> Result<Tabulated> {
    let p = f.ground_size();
    if p > ENUMERATION_LIMIT {
        return Err(Error::GroundSetTooLarge {
            size: p,
            limit: ENUMERATION_LIMIT,
        });
    }
    Tabulated::of(f)
}

// Probability of every mask under independent inclusion, built one coordinate
// at a time; entry `mask` is `prod_{j in mask} x_j prod_{j not in mask} (1 - x_j)`.
fn mask_probabilities(x: &[f64]) -> Vec<f64> {
    let mut probs = Vec::with_capacity(1 << x.len());
    probs.push(1.0);
    for &xj in x {
        let len = probs.len();
        for k in 0..len {
            let base = probs[k];
            probs.push(base * xj);
            probs[k] = base * (1.0 - xj);
        }
    }
    probs
}

fn extension_from_table(table: &Tabulated, x: &[f64]) -> f64 {
    mask_probabilities(x)
        .iter()
        .enumerate()
        .map(|(mask, p)| p * table.value_at_mask(mask))
        .sum()
}

/// `F(x)` by summing over all `2^|V|` subsets.
pub fn exact_multilinear(f: &dyn SetFunction, x: &FractionalPoint) -> Result<f64> {
    check_point(f, x)?;
    let table = enumerable(f)?;
    Ok(extension_from_table(&table, x.as_slice()))
}

/// `dF/dx_i = F(x; x_i <- 1) - F(x; x_i <- 0)` by enumeration.
pub fn exact_gradient(f: &dyn SetFunction, x: &FractionalPoint) -> Result<Vec<f64>> {
    check_point(f, x)?;
    let table = enumerable(f)?;
    let mut y = x.as_slice().to_vec();
    Ok((0..y.len())
        .map(|i| {
            let keep = y[i];
            y[i] = 1.0;
            let hi = extension_from_table(&table, &y);
            y[i] = 0.0;
            let lo = extension_from_table(&table, &y);
            y[i] = keep;
            hi - lo
        })
        .collect())
}

/// `F(x)` from the closed form when `f` has one, by enumeration otherwise.
pub fn multilinear_value(f: &dyn SetFunction, x: &[f64]) -> Result<f64> {
    match f.multilinear_closed_form(x) {
        Some((value, _)) => Ok(value),
        None => exact_multilinear(f, &FractionalPoint::new(x.to_vec())?),
    }
}

/// `grad F(x)` from the closed form when `f` has one, by enumeration otherwise.
pub fn multilinear_gradient(f: &dyn SetFunction, x: &[f64]) -> Result<Vec<f64>> {
    match f.multilinear_closed_form(x) {
        Some((_, grad)) => Ok(grad),
        None => exact_gradient(f, &FractionalPoint::new(x.to_vec())?),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub values: Vec<f64>,
    pub batch: usize,
    pub seed: u64,
}

/// Independent random stream for `(seed, node, round)`; results do not depend
/// on the order in which nodes are processed.
pub fn stream_rng(seed: u64, node: usize, round: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((node as u64) << 32) ^ round as u64);
    rng
}

/// Includes each `j` with probability `x_j`.
pub fn sample_subset<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> Subset {
    let mut s = Subset::empty(x.len());
    for (j, &xj) in x.iter().enumerate() {
        if rng.random::<f64>() < xj {
            s.insert(j);
        }
    }
    s
}

/// Averages `batch` draws of `f(S + i) - f(S - i)`, one shared `S` per draw.
pub fn stochastic_gradient_with<R: Rng + ?Sized>(
    f: &dyn SetFunction,
    x: &[f64],
    batch: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if batch == 0 {
        return Err(Error::InvalidParameter(
            "batch size must be at least 1".into(),
        ));
    }
    if x.len() != f.ground_size() {
        return Err(Error::DimensionMismatch {
            expected: f.ground_size(),
            found: x.len(),
        });
    }
    if batch == 1 {
        return Ok(f.coordinate_marginals(&sample_subset(x, rng)));
    }
    let mut acc = vec![0.0; x.len()];
    for _ in 0..batch {
        for (a, v) in acc
            .iter_mut()
            .zip(f.coordinate_marginals(&sample_subset(x, rng)))
        {
            *a += v;
        }
    }
    let b = batch as f64;
    Ok(acc.into_iter().map(|a| a / b).collect())
}

pub fn stochastic_gradient(
    f: &dyn SetFunction,
    x: &FractionalPoint,
    batch: usize,
    seed: u64,
) -> Result<GradientEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = stochastic_gradient_with(f, x.as_slice(), batch, &mut rng)?;
    Ok(GradientEstimate {
        values,
        batch,
        seed,
    })
}

/// Closed-form multilinear value and gradient of a facility-location objective.
///
/// For one user with nonzero ratings `r_(1) >= r_(2) >= ...`, the expected best
/// rating is `sum_k r_(k) x_(k) prod_{k' < k} (1 - x_(k'))`. With `tail_k` the
/// expected best among items ranked below `k`, the partial derivative is
/// `prod_{k' < k} (1 - x_(k')) * (r_(k) - tail_k)`.
pub fn facility_multilinear<S: Scalar>(f: &FacilityLocation, x: &[S]) -> (S, Vec<S>) {
    let mut value = S::zero();
    let mut grad = vec![S::zero(); x.len()];
    let mut tails: Vec<S> = Vec::new();
    for row in f.prefs() {
        tails.clear();
        tails.resize(row.len(), S::zero());
        let mut tail = S::zero();
        for (k, &(m, r)) in row.iter().enumerate().rev() {
            tails[k] = tail.clone();
            let xm = x[m].clone();
            tail = S::from_f64(r) * xm.clone() + (S::one() - xm) * tail;
        }
        value = value + tail;
        let mut reach = S::one();
        for (k, &(m, r)) in row.iter().enumerate() {
            grad[m] = grad[m].clone() + reach.clone() * (S::from_f64(r) - tails[k].clone());
            reach = reach * (S::one() - x[m].clone());
        }
    }
    (value, grad)
}

pub fn facility_closed_form(f: &FacilityLocation, x: &FractionalPoint) -> Result<(f64, Vec<f64>)> {
    check_point(f, x)?;
    Ok(facility_multilinear(f, x.as_slice()))
}
