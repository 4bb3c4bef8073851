//! Rounding fractional matroid-polytope points to independent sets.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::multilinear::{multilinear_value, sample_subset, FractionalPoint};
use crate::polytope::{self, FeasibleBody};
use crate::setfn::{SetFunction, Subset};
use crate::{Error, Result};

/// Coordinates within this distance of 0 or 1 are snapped.
pub const SNAP_EPS: f64 = 1e-12;

/// Common-random-number draws per comparison in sampled pipage.
pub const SAMPLED_PIPAGE_DRAWS: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMethod {
    /// Pipage with an exact value oracle; lossless.
    Pipage,
    /// Pipage driven by a sampled oracle; lossless only in expectation.
    PipageSampled,
    Randomized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingResult {
    pub set: Vec<usize>,
    /// Oracle value at the input point, when available.
    pub fractional_value: Option<f64>,
    /// `f(S)`
    pub value: f64,
    pub method: RoundingMethod,
    pub steps: usize,
    /// Oracle value after each pipage step, starting at the input.
    pub trace: Vec<f64>,
}

fn snap(v: &mut f64) {
    if *v < SNAP_EPS {
        *v = 0.0;
    } else if *v > 1.0 - SNAP_EPS {
        *v = 1.0;
    }
}

fn is_fractional(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

fn checked(value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("rounding value oracle"))
    }
}

fn check_input(x: &FractionalPoint, body: &FeasibleBody) -> Result<()> {
    if !body.is_matroid() {
        return Err(Error::Unsupported(
            "rounding requires a matroid polytope".into(),
        ));
    }
    if !polytope::contains(body, x.as_slice(), polytope::DEFAULT_TOL)? {
        return Err(Error::Infeasible(
            "rounding input lies outside the body".into(),
        ));
    }
    Ok(())
}

/// Deterministic pipage rounding against `value`, which must evaluate the
/// multilinear extension of the target function.
///
/// Inside each cap group the two lowest-index fractional coordinates `i < j`
/// are moved along `e_i - e_j` to whichever boundary point scores higher
/// (the `+` direction on ties). A single leftover fractional coordinate in a
/// group is rounded to whichever of 0 and 1 scores higher; rounding up stays
/// feasible because the group's integral part is then below its cap.
pub fn pipage_round(
    x: &FractionalPoint,
    body: &FeasibleBody,
    value: &dyn Fn(&[f64]) -> f64,
) -> Result<RoundingResult> {
    pipage_with(x, body, value, RoundingMethod::Pipage)
}

fn pipage_with(
    x: &FractionalPoint,
    body: &FeasibleBody,
    value: &dyn Fn(&[f64]) -> f64,
    method: RoundingMethod,
) -> Result<RoundingResult> {
    check_input(x, body)?;
    let mut y = x.as_slice().to_vec();
    y.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    y.iter_mut().for_each(snap);
    let start = checked(value(x.as_slice()))?;
    let mut trace = vec![start];
    let mut current = checked(value(&y))?;
    if current != start {
        trace.push(current);
    }
    let mut steps = 0;

    for (group, cap) in body.cap_groups() {
        loop {
            let frac: Vec<usize> = group
                .iter()
                .copied()
                .filter(|&j| is_fractional(y[j]))
                .collect();
            let (up, down) = match frac.as_slice() {
                [] => break,
                [j] => {
                    let mut up = y.clone();
                    up[*j] = 1.0;
                    let mut down = y.clone();
                    down[*j] = 0.0;
                    (up, down)
                }
                [i, j, ..] => {
                    let (i, j) = (*i, *j);
                    let plus = (1.0 - y[i]).min(y[j]);
                    let minus = y[i].min(1.0 - y[j]);
                    let mut up = y.clone();
                    up[i] += plus;
                    up[j] -= plus;
                    let mut down = y.clone();
                    down[i] -= minus;
                    down[j] += minus;
                    for k in [i, j] {
                        snap(&mut up[k]);
                        snap(&mut down[k]);
                    }
                    (up, down)
                }
            };
            let (vu, vd) = (checked(value(&up))?, checked(value(&down))?);
            // A point within tolerance above the cap may leave no room to round up.
            let up_fits = group.iter().filter(|&&j| up[j] == 1.0).count() <= cap;
            if vu >= vd && up_fits {
                y = up;
                current = vu;
            } else {
                y = down;
                current = vd;
            }
            trace.push(current);
            steps += 1;
        }
    }

    let set: Vec<usize> = (0..y.len()).filter(|&j| y[j] == 1.0).collect();
    Ok(RoundingResult {
        set,
        fractional_value: Some(start),
        value: current,
        method,
        steps,
        trace,
    })
}

/// Pipage rounding of `f` with the exact multilinear extension as oracle.
pub fn pipage_round_exact(
    x: &FractionalPoint,
    body: &FeasibleBody,
    f: &dyn SetFunction,
) -> Result<RoundingResult> {
    let failure = RefCell::new(None);
    let oracle = |y: &[f64]| {
        multilinear_value(f, y).unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    };
    let out = pipage_round(x, body, &oracle);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => out,
    }
}

/// Pipage rounding with a sampled oracle: every comparison uses the same
/// `draws` uniform vectors, so `F(y)` is estimated by the fraction of draws
/// `u` for which `{j : u_j < y_j}` is picked, weighted by `f`.
pub fn pipage_round_sampled(
    x: &FractionalPoint,
    body: &FeasibleBody,
    f: &dyn SetFunction,
    draws: usize,
    seed: u64,
) -> Result<RoundingResult> {
    if draws == 0 {
        return Err(Error::InvalidParameter(
            "at least one draw is required".into(),
        ));
    }
    let p = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniforms: Vec<Vec<f64>> = (0..draws)
        .map(|_| (0..p).map(|_| rng.random::<f64>()).collect())
        .collect();
    let oracle = |y: &[f64]| {
        uniforms
            .iter()
            .map(|u| {
                let s = Subset::from_indices(p, (0..p).filter(|&j| u[j] < y[j]))
                    .expect("indices in range");
                f.eval(&s)
            })
            .sum::<f64>()
            / draws as f64
    };
    let mut out = pipage_with(x, body, &oracle, RoundingMethod::PipageSampled)?;
    let s = Subset::from_indices(p, out.set.iter().copied())?;
    out.value = f.eval(&s);
    Ok(out)
}

/// Drops lowest-marginal elements from every over-cap group until `s` is independent.
fn repair(s: &mut Subset, body: &FeasibleBody, f: &dyn SetFunction) {
    for (group, cap) in body.cap_groups() {
        loop {
            let inside: Vec<usize> = group.iter().copied().filter(|&e| s.contains(e)).collect();
            if inside.len() <= cap {
                break;
            }
            let base = f.eval(s);
            let mut worst = inside[0];
            let mut worst_gain = f64::INFINITY;
            for e in inside {
                let gain = base - f.eval(&s.without(e));
                if gain < worst_gain {
                    worst = e;
                    worst_gain = gain;
                }
            }
            s.remove(worst);
        }
    }
}

/// Independent sampling with repair; returns the best of `trials` sets.
pub fn randomized_round<R: Rng + ?Sized>(
    x: &FractionalPoint,
    body: &FeasibleBody,
    f: &dyn SetFunction,
    trials: usize,
    rng: &mut R,
) -> Result<RoundingResult> {
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "at least one trial is required".into(),
        ));
    }
    check_input(x, body)?;
    let mut best: Option<(Subset, f64)> = None;
    for _ in 0..trials {
        let mut s = sample_subset(x.as_slice(), rng);
        repair(&mut s, body, f);
        let v = checked(f.eval(&s))?;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((s, v));
        }
    }
    let (s, value) = best.expect("at least one trial");
    Ok(RoundingResult {
        set: s.to_vec(),
        fractional_value: multilinear_value(f, x.as_slice()).ok(),
        value,
        method: RoundingMethod::Randomized,
        steps: 0,
        trace: Vec::new(),
    })
}
