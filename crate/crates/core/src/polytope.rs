//! Down-closed feasible bodies: uniform and partition matroid polytopes and
//! boxes `[0, u]`.

use serde::{Deserialize, Serialize};

use crate::setfn::Subset;
use crate::{Error, Result, Scalar};

/// Membership tolerance for floating-point iterates.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleBody {
    /// `{x in [0,1]^p : sum x <= k}`
    Uniform { p: usize, k: usize },
    /// One cardinality cap per part; the parts partition `0..p`.
    Partition {
        p: usize,
        parts: Vec<Vec<usize>>,
        caps: Vec<usize>,
    },
    /// `{x : 0 <= x <= upper}` with `upper` in `(0, 1]^p`.
    Box { upper: Vec<f64> },
}

impl FeasibleBody {
    pub fn uniform(p: usize, k: usize) -> Self {
        FeasibleBody::Uniform { p, k }
    }

    pub fn partition(p: usize, parts: Vec<Vec<usize>>, caps: Vec<usize>) -> Result<Self> {
        if parts.len() != caps.len() {
            return Err(Error::DimensionMismatch {
                expected: parts.len(),
                found: caps.len(),
            });
        }
        let mut seen = vec![false; p];
        for &e in parts.iter().flatten() {
            if e >= p {
                return Err(Error::OutOfRange { index: e, size: p });
            }
            if std::mem::replace(&mut seen[e], true) {
                return Err(Error::InvalidParameter(format!(
                    "element {e} appears in two parts"
                )));
            }
        }
        if let Some(e) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!(
                "element {e} belongs to no part"
            )));
        }
        Ok(FeasibleBody::Partition { p, parts, caps })
    }

    pub fn boxed(upper: Vec<f64>) -> Result<Self> {
        if let Some(u) = upper.iter().find(|u| !(**u > 0.0 && **u <= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "box bound {u} outside (0, 1]"
            )));
        }
        Ok(FeasibleBody::Box { upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleBody::Uniform { p, .. } | FeasibleBody::Partition { p, .. } => *p,
            FeasibleBody::Box { upper } => upper.len(),
        }
    }

    pub fn is_matroid(&self) -> bool {
        !matches!(self, FeasibleBody::Box { .. })
    }

    /// Groups of coordinates with a shared cardinality cap (matroids only).
    pub fn cap_groups(&self) -> Vec<(Vec<usize>, usize)> {
        match self {
            FeasibleBody::Uniform { p, k } => vec![((0..*p).collect(), *k)],
            FeasibleBody::Partition { parts, caps, .. } => {
                parts.iter().cloned().zip(caps.iter().copied()).collect()
            }
            FeasibleBody::Box { .. } => Vec::new(),
        }
    }

    pub fn is_independent(&self, s: &Subset) -> bool {
        match self {
            FeasibleBody::Box { .. } => false,
            _ => self
                .cap_groups()
                .iter()
                .all(|(group, cap)| group.iter().filter(|&&e| s.contains(e)).count() <= *cap),
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }
}

// Indices of the `cap` largest strictly positive entries, ties to lower index.
fn top_positive<S: Scalar>(d: &[S], group: &[usize], cap: usize) -> Vec<usize> {
    let mut cand: Vec<usize> = group
        .iter()
        .copied()
        .filter(|&j| d[j] > S::zero())
        .collect();
    cand.sort_by(|&a, &b| {
        d[b].partial_cmp(&d[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    cand.truncate(cap);
    cand
}

/// `argmax_{v in C} <d, v>`, returned as a vertex of the body.
pub fn lmo<S: Scalar>(body: &FeasibleBody, d: &[S]) -> Result<Vec<S>> {
    body.check_dim(d.len())?;
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear oracle direction"));
    }
    let mut v = vec![S::zero(); d.len()];
    match body {
        FeasibleBody::Box { upper } => {
            for (j, dj) in d.iter().enumerate() {
                if *dj > S::zero() {
                    v[j] = S::from_f64(upper[j]);
                }
            }
        }
        _ => {
            for (group, cap) in body.cap_groups() {
                for j in top_positive(d, &group, cap) {
                    v[j] = S::one();
                }
            }
        }
    }
    Ok(v)
}

pub fn contains<S: Scalar>(body: &FeasibleBody, x: &[S], tol: S) -> Result<bool> {
    body.check_dim(x.len())?;
    let lo = S::zero() - tol.clone();
    let ok = match body {
        FeasibleBody::Box { upper } => x
            .iter()
            .zip(upper)
            .all(|(xj, &u)| *xj >= lo && *xj <= S::from_f64(u) + tol.clone()),
        _ => {
            let hi = S::one() + tol.clone();
            x.iter().all(|xj| *xj >= lo && *xj <= hi)
                && body.cap_groups().iter().all(|(group, cap)| {
                    let sum = group.iter().fold(S::zero(), |acc, &j| acc + x[j].clone());
                    sum <= S::from_ratio(*cap as i64, 1) + tol.clone()
                })
        }
    };
    Ok(ok)
}

/// Exact Euclidean diameter. Over a matroid polytope the farthest pair is two
/// independent sets; a group of size `s` with cap `c` contributes at most
/// `min(2c, s)` to `|A xor B|`.
pub fn diameter(body: &FeasibleBody) -> f64 {
    match body {
        FeasibleBody::Box { upper } => upper.iter().map(|u| u * u).sum::<f64>().sqrt(),
        _ => (body
            .cap_groups()
            .iter()
            .map(|(group, cap)| (2 * cap).min(group.len()))
            .sum::<usize>() as f64)
            .sqrt(),
    }
}

/// All independent sets (vertices of the matroid polytope), `p <= 20`.
pub fn independent_sets(body: &FeasibleBody) -> Result<Vec<Subset>> {
    if !body.is_matroid() {
        return Err(Error::Unsupported("independent sets of a box".into()));
    }
    let p = body.dim();
    if p > 20 {
        return Err(Error::GroundSetTooLarge { size: p, limit: 20 });
    }
    Ok((0..1u64 << p)
        .map(|m| Subset::from_mask(p, m))
        .filter(|s| body.is_independent(s))
        .collect())
}
