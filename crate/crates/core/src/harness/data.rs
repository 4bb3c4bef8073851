use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::setfn::RatingsMatrix;
use crate::{Error, Result};

pub const MAX_RATING: f64 = 5.0;

fn parse_record(line: &str) -> std::result::Result<(u64, u64, f64), String> {
    let fields: Vec<&str> = if line.contains("::") {
        line.split("::").map(str::trim).collect()
    } else {
        line.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect()
    };
    if !(3..=4).contains(&fields.len()) {
        return Err(format!("expected 3 or 4 fields, found {}", fields.len()));
    }
    let id = |s: &str, what: &str| s.parse::<u64>().map_err(|_| format!("bad {what} id {s:?}"));
    let user = id(fields[0], "user")?;
    let movie = id(fields[1], "movie")?;
    let rating: f64 = fields[2]
        .parse()
        .map_err(|_| format!("bad rating {:?}", fields[2]))?;
    if !(0.0..=MAX_RATING).contains(&rating) {
        return Err(format!("rating {rating} outside [0, {MAX_RATING}]"));
    }
    Ok((user, movie, rating))
}

/// Parses `user::movie::rating[::timestamp]` lines or whitespace/comma
/// separated triples. Ids are remapped to dense indices in increasing order;
/// a repeated `(user, movie)` pair keeps its last rating. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_ratings(text: &str) -> Result<RatingsMatrix> {
    let mut records = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        records.push(parse_record(line).map_err(|message| Error::Parse {
            line: number + 1,
            message,
        })?);
    }
    if records.is_empty() {
        return Err(Error::Empty("ratings input has no records".into()));
    }
    let dense = |ids: BTreeMap<u64, usize>| -> BTreeMap<u64, usize> {
        ids.into_keys().enumerate().map(|(i, id)| (id, i)).collect()
    };
    let users = dense(records.iter().map(|r| (r.0, 0)).collect());
    let movies = dense(records.iter().map(|r| (r.1, 0)).collect());
    RatingsMatrix::from_triples(
        users.len(),
        movies.len(),
        records.iter().map(|&(u, m, r)| (users[&u], movies[&m], r)),
    )
}

pub fn load_ratings(path: impl AsRef<Path>) -> Result<RatingsMatrix> {
    parse_ratings(&std::fs::read_to_string(path)?)
}

/// Every `(user, movie)` pair is rated with probability `density`, uniformly
/// over the integers `min_rating..=max_rating`.
pub fn generate_synthetic(
    users: usize,
    movies: usize,
    density: f64,
    (min_rating, max_rating): (u32, u32),
    seed: u64,
) -> Result<RatingsMatrix> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "density {density} outside (0, 1]"
        )));
    }
    if min_rating > max_rating || f64::from(max_rating) > MAX_RATING {
        return Err(Error::InvalidParameter(format!(
            "rating range [{min_rating}, {max_rating}] is not inside [0, {MAX_RATING}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::new();
    for u in 0..users {
        for m in 0..movies {
            if rng.random::<f64>() < density {
                triples.push((u, m, f64::from(rng.random_range(min_rating..=max_rating))));
            }
        }
    }
    RatingsMatrix::from_triples(users, movies, triples)
}
