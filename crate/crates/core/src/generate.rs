//! Seeded random spaces for tests and the `gen random` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::{DistanceSet, MetricSpace, UltrametricSpace};

/// Random D-ultrametric space on `n` points labelled `p0, p1, …`.
///
/// Points are split top-down: at each level the current block is shuffled
/// and dealt into a random number of classes, pairs in different classes get
/// that level as their distance, and each class recurses on the lower
/// levels. The lowest level always separates what is left.
pub fn gen_random_ultrametric(seed: u64, n: usize, dset: &DistanceSet) -> Result<UltrametricSpace> {
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    if n > 1 && dset.levels().is_empty() {
        return Err(Error::Invalid(format!("{n} points need a nonzero distance")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dist = vec![0u64; n * n];
    let mut stack = vec![((0..n).collect::<Vec<_>>(), dset.levels().len())];
    while let Some((mut points, top)) = stack.pop() {
        if points.len() < 2 {
            continue;
        }
        let level = dset.levels()[top - 1];
        let classes = if top == 1 {
            points.len()
        } else {
            rng.gen_range(1..=points.len())
        };
        points.shuffle(&mut rng);
        let mut dealt = vec![Vec::new(); classes];
        for (i, &p) in points.iter().enumerate() {
            dealt[i % classes].push(p);
        }
        for (a, ca) in dealt.iter().enumerate() {
            for cb in &dealt[a + 1..] {
                for &p in ca {
                    for &q in cb {
                        dist[p * n + q] = level;
                        dist[q * n + p] = level;
                    }
                }
            }
        }
        stack.extend(dealt.into_iter().map(|c| (c, top - 1)));
    }
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    Ok(UltrametricSpace::from_fn(labels, |i, j| dist[i * n + j]))
}

/// Random distance set with maximum at most `max` and at least one nonzero
/// value.
pub fn gen_random_dset(rng: &mut impl Rng, max: u64) -> DistanceSet {
    let max = max.max(1);
    let mut values = vec![0, rng.gen_range(1..=max)];
    values.extend((1..=max).filter(|_| rng.gen_bool(0.4)));
    DistanceSet::new(values).expect("contains 0")
}

/// Random finite metric space: shortest paths in a complete graph with edge
/// weights drawn from `{0.5, 1, …, 5}`.
pub fn gen_random_metric(seed: u64, n: usize) -> Result<MetricSpace> {
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = f64::from(rng.gen_range(1..=10u32)) / 2.0;
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    MetricSpace::new((0..n).map(|i| format!("p{i}")).collect(), d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{distance_set, validate_ultrametric};

    #[test]
    fn deterministic_and_valid() {
        let d = DistanceSet::new(vec![0, 1, 2, 5]).unwrap();
        let a = gen_random_ultrametric(7, 9, &d).unwrap();
        assert_eq!(a, gen_random_ultrametric(7, 9, &d).unwrap());
        for seed in 0..200 {
            let s = gen_random_ultrametric(seed, 1 + seed as usize % 12, &d).unwrap();
            assert!(validate_ultrametric(&s).ok);
            assert!(distance_set(&s).is_subset(&d));
        }
    }

    #[test]
    fn edge_cases() {
        let z = DistanceSet::zero();
        assert_eq!(gen_random_ultrametric(1, 1, &z).unwrap().len(), 1);
        assert!(gen_random_ultrametric(1, 2, &z).is_err());
        assert!(gen_random_ultrametric(1, 0, &z).is_err());
    }

    #[test]
    fn metrics_are_valid() {
        for seed in 0..20 {
            assert!(gen_random_metric(seed, 7).is_ok());
        }
    }
}
