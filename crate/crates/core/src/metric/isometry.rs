//! Isometry verification and an exhaustive embedding search used as an
//! independent oracle.

use serde::Serialize;

use super::space::UltrametricSpace;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceMismatch {
    pub a: String,
    pub b: String,
    pub source: u64,
    pub target: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsometryReport {
    pub ok: bool,
    pub violations: Vec<DistanceMismatch>,
}

impl IsometryReport {
    pub(crate) fn from_violations(violations: Vec<DistanceMismatch>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }
}

/// Checks that `map` (source index to target index) preserves every pairwise
/// distance. A non-injective map always fails, since it sends a positive
/// distance to 0.
pub fn verify_isometric_embedding(
    map: &[usize],
    src: &UltrametricSpace,
    dst: &UltrametricSpace,
) -> Result<IsometryReport> {
    if map.len() < src.len() {
        return Err(Error::MapNotTotal(map.len()));
    }
    if let Some(&target) = map.iter().find(|&&t| t >= dst.len()) {
        return Err(Error::MapOutOfRange {
            target,
            len: dst.len(),
        });
    }
    Ok(check_pairs(src.len(), |i, j| {
        let (s, t) = (src.dist(i, j), dst.dist(map[i], map[j]));
        (s != t).then(|| DistanceMismatch {
            a: src.label(i).to_owned(),
            b: src.label(j).to_owned(),
            source: s,
            target: t,
        })
    }))
}

pub(crate) fn check_pairs(
    n: usize,
    mut mismatch: impl FnMut(usize, usize) -> Option<DistanceMismatch>,
) -> IsometryReport {
    let mut violations = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(v) = mismatch(i, j) {
                violations.push(v);
            }
        }
    }
    IsometryReport::from_violations(violations)
}

/// Size limits for [`find_isometric_embedding`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_source: usize,
    pub max_target: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_source: 8,
            max_target: 64,
        }
    }
}

/// Exhaustive backtracking search for an isometric embedding of `src` into
/// `dst`. Refuses inputs above `limits` instead of running unbounded.
pub fn find_isometric_embedding(
    src: &UltrametricSpace,
    dst: &UltrametricSpace,
    limits: SearchLimits,
) -> Result<Option<Vec<usize>>> {
    if src.len() > limits.max_source {
        return Err(Error::GuardExceeded {
            what: "isometric embedding search (source)",
            size: src.len() as u128,
            limit: limits.max_source as u128,
        });
    }
    if dst.len() > limits.max_target {
        return Err(Error::GuardExceeded {
            what: "isometric embedding search (target)",
            size: dst.len() as u128,
            limit: limits.max_target as u128,
        });
    }
    if src.len() > dst.len() {
        return Ok(None);
    }
    let mut map = Vec::with_capacity(src.len());
    let mut used = vec![false; dst.len()];
    Ok(extend(src, dst, &mut map, &mut used).then_some(map))
}

fn extend(
    src: &UltrametricSpace,
    dst: &UltrametricSpace,
    map: &mut Vec<usize>,
    used: &mut [bool],
) -> bool {
    let next = map.len();
    if next == src.len() {
        return true;
    }
    for candidate in 0..dst.len() {
        if used[candidate] {
            continue;
        }
        let fits = map
            .iter()
            .enumerate()
            .all(|(i, &t)| dst.dist(t, candidate) == src.dist(i, next));
        if !fits {
            continue;
        }
        used[candidate] = true;
        map.push(candidate);
        if extend(src, dst, map, used) {
            return true;
        }
        map.pop();
        used[candidate] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(d: u64) -> UltrametricSpace {
        UltrametricSpace::new(vec!["u".into(), "v".into()], vec![vec![0, d], vec![d, 0]]).unwrap()
    }

    #[test]
    fn identity_is_isometric() {
        let s = pair(4);
        assert!(verify_isometric_embedding(&[0, 1], &s, &s).unwrap().ok);
    }

    #[test]
    fn constant_map_fails() {
        let s = pair(4);
        let report = verify_isometric_embedding(&[1, 1], &s, &s).unwrap();
        assert!(!report.ok);
        assert_eq!(report.violations[0].target, 0);
        assert_eq!(report.violations[0].source, 4);
    }

    #[test]
    fn partial_map_is_an_error() {
        let s = pair(4);
        assert!(matches!(
            verify_isometric_embedding(&[0], &s, &s),
            Err(Error::MapNotTotal(1))
        ));
        assert!(matches!(
            verify_isometric_embedding(&[0, 5], &s, &s),
            Err(Error::MapOutOfRange { target: 5, .. })
        ));
    }

    #[test]
    fn search_trivial_and_impossible() {
        let point = UltrametricSpace::singleton("x");
        let found = find_isometric_embedding(&point, &pair(3), SearchLimits::default()).unwrap();
        assert!(found.is_some());
        assert_eq!(
            find_isometric_embedding(&pair(7), &pair(3), SearchLimits::default()).unwrap(),
            None
        );
    }

    #[test]
    fn search_respects_guard() {
        let s = pair(1);
        let limits = SearchLimits {
            max_source: 1,
            max_target: 64,
        };
        assert!(matches!(
            find_isometric_embedding(&s, &s, limits),
            Err(Error::GuardExceeded { .. })
        ));
    }
}
