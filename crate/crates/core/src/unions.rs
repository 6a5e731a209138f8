//! Joining pointed spaces into r-unions and sequence unions, checking coarse
//! disjoint unions, and splitting spaces back into their parts.
//!
//! The r-union of pointed spaces `(X1, x1)` and `(X2, x2)` keeps both metrics
//! and sets `d(x, y) = max(d1(x, x1), r, d2(y, x2))` across. A sequence union
//! folds this: part `n + 1` is joined to everything before it at radius
//! `radii[n]`, measured through the basepoint of part `n`.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{r_components, Partition, UltrametricSpace};

/// A space with a distinguished point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointedSpace {
    space: UltrametricSpace,
    basepoint: usize,
}

impl PointedSpace {
    pub fn new(space: UltrametricSpace, basepoint: usize) -> Result<Self> {
        let space = space.with_basepoint(basepoint)?;
        Ok(Self { space, basepoint })
    }

    /// Uses the space's own basepoint, or its first point.
    pub fn from_space(space: UltrametricSpace) -> Self {
        let basepoint = space.basepoint().unwrap_or(0);
        Self::new(space, basepoint).expect("index 0 always exists")
    }

    pub fn space(&self) -> &UltrametricSpace {
        &self.space
    }

    pub fn into_space(self) -> UltrametricSpace {
        self.space
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }
}

/// Ordered parts and the radii joining them: `radii[i]` joins part `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnionSpec {
    parts: Vec<PointedSpace>,
    radii: Vec<u64>,
}

impl UnionSpec {
    pub fn new(parts: Vec<PointedSpace>, radii: Vec<u64>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptySpace);
        }
        if radii.len() + 1 != parts.len() {
            return Err(Error::Invalid(format!(
                "{} parts need {} radii, got {}",
                parts.len(),
                parts.len() - 1,
                radii.len()
            )));
        }
        if radii.contains(&0) {
            return Err(Error::NonPositiveRadius);
        }
        Ok(Self { parts, radii })
    }

    pub fn parts(&self) -> &[PointedSpace] {
        &self.parts
    }

    pub fn radii(&self) -> &[u64] {
        &self.radii
    }

    /// Partition of the union's points by part; parts occupy consecutive
    /// index ranges in order.
    pub fn partition(&self) -> Partition {
        let mut blocks = Vec::with_capacity(self.parts.len());
        let mut start = 0;
        for part in &self.parts {
            blocks.push((start..start + part.len()).collect());
            start += part.len();
        }
        Partition::new(blocks, start).expect("ranges tile the union")
    }

    /// Labels of the union, prefixing each with its part index when two
    /// parts share a label.
    fn union_labels(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let clash = self
            .parts
            .iter()
            .flat_map(|p| p.space.labels())
            .any(|l| !seen.insert(l.as_str()));
        self.parts
            .iter()
            .enumerate()
            .flat_map(|(i, p)| {
                p.space.labels().iter().map(move |l| {
                    if clash {
                        format!("{i}:{l}")
                    } else {
                        l.clone()
                    }
                })
            })
            .collect()
    }
}

/// The r-union of two pointed spaces; the result keeps `a`'s basepoint.
pub fn r_union(a: &PointedSpace, b: &PointedSpace, r: u64) -> Result<PointedSpace> {
    seq_union(&UnionSpec::new(vec![a.clone(), b.clone()], vec![r])?)
}

/// Folds the parts left to right: step `n` forms the `radii[n-1]`-union of the
/// space built so far, pointed at part `n-1`'s basepoint, with part `n`.
/// The result is pointed at the first part's basepoint.
pub fn seq_union(spec: &UnionSpec) -> Result<PointedSpace> {
    let labels = spec.union_labels();
    let total = labels.len();
    let mut dist = vec![0u64; total * total];

    let mut offset = 0;
    let mut anchor = 0;
    for (n, part) in spec.parts.iter().enumerate() {
        let space = &part.space;
        let len = space.len();
        for i in 0..len {
            for j in 0..len {
                dist[(offset + i) * total + offset + j] = space.dist(i, j);
            }
        }
        if n > 0 {
            let r = spec.radii[n - 1];
            let base = part.basepoint;
            for x in 0..offset {
                let to_anchor = dist[x * total + anchor];
                for y in 0..len {
                    let d = to_anchor.max(r).max(space.dist(y, base));
                    dist[x * total + offset + y] = d;
                    dist[(offset + y) * total + x] = d;
                }
            }
        }
        anchor = offset + part.basepoint;
        offset += len;
    }

    let first_base = spec.parts[0].basepoint;
    let space = UltrametricSpace::from_fn(labels, |i, j| dist[i * total + j]);
    PointedSpace::new(space, first_base)
}

/// Boundary set of one part at one scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundarySet {
    pub part: usize,
    /// Labels of the points of this part within `M` of another part.
    pub points: Vec<String>,
    pub size: usize,
    pub diameter: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScaleReport {
    pub scale: u64,
    pub boundary: Vec<BoundarySet>,
    pub nonempty: usize,
    /// Every bounded set meets finitely many parts; automatic for finite
    /// families.
    pub condition_2a: bool,
    /// Outside the union of boundary sets, points of different parts are
    /// farther apart than the scale (checked pair by pair).
    pub condition_2b: bool,
    pub boundary_diameter: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CduReport {
    /// Restriction of the metric to each part equals that part's own metric.
    pub condition_1: bool,
    pub scales: Vec<ScaleReport>,
    pub pass: bool,
}

/// Measures how `space`, split by `partition`, behaves as a coarse disjoint
/// union at each scale `M`: the least admissible boundary set of part `s` is
/// every point of `s` within `M` of some other part.
pub fn check_coarse_disjoint_union(
    space: &UltrametricSpace,
    partition: &Partition,
    scales: &[u64],
) -> Result<CduReport> {
    if partition.point_count() != space.len() {
        return Err(Error::PartitionMismatch(format!(
            "partition covers {} points, space has {}",
            partition.point_count(),
            space.len()
        )));
    }
    Ok(cdu_report(space, partition, scales, true))
}

/// Builds the sequence union of `spec` and checks it against its own parts,
/// including condition 1 (each part's metric is preserved).
pub fn check_union_spec(spec: &UnionSpec, scales: &[u64]) -> Result<CduReport> {
    let union = seq_union(spec)?;
    let partition = spec.partition();
    let condition_1 = spec.parts.iter().zip(partition.blocks()).all(|(part, block)| {
        block.iter().enumerate().all(|(a, &i)| {
            block
                .iter()
                .enumerate()
                .all(|(b, &j)| union.space.dist(i, j) == part.space.dist(a, b))
        })
    });
    Ok(cdu_report(union.space(), &partition, scales, condition_1))
}

fn cdu_report(
    space: &UltrametricSpace,
    partition: &Partition,
    scales: &[u64],
    condition_1: bool,
) -> CduReport {
    let n = space.len();
    // nearest point of another part, per point
    let mut escape = vec![u64::MAX; n];
    for i in 0..n {
        for j in 0..n {
            if partition.block_of(i) != partition.block_of(j) {
                escape[i] = escape[i].min(space.dist(i, j));
            }
        }
    }

    let scales = scales
        .iter()
        .map(|&m| {
            let inside: Vec<bool> = escape.iter().map(|&e| e <= m).collect();
            let boundary: Vec<BoundarySet> = partition
                .blocks()
                .iter()
                .enumerate()
                .map(|(s, block)| {
                    let pts: Vec<usize> = block.iter().copied().filter(|&i| inside[i]).collect();
                    BoundarySet {
                        part: s,
                        points: pts.iter().map(|&i| space.label(i).to_owned()).collect(),
                        size: pts.len(),
                        diameter: space.subset_diameter(&pts),
                    }
                })
                .collect();
            let mut separated = true;
            for i in 0..n {
                for j in (i + 1)..n {
                    if partition.block_of(i) != partition.block_of(j)
                        && !inside[i]
                        && !inside[j]
                        && space.dist(i, j) <= m
                    {
                        separated = false;
                    }
                }
            }
            let all: Vec<usize> = (0..n).filter(|&i| inside[i]).collect();
            ScaleReport {
                scale: m,
                nonempty: boundary.iter().filter(|b| b.size > 0).count(),
                boundary,
                condition_2a: true,
                condition_2b: separated,
                boundary_diameter: space.subset_diameter(&all),
                pass: separated,
            }
        })
        .collect::<Vec<_>>();

    CduReport {
        pass: condition_1 && scales.iter().all(|s| s.pass),
        condition_1,
        scales,
    }
}

/// Splits a space into the classes of `d(x, y) < m`, where `m` is its
/// diameter. Points in different classes sit at distance exactly `m`.
pub fn equivalence_split(space: &UltrametricSpace) -> (Partition, u64) {
    let m = space.diameter();
    if m == 0 {
        return (Partition::from_assignment(&vec![0; space.len()]), 0);
    }
    let classes = r_components(space, m).expect("m is positive");
    (classes, m)
}

/// The classes of [`equivalence_split`] as a sequence union at constant
/// radius `m`. Each class is pointed at its first point.
pub fn equivalence_union_spec(space: &UltrametricSpace) -> Result<UnionSpec> {
    let (classes, m) = equivalence_split(space);
    let parts = classes
        .blocks()
        .iter()
        .map(|b| PointedSpace::new(space.subspace(b), 0))
        .collect::<Result<Vec<_>>>()?;
    let radii = vec![m; parts.len() - 1];
    UnionSpec::new(parts, radii)
}

/// Splits a pointed space into a ball and spheres around its basepoint.
///
/// With radii `r1 < r2 < …`, part 1 is `{x : d(x, x0) ≤ r1}` and part `n` is
/// `{x : d(x, x0) = rn}`; the result joins part `n` at radius `rn`, so its
/// sequence union reproduces the input. Without radii, every positive
/// distance from the basepoint is used.
pub fn annulus_decomposition(ps: &PointedSpace, radii: Option<&[u64]>) -> Result<UnionSpec> {
    let space = ps.space();
    let x0 = ps.basepoint();
    let from_base = space.row(x0);

    let radii: Vec<u64> = match radii {
        Some(r) => {
            if r.is_empty() || r[0] == 0 || r.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::BadRadii(r.to_vec()));
            }
            r.to_vec()
        }
        None => {
            let mut r: Vec<u64> = from_base.iter().copied().filter(|&d| d > 0).collect();
            r.sort_unstable();
            r.dedup();
            r
        }
    };

    if radii.is_empty() {
        let part = ps.clone();
        return UnionSpec::new(vec![part], vec![]);
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); radii.len()];
    for (x, &d) in from_base.iter().enumerate() {
        let slot = if d <= radii[0] {
            Some(0)
        } else {
            radii.iter().position(|&r| r == d)
        };
        match slot {
            Some(s) => members[s].push(x),
            None => {
                return Err(Error::AnnulusHypothesis {
                    point: space.label(x).to_owned(),
                    distance: d,
                })
            }
        }
    }
    if members.iter().any(Vec::is_empty) {
        return Err(Error::BadRadii(radii));
    }

    let parts = members
        .iter()
        .enumerate()
        .map(|(n, pts)| {
            let sub = space.subspace(pts);
            let base = if n == 0 {
                pts.iter().position(|&p| p == x0).expect("x0 lies in the ball")
            } else {
                (0..pts.len())
                    .min_by(|&a, &b| sub.label(a).cmp(sub.label(b)))
                    .expect("nonempty")
            };
            PointedSpace::new(sub, base)
        })
        .collect::<Result<Vec<_>>>()?;
    UnionSpec::new(parts, radii[1..].to_vec())
}

/// Index in `space` of every point of `seq_union(spec)`, matched by label.
/// Only meaningful when the parts' labels were not prefixed.
pub fn union_point_map(spec: &UnionSpec, space: &UltrametricSpace) -> Option<Vec<usize>> {
    spec.parts
        .iter()
        .flat_map(|p| p.space.labels())
        .map(|l| space.index_of(l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{validate_ultrametric, verify_isometric_embedding};

    fn space(labels: &[&str], rows: Vec<Vec<u64>>) -> UltrametricSpace {
        UltrametricSpace::new(labels.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    fn pointed(labels: &[&str], rows: Vec<Vec<u64>>) -> PointedSpace {
        PointedSpace::new(space(labels, rows), 0).unwrap()
    }

    fn point(label: &str) -> PointedSpace {
        PointedSpace::from_space(UltrametricSpace::singleton(label))
    }

    #[test]
    fn r_union_uses_basepoint_formula() {
        let a = pointed(&["a0", "a1"], vec![vec![0, 2], vec![2, 0]]);
        let u = r_union(&a, &point("b0"), 5).unwrap();
        let s = u.space();
        assert_eq!(s.dist(0, 2), 5);
        assert_eq!(s.dist(1, 2), 5);
        assert_eq!(s.dist(0, 1), 2);
        assert_eq!(u.basepoint(), 0);
    }

    #[test]
    fn r_union_of_points() {
        let u = r_union(&point("p"), &point("q"), 1).unwrap();
        assert_eq!(u.space().rows(), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn r_union_far_points_dominate() {
        // d(a1, b1) = max(d(a1, a0), r, d(b1, b0)) = max(2, 2, 3)
        let a = pointed(&["a0", "a1"], vec![vec![0, 2], vec![2, 0]]);
        let b = pointed(&["b0", "b1"], vec![vec![0, 3], vec![3, 0]]);
        let u = r_union(&a, &b, 2).unwrap();
        let s = u.space();
        assert_eq!(s.dist(1, 3), 3);
        assert_eq!(s.dist(0, 2), 2);
        assert_eq!(s.dist(0, 3), 3);
        assert_eq!(s.dist(1, 2), 2);
        assert!(validate_ultrametric(s).ok);
    }

    #[test]
    fn r_union_rejects_zero_radius_and_prefixes_clashes() {
        assert!(matches!(
            r_union(&point("p"), &point("q"), 0),
            Err(Error::NonPositiveRadius)
        ));
        let u = r_union(&point("p"), &point("p"), 3).unwrap();
        assert_eq!(u.space().labels(), &["0:p", "1:p"]);
    }

    #[test]
    fn seq_union_folds() {
        let one = UnionSpec::new(vec![point("a")], vec![]).unwrap();
        assert_eq!(seq_union(&one).unwrap().len(), 1);

        let three =
            UnionSpec::new(vec![point("a"), point("b"), point("c")], vec![1, 2]).unwrap();
        let s = seq_union(&three).unwrap().into_space();
        assert_eq!((s.dist(0, 1), s.dist(0, 2), s.dist(1, 2)), (1, 2, 2));
    }

    #[test]
    fn seq_union_cross_distance_is_joining_radius() {
        let x2 = pointed(&["b0", "b1"], vec![vec![0, 1], vec![1, 0]]);
        let x3 = pointed(&["c0", "c1"], vec![vec![0, 2], vec![2, 0]]);
        let spec = UnionSpec::new(vec![point("a"), x2, x3], vec![2, 3]).unwrap();
        let s = seq_union(&spec).unwrap().into_space();
        for x in 0..3 {
            for y in 3..5 {
                assert_eq!(s.dist(x, y), 3);
            }
        }
        assert_eq!(s.dist(0, 1), 2);
        assert_eq!(s.dist(0, 2), 2);
    }

    #[test]
    fn cdu_boundary_sets() {
        let spec = UnionSpec::new(vec![point("a"), point("b")], vec![3]).unwrap();
        let report = check_union_spec(&spec, &[5, 2]).unwrap();
        assert!(report.pass && report.condition_1);
        let at5 = &report.scales[0];
        assert_eq!(at5.nonempty, 2);
        assert_eq!(at5.boundary[0].points, vec!["a".to_string()]);
        let at2 = &report.scales[1];
        assert_eq!(at2.nonempty, 0);
        assert_eq!(at2.boundary_diameter, 0);
    }

    #[test]
    fn cdu_rejects_partition_mismatch() {
        let s = space(&["a", "b"], vec![vec![0, 1], vec![1, 0]]);
        let p = Partition::new(vec![vec![0]], 1).unwrap();
        assert!(matches!(
            check_coarse_disjoint_union(&s, &p, &[1]),
            Err(Error::PartitionMismatch(_))
        ));
    }

    #[test]
    fn equivalence_split_classes() {
        let s = space(
            &["p", "q", "r"],
            vec![vec![0, 1, 3], vec![1, 0, 3], vec![3, 3, 0]],
        );
        let (classes, m) = equivalence_split(&s);
        assert_eq!(m, 3);
        assert_eq!(classes.blocks(), &[vec![0, 1], vec![2]]);

        let flat = space(
            &["p", "q", "r"],
            vec![vec![0, 2, 2], vec![2, 0, 2], vec![2, 2, 0]],
        );
        assert_eq!(equivalence_split(&flat).0.len(), 3);

        let (one, m) = equivalence_split(&UltrametricSpace::singleton("x"));
        assert_eq!((one.len(), m), (1, 0));
    }

    #[test]
    fn annulus_decomposition_by_hand() {
        let s = space(
            &["x0", "a", "b"],
            vec![vec![0, 1, 4], vec![1, 0, 4], vec![4, 4, 0]],
        );
        let ps = PointedSpace::new(s.clone(), 0).unwrap();
        let spec = annulus_decomposition(&ps, None).unwrap();
        assert_eq!(spec.parts().len(), 2);
        assert_eq!(spec.parts()[0].space().labels(), &["x0", "a"]);
        assert_eq!(spec.parts()[1].space().labels(), &["b"]);
        assert_eq!(spec.radii(), &[4]);
        let rebuilt = seq_union(&spec).unwrap();
        let map: Vec<usize> = union_point_map(&spec, &s).unwrap();
        // map sends union index -> original index; invert for src = original
        let mut inverse = vec![0; map.len()];
        for (u, &o) in map.iter().enumerate() {
            inverse[o] = u;
        }
        assert!(verify_isometric_embedding(&inverse, &s, rebuilt.space())
            .unwrap()
            .ok);
    }

    #[test]
    fn annulus_decomposition_errors() {
        let s = space(
            &["x0", "a", "b"],
            vec![vec![0, 3, 4], vec![3, 0, 4], vec![4, 4, 0]],
        );
        let ps = PointedSpace::new(s, 0).unwrap();
        match annulus_decomposition(&ps, Some(&[1, 4])) {
            Err(Error::AnnulusHypothesis { point, distance }) => {
                assert_eq!(point, "a");
                assert_eq!(distance, 3);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            annulus_decomposition(&ps, Some(&[4, 3])),
            Err(Error::BadRadii(_))
        ));
        let single = PointedSpace::from_space(UltrametricSpace::singleton("x"));
        assert_eq!(annulus_decomposition(&single, None).unwrap().parts().len(), 1);
    }
}
