//! Bounded universal ultrametric spaces.
//!
//! A block over `D = {0 = d0 < d1 < … < dn}` with widths `w1, …, wn` is built
//! recursively: the level-0 block is a point, and the level-`j` block joins
//! `wj` copies of the level-`(j-1)` block at constant radius `dj`. Points are
//! addressed by one digit per level, highest level first, and two points sit
//! at distance `dj` where `j` is the highest level at which their digits
//! differ. With every width equal to `m` this is FU(m, D); wider blocks are
//! truncations of CU(D).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{
    check_pairs, distance_set, DistanceMismatch, DistanceSet, IsometryReport, UltrametricSpace,
};
use crate::unions::{seq_union, PointedSpace, UnionSpec};

/// Distance levels and the number of copies joined at each nonzero level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockSpec {
    dset: DistanceSet,
    widths: Vec<usize>,
}

impl BlockSpec {
    /// `widths[j - 1]` is the width at level `dset.levels()[j - 1]`.
    pub fn new(dset: DistanceSet, widths: Vec<usize>) -> Result<Self> {
        if widths.len() + 1 != dset.len() {
            return Err(Error::Invalid(format!(
                "distance set {dset} has {} nonzero levels but {} widths were given",
                dset.len() - 1,
                widths.len()
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Invalid("widths must be at least 1".into()));
        }
        Ok(Self { dset, widths })
    }

    /// FU(m, D): width `m` at every level.
    pub fn uniform(dset: DistanceSet, m: usize) -> Result<Self> {
        let n = dset.len() - 1;
        Self::new(dset, vec![m; n])
    }

    pub fn dset(&self) -> &DistanceSet {
        &self.dset
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Number of nonzero levels (the address length).
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    /// The block one level down: top level and its width removed.
    pub fn without_top(&self) -> BlockSpec {
        let mut widths = self.widths.clone();
        widths.pop();
        BlockSpec {
            dset: self.dset.without_max(),
            widths,
        }
    }

    /// Largest distance actually realized.
    pub fn diameter(&self) -> u64 {
        self.widths
            .iter()
            .rposition(|&w| w > 1)
            .map_or(0, |j| self.dset.levels()[j])
    }

    fn check(&self, address: &Address) -> Result<()> {
        if address.0.len() != self.depth() {
            return Err(Error::AddressLength {
                expected: self.depth(),
                found: address.0.len(),
            });
        }
        for (position, &digit) in address.0.iter().enumerate() {
            let width = self.widths[self.depth() - 1 - position];
            if digit == 0 || digit > width {
                return Err(Error::AddressDigit {
                    position,
                    digit,
                    width,
                });
            }
        }
        Ok(())
    }

    /// Address of the point at `index` in [`build_block`]'s order.
    pub fn address_at(&self, mut index: usize) -> Address {
        let mut digits = vec![0; self.depth()];
        for (position, digit) in digits.iter_mut().enumerate().rev() {
            let width = self.widths[self.depth() - 1 - position];
            *digit = index % width + 1;
            index /= width;
        }
        Address(digits)
    }

    /// Inverse of [`BlockSpec::address_at`].
    pub fn index_of(&self, address: &Address) -> Result<usize> {
        self.check(address)?;
        Ok(address.0.iter().enumerate().fold(0, |acc, (position, &d)| {
            acc * self.widths[self.depth() - 1 - position] + (d - 1)
        }))
    }
}

/// One digit per nonzero level, highest level first, each in `1..=width`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(pub Vec<usize>);

impl Address {
    /// The all-ones address, the basepoint of every block.
    pub fn origin(depth: usize) -> Self {
        Address(vec![1; depth])
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// Level of the highest differing digit, or 0 for equal addresses.
pub fn address_distance(u: &Address, v: &Address, spec: &BlockSpec) -> Result<u64> {
    spec.check(u)?;
    spec.check(v)?;
    Ok(address_distance_unchecked(u, v, spec))
}

pub(crate) fn address_distance_unchecked(u: &Address, v: &Address, spec: &BlockSpec) -> u64 {
    match u.0.iter().zip(&v.0).position(|(a, b)| a != b) {
        None => 0,
        Some(position) => spec.dset.values()[spec.depth() - position],
    }
}

/// Product of the widths.
pub fn block_cardinality(spec: &BlockSpec) -> u128 {
    spec.widths.iter().map(|&w| w as u128).product()
}

/// Materializes every address with the closed-form metric, in lexicographic
/// address order. The basepoint is the all-ones address.
pub fn build_block(spec: &BlockSpec, max_points: usize) -> Result<UltrametricSpace> {
    let size = block_cardinality(spec);
    if size > max_points as u128 {
        return Err(Error::GuardExceeded {
            what: "block materialization",
            size,
            limit: max_points as u128,
        });
    }
    let addresses: Vec<Address> = (0..size as usize).map(|i| spec.address_at(i)).collect();
    let labels = addresses.iter().map(Address::to_string).collect();
    UltrametricSpace::from_fn(labels, |i, j| {
        address_distance_unchecked(&addresses[i], &addresses[j], spec)
    })
    .with_basepoint(0)
}

/// Builds the block by literal recursion: the top level joins `w` copies of
/// the block below with [`seq_union`] at constant radius equal to the top
/// distance. Labels match [`build_block`].
pub fn build_block_by_unions(spec: &BlockSpec, max_points: usize) -> Result<UltrametricSpace> {
    let size = block_cardinality(spec);
    if size > max_points as u128 {
        return Err(Error::GuardExceeded {
            what: "block materialization",
            size,
            limit: max_points as u128,
        });
    }
    build_recursive(spec)
}

fn build_recursive(spec: &BlockSpec) -> Result<UltrametricSpace> {
    if spec.depth() == 0 {
        return UltrametricSpace::singleton(Address(vec![]).to_string()).with_basepoint(0);
    }
    let below = build_recursive(&spec.without_top())?;
    let width = spec.widths[spec.depth() - 1];
    let copies = (1..=width)
        .map(|copy| {
            let labels = below
                .labels()
                .iter()
                .map(|l| {
                    let inner = &l[1..l.len() - 1];
                    if inner.is_empty() {
                        format!("[{copy}]")
                    } else {
                        format!("[{copy},{inner}]")
                    }
                })
                .collect();
            PointedSpace::new(below.relabeled(labels)?, 0)
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = UnionSpec::new(copies, vec![spec.dset.max(); width - 1])?;
    Ok(seq_union(&spec)?.into_space())
}

/// Addresses assigned to the points of a space, plus the check that the
/// assignment is isometric under the address metric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockEmbedding {
    pub addresses: Vec<Address>,
    pub report: IsometryReport,
}

impl BlockEmbedding {
    /// Index of each image point in [`build_block`]'s order.
    pub fn indices(&self, spec: &BlockSpec) -> Result<Vec<usize>> {
        self.addresses.iter().map(|a| spec.index_of(a)).collect()
    }
}

/// Largest number of classes met at each nonzero level of `dset` (ascending)
/// when `x` is split recursively by the relation `d < level`. A block hosts
/// `x` exactly when each width is at least the matching entry.
pub fn fanout_profile(x: &UltrametricSpace, dset: &DistanceSet) -> Result<Vec<usize>> {
    check_distances(x, dset)?;
    let mut profile = vec![1; dset.len() - 1];
    let all: Vec<usize> = (0..x.len()).collect();
    walk(x, dset, &all, dset.len() - 1, &mut |level, classes| {
        profile[level - 1] = profile[level - 1].max(classes.len());
    });
    Ok(profile)
}

fn check_distances(x: &UltrametricSpace, dset: &DistanceSet) -> Result<()> {
    let own = distance_set(x);
    match own.values().iter().find(|&&v| !dset.contains(v)) {
        None => Ok(()),
        Some(&value) => {
            let n = x.len();
            let (a, b) = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .find(|&(i, j)| x.dist(i, j) == value)
                .expect("value came from the matrix");
            Err(Error::DistanceNotInSet {
                value,
                a: x.label(a).to_owned(),
                b: x.label(b).to_owned(),
            })
        }
    }
}

/// Splits `points` into classes of `d < dset[level]`, ordered by least
/// label, reports them, and recurses one level down into each.
fn walk(
    x: &UltrametricSpace,
    dset: &DistanceSet,
    points: &[usize],
    level: usize,
    visit: &mut impl FnMut(usize, &[Vec<usize>]),
) {
    if level == 0 {
        return;
    }
    let cut = dset.values()[level];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &p in points {
        match classes.iter_mut().find(|c| x.dist(c[0], p) < cut) {
            Some(class) => class.push(p),
            None => classes.push(vec![p]),
        }
    }
    let least = |c: &Vec<usize>| c.iter().map(|&p| x.label(p)).min().map(str::to_owned);
    classes.sort_by_cached_key(least);
    visit(level, &classes);
    for class in &classes {
        walk(x, dset, class, level - 1, visit);
    }
}

/// Isometric embedding of a D-ultrametric space into a block over D.
///
/// At each level the current points split into classes of `d < level`; the
/// classes, ordered by least label, take digits 1, 2, … at that level. A class
/// that does not split further keeps digit 1 below.
pub fn embed_into_block(x: &UltrametricSpace, spec: &BlockSpec) -> Result<BlockEmbedding> {
    let profile = fanout_profile(x, &spec.dset)?;
    for (j, (&classes, &width)) in profile.iter().zip(&spec.widths).enumerate() {
        if classes > width {
            return Err(Error::WidthExhausted {
                level: spec.dset.levels()[j],
                classes,
                width,
            });
        }
    }

    let depth = spec.depth();
    let mut digits = vec![vec![1usize; depth]; x.len()];
    let all: Vec<usize> = (0..x.len()).collect();
    walk(x, &spec.dset, &all, depth, &mut |level, classes| {
        for (c, class) in classes.iter().enumerate() {
            for &p in class {
                digits[p][depth - level] = c + 1;
            }
        }
    });
    let addresses: Vec<Address> = digits.into_iter().map(Address).collect();
    let report = check_pairs(x.len(), |i, j| {
        let target = address_distance_unchecked(&addresses[i], &addresses[j], spec);
        (target != x.dist(i, j)).then(|| DistanceMismatch {
            a: x.label(i).to_owned(),
            b: x.label(j).to_owned(),
            source: x.dist(i, j),
            target,
        })
    });
    Ok(BlockEmbedding { addresses, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{
        find_isometric_embedding, validate_ultrametric, verify_isometric_embedding, SearchLimits,
    };

    fn dset(values: &[u64]) -> DistanceSet {
        DistanceSet::new(values.to_vec()).unwrap()
    }

    #[test]
    fn address_metric_by_hand() {
        let spec = BlockSpec::new(dset(&[0, 2, 5]), vec![2, 2]).unwrap();
        let a = |d: &[usize]| Address(d.to_vec());
        assert_eq!(address_distance(&a(&[1, 1]), &a(&[1, 1]), &spec).unwrap(), 0);
        assert_eq!(address_distance(&a(&[1, 1]), &a(&[2, 1]), &spec).unwrap(), 5);
        assert_eq!(address_distance(&a(&[1, 1]), &a(&[1, 2]), &spec).unwrap(), 2);
        assert!(matches!(
            address_distance(&a(&[1]), &a(&[1, 1]), &spec),
            Err(Error::AddressLength { .. })
        ));
        assert!(matches!(
            address_distance(&a(&[3, 1]), &a(&[1, 1]), &spec),
            Err(Error::AddressDigit { .. })
        ));
    }

    #[test]
    fn address_metric_matches_recursive_union() {
        // oracle: the literal two-step union, read off directly
        let spec = BlockSpec::new(dset(&[0, 2, 5]), vec![2, 2]).unwrap();
        let rec = build_block_by_unions(&spec, 64).unwrap();
        let i = |l: &str| rec.index_of(l).unwrap();
        assert_eq!(rec.dist(i("[1,1]"), i("[2,1]")), 5);
        assert_eq!(rec.dist(i("[1,1]"), i("[1,2]")), 2);
    }

    #[test]
    fn small_blocks() {
        let point = build_block(&BlockSpec::new(DistanceSet::zero(), vec![]).unwrap(), 8).unwrap();
        assert_eq!(point.len(), 1);

        let simplex = build_block(&BlockSpec::uniform(dset(&[0, 1]), 3).unwrap(), 8).unwrap();
        assert_eq!(simplex.rows(), vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);

        let four = build_block(&BlockSpec::uniform(dset(&[0, 1, 2]), 2).unwrap(), 8).unwrap();
        let mut pairs: Vec<u64> = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .map(|(i, j)| four.dist(i, j))
            .collect();
        pairs.sort_unstable();
        assert_eq!(pairs, vec![1, 1, 2, 2, 2, 2]);
        assert!(validate_ultrametric(&four).ok);
    }

    #[test]
    fn cardinality() {
        let card = |values: &[u64], m| block_cardinality(&BlockSpec::uniform(dset(values), m).unwrap());
        assert_eq!(card(&[0], 5), 1);
        assert_eq!(card(&[0, 1, 2], 2), 4);
        assert_eq!(card(&[0, 1, 2, 3], 3), 27);
        let spec = BlockSpec::uniform(dset(&[0, 1, 2, 3]), 3).unwrap();
        assert_eq!(build_block(&spec, 100).unwrap().len(), 27);
        assert!(matches!(
            build_block(&spec, 26),
            Err(Error::GuardExceeded { size: 27, .. })
        ));
    }

    #[test]
    fn address_index_round_trip() {
        let spec = BlockSpec::new(dset(&[0, 1, 4, 6]), vec![3, 1, 2]).unwrap();
        for i in 0..block_cardinality(&spec) as usize {
            assert_eq!(spec.index_of(&spec.address_at(i)).unwrap(), i);
        }
        assert_eq!(spec.diameter(), 6);
        assert_eq!(
            BlockSpec::new(dset(&[0, 1, 4]), vec![3, 1]).unwrap().diameter(),
            1
        );
    }

    #[test]
    fn embeds_three_points() {
        let x = UltrametricSpace::new(
            vec!["p".into(), "q".into(), "r".into()],
            vec![vec![0, 1, 3], vec![1, 0, 3], vec![3, 3, 0]],
        )
        .unwrap();
        let spec = BlockSpec::uniform(dset(&[0, 1, 3]), 3).unwrap();
        let emb = embed_into_block(&x, &spec).unwrap();
        assert!(emb.report.ok);
        assert_eq!(
            emb.addresses,
            vec![Address(vec![1, 1]), Address(vec![1, 2]), Address(vec![2, 1])]
        );
        let block = build_block(&spec, 100).unwrap();
        let map = emb.indices(&spec).unwrap();
        assert!(verify_isometric_embedding(&map, &x, &block).unwrap().ok);
        assert!(find_isometric_embedding(&x, &block, SearchLimits::default())
            .unwrap()
            .is_some());
    }

    #[test]
    fn embedding_errors() {
        let x = UltrametricSpace::new(
            vec!["p".into(), "q".into(), "r".into()],
            vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]],
        )
        .unwrap();
        let narrow = BlockSpec::uniform(dset(&[0, 1]), 2).unwrap();
        assert!(matches!(
            embed_into_block(&x, &narrow),
            Err(Error::WidthExhausted {
                level: 1,
                classes: 3,
                width: 2
            })
        ));
        let wrong = BlockSpec::uniform(dset(&[0, 2]), 3).unwrap();
        assert!(matches!(
            embed_into_block(&x, &wrong),
            Err(Error::DistanceNotInSet { value: 1, .. })
        ));
    }
}
