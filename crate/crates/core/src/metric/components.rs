//! Scale components and the finite-scale asymptotic-dimension-zero witness.

use std::collections::BTreeMap;

use super::space::{DistanceSet, Partition, UltrametricSpace};
use super::union_find::UnionFind;
use crate::error::{Error, Result};

/// `{0}` together with every off-diagonal distance: the least D for which
/// `space` is a D-space.
pub fn distance_set(space: &UltrametricSpace) -> DistanceSet {
    let n = space.len();
    let mut values = vec![0];
    for i in 0..n {
        for j in (i + 1)..n {
            values.push(space.dist(i, j));
        }
    }
    DistanceSet::new(values).expect("0 was pushed")
}

/// Maximal r-connected subsets, where consecutive chain points sit at
/// distance strictly below `r`.
pub fn r_components(space: &UltrametricSpace, r: u64) -> Result<Partition> {
    if r == 0 {
        return Err(Error::NonPositiveRadius);
    }
    let n = space.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if space.dist(i, j) < r {
                uf.union(i, j);
            }
        }
    }
    Ok(Partition::from_assignment(&uf.roots()))
}

/// For each scale, the largest diameter of an r-component. On an ultrametric
/// space every entry is strictly below its scale.
pub fn asdim0_witness(space: &UltrametricSpace, scales: &[u64]) -> Result<BTreeMap<u64, u64>> {
    let mut table = BTreeMap::new();
    for &r in scales {
        let parts = r_components(space, r)?;
        let widest = parts
            .blocks()
            .iter()
            .map(|b| space.subset_diameter(b))
            .max()
            .unwrap_or(0);
        table.insert(r, widest);
    }
    Ok(table)
}
