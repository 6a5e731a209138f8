//! Finite metric and ultrametric spaces stored as dense distance matrices.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// A finite, strictly increasing set of non-negative integer distances
/// beginning with 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DistanceSet {
    values: Vec<u64>,
}

impl DistanceSet {
    /// Builds a distance set from arbitrary values. Duplicates are merged and
    /// the values sorted; 0 must be present.
    pub fn new(mut values: Vec<u64>) -> Result<Self> {
        values.sort_unstable();
        values.dedup();
        if values.first() != Some(&0) {
            return Err(Error::InvalidDistanceSet {
                values,
                reason: "must contain 0",
            });
        }
        Ok(Self { values })
    }

    /// The trivial set `{0}`.
    pub fn zero() -> Self {
        Self { values: vec![0] }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Nonzero values in increasing order.
    pub fn levels(&self) -> &[u64] {
        &self.values[1..]
    }

    /// Number of elements including 0.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max(&self) -> u64 {
        *self.values.last().expect("distance set always holds 0")
    }

    pub fn contains(&self, value: u64) -> bool {
        self.values.binary_search(&value).is_ok()
    }

    pub fn is_subset(&self, other: &DistanceSet) -> bool {
        self.values.iter().all(|&v| other.contains(v))
    }

    pub fn is_proper_subset(&self, other: &DistanceSet) -> bool {
        self.len() < other.len() && self.is_subset(other)
    }

    /// The set with its largest element removed (`{0}` stays `{0}`).
    pub fn without_max(&self) -> DistanceSet {
        let mut values = self.values.clone();
        if values.len() > 1 {
            values.pop();
        }
        DistanceSet { values }
    }

    /// Position of `value` among the nonzero levels, 1-based.
    pub fn level_index(&self, value: u64) -> Option<usize> {
        self.values.binary_search(&value).ok().filter(|&i| i > 0)
    }
}

impl fmt::Display for DistanceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Disjoint nonempty blocks of point indices covering `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, len: usize) -> Result<Self> {
        let mut block_of = vec![usize::MAX; len];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::PartitionMismatch(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= len {
                    return Err(Error::PartitionMismatch(format!(
                        "block {b} names point {i}, space has {len} points"
                    )));
                }
                if block_of[i] != usize::MAX {
                    return Err(Error::PartitionMismatch(format!(
                        "point {i} appears in blocks {} and {b}",
                        block_of[i]
                    )));
                }
                block_of[i] = b;
            }
        }
        if let Some(i) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::PartitionMismatch(format!(
                "point {i} is not covered by any block"
            )));
        }
        Ok(Self { blocks, block_of })
    }

    /// Builds a partition from a component id per point; blocks are ordered by
    /// their smallest member.
    pub fn from_assignment(ids: &[usize]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut slot = std::collections::HashMap::new();
        for (i, &id) in ids.iter().enumerate() {
            let b = *slot.entry(id).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(i);
        }
        let mut block_of = vec![0; ids.len()];
        for (b, block) in blocks.iter().enumerate() {
            for &i in block {
                block_of[i] = b;
            }
        }
        Self { blocks, block_of }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, point: usize) -> usize {
        self.block_of[point]
    }

    pub fn point_count(&self) -> usize {
        self.block_of.len()
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::EmptySpace);
    }
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(Error::DuplicateLabel(label.clone()));
        }
    }
    Ok(())
}

fn check_square<T>(rows: &[Vec<T>], n: usize) -> Result<()> {
    if rows.len() != n {
        return Err(Error::Structure(format!(
            "dist has {} rows but there are {n} points",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Structure(format!(
                "dist[{i}] has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    Ok(())
}

/// A finite space with non-negative integer distances.
///
/// Construction only enforces structure (nonempty, unique labels, square
/// matrix). The ultrametric axioms are checked by
/// [`validate_ultrametric`](crate::metric::validate_ultrametric) or by
/// [`UltrametricSpace::new`], which rejects violations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UltrametricSpace {
    labels: Vec<String>,
    dist: Vec<u64>,
    basepoint: Option<usize>,
    declared: Option<DistanceSet>,
}

impl UltrametricSpace {
    /// Structure-checked and axiom-checked constructor.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<u64>>) -> Result<Self> {
        let space = Self::from_rows(labels, rows)?;
        let report = super::validate_ultrametric(&space);
        if !report.ok {
            return Err(Error::Invalid(format!(
                "not an ultrametric: {}",
                report.summary()
            )));
        }
        Ok(space)
    }

    /// Structure-only constructor; the result may violate the axioms.
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<u64>>) -> Result<Self> {
        check_labels(&labels)?;
        let n = labels.len();
        check_square(&rows, n)?;
        Ok(Self {
            labels,
            dist: rows.into_iter().flatten().collect(),
            basepoint: None,
            declared: None,
        })
    }

    /// Trusted builder for spaces assembled by this crate.
    pub(crate) fn from_fn(labels: Vec<String>, f: impl Fn(usize, usize) -> u64) -> Self {
        let n = labels.len();
        debug_assert!(n > 0);
        let mut dist = vec![0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self {
            labels,
            dist,
            basepoint: None,
            declared: None,
        }
    }

    /// The one-point space.
    pub fn singleton(label: impl Into<String>) -> Self {
        Self::from_fn(vec![label.into()], |_, _| 0)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> u64 {
        self.dist[i * self.labels.len() + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.dist
            .chunks(self.labels.len())
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn basepoint(&self) -> Option<usize> {
        self.basepoint
    }

    pub fn with_basepoint(mut self, basepoint: usize) -> Result<Self> {
        if basepoint >= self.len() {
            return Err(Error::Structure(format!(
                "basepoint {basepoint} out of range for {} points",
                self.len()
            )));
        }
        self.basepoint = Some(basepoint);
        Ok(self)
    }

    /// The distance set this space was declared against, if any.
    pub fn declared_dset(&self) -> Option<&DistanceSet> {
        self.declared.as_ref()
    }

    /// Declares the space a D-space; every off-diagonal entry must lie in `dset`.
    pub fn with_declared_dset(mut self, dset: DistanceSet) -> Result<Self> {
        let n = self.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist(i, j);
                if !dset.contains(d) {
                    return Err(Error::DistanceNotInSet {
                        value: d,
                        a: self.labels[i].clone(),
                        b: self.labels[j].clone(),
                    });
                }
            }
        }
        self.declared = Some(dset);
        Ok(self)
    }

    /// Records `dset` without checking entries; [`validate_ultrametric`]
    /// reports any that fall outside.
    ///
    /// [`validate_ultrametric`]: crate::metric::validate_ultrametric
    pub(crate) fn with_declared_dset_unchecked(mut self, dset: DistanceSet) -> Self {
        self.declared = Some(dset);
        self
    }

    pub fn diameter(&self) -> u64 {
        self.dist.iter().copied().max().unwrap_or(0)
    }

    /// Diameter of a subset of points.
    pub fn subset_diameter(&self, points: &[usize]) -> u64 {
        let mut best = 0;
        for (a, &i) in points.iter().enumerate() {
            for &j in &points[a + 1..] {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    /// The restriction to `points`, in the given order. The basepoint carries
    /// over when it is among them.
    pub fn subspace(&self, points: &[usize]) -> UltrametricSpace {
        let labels = points.iter().map(|&i| self.labels[i].clone()).collect();
        let mut sub = Self::from_fn(labels, |a, b| self.dist(points[a], points[b]));
        sub.basepoint = self
            .basepoint
            .and_then(|b| points.iter().position(|&p| p == b));
        sub
    }

    /// Same distances, new labels.
    pub fn relabeled(&self, labels: Vec<String>) -> Result<Self> {
        check_labels(&labels)?;
        if labels.len() != self.len() {
            return Err(Error::Structure(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        Ok(Self {
            labels,
            ..self.clone()
        })
    }

    /// Distances from point `i` to every point, in index order.
    pub fn row(&self, i: usize) -> &[u64] {
        let n = self.len();
        &self.dist[i * n..(i + 1) * n]
    }
}

/// A finite metric space with non-negative real distances; the input side of
/// [`ultrametrize`](crate::metric::ultrametrize).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
}

/// Relative slack for the triangle inequality on float input.
const TRIANGLE_SLACK: f64 = 1e-9;

impl MetricSpace {
    /// Validates structure and the metric axioms.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_labels(&labels)?;
        let n = labels.len();
        check_square(&rows, n)?;
        for (i, row) in rows.iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() {
                    return Err(Error::InvalidDistance {
                        value: d,
                        reason: "not finite",
                    });
                }
                if d < 0.0 {
                    return Err(Error::InvalidDistance {
                        value: d,
                        reason: "negative",
                    });
                }
                if i == j && d != 0.0 {
                    return Err(Error::InvalidDistance {
                        value: d,
                        reason: "nonzero diagonal entry",
                    });
                }
                if i != j && d == 0.0 {
                    return Err(Error::InvalidDistance {
                        value: d,
                        reason: "distinct points at distance 0",
                    });
                }
                if d != rows[j][i] {
                    return Err(Error::Structure(format!(
                        "dist[{i}][{j}] = {d} but dist[{j}][{i}] = {}",
                        rows[j][i]
                    )));
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let lhs = rows[x][z];
                    let rhs = rows[x][y] + rows[y][z];
                    if lhs > rhs * (1.0 + TRIANGLE_SLACK) {
                        return Err(Error::Invalid(format!(
                            "triangle inequality fails at ({}, {}, {})",
                            labels[x], labels[y], labels[z]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            labels,
            dist: rows.into_iter().flatten().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.labels.len() + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

impl From<&UltrametricSpace> for MetricSpace {
    fn from(space: &UltrametricSpace) -> Self {
        Self {
            labels: space.labels.clone(),
            dist: space.dist.iter().map(|&d| d as f64).collect(),
        }
    }
}
