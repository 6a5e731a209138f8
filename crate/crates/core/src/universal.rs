//! Truncations of the universal spaces CU and PU and the coarse-embedding
//! pipelines into them.
//!
//! Both spaces are sequence unions of bounded blocks along an enumeration of
//! the finite distance sets containing 0. CU joins one CU(D) block per set;
//! PU joins one FU(m, D) block per pair `(m, D)`. Points of a truncation are
//! addressed as `(block, address)` and distances are computed in closed form,
//! so embeddings never need to materialize the target.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::blocks::{
    address_distance_unchecked, block_cardinality, build_block, embed_into_block,
    fanout_profile, Address, BlockSpec,
};
use crate::error::{Error, Result, TruncationRequirement};
use crate::metric::{distance_set, DistanceSet, IsometryReport, Partition, UltrametricSpace};
use crate::unions::{annulus_decomposition, seq_union, PointedSpace, UnionSpec};

/// Canonical enumeration of finite subsets of ℕ containing 0: by maximum,
/// then by size, then lexicographically.
#[derive(Clone, Debug, Default)]
pub struct DsetEnumerator {
    max: u64,
    pending: std::vec::IntoIter<DistanceSet>,
}

impl DsetEnumerator {
    pub fn new() -> Self {
        Self::default()
    }

    fn sets_with_max(max: u64) -> Vec<DistanceSet> {
        if max == 0 {
            return vec![DistanceSet::zero()];
        }
        let inner: Vec<u64> = (1..max).collect();
        let mut out = Vec::new();
        for size in 0..=inner.len() {
            for combo in combinations(&inner, size) {
                let mut values = Vec::with_capacity(size + 2);
                values.push(0);
                values.extend(combo);
                values.push(max);
                out.push(DistanceSet::new(values).expect("contains 0"));
            }
        }
        out
    }
}

impl Iterator for DsetEnumerator {
    type Item = DistanceSet;

    fn next(&mut self) -> Option<DistanceSet> {
        loop {
            if let Some(d) = self.pending.next() {
                return Some(d);
            }
            self.pending = Self::sets_with_max(self.max).into_iter();
            self.max += 1;
        }
    }
}

/// Size-`k` subsets of `items` in lexicographic order.
fn combinations(items: &[u64], k: usize) -> Vec<Vec<u64>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        if items.len() - i < k {
            break;
        }
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DsetEnumeration {
    pub sets: Vec<Vec<u64>>,
    pub radii: Vec<u64>,
}

impl DsetEnumeration {
    pub fn count(&self) -> usize {
        self.sets.len()
    }
}

/// The first `n` distance sets and their maxima.
pub fn enumerate_dsets(n: usize) -> DsetEnumeration {
    let sets: Vec<DistanceSet> = DsetEnumerator::new().take(n).collect();
    DsetEnumeration {
        radii: sets.iter().map(DistanceSet::max).collect(),
        sets: sets.iter().map(|d| d.values().to_vec()).collect(),
    }
}

/// Pairs `(m, n)` with `m, n ≥ 1` along anti-diagonals `m + n = 2, 3, …`,
/// smaller `m` first. `n` is a 1-based position in [`DsetEnumerator`].
#[derive(Clone, Debug, Default)]
pub struct PairEnumerator {
    diagonal: usize,
    m: usize,
    dsets: Vec<DistanceSet>,
    source: DsetEnumerator,
}

impl PairEnumerator {
    pub fn new() -> Self {
        Self {
            diagonal: 2,
            m: 1,
            ..Self::default()
        }
    }
}

impl Iterator for PairEnumerator {
    /// `(m, n, D_n)`
    type Item = (usize, usize, DistanceSet);

    fn next(&mut self) -> Option<Self::Item> {
        if self.m >= self.diagonal {
            self.diagonal += 1;
            self.m = 1;
        }
        let (m, n) = (self.m, self.diagonal - self.m);
        self.m += 1;
        while self.dsets.len() < n {
            let next = self.source.next().expect("enumeration is infinite");
            self.dsets.push(next);
        }
        Some((m, n, self.dsets[n - 1].clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UniversalKind {
    Cu,
    Pu,
}

/// A truncated universal space: its blocks and the radius joining each block
/// after the first (`radii[i]` joins block `i + 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniversalSpec {
    kind: UniversalKind,
    blocks: Vec<BlockSpec>,
    radii: Vec<u64>,
    /// `(m, n)` per block for PU.
    pairs: Vec<(usize, usize)>,
}

impl UniversalSpec {
    /// The first `n` CU(D_i) blocks at width `width`. Block `i + 1` is joined at
    /// `max(1, max(D_{i+1}))`, which keeps radii positive and nondecreasing.
    pub fn cu(n: usize, width: usize) -> Result<Self> {
        if n == 0 || width == 0 {
            return Err(Error::Invalid("CU truncation needs blocks ≥ 1, width ≥ 1".into()));
        }
        let blocks = DsetEnumerator::new()
            .take(n)
            .map(|d| BlockSpec::uniform(d, width))
            .collect::<Result<Vec<_>>>()?;
        let radii = blocks[1..].iter().map(|b| b.dset().max().max(1)).collect();
        Ok(Self {
            kind: UniversalKind::Cu,
            blocks,
            radii,
            pairs: Vec::new(),
        })
    }

    /// The first `n` FU(m, D_n) blocks along [`PairEnumerator`], joined at
    /// `r_i = i + Σ_{j ≤ i} diam(Y_j)`.
    pub fn pu(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("PU truncation needs blocks ≥ 1".into()));
        }
        let mut blocks = Vec::with_capacity(n);
        let mut pairs = Vec::with_capacity(n);
        for (m, idx, d) in PairEnumerator::new().take(n) {
            blocks.push(BlockSpec::uniform(d, m)?);
            pairs.push((m, idx));
        }
        Ok(Self {
            kind: UniversalKind::Pu,
            radii: pu_radii(&blocks),
            blocks,
            pairs,
        })
    }

    pub fn kind(&self) -> UniversalKind {
        self.kind
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn radii(&self) -> &[u64] {
        &self.radii
    }

    /// `(m, n)` of each PU block; empty for CU.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn cardinality(&self) -> u128 {
        self.blocks.iter().map(block_cardinality).sum()
    }

    /// Radii never decrease and each dominates the diameter of the block it
    /// joins; under these conditions points of blocks `a < b` sit at
    /// distance `radii[b - 1]`.
    pub fn has_exact_cross_distances(&self) -> bool {
        self.radii.windows(2).all(|w| w[0] <= w[1])
            && self
                .radii
                .iter()
                .zip(&self.blocks[1..])
                .all(|(&r, b)| r >= b.diameter())
    }

    /// Closed-form distance between `(block, address)` points.
    pub fn distance(&self, p: &(usize, Address), q: &(usize, Address)) -> u64 {
        if p.0 == q.0 {
            address_distance_unchecked(&p.1, &q.1, &self.blocks[p.0])
        } else {
            self.radii[p.0.max(q.0) - 1]
        }
    }

    /// Materializes the truncation as the sequence union of its blocks,
    /// each pointed at its all-ones address. Labels are `b{block}:{address}`.
    pub fn materialize(&self, max_points: usize) -> Result<(UltrametricSpace, Partition)> {
        let size = self.cardinality();
        if size > max_points as u128 {
            return Err(Error::GuardExceeded {
                what: "universal space materialization",
                size,
                limit: max_points as u128,
            });
        }
        let parts = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let block = build_block(spec, max_points)?;
                let labels = block.labels().iter().map(|l| format!("b{i}:{l}")).collect();
                PointedSpace::new(block.relabeled(labels)?, 0)
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = UnionSpec::new(parts, self.radii.clone())?;
        let partition = spec.partition();
        Ok((seq_union(&spec)?.into_space(), partition))
    }

    /// Index of a `(block, address)` point in [`UniversalSpec::materialize`]'s order.
    pub fn point_index(&self, p: &(usize, Address)) -> Result<usize> {
        let before: u128 = self.blocks[..p.0].iter().map(block_cardinality).sum();
        Ok(before as usize + self.blocks[p.0].index_of(&p.1)?)
    }
}

fn pu_radii(blocks: &[BlockSpec]) -> Vec<u64> {
    let mut radii = Vec::with_capacity(blocks.len().saturating_sub(1));
    let mut diameters = 0;
    for (i, block) in blocks.iter().enumerate().take(blocks.len().saturating_sub(1)) {
        diameters += block.diameter();
        radii.push(i as u64 + 1 + diameters);
    }
    radii
}

/// Builds the first `n` blocks of CU at width `width`.
pub fn build_cu(n: usize, width: usize, max_points: usize) -> Result<(UltrametricSpace, UniversalSpec)> {
    let spec = UniversalSpec::cu(n, width)?;
    Ok((spec.materialize(max_points)?.0, spec))
}

/// Builds the first `n` blocks of PU.
pub fn build_pu(n: usize, max_points: usize) -> Result<(UltrametricSpace, UniversalSpec)> {
    let spec = UniversalSpec::pu(n)?;
    Ok((spec.materialize(max_points)?.0, spec))
}

/// Empirical moduli of a map between finite spaces: the expansion table
/// `S(R) = max{d_Y(fx, fy) : d_X(x, y) ≤ R}` and the properness table
/// `T(S) = max{d_X(x, y) : d_Y(fx, fy) ≤ S}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoarseModuli {
    pub expansion: Vec<(u64, u64)>,
    pub properness: Vec<(u64, u64)>,
}

impl CoarseModuli {
    pub fn is_monotone(&self) -> bool {
        let rising = |t: &[(u64, u64)]| t.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1);
        rising(&self.expansion) && rising(&self.properness)
    }
}

pub(crate) fn moduli_from(
    n: usize,
    src: impl Fn(usize, usize) -> u64,
    dst: impl Fn(usize, usize) -> u64,
    r_grid: Option<&[u64]>,
    s_grid: Option<&[u64]>,
) -> CoarseModuli {
    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            pairs.push((src(i, j), dst(i, j)));
        }
    }
    let grid = |given: Option<&[u64]>, pick: fn(&(u64, u64)) -> u64| -> Vec<u64> {
        let mut g: Vec<u64> = match given {
            Some(g) => g.to_vec(),
            None => pairs.iter().map(pick).collect(),
        };
        g.sort_unstable();
        g.dedup();
        g
    };
    let table = |grid: Vec<u64>, key: fn(&(u64, u64)) -> u64, val: fn(&(u64, u64)) -> u64| {
        grid.into_iter()
            .map(|t| {
                let best = pairs.iter().filter(|p| key(p) <= t).map(val).max().unwrap_or(0);
                (t, best)
            })
            .collect()
    };
    CoarseModuli {
        expansion: table(grid(r_grid, |p| p.0), |p| p.0, |p| p.1),
        properness: table(grid(s_grid, |p| p.1), |p| p.1, |p| p.0),
    }
}

/// Moduli of `map` (source index to target index). Grids default to the
/// distances achieved in `src` and `dst`.
pub fn coarse_moduli(
    map: &[usize],
    src: &UltrametricSpace,
    dst: &UltrametricSpace,
    r_grid: Option<&[u64]>,
    s_grid: Option<&[u64]>,
) -> Result<CoarseModuli> {
    if map.len() < src.len() {
        return Err(Error::MapNotTotal(map.len()));
    }
    if let Some(&target) = map.iter().find(|&&t| t >= dst.len()) {
        return Err(Error::MapOutOfRange {
            target,
            len: dst.len(),
        });
    }
    let dst_grid;
    let s_grid = match s_grid {
        Some(g) => Some(g),
        None => {
            dst_grid = distance_set(dst).values().to_vec();
            Some(dst_grid.as_slice())
        }
    };
    Ok(moduli_from(
        src.len(),
        |i, j| src.dist(i, j),
        |i, j| dst.dist(map[i], map[j]),
        r_grid,
        s_grid,
    ))
}

/// Where a source point lands.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Target {
    Block { block: usize, address: Address },
    Element { element: Vec<u32> },
}

/// One piece of a part-wise embedding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartRecord {
    pub points: Vec<String>,
    pub dset: Vec<u64>,
    pub block: Option<usize>,
    pub isometry: IsometryReport,
}

/// A point-to-point map plus its verification record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingMap {
    pub source: Vec<String>,
    pub assignment: Vec<Target>,
    pub parts: Vec<PartRecord>,
    pub moduli: CoarseModuli,
    pub injective: bool,
    pub verified: bool,
}

impl EmbeddingMap {
    /// Assignment keyed by source label.
    pub fn by_label(&self) -> BTreeMap<&str, &Target> {
        self.source
            .iter()
            .map(String::as_str)
            .zip(&self.assignment)
            .collect()
    }
}

/// Truncation parameters: number of blocks and (CU only) block width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub blocks: usize,
    pub width: usize,
}

/// Per-annulus choice made by a pipeline.
#[derive(Clone, Debug)]
struct Plan {
    annuli: UnionSpec,
    hosts: Vec<usize>,
    requirement: TruncationRequirement,
}

/// Least enumeration index after each previous choice whose set contains the
/// annulus's distance set (CU rule).
fn plan_cu(x: &PointedSpace) -> Result<Plan> {
    let annuli = annulus_decomposition(x, None)?;
    let mut sets: Vec<DistanceSet> = Vec::new();
    let mut source = DsetEnumerator::new();
    let mut hosts = Vec::new();
    let mut width = 1;
    let mut next = 0;
    for part in annuli.parts() {
        let g = distance_set(part.space());
        let index = (next..)
            .find(|&i| {
                while sets.len() <= i {
                    sets.push(source.next().expect("infinite"));
                }
                g.is_subset(&sets[i])
            })
            .expect("some superset always appears");
        let profile = fanout_profile(part.space(), &sets[index])?;
        width = width.max(profile.into_iter().max().unwrap_or(1));
        hosts.push(index);
        next = index + 1;
    }
    let blocks = next;
    let points = UniversalSpec::cu(blocks, width)?.cardinality();
    Ok(Plan {
        annuli,
        hosts,
        requirement: TruncationRequirement {
            blocks,
            width,
            points,
        },
    })
}

/// Least pair index after each previous choice with enough copies, a set
/// containing the annulus's distance set, and a set strictly containing the
/// previous host's (PU rule).
fn plan_pu(x: &PointedSpace) -> Result<Plan> {
    let annuli = annulus_decomposition(x, None)?;
    let mut pairs: Vec<(usize, usize, DistanceSet)> = Vec::new();
    let mut source = PairEnumerator::new();
    let mut hosts = Vec::new();
    let mut width = 1;
    let mut next = 0;
    let mut previous: Option<DistanceSet> = None;
    for part in annuli.parts() {
        let g = distance_set(part.space());
        // the largest class count at any level; equal for every D ⊇ G
        let size = fanout_profile(part.space(), &g)?.into_iter().max().unwrap_or(1);
        let index = (next..)
            .find(|&i| {
                while pairs.len() <= i {
                    pairs.push(source.next().expect("infinite"));
                }
                let (m, _, d) = &pairs[i];
                *m >= size
                    && g.is_subset(d)
                    && previous.as_ref().is_none_or(|p| p.is_proper_subset(d))
            })
            .expect("some admissible pair always appears");
        previous = Some(pairs[index].2.clone());
        width = width.max(size);
        hosts.push(index);
        next = index + 1;
    }
    let blocks = next;
    let points = UniversalSpec::pu(blocks)?.cardinality();
    Ok(Plan {
        annuli,
        hosts,
        requirement: TruncationRequirement {
            blocks,
            width,
            points,
        },
    })
}

fn assemble(x: &PointedSpace, plan: &Plan, target: &UniversalSpec) -> Result<EmbeddingMap> {
    let space = x.space();
    let n = space.len();
    let mut image: Vec<Option<(usize, Address)>> = vec![None; n];
    let mut parts = Vec::with_capacity(plan.hosts.len());
    for (part, &host) in plan.annuli.parts().iter().zip(&plan.hosts) {
        let spec = &target.blocks[host];
        let emb = embed_into_block(part.space(), spec)?;
        for (k, address) in emb.addresses.into_iter().enumerate() {
            let original = space
                .index_of(part.space().label(k))
                .expect("annulus labels come from x");
            image[original] = Some((host, address));
        }
        parts.push(PartRecord {
            points: part.space().labels().to_vec(),
            dset: distance_set(part.space()).values().to_vec(),
            block: Some(host),
            isometry: emb.report,
        });
    }
    let image: Vec<(usize, Address)> = image
        .into_iter()
        .map(|p| p.expect("annuli cover x"))
        .collect();

    let injective = image.iter().collect::<HashSet<_>>().len() == n;
    let moduli = moduli_from(
        n,
        |i, j| space.dist(i, j),
        |i, j| target.distance(&image[i], &image[j]),
        None,
        None,
    );
    let verified = injective && moduli.is_monotone() && parts.iter().all(|p| p.isometry.ok);
    Ok(EmbeddingMap {
        source: space.labels().to_vec(),
        assignment: image
            .into_iter()
            .map(|(block, address)| Target::Block { block, address })
            .collect(),
        parts,
        moduli,
        injective,
        verified,
    })
}

fn check_fits(plan: &Plan, blocks: usize, width: usize) -> Result<()> {
    if blocks < plan.requirement.blocks || width < plan.requirement.width {
        return Err(Error::TruncationTooSmall(plan.requirement.clone()));
    }
    Ok(())
}

/// Coarse embedding of an integral ultrametric space into the CU truncation
/// `trunc`: annuli around the basepoint go part-wise isometrically into
/// distinct CU(D) blocks chosen greedily along the enumeration.
pub fn embed_into_cu(x: &PointedSpace, trunc: Truncation) -> Result<EmbeddingMap> {
    let plan = plan_cu(x)?;
    check_fits(&plan, trunc.blocks, trunc.width)?;
    assemble(x, &plan, &UniversalSpec::cu(trunc.blocks, trunc.width)?)
}

/// Coarse embedding into the PU truncation with `blocks` blocks: annuli go
/// into FU(m, D) blocks with `m` at least the annulus size and strictly
/// nested distance sets.
pub fn embed_into_pu(x: &PointedSpace, blocks: usize) -> Result<EmbeddingMap> {
    let plan = plan_pu(x)?;
    check_fits(&plan, blocks, plan.requirement.width)?;
    assemble(x, &plan, &UniversalSpec::pu(blocks)?)
}

/// Grows a failing truncation to the pipeline's stated requirement, once,
/// unless that needs more than `cap` target points.
pub fn embed_into_cu_auto(x: &PointedSpace, start: Truncation, cap: u128) -> Result<(EmbeddingMap, Truncation)> {
    match embed_into_cu(x, start) {
        Err(Error::TruncationTooSmall(req)) => {
            let grown = Truncation {
                blocks: start.blocks.max(req.blocks),
                width: start.width.max(req.width),
            };
            let points = UniversalSpec::cu(grown.blocks, grown.width)?.cardinality();
            if points > cap {
                return Err(Error::TruncationCap {
                    required: points,
                    cap,
                });
            }
            Ok((embed_into_cu(x, grown)?, grown))
        }
        other => Ok((other?, start)),
    }
}

/// PU counterpart of [`embed_into_cu_auto`].
pub fn embed_into_pu_auto(x: &PointedSpace, start_blocks: usize, cap: u128) -> Result<(EmbeddingMap, usize)> {
    match embed_into_pu(x, start_blocks) {
        Err(Error::TruncationTooSmall(req)) => {
            let blocks = start_blocks.max(req.blocks);
            let points = UniversalSpec::pu(blocks)?.cardinality();
            if points > cap {
                return Err(Error::TruncationCap {
                    required: points,
                    cap,
                });
            }
            Ok((embed_into_pu(x, blocks)?, blocks))
        }
        other => Ok((other?, start_blocks)),
    }
}
