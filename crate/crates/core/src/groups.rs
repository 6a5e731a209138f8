//! Ultrametric groups induced by subgroup chains, on the group ⊕ ℤ/2 of
//! finitely supported bit vectors, and coset embeddings of integral
//! ultrametric spaces into them.
//!
//! A chain assigns each nonzero level `a` a coordinate cutoff `k_a`;
//! `G_a` is the set of vectors supported in `{1..k_a}` and
//! `d(g, h)` is the least level whose subgroup contains `g + h`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{check_pairs, distance_set, DistanceSet, UltrametricSpace};
use crate::unions::PointedSpace;
use crate::universal::{moduli_from, EmbeddingMap, PartRecord, Target};

/// Element of ⊕_{i≥1} ℤ/2 with coordinates numbered from 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    words: Vec<u64>,
}

impl BitVector {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_support(coords: &[u32]) -> Result<Self> {
        let mut v = Self::identity();
        for &c in coords {
            if c == 0 {
                return Err(Error::Invalid("bit-vector coordinates start at 1".into()));
            }
            v.flip(c);
        }
        Ok(v)
    }

    /// Vector whose bits `lo+1, lo+2, …` hold the binary digits of `value`.
    pub fn from_bits(value: u128, lo: u32) -> Self {
        let mut v = Self::identity();
        for b in 0..128 {
            if value >> b & 1 == 1 {
                v.flip(lo + 1 + b);
            }
        }
        v
    }

    fn flip(&mut self, coord: u32) {
        let (w, b) = (((coord - 1) / 64) as usize, (coord - 1) % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] ^= 1 << b;
        self.trim();
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn is_identity(&self) -> bool {
        self.words.is_empty()
    }

    /// Sorted support.
    pub fn support(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (w, &word) in self.words.iter().enumerate() {
            for b in 0..64 {
                if word >> b & 1 == 1 {
                    out.push(w as u32 * 64 + b + 1);
                }
            }
        }
        out
    }

    /// Highest coordinate in the support.
    pub fn highest(&self) -> Option<u32> {
        let last = *self.words.last()?;
        Some((self.words.len() as u32 - 1) * 64 + 64 - last.leading_zeros())
    }

    /// Group operation (symmetric difference).
    pub fn add(&self, other: &BitVector) -> BitVector {
        let (long, short) = if self.words.len() >= other.words.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut words = long.words.clone();
        for (w, s) in words.iter_mut().zip(&short.words) {
            *w ^= s;
        }
        let mut out = BitVector { words };
        out.trim();
        out
    }

    /// Every element is its own inverse.
    pub fn inverse(&self) -> BitVector {
        self.clone()
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coords: Vec<String> = self.support().iter().map(u32::to_string).collect();
        write!(f, "[{}]", coords.join(","))
    }
}

/// Subgroups `G_a` of ⊕ ℤ/2 given by cutoffs, one per nonzero level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupChain {
    levels: DistanceSet,
    cutoffs: Vec<u32>,
    /// The top subgroup is the whole chain, not a truncation of a longer one.
    is_final: bool,
}

impl SubgroupChain {
    pub fn new(levels: DistanceSet, cutoffs: Vec<u32>) -> Result<Self> {
        if cutoffs.len() != levels.levels().len() {
            return Err(Error::InvalidChain(format!(
                "{} nonzero levels but {} cutoffs",
                levels.levels().len(),
                cutoffs.len()
            )));
        }
        if cutoffs.first() == Some(&0) {
            return Err(Error::InvalidChain("cutoffs must be positive".into()));
        }
        if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidChain("cutoffs must strictly increase".into()));
        }
        Ok(Self {
            levels,
            cutoffs,
            is_final: false,
        })
    }

    pub fn with_final(mut self, is_final: bool) -> Self {
        self.is_final = is_final;
        self
    }

    pub fn levels(&self) -> &DistanceSet {
        &self.levels
    }

    pub fn cutoffs(&self) -> &[u32] {
        &self.cutoffs
    }

    pub fn is_final(&self) -> bool {
        self.is_final
    }

    pub fn top_level(&self) -> u64 {
        self.levels.max()
    }

    pub fn max_cutoff(&self) -> u32 {
        self.cutoffs.last().copied().unwrap_or(0)
    }

    /// Cutoff of `G_a` for the largest level `a ≤ value`; 0 below the first level.
    pub fn cutoff_at(&self, value: u64) -> u32 {
        self.levels
            .levels()
            .iter()
            .zip(&self.cutoffs)
            .take_while(|(&a, _)| a <= value)
            .last()
            .map_or(0, |(_, &k)| k)
    }

    /// Least level `a` with `g ∈ G_a`.
    pub fn level_of(&self, g: &BitVector) -> Result<u64> {
        let Some(h) = g.highest() else {
            return Ok(0);
        };
        self.cutoffs
            .iter()
            .position(|&k| k >= h)
            .map(|j| self.levels.levels()[j])
            .ok_or(Error::OutsideTruncation {
                coordinate: h,
                max_cutoff: self.max_cutoff(),
            })
    }

    /// Whether `g ∈ G_a` for the level `a`.
    pub fn contains(&self, a: u64, g: &BitVector) -> bool {
        g.highest().is_none_or(|h| h <= self.cutoff_at(a))
    }

    /// Index of `G_n` in `G_{n+1}` for `n = 0..top`, reading `G_n` as the
    /// subgroup of the largest level `≤ n`.
    pub fn capacity_profile(&self) -> CosetCapacityProfile {
        let index = (0..self.top_level())
            .map(|n| {
                let jump = self.cutoff_at(n + 1) - self.cutoff_at(n);
                (n, pow2(jump))
            })
            .collect();
        CosetCapacityProfile { index }
    }
}

fn pow2(exp: u32) -> u128 {
    if exp >= 127 {
        u128::MAX
    } else {
        1u128 << exp
    }
}

/// `n ↦ [G_{n+1} : G_n]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CosetCapacityProfile {
    pub index: Vec<(u64, u128)>,
}

impl CosetCapacityProfile {
    pub fn at(&self, n: u64) -> u128 {
        self.index.iter().find(|e| e.0 == n).map_or(1, |e| e.1)
    }
}

pub fn chain_metric(chain: &SubgroupChain, g: &BitVector, h: &BitVector) -> Result<u64> {
    chain.level_of(&g.add(h))
}

/// Which elements [`group_space`] should contain.
#[derive(Clone, Debug)]
pub enum ElementSet {
    /// Every vector supported in `{1..k}`.
    All(u32),
    List(Vec<BitVector>),
}

/// The finite ultrametric space on the chosen elements. Labels are the
/// sorted supports, e.g. `[]` and `[1,3]`.
pub fn group_space(chain: &SubgroupChain, elements: &ElementSet, max_points: usize) -> Result<UltrametricSpace> {
    let elements = match elements {
        ElementSet::All(k) => {
            let size = pow2(*k);
            if size > max_points as u128 {
                return Err(Error::GuardExceeded {
                    what: "group enumeration",
                    size,
                    limit: max_points as u128,
                });
            }
            (0..size).map(|v| BitVector::from_bits(v, 0)).collect()
        }
        ElementSet::List(list) => {
            if list.len() > max_points {
                return Err(Error::GuardExceeded {
                    what: "group element list",
                    size: list.len() as u128,
                    limit: max_points as u128,
                });
            }
            list.clone()
        }
    };
    if elements.is_empty() {
        return Err(Error::EmptySpace);
    }
    for g in &elements {
        chain.level_of(g)?;
    }
    let labels = elements.iter().map(ToString::to_string).collect::<Vec<_>>();
    let mut seen = HashSet::new();
    if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
        return Err(Error::DuplicateLabel(dup.clone()));
    }
    Ok(UltrametricSpace::from_fn(labels, |i, j| {
        chain_metric(chain, &elements[i], &elements[j]).expect("checked above")
    }))
}

/// Per-level witnesses for one direction of the containment test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainEquivalence {
    pub equivalent: bool,
    /// `(a, b)`: `G_a` of the first chain lies in `G_b` of the second.
    pub forward: Vec<(u64, u64)>,
    pub backward: Vec<(u64, u64)>,
    /// `(chain, level)` of the first uncovered subgroup; chain is 1 or 2.
    pub failure: Option<(u8, u64)>,
    pub caveat: Option<String>,
}

/// Decides whether every `G_a` of each chain lies in some subgroup of the
/// other, comparing truncations. A chain not marked final is only known up
/// to its top cutoff, so every non-final chain is clipped to the smallest
/// such top before comparing.
pub fn check_chain_coarse_equivalence(c1: &SubgroupChain, c2: &SubgroupChain) -> ChainEquivalence {
    let open_tops: Vec<u32> = [c1, c2]
        .iter()
        .filter(|c| !c.is_final)
        .map(|c| c.max_cutoff())
        .collect();
    let clip = open_tops
        .iter()
        .copied()
        .min()
        .unwrap_or_else(|| c1.max_cutoff().max(c2.max_cutoff()));
    let mut clipped = false;
    let mut effective = |c: &SubgroupChain| -> Vec<(u64, u32)> {
        let mut out = vec![(0, 0)];
        for (&a, &k) in c.levels.levels().iter().zip(&c.cutoffs) {
            let k = if c.is_final { k } else { k.min(clip) };
            if k < c.max_cutoff() && !c.is_final && k == clip {
                clipped = true;
            }
            out.push((a, k));
        }
        out
    };
    let (e1, e2) = (effective(c1), effective(c2));
    let witnesses = |from: &[(u64, u32)], to: &[(u64, u32)]| -> (Vec<(u64, u64)>, Option<u64>) {
        let mut found = Vec::new();
        for &(a, k) in from {
            match to.iter().find(|&&(_, kb)| kb >= k) {
                Some(&(b, _)) => found.push((a, b)),
                None => return (found, Some(a)),
            }
        }
        (found, None)
    };
    let (forward, fail1) = witnesses(&e1, &e2);
    let (backward, fail2) = witnesses(&e2, &e1);
    let failure = fail1.map(|a| (1, a)).or(fail2.map(|a| (2, a)));
    ChainEquivalence {
        equivalent: failure.is_none(),
        forward,
        backward,
        failure,
        caveat: clipped.then(|| {
            format!("compared only up to coordinate {clip}; subgroups of non-final chains above it are unknown")
        }),
    }
}

/// `n ↦ max_x |B(x, n+2)|` (closed balls) for `n = 0..=diam`.
pub fn ball_cardinality_profile(space: &UltrametricSpace) -> Vec<(u64, usize)> {
    let n = space.len();
    (0..=space.diameter())
        .map(|k| {
            let r = k + 2;
            let best = (0..n)
                .map(|x| space.row(x).iter().filter(|&&d| d <= r).count())
                .max()
                .unwrap_or(0);
            (k, best)
        })
        .collect()
}

/// Universal chain flavours: `Separable` uses a schedule of cutoff jumps
/// standing in for infinite index; `Proper` takes coset demands `c(n)` and
/// jumps by the least `t ≥ 1` with `2^t ≥ c(n)` at level `n + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Separable,
    Proper,
}

/// Chain on levels `{0..L}` with `L = schedule.len()`.
pub fn universal_group_chain(kind: GroupKind, schedule: &[u64]) -> Result<SubgroupChain> {
    let mut cutoffs = Vec::with_capacity(schedule.len());
    let mut k: u32 = 0;
    for &s in schedule {
        let jump = match kind {
            GroupKind::Separable => {
                u32::try_from(s).map_err(|_| Error::InvalidChain(format!("jump {s} too large")))?
            }
            GroupKind::Proper => (1..128).find(|&t| pow2(t) >= s as u128).unwrap_or(128),
        };
        if jump == 0 {
            return Err(Error::InvalidChain("cutoff jumps must be positive".into()));
        }
        k = k
            .checked_add(jump)
            .ok_or_else(|| Error::InvalidChain("cutoff overflow".into()))?;
        cutoffs.push(k);
    }
    SubgroupChain::new(
        DistanceSet::new((0..=schedule.len() as u64).collect())?,
        cutoffs,
    )
}

/// [`universal_group_chain`] together with its materialized group.
pub fn build_universal_group(
    kind: GroupKind,
    schedule: &[u64],
    max_points: usize,
) -> Result<(SubgroupChain, UltrametricSpace)> {
    let chain = universal_group_chain(kind, schedule)?;
    let space = group_space(&chain, &ElementSet::All(chain.max_cutoff()), max_points)?;
    Ok((chain, space))
}

/// One coset extension: a ball around `center` of radius `level`, whose
/// classes under `d < level` were placed in distinct cosets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionRecord {
    pub center: String,
    pub level: u64,
    pub points: usize,
    pub classes: usize,
    /// Pairs at distance exactly `level`; all must land at `level`.
    pub boundary_pairs: usize,
    pub isometric: bool,
}

/// One annulus of the outer assembly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnnulusRecord {
    pub radius: u64,
    pub anchor: String,
    pub points: Vec<String>,
    pub diameter: u64,
    pub translation: Vec<u32>,
    /// `d(g_n, 1)`; 0 when the space is a single annulus.
    pub gap: u64,
    pub gap_condition: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupEmbedding {
    pub map: EmbeddingMap,
    pub elements: Vec<BitVector>,
    pub annuli: Vec<AnnulusRecord>,
    pub extensions: Vec<ExtensionRecord>,
    pub ball_profile: Vec<(u64, usize)>,
    pub capacity: CosetCapacityProfile,
    /// Every `c(n) = max |B(x, n+2)|` is at most `[G_{n+1} : G_n]`.
    pub capacity_dominates: bool,
}

struct BallEmbedder<'a> {
    space: &'a UltrametricSpace,
    chain: &'a SubgroupChain,
    /// Nonzero levels paired with their cutoffs, prefixed by `(0, 0)`.
    steps: Vec<(u64, u32)>,
    image: Vec<BitVector>,
    extensions: Vec<ExtensionRecord>,
}

impl BallEmbedder<'_> {
    /// Maps `points` (diameter ≤ `steps[j].0`) into `G_{steps[j].0}` with
    /// `center ↦ 1`.
    fn embed(&mut self, points: &[usize], center: usize, j: usize) -> Result<()> {
        if j == 0 || points.len() == 1 {
            for &p in points {
                self.image[p] = BitVector::identity();
            }
            return Ok(());
        }
        let (level, k_hi) = self.steps[j];
        let k_lo = self.steps[j - 1].1;
        let space = self.space;
        let below = |p: usize| space.dist(center, p) < level;
        let mut center_class: Vec<usize> = points.iter().copied().filter(|&p| below(p)).collect();
        center_class.sort_unstable();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut rest: Vec<usize> = points.iter().copied().filter(|&p| !below(p)).collect();
        while let Some(&seed) = rest.first() {
            let (class, others): (Vec<usize>, Vec<usize>) =
                rest.iter().partition(|&&p| space.dist(seed, p) < level);
            classes.push(class);
            rest = others;
        }
        if classes.is_empty() {
            return self.embed(points, center, j - 1);
        }
        let least = |c: &Vec<usize>| -> usize {
            *c.iter().min_by_key(|&&p| space.label(p)).expect("nonempty")
        };
        classes.sort_by(|a, b| space.label(least(a)).cmp(space.label(least(b))));
        let capacity = pow2(k_hi - k_lo);
        if classes.len() as u128 + 1 > capacity {
            return Err(Error::CapacityShortfall {
                level,
                required: classes.len() + 1,
                capacity,
            });
        }
        self.embed(&center_class, center, j - 1)?;
        for (c, class) in classes.iter().enumerate() {
            let anchor = least(class);
            self.embed(class, anchor, j - 1)?;
            let g = BitVector::from_bits(c as u128 + 1, k_lo);
            for &p in class {
                self.image[p] = g.add(&self.image[p]);
            }
        }

        let mut boundary_pairs = 0;
        let report = check_pairs(points.len(), |a, b| {
            let (p, q) = (points[a], points[b]);
            let source = space.dist(p, q);
            if source == level {
                boundary_pairs += 1;
            }
            let target = chain_metric(self.chain, &self.image[p], &self.image[q]).unwrap_or(u64::MAX);
            (source != target).then(|| crate::metric::DistanceMismatch {
                a: space.label(p).to_string(),
                b: space.label(q).to_string(),
                source,
                target,
            })
        });
        self.extensions.push(ExtensionRecord {
            center: space.label(center).to_string(),
            level,
            points: points.len(),
            classes: classes.len() + 1,
            boundary_pairs,
            isometric: report.ok,
        });
        Ok(())
    }
}

/// Outer radii: the smallest positive distance from the basepoint, then
/// each next distance exceeding the previous radius by more than 1; a final
/// stretch too short to open a new annulus joins the last one.
fn annulus_radii(from_base: &[u64]) -> Vec<u64> {
    let mut values: Vec<u64> = from_base.iter().copied().filter(|&d| d > 0).collect();
    values.sort_unstable();
    values.dedup();
    let Some(&first) = values.first() else {
        return vec![0];
    };
    let mut radii = vec![first];
    for &v in &values {
        if v > radii.last().unwrap() + 1 {
            radii.push(v);
        }
    }
    let top = *values.last().unwrap();
    *radii.last_mut().unwrap() = top;
    radii
}

/// Coarse embedding into the chain's group: annuli around the basepoint are
/// embedded isometrically by coset extensions, then translated to
/// increasing norms.
pub fn embed_into_group(x: &PointedSpace, chain: &SubgroupChain) -> Result<GroupEmbedding> {
    let space = x.space();
    let n = space.len();
    let base = x.basepoint();
    let levels = chain.levels();
    let mut steps = vec![(0, 0)];
    steps.extend(levels.levels().iter().copied().zip(chain.cutoffs().iter().copied()));
    let step_for = |value: u64| -> Result<usize> {
        steps.iter().position(|s| s.0 >= value).ok_or(Error::ChainTooShort {
            required: value,
            top: chain.top_level(),
        })
    };

    let radii = annulus_radii(space.row(base));
    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); radii.len()];
    for p in 0..n {
        let d = space.dist(base, p);
        let idx = radii.iter().position(|&r| d <= r).expect("last radius is the maximum");
        parts[idx].push(p);
    }

    let mut embedder = BallEmbedder {
        space,
        chain,
        steps: steps.clone(),
        image: vec![BitVector::identity(); n],
        extensions: Vec::new(),
    };
    let mut annuli = Vec::with_capacity(parts.len());
    let mut records = Vec::with_capacity(parts.len());
    let mut previous_gap = 0;
    for (i, (part, &radius)) in parts.iter().zip(&radii).enumerate() {
        let sub = space.subspace(part);
        let dset = distance_set(&sub);
        if let Some(&bad) = dset.values().iter().find(|&&d| !levels.contains(d)) {
            let (a, b) = (0..part.len())
                .flat_map(|a| (0..part.len()).map(move |b| (a, b)))
                .find(|&(a, b)| sub.dist(a, b) == bad)
                .expect("value comes from the part");
            return Err(Error::DistanceNotInSet {
                value: bad,
                a: sub.label(a).to_string(),
                b: sub.label(b).to_string(),
            });
        }
        let diameter = sub.diameter();
        let anchor = if i == 0 && parts.len() == 1 {
            base
        } else {
            *part
                .iter()
                .filter(|&&p| space.dist(base, p) == radius)
                .min_by_key(|&&p| space.label(p))
                .unwrap_or(&base)
        };
        embedder.embed(part, anchor, step_for(diameter)?)?;

        let (translation, gap, gap_condition) = if parts.len() == 1 {
            (BitVector::identity(), 0, true)
        } else {
            let bound = if i == 0 { radii[0] } else { previous_gap + diameter };
            let j = step_for(bound + 1)?;
            let g = BitVector::from_support(&[steps[j - 1].1 + 1])?;
            let gap = chain.level_of(&g)?;
            let ok = gap > bound;
            (g, gap, ok)
        };
        for &p in part {
            embedder.image[p] = translation.add(&embedder.image[p]);
        }
        previous_gap = gap;

        let report = check_pairs(part.len(), |a, b| {
            let (p, q) = (part[a], part[b]);
            let source = space.dist(p, q);
            let target = chain_metric(chain, &embedder.image[p], &embedder.image[q]).unwrap_or(u64::MAX);
            (source != target).then(|| crate::metric::DistanceMismatch {
                a: space.label(p).to_string(),
                b: space.label(q).to_string(),
                source,
                target,
            })
        });
        records.push(PartRecord {
            points: sub.labels().to_vec(),
            dset: dset.values().to_vec(),
            block: None,
            isometry: report,
        });
        annuli.push(AnnulusRecord {
            radius,
            anchor: space.label(anchor).to_string(),
            points: sub.labels().to_vec(),
            diameter,
            translation: translation.support(),
            gap,
            gap_condition,
        });
    }

    let image = embedder.image;
    let injective = image.iter().collect::<HashSet<_>>().len() == n;
    let mut norms: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            norms.insert((i, j), chain_metric(chain, &image[i], &image[j])?);
        }
    }
    let moduli = moduli_from(
        n,
        |i, j| space.dist(i, j),
        |i, j| norms[&(i.min(j), i.max(j))],
        None,
        None,
    );
    let ball_profile = ball_cardinality_profile(space);
    let capacity = chain.capacity_profile();
    let capacity_dominates = ball_profile
        .iter()
        .all(|&(k, c)| k >= chain.top_level() || capacity.at(k) >= c as u128);
    let verified = injective
        && moduli.is_monotone()
        && records.iter().all(|r| r.isometry.ok)
        && embedder.extensions.iter().all(|e| e.isometric)
        && annuli.iter().all(|a| a.gap_condition);
    Ok(GroupEmbedding {
        map: EmbeddingMap {
            source: space.labels().to_vec(),
            assignment: image
                .iter()
                .map(|g| Target::Element { element: g.support() })
                .collect(),
            parts: records,
            moduli,
            injective,
            verified,
        },
        elements: image,
        annuli,
        extensions: embedder.extensions,
        ball_profile,
        capacity,
        capacity_dominates,
    })
}
