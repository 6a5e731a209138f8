//! JSON interchange for spaces, union specs, block specs, chains and
//! embedding maps.
//!
//! Readers reject unknown fields. Syntax and type errors carry serde's line
//! and column; structural errors name the offending field.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blocks::BlockSpec;
use crate::error::{Error, Result};
use crate::groups::{GroupEmbedding, SubgroupChain};
use crate::metric::{DistanceSet, UltrametricSpace};
use crate::unions::{PointedSpace, UnionSpec};
use crate::universal::EmbeddingMap;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceJson {
    pub points: Vec<String>,
    pub dist: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dset: Option<Vec<u64>>,
}

impl SpaceJson {
    pub fn from_space(space: &UltrametricSpace) -> Self {
        Self {
            points: space.labels().to_vec(),
            dist: space.rows(),
            basepoint: space.basepoint(),
            dset: space.declared_dset().map(|d| d.values().to_vec()),
        }
    }

    /// Structural checks only, so that axiom violations can still be
    /// reported by the validator.
    pub fn into_space(self) -> Result<UltrametricSpace> {
        let n = self.points.len();
        if n == 0 {
            return Err(Error::Structure("field \"points\": empty".into()));
        }
        if self.dist.len() != n {
            return Err(Error::Structure(format!(
                "field \"dist\": {} rows for {n} points",
                self.dist.len()
            )));
        }
        if let Some((i, row)) = self.dist.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Structure(format!(
                "field \"dist[{i}]\": {} entries for {n} points",
                row.len()
            )));
        }
        let mut space = UltrametricSpace::from_rows(self.points, self.dist)?;
        if let Some(b) = self.basepoint {
            if b >= n {
                return Err(Error::Structure(format!(
                    "field \"basepoint\": {b} out of range for {n} points"
                )));
            }
            space = space.with_basepoint(b)?;
        }
        if let Some(d) = self.dset {
            let d = DistanceSet::new(d)
                .map_err(|e| Error::Structure(format!("field \"dset\": {e}")))?;
            space = space.with_declared_dset_unchecked(d);
        }
        Ok(space)
    }
}

pub fn read_space(text: &str) -> Result<UltrametricSpace> {
    serde_json::from_str::<SpaceJson>(text)?.into_space()
}

pub fn write_space(space: &UltrametricSpace) -> String {
    pretty(&SpaceJson::from_space(space))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnionSpecJson {
    pub parts: Vec<SpaceJson>,
    pub radii: Vec<u64>,
}

pub fn read_union_spec(text: &str) -> Result<UnionSpec> {
    let raw: UnionSpecJson = serde_json::from_str(text)?;
    let parts = raw
        .parts
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let b = p.basepoint.ok_or_else(|| {
                Error::Structure(format!("field \"parts[{i}].basepoint\": missing"))
            })?;
            PointedSpace::new(p.into_space()?, b)
        })
        .collect::<Result<Vec<_>>>()?;
    UnionSpec::new(parts, raw.radii)
}

pub fn write_union_spec(spec: &UnionSpec) -> String {
    let parts = spec
        .parts()
        .iter()
        .map(|p| SpaceJson {
            basepoint: Some(p.basepoint()),
            ..SpaceJson::from_space(p.space())
        })
        .collect();
    pretty(&UnionSpecJson {
        parts,
        radii: spec.radii().to_vec(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpecJson {
    pub dset: Vec<u64>,
    pub widths: Vec<usize>,
}

pub fn read_block_spec(text: &str) -> Result<BlockSpec> {
    let raw: BlockSpecJson = serde_json::from_str(text)?;
    BlockSpec::new(DistanceSet::new(raw.dset)?, raw.widths)
}

pub fn write_block_spec(spec: &BlockSpec) -> String {
    pretty(&BlockSpecJson {
        dset: spec.dset().values().to_vec(),
        widths: spec.widths().to_vec(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainJson {
    pub levels: Vec<u64>,
    pub cutoffs: Vec<u32>,
    #[serde(default, rename = "final", skip_serializing_if = "std::ops::Not::not")]
    pub is_final: bool,
}

pub fn read_chain(text: &str) -> Result<SubgroupChain> {
    let raw: ChainJson = serde_json::from_str(text)?;
    Ok(SubgroupChain::new(DistanceSet::new(raw.levels)?, raw.cutoffs)?.with_final(raw.is_final))
}

pub fn write_chain(chain: &SubgroupChain) -> String {
    pretty(&ChainJson {
        levels: chain.levels().values().to_vec(),
        cutoffs: chain.cutoffs().to_vec(),
        is_final: chain.is_final(),
    })
}

/// A point map between two spaces, by label: `{"a": "x", "b": "y"}`.
pub fn read_label_map(text: &str, src: &UltrametricSpace, dst: &UltrametricSpace) -> Result<Vec<usize>> {
    let raw: BTreeMap<String, String> = serde_json::from_str(text)?;
    for key in raw.keys() {
        if src.index_of(key).is_none() {
            return Err(Error::Structure(format!("map key \"{key}\": not a source point")));
        }
    }
    src.labels()
        .iter()
        .map(|l| {
            let t = raw
                .get(l)
                .ok_or_else(|| Error::Structure(format!("map key \"{l}\": missing")))?;
            dst.index_of(t)
                .ok_or_else(|| Error::Structure(format!("map value \"{t}\" for \"{l}\": not a target point")))
        })
        .collect()
}

pub fn embedding_json(map: &EmbeddingMap) -> Value {
    let assignment: serde_json::Map<String, Value> = map
        .source
        .iter()
        .zip(&map.assignment)
        .map(|(l, t)| (l.clone(), serde_json::to_value(t).expect("plain data")))
        .collect();
    json!({
        "assignment": assignment,
        "moduli": map.moduli,
        "verified": map.verified,
        "injective": map.injective,
        "parts": map.parts,
    })
}

pub fn group_embedding_json(e: &GroupEmbedding) -> Value {
    let mut v = embedding_json(&e.map);
    let obj = v.as_object_mut().expect("object");
    obj.insert("annuli".into(), json!(e.annuli));
    obj.insert("extensions".into(), json!(e.extensions));
    obj.insert("ball_profile".into(), json!(e.ball_profile));
    obj.insert(
        "capacity".into(),
        json!(e.capacity.index.iter().map(|&(n, c)| (n, c.to_string())).collect::<Vec<_>>()),
    );
    obj.insert("capacity_dominates".into(), json!(e.capacity_dominates));
    v
}

pub fn pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data");
    s.push('\n');
    s
}
