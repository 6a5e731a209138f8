use serde::Serialize;

use super::space::UltrametricSpace;

/// A single failed axiom, by point labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxiomViolation {
    /// `d(x, z) > max(d(x, y), d(y, z))`.
    Ultrametric {
        x: String,
        y: String,
        z: String,
        xz: u64,
        xy: u64,
        yz: u64,
    },
    Asymmetric {
        a: String,
        b: String,
        ab: u64,
        ba: u64,
    },
    NonzeroDiagonal { point: String, value: u64 },
    /// Two distinct points at distance 0.
    Coincident { a: String, b: String },
    /// An entry outside the space's declared distance set.
    OutsideDistanceSet { a: String, b: String, value: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub ok: bool,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn summary(&self) -> String {
        match self.violations.first() {
            None => "valid".to_owned(),
            Some(v) => format!("{} violation(s), first: {v:?}", self.violations.len()),
        }
    }
}

/// Checks every axiom of an ultrametric on `space`: zero diagonal, symmetry,
/// positivity off the diagonal, membership in the declared distance set, and
/// the strong triangle inequality over all triples.
pub fn validate_ultrametric(space: &UltrametricSpace) -> AxiomReport {
    let n = space.len();
    let label = |i: usize| space.label(i).to_owned();
    let mut violations = Vec::new();

    for i in 0..n {
        let v = space.dist(i, i);
        if v != 0 {
            violations.push(AxiomViolation::NonzeroDiagonal {
                point: label(i),
                value: v,
            });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (ab, ba) = (space.dist(i, j), space.dist(j, i));
            if ab != ba {
                violations.push(AxiomViolation::Asymmetric {
                    a: label(i),
                    b: label(j),
                    ab,
                    ba,
                });
            }
            if ab == 0 || ba == 0 {
                violations.push(AxiomViolation::Coincident {
                    a: label(i),
                    b: label(j),
                });
            }
            if let Some(dset) = space.declared_dset() {
                if !dset.contains(ab) {
                    violations.push(AxiomViolation::OutsideDistanceSet {
                        a: label(i),
                        b: label(j),
                        value: ab,
                    });
                }
            }
        }
    }
    for x in 0..n {
        for z in (x + 1)..n {
            let xz = space.dist(x, z);
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                let (xy, yz) = (space.dist(x, y), space.dist(y, z));
                if xz > xy.max(yz) {
                    violations.push(AxiomViolation::Ultrametric {
                        x: label(x),
                        y: label(y),
                        z: label(z),
                        xz,
                        xy,
                        yz,
                    });
                }
            }
        }
    }

    AxiomReport {
        ok: violations.is_empty(),
        violations,
    }
}
