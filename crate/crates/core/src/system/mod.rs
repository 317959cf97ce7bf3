//! Multiseed system data, the level recursions and hypothesis checks.

mod rank;
mod sequence;
mod verify;

use std::sync::Mutex;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{kappa_enclosure, Precision};
use crate::numerics::{biguint_str, int, Enclosure, Rational};

pub use rank::{rank_propagate, RankWindow};
pub use sequence::{Generator, Sequence, SequenceSpec, TailRule};
pub use verify::{
    verify_construction, verify_simplicity_hypotheses, verify_two_seed_hypotheses, ConstructionReport,
    GrowthStatus, HypothesisReport, Truth, Violation,
};

/// A seed space `X_j`, described only by the data the formulas consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpace {
    pub dim: u32,
    pub solid: bool,
    pub contractible: bool,
}

impl SeedSpace {
    /// The cube `[0, 1]^dim`.
    pub fn cube(dim: u32) -> Self {
        SeedSpace {
            dim,
            solid: true,
            contractible: true,
        }
    }
}

/// The multiplicity matrices `μ(n)`, `n ≥ 1`; entry `[k][j]` counts maps from
/// seed block `j` at level `n − 1` into block `k` at level `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuSpec {
    /// `[[l − c, c], [c, l − c]]`.
    SymmetricTwoSeed { l: SequenceSpec, c: SequenceSpec },
    /// One explicit matrix per level; finitely many levels.
    Explicit { tables: Vec<Vec<Vec<u64>>> },
    /// One sequence per matrix entry.
    Sequences { entries: Vec<Vec<SequenceSpec>> },
}

fn default_diagonal() -> bool {
    true
}

/// Complete combinatorial data of a multiseed system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescriptor {
    pub m: usize,
    pub seeds: Vec<SeedSpace>,
    pub d: Vec<SequenceSpec>,
    pub mu: MuSpec,
    pub r0: Vec<u64>,
    #[serde(default = "default_diagonal")]
    pub diagonal: bool,
}

impl SystemDescriptor {
    /// Shape checks that do not need any sequence values.
    pub fn validate_shape(&self) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Err(Error::descriptor("m must be positive"));
        }
        if self.seeds.len() != m || self.d.len() != m || self.r0.len() != m {
            return Err(Error::descriptor(format!(
                "expected {m} seeds, d sequences and initial sizes, got {}, {} and {}",
                self.seeds.len(),
                self.d.len(),
                self.r0.len()
            )));
        }
        if self.r0.iter().any(|&r| r == 0) {
            return Err(Error::descriptor("initial sizes r0 must be positive"));
        }
        match &self.mu {
            MuSpec::SymmetricTwoSeed { .. } if m != 2 => {
                return Err(Error::descriptor("symmetric_two_seed needs m = 2"));
            }
            MuSpec::Explicit { tables } => {
                for (i, t) in tables.iter().enumerate() {
                    if t.len() != m || t.iter().any(|row| row.len() != m) {
                        return Err(Error::descriptor(format!(
                            "μ({}) is not {m}×{m}",
                            i + 1
                        )));
                    }
                }
            }
            MuSpec::Sequences { entries } => {
                if entries.len() != m || entries.iter().any(|row| row.len() != m) {
                    return Err(Error::descriptor(format!("μ entries are not {m}×{m}")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_symmetric_two_seed(&self) -> bool {
        matches!(self.mu, MuSpec::SymmetricTwoSeed { .. })
    }
}

/// Sizes at one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelData {
    pub n: usize,
    #[serde(with = "biguint_vec")]
    pub r: Vec<BigUint>,
    #[serde(with = "biguint_vec")]
    pub s: Vec<BigUint>,
    #[serde(
        with = "opt_biguint",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub r_prime: Option<BigUint>,
}

mod biguint_vec {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|n| n.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        Vec::<String>::deserialize(d)?
            .into_iter()
            .map(|t| t.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

mod opt_biguint {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(n) => super::biguint_str::serialize(n, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| t.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone)]
enum MuSource {
    Symmetric { l: Sequence, c: Sequence },
    Tables(Vec<Vec<Vec<u64>>>),
    Sequences(Vec<Vec<Sequence>>),
}

/// Evaluator for a descriptor: sequences and levels are computed lazily and
/// cached, so deeper queries extend earlier ones.
#[derive(Debug)]
pub struct System {
    desc: SystemDescriptor,
    d: Vec<Sequence>,
    mu: MuSource,
    levels: Mutex<Vec<LevelData>>,
}

impl Clone for System {
    fn clone(&self) -> Self {
        System::new(self.desc.clone()).expect("descriptor was validated")
    }
}

impl System {
    pub fn new(desc: SystemDescriptor) -> Result<Self> {
        desc.validate_shape()?;
        let d = desc
            .d
            .iter()
            .cloned()
            .map(Sequence::new)
            .collect::<Result<Vec<_>>>()?;
        let mu = match &desc.mu {
            MuSpec::SymmetricTwoSeed { l, c } => MuSource::Symmetric {
                l: Sequence::new(l.clone())?,
                c: Sequence::new(c.clone())?,
            },
            MuSpec::Explicit { tables } => MuSource::Tables(tables.clone()),
            MuSpec::Sequences { entries } => MuSource::Sequences(
                entries
                    .iter()
                    .map(|row| row.iter().cloned().map(Sequence::new).collect())
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let level0 = LevelData {
            n: 0,
            r: desc.r0.iter().map(|&r| BigUint::from(r)).collect(),
            s: vec![BigUint::one(); desc.m],
            r_prime: desc.is_symmetric_two_seed().then(BigUint::one),
        };
        Ok(System {
            desc,
            d,
            mu,
            levels: Mutex::new(vec![level0]),
        })
    }

    pub fn descriptor(&self) -> &SystemDescriptor {
        &self.desc
    }

    pub fn m(&self) -> usize {
        self.desc.m
    }

    /// Largest level for which every sequence is defined (`None` if all are
    /// infinite).
    pub fn defined_depth(&self) -> Option<usize> {
        let mut depth: Option<usize> = None;
        let mut take = |len: Option<usize>| {
            if let Some(len) = len {
                depth = Some(depth.map_or(len, |d| d.min(len)));
            }
        };
        for s in &self.desc.d {
            take(s.defined_len());
        }
        match &self.desc.mu {
            MuSpec::SymmetricTwoSeed { l, c } => {
                take(l.defined_len());
                take(c.defined_len());
            }
            MuSpec::Explicit { tables } => take(Some(tables.len())),
            MuSpec::Sequences { entries } => {
                for s in entries.iter().flatten() {
                    take(s.defined_len());
                }
            }
        }
        depth
    }

    /// Caps a requested depth at the defined depth.
    pub fn usable_depth(&self, requested: usize) -> usize {
        self.defined_depth().map_or(requested, |d| d.min(requested))
    }

    pub fn d(&self, j: usize, n: usize) -> Result<BigUint> {
        self.d[j].get(n)
    }

    /// `l(n)` and `c(n)` for symmetric two-seed systems.
    pub fn l_c(&self, n: usize) -> Result<(BigUint, BigUint)> {
        match &self.mu {
            MuSource::Symmetric { l, c } => Ok((l.get(n)?, c.get(n)?)),
            _ => Err(Error::Unsupported(
                "l and c are defined only for symmetric two-seed systems".into(),
            )),
        }
    }

    /// The matrix `μ(n)`, `n ≥ 1`.
    pub fn mu(&self, n: usize) -> Result<Vec<Vec<BigUint>>> {
        if n == 0 {
            return Err(Error::Contract("μ(n) is defined for n ≥ 1".into()));
        }
        match &self.mu {
            MuSource::Symmetric { l, c } => {
                let (l, c) = (l.get(n)?, c.get(n)?);
                if c > l {
                    return Err(Error::descriptor(format!(
                        "μ({n}) has negative diagonal entry l − c: l = {l}, c = {c}"
                    )));
                }
                let diag = &l - &c;
                Ok(vec![vec![diag.clone(), c.clone()], vec![c, diag]])
            }
            MuSource::Tables(tables) => tables
                .get(n - 1)
                .map(|t| {
                    t.iter()
                        .map(|row| row.iter().map(|&v| BigUint::from(v)).collect())
                        .collect()
                })
                .ok_or_else(|| {
                    Error::descriptor(format!(
                        "μ is tabulated only up to n = {}, but n = {n} was requested",
                        tables.len()
                    ))
                }),
            MuSource::Sequences(entries) => entries
                .iter()
                .map(|row| row.iter().map(|s| s.get(n)).collect())
                .collect(),
        }
    }

    /// Level data for `n`, extending the cache as needed.
    pub fn level(&self, n: usize) -> Result<LevelData> {
        let mut levels = self.levels.lock().expect("level cache poisoned");
        while levels.len() <= n {
            let next = self.next_level(levels.last().expect("level 0 present"))?;
            levels.push(next);
        }
        Ok(levels[n].clone())
    }

    /// Levels `0..=depth`.
    pub fn levels(&self, depth: usize) -> Result<Vec<LevelData>> {
        self.level(depth)?;
        let levels = self.levels.lock().expect("level cache poisoned");
        Ok(levels[..=depth].to_vec())
    }

    fn next_level(&self, prev: &LevelData) -> Result<LevelData> {
        let n = prev.n + 1;
        let mu = self.mu(n)?;
        let m = self.m();
        let r = (0..m)
            .map(|k| {
                (0..m).fold(BigUint::zero(), |acc, j| acc + &mu[k][j] * &prev.r[j])
            })
            .collect();
        let s = (0..m)
            .map(|j| Ok(&prev.s[j] * self.d(j, n)?))
            .collect::<Result<Vec<_>>>()?;
        let r_prime = match (&self.mu, &prev.r_prime) {
            (MuSource::Symmetric { .. }, Some(rp)) => {
                let (l, c) = self.l_c(n)?;
                let two_c = &c + &c;
                (l > two_c).then(|| rp * (l - two_c))
            }
            _ => None,
        };
        Ok(LevelData { n, r, s, r_prime })
    }

    /// `s_j(n)/r_j(n)`.
    pub fn ratio(&self, j: usize, n: usize) -> Result<Rational> {
        let lv = self.level(n)?;
        Ok(crate::numerics::frac(&lv.s[j], &lv.r[j]))
    }
}

/// Levels `0..=depth` of a descriptor.
pub fn compute_levels(desc: &SystemDescriptor, depth: usize) -> Result<Vec<LevelData>> {
    System::new(desc.clone())?.levels(depth)
}

/// Enclosure of `max_j κ_j·dim(X_j)`, the dimension rank ratio for solid seeds.
pub fn drr_enclosure(system: &System, precision: &Precision) -> Result<Enclosure> {
    if let Some(j) = system.descriptor().seeds.iter().position(|s| !s.solid) {
        return Err(Error::Unsupported(format!(
            "seed {} is not solid; the dimension formula needs solid seeds",
            j + 1
        )));
    }
    let mut best: Option<Enclosure> = None;
    for (j, seed) in system.descriptor().seeds.iter().enumerate() {
        let term = kappa_enclosure(system, j, precision)?.scale(&int(seed.dim as i64));
        best = Some(match best {
            None => term,
            Some(b) => b.max(&term),
        });
    }
    Ok(best.expect("m ≥ 1"))
}
