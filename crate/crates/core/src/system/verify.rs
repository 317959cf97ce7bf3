use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{System, SystemDescriptor};
use crate::error::{Error, Result};
use crate::invariants::{kappa_enclosure, Precision, TwoSeed};
use crate::numerics::ratio;

/// One failed condition, located by level `n` and seed indices `j`, `k`
/// (1-based) where they apply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub clause: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    pub detail: String,
}

impl Violation {
    fn new(clause: &str, detail: impl Into<String>) -> Self {
        Violation {
            clause: clause.to_string(),
            n: None,
            j: None,
            k: None,
            detail: detail.into(),
        }
    }

    fn at(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    fn seeds(mut self, j: usize, k: Option<usize>) -> Self {
        self.j = Some(j + 1);
        self.k = k.map(|k| k + 1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthStatus {
    /// `r_j` reached a new strict maximum at the last checked level.
    Witnessed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub depth: usize,
    pub violations: Vec<Violation>,
    pub growth: Vec<GrowthStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub holds: Truth,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_failure: Option<Violation>,
}

impl HypothesisReport {
    fn pass(depth: usize) -> Self {
        HypothesisReport {
            holds: Truth::True,
            depth,
            first_failure: None,
        }
    }

    fn fail(depth: usize, v: Violation) -> Self {
        HypothesisReport {
            holds: Truth::False,
            depth,
            first_failure: Some(v),
        }
    }

    /// Converts a failed or undecided report into the matching error.
    pub fn into_result(self) -> Result<()> {
        match (self.holds, self.first_failure) {
            (Truth::True, _) => Ok(()),
            (Truth::False, Some(v)) => Err(Error::precondition(describe(&v))),
            (Truth::Unknown, Some(v)) => Err(Error::unknown(describe(&v))),
            (_, None) => Err(Error::precondition("hypothesis check failed")),
        }
    }
}

fn describe(v: &Violation) -> String {
    match v.n {
        Some(n) => format!("{} fails at n = {n}: {}", v.clause, v.detail),
        None => format!("{}: {}", v.clause, v.detail),
    }
}

/// Checks `1 ≤ d_j(n) ≤ μ_jj(n)` for `n ≤ depth` and looks for evidence of
/// `r_j(n) → ∞`.
pub fn verify_construction(desc: &SystemDescriptor, depth: usize) -> ConstructionReport {
    let mut violations = Vec::new();
    let system = match System::new(desc.clone()) {
        Ok(s) => s,
        Err(e) => {
            return ConstructionReport {
                depth: 0,
                violations: vec![Violation::new("descriptor", e.to_string())],
                growth: vec![GrowthStatus::Inconclusive; desc.m],
            }
        }
    };
    let usable = system.usable_depth(depth);
    if usable < depth {
        violations.push(Violation::new(
            "sequences defined to the requested depth",
            format!("data ends at n = {usable}, requested {depth}"),
        ));
    }
    let mut reached = 0;
    for n in 1..=usable {
        let mu = match system.mu(n) {
            Ok(mu) => mu,
            Err(e) => {
                violations.push(Violation::new("μ(n) well formed", e.to_string()).at(n));
                break;
            }
        };
        for j in 0..system.m() {
            let d = match system.d(j, n) {
                Ok(d) => d,
                Err(e) => {
                    violations.push(Violation::new("d_j(n) defined", e.to_string()).at(n).seeds(j, None));
                    continue;
                }
            };
            if d.is_zero() {
                violations.push(
                    Violation::new("1 ≤ d_j(n)", "d_j(n) = 0")
                        .at(n)
                        .seeds(j, Some(j)),
                );
            }
            if d > mu[j][j] {
                violations.push(
                    Violation::new(
                        "d_j(n) ≤ μ_jj(n)",
                        format!("d_j(n) = {d} > μ_jj(n) = {}", mu[j][j]),
                    )
                    .at(n)
                    .seeds(j, Some(j)),
                );
            }
        }
        reached = n;
    }
    let growth = match system.levels(reached) {
        Ok(levels) if reached > 0 => (0..system.m())
            .map(|j| {
                let last = &levels[reached].r[j];
                if levels[..reached].iter().all(|lv| &lv.r[j] < last) {
                    GrowthStatus::Witnessed
                } else {
                    GrowthStatus::Inconclusive
                }
            })
            .collect(),
        _ => vec![GrowthStatus::Inconclusive; system.m()],
    };
    ConstructionReport {
        depth: reached,
        violations,
        growth,
    }
}

/// `μ_kj(n) ≥ 1`, `μ_jj(n) ≥ d_j(n)`, and `μ_11(n) ≥ d_1(n) + 1` when `m = 1`.
pub fn verify_simplicity_hypotheses(desc: &SystemDescriptor, depth: usize) -> HypothesisReport {
    let system = match System::new(desc.clone()) {
        Ok(s) => s,
        Err(e) => return HypothesisReport::fail(0, Violation::new("descriptor", e.to_string())),
    };
    for n in 1..=depth {
        let mu = match system.mu(n) {
            Ok(mu) => mu,
            Err(e) => return HypothesisReport::fail(n, Violation::new("μ(n) defined", e.to_string()).at(n)),
        };
        let m = system.m();
        for k in 0..m {
            for j in 0..m {
                if mu[k][j].is_zero() {
                    return HypothesisReport::fail(
                        n,
                        Violation::new("μ_kj(n) ≥ 1", "entry is 0").at(n).seeds(j, Some(k)),
                    );
                }
            }
        }
        for j in 0..m {
            let d = match system.d(j, n) {
                Ok(d) => d,
                Err(e) => return HypothesisReport::fail(n, Violation::new("d_j(n) defined", e.to_string()).at(n)),
            };
            if d > mu[j][j] {
                return HypothesisReport::fail(
                    n,
                    Violation::new("μ_jj(n) ≥ d_j(n)", format!("μ_jj(n) = {} < d_j(n) = {d}", mu[j][j]))
                        .at(n)
                        .seeds(j, Some(j)),
                );
            }
            if m == 1 && d.clone() + BigUint::one() > mu[0][0] {
                return HypothesisReport::fail(
                    n,
                    Violation::new("μ_11(n) ≥ d_1(n) + 1", format!("μ_11(n) = {} and d_1(n) = {d}", mu[0][0]))
                        .at(n)
                        .seeds(0, Some(0)),
                );
            }
        }
    }
    HypothesisReport::pass(depth)
}

/// The two-seed hypotheses: `l(n) ≥ 2c(n) + 1`, `d₁(n) = l(n) − c(n)`,
/// `d₂(n) ≤ l(n) − c(n)`, `d₁(1) = d₂(1) ≥ 2` for `n ≤ depth`, and `κ₁ > ½`.
/// Initial sizes `(1, 1)` and symmetry of `μ` are part of the parameter type.
pub fn verify_two_seed_hypotheses(
    two_seed: &TwoSeed,
    depth: usize,
    precision: &Precision,
) -> Result<HypothesisReport> {
    let depth = two_seed.system().usable_depth(depth);
    for n in 1..=depth {
        let (l, c) = two_seed.system().l_c(n)?;
        let d1 = two_seed.system().d(0, n)?;
        let d2 = two_seed.system().d(1, n)?;
        if l < &c + &c + 1u32 {
            return Ok(HypothesisReport::fail(
                depth,
                Violation::new("l(n) ≥ 2c(n)+1", format!("l(n) = {l}, c(n) = {c}")).at(n),
            ));
        }
        let diag = &l - &c;
        if d1 != diag {
            return Ok(HypothesisReport::fail(
                depth,
                Violation::new("d₁(n) = l(n) − c(n)", format!("d₁(n) = {d1}, l(n) − c(n) = {diag}"))
                    .at(n),
            ));
        }
        if d2 > diag {
            return Ok(HypothesisReport::fail(
                depth,
                Violation::new("d₂(n) ≤ l(n) − c(n)", format!("d₂(n) = {d2}, l(n) − c(n) = {diag}"))
                    .at(n),
            ));
        }
        if n == 1 {
            if d1 < BigUint::from(2u32) {
                return Ok(HypothesisReport::fail(
                    depth,
                    Violation::new("d₁(1) ≥ 2", format!("d₁(1) = {d1}")).at(1),
                ));
            }
            if d1 != d2 {
                return Ok(HypothesisReport::fail(
                    depth,
                    Violation::new("d₁(1) = d₂(1)", format!("d₁(1) = {d1}, d₂(1) = {d2}")).at(1),
                ));
            }
        }
    }
    let kappa1 = kappa_enclosure(two_seed.system(), 0, precision)?;
    let half = ratio(1, 2);
    if kappa1.lo() > &half {
        Ok(HypothesisReport::pass(depth))
    } else if kappa1.hi() <= &half {
        Ok(HypothesisReport::fail(
            depth,
            Violation::new("κ₁ > ½", format!("κ₁ ≤ {}", kappa1.hi())),
        ))
    } else {
        Ok(HypothesisReport {
            holds: Truth::Unknown,
            depth,
            first_failure: Some(Violation::new("κ₁ > ½", format!("κ₁ ∈ {kappa1}"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{MuSpec, SeedSpace, SequenceSpec};

    fn two_seed(l: Vec<u64>, c: Vec<u64>, d1: Vec<u64>, d2: Vec<u64>) -> SystemDescriptor {
        SystemDescriptor {
            m: 2,
            seeds: vec![SeedSpace::cube(1); 2],
            d: vec![SequenceSpec::table(d1), SequenceSpec::table(d2)],
            mu: MuSpec::SymmetricTwoSeed {
                l: SequenceSpec::table(l),
                c: SequenceSpec::table(c),
            },
            r0: vec![1, 1],
            diagonal: true,
        }
    }

    #[test]
    fn d_above_diagonal_is_violation() {
        let desc = two_seed(vec![3; 4], vec![1; 4], vec![2, 2, 3, 2], vec![2; 4]);
        let report = verify_construction(&desc, 4);
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.clause, "d_j(n) ≤ μ_jj(n)");
        assert_eq!((v.n, v.j), (Some(3), Some(1)));
    }

    #[test]
    fn identity_mu_has_no_growth_witness() {
        let desc = SystemDescriptor {
            m: 2,
            seeds: vec![SeedSpace::cube(1); 2],
            d: vec![SequenceSpec::constant(1); 2],
            mu: MuSpec::Explicit {
                tables: vec![vec![vec![1, 0], vec![0, 1]]; 10],
            },
            r0: vec![1, 1],
            diagonal: true,
        };
        let report = verify_construction(&desc, 10);
        assert!(report.violations.is_empty());
        assert_eq!(report.growth, vec![GrowthStatus::Inconclusive; 2]);
    }

    #[test]
    fn zero_off_diagonal_breaks_simplicity() {
        let mut tables = vec![vec![vec![2, 1], vec![1, 2]]; 6];
        tables[4][0][1] = 0;
        let desc = SystemDescriptor {
            m: 2,
            seeds: vec![SeedSpace::cube(1); 2],
            d: vec![SequenceSpec::constant(1); 2],
            mu: MuSpec::Explicit { tables },
            r0: vec![1, 1],
            diagonal: true,
        };
        let report = verify_simplicity_hypotheses(&desc, 6);
        assert_eq!(report.holds, Truth::False);
        assert_eq!(report.first_failure.unwrap().n, Some(5));
    }

    #[test]
    fn single_seed_needs_strict_excess() {
        let desc = SystemDescriptor {
            m: 1,
            seeds: vec![SeedSpace::cube(1)],
            d: vec![SequenceSpec::constant(3)],
            mu: MuSpec::Explicit {
                tables: vec![vec![vec![3]]; 4],
            },
            r0: vec![1],
            diagonal: true,
        };
        let report = verify_simplicity_hypotheses(&desc, 4);
        assert_eq!(report.holds, Truth::False);
        assert_eq!(report.first_failure.unwrap().clause, "μ_11(n) ≥ d_1(n) + 1");
    }

    #[test]
    fn symmetric_two_seed_is_simple() {
        let desc = two_seed(vec![5; 8], vec![2; 8], vec![3; 8], vec![1; 8]);
        assert_eq!(verify_simplicity_hypotheses(&desc, 8).holds, Truth::True);
    }
}
