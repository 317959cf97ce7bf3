//! Certified enclosures of the limit invariants: `κ_j`, `λ`, `κ₁′`, radius of
//! comparison, corner radii and the local radius of comparison.

mod lrc;
mod two_seed;

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{format_rational, ratio, rational_str, Enclosure, Rational};
use crate::system::{drr_enclosure, MuSpec, System, SystemDescriptor, TailRule, Truth};

pub use lrc::{lrc_eval, LrcValue};
pub use two_seed::{
    corner_params, corner_rc, kappa_prime_enclosure, lambda_enclosure, t_sequence, u_sequence, Corner,
    CornerParams, CornerRc, TwoSeed, TwoSeedParams,
};

/// Target width and depth budget for enclosure refinement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precision {
    #[serde(with = "rational_str")]
    pub eps: Rational,
    pub max_depth: usize,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            eps: Rational::new(BigInt::one(), BigInt::from(10u32).pow(9u32)),
            max_depth: 200,
        }
    }
}

impl Precision {
    pub fn new(eps: Rational, max_depth: usize) -> Result<Self> {
        if eps <= Rational::zero() {
            return Err(Error::domain(format!(
                "eps must be positive, got {}",
                format_rational(&eps)
            )));
        }
        Ok(Precision { eps, max_depth })
    }

    /// Same depth budget, much smaller target width: forces the full depth.
    pub fn exhaustive(&self) -> Self {
        Precision {
            eps: &self.eps / Rational::from_integer(BigInt::one() << 128),
            max_depth: self.max_depth,
        }
    }

    /// Bits used to round reported enclosures outward: `2^-bits ≤ eps/16`.
    pub fn report_bits(&self) -> u32 {
        crate::numerics::dyadic_bits_for(&self.eps)
    }

    /// Depths at which refinement loops test the width: 8, 16, 32, ...
    /// followed by `usable` itself.
    pub(crate) fn schedule(usable: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut n = 8;
        while n < usable {
            out.push(n);
            n *= 2;
        }
        out.push(usable);
        out
    }
}

/// Exact value of `κ_j` when the data carries one.
///
/// Two cases are recognized: a symmetric two-seed system whose `d_j` is
/// generated over the same `choose_l` run as `l` (then `κ_j` is the
/// generator's product divided by the common initial size), and a seed whose
/// `μ` row has no off-diagonal mass with `d_j` equal to `μ_jj` (then
/// `s_j/r_j` is constant).
pub fn kappa_witness(desc: &SystemDescriptor, j: usize) -> Option<Rational> {
    match &desc.mu {
        MuSpec::SymmetricTwoSeed { l, c } => {
            if desc.r0[0] != desc.r0[1] {
                return None;
            }
            let r0 = Rational::from_integer(desc.r0[0].into());
            if c.as_constant() == Some(0) && desc.d[j] == *l {
                return Some(r0.recip());
            }
            let base = match l.generator()? {
                crate::system::Generator::ChooseL(p) => p,
                _ => return None,
            };
            let g = desc.d[j].generator()?;
            match g {
                crate::system::Generator::ChooseL(_) => None,
                _ if g.base() == base => Some(g.product() / r0),
                _ => None,
            }
        }
        MuSpec::Sequences { entries } => {
            let row = &entries[j];
            let off_zero = row
                .iter()
                .enumerate()
                .all(|(k, s)| k == j || s.as_constant() == Some(0));
            let same = desc.d[j] == row[j] && !matches!(row[j].tail, TailRule::Table { .. });
            (off_zero && same).then(|| Rational::from_integer(desc.r0[j].into()).recip())
        }
        MuSpec::Explicit { .. } => None,
    }
}

/// Enclosure of `κ_j = lim s_j(n)/r_j(n)`.
///
/// With a witness the result is exact. Otherwise it is `[0, s_j(N)/r_j(N)]`,
/// certified only once its width is at most `eps` and every sequence is an
/// infinite rule.
pub fn kappa_enclosure(system: &System, j: usize, precision: &Precision) -> Result<Enclosure> {
    if j >= system.m() {
        return Err(Error::Contract(format!(
            "seed index {} out of range 1..={}",
            j + 1,
            system.m()
        )));
    }
    if let Some(k) = kappa_witness(system.descriptor(), j) {
        return Ok(Enclosure::exact(k));
    }
    let usable = system.usable_depth(precision.max_depth);
    let infinite = system.defined_depth().is_none();
    let mut hi = Rational::zero();
    for n in Precision::schedule(usable) {
        hi = system.ratio(j, n)?;
        if hi <= precision.eps {
            return Enclosure::new(Rational::zero(), hi, infinite);
        }
    }
    Enclosure::new(Rational::zero(), hi, false)
}

/// Enclosure of the radius of comparison `½·max_j κ_j·dim(X_j)`.
pub fn rc_enclosure(system: &System, precision: &Precision) -> Result<Enclosure> {
    Ok(drr_enclosure(system, precision)?.scale(&ratio(1, 2)))
}

/// Corner radii as reported in JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerReport {
    pub p1: Enclosure,
    pub p2: Enclosure,
    #[serde(with = "rational_str")]
    pub ratio: Rational,
}

/// Everything `invariants` computes for one descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub kappa: Vec<Enclosure>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<Enclosure>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa1_prime: Option<Enclosure>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rc: Option<Enclosure>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub corner_rc: Option<CornerReport>,
    pub certified: bool,
}

/// Computes the invariant report. Two-seed systems must pass the two-seed
/// hypotheses; the corner radii additionally need a `κ₂` witness.
pub fn invariant_report(desc: &SystemDescriptor, precision: &Precision) -> Result<InvariantReport> {
    let two_seed = if desc.is_symmetric_two_seed() {
        let ts = TwoSeed::from_descriptor(desc)?;
        let check = crate::system::verify_two_seed_hypotheses(&ts, precision.max_depth, precision)?;
        if check.holds != Truth::True {
            check.into_result()?;
        }
        Some(ts)
    } else {
        None
    };
    let system = System::new(desc.clone())?;
    let kappa = (0..system.m())
        .map(|j| kappa_enclosure(&system, j, precision))
        .collect::<Result<Vec<_>>>()?;
    let rc = if desc.seeds.iter().all(|s| s.solid) {
        Some(rc_enclosure(&system, precision)?)
    } else {
        None
    };
    let (mut lambda, mut kappa1_prime, mut corner) = (None, None, None);
    if let Some(ts) = two_seed {
        lambda = Some(lambda_enclosure(&ts, precision)?);
        kappa1_prime = Some(kappa_prime_enclosure(&ts, precision)?);
        if ts.params().beta.is_some() {
            let c = corner_rc(&ts, precision)?;
            corner = Some(CornerReport {
                p1: c.rc_p1,
                p2: c.rc_p2,
                ratio: c.ratio,
            });
        }
    }
    let certified = kappa.iter().all(Enclosure::is_certified)
        && rc.as_ref().map_or(true, Enclosure::is_certified)
        && lambda.as_ref().map_or(true, Enclosure::is_certified)
        && kappa1_prime.as_ref().map_or(true, Enclosure::is_certified)
        && corner
            .as_ref()
            .map_or(true, |c| c.p1.is_certified() && c.p2.is_certified());
    let bits = precision.report_bits();
    let round = |e: Enclosure| e.round_outward(bits);
    Ok(InvariantReport {
        kappa: kappa.into_iter().map(round).collect(),
        lambda: lambda.map(round),
        kappa1_prime: kappa1_prime.map(round),
        rc: rc.map(round),
        corner_rc: corner.map(|c| CornerReport {
            p1: round(c.p1),
            p2: round(c.p2),
            ratio: c.ratio,
        }),
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::int;
    use crate::synth::greedy::{ChooseLParams, GrowthPolicy};
    use crate::system::{Generator, SeedSpace, SequenceSpec};

    fn single_seed(dim: u32) -> SystemDescriptor {
        let l = SequenceSpec::synthesized(Generator::ChooseL(ChooseLParams::new(
            ratio(1, 2),
            3,
            GrowthPolicy::Halving,
        )));
        SystemDescriptor {
            m: 1,
            seeds: vec![SeedSpace::cube(dim)],
            d: vec![l.clone()],
            mu: MuSpec::Sequences {
                entries: vec![vec![l]],
            },
            r0: vec![1],
            diagonal: true,
        }
    }

    #[test]
    fn single_seed_with_d_equal_mu_has_kappa_one() {
        let sys = System::new(single_seed(4)).unwrap();
        let k = kappa_enclosure(&sys, 0, &Precision::default()).unwrap();
        assert!(k.is_exact() && k.is_certified());
        assert_eq!(k.lo(), &int(1));
        assert_eq!(rc_enclosure(&sys, &Precision::default()).unwrap(), Enclosure::exact(int(2)));
    }

    #[test]
    fn enclosure_within_initial_bound() {
        let desc = SystemDescriptor {
            m: 2,
            seeds: vec![SeedSpace::cube(1); 2],
            d: vec![SequenceSpec::constant(2), SequenceSpec::constant(1)],
            mu: MuSpec::SymmetricTwoSeed {
                l: SequenceSpec::constant(3),
                c: SequenceSpec::constant(1),
            },
            r0: vec![1, 1],
            diagonal: true,
        };
        let sys = System::new(desc).unwrap();
        for j in 0..2 {
            let k = kappa_enclosure(&sys, j, &Precision::default()).unwrap();
            assert!(k.is_subset_of(&Enclosure::certified(int(0), int(1)).unwrap()));
        }
    }

    #[test]
    fn vanishing_kappa_certified_when_small() {
        let desc = SystemDescriptor {
            m: 2,
            seeds: vec![SeedSpace::cube(2); 2],
            d: vec![SequenceSpec::constant(1); 2],
            mu: MuSpec::SymmetricTwoSeed {
                l: SequenceSpec::constant(5),
                c: SequenceSpec::constant(1),
            },
            r0: vec![1, 1],
            diagonal: true,
        };
        let sys = System::new(desc).unwrap();
        let p = Precision::default();
        let rc = rc_enclosure(&sys, &p).unwrap();
        assert_eq!(rc.lo(), &int(0));
        assert!(rc.width() <= p.eps && rc.is_certified());
    }

    #[test]
    fn schedule_ends_at_usable() {
        assert_eq!(Precision::schedule(0), vec![0]);
        assert_eq!(Precision::schedule(20), vec![8, 16, 20]);
    }
}
