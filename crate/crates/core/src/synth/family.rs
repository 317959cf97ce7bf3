use serde::{Deserialize, Serialize};

use super::greedy::{ChooseDParams, ChooseLParams, GrowthPolicy};
use crate::error::{Error, Result};
use crate::invariants::{kappa_enclosure, kappa_prime_enclosure, Precision, TwoSeed, TwoSeedParams};
use crate::numerics::{
    floor, format_rational, int, least_recip_below, rational_str, round_dyadic_down, round_dyadic_up,
    simplest_between, Rational,
};
use crate::system::{Generator, SequenceSpec, SystemDescriptor};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

/// Open interval `(lo, hi)` of admissible `κ₂` values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetaInterval {
    #[serde(with = "rational_str")]
    pub lo: Rational,
    #[serde(with = "rational_str")]
    pub hi: Rational,
}

impl BetaInterval {
    pub fn contains(&self, beta: &Rational) -> bool {
        &self.lo < beta && beta < &self.hi
    }
}

/// Inner approximation of `κ₁′ − κ₁ < β < min(κ₁, κ₁²/(κ₁′ − κ₁))` using
/// the upper end of a certified `κ₁′` enclosure.
pub fn beta_interval(two_seed: &TwoSeed, precision: &Precision) -> Result<BetaInterval> {
    let kappa1 = kappa_enclosure(two_seed.system(), 0, precision)?;
    if !kappa1.is_exact() {
        return Err(Error::precondition("β-interval needs an exact κ₁ witness"));
    }
    let kappa1 = kappa1.lo().clone();
    let kp = kappa_prime_enclosure(two_seed, precision)?;
    if !kp.is_certified() {
        return Err(Error::precondition(format!("κ₁′ enclosure {kp} is not certified")));
    }
    let lo = kp.hi() - &kappa1;
    if !lo.is_positive() {
        return Err(Error::unknown("κ₁′ − κ₁ > 0 not certified; more precision needed"));
    }
    let hi = kappa1.clone().min(&kappa1 * &kappa1 / &lo);
    if lo >= hi {
        return Err(Error::unknown(format!(
            "β-interval ({}, {}) is empty at this precision; more precision needed",
            format_rational(&lo),
            format_rational(&hi)
        )));
    }
    // Shrink to dyadic endpoints so the interval stays readable.
    let bits = precision.report_bits();
    let (lo, hi) = (round_dyadic_up(&lo, bits), round_dyadic_down(&hi, bits));
    if lo >= hi {
        return Err(Error::unknown("β-interval is too narrow to report; more precision needed"));
    }
    Ok(BetaInterval { lo, hi })
}

/// `count` distinct interior rationals: the simplest rational near each of
/// `count` evenly spaced points.
pub fn default_betas(interval: &BetaInterval, count: usize) -> Vec<Rational> {
    let width = &interval.hi - &interval.lo;
    let slots = Rational::from_integer(BigInt::from(count as u64 + 1));
    let radius = &width / (&slots * int(2));
    (1..=count)
        .map(|i| {
            let centre = &interval.lo + &width * Rational::from_integer(BigInt::from(i as u64)) / &slots;
            simplest_between(&(&centre - &radius), &(&centre + &radius))
        })
        .collect()
}

/// Input of [`synthesize_family`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyRequest {
    pub omega: Rational,
    pub betas: BetaSelection,
    pub precision: Precision,
    pub policy: GrowthPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BetaSelection {
    Count(usize),
    Values(Vec<Rational>),
}

/// Where a family member came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    #[serde(with = "rational_str")]
    pub omega: Rational,
    pub h: u32,
    #[serde(with = "rational_str")]
    pub kappa1: Rational,
    #[serde(with = "rational_str")]
    pub beta: Rational,
    #[serde(rename = "N")]
    pub n: u64,
    pub l0: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyMember {
    pub descriptor: SystemDescriptor,
    #[serde(with = "rational_str")]
    pub beta: Rational,
    pub amplification: u64,
    pub provenance: Provenance,
}

/// The shared parameters of every member for a given `ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyBase {
    pub omega: Rational,
    /// `N`: the least positive integer with `N·ω > ½`.
    pub amplification: u64,
    pub h: u32,
    pub kappa1: Rational,
    pub l_params: ChooseLParams,
}

impl FamilyBase {
    pub fn new(omega: Rational, policy: GrowthPolicy) -> Result<Self> {
        if !omega.is_positive() {
            return Err(Error::domain(format!(
                "ω must be positive, got {}",
                format_rational(&omega)
            )));
        }
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let n = if omega > half {
            BigInt::one()
        } else {
            floor(&(omega.clone() * int(2)).recip()) + BigInt::one()
        };
        let amplification = n
            .to_u64()
            .ok_or_else(|| Error::domain("ω is too small: amplification exceeds 64 bits"))?;
        let built = &omega * Rational::from_integer(n);
        let h_big: BigInt = floor(&(&built * int(2))) + BigInt::one();
        let h = h_big
            .to_u32()
            .ok_or_else(|| Error::domain("ω is too large: seed dimension exceeds 32 bits"))?;
        let kappa1 = &built * int(2) / Rational::from_integer(h_big);
        let l0 = least_recip_below(&(Rational::one() - &kappa1))
            .max(BigInt::from(3))
            .to_u64()
            .ok_or_else(|| Error::domain("l₀ exceeds 64 bits"))?;
        Ok(FamilyBase {
            omega,
            amplification,
            h,
            kappa1: kappa1.clone(),
            l_params: ChooseLParams::new(kappa1, l0, policy),
        })
    }

    fn l_spec(&self) -> SequenceSpec {
        SequenceSpec::synthesized(Generator::ChooseL(self.l_params.clone()))
    }

    fn d1_spec(&self) -> SequenceSpec {
        SequenceSpec::synthesized(Generator::LMinusOne {
            base: self.l_params.clone(),
        })
    }

    fn d2_spec(&self, beta: &Rational) -> SequenceSpec {
        SequenceSpec::synthesized(Generator::ChooseD(ChooseDParams {
            base: self.l_params.clone(),
            target: beta.clone(),
            pin_first: Some(self.l_params.l0 - 1),
        }))
    }

    /// Parameters with `d₂ = d₁` (enough for `κ₁`, `λ` and `κ₁′`).
    pub fn base_params(&self) -> TwoSeedParams {
        TwoSeedParams {
            l: self.l_spec(),
            c: SequenceSpec::constant(1),
            d1: self.d1_spec(),
            d2: self.d1_spec(),
            h: self.h,
            beta: None,
        }
    }

    pub fn member_params(&self, beta: &Rational) -> TwoSeedParams {
        TwoSeedParams {
            d2: self.d2_spec(beta),
            beta: Some(beta.clone()),
            ..self.base_params()
        }
    }

    pub fn member(&self, beta: &Rational) -> Result<FamilyMember> {
        let params = self.member_params(beta);
        // Validates pin feasibility and the target bound eagerly.
        crate::synth::greedy::ChooseD::new(ChooseDParams {
            base: self.l_params.clone(),
            target: beta.clone(),
            pin_first: Some(self.l_params.l0 - 1),
        })?;
        Ok(FamilyMember {
            descriptor: params.to_descriptor(),
            beta: beta.clone(),
            amplification: self.amplification,
            provenance: Provenance {
                omega: self.omega.clone(),
                h: self.h,
                kappa1: self.kappa1.clone(),
                beta: beta.clone(),
                n: self.amplification,
                l0: self.l_params.l0,
            },
        })
    }
}

/// Builds family members for `ω`: one per requested or default `β`.
pub fn synthesize_family(req: &FamilyRequest) -> Result<Vec<FamilyMember>> {
    let base = FamilyBase::new(req.omega.clone(), req.policy)?;
    let probe = TwoSeed::new(base.base_params())?;
    let interval = beta_interval(&probe, &req.precision)?;
    let betas = match &req.betas {
        BetaSelection::Count(k) => default_betas(&interval, *k),
        BetaSelection::Values(v) => {
            for beta in v {
                if !interval.contains(beta) {
                    return Err(Error::precondition(format!(
                        "β = {} is outside the certified interval ({}, {})",
                        format_rational(beta),
                        format_rational(&interval.lo),
                        format_rational(&interval.hi)
                    )));
                }
            }
            v.clone()
        }
    };
    betas.iter().map(|b| base.member(b)).collect()
}
