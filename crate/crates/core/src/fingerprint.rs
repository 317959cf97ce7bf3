//! Invariant fingerprints of family members and the distinguishability test.

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{corner_rc, kappa_enclosure, lambda_enclosure, rc_enclosure, Precision, TwoSeed};
use crate::k0::K0Element;
use crate::numerics::{format_rational, int, rational_str, Enclosure, Rational};
use crate::synth::{ChooseLParams, FamilyMember};
use crate::system::{verify_simplicity_hypotheses, verify_two_seed_hypotheses, Truth};

/// The invariant tuple of one member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fingerprint {
    #[serde(with = "rational_str")]
    pub omega: Rational,
    pub h: u32,
    #[serde(with = "rational_str")]
    pub kappa1: Rational,
    #[serde(with = "rational_str")]
    pub beta: Rational,
    pub lambda: Enclosure,
    pub lrc_unit: Enclosure,
    pub lrc_p1: Enclosure,
    pub lrc_p2: Enclosure,
    /// `lrc_p1/lrc_p2`, exact.
    #[serde(with = "rational_str")]
    pub ratio_p1_p2: Rational,
    pub unit: K0Element,
    pub amplification: u64,
    /// Parameters of the shared `l` sequence.
    pub l_params: ChooseLParams,
    /// Taken as given for family members, not computed.
    pub stable_rank_one: bool,
    /// Set on the image under `σ`, whose corner labels are exchanged.
    pub corners_swapped: bool,
}

impl Fingerprint {
    /// The fingerprint seen through `σ(x, y) = (x, −y)`, which exchanges
    /// `[p₁]` and `[p₂]`.
    pub fn sigma_image(&self) -> Fingerprint {
        Fingerprint {
            lrc_p1: self.lrc_p2.clone(),
            lrc_p2: self.lrc_p1.clone(),
            ratio_p1_p2: self.ratio_p1_p2.recip(),
            corners_swapped: !self.corners_swapped,
            ..self.clone()
        }
    }

    fn same_construction(&self, other: &Fingerprint) -> bool {
        self.omega == other.omega
            && self.h == other.h
            && self.kappa1 == other.kappa1
            && self.amplification == other.amplification
            && self.l_params == other.l_params
    }
}

/// Builds the fingerprint of a family member after checking its hypotheses.
pub fn fingerprint(member: &FamilyMember, precision: &Precision) -> Result<Fingerprint> {
    let desc = &member.descriptor;
    let simple = verify_simplicity_hypotheses(desc, precision.max_depth);
    if simple.holds != Truth::True {
        simple.into_result()?;
    }
    let ts = TwoSeed::from_descriptor(desc)?;
    let check = verify_two_seed_hypotheses(&ts, precision.max_depth, precision)?;
    if check.holds != Truth::True {
        check.into_result()?;
    }
    let params = ts.params();
    let l_params = params
        .l_base()
        .cloned()
        .ok_or_else(|| Error::precondition("fingerprints need a synthesized l sequence"))?;
    let beta = params
        .beta
        .clone()
        .ok_or_else(|| Error::precondition("fingerprints need an exact κ₂ witness"))?;
    if beta != member.beta {
        return Err(Error::Contract(format!(
            "member β = {} disagrees with the descriptor's κ₂ = {}",
            format_rational(&member.beta),
            format_rational(&beta)
        )));
    }
    let kappa1 = kappa_enclosure(ts.system(), 0, precision)?;
    if !kappa1.is_exact() {
        return Err(Error::precondition("fingerprints need an exact κ₁ witness"));
    }
    let kappa1 = kappa1.lo().clone();
    if member.amplification == 0 {
        return Err(Error::Contract("amplification must be positive".into()));
    }
    let n = Rational::from_integer(member.amplification.into());
    let lambda = lambda_enclosure(&ts, precision)?;
    let rc = rc_enclosure(ts.system(), precision)?;
    let corners = corner_rc(&ts, precision)?;
    let bits = precision.report_bits();
    let omega = &kappa1 * Rational::from_integer(params.h.into()) / (int(2) * &n);
    Ok(Fingerprint {
        omega,
        h: params.h,
        kappa1,
        beta,
        lambda: lambda.round_outward(bits),
        lrc_unit: rc.scale(&n.recip()).round_outward(bits),
        lrc_p1: corners.rc_p1.round_outward(bits),
        lrc_p2: corners.rc_p2.round_outward(bits),
        ratio_p1_p2: corners.ratio,
        unit: K0Element::new(n, int(0)),
        amplification: member.amplification,
        l_params,
        stable_rank_one: true,
        corners_swapped: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Distinguishable,
    NotDistinguishable,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// `[p₁] ↔ [p₁]`, `[p₂] ↔ [p₂]`.
    Identity,
    /// `[p₁] ↔ [p₂]`.
    Sigma,
}

/// How one automorphism's matching of corner classes fared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentCheck {
    pub assignment: Assignment,
    /// Some compared pair is certified unequal.
    pub certified_unequal: bool,
    /// Exact data agrees; only set when both members share a construction.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact_match: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminationWitness {
    pub reason: String,
    pub assignments: Vec<AssignmentCheck>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discrimination {
    pub verdict: Verdict,
    pub witness: DiscriminationWitness,
}

/// Compares the local radius of comparison at the two corner classes under
/// both order-unit-preserving automorphisms.
pub fn discriminate(f1: &Fingerprint, f2: &Fingerprint) -> Discrimination {
    if f1.omega != f2.omega || f1.lrc_unit.is_disjoint_from(&f2.lrc_unit) {
        return Discrimination {
            verdict: Verdict::Distinguishable,
            witness: DiscriminationWitness {
                reason: format!(
                    "radius of comparison differs: {} vs {}",
                    format_rational(&f1.omega),
                    format_rational(&f2.omega)
                ),
                assignments: Vec::new(),
            },
        };
    }
    let exact = f1.same_construction(f2);
    let check = |assignment: Assignment| {
        let (a, b) = match assignment {
            Assignment::Identity => (&f2.lrc_p1, &f2.lrc_p2),
            Assignment::Sigma => (&f2.lrc_p2, &f2.lrc_p1),
        };
        let disjoint = f1.lrc_p1.is_disjoint_from(a) || f1.lrc_p2.is_disjoint_from(b);
        let exact_match = exact.then(|| match assignment {
            Assignment::Identity => f1.ratio_p1_p2 == f2.ratio_p1_p2,
            Assignment::Sigma => &f1.ratio_p1_p2 * &f2.ratio_p1_p2 == Rational::one(),
        });
        AssignmentCheck {
            assignment,
            certified_unequal: disjoint || exact_match == Some(false),
            exact_match,
        }
    };
    let assignments = vec![check(Assignment::Identity), check(Assignment::Sigma)];
    let (verdict, reason) = if assignments.iter().all(|a| a.certified_unequal) {
        (
            Verdict::Distinguishable,
            "corner values differ under both automorphisms".to_string(),
        )
    } else if let Some(a) = assignments
        .iter()
        .find(|a| a.exact_match == Some(true) && !a.certified_unequal)
    {
        (
            Verdict::NotDistinguishable,
            format!("exact corner data agrees under the {:?} assignment", a.assignment).to_lowercase(),
        )
    } else {
        (
            Verdict::Unknown,
            "corner enclosures overlap and exact data is not comparable".to_string(),
        )
    };
    Discrimination {
        verdict,
        witness: DiscriminationWitness { reason, assignments },
    }
}
