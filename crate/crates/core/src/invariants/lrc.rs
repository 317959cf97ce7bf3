use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{corner_rc, lambda_enclosure, rc_enclosure, Precision, TwoSeed};
use crate::error::{Error, Result};
use crate::k0::{cone_contains, ConeVerdict, K0Element, OrderedGroupModel};
use crate::numerics::{int, Enclosure, Rational};

/// Local radius of comparison of a positive class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum LrcValue {
    /// The class is a positive multiple of `[1]`, `[p₁]` or `[p₂]`; the
    /// enclosure converges to the true value.
    Exact(Enclosure),
    /// Certified lower and upper bounds from comparison with the canonical
    /// classes.
    Bounds(Enclosure),
}

impl LrcValue {
    pub fn enclosure(&self) -> &Enclosure {
        match self {
            LrcValue::Exact(e) | LrcValue::Bounds(e) => e,
        }
    }
}

/// `lrc(g) = rc(p(K⊗A)p)` for `[p] = g`.
///
/// Canonical classes `q·[1]`, `q·[p₁]`, `q·[p₂]` get `value/q`. Any other
/// positive class `g` is squeezed between multiples of each canonical class
/// `v`: `s·v ≤ g ≤ S·v` gives `L_v/S ≤ lrc(g) ≤ L_v/s` since `lrc` is
/// decreasing and `lrc(q·v) = L_v/q`.
pub fn lrc_eval(two_seed: &TwoSeed, g: &K0Element, precision: &Precision) -> Result<LrcValue> {
    let lambda = lambda_enclosure(two_seed, precision)?;
    let model = OrderedGroupModel::new(lambda.clone(), K0Element::new(int(1), int(0)))?;
    match cone_contains(&model, g, None, 0).decision {
        ConeVerdict::Positive => {}
        ConeVerdict::NotPositive => {
            return Err(Error::domain(format!("class {g} is not positive")));
        }
        ConeVerdict::Unknown => {
            return Err(Error::unknown(format!("positivity of {g} is undecided for λ ∈ {lambda}")));
        }
    }
    if g.is_zero() {
        return Ok(LrcValue::Exact(Enclosure::exact(Rational::zero())));
    }
    let rc = rc_enclosure(two_seed.system(), precision)?;
    let corners = if two_seed.params().beta.is_some() {
        Some(corner_rc(two_seed, precision)?)
    } else {
        None
    };
    let half = Rational::new(1.into(), 2.into());
    let mut canon: Vec<(K0Element, Enclosure)> = vec![(K0Element::new(int(1), int(0)), rc)];
    if let Some(c) = corners {
        canon.push((K0Element::new(half.clone(), half.clone()), c.rc_p1));
        canon.push((K0Element::new(half.clone(), -half), c.rc_p2));
    }

    for (v, value) in &canon {
        // g = q·v with q > 0.
        let q = &g.x / &v.x;
        if &v.y * &q == g.y {
            return Ok(LrcValue::Exact(value.scale(&q.recip())));
        }
    }

    let lam = if lambda.is_certified() { lambda.hi().clone() } else { int(1) };
    let mut lower: Option<Rational> = None;
    let mut upper: Option<Rational> = None;
    let mut certified = lambda.is_certified();
    for (v, value) in &canon {
        let den1 = &v.x - &lam * &v.y;
        let den2 = &v.x + &lam * &v.y;
        if !den1.is_positive() || !den2.is_positive() {
            continue;
        }
        let s1 = (&g.x - &lam * &g.y) / den1;
        let s2 = (&g.x + &lam * &g.y) / den2;
        let (small, big) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        certified &= value.is_certified();
        if small.is_positive() {
            let u = value.hi() / &small;
            upper = Some(upper.map_or(u.clone(), |cur| cur.min(u)));
        }
        let l = value.lo() / &big;
        lower = Some(lower.map_or(l.clone(), |cur| cur.max(l)));
    }
    let lower = lower.unwrap_or_else(Rational::zero);
    let upper = upper.ok_or_else(|| Error::unknown(format!("no canonical class lies below {g}")))?;
    Ok(LrcValue::Bounds(Enclosure::new(lower, upper, certified)?))
}
