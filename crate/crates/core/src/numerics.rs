//! Exact rationals and certified rational enclosures.
//!
//! Every quantity in the toolkit is either an exact [`Rational`] or an
//! [`Enclosure`] `[lo, hi]` around a limit that is not known in closed form.
//! Enclosures carry a `certified` flag: when it is set the limit provably lies
//! in the interval, when it is clear the interval is only a best-effort guess.
//!
//! Rationals are written as `"p/q"` strings in JSON. Decimal notation is never
//! accepted.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number, always in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn from_biguint(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

/// Parses `"p/q"` or `"p"` with optional leading sign. Decimals are rejected.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not an exact rational of the form p/q"));
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let is_int = |t: &str| {
        let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !is_int(num) || !is_int(den) || den.starts_with(['-', '+']) {
        return Err(bad());
    }
    let p: BigInt = num.parse().map_err(|_| bad())?;
    let q: BigInt = den.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(Error::Parse(format!("`{s}` has a zero denominator")));
    }
    Ok(Rational::new(p, q))
}

/// Canonical `"p/q"` form; the denominator is always printed.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Serde adapter writing a [`Rational`] as a `"p/q"` string.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<Rational>` (`null` or `"p/q"`).
pub mod opt_rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(
        q: &Option<Rational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&format_rational(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Rational>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Serde adapter writing a [`BigUint`] as a decimal string (values overflow
/// JSON numbers quickly).
pub mod biguint_str {
    use super::*;

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn floor(q: &Rational) -> BigInt {
    q.floor().to_integer()
}

pub fn ceil(q: &Rational) -> BigInt {
    q.ceil().to_integer()
}

/// Least integer `m` with `1/m < x`, for `x > 0`.
pub fn least_recip_below(x: &Rational) -> BigInt {
    debug_assert!(x.is_positive());
    floor(&x.recip()) + 1
}

/// The rational with the smallest denominator (then smallest numerator) in
/// the open interval `(a, b)`, found through continued fractions.
pub fn simplest_between(a: &Rational, b: &Rational) -> Rational {
    assert!(a < b, "simplest_between needs a < b");
    if a.is_negative() && b.is_positive() {
        return Rational::zero();
    }
    if !a.is_negative() {
        simplest_positive(a, b)
    } else {
        -simplest_positive(&-b, &-a)
    }
}

fn simplest_positive(a: &Rational, b: &Rational) -> Rational {
    // Open interval (a, b) with 0 <= a < b.
    let fl = floor(a);
    let next = Rational::from_integer(fl.clone() + 1);
    if &next < b {
        return next;
    }
    let base = Rational::from_integer(fl);
    let fa = a - &base;
    let fb = b - &base;
    if fa.is_zero() {
        // (0, fb): smallest reciprocal 1/k with 1/k < fb.
        let k = least_recip_below(&fb);
        return base + Rational::new(BigInt::one(), k);
    }
    // 1/x lies in (1/fb, 1/fa).
    let inner = simplest_positive(&fb.recip(), &fa.recip());
    base + inner.recip()
}

/// Result of comparing an enclosure against a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Less,
    Greater,
    Unknown,
}

/// Closed rational interval around an irrational (or unknown) limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    lo: Rational,
    hi: Rational,
    certified: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnclosureRepr {
    #[serde(with = "rational_str")]
    lo: Rational,
    #[serde(with = "rational_str")]
    hi: Rational,
    certified: bool,
}

impl Serialize for Enclosure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EnclosureRepr {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            certified: self.certified,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Enclosure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = EnclosureRepr::deserialize(d)?;
        Enclosure::new(r.lo, r.hi, r.certified).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]{}",
            format_rational(&self.lo),
            format_rational(&self.hi),
            if self.certified { "" } else { " (uncertified)" }
        )
    }
}

impl Enclosure {
    pub fn new(lo: Rational, hi: Rational, certified: bool) -> Result<Self> {
        if lo > hi {
            return Err(Error::domain(format!(
                "enclosure endpoints out of order: {} > {}",
                format_rational(&lo),
                format_rational(&hi)
            )));
        }
        Ok(Enclosure { lo, hi, certified })
    }

    /// Certified zero-width enclosure.
    pub fn exact(q: Rational) -> Self {
        Enclosure {
            lo: q.clone(),
            hi: q,
            certified: true,
        }
    }

    pub fn certified(lo: Rational, hi: Rational) -> Result<Self> {
        Self::new(lo, hi, true)
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub fn with_certified(mut self, certified: bool) -> Self {
        self.certified = certified;
        self
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, q: &Rational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Enclosure) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn is_disjoint_from(&self, other: &Enclosure) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }

    /// Every point of `self` is strictly below every point of `other`.
    pub fn is_strictly_below(&self, other: &Enclosure) -> bool {
        self.hi < other.lo
    }

    pub fn compare(&self, q: &Rational) -> Comparison {
        if &self.hi < q {
            Comparison::Less
        } else if &self.lo > q {
            Comparison::Greater
        } else {
            Comparison::Unknown
        }
    }

    /// Widens both endpoints outward to multiples of `2^-bits`. Exact
    /// enclosures are returned unchanged.
    pub fn round_outward(&self, bits: u32) -> Enclosure {
        if self.is_exact() {
            return self.clone();
        }
        Enclosure {
            lo: round_dyadic_down(&self.lo, bits),
            hi: round_dyadic_up(&self.hi, bits),
            certified: self.certified,
        }
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
            certified: self.certified && other.certified,
        }
    }

    pub fn sub(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
            certified: self.certified && other.certified,
        }
    }

    pub fn add_scalar(&self, q: &Rational) -> Enclosure {
        Enclosure {
            lo: &self.lo + q,
            hi: &self.hi + q,
            certified: self.certified,
        }
    }

    pub fn scale(&self, q: &Rational) -> Enclosure {
        let (a, b) = (&self.lo * q, &self.hi * q);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Enclosure {
            lo,
            hi,
            certified: self.certified,
        }
    }

    pub fn mul(&self, other: &Enclosure) -> Enclosure {
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().cloned().unwrap();
        let hi = products.iter().max().cloned().unwrap();
        Enclosure {
            lo,
            hi,
            certified: self.certified && other.certified,
        }
    }

    /// Reciprocal of an enclosure that excludes zero.
    pub fn recip(&self) -> Result<Enclosure> {
        if self.contains(&Rational::zero()) {
            return Err(Error::domain(format!("cannot invert {self}: contains 0")));
        }
        Ok(Enclosure {
            lo: self.hi.recip(),
            hi: self.lo.recip(),
            certified: self.certified,
        })
    }

    pub fn div(&self, other: &Enclosure) -> Result<Enclosure> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn max(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: (&self.lo).max(&other.lo).clone(),
            hi: (&self.hi).max(&other.hi).clone(),
            certified: self.certified && other.certified,
        }
    }

    pub fn min(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: (&self.lo).min(&other.lo).clone(),
            hi: (&self.hi).min(&other.hi).clone(),
            certified: self.certified && other.certified,
        }
    }
}

/// Largest multiple of `2^-bits` that is `≤ q`.
pub fn round_dyadic_down(q: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    Rational::new(floor(&(q * Rational::from_integer(scale.clone()))), scale)
}

/// Least multiple of `2^-bits` that is `≥ q`.
pub fn round_dyadic_up(q: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    Rational::new(ceil(&(q * Rational::from_integer(scale.clone()))), scale)
}

/// Least `b` with `2^-b ≤ eps/16`.
pub fn dyadic_bits_for(eps: &Rational) -> u32 {
    let target = eps / int(16);
    let mut b = 0u32;
    let mut step = Rational::one();
    while step > target {
        step /= int(2);
        b += 1;
    }
    b
}

/// Enclosure of `P · T` where `P` is the exact product of `terms` and `T` is
/// the tail enclosure.
pub fn product_enclosure(terms: &[Rational], tail: &Enclosure) -> Result<Enclosure> {
    if tail.lo.is_negative() || tail.hi > Rational::one() {
        return Err(Error::domain(format!("tail enclosure {tail} not inside [0, 1]")));
    }
    let mut p = Rational::one();
    for t in terms {
        if !t.is_positive() || t > &Rational::one() {
            return Err(Error::domain(format!(
                "product term {} outside (0, 1]",
                format_rational(t)
            )));
        }
        p *= t;
    }
    Ok(Enclosure {
        lo: &p * &tail.lo,
        hi: &p * &tail.hi,
        certified: tail.certified,
    })
}

/// Certified enclosure `[(κ/γ_N)³, 1]` of `∏_{k>N} (1 − 2/l(k))`, valid when
/// `∏_{k>N} (1 − 1/l(k)) = κ/γ_N` exactly and every `l(k) ≥ 3`.
pub fn cubed_tail_enclosure(kappa: &Rational, gamma_n: &Rational) -> Result<Enclosure> {
    let q = kappa / gamma_n;
    if !q.is_positive() || q > Rational::one() {
        return Err(Error::domain("tail product ratio κ/γ_N must lie in (0, 1]"));
    }
    let cube = &q * &q * &q;
    Enclosure::certified(cube, Rational::one())
}

/// Upper bound `2(γ_N/κ − 1)` on `Σ_{k>N} 1/(l(k) − 1)`, valid when
/// `∏_{k>N} (1 − 1/l(k)) = κ/γ_N` and every `l(k) ≥ 2`.
pub fn reciprocal_tail_sum_bound(kappa: &Rational, gamma_n: &Rational) -> Rational {
    int(2) * (gamma_n / kappa - Rational::one())
}

/// `n / d` as a rational from unsigned integers.
pub fn frac(n: &BigUint, d: &BigUint) -> Rational {
    Rational::new(BigInt::from(n.clone()), BigInt::from(d.clone()))
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

pub fn divides(k: &BigUint, n: &BigUint) -> bool {
    !k.is_zero() && n.is_multiple_of(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn enc(lo: Rational, hi: Rational) -> Enclosure {
        Enclosure::certified(lo, hi).unwrap()
    }

    #[test]
    fn compare_examples() {
        let e = enc(ratio(1, 3), ratio(1, 2));
        assert_eq!(e.compare(&ratio(2, 3)), Comparison::Less);
        assert_eq!(e.compare(&ratio(1, 4)), Comparison::Greater);
        assert_eq!(e.compare(&ratio(5, 12)), Comparison::Unknown);
        assert_eq!(e.compare(&ratio(1, 2)), Comparison::Unknown);
    }

    #[test]
    fn product_enclosure_examples() {
        let one = Enclosure::exact(int(1));
        let p = product_enclosure(&[], &one).unwrap();
        assert_eq!(p, Enclosure::exact(int(1)));

        let p = product_enclosure(&[ratio(1, 2), ratio(1, 2)], &one).unwrap();
        assert_eq!(p, Enclosure::exact(ratio(1, 4)));

        let p = product_enclosure(&[ratio(2, 3)], &enc(ratio(1, 2), int(1))).unwrap();
        assert_eq!(p, enc(ratio(1, 3), ratio(2, 3)));
    }

    #[test]
    fn product_enclosure_rejects_bad_terms() {
        let one = Enclosure::exact(int(1));
        assert!(matches!(
            product_enclosure(&[ratio(3, 2)], &one),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            product_enclosure(&[int(0)], &one),
            Err(Error::Domain(_))
        ));
        let wide = enc(int(0), int(2));
        assert!(product_enclosure(&[], &wide).is_err());
    }

    #[test]
    fn uncertified_tail_propagates() {
        let tail = Enclosure::new(int(0), int(1), false).unwrap();
        assert!(!product_enclosure(&[ratio(1, 2)], &tail).unwrap().is_certified());
    }

    #[test]
    fn enclosure_rejects_reversed_endpoints() {
        assert!(Enclosure::new(int(1), int(0), true).is_err());
    }

    #[test]
    fn cube_of_one_minus_recip_is_below_one_minus_two_over_l() {
        // (1 - 1/l)^3 <= 1 - 2/l for every l >= 3, and fails at l = 2.
        for l in 3..2000i64 {
            let a = Rational::one() - ratio(1, l);
            assert!(&a * &a * &a <= Rational::one() - ratio(2, l), "l = {l}");
        }
        let a = ratio(1, 2);
        assert!(&a * &a * &a > int(0));
    }

    #[test]
    fn recip_sum_bound_pieces_hold() {
        // 1/(l-1) <= 2/l for l >= 2.
        for l in 2..500i64 {
            assert!(ratio(1, l - 1) <= ratio(2, l));
        }
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("2/3").unwrap(), ratio(2, 3));
        assert_eq!(parse_rational("-4/6").unwrap(), ratio(-2, 3));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1/-2").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("a/b").is_err());
        assert_eq!(format_rational(&int(3)), "3/1");
        assert_eq!(format_rational(&ratio(-6, 4)), "-3/2");
    }

    #[test]
    fn enclosure_json_shape() {
        let e = enc(ratio(1, 3), ratio(1, 2));
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"lo": "1/3", "hi": "1/2", "certified": true})
        );
        let back: Enclosure = serde_json::from_value(v).unwrap();
        assert_eq!(back, e);
        let bad = serde_json::json!({"lo": "1/2", "hi": "1/3", "certified": true});
        assert!(serde_json::from_value::<Enclosure>(bad).is_err());
    }

    #[test]
    fn simplest_between_examples() {
        assert_eq!(simplest_between(&ratio(1, 3), &ratio(1, 2)), ratio(2, 5));
        assert_eq!(simplest_between(&ratio(0, 1), &ratio(1, 2)), ratio(1, 3));
        assert_eq!(simplest_between(&ratio(2, 7), &ratio(2, 3)), ratio(1, 2));
        assert_eq!(simplest_between(&ratio(-1, 2), &ratio(1, 2)), int(0));
        assert_eq!(simplest_between(&ratio(3, 2), &ratio(5, 2)), int(2));
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-50i64..50, 1i64..50).prop_map(|(p, q)| ratio(p, q))
    }

    proptest! {
        #[test]
        fn multiplication_matches_unreduced_oracle(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000) {
            // Naive oracle: cross-multiplied integers, no reduction.
            let (num, den) = (a * c, b * d);
            let got = ratio(a, b) * ratio(c, d);
            prop_assert_eq!(got.numer() * BigInt::from(den), got.denom() * BigInt::from(num));
            prop_assert!(got.denom().is_positive());
            prop_assert!(got.numer().gcd(got.denom()).is_one());
        }

        #[test]
        fn nested_tails_give_nested_products(
            terms in proptest::collection::vec((1i64..20, 1i64..20), 0..6),
            a in 0i64..100, b in 0i64..100, c in 0i64..100, d in 0i64..100,
        ) {
            let terms: Vec<Rational> = terms.into_iter().map(|(p, q)| ratio(p.min(q), p.max(q))).collect();
            let mut outer = [a, b, c, d];
            outer.sort();
            let t1 = enc(ratio(outer[0], 100), ratio(outer[3], 100));
            let t2 = enc(ratio(outer[1], 100), ratio(outer[2], 100));
            let p1 = product_enclosure(&terms, &t1).unwrap();
            let p2 = product_enclosure(&terms, &t2).unwrap();
            prop_assert!(p2.is_subset_of(&p1));
        }

        #[test]
        fn compare_is_consistent(lo in small_rational(), w in 0i64..20, q in small_rational()) {
            let e = enc(lo.clone(), lo + ratio(w, 7));
            let c = e.compare(&q);
            // Point-versus-interval swap: q < e exactly when e is Greater.
            let q_below = q < *e.lo();
            let q_above = q > *e.hi();
            prop_assert_eq!(c == Comparison::Greater, q_below);
            prop_assert_eq!(c == Comparison::Less, q_above);
            prop_assert!(!(q_below && q_above));
        }

        #[test]
        fn simplest_between_is_inside(a in small_rational(), w in 1i64..40) {
            let b = &a + ratio(w, 41);
            let s = simplest_between(&a, &b);
            prop_assert!(a < s && s < b);
        }

        #[test]
        fn outward_rounding_contains_and_stays_close(lo in small_rational(), w in 1i64..20, bits in 0u32..40) {
            let e = enc(lo.clone(), lo + ratio(w, 13));
            let r = e.round_outward(bits);
            let step = Rational::new(BigInt::one(), BigInt::one() << bits);
            prop_assert!(e.is_subset_of(&r));
            prop_assert!(r.lo() > &(e.lo() - &step) && r.hi() < &(e.hi() + &step));
            for end in [r.lo(), r.hi()] {
                prop_assert!((end * Rational::from_integer(BigInt::one() << bits)).is_integer());
            }
        }
    }

    #[test]
    fn rounding_bits_follow_eps() {
        assert_eq!(dyadic_bits_for(&ratio(1, 16)), 8);
        assert_eq!(dyadic_bits_for(&ratio(1, 1_000_000_000)), 34);
        let exact = Enclosure::exact(ratio(1, 3));
        assert_eq!(exact.round_outward(4), exact);
    }
}
