//! Greedy sequence generators with exact infinite-product witnesses.
//!
//! [`ChooseL`] emits a nondecreasing integer sequence `l(n)` with
//! `∏ (1 − 1/l(n)) = κ`, `l(1) = l₀`, and the divisibility schedule that makes
//! every `k` divide some `l(n₁)` and some `l(n₂) − 2`.
//! [`ChooseD`] emits `1 ≤ d(n) ≤ l(n) − 1` with `∏ d(n)/l(n) = target`.
//!
//! Both generators maintain their certificates exactly:
//! `0 < γ_N − κ < 1/l(N)` for [`ChooseL`] and
//! `κ ≤ γ_N·ρ_N < κ + 1/l(N)` for [`ChooseD`] (from the second term on when
//! the first term is pinned).

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, format_rational, rational_str, Rational};

/// How `ChooseL` picks each new term once the staged prefix is done.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GrowthPolicy {
    /// Least admissible term after halving the remaining gap: the sequence
    /// roughly doubles per step. Falls back to `Minimal` whenever the halved
    /// choice would break the certificate.
    #[default]
    Halving,
    /// Least admissible term: `1/m < 1 − κ/γ_n`. The bit length of `l(n)`
    /// doubles per step, so only short prefixes are practical.
    Minimal,
}

/// Parameters of a [`ChooseL`] run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChooseLParams {
    #[serde(with = "rational_str")]
    pub kappa: Rational,
    pub l0: u64,
    #[serde(default)]
    pub policy: GrowthPolicy,
}

impl ChooseLParams {
    pub fn new(kappa: Rational, l0: u64, policy: GrowthPolicy) -> Self {
        ChooseLParams { kappa, l0, policy }
    }

    pub fn validate(&self) -> Result<()> {
        let one = Rational::one();
        if !self.kappa.is_positive() || self.kappa >= one {
            return Err(Error::domain(format!(
                "choose_l needs κ in (0, 1), got {}",
                format_rational(&self.kappa)
            )));
        }
        if self.l0 < 3 {
            return Err(Error::domain(format!(
                "choose_l needs l₀ ≥ 3, got {}",
                self.l0
            )));
        }
        if one - numerics::ratio(1, self.l0 as i64) <= self.kappa {
            return Err(Error::domain(format!(
                "choose_l needs 1 − 1/l₀ > κ, but 1 − 1/{} ≤ {}",
                self.l0,
                format_rational(&self.kappa)
            )));
        }
        Ok(())
    }
}

fn one_minus_recip(m: &BigInt) -> Rational {
    Rational::one() - Rational::new(BigInt::one(), m.clone())
}

/// The divisibility bookkeeping `(α, β)` for the term at index `n0 + j`,
/// `j ≥ 1`: odd `j` forces `β | l`, even `j` forces `β | (l − 2)`.
pub fn divisibility_schedule(j: usize) -> (u64, u64) {
    debug_assert!(j >= 1);
    let j = j as u64;
    if j % 2 == 1 {
        (0, (j + 1) / 2)
    } else {
        (2, j / 2)
    }
}

/// Least `m ≥ lower` with `modulus | (m − offset)`.
fn least_congruent(lower: &BigInt, offset: u64, modulus: u64) -> BigInt {
    let modulus = BigInt::from(modulus);
    let r = (lower - BigInt::from(offset)).mod_floor(&modulus);
    if r.is_zero() {
        lower.clone()
    } else {
        lower + (modulus - r)
    }
}

/// Lazy generator of the `l` sequence.
///
/// State is kept as the integer products `P = ∏ l(k)` and `Q = ∏ (l(k) − 1)`,
/// so `γ_N = Q/P` and every comparison is an integer cross-multiplication.
#[derive(Debug, Clone)]
pub struct ChooseL {
    params: ChooseLParams,
    kappa_num: BigInt,
    kappa_den: BigInt,
    l1: BigInt,
    n0: usize,
    emitted: usize,
    prod_l: BigInt,
    prod_lm1: BigInt,
    last: BigInt,
    fallbacks: usize,
}

impl ChooseL {
    pub fn new(params: ChooseLParams) -> Result<Self> {
        params.validate()?;
        let kappa = &params.kappa;
        let l0 = BigInt::from(params.l0);
        let head = one_minus_recip(&l0);

        // Least l1 > max(l0, 1/κ + 2) with (1 − 1/l0)(1 − 1/l1) > κ.
        let bound = kappa.recip() + numerics::int(2);
        let mut l1: BigInt = (numerics::floor(&bound) + BigInt::one()).max(&l0 + BigInt::one());
        while &head * one_minus_recip(&l1) <= *kappa {
            l1 += 1;
        }
        // Largest n0 with (1 − 1/l0)(1 − 1/l1)^(n0 − 2) > κ.
        let step = one_minus_recip(&l1);
        let mut reps = 1usize;
        let mut p = &head * &step;
        loop {
            let next = &p * &step;
            if next <= *kappa {
                break;
            }
            p = next;
            reps += 1;
        }
        let n0 = reps + 2;
        Ok(ChooseL {
            kappa_num: kappa.numer().clone(),
            kappa_den: kappa.denom().clone(),
            params,
            l1,
            n0,
            emitted: 0,
            prod_l: BigInt::one(),
            prod_lm1: BigInt::one(),
            last: BigInt::zero(),
            fallbacks: 0,
        })
    }

    pub fn params(&self) -> &ChooseLParams {
        &self.params
    }

    /// Index of the first term chosen by the reciprocal rule.
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn l1(&self) -> &BigInt {
        &self.l1
    }

    /// `γ_N = ∏_{k ≤ N} (1 − 1/l(k))` over the terms emitted so far.
    pub fn gamma(&self) -> Rational {
        Rational::new(self.prod_lm1.clone(), self.prod_l.clone())
    }

    /// `∏_{k ≤ N} l(k)`.
    pub fn prod_l(&self) -> &BigInt {
        &self.prod_l
    }

    /// `∏_{k ≤ N} (l(k) − 1)`.
    pub fn prod_l_minus_one(&self) -> &BigInt {
        &self.prod_lm1
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Number of steps where the halving choice was rejected.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    /// Least `m` with `1/m < (1 − κ/γ_N)/k`, i.e. `m > k·qQ/(qQ − pP)`.
    fn least_below_gap(&self, k: u32) -> BigInt {
        let num = &self.kappa_den * &self.prod_lm1;
        let den = &num - &self.kappa_num * &self.prod_l;
        (num * k).div_floor(&den) + 1
    }

    /// Whether appending `m` keeps `0 < γ − κ < 1/m`.
    fn certifies(&self, m: &BigInt) -> bool {
        let excess: BigInt =
            &self.kappa_den * &self.prod_lm1 * (m - 1u32) - &self.kappa_num * &self.prod_l * m;
        excess.is_positive() && excess < &self.kappa_den * &self.prod_l
    }

    fn next_term(&mut self) -> BigInt {
        let n = self.emitted; // terms emitted so far; we produce term n + 1
        if n == 0 {
            return BigInt::from(self.params.l0);
        }
        if n + 1 < self.n0 {
            return self.l1.clone();
        }
        if n + 1 == self.n0 {
            return self.least_below_gap(1);
        }
        let (alpha, beta) = divisibility_schedule(n + 1 - self.n0);
        let minimal = least_congruent(&self.least_below_gap(1), alpha, beta);
        match self.params.policy {
            GrowthPolicy::Minimal => minimal,
            GrowthPolicy::Halving => {
                let lower = self.least_below_gap(2).max(&self.last + 1);
                let m = least_congruent(&lower, alpha, beta);
                if self.certifies(&m) {
                    m
                } else {
                    self.fallbacks += 1;
                    minimal
                }
            }
        }
    }
}

impl Iterator for ChooseL {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        let m = self.next_term();
        if self.emitted + 1 >= self.n0 {
            assert!(
                self.certifies(&m),
                "choose_l certificate broken at n = {}",
                self.emitted + 1
            );
        }
        self.prod_l *= &m;
        self.prod_lm1 *= &m - 1;
        self.emitted += 1;
        self.last = m.clone();
        Some(m.to_biguint().expect("l(n) is positive"))
    }
}

/// `l(n) − 1` over a [`ChooseL`] run.
#[derive(Debug, Clone)]
pub struct LMinusOne(ChooseL);

impl LMinusOne {
    pub fn new(base: ChooseLParams) -> Result<Self> {
        Ok(LMinusOne(ChooseL::new(base)?))
    }
}

impl Iterator for LMinusOne {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        self.0.next().map(|l| l - 1u32)
    }
}

/// Parameters of a [`ChooseD`] run over a [`ChooseL`] base.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChooseDParams {
    pub base: ChooseLParams,
    #[serde(with = "rational_str")]
    pub target: Rational,
    pub pin_first: Option<u64>,
}

/// Lazy generator of a `d` sequence with `∏ d(n)/l(n) = target`.
#[derive(Debug, Clone)]
pub struct ChooseD {
    l: ChooseL,
    kappa0: Rational,
    target: Rational,
    pin_first: Option<u64>,
    emitted: usize,
    prod_d: BigInt,
    last_l: BigUint,
}

impl ChooseD {
    pub fn new(params: ChooseDParams) -> Result<Self> {
        let l = ChooseL::new(params.base.clone())?;
        let kappa0 = params.base.kappa.clone();
        let target = params.target;
        if target.is_negative() {
            return Err(Error::domain(format!(
                "choose_d target {} is negative",
                format_rational(&target)
            )));
        }
        if target > kappa0 {
            return Err(Error::domain(format!(
                "choose_d target {} exceeds ∏(1 − 1/l(n)) = {}",
                format_rational(&target),
                format_rational(&kappa0)
            )));
        }
        if let Some(v) = params.pin_first {
            let l1 = params.base.l0;
            if v == 0 || v >= l1 {
                return Err(Error::domain(format!(
                    "pinned d(1) = {v} must lie in [1, l(1) − 1] = [1, {}]",
                    l1 - 1
                )));
            }
            // Feasible iff (v/l(1))·ρ₁ ≥ target with ρ₁ = κ₀/(1 − 1/l(1)).
            let rho1 = &kappa0 / (Rational::one() - numerics::ratio(1, l1 as i64));
            let reach = numerics::ratio(v as i64, l1 as i64) * &rho1;
            if reach < target {
                return Err(Error::domain(format!(
                    "pinned d(1) = {v} is infeasible: target·l(1)/d(1) = {} exceeds the tail product {}",
                    format_rational(&(&target * numerics::ratio(l1 as i64, v as i64))),
                    format_rational(&rho1)
                )));
            }
        }
        Ok(ChooseD {
            l,
            kappa0,
            target,
            pin_first: params.pin_first,
            emitted: 0,
            prod_d: BigInt::one(),
            last_l: BigUint::one(),
        })
    }

    /// `γ_N = ∏_{k ≤ N} d(k)/l(k)`.
    pub fn gamma(&self) -> Rational {
        Rational::new(self.prod_d.clone(), self.l.prod_l().clone())
    }

    /// `ρ_N = ∏_{k > N} (1 − 1/l(k))`, exact through the base witness.
    pub fn rho(&self) -> Rational {
        &self.kappa0 / self.l.gamma()
    }

    pub fn last_l(&self) -> &BigUint {
        &self.last_l
    }
}

impl Iterator for ChooseD {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        let l = self.l.next()?;
        let l_int = BigInt::from(l.clone());
        let d = if self.target.is_zero() {
            BigInt::one()
        } else if self.emitted == 0 && self.pin_first.is_some() {
            BigInt::from(self.pin_first.unwrap())
        } else {
            // Least m with γ_n·m·ρ_{n+1}/l(n+1) ≥ target. With D = ∏ d and
            // Q = ∏ (l − 1) through n + 1 this is m ≥ target·Q/(κ₀·D).
            let num = self.target.numer() * self.kappa0.denom() * self.l.prod_l_minus_one();
            let den = self.target.denom() * self.kappa0.numer() * &self.prod_d;
            num.div_ceil(&den).max(BigInt::one())
        };
        assert!(
            d >= BigInt::one() && d < l_int,
            "choose_d produced d = {d} outside [1, l − 1] for l = {l_int}"
        );
        self.prod_d *= &d;
        self.emitted += 1;
        self.last_l = l;
        Some(d.to_biguint().expect("d(n) is positive"))
    }
}

/// Fresh `l` sequence generator (the operation named `choose_l`).
pub fn choose_l(kappa: Rational, l0: u64, policy: GrowthPolicy) -> Result<ChooseL> {
    ChooseL::new(ChooseLParams::new(kappa, l0, policy))
}

/// Fresh `d` sequence generator (the operation named `choose_d`).
pub fn choose_d(base: ChooseLParams, target: Rational, pin_first: Option<u64>) -> Result<ChooseD> {
    ChooseD::new(ChooseDParams {
        base,
        target,
        pin_first,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, ratio};

    fn first(iter: impl Iterator<Item = BigUint>, n: usize) -> Vec<BigUint> {
        iter.take(n).collect()
    }

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn first_term_is_l0() {
        let mut l = choose_l(ratio(1, 2), 3, GrowthPolicy::Halving).unwrap();
        assert_eq!(l.next().unwrap(), BigUint::from(3u32));
    }

    #[test]
    fn boundary_kappa_rejected() {
        let err = choose_l(ratio(2, 3), 3, GrowthPolicy::Halving).unwrap_err();
        assert!(matches!(err, Error::Domain(ref m) if m.contains("1 − 1/l₀ > κ")));
        assert!(choose_l(ratio(1, 2), 2, GrowthPolicy::Halving).is_err());
        assert!(choose_l(int(1), 5, GrowthPolicy::Halving).is_err());
        assert!(choose_l(int(0), 5, GrowthPolicy::Halving).is_err());
    }

    #[test]
    fn minimal_prefix_for_two_thirds() {
        // Hand-run of the staged construction: l1 = 10, n0 = 3, then the
        // reciprocal rule with the (α, β) schedule.
        let l = choose_l(ratio(2, 3), 4, GrowthPolicy::Minimal).unwrap();
        assert_eq!(l.l1(), &BigInt::from(10));
        assert_eq!(l.n0(), 3);
        assert_eq!(first(l, 5), big(&[4, 10, 82, 6562, 43046722]));
    }

    #[test]
    fn halving_prefix_for_two_thirds() {
        let l = choose_l(ratio(2, 3), 4, GrowthPolicy::Halving).unwrap();
        assert_eq!(
            first(l, 8),
            big(&[4, 10, 82, 13123, 26241, 52478, 104948, 209889])
        );
    }

    #[test]
    fn choose_d_zero_target_is_all_ones() {
        let base = ChooseLParams::new(ratio(2, 3), 4, GrowthPolicy::Halving);
        let d = choose_d(base, int(0), None).unwrap();
        assert!(first(d, 20).iter().all(|x| x == &BigUint::one()));
    }

    #[test]
    fn choose_d_target_above_kappa0_rejected() {
        let base = ChooseLParams::new(ratio(2, 3), 4, GrowthPolicy::Halving);
        assert!(matches!(
            choose_d(base, ratio(3, 4), None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn choose_d_pin_feasibility() {
        let base = ChooseLParams::new(ratio(2, 3), 4, GrowthPolicy::Halving);
        // d(1) = 3 reaches (3/4)·ρ₁ = κ₀ ≥ any admissible target.
        assert!(choose_d(base.clone(), ratio(1, 2), Some(3)).is_ok());
        // d(1) = 1 reaches (1/4)·(8/9) = 2/9 < 1/2.
        assert!(choose_d(base.clone(), ratio(1, 2), Some(1)).is_err());
        assert!(choose_d(base, ratio(1, 2), Some(4)).is_err());
    }

    #[test]
    fn least_congruent_examples() {
        assert_eq!(least_congruent(&BigInt::from(10), 0, 3), BigInt::from(12));
        assert_eq!(least_congruent(&BigInt::from(10), 2, 4), BigInt::from(10));
        assert_eq!(least_congruent(&BigInt::from(11), 2, 4), BigInt::from(14));
        assert_eq!(least_congruent(&BigInt::from(5), 0, 1), BigInt::from(5));
    }

    #[test]
    fn schedule_covers_each_k_twice() {
        let mut zero = vec![false; 11];
        let mut two = vec![false; 11];
        for j in 1..=20 {
            let (a, b) = divisibility_schedule(j);
            if a == 0 {
                zero[b as usize] = true;
            } else {
                two[b as usize] = true;
            }
        }
        assert!(zero[1..].iter().all(|&x| x));
        assert!(two[1..].iter().all(|&x| x));
    }
}
