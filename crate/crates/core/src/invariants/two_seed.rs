use std::sync::Mutex;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{kappa_enclosure, kappa_witness, Precision};
use crate::error::{Error, Result};
use crate::numerics::{
    cubed_tail_enclosure, frac, from_biguint, int, opt_rational_str, product_enclosure,
    rational_str, reciprocal_tail_sum_bound, Enclosure, Rational,
};
use crate::synth::greedy::ChooseLParams;
use crate::system::{Generator, MuSpec, SeedSpace, SequenceSpec, System, SystemDescriptor};

/// The symmetric two-seed specialization: `μ(n) = [[l − c, c], [c, l − c]]`,
/// `r(0) = (1, 1)`, both seeds of dimension `h`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSeedParams {
    pub l: SequenceSpec,
    pub c: SequenceSpec,
    pub d1: SequenceSpec,
    pub d2: SequenceSpec,
    pub h: u32,
    /// Exact `κ₂`, present when `d2` is generated over the same `l`.
    #[serde(with = "opt_rational_str", default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Rational>,
}

impl TwoSeedParams {
    pub fn from_descriptor(desc: &SystemDescriptor) -> Result<Self> {
        desc.validate_shape()?;
        let (l, c) = match &desc.mu {
            MuSpec::SymmetricTwoSeed { l, c } => (l.clone(), c.clone()),
            _ => return Err(Error::precondition("μ must be symmetric_two_seed")),
        };
        if desc.r0 != [1, 1] {
            return Err(Error::precondition(format!(
                "r₁(0) = r₂(0) = 1 fails: r0 = {:?}",
                desc.r0
            )));
        }
        if desc.seeds[0].dim != desc.seeds[1].dim {
            return Err(Error::precondition(format!(
                "dim(X₁) = dim(X₂) fails: {} ≠ {}",
                desc.seeds[0].dim, desc.seeds[1].dim
            )));
        }
        let beta = kappa_witness(desc, 1).filter(|_| desc.d[1].generator().is_some());
        Ok(TwoSeedParams {
            l,
            c,
            d1: desc.d[0].clone(),
            d2: desc.d[1].clone(),
            h: desc.seeds[0].dim,
            beta,
        })
    }

    /// Descriptor with two `h`-dimensional cubes as seeds.
    pub fn to_descriptor(&self) -> SystemDescriptor {
        SystemDescriptor {
            m: 2,
            seeds: vec![SeedSpace::cube(self.h); 2],
            d: vec![self.d1.clone(), self.d2.clone()],
            mu: MuSpec::SymmetricTwoSeed {
                l: self.l.clone(),
                c: self.c.clone(),
            },
            r0: vec![1, 1],
            diagonal: true,
        }
    }

    /// The `choose_l` parameters behind `l`, if `l` is synthesized.
    pub fn l_base(&self) -> Option<&ChooseLParams> {
        match self.l.generator()? {
            Generator::ChooseL(p) => Some(p),
            _ => None,
        }
    }

    /// True when `c ≡ 1`, `d₁ = l − 1` and `l` carries a product witness: the
    /// setting with certified tail bounds for `λ` and `κ₁′`.
    pub fn has_tail_witness(&self) -> bool {
        match (self.l_base(), self.d1.generator()) {
            (Some(base), Some(Generator::LMinusOne { base: b })) => {
                b == base && self.c.as_constant() == Some(1)
            }
            _ => false,
        }
    }
}

/// Evaluator for [`TwoSeedParams`] with a cached `t` sequence.
#[derive(Debug)]
pub struct TwoSeed {
    params: TwoSeedParams,
    system: System,
    t: Mutex<Vec<BigUint>>,
}

impl TwoSeed {
    pub fn new(params: TwoSeedParams) -> Result<Self> {
        let system = System::new(params.to_descriptor())?;
        Ok(TwoSeed {
            params,
            system,
            t: Mutex::new(vec![BigUint::zero()]),
        })
    }

    /// Builds the evaluator from a descriptor, keeping its seed metadata.
    pub fn from_descriptor(desc: &SystemDescriptor) -> Result<Self> {
        let params = TwoSeedParams::from_descriptor(desc)?;
        let system = System::new(desc.clone())?;
        Ok(TwoSeed {
            params,
            system,
            t: Mutex::new(vec![BigUint::zero()]),
        })
    }

    pub fn params(&self) -> &TwoSeedParams {
        &self.params
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    /// `r(n) = r₁(n) = r₂(n)`.
    pub fn r(&self, n: usize) -> Result<BigUint> {
        Ok(self.system.level(n)?.r[0].clone())
    }

    /// `r′(n) = ∏ (l(k) − 2c(k))`; `None` once a factor is not positive.
    pub fn r_prime(&self, n: usize) -> Result<Option<BigUint>> {
        Ok(self.system.level(n)?.r_prime)
    }

    pub fn s1(&self, n: usize) -> Result<BigUint> {
        Ok(self.system.level(n)?.s[0].clone())
    }

    /// `t(n)`: `t(0) = 0`, `t(n+1) = d₁(n+1)·t(n) + c(n+1)·(r(n) − t(n))`.
    pub fn t(&self, n: usize) -> Result<BigUint> {
        let mut t = self.t.lock().expect("t cache poisoned");
        while t.len() <= n {
            let k = t.len() - 1;
            let prev = &t[k];
            let r = self.r(k)?;
            let (_, c) = self.system.l_c(k + 1)?;
            let d1 = self.system.d(0, k + 1)?;
            if prev > &r {
                return Err(Error::descriptor(format!("t({k}) exceeds r({k})")));
            }
            let next = &d1 * prev + &c * (r - prev);
            t.push(next);
        }
        Ok(t[n].clone())
    }

    /// `u(n) = (r(n) − t(n))/s₁(n)`.
    pub fn u(&self, n: usize) -> Result<Rational> {
        let r = self.r(n)?;
        let t = self.t(n)?;
        if t > r {
            return Err(Error::descriptor(format!("t({n}) exceeds r({n})")));
        }
        Ok(frac(&(r - t), &self.s1(n)?))
    }
}

/// `t(0), ..., t(depth)`.
pub fn t_sequence(two_seed: &TwoSeed, depth: usize) -> Result<Vec<BigUint>> {
    (0..=depth).map(|n| two_seed.t(n)).collect()
}

/// `u(0), ..., u(depth)`; no hypotheses are checked.
pub fn u_sequence(two_seed: &TwoSeed, depth: usize) -> Result<Vec<Rational>> {
    (0..=depth).map(|n| two_seed.u(n)).collect()
}

/// Enclosure of `λ = ∏ (1 − 2c(n)/l(n))`.
pub fn lambda_enclosure(two_seed: &TwoSeed, precision: &Precision) -> Result<Enclosure> {
    let p = two_seed.params();
    if p.c.as_constant() == Some(0) {
        return Ok(Enclosure::exact(int(1)));
    }
    let system = two_seed.system();
    let usable = system.usable_depth(precision.max_depth);
    let checkpoints = Precision::schedule(usable);
    let witness = match p.l_base() {
        Some(base) if p.c.as_constant() == Some(1) => Some(base.kappa.clone()),
        _ => None,
    };
    let mut partial = Rational::one();
    let mut gamma = Rational::one();
    let mut best = Enclosure::new(Rational::zero(), Rational::one(), false)?;
    let mut n = 0;
    for &stop in &checkpoints {
        while n < stop {
            n += 1;
            let (l, c) = system.l_c(n)?;
            let two_c = &c + &c;
            if two_c > l {
                return Err(Error::domain(format!(
                    "factor 1 − 2c(n)/l(n) is negative at n = {n}"
                )));
            }
            partial *= frac(&(&l - two_c), &l);
            if witness.is_some() {
                gamma *= frac(&(&l - 1u32), &l);
            }
        }
        best = match &witness {
            Some(kappa) => {
                let tail = cubed_tail_enclosure(kappa, &gamma)?;
                product_enclosure(std::slice::from_ref(&partial), &tail)?
            }
            None => {
                let certified = partial <= precision.eps && system.defined_depth().is_none();
                Enclosure::new(Rational::zero(), partial.clone(), certified)?
            }
        };
        if best.width() <= precision.eps {
            break;
        }
    }
    Ok(best)
}

fn check_kappa1_half(kappa1: &Enclosure) -> Result<()> {
    let half = crate::numerics::ratio(1, 2);
    if kappa1.lo() > &half {
        Ok(())
    } else if kappa1.hi() <= &half {
        Err(Error::precondition(format!("κ₁ > ½ fails: κ₁ ≤ {}", kappa1.hi())))
    } else {
        Err(Error::unknown(format!("κ₁ > ½ undecided: κ₁ ∈ {kappa1}")))
    }
}

/// Enclosure of `κ₁′ = lim s₁(n)/(r(n) − t(n)) = 1/lim u(n)`.
pub fn kappa_prime_enclosure(two_seed: &TwoSeed, precision: &Precision) -> Result<Enclosure> {
    let system = two_seed.system();
    let kappa1 = kappa_enclosure(system, 0, precision)?;
    check_kappa1_half(&kappa1)?;
    let p = two_seed.params();
    let usable = system.usable_depth(precision.max_depth);
    let witness = p.has_tail_witness();
    let mut best = Enclosure::new(kappa1.lo().clone(), kappa1.hi().max(&Rational::one()).clone(), false)?;
    for n in Precision::schedule(usable) {
        let u = two_seed.u(n)?;
        let hi = u.recip();
        best = if witness {
            let kappa = kappa1.lo();
            let gamma = system.ratio(0, n)?;
            let tail = reciprocal_tail_sum_bound(kappa, &gamma) * (kappa.recip() - int(1));
            Enclosure::certified((u + tail).recip(), hi)?
        } else {
            let lo = kappa1.lo().min(&hi).clone();
            let certified = &hi - &lo <= precision.eps && system.defined_depth().is_none();
            Enclosure::new(lo, hi, certified)?
        };
        if best.width() <= precision.eps {
            break;
        }
    }
    Ok(best)
}

/// Radii of comparison of the two canonical corners.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerRc {
    pub rc_p1: Enclosure,
    pub rc_p2: Enclosure,
    /// `rc_p1/rc_p2 = κ₂/κ₁`, exact.
    #[serde(with = "rational_str")]
    pub ratio: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    P1,
    P2,
}

/// Seed data of a corner subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerParams {
    pub which: Corner,
    pub kappa1_corner: Enclosure,
    pub kappa2_corner: Enclosure,
    pub seed_dim: u64,
}

struct CornerData {
    kappa1: Rational,
    beta: Rational,
    /// Enclosure of `κ₁′/(κ₁′ − κ₁)`.
    factor: Enclosure,
    kappa1_prime: Enclosure,
}

enum Decision {
    Holds,
    Fails(String),
    Undecided(String),
}

fn window(kappa1: &Rational, beta: &Rational, kp: &Enclosure) -> Decision {
    if kp.lo() <= kappa1 {
        return Decision::Undecided(format!("κ₁′ > κ₁ not certified: κ₁′ ∈ {kp}"));
    }
    let gap_lo = kp.lo() - kappa1;
    let gap_hi = kp.hi() - kappa1;
    if &gap_lo > beta {
        return Decision::Fails("κ₁′ − κ₁ ≤ κ₂".into());
    }
    if beta * &gap_lo > kappa1 * kappa1 {
        return Decision::Fails("κ₂ ≤ κ₁²/(κ₁′ − κ₁)".into());
    }
    if &gap_hi > beta {
        return Decision::Undecided("κ₁′ − κ₁ ≤ κ₂".into());
    }
    if beta * &gap_hi > kappa1 * kappa1 {
        return Decision::Undecided("κ₂ ≤ κ₁²/(κ₁′ − κ₁)".into());
    }
    Decision::Holds
}

fn corner_data(two_seed: &TwoSeed, precision: &Precision) -> Result<CornerData> {
    let beta = two_seed
        .params()
        .beta
        .clone()
        .ok_or_else(|| Error::precondition("corner radii need an exact κ₂ witness"))?;
    let kappa1 = kappa_enclosure(two_seed.system(), 0, precision)?;
    if !kappa1.is_exact() {
        return Err(Error::precondition("corner radii need an exact κ₁ witness"));
    }
    let kappa1 = kappa1.lo().clone();
    let mut kp = kappa_prime_enclosure(two_seed, precision)?;
    let mut decision = window(&kappa1, &beta, &kp);
    if matches!(decision, Decision::Undecided(_)) {
        kp = kappa_prime_enclosure(two_seed, &precision.exhaustive())?;
        decision = window(&kappa1, &beta, &kp);
    }
    match decision {
        Decision::Holds => {}
        Decision::Fails(what) => {
            return Err(Error::precondition(format!("{what} fails for κ₂ = {beta}")))
        }
        Decision::Undecided(what) => {
            return Err(Error::unknown(format!("{what} undecided at depth {}", precision.max_depth)))
        }
    }
    // x ↦ x/(x − κ₁) is decreasing on (κ₁, ∞).
    let f = |x: &Rational| x / (x - &kappa1);
    let factor = Enclosure::new(f(kp.hi()), f(kp.lo()), kp.is_certified())?;
    Ok(CornerData {
        kappa1,
        beta,
        factor,
        kappa1_prime: kp,
    })
}

/// Radii of comparison of the corners `p₁Ap₁` and `p₂Ap₂`:
/// `κ₂κ₁′h/(2(κ₁′ − κ₁))` and `κ₁κ₁′h/(2(κ₁′ − κ₁))`.
pub fn corner_rc(two_seed: &TwoSeed, precision: &Precision) -> Result<CornerRc> {
    let data = corner_data(two_seed, precision)?;
    let half_h = Rational::from_integer(two_seed.params().h.into()) / int(2);
    let common = data.factor.scale(&half_h);
    Ok(CornerRc {
        rc_p1: common.scale(&data.beta),
        rc_p2: common.scale(&data.kappa1),
        ratio: &data.beta / &data.kappa1,
    })
}

/// Seed data `(κ₁, κ₂, dim)` of a corner subsystem, whose seeds have
/// dimension `d·h` with `d = d₁(1) = d₂(1)`.
pub fn corner_params(two_seed: &TwoSeed, which: Corner, precision: &Precision) -> Result<CornerParams> {
    let data = corner_data(two_seed, precision)?;
    let d_big = two_seed.system().d(0, 1)?;
    let d = from_biguint(&d_big);
    let inv_d = d.recip();
    let (k1, k2) = match which {
        Corner::P1 => (
            data.kappa1_prime.scale(&inv_d),
            data.factor.scale(&(&data.beta * &inv_d)),
        ),
        Corner::P2 => (
            data.factor.scale(&(&data.kappa1 * &inv_d)),
            data.kappa1_prime.scale(&(&data.beta / (&data.kappa1 * &d))),
        ),
    };
    let d_u64 = u64::try_from(&d_big).map_err(|_| Error::domain("d₁(1) does not fit in 64 bits"))?;
    Ok(CornerParams {
        which,
        kappa1_corner: k1,
        kappa2_corner: k2,
        seed_dim: d_u64 * two_seed.params().h as u64,
    })
}
